#include "pmsys/emotions.hpp"

#include <cmath>

#include "pmsys/error.hpp"

namespace pmsys::emotions {

std::string_view to_string(Emotion e) {
  switch (e) {
    case Emotion::Anger: return "anger";
    case Emotion::Disgust: return "disgust";
    case Emotion::Fear: return "fear";
    case Emotion::Joy: return "joy";
    case Emotion::Sadness: return "sadness";
  }
  return "unknown";
}

std::optional<Emotion> emotion_from_string(std::string_view name) {
  for (auto e : kAllEmotions) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

double& EmotionVector::operator[](Emotion e) {
  switch (e) {
    case Emotion::Anger: return anger;
    case Emotion::Disgust: return disgust;
    case Emotion::Fear: return fear;
    case Emotion::Joy: return joy;
    case Emotion::Sadness: return sadness;
  }
  return anger;
}

double EmotionVector::operator[](Emotion e) const { return const_cast<EmotionVector&>(*this)[e]; }

EmotionVector normalize(const std::array<double, 5>& weights) {
  double total = 0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0) throw ValidationError("emotion weights must be finite and nonnegative");
    total += w;
  }
  EmotionVector out;
  if (total == 0) return out;
  for (std::size_t i = 0; i < kAllEmotions.size(); ++i) out[kAllEmotions[i]] = weights[i] / total;
  return out;
}

void check_emotion_lexicon(const lexicon::Lexicon& lex) {
  for (const auto& cat : lex.categories()) {
    if (!emotion_from_string(cat)) {
      throw ValidationError("emotion lexicon category '" + cat + "' is not one of anger, disgust, fear, joy, sadness");
    }
  }
}

EmotionVector score_emotions(std::string_view text, const lexicon::Lexicon& lex) {
  check_emotion_lexicon(lex);
  std::vector<std::size_t> to_slot(lex.categories().size());
  for (std::size_t i = 0; i < lex.categories().size(); ++i) {
    to_slot[i] = static_cast<std::size_t>(*emotion_from_string(lex.categories()[i]));
  }

  std::array<double, 5> counts{};
  for (const auto& token : lexicon::tokenize(text).tokens) {
    for (auto idx : lex.match(token)) counts[to_slot[idx]] += 1.0;
  }
  return normalize(counts);
}

std::vector<EmotionVector> batch_emotions(const std::vector<PostGroup>& groups, const lexicon::Lexicon& lex) {
  std::vector<EmotionVector> out;
  out.reserve(groups.size());
  for (const auto& group : groups) {
    if (group.texts.empty()) throw ValidationError("empty post group '" + group.key + "'");
    std::string joined;
    for (const auto& text : group.texts) {
      joined += text;
      joined += '\n';
    }
    out.push_back(score_emotions(joined, lex));
  }
  return out;
}

}  // namespace pmsys::emotions
