#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmsys/lexicon.hpp"

namespace pmsys::emotions {

enum class Emotion { Anger, Disgust, Fear, Joy, Sadness };

inline constexpr std::array<Emotion, 5> kAllEmotions = {Emotion::Anger, Emotion::Disgust, Emotion::Fear,
                                                        Emotion::Joy, Emotion::Sadness};

std::string_view to_string(Emotion e);
std::optional<Emotion> emotion_from_string(std::string_view name);

/// Five basic-emotion intensities summing to 1.
struct EmotionVector {
  double anger = 0.2;
  double disgust = 0.2;
  double fear = 0.2;
  double joy = 0.2;
  double sadness = 0.2;

  double& operator[](Emotion e);
  double operator[](Emotion e) const;
  double sum() const { return anger + disgust + fear + joy + sadness; }
  bool operator==(const EmotionVector&) const = default;
};

/// Divides nonnegative weights by their total; an all-zero input yields the
/// uniform vector. Throws ValidationError on negative or non-finite weights.
EmotionVector normalize(const std::array<double, 5>& weights);

/// Throws ValidationError if the lexicon declares a category outside the five emotions.
void check_emotion_lexicon(const lexicon::Lexicon& lex);

/// Per-emotion match counts over the tokens, divided by their total.
EmotionVector score_emotions(std::string_view text, const lexicon::Lexicon& lex);

struct PostGroup {
  std::string key;
  std::vector<std::string> texts;
};

/// Scores each group once over the concatenation of its texts. Empty group -> ValidationError.
std::vector<EmotionVector> batch_emotions(const std::vector<PostGroup>& groups, const lexicon::Lexicon& lex);

}  // namespace pmsys::emotions
