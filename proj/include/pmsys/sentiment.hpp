#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pmsys::sentiment {

enum class Label { Pos, Neg };

std::string_view to_string(Label label);
Label label_from_string(std::string_view text);

/// pos + neg = 1; neutral is reported independently.
struct Scores {
  double pos = 0.5;
  double neg = 0.5;
  double neutral = 1.0;
};

struct LabeledText {
  std::string text;
  Label label = Label::Pos;
};

/// Multinomial Naive Bayes with add-one smoothing.
struct NBModel {
  std::map<std::string, double> log_likelihood_pos;
  std::map<std::string, double> log_likelihood_neg;
  double prior_pos = 0.5;
  double prior_neg = 0.5;

  std::size_t vocabulary_size() const { return log_likelihood_pos.size(); }
};

/// Throws ValidationError unless both labels occur.
NBModel train_nb(const std::vector<LabeledText>& corpus);

/// Posterior over {pos, neg}; tokens outside the vocabulary are ignored, so an
/// all-unknown text returns the priors. neutral = 1 - |pos - neg|.
Scores classify(std::string_view text, const NBModel& model);

/// argmax(pos, neg) with ties going to neg.
Label relabel(const Scores& scores);

/// CSV with header "text,label"; label is pos|neg (also positive|negative).
std::vector<LabeledText> load_corpus(const std::filesystem::path& path);

struct HoldoutResult {
  double accuracy = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

/// Shuffles (seeded), trains on the first train_fraction and scores the rest.
HoldoutResult holdout_accuracy(const std::vector<LabeledText>& corpus, double train_fraction, std::uint64_t seed);

}  // namespace pmsys::sentiment
