#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pmsys::traits {

enum class Trait { Openness, Conscientiousness, Extraversion, Agreeableness, Neuroticism };

inline constexpr std::array<Trait, 5> kAllTraits = {Trait::Openness, Trait::Conscientiousness, Trait::Extraversion,
                                                    Trait::Agreeableness, Trait::Neuroticism};

std::string_view to_string(Trait trait);
std::optional<Trait> trait_from_string(std::string_view name);

/// Big Five scores, each in [0,1] once normalized.
struct TraitVector {
  double openness = 0;
  double conscientiousness = 0;
  double extraversion = 0;
  double agreeableness = 0;
  double neuroticism = 0;

  double& operator[](Trait trait);
  double operator[](Trait trait) const;
  bool operator==(const TraitVector&) const = default;
};

struct RawScale {
  double min = 1.0;
  double max = 7.0;
};

struct Term {
  std::string feature;
  double coefficient = 0;
};

/// Linear model over psycholinguistic features for one trait.
struct TraitModel {
  double intercept = 0;
  std::vector<Term> terms;
  RawScale raw_scale;
};

/// Models keyed by lowercase trait name. Validated on construction.
class TraitModelSet {
 public:
  TraitModelSet() = default;
  explicit TraitModelSet(std::map<std::string, TraitModel> models);

  const TraitModel& at(std::string_view trait) const;
  bool contains(std::string_view trait) const { return models_.count(std::string(trait)) != 0; }
  const std::map<std::string, TraitModel>& models() const noexcept { return models_; }

 private:
  std::map<std::string, TraitModel> models_;
};

/// The published Extraversion model: MRC familiarity sample count, LIWC
/// UNIQUE, ABBREVIATIONS, PRONOUN and HEARING, intercept 17.1407.
TraitModel extraversion_reference_model();

using FeatureMap = std::map<std::string, double>;

/// intercept + sum(coefficient * feature). Throws ValidationError listing every missing feature.
double score_trait_linear(const FeatureMap& features, const TraitModel& model);
double score_trait_linear(const FeatureMap& features, const TraitModelSet& models, std::string_view trait);

/// clamp((raw - min)/(max - min), 0, 1)
double normalize_trait(double raw, RawScale scale);

/// Lines: "trait <name>", "intercept <v>", "term <feature> <coef>", optional "scale <min> <max>".
TraitModelSet parse_trait_models(std::istream& in);
TraitModelSet load_trait_models(const std::filesystem::path& path);

struct QuestionItem {
  std::string prompt;
  Trait trait = Trait::Openness;
  bool reversed = false;
};

struct QuestionnaireDef {
  std::vector<QuestionItem> items;
  int lo = 1;
  int hi = 5;
};

void validate(const QuestionnaireDef& def);

/// Reversed item score on the [lo,hi] Likert scale.
constexpr int reverse_response(int response, int lo, int hi) { return (lo + hi) - response; }

struct QuestionnaireScore {
  TraitVector normalized;
  TraitVector raw;  // per-trait mean item score on the Likert scale
};

/// Throws ValidationError naming the first out-of-range item index (0-based).
QuestionnaireScore score_questionnaire(const std::vector<int>& responses, const QuestionnaireDef& def);

/// One "prompt|trait|R?" line per item; blank lines and '#' comments skipped.
QuestionnaireDef parse_questionnaire(std::istream& in);
QuestionnaireDef load_questionnaire(const std::filesystem::path& path);

}  // namespace pmsys::traits
