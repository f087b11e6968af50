#include "pmsys/traits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pmsys/error.hpp"

namespace pmsys::traits {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_number(const std::string& token, std::size_t line) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "invalid number '" + token + "'");
  }
  if (used != token.size() || !std::isfinite(value)) throw ParseError(line, "invalid number '" + token + "'");
  return value;
}

void validate_model(const std::string& name, const TraitModel& model) {
  if (!(model.raw_scale.min < model.raw_scale.max)) {
    throw ValidationError("trait model '" + name + "': raw scale min must be below max");
  }
  std::set<std::string> seen;
  for (const auto& term : model.terms) {
    if (!seen.insert(term.feature).second) {
      throw ValidationError("trait model '" + name + "': duplicate feature '" + term.feature + "'");
    }
  }
}

}  // namespace

std::string_view to_string(Trait trait) {
  switch (trait) {
    case Trait::Openness: return "openness";
    case Trait::Conscientiousness: return "conscientiousness";
    case Trait::Extraversion: return "extraversion";
    case Trait::Agreeableness: return "agreeableness";
    case Trait::Neuroticism: return "neuroticism";
  }
  return "unknown";
}

std::optional<Trait> trait_from_string(std::string_view name) {
  const auto key = lower(name);
  for (auto t : kAllTraits) {
    if (to_string(t) == key) return t;
  }
  return std::nullopt;
}

double& TraitVector::operator[](Trait trait) {
  switch (trait) {
    case Trait::Openness: return openness;
    case Trait::Conscientiousness: return conscientiousness;
    case Trait::Extraversion: return extraversion;
    case Trait::Agreeableness: return agreeableness;
    case Trait::Neuroticism: return neuroticism;
  }
  return openness;
}

double TraitVector::operator[](Trait trait) const { return const_cast<TraitVector&>(*this)[trait]; }

TraitModelSet::TraitModelSet(std::map<std::string, TraitModel> models) : models_(std::move(models)) {
  for (const auto& [name, model] : models_) validate_model(name, model);
}

const TraitModel& TraitModelSet::at(std::string_view trait) const {
  const auto it = models_.find(lower(trait));
  if (it == models_.end()) throw ValidationError("no model for trait '" + std::string(trait) + "'");
  return it->second;
}

TraitModel extraversion_reference_model() {
  TraitModel model;
  model.intercept = 17.1407;
  model.terms = {
      {"MRC.K_F_NSAMP", -0.0379}, {"LIWC.UNIQUE", -0.0803}, {"LIWC.ABBREVIATIONS", -0.6074},
      {"LIWC.PRONOUN", 0.1445},   {"LIWC.HEARING", -0.3941},
  };
  return model;
}

double score_trait_linear(const FeatureMap& features, const TraitModel& model) {
  std::vector<std::string> missing;
  double raw = model.intercept;
  for (const auto& term : model.terms) {
    const auto it = features.find(term.feature);
    if (it == features.end()) {
      missing.push_back(term.feature);
      continue;
    }
    raw += term.coefficient * it->second;
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("missing features: " + list);
  }
  return raw;
}

double score_trait_linear(const FeatureMap& features, const TraitModelSet& models, std::string_view trait) {
  return score_trait_linear(features, models.at(trait));
}

double normalize_trait(double raw, RawScale scale) {
  return std::clamp((raw - scale.min) / (scale.max - scale.min), 0.0, 1.0);
}

TraitModelSet parse_trait_models(std::istream& in) {
  std::map<std::string, TraitModel> models;
  TraitModel* current = nullptr;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::istringstream fields{std::string(line)};
    std::vector<std::string> words;
    for (std::string w; fields >> w;) words.push_back(w);
    if (words.empty()) continue;

    const auto& keyword = words[0];
    if (keyword == "trait") {
      if (words.size() != 2) throw ParseError(line_no, "expected 'trait <name>'");
      const auto name = lower(words[1]);
      if (models.count(name)) throw ParseError(line_no, "duplicate trait '" + name + "'");
      current = &models[name];
      continue;
    }
    if (!current) throw ParseError(line_no, "'" + keyword + "' before any 'trait' line");
    if (keyword == "intercept") {
      if (words.size() != 2) throw ParseError(line_no, "expected 'intercept <value>'");
      current->intercept = parse_number(words[1], line_no);
    } else if (keyword == "term") {
      if (words.size() != 3) throw ParseError(line_no, "expected 'term <feature> <coefficient>'");
      current->terms.push_back({words[1], parse_number(words[2], line_no)});
    } else if (keyword == "scale") {
      if (words.size() != 3) throw ParseError(line_no, "expected 'scale <min> <max>'");
      current->raw_scale = {parse_number(words[1], line_no), parse_number(words[2], line_no)};
    } else {
      throw ParseError(line_no, "unknown keyword '" + keyword + "'");
    }
  }
  return TraitModelSet(std::move(models));
}

TraitModelSet load_trait_models(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trait model file '" + path.string() + "'");
  return parse_trait_models(in);
}

void validate(const QuestionnaireDef& def) {
  if (def.lo >= def.hi) throw ValidationError("questionnaire scale lo must be below hi");
  for (auto t : kAllTraits) {
    const bool covered =
        std::any_of(def.items.begin(), def.items.end(), [t](const QuestionItem& item) { return item.trait == t; });
    if (!covered) throw ValidationError("questionnaire has no items for trait '" + std::string(to_string(t)) + "'");
  }
}

QuestionnaireScore score_questionnaire(const std::vector<int>& responses, const QuestionnaireDef& def) {
  validate(def);
  if (responses.size() != def.items.size()) {
    throw ValidationError("expected " + std::to_string(def.items.size()) + " responses, got " +
                          std::to_string(responses.size()));
  }
  TraitVector totals;
  std::array<int, 5> counts{};
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const int r = responses[i];
    if (r < def.lo || r > def.hi) {
      throw ValidationError("response " + std::to_string(r) + " for item " + std::to_string(i) + " is outside [" +
                            std::to_string(def.lo) + "," + std::to_string(def.hi) + "]");
    }
    const auto& item = def.items[i];
    totals[item.trait] += item.reversed ? reverse_response(r, def.lo, def.hi) : r;
    ++counts[static_cast<std::size_t>(item.trait)];
  }
  QuestionnaireScore score;
  const double span = def.hi - def.lo;
  for (auto t : kAllTraits) {
    const double mean = totals[t] / counts[static_cast<std::size_t>(t)];
    score.raw[t] = mean;
    score.normalized[t] = (mean - def.lo) / span;
  }
  return score;
}

QuestionnaireDef parse_questionnaire(std::istream& in) {
  QuestionnaireDef def;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto first = line.find('|');
    const auto second = first == std::string::npos ? std::string::npos : line.find('|', first + 1);
    if (second == std::string::npos || line.find('|', second + 1) != std::string::npos) {
      throw ParseError(line_no, "expected 'prompt|trait|R?'");
    }
    QuestionItem item;
    item.prompt = trim(std::string_view(line).substr(0, first));
    const auto trait = trait_from_string(trim(std::string_view(line).substr(first + 1, second - first - 1)));
    if (!trait) throw ParseError(line_no, "unknown trait");
    item.trait = *trait;
    const auto flag = trim(std::string_view(line).substr(second + 1));
    if (flag == "R" || flag == "r") {
      item.reversed = true;
    } else if (!flag.empty()) {
      throw ParseError(line_no, "reversal flag must be 'R' or empty");
    }
    if (item.prompt.empty()) throw ParseError(line_no, "empty prompt");
    def.items.push_back(std::move(item));
  }
  validate(def);
  return def;
}

QuestionnaireDef load_questionnaire(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open questionnaire file '" + path.string() + "'");
  return parse_questionnaire(in);
}

}  // namespace pmsys::traits
