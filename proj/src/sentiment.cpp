#include "pmsys/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pmsys/csv.hpp"
#include "pmsys/error.hpp"
#include "pmsys/lexicon.hpp"
#include "pmsys/random.hpp"

namespace pmsys::sentiment {

std::string_view to_string(Label label) { return label == Label::Pos ? "pos" : "neg"; }

Label label_from_string(std::string_view text) {
  if (text == "pos" || text == "positive") return Label::Pos;
  if (text == "neg" || text == "negative") return Label::Neg;
  throw ValidationError("unknown sentiment label '" + std::string(text) + "'");
}

NBModel train_nb(const std::vector<LabeledText>& corpus) {
  std::map<std::string, std::size_t> pos_counts;
  std::map<std::string, std::size_t> neg_counts;
  std::size_t pos_docs = 0;
  std::size_t neg_docs = 0;
  std::size_t pos_total = 0;
  std::size_t neg_total = 0;
  for (const auto& doc : corpus) {
    auto& counts = doc.label == Label::Pos ? pos_counts : neg_counts;
    auto& total = doc.label == Label::Pos ? pos_total : neg_total;
    ++(doc.label == Label::Pos ? pos_docs : neg_docs);
    for (const auto& token : lexicon::tokenize(doc.text).tokens) {
      ++counts[token];
      ++total;
    }
  }
  if (pos_docs == 0 || neg_docs == 0) throw ValidationError("training corpus must contain both pos and neg documents");

  std::map<std::string, int> vocabulary;
  for (const auto& [w, _] : pos_counts) vocabulary[w];
  for (const auto& [w, _] : neg_counts) vocabulary[w];
  const double v = static_cast<double>(vocabulary.size());

  NBModel model;
  const double docs = static_cast<double>(pos_docs + neg_docs);
  model.prior_pos = static_cast<double>(pos_docs) / docs;
  model.prior_neg = static_cast<double>(neg_docs) / docs;
  for (const auto& [w, _] : vocabulary) {
    const auto p = pos_counts.find(w);
    const auto n = neg_counts.find(w);
    const double cp = p == pos_counts.end() ? 0.0 : static_cast<double>(p->second);
    const double cn = n == neg_counts.end() ? 0.0 : static_cast<double>(n->second);
    model.log_likelihood_pos[w] = std::log((cp + 1.0) / (static_cast<double>(pos_total) + v));
    model.log_likelihood_neg[w] = std::log((cn + 1.0) / (static_cast<double>(neg_total) + v));
  }
  return model;
}

Scores classify(std::string_view text, const NBModel& model) {
  double lp = std::log(model.prior_pos);
  double ln = std::log(model.prior_neg);
  for (const auto& token : lexicon::tokenize(text).tokens) {
    const auto p = model.log_likelihood_pos.find(token);
    if (p == model.log_likelihood_pos.end()) continue;
    lp += p->second;
    ln += model.log_likelihood_neg.at(token);
  }
  const double top = std::max(lp, ln);
  const double ep = std::exp(lp - top);
  const double en = std::exp(ln - top);
  Scores s;
  s.pos = ep / (ep + en);
  s.neg = 1.0 - s.pos;
  s.neutral = 1.0 - std::fabs(s.pos - s.neg);
  return s;
}

Label relabel(const Scores& scores) { return scores.pos > scores.neg ? Label::Pos : Label::Neg; }

std::vector<LabeledText> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus '" + path.string() + "'");
  const auto records = csv::read(in);
  if (records.empty()) throw ValidationError("corpus '" + path.string() + "' has no header");
  const auto& header = records.front().fields;
  const auto text_col = std::find(header.begin(), header.end(), "text") - header.begin();
  const auto label_col = std::find(header.begin(), header.end(), "label") - header.begin();
  if (text_col == static_cast<long>(header.size()) || label_col == static_cast<long>(header.size())) {
    throw ParseError(records.front().line, "corpus header must contain text,label");
  }
  std::vector<LabeledText> corpus;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.fields.size() != header.size()) throw ParseError(r.line, "wrong number of fields");
    try {
      corpus.push_back({r.fields[text_col], label_from_string(r.fields[label_col])});
    } catch (const ValidationError& e) {
      throw ParseError(r.line, e.what());
    }
  }
  return corpus;
}

HoldoutResult holdout_accuracy(const std::vector<LabeledText>& corpus, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0 && train_fraction < 1)) throw ValidationError("train fraction must be in (0,1)");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(corpus.size())));
  if (cut == 0 || cut == corpus.size()) throw ValidationError("corpus too small for a holdout split");
  std::vector<LabeledText> train;
  for (std::size_t i = 0; i < cut; ++i) train.push_back(corpus[order[i]]);
  const auto model = train_nb(train);
  std::size_t correct = 0;
  for (std::size_t i = cut; i < order.size(); ++i) {
    const auto& doc = corpus[order[i]];
    if (relabel(classify(doc.text, model)) == doc.label) ++correct;
  }
  HoldoutResult result;
  result.train_size = cut;
  result.test_size = corpus.size() - cut;
  result.accuracy = static_cast<double>(correct) / static_cast<double>(result.test_size);
  return result;
}

}  // namespace pmsys::sentiment
