#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "pmsys/error.hpp"
#include "pmsys/sentiment.hpp"

using namespace pmsys;
using namespace pmsys::sentiment;

namespace {

std::vector<LabeledText> tiny() {
  return {{"good good fun", Label::Pos}, {"bad boring", Label::Neg}, {"Bad!", Label::Neg}};
}

}  // namespace

TEST(NaiveBayes, HandComputedPosterior) {
  const auto m = train_nb(tiny());
  EXPECT_EQ(m.vocabulary_size(), 4u);
  EXPECT_NEAR(m.prior_pos, 1.0 / 3, 1e-15);
  // P(good|pos) = (2+1)/(3+4), P(good|neg) = 1/(3+4)
  EXPECT_NEAR(std::exp(m.log_likelihood_pos.at("good")), 3.0 / 7, 1e-15);
  EXPECT_NEAR(std::exp(m.log_likelihood_neg.at("good")), 1.0 / 7, 1e-15);
  const auto s = classify("good", m);
  EXPECT_NEAR(s.pos, 0.6, 1e-12);
  EXPECT_NEAR(s.neg, 0.4, 1e-12);
  EXPECT_NEAR(s.neutral, 0.8, 1e-12);
  EXPECT_EQ(relabel(s), Label::Pos);
}

TEST(NaiveBayes, UnknownTokensFallBackToPriors) {
  const auto s = classify("zebra quantum", train_nb(tiny()));
  EXPECT_NEAR(s.pos, 1.0 / 3, 1e-12);
  EXPECT_EQ(relabel(s), Label::Neg);
}

TEST(NaiveBayes, ScoresAreAProbabilityPair) {
  oracle::Gen g(4);
  const auto m = train_nb(tiny());
  const std::vector<std::string> words = {"good", "fun", "bad", "boring", "meh"};
  for (int i = 0; i < 300; ++i) {
    std::string t;
    for (int k = g.integer(0, 30); k > 0; --k) t += g.pick(words) + " ";
    const auto s = classify(t, m);
    ASSERT_NEAR(s.pos + s.neg, 1.0, 1e-12);
    ASSERT_NEAR(s.neutral, 1.0 - std::fabs(s.pos - s.neg), 1e-12);
    ASSERT_GE(s.neutral, 0.0);
  }
}

TEST(NaiveBayes, LongTextsDoNotUnderflow) {
  std::string t;
  for (int i = 0; i < 5000; ++i) t += "good ";
  const auto s = classify(t, train_nb(tiny()));
  EXPECT_TRUE(std::isfinite(s.pos));
  EXPECT_NEAR(s.pos, 1.0, 1e-12);
}

TEST(NaiveBayes, TiesGoNegative) { EXPECT_EQ(relabel({0.5, 0.5, 1.0}), Label::Neg); }

TEST(NaiveBayes, NeedsBothClasses) {
  EXPECT_THROW(train_nb({{"a", Label::Pos}}), ValidationError);
}

TEST(Corpus, BundledReviewsHoldout) {
  const auto corpus = load_corpus(PMSYS_SOURCE_DIR "/data/sentiment/reviews.csv");
  EXPECT_EQ(corpus.size(), 120u);
  const auto a = holdout_accuracy(corpus, 0.8, 1);
  const auto b = holdout_accuracy(corpus, 0.8, 1);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.train_size, 96u);
  EXPECT_GE(a.accuracy, 0.9);
  EXPECT_THROW(holdout_accuracy(corpus, 1.0, 1), ValidationError);
}

TEST(Corpus, BadLabelIsAParseError) {
  const auto path = std::filesystem::temp_directory_path() / "pmsys_bad_corpus.csv";
  {
    std::ofstream f(path);
    f << "text,label\nfine,pos\nodd,maybe\n";
  }
  try {
    load_corpus(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::filesystem::remove(path);
}
