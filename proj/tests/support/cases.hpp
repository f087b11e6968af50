#pragma once
// Hand-rolled case generators and fixtures shared by unit and acceptance tests.

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "pmsys/lexicon.hpp"
#include "pmsys/matching.hpp"
#include "pmsys/model.hpp"

namespace cases {

// ---- lexicon ----------------------------------------------------------------

struct LexiconCase {
  std::vector<std::string> categories;
  std::vector<oracle::NaiveEntry> entries;
  std::string text;

  pmsys::lexicon::Lexicon build() const {
    std::vector<pmsys::lexicon::Entry> e;
    for (const auto& n : entries) e.push_back({n.pattern, n.categories});
    return pmsys::lexicon::Lexicon("random", categories, e);
  }
};

/// Small alphabet so exact words, stems and overlapping stems collide often.
inline LexiconCase random_lexicon_case(oracle::Gen& g) {
  static const std::vector<std::string> syllables = {"a", "b", "ab", "ba", "c", "ca"};
  static const std::vector<std::string> separators = {" ", "  ", ", ", ". ", "! ", "?? ", "\n", "-", "'"};
  auto word = [&] {
    std::string w;
    const int parts = g.integer(1, 3);
    for (int i = 0; i < parts; ++i) w += g.pick(syllables);
    return w;
  };

  LexiconCase c;
  const int ncat = g.integer(1, 4);
  for (int i = 0; i < ncat; ++i) c.categories.push_back("cat" + std::to_string(i));
  const int nentries = g.integer(0, 10);
  std::set<std::string> used;
  for (int i = 0; i < nentries; ++i) {
    std::string p = word();
    if (g.coin(0.4)) p += "*";
    if (!used.insert(p).second) continue;
    oracle::NaiveEntry e{p, {}};
    const int k = g.integer(1, ncat);
    std::set<std::string> cats;
    for (int j = 0; j < k; ++j) cats.insert(g.pick(c.categories));
    e.categories.assign(cats.begin(), cats.end());
    c.entries.push_back(e);
  }
  const int ntokens = g.integer(0, 20);
  for (int i = 0; i < ntokens; ++i) {
    std::string w = word();
    if (g.coin(0.2)) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    if (g.coin(0.1)) w += std::to_string(g.integer(0, 9));
    c.text += w + g.pick(separators);
  }
  return c;
}

struct WildcardCase {
  std::string pattern;
  std::string token;
  bool matches;
};

inline const std::vector<WildcardCase>& wildcard_table() {
  static const std::vector<WildcardCase> table = {
      {"happ*", "happy", true},        {"happ*", "happiness", true},   {"happ*", "happ", true},
      {"happ*", "hap", false},         {"happ*", "unhappy", false},    {"happy", "happy", true},
      {"happy", "happyness", false},   {"happy", "happ", false},       {"a*", "a", true},
      {"a*", "abc", true},             {"abc*", "ab", false},          {"caf\xc3\xa9*", "caf\xc3\xa9s", true},
  };
  return table;
}

// ---- model ------------------------------------------------------------------

/// Four well-separated Gaussian clusters in the default eight-feature space.
inline pmsys::model::FeatureTable gaussian_clusters(std::uint64_t seed, std::size_t per_label, double spread = 0.06) {
  oracle::Gen g(seed);
  const std::vector<std::string> labels = {"down", "error", "idle", "slow"};
  pmsys::model::FeatureTable t;
  t.schema = pmsys::model::FeatureSchema::defaults();
  const std::size_t m = t.schema.names.size();
  std::vector<std::vector<double>> centres;
  for (std::size_t l = 0; l < labels.size(); ++l) {
    std::vector<double> c;
    for (std::size_t f = 0; f + 1 < m; ++f) c.push_back(g.real(0.2, 0.8));
    c.push_back(g.real(20, 60));
    centres.push_back(c);
  }
  for (std::size_t i = 0; i < per_label; ++i) {
    for (std::size_t l = 0; l < labels.size(); ++l) {
      pmsys::model::FeatureRow row;
      for (std::size_t f = 0; f < m; ++f) {
        double v = f + 1 < m ? std::clamp(g.normal(centres[l][f], spread), 0.0, 1.0)
                             : std::max(1.0, g.normal(centres[l][f], 60 * spread));
        row.values.push_back(v);
      }
      row.label = labels[l];
      t.rows.push_back(row);
    }
  }
  return t;
}

/// Predictions that realise a given confusion matrix ([actual][predicted]).
inline std::tuple<std::vector<pmsys::model::Prediction>, std::vector<std::string>> from_confusion(
    const std::vector<std::string>& labels, const std::vector<std::vector<int>>& cm) {
  std::vector<pmsys::model::Prediction> preds;
  std::vector<std::string> truth;
  for (std::size_t a = 0; a < cm.size(); ++a) {
    for (std::size_t p = 0; p < cm.size(); ++p) {
      for (int i = 0; i < cm[a][p]; ++i) {
        pmsys::model::Prediction pr;
        pr.label = labels[p];
        pr.fractions.assign(labels.size(), 0.0);
        pr.fractions[p] = 1.0;
        preds.push_back(pr);
        truth.push_back(labels[a]);
      }
    }
  }
  return {preds, truth};
}

// ---- matching ---------------------------------------------------------------

enum class Planted { UsernameInPost, BasicInfo, Unresolvable };

struct MatchingFixture {
  std::vector<pmsys::matching::UserRecord> users;
  std::vector<pmsys::matching::SocialProfile> profiles;
  std::vector<pmsys::matching::SocialPost> posts;
  std::vector<Planted> planted;      // per profile
  std::vector<int> truth;            // per profile; 0 when unresolvable
};

/// Synthetic users and profiles with known links. Profiles of the first kind
/// mention their username in a post; the second kind can only be linked through
/// name, gender, city and university; the rest belong to nobody.
inline MatchingFixture matching_fixture(std::uint64_t seed, std::size_t n_profiles) {
  oracle::Gen g(seed);
  static const std::vector<std::string> first = {"omar", "layla", "yusuf", "sara", "hamza", "noura", "khalid",
                                                 "mona", "faisal", "reem", "tariq", "huda", "adel", "dana",
                                                 "samir", "rana", "nabil", "aisha", "majid", "lina"};
  static const std::vector<std::string> last = {"alharbi", "qahtani", "otaibi", "ghamdi", "zahrani",
                                                "shehri", "dosari", "mutairi", "anazi", "juhani",
                                                "harthi", "subaie", "malki", "omari", "shammari"};
  static const std::vector<std::string> cities = {"riyadh", "jeddah", "dammam", "abha", "taif", "tabuk"};
  static const std::vector<std::string> unis = {"ksu", "uqu", "taibah", "qassim", "kau"};
  static const std::vector<std::string> filler = {"hi", "the", "portal", "is", "not", "loading", "help", "me", "pls",
                                                  "my", "id", "is", "ok"};

  MatchingFixture f;
  std::set<std::pair<std::string, std::string>> names;
  const std::size_t n_users = n_profiles + n_profiles / 4;
  for (std::size_t i = 0; i < n_users; ++i) {
    std::string a, b;
    do {
      a = g.pick(first);
      b = g.pick(last);
    } while (!names.insert({a, b}).second && names.size() < first.size() * last.size());
    pmsys::matching::UserRecord u;
    u.user_id = static_cast<int>(i + 1);
    u.username = a + b.substr(0, 3) + std::to_string(1000 + i);
    u.name = a + " " + b;
    u.gender = g.coin() ? "male" : "female";
    u.city = g.pick(cities);
    u.university = g.pick(unis);
    f.users.push_back(u);
  }
  std::vector<std::size_t> order(n_users);
  for (std::size_t i = 0; i < n_users; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), g.engine());

  for (std::size_t p = 0; p < n_profiles; ++p) {
    pmsys::matching::SocialProfile prof;
    prof.social_id = "s" + std::to_string(p);
    const double r = g.real(0, 1);
    if (r < 0.45) {
      const auto& u = f.users[order[p]];
      prof.display_name = u.name;
      f.planted.push_back(Planted::UsernameInPost);
      f.truth.push_back(u.user_id);
      std::string text;
      for (int i = 0; i < 3; ++i) text += g.pick(filler) + " ";
      text += g.coin() ? "my username is " : "user name: ";
      text += u.username + " thanks";
      f.posts.push_back({prof.social_id, text});
      if (g.coin(0.5)) f.posts.push_back({prof.social_id, "still waiting " + g.pick(filler)});
    } else if (r < 0.85) {
      const auto& u = f.users[order[p]];
      prof.display_name = u.name;
      prof.gender = u.gender;
      prof.city = u.city;
      prof.university = u.university;
      f.planted.push_back(Planted::BasicInfo);
      f.truth.push_back(u.user_id);
      f.posts.push_back({prof.social_id, "the portal is not loading pls help"});
    } else {
      prof.display_name = "visitor " + std::to_string(p);
      f.planted.push_back(Planted::Unresolvable);
      f.truth.push_back(0);
      f.posts.push_back({prof.social_id, "who runs the id portal"});
    }
    f.profiles.push_back(prof);
  }
  return f;
}

}  // namespace cases
