#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "bibfusion/fusion.hpp"
#include "support.hpp"

using namespace bibfusion;
using testsupport::doc_names;
using testsupport::ordered;
using testsupport::scored;
namespace oracle = testsupport::oracle;

namespace {

double score_of(const RankedList& list, const std::string& doc) {
  for (const auto& e : list) {
    if (e.doc.str() == doc) return e.score;
  }
  ADD_FAILURE() << "missing " << doc;
  return NAN;
}

BayesModel decreasing_model() {
  BayesModel m;
  // One bin per rank so that distinct ranks never tie.
  m.bins = BinSpec::parse("1-100:1");
  for (std::size_t i = 0; i < m.bins.count(); ++i) {
    m.log_likelihood_ratio.push_back(2.0 - 0.01 * static_cast<double>(i));
  }
  m.unranked_llr = -3.0;
  return m;
}

std::vector<FusionMethod> all_methods() {
  return {RrfMethod{}, BordaMethod{}, BayesMethod{decreasing_model()}, WmnzMethod{},
          CombMnzMethod{}};
}

RankedList random_scored(std::mt19937_64& rng, std::size_t pool, std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < pool; ++i) names.push_back(testsupport::doc_name(i));
  auto docs = testsupport::random_ranking(rng, names, n);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<std::pair<std::string, double>> e;
  for (const auto& d : docs) e.emplace_back(d, std::round(u(rng) * 4) / 4);
  return scored(e);
}

}  // namespace

TEST(Rrf, HandValue) {
  auto out = rrf(FusionInput({ordered({"A", "B"}), ordered({"A", "C"})}));
  EXPECT_NEAR(score_of(out, "A"), 2.0 / 61.0, 1e-15);
  EXPECT_NEAR(score_of(out, "B"), 1.0 / 62.0, 1e-15);
  EXPECT_EQ(doc_names(out), (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_THROW(rrf(FusionInput({ordered({"A"})}), 0.0), std::invalid_argument);
}

TEST(Rrf, SingleListKeepsOrder) {
  auto in = ordered({"z", "b", "q", "a"});
  EXPECT_EQ(doc_names(rrf(FusionInput({in}))), doc_names(in));
}

TEST(Rrf, MatchesOracle) {
  std::mt19937_64 rng(21);
  std::vector<std::string> pool;
  for (int i = 0; i < 30; ++i) pool.push_back(testsupport::doc_name(static_cast<std::size_t>(i)));
  for (int trial = 0; trial < 20; ++trial) {
    oracle::Lists lists;
    std::vector<RankedList> input;
    for (int l = 0; l < 3; ++l) {
      lists.push_back(testsupport::random_ranking(rng, pool, 20));
      input.push_back(ordered(lists.back()));
    }
    auto out = rrf(FusionInput(input), 60.0);
    auto expected = oracle::rrf(lists, 60.0);
    ASSERT_EQ(out.size(), expected.size());
    for (const auto& [d, s] : expected) EXPECT_NEAR(score_of(out, d), s, 1e-12);
  }
}

TEST(Borda, Examples) {
  auto same = borda_fuse(FusionInput({ordered({"A", "B", "C"}), ordered({"A", "B", "C"})}));
  EXPECT_EQ(doc_names(same), (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_DOUBLE_EQ(score_of(same, "A"), 6);
  EXPECT_DOUBLE_EQ(score_of(same, "B"), 4);
  EXPECT_DOUBLE_EQ(score_of(same, "C"), 2);

  auto sym = borda_fuse(FusionInput({ordered({"A", "B"}), ordered({"B", "A"})}));
  EXPECT_EQ(doc_names(sym), (std::vector<std::string>{"A", "B"}));
  EXPECT_DOUBLE_EQ(score_of(sym, "A"), score_of(sym, "B"));

  auto partial = borda_fuse(FusionInput({ordered({"A", "B", "C"}), ordered({"C", "A"})}));
  EXPECT_EQ(doc_names(partial), (std::vector<std::string>{"A", "C", "B"}));
  EXPECT_DOUBLE_EQ(score_of(partial, "A"), 5);
  EXPECT_DOUBLE_EQ(score_of(partial, "B"), 3);
  EXPECT_DOUBLE_EQ(score_of(partial, "C"), 4);
}

TEST(BinSpecTest, StandardAndParse) {
  auto b = BinSpec::standard();
  EXPECT_EQ(b.count(), 28u);
  EXPECT_EQ(b.bin_of(1), 0u);
  EXPECT_EQ(b.bin_of(10), 9u);
  EXPECT_EQ(b.bin_of(11), 10u);
  EXPECT_EQ(b.bin_of(20), 10u);
  EXPECT_EQ(b.bin_of(21), 11u);
  EXPECT_EQ(b.bin_of(100), 18u);
  EXPECT_EQ(b.bin_of(101), 19u);
  EXPECT_EQ(b.bin_of(1000), 27u);
  EXPECT_FALSE(b.bin_of(1001).has_value());
  EXPECT_FALSE(b.bin_of(0).has_value());
  EXPECT_THROW(BinSpec::parse("2-10:1"), std::invalid_argument);
  EXPECT_THROW(BinSpec::parse("1-10:3"), std::invalid_argument);
  EXPECT_THROW(BinSpec::parse("1-10"), std::invalid_argument);
  EXPECT_THROW(BinSpec::parse(""), std::invalid_argument);
}

TEST(BayesTrain, WorkedExample) {
  // Bins {1}, {2}; ranks 3+ and unretrieved judged docs go to the unranked slot.
  auto bins = BinSpec::parse("1-2:1");
  bibfusion::Run run;
  run.tag = "t";
  run.topics["1"] = ordered({"a", "b", "c", "d"});
  run.topics["2"] = ordered({"x"});  // unjudged topic: ignored
  Qrels q;
  q.add("1", DocId("a"), 2);
  q.add("1", DocId("b"), 0);
  q.add("1", DocId("c"), 1);
  q.add("1", DocId("d"), 0);
  q.add("1", DocId("e"), 1);
  q.add("1", DocId("f"), 0);
  BayesCounts counts;
  auto m = train_bayes({run}, q, bins, &counts);
  EXPECT_EQ(counts.retrieved_judged, 4u);
  EXPECT_EQ(counts.relevant, (std::vector<double>{1, 0, 2}));
  EXPECT_EQ(counts.nonrelevant, (std::vector<double>{0, 1, 2}));
  // P(.|rel) = {1.5, 0.5, 2.5}/4.5, P(.|non) = {0.5, 1.5, 2.5}/4.5
  ASSERT_EQ(m.log_likelihood_ratio.size(), 2u);
  EXPECT_NEAR(m.log_likelihood_ratio[0], std::log(3.0), 1e-12);
  EXPECT_NEAR(m.log_likelihood_ratio[1], std::log(1.0 / 3.0), 1e-12);
  EXPECT_NEAR(m.unranked_llr, 0.0, 1e-12);
}

TEST(BayesTrain, Separation) {
  bibfusion::Run run;
  run.tag = "t";
  Qrels q;
  std::vector<std::string> docs;
  for (int i = 0; i < 50; ++i) docs.push_back("d" + std::to_string(100 + i));
  run.topics["1"] = ordered(docs);
  for (int i = 0; i < 10; ++i) q.add("1", DocId(docs[static_cast<std::size_t>(i)]), 1);
  for (int i = 0; i < 20; ++i) q.add("1", DocId("n" + std::to_string(i)), 0);
  auto m = train_bayes({run}, q);
  for (std::size_t b = 0; b < 10; ++b) EXPECT_GT(m.log_likelihood_ratio[b], 0.0);
  EXPECT_LT(m.unranked_llr, 0.0);
}

TEST(BayesTrain, IndependentRelevanceIsUninformative) {
  std::mt19937_64 rng(8);
  auto bins = BinSpec::parse("1-1000:100");
  Qrels q;
  // 10 topics x 1000 judged retrieved docs, relevance a fair coin.
  bibfusion::Run run;
  run.tag = "u";
  for (int t = 0; t < 10; ++t) {
    std::vector<std::string> docs;
    for (int i = 0; i < 1000; ++i) {
      docs.push_back("d" + std::to_string(i));
      q.add(std::to_string(t), DocId(docs.back()), static_cast<int>(rng() & 1));
    }
    run.topics[std::to_string(t)] = ordered(docs);
  }
  auto m = train_bayes({run}, q, bins);
  for (double llr : m.log_likelihood_ratio) EXPECT_NEAR(llr, 0.0, 0.1);
}

TEST(BayesTrain, Errors) {
  bibfusion::Run run;
  run.tag = "t";
  run.topics["1"] = ordered({"a"});
  Qrels none;
  none.add("2", DocId("a"), 1);
  EXPECT_THROW(train_bayes({run}, none), std::invalid_argument);
  Qrels only_rel;
  only_rel.add("1", DocId("a"), 1);
  EXPECT_THROW(train_bayes({run}, only_rel), std::invalid_argument);
}

TEST(BayesModelIo, RoundTrip) {
  auto m = decreasing_model();
  m.log_likelihood_ratio[3] = 1.0 / 3.0;
  std::ostringstream out;
  m.save(out);
  std::istringstream in(out.str());
  auto back = BayesModel::load(in);
  EXPECT_EQ(back.bins.upper_bounds, m.bins.upper_bounds);
  EXPECT_EQ(back.log_likelihood_ratio, m.log_likelihood_ratio);
  EXPECT_EQ(back.unranked_llr, m.unranked_llr);
  std::istringstream bad("bins = 1 2\nllr = 0.5\nunranked_llr = 0\n");
  EXPECT_THROW(BayesModel::load(bad), ParseError);
}

TEST(BayesFuse, MonotoneAndFlatModels) {
  auto in = ordered({"q", "b", "z", "a"});
  EXPECT_EQ(doc_names(bayes_fuse(FusionInput({in}), decreasing_model())), doc_names(in));
  BayesModel flat = decreasing_model();
  std::fill(flat.log_likelihood_ratio.begin(), flat.log_likelihood_ratio.end(), 0.5);
  flat.unranked_llr = 0.5;
  EXPECT_EQ(doc_names(bayes_fuse(FusionInput({in, ordered({"c"})}), flat)),
            (std::vector<std::string>{"a", "b", "c", "q", "z"}));
}

TEST(BayesFuse, MatchesOracle) {
  std::mt19937_64 rng(4);
  BayesModel m;
  m.bins = BinSpec::parse("1-5:1,6-15:5");
  std::uniform_real_distribution<double> u(-2, 2);
  for (std::size_t i = 0; i < m.bins.count(); ++i) m.log_likelihood_ratio.push_back(u(rng));
  m.unranked_llr = -1.25;
  std::vector<std::string> pool;
  for (std::size_t i = 0; i < 25; ++i) pool.push_back(testsupport::doc_name(i));
  for (int trial = 0; trial < 20; ++trial) {
    oracle::Lists lists = {testsupport::random_ranking(rng, pool, 15),
                           testsupport::random_ranking(rng, pool, 15)};
    auto out = bayes_fuse(FusionInput({ordered(lists[0]), ordered(lists[1])}), m);
    auto expected = oracle::bayes(lists, m);
    ASSERT_EQ(out.size(), expected.size());
    for (const auto& [d, s] : expected) EXPECT_NEAR(score_of(out, d), s, 1e-12);
  }
}

TEST(MinMax, Examples) {
  auto n = min_max_normalize(scored({{"a", 10}, {"b", 5}, {"c", 0}}));
  EXPECT_EQ(score_of(n, "a"), 1.0);
  EXPECT_EQ(score_of(n, "b"), 0.5);
  EXPECT_EQ(score_of(n, "c"), 0.0);
  auto c = min_max_normalize(scored({{"a", 3}, {"b", 3}, {"c", 3}}));
  for (const auto& e : c) EXPECT_EQ(e.score, 1.0);
  EXPECT_TRUE(min_max_normalize(RankedList{}).empty());
}

TEST(MinMax, MatchesFormula) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-50, 50);
  std::vector<std::pair<std::string, double>> e;
  for (std::size_t i = 0; i < 50; ++i) e.emplace_back(testsupport::doc_name(i), u(rng));
  double lo = 1e9, hi = -1e9;
  for (const auto& [d, s] : e) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  auto in = scored(e);
  auto out = min_max_normalize(in);
  EXPECT_EQ(doc_names(out), doc_names(in));
  for (const auto& [d, s] : e) EXPECT_NEAR(score_of(out, d), (s - lo) / (hi - lo), 1e-12);
}

TEST(Wmnz, Examples) {
  auto out = wmnz(FusionInput({scored({{"d", 1.0}}), scored({{"d", 0.5}})}));
  EXPECT_DOUBLE_EQ(score_of(out, "d"), 3.0);
  auto weighted = wmnz(FusionInput({scored({{"d", 1.0}}), scored({{"e", 1.0}})},
                                   std::vector<double>{2.0, 1.0}));
  EXPECT_DOUBLE_EQ(score_of(weighted, "d"), 4.0);
  EXPECT_THROW(FusionInput({scored({{"d", 1.0}})}, std::vector<double>{0.0}), std::invalid_argument);
  EXPECT_THROW(FusionInput({scored({{"d", 1.0}})}, std::vector<double>{1.0, 1.0}),
               std::invalid_argument);
  EXPECT_THROW(FusionInput({}), std::invalid_argument);
}

TEST(Wmnz, MatchesOracleAndCombMnzOrder) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uw(0.5, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = testsupport::uniform(rng, 2, 5);
    std::vector<RankedList> lists;
    oracle::ScoreMaps maps;
    std::vector<double> w;
    for (std::size_t l = 0; l < n; ++l) {
      lists.push_back(min_max_normalize(random_scored(rng, 30, testsupport::uniform(rng, 1, 20))));
      std::map<std::string, double> m;
      for (const auto& e : lists.back()) m[e.doc.str()] = e.score;
      maps.push_back(m);
      w.push_back(uw(rng));
    }
    auto out = wmnz(FusionInput(lists, w));
    for (const auto& [d, s] : oracle::wmnz(maps, w)) EXPECT_NEAR(score_of(out, d), s, 1e-12);
    EXPECT_EQ(doc_names(wmnz(FusionInput(lists))), doc_names(combmnz(FusionInput(lists))));
  }
}

TEST(Dispatch, MethodsAndTokens) {
  FusionInput in({ordered({"A", "B"}), ordered({"B", "C"})});
  EXPECT_EQ(fuse(RrfMethod{60}, in), rrf(in, 60));
  EXPECT_EQ(fuse(BordaMethod{}, in), borda_fuse(in));
  EXPECT_EQ(method_name(make_method("wmnz")), "wmnz");
  EXPECT_EQ(method_name(make_method("bayes", 60, decreasing_model())), "bayes");
  EXPECT_THROW(make_method("bayes"), std::invalid_argument);
  EXPECT_THROW(make_method("combsum"), std::invalid_argument);
}

// Properties over random inputs, every method.
TEST(FusionProperties, SingleAndIdenticalListsKeepOrder) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> pool;
    for (std::size_t i = 0; i < 40; ++i) pool.push_back(testsupport::doc_name(i));
    auto docs = testsupport::random_ranking(rng, pool, testsupport::uniform(rng, 1, 30));
    auto in = ordered(docs);
    std::size_t copies = testsupport::uniform(rng, 1, 4);
    for (const auto& m : all_methods()) {
      EXPECT_EQ(doc_names(fuse(m, FusionInput(std::vector<RankedList>(copies, in)))), docs)
          << method_name(m);
    }
  }
}

TEST(FusionProperties, UnionCanonicalAndPermutationInvariant) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RankedList> lists;
    std::set<std::string> u;
    std::size_t n = testsupport::uniform(rng, 1, 5);
    for (std::size_t l = 0; l < n; ++l) {
      lists.push_back(random_scored(rng, 30, testsupport::uniform(rng, 1, 25)));
      for (const auto& e : lists.back()) u.insert(e.doc.str());
    }
    auto shuffled = lists;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (const auto& m : all_methods()) {
      auto out = fuse(m, FusionInput(lists));
      auto names = doc_names(out);
      EXPECT_EQ(std::set<std::string>(names.begin(), names.end()), u);
      EXPECT_EQ(names.size(), u.size());
      for (std::size_t i = 1; i < out.size(); ++i) EXPECT_TRUE(canonical_before(out[i - 1], out[i]));
      EXPECT_EQ(out, fuse(m, FusionInput(shuffled))) << method_name(m);
    }
  }
}

TEST(FusionProperties, RankMethodsIgnoreScoreScale) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RankedList> lists, rescaled;
    for (std::size_t l = 0; l < 3; ++l) {
      // distinct scores so ranks are defined by the scores alone
      std::vector<std::string> pool;
      for (std::size_t i = 0; i < 30; ++i) pool.push_back(testsupport::doc_name(i));
      auto docs = testsupport::random_ranking(rng, pool, 20);
      std::vector<std::pair<std::string, double>> a, b;
      for (std::size_t i = 0; i < docs.size(); ++i) {
        double s = static_cast<double>(docs.size() - i);
        a.emplace_back(docs[i], s);
        b.emplace_back(docs[i], std::exp(s / 4.0) * 7.0 - 3.0);
      }
      lists.push_back(scored(a));
      rescaled.push_back(scored(b));
    }
    for (const auto& m : {FusionMethod{RrfMethod{}}, FusionMethod{BordaMethod{}},
                          FusionMethod{BayesMethod{decreasing_model()}}}) {
      EXPECT_EQ(fuse(m, FusionInput(lists)), fuse(m, FusionInput(rescaled)));
    }
  }
}
