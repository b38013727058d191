#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "tct/error.hpp"
#include "tct/eval.hpp"
#include "tct/fusion.hpp"

namespace tct {
namespace {

using namespace test;

TEST(Fuse, MatchesBruteForceOnRandomPairs)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> alpha(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        auto sparse = random_list(rng, 40, 15, 5.0);
        auto dense = random_list(rng, 40, 20, 0.0);
        double a = trial == 0 ? 0.0 : alpha(rng);
        auto expected = fuse_oracle(sparse, dense, a);
        EXPECT_EQ(fuse(sparse, dense, a, 1000), expected);
        auto top = fuse(sparse, dense, a, 5);
        EXPECT_EQ(top, RankedList(expected.begin(), expected.begin() + 5));
    }
}

TEST(Fuse, AlphaZeroRestrictedToDenseKeepsDenseOrder)
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        auto sparse = random_list(rng, 30, 12, 5.0);
        auto dense = random_list(rng, 30, 12, 0.0);
        auto fused = fuse(sparse, dense, 0.0, 1000);
        std::set<std::string> dense_ids;
        for (auto const& h : dense) {
            dense_ids.insert(h.doc_id);
        }
        std::vector<std::string> restricted;
        for (auto const& h : fused) {
            if (dense_ids.contains(h.doc_id)) {
                restricted.push_back(h.doc_id);
            }
        }
        std::vector<std::string> dense_order;
        for (auto const& h : dense) {
            dense_order.push_back(h.doc_id);
        }
        EXPECT_EQ(restricted, dense_order);
    }
}

TEST(Fuse, ScoreIsLinearInAlphaForSharedDocs)
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        auto sparse = random_list(rng, 20, 15, 5.0);
        auto dense = random_list(rng, 20, 15, 0.0);
        std::map<std::string, double> s;
        std::map<std::string, double> d;
        for (auto const& h : sparse) {
            s[h.doc_id] = h.score;
        }
        for (auto const& h : dense) {
            d[h.doc_id] = h.score;
        }
        for (double a : {0.0, 0.3, 0.7, 1.0, 2.5}) {
            for (auto const& h : fuse(sparse, dense, a, 1000)) {
                if (s.contains(h.doc_id) && d.contains(h.doc_id)) {
                    EXPECT_EQ(h.score, a * s[h.doc_id] + d[h.doc_id]);
                }
            }
        }
    }
}

TEST(Fuse, MissingDocTakesListMinimum)
{
    RankedList sparse{{"a", 10.0}, {"b", 4.0}};
    RankedList dense{{"c", 0.9}, {"a", 0.5}};
    auto fused = fuse(sparse, dense, 0.5, 10);
    std::map<std::string, double> got;
    for (auto const& h : fused) {
        got[h.doc_id] = h.score;
    }
    EXPECT_EQ(got.at("a"), 0.5 * 10.0 + 0.5);
    EXPECT_EQ(got.at("b"), 0.5 * 4.0 + 0.5);
    EXPECT_EQ(got.at("c"), 0.5 * 4.0 + 0.9);
    EXPECT_EQ(fused.front().doc_id, "a");
}

TEST(Fuse, InvalidInputs)
{
    RankedList one{{"a", 1.0}};
    EXPECT_THROW(fuse({}, one, 0.5, 10), std::invalid_argument);
    EXPECT_THROW(fuse(one, {}, 0.5, 10), std::invalid_argument);
    EXPECT_THROW(fuse(one, one, -0.1, 10), std::invalid_argument);
    tct::Run a{{"q1", one}};
    tct::Run b{{"q2", one}};
    EXPECT_THROW(fuse_runs(a, b, 0.5, 10), data_error);
    EXPECT_THROW(fuse_runs(a, tct::Run{{"q1", one}, {"q2", one}}, 0.5, 10), data_error);
}

TEST(AlphaGrid, FiftyOneStepsFromZeroToOne)
{
    auto grid = default_alpha_grid();
    ASSERT_EQ(grid.size(), 51u);
    EXPECT_EQ(grid.front(), 0.0);
    EXPECT_EQ(grid.back(), 1.0);
    EXPECT_DOUBLE_EQ(grid[1], 0.02);
}

TEST(TuneAlpha, ReturnsExhaustiveArgmax)
{
    std::mt19937_64 rng(14);
    auto grid = default_alpha_grid();
    RunMetric metric = [](tct::Run const& run, Qrels const& qrels) { return mrr_at_k(run, qrels, 10); };
    for (int trial = 0; trial < 20; ++trial) {
        tct::Run sparse;
        tct::Run dense;
        Qrels qrels;
        std::uniform_int_distribution<int> rel(0, 29);
        for (int q = 0; q < 8; ++q) {
            auto qid = "q" + std::to_string(q);
            sparse[qid] = random_list(rng, 30, 20, 5.0);
            dense[qid] = random_list(rng, 30, 20, 0.0);
            qrels[qid]["d" + std::to_string(rel(rng))] = 1;
        }
        auto choice = tune_alpha(sparse, dense, qrels, grid, metric);

        double best_alpha = 0.0;
        double best = -1.0;
        std::vector<double> values;
        for (double a : grid) {
            tct::Run fused;
            for (auto const& [qid, hits] : sparse) {
                fused[qid] = fuse_oracle(hits, dense.at(qid), a);
            }
            double m = mrr_at_k(fused, qrels, 10);
            values.push_back(m);
            if (m > best) {
                best = m;
                best_alpha = a;
            }
        }
        EXPECT_EQ(choice.alpha, best_alpha);
        EXPECT_EQ(choice.metric, best);
        EXPECT_EQ(choice.scores, values);
    }
}

TEST(TuneAlpha, TiesGoToSmallestAlpha)
{
    tct::Run sparse{{"q", {{"a", 1.0}}}};
    tct::Run dense{{"q", {{"a", 1.0}}}};
    Qrels qrels{{"q", {{"a", 1}}}};
    std::vector<double> candidates{0.8, 0.2, 0.5};
    auto choice = tune_alpha(sparse, dense, qrels, candidates,
        [](tct::Run const& r, Qrels const& q) { return mrr_at_k(r, q, 10); });
    EXPECT_EQ(choice.alpha, 0.2);
    EXPECT_EQ(choice.scores, (std::vector<double>{1.0, 1.0, 1.0}));
    EXPECT_THROW(tune_alpha(sparse, dense, qrels, {}, {}), std::invalid_argument);
}

}  // namespace
}  // namespace tct
