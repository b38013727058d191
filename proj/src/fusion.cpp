#include "tct/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "tct/error.hpp"

namespace tct {

namespace {

double min_score(RankedList const& hits)
{
    double m = std::numeric_limits<double>::infinity();
    for (auto const& h : hits) {
        m = std::min(m, h.score);
    }
    return m;
}

}  // namespace

RankedList fuse(RankedList const& sparse, RankedList const& dense, double alpha, std::size_t k)
{
    if (sparse.empty() || dense.empty()) {
        throw std::invalid_argument("fuse: both runs need at least one candidate");
    }
    if (!(alpha >= 0.0)) {
        throw std::invalid_argument("fuse: alpha must be non-negative");
    }
    double sparse_floor = min_score(sparse);
    double dense_floor = min_score(dense);

    std::unordered_map<std::string, double> dense_scores;
    dense_scores.reserve(dense.size());
    for (auto const& h : dense) {
        dense_scores.emplace(h.doc_id, h.score);
    }

    RankedList fused;
    fused.reserve(sparse.size() + dense.size());
    std::unordered_map<std::string, bool> in_sparse;
    for (auto const& h : sparse) {
        in_sparse.emplace(h.doc_id, true);
        auto it = dense_scores.find(h.doc_id);
        double ds = it == dense_scores.end() ? dense_floor : it->second;
        fused.push_back({h.doc_id, alpha * h.score + ds});
    }
    for (auto const& h : dense) {
        if (!in_sparse.contains(h.doc_id)) {
            fused.push_back({h.doc_id, alpha * sparse_floor + h.score});
        }
    }
    rank_and_truncate(fused, k);
    return fused;
}

Run fuse_runs(Run const& sparse, Run const& dense, double alpha, std::size_t k)
{
    Run out;
    for (auto const& [qid, hits] : sparse) {
        auto it = dense.find(qid);
        if (it == dense.end()) {
            throw data_error("query " + qid + " is in the sparse run but not the dense run");
        }
        out.emplace(qid, fuse(hits, it->second, alpha, k));
    }
    for (auto const& [qid, hits] : dense) {
        if (!sparse.contains(qid)) {
            throw data_error("query " + qid + " is in the dense run but not the sparse run");
        }
    }
    return out;
}

std::vector<double> default_alpha_grid()
{
    std::vector<double> grid;
    for (int i = 0; i <= 50; ++i) {
        grid.push_back(i / 50.0);
    }
    return grid;
}

AlphaChoice tune_alpha(
    Run const& sparse,
    Run const& dense,
    Qrels const& qrels,
    std::span<const double> candidates,
    RunMetric const& metric,
    std::size_t k)
{
    if (candidates.empty()) {
        throw std::invalid_argument("tune_alpha: no candidate alphas");
    }
    std::vector<double> sorted(candidates.begin(), candidates.end());
    std::sort(sorted.begin(), sorted.end());

    AlphaChoice best;
    best.metric = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> by_alpha;
    for (double alpha : sorted) {
        double m = metric(fuse_runs(sparse, dense, alpha, k), qrels);
        by_alpha.emplace_back(alpha, m);
        if (m > best.metric) {
            best.metric = m;
            best.alpha = alpha;
        }
    }
    for (double alpha : candidates) {
        auto it = std::find_if(by_alpha.begin(), by_alpha.end(), [&](auto const& p) { return p.first == alpha; });
        best.scores.push_back(it->second);
    }
    return best;
}

}  // namespace tct
