#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tct/dense_index.hpp"
#include "tct/eval.hpp"
#include "tct/linalg.hpp"
#include "tct/run.hpp"

// Brute-force reference implementations shared by the unit tests and the
// acceptance check.

namespace tct::test {

inline double maxsim_oracle(Matrix const& q, Matrix const& d)
{
    double total = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < d.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < q.cols(); ++k) {
                s += q(i, k) * d(j, k);
            }
            best = std::max(best, s);
        }
        total += best;
    }
    return total;
}

inline DenseIndex random_index(std::mt19937_64& rng, std::size_t n, std::size_t dim)
{
    std::normal_distribution<float> normal;
    std::vector<std::string> ids;
    std::vector<float> vectors;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("p" + std::to_string(i));
        for (std::size_t j = 0; j < dim; ++j) {
            vectors.push_back(normal(rng));
        }
    }
    return DenseIndex(dim, ids, vectors);
}

// Scores every stored vector with a plain loop and sorts the whole list.
inline RankedList full_sort_oracle(DenseIndex const& index, std::vector<double> const& q)
{
    RankedList all;
    for (std::size_t row = 0; row < index.size(); ++row) {
        double s = 0.0;
        auto v = index.vector(row);
        for (std::size_t j = 0; j < q.size(); ++j) {
            s += q[j] * v[j];
        }
        all.push_back({index.doc_ids()[row], s});
    }
    std::stable_sort(all.begin(), all.end(), [](auto const& a, auto const& b) {
        return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
    });
    return all;
}

inline RankedList random_list(std::mt19937_64& rng, std::size_t pool, std::size_t n, double shift)
{
    std::vector<int> ids(pool);
    for (std::size_t i = 0; i < pool; ++i) {
        ids[i] = static_cast<int>(i);
    }
    std::shuffle(ids.begin(), ids.end(), rng);
    std::normal_distribution<double> score(shift, 2.0);
    RankedList hits;
    for (std::size_t i = 0; i < n; ++i) {
        hits.push_back({"d" + std::to_string(ids[i]), score(rng)});
    }
    std::sort(hits.begin(), hits.end(), ranks_before);
    return hits;
}

// Scores every document of the union by the rule directly, then full-sorts.
inline RankedList fuse_oracle(RankedList const& sparse, RankedList const& dense, double alpha)
{
    std::map<std::string, double> s;
    std::map<std::string, double> d;
    double s_min = sparse.front().score;
    double d_min = dense.front().score;
    for (auto const& h : sparse) {
        s[h.doc_id] = h.score;
        s_min = std::min(s_min, h.score);
    }
    for (auto const& h : dense) {
        d[h.doc_id] = h.score;
        d_min = std::min(d_min, h.score);
    }
    std::set<std::string> all;
    for (auto const& [id, _] : s) {
        all.insert(id);
    }
    for (auto const& [id, _] : d) {
        all.insert(id);
    }
    RankedList out;
    for (auto const& id : all) {
        double sv = s.contains(id) ? s[id] : s_min;
        double dv = d.contains(id) ? d[id] : d_min;
        out.push_back({id, alpha * sv + dv});
    }
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

inline RankedList ranked(std::vector<std::string> const& ids)
{
    RankedList hits;
    double score = static_cast<double>(ids.size());
    for (auto const& id : ids) {
        hits.push_back({id, score});
        score -= 1.0;
    }
    return hits;
}

// Five queries with hand-computed metric values.
//   q1: relevant at rank 1                         RR 1,   R 1/1
//   q2: relevant at rank 3                         RR 1/3, R 1/1
//   q3: relevant at rank 11 only                   RR 0,   R 1/1
//   q4: two relevant, ranks 2 and 5, a third unretrieved   RR 1/2, R 2/3
//   q5: graded, grade 2 at rank 2 and grade 1 at rank 1     RR 1, R 2/2
struct MetricFixture {
    tct::Run run;
    Qrels qrels;

    MetricFixture()
    {
        run["q1"] = ranked({"a", "b", "c"});
        run["q2"] = ranked({"b", "c", "a", "d"});
        std::vector<std::string> long_list;
        for (int i = 0; i < 10; ++i) {
            long_list.push_back("n" + std::to_string(i));
        }
        long_list.push_back("a");
        run["q3"] = ranked(long_list);
        run["q4"] = ranked({"x", "a", "y", "z", "b"});
        run["q5"] = ranked({"c", "d", "e"});

        qrels["q1"] = {{"a", 1}};
        qrels["q2"] = {{"a", 1}, {"b", 0}};
        qrels["q3"] = {{"a", 1}};
        qrels["q4"] = {{"a", 1}, {"b", 1}, {"c", 1}};
        qrels["q5"] = {{"c", 1}, {"d", 2}};
    }
};

}  // namespace tct::test
