#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <span>
#include <vector>

#include "tct/eval.hpp"
#include "tct/run.hpp"

namespace tct {

inline constexpr std::string_view fused_run_tag = "tct-fused";

/// Hybrid score over the union of both candidate lists:
///   alpha * sparse(d) + dense(d)
/// where a document missing from one list takes that list's minimum score
/// for this query. Throws std::invalid_argument if either list is empty or
/// alpha is negative.
RankedList fuse(RankedList const& sparse, RankedList const& dense, double alpha, std::size_t k);

/// Fuses every query present in both runs. A query present in only one run is
/// a data_error.
Run fuse_runs(Run const& sparse, Run const& dense, double alpha, std::size_t k);

/// {0.00, 0.02, ..., 1.00}
std::vector<double> default_alpha_grid();

using RunMetric = std::function<double(Run const&, Qrels const&)>;

struct AlphaChoice {
    double alpha = 0.0;
    double metric = 0.0;
    std::vector<double> scores;  ///< metric per candidate, grid order
};

/// Candidate maximizing the metric of the fused run; ties go to the smallest alpha.
AlphaChoice tune_alpha(
    Run const& sparse,
    Run const& dense,
    Qrels const& qrels,
    std::span<const double> candidates,
    RunMetric const& metric,
    std::size_t k = 1000);

}  // namespace tct
