#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "tct/run.hpp"

namespace tct {

/// query id -> (doc id -> grade). Grade >= 1 counts as relevant for binary metrics.
using Qrels = std::map<std::string, std::map<std::string, int>>;

/// Parses 4-column TREC qrels lines (qid 0 docid grade).
Qrels read_qrels(std::istream& in);
Qrels read_qrels(std::filesystem::path const& path);
void write_qrels(std::ostream& out, Qrels const& qrels);

// Metrics average over queries present in the run. A run query with no
// judgments, or no relevant judgment, is excluded with a warning, following
// the trec_eval convention of not penalizing unjudged topics.

double mrr_at_k(Run const& run, Qrels const& qrels, std::size_t k = 10);
double recall_at_k(Run const& run, Qrels const& qrels, std::size_t k = 1000);
/// Gain 2^g - 1, discount 1 / log2(rank + 1), normalized by the ideal DCG at k.
double ndcg_at_k(Run const& run, Qrels const& qrels, std::size_t k = 10);

/// Per-query values (excluded queries omitted).
std::map<std::string, double> mrr_per_query(Run const& run, Qrels const& qrels, std::size_t k = 10);
std::map<std::string, double> recall_per_query(Run const& run, Qrels const& qrels, std::size_t k = 1000);
std::map<std::string, double> ndcg_per_query(Run const& run, Qrels const& qrels, std::size_t k = 10);

using MetricReport = std::vector<std::pair<std::string, double>>;

/// MRR@10, R@1000 and NDCG@10 for a run.
MetricReport standard_report(Run const& run, Qrels const& qrels);

/// Two-column "metric value" table.
void write_report(std::ostream& out, MetricReport const& report);

}  // namespace tct
