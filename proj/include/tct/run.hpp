#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tct {

struct SearchHit {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(SearchHit const&, SearchHit const&) = default;
};

/// Ranked results for one query: scores non-increasing, equal scores ordered
/// by ascending doc id.
using RankedList = std::vector<SearchHit>;

/// query id -> ranked list
using Run = std::map<std::string, RankedList>;

/// Ordering used everywhere results are ranked.
inline bool ranks_before(SearchHit const& a, SearchHit const& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.doc_id < b.doc_id;
}

/// Sorts by ranks_before and keeps the first k entries.
void rank_and_truncate(RankedList& hits, std::size_t k);

/// Parses 6-column TREC run lines (qid Q0 docid rank score tag). Each query's
/// list is re-sorted by score with the doc-id tie-break.
Run read_trec_run(std::istream& in);
Run read_trec_run(std::filesystem::path const& path);

void write_trec_run(std::ostream& out, Run const& run, std::string_view tag);
void write_trec_run(std::filesystem::path const& path, Run const& run, std::string_view tag);

}  // namespace tct
