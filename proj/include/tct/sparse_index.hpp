#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tct/run.hpp"
#include "tct/tsv.hpp"

namespace tct {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    friend bool operator==(Posting const&, Posting const&) = default;
};

/// Okapi BM25 over the tokens produced by split_tokens(); punctuation is not indexed.
class SparseIndex {
  public:
    static SparseIndex build(std::span<const Passage> corpus, Bm25Params params = {});

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); zero for unseen terms.
    double idf(std::string const& term) const;

    /// Top-k passages for the query text. Returns an empty list when no query
    /// term occurs in the collection.
    RankedList search(std::string const& query, std::size_t k) const;

    /// BM25 score of a single passage (by position) for the query text.
    double score(std::string const& query, std::size_t doc) const;

    std::size_t size() const noexcept { return m_doc_ids.size(); }
    Bm25Params params() const noexcept { return m_params; }
    double avg_doc_length() const noexcept { return m_avg_len; }
    std::vector<std::string> const& doc_ids() const noexcept { return m_doc_ids; }
    std::vector<std::uint32_t> const& doc_lengths() const noexcept { return m_doc_lengths; }
    std::vector<Posting> const& postings(std::string const& term) const;
    std::size_t num_terms() const noexcept { return m_postings.size(); }

    void save(std::filesystem::path const& path) const;
    static SparseIndex load(std::filesystem::path const& path);

  private:
    double term_weight(double idf, std::uint32_t tf, std::uint32_t doc) const;
    static std::vector<std::string> index_terms(std::string const& text);
    void finalize();

    Bm25Params m_params;
    std::vector<std::string> m_doc_ids;
    std::vector<std::uint32_t> m_doc_lengths;
    double m_avg_len = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> m_postings;
};

/// Uniform draw from the top-`depth` BM25 results for `query`, skipping ids in
/// `positives`. Throws data_error when no eligible candidate exists.
std::string sample_bm25_negative(
    SparseIndex const& index,
    std::string const& query,
    std::set<std::string> const& positives,
    std::mt19937_64& rng,
    std::size_t depth = 100);

}  // namespace tct
