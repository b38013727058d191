#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tct/encoder.hpp"
#include "tct/run.hpp"
#include "tct/tsv.hpp"

namespace tct {

/// A passage already mapped to token ids.
struct TokenizedPassage {
    std::string id;
    std::vector<TokenId> ids;
};

using TokenizedCorpus = std::vector<TokenizedPassage>;

TokenizedCorpus tokenize_corpus(
    std::span<const Passage> corpus, Vocabulary const& vocab, std::size_t max_len = default_passage_max_len);

/// Flat store of pooled passage vectors searched by exhaustive inner product.
/// Vectors are held in f32; scores accumulate in f64.
class DenseIndex {
  public:
    DenseIndex() = default;
    DenseIndex(std::size_t dim, std::vector<std::string> doc_ids, std::vector<float> vectors);

    /// One pooled student vector per passage, in corpus order.
    static DenseIndex build(TokenizedCorpus const& corpus, EmbeddingTable const& table, Projection const& student);

    std::size_t dim() const noexcept { return m_dim; }
    std::size_t size() const noexcept { return m_doc_ids.size(); }
    std::vector<std::string> const& doc_ids() const noexcept { return m_doc_ids; }
    std::span<const float> vector(std::size_t row) const { return {m_vectors.data() + row * m_dim, m_dim}; }

    /// Exact top-k by dot product; ties go to the smaller doc id.
    RankedList search(std::span<const double> query, std::size_t k) const;

    void save(std::filesystem::path const& path) const;
    static DenseIndex load(std::filesystem::path const& path);

    /// Bytes spent on vectors alone: N * dim * 4.
    std::uint64_t vector_bytes() const noexcept { return static_cast<std::uint64_t>(m_vectors.size()) * 4; }
    /// Bytes of the serialized header plus id table.
    std::uint64_t metadata_bytes() const noexcept;

  private:
    std::size_t m_dim = 0;
    std::vector<std::string> m_doc_ids;
    std::vector<float> m_vectors;
};

/// Pooled single-vector storage against per-token storage of the teacher's
/// filtered token rows for the same corpus.
struct StorageReport {
    std::uint64_t passages = 0;
    std::uint64_t dim = 0;
    std::uint64_t pooled_vector_bytes = 0;   ///< N * h * 4
    std::uint64_t pooled_metadata_bytes = 0; ///< header + id table
    std::uint64_t token_rows = 0;            ///< sum of filtered lengths l*
    std::uint64_t token_vector_bytes = 0;    ///< sum l* * h * 4
    double mean_filtered_length = 0.0;

    double ratio() const
    {
        return static_cast<double>(token_vector_bytes) / static_cast<double>(pooled_vector_bytes);
    }
};

StorageReport storage_report(DenseIndex const& index, TokenizedCorpus const& corpus, Vocabulary const& vocab);

}  // namespace tct
