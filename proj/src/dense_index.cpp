#include "tct/dense_index.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "binary_io.hpp"
#include "tct/error.hpp"

namespace tct {

namespace {

constexpr std::uint32_t index_version = 1;

// magic + version + N + dim
constexpr std::uint64_t header_bytes = 4 + 4 + 8 + 4;

}  // namespace

TokenizedCorpus tokenize_corpus(std::span<const Passage> corpus, Vocabulary const& vocab, std::size_t max_len)
{
    TokenizedCorpus out;
    out.reserve(corpus.size());
    for (auto const& p : corpus) {
        try {
            out.push_back({p.id, tokenize(p.text, vocab, max_len)});
        } catch (std::invalid_argument const& e) {
            throw data_error("passage " + p.id + ": " + e.what());
        }
    }
    return out;
}

DenseIndex::DenseIndex(std::size_t dim, std::vector<std::string> doc_ids, std::vector<float> vectors)
    : m_dim(dim), m_doc_ids(std::move(doc_ids)), m_vectors(std::move(vectors))
{
    if (m_dim == 0) {
        throw std::invalid_argument("dense index dimension must be positive");
    }
    if (m_vectors.size() != m_doc_ids.size() * m_dim) {
        throw std::invalid_argument("dense index: vector storage does not match N * dim");
    }
    std::unordered_set<std::string> seen;
    for (auto const& id : m_doc_ids) {
        if (!seen.insert(id).second) {
            throw data_error("dense index: duplicate doc id " + id);
        }
    }
}

DenseIndex DenseIndex::build(TokenizedCorpus const& corpus, EmbeddingTable const& table, Projection const& student)
{
    if (corpus.empty()) {
        throw std::invalid_argument("dense index: empty corpus");
    }
    std::vector<std::string> ids;
    std::vector<float> vectors;
    ids.reserve(corpus.size());
    vectors.reserve(corpus.size() * student.output_dim());
    for (auto const& p : corpus) {
        auto enc = encode_pooled(table, p.ids, student);
        for (double x : *enc.pooled) {
            vectors.push_back(static_cast<float>(x));
        }
        ids.push_back(p.id);
    }
    return DenseIndex(student.output_dim(), std::move(ids), std::move(vectors));
}

RankedList DenseIndex::search(std::span<const double> query, std::size_t k) const
{
    if (query.size() != m_dim) {
        throw std::invalid_argument(
            "dense search: query dimension " + std::to_string(query.size()) + " != index dimension "
            + std::to_string(m_dim));
    }
    if (k == 0) {
        throw std::invalid_argument("dense search: k must be at least 1");
    }
    RankedList hits;
    hits.reserve(size());
    for (std::size_t row = 0; row < size(); ++row) {
        auto v = vector(row);
        double s = 0.0;
        for (std::size_t j = 0; j < m_dim; ++j) {
            s += query[j] * static_cast<double>(v[j]);
        }
        hits.push_back({m_doc_ids[row], s});
    }
    rank_and_truncate(hits, k);
    return hits;
}

std::uint64_t DenseIndex::metadata_bytes() const noexcept
{
    std::uint64_t bytes = header_bytes;
    for (auto const& id : m_doc_ids) {
        bytes += 4 + id.size();
    }
    return bytes;
}

void DenseIndex::save(std::filesystem::path const& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw data_error("cannot open " + path.string() + " for writing");
    }
    detail::write_magic(out, "TCTI");
    detail::write_pod<std::uint32_t>(out, index_version);
    detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(size()));
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m_dim));
    for (auto const& id : m_doc_ids) {
        detail::write_string(out, id);
    }
    out.write(
        reinterpret_cast<char const*>(m_vectors.data()),
        static_cast<std::streamsize>(m_vectors.size() * sizeof(float)));
    if (!out) {
        throw data_error("write failed: " + path.string());
    }
}

DenseIndex DenseIndex::load(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    detail::expect_magic(in, "TCTI");
    auto version = detail::read_pod<std::uint32_t>(in, "version");
    if (version != index_version) {
        throw data_error("unsupported index version " + std::to_string(version));
    }
    auto n = detail::read_pod<std::uint64_t>(in, "N");
    auto dim = detail::read_pod<std::uint32_t>(in, "dim");
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        ids.push_back(detail::read_string(in));
    }
    std::vector<float> vectors(n * dim);
    if (!in.read(reinterpret_cast<char*>(vectors.data()), static_cast<std::streamsize>(vectors.size() * sizeof(float)))) {
        throw data_error("truncated vectors in " + path.string());
    }
    return DenseIndex(dim, std::move(ids), std::move(vectors));
}

StorageReport storage_report(DenseIndex const& index, TokenizedCorpus const& corpus, Vocabulary const& vocab)
{
    StorageReport r;
    r.passages = index.size();
    r.dim = index.dim();
    r.pooled_vector_bytes = index.vector_bytes();
    r.pooled_metadata_bytes = index.metadata_bytes();
    for (auto const& p : corpus) {
        for (auto id : p.ids) {
            r.token_rows += vocab.is_punctuation(id) ? 0 : 1;
        }
    }
    r.token_vector_bytes = r.token_rows * r.dim * 4;
    r.mean_filtered_length = corpus.empty() ? 0.0 : static_cast<double>(r.token_rows) / static_cast<double>(corpus.size());
    return r;
}

}  // namespace tct
