#include "tct/sparse_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "binary_io.hpp"
#include "tct/encoder.hpp"
#include "tct/error.hpp"

namespace tct {

namespace {

constexpr std::uint32_t sparse_version = 1;

std::vector<Posting> const empty_postings;

}  // namespace

std::vector<std::string> SparseIndex::index_terms(std::string const& text)
{
    auto tokens = split_tokens(text);
    std::erase_if(tokens, [](std::string const& t) { return is_punctuation_token(t); });
    return tokens;
}

SparseIndex SparseIndex::build(std::span<const Passage> corpus, Bm25Params params)
{
    if (corpus.empty()) {
        throw std::invalid_argument("sparse index: empty corpus");
    }
    if (params.k1 < 0.0 || params.b < 0.0 || params.b > 1.0) {
        throw std::invalid_argument("sparse index: need k1 >= 0 and b in [0, 1]");
    }
    SparseIndex index;
    index.m_params = params;
    std::unordered_set<std::string> seen;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        auto const& p = corpus[d];
        if (!seen.insert(p.id).second) {
            throw data_error("sparse index: duplicate doc id " + p.id);
        }
        std::map<std::string, std::uint32_t> tf;
        auto terms = index_terms(p.text);
        for (auto const& t : terms) {
            ++tf[t];
        }
        for (auto const& [term, count] : tf) {
            index.m_postings[term].push_back({static_cast<std::uint32_t>(d), count});
        }
        index.m_doc_ids.push_back(p.id);
        index.m_doc_lengths.push_back(static_cast<std::uint32_t>(terms.size()));
    }
    index.finalize();
    return index;
}

void SparseIndex::finalize()
{
    double total = 0.0;
    for (auto len : m_doc_lengths) {
        total += len;
    }
    m_avg_len = m_doc_lengths.empty() ? 0.0 : total / static_cast<double>(m_doc_lengths.size());
}

std::vector<Posting> const& SparseIndex::postings(std::string const& term) const
{
    auto it = m_postings.find(term);
    return it == m_postings.end() ? empty_postings : it->second;
}

double SparseIndex::idf(std::string const& term) const
{
    auto it = m_postings.find(term);
    if (it == m_postings.end()) {
        return 0.0;
    }
    double n = static_cast<double>(size());
    double df = static_cast<double>(it->second.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double SparseIndex::term_weight(double idf, std::uint32_t tf, std::uint32_t doc) const
{
    double f = static_cast<double>(tf);
    double norm = m_avg_len > 0.0 ? static_cast<double>(m_doc_lengths[doc]) / m_avg_len : 0.0;
    double denom = f + m_params.k1 * (1.0 - m_params.b + m_params.b * norm);
    return idf * f / denom;
}

RankedList SparseIndex::search(std::string const& query, std::size_t k) const
{
    if (k == 0) {
        throw std::invalid_argument("bm25 search: k must be at least 1");
    }
    std::unordered_map<std::uint32_t, double> acc;
    for (auto const& term : index_terms(query)) {
        auto it = m_postings.find(term);
        if (it == m_postings.end()) {
            continue;
        }
        double w = idf(term);
        for (auto const& p : it->second) {
            acc[p.doc] += term_weight(w, p.tf, p.doc);
        }
    }
    RankedList hits;
    hits.reserve(acc.size());
    for (auto const& [doc, s] : acc) {
        hits.push_back({m_doc_ids[doc], s});
    }
    rank_and_truncate(hits, k);
    return hits;
}

double SparseIndex::score(std::string const& query, std::size_t doc) const
{
    if (doc >= size()) {
        throw std::out_of_range("bm25 score: document position out of range");
    }
    double s = 0.0;
    for (auto const& term : index_terms(query)) {
        auto const& list = postings(term);
        auto it = std::lower_bound(list.begin(), list.end(), doc, [](Posting const& p, std::size_t d) {
            return p.doc < d;
        });
        if (it != list.end() && it->doc == doc) {
            s += term_weight(idf(term), it->tf, it->doc);
        }
    }
    return s;
}

void SparseIndex::save(std::filesystem::path const& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw data_error("cannot open " + path.string() + " for writing");
    }
    detail::write_magic(out, "TCTS");
    detail::write_pod<std::uint32_t>(out, sparse_version);
    detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(size()));
    detail::write_pod<double>(out, m_params.k1);
    detail::write_pod<double>(out, m_params.b);
    for (std::size_t d = 0; d < size(); ++d) {
        detail::write_string(out, m_doc_ids[d]);
        detail::write_pod<std::uint32_t>(out, m_doc_lengths[d]);
    }
    std::vector<std::string const*> terms;
    terms.reserve(m_postings.size());
    for (auto const& [term, list] : m_postings) {
        terms.push_back(&term);
    }
    std::sort(terms.begin(), terms.end(), [](auto a, auto b) { return *a < *b; });
    detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(terms.size()));
    for (auto const* term : terms) {
        auto const& list = m_postings.at(*term);
        detail::write_string(out, *term);
        detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(list.size()));
        for (auto const& p : list) {
            detail::write_pod<std::uint32_t>(out, p.doc);
            detail::write_pod<std::uint32_t>(out, p.tf);
        }
    }
    if (!out) {
        throw data_error("write failed: " + path.string());
    }
}

SparseIndex SparseIndex::load(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    detail::expect_magic(in, "TCTS");
    auto version = detail::read_pod<std::uint32_t>(in, "version");
    if (version != sparse_version) {
        throw data_error("unsupported sparse index version " + std::to_string(version));
    }
    SparseIndex index;
    auto n = detail::read_pod<std::uint64_t>(in, "N");
    index.m_params.k1 = detail::read_pod<double>(in, "k1");
    index.m_params.b = detail::read_pod<double>(in, "b");
    for (std::uint64_t d = 0; d < n; ++d) {
        index.m_doc_ids.push_back(detail::read_string(in));
        index.m_doc_lengths.push_back(detail::read_pod<std::uint32_t>(in, "doc length"));
    }
    auto num_terms = detail::read_pod<std::uint64_t>(in, "term count");
    for (std::uint64_t t = 0; t < num_terms; ++t) {
        auto term = detail::read_string(in);
        auto count = detail::read_pod<std::uint32_t>(in, "posting count");
        std::vector<Posting> list(count);
        for (auto& p : list) {
            p.doc = detail::read_pod<std::uint32_t>(in, "posting doc");
            p.tf = detail::read_pod<std::uint32_t>(in, "posting tf");
            if (p.doc >= n) {
                throw data_error("posting references document " + std::to_string(p.doc) + " beyond N");
            }
        }
        index.m_postings.emplace(std::move(term), std::move(list));
    }
    index.finalize();
    return index;
}

std::string sample_bm25_negative(
    SparseIndex const& index,
    std::string const& query,
    std::set<std::string> const& positives,
    std::mt19937_64& rng,
    std::size_t depth)
{
    auto hits = index.search(query, depth);
    std::vector<std::string const*> eligible;
    for (auto const& h : hits) {
        if (!positives.contains(h.doc_id)) {
            eligible.push_back(&h.doc_id);
        }
    }
    if (eligible.empty()) {
        throw data_error("no BM25 candidate outside the positive set for query \"" + query + "\"");
    }
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    return *eligible[pick(rng)];
}

}  // namespace tct
