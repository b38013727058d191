#include "tct/encoder.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "binary_io.hpp"
#include "tct/error.hpp"

namespace tct {

namespace {

constexpr std::uint32_t embeddings_version = 1;
constexpr std::uint32_t projection_version = 1;

bool is_ascii_punct(char c)
{
    auto u = static_cast<unsigned char>(c);
    return u < 128 && std::ispunct(u);
}

bool is_ascii_space(char c)
{
    auto u = static_cast<unsigned char>(c);
    return u < 128 && std::isspace(u);
}

Matrix project_rows(EmbeddingTable const& table, std::span<const TokenId> ids, Projection const& proj)
{
    if (table.width() != proj.input_dim()) {
        throw std::invalid_argument(
            "projection input dim " + std::to_string(proj.input_dim())
            + " != embedding width " + std::to_string(table.width()));
    }
    Matrix out(ids.size(), proj.output_dim());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= table.size()) {
            throw std::invalid_argument("token id " + std::to_string(ids[i]) + " out of range");
        }
        auto dst = out.row(i);
        auto src = table.table.row(ids[i]);
        for (std::size_t k = 0; k < src.size(); ++k) {
            auto w = proj.weights.row(k);
            for (std::size_t j = 0; j < dst.size(); ++j) {
                dst[j] += src[k] * w[j];
            }
        }
    }
    return out;
}

void normalize_rows(Matrix& m)
{
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        double norm = l2_norm(r);
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw std::domain_error(
                "teacher encoding: zero-norm projected row at token position " + std::to_string(i));
        }
        for (double& x : r) {
            x /= norm;
        }
    }
}

template <typename Fn>
void with_output(std::filesystem::path const& path, Fn&& fn)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw data_error("cannot open " + path.string() + " for writing");
    }
    fn(out);
    if (!out) {
        throw data_error("write failed: " + path.string());
    }
}

std::ifstream open_input(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    return in;
}

}  // namespace

std::vector<std::string> split_tokens(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    };
    for (char c : text) {
        if (is_ascii_space(c)) {
            flush();
        } else if (is_ascii_punct(c)) {
            flush();
            tokens.emplace_back(1, c);
        } else {
            auto u = static_cast<unsigned char>(c);
            current.push_back(u < 128 ? static_cast<char>(std::tolower(u)) : c);
        }
    }
    flush();
    return tokens;
}

bool is_punctuation_token(std::string_view token)
{
    return token.size() == 1 && is_ascii_punct(token[0]);
}

Vocabulary::Vocabulary()
{
    m_tokens.emplace_back(unk_token);
    m_ids.emplace(std::string(unk_token), unk_id);
    m_punctuation.push_back(false);
}

Vocabulary Vocabulary::from_texts(std::span<const std::string> texts)
{
    Vocabulary vocab;
    for (auto const& text : texts) {
        for (auto const& tok : split_tokens(text)) {
            vocab.add(tok);
        }
    }
    return vocab;
}

TokenId Vocabulary::add(std::string_view token)
{
    if (auto it = m_ids.find(std::string(token)); it != m_ids.end()) {
        return it->second;
    }
    auto id = static_cast<TokenId>(m_tokens.size());
    m_tokens.emplace_back(token);
    m_ids.emplace(std::string(token), id);
    m_punctuation.push_back(is_punctuation_token(token));
    return id;
}

TokenId Vocabulary::id(std::string_view token) const
{
    auto it = m_ids.find(std::string(token));
    return it == m_ids.end() ? unk_id : it->second;
}

bool Vocabulary::is_punctuation(TokenId id) const
{
    return id < m_punctuation.size() && m_punctuation[id];
}

std::vector<TokenId> tokenize(std::string_view text, Vocabulary const& vocab, std::size_t max_len)
{
    auto tokens = split_tokens(text);
    if (tokens.empty()) {
        throw std::invalid_argument("tokenize: text has no tokens");
    }
    if (max_len == 0) {
        throw std::invalid_argument("tokenize: max_len must be positive");
    }
    std::vector<TokenId> ids;
    ids.reserve(std::min(tokens.size(), max_len));
    for (auto const& tok : tokens) {
        if (ids.size() == max_len) {
            break;
        }
        ids.push_back(vocab.id(tok));
    }
    return ids;
}

EmbeddingTable EmbeddingTable::random(std::size_t vocab_size, std::size_t width, std::uint64_t seed)
{
    if (vocab_size == 0 || width == 0) {
        throw std::invalid_argument("embedding table needs positive size and width");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(width)));
    EmbeddingTable t{Matrix(vocab_size, width)};
    for (double& x : t.table.values()) {
        x = normal(rng);
    }
    round_to_f32(t.table);
    return t;
}

Projection Projection::random(std::size_t input_dim, std::size_t output_dim, std::uint64_t seed)
{
    if (input_dim == 0 || output_dim == 0) {
        throw std::invalid_argument("projection needs positive dimensions");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(input_dim)));
    Projection p{Matrix(input_dim, output_dim)};
    for (double& x : p.weights.values()) {
        x = normal(rng);
    }
    round_to_f32(p.weights);
    return p;
}

EncodedText encode_teacher_query(
    EmbeddingTable const& table, std::span<const TokenId> ids, Projection const& proj)
{
    if (ids.empty()) {
        throw std::invalid_argument("encode_teacher_query: empty token sequence");
    }
    EncodedText enc{project_rows(table, ids, proj), std::nullopt, ids.size()};
    normalize_rows(enc.token_vectors);
    return enc;
}

EncodedText encode_teacher_doc(
    EmbeddingTable const& table,
    std::span<const TokenId> ids,
    Projection const& proj,
    Vocabulary const& vocab)
{
    if (ids.empty()) {
        throw std::invalid_argument("encode_teacher_doc: empty token sequence");
    }
    std::vector<TokenId> kept;
    kept.reserve(ids.size());
    for (auto id : ids) {
        if (!vocab.is_punctuation(id)) {
            kept.push_back(id);
        }
    }
    if (kept.empty()) {
        throw std::invalid_argument("encode_teacher_doc: every token is punctuation");
    }
    EncodedText enc{project_rows(table, kept, proj), std::nullopt, ids.size()};
    normalize_rows(enc.token_vectors);
    return enc;
}

EncodedText encode_pooled(
    EmbeddingTable const& table, std::span<const TokenId> ids, Projection const& proj)
{
    if (ids.empty()) {
        throw std::invalid_argument("encode_pooled: empty token sequence");
    }
    EncodedText enc{project_rows(table, ids, proj), Vector(proj.output_dim(), 0.0), ids.size()};
    auto& pooled = *enc.pooled;
    for (std::size_t i = 0; i < enc.token_vectors.rows(); ++i) {
        auto r = enc.token_vectors.row(i);
        for (std::size_t j = 0; j < pooled.size(); ++j) {
            pooled[j] += r[j];
        }
    }
    for (double& x : pooled) {
        x /= static_cast<double>(ids.size());
    }
    return enc;
}

Vector mean_embedding(EmbeddingTable const& table, std::span<const TokenId> ids)
{
    if (ids.empty()) {
        throw std::invalid_argument("mean_embedding: empty token sequence");
    }
    Vector out(table.width(), 0.0);
    for (auto id : ids) {
        auto r = table.table.row(id);
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += r[j];
        }
    }
    for (double& x : out) {
        x /= static_cast<double>(ids.size());
    }
    return out;
}

void round_to_f32(Matrix& m)
{
    for (double& x : m.values()) {
        x = static_cast<double>(static_cast<float>(x));
    }
}

void save_embeddings(std::filesystem::path const& path, EmbeddingModel const& model)
{
    if (model.vocab.size() != model.table.size()) {
        throw std::invalid_argument("vocabulary size does not match embedding rows");
    }
    with_output(path, [&](std::ostream& out) {
        detail::write_magic(out, "TCTE");
        detail::write_pod<std::uint32_t>(out, embeddings_version);
        detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(model.vocab.size()));
        detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(model.table.width()));
        for (auto const& tok : model.vocab.tokens()) {
            detail::write_string(out, tok);
        }
        for (double x : model.table.table.values()) {
            detail::write_f32(out, x);
        }
    });
}

EmbeddingModel load_embeddings(std::filesystem::path const& path)
{
    auto in = open_input(path);
    detail::expect_magic(in, "TCTE");
    auto version = detail::read_pod<std::uint32_t>(in, "version");
    if (version != embeddings_version) {
        throw data_error("unsupported embeddings version " + std::to_string(version));
    }
    auto vocab_size = detail::read_pod<std::uint32_t>(in, "vocab_size");
    auto width = detail::read_pod<std::uint32_t>(in, "width");
    if (vocab_size == 0 || width == 0) {
        throw data_error("empty embedding table in " + path.string());
    }
    EmbeddingModel model;
    for (std::uint32_t i = 0; i < vocab_size; ++i) {
        auto tok = detail::read_string(in);
        if (i == 0) {
            if (tok != Vocabulary::unk_token) {
                throw data_error("embedding file must start with the UNK token");
            }
            continue;
        }
        if (model.vocab.add(tok) != i) {
            throw data_error("duplicate token \"" + tok + "\" in " + path.string());
        }
    }
    model.table.table = Matrix(vocab_size, width);
    for (double& x : model.table.table.values()) {
        x = detail::read_pod<float>(in, "embedding values");
    }
    return model;
}

void save_projection(std::filesystem::path const& path, Projection const& proj)
{
    with_output(path, [&](std::ostream& out) {
        detail::write_magic(out, "TCTP");
        detail::write_pod<std::uint32_t>(out, projection_version);
        detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(proj.input_dim()));
        detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(proj.output_dim()));
        for (double x : proj.weights.values()) {
            detail::write_f32(out, x);
        }
    });
}

Projection load_projection(std::filesystem::path const& path)
{
    auto in = open_input(path);
    detail::expect_magic(in, "TCTP");
    auto version = detail::read_pod<std::uint32_t>(in, "version");
    if (version != projection_version) {
        throw data_error("unsupported projection version " + std::to_string(version));
    }
    auto t = detail::read_pod<std::uint32_t>(in, "input dim");
    auto h = detail::read_pod<std::uint32_t>(in, "output dim");
    Projection proj{Matrix(t, h)};
    for (double& x : proj.weights.values()) {
        x = detail::read_pod<float>(in, "projection weights");
        if (!std::isfinite(x)) {
            throw data_error("non-finite projection weight in " + path.string());
        }
    }
    return proj;
}

}  // namespace tct
