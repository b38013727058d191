#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tct/linalg.hpp"

namespace tct {

using TokenId = std::uint32_t;

inline constexpr std::size_t default_query_max_len = 32;
inline constexpr std::size_t default_passage_max_len = 150;

/// Lowercases ASCII letters and splits on whitespace. Every ASCII punctuation
/// character becomes a token of its own.
std::vector<std::string> split_tokens(std::string_view text);

bool is_punctuation_token(std::string_view token);

class Vocabulary {
  public:
    static constexpr TokenId unk_id = 0;
    static constexpr std::string_view unk_token = "[UNK]";

    Vocabulary();

    /// Builds a vocabulary from raw texts; ids follow first appearance.
    static Vocabulary from_texts(std::span<const std::string> texts);

    /// Adds the token if missing and returns its id.
    TokenId add(std::string_view token);

    TokenId id(std::string_view token) const;
    std::string const& token(TokenId id) const { return m_tokens.at(id); }
    std::size_t size() const noexcept { return m_tokens.size(); }
    bool is_punctuation(TokenId id) const;
    std::vector<std::string> const& tokens() const noexcept { return m_tokens; }

  private:
    std::vector<std::string> m_tokens;
    std::unordered_map<std::string, TokenId> m_ids;
    std::vector<bool> m_punctuation;
};

/// Token ids for `text`, unknown tokens mapped to Vocabulary::unk_id and the
/// sequence truncated to `max_len`. Throws std::invalid_argument when the text
/// has no tokens.
std::vector<TokenId> tokenize(std::string_view text, Vocabulary const& vocab, std::size_t max_len);

/// Frozen token-embedding table, one row per vocabulary entry.
struct EmbeddingTable {
    Matrix table;

    std::size_t width() const noexcept { return table.cols(); }
    std::size_t size() const noexcept { return table.rows(); }

    /// Seeded N(0, 1/t) entries, rounded to f32 so that the persisted table
    /// reloads bit-exactly.
    static EmbeddingTable random(std::size_t vocab_size, std::size_t width, std::uint64_t seed);

    friend bool operator==(EmbeddingTable const&, EmbeddingTable const&) = default;
};

/// Shared per-token linear map (t x h): a width-one convolution.
struct Projection {
    Matrix weights;

    std::size_t input_dim() const noexcept { return weights.rows(); }
    std::size_t output_dim() const noexcept { return weights.cols(); }

    static Projection random(std::size_t input_dim, std::size_t output_dim, std::uint64_t seed);

    friend bool operator==(Projection const&, Projection const&) = default;
};

struct EncodedText {
    Matrix token_vectors;
    std::optional<Vector> pooled;
    std::size_t source_len = 0;
};

/// Rows of Normalize(E * W), one per token.
EncodedText encode_teacher_query(
    EmbeddingTable const& table, std::span<const TokenId> ids, Projection const& proj);

/// As encode_teacher_query, with punctuation positions removed.
EncodedText encode_teacher_doc(
    EmbeddingTable const& table,
    std::span<const TokenId> ids,
    Projection const& proj,
    Vocabulary const& vocab);

/// Average-pooled E * W; no normalization and no filtering.
EncodedText encode_pooled(
    EmbeddingTable const& table, std::span<const TokenId> ids, Projection const& proj);

/// Column mean of the embedding rows of `ids` (the pooled input before projection).
Vector mean_embedding(EmbeddingTable const& table, std::span<const TokenId> ids);

struct EmbeddingModel {
    Vocabulary vocab;
    EmbeddingTable table;
};

void save_embeddings(std::filesystem::path const& path, EmbeddingModel const& model);
EmbeddingModel load_embeddings(std::filesystem::path const& path);

void save_projection(std::filesystem::path const& path, Projection const& proj);
Projection load_projection(std::filesystem::path const& path);

/// Rounds every weight to f32 precision, matching what a save/load cycle yields.
void round_to_f32(Matrix& m);

}  // namespace tct
