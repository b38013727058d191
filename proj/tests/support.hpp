#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "tct/distill.hpp"
#include "tct/encoder.hpp"
#include "tct/linalg.hpp"

namespace tct::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (double& x : m.values()) {
        x = normal(rng);
    }
    return m;
}

inline Matrix random_unit_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng)
{
    auto m = random_matrix(rows, cols, rng);
    for (std::size_t i = 0; i < rows; ++i) {
        auto r = m.row(i);
        auto n = l2_normalize(r);
        std::copy(n.begin(), n.end(), r.begin());
    }
    return m;
}

/// Vocabulary of `words` plain words followed by the punctuation tokens ". , ;".
inline EmbeddingModel small_model(std::size_t words, std::size_t width, std::uint64_t seed)
{
    EmbeddingModel model;
    for (std::size_t w = 0; w < words; ++w) {
        model.vocab.add("w" + std::to_string(w));
    }
    for (auto p : {".", ",", ";"}) {
        model.vocab.add(p);
    }
    model.table = EmbeddingTable::random(model.vocab.size(), width, seed);
    return model;
}

inline std::vector<TokenId> random_ids(EmbeddingModel const& model, std::size_t len, std::mt19937_64& rng, bool punctuation)
{
    std::uniform_int_distribution<TokenId> pick(1, static_cast<TokenId>(model.vocab.size() - 1));
    std::vector<TokenId> ids;
    while (ids.size() < len) {
        auto id = pick(rng);
        if (!punctuation && model.vocab.is_punctuation(id)) {
            continue;
        }
        ids.push_back(id);
    }
    // Guarantees at least one non-punctuation token.
    if (model.vocab.is_punctuation(ids.front())) {
        ids.front() = 1;
    }
    return ids;
}

/// Triplets with distinct positive and negative passages; `shared` makes
/// consecutive triplets reuse a passage to exercise pool deduplication.
inline std::vector<TrainingTriplet> random_triplets(
    EmbeddingModel const& model, std::size_t n, std::mt19937_64& rng, bool shared = false)
{
    std::uniform_int_distribution<std::size_t> qlen(1, 6);
    std::uniform_int_distribution<std::size_t> plen(2, 12);
    std::vector<TrainingTriplet> out;
    for (std::size_t i = 0; i < n; ++i) {
        TrainingTriplet t;
        t.query = random_ids(model, qlen(rng), rng, false);
        t.positive = random_ids(model, plen(rng), rng, true);
        do {
            t.negative = random_ids(model, plen(rng), rng, true);
        } while (t.negative == t.positive);
        if (shared && i > 0 && out.back().positive != t.positive) {
            t.negative = out.back().positive;
        }
        out.push_back(std::move(t));
    }
    return out;
}

inline std::string read_file(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh scratch directory under the system temp path, removed on destruction.
class TempDir {
  public:
    explicit TempDir(std::string const& name)
        : m_path(std::filesystem::temp_directory_path() / ("tct_test_" + name + "_" + std::to_string(::getpid())))
    {
        std::filesystem::remove_all(m_path);
        std::filesystem::create_directories(m_path);
    }
    ~TempDir() { std::filesystem::remove_all(m_path); }
    TempDir(TempDir const&) = delete;
    TempDir& operator=(TempDir const&) = delete;

    std::filesystem::path const& path() const noexcept { return m_path; }
    std::filesystem::path operator/(std::string const& name) const { return m_path / name; }

  private:
    std::filesystem::path m_path;
};

}  // namespace tct::test
