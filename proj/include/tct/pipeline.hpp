#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "tct/dense_index.hpp"
#include "tct/distill.hpp"
#include "tct/encoder.hpp"
#include "tct/eval.hpp"
#include "tct/run.hpp"
#include "tct/sparse_index.hpp"
#include "tct/tsv.hpp"

namespace tct {

/// Glue shared by the command-line tool and the end-to-end tests.

struct ModelConfig {
    std::size_t embedding_dim = 64;
    std::size_t projection_dim = 32;
    std::size_t query_max_len = default_query_max_len;
    std::size_t passage_max_len = default_passage_max_len;
    std::uint64_t seed = 42;
};

/// Vocabulary over the corpus followed by the triplet texts, plus a seeded
/// frozen embedding table.
EmbeddingModel make_model(std::span<const Passage> corpus, std::span<const TextTriplet> triples, ModelConfig const& config);

/// Initial teacher projection for a model.
Projection initial_projection(ModelConfig const& config);

/// Step size for the pooled student. Mean-pooled rows of the 1/sqrt(t)-scaled
/// table are short, so its gradients are several hundred times smaller than
/// the teacher's.
inline constexpr double default_student_learning_rate = 20.0;

DistillConfig teacher_training_config(std::uint64_t seed);
DistillConfig student_training_config(DistillMode mode, std::uint64_t seed);

/// Pooled student retrieval for every query.
Run dense_retrieve(
    DenseIndex const& index,
    std::span<const Passage> queries,
    EmbeddingModel const& model,
    Projection const& student,
    std::size_t k,
    std::size_t query_max_len = default_query_max_len);

Run sparse_retrieve(SparseIndex const& index, std::span<const Passage> queries, std::size_t k);

/// Re-scores each query's candidates with teacher MaxSim.
Run maxsim_rerank(
    Run const& candidates,
    std::span<const Passage> queries,
    TokenizedCorpus const& corpus,
    EmbeddingModel const& model,
    Projection const& teacher,
    std::size_t query_max_len = default_query_max_len);

/// Re-scores each query's candidates with the pooled dot product.
Run pooled_rerank(
    Run const& candidates,
    std::span<const Passage> queries,
    DenseIndex const& index,
    EmbeddingModel const& model,
    Projection const& student,
    std::size_t query_max_len = default_query_max_len);

}  // namespace tct
