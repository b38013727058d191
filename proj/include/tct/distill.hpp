#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tct/encoder.hpp"
#include "tct/linalg.hpp"
#include "tct/tsv.hpp"

namespace tct {

/// Which candidates receive teacher soft labels.
///  - none:     no distillation, hard labels only
///  - triplet:  soft labels over the query's own (positive, negative) pair
///  - in_batch: soft labels over every passage in the batch
enum class DistillMode { none, triplet, in_batch };

std::string_view to_string(DistillMode mode);
DistillMode parse_distill_mode(std::string_view name);

struct TrainingTriplet {
    std::vector<TokenId> query;
    std::vector<TokenId> positive;
    std::vector<TokenId> negative;
};

std::vector<TrainingTriplet> tokenize_triplets(
    std::span<const TextTriplet> triplets,
    Vocabulary const& vocab,
    std::size_t query_max_len = default_query_max_len,
    std::size_t passage_max_len = default_passage_max_len);

struct DistillConfig {
    double gamma = 0.1;
    double tau = 0.25;
    DistillMode mode = DistillMode::in_batch;
    double learning_rate = 0.05;
    std::size_t steps = 2000;
    std::size_t batch_size = 8;
    std::uint64_t seed = 42;

    /// Weight of the hard-label term actually applied: 1 when nothing is distilled.
    double effective_gamma() const noexcept { return mode == DistillMode::none ? 1.0 : gamma; }
};

/// One batch scored by both models against the deduplicated passage pool D_B.
struct ScoredBatch {
    std::vector<std::vector<TokenId>> passages;
    std::vector<std::size_t> positive;  ///< index into passages, per query
    std::vector<std::size_t> negative;  ///< index into passages, per query
    Matrix teacher_scores;              ///< |B| x |D_B| MaxSim scores
    Matrix student_scores;              ///< |B| x |D_B| pooled dot products

    // Cached activations for the student gradient.
    Matrix query_means;     ///< |B| x t
    Matrix passage_means;   ///< |D_B| x t
    Matrix query_pooled;    ///< |B| x h
    Matrix passage_pooled;  ///< |D_B| x h

    std::size_t size() const noexcept { return positive.size(); }

    /// Passages other than the query's positive: its own negative plus every
    /// passage contributed by the rest of the batch.
    std::vector<std::size_t> negative_set(std::size_t query) const;
};

ScoredBatch build_batch(
    std::span<const TrainingTriplet> triplets,
    EmbeddingModel const& model,
    Projection const& teacher,
    Projection const& student,
    DistillMode mode);

struct QueryDistributions {
    std::vector<std::size_t> pool;  ///< candidate indices into ScoredBatch::passages
    Vector student;                 ///< P over pool, temperature 1
    Vector teacher;                 ///< P_hat over pool, temperature tau
};

std::vector<QueryDistributions> distributions(ScoredBatch const& batch, DistillConfig const& config);

struct LossReport {
    double total = 0.0;
    double ce_term = 0.0;
    double kl_term = 0.0;
    std::vector<QueryDistributions> per_query;
};

/// total = g * ce + (1 - g) * kl, with g = config.effective_gamma() and both
/// terms averaged over the batch.
LossReport loss(ScoredBatch const& batch, DistillConfig const& config);

/// Gradient of loss() with respect to the student projection weights (t x h).
Matrix gradient(ScoredBatch const& batch, DistillConfig const& config);

// Teacher objective: pairwise softmax cross entropy over (positive, negative)
// MaxSim scores, averaged over the batch.
double teacher_loss(
    std::span<const TrainingTriplet> triplets, EmbeddingModel const& model, Projection const& teacher);

Matrix teacher_gradient(
    std::span<const TrainingTriplet> triplets, EmbeddingModel const& model, Projection const& teacher);

/// Epoch-shuffled mini-batches over [0, n); reshuffles whenever an epoch is exhausted.
class BatchSampler {
  public:
    BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);
    std::vector<std::size_t> next();

  private:
    std::size_t m_batch_size;
    std::vector<std::size_t> m_order;
    std::size_t m_cursor;
    std::mt19937_64 m_rng;
};

struct StepRecord {
    std::size_t step = 0;
    double total = 0.0;
    double ce_term = 0.0;
    double kl_term = 0.0;
};

using StepCallback = std::function<void(StepRecord const&)>;

/// Fine-tunes a MaxSim teacher from `init`. Throws numerical_error on a
/// non-finite loss.
Projection train_teacher(
    std::span<const TrainingTriplet> triplets,
    EmbeddingModel const& model,
    Projection const& init,
    DistillConfig const& config,
    StepCallback const& on_step = {});

/// Distills the frozen teacher into a pooled dot-product student initialized
/// from the teacher weights.
Projection distill_student(
    std::span<const TrainingTriplet> triplets,
    EmbeddingModel const& model,
    Projection const& teacher,
    DistillConfig const& config,
    StepCallback const& on_step = {});

}  // namespace tct
