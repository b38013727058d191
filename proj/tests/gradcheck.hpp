#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "tct/distill.hpp"

namespace tct::test {

inline constexpr double fd_epsilon = 1e-5;

struct GradCheck {
    double max_relative_error = 0.0;
    std::size_t coordinates = 0;
};

/// |a - n| / max(|a|, |n|), with the denominator floored at 1e-6 so that
/// coordinates that are zero in both count by absolute error.
inline double relative_error(double analytic, double numeric)
{
    double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / scale;
}

/// Recomputes the student half of a scored batch for weights `w`, straight
/// from the cached mean embeddings: pooled = mean * W, score = <pooled_q, pooled_d>.
inline void rescore_student(ScoredBatch& batch, Matrix const& w)
{
    auto project = [&](Matrix const& means, Matrix& pooled) {
        pooled = Matrix(means.rows(), w.cols());
        for (std::size_t i = 0; i < means.rows(); ++i) {
            for (std::size_t k = 0; k < w.rows(); ++k) {
                for (std::size_t j = 0; j < w.cols(); ++j) {
                    pooled(i, j) += means(i, k) * w(k, j);
                }
            }
        }
    };
    project(batch.query_means, batch.query_pooled);
    project(batch.passage_means, batch.passage_pooled);
    for (std::size_t i = 0; i < batch.student_scores.rows(); ++i) {
        for (std::size_t j = 0; j < batch.student_scores.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < w.cols(); ++k) {
                s += batch.query_pooled(i, k) * batch.passage_pooled(j, k);
            }
            batch.student_scores(i, j) = s;
        }
    }
}

/// Central differences of loss() over every student weight against gradient().
inline GradCheck check_student_gradient(
    std::span<const TrainingTriplet> triplets,
    EmbeddingModel const& model,
    Projection const& teacher,
    Projection const& student,
    DistillConfig const& config)
{
    auto batch = build_batch(triplets, model, teacher, student, config.mode);
    auto analytic = gradient(batch, config);
    GradCheck result;
    Matrix w = student.weights;
    auto probe = batch;
    for (std::size_t idx = 0; idx < w.values().size(); ++idx) {
        double original = w.values()[idx];
        w.values()[idx] = original + fd_epsilon;
        rescore_student(probe, w);
        double up = loss(probe, config).total;
        w.values()[idx] = original - fd_epsilon;
        rescore_student(probe, w);
        double down = loss(probe, config).total;
        w.values()[idx] = original;
        double numeric = (up - down) / (2.0 * fd_epsilon);
        result.max_relative_error = std::max(result.max_relative_error, relative_error(analytic.values()[idx], numeric));
        ++result.coordinates;
    }
    return result;
}

/// Central differences of teacher_loss() against teacher_gradient().
inline GradCheck check_teacher_gradient(
    std::span<const TrainingTriplet> triplets, EmbeddingModel const& model, Projection const& teacher)
{
    auto analytic = teacher_gradient(triplets, model, teacher);
    GradCheck result;
    Projection probe = teacher;
    for (std::size_t idx = 0; idx < probe.weights.values().size(); ++idx) {
        double original = probe.weights.values()[idx];
        probe.weights.values()[idx] = original + fd_epsilon;
        double up = teacher_loss(triplets, model, probe);
        probe.weights.values()[idx] = original - fd_epsilon;
        double down = teacher_loss(triplets, model, probe);
        probe.weights.values()[idx] = original;
        double numeric = (up - down) / (2.0 * fd_epsilon);
        result.max_relative_error = std::max(result.max_relative_error, relative_error(analytic.values()[idx], numeric));
        ++result.coordinates;
    }
    return result;
}

}  // namespace tct::test
