#include "tct/distill.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "tct/error.hpp"
#include "tct/scoring.hpp"

namespace tct {

namespace {

std::vector<std::size_t> all_indices(std::size_t n)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

// The hard-label term always contrasts the positive with the query's own
// BM25 negative, whatever the distillation mode.
std::vector<std::size_t> hard_label_candidates(ScoredBatch const& batch, std::size_t i)
{
    return {batch.positive[i], batch.negative[i]};
}

std::vector<std::size_t> soft_label_candidates(ScoredBatch const& batch, std::size_t i, DistillMode mode)
{
    switch (mode) {
    case DistillMode::triplet:
        return {batch.positive[i], batch.negative[i]};
    case DistillMode::in_batch:
        return all_indices(batch.passages.size());
    case DistillMode::none:
        break;
    }
    return hard_label_candidates(batch, i);
}

Vector gather(Matrix const& m, std::size_t row, std::vector<std::size_t> const& cols)
{
    Vector out;
    out.reserve(cols.size());
    for (auto c : cols) {
        out.push_back(m(row, c));
    }
    return out;
}

// Numerically stable log of softmax(scores / temperature).
Vector log_softmax(Vector const& scores, double temperature)
{
    double shift = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) {
        sum += std::exp((s - shift) / temperature);
    }
    double log_sum = std::log(sum);
    Vector out(scores.size());
    for (std::size_t c = 0; c < scores.size(); ++c) {
        out[c] = (scores[c] - shift) / temperature - log_sum;
    }
    return out;
}

std::size_t position_of(std::vector<std::size_t> const& pool, std::size_t value)
{
    auto it = std::find(pool.begin(), pool.end(), value);
    if (it == pool.end()) {
        throw std::logic_error("positive passage absent from candidate pool");
    }
    return static_cast<std::size_t>(it - pool.begin());
}

std::vector<TokenId> without_punctuation(std::span<const TokenId> ids, Vocabulary const& vocab)
{
    std::vector<TokenId> kept;
    for (auto id : ids) {
        if (!vocab.is_punctuation(id)) {
            kept.push_back(id);
        }
    }
    return kept;
}

// Adds coef * d maxsim(q, d) / dW into grad. Mirrors encode_teacher_query /
// encode_teacher_doc: rows are Normalize(e W), doc punctuation dropped.
double accumulate_maxsim_gradient(
    EmbeddingModel const& model,
    std::span<const TokenId> query,
    std::span<const TokenId> doc,
    Projection const& proj,
    double coef,
    Matrix* grad)
{
    auto const& table = model.table;
    auto doc_kept = without_punctuation(doc, model.vocab);
    if (doc_kept.empty()) {
        throw std::invalid_argument("teacher gradient: every document token is punctuation");
    }
    auto raw_rows = [&](std::span<const TokenId> ids) {
        Matrix raw(ids.size(), proj.output_dim());
        Vector norms(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto v = vec_mat(table.table.row(ids[i]), proj.weights);
            norms[i] = l2_norm(v);
            if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) {
                throw std::domain_error(
                    "teacher gradient: zero or non-finite row norm at position " + std::to_string(i));
            }
            for (std::size_t j = 0; j < v.size(); ++j) {
                raw(i, j) = v[j] / norms[i];
            }
        }
        return std::pair{std::move(raw), std::move(norms)};
    };
    auto [qu, qn] = raw_rows(query);
    auto [dv, dn] = raw_rows(doc_kept);

    std::size_t h = proj.output_dim();
    double score = 0.0;
    Matrix doc_row_grad(doc_kept.size(), h);
    Vector q_grad(h);
    for (std::size_t i = 0; i < query.size(); ++i) {
        auto u = qu.row(i);
        std::size_t best = 0;
        double best_score = dot(u, dv.row(0));
        for (std::size_t j = 1; j < doc_kept.size(); ++j) {
            double s = dot(u, dv.row(j));
            if (s > best_score) {
                best_score = s;
                best = j;
            }
        }
        score += best_score;
        if (grad == nullptr) {
            continue;
        }
        auto v = dv.row(best);
        // d<u, v>/da = (v - <u, v> u) / |a|
        for (std::size_t k = 0; k < h; ++k) {
            q_grad[k] = (v[k] - best_score * u[k]) / qn[i];
        }
        auto e = table.table.row(query[i]);
        for (std::size_t r = 0; r < e.size(); ++r) {
            auto g = grad->row(r);
            for (std::size_t k = 0; k < h; ++k) {
                g[k] += coef * e[r] * q_grad[k];
            }
        }
        auto dg = doc_row_grad.row(best);
        for (std::size_t k = 0; k < h; ++k) {
            dg[k] += (u[k] - best_score * v[k]) / dn[best];
        }
    }
    if (grad != nullptr) {
        for (std::size_t j = 0; j < doc_kept.size(); ++j) {
            auto dg = doc_row_grad.row(j);
            auto e = table.table.row(doc_kept[j]);
            for (std::size_t r = 0; r < e.size(); ++r) {
                auto g = grad->row(r);
                for (std::size_t k = 0; k < h; ++k) {
                    g[k] += coef * e[r] * dg[k];
                }
            }
        }
    }
    return score;
}

void check_finite(double value, std::size_t step, char const* what)
{
    if (!std::isfinite(value)) {
        throw numerical_error(
            std::string(what) + " diverged: non-finite loss at step " + std::to_string(step));
    }
}

void apply_update(Projection& proj, Matrix const& grad, double learning_rate, std::size_t step)
{
    auto& w = proj.weights.values();
    auto const& g = grad.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] -= learning_rate * g[i];
    }
    if (!all_finite(w)) {
        throw numerical_error("non-finite weights after update at step " + std::to_string(step));
    }
}

std::vector<TrainingTriplet> select(std::span<const TrainingTriplet> triplets, std::vector<std::size_t> const& idx)
{
    std::vector<TrainingTriplet> out;
    out.reserve(idx.size());
    for (auto i : idx) {
        out.push_back(triplets[i]);
    }
    return out;
}

void validate_config(DistillConfig const& config, std::size_t num_triplets)
{
    if (num_triplets == 0) {
        throw std::invalid_argument("no training triplets");
    }
    if (config.batch_size == 0) {
        throw std::invalid_argument("batch size must be positive");
    }
    if (!(config.gamma >= 0.0 && config.gamma <= 1.0)) {
        throw std::invalid_argument("gamma must lie in [0, 1]");
    }
    if (!(config.tau > 0.0)) {
        throw std::invalid_argument("tau must be positive");
    }
    if (!(config.learning_rate > 0.0)) {
        throw std::invalid_argument("learning rate must be positive");
    }
    if (config.mode == DistillMode::in_batch && config.batch_size < 2) {
        throw std::invalid_argument("in-batch distillation needs a batch of at least 2 triplets");
    }
}

}  // namespace

std::string_view to_string(DistillMode mode)
{
    switch (mode) {
    case DistillMode::none:
        return "none";
    case DistillMode::triplet:
        return "triplet";
    case DistillMode::in_batch:
        return "in_batch";
    }
    return "unknown";
}

DistillMode parse_distill_mode(std::string_view name)
{
    if (name == "none") {
        return DistillMode::none;
    }
    if (name == "triplet") {
        return DistillMode::triplet;
    }
    if (name == "in_batch") {
        return DistillMode::in_batch;
    }
    throw std::invalid_argument("unknown distillation mode \"" + std::string(name) + "\"");
}

std::vector<TrainingTriplet> tokenize_triplets(
    std::span<const TextTriplet> triplets,
    Vocabulary const& vocab,
    std::size_t query_max_len,
    std::size_t passage_max_len)
{
    std::vector<TrainingTriplet> out;
    out.reserve(triplets.size());
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        auto const& t = triplets[i];
        try {
            TrainingTriplet tok{
                tokenize(t.query, vocab, query_max_len),
                tokenize(t.positive, vocab, passage_max_len),
                tokenize(t.negative, vocab, passage_max_len)};
            if (tok.positive == tok.negative) {
                throw data_error("positive and negative passages are identical");
            }
            out.push_back(std::move(tok));
        } catch (std::invalid_argument const& e) {
            throw data_error("triplet " + std::to_string(i) + ": " + e.what());
        } catch (data_error const& e) {
            throw data_error("triplet " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

std::vector<std::size_t> ScoredBatch::negative_set(std::size_t query) const
{
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < passages.size(); ++j) {
        if (j != positive.at(query)) {
            out.push_back(j);
        }
    }
    return out;
}

ScoredBatch build_batch(
    std::span<const TrainingTriplet> triplets,
    EmbeddingModel const& model,
    Projection const& teacher,
    Projection const& student,
    DistillMode mode)
{
    if (triplets.empty()) {
        throw std::invalid_argument("build_batch: empty batch");
    }
    if (mode == DistillMode::in_batch && triplets.size() < 2) {
        throw std::invalid_argument("build_batch: in-batch mode needs at least 2 triplets");
    }

    ScoredBatch batch;
    std::map<std::vector<TokenId>, std::size_t> seen;
    std::size_t duplicates = 0;
    auto intern = [&](std::vector<TokenId> const& ids) {
        auto [it, inserted] = seen.emplace(ids, batch.passages.size());
        if (inserted) {
            batch.passages.push_back(ids);
        } else {
            ++duplicates;
        }
        return it->second;
    };
    for (auto const& t : triplets) {
        if (t.query.empty() || t.positive.empty() || t.negative.empty()) {
            throw std::invalid_argument("build_batch: triplet with an empty sequence");
        }
        batch.positive.push_back(intern(t.positive));
        batch.negative.push_back(intern(t.negative));
        if (batch.positive.back() == batch.negative.back()) {
            throw std::invalid_argument("build_batch: positive and negative passages are identical");
        }
    }
    if (duplicates > 0) {
        spdlog::debug("build_batch: merged {} duplicate passages into the candidate pool", duplicates);
    }

    std::size_t nq = triplets.size();
    std::size_t np = batch.passages.size();

    batch.query_means = Matrix(0, 0);
    batch.passage_means = Matrix(0, 0);
    batch.query_pooled = Matrix(0, 0);
    batch.passage_pooled = Matrix(0, 0);
    for (auto const& t : triplets) {
        auto mean = mean_embedding(model.table, t.query);
        batch.query_pooled.append_row(vec_mat(mean, student.weights));
        batch.query_means.append_row(mean);
    }
    for (auto const& p : batch.passages) {
        auto mean = mean_embedding(model.table, p);
        batch.passage_pooled.append_row(vec_mat(mean, student.weights));
        batch.passage_means.append_row(mean);
    }

    std::vector<Matrix> teacher_docs;
    teacher_docs.reserve(np);
    for (auto const& p : batch.passages) {
        teacher_docs.push_back(encode_teacher_doc(model.table, p, teacher, model.vocab).token_vectors);
    }

    batch.teacher_scores = Matrix(nq, np);
    batch.student_scores = Matrix(nq, np);
    for (std::size_t i = 0; i < nq; ++i) {
        auto q = encode_teacher_query(model.table, triplets[i].query, teacher).token_vectors;
        for (std::size_t j = 0; j < np; ++j) {
            batch.teacher_scores(i, j) = maxsim(q, teacher_docs[j]);
            batch.student_scores(i, j) = dot(batch.query_pooled.row(i), batch.passage_pooled.row(j));
        }
    }
    return batch;
}

std::vector<QueryDistributions> distributions(ScoredBatch const& batch, DistillConfig const& config)
{
    std::vector<QueryDistributions> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        QueryDistributions d;
        d.pool = soft_label_candidates(batch, i, config.mode);
        d.student = softmax(gather(batch.student_scores, i, d.pool), 1.0);
        d.teacher = softmax(gather(batch.teacher_scores, i, d.pool), config.tau);
        out.push_back(std::move(d));
    }
    return out;
}

LossReport loss(ScoredBatch const& batch, DistillConfig const& config)
{
    LossReport report;
    report.per_query = distributions(batch, config);
    double n = static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto pool = hard_label_candidates(batch, i);
        auto log_p = log_softmax(gather(batch.student_scores, i, pool), 1.0);
        report.ce_term += -log_p[position_of(pool, batch.positive[i])] / n;
        if (config.mode != DistillMode::none) {
            auto const& d = report.per_query[i];
            auto log_student = log_softmax(gather(batch.student_scores, i, d.pool), 1.0);
            auto log_teacher = log_softmax(gather(batch.teacher_scores, i, d.pool), config.tau);
            double kl = 0.0;
            for (std::size_t c = 0; c < d.pool.size(); ++c) {
                if (d.teacher[c] > 0.0) {
                    kl += d.teacher[c] * (log_teacher[c] - log_student[c]);
                }
            }
            report.kl_term += std::max(kl, 0.0) / n;
        }
    }
    double g = config.effective_gamma();
    report.total = g * report.ce_term + (1.0 - g) * report.kl_term;
    return report;
}

Matrix gradient(ScoredBatch const& batch, DistillConfig const& config)
{
    std::size_t nq = batch.size();
    std::size_t np = batch.passages.size();
    double n = static_cast<double>(nq);
    double g = config.effective_gamma();

    // dL / d student_scores
    Matrix ds(nq, np);
    auto dists = distributions(batch, config);
    for (std::size_t i = 0; i < nq; ++i) {
        if (g > 0.0) {
            auto pool = hard_label_candidates(batch, i);
            auto p = softmax(gather(batch.student_scores, i, pool), 1.0);
            for (std::size_t c = 0; c < pool.size(); ++c) {
                double target = pool[c] == batch.positive[i] ? 1.0 : 0.0;
                ds(i, pool[c]) += g * (p[c] - target) / n;
            }
        }
        if (config.mode != DistillMode::none && g < 1.0) {
            auto const& d = dists[i];
            for (std::size_t c = 0; c < d.pool.size(); ++c) {
                ds(i, d.pool[c]) += (1.0 - g) * (d.student[c] - d.teacher[c]) / n;
            }
        }
    }

    // score(i, j) = qbar_i^T W W^T dbar_j, so
    // dL/dW = sum_ij ds_ij (qbar_i pooled_j^T + dbar_j pooled_i^T)
    std::size_t t = batch.query_means.cols();
    std::size_t h = batch.query_pooled.cols();
    Matrix grad(t, h);
    for (std::size_t i = 0; i < nq; ++i) {
        Vector acc_q(h, 0.0);  // sum_j ds_ij pooled_j
        for (std::size_t j = 0; j < np; ++j) {
            double w = ds(i, j);
            if (w == 0.0) {
                continue;
            }
            auto pj = batch.passage_pooled.row(j);
            for (std::size_t k = 0; k < h; ++k) {
                acc_q[k] += w * pj[k];
            }
        }
        auto qm = batch.query_means.row(i);
        for (std::size_t r = 0; r < t; ++r) {
            auto gr = grad.row(r);
            for (std::size_t k = 0; k < h; ++k) {
                gr[k] += qm[r] * acc_q[k];
            }
        }
    }
    for (std::size_t j = 0; j < np; ++j) {
        Vector acc_d(h, 0.0);  // sum_i ds_ij pooled_i
        for (std::size_t i = 0; i < nq; ++i) {
            double w = ds(i, j);
            if (w == 0.0) {
                continue;
            }
            auto pi = batch.query_pooled.row(i);
            for (std::size_t k = 0; k < h; ++k) {
                acc_d[k] += w * pi[k];
            }
        }
        auto dm = batch.passage_means.row(j);
        for (std::size_t r = 0; r < t; ++r) {
            auto gr = grad.row(r);
            for (std::size_t k = 0; k < h; ++k) {
                gr[k] += dm[r] * acc_d[k];
            }
        }
    }
    return grad;
}

namespace {

double teacher_objective(
    std::span<const TrainingTriplet> triplets,
    EmbeddingModel const& model,
    Projection const& teacher,
    Matrix* grad)
{
    if (triplets.empty()) {
        throw std::invalid_argument("teacher objective: empty batch");
    }
    double n = static_cast<double>(triplets.size());
    double total = 0.0;
    for (auto const& t : triplets) {
        double sp = accumulate_maxsim_gradient(model, t.query, t.positive, teacher, 0.0, nullptr);
        double sn = accumulate_maxsim_gradient(model, t.query, t.negative, teacher, 0.0, nullptr);
        // -log softmax([sp, sn])[0] = softplus(sn - sp)
        double margin = sn - sp;
        double l = margin > 0 ? margin + std::log1p(std::exp(-margin)) : std::log1p(std::exp(margin));
        total += l / n;
        if (grad != nullptr) {
            double p_neg = 1.0 / (1.0 + std::exp(-margin));
            accumulate_maxsim_gradient(model, t.query, t.positive, teacher, -p_neg / n, grad);
            accumulate_maxsim_gradient(model, t.query, t.negative, teacher, p_neg / n, grad);
        }
    }
    return total;
}

}  // namespace

double teacher_loss(
    std::span<const TrainingTriplet> triplets, EmbeddingModel const& model, Projection const& teacher)
{
    return teacher_objective(triplets, model, teacher, nullptr);
}

Matrix teacher_gradient(
    std::span<const TrainingTriplet> triplets, EmbeddingModel const& model, Projection const& teacher)
{
    Matrix grad(teacher.input_dim(), teacher.output_dim());
    teacher_objective(triplets, model, teacher, &grad);
    return grad;
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : m_batch_size(batch_size), m_order(all_indices(n)), m_cursor(n), m_rng(seed)
{
    if (n == 0 || batch_size == 0) {
        throw std::invalid_argument("BatchSampler: empty population or batch");
    }
}

std::vector<std::size_t> BatchSampler::next()
{
    std::vector<std::size_t> out;
    out.reserve(m_batch_size);
    while (out.size() < m_batch_size) {
        if (m_cursor == m_order.size()) {
            std::shuffle(m_order.begin(), m_order.end(), m_rng);
            m_cursor = 0;
        }
        out.push_back(m_order[m_cursor++]);
    }
    return out;
}

Projection train_teacher(
    std::span<const TrainingTriplet> triplets,
    EmbeddingModel const& model,
    Projection const& init,
    DistillConfig const& config,
    StepCallback const& on_step)
{
    validate_config(config, triplets.size());
    Projection teacher = init;
    BatchSampler sampler(triplets.size(), config.batch_size, config.seed);
    for (std::size_t step = 0; step < config.steps; ++step) {
        auto batch = select(triplets, sampler.next());
        Matrix grad(teacher.input_dim(), teacher.output_dim());
        double l = 0.0;
        try {
            l = teacher_objective(batch, model, teacher, &grad);
        } catch (std::domain_error const& e) {
            throw numerical_error("teacher training diverged at step " + std::to_string(step) + ": " + e.what());
        }
        check_finite(l, step, "teacher training");
        if (on_step) {
            on_step({step, l, l, 0.0});
        }
        apply_update(teacher, grad, config.learning_rate, step);
    }
    return teacher;
}

Projection distill_student(
    std::span<const TrainingTriplet> triplets,
    EmbeddingModel const& model,
    Projection const& teacher,
    DistillConfig const& config,
    StepCallback const& on_step)
{
    validate_config(config, triplets.size());
    Projection student = teacher;
    BatchSampler sampler(triplets.size(), config.batch_size, config.seed);
    for (std::size_t step = 0; step < config.steps; ++step) {
        auto batch_triplets = select(triplets, sampler.next());
        auto batch = build_batch(batch_triplets, model, teacher, student, config.mode);
        auto report = loss(batch, config);
        check_finite(report.total, step, "distillation");
        if (on_step) {
            on_step({step, report.total, report.ce_term, report.kl_term});
        }
        apply_update(student, gradient(batch, config), config.learning_rate, step);
    }
    return student;
}

}  // namespace tct
