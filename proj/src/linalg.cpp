#include "tct/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tct {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : m_rows(rows), m_cols(cols), m_values(rows * cols, fill)
{}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : m_rows(rows), m_cols(cols), m_values(std::move(values))
{
    if (m_values.size() != rows * cols) {
        throw std::invalid_argument(
            "matrix shape " + std::to_string(rows) + "x" + std::to_string(cols)
            + " does not match " + std::to_string(m_values.size()) + " values");
    }
}

void Matrix::append_row(std::span<const double> r)
{
    if (m_rows == 0 && m_cols == 0) {
        m_cols = r.size();
    }
    if (r.size() != m_cols) {
        throw std::invalid_argument(
            "row length " + std::to_string(r.size()) + " != matrix width "
            + std::to_string(m_cols));
    }
    m_values.insert(m_values.end(), r.begin(), r.end());
    ++m_rows;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument(
            "dot: dimension mismatch (" + std::to_string(a.size()) + " vs "
            + std::to_string(b.size()) + ")");
    }
    if (a.empty()) {
        throw std::invalid_argument("dot: empty vectors");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double l2_norm(std::span<const double> v)
{
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

Vector l2_normalize(std::span<const double> v)
{
    double norm = l2_norm(v);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw std::domain_error("l2_normalize: vector has zero or non-finite norm");
    }
    Vector out(v.begin(), v.end());
    for (double& x : out) {
        x /= norm;
    }
    return out;
}

Vector softmax(std::span<const double> scores, double temperature)
{
    if (!(temperature > 0.0)) {
        throw std::invalid_argument(
            "softmax: temperature must be positive, got " + std::to_string(temperature));
    }
    if (scores.empty()) {
        throw std::invalid_argument("softmax: empty score vector");
    }
    double shift = *std::max_element(scores.begin(), scores.end());
    Vector out(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp((scores[i] - shift) / temperature);
        sum += out[i];
    }
    for (double& x : out) {
        x /= sum;
    }
    return out;
}

double kl_divergence(std::span<const double> p_hat, std::span<const double> p)
{
    if (p_hat.size() != p.size()) {
        throw std::invalid_argument(
            "kl_divergence: length mismatch (" + std::to_string(p_hat.size()) + " vs "
            + std::to_string(p.size()) + ")");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p_hat[i] == 0.0) {
            continue;
        }
        if (p[i] == 0.0) {
            throw std::domain_error(
                "kl_divergence: p is zero at index " + std::to_string(i)
                + " where p_hat is positive");
        }
        acc += p_hat[i] * std::log(p_hat[i] / p[i]);
    }
    // Rounding can leave a tiny negative value for identical inputs.
    return std::max(acc, 0.0);
}

Matrix matmul(Matrix const& a, Matrix const& b)
{
    if (a.cols() != b.rows()) {
        throw std::invalid_argument(
            "matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs "
            + std::to_string(b.rows()) + ")");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            auto src = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                dst[j] += aik * src[j];
            }
        }
    }
    return out;
}

Vector vec_mat(std::span<const double> v, Matrix const& m)
{
    if (v.size() != m.rows()) {
        throw std::invalid_argument(
            "vec_mat: vector length " + std::to_string(v.size()) + " != matrix rows "
            + std::to_string(m.rows()));
    }
    Vector out(m.cols(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto src = m.row(i);
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += v[i] * src[j];
        }
    }
    return out;
}

bool all_finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace tct
