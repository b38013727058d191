#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tct {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept { return m_rows; }
    std::size_t cols() const noexcept { return m_cols; }
    bool empty() const noexcept { return m_values.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return m_values[r * m_cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return m_values[r * m_cols + c]; }

    std::span<double> row(std::size_t r) { return {m_values.data() + r * m_cols, m_cols}; }
    std::span<const double> row(std::size_t r) const
    {
        return {m_values.data() + r * m_cols, m_cols};
    }

    std::vector<double>& values() noexcept { return m_values; }
    std::vector<double> const& values() const noexcept { return m_values; }

    void append_row(std::span<const double> r);

    friend bool operator==(Matrix const&, Matrix const&) = default;

  private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<double> m_values;
};

double dot(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> v);

/// Returns v / ||v||. Throws std::domain_error on a zero vector.
Vector l2_normalize(std::span<const double> v);

/// Temperature softmax, exp(s_i / tau) / sum_j exp(s_j / tau), with the
/// maximum subtracted before exponentiation.
Vector softmax(std::span<const double> scores, double temperature = 1.0);

/// KL(p_hat || p) in nats, with 0 * ln(0 / x) taken as 0.
double kl_divergence(std::span<const double> p_hat, std::span<const double> p);

/// (rows x k) * (k x cols)
Matrix matmul(Matrix const& a, Matrix const& b);

/// out[j] = sum_i v[i] * m(i, j)
Vector vec_mat(std::span<const double> v, Matrix const& m);

bool all_finite(std::span<const double> v);

}  // namespace tct
