#include "tct/scoring.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace tct {

double maxsim(Matrix const& query_tokens, Matrix const& doc_tokens)
{
    if (query_tokens.rows() == 0 || doc_tokens.rows() == 0) {
        throw std::invalid_argument("maxsim: empty token matrix");
    }
    if (query_tokens.cols() != doc_tokens.cols()) {
        throw std::invalid_argument(
            "maxsim: dimension mismatch (" + std::to_string(query_tokens.cols()) + " vs "
            + std::to_string(doc_tokens.cols()) + ")");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < query_tokens.rows(); ++i) {
        auto q = query_tokens.row(i);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < doc_tokens.rows(); ++j) {
            auto d = doc_tokens.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < q.size(); ++k) {
                s += q[k] * d[k];
            }
            if (s > best) {
                best = s;
            }
        }
        total += best;
    }
    return total;
}

double pool_dot(EncodedText const& query, EncodedText const& doc)
{
    if (!query.pooled || !doc.pooled) {
        throw std::invalid_argument("pool_dot: encoding has no pooled vector");
    }
    return dot(*query.pooled, *doc.pooled);
}

}  // namespace tct
