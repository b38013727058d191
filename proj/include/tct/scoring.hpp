#pragma once

#include "tct/encoder.hpp"
#include "tct/linalg.hpp"

namespace tct {

/// Late-interaction score: for each query row, the best dot product against
/// any document row, summed over query rows.
double maxsim(Matrix const& query_tokens, Matrix const& doc_tokens);

/// Dot product of the two pooled vectors. Throws std::invalid_argument if
/// either encoding carries no pooled vector.
double pool_dot(EncodedText const& query, EncodedText const& doc);

}  // namespace tct
