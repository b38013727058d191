#pragma once

#include <stdexcept>

namespace tct {

/// Malformed or inconsistent input data (files, ids, corpora).
class data_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite value.
class numerical_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace tct
