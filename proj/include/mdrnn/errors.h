#ifndef MDRNN_ERRORS_H_
#define MDRNN_ERRORS_H_

#include <stdexcept>
#include <string>

namespace mdrnn {

// Shape disagreement or other misuse of the numeric API.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input files, unknown tags, inconsistent corpora.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite losses or gradients during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration (incompatible architecture choices, bad values).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace mdrnn

#endif  // MDRNN_ERRORS_H_
