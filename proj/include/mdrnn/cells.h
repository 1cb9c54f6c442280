#ifndef MDRNN_CELLS_H_
#define MDRNN_CELLS_H_

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mdrnn/linalg.h"
#include "mdrnn/rng.h"

namespace mdrnn {

enum class CellKind { kElman, kJordan, kElmanGru, kJordanGru };

CellKind parse_cell_kind(std::string_view name);
std::string_view cell_name(CellKind kind);
// Jordan-family cells carry the previous output distribution o_{i-1};
// Elman-family cells carry h_{i-1}.
inline bool is_jordan(CellKind k) {
  return k == CellKind::kJordan || k == CellKind::kJordanGru;
}
inline bool is_gru(CellKind k) {
  return k == CellKind::kElmanGru || k == CellKind::kJordanGru;
}

struct CellOptions {
  // Bias vectors on every pre-activation; off by default.
  bool bias = false;
  // tanh instead of the logistic function for the GRU candidate.
  bool tanh_candidate = false;

  bool operator==(const CellOptions&) const = default;
};

// Intermediates of one step; enough to recompute every gradient.
struct StepTape {
  Vector x;
  Vector carry;  // h_{i-1} or o_{i-1}
  Vector prev;   // state mixed by the GRU: h_{i-1}, or t_{i-1} = T o_{i-1}
  Vector reset;  // r_i
  Vector update; // z_i
  Vector gated;  // r_i (.) prev
  Vector candidate;
  Vector h;
};

struct StepGrads {
  Vector dx;
  Vector dcarry;
  Vector dextra;
};

using ParamVisitor = std::function<void(const std::string& name, Matrix& m)>;
using ConstParamVisitor =
    std::function<void(const std::string& name, const Matrix& m)>;

// One of the four recurrent step functions with its parameters.
//
//   Elman:      h = sig(U x + V h_prev)
//   Jordan:     h = sig(U x + V o_prev)
//   Elman GRU:  r = sig(Wr x + Ur h_prev), z = sig(Wz x + Uz h_prev),
//               c = sig(Wh x + Uh (r . h_prev)), h = z . c + (1 - z) . h_prev
//   Jordan GRU: same with h_prev replaced by t = T o_prev
//
// `extra` (length H, may be null) is added to the pre-activation of h for
// Elman/Jordan and to the candidate pre-activation for the GRUs.
class Cell {
 public:
  Cell() = default;
  Cell(CellKind kind, std::size_t input_dim, std::size_t hidden,
       std::size_t outputs, CellOptions options = {});

  // Glorot-uniform weights, zero biases. range > 0 overrides the Glorot
  // range for every matrix.
  void initialize(Rng& rng, double range = 0.0);

  CellKind kind() const { return kind_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t outputs() const { return outputs_; }
  std::size_t carry_dim() const { return is_jordan(kind_) ? outputs_ : hidden_; }
  const CellOptions& options() const { return options_; }

  Vector forward(const Vector& x, const Vector& carry, const Vector* extra,
                 StepTape* tape) const;
  // Accumulates parameter gradients into `grad` (same shapes as *this).
  StepGrads backward(const StepTape& tape, const Vector& dh, Cell& grad) const;

  void for_each_param(const std::string& prefix, const ParamVisitor& f);
  void for_each_param(const std::string& prefix, const ConstParamVisitor& f) const;
  Cell zeros_like() const;

  // Named access, e.g. "U", "Wz", "T".
  Matrix& param(std::string_view name);
  const Matrix& param(std::string_view name) const;

 private:
  const std::vector<std::string>& names() const;

  CellKind kind_ = CellKind::kElman;
  std::size_t input_dim_ = 0;
  std::size_t hidden_ = 0;
  std::size_t outputs_ = 0;
  CellOptions options_;
  std::vector<Matrix> params_;
};

// Softmax output layer o = softmax(W h [+ b]).
struct OutputLayer {
  Matrix weights;
  Matrix bias;  // O x 1, empty when biases are disabled

  OutputLayer() = default;
  OutputLayer(std::size_t outputs, std::size_t hidden, bool with_bias);

  Vector logits(const Vector& h) const;
  Vector forward(const Vector& h) const { return softmax(logits(h)); }
  // Given d(loss)/d(logits), accumulates into grad and returns d/dh.
  Vector backward(const Vector& h, const Vector& dlogits, OutputLayer& grad) const;

  void for_each_param(const std::string& prefix, const ParamVisitor& f);
  void for_each_param(const std::string& prefix, const ConstParamVisitor& f) const;
  OutputLayer zeros_like() const;
};

// d(loss)/d(logits) from d(loss)/d(o) for o = softmax(logits).
Vector softmax_backward(const Vector& o, const Vector& dout);

// Gradient of -ln o[y] with respect to the logits: o - onehot(y).
Vector nll_logit_gradient(const Vector& o, std::size_t y);

}  // namespace mdrnn

#endif  // MDRNN_CELLS_H_
