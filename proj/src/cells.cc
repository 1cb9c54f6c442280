#include "mdrnn/cells.h"

#include <cmath>

#include "mdrnn/errors.h"

namespace mdrnn {
namespace {

// Parameter slots. GRU layouts share the first six.
enum : std::size_t { kU = 0, kV = 1, kB = 2 };
enum : std::size_t { kWc = 0, kWz = 1, kWr = 2, kUc = 3, kUz = 4, kUr = 5, kT = 6 };

std::size_t gru_bias_base(CellKind k) { return k == CellKind::kJordanGru ? 7 : 6; }

void check_len(const Vector& v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) +
                         ", got " + std::to_string(v.size()));
  }
}

void add_bias(Vector& pre, const Matrix& b) {
  for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += b.data()[i];
}

void accumulate_bias(Matrix& gb, const Vector& d) {
  for (std::size_t i = 0; i < d.size(); ++i) gb.data()[i] += d[i];
}

}  // namespace

CellKind parse_cell_kind(std::string_view name) {
  const std::string n = [&] {
    std::string s(name);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }();
  if (n == "elman") return CellKind::kElman;
  if (n == "jordan") return CellKind::kJordan;
  if (n == "elman_gru" || n == "elman-gru") return CellKind::kElmanGru;
  if (n == "jordan_gru" || n == "jordan-gru") return CellKind::kJordanGru;
  throw ConfigError("unknown cell '" + std::string(name) +
                    "' (expected elman, jordan, elman_gru, jordan_gru)");
}

std::string_view cell_name(CellKind kind) {
  switch (kind) {
    case CellKind::kElman: return "elman";
    case CellKind::kJordan: return "jordan";
    case CellKind::kElmanGru: return "elman_gru";
    case CellKind::kJordanGru: return "jordan_gru";
  }
  return "?";
}

Cell::Cell(CellKind kind, std::size_t input_dim, std::size_t hidden,
           std::size_t outputs, CellOptions options)
    : kind_(kind),
      input_dim_(input_dim),
      hidden_(hidden),
      outputs_(outputs),
      options_(options) {
  if (hidden == 0) throw DimensionError("cell: hidden size must be positive");
  if (is_jordan(kind) && outputs == 0) {
    throw DimensionError("cell: Jordan cells need a positive output size");
  }
  const std::size_t H = hidden, I = input_dim, C = carry_dim();
  if (!is_gru(kind)) {
    params_ = {Matrix(H, I), Matrix(H, C)};
    if (options.bias) params_.emplace_back(H, 1);
  } else {
    params_ = {Matrix(H, I), Matrix(H, I), Matrix(H, I),
               Matrix(H, H), Matrix(H, H), Matrix(H, H)};
    if (kind == CellKind::kJordanGru) params_.emplace_back(H, outputs);
    if (options.bias) {
      for (int k = 0; k < 3; ++k) params_.emplace_back(H, 1);
    }
  }
}

const std::vector<std::string>& Cell::names() const {
  static const std::vector<std::string> plain = {"U", "V"};
  static const std::vector<std::string> plain_b = {"U", "V", "b"};
  static const std::vector<std::string> egru = {"Wh", "Wz", "Wr", "Uh", "Uz", "Ur"};
  static const std::vector<std::string> egru_b = {"Wh", "Wz", "Wr", "Uh", "Uz",
                                                  "Ur", "bh", "bz", "br"};
  static const std::vector<std::string> jgru = {"Wo", "Wz", "Wr", "Uo",
                                                "Uz", "Ur", "T"};
  static const std::vector<std::string> jgru_b = {"Wo", "Wz", "Wr", "Uo", "Uz",
                                                  "Ur", "T",  "bo", "bz", "br"};
  switch (kind_) {
    case CellKind::kElman:
    case CellKind::kJordan: return options_.bias ? plain_b : plain;
    case CellKind::kElmanGru: return options_.bias ? egru_b : egru;
    case CellKind::kJordanGru: return options_.bias ? jgru_b : jgru;
  }
  return plain;
}

void Cell::initialize(Rng& rng, double range) {
  const auto& n = names();
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Matrix& m = params_[k];
    if (n[k][0] == 'b') {
      m.fill(0.0);
      continue;
    }
    const double r = range > 0 ? range : glorot_range(m.cols(), m.rows());
    m = uniform_init(rng, m.rows(), m.cols(), -r, r);
  }
}

Vector Cell::forward(const Vector& x, const Vector& carry, const Vector* extra,
                     StepTape* tape) const {
  check_len(x, input_dim_, "cell input");
  check_len(carry, carry_dim(), "cell carried state");
  if (extra) check_len(*extra, hidden_, "cell extra input");
  const std::size_t H = hidden_;

  if (!is_gru(kind_)) {
    Vector pre(H);
    matvec_accumulate(params_[kU], x.span(), pre.span());
    matvec_accumulate(params_[kV], carry.span(), pre.span());
    if (options_.bias) add_bias(pre, params_[kB]);
    if (extra) add_in_place(pre, *extra);
    Vector h = sigmoid(pre);
    if (tape) {
      tape->x = x;
      tape->carry = carry;
      tape->h = h;
    }
    return h;
  }

  Vector prev = kind_ == CellKind::kJordanGru ? matvec(params_[kT], carry) : carry;
  const std::size_t bb = gru_bias_base(kind_);

  Vector r_pre(H), z_pre(H), c_pre(H);
  matvec_accumulate(params_[kWr], x.span(), r_pre.span());
  matvec_accumulate(params_[kUr], prev.span(), r_pre.span());
  matvec_accumulate(params_[kWz], x.span(), z_pre.span());
  matvec_accumulate(params_[kUz], prev.span(), z_pre.span());
  if (options_.bias) {
    add_bias(r_pre, params_[bb + 2]);
    add_bias(z_pre, params_[bb + 1]);
  }
  Vector r = sigmoid(r_pre);
  Vector z = sigmoid(z_pre);
  Vector gated = mul(r, prev);
  matvec_accumulate(params_[kWc], x.span(), c_pre.span());
  matvec_accumulate(params_[kUc], gated.span(), c_pre.span());
  if (options_.bias) add_bias(c_pre, params_[bb]);
  if (extra) add_in_place(c_pre, *extra);
  Vector cand(H);
  for (std::size_t i = 0; i < H; ++i) {
    cand[i] = options_.tanh_candidate ? std::tanh(c_pre[i]) : sigmoid(c_pre[i]);
  }
  Vector h(H);
  for (std::size_t i = 0; i < H; ++i) h[i] = z[i] * cand[i] + (1.0 - z[i]) * prev[i];

  if (tape) {
    tape->x = x;
    tape->carry = carry;
    tape->prev = std::move(prev);
    tape->reset = std::move(r);
    tape->update = std::move(z);
    tape->gated = std::move(gated);
    tape->candidate = std::move(cand);
    tape->h = h;
  }
  return h;
}

StepGrads Cell::backward(const StepTape& tape, const Vector& dh, Cell& grad) const {
  check_len(dh, hidden_, "cell upstream gradient");
  if (tape.h.size() != hidden_ || tape.x.size() != input_dim_ ||
      tape.carry.size() != carry_dim() || (is_gru(kind_) && tape.update.empty())) {
    throw DimensionError("cell backward: tape does not belong to this " +
                         std::string(cell_name(kind_)) + " cell");
  }
  if (grad.kind_ != kind_ || grad.params_.size() != params_.size()) {
    throw DimensionError("cell backward: gradient holder has a different layout");
  }
  const std::size_t H = hidden_;
  StepGrads out{Vector(input_dim_), Vector(carry_dim()), Vector(H)};

  if (!is_gru(kind_)) {
    Vector dpre(H);
    for (std::size_t i = 0; i < H; ++i) dpre[i] = dh[i] * tape.h[i] * (1.0 - tape.h[i]);
    add_outer(grad.params_[kU], dpre.span(), tape.x.span());
    add_outer(grad.params_[kV], dpre.span(), tape.carry.span());
    if (options_.bias) accumulate_bias(grad.params_[kB], dpre);
    matvec_transposed_accumulate(params_[kU], dpre.span(), out.dx.span());
    matvec_transposed_accumulate(params_[kV], dpre.span(), out.dcarry.span());
    out.dextra = std::move(dpre);
    return out;
  }

  const Vector& z = tape.update;
  const Vector& r = tape.reset;
  const Vector& c = tape.candidate;
  const Vector& prev = tape.prev;
  const std::size_t bb = gru_bias_base(kind_);

  Vector dprev(H), dc_pre(H), dz_pre(H), dr_pre(H);
  for (std::size_t i = 0; i < H; ++i) {
    dprev[i] = dh[i] * (1.0 - z[i]);
    const double dz = dh[i] * (c[i] - prev[i]);
    dz_pre[i] = dz * z[i] * (1.0 - z[i]);
    const double dc = dh[i] * z[i];
    dc_pre[i] = options_.tanh_candidate ? dc * (1.0 - c[i] * c[i]) : dc * c[i] * (1.0 - c[i]);
  }
  Vector dgated(H);
  matvec_transposed_accumulate(params_[kUc], dc_pre.span(), dgated.span());
  for (std::size_t i = 0; i < H; ++i) {
    dr_pre[i] = dgated[i] * prev[i] * r[i] * (1.0 - r[i]);
    dprev[i] += dgated[i] * r[i];
  }

  add_outer(grad.params_[kWc], dc_pre.span(), tape.x.span());
  add_outer(grad.params_[kUc], dc_pre.span(), tape.gated.span());
  add_outer(grad.params_[kWz], dz_pre.span(), tape.x.span());
  add_outer(grad.params_[kUz], dz_pre.span(), prev.span());
  add_outer(grad.params_[kWr], dr_pre.span(), tape.x.span());
  add_outer(grad.params_[kUr], dr_pre.span(), prev.span());
  if (options_.bias) {
    accumulate_bias(grad.params_[bb], dc_pre);
    accumulate_bias(grad.params_[bb + 1], dz_pre);
    accumulate_bias(grad.params_[bb + 2], dr_pre);
  }

  matvec_transposed_accumulate(params_[kUz], dz_pre.span(), dprev.span());
  matvec_transposed_accumulate(params_[kUr], dr_pre.span(), dprev.span());
  matvec_transposed_accumulate(params_[kWc], dc_pre.span(), out.dx.span());
  matvec_transposed_accumulate(params_[kWz], dz_pre.span(), out.dx.span());
  matvec_transposed_accumulate(params_[kWr], dr_pre.span(), out.dx.span());

  if (kind_ == CellKind::kJordanGru) {
    add_outer(grad.params_[kT], dprev.span(), tape.carry.span());
    matvec_transposed_accumulate(params_[kT], dprev.span(), out.dcarry.span());
  } else {
    out.dcarry = std::move(dprev);
  }
  out.dextra = std::move(dc_pre);
  return out;
}

void Cell::for_each_param(const std::string& prefix, const ParamVisitor& f) {
  const auto& n = names();
  for (std::size_t k = 0; k < params_.size(); ++k) f(prefix + n[k], params_[k]);
}

void Cell::for_each_param(const std::string& prefix,
                          const ConstParamVisitor& f) const {
  const auto& n = names();
  for (std::size_t k = 0; k < params_.size(); ++k) f(prefix + n[k], params_[k]);
}

Cell Cell::zeros_like() const {
  Cell c = *this;
  for (auto& m : c.params_) m.fill(0.0);
  return c;
}

Matrix& Cell::param(std::string_view name) {
  const auto& n = names();
  for (std::size_t k = 0; k < n.size(); ++k) {
    if (n[k] == name) return params_[k];
  }
  throw ConfigError("cell " + std::string(cell_name(kind_)) + " has no parameter '" +
                    std::string(name) + "'");
}

const Matrix& Cell::param(std::string_view name) const {
  return const_cast<Cell*>(this)->param(name);
}

OutputLayer::OutputLayer(std::size_t outputs, std::size_t hidden, bool with_bias)
    : weights(outputs, hidden) {
  if (with_bias) bias = Matrix(outputs, 1);
}

Vector OutputLayer::logits(const Vector& h) const {
  Vector z = matvec(weights, h);
  if (!bias.empty()) add_bias(z, bias);
  return z;
}

Vector OutputLayer::backward(const Vector& h, const Vector& dlogits,
                             OutputLayer& grad) const {
  add_outer(grad.weights, dlogits.span(), h.span());
  if (!bias.empty()) accumulate_bias(grad.bias, dlogits);
  return matvec_transposed(weights, dlogits);
}

void OutputLayer::for_each_param(const std::string& prefix, const ParamVisitor& f) {
  f(prefix + "W", weights);
  if (!bias.empty()) f(prefix + "b", bias);
}

void OutputLayer::for_each_param(const std::string& prefix,
                                 const ConstParamVisitor& f) const {
  f(prefix + "W", weights);
  if (!bias.empty()) f(prefix + "b", bias);
}

OutputLayer OutputLayer::zeros_like() const {
  OutputLayer g = *this;
  g.weights.fill(0.0);
  g.bias.fill(0.0);
  return g;
}

Vector softmax_backward(const Vector& o, const Vector& dout) {
  check_len(dout, o.size(), "softmax backward");
  const double inner = dot(o.span(), dout.span());
  Vector dz(o.size());
  for (std::size_t i = 0; i < o.size(); ++i) dz[i] = o[i] * (dout[i] - inner);
  return dz;
}

Vector nll_logit_gradient(const Vector& o, std::size_t y) {
  if (y >= o.size()) {
    throw DimensionError("label index " + std::to_string(y) + " out of range for " +
                         std::to_string(o.size()) + " outputs");
  }
  Vector d = o;
  d[y] -= 1.0;
  return d;
}

}  // namespace mdrnn
