#include "mdrnn/network.h"

#include <algorithm>
#include <cmath>

#include "mdrnn/errors.h"

namespace mdrnn {
namespace {

constexpr double kMinProbability = 1e-12;

std::vector<Vector> reversed(std::span<const Vector> xs) {
  return std::vector<Vector>(xs.rbegin(), xs.rend());
}

void check_inputs(const Network& net, std::span<const Vector> xs) {
  if (xs.empty()) throw DimensionError("empty input sequence");
  for (const auto& x : xs) {
    if (x.size() != net.spec().input_dim) {
      throw DimensionError("input vector of length " + std::to_string(x.size()) +
                           ", model expects " + std::to_string(net.spec().input_dim));
    }
  }
}

void accumulate(std::vector<Vector>& dst, std::size_t i, const Vector& src) {
  if (dst[i].empty()) {
    dst[i] = src;
  } else {
    add_in_place(dst[i], src);
  }
}

struct WindowResult {
  double loss = 0.0;
  Vector distribution;
};

double nll(const Vector& o, std::size_t gold) {
  if (gold >= o.size()) {
    throw DimensionError("label index " + std::to_string(gold) + " out of range for " +
                         std::to_string(o.size()) + " outputs");
  }
  return -std::log(std::max(o[gold], kMinProbability));
}

}  // namespace

Architecture parse_architecture(std::string_view name) {
  std::string n(name);
  for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (n == "basic") return Architecture::kBasic;
  if (n == "contextual" || n == "context") return Architecture::kContextual;
  if (n == "bidirectional" || n == "bidirect") return Architecture::kBidirectional;
  if (n == "mesnil") return Architecture::kMesnil;
  throw ConfigError("unknown architecture '" + std::string(name) +
                    "' (expected basic, contextual, bidirectional, mesnil)");
}

std::string_view architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::kBasic: return "basic";
    case Architecture::kContextual: return "contextual";
    case Architecture::kBidirectional: return "bidirectional";
    case Architecture::kMesnil: return "mesnil";
  }
  return "?";
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw ConfigError("input dimension must be positive");
  if (hidden == 0) throw ConfigError("hidden dimension must be positive");
  if (outputs == 0) throw ConfigError("output dimension must be positive");
  if (arch == Architecture::kContextual && is_jordan(encoder)) {
    throw ConfigError("contextual architecture requires an Elman-family encoder "
                      "(elman or elman_gru), got " + std::string(cell_name(encoder)));
  }
}

std::size_t ModelSpec::encoder_state_dim() const {
  return is_jordan(encoder) ? outputs : hidden;
}

RecurrentLayer::RecurrentLayer(CellKind kind, std::size_t input_dim,
                               std::size_t hidden, std::size_t outputs,
                               bool with_output, CellOptions options)
    : cell_(kind, input_dim, hidden, outputs, options) {
  if (with_output || is_jordan(kind)) output_.emplace(outputs, hidden, options.bias);
}

void RecurrentLayer::initialize(Rng& rng, double range) {
  cell_.initialize(rng, range);
  if (output_) {
    auto& w = output_->weights;
    const double r = range > 0 ? range : glorot_range(w.cols(), w.rows());
    w = uniform_init(rng, w.rows(), w.cols(), -r, r);
    output_->bias.fill(0.0);
  }
}

std::size_t RecurrentLayer::state_dim() const {
  return is_jordan(cell_.kind()) ? cell_.outputs() : cell_.hidden();
}

RecurrentLayer::Tape RecurrentLayer::forward(std::span<const Vector> xs,
                                             const Vector* extra) const {
  Tape tape;
  tape.steps.resize(xs.size());
  if (output_) tape.outputs.reserve(xs.size());
  const bool jordan = is_jordan(cell_.kind());
  Vector carry(cell_.carry_dim());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Vector h = cell_.forward(xs[i], carry, extra, &tape.steps[i]);
    if (output_) {
      tape.outputs.push_back(output_->forward(h));
      carry = jordan ? tape.outputs.back() : h;
    } else {
      carry = std::move(h);
    }
  }
  return tape;
}

const Vector& RecurrentLayer::emitted(const Tape& tape, std::size_t i) const {
  return is_jordan(cell_.kind()) ? tape.outputs[i] : tape.steps[i].h;
}

std::vector<Vector> RecurrentLayer::backward(const Tape& tape,
                                             const std::vector<Vector>& d_emit,
                                             const std::vector<Vector>& d_logits,
                                             RecurrentLayer& grad,
                                             Vector* d_extra) const {
  const std::size_t n = tape.size();
  const bool jordan = is_jordan(cell_.kind());
  auto has = [n](const std::vector<Vector>& v, std::size_t i) {
    return v.size() == n && !v[i].empty();
  };
  std::vector<Vector> dxs(n);
  Vector dcarry(cell_.carry_dim());
  for (std::size_t step = n; step-- > 0;) {
    Vector dh;
    if (jordan) {
      Vector dout = dcarry;
      if (has(d_emit, step)) add_in_place(dout, d_emit[step]);
      Vector dz = softmax_backward(tape.outputs[step], dout);
      if (has(d_logits, step)) add_in_place(dz, d_logits[step]);
      dh = output_->backward(tape.hidden(step), dz, *grad.output_);
    } else {
      dh = dcarry;
      if (has(d_emit, step)) add_in_place(dh, d_emit[step]);
      if (output_ && has(d_logits, step)) {
        add_in_place(dh, output_->backward(tape.hidden(step), d_logits[step],
                                           *grad.output_));
      }
    }
    StepGrads g = cell_.backward(tape.steps[step], dh, grad.cell_);
    dxs[step] = std::move(g.dx);
    dcarry = std::move(g.dcarry);
    if (d_extra) add_in_place(*d_extra, g.dextra);
  }
  return dxs;
}

void RecurrentLayer::for_each_param(const std::string& prefix, const ParamVisitor& f) {
  cell_.for_each_param(prefix, f);
  if (output_) output_->for_each_param(prefix + "out.", f);
}

void RecurrentLayer::for_each_param(const std::string& prefix,
                                    const ConstParamVisitor& f) const {
  cell_.for_each_param(prefix, f);
  if (output_) output_->for_each_param(prefix + "out.", f);
}

RecurrentLayer RecurrentLayer::zeros_like() const {
  RecurrentLayer g;
  g.cell_ = cell_.zeros_like();
  if (output_) g.output_ = output_->zeros_like();
  return g;
}

Network::Network(const ModelSpec& spec) : spec_(spec) {
  spec_.validate();
  const auto& s = spec_;
  const bool bias = s.cell_options.bias;
  switch (s.arch) {
    case Architecture::kBasic:
      decoder_ = RecurrentLayer(s.decoder, s.input_dim, s.hidden, s.outputs, true,
                                s.cell_options);
      break;
    case Architecture::kContextual:
      encoder_ = RecurrentLayer(s.encoder, s.input_dim, s.hidden, s.outputs, false,
                                s.cell_options);
      decoder_ = RecurrentLayer(s.decoder, s.input_dim, s.hidden, s.outputs, true,
                                s.cell_options);
      context_ = Matrix(s.hidden, s.hidden);
      break;
    case Architecture::kBidirectional:
    case Architecture::kMesnil: {
      encoder_ = RecurrentLayer(s.encoder, s.input_dim, s.hidden, s.outputs, false,
                                s.cell_options);
      if (!s.shared_encoder) backward_encoder_ = encoder_;
      const std::size_t e = s.encoder_state_dim();
      if (s.arch == Architecture::kBidirectional) {
        decoder_ = RecurrentLayer(s.decoder, 2 * e, s.hidden, s.outputs, true,
                                  s.cell_options);
      } else {
        mesnil_output_ = OutputLayer(s.outputs, 2 * (s.mesnil_context + 1) * e, bias);
      }
      break;
    }
  }
}

Network::Network(const ModelSpec& spec, Rng& rng, double init_range)
    : Network(spec) {
  auto init_matrix = [&](Matrix& m) {
    if (m.empty()) return;
    const double r = init_range > 0 ? init_range : glorot_range(m.cols(), m.rows());
    m = uniform_init(rng, m.rows(), m.cols(), -r, r);
  };
  switch (spec_.arch) {
    case Architecture::kBasic:
      decoder_.initialize(rng, init_range);
      break;
    case Architecture::kContextual:
      encoder_.initialize(rng, init_range);
      decoder_.initialize(rng, init_range);
      init_matrix(context_);
      break;
    case Architecture::kBidirectional:
      encoder_.initialize(rng, init_range);
      if (!spec_.shared_encoder) backward_encoder_.initialize(rng, init_range);
      decoder_.initialize(rng, init_range);
      break;
    case Architecture::kMesnil:
      encoder_.initialize(rng, init_range);
      if (!spec_.shared_encoder) backward_encoder_.initialize(rng, init_range);
      init_matrix(mesnil_output_.weights);
      mesnil_output_.bias.fill(0.0);
      break;
  }
}

void Network::for_each_param(const ParamVisitor& f) {
  const auto arch = spec_.arch;
  if (arch != Architecture::kBasic) encoder_.for_each_param("encoder.", f);
  if (!spec_.shared_encoder &&
      (arch == Architecture::kBidirectional || arch == Architecture::kMesnil)) {
    backward_encoder_.for_each_param("backward_encoder.", f);
  }
  if (arch != Architecture::kMesnil) decoder_.for_each_param("decoder.", f);
  if (arch == Architecture::kContextual) f("context.S", context_);
  if (arch == Architecture::kMesnil) mesnil_output_.for_each_param("mesnil.", f);
}

void Network::for_each_param(const ConstParamVisitor& f) const {
  const_cast<Network*>(this)->for_each_param(
      [&](const std::string& name, Matrix& m) { f(name, m); });
}

Network Network::zeros_like() const {
  Network g = *this;
  g.for_each_param([](const std::string&, Matrix& m) { m.fill(0.0); });
  return g;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for_each_param([&](const std::string&, const Matrix& m) { n += m.size(); });
  return n;
}

std::vector<Vector> encode_forward(const RecurrentLayer& layer,
                                   std::span<const Vector> xs) {
  const auto tape = layer.forward(xs);
  std::vector<Vector> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back(layer.emitted(tape, i));
  return out;
}

std::vector<Vector> encode_backward(const RecurrentLayer& layer,
                                    std::span<const Vector> xs) {
  const auto rx = reversed(xs);
  auto states = encode_forward(layer, rx);
  std::reverse(states.begin(), states.end());
  return states;
}

std::vector<Vector> basic_forward(const Network& net, std::span<const Vector> xs) {
  check_inputs(net, xs);
  return net.decoder().forward(xs).outputs;
}

std::vector<Vector> contextual_forward(const Network& net,
                                       std::span<const Vector> xs) {
  if (net.spec().arch != Architecture::kContextual) {
    throw ConfigError("contextual_forward on a " +
                      std::string(architecture_name(net.spec().arch)) + " model");
  }
  check_inputs(net, xs);
  const auto enc = net.encoder().forward(xs);
  const Vector shift = matvec(net.context(), net.encoder().emitted(enc, xs.size() - 1));
  return net.decoder().forward(xs, &shift).outputs;
}

std::vector<Vector> bidirectional_inputs(const Network& net,
                                         std::span<const Vector> xs) {
  check_inputs(net, xs);
  const auto left = encode_forward(net.encoder(), xs);
  const auto right = encode_backward(net.backward_encoder(), xs);
  std::vector<Vector> alpha;
  alpha.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) alpha.push_back(concat({&left[i], &right[i]}));
  return alpha;
}

std::vector<Vector> bidirectional_forward(const Network& net,
                                          std::span<const Vector> xs) {
  if (net.spec().arch != Architecture::kBidirectional) {
    throw ConfigError("bidirectional_forward on a " +
                      std::string(architecture_name(net.spec().arch)) + " model");
  }
  const auto alpha = bidirectional_inputs(net, xs);
  return net.decoder().forward(alpha).outputs;
}

std::vector<Vector> mesnil_inputs(const std::vector<Vector>& left,
                                  const std::vector<Vector>& right, std::size_t k) {
  const std::size_t n = left.size();
  if (right.size() != n) throw DimensionError("mesnil_inputs: ragged encodings");
  const std::size_t e = n ? left[0].size() : 0;
  const std::size_t blocks = 2 * (k + 1);
  std::vector<Vector> beta(n, Vector(blocks * e));
  for (std::size_t i = 0; i < n; ++i) {
    double* dst = beta[i].data();
    for (std::size_t b = 0; b <= k; ++b) {
      // l_{i-k+b}
      const auto pos = static_cast<std::ptrdiff_t>(i + b) - static_cast<std::ptrdiff_t>(k);
      if (pos >= 0) std::copy(left[pos].begin(), left[pos].end(), dst + b * e);
      // r_{i+b}
      if (i + b < n) {
        std::copy(right[i + b].begin(), right[i + b].end(), dst + (k + 1 + b) * e);
      }
    }
  }
  return beta;
}

std::vector<Vector> mesnil_forward(const Network& net, std::span<const Vector> xs) {
  if (net.spec().arch != Architecture::kMesnil) {
    throw ConfigError("mesnil_forward on a " +
                      std::string(architecture_name(net.spec().arch)) + " model");
  }
  check_inputs(net, xs);
  const auto left = encode_forward(net.encoder(), xs);
  const auto right = encode_backward(net.backward_encoder(), xs);
  const auto beta = mesnil_inputs(left, right, net.spec().mesnil_context);
  std::vector<Vector> out;
  out.reserve(xs.size());
  for (const auto& b : beta) out.push_back(net.mesnil_output().forward(b));
  return out;
}

std::vector<Vector> forward(const Network& net, std::span<const Vector> xs) {
  switch (net.spec().arch) {
    case Architecture::kBasic: return basic_forward(net, xs);
    case Architecture::kContextual: return contextual_forward(net, xs);
    case Architecture::kBidirectional: return bidirectional_forward(net, xs);
    case Architecture::kMesnil: return mesnil_forward(net, xs);
  }
  return {};
}

std::vector<std::size_t> predict(const Network& net, std::span<const Vector> xs) {
  const auto outputs = forward(net, xs);
  std::vector<std::size_t> tags;
  tags.reserve(outputs.size());
  for (const auto& o : outputs) tags.push_back(argmax(o));
  return tags;
}

namespace {

WindowResult run_window(const Network& net, std::span<const Vector> xs,
                        std::size_t target, std::size_t window,
                        std::optional<std::size_t> gold, Network* grad,
                        std::vector<Vector>* input_grads) {
  check_inputs(net, xs);
  const std::size_t n = xs.size();
  if (target >= n) {
    throw DimensionError("target position " + std::to_string(target) +
                         " outside sentence of length " + std::to_string(n));
  }
  const std::size_t lo = target > window ? target - window : 0;
  const std::size_t len = target - lo + 1;
  const bool backprop = grad != nullptr && gold.has_value();
  if (backprop && input_grads) input_grads->assign(n, Vector{});

  WindowResult result;
  auto finish = [&](const Vector& o) {
    result.distribution = o;
    if (gold) result.loss = nll(o, *gold);
  };
  auto last_logit_grad = [&](const Vector& o) {
    std::vector<Vector> d(len);
    d.back() = nll_logit_gradient(o, *gold);
    return d;
  };
  auto store_inputs = [&](const std::vector<Vector>& dx, std::size_t offset) {
    if (!input_grads) return;
    for (std::size_t j = 0; j < dx.size(); ++j) accumulate(*input_grads, offset + j, dx[j]);
  };

  const auto& spec = net.spec();
  switch (spec.arch) {
    case Architecture::kBasic: {
      const auto tape = net.decoder().forward(xs.subspan(lo, len));
      finish(tape.outputs.back());
      if (backprop) {
        const auto dx = net.decoder().backward(tape, {}, last_logit_grad(result.distribution),
                                               grad->decoder(), nullptr);
        store_inputs(dx, lo);
      }
      break;
    }
    case Architecture::kContextual: {
      const auto enc = net.encoder().forward(xs);
      const Vector& summary = net.encoder().emitted(enc, n - 1);
      const Vector shift = matvec(net.context(), summary);
      const auto tape = net.decoder().forward(xs.subspan(lo, len), &shift);
      finish(tape.outputs.back());
      if (backprop) {
        Vector d_shift(spec.hidden);
        const auto dx = net.decoder().backward(tape, {}, last_logit_grad(result.distribution),
                                               grad->decoder(), &d_shift);
        store_inputs(dx, lo);
        add_outer(grad->context(), d_shift.span(), summary.span());
        std::vector<Vector> d_emit(n);
        d_emit[n - 1] = matvec_transposed(net.context(), d_shift);
        const auto dx_enc = net.encoder().backward(enc, d_emit, {}, grad->encoder(), nullptr);
        store_inputs(dx_enc, 0);
      }
      break;
    }
    case Architecture::kBidirectional:
    case Architecture::kMesnil: {
      const auto fwd = net.encoder().forward(xs);
      const auto rx = reversed(xs);
      const auto bwd = net.backward_encoder().forward(rx);
      const std::size_t e = spec.encoder_state_dim();
      auto left = [&](std::size_t i) -> const Vector& { return net.encoder().emitted(fwd, i); };
      auto right = [&](std::size_t i) -> const Vector& {
        return net.backward_encoder().emitted(bwd, n - 1 - i);
      };
      std::vector<Vector> d_left(n), d_right_rev(n);

      if (spec.arch == Architecture::kBidirectional) {
        std::vector<Vector> alpha;
        alpha.reserve(len);
        for (std::size_t j = lo; j <= target; ++j) alpha.push_back(concat({&left(j), &right(j)}));
        const auto tape = net.decoder().forward(alpha);
        finish(tape.outputs.back());
        if (!backprop) break;
        const auto d_alpha = net.decoder().backward(
            tape, {}, last_logit_grad(result.distribution), grad->decoder(), nullptr);
        for (std::size_t j = 0; j < len; ++j) {
          const auto& d = d_alpha[j];
          d_left[lo + j] = Vector(std::vector<double>(d.begin(), d.begin() + e));
          d_right_rev[n - 1 - (lo + j)] = Vector(std::vector<double>(d.begin() + e, d.end()));
        }
      } else {
        const std::size_t k = spec.mesnil_context;
        Vector beta(2 * (k + 1) * e);
        for (std::size_t b = 0; b <= k; ++b) {
          const auto pos = static_cast<std::ptrdiff_t>(target + b) -
                           static_cast<std::ptrdiff_t>(k);
          if (pos >= 0) {
            const auto& l = left(pos);
            std::copy(l.begin(), l.end(), beta.data() + b * e);
          }
          if (target + b < n) {
            const auto& r = right(target + b);
            std::copy(r.begin(), r.end(), beta.data() + (k + 1 + b) * e);
          }
        }
        finish(net.mesnil_output().forward(beta));
        if (!backprop) break;
        const Vector d_beta = net.mesnil_output().backward(
            beta, nll_logit_gradient(result.distribution, *gold), grad->mesnil_output());
        for (std::size_t b = 0; b <= k; ++b) {
          const auto pos = static_cast<std::ptrdiff_t>(target + b) -
                           static_cast<std::ptrdiff_t>(k);
          if (pos >= 0) {
            d_left[pos] = Vector(std::vector<double>(d_beta.begin() + b * e,
                                                     d_beta.begin() + (b + 1) * e));
          }
          if (target + b < n) {
            d_right_rev[n - 1 - (target + b)] = Vector(std::vector<double>(
                d_beta.begin() + (k + 1 + b) * e, d_beta.begin() + (k + 2 + b) * e));
          }
        }
      }
      const auto dx_f = net.encoder().backward(fwd, d_left, {}, grad->encoder(), nullptr);
      const auto dx_b = net.backward_encoder().backward(bwd, d_right_rev, {},
                                                        grad->backward_encoder(), nullptr);
      if (input_grads) {
        for (std::size_t i = 0; i < n; ++i) {
          accumulate(*input_grads, i, dx_f[i]);
          accumulate(*input_grads, i, dx_b[n - 1 - i]);
        }
      }
      break;
    }
  }
  return result;
}

}  // namespace

double window_loss(const Network& net, std::span<const Vector> xs, std::size_t target,
                   std::size_t window, std::size_t gold, Network* grad,
                   std::vector<Vector>* input_grads) {
  return run_window(net, xs, target, window, gold, grad, input_grads).loss;
}

Vector window_distribution(const Network& net, std::span<const Vector> xs,
                           std::size_t target, std::size_t window) {
  return run_window(net, xs, target, window, std::nullopt, nullptr, nullptr).distribution;
}

}  // namespace mdrnn
