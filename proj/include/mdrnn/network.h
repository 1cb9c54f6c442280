#ifndef MDRNN_NETWORK_H_
#define MDRNN_NETWORK_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdrnn/cells.h"
#include "mdrnn/linalg.h"
#include "mdrnn/rng.h"

namespace mdrnn {

enum class Architecture { kBasic, kContextual, kBidirectional, kMesnil };

Architecture parse_architecture(std::string_view name);
std::string_view architecture_name(Architecture arch);

struct ModelSpec {
  Architecture arch = Architecture::kBasic;
  CellKind encoder = CellKind::kElman;  // ignored by kBasic
  CellKind decoder = CellKind::kElman;  // ignored by kMesnil
  std::size_t input_dim = 0;            // I
  std::size_t hidden = 0;               // H, shared by encoder and decoder
  std::size_t outputs = 0;              // O
  std::size_t mesnil_context = 1;       // k
  // Forward and backward encoders share one parameter set.
  bool shared_encoder = true;
  CellOptions cell_options;

  // Throws ConfigError naming the violated constraint.
  void validate() const;
  // Width of one encoder state: H for Elman-family, O for Jordan-family.
  std::size_t encoder_state_dim() const;
  bool operator==(const ModelSpec&) const = default;
};

// A cell run over a sequence, with a softmax output layer when the cell is a
// Jordan cell or when the layer is a decoder.
class RecurrentLayer {
 public:
  struct Tape {
    std::vector<StepTape> steps;
    std::vector<Vector> outputs;  // o_i; empty without an output layer

    const Vector& hidden(std::size_t i) const { return steps[i].h; }
    std::size_t size() const { return steps.size(); }
  };

  RecurrentLayer() = default;
  RecurrentLayer(CellKind kind, std::size_t input_dim, std::size_t hidden,
                 std::size_t outputs, bool with_output, CellOptions options);

  void initialize(Rng& rng, double range = 0.0);

  const Cell& cell() const { return cell_; }
  Cell& cell() { return cell_; }
  bool has_output() const { return output_.has_value(); }
  const OutputLayer& output() const { return *output_; }
  OutputLayer& output() { return *output_; }
  // Dimension of what the layer emits per step (h or o).
  std::size_t state_dim() const;

  // Left-to-right recurrence from the zero state.
  Tape forward(std::span<const Vector> xs, const Vector* extra = nullptr) const;
  // Emitted states: o_i for Jordan cells, h_i otherwise.
  const Vector& emitted(const Tape& tape, std::size_t i) const;

  // Backpropagates through the whole tape. d_emit[i] is d(loss)/d(emitted_i)
  // and d_logits[i] is d(loss)/d(logits_i); empty vectors mean zero. Returns
  // d(loss)/d(xs[i]); d_extra accumulates the gradient of `extra`.
  std::vector<Vector> backward(const Tape& tape, const std::vector<Vector>& d_emit,
                               const std::vector<Vector>& d_logits,
                               RecurrentLayer& grad, Vector* d_extra) const;

  void for_each_param(const std::string& prefix, const ParamVisitor& f);
  void for_each_param(const std::string& prefix, const ConstParamVisitor& f) const;
  RecurrentLayer zeros_like() const;

 private:
  Cell cell_;
  std::optional<OutputLayer> output_;
};

// All parameters of one model. Which members are active depends on the
// architecture; inactive members stay empty.
class Network {
 public:
  Network() = default;
  // Builds zero-valued parameters with the right shapes.
  explicit Network(const ModelSpec& spec);
  Network(const ModelSpec& spec, Rng& rng, double init_range = 0.0);

  const ModelSpec& spec() const { return spec_; }

  RecurrentLayer& decoder() { return decoder_; }
  const RecurrentLayer& decoder() const { return decoder_; }
  RecurrentLayer& encoder() { return encoder_; }
  const RecurrentLayer& encoder() const { return encoder_; }
  RecurrentLayer& backward_encoder() {
    return spec_.shared_encoder ? encoder_ : backward_encoder_;
  }
  const RecurrentLayer& backward_encoder() const {
    return spec_.shared_encoder ? encoder_ : backward_encoder_;
  }
  Matrix& context() { return context_; }
  const Matrix& context() const { return context_; }
  OutputLayer& mesnil_output() { return mesnil_output_; }
  const OutputLayer& mesnil_output() const { return mesnil_output_; }

  void for_each_param(const ParamVisitor& f);
  void for_each_param(const ConstParamVisitor& f) const;
  Network zeros_like() const;
  std::size_t parameter_count() const;

 private:
  ModelSpec spec_;
  RecurrentLayer encoder_;
  RecurrentLayer backward_encoder_;
  RecurrentLayer decoder_;
  Matrix context_;  // S
  OutputLayer mesnil_output_;
};

// States s_1..s_n of a left-to-right pass.
std::vector<Vector> encode_forward(const RecurrentLayer& layer,
                                   std::span<const Vector> xs);
// States r_1..r_n (indexed by position) of a right-to-left pass.
std::vector<Vector> encode_backward(const RecurrentLayer& layer,
                                    std::span<const Vector> xs);

std::vector<Vector> basic_forward(const Network& net, std::span<const Vector> xs);
std::vector<Vector> contextual_forward(const Network& net, std::span<const Vector> xs);
std::vector<Vector> bidirectional_forward(const Network& net,
                                          std::span<const Vector> xs);
std::vector<Vector> mesnil_forward(const Network& net, std::span<const Vector> xs);

// Full-sentence output distributions for any architecture.
std::vector<Vector> forward(const Network& net, std::span<const Vector> xs);

// alpha_i = [l_i, r_i] for every position.
std::vector<Vector> bidirectional_inputs(const Network& net,
                                         std::span<const Vector> xs);
// beta_i = [l_{i-k}..l_i, r_i..r_{i+k}] with zero blocks out of range.
std::vector<Vector> mesnil_inputs(const std::vector<Vector>& left,
                                  const std::vector<Vector>& right, std::size_t k);

// argmax per position, ties resolved to the lowest index.
std::vector<std::size_t> predict(const Network& net, std::span<const Vector> xs);

// Windowed local objective: the decoder is unrolled over positions
// max(0, target - window) .. target from the zero state (encoders see the
// whole sentence) and the loss is -ln o_target[gold]. When grad is non-null
// gradients are accumulated into it and into *input_grads (resized to xs).
double window_loss(const Network& net, std::span<const Vector> xs,
                   std::size_t target, std::size_t window, std::size_t gold,
                   Network* grad, std::vector<Vector>* input_grads);

// The output distribution at `target` under the windowed decode.
Vector window_distribution(const Network& net, std::span<const Vector> xs,
                           std::size_t target, std::size_t window);

}  // namespace mdrnn

#endif  // MDRNN_NETWORK_H_
