#ifndef MDRNN_TRAINING_H_
#define MDRNN_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdrnn/eval.h"
#include "mdrnn/model.h"
#include "mdrnn/network.h"
#include "mdrnn/rng.h"

namespace mdrnn {

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 10;
  std::size_t decode_window = 9;   // v_d
  std::size_t context_window = 5;  // v_c
  std::size_t hidden = 200;        // H
  std::uint64_t seed = 1;
  bool shuffle = true;
  bool fine_tune_embeddings = true;
  std::size_t dev_eval_every = 1;
  // Global-norm gradient clipping threshold; 0 disables.
  double clip = 0.0;

  void validate() const;
};

// -ln o[y], with o[y] floored at 1e-12.
double nll_loss(const Vector& o, std::size_t y);

// One SGD step on the example at `target` of `sentence`. Returns the loss
// before the update. Throws NumericError on non-finite loss or gradients.
double train_example(Model& model, PreparedSentence& sentence, std::size_t target,
                     const TrainConfig& config);

struct EpochStats {
  double mean_loss = 0.0;
  std::size_t examples = 0;
  double examples_per_second = 0.0;
};

// Visits every (sentence, position) once, shuffled by `rng` when enabled.
EpochStats train_epoch(Model& model, std::vector<PreparedSentence>& data,
                       const TrainConfig& config, Rng& rng);

struct EpochRecord {
  std::size_t epoch = 0;
  EpochStats stats;
  std::optional<EvalReport> dev;
};

// Keeps the checkpoint with the highest dev F1; ties keep the earlier one.
class BestCheckpoint {
 public:
  // Returns true if the candidate became the new best.
  bool offer(std::size_t epoch, double f1, const Model& model);
  bool has_value() const { return model_.has_value(); }
  std::size_t epoch() const { return epoch_; }
  double f1() const { return f1_; }
  const Model& model() const { return *model_; }
  Model take() { return std::move(*model_); }

 private:
  std::optional<Model> model_;
  std::size_t epoch_ = 0;
  double f1_ = 0.0;
};

struct FitResult {
  Model model;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains for config.epochs epochs. With a non-empty dev set the checkpoint
// with the best dev span-F1 is returned; otherwise the final model.
FitResult fit(Model model, const std::vector<Sentence>& train,
              const std::vector<Sentence>& dev, const TrainConfig& config,
              const EpochCallback& on_epoch = {});

EvalReport evaluate(const Model& model, const std::vector<Sentence>& sentences,
                    std::size_t workers = 1);

struct GradientCheckReport {
  // Max relative error per parameter block, plus "inputs".
  std::map<std::string, double> max_relative_error;
  // Relative gap between the production objective and the reference
  // evaluator at the unperturbed point.
  double forward_discrepancy = 0.0;
  double worst() const;
  bool passed(double tolerance = 1e-4) const { return worst() < tolerance; }
};

struct GradientCheckOptions {
  std::size_t tokens = 4;
  std::size_t input_dim = 5;
  std::size_t window = 2;  // v_d
  double step = 1e-5;
  double init_range = 0.0;  // 0 = Glorot
};

// Sum of windowed nll over every position of a random sentence, analytic
// gradients against central differences of an independent extended-precision
// evaluator. Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradientCheckReport gradient_check(ModelSpec spec, std::uint64_t seed,
                                   const GradientCheckOptions& options = {});

// Same check against an existing network and inputs.
GradientCheckReport gradient_check(const Network& net, const std::vector<Vector>& xs,
                                   const std::vector<std::size_t>& gold,
                                   std::size_t window, double step = 1e-5);

}  // namespace mdrnn

#endif  // MDRNN_TRAINING_H_
