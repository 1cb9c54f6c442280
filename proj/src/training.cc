#include "mdrnn/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mdrnn/errors.h"
#include "mdrnn/reference.h"

namespace mdrnn {
namespace {

std::vector<Matrix*> param_pointers(Network& net) {
  std::vector<Matrix*> out;
  net.for_each_param([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

double sum_squares(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double train_example_impl(Model& model, PreparedSentence& sentence, std::size_t target,
                          const TrainConfig& config, Network& grad) {
  InputEncoding& enc = sentence.encoding;
  if (target >= enc.size()) {
    throw DimensionError("train_example: target " + std::to_string(target) +
                         " outside sentence of length " + std::to_string(enc.size()));
  }
  const bool tune = config.fine_tune_embeddings && model.embeddings.trainable();
  if (tune) refresh_inputs(enc, model.embeddings);

  grad.for_each_param([](const std::string&, Matrix& m) { m.fill(0.0); });
  std::vector<Vector> input_grads;
  const double loss = window_loss(model.network, enc.inputs, target, config.decode_window,
                                  sentence.gold[target], &grad,
                                  tune ? &input_grads : nullptr);
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite loss at position " + std::to_string(target));
  }
  double norm2 = 0.0;
  grad.for_each_param([&](const std::string& name, Matrix& m) {
    if (!all_finite(m.span())) throw NumericError("non-finite gradient in block " + name);
    norm2 += sum_squares(m.span());
  });
  for (const auto& g : input_grads) {
    if (!all_finite(g.span())) throw NumericError("non-finite gradient in block embeddings");
    norm2 += sum_squares(g.span());
  }

  double lr = config.learning_rate;
  if (lr == 0.0) return loss;
  if (config.clip > 0.0) {
    const double norm = std::sqrt(norm2);
    if (norm > config.clip) lr *= config.clip / norm;
  }
  const auto grads = param_pointers(grad);
  std::size_t k = 0;
  model.network.for_each_param([&](const std::string&, Matrix& m) {
    axpy(-lr, grads[k++]->span(), m.span());
  });
  if (tune) apply_input_gradients(enc, input_grads, model.embeddings, lr);
  return loss;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a non-negative finite number");
  }
  if (hidden == 0) throw ConfigError("hidden size must be positive");
  if (clip < 0.0) throw ConfigError("clip threshold must be non-negative");
}

double nll_loss(const Vector& o, std::size_t y) {
  if (y >= o.size()) {
    throw DimensionError("label index " + std::to_string(y) + " out of range for " +
                         std::to_string(o.size()) + " outputs");
  }
  return -std::log(std::max(o[y], 1e-12));
}

double train_example(Model& model, PreparedSentence& sentence, std::size_t target,
                     const TrainConfig& config) {
  Network grad = model.network.zeros_like();
  return train_example_impl(model, sentence, target, config, grad);
}

EpochStats train_epoch(Model& model, std::vector<PreparedSentence>& data,
                       const TrainConfig& config, Rng& rng) {
  if (data.empty()) throw DataError("training set is empty");
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (std::size_t s = 0; s < data.size(); ++s) {
    for (std::size_t i = 0; i < data[s].encoding.size(); ++i) order.emplace_back(s, i);
  }
  if (config.shuffle) shuffle(order, rng);

  const auto start = std::chrono::steady_clock::now();
  Network grad = model.network.zeros_like();
  double total = 0.0;
  for (const auto& [s, i] : order) {
    total += train_example_impl(model, data[s], i, config, grad);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EpochStats stats;
  stats.examples = order.size();
  stats.mean_loss = order.empty() ? 0.0 : total / static_cast<double>(order.size());
  stats.examples_per_second = secs > 0 ? static_cast<double>(order.size()) / secs : 0.0;
  return stats;
}

bool BestCheckpoint::offer(std::size_t epoch, double f1, const Model& model) {
  if (model_ && !(f1 > f1_)) return false;
  model_ = model;
  epoch_ = epoch;
  f1_ = f1;
  return true;
}

EvalReport evaluate(const Model& model, const std::vector<Sentence>& sentences,
                    std::size_t workers) {
  const auto predicted = tag_strings(model, tag_sentences(model, sentences, workers));
  std::vector<std::vector<std::string>> gold;
  gold.reserve(sentences.size());
  for (const auto& s : sentences) gold.push_back(gold_tags(s));
  return score_tags(gold, predicted, model.tags.scheme());
}

FitResult fit(Model model, const std::vector<Sentence>& train,
              const std::vector<Sentence>& dev, const TrainConfig& config,
              const EpochCallback& on_epoch) {
  config.validate();
  auto data = prepare_training_data(model, train);
  if (data.empty()) throw DataError("training set is empty");
  Rng rng(config.seed);
  BestCheckpoint best;
  FitResult result;
  const std::size_t every = std::max<std::size_t>(1, config.dev_eval_every);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.stats = train_epoch(model, data, config, rng);
    if (!dev.empty() && (epoch % every == 0 || epoch == config.epochs)) {
      record.dev = evaluate(model, dev);
      best.offer(epoch, record.dev->f1(), model);
    }
    if (on_epoch) on_epoch(record);
    result.history.push_back(std::move(record));
  }
  if (best.has_value()) {
    result.best_epoch = best.epoch();
    result.model = best.take();
  } else {
    result.best_epoch = config.epochs;
    result.model = std::move(model);
  }
  return result;
}

double GradientCheckReport::worst() const {
  double w = forward_discrepancy;
  for (const auto& [name, err] : max_relative_error) w = std::max(w, err);
  return w;
}

GradientCheckReport gradient_check(const Network& net, const std::vector<Vector>& xs,
                                   const std::vector<std::size_t>& gold,
                                   std::size_t window, double step) {
  using Real = long double;
  const std::size_t n = xs.size();
  if (gold.size() != n) throw DimensionError("gradient_check: gold/input length mismatch");

  Network grad = net.zeros_like();
  std::vector<Vector> input_grad(n);
  double production_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Vector> dxs;
    production_total += window_loss(net, xs, i, window, gold[i], &grad, &dxs);
    for (std::size_t j = 0; j < n; ++j) {
      if (dxs[j].empty()) continue;
      if (input_grad[j].empty()) input_grad[j] = Vector(xs[j].size());
      add_in_place(input_grad[j], dxs[j]);
    }
  }

  auto params = reference::extract<Real>(net);
  std::vector<reference::Vec<Real>> rxs;
  for (const auto& x : xs) rxs.emplace_back(x.begin(), x.end());
  const reference::Evaluator<Real> ev(net.spec(), params);
  const Real h = step;
  auto central = [&](Real& slot) {
    const Real saved = slot;
    slot = saved + h;
    const Real up = ev.total_loss(rxs, gold, window);
    slot = saved - h;
    const Real down = ev.total_loss(rxs, gold, window);
    slot = saved;
    return static_cast<double>((up - down) / (2 * h));
  };
  auto rel = [](double a, double num) {
    return std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8});
  };

  GradientCheckReport report;
  const double reference_total = static_cast<double>(ev.total_loss(rxs, gold, window));
  report.forward_discrepancy = rel(production_total, reference_total);

  grad.for_each_param([&](const std::string& name, Matrix& a) {
    auto& slots = params.at(name).data;
    double worst = 0.0;
    for (std::size_t e = 0; e < slots.size(); ++e) {
      worst = std::max(worst, rel(a.data()[e], central(slots[e])));
    }
    report.max_relative_error[name] = worst;
  });

  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = 0; e < rxs[i].size(); ++e) {
      const double a = input_grad[i].empty() ? 0.0 : input_grad[i][e];
      worst = std::max(worst, rel(a, central(rxs[i][e])));
    }
  }
  report.max_relative_error["inputs"] = worst;
  return report;
}

GradientCheckReport gradient_check(ModelSpec spec, std::uint64_t seed,
                                   const GradientCheckOptions& options) {
  if (spec.hidden == 0) spec.hidden = 4;
  if (spec.outputs == 0) spec.outputs = 3;
  spec.input_dim = options.input_dim;
  Rng rng(seed);
  Network net(spec, rng, options.init_range);
  std::vector<Vector> xs;
  for (std::size_t i = 0; i < options.tokens; ++i) {
    Vector x(spec.input_dim);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    xs.push_back(std::move(x));
  }
  std::vector<std::size_t> gold;
  for (std::size_t i = 0; i < options.tokens; ++i) gold.push_back(rng.uniform_int(spec.outputs));
  return gradient_check(net, xs, gold, options.window, options.step);
}

}  // namespace mdrnn
