// mdrnn: embed, train, tag, eval, gradcheck and synth subcommands.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdrnn/corpus.h"
#include "mdrnn/embed.h"
#include "mdrnn/errors.h"
#include "mdrnn/eval.h"
#include "mdrnn/model.h"
#include "mdrnn/synth.h"
#include "mdrnn/tagging.h"
#include "mdrnn/training.h"

namespace {

using namespace mdrnn;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Effective configuration on stderr, in the same key=value syntax the
// --config files use.
void echo_config(const CLI::App& app) {
  std::string text = app.config_to_str(true, false);
  std::cerr << "# effective configuration (" << app.get_name() << ")\n" << text;
  if (!text.empty() && text.back() != '\n') std::cerr << '\n';
}

// Every subcommand accepts --config FILE. The file is expanded into flags
// placed ahead of the command line (see expand_config), so single-valued
// options keep their last occurrence.
void add_config(CLI::App* app) {
  app->add_option("--config", "key=value file with long flag names as keys; flags override it");
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  std::string path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty()) {
      throw CLI::ConversionError("--config", "sections are not supported: " + item.fullname());
    }
    if (item.inputs.empty()) {
      out.push_back("--" + item.name);
      continue;
    }
    for (const auto& v : item.inputs) out.push_back("--" + item.name + "=" + v);
  }
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

ConllOptions conll_options(int token_column, int tag_column) {
  ConllOptions o;
  o.token_column = token_column;
  o.tag_column = tag_column;
  return o;
}

std::vector<Sentence> load_tagged(const std::string& path, const ConllOptions& opts,
                                  TagScheme from, TagScheme to) {
  auto sentences = load_conll(path, opts);
  if (from == to) return sentences;
  for (auto& s : sentences) {
    const auto converted = convert_scheme(gold_tags(s), from, to);
    for (std::size_t i = 0; i < s.size(); ++i) s.tokens[i].gold_tag = converted[i];
  }
  return sentences;
}

// ---------------------------------------------------------------- embed

struct EmbedArgs {
  std::string corpus;
  std::string objective = "cbow";
  std::string out;
  EmbedConfig config;
};

void setup_embed(CLI::App& root, EmbedArgs& a) {
  auto* cmd = root.add_subcommand("embed", "train word embeddings on raw text");
  add_config(cmd);
  cmd->add_option("corpus,--corpus", a.corpus, "whitespace-tokenized text, one sentence per line")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--objective", a.objective, "cbow, skipgram or cconcat")
      ->check(CLI::IsMember({"cbow", "skipgram", "cconcat"}))
      ->capture_default_str();
  cmd->add_option("--dim", a.config.dim)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--window", a.config.window)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--negatives", a.config.negatives)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--subsample", a.config.subsample, "threshold t, 0 disables")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--epochs", a.config.epochs)->capture_default_str();
  cmd->add_option("--lr", a.config.learning_rate)->capture_default_str();
  cmd->add_option("--min-count", a.config.min_count)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.config.seed)->capture_default_str();
  cmd->add_option("--out", a.out, "output vector file")->required();
}

int run_embed(const CLI::App& cmd, EmbedArgs& a) {
  echo_config(cmd);
  const auto objective = parse_objective(a.objective);
  const auto sentences = read_text_corpus(a.corpus);
  auto model = train_embeddings(sentences, objective, a.config, [](std::size_t e, double loss) {
    std::printf("epoch %zu loss %.6f\n", e, loss);
    std::fflush(stdout);
  });
  save_text(model, a.out);
  std::printf("wrote %zu vectors of dim %zu to %s\n", model.vocab.size() - 2, model.dim(),
              a.out.c_str());
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string train, dev, embeddings, triggers, out_model;
  std::vector<std::string> gazetteers;
  std::string arch = "bidirectional", encoder = "elman_gru", decoder = "jordan_gru";
  std::string scheme = "bio2", input_scheme = "bio2", profile;
  TrainConfig config;
  std::size_t embedding_dim = 300, min_count = 1, mesnil_context = 1, workers = 1;
  double embedding_range = 0.1, init_range = 0.0;
  bool capitalization = false, cache = false, bias = false, tanh_candidate = false;
  bool separate_encoders = false, no_shuffle = false, freeze_embeddings = false;
  int token_column = 0, tag_column = -1;
  CLI::Option* hidden_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
};

void add_column_options(CLI::App* cmd, int& token_column, int& tag_column) {
  cmd->add_option("--token-column", token_column, "negative counts from the end")
      ->capture_default_str();
  cmd->add_option("--tag-column", tag_column, "negative counts from the end")
      ->capture_default_str();
}

void setup_train(CLI::App& root, TrainArgs& a) {
  auto* cmd = root.add_subcommand("train", "train a tagger");
  add_config(cmd);
  cmd->add_option("--train", a.train, "CoNLL training file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--dev", a.dev, "CoNLL development file")->check(CLI::ExistingFile);
  cmd->add_option("--arch", a.arch, "basic, contextual, bidirectional or mesnil")
      ->capture_default_str();
  cmd->add_option("--encoder", a.encoder, "elman, jordan, elman_gru or jordan_gru")
      ->capture_default_str();
  cmd->add_option("--decoder", a.decoder, "elman, jordan, elman_gru or jordan_gru")
      ->capture_default_str();
  cmd->add_option("--embeddings", a.embeddings, "pretrained vectors (text format)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--embedding-dim", a.embedding_dim, "dimension without --embeddings")
      ->capture_default_str();
  cmd->add_option("--embedding-range", a.embedding_range)->capture_default_str();
  cmd->add_option("--init-range", a.init_range, "uniform weight range, 0 = Glorot")
      ->capture_default_str();
  cmd->add_option("--min-count", a.min_count)->capture_default_str();
  cmd->add_option("--gazetteers", a.gazetteers, "one phrase per line; name = file stem")
      ->check(CLI::ExistingFile)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  cmd->add_option("--triggers", a.triggers, "trigger word list")->check(CLI::ExistingFile);
  cmd->add_flag("--capitalization", a.capitalization, "enable the capitalization channel");
  cmd->add_flag("--cache", a.cache, "enable the document cache channel");
  cmd->add_option("--scheme", a.scheme, "model tag scheme")
      ->check(CLI::IsMember({"bio2", "iobes"}))
      ->capture_default_str();
  cmd->add_option("--input-scheme", a.input_scheme, "tag scheme of the input files")
      ->check(CLI::IsMember({"bio2", "iobes"}))
      ->capture_default_str();
  cmd->add_option("--profile", a.profile, "ace: H=200 lr=0.01, conll: H=100 lr=0.06")
      ->check(CLI::IsMember({"ace", "conll"}));
  a.hidden_opt = cmd->add_option("--hidden", a.config.hidden)->capture_default_str();
  a.lr_opt = cmd->add_option("--lr", a.config.learning_rate)->capture_default_str();
  cmd->add_option("--vc", a.config.context_window, "context window radius")
      ->capture_default_str();
  cmd->add_option("--vd", a.config.decode_window, "decoding window")->capture_default_str();
  cmd->add_option("--epochs", a.config.epochs)->capture_default_str();
  cmd->add_option("--seed", a.config.seed)->capture_default_str();
  cmd->add_option("--clip", a.config.clip, "global gradient norm bound, 0 = off")
      ->capture_default_str();
  cmd->add_option("--dev-eval-every", a.config.dev_eval_every)->capture_default_str();
  cmd->add_option("--mesnil-context", a.mesnil_context)->capture_default_str();
  cmd->add_flag("--bias", a.bias, "add bias vectors to every cell");
  cmd->add_flag("--tanh-candidate", a.tanh_candidate, "tanh instead of sigmoid GRU candidate");
  cmd->add_flag("--separate-encoders", a.separate_encoders,
                "separate forward and backward encoder parameters");
  cmd->add_flag("--no-shuffle", a.no_shuffle);
  cmd->add_flag("--freeze-embeddings", a.freeze_embeddings);
  cmd->add_option("--workers", a.workers, "threads for dev evaluation")->capture_default_str();
  add_column_options(cmd, a.token_column, a.tag_column);
  cmd->add_option("--out-model", a.out_model, "best checkpoint")->required();
}

const char* model_label(Architecture arch) {
  switch (arch) {
    case Architecture::kBasic: return "BASIC";
    case Architecture::kContextual: return "CONTEXTUAL";
    case Architecture::kBidirectional: return "BIDIRECT";
    case Architecture::kMesnil: return "MESNIL";
  }
  return "?";
}

int run_train(const CLI::App& cmd, TrainArgs& a) {
  if (a.profile == "ace" || a.profile == "conll") {
    const bool ace = a.profile == "ace";
    if (a.hidden_opt->count() == 0) a.config.hidden = ace ? 200 : 100;
    if (a.lr_opt->count() == 0) a.config.learning_rate = ace ? 0.01 : 0.06;
  }
  a.config.shuffle = !a.no_shuffle;
  a.config.fine_tune_embeddings = !a.freeze_embeddings;
  echo_config(cmd);

  ModelSetup setup;
  setup.spec.arch = parse_architecture(a.arch);
  setup.spec.encoder = parse_cell_kind(a.encoder);
  setup.spec.decoder = parse_cell_kind(a.decoder);
  setup.spec.hidden = a.config.hidden;
  setup.spec.mesnil_context = a.mesnil_context;
  setup.spec.shared_encoder = !a.separate_encoders;
  setup.spec.cell_options.bias = a.bias;
  setup.spec.cell_options.tanh_candidate = a.tanh_candidate;
  // Dimensions are placeholders until the data is read; checking the
  // architecture constraints first gives a usage error before any I/O.
  {
    ModelSpec probe = setup.spec;
    probe.input_dim = 1;
    probe.outputs = 1;
    probe.validate();
  }
  a.config.validate();

  setup.scheme = parse_scheme(a.scheme);
  setup.context_window = a.config.context_window;
  setup.embedding_dim = a.embedding_dim;
  setup.min_count = a.min_count;
  setup.embedding_range = a.embedding_range;
  setup.init_range = a.init_range;
  setup.seed = a.config.seed;
  setup.features.capitalization = a.capitalization;
  setup.features.cache = a.cache;
  for (const auto& g : a.gazetteers) setup.features.gazetteers.push_back(load_lexicon(g));
  if (!a.triggers.empty()) setup.features.triggers = load_lexicon(a.triggers);

  const auto opts = conll_options(a.token_column, a.tag_column);
  const auto from = parse_scheme(a.input_scheme);
  const auto train = load_tagged(a.train, opts, from, setup.scheme);
  const auto dev = a.dev.empty() ? std::vector<Sentence>{}
                                 : load_tagged(a.dev, opts, from, setup.scheme);
  std::optional<WordVectors> pretrained;
  if (!a.embeddings.empty()) pretrained = read_word_vectors(a.embeddings);

  Model model = build_model(train, setup, pretrained ? &*pretrained : nullptr);
  model.embeddings.set_trainable(a.config.fine_tune_embeddings);
  std::printf("model=%s arch=%s encoder=%s decoder=%s I=%zu H=%zu O=%zu params=%zu sentences=%zu\n",
              model_label(model.spec().arch), std::string(architecture_name(model.spec().arch)).c_str(),
              std::string(cell_name(model.spec().encoder)).c_str(),
              std::string(cell_name(model.spec().decoder)).c_str(), model.spec().input_dim,
              model.spec().hidden, model.spec().outputs, model.network.parameter_count(),
              train.size());
  std::printf("%6s %10s %10s %8s %8s %8s\n", "epoch", "loss", "ex/s", "P", "R", "F1");
  std::fflush(stdout);

  auto result = fit(std::move(model), train, dev, a.config, [](const EpochRecord& r) {
    if (r.dev) {
      std::printf("%6zu %10.6f %10.1f %8.2f %8.2f %8.2f\n", r.epoch, r.stats.mean_loss,
                  r.stats.examples_per_second, r.dev->precision(), r.dev->recall(),
                  r.dev->f1());
    } else {
      std::printf("%6zu %10.6f %10.1f %8s %8s %8s\n", r.epoch, r.stats.mean_loss,
                  r.stats.examples_per_second, "-", "-", "-");
    }
    std::fflush(stdout);
  });
  save_model(a.out_model, result.model);
  std::printf("best epoch %zu written to %s\n", result.best_epoch, a.out_model.c_str());
  if (!dev.empty()) std::cout << evaluate(result.model, dev, a.workers).to_table();
  return kOk;
}

// ---------------------------------------------------------------- tag

struct TagArgs {
  std::string model, input, out;
  std::size_t workers = 1;
  int token_column = 0;
  int tag_column = -1;
  bool untagged = false;
};

void setup_tag(CLI::App& root, TagArgs& a) {
  auto* cmd = root.add_subcommand("tag", "tag a CoNLL file");
  add_config(cmd);
  cmd->add_option("--model", a.model)->required()->check(CLI::ExistingFile);
  cmd->add_option("--input", a.input)->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "output file; default stdout");
  cmd->add_option("--workers", a.workers, "documents tagged in parallel")->capture_default_str();
  cmd->add_flag("--untagged", a.untagged, "input has no gold tag column");
  add_column_options(cmd, a.token_column, a.tag_column);
}

int run_tag(const CLI::App& cmd, TagArgs& a) {
  echo_config(cmd);
  const Model model = load_model(a.model);
  ConllOptions opts = conll_options(a.token_column, a.tag_column);
  if (a.untagged) opts.tag_column.reset();
  const auto sentences = load_conll(a.input, opts);
  const auto tags = tag_strings(model, tag_sentences(model, sentences, a.workers));
  if (a.out.empty()) {
    std::cout << format_conll(sentences, &tags);
  } else {
    write_conll(a.out, sentences, &tags);
  }
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string gold, pred, scheme = "bio2", format = "table";
};

void setup_eval(CLI::App& root, EvalArgs& a) {
  auto* cmd = root.add_subcommand("eval", "span precision, recall and F1");
  add_config(cmd);
  cmd->add_option("--gold", a.gold, "CoNLL file, tags in the last column")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--pred", a.pred, "CoNLL file, tags in the last column")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--scheme", a.scheme)
      ->check(CLI::IsMember({"bio2", "iobes"}))
      ->capture_default_str();
  cmd->add_option("--format", a.format)
      ->check(CLI::IsMember({"table", "kv"}))
      ->capture_default_str();
}

int run_eval(const CLI::App& cmd, EvalArgs& a) {
  echo_config(cmd);
  const auto gold = load_conll(a.gold);
  const auto pred = load_conll(a.pred);
  if (gold.size() != pred.size()) {
    throw DataError("gold has " + std::to_string(gold.size()) + " sentences, prediction " +
                    std::to_string(pred.size()));
  }
  std::vector<std::vector<std::string>> g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size()) {
      throw DataError("sentence " + std::to_string(i + 1) + " has " +
                      std::to_string(gold[i].size()) + " gold tokens and " +
                      std::to_string(pred[i].size()) + " predicted");
    }
    g.push_back(gold_tags(gold[i]));
    p.push_back(gold_tags(pred[i]));
  }
  const auto report = score_tags(g, p, parse_scheme(a.scheme));
  std::cout << (a.format == "kv" ? report.to_key_values() : report.to_table());
  return kOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradArgs {
  std::string arch = "basic", encoder = "elman", decoder = "elman";
  std::uint64_t seed = 42;
  std::size_t seeds = 1, tokens = 4, window = 2, mesnil_context = 1;
  bool all = false, bias = false, tanh_candidate = false, separate_encoders = false;
  double tolerance = 1e-4;
};

void setup_gradcheck(CLI::App& root, GradArgs& a) {
  auto* cmd = root.add_subcommand("gradcheck", "finite-difference gradient check");
  add_config(cmd);
  cmd->add_option("--arch", a.arch)->capture_default_str();
  cmd->add_option("--encoder", a.encoder)->capture_default_str();
  cmd->add_option("--decoder", a.decoder)->capture_default_str();
  cmd->add_option("--seed", a.seed, "first seed")->capture_default_str();
  cmd->add_option("--seeds", a.seeds, "number of consecutive seeds")->capture_default_str();
  cmd->add_option("--tokens", a.tokens)->capture_default_str();
  cmd->add_option("--vd", a.window, "decoding window")->capture_default_str();
  cmd->add_option("--mesnil-context", a.mesnil_context)->capture_default_str();
  cmd->add_option("--tolerance", a.tolerance)->capture_default_str();
  cmd->add_flag("--all", a.all, "every architecture, encoder and decoder combination");
  cmd->add_flag("--bias", a.bias);
  cmd->add_flag("--tanh-candidate", a.tanh_candidate);
  cmd->add_flag("--separate-encoders", a.separate_encoders);
}

int run_gradcheck(const CLI::App& cmd, GradArgs& a) {
  echo_config(cmd);
  std::vector<ModelSpec> specs;
  ModelSpec base;
  base.mesnil_context = a.mesnil_context;
  base.shared_encoder = !a.separate_encoders;
  base.cell_options.bias = a.bias;
  base.cell_options.tanh_candidate = a.tanh_candidate;
  const CellKind kinds[] = {CellKind::kElman, CellKind::kJordan, CellKind::kElmanGru,
                            CellKind::kJordanGru};
  if (a.all) {
    for (auto d : kinds) {
      ModelSpec s = base;
      s.arch = Architecture::kBasic;
      s.decoder = d;
      specs.push_back(s);
    }
    for (auto e : {CellKind::kElman, CellKind::kElmanGru}) {
      for (auto d : kinds) {
        ModelSpec s = base;
        s.arch = Architecture::kContextual;
        s.encoder = e;
        s.decoder = d;
        specs.push_back(s);
      }
    }
    for (auto e : kinds) {
      for (auto d : kinds) {
        ModelSpec s = base;
        s.arch = Architecture::kBidirectional;
        s.encoder = e;
        s.decoder = d;
        specs.push_back(s);
      }
    }
    for (auto e : kinds) {
      ModelSpec s = base;
      s.arch = Architecture::kMesnil;
      s.encoder = e;
      specs.push_back(s);
    }
  } else {
    ModelSpec s = base;
    s.arch = parse_architecture(a.arch);
    s.encoder = parse_cell_kind(a.encoder);
    s.decoder = parse_cell_kind(a.decoder);
    specs.push_back(s);
  }
  GradientCheckOptions opts;
  opts.tokens = a.tokens;
  opts.window = a.window;
  std::size_t failures = 0;
  for (const auto& spec : specs) {
    double worst = 0.0;
    std::string worst_block;
    for (std::size_t k = 0; k < a.seeds; ++k) {
      const auto report = gradient_check(spec, a.seed + k, opts);
      if (report.forward_discrepancy > worst) {
        worst = report.forward_discrepancy;
        worst_block = "forward";
      }
      for (const auto& [block, err] : report.max_relative_error) {
        if (err > worst) {
          worst = err;
          worst_block = block;
        }
      }
    }
    const bool ok = worst < a.tolerance;
    failures += ok ? 0 : 1;
    std::printf("%-4s %-13s %-10s %-10s max_rel_err=%.3e%s%s\n", ok ? "ok" : "FAIL",
                std::string(architecture_name(spec.arch)).c_str(),
                std::string(cell_name(spec.encoder)).c_str(),
                std::string(cell_name(spec.decoder)).c_str(), worst,
                worst_block.empty() ? "" : " at ", worst_block.c_str());
  }
  std::printf("%zu of %zu configurations failed\n", failures, specs.size());
  return failures ? kNumeric : kOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string task = "memorize", out;
  std::size_t size = 50;
  std::uint64_t seed = 1;
};

void setup_synth(CLI::App& root, SynthArgs& a) {
  auto* cmd = root.add_subcommand("synth", "generate a synthetic tagged corpus");
  add_config(cmd);
  cmd->add_option("--task", a.task)
      ->check(CLI::IsMember({"memorize", "future-dep"}))
      ->capture_default_str();
  cmd->add_option("--size", a.size, "number of sentences")->capture_default_str();
  cmd->add_option("--seed", a.seed)->capture_default_str();
  cmd->add_option("--out", a.out, "output file; default stdout");
}

int run_synth(const CLI::App& cmd, SynthArgs& a) {
  echo_config(cmd);
  const auto sentences = synth::generate(synth::parse_task(a.task), a.size, a.seed);
  if (a.out.empty()) {
    std::cout << format_conll(sentences);
  } else {
    write_conll(a.out, sentences);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrent mention detection toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  EmbedArgs embed;
  TrainArgs train;
  TagArgs tag;
  EvalArgs eval;
  GradArgs grad;
  SynthArgs synth_args;
  setup_embed(app, embed);
  setup_train(app, train);
  setup_tag(app, tag);
  setup_eval(app, eval);
  setup_gradcheck(app, grad);
  setup_synth(app, synth_args);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(args);
    // CLI11 consumes arguments from the back.
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::FileError& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "embed") return run_embed(*cmd, embed);
    if (name == "train") return run_train(*cmd, train);
    if (name == "tag") return run_tag(*cmd, tag);
    if (name == "eval") return run_eval(*cmd, eval);
    if (name == "gradcheck") return run_gradcheck(*cmd, grad);
    if (name == "synth") return run_synth(*cmd, synth_args);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
