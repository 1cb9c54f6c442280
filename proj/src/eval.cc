#include "mdrnn/eval.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "mdrnn/errors.h"

namespace mdrnn {
namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

double PrfCounts::precision() const {
  return predicted == 0 ? 0.0 : 100.0 * static_cast<double>(correct) /
                                    static_cast<double>(predicted);
}

double PrfCounts::recall() const {
  return gold == 0 ? 0.0 : 100.0 * static_cast<double>(correct) /
                               static_cast<double>(gold);
}

double PrfCounts::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

EvalReport score(const std::vector<std::vector<Span>>& gold,
                 const std::vector<std::vector<Span>>& pred) {
  if (gold.size() != pred.size()) {
    throw DataError("score: " + std::to_string(gold.size()) +
                    " gold sentences vs " + std::to_string(pred.size()) +
                    " predicted");
  }
  EvalReport report;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    std::multiset<Span> remaining(gold[s].begin(), gold[s].end());
    for (const auto& g : gold[s]) {
      ++report.overall.gold;
      ++report.per_type[g.type].gold;
    }
    for (const auto& p : pred[s]) {
      ++report.overall.predicted;
      auto& per = report.per_type[p.type];
      ++per.predicted;
      auto it = remaining.find(p);
      if (it != remaining.end()) {
        remaining.erase(it);
        ++report.overall.correct;
        ++per.correct;
      }
    }
  }
  return report;
}

EvalReport score_tags(const std::vector<std::vector<std::string>>& gold,
                      const std::vector<std::vector<std::string>>& pred,
                      TagScheme scheme) {
  if (gold.size() != pred.size()) {
    throw DataError("score: " + std::to_string(gold.size()) +
                    " gold sentences vs " + std::to_string(pred.size()) +
                    " predicted");
  }
  std::vector<std::vector<Span>> gs, ps;
  std::size_t tokens = 0, tokens_correct = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw DataError("score: sentence " + std::to_string(s) + " has " +
                      std::to_string(gold[s].size()) + " gold tags vs " +
                      std::to_string(pred[s].size()) + " predicted");
    }
    gs.push_back(tags_to_spans(gold[s], scheme));
    ps.push_back(tags_to_spans(pred[s], scheme));
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      ++tokens;
      tokens_correct += gold[s][i] == pred[s][i];
    }
  }
  EvalReport report = score(gs, ps);
  report.tokens = tokens;
  report.tokens_correct = tokens_correct;
  return report;
}

std::string EvalReport::to_table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %8s %8s %8s %8s %8s %8s\n", "type",
                "P", "R", "F1", "gold", "pred", "correct");
  out += line;
  auto row = [&](const std::string& name, const PrfCounts& c) {
    std::snprintf(line, sizeof line, "%-14s %8s %8s %8s %8zu %8zu %8zu\n",
                  name.c_str(), fmt2(c.precision()).c_str(),
                  fmt2(c.recall()).c_str(), fmt2(c.f1()).c_str(), c.gold,
                  c.predicted, c.correct);
    out += line;
  };
  for (const auto& [type, c] : per_type) row(type, c);
  row("overall", overall);
  return out;
}

std::string EvalReport::to_key_values() const {
  std::string out;
  auto emit = [&](const std::string& prefix, const PrfCounts& c) {
    out += prefix + ".precision=" + fmt2(c.precision()) + "\n";
    out += prefix + ".recall=" + fmt2(c.recall()) + "\n";
    out += prefix + ".f1=" + fmt2(c.f1()) + "\n";
    out += prefix + ".gold=" + std::to_string(c.gold) + "\n";
    out += prefix + ".predicted=" + std::to_string(c.predicted) + "\n";
    out += prefix + ".correct=" + std::to_string(c.correct) + "\n";
  };
  emit("overall", overall);
  for (const auto& [type, c] : per_type) emit("type." + type, c);
  if (tokens > 0) {
    out += "tokens=" + std::to_string(tokens) + "\n";
    out += "tokens.correct=" + std::to_string(tokens_correct) + "\n";
  }
  return out;
}

}  // namespace mdrnn
