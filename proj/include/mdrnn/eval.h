#ifndef MDRNN_EVAL_H_
#define MDRNN_EVAL_H_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mdrnn/tagging.h"

namespace mdrnn {

struct PrfCounts {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;

  // Percentages; zero denominators yield 0.
  double precision() const;
  double recall() const;
  double f1() const;
};

struct EvalReport {
  PrfCounts overall;
  std::map<std::string, PrfCounts> per_type;
  // Debug statistic only.
  std::size_t tokens = 0;
  std::size_t tokens_correct = 0;

  double precision() const { return overall.precision(); }
  double recall() const { return overall.recall(); }
  double f1() const { return overall.f1(); }

  std::string to_table() const;
  // "key=value" lines, stable order.
  std::string to_key_values() const;
};

// Exact (start, end, type) matching. gold and pred must have equal length.
EvalReport score(const std::vector<std::vector<Span>>& gold,
                 const std::vector<std::vector<Span>>& pred);

// Convenience for tag sequences; also fills the token accuracy statistic.
EvalReport score_tags(const std::vector<std::vector<std::string>>& gold,
                      const std::vector<std::vector<std::string>>& pred,
                      TagScheme scheme);

}  // namespace mdrnn

#endif  // MDRNN_EVAL_H_
