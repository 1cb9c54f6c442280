#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdio>

#include "mdrnn/linalg.h"

// Runs the registered cases, then checks that every softmax evaluated along
// the way was normalized.
int main(int argc, char** argv) {
  doctest::Context context(argc, argv);
  const int rc = context.run();
  if (context.shouldExit()) return rc;
  const double dev = mdrnn::softmax_max_deviation();
  if (dev >= 1e-9) {
    std::fprintf(stderr, "softmax normalization audit failed: max |sum - 1| = %.3e\n", dev);
    return rc ? rc : 1;
  }
  return rc;
}
