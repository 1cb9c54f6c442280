#ifndef MDRNN_TESTS_TEST_UTIL_H_
#define MDRNN_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mdrnn/linalg.h"
#include "mdrnn/rng.h"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    mdrnn::Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() /
            ("mdrnn_" + tag + "_" + std::to_string(rng.next_u64() % 1000000007));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline mdrnn::Vector random_vector(mdrnn::Rng& rng, std::size_t n, double lo = -1.0,
                                   double hi = 1.0) {
  mdrnn::Vector v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline std::vector<mdrnn::Vector> random_sequence(mdrnn::Rng& rng, std::size_t len,
                                                  std::size_t dim) {
  std::vector<mdrnn::Vector> xs;
  for (std::size_t i = 0; i < len; ++i) xs.push_back(random_vector(rng, dim));
  return xs;
}

inline double max_abs_diff(const mdrnn::Vector& a, const mdrnn::Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testutil

#endif  // MDRNN_TESTS_TEST_UTIL_H_
