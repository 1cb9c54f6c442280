#include "mdrnn/linalg.h"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "mdrnn/rng.h"

namespace mdrnn {
namespace {

std::atomic<double> g_softmax_deviation{0.0};

void record_softmax_deviation(double dev) {
  double seen = g_softmax_deviation.load(std::memory_order_relaxed);
  while (dev > seen && !g_softmax_deviation.compare_exchange_weak(
                           seen, dev, std::memory_order_relaxed)) {
  }
}

void require_same(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": length mismatch " +
                         std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

void Vector::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Matrix::shape() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vector sigmoid(const Vector& z) {
  Vector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = sigmoid(z[i]);
  return out;
}

Vector softmax(const Vector& z) {
  if (z.empty()) throw DimensionError("softmax: empty input");
  const double mx = *std::max_element(z.begin(), z.end());
  Vector out(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - mx);
    total += out[i];
  }
  double check = 0.0;
  for (auto& v : out) {
    v /= total;
    check += v;
  }
  record_softmax_deviation(std::abs(check - 1.0));
  return out;
}

double softmax_max_deviation() {
  return g_softmax_deviation.load(std::memory_order_relaxed);
}

void reset_softmax_audit() { g_softmax_deviation.store(0.0); }

Vector matvec(const Matrix& m, const Vector& v) {
  Vector out(m.rows());
  matvec_accumulate(m, v.span(), out.span());
  return out;
}

Vector matvec_transposed(const Matrix& m, const Vector& v) {
  Vector out(m.cols());
  matvec_transposed_accumulate(m, v.span(), out.span());
  return out;
}

void matvec_accumulate(const Matrix& m, std::span<const double> v,
                       std::span<double> out) {
  if (m.cols() != v.size() || m.rows() != out.size()) {
    throw DimensionError("matvec: matrix " + m.shape() + " with vector of " +
                         std::to_string(v.size()) + " into " +
                         std::to_string(out.size()));
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.data() + r * m.cols();
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * v[c];
    out[r] += acc;
  }
}

void matvec_transposed_accumulate(const Matrix& m, std::span<const double> v,
                                  std::span<double> out) {
  if (m.rows() != v.size() || m.cols() != out.size()) {
    throw DimensionError("matvec_transposed: matrix " + m.shape() +
                         " with vector of " + std::to_string(v.size()) +
                         " into " + std::to_string(out.size()));
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double a = v[r];
    if (a == 0.0) continue;
    const double* row = m.data() + r * m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += a * row[c];
  }
}

void add_outer(Matrix& m, std::span<const double> a, std::span<const double> b,
               double scale) {
  if (m.rows() != a.size() || m.cols() != b.size()) {
    throw DimensionError("add_outer: matrix " + m.shape() + " with " +
                         std::to_string(a.size()) + "x" +
                         std::to_string(b.size()));
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = scale * a[r];
    if (s == 0.0) continue;
    double* row = m.data() + r * m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += s * b[c];
  }
}

Vector concat(std::initializer_list<const Vector*> parts) {
  std::size_t n = 0;
  for (const auto* p : parts) n += p->size();
  std::vector<double> out;
  out.reserve(n);
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return Vector(std::move(out));
}

Vector concat(std::span<const Vector> parts) {
  std::size_t n = 0;
  for (const auto& p : parts) n += p.size();
  std::vector<double> out;
  out.reserve(n);
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return Vector(std::move(out));
}

Vector add(const Vector& a, const Vector& b) {
  require_same(a.size(), b.size(), "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector sub(const Vector& a, const Vector& b) {
  require_same(a.size(), b.size(), "sub");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector mul(const Vector& a, const Vector& b) {
  require_same(a.size(), b.size(), "mul");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vector scale(const Vector& a, double s) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void add_in_place(Vector& y, const Vector& x) { axpy(1.0, x.span(), y.span()); }

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

std::size_t argmax(const Vector& v) {
  if (v.empty()) throw DimensionError("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Matrix uniform_init(Rng& rng, std::size_t rows, std::size_t cols, double lo,
                    double hi) {
  Matrix m(rows, cols);
  for (auto& x : m.span()) x = rng.uniform(lo, hi);
  return m;
}

double glorot_range(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace mdrnn
