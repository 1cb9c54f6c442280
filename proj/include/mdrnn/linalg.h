#ifndef MDRNN_LINALG_H_
#define MDRNN_LINALG_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mdrnn/errors.h"

namespace mdrnn {

class Rng;

// Dense vector of doubles with a fixed length after construction.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  void fill(double value);
  bool operator==(const Vector& other) const = default;

 private:
  std::vector<double> data_;
};

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double value);
  std::string shape() const;
  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Elementwise logistic function, evaluated without overflow for any finite z.
double sigmoid(double z);
Vector sigmoid(const Vector& z);

// Numerically stable softmax (max subtraction). Throws on empty input.
Vector softmax(const Vector& z);

// Largest |sum(o) - 1| observed over every softmax() call in this process.
double softmax_max_deviation();
void reset_softmax_audit();

Vector matvec(const Matrix& m, const Vector& v);
// m^T v
Vector matvec_transposed(const Matrix& m, const Vector& v);
// out += m v
void matvec_accumulate(const Matrix& m, std::span<const double> v,
                       std::span<double> out);
// out += m^T v
void matvec_transposed_accumulate(const Matrix& m, std::span<const double> v,
                                  std::span<double> out);
// m += scale * a b^T
void add_outer(Matrix& m, std::span<const double> a, std::span<const double> b,
               double scale = 1.0);

Vector concat(std::initializer_list<const Vector*> parts);
Vector concat(std::span<const Vector> parts);

Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector mul(const Vector& a, const Vector& b);
Vector scale(const Vector& a, double s);
double dot(std::span<const double> a, std::span<const double> b);
// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void add_in_place(Vector& y, const Vector& x);

bool all_finite(std::span<const double> values);
std::size_t argmax(const Vector& v);

// Weights drawn i.i.d. from [lo, hi).
Matrix uniform_init(Rng& rng, std::size_t rows, std::size_t cols, double lo,
                    double hi);
// Symmetric range sqrt(6 / (fan_in + fan_out)).
double glorot_range(std::size_t fan_in, std::size_t fan_out);

}  // namespace mdrnn

#endif  // MDRNN_LINALG_H_
