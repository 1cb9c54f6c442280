#ifndef MDRNN_REFERENCE_H_
#define MDRNN_REFERENCE_H_

// A second, deliberately naive evaluator of the windowed objective, written
// against parameter names only and templated on the scalar type. Gradient
// checks difference it in extended precision so that rounding noise stays
// far below the tolerance even for tiny gradient entries.

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mdrnn/network.h"

namespace mdrnn::reference {

template <class T>
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<T> data;
};

template <class T>
using Vec = std::vector<T>;

template <class T>
using Params = std::map<std::string, Mat<T>>;

template <class T>
Params<T> extract(const Network& net) {
  Params<T> p;
  net.for_each_param([&](const std::string& name, const Matrix& m) {
    Mat<T> out{m.rows(), m.cols(), {}};
    out.data.reserve(m.size());
    for (double v : m.span()) out.data.push_back(static_cast<T>(v));
    p.emplace(name, std::move(out));
  });
  return p;
}

template <class T>
T logistic(T z) {
  using std::exp;
  return T(1) / (T(1) + exp(-z));
}

template <class T>
class Evaluator {
 public:
  Evaluator(const ModelSpec& spec, const Params<T>& params)
      : spec_(spec), p_(params) {}

  // Sum over targets of -ln o_target[gold[target]] under the windowed decode.
  T total_loss(const std::vector<Vec<T>>& xs, const std::vector<std::size_t>& gold,
               std::size_t window) const {
    T sum = 0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      using std::log;
      sum -= log(distribution(xs, t, window)[gold[t]]);
    }
    return sum;
  }

  Vec<T> distribution(const std::vector<Vec<T>>& xs, std::size_t target,
                      std::size_t window) const {
    const std::size_t n = xs.size();
    const std::size_t lo = target > window ? target - window : 0;
    switch (spec_.arch) {
      case Architecture::kBasic: {
        std::vector<Vec<T>> win(xs.begin() + lo, xs.begin() + target + 1);
        return run("decoder.", spec_.decoder, win, nullptr).back();
      }
      case Architecture::kContextual: {
        const auto enc = states("encoder.", spec_.encoder, xs);
        const Vec<T> shift = mv(at("context.S"), enc.back());
        std::vector<Vec<T>> win(xs.begin() + lo, xs.begin() + target + 1);
        return run("decoder.", spec_.decoder, win, &shift).back();
      }
      case Architecture::kBidirectional:
      case Architecture::kMesnil: {
        const std::string bprefix = spec_.shared_encoder ? "encoder." : "backward_encoder.";
        const auto left = states("encoder.", spec_.encoder, xs);
        std::vector<Vec<T>> rx(xs.rbegin(), xs.rend());
        auto right = states(bprefix, spec_.encoder, rx);
        std::vector<Vec<T>> r(right.rbegin(), right.rend());
        if (spec_.arch == Architecture::kBidirectional) {
          std::vector<Vec<T>> alpha;
          for (std::size_t j = lo; j <= target; ++j) {
            Vec<T> a = left[j];
            a.insert(a.end(), r[j].begin(), r[j].end());
            alpha.push_back(std::move(a));
          }
          return run("decoder.", spec_.decoder, alpha, nullptr).back();
        }
        const std::size_t k = spec_.mesnil_context;
        const std::size_t e = left[0].size();
        Vec<T> beta;
        for (std::size_t b = 0; b <= k; ++b) {
          const long pos = static_cast<long>(target + b) - static_cast<long>(k);
          if (pos >= 0) {
            beta.insert(beta.end(), left[pos].begin(), left[pos].end());
          } else {
            beta.insert(beta.end(), e, T(0));
          }
        }
        for (std::size_t b = 0; b <= k; ++b) {
          if (target + b < n) {
            beta.insert(beta.end(), r[target + b].begin(), r[target + b].end());
          } else {
            beta.insert(beta.end(), e, T(0));
          }
        }
        return out_layer("mesnil.", beta);
      }
    }
    return {};
  }

 private:
  const Mat<T>& at(const std::string& name) const { return p_.at(name); }
  bool has(const std::string& name) const { return p_.count(name) > 0; }

  static Vec<T> mv(const Mat<T>& m, const Vec<T>& v) {
    Vec<T> out(m.rows, T(0));
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) out[r] += m.data[r * m.cols + c] * v[c];
    }
    return out;
  }

  void add_bias(Vec<T>& v, const std::string& name) const {
    if (!has(name)) return;
    const auto& b = at(name);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += b.data[i];
  }

  Vec<T> out_layer(const std::string& prefix, const Vec<T>& h) const {
    Vec<T> z = mv(at(prefix + "W"), h);
    add_bias(z, prefix + "b");
    T mx = z[0];
    for (T v : z) mx = v > mx ? v : mx;
    T sum = 0;
    using std::exp;
    for (auto& v : z) {
      v = exp(v - mx);
      sum += v;
    }
    for (auto& v : z) v /= sum;
    return z;
  }

  Vec<T> step(const std::string& pre, CellKind kind, const Vec<T>& x, const Vec<T>& carry,
              const Vec<T>* extra) const {
    const std::size_t H = at(pre + (is_gru(kind) ? "Wz" : "U")).rows;
    Vec<T> h(H);
    if (!is_gru(kind)) {
      Vec<T> a = mv(at(pre + "U"), x);
      const Vec<T> b = mv(at(pre + "V"), carry);
      add_bias(a, pre + "b");
      for (std::size_t i = 0; i < H; ++i) {
        h[i] = logistic(a[i] + b[i] + (extra ? (*extra)[i] : T(0)));
      }
      return h;
    }
    const bool jordan = kind == CellKind::kJordanGru;
    const std::string c = jordan ? "o" : "h";
    const Vec<T> prev = jordan ? mv(at(pre + "T"), carry) : carry;
    Vec<T> rp = mv(at(pre + "Wr"), x), zp = mv(at(pre + "Wz"), x), cp = mv(at(pre + "W" + c), x);
    const Vec<T> ur = mv(at(pre + "Ur"), prev), uz = mv(at(pre + "Uz"), prev);
    add_bias(rp, pre + "br");
    add_bias(zp, pre + "bz");
    add_bias(cp, pre + "b" + c);
    Vec<T> gated(H);
    for (std::size_t i = 0; i < H; ++i) gated[i] = logistic(rp[i] + ur[i]) * prev[i];
    const Vec<T> uc = mv(at(pre + "U" + c), gated);
    for (std::size_t i = 0; i < H; ++i) {
      const T z = logistic(zp[i] + uz[i]);
      const T s = cp[i] + uc[i] + (extra ? (*extra)[i] : T(0));
      using std::tanh;
      const T cand = spec_.cell_options.tanh_candidate ? tanh(s) : logistic(s);
      h[i] = z * cand + (T(1) - z) * prev[i];
    }
    return h;
  }

  // Per-step outputs o_i (decoders) from the zero state.
  std::vector<Vec<T>> run(const std::string& pre, CellKind kind,
                          const std::vector<Vec<T>>& xs, const Vec<T>* extra) const {
    const bool jordan = is_jordan(kind);
    Vec<T> carry(jordan ? at(pre + "out.W").rows : at(pre + (is_gru(kind) ? "Wz" : "U")).rows,
                 T(0));
    std::vector<Vec<T>> outs;
    for (const auto& x : xs) {
      Vec<T> h = step(pre, kind, x, carry, extra);
      outs.push_back(out_layer(pre + "out.", h));
      carry = jordan ? outs.back() : h;
    }
    return outs;
  }

  // Emitted encoder states: h_i for Elman-family, o_i for Jordan-family.
  std::vector<Vec<T>> states(const std::string& pre, CellKind kind,
                             const std::vector<Vec<T>>& xs) const {
    if (is_jordan(kind)) return run(pre, kind, xs, nullptr);
    Vec<T> carry(at(pre + (is_gru(kind) ? "Wz" : "U")).rows, T(0));
    std::vector<Vec<T>> out;
    for (const auto& x : xs) {
      carry = step(pre, kind, x, carry, nullptr);
      out.push_back(carry);
    }
    return out;
  }

  ModelSpec spec_;
  const Params<T>& p_;
};

}  // namespace mdrnn::reference

#endif  // MDRNN_REFERENCE_H_
