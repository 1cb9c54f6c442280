#include <doctest.h>

#include <cmath>
#include <map>
#include <utility>

#include "mdrnn/cells.h"
#include "mdrnn/errors.h"
#include "test_util.h"

using namespace mdrnn;

namespace {

using LD = long double;
using LVec = std::vector<LD>;

LD lsig(LD z) { return 1.0L / (1.0L + std::exp(-z)); }

// Naive extended-precision step, reading parameters by name.
struct StepOracle {
  CellKind kind;
  CellOptions options;
  std::map<std::string, std::vector<LVec>> p;

  explicit StepOracle(const Cell& cell) : kind(cell.kind()), options(cell.options()) {
    cell.for_each_param("", ConstParamVisitor([&](const std::string& name, const Matrix& m) {
      std::vector<LVec> rows(m.rows(), LVec(m.cols()));
      for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) rows[r][c] = m(r, c);
      p[name] = rows;
    }));
  }

  LVec mv(const std::string& name, const LVec& v) const {
    const auto& m = p.at(name);
    LVec out(m.size(), 0.0L);
    for (std::size_t r = 0; r < m.size(); ++r)
      for (std::size_t c = 0; c < v.size(); ++c) out[r] += m[r][c] * v[c];
    return out;
  }
  void add_bias(LVec& v, const std::string& name) const {
    if (!options.bias) return;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += p.at(name)[i][0];
  }

  LVec step(const LVec& x, const LVec& carry, const LVec* extra) const {
    const std::size_t H = p.begin()->second.size();
    LVec h(H);
    if (!is_gru(kind)) {
      LVec a = mv("U", x);
      const LVec b = mv("V", carry);
      add_bias(a, "b");
      for (std::size_t i = 0; i < H; ++i) {
        a[i] += b[i] + (extra ? (*extra)[i] : 0.0L);
        h[i] = lsig(a[i]);
      }
      return h;
    }
    const bool jordan = is_jordan(kind);
    const LVec prev = jordan ? mv("T", carry) : carry;
    LVec r = mv("Wr", x), z = mv("Wz", x), c = mv(jordan ? "Wo" : "Wh", x);
    const LVec ur = mv("Ur", prev), uz = mv("Uz", prev);
    add_bias(r, "br");
    add_bias(z, "bz");
    add_bias(c, jordan ? "bo" : "bh");
    LVec gated(H);
    for (std::size_t i = 0; i < H; ++i) {
      r[i] = lsig(r[i] + ur[i]);
      z[i] = lsig(z[i] + uz[i]);
      gated[i] = r[i] * prev[i];
    }
    const LVec uc = mv(jordan ? "Uo" : "Uh", gated);
    for (std::size_t i = 0; i < H; ++i) {
      const LD pre = c[i] + uc[i] + (extra ? (*extra)[i] : 0.0L);
      const LD cand = options.tanh_candidate ? std::tanh(pre) : lsig(pre);
      h[i] = z[i] * cand + (1.0L - z[i]) * prev[i];
    }
    return h;
  }
};

LVec widen(const Vector& v) { return LVec(v.begin(), v.end()); }

LD weighted(const LVec& h, const Vector& w) {
  LD s = 0;
  for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * w[i];
  return s;
}

double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

// Analytic step gradients of L = w . h against central differences of the
// extended-precision oracle. Returns the worst relative error.
double check_step(CellKind kind, CellOptions options, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t I = 3, H = 4, O = 3;
  Cell cell(kind, I, H, O, options);
  cell.initialize(rng, 0.8);
  if (options.bias) {
    cell.for_each_param("", ParamVisitor([&](const std::string& name, Matrix& m) {
      if (name[0] == 'b') for (auto& v : m.span()) v = rng.uniform(-0.5, 0.5);
    }));
  }
  const Vector x = testutil::random_vector(rng, I);
  Vector carry = testutil::random_vector(rng, cell.carry_dim(), 0.0, 1.0);
  const Vector extra = testutil::random_vector(rng, H);
  const Vector w = testutil::random_vector(rng, H);

  StepTape tape;
  const Vector h = cell.forward(x, carry, &extra, &tape);
  Cell grad = cell.zeros_like();
  const StepGrads g = cell.backward(tape, w, grad);

  const StepOracle base(cell);
  double worst = 0.0;
  const LVec h_ref = [&] {
    const LVec e = widen(extra);
    return base.step(widen(x), widen(carry), &e);
  }();
  for (std::size_t i = 0; i < H; ++i) worst = std::max(worst, rel_err(h[i], double(h_ref[i])));

  const LD eps = 1e-6L;
  auto loss = [&](const StepOracle& o, LVec xx, LVec cc, LVec ee) {
    return weighted(o.step(xx, cc, &ee), w);
  };
  // Parameters.
  for (auto& [name, rows] : base.p) {
    const Matrix& gm = grad.param(name);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        StepOracle plus = base, minus = base;
        plus.p[name][r][c] += eps;
        minus.p[name][r][c] -= eps;
        const LD n = (loss(plus, widen(x), widen(carry), widen(extra)) -
                      loss(minus, widen(x), widen(carry), widen(extra))) / (2 * eps);
        worst = std::max(worst, rel_err(gm(r, c), double(n)));
      }
    }
  }
  // Input, carried state and the additive extra term.
  auto check_vec = [&](const Vector& analytic, int which) {
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      LVec xs[3] = {widen(x), widen(carry), widen(extra)};
      LVec xm[3] = {widen(x), widen(carry), widen(extra)};
      xs[which][k] += eps;
      xm[which][k] -= eps;
      const LD n = (loss(base, xs[0], xs[1], xs[2]) - loss(base, xm[0], xm[1], xm[2])) / (2 * eps);
      worst = std::max(worst, rel_err(analytic[k], double(n)));
    }
  };
  check_vec(g.dx, 0);
  check_vec(g.dcarry, 1);
  check_vec(g.dextra, 2);
  return worst;
}

const CellKind kAllKinds[] = {CellKind::kElman, CellKind::kJordan, CellKind::kElmanGru,
                              CellKind::kJordanGru};

}  // namespace

TEST_CASE("zero parameters give sigmoid(0)") {
  for (auto kind : {CellKind::kElman, CellKind::kJordan}) {
    Cell cell(kind, 2, 3, 2);
    const Vector h = cell.forward(Vector{1, -1}, Vector(cell.carry_dim(), 0.3), nullptr, nullptr);
    for (double v : h) CHECK(v == 0.5);
  }
}

TEST_CASE("elman scalar step") {
  Cell cell(CellKind::kElman, 1, 1, 1);
  cell.param("U")(0, 0) = 1;
  cell.param("V")(0, 0) = 1;
  const Vector h = cell.forward(Vector{1}, Vector{0.5}, nullptr, nullptr);
  CHECK(h[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.5))).epsilon(1e-15));
  CHECK(h[0] == doctest::Approx(0.8175744762).epsilon(1e-10));
  // x = 0 and V = 0: independent of h_prev.
  cell.param("V")(0, 0) = 0;
  CHECK(cell.forward(Vector{0}, Vector{0.9}, nullptr, nullptr)[0] == 0.5);
}

TEST_CASE("jordan scalar step") {
  Cell cell(CellKind::kJordan, 1, 1, 2);
  cell.param("U")(0, 0) = 2;
  cell.param("V")(0, 0) = 1;
  cell.param("V")(0, 1) = -1;
  const Vector h = cell.forward(Vector{0}, Vector{0.7, 0.3}, nullptr, nullptr);
  CHECK(h[0] == doctest::Approx(1.0 / (1.0 + std::exp(-0.4))).epsilon(1e-15));
  CHECK(h[0] == doctest::Approx(0.5986876601).epsilon(1e-10));
  // V = 0: a feed-forward layer on x.
  cell.param("V").fill(0);
  const double a = cell.forward(Vector{0.25}, Vector{0.7, 0.3}, nullptr, nullptr)[0];
  const double b = cell.forward(Vector{0.25}, Vector{0.0, 1.0}, nullptr, nullptr)[0];
  CHECK(a == b);
}

TEST_CASE("elman gru endpoints") {
  Cell cell(CellKind::kElmanGru, 2, 2, 2);
  const Vector prev{0.2, -0.6};
  const Vector h0 = cell.forward(Vector{0.3, 0.1}, prev, nullptr, nullptr);
  for (std::size_t i = 0; i < 2; ++i) CHECK(h0[i] == doctest::Approx(0.25 + 0.5 * prev[i]));

  Rng rng(4);
  cell.initialize(rng, 0.5);
  // Saturate z through large input weights.
  cell.param("Wz").fill(0);
  cell.param("Uz").fill(0);
  cell.param("Wz")(0, 0) = cell.param("Wz")(1, 0) = 1e3;
  StepTape tape;
  Vector h = cell.forward(Vector{1, 0}, prev, nullptr, &tape);
  for (std::size_t i = 0; i < 2; ++i) CHECK(h[i] == doctest::Approx(tape.candidate[i]));
  h = cell.forward(Vector{-1, 0}, prev, nullptr, &tape);
  for (std::size_t i = 0; i < 2; ++i) CHECK(h[i] == doctest::Approx(prev[i]));
}

TEST_CASE("jordan gru endpoints") {
  Rng rng(8);
  Cell cell(CellKind::kJordanGru, 2, 3, 2);
  cell.initialize(rng, 0.7);
  StepTape tape;
  Vector h = cell.forward(Vector{0.4, -0.2}, Vector{0, 0}, nullptr, &tape);
  for (std::size_t i = 0; i < 3; ++i) CHECK(h[i] == doctest::Approx(tape.update[i] * tape.candidate[i]));

  Cell zero_t = cell;
  zero_t.param("T").fill(0);
  const Vector a = zero_t.forward(Vector{0.4, -0.2}, Vector{0.9, 0.1}, nullptr, nullptr);
  CHECK(a == h);

  cell.param("Wz").fill(0);
  cell.param("Uz").fill(0);
  cell.param("Wz")(0, 1) = cell.param("Wz")(1, 1) = cell.param("Wz")(2, 1) = -1e3;
  const Vector o_prev{0.6, 0.4};
  h = cell.forward(Vector{0, 1}, o_prev, nullptr, nullptr);
  const Vector t = matvec(cell.param("T"), o_prev);
  for (std::size_t i = 0; i < 3; ++i) CHECK(h[i] == doctest::Approx(t[i]));
}

TEST_CASE("state ranges") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    for (auto kind : kAllKinds) {
      Cell cell(kind, 3, 4, 3);
      cell.initialize(rng, 2.0);
      const Vector x = testutil::random_vector(rng, 3, -3, 3);
      const Vector carry = testutil::random_vector(rng, cell.carry_dim(), -1, 1);
      StepTape tape;
      const Vector h = cell.forward(x, carry, nullptr, &tape);
      if (!is_gru(kind)) {
        for (double v : h) {
          CHECK(v > 0.0);
          CHECK(v < 1.0);
        }
      } else {
        for (std::size_t i = 0; i < 4; ++i) {
          const double lo = std::min(tape.candidate[i], tape.prev[i]);
          const double hi = std::max(tape.candidate[i], tape.prev[i]);
          CHECK(h[i] >= lo - 1e-15);
          CHECK(h[i] <= hi + 1e-15);
        }
      }
    }
  }
}

TEST_CASE("dimension mismatches throw") {
  Cell cell(CellKind::kElman, 3, 2, 2);
  CHECK_THROWS_AS(cell.forward(Vector{1, 2}, Vector{0, 0}, nullptr, nullptr), DimensionError);
  CHECK_THROWS_AS(cell.forward(Vector{1, 2, 3}, Vector{0}, nullptr, nullptr), DimensionError);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  Rng rng(2);
  for (auto kind : kAllKinds) {
    Cell cell(kind, 3, 4, 2);
    cell.initialize(rng);
    StepTape tape;
    cell.forward(testutil::random_vector(rng, 3), Vector(cell.carry_dim(), 0.2), nullptr, &tape);
    Cell grad = cell.zeros_like();
    const auto g = cell.backward(tape, Vector(4, 0.0), grad);
    for (double v : g.dx) CHECK(v == 0.0);
    for (double v : g.dcarry) CHECK(v == 0.0);
    std::as_const(grad).for_each_param("", ConstParamVisitor([](const std::string&, const Matrix& m) {
      for (double v : m.span()) CHECK(v == 0.0);
    }));
  }
}

TEST_CASE("step gradients match finite differences over 100 seeds") {
  for (auto kind : kAllKinds) {
    for (CellOptions opt : {CellOptions{}, CellOptions{true, false}, CellOptions{false, true}}) {
      if (opt.tanh_candidate && !is_gru(kind)) continue;
      double worst = 0.0;
      for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        worst = std::max(worst, check_step(kind, opt, seed));
      }
      INFO(cell_name(kind), " bias=", opt.bias, " tanh=", opt.tanh_candidate);
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("forward is deterministic") {
  Rng rng(6);
  Cell cell(CellKind::kJordanGru, 3, 4, 2);
  cell.initialize(rng);
  const Vector x = testutil::random_vector(rng, 3);
  const Vector c{0.3, 0.7};
  CHECK(cell.forward(x, c, nullptr, nullptr) == cell.forward(x, c, nullptr, nullptr));
}

TEST_CASE("output layer") {
  OutputLayer zero(3, 2, false);
  for (double p : zero.forward(Vector{0.4, -2})) CHECK(p == doctest::Approx(1.0 / 3));
  OutputLayer same(2, 2, false);
  same.weights = Matrix{{0.3, -0.1}, {0.3, -0.1}};
  for (double p : same.forward(Vector{5, 1})) CHECK(p == doctest::Approx(0.5));
  OutputLayer id(2, 2, false);
  id.weights = Matrix::identity(2);
  const Vector o = id.forward(Vector{std::log(2.0), 0.0});
  CHECK(o[0] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(o[1] == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("softmax and nll gradients") {
  const Vector o{0.2, 0.5, 0.3};
  const Vector g = nll_logit_gradient(o, 1);
  CHECK(g == Vector{0.2, 0.5 - 1.0, 0.3});
  // Chain rule through softmax_backward with d(-ln o_y)/d o = -1/o_y.
  Vector dout(3, 0.0);
  dout[1] = -1.0 / o[1];
  const Vector via = softmax_backward(o, dout);
  for (std::size_t i = 0; i < 3; ++i) CHECK(via[i] == doctest::Approx(g[i]).epsilon(1e-14));
}

TEST_CASE("parameter names and shapes") {
  Cell e(CellKind::kElmanGru, 5, 4, 3);
  CHECK(e.param("Wh").shape() == Matrix(4, 5).shape());
  CHECK(e.param("Uz").shape() == Matrix(4, 4).shape());
  Cell j(CellKind::kJordanGru, 5, 4, 3);
  CHECK(j.param("T").rows() == 4);
  CHECK(j.param("T").cols() == 3);
  Cell jb(CellKind::kJordan, 5, 4, 3, CellOptions{true, false});
  CHECK(jb.param("V").cols() == 3);
  CHECK(jb.param("b").rows() == 4);
  CHECK(parse_cell_kind("jordan_gru") == CellKind::kJordanGru);
  CHECK_THROWS(parse_cell_kind("lstm"));
}
