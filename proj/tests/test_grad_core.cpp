#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "humor/grad_check.hpp"
#include "humor/param_store.hpp"
#include "humor/rng.hpp"
#include "humor/tape.hpp"
#include "humor/tensor.hpp"

using namespace humor;

namespace {

Tensor random_tensor(Shape s, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(s);
  for (auto& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

// Central finite difference of a scalar-valued function of one tensor entry.
template <class F>
double fdiff(F&& f, Tensor& t, std::size_t i, double h = 1e-5) {
  const double keep = t.v[i];
  t.v[i] = keep + h;
  const double fp = f();
  t.v[i] = keep - h;
  const double fm = f();
  t.v[i] = keep;
  return (fp - fm) / (2.0 * h);
}

double rel_err(double a, double b) {
  if (std::abs(a) < 1e-8) return std::abs(a - b);
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace

TEST_CASE("primitive forward values") {
  Tape t;

  SECTION("softmax of equal logits is uniform") {
    Var s = t.softmax(t.input(Tensor::vec({0.0, 0.0})));
    CHECK(t.val(s)[0] == Catch::Approx(0.5).margin(1e-15));
    CHECK(t.val(s)[1] == Catch::Approx(0.5).margin(1e-15));
  }

  SECTION("l2norm of a 3-4 vector") {
    Var n = t.l2norm(t.input(Tensor::vec({3.0, 4.0})));
    CHECK(t.val_scalar(n) == Catch::Approx(5.0).margin(1e-15));
  }

  SECTION("matmul dot product") {
    Var a = t.input(Tensor::mat(1, 2, {1.0, 2.0}));
    Var b = t.input(Tensor::mat(2, 1, {3.0, 4.0}));
    Var c = t.matmul(a, b);
    CHECK(t.shape(c) == mat_shape(1, 1));
    CHECK(t.val(c)[0] == Catch::Approx(11.0).margin(1e-15));
  }

  SECTION("matvec") {
    Var w = t.input(Tensor::mat(2, 2, {1.0, 2.0, 3.0, 4.0}));
    Var x = t.input(Tensor::vec({1.0, -1.0}));
    Var y = t.matmul(w, x);
    CHECK(t.val(y)[0] == Catch::Approx(-1.0));
    CHECK(t.val(y)[1] == Catch::Approx(-1.0));
  }

  SECTION("concat and split round-trip") {
    Var a = t.input(Tensor::vec({1.0, 2.0}));
    Var b = t.input(Tensor::vec({3.0}));
    Var c = t.concat(a, b);
    auto [x, y] = t.split(c, 2);
    CHECK(t.val_tensor(x) == t.val_tensor(a));
    CHECK(t.val_tensor(y) == t.val_tensor(b));
  }

  SECTION("shape mismatch throws") {
    Var a = t.input(Tensor::vec({1.0, 2.0}));
    Var b = t.input(Tensor::vec({1.0, 2.0, 3.0}));
    CHECK_THROWS_AS(t.add(a, b), TapeError);
    CHECK_THROWS_AS(t.mul(a, b), TapeError);
    CHECK_THROWS_AS(t.matmul(a, b), TapeError);
  }
}

TEST_CASE("backward basics") {
  SECTION("d(x*x)/dx = 2x") {
    Tape t;
    ParamStore ps;
    ps.add("x", Tensor::scalar(3.0));
    Var x = t.param(ps, "x");
    Var y = t.mul(x, x);
    t.backward(y);
    CHECK(t.param_grads().at("x").v[0] == Catch::Approx(6.0).margin(1e-12));
  }

  SECTION("sum of softmax is constant, gradient is zero") {
    Tape t;
    ParamStore ps;
    ps.add("v", Tensor::vec({0.3, -1.2, 2.0}));
    Var v = t.param(ps, "v");
    Var root = t.sum(t.softmax(v));
    t.backward(root);
    const auto grads = t.param_grads();
    for (double g : grads.at("v").v) CHECK(std::abs(g) < 1e-12);
  }

  SECTION("cross-entropy of softmax: dz = softmax(z) - y") {
    // Oracle: central finite differences on the logits.
    ParamStore ps;
    Rng rng(11);
    ps.add("z", random_tensor(vec_shape(4), rng));
    const int label = 2;

    auto value = [&]() {
      Tape t;
      Var z = t.input(ps.at("z"));
      Var p = t.softmax(z);
      Var picked = t.slice(p, label, 1);
      return -std::log(t.val(picked)[0]);
    };

    Tape t;
    Var z = t.param(ps, "z");
    Var p = t.softmax(z);
    Var root = t.scale(t.log(t.slice(p, label, 1)), -1.0);
    Var root_s = t.sum(root);
    t.backward(root_s);
    Tensor analytic = t.param_grads().at("z");

    for (std::size_t i = 0; i < 4; ++i) {
      const double fd = fdiff(value, ps.at("z"), i);
      CHECK(rel_err(analytic.v[i], fd) < 1e-6);
      // Closed form for this loss.
      const double expect = t.val(p)[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);
      CHECK(analytic.v[i] == Catch::Approx(expect).margin(1e-9));
    }
  }

  SECTION("unreferenced parameter gets exactly zero gradient") {
    Tape t;
    ParamStore ps;
    ps.add("used", Tensor::scalar(1.5));
    ps.add("unused", Tensor::vec({1.0, 2.0}));
    Var u = t.param(ps, "used");
    t.param(ps, "unused");
    t.backward(t.square(u));
    const auto grads = t.param_grads();
    for (double g : grads.at("unused").v) CHECK(g == 0.0);
  }

  SECTION("non-scalar root throws") {
    Tape t;
    Var v = t.input(Tensor::vec({1.0, 2.0}));
    CHECK_THROWS_AS(t.backward(v), TapeError);
  }

  SECTION("backward is linear in the root") {
    ParamStore ps;
    Rng rng(5);
    ps.add("x", random_tensor(vec_shape(3), rng));
    const double a = 1.7, b = -0.4;

    auto grads_of = [&](auto&& make_root) {
      Tape t;
      Var x = t.param(ps, "x");
      t.backward(make_root(t, x));
      return t.param_grads().at("x");
    };
    Tensor gf = grads_of([](Tape& t, Var x) { return t.sum(t.square(x)); });
    Tensor gg = grads_of([](Tape& t, Var x) { return t.sum(t.tanh(x)); });
    Tensor gc = grads_of([&](Tape& t, Var x) {
      return t.add(t.scale(t.sum(t.square(x)), a), t.scale(t.sum(t.tanh(x)), b));
    });
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(gc.v[i] == Catch::Approx(a * gf.v[i] + b * gg.v[i]).margin(1e-12));
  }
}

TEST_CASE("every primitive matches finite differences on random inputs") {
  Rng rng(20250801);
  const double tol = 1e-4;
  const double h = 1e-5;

  // Each case: a scalar objective exercising one primitive.
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const int m = 1 + static_cast<int>(rng.below(4));

    ParamStore ps;
    ps.add("a", random_tensor(mat_shape(n, m), rng));
    ps.add("b", random_tensor(mat_shape(n, m), rng));
    ps.add("v", random_tensor(vec_shape(m), rng));
    ps.add("w", random_tensor(mat_shape(m, n), rng));
    ps.add("p", random_tensor(vec_shape(n), rng, 0.2, 3.0));  // positive, for log
    ps.add("s", random_tensor(scalar_shape(), rng));

    const int which = trial % 14;
    auto build = [&](Tape& t, const ParamStore& p) -> Var {
      Var a = t.param(p, "a");
      Var b = t.param(p, "b");
      Var v = t.param(p, "v");
      Var w = t.param(p, "w");
      Var pos = t.param(p, "p");
      Var s = t.param(p, "s");
      switch (which) {
        case 0: return t.sum(t.add(a, b));
        case 1: return t.sum(t.add(a, v));  // row broadcast
        case 2: return t.sum(t.sub(a, b));
        case 3: return t.sum(t.mul(a, b));
        case 4: return t.sum(t.mul(s, a));  // scalar broadcast
        case 5: return t.sum(t.matmul(a, w));
        case 6: return t.sum(t.tanh(a));
        case 7: return t.sum(t.sigmoid(a));
        case 8: return t.sum(t.exp(t.scale(a, 0.3)));
        case 9: return t.sum(t.log(pos));
        case 10: return t.sum(t.softmax(a));
        case 11: return t.mean(t.square(a));
        case 12: return t.l2norm(a);
        case 13: {
          Var row0 = t.row(a, 0);
          Var cat = t.concat(row0, v);
          auto [x, y] = t.split(cat, m / 2 + 1);
          return t.add(t.sum(t.square(x)), t.sum(y));
        }
        default: return t.sum(a);
      }
    };

    GradCheckReport rep = grad_check(build, ps, h, tol);
    INFO("trial " << trial << " primitive case " << which << " worst "
                  << rep.worst_param << "[" << rep.worst_entry << "]");
    CHECK(rep.max_rel_err < tol);
  }
}

TEST_CASE("softmax numerical properties") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int cols = 2 + static_cast<int>(rng.below(6));
    Tensor z = random_tensor(vec_shape(cols), rng, -30.0, 30.0);

    Tape t;
    Var p = t.softmax(t.input(z));
    double sum = 0.0;
    for (double x : t.val(p)) sum += x;
    CHECK(std::abs(sum - 1.0) < 1e-12);

    // Invariance to adding a constant to the row.
    Tensor zs = z;
    const double c = rng.uniform(-50.0, 50.0);
    for (auto& x : zs.v) x += c;
    Var p2 = t.softmax(t.input(zs));
    for (int j = 0; j < cols; ++j)
      CHECK(std::abs(t.val(p)[j] - t.val(p2)[j]) < 1e-9);
  }

  SECTION("large logits do not overflow") {
    Tape t;
    Var p = t.softmax(t.input(Tensor::vec({1000.0, 0.0})));
    CHECK(t.val(p)[0] == Catch::Approx(1.0));
  }

  SECTION("non-finite input throws") {
    Tape t;
    Tensor bad = Tensor::vec({1.0, 2.0});
    bad.v[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(t.input(bad), NonFiniteError);
  }
}

TEST_CASE("grad_check endpoints") {
  SECTION("quadratic is exact up to rounding") {
    ParamStore ps;
    Rng rng(3);
    ps.add("p", random_tensor(vec_shape(6), rng));
    auto build = [](Tape& t, const ParamStore& p) {
      return t.sum(t.square(t.param(p, "p")));
    };
    GradCheckReport rep = grad_check(build, ps, 1e-5, 1e-8);
    CHECK(rep.max_rel_err < 1e-8);
    CHECK(rep.passed);
  }

  SECTION("constant function: both gradients zero") {
    ParamStore ps;
    ps.add("p", Tensor::vec({1.0, -2.0}));
    auto build = [](Tape& t, const ParamStore& p) {
      t.param(p, "p");
      return t.constant(4.0);
    };
    GradCheckReport rep = grad_check(build, ps, 1e-5, 1e-10);
    CHECK(rep.max_rel_err == 0.0);
  }
}

TEST_CASE("parameter store serialization round-trips bit-exactly") {
  Rng rng(7);
  ParamStore ps;
  ps.add("alpha", random_tensor(mat_shape(3, 4), rng));
  ps.add("beta", random_tensor(vec_shape(5), rng));
  ps.add("gamma", Tensor::scalar(-0.123456789012345678));

  std::stringstream buf;
  ps.save(buf);
  ParamStore back = ParamStore::load(buf);
  CHECK(back == ps);

  std::stringstream buf2;
  back.save(buf2);
  CHECK(buf.str() == buf2.str());
}
