#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "humor/param_store.hpp"
#include "humor/tape.hpp"

namespace humor {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_entry = -1;
  bool passed = false;
  // Worst error per parameter name.
  std::map<std::string, double> per_param;
};

// Compares the tape gradient of a scalar objective against central finite
// differences, entry by entry, over every parameter the builder binds.
//
// build must construct the same objective for any nearby parameter values:
// anything treated as a constant by the analytic gradient (an adversarial
// perturbation, a detached reference output) has to be precomputed by the
// caller and captured, not rederived inside build.
//
// Error rule: relative where max(|analytic|, |fd|) >= 1e-5, absolute below.
// The finite difference itself carries absolute noise of roughly
// eps_machine * |f| / (2h), about 1e-10 for unit-scale objectives at
// h = 1e-5, so entries below the 1e-5 band cannot be compared relatively
// at a 1e-4 tolerance; their absolute agreement is checked instead.
template <class BuildFn>
GradCheckReport grad_check(BuildFn&& build, ParamStore& params, double h, double tol) {
  Tape tape;
  Var root = build(tape, std::as_const(params));
  tape.backward(root);
  const std::map<std::string, Tensor> analytic = tape.param_grads();

  auto value_at = [&](const ParamStore& p) {
    Tape t;
    Var r = build(t, p);
    return t.val_scalar(r);
  };

  GradCheckReport rep;
  for (const auto& [name, g] : analytic) {
    Tensor& p = params.at(name);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.v.size(); ++i) {
      const double keep = p.v[i];
      p.v[i] = keep + h;
      const double fp = value_at(params);
      p.v[i] = keep - h;
      const double fm = value_at(params);
      p.v[i] = keep;

      const double fd = (fp - fm) / (2.0 * h);
      const double a = g.v[i];
      const double mag = std::max(std::abs(a), std::abs(fd));
      const double err = mag < 1e-5 ? std::abs(a - fd) : std::abs(a - fd) / mag;
      worst = std::max(worst, err);
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst_param = name;
        rep.worst_entry = static_cast<int>(i);
      }
    }
    rep.per_param[name] = worst;
  }
  rep.passed = rep.max_rel_err <= tol;
  return rep;
}

}  // namespace humor
