#pragma once

#include "humor/model.hpp"
#include "humor/tensor.hpp"

namespace humor {

// One-step fast-gradient perturbation: beta = eps * g / ||g||2 over the
// whole flattened sequence gradient, zero when the gradient is degenerate.
inline Perturbation make_perturbation(const Tensor& embed_grad, double eps) {
  if (eps < 0.0) throw ModelError("make_perturbation: eps must be >= 0");
  Perturbation p;
  p.eps = eps;
  if (eps == 0.0) return p;
  const double norm = embed_grad.l2norm();
  if (norm < 1e-12) return p;
  p.beta = Tensor(embed_grad.shape);
  const double scale = eps / norm;
  for (std::size_t i = 0; i < embed_grad.v.size(); ++i) p.beta.v[i] = scale * embed_grad.v[i];
  p.validate();
  return p;
}

}  // namespace humor
