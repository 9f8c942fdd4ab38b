#pragma once

#include "resdeconv/conv.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace resdeconv {

/// Hard stop for ird_auto_n.
inline constexpr std::size_t kIrdIterationCap = 100000;

template <typename Scalar>
struct IrdConfig {
  Scalar sigma = Scalar(0.01);  ///< in (0, 1); the damping is 1 - sigma
  std::size_t n_iters = 100;    ///< N, number of residual updates
  PriorPatch<Scalar> prior;     ///< f_x
  std::size_t trace_every = 0;  ///< 0 disables image tracing

  void validate() const {
    if (!(sigma > Scalar(0) && sigma < Scalar(1))) {
      throw std::invalid_argument("IrdConfig: sigma must lie in (0, 1)");
    }
  }
};

template <typename Scalar>
struct ResidueSample {
  std::size_t n = 0;
  Image<Scalar> residue;  ///< r_n
  Scalar energy = 0;      ///< ||r_n||_2
};

template <typename Scalar>
struct PartialOutput {
  std::size_t n = 0;
  Image<Scalar> estimate;  ///< f_x * k_ * s_n
};

/// Residue energies are recorded for every n = 0..N; images only at the
/// sampled iterations (n = 0, every trace_every-th, and N).
template <typename Scalar>
struct IrdTrace {
  std::vector<ResidueSample<Scalar>> residues;
  std::vector<PartialOutput<Scalar>> partial_outputs;
  std::vector<Scalar> energies;
};

template <typename Scalar>
struct IrdResult {
  Image<Scalar> x_hat;
  IrdTrace<Scalar> trace;
};

template <typename Scalar>
struct IrdAutoResult {
  Image<Scalar> x_hat;
  std::size_t n_used = 0;
  bool capped = false;  ///< kIrdIterationCap reached before rel_tol
};

/// Precomputed spectra of the two operators the iteration needs:
/// the residual map k * f_x * k_ and the output map f_x * k_.
template <typename Scalar>
class ResidualIteration {
 public:
  ResidualIteration(const Kernel<Scalar>& k, const PriorPatch<Scalar>& prior, Scalar sigma, Shape shape)
      : damping_(Scalar(1) - sigma) {
    const ComplexImage<Scalar> kh = transfer_function(k, shape);
    const Image<Scalar> ch = prior_transfer_function(prior, shape);
    gram_ = kh.cwiseAbs2().cwiseProduct(ch);
    back_ = (kh.conjugate().array() * ch.array().template cast<std::complex<Scalar>>()).matrix();
  }

  /// r <- (1 - sigma) r - k * f_x * k_ * r
  void step(Image<Scalar>& r) const { r = damping_ * r - apply_transfer(r, gram_); }

  /// f_x * k_ * s
  Image<Scalar> project(const Image<Scalar>& s) const { return apply_transfer(s, back_); }

 private:
  Scalar damping_;
  Image<Scalar> gram_;
  ComplexImage<Scalar> back_;
};

/// Iterative residual deconvolution: the truncated series
/// f_x * k_ * sum_{n=0}^{N} ((1 - sigma) I - H C H^T)^n b.
template <typename Derived>
IrdResult<typename Derived::Scalar> ird_deconvolve(const Eigen::MatrixBase<Derived>& b,
                                                   const Kernel<typename Derived::Scalar>& k,
                                                   const IrdConfig<typename Derived::Scalar>& cfg) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  require_nonempty(b, "ird_deconvolve");
  const ResidualIteration<Scalar> iteration(k, cfg.prior, cfg.sigma, shape_of(b));

  IrdResult<Scalar> result;
  auto& trace = result.trace;
  trace.energies.reserve(cfg.n_iters + 1);

  Image<Scalar> r = b;
  Image<Scalar> s = b;
  auto record = [&](std::size_t n) {
    trace.energies.push_back(r.norm());
    const bool sampled = cfg.trace_every > 0 && (n % cfg.trace_every == 0 || n == cfg.n_iters);
    if (sampled) {
      trace.residues.push_back({n, r, trace.energies.back()});
      trace.partial_outputs.push_back({n, iteration.project(s)});
    }
  };

  record(0);
  for (std::size_t n = 1; n <= cfg.n_iters; ++n) {
    iteration.step(r);
    s += r;
    record(n);
  }
  result.x_hat = iteration.project(s);
  return result;
}

/// The n-th unfolded component f_x * k_ * r_n.
template <typename Derived>
Image<typename Derived::Scalar> ird_series_term(const Eigen::MatrixBase<Derived>& b,
                                                const Kernel<typename Derived::Scalar>& k,
                                                const PriorPatch<typename Derived::Scalar>& prior,
                                                typename Derived::Scalar sigma, std::size_t n) {
  using Scalar = typename Derived::Scalar;
  IrdConfig<Scalar> cfg;
  cfg.sigma = sigma;
  cfg.prior = prior;
  cfg.validate();
  require_nonempty(b, "ird_series_term");
  const ResidualIteration<Scalar> iteration(k, prior, sigma, shape_of(b));
  Image<Scalar> r = b;
  for (std::size_t i = 0; i < n; ++i) iteration.step(r);
  return iteration.project(r);
}

/// Runs the residual iteration until ||r_n|| <= rel_tol ||b|| (cfg.n_iters is ignored).
template <typename Derived>
IrdAutoResult<typename Derived::Scalar> ird_auto_n(const Eigen::MatrixBase<Derived>& b,
                                                   const Kernel<typename Derived::Scalar>& k,
                                                   const IrdConfig<typename Derived::Scalar>& cfg,
                                                   typename Derived::Scalar rel_tol) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  require_nonempty(b, "ird_auto_n");
  if (!(rel_tol > Scalar(0))) {
    throw std::invalid_argument("ird_auto_n: rel_tol must be positive");
  }
  const ResidualIteration<Scalar> iteration(k, cfg.prior, cfg.sigma, shape_of(b));
  const Scalar target = rel_tol * b.norm();

  IrdAutoResult<Scalar> out;
  Image<Scalar> r = b;
  Image<Scalar> s = b;
  while (r.norm() > target) {
    if (out.n_used == kIrdIterationCap) {
      out.capped = true;
      break;
    }
    iteration.step(r);
    s += r;
    ++out.n_used;
  }
  out.x_hat = iteration.project(s);
  return out;
}

/// Smallest N with rho^{N+1} / (1 - rho) <= tail, the truncation bound of the
/// series relative to its limit.
template <typename Scalar>
std::size_t iterations_for_tail_bound(Scalar rho_max, Scalar tail) {
  if (!(rho_max >= Scalar(0) && rho_max < Scalar(1)) || !(tail > Scalar(0))) {
    throw std::invalid_argument("iterations_for_tail_bound: need 0 <= rho < 1 and tail > 0");
  }
  if (rho_max == Scalar(0)) return 0;
  const double n = std::log(double(tail) * (1.0 - double(rho_max))) / std::log(double(rho_max)) - 1.0;
  return n <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(n));
}

}  // namespace resdeconv
