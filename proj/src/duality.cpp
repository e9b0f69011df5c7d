#include "qpt/duality.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qpt/errors.hpp"

namespace qpt {

namespace {

cplx unit_phase(long double turns) {
  const long double f = turns - std::floor(turns);
  return std::polar(1.0, kTwoPi * static_cast<double>(f));
}

void require_compatible(const FiberedFunction& f, FiberSide side, const FrequencyVector& alpha,
                        const char* what) {
  if (f.side() != side) throw PreconditionError(std::string(what) + ": wrong fiber side");
  const int d = side == FiberSide::physical ? f.modes().dim() : f.sites().dim();
  if (d != alpha.dim()) throw PreconditionError(std::string(what) + ": dimension mismatch with alpha");
}

}  // namespace

FiberedFunction::FiberedFunction(FiberSide side, Window modes, Window sites)
    : side_(side), modes_(std::move(modes)), sites_(std::move(sites)) {
  if (side == FiberSide::physical && sites_.dim() != 1) {
    throw PreconditionError("FiberedFunction: physical sites must be 1-D");
  }
  if (side == FiberSide::dual && modes_.dim() != 1) {
    throw PreconditionError("FiberedFunction: dual modes must be 1-D");
  }
  coeffs_ = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(modes_.size() * sites_.size()));
}

int FiberedFunction::mode_margin() const {
  int margin = modes_.half_width() + 1;
  for (std::size_t mi = 0; mi < modes_.size(); ++mi) {
    for (std::size_t si = 0; si < sites_.size(); ++si) {
      if (at(mi, si) != cplx(0.0)) {
        margin = std::min(margin, modes_.half_width() - linf_norm(modes_.site(mi)));
        break;
      }
    }
  }
  return margin;
}

int FiberedFunction::site_margin() const {
  int margin = sites_.half_width() + 1;
  for (std::size_t si = 0; si < sites_.size(); ++si) {
    for (std::size_t mi = 0; mi < modes_.size(); ++mi) {
      if (at(mi, si) != cplx(0.0)) {
        margin = std::min(margin, sites_.half_width() - linf_norm(sites_.site(si)));
        break;
      }
    }
  }
  return margin;
}

Eigen::VectorXcd FiberedFunction::fiber(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != modes_.dim()) {
    throw PreconditionError("FiberedFunction::fiber: point dimension mismatch");
  }
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(sites_.size()));
  for (std::size_t mi = 0; mi < modes_.size(); ++mi) {
    const LatticeVector mode = modes_.site(mi);
    long double turns = 0.0L;
    for (std::size_t c = 0; c < mode.size(); ++c) turns += static_cast<long double>(mode[c]) * point[c];
    const cplx phase = unit_phase(turns);
    for (std::size_t si = 0; si < sites_.size(); ++si) {
      out(static_cast<Eigen::Index>(si)) += phase * at(mi, si);
    }
  }
  return out;
}

FiberedFunction random_fibered(FiberSide side, const Window& modes, const Window& sites, Rng& rng) {
  FiberedFunction f(side, modes, sites);
  for (Eigen::Index i = 0; i < f.coefficients().size(); ++i) f.coefficients()(i) = rng.complex_normal();
  return f;
}

FiberedFunction duality_transform(const FiberedFunction& psi, const FrequencyVector& alpha) {
  require_compatible(psi, FiberSide::physical, alpha, "duality_transform");
  const Window theta_modes = Window::line(psi.sites().half_width());
  FiberedFunction phi(FiberSide::dual, theta_modes, psi.modes());
  for (std::size_t mi = 0; mi < psi.modes().size(); ++mi) {
    const double m_alpha = alpha.dot_mod1(psi.modes().site(mi));
    for (std::size_t ni = 0; ni < psi.sites().size(); ++ni) {
      const int n = psi.sites().coordinate(ni);
      const cplx value = psi.at(mi, ni);
      if (value == cplx(0.0)) continue;
      phi.at(theta_modes.index(-n), mi) = unit_phase(-static_cast<long double>(n) * m_alpha) * value;
    }
  }
  return phi;
}

FiberedFunction inverse_duality_transform(const FiberedFunction& phi, const FrequencyVector& alpha) {
  require_compatible(phi, FiberSide::dual, alpha, "inverse_duality_transform");
  const Window site_line = Window::line(phi.modes().half_width());
  FiberedFunction psi(FiberSide::physical, phi.sites(), site_line);
  for (std::size_t mi = 0; mi < phi.sites().size(); ++mi) {
    const double m_alpha = alpha.dot_mod1(phi.sites().site(mi));
    for (std::size_t qi = 0; qi < phi.modes().size(); ++qi) {
      const cplx value = phi.at(qi, mi);
      if (value == cplx(0.0)) continue;
      const int n = -phi.modes().coordinate(qi);
      psi.at(mi, site_line.index(n)) = unit_phase(static_cast<long double>(n) * m_alpha) * value;
    }
  }
  return psi;
}

FiberedFunction apply_physical_hamiltonian(const FiberedFunction& psi, const TrigPotential& v,
                                           const FrequencyVector& alpha, double epsilon) {
  require_compatible(psi, FiberSide::physical, alpha, "apply_physical_hamiltonian");
  if (v.dim() != alpha.dim()) throw PreconditionError("apply_physical_hamiltonian: potential dimension");
  const Window& modes = psi.modes();
  const Window& sites = psi.sites();
  FiberedFunction out(FiberSide::physical, modes, sites);
  LatticeVector source(static_cast<std::size_t>(modes.dim()));
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    const LatticeVector m = modes.site(mi);
    for (std::size_t ni = 0; ni < sites.size(); ++ni) {
      cplx acc = 0.0;
      if (ni + 1 < sites.size()) acc += psi.at(mi, ni + 1);
      if (ni > 0) acc += psi.at(mi, ni - 1);
      if (epsilon != 0.0) {
        const int n = sites.coordinate(ni);
        for (const auto& [k, c] : v.coefficients()) {
          for (std::size_t d = 0; d < source.size(); ++d) source[d] = m[d] - k[d];
          if (!modes.contains(source)) continue;
          const cplx shift = unit_phase(static_cast<long double>(n) * alpha.dot_mod1(k));
          acc += epsilon * c * shift * psi.at(modes.index(source), ni);
        }
      }
      out.at(mi, ni) = acc;
    }
  }
  return out;
}

FiberedFunction apply_dual_hamiltonian(const FiberedFunction& phi, const TrigPotential& v,
                                       const FrequencyVector& alpha, double epsilon) {
  require_compatible(phi, FiberSide::dual, alpha, "apply_dual_hamiltonian");
  if (v.dim() != alpha.dim()) throw PreconditionError("apply_dual_hamiltonian: potential dimension");
  const Window& modes = phi.modes();
  const Window& sites = phi.sites();
  FiberedFunction out(FiberSide::dual, modes, sites);
  LatticeVector source(static_cast<std::size_t>(sites.dim()));
  for (std::size_t mi = 0; mi < sites.size(); ++mi) {
    const LatticeVector m = sites.site(mi);
    const cplx up = unit_phase(alpha.dot_mod1(m));
    const cplx down = std::conj(up);
    for (std::size_t qi = 0; qi < modes.size(); ++qi) {
      cplx acc = 0.0;
      if (qi > 0) acc += up * phi.at(qi - 1, mi);
      if (qi + 1 < modes.size()) acc += down * phi.at(qi + 1, mi);
      if (epsilon != 0.0) {
        for (const auto& [k, c] : v.coefficients()) {
          for (std::size_t d = 0; d < source.size(); ++d) source[d] = m[d] - k[d];
          if (!sites.contains(source)) continue;
          acc += epsilon * c * phi.at(qi, sites.index(source));
        }
      }
      out.at(qi, mi) = acc;
    }
  }
  return out;
}

double duality_residual(const FiberedFunction& psi, const TrigPotential& v,
                        const FrequencyVector& alpha, double epsilon,
                        const std::optional<FrequencyVector>& dual_alpha) {
  require_compatible(psi, FiberSide::physical, alpha, "duality_residual");
  const int mode_margin = psi.mode_margin();
  const int site_margin = psi.site_margin();
  if (mode_margin < v.support_radius() || site_margin < 1) {
    throw PreconditionError("duality_residual: support margin (modes " + std::to_string(mode_margin) +
                            ", sites " + std::to_string(site_margin) + ") below interaction range (" +
                            std::to_string(v.support_radius()) + ", 1); the box edge would truncate");
  }
  const double norm = psi.norm();
  if (norm == 0.0) return 0.0;
  const FrequencyVector& other = dual_alpha ? *dual_alpha : alpha;
  const FiberedFunction lhs = duality_transform(apply_physical_hamiltonian(psi, v, alpha, epsilon), alpha);
  const FiberedFunction rhs = apply_dual_hamiltonian(duality_transform(psi, alpha), v, other, epsilon);
  return (lhs.coefficients() - rhs.coefficients()).norm() / norm;
}

DualityCheck verify_duality(const TrigPotential& v, const FrequencyVector& alpha, double epsilon,
                            int test_count, int mode_radius, int site_radius, std::uint64_t seed,
                            const std::optional<FrequencyVector>& dual_alpha) {
  if (test_count < 1) throw PreconditionError("verify_duality: test_count must be positive");
  if (mode_radius < 0 || site_radius < 0) throw PreconditionError("verify_duality: negative box");
  const Window modes(alpha.dim(), mode_radius + v.support_radius());
  const Window sites = Window::line(site_radius + 1);
  const Window inner_modes(alpha.dim(), mode_radius);
  const Window inner_sites = Window::line(site_radius);
  Rng rng(seed);
  DualityCheck out;
  for (int t = 0; t < test_count; ++t) {
    FiberedFunction psi(FiberSide::physical, modes, sites);
    for (std::size_t mi = 0; mi < inner_modes.size(); ++mi) {
      const std::size_t outer_m = modes.index(inner_modes.site(mi));
      for (std::size_t ni = 0; ni < inner_sites.size(); ++ni) {
        psi.at(outer_m, sites.index(inner_sites.coordinate(ni))) = rng.complex_normal();
      }
    }
    out.residuals.push_back(duality_residual(psi, v, alpha, epsilon, dual_alpha));
    out.max_residual = std::max(out.max_residual, out.residuals.back());
  }
  return out;
}

ShearPhases ShearPhases::none() {
  return ShearPhases([](std::span<const int>) { return 0.0; });
}

ShearPhases ShearPhases::canonical(const FrequencyVector& alpha) {
  return ShearPhases([alpha](std::span<const int> m) { return alpha.dot_mod1(m); });
}

L21Norm l21_dual_norm(const FiberedFunction& phi, const ShearPhases& phases, std::size_t max_grid) {
  if (phi.side() != FiberSide::dual) throw PreconditionError("l21_dual_norm: expects a dual function");
  const Window& modes = phi.modes();
  const Window& sites = phi.sites();
  const int degree = modes.half_width();

  // Sheared coefficients b_q = Φ̂(q, m) e^{2πi q θ_m} for every site carrying mass.
  std::vector<Eigen::VectorXcd> sheared;
  for (std::size_t mi = 0; mi < sites.size(); ++mi) {
    Eigen::VectorXcd b(static_cast<Eigen::Index>(modes.size()));
    bool any = false;
    const double shift = phases(sites.site(mi));
    for (std::size_t qi = 0; qi < modes.size(); ++qi) {
      const cplx c = phi.at(qi, mi);
      any = any || c != cplx(0.0);
      b(static_cast<Eigen::Index>(qi)) =
          c * unit_phase(static_cast<long double>(modes.coordinate(qi)) * shift);
    }
    if (any) sheared.push_back(std::move(b));
  }

  // Σ_m |Φ(θ + θ_m; m)| at θ; the common factor z^{-Q} has modulus one.
  auto l1_sum = [&](double theta) {
    const cplx z = std::polar(1.0, kTwoPi * theta);
    double total = 0.0;
    for (const auto& b : sheared) {
      cplx acc = 0.0;
      for (Eigen::Index j = b.size() - 1; j >= 0; --j) acc = acc * z + b(j);
      total += std::abs(acc);
    }
    return total;
  };

  std::size_t grid = 8 * static_cast<std::size_t>(degree + 1);
  double sum_sq = 0.0;
  for (std::size_t g = 0; g < grid; ++g) {
    const double s = l1_sum(static_cast<double>(g) / static_cast<double>(grid));
    sum_sq += s * s;
  }
  double value = std::sqrt(sum_sq / static_cast<double>(grid));
  while (grid < max_grid) {
    double added = 0.0;
    for (std::size_t g = 0; g < grid; ++g) {
      const double s = l1_sum((static_cast<double>(g) + 0.5) / static_cast<double>(grid));
      added += s * s;
    }
    sum_sq += added;
    grid *= 2;
    const double refined = std::sqrt(sum_sq / static_cast<double>(grid));
    const bool agree = std::abs(refined - value) <= 1e-8 * std::max(refined, 1e-300);
    value = refined;
    if (agree) return {value, grid};
  }
  throw NumericalError("l21_dual_norm: trapezoid rule not converged at " + std::to_string(grid) +
                       " points (last value " + std::to_string(value) + ")");
}

}  // namespace qpt
