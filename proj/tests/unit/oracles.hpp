#pragma once

// Independent reference computations shared by the unit tests.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

// J_n(x) from its power series in long double
inline double bessel_series(int n, double x) {
  n = std::abs(n);
  long double term = 1.0L;
  for (int k = 1; k <= n; ++k) term *= static_cast<long double>(x) / 2.0L / k;
  long double sum = term;
  const long double q = static_cast<long double>(x) * x / 4.0L;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<long double>(k) * (k + n));
    sum += term;
    if (std::fabs(term) < 1e-30L) break;
  }
  return static_cast<double>(sum);
}

// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    nodes[i] = z;
    weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// e^{iHt} A e^{-iHt} through Eigen's own solver, independent of the library path
struct Heisenberg {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver;
  Eigen::MatrixXcd a_eigen;
  Heisenberg(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& a) : solver(h) {
    a_eigen = solver.eigenvectors().adjoint() * a * solver.eigenvectors();
  }
  Eigen::MatrixXcd at(double t) const {
    const std::complex<double> i(0.0, 1.0);
    const Eigen::VectorXcd ph = (i * t * solver.eigenvalues().cast<std::complex<double>>()).array().exp();
    const Eigen::MatrixXcd m = ph.asDiagonal() * a_eigen * ph.conjugate().asDiagonal();
    return solver.eigenvectors() * m * solver.eigenvectors().adjoint();
  }
  // (1/T)∫₀ᵀ at(t) dt by Gauss–Legendre
  Eigen::MatrixXcd cesaro(double horizon, int points) const {
    std::vector<double> z, w;
    gauss_legendre(points, z, w);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(a_eigen.rows(), a_eigen.cols());
    for (std::size_t k = 0; k < z.size(); ++k) acc += w[k] * at(0.5 * horizon * (z[k] + 1.0));
    return 0.5 * acc;
  }
};

// Lyapunov exponent of u(n+1) + u(n-1) + λ·2cos2π(θ + nα) u(n) = E u(n) by
// renormalized transfer-matrix products
inline double lyapunov(double lambda, double alpha, double theta, double energy, long steps) {
  double u = 1.0, u_prev = 0.0, log_norm = 0.0;
  for (long n = 0; n < steps; ++n) {
    const double pot = lambda * 2.0 * std::cos(2.0 * M_PI * std::fmod(theta + n * alpha, 1.0));
    const double next = (energy - pot) * u - u_prev;
    u_prev = u;
    u = next;
    const double s = std::hypot(u, u_prev);
    log_norm += std::log(s);
    u /= s;
    u_prev /= s;
  }
  return log_norm / static_cast<double>(steps);
}

}  // namespace oracle
