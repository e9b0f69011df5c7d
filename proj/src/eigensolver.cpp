#include "eigensolver.hpp"

#include <complex>
#include <string>
#include <vector>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "qpt/errors.hpp"

namespace qpt::detail {

namespace {

void check_info(lapack_int info, const char* routine) {
  if (info != 0) {
    throw NumericalError(std::string("eigensolver: LAPACK ") + routine + " returned info = " +
                         std::to_string(info));
  }
}

}  // namespace

void tridiagonal_eigensystem(const Eigen::VectorXd& diagonal, const Eigen::VectorXd& offdiagonal,
                             Eigen::VectorXd& energies, Eigen::MatrixXd& vectors) {
  const auto n = static_cast<lapack_int>(diagonal.size());
  std::vector<double> d(diagonal.data(), diagonal.data() + n);
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  for (lapack_int i = 0; i + 1 < n; ++i) e[static_cast<std::size_t>(i)] = offdiagonal(i);
  energies.resize(n);
  vectors.resize(n, n);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  lapack_logical tryrac = 1;
  const lapack_int info =
      LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'A', n, d.data(), e.data(), 0.0, 0.0, 0, 0, &found,
                     energies.data(), vectors.data(), n, n, support.data(), &tryrac);
  check_info(info, "dstemr");
  if (found != n) {
    throw NumericalError("eigensolver: dstemr found " + std::to_string(found) + " of " +
                         std::to_string(n) + " eigenpairs");
  }
}

void symmetric_eigensystem(Eigen::MatrixXd matrix, Eigen::VectorXd& energies,
                           Eigen::MatrixXd& vectors) {
  const auto n = static_cast<lapack_int>(matrix.rows());
  energies.resize(n);
  check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, matrix.data(), n, energies.data()),
             "dsyevd");
  vectors = std::move(matrix);
}

void hermitian_eigensystem(Eigen::MatrixXcd matrix, Eigen::VectorXd& energies,
                           Eigen::MatrixXcd& vectors) {
  const auto n = static_cast<lapack_int>(matrix.rows());
  energies.resize(n);
  check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', n, matrix.data(), n, energies.data()),
             "zheevd");
  vectors = std::move(matrix);
}

}  // namespace qpt::detail
