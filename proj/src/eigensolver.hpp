#pragma once

// LAPACK drivers behind diagonalize(). Internal header.

#include <Eigen/Dense>

namespace qpt::detail {

/// MRRR (dstemr) on a real symmetric tridiagonal matrix. Eigenvector entries
/// keep relative accuracy deep into exponentially decaying tails.
void tridiagonal_eigensystem(const Eigen::VectorXd& diagonal, const Eigen::VectorXd& offdiagonal,
                             Eigen::VectorXd& energies, Eigen::MatrixXd& vectors);

/// dsyevd on a real symmetric matrix.
void symmetric_eigensystem(Eigen::MatrixXd matrix, Eigen::VectorXd& energies,
                           Eigen::MatrixXd& vectors);

/// zheevd on a complex Hermitian matrix.
void hermitian_eigensystem(Eigen::MatrixXcd matrix, Eigen::VectorXd& energies,
                           Eigen::MatrixXcd& vectors);

}  // namespace qpt::detail
