#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace gridse {

using Real = double;
using Complex = std::complex<Real>;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<Real>;
using SpMatRow = Eigen::SparseMatrix<Real, Eigen::RowMajor>;
using SpVec = Eigen::SparseVector<Real>;
using Triplet = Eigen::Triplet<Real>;

inline constexpr Real kPi = std::numbers::pi_v<Real>;

inline Real deg2rad(Real deg) { return deg * kPi / 180.0; }
inline Real rad2deg(Real rad) { return rad * 180.0 / kPi; }

}  // namespace gridse
