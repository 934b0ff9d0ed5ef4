#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncpb {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

/// Global relative threshold for numerical rank decisions.
inline constexpr double kRankTol = 1e-9;

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// Column-stacking vectorization: vec(A X B) = (B^T kron A) vec(X).
Vec vec(const Mat& x);
Mat unvec(const Vec& v, Index rows);
Mat kron(const Mat& a, const Mat& b);

/// Orthonormal basis of the column span, rank cut at rel_tol * sigma_max.
Mat range_basis(const Mat& cols, double rel_tol = kRankTol);
/// Orthonormal basis of the kernel, same rank policy; singular values at or below
/// abs_floor also count as zero (for systems that can vanish identically).
Mat null_space(const Mat& a, double rel_tol = kRankTol, double abs_floor = 0);
/// Singular values, descending.
RVec singular_values(const Mat& a);

/// Largest principal angle (radians) between the column spans of a and b;
/// pi/2 when the dimensions differ.
double subspace_angle(const Mat& a, const Mat& b);

double op_norm(const Mat& a);
double nuclear_norm(const Mat& a);

/// Hermitian eigendecomposition with eigenvalues ascending.
struct HermEig {
    RVec values;
    Mat vectors;
};
HermEig herm_eig(const Mat& h);

/// f applied to a Hermitian matrix through its spectrum.
template <class F>
Mat herm_apply(const Mat& h, F f) {
    HermEig e = herm_eig(h);
    Vec d(e.values.size());
    for (Index i = 0; i < d.size(); ++i) d(i) = f(e.values(i));
    return e.vectors * d.asDiagonal() * e.vectors.adjoint();
}

/// Groups of indices into a sorted spectrum whose consecutive gaps are <= tol.
std::vector<std::vector<Index>> cluster_sorted(const RVec& values, double tol);

double min_herm_eig(const Mat& h);

Mat random_gaussian(Index rows, Index cols, Rng& rng);
Mat random_hermitian(Index n, Rng& rng);
/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
Mat random_unitary(Index n, Rng& rng);

/// Pauli matrices.
Mat pauli_x();
Mat pauli_y();
Mat pauli_z();

}  // namespace ncpb
