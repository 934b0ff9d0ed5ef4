#include "ncpb/linalg.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ncpb {

Vec vec(const Mat& x) {
    return Eigen::Map<const Vec>(x.data(), x.size());
}

Mat unvec(const Vec& v, Index rows) {
    return Eigen::Map<const Mat>(v.data(), rows, v.size() / rows);
}

Mat kron(const Mat& a, const Mat& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

RVec singular_values(const Mat& a) {
    if (a.size() == 0) return RVec();
    if (a.rows() > 2 * a.cols()) {
        Eigen::HouseholderQR<Mat> qr(a);
        Mat r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
        return Eigen::BDCSVD<Mat>(r).singularValues();
    }
    return Eigen::BDCSVD<Mat>(a).singularValues();
}

Mat range_basis(const Mat& cols, double rel_tol) {
    if (cols.cols() == 0 || cols.rows() == 0) return Mat(cols.rows(), 0);
    Eigen::BDCSVD<Mat> svd(cols, Eigen::ComputeThinU);
    const RVec& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 1e-300) return Mat(cols.rows(), 0);
    Index r = 0;
    while (r < s.size() && s(r) > rel_tol * s(0)) ++r;
    return svd.matrixU().leftCols(r);
}

Mat null_space(const Mat& a, double rel_tol, double abs_floor) {
    const Index n = a.cols();
    if (n == 0) return Mat(0, 0);
    Mat work = a;
    if (a.rows() > 2 * n) {
        Eigen::HouseholderQR<Mat> qr(a);
        work = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    }
    if (work.rows() == 0) return Mat::Identity(n, n);
    Eigen::BDCSVD<Mat> svd(work, Eigen::ComputeFullV);
    const RVec& s = svd.singularValues();
    Index r = 0;
    const double cut = s.size() > 0 ? std::max(rel_tol * s(0), abs_floor) : abs_floor;
    if (s.size() > 0 && s(0) > 1e-300) {
        while (r < s.size() && s(r) > cut) ++r;
    }
    return svd.matrixV().rightCols(n - r);
}

double subspace_angle(const Mat& a, const Mat& b) {
    Mat qa = range_basis(a);
    Mat qb = range_basis(b);
    if (qa.cols() != qb.cols()) return std::numbers::pi / 2;
    if (qa.cols() == 0) return 0.0;
    Mat resid = qb - qa * (qa.adjoint() * qb);
    double s = std::min(1.0, op_norm(resid));
    return std::asin(s);
}

double op_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    RVec s = singular_values(a);
    return s.size() ? s(0) : 0.0;
}

double nuclear_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    return singular_values(a).sum();
}

HermEig herm_eig(const Mat& h) {
    Mat sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

std::vector<std::vector<Index>> cluster_sorted(const RVec& values, double tol) {
    std::vector<std::vector<Index>> out;
    for (Index i = 0; i < values.size(); ++i) {
        if (out.empty() || values(i) - values(out.back().back()) > tol) out.emplace_back();
        out.back().push_back(i);
    }
    return out;
}

double min_herm_eig(const Mat& h) {
    if (h.size() == 0) return 0.0;
    return herm_eig(h).values(0);
}

Mat random_gaussian(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = cd(n(rng), n(rng));
    return m;
}

Mat random_hermitian(Index n, Rng& rng) {
    Mat g = random_gaussian(n, n, rng);
    return 0.5 * (g + g.adjoint());
}

Mat random_unitary(Index n, Rng& rng) {
    Mat g = random_gaussian(n, n, rng);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < n; ++j) {
        cd d = r(j, j);
        double a = std::abs(d);
        q.col(j) *= (a > 0 ? d / a : cd(1.0));
    }
    return q;
}

Mat pauli_x() {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = m(1, 0) = 1.0;
    return m;
}

Mat pauli_y() {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = cd(0, -1);
    m(1, 0) = cd(0, 1);
    return m;
}

Mat pauli_z() {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

}  // namespace ncpb
