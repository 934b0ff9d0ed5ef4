#pragma once

#include "ncpb/linalg.hpp"
#include "ncpb/star_algebra.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace ncpb {

/// M = (+)_i M_{n_i} with tau(x) = sum_i w_i Tr(x_i), sum_i w_i n_i = 1.
/// Elements are block-diagonal N x N matrices, N = sum_i n_i.
class TracialAlgebra {
public:
    TracialAlgebra(std::vector<Index> blocks, std::vector<double> weights);

    const std::vector<Index>& blocks() const { return blocks_; }
    const std::vector<double>& weights() const { return weights_; }
    Index num_blocks() const { return Index(blocks_.size()); }
    Index size() const { return size_; }
    Index dim() const { return dim_; }
    Index offset(Index i) const { return offsets_[std::size_t(i)]; }

    cd trace(const Mat& x) const;
    Mat identity() const { return Mat::Identity(size_, size_); }
    /// Largest entry outside the diagonal blocks.
    double off_block_norm(const Mat& x) const;
    Mat block(const Mat& x, Index i) const;
    Mat from_blocks(const std::vector<Mat>& xs) const;
    Mat random_element(Rng& rng) const;
    bool is_factor() const { return blocks_.size() == 1; }
    bool is_abelian() const;

private:
    std::vector<Index> blocks_;
    std::vector<double> weights_;
    std::vector<Index> offsets_;
    Index size_ = 0;
    Index dim_ = 0;
};

/// nullopt weights means w_i equal, rescaled so that tau(1) = 1.
TracialAlgebra build_algebra(const std::vector<Index>& blocks, const std::optional<std::vector<double>>& weights);

/// L^2(M, tau) in the orthonormal basis b = e^{(i)}_{ab} / sqrt(w_i), ordered by (i, a, b).
class GnsSpace {
public:
    explicit GnsSpace(std::shared_ptr<const TracialAlgebra> m);

    const TracialAlgebra& algebra() const { return *m_; }
    std::shared_ptr<const TracialAlgebra> algebra_ptr() const { return m_; }
    Index dim() const { return d_; }
    const std::vector<Mat>& basis() const { return basis_; }

    Vec hat(const Mat& x) const;
    Mat element(const Vec& v) const;
    Mat left(const Mat& x) const;
    Mat right(const Mat& x) const;

    /// J(v) = C conj(v).
    const Mat& conj_matrix() const { return c_; }
    Vec apply_j(const Vec& v) const { return c_ * v.conjugate(); }
    /// The complex-linear operator J T J.
    Mat conjugate_by_j(const Mat& t) const { return c_ * t.conjugate() * c_.conjugate(); }

    const Vec& one_hat() const { return one_; }
    Mat p_one() const { return one_ * one_.adjoint(); }

private:
    std::shared_ptr<const TracialAlgebra> m_;
    Index d_ = 0;
    std::vector<Mat> basis_;
    struct Coord {
        Index block, a, b;
    };
    std::vector<Coord> coords_;
    std::vector<Index> start_;
    Mat c_;
    Vec one_;
};

using GnsPtr = std::shared_ptr<const GnsSpace>;
GnsPtr gns_build(const TracialAlgebra& m);

/// Unital *-subalgebra N of M with its GNS projection e_N.
struct Subalgebra {
    GnsPtr gns;
    std::vector<Mat> basis;  // tau-orthonormal
    Mat e;                   // D x D orthogonal projection onto the span of the hats

    Index dim() const { return Index(basis.size()); }
    /// Trace-preserving conditional expectation E_N.
    Mat expect(const Mat& x) const { return gns->element(e * gns->hat(x)); }
    bool contains(const Mat& x, double tol = 1e-9) const;
};

/// Span of the given elements (not closed; callers pass algebras).
Subalgebra make_subalgebra(const GnsPtr& g, const std::vector<Mat>& spanning);
Subalgebra center(const GnsPtr& g);
Subalgebra generated_subalgebra(const GnsPtr& g, const std::vector<Mat>& gens, bool star_closed);

struct ConditionalExpectation {
    Subalgebra target;
    Mat matrix;  // acts on hat coordinates
    Mat operator()(const Mat& x) const { return target.expect(x); }
};
ConditionalExpectation conditional_expectation(const Subalgebra& n);

/// L(Gamma) in multi-matrix form; u[g] is the image of the group element g.
struct GroupAlgebra {
    GnsPtr gns;
    std::vector<Mat> u;
    std::vector<Mat> regular;  // lambda(g) on l^2(Gamma)
    std::vector<std::vector<int>> table;
    int identity = 0;
    std::vector<int> inverse;
};
GroupAlgebra group_algebra(const std::vector<std::vector<int>>& table);

/// Multiplication tables for the builtin groups used by the scenario generator.
std::vector<std::vector<int>> cyclic_group_table(int n);
std::vector<std::vector<int>> symmetric_group3_table();

}  // namespace ncpb
