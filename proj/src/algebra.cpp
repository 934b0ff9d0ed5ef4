#include "ncpb/algebra.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace ncpb {

TracialAlgebra::TracialAlgebra(std::vector<Index> blocks, std::vector<double> weights)
    : blocks_(std::move(blocks)), weights_(std::move(weights)) {
    if (blocks_.empty()) throw ValidationError("algebra.blocks: at least one block is required");
    if (weights_.size() != blocks_.size()) throw ValidationError("algebra.weights: one weight per block is required");
    double norm = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        if (blocks_[i] < 1) throw ValidationError("algebra.blocks: block sizes must be positive");
        if (!(weights_[i] > 0) || !std::isfinite(weights_[i])) throw ValidationError("algebra.weights: weights must be positive");
        offsets_.push_back(size_);
        size_ += blocks_[i];
        dim_ += blocks_[i] * blocks_[i];
        norm += weights_[i] * double(blocks_[i]);
    }
    if (std::abs(norm - 1.0) > 1e-10) {
        std::ostringstream os;
        os << "algebra.weights: sum_i w_i n_i = " << norm << ", expected 1";
        throw ValidationError(os.str());
    }
}

cd TracialAlgebra::trace(const Mat& x) const {
    cd s = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        s += weights_[i] * x.block(offsets_[i], offsets_[i], blocks_[i], blocks_[i]).trace();
    return s;
}

double TracialAlgebra::off_block_norm(const Mat& x) const {
    if (x.rows() != size_ || x.cols() != size_) return INFINITY;
    Mat y = x;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        y.block(offsets_[i], offsets_[i], blocks_[i], blocks_[i]).setZero();
    return y.cwiseAbs().maxCoeff();
}

Mat TracialAlgebra::block(const Mat& x, Index i) const {
    std::size_t k = std::size_t(i);
    return x.block(offsets_[k], offsets_[k], blocks_[k], blocks_[k]);
}

Mat TracialAlgebra::from_blocks(const std::vector<Mat>& xs) const {
    Mat y = Mat::Zero(size_, size_);
    for (std::size_t i = 0; i < blocks_.size(); ++i) y.block(offsets_[i], offsets_[i], blocks_[i], blocks_[i]) = xs[i];
    return y;
}

Mat TracialAlgebra::random_element(Rng& rng) const {
    std::vector<Mat> xs;
    for (Index n : blocks_) xs.push_back(random_gaussian(n, n, rng) / std::sqrt(2.0 * double(n)));
    return from_blocks(xs);
}

bool TracialAlgebra::is_abelian() const {
    return std::all_of(blocks_.begin(), blocks_.end(), [](Index n) { return n == 1; });
}

TracialAlgebra build_algebra(const std::vector<Index>& blocks, const std::optional<std::vector<double>>& weights) {
    if (weights) return TracialAlgebra(blocks, *weights);
    double total = 0;
    for (Index n : blocks) {
        if (n < 1) throw ValidationError("algebra.blocks: block sizes must be positive");
        total += double(n);
    }
    return TracialAlgebra(blocks, std::vector<double>(blocks.size(), 1.0 / total));
}

GnsSpace::GnsSpace(std::shared_ptr<const TracialAlgebra> m) : m_(std::move(m)) {
    const auto& bl = m_->blocks();
    d_ = m_->dim();
    c_ = Mat::Zero(d_, d_);
    one_ = Vec::Zero(d_);
    Index s = 0;
    for (std::size_t i = 0; i < bl.size(); ++i) {
        const Index n = bl[i];
        const double w = m_->weights()[i];
        start_.push_back(s);
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < n; ++b) {
                Mat e = Mat::Zero(m_->size(), m_->size());
                e(m_->offset(Index(i)) + a, m_->offset(Index(i)) + b) = 1.0 / std::sqrt(w);
                basis_.push_back(std::move(e));
                coords_.push_back({Index(i), a, b});
                c_(s + b * n + a, s + a * n + b) = 1.0;
            }
        for (Index a = 0; a < n; ++a) one_(s + a * n + a) = std::sqrt(w);
        s += n * n;
    }
}

Vec GnsSpace::hat(const Mat& x) const {
    Vec v(d_);
    for (Index k = 0; k < d_; ++k) {
        const auto& c = coords_[std::size_t(k)];
        Index o = m_->offset(c.block);
        v(k) = std::sqrt(m_->weights()[std::size_t(c.block)]) * x(o + c.a, o + c.b);
    }
    return v;
}

Mat GnsSpace::element(const Vec& v) const {
    Mat x = Mat::Zero(m_->size(), m_->size());
    for (Index k = 0; k < d_; ++k) {
        const auto& c = coords_[std::size_t(k)];
        Index o = m_->offset(c.block);
        x(o + c.a, o + c.b) = v(k) / std::sqrt(m_->weights()[std::size_t(c.block)]);
    }
    return x;
}

Mat GnsSpace::left(const Mat& x) const {
    Mat l = Mat::Zero(d_, d_);
    const auto& bl = m_->blocks();
    for (std::size_t i = 0; i < bl.size(); ++i) {
        const Index n = bl[i], s = start_[i], o = m_->offset(Index(i));
        for (Index a = 0; a < n; ++a)
            for (Index c = 0; c < n; ++c) {
                cd v = x(o + a, o + c);
                if (v == cd(0)) continue;
                for (Index b = 0; b < n; ++b) l(s + a * n + b, s + c * n + b) = v;
            }
    }
    return l;
}

Mat GnsSpace::right(const Mat& x) const {
    Mat r = Mat::Zero(d_, d_);
    const auto& bl = m_->blocks();
    for (std::size_t i = 0; i < bl.size(); ++i) {
        const Index n = bl[i], s = start_[i], o = m_->offset(Index(i));
        for (Index c = 0; c < n; ++c)
            for (Index b = 0; b < n; ++b) {
                cd v = x(o + c, o + b);
                if (v == cd(0)) continue;
                for (Index a = 0; a < n; ++a) r(s + a * n + b, s + a * n + c) = v;
            }
    }
    return r;
}

GnsPtr gns_build(const TracialAlgebra& m) {
    return std::make_shared<const GnsSpace>(std::make_shared<const TracialAlgebra>(m));
}

bool Subalgebra::contains(const Mat& x, double tol) const {
    Vec h = gns->hat(x);
    return (h - e * h).norm() <= tol * std::max(1.0, h.norm());
}

Subalgebra make_subalgebra(const GnsPtr& g, const std::vector<Mat>& spanning) {
    Mat cols(g->dim(), Index(spanning.size()));
    for (std::size_t i = 0; i < spanning.size(); ++i) cols.col(Index(i)) = g->hat(spanning[i]);
    Mat q = range_basis(cols);
    Subalgebra n{g, {}, q * q.adjoint()};
    for (Index j = 0; j < q.cols(); ++j) n.basis.push_back(g->element(q.col(j)));
    return n;
}

Subalgebra center(const GnsPtr& g) {
    const Index d = g->dim();
    Mat sys(d * d, d);
    for (Index k = 0; k < d; ++k) sys.middleRows(k * d, d) = g->right(g->basis()[std::size_t(k)]) - g->left(g->basis()[std::size_t(k)]);
    Mat ns = null_space(sys, kRankTol, 1e-10);
    std::vector<Mat> els;
    for (Index j = 0; j < ns.cols(); ++j) els.push_back(g->element(ns.col(j)));
    return make_subalgebra(g, els);
}

Subalgebra generated_subalgebra(const GnsPtr& g, const std::vector<Mat>& gens, bool star_closed) {
    for (const Mat& x : gens)
        if (g->algebra().off_block_norm(x) > 1e-12) throw ValidationError("generated_subalgebra: generator is not an element of M");
    return make_subalgebra(g, algebra_closure(gens, g->algebra().size(), star_closed));
}

ConditionalExpectation conditional_expectation(const Subalgebra& n) {
    return {n, n.e};
}

namespace {

void validate_group(const std::vector<std::vector<int>>& t, int& identity, std::vector<int>& inverse) {
    const int n = int(t.size());
    if (n == 0) throw ValidationError("group table: empty");
    for (const auto& row : t) {
        if (int(row.size()) != n) throw ValidationError("group table: not square");
        std::vector<bool> seen(std::size_t(n), false);
        for (int v : row) {
            if (v < 0 || v >= n) throw ValidationError("group table: entry out of range");
            if (seen[std::size_t(v)]) throw ValidationError("group table: row is not a permutation");
            seen[std::size_t(v)] = true;
        }
    }
    for (int j = 0; j < n; ++j) {
        std::vector<bool> seen(std::size_t(n), false);
        for (int i = 0; i < n; ++i) {
            int v = t[std::size_t(i)][std::size_t(j)];
            if (seen[std::size_t(v)]) throw ValidationError("group table: column is not a permutation");
            seen[std::size_t(v)] = true;
        }
    }
    identity = -1;
    for (int e = 0; e < n && identity < 0; ++e) {
        bool ok = true;
        for (int g = 0; g < n && ok; ++g) ok = t[std::size_t(e)][std::size_t(g)] == g && t[std::size_t(g)][std::size_t(e)] == g;
        if (ok) identity = e;
    }
    if (identity < 0) throw ValidationError("group table: no identity element");
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                int l = t[std::size_t(t[std::size_t(a)][std::size_t(b)])][std::size_t(c)];
                int r = t[std::size_t(a)][std::size_t(t[std::size_t(b)][std::size_t(c)])];
                if (l != r) throw ValidationError("group table: not associative");
            }
    inverse.assign(std::size_t(n), -1);
    for (int g = 0; g < n; ++g)
        for (int h = 0; h < n; ++h)
            if (t[std::size_t(g)][std::size_t(h)] == identity) inverse[std::size_t(g)] = h;
}

}  // namespace

GroupAlgebra group_algebra(const std::vector<std::vector<int>>& table) {
    GroupAlgebra out;
    validate_group(table, out.identity, out.inverse);
    out.table = table;
    const Index n = Index(table.size());
    for (Index g = 0; g < n; ++g) {
        Mat l = Mat::Zero(n, n);
        for (Index h = 0; h < n; ++h) l(table[std::size_t(g)][std::size_t(h)], h) = 1.0;
        out.regular.push_back(std::move(l));
    }
    BlockStructure s = sort_blocks(decompose_star_algebra(out.regular));
    std::vector<Index> sizes;
    std::vector<double> weights;
    // tau(x) = <x delta_e, delta_e> = Tr(x)/|Gamma| = sum_t k_t Tr(x_t)/|Gamma|
    for (const auto& b : s.blocks) {
        if (b.k != b.m) throw NumericalError("group algebra: regular representation multiplicity mismatch");
        sizes.push_back(b.m);
        weights.push_back(double(b.k) / double(n));
    }
    TracialAlgebra m(sizes, weights);
    out.gns = gns_build(m);
    for (const Mat& l : out.regular) out.u.push_back(m.from_blocks(s.compress(l)));
    return out;
}

std::vector<std::vector<int>> cyclic_group_table(int n) {
    std::vector<std::vector<int>> t(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t[std::size_t(i)][std::size_t(j)] = (i + j) % n;
    return t;
}

std::vector<std::vector<int>> symmetric_group3_table() {
    std::vector<std::array<int, 3>> perms;
    std::array<int, 3> p = {0, 1, 2};
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    auto index_of = [&](const std::array<int, 3>& q) {
        return int(std::find(perms.begin(), perms.end(), q) - perms.begin());
    };
    std::vector<std::vector<int>> t(6, std::vector<int>(6));
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            std::array<int, 3> c{};
            for (int x = 0; x < 3; ++x) c[std::size_t(x)] = perms[std::size_t(i)][std::size_t(perms[std::size_t(j)][std::size_t(x)])];
            t[std::size_t(i)][std::size_t(j)] = index_of(c);
        }
    return t;
}

}  // namespace ncpb
