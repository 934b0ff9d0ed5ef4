#include "ncpb/star_algebra.hpp"

#include <algorithm>
#include <cmath>

namespace ncpb {

Index BlockStructure::algebra_dim() const {
    Index s = 0;
    for (const auto& b : blocks) s += b.m * b.m;
    return s;
}

std::vector<Index> BlockStructure::block_sizes() const {
    std::vector<Index> out;
    for (const auto& b : blocks) out.push_back(b.m);
    return out;
}

std::vector<Mat> BlockStructure::compress(const Mat& x) const {
    Mat y = w.adjoint() * x * w;
    std::vector<Mat> out;
    out.reserve(blocks.size());
    for (const auto& b : blocks) {
        Mat xt = Mat::Zero(b.m, b.m);
        for (Index a = 0; a < b.m; ++a)
            for (Index bb = 0; bb < b.m; ++bb) {
                cd s = 0;
                for (Index c = 0; c < b.k; ++c) s += y(b.offset + a * b.k + c, b.offset + bb * b.k + c);
                xt(a, bb) = s / double(b.k);
            }
        out.push_back(std::move(xt));
    }
    return out;
}

Mat BlockStructure::embed(const std::vector<Mat>& xs) const {
    Mat y = Mat::Zero(dim, dim);
    for (std::size_t t = 0; t < blocks.size(); ++t) {
        const auto& b = blocks[t];
        for (Index a = 0; a < b.m; ++a)
            for (Index bb = 0; bb < b.m; ++bb)
                for (Index c = 0; c < b.k; ++c) y(b.offset + a * b.k + c, b.offset + bb * b.k + c) = xs[t](a, bb);
    }
    return w * y * w.adjoint();
}

double BlockStructure::membership_residual(const Mat& x) const {
    return (x - project(x)).norm() / std::max(1.0, x.norm());
}

Mat BlockStructure::matrix_unit(std::size_t t, Index a, Index b) const {
    const auto& bl = blocks[t];
    Mat out = Mat::Zero(dim, dim);
    for (Index c = 0; c < bl.k; ++c)
        out += w.col(bl.offset + a * bl.k + c) * w.col(bl.offset + b * bl.k + c).adjoint();
    return out;
}

Mat BlockStructure::central_projection(std::size_t t) const {
    const auto& bl = blocks[t];
    Index n = bl.m * bl.k;
    return w.middleCols(bl.offset, n) * w.middleCols(bl.offset, n).adjoint();
}

Mat BlockStructure::random_element(Rng& rng, bool hermitian) const {
    std::vector<Mat> xs;
    for (const auto& b : blocks) xs.push_back(hermitian ? random_hermitian(b.m, rng) : random_gaussian(b.m, b.m, rng));
    return embed(xs);
}

Vec BlockStructure::coords(const Mat& x) const {
    Vec out(algebra_dim());
    Index p = 0;
    for (const Mat& xt : compress(x))
        for (Index a = 0; a < xt.rows(); ++a)
            for (Index b = 0; b < xt.cols(); ++b) out(p++) = xt(a, b);
    return out;
}

Mat BlockStructure::from_coords(const Vec& c) const {
    std::vector<Mat> xs;
    Index p = 0;
    for (const auto& b : blocks) {
        Mat xt(b.m, b.m);
        for (Index a = 0; a < b.m; ++a)
            for (Index bb = 0; bb < b.m; ++bb) xt(a, bb) = c(p++);
        xs.push_back(std::move(xt));
    }
    return embed(xs);
}

namespace {

Mat herm_part(const Mat& x) { return 0.5 * (x + x.adjoint()); }

BlockStructure attempt_decompose(const Mat& q, Index d, Rng& rng) {
    const Index r = q.cols();
    auto elem = [&](const Vec& c) { return unvec(q * c, d); };
    auto random_coeffs = [&](Index n) { return Vec(random_gaussian(n, 1, rng).col(0)); };

    // Two generic Hermitian elements generate B, so their commutant inside B is Z(B).
    std::vector<Mat> gens = {herm_part(elem(random_coeffs(r))), herm_part(elem(random_coeffs(r)))};
    Mat sys(2 * d * d, r);
    for (Index i = 0; i < r; ++i) {
        Mat x = unvec(q.col(i), d);
        for (std::size_t g = 0; g < gens.size(); ++g)
            sys.block(Index(g) * d * d, i, d * d, 1) = vec(x * gens[g] - gens[g] * x);
    }
    // q has orthonormal columns, so sys has scale ||g||; a vanishing system must give all of B.
    const double scale = std::max(gens[0].norm(), gens[1].norm());
    Mat zc = null_space(sys, kRankTol, 1e-10 * scale);
    const Index nz = zc.cols();
    if (nz == 0) throw NumericalError("decomposition: empty center (algebra not unital?)");

    Mat z = herm_part(elem(zc * random_coeffs(nz)));
    HermEig ez = herm_eig(z);
    double zscale = std::max(1.0, ez.values.cwiseAbs().maxCoeff());
    auto zcl = cluster_sorted(ez.values, 1e-7 * zscale);
    if (Index(zcl.size()) != nz) throw NumericalError("decomposition: central spectrum not generic");

    BlockStructure s;
    s.dim = d;
    s.w = Mat::Zero(d, d);
    Mat y = elem(Vec(random_gaussian(r, 1, rng).col(0)));
    Index offset = 0;
    for (const auto& cl : zcl) {
        const Index n = Index(cl.size());
        Mat yt(d, n);
        for (Index j = 0; j < n; ++j) yt.col(j) = ez.vectors.col(cl[j]);
        Mat h = yt.adjoint() * gens[0] * yt;
        HermEig eh = herm_eig(h);
        double hscale = std::max(1.0, eh.values.cwiseAbs().maxCoeff());
        auto hcl = cluster_sorted(eh.values, 1e-7 * hscale);
        const Index m = Index(hcl.size());
        if (n % m != 0) throw NumericalError("decomposition: uneven multiplicities");
        const Index k = n / m;
        std::vector<Mat> us;
        for (const auto& c : hcl) {
            if (Index(c.size()) != k) throw NumericalError("decomposition: uneven multiplicities");
            Mat u(n, k);
            for (Index j = 0; j < k; ++j) u.col(j) = eh.vectors.col(c[j]);
            us.push_back(yt * u);
        }
        s.w.middleCols(offset, k) = us[0];
        for (Index a = 1; a < m; ++a) {
            // e_aa y e_00 = c * (partial isometry), generically c != 0.
            Mat x = us[a].adjoint() * y * us[0];
            double c = x.norm() / std::sqrt(double(k));
            if (c < 1e-6 * std::max(1.0, y.norm())) throw NumericalError("decomposition: degenerate off-diagonal unit");
            Mat v = x / c;
            if ((v.adjoint() * v - Mat::Identity(k, k)).norm() > 1e-6)
                throw NumericalError("decomposition: off-diagonal unit not a partial isometry");
            s.w.middleCols(offset + a * k, k) = us[a] * v;
        }
        s.blocks.push_back({m, k, offset});
        offset += n;
    }
    if (s.algebra_dim() != r) throw NumericalError("decomposition: block dimensions do not add up");
    if ((s.w.adjoint() * s.w - Mat::Identity(d, d)).norm() > 1e-8) throw NumericalError("decomposition: W not unitary");
    for (Index i = 0; i < r; ++i)
        if (s.membership_residual(unvec(q.col(i), d)) > 1e-8) throw NumericalError("decomposition: basis not reproduced");
    return s;
}

}  // namespace

BlockStructure decompose_star_algebra(const std::vector<Mat>& basis, std::uint64_t seed) {
    if (basis.empty()) throw ValidationError("decomposition: empty basis");
    const Index d = basis[0].rows();
    Mat cols(d * d, Index(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) cols.col(Index(i)) = vec(basis[i]);
    Mat q = range_basis(cols);
    std::string last;
    for (int attempt = 0; attempt < 6; ++attempt) {
        Rng rng(seed + 7919ULL * std::uint64_t(attempt));
        try {
            BlockStructure s = attempt_decompose(q, d, rng);
            if (s.membership_residual(Mat::Identity(d, d)) > 1e-8) throw ValidationError("decomposition: span is not unital");
            return s;
        } catch (const NumericalError& e) {
            last = e.what();
        }
    }
    throw NumericalError(last + " (after retries; span may not be a *-algebra)");
}

BlockStructure sort_blocks(const BlockStructure& s) {
    std::vector<std::size_t> order(s.blocks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = s.blocks[a];
        const auto& y = s.blocks[b];
        return x.m != y.m ? x.m < y.m : x.k < y.k;
    });
    BlockStructure out;
    out.dim = s.dim;
    out.w = Mat(s.dim, s.dim);
    Index offset = 0;
    for (std::size_t i : order) {
        const auto& b = s.blocks[i];
        Index n = b.m * b.k;
        out.w.middleCols(offset, n) = s.w.middleCols(b.offset, n);
        out.blocks.push_back({b.m, b.k, offset});
        offset += n;
    }
    return out;
}

BlockStructure commutant_structure(const BlockStructure& s) {
    BlockStructure out;
    out.dim = s.dim;
    out.w = Mat(s.dim, s.dim);
    for (const auto& b : s.blocks) {
        for (Index a = 0; a < b.m; ++a)
            for (Index c = 0; c < b.k; ++c) out.w.col(b.offset + c * b.m + a) = s.w.col(b.offset + a * b.k + c);
        out.blocks.push_back({b.k, b.m, b.offset});
    }
    return out;
}

std::vector<Mat> commutant_within(const std::vector<Mat>& ambient, const std::vector<Mat>& gens) {
    if (ambient.empty()) return {};
    const Index d = ambient[0].rows();
    const Index r = Index(ambient.size());
    Mat sys(Index(gens.size()) * d * d, r);
    for (Index i = 0; i < r; ++i)
        for (std::size_t g = 0; g < gens.size(); ++g)
            sys.block(Index(g) * d * d, i, d * d, 1) = vec(ambient[i] * gens[g] - gens[g] * ambient[i]);
    double scale = 0;
    for (const Mat& a : ambient) scale = std::max(scale, a.norm());
    double gscale = 0;
    for (const Mat& g : gens) gscale = std::max(gscale, g.norm());
    Mat ns = gens.empty() ? Mat(Mat::Identity(r, r)) : null_space(sys, kRankTol, 1e-10 * scale * gscale);
    std::vector<Mat> out;
    for (Index j = 0; j < ns.cols(); ++j) {
        Mat x = Mat::Zero(d, d);
        for (Index i = 0; i < r; ++i) x += ns(i, j) * ambient[i];
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<Mat> algebra_closure(const std::vector<Mat>& gens, Index d, bool star_closed) {
    std::vector<Mat> g = gens;
    if (star_closed)
        for (const Mat& x : gens) g.push_back(x.adjoint());
    Mat basis(d * d, 0);
    // cand columns are normalized, so the cut is absolute.
    auto extend = [&](Mat cand) {
        for (Index j = 0; j < cand.cols(); ++j) {
            double n = cand.col(j).norm();
            if (n > 0) cand.col(j) /= n;
        }
        Mat fresh = cand - basis * (basis.adjoint() * cand);
        fresh -= basis * (basis.adjoint() * fresh);
        Mat added(d * d, 0);
        if (fresh.cols() > 0) {
            Eigen::BDCSVD<Mat> svd(fresh, Eigen::ComputeThinU);
            Index k = 0;
            while (k < svd.singularValues().size() && svd.singularValues()(k) > 1e-8) ++k;
            added = svd.matrixU().leftCols(k);
        }
        Mat out(d * d, basis.cols() + added.cols());
        out << basis, added;
        basis = out;
        return added;
    };
    Mat start(d * d, 1 + Index(g.size()));
    start.col(0) = vec(Mat::Identity(d, d));
    for (std::size_t i = 0; i < g.size(); ++i) start.col(1 + Index(i)) = vec(g[i]);
    Mat fresh = extend(start);
    for (Index it = 0; it < d * d && fresh.cols() > 0; ++it) {
        Mat cand(d * d, fresh.cols() * Index(g.size()));
        Index p = 0;
        for (Index j = 0; j < fresh.cols(); ++j) {
            Mat x = unvec(fresh.col(j), d);
            for (const Mat& h : g) cand.col(p++) = vec(x * h);
        }
        fresh = extend(cand);
    }
    std::vector<Mat> out;
    for (Index j = 0; j < basis.cols(); ++j) out.push_back(unvec(basis.col(j), d));
    return out;
}

}  // namespace ncpb
