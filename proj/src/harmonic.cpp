#include "ncpb/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ncpb {

namespace {

constexpr double kGapFloor = 1e-6;

struct KernelInfo {
    Mat basis;
    double gap = 0;
};

// Kernel of a square matrix with the relative rank policy; reports the
// smallest singular value that was kept as nonzero.
KernelInfo kernel_with_gap(const Mat& a, const char* who) {
    Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeFullV);
    const RVec& s = svd.singularValues();
    const Index n = a.cols();
    double top = s.size() ? s(0) : 0.0;
    double thresh = kRankTol * std::max(top, 1.0);
    Index rank = 0;
    while (rank < s.size() && s(rank) > thresh) ++rank;
    KernelInfo k;
    k.basis = svd.matrixV().rightCols(n - rank);
    k.gap = rank > 0 ? s(rank - 1) : std::numeric_limits<double>::infinity();
    if (rank > 0 && rank < n && k.gap < kGapFloor) {
        std::ostringstream os;
        os << who << ": eigenvalue cluster near 1 straddles the rank threshold (spectral gap " << k.gap << ")";
        throw NumericalError(os.str());
    }
    return k;
}

Mat op_minus_id(const Superoperator& p) {
    return p.matrix - Mat::Identity(p.matrix.rows(), p.matrix.cols());
}

Mat stack_vecs(const std::vector<Mat>& ms, Index d) {
    Mat out(d * d, Index(ms.size()));
    for (std::size_t i = 0; i < ms.size(); ++i) out.col(Index(i)) = vec(ms[i]);
    return out;
}

// vec(L(z)) for an orthonormal basis of Z(M), orthonormalized in HS.
Mat center_operator_span(const GnsPtr& gp) {
    const GnsSpace& g = *gp;
    Subalgebra z = center(gp);
    std::vector<Mat> ops;
    for (const Mat& x : z.basis) ops.push_back(g.left(x));
    return range_basis(stack_vecs(ops, g.dim()));
}

void require_regular_strongly_generating(const Hyperstate& phi, const char* who) {
    Classification c = classify(phi);
    if (c.regular && c.strongly_generating) return;
    std::ostringstream os;
    os << who << ": requires a regular strongly generating hyperstate (regular=" << c.regular
       << ", regular_residual=" << c.regular_residual << ", strongly_generated_dim=" << c.strongly_generated_dim
       << " of " << phi.gns().dim() << ")";
    throw PreconditionError(os.str());
}

}  // namespace

double HarmonicSpace::distance(const Mat& t) const {
    Vec v = vec(t);
    return (v - cols * (cols.adjoint() * v)).norm();
}

HarmonicSpace fixed_space(const Superoperator& p) {
    HarmonicSpace h;
    h.p = p;
    KernelInfo k = kernel_with_gap(op_minus_id(p), "fixed_space");
    h.cols = k.basis;
    h.spectral_gap = k.gap;
    const Index d = p.dim();
    for (Index j = 0; j < h.cols.cols(); ++j) h.basis.push_back(unvec(h.cols.col(j), d));
    h.contains_m = true;
    for (const Mat& b : p.gns->basis())
        if (h.distance(p.gns->left(b)) > 1e-9) h.contains_m = false;
    return h;
}

Mat eigenvalue_one_projection(const Mat& p, const char* who) {
    Mat a = p - Mat::Identity(p.rows(), p.cols());
    Mat right = kernel_with_gap(a, who).basis;
    Mat left = kernel_with_gap(a.adjoint(), who).basis;
    if (right.cols() != left.cols()) throw NumericalError(std::string(who) + ": left and right eigenspaces at 1 differ in dimension");
    Eigen::FullPivLU<Mat> lu(left.adjoint() * right);
    if (!lu.isInvertible()) throw NumericalError(std::string(who) + ": eigenvalue 1 is not semisimple");
    return right * lu.solve(left.adjoint());
}

Superoperator cesaro_expectation(const Superoperator& p) {
    Superoperator e{p.gns, eigenvalue_one_projection(p.matrix, "cesaro_expectation")};
    e.unital = e.unital_residual() <= 1e-9;
    e.completely_positive = e.choi_min_eigenvalue() >= -1e-9;
    e.bimodular = p.bimodular;
    return e;
}

Mat cesaro_average(const Superoperator& p, const Mat& t, int n) {
    Vec cur = vec(t), acc = Vec::Zero(cur.size());
    for (int i = 0; i < n; ++i) {
        cur = p.matrix * cur;
        acc += cur;
    }
    return unvec(acc / double(n), p.dim());
}

Vec BoundaryAlgebra::coords(const Mat& x) const { return pinv_ * vec(x); }

Mat BoundaryAlgebra::element(const Vec& c) const {
    Mat x = Mat::Zero(expectation.dim(), expectation.dim());
    for (Index i = 0; i < c.size(); ++i) x += c(i) * basis[std::size_t(i)];
    return x;
}

Mat BoundaryAlgebra::matrix_unit(std::size_t t, Index a, Index b) const {
    return element(structure.matrix_unit(t, a, b) * unit);
}

BoundaryAlgebra boundary_build(const Hyperstate& phi) { return boundary_from_superop(poisson_superop(phi)); }

BoundaryAlgebra boundary_from_superop(const Superoperator& p) {
    BoundaryAlgebra b;
    b.harmonic = fixed_space(p);
    b.expectation = cesaro_expectation(p);
    const GnsSpace& g = *p.gns;
    const Index d = p.dim(), r = b.harmonic.dim();
    const Mat& em = b.expectation.matrix;
    auto& res = b.residuals;

    res.idempotent = (em * em - em).norm();
    res.unital = b.expectation.unital_residual();
    res.choi_min = b.expectation.choi_min_eigenvalue();
    res.range = subspace_angle(range_basis(em), b.harmonic.cols);

    // Tr(E(X)) = <trace_functional, vec X>; omega = Tr/D is faithful on Fix because
    // E(x^* x) >= x^* x by the Schwarz inequality.
    Vec trace_functional = em.adjoint() * vec(Mat::Identity(d, d));
    Vec zeta_functional = em.adjoint() * vec(g.p_one());
    const Mat& h = b.harmonic.cols;
    Mat gram(r, r);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < r; ++j) {
            Mat prod = b.harmonic.basis[std::size_t(i)].adjoint() * b.harmonic.basis[std::size_t(j)];
            gram(i, j) = trace_functional.dot(vec(prod)) / double(d);
        }
    HermEig ge = herm_eig(gram);
    if (r > 0 && ge.values(0) <= 1e-12 * ge.values(r - 1))
        throw NumericalError("boundary_build: omega is not faithful on the harmonic space");
    Mat m_isqrt = ge.vectors * ge.values.cwiseInverse().cwiseSqrt().cast<cd>().asDiagonal() * ge.vectors.adjoint();
    Mat m_sqrt = ge.vectors * ge.values.cwiseSqrt().cast<cd>().asDiagonal() * ge.vectors.adjoint();
    Mat c = h * m_isqrt;
    for (Index k = 0; k < r; ++k) b.basis.push_back(unvec(c.col(k), d));
    b.pinv_ = m_sqrt * h.adjoint();
    Mat q = b.pinv_ * em;  // vec X -> coordinates of E(X)

    b.unit = b.coords(Mat::Identity(d, d));
    b.left_reg.assign(std::size_t(r), Mat(r, r));
    Mat prods(d * d, r), star_prods(d * d, r);
    for (Index i = 0; i < r; ++i) {
        const Mat& ci = b.basis[std::size_t(i)];
        for (Index j = 0; j < r; ++j) {
            const Mat& cj = b.basis[std::size_t(j)];
            prods.col(j) = vec(ci * cj);
            star_prods.col(j) = vec(cj.adjoint() * ci.adjoint());
        }
        b.left_reg[std::size_t(i)] = q * prods;
        Mat lhs = em * prods, rhs = em * star_prods;
        for (Index j = 0; j < r; ++j)
            res.involution = std::max(res.involution, (unvec(lhs.col(j), d).adjoint() - unvec(rhs.col(j), d)).norm());
    }
    auto reg_of = [&](const Vec& x) {
        Mat out = Mat::Zero(r, r);
        for (Index l = 0; l < r; ++l) out += x(l) * b.left_reg[std::size_t(l)];
        return out;
    };
    // L(c_i . c_j) = L(c_i) L(c_j) over all pairs is associativity on all triples.
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < r; ++j) {
            Mat lhs = reg_of(b.left_reg[std::size_t(i)].col(j));
            res.associativity = std::max(res.associativity, (lhs - b.left_reg[std::size_t(i)] * b.left_reg[std::size_t(j)]).norm());
        }

    Rng rng(41);
    std::vector<Vec> probes;
    for (Index i = 0; i < r; ++i) probes.push_back(Vec::Unit(r, i));
    for (int s = 0; s < 20; ++s) probes.push_back(random_gaussian(r, 1, rng).col(0));
    for (const Vec& x : probes) {
        Mat xe = b.element(x);
        Vec xx = q * vec(xe * xe.adjoint());
        Mat rep = reg_of(xx);
        double scale = std::max(1.0, x.squaredNorm());
        res.positivity = std::max(res.positivity, -min_herm_eig(0.5 * (rep + rep.adjoint())) / scale);
        res.positivity = std::max(res.positivity, -min_herm_eig(b.element(xx)) / scale);
    }

    double worst = std::max({res.idempotent, res.unital, -res.choi_min, res.associativity, res.involution, res.positivity});
    if (worst > 1e-8) {
        std::ostringstream os;
        os << "boundary_build: C*-axiom residual " << worst << " exceeds 1e-8";
        throw NumericalError(os.str());
    }

    b.structure = sort_blocks(decompose_star_algebra(b.left_reg));
    for (const auto& blk : b.structure.blocks) b.blocks.push_back(blk.m);
    b.center_dim = Index(b.blocks.size());

    b.zeta.resize(r);
    for (Index i = 0; i < r; ++i) b.zeta(i) = g.one_hat().dot(b.basis[std::size_t(i)] * g.one_hat());
    // zeta(x . x^*) = beta^* F beta with beta = conj(coords of x).
    Mat f(r, r);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < r; ++j)
            f(i, j) = zeta_functional.dot(vec(b.basis[std::size_t(i)] * b.basis[std::size_t(j)].adjoint()));
    b.zeta_min_eig = r ? min_herm_eig(0.5 * (f + f.adjoint())) : 0.0;
    b.zeta_faithful = b.zeta_min_eig > 1e-10;

    for (int s = 0; s < 5; ++s) {
        Mat t = random_gaussian(d, d, rng);
        Mat et = b.expectation.apply(t);
        cd lhs = g.one_hat().dot(p.apply(et) * g.one_hat());
        cd rhs = g.one_hat().dot(et * g.one_hat());
        res.stationarity = std::max(res.stationarity, std::abs(lhs - rhs));
    }
    return b;
}

RelativeCommutant relative_commutant(const BoundaryAlgebra& b) {
    const GnsSpace& g = *b.expectation.gns;
    const Index r = b.dim(), d = g.dim();
    RelativeCommutant out;
    std::vector<Mat> rows;
    for (const Mat& x : g.basis()) {
        Mat lx = g.left(x);
        Mat sys(r, r);
        for (Index i = 0; i < r; ++i) {
            const Mat& ci = b.basis[std::size_t(i)];
            sys.col(i) = b.coords(b.expectation.apply(ci * lx - lx * ci));
        }
        rows.push_back(sys);
    }
    Mat stacked(r * Index(rows.size()), r);
    for (std::size_t k = 0; k < rows.size(); ++k) stacked.middleRows(Index(k) * r, r) = rows[k];
    Mat ker = null_space(stacked, kRankTol, 1e-10);
    for (Index j = 0; j < ker.cols(); ++j) out.basis.push_back(b.element(ker.col(j)));
    out.dim = ker.cols();
    Mat span = out.dim ? range_basis(stack_vecs(out.basis, d)) : Mat(d * d, 0);
    out.center_angle = subspace_angle(span, center_operator_span(b.expectation.gns));
    out.equals_center = out.center_angle <= 1e-8;
    return out;
}

DoubleErgodicity double_ergodicity_unchecked(const Hyperstate& phi) {
    Superoperator p = poisson_superop(phi), po = opposite_superop(phi);
    const Index n = p.matrix.rows();
    Mat stacked(2 * n, n);
    stacked.topRows(n) = op_minus_id(p);
    stacked.bottomRows(n) = op_minus_id(po);
    Mat inter = null_space(stacked, kRankTol, 1e-10);
    Mat z = center_operator_span(phi.gns_ptr());
    DoubleErgodicity out;
    out.intersection_dim = inter.cols();
    out.center_dim = z.cols();
    out.angle = subspace_angle(inter, z);
    out.equals_center = out.angle <= 1e-8;
    out.containment = (z - inter * (inter.adjoint() * z)).norm();
    return out;
}

DoubleErgodicity double_ergodicity(const Hyperstate& phi) {
    require_regular_strongly_generating(phi, "double_ergodicity");
    return double_ergodicity_unchecked(phi);
}

MvResult mv_project(const Hyperstate& phi, const Mat& t) {
    require_regular_strongly_generating(phi, "mv_project");
    const GnsSpace& g = phi.gns();
    Superoperator e = cesaro_expectation(poisson_superop(phi));
    Superoperator eo = cesaro_expectation(opposite_superop(phi));
    MvResult out;
    out.result = eo.apply(e.apply(t));
    Mat z = center_operator_span(phi.gns_ptr());
    Vec v = vec(out.result);
    out.center_distance = (v - z * (z.adjoint() * v)).norm();
    for (const Mat& x : g.basis()) {
        Mat lx = g.left(x);
        out.commutator = std::max(out.commutator, (lx * out.result - out.result * lx).norm());
    }
    if (g.algebra().is_factor()) {
        cd lambda = out.result.trace() / double(g.dim());
        out.lambda = lambda;
        out.scalar_residual = op_norm(out.result - lambda * Mat::Identity(g.dim(), g.dim()));
    }
    return out;
}

HullEstimate mv_hull_oracle(const Hyperstate& phi, const Mat& t, int samples, int word_length, Rng& rng) {
    if (!phi.from_unitary_family()) throw PreconditionError("mv_hull_oracle: hyperstate is not built from a unitary family");
    if (samples < 1 || word_length < 1) throw ValidationError("mv_hull_oracle: samples and word_length must be positive");
    const GnsSpace& g = phi.gns();
    const Index d = g.dim(), n = g.algebra().size();
    std::vector<Mat> u;
    std::vector<double> mu;
    for (const auto& [x, w] : phi.source_family()) {
        double c = std::sqrt((x.adjoint() * x)(0, 0).real());
        u.push_back(x / c);
        mu.push_back(w * c * c);
    }
    std::discrete_distribution<std::size_t> pick(mu.begin(), mu.end());
    auto word = [&] {
        Mat v = Mat::Identity(n, n);
        for (int i = 1; i < word_length; ++i) v = v * u[pick(rng)];
        return v;
    };
    Mat acc = Mat::Zero(d, d);
    for (int s = 0; s < samples; ++s) {
        Mat w0 = word(), v0 = word();
        // last letters averaged exactly: sum_a sum_b mu_a mu_b G T G^*, G = L(w0 u_a) R(v0 u_b)
        Mat y = Mat::Zero(d, d);
        for (std::size_t b = 0; b < u.size(); ++b) {
            Mat rb = g.right(v0 * u[b]);
            y += mu[b] * rb * t * rb.adjoint();
        }
        for (std::size_t a = 0; a < u.size(); ++a) {
            Mat la = g.left(w0 * u[a]);
            acc += mu[a] * la * y * la.adjoint();
        }
    }
    HullEstimate h;
    h.average = acc / double(samples);
    h.lambda = g.one_hat().dot(h.average * g.one_hat());
    h.scalar_distance = op_norm(h.average - (h.average.trace() / double(d)) * Mat::Identity(d, d));
    h.samples = samples;
    h.word_length = word_length;
    return h;
}

InnerDerivation derivation_inner_part(const Hyperstate& phi, const Mat& t) {
    require_regular_strongly_generating(phi, "derivation_inner_part");
    const GnsSpace& g = phi.gns();
    const Index d = g.dim();
    Superoperator p = poisson_superop(phi), po = opposite_superop(phi);
    Superoperator eo = cesaro_expectation(po);
    InnerDerivation out;
    Mat y = eo.apply(t);
    Mat zspan = center_operator_span(phi.gns_ptr());
    out.z = unvec(zspan * (zspan.adjoint() * vec(y)), d);
    out.c = t - out.z;
    out.central_defect = (y - out.z).norm();
    for (const Mat& x : g.basis()) {
        Mat lx = g.left(x);
        Mat lhs = lx * out.c - out.c * lx, rhs = lx * t - t * lx;
        out.commutator_residual = std::max(out.commutator_residual, (lhs - rhs).norm());
    }
    out.c_norm = op_norm(out.c);
    // The norm bound is only meaningful for harmonic T and a unitary family.
    out.bound_applicable = phi.from_unitary_family() && (p.apply(t) - t).norm() <= 1e-9 * std::max(1.0, t.norm());
    if (out.bound_applicable) {
        Vec cur = vec(t);
        for (int n = 1; n <= 64; ++n) {
            cur = po.matrix * cur;
            out.bound = std::max(out.bound, op_norm(t - unvec(cur, d)));
        }
        out.bound_holds = out.c_norm <= out.bound + 1e-8;
    }
    return out;
}

std::string to_string(FoguelVerdict v) {
    switch (v) {
        case FoguelVerdict::Agree: return "agree";
        case FoguelVerdict::Disagree: return "disagree";
        case FoguelVerdict::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

FoguelReport foguel_test(const Hyperstate& psi, const std::vector<Mat>& probes, int n_max) {
    if (n_max < 1) throw ValidationError("foguel_test: n_max must be positive");
    const GnsSpace& g = psi.gns();
    Hyperstate phi = mix(psi, identity_hyperstate(psi.gns_ptr()), 0.5);
    std::vector<Mat> kraus = poisson_kraus(phi);
    std::vector<Mat> lx;
    for (const Mat& x : probes) lx.push_back(g.left(x));
    FoguelReport rep;
    rep.norms.assign(probes.size(), {});
    Mat a = phi.density();
    for (int n = 1; n <= n_max; ++n) {
        if (n > 1) {
            Mat next = Mat::Zero(a.rows(), a.cols());
            for (const Mat& k : kraus) next += k * a * k.adjoint();
            a = 0.5 * (next + next.adjoint());
        }
        for (std::size_t i = 0; i < lx.size(); ++i) rep.norms[i].push_back(nuclear_norm(lx[i] * a - a * lx[i]));
    }
    for (const auto& seq : rep.norms) rep.final_max = std::max(rep.final_max, seq.back());
    rep.harmonic_dim = fixed_space(poisson_superop(phi)).dim();
    rep.algebra_dim = g.dim();
    rep.fix_equals_m = rep.harmonic_dim == rep.algebra_dim;
    rep.decays = rep.final_max < 1e-6;
    if (!rep.decays && rep.final_max < 1e-2)
        rep.verdict = FoguelVerdict::Inconclusive;
    else
        rep.verdict = rep.decays == rep.fix_equals_m ? FoguelVerdict::Agree : FoguelVerdict::Disagree;
    return rep;
}

TracialAlgebra tensor_algebra(const TracialAlgebra& a, const TracialAlgebra& b) {
    std::vector<Index> blocks;
    std::vector<double> weights;
    for (Index i = 0; i < a.num_blocks(); ++i)
        for (Index j = 0; j < b.num_blocks(); ++j) {
            blocks.push_back(a.blocks()[std::size_t(i)] * b.blocks()[std::size_t(j)]);
            weights.push_back(a.weights()[std::size_t(i)] * b.weights()[std::size_t(j)]);
        }
    return TracialAlgebra(blocks, weights);
}

Mat tensor_element(const TracialAlgebra& a, const TracialAlgebra& b, const Mat& x, const Mat& y) {
    std::vector<Mat> blocks;
    for (Index i = 0; i < a.num_blocks(); ++i)
        for (Index j = 0; j < b.num_blocks(); ++j) blocks.push_back(kron(a.block(x, i), b.block(y, j)));
    return tensor_algebra(a, b).from_blocks(blocks);
}

Hyperstate tensor_hyperstate(const Hyperstate& phi1, const Hyperstate& phi2, const GnsPtr& product) {
    const TracialAlgebra& a = phi1.gns().algebra();
    const TracialAlgebra& b = phi2.gns().algebra();
    KrausFamily fam;
    for (const Mat& z : phi1.standard_form().z)
        for (const Mat& w : phi2.standard_form().z) fam.push_back({tensor_element(a, b, z, w), 1.0});
    return from_kraus(product, fam);
}

TensorSplit tensor_split_check(const Hyperstate& phi1, const Hyperstate& phi2) {
    require_regular_strongly_generating(phi1, "tensor_split_check");
    require_regular_strongly_generating(phi2, "tensor_split_check");
    const GnsSpace& g1 = phi1.gns();
    const GnsSpace& g2 = phi2.gns();
    GnsPtr gp = gns_build(tensor_algebra(g1.algebra(), g2.algebra()));
    Hyperstate prod = tensor_hyperstate(phi1, phi2, gp);
    HarmonicSpace h1 = fixed_space(poisson_superop(phi1));
    HarmonicSpace h2 = fixed_space(poisson_superop(phi2));
    HarmonicSpace hp = fixed_space(poisson_superop(prod));

    // Unitary L^2(M1) (x) L^2(M2) -> L^2(M1 (x) M2); basis vectors map to basis vectors.
    const Index d1 = g1.dim(), d2 = g2.dim(), d = gp->dim();
    Mat perm(d, d);
    for (Index k1 = 0; k1 < d1; ++k1)
        for (Index k2 = 0; k2 < d2; ++k2)
            perm.col(k1 * d2 + k2) = gp->hat(tensor_element(g1.algebra(), g2.algebra(), g1.basis()[std::size_t(k1)],
                                                            g2.basis()[std::size_t(k2)]));
    std::vector<Mat> products;
    for (const Mat& f1 : h1.basis)
        for (const Mat& f2 : h2.basis) products.push_back(perm * kron(f1, f2) * perm.adjoint());

    TensorSplit out;
    out.dim1 = h1.dim();
    out.dim2 = h2.dim();
    out.dim_product = hp.dim();
    out.angle = subspace_angle(range_basis(stack_vecs(products, d)), hp.cols);
    out.equal = out.dim_product == out.dim1 * out.dim2 && out.angle <= 1e-8;
    return out;
}

}  // namespace ncpb
