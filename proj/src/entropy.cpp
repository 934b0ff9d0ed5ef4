#include "ncpb/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ncpb {

namespace {

constexpr double kCondCap = 1e12;

double xlogx(double x) { return x > 0 ? x * std::log(x) : 0.0; }

std::string fmt(const char* what, double v) {
    std::ostringstream os;
    os << what << " " << v;
    return os.str();
}

void require_regular(const Hyperstate& phi, const char* who) {
    double r = regularity_residual(phi);
    if (r > 1e-10) throw PreconditionError(std::string(who) + ": hyperstate is not regular (" + fmt("residual", r) + ")");
}

}  // namespace

MultiMatrix::MultiMatrix(std::vector<Index> sizes) : blocks(std::move(sizes)) {
    for (Index s : blocks) {
        if (s <= 0) throw ValidationError("inclusion.blocks: block sizes must be positive");
        offsets.push_back(size);
        size += s;
    }
}

Index MultiMatrix::dim() const {
    Index d = 0;
    for (Index s : blocks) d += s * s;
    return d;
}

Mat MultiMatrix::block(const Mat& x, std::size_t j) const {
    return x.block(offsets[j], offsets[j], blocks[j], blocks[j]);
}

Mat MultiMatrix::from_blocks(const std::vector<Mat>& xs) const {
    Mat out = Mat::Zero(size, size);
    for (std::size_t j = 0; j < blocks.size(); ++j) out.block(offsets[j], offsets[j], blocks[j], blocks[j]) = xs[j];
    return out;
}

double MultiMatrix::off_block_norm(const Mat& x) const {
    Mat y = x;
    for (std::size_t j = 0; j < blocks.size(); ++j) y.block(offsets[j], offsets[j], blocks[j], blocks[j]).setZero();
    return y.cwiseAbs().maxCoeff();
}

Vec MultiMatrix::coords(const Mat& x) const {
    Vec c(dim());
    Index pos = 0;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        Index s = blocks[j];
        c.segment(pos, s * s) = vec(block(x, j));
        pos += s * s;
    }
    return c;
}

Mat MultiMatrix::from_coords(const Vec& c) const {
    std::vector<Mat> xs;
    Index pos = 0;
    for (Index s : blocks) {
        xs.push_back(unvec(c.segment(pos, s * s), s));
        pos += s * s;
    }
    return from_blocks(xs);
}

Mat MultiMatrix::random_element(Rng& rng) const {
    std::vector<Mat> xs;
    for (Index s : blocks) xs.push_back(random_gaussian(s, s, rng));
    return from_blocks(xs);
}

Mat Inclusion::iota(const Mat& x) const {
    Vec h = m->hat(x);
    Mat out = Mat::Zero(a.size, a.size);
    for (std::size_t k = 0; k < images.size(); ++k) out += h(Index(k)) * images[k];
    return out;
}

std::vector<double> Inclusion::multiplicities() const {
    const TracialAlgebra& alg = m->algebra();
    std::vector<double> c;
    for (Index i = 0; i < alg.num_blocks(); ++i) {
        std::vector<Mat> xs;
        for (Index j = 0; j < alg.num_blocks(); ++j) {
            Index n = alg.blocks()[std::size_t(j)];
            xs.push_back(i == j ? Mat(Mat::Identity(n, n)) : Mat(Mat::Zero(n, n)));
        }
        c.push_back(iota(alg.from_blocks(xs)).trace().real() / double(alg.blocks()[std::size_t(i)]));
    }
    return c;
}

Inclusion embed_by_multiplicities(const GnsPtr& m, const std::vector<Index>& a_blocks,
                                  const std::vector<std::vector<Index>>& mult, const std::vector<Mat>& unitaries) {
    const TracialAlgebra& alg = m->algebra();
    Inclusion inc{m, MultiMatrix(a_blocks), {}};
    const std::size_t nb = a_blocks.size();
    if (mult.size() != std::size_t(alg.num_blocks())) throw ValidationError("inclusion.embedding.multiplicities: one row per block of M required");
    for (const auto& row : mult)
        if (row.size() != nb) throw ValidationError("inclusion.embedding.multiplicities: one column per block of A required");
    for (std::size_t j = 0; j < nb; ++j) {
        Index fill = 0;
        for (std::size_t i = 0; i < mult.size(); ++i) {
            if (mult[i][j] < 0) throw ValidationError("inclusion.embedding.multiplicities: negative entry");
            fill += alg.blocks()[i] * mult[i][j];
        }
        if (fill != a_blocks[j]) {
            std::ostringstream os;
            os << "inclusion.embedding.multiplicities: block " << j << " of A has size " << a_blocks[j] << " but receives " << fill;
            throw ValidationError(os.str());
        }
    }
    if (!unitaries.empty()) {
        if (unitaries.size() != nb) throw ValidationError("inclusion.embedding.unitaries: one unitary per block of A required");
        for (std::size_t j = 0; j < nb; ++j) {
            const Mat& u = unitaries[j];
            if (u.rows() != a_blocks[j] || u.cols() != a_blocks[j] ||
                (u.adjoint() * u - Mat::Identity(a_blocks[j], a_blocks[j])).norm() > 1e-10) {
                std::ostringstream os;
                os << "inclusion.embedding.unitaries[" << j << "]: not a unitary of the right size";
                throw ValidationError(os.str());
            }
        }
    }
    auto embed = [&](const Mat& x) {
        std::vector<Mat> out;
        for (std::size_t j = 0; j < nb; ++j) {
            Mat s = Mat::Zero(a_blocks[j], a_blocks[j]);
            Index off = 0;
            for (std::size_t i = 0; i < mult.size(); ++i) {
                Index k = mult[i][j], n = alg.blocks()[i];
                if (k == 0) continue;
                s.block(off, off, n * k, n * k) = kron(alg.block(x, Index(i)), Mat::Identity(k, k));
                off += n * k;
            }
            if (!unitaries.empty()) s = unitaries[j] * s * unitaries[j].adjoint();
            out.push_back(s);
        }
        return inc.a.from_blocks(out);
    };
    for (const Mat& b : m->basis()) inc.images.push_back(embed(b));
    return inc;
}

Inclusion embed_left_regular(const GnsPtr& m) {
    Inclusion inc{m, MultiMatrix({m->dim()}), {}};
    for (const Mat& b : m->basis()) inc.images.push_back(m->left(b));
    return inc;
}

Mat trace_like_density(const Inclusion& inc) {
    const TracialAlgebra& alg = inc.m->algebra();
    std::vector<double> c = inc.multiplicities();
    std::vector<Mat> d;
    for (Index i = 0; i < alg.num_blocks(); ++i) {
        Index n = alg.blocks()[std::size_t(i)];
        if (c[std::size_t(i)] <= 0) throw ValidationError("inclusion: embedding kills a block of M");
        d.push_back(Mat::Identity(n, n) * (alg.weights()[std::size_t(i)] / c[std::size_t(i)]));
    }
    return inc.iota(alg.from_blocks(d));
}

InclusionState build_inclusion(Inclusion inc, Mat rho) {
    const GnsSpace& g = *inc.m;
    const MultiMatrix& a = inc.a;
    if (inc.images.size() != g.basis().size()) throw ValidationError("inclusion.embedding: wrong number of images");
    for (const Mat& x : inc.images)
        if (x.rows() != a.size || x.cols() != a.size || a.off_block_norm(x) > 1e-12)
            throw ValidationError("inclusion.embedding: image outside A");
    double unit = (inc.iota(g.algebra().identity()) - Mat::Identity(a.size, a.size)).norm();
    if (unit > 1e-10) throw ValidationError("inclusion.embedding: not unital (" + fmt("residual", unit) + ")");
    double mult = 0, star = 0;
    for (std::size_t k = 0; k < g.basis().size(); ++k) {
        const Mat& bk = g.basis()[k];
        star = std::max(star, (inc.images[k].adjoint() - inc.iota(bk.adjoint())).norm());
        for (std::size_t l = 0; l < g.basis().size(); ++l)
            mult = std::max(mult, (inc.images[k] * inc.images[l] - inc.iota(bk * g.basis()[l])).norm());
    }
    if (mult > 1e-10) throw ValidationError("inclusion.embedding: not multiplicative (" + fmt("residual", mult) + ")");
    if (star > 1e-10) throw ValidationError("inclusion.embedding: not *-preserving (" + fmt("residual", star) + ")");

    if (rho.rows() != a.size || rho.cols() != a.size) throw ValidationError("inclusion.rho: wrong dimension");
    if (a.off_block_norm(rho) > 1e-12) throw ValidationError("inclusion.rho: not an element of A");
    if ((rho - rho.adjoint()).norm() > 1e-10) throw ValidationError("inclusion.rho: not Hermitian");
    rho = 0.5 * (rho + rho.adjoint());
    HermEig e = herm_eig(rho);
    double lo = e.values(0), hi = e.values(e.values.size() - 1);
    if (lo <= 0) throw ValidationError("inclusion.rho: not positive definite (" + fmt("min eigenvalue", lo) + ")");
    if (hi / lo > kCondCap) throw NumericalError("inclusion.rho: ill-conditioned (" + fmt("condition", hi / lo) + ")");
    if (std::abs(rho.trace() - 1.0) > 1e-10) throw ValidationError("inclusion.rho: trace is not 1");
    double ext = 0;
    for (std::size_t k = 0; k < g.basis().size(); ++k)
        ext = std::max(ext, std::abs((rho * inc.images[k]).trace() - g.algebra().trace(g.basis()[k])));
    if (ext > 1e-10) throw ValidationError("inclusion.rho: zeta does not restrict to tau (" + fmt("residual", ext) + ")");

    InclusionState s{std::move(inc), rho, {}, {}, hi / lo, {}};
    Vec sq(e.values.size()), lg(e.values.size());
    for (Index i = 0; i < sq.size(); ++i) {
        sq(i) = std::sqrt(e.values(i));
        lg(i) = std::log(e.values(i));
    }
    s.rho_sqrt = e.vectors * sq.asDiagonal() * e.vectors.adjoint();
    s.log_rho = e.vectors * lg.asDiagonal() * e.vectors.adjoint();
    s.emb.resize(s.inc.a.dim(), Index(g.basis().size()));
    for (std::size_t k = 0; k < g.basis().size(); ++k) s.emb.col(Index(k)) = s.vector(s.inc.images[k]);
    return s;
}

Mat modular_flow(const InclusionState& s, const Mat& a, double t) {
    Mat u = herm_apply(s.rho, [t](double x) { return std::exp(cd(0, t * std::log(x))); });
    return u * a * u.adjoint();
}

ModularData modular_data(const InclusionState& s) {
    const MultiMatrix& a = s.inc.a;
    const Index da = a.dim();
    ModularData md;
    md.eigenvalues.resize(da);
    md.eigenvectors = Mat::Zero(da, da);
    md.log_delta = Mat::Zero(da, da);
    Index pos = 0;
    for (std::size_t j = 0; j < a.blocks.size(); ++j) {
        const Index n = a.blocks[j];
        Mat rj = a.block(s.rho, j);
        HermEig e = herm_eig(rj);
        // eigenvector u_p u_q^* of Delta with eigenvalue mu_p / mu_q
        for (Index p = 0; p < n; ++p)
            for (Index q = 0; q < n; ++q) {
                Index col = pos + p + q * n;
                md.eigenvectors.block(pos, col, n * n, 1) = vec(e.vectors.col(p) * e.vectors.col(q).adjoint());
                md.eigenvalues(col) = e.values(p) / e.values(q);
            }
        Mat lj = a.block(s.log_rho, j);
        md.log_delta.block(pos, pos, n * n, n * n) =
            kron(Mat::Identity(n, n), lj) - kron(lj.transpose(), Mat::Identity(n, n));
        pos += n * n;
    }
    const Mat& v = md.eigenvectors;
    Vec lam = md.eigenvalues.cast<cd>();
    md.delta = v * lam.asDiagonal() * v.adjoint();
    Vec log_lam(da), sqrt_lam(da);
    for (Index i = 0; i < da; ++i) {
        log_lam(i) = std::log(md.eigenvalues(i));
        sqrt_lam(i) = std::sqrt(md.eigenvalues(i));
    }
    md.log_residual = (v * log_lam.asDiagonal() * v.adjoint() - md.log_delta).norm();
    Mat delta_half = v * sqrt_lam.asDiagonal() * v.adjoint();

    Vec one = a.coords(s.rho_sqrt);
    md.unit_residual = (md.delta * one - one).norm();
    for (Index k = 0; k < da; ++k) {
        Mat x = a.unit(k);
        Mat xi = a.from_coords(delta_half * s.vector(x));
        md.s_residual = std::max(md.s_residual, (a.coords(xi.adjoint()) - s.vector(x.adjoint())).norm());
    }

    Rng rng(53);
    const double t = 0.37;
    for (int i = 0; i < 5; ++i) {
        Mat x = a.random_element(rng), y = a.random_element(rng);
        Mat sx = modular_flow(s, x, t), sy = modular_flow(s, y, t);
        md.flow_multiplicative = std::max(md.flow_multiplicative, (modular_flow(s, x * y, t) - sx * sy).norm());
        md.flow_star = std::max(md.flow_star, (modular_flow(s, x.adjoint(), t) - sx.adjoint()).norm());
        md.flow_invariance = std::max(md.flow_invariance, std::abs(s.zeta(sx) - s.zeta(x)));
    }
    return md;
}

namespace {

// -sum p log p over a probability vector. Entries at rounding level are numerical zeros,
// and a vector summing to 1 within 1e-10 is renormalized so that a pure state gives exactly 0.
double entropy_of_distribution(std::vector<double> p) {
    double top = 0;
    for (double v : p) top = std::max(top, v);
    double sum = 0;
    for (double& v : p) {
        if (v <= 1e-14 * std::max(1.0, top)) v = 0;
        sum += v;
    }
    if (std::abs(sum - 1.0) <= 1e-10)
        for (double& v : p) v /= sum;
    double h = 0;
    for (double v : p) h -= xlogx(v);
    return h;
}

}  // namespace

double vn_entropy_density(const Mat& a) {
    RVec ev = herm_eig(a).values;
    return entropy_of_distribution(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

VnEntropy vn_entropy(const Hyperstate& phi) {
    VnEntropy v;
    v.value = vn_entropy_density(phi.density());
    const StandardForm& sf = phi.standard_form();
    std::vector<double> w;
    for (const Mat& z : sf.z) w.push_back(phi.gns().algebra().trace(z.adjoint() * z).real());
    v.weight_formula = entropy_of_distribution(w);
    v.rank = Index(sf.z.size());
    return v;
}

EntropySequence entropy_sequence(const Hyperstate& phi, int n) {
    require_regular(phi, "entropy_sequence");
    if (n < 1) throw ValidationError("entropy_sequence: N must be positive");
    EntropySequence out;
    Hyperstate cur = phi;
    for (int k = 1; k <= n; ++k) {
        if (k > 1) cur = convolve(cur, phi);
        out.h.push_back(vn_entropy_density(cur.density()));
    }
    out.h_estimate = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= n; ++k) out.h_estimate = std::min(out.h_estimate, out.h[std::size_t(k - 1)] / k);
    for (int p = 1; p <= n; ++p)
        for (int q = 1; p + q <= n; ++q) {
            double v = out.h[std::size_t(p + q - 1)] - out.h[std::size_t(p - 1)] - out.h[std::size_t(q - 1)];
            out.subadditivity_violation = std::max(out.subadditivity_violation, v);
        }
    return out;
}

FurstenbergEntropy furstenberg_entropy(const Hyperstate& phi, const InclusionState& s) {
    return furstenberg_entropy(phi, s, modular_data(s));
}

FurstenbergEntropy furstenberg_entropy(const Hyperstate& phi, const InclusionState& s, const ModularData& md) {
    if (phi.gns().dim() != s.inc.m->dim()) throw ValidationError("furstenberg_entropy: hyperstate and inclusion live on different algebras");
    FurstenbergEntropy out;
    const auto& zs = phi.standard_form().z;

    // commutator route: -sum_n zeta(iota(z_n) [log rho, iota(z_n^*)])
    cd acc = 0;
    for (const Mat& z : zs) {
        Mat iz = s.inc.iota(z), izs = s.inc.iota(z.adjoint());
        acc += s.zeta(iz * (s.log_rho * izs - izs * s.log_rho));
    }
    out.value = -acc.real();
    out.imaginary_part = std::abs(acc.imag());

    // spectral route: -sum_lambda log(lambda) phi(e E(lambda) e)
    const Index da = md.eigenvalues.size();
    std::vector<Index> order(static_cast<std::size_t>(da));
    std::iota(order.begin(), order.end(), Index(0));
    std::sort(order.begin(), order.end(), [&](Index x, Index y) { return md.eigenvalues(x) < md.eigenvalues(y); });
    RVec sorted(da);
    for (Index i = 0; i < da; ++i) sorted(i) = md.eigenvalues(order[std::size_t(i)]);
    double top = da ? sorted(da - 1) : 1.0;
    std::vector<std::pair<double, double>> atoms;  // (lambda, phi-weight)
    for (const auto& cl : cluster_sorted(sorted, 1e-10 * top)) {
        Mat vc(da, Index(cl.size()));
        double lam = 0;
        for (std::size_t i = 0; i < cl.size(); ++i) {
            Index src = order[std::size_t(cl[i])];
            vc.col(Index(i)) = md.eigenvectors.col(src);
            lam += md.eigenvalues(src);
        }
        lam /= double(cl.size());
        Mat c = s.emb.adjoint() * vc;
        double w = (phi.density() * c * c.adjoint()).trace().real();
        atoms.push_back({lam, w});
    }
    for (const auto& [lam, w] : atoms) out.spectral -= std::log(lam) * w;
    double reach = 1;
    for (const auto& [lam, w] : atoms) reach = std::max({reach, lam, 1.0 / lam});
    for (double m = 1;; m *= 2) {
        double h = 0;
        for (const auto& [lam, w] : atoms)
            if (lam >= 1.0 / m && lam <= m) h -= std::log(lam) * w;
        out.truncations.push_back(h);
        if (m >= reach) break;
    }

    // flow route: i d/dt sum_n zeta(iota(z_n) sigma_t(iota(z_n^*))) at 0
    const double step = 1e-4;
    auto f = [&](double t) {
        cd v = 0;
        for (const Mat& z : zs) v += s.zeta(s.inc.iota(z) * modular_flow(s, s.inc.iota(z.adjoint()), t));
        return v;
    };
    out.finite_difference = (cd(0, 1) * (f(step) - f(-step)) / (2 * step)).real();

    out.route_gap = std::abs(out.spectral - out.value);
    if (out.route_gap > 1e-8) throw NumericalError("furstenberg_entropy: spectral and commutator routes disagree (" + fmt("gap", out.route_gap) + ")");
    return out;
}

Mat stationary_map(const Hyperstate& phi, const Inclusion& inc, const Mat& rho) {
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    for (const Mat& z : phi.standard_form().z) {
        Mat iz = inc.iota(z);
        out += iz.adjoint() * rho * iz;
    }
    return out;
}

double stationarity_residual(const Hyperstate& phi, const InclusionState& s) {
    return (stationary_map(phi, s.inc, s.rho) - s.rho).norm();
}

namespace {

// Hermitian matrices as real vectors (re, im of the HS coordinates).
RVec to_real(const MultiMatrix& a, const Mat& x) {
    Vec c = a.coords(x);
    RVec r(2 * c.size());
    r << c.real(), c.imag();
    return r;
}

Mat from_real(const MultiMatrix& a, const RVec& r) {
    const Index n = r.size() / 2;
    Vec c(n);
    for (Index i = 0; i < n; ++i) c(i) = cd(r(i), r(n + i));
    return a.from_coords(c);
}

// Gradient and Hessian of S(rho) = -Tr rho log rho along traceless directions.
void entropy_derivatives(const Mat& rho, const std::vector<Mat>& dirs, RVec& grad, RMat& hess) {
    HermEig e = herm_eig(rho);
    const Index n = e.values.size(), m = Index(dirs.size());
    Mat logr = e.vectors * e.values.array().log().matrix().cast<cd>().asDiagonal() * e.vectors.adjoint();
    RMat g(n, n);  // first divided differences of log
    for (Index p = 0; p < n; ++p)
        for (Index q = 0; q < n; ++q) {
            double a = e.values(p), b = e.values(q);
            g(p, q) = std::abs(a - b) > 1e-12 * std::max(a, b) ? (std::log(a) - std::log(b)) / (a - b) : 1.0 / a;
        }
    std::vector<Mat> ys;
    for (const Mat& x : dirs) ys.push_back(e.vectors.adjoint() * x * e.vectors);
    grad.resize(m);
    hess.resize(m, m);
    for (Index i = 0; i < m; ++i) {
        grad(i) = -(dirs[std::size_t(i)] * logr).trace().real();
        for (Index j = 0; j < m; ++j) {
            const Mat& yi = ys[std::size_t(i)];
            const Mat& yj = ys[std::size_t(j)];
            hess(i, j) = -(yi.transpose().cwiseProduct(g.cast<cd>().cwiseProduct(yj))).sum().real();
        }
    }
}

}  // namespace

StationarySolution stationary_state_solve(const Hyperstate& phi, const Inclusion& inc) {
    require_regular(phi, "stationary_state_solve");
    const MultiMatrix& a = inc.a;
    const Index da = a.dim();
    Mat big(da, da);
    for (Index k = 0; k < da; ++k) big.col(k) = a.coords(stationary_map(phi, inc, a.unit(k)));
    Mat proj = eigenvalue_one_projection(big, "stationary_state_solve");

    StationarySolution out;
    Mat rho = a.from_coords(proj * a.coords(trace_like_density(inc)));
    rho = 0.5 * (rho + rho.adjoint());
    Mat fix = range_basis(proj);
    out.fixed_dim = fix.cols();

    // Hermitian directions in Fix with Tr(X iota(b)) = 0 for every b in M.
    const GnsSpace& g = *inc.m;
    RMat cand(2 * da, 2 * fix.cols());
    for (Index j = 0; j < fix.cols(); ++j) {
        Mat x = a.from_coords(fix.col(j));
        cand.col(2 * j) = to_real(a, 0.5 * (x + x.adjoint()));
        cand.col(2 * j + 1) = to_real(a, (x - x.adjoint()) * cd(0, -0.5));
    }
    std::vector<Mat> herm;
    if (cand.cols() > 0) {
        Eigen::BDCSVD<RMat> svd(cand, Eigen::ComputeThinU);
        const RVec& sv = svd.singularValues();
        for (Index j = 0; j < sv.size(); ++j)
            if (sv(j) > kRankTol * sv(0)) herm.push_back(from_real(a, svd.matrixU().col(j)));
    }
    std::vector<Mat> dirs;
    if (!herm.empty()) {
        RMat cons(2 * Index(g.basis().size()), Index(herm.size()));
        for (std::size_t i = 0; i < herm.size(); ++i)
            for (std::size_t k = 0; k < g.basis().size(); ++k) {
                cd v = (herm[i] * inc.images[k]).trace();
                cons(2 * Index(k), Index(i)) = v.real();
                cons(2 * Index(k) + 1, Index(i)) = v.imag();
            }
        Eigen::BDCSVD<RMat> svd(cons, Eigen::ComputeFullV);
        const RVec& sv = svd.singularValues();
        Index rank = 0;
        while (rank < sv.size() && sv(rank) > kRankTol * std::max(sv.size() ? sv(0) : 0.0, 1.0)) ++rank;
        RMat ker = svd.matrixV().rightCols(cons.cols() - rank);
        for (Index j = 0; j < ker.cols(); ++j) {
            Mat x = Mat::Zero(a.size, a.size);
            for (std::size_t i = 0; i < herm.size(); ++i) x += ker(Index(i), j) * herm[i];
            dirs.push_back(x);
        }
    }
    out.free_dim = Index(dirs.size());

    HermEig e0 = herm_eig(rho);
    double lo = e0.values(0), hi = e0.values(e0.values.size() - 1);
    out.faithful = lo > 1e-12 * hi;
    if (out.faithful && !dirs.empty()) {
        double s_cur = vn_entropy_density(rho);
        for (int it = 0; it < 100; ++it) {
            RVec grad;
            RMat hess;
            entropy_derivatives(rho, dirs, grad, hess);
            if (grad.norm() < 1e-13) break;
            RVec step = (-hess).ldlt().solve(grad);
            Mat delta = Mat::Zero(a.size, a.size);
            for (std::size_t i = 0; i < dirs.size(); ++i) delta += step(Index(i)) * dirs[i];
            double alpha = 1;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
                Mat trial = rho + alpha * delta;
                trial = 0.5 * (trial + trial.adjoint());
                if (min_herm_eig(trial) <= 0) continue;
                double s_new = vn_entropy_density(trial);
                if (s_new >= s_cur - 1e-15) {
                    rho = trial;
                    s_cur = s_new;
                    moved = true;
                    break;
                }
            }
            ++out.newton_steps;
            if (!moved || alpha * step.norm() < 1e-15) break;
        }
    }
    out.rho = rho;
    out.entropy = vn_entropy_density(rho);
    out.residual = (stationary_map(phi, inc, rho) - rho).norm();
    return out;
}

AdditivityReport entropy_additivity_check(const Hyperstate& phi, const Hyperstate& psi, const InclusionState& s, int n_max) {
    require_regular(psi, "entropy_additivity_check");
    double st = stationarity_residual(psi, s);
    if (st > 1e-9) throw PreconditionError("entropy_additivity_check: zeta is not psi-stationary (" + fmt("residual", st) + ")");
    ModularData md = modular_data(s);
    AdditivityReport r;
    r.h_phi = furstenberg_entropy(phi, s, md).value;
    r.h_psi = furstenberg_entropy(psi, s, md).value;
    r.h_conv = furstenberg_entropy(convolve(phi, psi), s, md).value;
    r.residual = std::abs(r.h_conv - r.h_phi - r.h_psi);
    Hyperstate cur = psi;
    for (int n = 1; n <= n_max; ++n) {
        if (n > 1) cur = convolve(cur, psi);
        double h = furstenberg_entropy(cur, s, md).value;
        r.powers.push_back(h);
        r.power_residual = std::max(r.power_residual, std::abs(h - n * r.h_psi));
    }
    return r;
}

BoundsReport entropy_bounds_check(const Hyperstate& phi, const InclusionState& s, int n_max) {
    BoundsReport b;
    b.h = furstenberg_entropy(phi, s).value;
    b.vn = vn_entropy(phi).value;
    b.holds = b.h >= -1e-10 && b.h <= b.vn + 1e-10;
    b.stationary = regularity_residual(phi) <= 1e-10 && stationarity_residual(phi, s) <= 1e-9;
    if (b.stationary) {
        b.fekete = entropy_sequence(phi, n_max).h_estimate;
        b.holds = b.holds && b.h <= b.fekete + 1e-9;
    }
    return b;
}

GapBound entropy_gap_bound(const std::vector<Mat>& family, const InclusionState& s) {
    const GnsPtr& g = s.inc.m;
    const TracialAlgebra& m = g->algebra();
    if (family.empty()) throw ValidationError("entropy_gap_bound: empty family");
    Mat l = Mat::Zero(m.size(), m.size()), r = l;
    for (const Mat& x : family) {
        l += x.adjoint() * x;
        r += x * x.adjoint();
    }
    double res = std::max((l - m.identity()).norm(), (r - m.identity()).norm());
    if (res > 1e-10) throw ValidationError("entropy_gap_bound: family is not bi-normalized (" + fmt("residual", res) + ")");
    KrausFamily fam;
    for (const Mat& x : family) fam.push_back({x, 1.0});
    Hyperstate phi = from_kraus(g, fam);
    GapBound out;
    out.h = furstenberg_entropy(phi, s).value;
    // <T 1_zeta, 1_zeta> with T xi = sum a^* xi a and 1_zeta = rho^{1/2}
    cd t = 0;
    for (const Mat& x : family) {
        Mat ix = s.inc.iota(x);
        t += (ix.adjoint() * s.rho_sqrt * ix * s.rho_sqrt).trace();
    }
    out.t_value = t.real();
    out.contraction = out.t_value <= 1 + 1e-10 && out.t_value >= -1e-12;
    out.bound = out.t_value > 0 ? -2 * std::log(out.t_value) : std::numeric_limits<double>::infinity();
    out.holds = out.h >= out.bound - 1e-8;
    return out;
}

InclusionState boundary_inclusion(const Hyperstate& phi, const BoundaryAlgebra& b) {
    const GnsPtr& g = phi.gns_ptr();
    const Index r = b.dim();
    Inclusion inc{g, MultiMatrix(b.blocks), {}};
    for (const Mat& x : g->basis()) {
        Vec c = b.coords(g->left(x));
        Mat rep = Mat::Zero(r, r);
        for (Index l = 0; l < r; ++l) rep += c(l) * b.left_reg[std::size_t(l)];
        inc.images.push_back(inc.a.from_blocks(b.structure.compress(rep)));
    }
    std::vector<Mat> rho_blocks;
    for (std::size_t t = 0; t < b.blocks.size(); ++t) {
        Index m = b.blocks[t];
        Mat rt(m, m);
        for (Index p = 0; p < m; ++p)
            for (Index q = 0; q < m; ++q) {
                Mat e = b.matrix_unit(t, p, q);
                rt(q, p) = g->one_hat().dot(e * g->one_hat());
            }
        rho_blocks.push_back(rt);
    }
    Mat rho = inc.a.from_blocks(rho_blocks);
    return build_inclusion(std::move(inc), rho);
}

ZeroEntropy zero_entropy_check(const Hyperstate& phi, const BoundaryAlgebra& b) {
    Classification c = classify(phi);
    if (!c.regular || !c.strongly_generating)
        throw PreconditionError("zero_entropy_check: requires a regular strongly generating hyperstate");
    if (!b.zeta_faithful) throw PreconditionError("zero_entropy_check: stationary state is not faithful on the boundary");
    ZeroEntropy z;
    z.h = furstenberg_entropy(phi, boundary_inclusion(phi, b)).value;
    z.harmonic_dim = b.harmonic.dim();
    z.algebra_dim = phi.gns().dim();
    z.h_zero = std::abs(z.h) <= 1e-8;
    z.fix_equals_m = z.harmonic_dim == z.algebra_dim;
    z.agree = z.h_zero == z.fix_equals_m;
    return z;
}

}  // namespace ncpb
