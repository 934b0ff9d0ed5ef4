#include "ncpb/dilation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ncpb {

namespace {

constexpr Index kFullSolveCap = 256;

BlockStructure full_matrix_algebra(Index d) {
    BlockStructure s;
    s.dim = d;
    s.w = Mat::Identity(d, d);
    s.blocks.push_back({d, 1, 0});
    return s;
}

std::vector<Mat> sample_elements(const BlockStructure& a, int count, Rng& rng) {
    std::vector<Mat> out;
    for (int i = 0; i < count; ++i) out.push_back(a.random_element(rng, false));
    return out;
}

// Matrix units when there are few of them, random elements otherwise.
std::vector<Mat> probe_elements(const BlockStructure& a, Rng& rng) {
    if (a.algebra_dim() <= 64) {
        std::vector<Mat> out;
        for (std::size_t t = 0; t < a.blocks.size(); ++t)
            for (Index p = 0; p < a.blocks[t].m; ++p)
                for (Index q = 0; q < a.blocks[t].m; ++q) out.push_back(a.matrix_unit(t, p, q));
        return out;
    }
    return sample_elements(a, 6, rng);
}

Mat stack_vecs(const std::vector<Mat>& ms) {
    const Index d = ms.empty() ? 0 : ms[0].rows();
    Mat out(d * d, Index(ms.size()));
    for (std::size_t i = 0; i < ms.size(); ++i) out.col(Index(i)) = vec(ms[i]);
    return out;
}

}  // namespace

Mat UcpMap::operator()(const Mat& x) const {
    Mat out = Mat::Zero(x.rows(), x.cols());
    for (const Mat& k : kraus) out += k.adjoint() * x * k;
    return out;
}

UcpMap ucp_from_kraus(std::vector<Mat> kraus, const std::vector<Mat>& algebra_basis) {
    if (kraus.empty()) throw ValidationError("channel.kraus: empty list");
    const Index d = kraus[0].rows();
    for (const Mat& k : kraus)
        if (k.rows() != d || k.cols() != d) throw ValidationError("channel.kraus: operators must be square of equal size");
    UcpMap u;
    u.kraus = std::move(kraus);
    u.algebra = algebra_basis.empty() ? full_matrix_algebra(d) : sort_blocks(decompose_star_algebra(algebra_basis));
    if (u.algebra.dim != d) throw ValidationError("channel.subalgebra: acts on a space of the wrong dimension");

    Mat s = Mat::Zero(d, d);
    for (const Mat& k : u.kraus) s += k.adjoint() * k;
    u.unital_residual = (s - Mat::Identity(d, d)).norm();
    if (u.unital_residual > 1e-10) {
        std::ostringstream os;
        os << "channel.kraus: map is not unital (residual " << u.unital_residual << ")";
        throw ValidationError(os.str());
    }
    Mat choi(d * d, d * d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) {
            Mat e = Mat::Zero(d, d);
            e(i, j) = 1;
            choi.block(i * d, j * d, d, d) = u(e);
        }
    u.choi_min = min_herm_eig(choi);
    for (std::size_t t = 0; t < u.algebra.blocks.size(); ++t)
        for (Index p = 0; p < u.algebra.blocks[t].m; ++p)
            for (Index q = 0; q < u.algebra.blocks[t].m; ++q)
                u.invariance_residual = std::max(u.invariance_residual, u.algebra.membership_residual(u(u.algebra.matrix_unit(t, p, q))));
    if (u.invariance_residual > 1e-10) {
        std::ostringstream os;
        os << "channel: map does not leave the subalgebra invariant (residual " << u.invariance_residual << ")";
        throw ValidationError(os.str());
    }
    return u;
}

Mat DilationStage::pi(const Mat& x) const {
    std::vector<Mat> xs = prev.compress(x);
    Mat out = Mat::Zero(dim_h, dim_h);
    Index off = 0;
    for (std::size_t s = 0; s < xs.size(); ++s) {
        Index r = ranks[s], n = xs[s].rows() * r;
        if (r > 0) out.block(off, off, n, n) = kron(xs[s], Mat::Identity(r, r));
        off += n;
    }
    return out;
}

DilationStage stinespring_step(const BlockStructure& a, const LinearMap& phi_prev, std::uint64_t seed) {
    DilationStage st;
    st.prev = a;
    const Index d = a.dim;
    auto& res = st.residuals;

    // Gram form on A (x) H splits by (block s, row p); within it
    // G_s[(q', l), (q, j)] = phi(E^s_{q'q})[l, j] does not depend on p.
    std::vector<Mat> us;
    std::vector<RVec> lams;
    for (std::size_t s = 0; s < a.blocks.size(); ++s) {
        const Index m = a.blocks[s].m;
        Mat g(m * d, m * d);
        for (Index qp = 0; qp < m; ++qp)
            for (Index q = 0; q < m; ++q) g.block(qp * d, q * d, d, d) = phi_prev(a.matrix_unit(s, qp, q));
        HermEig e = herm_eig(0.5 * (g + g.adjoint()));
        const Index n = e.values.size();
        double top = std::max(std::abs(e.values(0)), std::abs(e.values(n - 1)));
        double rel_min = e.values(0) / std::max(top, 1.0);
        res.gram_min = std::min(res.gram_min, rel_min);
        if (rel_min < -1e-9) {
            std::ostringstream os;
            os << "stinespring_step: Gram matrix has a negative eigenvalue " << e.values(0) << " (map not completely positive)";
            throw NumericalError(os.str());
        }
        Index keep = 0;
        while (keep < n && e.values(n - 1 - keep) > kRankTol * top) ++keep;
        us.push_back(e.vectors.rightCols(keep));
        lams.push_back(e.values.tail(keep));
        st.ranks.push_back(keep);
    }
    for (std::size_t s = 0; s < a.blocks.size(); ++s) st.dim_h += a.blocks[s].m * st.ranks[s];

    // V(xi) = class of 1 (x) xi.
    st.v = Mat::Zero(st.dim_h, d);
    Index off = 0;
    for (std::size_t s = 0; s < a.blocks.size(); ++s) {
        const Index m = a.blocks[s].m, r = st.ranks[s];
        for (Index p = 0; p < m; ++p)
            for (Index rho = 0; rho < r; ++rho)
                for (Index j = 0; j < d; ++j)
                    st.v(off + p * r + rho, j) = std::sqrt(lams[s](rho)) * std::conj(us[s](p * d + j, rho));
        off += m * r;
    }

    // A_n' sits inside pi(A)' = (+)_s 1_{m_s} (x) M_{r_s}; it must also commute with
    // V A V^*, which is generated by V g V^* for generic g since V^* V = 1.
    std::vector<Mat> ambient;
    off = 0;
    for (std::size_t s = 0; s < a.blocks.size(); ++s) {
        const Index m = a.blocks[s].m, r = st.ranks[s];
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < r; ++j) {
                Mat e = Mat::Zero(r, r);
                e(i, j) = 1;
                Mat x = Mat::Zero(st.dim_h, st.dim_h);
                x.block(off, off, m * r, m * r) = kron(Mat::Identity(m, m), e);
                ambient.push_back(x);
            }
        off += m * r;
    }
    Rng rng(seed);
    std::vector<Mat> gens;
    for (int i = 0; i < 3; ++i) gens.push_back(st.v * a.random_element(rng, true) * st.v.adjoint());
    BlockStructure comm = decompose_star_algebra(commutant_within(ambient, gens));
    st.algebra = sort_blocks(commutant_structure(comm));

    const Mat id_prev = Mat::Identity(d, d);
    res.isometry = (st.v.adjoint() * st.v - id_prev).norm();
    res.homomorphism = (st.pi(id_prev) - Mat::Identity(st.dim_h, st.dim_h)).norm();
    for (const Mat& x : probe_elements(a, rng)) {
        res.relation_a = std::max(res.relation_a, (st.v.adjoint() * st.pi(x) * st.v - phi_prev(x)).norm());
        Mat phi_n = st.pi(st.v.adjoint() * st.pi(x) * st.v);
        res.relation_c = std::max(res.relation_c, (phi_n - st.pi(phi_prev(x))).norm());
        res.closure = std::max(res.closure, st.algebra.membership_residual(st.pi(x)));
        res.closure = std::max(res.closure, st.algebra.membership_residual(st.v * x * st.v.adjoint()));
    }
    auto xs = sample_elements(a, 3, rng), ys = sample_elements(a, 3, rng);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        res.homomorphism = std::max(res.homomorphism, (st.pi(xs[i] * ys[i]) - st.pi(xs[i]) * st.pi(ys[i])).norm());
        res.homomorphism = std::max(res.homomorphism, (st.pi(xs[i].adjoint()) - st.pi(xs[i]).adjoint()).norm());
    }

    // Relation (b): compressions of A_n land in A_{n-1} and fill it.
    const Index need = a.algebra_dim();
    Mat cols(need, need + 8);
    for (Index i = 0; i < need + 8; ++i) {
        Mat y = st.v.adjoint() * st.algebra.random_element(rng, false) * st.v;
        res.relation_b = std::max(res.relation_b, a.membership_residual(y));
        cols.col(i) = a.coords(y);
    }
    res.relation_b_onto = range_basis(cols).cols() == need;

    res.central_support = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < st.algebra.blocks.size(); ++t)
        res.central_support = std::min(res.central_support, (st.algebra.central_projection(t) * st.v).norm());

    // V^* *-alg(V B V^*, A) V = *-alg(B, V^* A V) with B = A_{n-1}, A = pi(A_{n-1}).
    if (d <= 16 && st.algebra.algebra_dim() <= kFullSolveCap) {
        std::vector<Mat> lhs, gens_rhs;
        for (std::size_t t = 0; t < st.algebra.blocks.size(); ++t)
            for (Index p = 0; p < st.algebra.blocks[t].m; ++p)
                for (Index q = 0; q < st.algebra.blocks[t].m; ++q)
                    lhs.push_back(st.v.adjoint() * st.algebra.matrix_unit(t, p, q) * st.v);
        for (const Mat& x : probe_elements(a, rng)) {
            gens_rhs.push_back(x);
            gens_rhs.push_back(st.v.adjoint() * st.pi(x) * st.v);
        }
        res.compression_closure = subspace_angle(range_basis(stack_vecs(lhs)), stack_vecs(algebra_closure(gens_rhs, d, true)));
    }
    return st;
}

Mat Dilation::phi(std::size_t n, const Mat& x) const {
    if (n == 0) return base(x);
    const DilationStage& st = stages[n - 1];
    return st.pi(st.v.adjoint() * x * st.v);
}

Dilation bhat_dilate(const UcpMap& phi0, int depth, Index dim_cap) {
    if (depth < 1) throw ValidationError("dilate: depth must be at least 1");
    Dilation dl;
    dl.base = phi0;
    dl.requested_depth = depth;
    for (int n = 1; n <= depth; ++n) {
        const BlockStructure& a = dl.algebra(std::size_t(n - 1));
        for (const auto& b : a.blocks)
            if (b.m * a.dim > dim_cap) {
                std::ostringstream os;
                os << "stage " << n << ": Gram block of size " << b.m * a.dim << " exceeds dim_cap " << dim_cap;
                dl.truncated = true;
                dl.truncation_reason = os.str();
            }
        if (dl.truncated) break;
        const std::size_t prev_index = std::size_t(n - 1);
        LinearMap f = [&dl, prev_index](const Mat& x) { return dl.phi(prev_index, x); };
        DilationStage st = stinespring_step(a, f, 7 + std::uint64_t(n));
        if (st.dim_h > dim_cap) {
            std::ostringstream os;
            os << "stage " << n << ": dim H = " << st.dim_h << " exceeds dim_cap " << dim_cap;
            dl.truncated = true;
            dl.truncation_reason = os.str();
            break;
        }
        if (!dl.stages.empty()) {
            DilationStage& prev = dl.stages.back();
            Rng rng(97 + std::uint64_t(n));
            double rel_d = 0;
            for (const Mat& x : sample_elements(prev.prev, 4, rng))
                rel_d = std::max(rel_d, (st.pi(prev.v * x * prev.v.adjoint()) - st.v * prev.pi(x) * st.v.adjoint()).norm());
            prev.residuals.relation_d = rel_d;
            Mat p = st.pi(prev.v * prev.v.adjoint()), q = st.v * st.v.adjoint();
            prev.residuals.monotonicity = (q * p - p).norm();
        }
        dl.stages.push_back(std::move(st));
    }

    // phi_0^k(x) = W_k^* Pi_k(x) W_k, W_k = V_k ... V_1, Pi_k = pi_k o ... o pi_1.
    Rng rng(131);
    auto xs = sample_elements(phi0.algebra, 3, rng);
    for (std::size_t k = 1; k <= dl.stages.size(); ++k) {
        double worst = 0;
        for (const Mat& x : xs) {
            Mat direct = x;
            for (std::size_t i = 0; i < k; ++i) direct = phi0(direct);
            Mat w = Mat::Identity(phi0.dim(), phi0.dim()), lifted = x;
            for (std::size_t i = 0; i < k; ++i) {
                w = dl.stages[i].v * w;
                lifted = dl.stages[i].pi(lifted);
            }
            worst = std::max(worst, (w.adjoint() * lifted * w - direct).norm());
        }
        dl.bhat.push_back(worst);
    }
    return dl;
}

HarStability har_stability_check(const Dilation& dl) {
    if (dl.stages.empty()) throw ValidationError("har_stability_check: needs at least one dilation stage");
    HarStability h;
    std::vector<std::vector<Mat>> fix(dl.stages.size() + 1);
    for (std::size_t n = 0; n <= dl.stages.size(); ++n) {
        const BlockStructure& a = dl.algebra(n);
        const Index da = a.algebra_dim();
        if (da <= kFullSolveCap || n == 0) {
            Mat sys(da, da);
            for (Index k = 0; k < da; ++k) {
                Mat x = a.from_coords(Vec::Unit(da, k));
                sys.col(k) = a.coords(dl.phi(n, x) - x);
            }
            Mat ker = null_space(sys, kRankTol, 1e-10);
            for (Index j = 0; j < ker.cols(); ++j) fix[n].push_back(a.from_coords(ker.col(j)));
            h.full_solve.push_back(true);
        } else {
            // Fix(phi_n) lies in pi_n(A_{n-1}) since phi_n = pi_n(V^* . V); solve for
            // y with V^* pi_n(y) V = y on the blocks pi_n does not kill, weighting by r_s
            // so that the residual is measured in the HS norm of A_n.
            const DilationStage& st = dl.stages[n - 1];
            const BlockStructure& p = st.prev;
            std::vector<Index> live;
            std::vector<double> weight;
            Index pos = 0;
            for (std::size_t s = 0; s < p.blocks.size(); ++s) {
                Index cnt = p.blocks[s].m * p.blocks[s].m;
                for (Index i = 0; i < cnt; ++i) {
                    weight.push_back(std::sqrt(double(st.ranks[s])));
                    if (st.ranks[s] > 0) live.push_back(pos + i);
                }
                pos += cnt;
            }
            const Index dp = p.algebra_dim();
            Mat sys(dp, Index(live.size()));
            for (std::size_t c = 0; c < live.size(); ++c) {
                Mat y = p.from_coords(Vec::Unit(dp, live[c]));
                Vec r = p.coords(st.v.adjoint() * st.pi(y) * st.v - y);
                for (Index i = 0; i < dp; ++i) r(i) *= weight[std::size_t(i)];
                sys.col(Index(c)) = r;
            }
            Mat ker = null_space(sys, kRankTol, 1e-10);
            for (Index j = 0; j < ker.cols(); ++j) {
                Vec y = Vec::Zero(dp);
                for (std::size_t c = 0; c < live.size(); ++c) y(live[c]) = ker(Index(c), j);
                fix[n].push_back(st.pi(p.from_coords(y)));
            }
            h.full_solve.push_back(false);
        }
        h.fix_dims.push_back(Index(fix[n].size()));
    }
    for (std::size_t n = 1; n <= dl.stages.size(); ++n) {
        const DilationStage& st = dl.stages[n - 1];
        for (const Mat& x : fix[n - 1]) {
            Mat px = st.pi(x);
            h.pi_fixed = std::max(h.pi_fixed, (dl.phi(n, px) - px).norm());
            h.compression = std::max(h.compression, (st.v.adjoint() * px * st.v - x).norm());
        }
        for (std::size_t i = 0; i < std::min<std::size_t>(fix[n].size(), 8); ++i) {
            const Mat& x = fix[n][i];
            double nx = op_norm(x);
            h.isometry = std::max(h.isometry, std::abs(op_norm(st.v.adjoint() * x * st.v) - nx) / std::max(nx, 1e-300));
        }
    }
    h.stable = std::all_of(h.fix_dims.begin(), h.fix_dims.end(), [&](Index v) { return v == h.fix_dims[0]; }) &&
               h.pi_fixed <= 1e-8 && h.compression <= 1e-8 && h.isometry <= 1e-8;
    return h;
}

}  // namespace ncpb
