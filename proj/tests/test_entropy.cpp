#include "ncpb/entropy.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace ncpb;

namespace {

Mat unit(Index n, Index a, Index b) {
    Mat e = Mat::Zero(n, n);
    e(a, b) = 1;
    return e;
}

GnsPtr c2(double p = 0.5) { return gns_build(build_algebra({1, 1}, std::vector<double>{p, 1 - p})); }
GnsPtr m2() { return gns_build(build_algebra({2}, std::nullopt)); }

Hyperstate e2(const GnsPtr& g) { return from_kraus(g, {{unit(2, 0, 0), 1.0}, {unit(2, 1, 1), 1.0}}); }
Hyperstate pauli(const GnsPtr& g) {
    return from_kraus(g, {{Mat::Identity(2, 2), 1.0 / 3}, {pauli_x(), 1.0 / 3}, {pauli_z(), 1.0 / 3}});
}
Hyperstate half_x(const GnsPtr& g) { return from_kraus(g, {{Mat::Identity(2, 2), 0.5}, {pauli_x(), 0.5}}); }

Mat coherent_rho(double c) {
    Mat r(2, 2);
    r << 0.5, c, c, 0.5;
    return r;
}

// diag C^2 inside M_2
InclusionState diag_inclusion(const GnsPtr& g, const Mat& rho) {
    return build_inclusion(embed_by_multiplicities(g, {2}, {{1}, {1}}, {}), rho);
}

Mat additivity_rho() {
    Mat kappa(2, 2);
    kappa << 0.1, cd(0, 0.05), cd(0, -0.05), -0.1;
    return 0.25 * Mat::Identity(4, 4) + kron(pauli_x(), kappa);
}

// Independent evaluation of -sum_n <log Delta xi_n, xi_n>, xi_n = iota(z_n^*) 1_zeta.
// Delta is taken from the Tomita form <Delta a1, b1> = zeta(a b^*) against the Gram
// form <a1, b1> = zeta(b^* a) in the matrix-unit basis of A; no density square roots.
double furstenberg_oracle(const Hyperstate& phi, const InclusionState& s) {
    const MultiMatrix& a = s.inc.a;
    const Index n = a.dim();
    std::vector<Mat> e;
    for (Index k = 0; k < n; ++k) e.push_back(a.unit(k));
    Mat g(n, n), q(n, n);
    for (Index l = 0; l < n; ++l)
        for (Index k = 0; k < n; ++k) {
            g(l, k) = s.zeta(e[std::size_t(l)].adjoint() * e[std::size_t(k)]);
            q(l, k) = s.zeta(e[std::size_t(k)] * e[std::size_t(l)].adjoint());
        }
    Eigen::SelfAdjointEigenSolver<Mat> ge(g);
    Mat g_half = ge.eigenvectors() * ge.eigenvalues().cwiseSqrt().cast<cd>().asDiagonal() * ge.eigenvectors().adjoint();
    Mat g_mhalf = ge.eigenvectors() * ge.eigenvalues().cwiseSqrt().cwiseInverse().cast<cd>().asDiagonal() * ge.eigenvectors().adjoint();
    Mat sym = g_mhalf * q * g_mhalf;
    Eigen::SelfAdjointEigenSolver<Mat> de(0.5 * (sym + sym.adjoint()));
    Mat log_sym = de.eigenvectors() * de.eigenvalues().array().log().matrix().cast<cd>().asDiagonal() * de.eigenvectors().adjoint();
    double h = 0;
    for (const Mat& z : phi.standard_form().z) {
        Vec c = a.coords(s.inc.iota(z.adjoint()));
        Vec w = g_half * c;
        h -= w.dot(log_sym * w).real();
    }
    return h;
}

}  // namespace

TEST_CASE("von Neumann entropy of the standard examples") {
    GnsPtr g = m2();
    VnEntropy e = vn_entropy(identity_hyperstate(g));
    CHECK(e.value == 0.0);
    CHECK(e.weight_formula == 0.0);
    CHECK(e.rank == 1);
    VnEntropy p = vn_entropy(pauli(g));
    CHECK(std::abs(p.value - std::log(3.0)) < 1e-10);
    CHECK(std::abs(p.weight_formula - std::log(3.0)) < 1e-10);
    VnEntropy two = vn_entropy(e2(c2()));
    CHECK(std::abs(two.value - std::log(2.0)) < 1e-10);
    CHECK(vn_entropy_density(Mat::Identity(4, 4) / 4.0) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("entropy sequences and subadditivity") {
    GnsPtr g = m2();
    EntropySequence id = entropy_sequence(identity_hyperstate(g), 4);
    for (double h : id.h) CHECK(h == 0.0);
    CHECK(id.h_estimate == 0.0);

    EntropySequence two = entropy_sequence(e2(c2()), 6);
    for (double h : two.h) CHECK(h <= std::log(2.0) + 1e-12);
    CHECK(two.h_estimate <= std::log(2.0) / 6 + 1e-12);
    CHECK(two.subadditivity_violation <= 1e-9);

    CHECK_THROWS_AS(entropy_sequence(from_kraus(g, {{unit(2, 0, 0), 1.0}, {unit(2, 0, 1), 1.0}}), 2), PreconditionError);

    Rng rng(41);
    double worst = -1;
    for (int i = 0; i < 50; ++i) {
        auto fam = [&] {
            KrausFamily f;
            int k = 1 + int(rng() % 3);
            for (int j = 0; j < k; ++j) f.push_back({random_unitary(2, rng), 1.0 / k});
            return from_kraus(g, f);
        };
        Hyperstate phi = fam(), psi = fam();
        double gap = vn_entropy(convolve(phi, psi)).value - vn_entropy(phi).value - vn_entropy(psi).value;
        worst = std::max(worst, gap);
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("inclusions validate their data") {
    GnsPtr g = c2();
    CHECK_NOTHROW(diag_inclusion(g, coherent_rho(0.3)));
    CHECK_NOTHROW(diag_inclusion(g, Mat::Identity(2, 2) / 2.0));
    CHECK_THROWS_AS(diag_inclusion(g, coherent_rho(0.6)), ValidationError);  // not positive
    Mat skew(2, 2);
    skew << 0.7, 0, 0, 0.3;
    CHECK_THROWS_AS(diag_inclusion(g, skew), ValidationError);  // zeta o iota != tau
    CHECK_THROWS_AS(embed_by_multiplicities(g, {3}, {{1}, {1}}, {}), ValidationError);

    // M = A with the trace density: e = id
    GnsPtr gm = m2();
    Inclusion same = embed_by_multiplicities(gm, {2}, {{1}}, {});
    InclusionState s = build_inclusion(same, trace_like_density(same));
    CHECK((s.rho - Mat::Identity(2, 2) / 2.0).norm() < 1e-14);
    CHECK((s.e() - Mat::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("modular data") {
    GnsPtr g = c2();
    ModularData flat = modular_data(diag_inclusion(g, Mat::Identity(2, 2) / 2.0));
    CHECK((flat.delta - Mat::Identity(4, 4)).norm() < 1e-12);
    CHECK(flat.log_delta.norm() < 1e-12);

    const double p = 0.3;
    GnsPtr gp = c2(p);
    Mat rho = Mat::Zero(2, 2);
    rho(0, 0) = p;
    rho(1, 1) = 1 - p;
    InclusionState s = diag_inclusion(gp, rho);
    ModularData md = modular_data(s);
    std::vector<double> ev(md.eigenvalues.data(), md.eigenvalues.data() + md.eigenvalues.size());
    std::sort(ev.begin(), ev.end());
    std::vector<double> want = {p / (1 - p), 1, 1, (1 - p) / p};
    std::sort(want.begin(), want.end());
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(ev[i] - want[i]) < 1e-12);
    CHECK(md.unit_residual < 1e-12);
    CHECK(md.s_residual < 1e-10);
    CHECK(md.log_residual < 1e-10);

    InclusionState sc = diag_inclusion(c2(), coherent_rho(0.3));
    Rng rng(42);
    Mat x = sc.inc.a.random_element(rng), y = sc.inc.a.random_element(rng);
    const double t = 0.37;
    CHECK((modular_flow(sc, x * y, t) - modular_flow(sc, x, t) * modular_flow(sc, y, t)).norm() < 1e-10);
    CHECK((modular_flow(sc, x.adjoint(), t) - modular_flow(sc, x, t).adjoint()).norm() < 1e-10);
    CHECK(std::abs(sc.zeta(modular_flow(sc, x, t)) - sc.zeta(x)) < 1e-10);
}

TEST_CASE("Furstenberg entropy against the Tomita-form oracle") {
    GnsPtr g = c2();
    InclusionState tracial = diag_inclusion(g, Mat::Identity(2, 2) / 2.0);
    CHECK(std::abs(furstenberg_entropy(e2(g), tracial).value) < 1e-12);

    InclusionState s = diag_inclusion(g, coherent_rho(0.3));
    FurstenbergEntropy f = furstenberg_entropy(e2(g), s);
    const double oracle = furstenberg_oracle(e2(g), s);
    CHECK(f.value > 1e-3);
    CHECK(std::abs(f.value - oracle) < 1e-10);
    CHECK(std::abs(f.spectral - oracle) < 1e-8);
    CHECK(std::abs(f.finite_difference - oracle) < 1e-6);
    CHECK(std::abs(f.imaginary_part) < 1e-12);
    CHECK(f.value <= vn_entropy(e2(g)).value + 1e-10);

    CHECK(std::abs(furstenberg_entropy(identity_hyperstate(g), s).value) < 1e-12);

    GnsPtr gm = m2();
    InclusionState big = build_inclusion(embed_by_multiplicities(gm, {4}, {{2}}, {}), additivity_rho());
    for (const Hyperstate& phi : {pauli(gm), half_x(gm)}) {
        FurstenbergEntropy fb = furstenberg_entropy(phi, big);
        CHECK(std::abs(fb.value - furstenberg_oracle(phi, big)) < 1e-10);
        CHECK(fb.value >= -1e-10);
    }
}

TEST_CASE("stationary states") {
    GnsPtr gm = m2();
    Inclusion same = embed_by_multiplicities(gm, {2}, {{1}}, {});
    StationarySolution st = stationary_state_solve(pauli(gm), same);
    CHECK(st.faithful);
    CHECK((st.rho - Mat::Identity(2, 2) / 2.0).norm() < 1e-10);

    Inclusion lr = embed_left_regular(gm);
    StationarySolution sl = stationary_state_solve(pauli(gm), lr);
    CHECK(sl.residual <= 1e-9);
    CHECK((stationary_map(pauli(gm), lr, sl.rho) - sl.rho).norm() <= 1e-9);
    // Cesaro average of the iterates started at the identity hyperstate
    Mat x = gm->p_one(), acc = Mat::Zero(4, 4);
    const int n = 4000;
    for (int k = 0; k < n; ++k) {
        x = stationary_map(pauli(gm), lr, x);
        acc += x;
    }
    CHECK((acc / double(n) - sl.rho).norm() < 1e-3);

    GnsPtr g = c2();
    Inclusion diag = embed_by_multiplicities(g, {2}, {{1}, {1}}, {});
    StationarySolution se = stationary_state_solve(e2(g), diag);
    CHECK(se.residual <= 1e-9);
    CHECK(se.faithful);
}

TEST_CASE("additivity under a stationary state") {
    GnsPtr g = c2();
    Inclusion diag = embed_by_multiplicities(g, {2}, {{1}, {1}}, {});
    StationarySolution se = stationary_state_solve(e2(g), diag);
    InclusionState s = build_inclusion(diag, se.rho);
    AdditivityReport r = entropy_additivity_check(e2(g), e2(g), s, 4);
    CHECK(r.residual <= 1e-7);
    CHECK(r.power_residual <= 1e-7);

    GnsPtr gm = m2();
    InclusionState big = build_inclusion(embed_by_multiplicities(gm, {4}, {{2}}, {}), additivity_rho());
    CHECK(stationarity_residual(half_x(gm), big) < 1e-12);
    AdditivityReport ra = entropy_additivity_check(pauli(gm), half_x(gm), big, 4);
    const double h_conv = furstenberg_oracle(convolve(pauli(gm), half_x(gm)), big);
    const double h_sum = furstenberg_oracle(pauli(gm), big) + furstenberg_oracle(half_x(gm), big);
    CHECK(std::abs(h_conv - h_sum) < 1e-7);
    CHECK(ra.residual <= 1e-7);
    CHECK(std::abs(ra.h_conv - h_conv) < 1e-10);
    CHECK(ra.power_residual <= 1e-7);

    // psi not stationary for this zeta
    CHECK_THROWS_AS(entropy_additivity_check(half_x(gm), pauli(gm), big, 2), PreconditionError);
}

TEST_CASE("entropy bounds") {
    GnsPtr g = c2();
    InclusionState s = diag_inclusion(g, coherent_rho(0.3));
    BoundsReport b = entropy_bounds_check(e2(g), s, 4);
    CHECK(b.holds);
    CHECK(b.h <= std::log(2.0) + 1e-10);
    BoundsReport be = entropy_bounds_check(identity_hyperstate(g), s, 4);
    CHECK(be.holds);
    CHECK(std::abs(be.h) < 1e-12);
    CHECK(be.vn == 0.0);

    GnsPtr gm = m2();
    InclusionState big = build_inclusion(embed_by_multiplicities(gm, {4}, {{2}}, {}), additivity_rho());
    BoundsReport bs = entropy_bounds_check(half_x(gm), big, 4);
    CHECK(bs.stationary);
    CHECK(bs.holds);
    CHECK(bs.h <= bs.fekete + 1e-10);
}

TEST_CASE("entropy gap inequality") {
    GnsPtr g = c2();
    std::vector<Mat> fam = {unit(2, 0, 0), unit(2, 1, 1)};
    GapBound tr = entropy_gap_bound(fam, diag_inclusion(g, Mat::Identity(2, 2) / 2.0));
    CHECK(std::abs(tr.t_value - 1.0) < 1e-12);
    CHECK(std::abs(tr.bound) < 1e-12);
    CHECK(tr.holds);

    InclusionState s = diag_inclusion(g, coherent_rho(0.3));
    GapBound gb = entropy_gap_bound(fam, s);
    CHECK(gb.holds);
    CHECK(gb.contraction);
    CHECK(gb.h >= gb.bound - 1e-8);
    CHECK(gb.t_value <= 1 + 1e-10);
    CHECK(gb.t_value >= 0);
    // in HS coordinates 1_zeta = rho^{1/2} and T acts by a^* . a, so <T 1, 1> = sum Tr(rho^{1/2} p rho^{1/2} p)
    const Mat& rs = s.rho_sqrt;
    double direct = 0;
    for (const Mat& p : fam) {
        Mat ip = s.inc.iota(p);
        direct += (rs * ip * rs * ip).trace().real();
    }
    CHECK(std::abs(gb.t_value - direct) < 1e-12);

    GnsPtr gm = m2();
    Rng rng(43);
    Mat u = random_unitary(2, rng);
    InclusionState big = build_inclusion(embed_by_multiplicities(gm, {4}, {{2}}, {}), additivity_rho());
    GapBound gu = entropy_gap_bound({u}, big);
    CHECK(gu.holds);
    CHECK(gu.contraction);

    CHECK_THROWS_AS(entropy_gap_bound({unit(2, 0, 0), unit(2, 0, 1)}, big), ValidationError);
}

TEST_CASE("zero entropy on the boundary") {
    GnsPtr gm = m2();
    BoundaryAlgebra b = boundary_build(pauli(gm));
    ZeroEntropy z = zero_entropy_check(pauli(gm), b);
    CHECK(z.h_zero);
    CHECK(z.fix_equals_m);
    CHECK(z.agree);
    CHECK(std::abs(z.h) <= 1e-8);

    GnsPtr g = c2();
    BoundaryAlgebra ba = boundary_build(e2(g));
    ZeroEntropy za = zero_entropy_check(e2(g), ba);
    CHECK(za.agree);
    CHECK(za.harmonic_dim == 2);

    CHECK_THROWS_AS(zero_entropy_check(half_x(gm), boundary_build(half_x(gm))), PreconditionError);
}
