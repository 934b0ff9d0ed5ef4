#include "ncpb/hyperstate.hpp"

#include <doctest.h>

#include <cmath>

using namespace ncpb;

namespace {

GnsPtr gns_of(std::vector<Index> blocks) { return gns_build(build_algebra(blocks, std::nullopt)); }

Mat unit(Index n, Index a, Index b) {
    Mat e = Mat::Zero(n, n);
    e(a, b) = 1;
    return e;
}

// Random family with sum_k w_k x_k^* x_k = 1, normalized blockwise through S^{-1/2}.
KrausFamily random_family(const TracialAlgebra& m, int count, Rng& rng) {
    std::vector<Mat> xs;
    Mat s = Mat::Zero(m.size(), m.size());
    for (int k = 0; k < count; ++k) {
        xs.push_back(m.random_element(rng));
        s += xs.back().adjoint() * xs.back();
    }
    Mat inv_sqrt = herm_apply(s, [](double v) { return 1.0 / std::sqrt(v); });
    KrausFamily fam;
    for (const Mat& x : xs) fam.push_back({x * inv_sqrt, 1.0});
    return fam;
}

// The defining formula, evaluated directly on hats.
cd kraus_value(const GnsSpace& g, const KrausFamily& fam, const Mat& t) {
    cd v = 0;
    for (const auto& [x, w] : fam) {
        Vec h = g.hat(x.adjoint());
        v += w * h.dot(t * h);
    }
    return v;
}

}  // namespace

TEST_CASE("from_kraus matches the defining formula and extends tau") {
    Rng rng(21);
    for (auto blocks : {std::vector<Index>{1, 1}, std::vector<Index>{2}, std::vector<Index>{2, 1}}) {
        GnsPtr g = gns_of(blocks);
        KrausFamily fam = random_family(g->algebra(), 3, rng);
        Hyperstate phi = from_kraus(g, fam);
        for (int i = 0; i < 4; ++i) {
            Mat t = random_gaussian(g->dim(), g->dim(), rng);
            CHECK(std::abs(phi(t) - kraus_value(*g, fam, t)) < 1e-12);
        }
        CHECK(phi.extension_residual() < 1e-12);
        CHECK(phi.trace_residual() < 1e-12);
        CHECK(phi.min_eigenvalue() > -1e-12);
    }
}

TEST_CASE("from_kraus rejects families that are not normalized") {
    GnsPtr g = gns_of({2});
    CHECK_THROWS_AS(from_kraus(g, {{pauli_x(), 0.5}}), ValidationError);
    CHECK_THROWS_AS(Hyperstate::from_density(g, Mat::Identity(4, 4)), ValidationError);
}

TEST_CASE("correspondence: phi(T) = <P_phi(T) 1, 1> and P_phi is a bimodular u.c.p. map") {
    Rng rng(22);
    for (auto blocks : {std::vector<Index>{1, 1}, std::vector<Index>{2}, std::vector<Index>{2, 1}}) {
        GnsPtr g = gns_of(blocks);
        Hyperstate phi = from_kraus(g, random_family(g->algebra(), 2, rng));
        Superoperator p = poisson_superop(phi);
        for (int i = 0; i < 4; ++i) {
            Mat t = random_gaussian(g->dim(), g->dim(), rng);
            Mat pt = p.apply(t);
            CHECK(std::abs(phi(t) - g->one_hat().dot(pt * g->one_hat())) < 1e-12);
        }
        CHECK(p.unital_residual() < 1e-12);
        CHECK(p.choi_min_eigenvalue() > -1e-12);
        CHECK(p.bimodularity_residual() < 1e-12);
        // P_phi restricted to L(M) is the identity
        Mat x = g->algebra().random_element(rng);
        CHECK((p.apply(g->left(x)) - g->left(x)).norm() < 1e-12);
    }
}

TEST_CASE("standard form: tau-orthogonal, normalized, and spans the same space as the family") {
    Rng rng(23);
    GnsPtr g = gns_of({2, 1});
    KrausFamily fam = random_family(g->algebra(), 3, rng);
    Hyperstate phi = from_kraus(g, fam);
    const StandardForm& sf = phi.standard_form();
    const TracialAlgebra& m = g->algebra();
    Mat s = Mat::Zero(m.size(), m.size());
    for (std::size_t i = 0; i < sf.z.size(); ++i) {
        s += sf.z[i].adjoint() * sf.z[i];
        for (std::size_t j = 0; j < sf.z.size(); ++j) {
            cd ip = m.trace(sf.z[j].adjoint() * sf.z[i]);
            CHECK(std::abs(ip - (i == j ? sf.weights[i] : 0.0)) < 1e-12);
        }
        if (i > 0) CHECK(sf.weights[i] <= sf.weights[i - 1] + 1e-15);
    }
    CHECK((s - m.identity()).norm() < 1e-12);
    CHECK(sf.z.size() == 3);

    Mat a(g->dim(), 3), b(g->dim(), Index(sf.z.size()));
    for (Index k = 0; k < 3; ++k) a.col(k) = g->hat(fam[std::size_t(k)].first);
    for (Index k = 0; k < b.cols(); ++k) b.col(k) = g->hat(sf.z[std::size_t(k)]);
    CHECK(subspace_angle(a, b) < 1e-10);

    KrausFamily back;
    for (const Mat& z : sf.z) back.push_back({z, 1.0});
    CHECK((from_kraus(g, back).density() - phi.density()).norm() < 1e-12);
}

TEST_CASE("C^2 projection family: density is 1/2 on the diagonal") {
    GnsPtr g = gns_build(build_algebra({1, 1}, std::vector<double>{0.5, 0.5}));
    Hyperstate phi = from_kraus(g, {{unit(2, 0, 0), 1.0}, {unit(2, 1, 1), 1.0}});
    CHECK((phi.density() - 0.5 * Mat::Identity(2, 2)).norm() < 1e-14);
    Classification c = classify(phi);
    CHECK(c.regular);
    CHECK(c.generating);
    CHECK(c.strongly_generating);
    CHECK(c.symmetric);
    // P_phi is the diagonal pinching
    Superoperator p = poisson_superop(phi);
    CHECK(p.apply(unit(2, 0, 1)).norm() < 1e-14);
    CHECK((p.apply(unit(2, 1, 1)) - unit(2, 1, 1)).norm() < 1e-14);
}

TEST_CASE("classification of the identity hyperstate and the {1, X} family on M_2") {
    GnsPtr g = gns_of({2});
    Hyperstate e = identity_hyperstate(g);
    CHECK((e.density() - g->p_one()).norm() < 1e-14);
    Classification ce = classify(e);
    CHECK(ce.regular);
    CHECK_FALSE(ce.generating);
    CHECK(ce.generated_dim == 1);
    CHECK((poisson_superop(e).matrix - Mat::Identity(16, 16)).norm() < 1e-12);

    Hyperstate x = from_kraus(g, {{Mat::Identity(2, 2), 0.5}, {pauli_x(), 0.5}});
    Classification cx = classify(x);
    CHECK(cx.regular);
    CHECK_FALSE(cx.generating);
    CHECK(cx.generated_dim == 2);
    CHECK(cx.symmetric);
    CHECK(x.from_unitary_family());

    Hyperstate pauli = from_kraus(g, {{Mat::Identity(2, 2), 1.0 / 3}, {pauli_x(), 1.0 / 3}, {pauli_z(), 1.0 / 3}});
    Classification cp = classify(pauli);
    CHECK(cp.generating);
    CHECK(cp.strongly_generating);
}

TEST_CASE("non-regular hyperstate: Kraus criterion and the commutant criterion agree") {
    GnsPtr g = gns_of({2});
    // x1 = E00, x2 = E01: sum x^* x = 1 but sum x x^* = 2 E00
    Hyperstate phi = from_kraus(g, {{unit(2, 0, 0), 1.0}, {unit(2, 0, 1), 1.0}});
    CHECK(regularity_residual(phi) > 0.5);
    CHECK_FALSE(classify(phi).regular);
    double worst = 0;
    for (const Mat& b : g->basis()) worst = std::max(worst, std::abs(phi(g->right(b)) - g->algebra().trace(b)));
    CHECK(worst > 0.1);
    CHECK_THROWS_AS(conjugate(phi), PreconditionError);
    CHECK_THROWS_AS(opposite_superop(phi), PreconditionError);

    Rng rng(24);
    Hyperstate reg = from_kraus(g, {{random_unitary(2, rng), 0.5}, {random_unitary(2, rng), 0.5}});
    CHECK(classify(reg).regular);
    worst = 0;
    for (const Mat& b : g->basis()) worst = std::max(worst, std::abs(reg(g->right(b)) - g->algebra().trace(b)));
    CHECK(worst < 1e-12);
}

TEST_CASE("convolution: P_{phi*psi} = P_phi o P_psi and (phi*psi)(T) = phi(P_psi(T))") {
    Rng rng(25);
    GnsPtr g = gns_of({2, 1});
    Hyperstate phi = from_kraus(g, random_family(g->algebra(), 2, rng));
    Hyperstate psi = from_kraus(g, random_family(g->algebra(), 2, rng));
    Hyperstate c = convolve(phi, psi);
    Superoperator pphi = poisson_superop(phi), ppsi = poisson_superop(psi);
    for (int i = 0; i < 3; ++i) {
        Mat t = random_gaussian(g->dim(), g->dim(), rng);
        CHECK(std::abs(c(t) - phi(ppsi.apply(t))) < 1e-12);
    }
    CHECK((poisson_superop(c).matrix - pphi.matrix * ppsi.matrix).norm() < 1e-10);

    Hyperstate c2 = convolution_power(phi, 2);
    CHECK((c2.density() - convolve(phi, phi).density()).norm() < 1e-12);
    CHECK((convolution_power(phi, 0).density() - identity_hyperstate(g).density()).norm() < 1e-14);
    CHECK((convolve(identity_hyperstate(g), phi).density() - phi.density()).norm() < 1e-12);
}

TEST_CASE("conjugate and the opposite map") {
    Rng rng(26);
    GnsPtr g = gns_of({2});
    KrausFamily fam = {{random_unitary(2, rng), 0.25}, {random_unitary(2, rng), 0.75}};
    Hyperstate phi = from_kraus(g, fam);
    Hyperstate bar = conjugate(phi);
    KrausFamily adj;
    for (const auto& [x, w] : fam) adj.push_back({x.adjoint(), w});
    CHECK((bar.density() - from_kraus(g, adj).density()).norm() < 1e-12);
    CHECK((conjugate(bar).density() - phi.density()).norm() < 1e-12);

    Superoperator po = opposite_superop(phi);
    CHECK(po.unital_residual() < 1e-12);
    Mat t = random_gaussian(4, 4, rng);
    Mat expect = Mat::Zero(4, 4);
    for (const Mat& z : phi.standard_form().z) expect += g->left(z) * t * g->left(z.adjoint());
    CHECK((po.apply(t) - expect).norm() < 1e-12);
}

TEST_CASE("superoperator plumbing") {
    Rng rng(27);
    GnsPtr g = gns_of({2});
    Mat a = random_gaussian(4, 4, rng), b = random_gaussian(4, 4, rng), t = random_gaussian(4, 4, rng);
    Mat k = kraus_matrix({a}, {b});
    CHECK((unvec(k * vec(t), 4) - a * t * b).norm() < 1e-12);
    Superoperator id = identity_superop(g);
    CHECK((id.apply(t) - t).norm() < 1e-14);
    Hyperstate phi = from_kraus(g, {{Mat::Identity(2, 2), 0.5}, {pauli_z(), 0.5}});
    Superoperator p = poisson_superop(phi);
    // dual w.r.t. the HS pairing
    Mat s = random_gaussian(4, 4, rng);
    CHECK(std::abs((p.apply(t) * s.adjoint()).trace() - (t * p.dual().apply(s).adjoint()).trace()) < 1e-12);
    CHECK((p.then(p).matrix - p.matrix * p.matrix).norm() < 1e-12);
    Hyperstate half = mix(phi, identity_hyperstate(g), 0.5);
    CHECK((half.density() - 0.5 * (phi.density() + g->p_one())).norm() < 1e-14);
}
