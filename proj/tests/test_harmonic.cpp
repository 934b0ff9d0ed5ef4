#include "ncpb/harmonic.hpp"

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

Hyperstate e2(const GnsPtr& g) { return from_kraus(g, {{unit(2, 0, 0), 1.0}, {unit(2, 1, 1), 1.0}}); }
Hyperstate pauli(const GnsPtr& g) {
    return from_kraus(g, {{Mat::Identity(2, 2), 1.0 / 3}, {pauli_x(), 1.0 / 3}, {pauli_z(), 1.0 / 3}});
}
Hyperstate half_x(const GnsPtr& g) { return from_kraus(g, {{Mat::Identity(2, 2), 0.5}, {pauli_x(), 0.5}}); }

// dim ker(S - id) for a D x D Kraus channel S(rho) = sum k rho k^*, counted from the
// eigenvalues of its superoperator matrix (independent of the library's null-space path).
Index channel_fixed_dim(const std::vector<Mat>& kraus) {
    const Index d = kraus[0].rows();
    Mat s = Mat::Zero(d * d, d * d);
    for (const Mat& k : kraus) s += kron(k.conjugate(), k);
    Eigen::ComplexEigenSolver<Mat> es(s);
    Index count = 0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i) - 1.0) < 1e-8) ++count;
    return count;
}

Index eigen_one_count(const Mat& p) {
    Eigen::ComplexEigenSolver<Mat> es(p);
    Index count = 0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i) - 1.0) < 1e-8) ++count;
    return count;
}

}  // namespace

TEST_CASE("fixed spaces") {
    GnsPtr g2 = gns_build(build_algebra({1, 1}, std::vector<double>{0.5, 0.5}));
    HarmonicSpace h = fixed_space(poisson_superop(e2(g2)));
    CHECK(h.dim() == 2);
    CHECK(h.contains_m);
    CHECK(h.dim() == eigen_one_count(poisson_superop(e2(g2)).matrix));

    GnsPtr m2 = gns_of({2});
    CHECK(fixed_space(identity_superop(m2)).dim() == 16);

    // P acts on the right tensor leg only, so Fix = M_2 (x) Fix(right channel)
    HarmonicSpace hx = fixed_space(poisson_superop(half_x(m2)));
    const double s = std::sqrt(0.5);
    CHECK(hx.dim() == 4 * channel_fixed_dim({s * Mat::Identity(2, 2), s * pauli_x()}));
    CHECK(hx.dim() == 8);

    HarmonicSpace hp = fixed_space(poisson_superop(pauli(m2)));
    CHECK(hp.dim() == 4);
    Rng rng(31);
    CHECK(hp.distance(m2->left(m2->algebra().random_element(rng))) < 1e-10);
}

TEST_CASE("Cesaro expectation equals the iterated average") {
    GnsPtr g2 = gns_build(build_algebra({1, 1}, std::vector<double>{0.5, 0.5}));
    Superoperator p = poisson_superop(e2(g2));
    Superoperator e = cesaro_expectation(p);
    Rng rng(32);
    Mat t = random_gaussian(2, 2, rng);
    CHECK((e.apply(t) - cesaro_average(p, t, 10000)).norm() < 1e-8);

    GnsPtr m2 = gns_of({2});
    Superoperator id = cesaro_expectation(identity_superop(m2));
    CHECK((id.matrix - Mat::Identity(16, 16)).norm() < 1e-10);

    Superoperator pp = poisson_superop(pauli(m2));
    Superoperator ep = cesaro_expectation(pp);
    CHECK((ep.matrix * ep.matrix - ep.matrix).norm() < 1e-10);
    CHECK((ep.matrix * pp.matrix - ep.matrix).norm() < 1e-10);
    CHECK((pp.matrix * ep.matrix - ep.matrix).norm() < 1e-10);
    CHECK(ep.unital_residual() < 1e-10);
    CHECK(ep.choi_min_eigenvalue() > -1e-10);
    // strongly generating on a factor: E(T) lies in L(M)
    for (int i = 0; i < 3; ++i) {
        Mat et = ep.apply(random_gaussian(4, 4, rng));
        Mat x = Mat::Zero(2, 2);  // tau-coordinates of E(T) 1^
        for (const Mat& b : m2->basis()) x += m2->one_hat().dot(m2->left(b).adjoint() * et * m2->one_hat()) * b;
        CHECK((m2->left(x) - et).norm() < 1e-9);
    }
}

TEST_CASE("boundary of the Pauli family is M_2") {
    GnsPtr m2 = gns_of({2});
    BoundaryAlgebra b = boundary_build(pauli(m2));
    CHECK(b.dim() == 4);
    CHECK(b.blocks == std::vector<Index>{2});
    CHECK(b.center_dim == 1);
    CHECK(b.zeta_faithful);
    CHECK(b.residuals.associativity < 1e-9);
    CHECK(b.residuals.involution < 1e-9);
    CHECK(b.residuals.positivity < 1e-9);
    CHECK(b.residuals.idempotent < 1e-10);
    CHECK(b.residuals.stationarity < 1e-10);
    RelativeCommutant rc = relative_commutant(b);
    CHECK(rc.dim == 1);
    CHECK(rc.equals_center);
}

TEST_CASE("boundary of the trivial algebra and of the non-generating control") {
    GnsPtr c = gns_build(build_algebra({1}, std::vector<double>{1.0}));
    BoundaryAlgebra bc = boundary_build(identity_hyperstate(c));
    CHECK(bc.dim() == 1);
    CHECK(bc.blocks == std::vector<Index>{1});

    GnsPtr m2 = gns_of({2});
    BoundaryAlgebra b = boundary_build(half_x(m2));
    CHECK(b.dim() == 8);
    Index total = 0;
    for (Index m : b.blocks) total += m * m;
    CHECK(total == 8);
    CHECK(b.blocks == std::vector<Index>{2, 2});
    CHECK(b.residuals.associativity < 1e-9);
    RelativeCommutant rc = relative_commutant(b);
    CHECK(rc.dim > 1);
    CHECK_FALSE(rc.equals_center);

    GnsPtr g2 = gns_build(build_algebra({1, 1}, std::vector<double>{0.5, 0.5}));
    BoundaryAlgebra ba = boundary_build(e2(g2));
    RelativeCommutant rca = relative_commutant(ba);
    CHECK(rca.dim == 2);
}

TEST_CASE("double ergodicity") {
    GnsPtr g2 = gns_build(build_algebra({1, 1}, std::vector<double>{0.5, 0.5}));
    DoubleErgodicity de = double_ergodicity(e2(g2));
    CHECK(de.intersection_dim == 2);
    CHECK(de.equals_center);

    GnsPtr m2 = gns_of({2});
    DoubleErgodicity dp = double_ergodicity(pauli(m2));
    CHECK(dp.intersection_dim == 1);
    CHECK(dp.angle < 1e-8);

    GnsPtr m23 = gns_of({2, 3});
    Rng rng(33);
    KrausFamily fam;
    for (int k = 0; k < 3; ++k) {
        Mat u = Mat::Zero(5, 5);
        u.topLeftCorner(2, 2) = random_unitary(2, rng);
        u.bottomRightCorner(3, 3) = random_unitary(3, rng);
        fam.push_back({u, 1.0 / 3});
    }
    Hyperstate phi = from_kraus(m23, fam);
    REQUIRE(classify(phi).strongly_generating);
    DoubleErgodicity d23 = double_ergodicity(phi);
    CHECK(d23.intersection_dim == 2);
    CHECK(d23.equals_center);
    CHECK(d23.containment < 1e-10);

    CHECK_THROWS_AS(double_ergodicity(half_x(m2)), PreconditionError);
    DoubleErgodicity neg = double_ergodicity_unchecked(half_x(m2));
    CHECK(neg.containment < 1e-10);  // the unconditional inclusion survives
}

TEST_CASE("MV averaging") {
    GnsPtr m2 = gns_of({2});
    Hyperstate phi = pauli(m2);
    Rng rng(34);
    Mat x = m2->algebra().random_element(rng);
    MvResult rl = mv_project(phi, m2->left(x));
    REQUIRE(rl.lambda);
    CHECK(std::abs(*rl.lambda - m2->algebra().trace(x)) < 1e-10);
    MvResult rr = mv_project(phi, m2->right(x));
    CHECK(std::abs(*rr.lambda - m2->algebra().trace(x)) < 1e-10);
    MvResult rp = mv_project(phi, m2->p_one());
    CHECK(rp.scalar_residual < 1e-8);
    HullEstimate est = mv_hull_oracle(phi, m2->p_one(), 20000, 6, rng);
    CHECK(std::abs(est.lambda - *rp.lambda) < 1e-2);
}

TEST_CASE("inner derivations") {
    GnsPtr m2 = gns_of({2});
    Hyperstate phi = pauli(m2);
    InnerDerivation one = derivation_inner_part(phi, Mat::Identity(4, 4));
    CHECK(one.c.norm() < 1e-10);
    CHECK((one.z - Mat::Identity(4, 4)).norm() < 1e-10);

    Rng rng(35);
    Mat a = m2->algebra().random_element(rng);
    InnerDerivation la = derivation_inner_part(phi, m2->left(a));
    CHECK((la.z - m2->algebra().trace(a) * Mat::Identity(4, 4)).norm() < 1e-10);
    CHECK(la.bound_applicable);  // L(a) is P-harmonic
    CHECK(la.bound_holds);

    Mat t = random_gaussian(4, 4, rng);
    InnerDerivation r = derivation_inner_part(phi, t);
    for (const Mat& b : m2->basis()) {
        Mat lx = m2->left(b);
        CHECK(((lx * r.c - r.c * lx) - (lx * t - t * lx)).norm() < 1e-10);
    }
    CHECK_FALSE(r.bound_applicable);
}

TEST_CASE("Foguel criterion") {
    GnsPtr g2 = gns_build(build_algebra({1, 1}, std::vector<double>{0.5, 0.5}));
    FoguelReport pos = foguel_test(e2(g2), g2->basis(), 200);
    CHECK(pos.decays);
    CHECK(pos.fix_equals_m);
    CHECK(pos.verdict == FoguelVerdict::Agree);

    GnsPtr m2 = gns_of({2});
    FoguelReport id = foguel_test(identity_hyperstate(m2), m2->basis(), 20);
    CHECK_FALSE(id.decays);
    CHECK(id.harmonic_dim == 16);
    CHECK(id.verdict == FoguelVerdict::Agree);
    // A_n stays P_1 so the commutator norms are constant
    CHECK(std::abs(id.norms[1].front() - id.norms[1].back()) < 1e-12);

    FoguelReport x = foguel_test(half_x(m2), m2->basis(), 200);
    CHECK_FALSE(x.decays);
    CHECK(x.harmonic_dim == 8);
    CHECK(x.verdict == FoguelVerdict::Agree);
}

TEST_CASE("tensor splitting") {
    GnsPtr c = gns_build(build_algebra({1}, std::vector<double>{1.0}));
    TensorSplit t0 = tensor_split_check(identity_hyperstate(c), identity_hyperstate(c));
    CHECK(t0.dim_product == 1);

    GnsPtr g2 = gns_build(build_algebra({1, 1}, std::vector<double>{0.5, 0.5}));
    TensorSplit t1 = tensor_split_check(e2(g2), e2(g2));
    CHECK(t1.dim_product == 4);
    CHECK(t1.dim1 * t1.dim2 == 4);
    CHECK(t1.equal);

    GnsPtr m2 = gns_of({2});
    TensorSplit t2 = tensor_split_check(pauli(m2), e2(g2));
    CHECK(t2.dim_product == 8);
    CHECK(t2.equal);
    CHECK(t2.angle < 1e-8);

    // independent count on the product superoperator
    TracialAlgebra prod = tensor_algebra(m2->algebra(), g2->algebra());
    GnsPtr gp = gns_build(prod);
    Hyperstate tp = tensor_hyperstate(pauli(m2), e2(g2), gp);
    CHECK(eigen_one_count(poisson_superop(tp).matrix) == 8);
    CHECK(tp.extension_residual() < 1e-12);
}
