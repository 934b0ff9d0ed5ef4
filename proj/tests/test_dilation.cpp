#include "ncpb/dilation.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>

using namespace ncpb;

namespace {

Mat unit(Index n, Index a, Index b) {
    Mat e = Mat::Zero(n, n);
    e(a, b) = 1;
    return e;
}

// x -> tau(x) 1 on M_2, Kraus E_ij / sqrt(2)
std::vector<Mat> trace_kraus() {
    std::vector<Mat> k;
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j) k.push_back(unit(2, i, j) / std::sqrt(2.0));
    return k;
}

Mat apply_kraus(const std::vector<Mat>& k, const Mat& x) {
    Mat y = Mat::Zero(x.rows(), x.cols());
    for (const Mat& a : k) y += a.adjoint() * x * a;
    return y;
}

}  // namespace

TEST_CASE("ucp_from_kraus validates its input") {
    UcpMap id = ucp_from_kraus({Mat::Identity(2, 2)});
    CHECK(id.dim() == 2);
    CHECK(id.algebra.algebra_dim() == 4);
    CHECK(id.unital_residual < 1e-14);
    CHECK_THROWS_AS(ucp_from_kraus({2.0 * Mat::Identity(2, 2)}), ValidationError);
    // the pinching preserves the diagonal algebra; Hadamard conjugation sends Z to X
    std::vector<Mat> diag = {Mat::Identity(2, 2), pauli_z()};
    CHECK_NOTHROW(ucp_from_kraus({unit(2, 0, 0), unit(2, 1, 1)}, diag));
    CHECK_THROWS_AS(ucp_from_kraus({(pauli_x() + pauli_z()) / std::sqrt(2.0)}, diag), ValidationError);
}

TEST_CASE("identity channel: the Stinespring space is H itself") {
    UcpMap id = ucp_from_kraus({Mat::Identity(2, 2)});
    DilationStage st = stinespring_step(id.algebra, [](const Mat& x) { return x; });
    CHECK(st.dim_h == 2);
    CHECK((st.v.adjoint() * st.v - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK((st.v * st.v.adjoint() - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK(st.residuals.relation_a < 1e-12);
    CHECK(st.residuals.relation_c < 1e-12);
    Rng rng(51);
    Mat x = random_gaussian(2, 2, rng);
    CHECK((st.v.adjoint() * st.pi(x) * st.v - x).norm() < 1e-12);
}

TEST_CASE("scalar algebra") {
    UcpMap c = ucp_from_kraus({Mat::Identity(1, 1)});
    Dilation d = bhat_dilate(c, 2);
    REQUIRE(d.stages.size() == 2);
    for (const auto& st : d.stages) CHECK(st.dim_h == 1);
}

TEST_CASE("trace expectation on M_2") {
    UcpMap tr = ucp_from_kraus(trace_kraus());
    DilationStage st = stinespring_step(tr.algebra, [&](const Mat& x) { return tr(x); });
    CHECK(st.dim_h == 8);
    CHECK(st.residuals.isometry < 1e-12);
    CHECK(st.residuals.relation_a < 1e-12);
    CHECK(st.residuals.relation_b < 1e-12);
    CHECK(st.residuals.relation_b_onto);
    CHECK(st.residuals.relation_c < 1e-12);
    CHECK(st.residuals.homomorphism < 1e-12);
    CHECK(st.residuals.central_support > 1e-6);
    REQUIRE(st.residuals.compression_closure);
    CHECK(*st.residuals.compression_closure < 1e-8);

    Dilation d = bhat_dilate(tr, 2);
    REQUIRE(d.stages.size() == 2);
    REQUIRE(d.bhat.size() == 2);
    for (double r : d.bhat) CHECK(r < 1e-10);
    CHECK(d.stages[0].residuals.relation_d < 1e-10);
    CHECK(d.stages[0].residuals.relation_d >= 0);
    CHECK(d.stages[0].residuals.monotonicity < 1e-10);

    // phi_0^2 through the two stages: V1^* pi1(V1^* pi1(x) V1) V1, with phi_1 = pi1(V1^* . V1)
    Rng rng(52);
    const DilationStage& s1 = d.stages[0];
    for (int i = 0; i < 3; ++i) {
        Mat x = random_gaussian(2, 2, rng);
        Mat direct = apply_kraus(trace_kraus(), apply_kraus(trace_kraus(), x));
        Mat via = s1.v.adjoint() * d.phi(1, s1.pi(x)) * s1.v;
        CHECK((direct - via).norm() < 1e-10);
        CHECK((direct - 0.5 * x.trace() * Mat::Identity(2, 2)).norm() < 1e-12);
    }

    HarStability h = har_stability_check(d);
    CHECK(h.fix_dims == std::vector<Index>{1, 1, 1});
    CHECK(h.stable);
}

TEST_CASE("pinching channel keeps a two-dimensional fixed space") {
    UcpMap e2 = ucp_from_kraus({unit(2, 0, 0), unit(2, 1, 1)});
    auto t0 = std::chrono::steady_clock::now();
    Dilation d = bhat_dilate(e2, 3);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 60);
    REQUIRE(d.stages.size() == 3);
    CHECK_FALSE(d.truncated);
    for (const auto& st : d.stages) {
        CHECK(st.residuals.relation_a < 1e-10);
        CHECK(st.residuals.relation_b < 1e-10);
        CHECK(st.residuals.relation_c < 1e-10);
    }
    CHECK(d.stages[2].residuals.relation_d == -1);
    for (double r : d.bhat) CHECK(r < 1e-10);
    HarStability h = har_stability_check(d);
    CHECK(h.fix_dims == std::vector<Index>{2, 2, 2, 2});
    CHECK(h.stable);
    CHECK(h.compression < 1e-8);
    CHECK(h.isometry < 1e-8);
}

TEST_CASE("non-CP input is rejected by the Gram matrix") {
    UcpMap id = ucp_from_kraus({Mat::Identity(2, 2)});
    LinearMap transpose = [](const Mat& x) { return Mat(x.transpose()); };
    CHECK_THROWS_AS(stinespring_step(id.algebra, transpose), NumericalError);
}

TEST_CASE("dim_cap truncates with a partial result") {
    UcpMap tr = ucp_from_kraus(trace_kraus());
    Dilation d = bhat_dilate(tr, 3, 20);
    CHECK(d.truncated);
    CHECK(d.stages.size() < 3);
    CHECK_FALSE(d.truncation_reason.empty());
    CHECK_THROWS_AS(bhat_dilate(tr, 0), ValidationError);
}
