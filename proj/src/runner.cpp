#include "ncpb/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#ifndef NCPB_VERSION
#define NCPB_VERSION "dev"
#endif

namespace ncpb {

namespace {

namespace fs = std::filesystem;

Check le(std::string name, double value, double threshold, std::string detail = "") {
    bool ok = std::isfinite(value) && value <= threshold;
    return {std::move(name), ok ? Status::Pass : Status::Fail, value, threshold, std::move(detail)};
}

Check ge(std::string name, double value, double threshold, std::string detail = "") {
    bool ok = std::isfinite(value) && value >= threshold;
    return {std::move(name), ok ? Status::Pass : Status::Fail, value, threshold, std::move(detail)};
}

Check truth(std::string name, bool ok, std::string detail = "") {
    return {std::move(name), ok ? Status::Pass : Status::Fail, ok ? 1.0 : 0.0, 1.0, std::move(detail)};
}

Check info(std::string name, std::string detail) { return {std::move(name), Status::Info, 0, 0, std::move(detail)}; }

Json dims_json(const std::vector<Index>& v) {
    Json a = Json::array();
    for (Index x : v) a.push_back(x);
    return a;
}

std::string dims_text(const std::vector<Index>& v) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << "]";
    return os.str();
}

Json matrix_json(const Mat& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(row);
    }
    return rows;
}

struct Context {
    const Scenario& s;
    Materialized m;
    Tolerances tol;
    Parameters params;
    bool perturbed = false;

    Rng rng(std::uint64_t salt) const { return Rng(params.seed * 1000003ULL + salt); }
    const Hyperstate& phi() const { return *m.phi; }
    Classification cls() const { return classify(*m.phi); }
};

Mat random_operator(Index d, Rng& rng) {
    Mat t = random_gaussian(d, d, rng);
    return t / t.norm();
}

bool regular_strongly_generating(const Classification& c) { return c.regular && c.strongly_generating; }

// --- verbs -----------------------------------------------------------------

void do_classify(Context& c, AnalysisResult& r) {
    const Hyperstate& phi = c.phi();
    const GnsSpace& g = phi.gns();
    const double tol = c.tol.residual;
    Classification cl = c.cls();
    r.data["regular"] = cl.regular;
    r.data["generating"] = cl.generating;
    r.data["strongly_generating"] = cl.strongly_generating;
    r.data["symmetric"] = cl.symmetric;
    r.data["regular_residual"] = cl.regular_residual;
    r.data["generated_dim"] = cl.generated_dim;
    r.data["strongly_generated_dim"] = cl.strongly_generated_dim;
    r.data["algebra_dim"] = g.dim();

    r.checks.push_back(le("hyperstate.extension", phi.extension_residual(), tol));
    r.checks.push_back(le("hyperstate.trace", phi.trace_residual(), tol));
    r.checks.push_back(ge("hyperstate.positive", phi.min_eigenvalue(), -tol));

    Superoperator p = poisson_superop(phi);
    Rng rng = c.rng(11);
    double corr = 0;
    for (int i = 0; i < c.params.random_probes; ++i) {
        Mat t = random_operator(g.dim(), rng);
        cd lhs = phi(t), rhs = g.one_hat().dot(p.apply(t) * g.one_hat());
        corr = std::max(corr, std::abs(lhs - rhs));
    }
    r.checks.push_back(le("poisson.correspondence", corr, tol));
    r.checks.push_back(le("poisson.bimodularity", p.bimodularity_residual(), tol));
    r.checks.push_back(le("poisson.unital", p.unital_residual(), tol));

    const StandardForm& sf = phi.standard_form();
    Mat recon = Mat::Zero(g.dim(), g.dim()), part = Mat::Zero(g.algebra().size(), g.algebra().size());
    for (const Mat& z : sf.z) {
        Vec v = g.hat(z.adjoint());
        recon += v * v.adjoint();
        part += z.adjoint() * z;
    }
    r.checks.push_back(le("standard_form.reconstruction", (phi.density() - recon).norm(), tol));
    r.checks.push_back(le("standard_form.partition", (part - g.algebra().identity()).norm(), tol));

    // Regularity read off the commutant: phi restricted to R(M) is tau.
    double commutant_res = 0;
    for (const Mat& b : g.basis()) commutant_res = std::max(commutant_res, std::abs(phi(g.right(b)) - g.algebra().trace(b)));
    bool commutant_regular = commutant_res <= 1e-10;
    r.data["commutant_trace_residual"] = commutant_res;
    r.checks.push_back(truth("regularity.criteria_agree", commutant_regular == cl.regular,
                             std::string("Kraus criterion ") + (cl.regular ? "regular" : "not regular") + ", commutant criterion " +
                                 (commutant_regular ? "regular" : "not regular")));

    const std::map<std::string, bool> got = {{"regular", cl.regular},
                                             {"generating", cl.generating},
                                             {"strongly_generating", cl.strongly_generating},
                                             {"symmetric", cl.symmetric}};
    for (const auto& [k, v] : c.s.expect.classification)
        r.checks.push_back(truth("expect.classification." + k, got.at(k) == v, std::string("expected ") + (v ? "true" : "false")));
}

void do_harmonic(Context& c, AnalysisResult& r) {
    const Hyperstate& phi = c.phi();
    const GnsSpace& g = phi.gns();
    Classification cl = c.cls();
    Superoperator p = poisson_superop(phi);
    HarmonicSpace h = fixed_space(p);
    r.data["harmonic_dim"] = h.dim();
    r.data["algebra_dim"] = g.dim();
    r.data["spectral_gap"] = h.spectral_gap;
    r.data["contains_m"] = h.contains_m;

    double lm = 0;
    for (const Mat& b : g.basis()) lm = std::max(lm, h.distance(g.left(b)));
    r.checks.push_back(le("harmonic.contains_left_m", lm, c.tol.subspace));

    Superoperator e = cesaro_expectation(p);
    Mat ee = e.matrix * e.matrix - e.matrix;
    r.checks.push_back(le("harmonic.expectation_idempotent", ee.norm(), c.tol.subspace));
    r.checks.push_back(le("harmonic.expectation_invariant", (p.matrix * e.matrix - e.matrix).norm(), c.tol.subspace));

    if (regular_strongly_generating(cl)) {
        r.checks.push_back(truth("harmonic.fix_equals_m", h.dim() == g.dim(),
                                 "dim Fix = " + std::to_string(h.dim()) + ", dim M = " + std::to_string(g.dim())));
        if (g.algebra().is_abelian() && cl.symmetric)
            r.checks.push_back(truth("harmonic.choquet_deny", h.dim() == g.dim(), "abelian M with a symmetric strongly generating family"));
    }
    if (c.s.expect.harmonic_dim)
        r.checks.push_back(truth("expect.harmonic_dim", h.dim() == *c.s.expect.harmonic_dim,
                                 "expected " + std::to_string(*c.s.expect.harmonic_dim) + ", got " + std::to_string(h.dim())));
}

void do_boundary(Context& c, AnalysisResult& r) {
    const Hyperstate& phi = c.phi();
    Classification cl = c.cls();
    BoundaryAlgebra b = boundary_build(phi);
    const auto& res = b.residuals;
    r.data["harmonic_dim"] = b.dim();
    r.data["boundary_blocks"] = dims_json(b.blocks);
    r.data["center_dim"] = b.center_dim;
    r.data["stationary_state_faithful"] = b.zeta_faithful;
    r.data["residuals"] = {{"idempotent", res.idempotent},       {"unital", res.unital},     {"choi_min", res.choi_min},
                           {"range", res.range},                 {"associativity", res.associativity},
                           {"involution", res.involution},       {"positivity", res.positivity},
                           {"stationarity", res.stationarity}};
    const double t = c.tol.structure;
    r.checks.push_back(le("boundary.associativity", res.associativity, t));
    r.checks.push_back(le("boundary.involution", res.involution, t));
    r.checks.push_back(le("boundary.positivity", res.positivity, t));
    r.checks.push_back(le("boundary.idempotent", res.idempotent, t));
    r.checks.push_back(le("boundary.unital", res.unital, t));
    r.checks.push_back(ge("boundary.completely_positive", res.choi_min, -t));
    r.checks.push_back(le("boundary.stationarity", res.stationarity, t));
    Index sum = 0;
    for (Index m : b.blocks) sum += m * m;
    r.checks.push_back(truth("boundary.block_dimensions", sum == b.dim(),
                             "sum m_j^2 = " + std::to_string(sum) + ", dim = " + std::to_string(b.dim())));
    if (cl.regular && cl.generating) {
        RelativeCommutant rc = relative_commutant(b);
        r.data["relative_commutant_dim"] = rc.dim;
        r.checks.push_back(le("boundary.relative_commutant_is_center", rc.center_angle, c.tol.subspace));
    }
    if (c.s.expect.boundary_blocks)
        r.checks.push_back(truth("expect.boundary_blocks", b.blocks == *c.s.expect.boundary_blocks,
                                 "expected " + dims_text(*c.s.expect.boundary_blocks) + ", got " + dims_text(b.blocks)));
}

void do_double_ergodicity(Context& c, AnalysisResult& r) {
    Classification cl = c.cls();
    bool eligible = regular_strongly_generating(cl);
    DoubleErgodicity d = eligible ? double_ergodicity(c.phi()) : double_ergodicity_unchecked(c.phi());
    r.data["eligible"] = eligible;
    r.data["intersection_dim"] = d.intersection_dim;
    r.data["center_dim"] = d.center_dim;
    r.data["angle"] = d.angle;
    r.data["containment"] = d.containment;
    if (eligible) {
        r.checks.push_back(le("double_ergodicity.angle", d.angle, c.tol.subspace));
        r.checks.push_back(le("double_ergodicity.center_contained", d.containment, c.tol.subspace));
    } else {
        r.checks.push_back(info("double_ergodicity", "hyperstate is not regular strongly generating; reported without assertion"));
    }
}

void do_mv(Context& c, AnalysisResult& r) {
    const Hyperstate& phi = c.phi();
    const GnsSpace& g = phi.gns();
    Classification cl = c.cls();
    if (!g.algebra().is_factor() || !regular_strongly_generating(cl) || !phi.from_unitary_family()) {
        r.checks.push_back(info("mv", "needs a factor and a regular strongly generating unitary family"));
        return;
    }
    Rng rng = c.rng(23);
    double worst = 0, worst_center = 0;
    Mat first;
    cd lambda = 0;
    for (int i = 0; i < c.params.random_probes; ++i) {
        Mat t = random_operator(g.dim(), rng);
        MvResult mv = mv_project(phi, t);
        worst = std::max(worst, mv.scalar_residual);
        worst_center = std::max(worst_center, mv.center_distance);
        if (i == 0) {
            first = t;
            lambda = *mv.lambda;
        }
    }
    r.checks.push_back(le("mv.scalar_residual", worst, c.tol.subspace));
    r.checks.push_back(le("mv.center_distance", worst_center, c.tol.subspace));

    Rng mc = c.rng(29);
    HullEstimate hull = mv_hull_oracle(phi, first, c.params.mc_samples, c.params.word_length, mc);
    double diff = std::abs(hull.lambda - lambda);
    r.data["lambda"] = {lambda.real(), lambda.imag()};
    r.data["hull_lambda"] = {hull.lambda.real(), hull.lambda.imag()};
    r.data["hull_scalar_distance"] = hull.scalar_distance;
    r.data["samples"] = hull.samples;
    r.data["word_length"] = hull.word_length;
    r.checks.push_back(le("mv.hull_oracle", diff, c.tol.monte_carlo));

    InnerDerivation der = derivation_inner_part(phi, first);
    r.data["derivation_c_norm"] = der.c_norm;
    r.checks.push_back(le("mv.derivation_commutator", der.commutator_residual, c.tol.subspace));
    if (der.bound_applicable) r.checks.push_back(truth("mv.derivation_bound", der.bound_holds));
}

void do_foguel(Context& c, AnalysisResult& r) {
    const GnsSpace& g = c.phi().gns();
    FoguelReport f = foguel_test(c.phi(), g.basis(), c.params.foguel_n_max);
    r.data["harmonic_dim"] = f.harmonic_dim;
    r.data["algebra_dim"] = f.algebra_dim;
    r.data["final_max"] = f.final_max;
    r.data["decays"] = f.decays;
    r.data["fix_equals_m"] = f.fix_equals_m;
    r.data["verdict"] = to_string(f.verdict);
    Check ck{"foguel.verdict", Status::Pass, f.final_max, 1e-6, "verdict " + to_string(f.verdict)};
    if (f.verdict == FoguelVerdict::Disagree) ck.status = Status::Fail;
    if (f.verdict == FoguelVerdict::Inconclusive) ck.status = Status::Inconclusive;
    r.checks.push_back(ck);
    if (c.s.expect.foguel_decays)
        r.checks.push_back(truth("expect.foguel_decays", f.decays == *c.s.expect.foguel_decays));
}

void do_tensor(Context& c, AnalysisResult& r) {
    if (!c.m.partner || c.m.partner_same_algebra) {
        r.checks.push_back(info("tensor", "needs a partner hyperstate on its own algebra"));
        return;
    }
    if (!regular_strongly_generating(c.cls()) || !regular_strongly_generating(classify(*c.m.partner))) {
        r.checks.push_back(info("tensor", "both hyperstates must be regular strongly generating"));
        return;
    }
    TensorSplit t = tensor_split_check(c.phi(), *c.m.partner);
    r.data["dim1"] = t.dim1;
    r.data["dim2"] = t.dim2;
    r.data["dim_product"] = t.dim_product;
    r.data["angle"] = t.angle;
    r.checks.push_back(truth("tensor.dimension_splits", t.dim_product == t.dim1 * t.dim2,
                             std::to_string(t.dim_product) + " vs " + std::to_string(t.dim1) + " x " + std::to_string(t.dim2)));
    r.checks.push_back(le("tensor.span_angle", t.angle, c.tol.subspace));
}

bool stationary_ok(Context& c, AnalysisResult& r) {
    if (c.m.stationary && !c.m.stationary->faithful) {
        Check ck = truth("inclusion.stationary_faithful", false, "no faithful stationary state; solution attached");
        r.data["stationary_solution"] = matrix_json(c.m.stationary->rho);
        r.checks.push_back(ck);
        return false;
    }
    if (!c.m.inclusion) {
        r.checks.push_back(info("inclusion", "scenario has no inclusion"));
        return false;
    }
    if (c.m.stationary) {
        r.data["stationary_residual"] = c.m.stationary->residual;
        r.data["stationary_free_dim"] = c.m.stationary->free_dim;
    }
    return true;
}

void do_entropy(Context& c, AnalysisResult& r) {
    const Hyperstate& phi = c.phi();
    Classification cl = c.cls();
    VnEntropy v = vn_entropy(phi);
    r.data["H"] = v.value;
    r.data["rank"] = v.rank;
    r.checks.push_back(le("entropy.weight_formula", std::abs(v.value - v.weight_formula), c.tol.residual));
    r.checks.push_back(ge("entropy.H_nonnegative", v.value, 0.0));
    if (c.s.expect.vn_entropy)
        r.checks.push_back(le("expect.vn_entropy", std::abs(v.value - *c.s.expect.vn_entropy), c.tol.residual));

    Json rows = Json::array();
    if (cl.regular) {
        EntropySequence seq = entropy_sequence(phi, c.params.entropy_n_max);
        r.checks.push_back(le("entropy.subadditivity", seq.subadditivity_violation, 1e-9));
        r.data["h_estimate"] = seq.h_estimate;
        for (std::size_t n = 0; n < seq.h.size(); ++n)
            rows.push_back({{"n", n + 1}, {"H_n", seq.h[n]}, {"H_n/n", seq.h[n] / double(n + 1)}, {"h_est", seq.h_estimate}});
    }

    if ((c.m.inclusion || c.m.stationary) && stationary_ok(c, r)) {
        const InclusionState& s = *c.m.inclusion;
        FurstenbergEntropy f = furstenberg_entropy(phi, s);
        r.data["h_furstenberg"] = f.value;
        r.checks.push_back(ge("entropy.h_nonnegative", f.value, -c.tol.entropy));
        r.checks.push_back(le("entropy.h_below_H", f.value - v.value, c.tol.entropy));
        BoundsReport b = entropy_bounds_check(phi, s, std::max(c.params.entropy_n_max, 6));
        r.data["stationary"] = b.stationary;
        if (b.stationary) r.data["fekete"] = b.fekete;
        r.checks.push_back(truth("entropy.bounds", b.holds));
        for (auto& row : rows) row["h_furst"] = f.value;
        if (c.m.partner && c.m.partner_same_algebra && classify(*c.m.partner).regular &&
            stationarity_residual(*c.m.partner, s) <= 1e-9) {
            AdditivityReport a = entropy_additivity_check(phi, *c.m.partner, s, c.params.entropy_n_max);
            r.data["additivity"] = {{"h_phi", a.h_phi}, {"h_psi", a.h_psi}, {"h_conv", a.h_conv}, {"residual", a.residual},
                                    {"power_residual", a.power_residual}};
            r.checks.push_back(le("entropy.additivity", a.residual, c.tol.additivity));
            r.checks.push_back(le("entropy.additivity_powers", a.power_residual, c.tol.additivity));
        }
    }

    if (regular_strongly_generating(cl)) {
        BoundaryAlgebra b = boundary_build(phi);
        if (b.zeta_faithful) {
            ZeroEntropy z = zero_entropy_check(phi, b);
            r.data["boundary_h"] = z.h;
            r.checks.push_back(le("entropy.zero_on_boundary", std::abs(z.h), c.tol.entropy));
            r.checks.push_back(truth("entropy.zero_iff_trivial", z.agree,
                                     std::string("h zero: ") + (z.h_zero ? "yes" : "no") + ", Fix = M: " + (z.fix_equals_m ? "yes" : "no")));
        }
    }
    r.data["table"] = rows;
}

void do_furstenberg(Context& c, AnalysisResult& r) {
    if (!stationary_ok(c, r)) return;
    const InclusionState& s = *c.m.inclusion;
    ModularData md = modular_data(s);
    const double t = c.tol.structure;
    r.checks.push_back(le("modular.unit", md.unit_residual, t));
    r.checks.push_back(le("modular.s_relation", md.s_residual, t));
    r.checks.push_back(le("modular.log", md.log_residual, t));
    r.checks.push_back(le("modular.flow_multiplicative", md.flow_multiplicative, t));
    r.checks.push_back(le("modular.flow_star", md.flow_star, t));
    r.checks.push_back(le("modular.flow_invariance", md.flow_invariance, t));
    FurstenbergEntropy f = furstenberg_entropy(c.phi(), s, md);
    r.data["h"] = f.value;
    r.data["spectral"] = f.spectral;
    r.data["finite_difference"] = f.finite_difference;
    r.data["truncations"] = f.truncations;
    r.data["route_gap"] = f.route_gap;
    r.data["condition"] = s.condition;
    r.checks.push_back(le("furstenberg.route_gap", f.route_gap, c.tol.entropy));
    r.checks.push_back(le("furstenberg.imaginary_part", f.imaginary_part, c.tol.entropy));
    // The finite difference carries O(step^2) truncation error.
    r.checks.push_back(le("furstenberg.finite_difference", std::abs(f.finite_difference - f.value), 1e-5));
}

void do_gap(Context& c, AnalysisResult& r) {
    if (!stationary_ok(c, r)) return;
    const Hyperstate& phi = c.phi();
    if (!c.cls().regular) {
        r.checks.push_back(info("gap", "family is not bi-normalized (hyperstate not regular)"));
        return;
    }
    const StandardForm& sf = phi.standard_form();
    GapBound gb = entropy_gap_bound(sf.z, *c.m.inclusion);
    r.data["h"] = gb.h;
    r.data["t_value"] = gb.t_value;
    r.data["bound"] = gb.bound;
    r.data["tracial"] = (c.m.inclusion->rho - trace_like_density(c.m.inclusion->inc)).norm() <= 1e-10;
    r.checks.push_back(ge("gap.bound", gb.h - gb.bound, -c.tol.entropy));
    r.checks.push_back(le("gap.t_at_most_one", gb.t_value, 1 + c.tol.residual));
    r.checks.push_back(ge("gap.t_nonnegative", gb.t_value, 0.0));
}

void do_dilate(Context& c, AnalysisResult& r) {
    if (!c.m.channel) {
        r.checks.push_back(info("dilate", "scenario has no channel"));
        return;
    }
    Dilation d = bhat_dilate(*c.m.channel, c.params.depth, c.params.dim_cap);
    HarStability h = har_stability_check(d);
    const double t = c.tol.residual;
    Json stages = Json::array();
    std::vector<Index> dims = {c.m.channel->dim()};
    for (std::size_t n = 0; n < d.stages.size(); ++n) {
        const DilationStage& st = d.stages[n];
        const auto& res = st.residuals;
        dims.push_back(st.dim_h);
        Json js = {{"stage", n + 1},
                   {"dim_h", st.dim_h},
                   {"algebra_blocks", dims_json(st.algebra.block_sizes())},
                   {"algebra_dim", st.algebra.algebra_dim()},
                   {"ranks", dims_json(st.ranks)},
                   {"gram_min", res.gram_min},
                   {"isometry", res.isometry},
                   {"relation_a", res.relation_a},
                   {"relation_b", res.relation_b},
                   {"relation_b_onto", res.relation_b_onto},
                   {"relation_c", res.relation_c},
                   {"relation_d", res.relation_d},
                   {"monotonicity", res.monotonicity},
                   {"central_support", res.central_support},
                   {"homomorphism", res.homomorphism},
                   {"closure", res.closure}};
        if (res.compression_closure) js["compression_closure"] = *res.compression_closure;
        stages.push_back(js);
        std::string p = "dilation.stage" + std::to_string(n + 1) + ".";
        r.checks.push_back(ge(p + "gram_psd", res.gram_min, -1e-9));
        r.checks.push_back(le(p + "isometry", res.isometry, t));
        r.checks.push_back(le(p + "relation_a", res.relation_a, t));
        r.checks.push_back(le(p + "relation_b", res.relation_b, t));
        r.checks.push_back(truth(p + "relation_b_onto", res.relation_b_onto));
        r.checks.push_back(le(p + "relation_c", res.relation_c, t));
        if (res.relation_d >= 0) r.checks.push_back(le(p + "relation_d", res.relation_d, t));
        if (res.monotonicity >= 0) r.checks.push_back(le(p + "monotonicity", res.monotonicity, t));
        r.checks.push_back(ge(p + "central_support", res.central_support, 1e-8));
        r.checks.push_back(le(p + "homomorphism", res.homomorphism, t));
        r.checks.push_back(le(p + "generators_in_algebra", res.closure, c.tol.structure));
        if (res.compression_closure) r.checks.push_back(le(p + "compression_closure", *res.compression_closure, c.tol.subspace));
    }
    for (std::size_t k = 0; k < d.bhat.size(); ++k)
        r.checks.push_back(le("dilation.bhat_k" + std::to_string(k + 1), d.bhat[k], t));
    r.data["dims"] = dims_json(dims);
    r.data["stages"] = stages;
    r.data["fix_dims"] = dims_json(h.fix_dims);
    r.data["truncated"] = d.truncated;
    if (d.truncated) {
        r.data["truncation_reason"] = d.truncation_reason;
        r.checks.push_back({"dilation.depth_reached", Status::Inconclusive, double(d.stages.size()), double(d.requested_depth),
                            d.truncation_reason});
    }
    r.checks.push_back(truth("dilation.fix_dim_constant", h.stable, "fix dims " + dims_text(h.fix_dims)));
    r.checks.push_back(le("dilation.fix_pi_invariant", h.pi_fixed, c.tol.subspace));
    r.checks.push_back(le("dilation.fix_compression", h.compression, c.tol.subspace));
    r.checks.push_back(le("dilation.fix_isometric", h.isometry, c.tol.subspace));
    // expectations cover stages 0..depth of the fixture; a --depth override compares the common prefix
    auto prefix_check = [&](const std::string& name, const std::vector<Index>& want, const std::vector<Index>& got) {
        const std::size_t n = std::min(want.size(), got.size());
        bool ok = std::equal(got.begin(), got.begin() + std::ptrdiff_t(n), want.begin());
        std::string detail = "expected " + dims_text(want) + ", got " + dims_text(got);
        if (want.size() != got.size()) detail += " (compared the first " + std::to_string(n) + ")";
        r.checks.push_back(truth(name, ok, detail));
    };
    if (c.s.expect.dilation_dims) prefix_check("expect.dilation_dims", *c.s.expect.dilation_dims, dims);
    if (c.s.expect.fix_dims) prefix_check("expect.fix_dims", *c.s.expect.fix_dims, h.fix_dims);
}

using VerbFn = void (*)(Context&, AnalysisResult&);

const std::map<std::string, VerbFn>& verb_table() {
    static const std::map<std::string, VerbFn> t = {
        {"classify", do_classify}, {"harmonic", do_harmonic}, {"boundary", do_boundary},
        {"double-ergodicity", do_double_ergodicity},           {"mv", do_mv},
        {"foguel", do_foguel},     {"tensor", do_tensor},     {"entropy", do_entropy},
        {"furstenberg", do_furstenberg},                       {"gap", do_gap},
        {"dilate", do_dilate}};
    return t;
}

bool needs_hyperstate(const std::string& verb) { return verb != "dilate"; }

// Verbs verify-all runs when the scenario does not list its analyses.
std::vector<std::string> applicable(const Context& c) {
    std::vector<std::string> out;
    if (c.m.phi) {
        out = {"classify", "harmonic", "boundary", "double-ergodicity", "foguel", "entropy"};
        const GnsSpace& g = c.phi().gns();
        if (g.algebra().is_factor() && c.phi().from_unitary_family()) out.push_back("mv");
        if (c.m.partner && !c.m.partner_same_algebra) out.push_back("tensor");
        if (c.m.inclusion || c.m.stationary) {
            out.push_back("furstenberg");
            out.push_back("gap");
        }
    }
    if (c.m.channel) out.push_back("dilate");
    return out;
}

void perturb(Context& c, double eps) {
    Rng rng = c.rng(7919);
    if (c.m.phi) {
        const Hyperstate& phi = *c.m.phi;
        Mat h = random_hermitian(phi.gns().dim(), rng);
        c.m.phi = Hyperstate::from_density_unchecked(phi.gns_ptr(), phi.density() + eps * h / h.norm());
    }
    if (c.m.channel) {
        Mat& k = c.m.channel->kraus[0];
        Mat g = random_gaussian(k.rows(), k.cols(), rng);
        k += eps * g / g.norm();
    }
    c.perturbed = true;
}

AnalysisResult run_verb(const std::string& verb, Context& c) {
    AnalysisResult r;
    r.verb = verb;
    if (needs_hyperstate(verb) && !c.m.phi) {
        r.checks.push_back(info(verb, "scenario has no hyperstate"));
        return r;
    }
    try {
        verb_table().at(verb)(c, r);
    } catch (const PreconditionError& e) {
        r.checks.push_back({verb + ".precondition", Status::Fail, 0, 0, e.what()});
    } catch (const ValidationError& e) {
        r.checks.push_back({verb + ".validation", Status::Fail, 0, 0, e.what()});
    } catch (const NumericalError& e) {
        r.checks.push_back({verb + ".numerical", Status::Fail, 0, 0, e.what()});
    }
    return r;
}

Json check_json(const Check& ck) {
    Json j = {{"name", ck.name}, {"status", to_string(ck.status)}};
    if (ck.status != Status::Info) {
        j["value"] = std::isfinite(ck.value) ? Json(ck.value) : Json(std::to_string(ck.value));
        j["threshold"] = ck.threshold;
    }
    if (!ck.detail.empty()) j["detail"] = ck.detail;
    return j;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::string to_string(Status s) {
    switch (s) {
        case Status::Pass: return "pass";
        case Status::Fail: return "fail";
        case Status::Inconclusive: return "inconclusive";
        case Status::Info: return "info";
    }
    return "?";
}

Status Report::overall() const {
    if (input_error) return Status::Fail;
    bool inconclusive = false;
    for (const auto& a : analyses)
        for (const auto& ck : a.checks) {
            if (ck.status == Status::Fail) return Status::Fail;
            if (ck.status == Status::Inconclusive) inconclusive = true;
        }
    return inconclusive ? Status::Inconclusive : Status::Pass;
}

int Report::exit_code() const {
    if (input_error) return 3;
    switch (overall()) {
        case Status::Fail: return 1;
        case Status::Inconclusive: return 2;
        default: return 0;
    }
}

int exit_code(const std::vector<Report>& reports) {
    int code = 0;
    auto rank = [](int c) { return c == 3 ? 3 : c == 1 ? 2 : c == 2 ? 1 : 0; };
    for (const auto& r : reports)
        if (rank(r.exit_code()) > rank(code)) code = r.exit_code();
    return code;
}

Report run(const std::string& verb, const Scenario& s, const RunFlags& flags, const std::string& source) {
    auto start = std::chrono::steady_clock::now();
    Report rep;
    rep.source = source;
    rep.scenario_name = s.name;
    rep.scenario_hash = scenario_hash(s);
    rep.verb = verb;
    if (verb != "verify-all" && !verb_table().count(verb)) {
        rep.input_error = "unknown verb '" + verb + "'";
        return rep;
    }
    Context c{s, {}, s.tol, s.params};
    if (flags.tol) c.tol.residual = c.tol.subspace = *flags.tol;
    if (flags.depth) c.params.depth = *flags.depth;
    if (flags.seed) c.params.seed = *flags.seed;
    try {
        c.m = materialize(s);
    } catch (const std::exception& e) {
        rep.input_error = e.what();
        rep.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return rep;
    }
    if (flags.perturb > 0) perturb(c, flags.perturb);

    std::vector<std::string> verbs;
    if (verb == "verify-all") {
        verbs = s.analyses.empty() ? applicable(c) : s.analyses;
    } else {
        verbs = {verb};
    }
    for (const auto& v : verbs) rep.analyses.push_back(run_verb(v, c));
    rep.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

Report run_file(const std::string& verb, const std::string& path, const RunFlags& flags) {
    Scenario s;
    try {
        s = parse_scenario(path);
    } catch (const std::exception& e) {
        Report rep;
        rep.source = path;
        rep.verb = verb;
        rep.input_error = e.what();
        return rep;
    }
    return run(verb, s, flags, path);
}

std::vector<Report> verify_all(const std::string& path, const RunFlags& flags) {
    std::vector<std::string> files;
    std::error_code ec;
    if (fs::is_directory(path, ec)) {
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    std::vector<Report> out;
    if (files.empty()) {
        Report rep;
        rep.source = path;
        rep.verb = "verify-all";
        rep.input_error = "no scenario files found";
        out.push_back(rep);
    }
    for (const auto& f : files) out.push_back(run_file("verify-all", f, flags));
    return out;
}

Json report_json(const Report& r) {
    Json j = {{"schema", "ncpb-report/1"},
              {"version", NCPB_VERSION},
              {"source", r.source},
              {"scenario", r.scenario_name},
              {"scenario_hash", r.scenario_hash},
              {"verb", r.verb},
              {"wall_clock_s", r.wall_clock},
              {"verdict", r.input_error ? "input-error" : to_string(r.overall())},
              {"exit_code", r.exit_code()}};
    if (r.input_error) j["input_error"] = *r.input_error;
    Json an = Json::array();
    for (const auto& a : r.analyses) {
        Json checks = Json::array();
        for (const auto& ck : a.checks) checks.push_back(check_json(ck));
        an.push_back({{"verb", a.verb}, {"results", a.data}, {"checks", checks}});
    }
    j["analyses"] = an;
    return j;
}

Json reports_json(const std::vector<Report>& rs) {
    if (rs.size() == 1) return report_json(rs[0]);
    Json all = Json::array();
    int pass = 0, fail = 0, inconclusive = 0, input = 0;
    for (const auto& r : rs) {
        all.push_back(report_json(r));
        switch (r.exit_code()) {
            case 0: ++pass; break;
            case 1: ++fail; break;
            case 2: ++inconclusive; break;
            default: ++input; break;
        }
    }
    return {{"schema", "ncpb-report/1"},
            {"version", NCPB_VERSION},
            {"summary", {{"pass", pass}, {"fail", fail}, {"inconclusive", inconclusive}, {"input_error", input}}},
            {"exit_code", exit_code(rs)},
            {"reports", all}};
}

std::string reports_csv(const std::vector<Report>& rs) {
    std::ostringstream os;
    // The entropy verb emits its sequence table, everything else the check list.
    bool entropy_only = !rs.empty() && std::all_of(rs.begin(), rs.end(), [](const Report& r) { return r.verb == "entropy"; });
    if (entropy_only) {
        os << "scenario,n,H_n,H_n/n,h_est,h_furst,gap_bound,residuals\n";
        for (const auto& r : rs)
            for (const auto& a : r.analyses) {
                double worst = 0;
                for (const auto& ck : a.checks)
                    if (ck.status != Status::Info && ck.name.rfind("expect.", 0) != 0 && ck.threshold < 1e-6)
                        worst = std::max(worst, std::abs(ck.value));
                const Json& tab = a.data.contains("table") ? a.data["table"] : Json::array();
                for (const auto& row : tab) {
                    os << csv_field(r.scenario_name) << "," << row["n"].get<int>() << "," << num(row["H_n"].get<double>()) << ","
                       << num(row["H_n/n"].get<double>()) << "," << num(row["h_est"].get<double>()) << ","
                       << (row.contains("h_furst") ? num(row["h_furst"].get<double>()) : "") << ",," << num(worst) << "\n";
                }
            }
        return os.str();
    }
    os << "source,scenario,verb,analysis,check,status,value,threshold,detail\n";
    for (const auto& r : rs) {
        if (r.input_error)
            os << csv_field(r.source) << "," << csv_field(r.scenario_name) << "," << r.verb << ",,input,input-error,,,"
               << csv_field(*r.input_error) << "\n";
        for (const auto& a : r.analyses)
            for (const auto& ck : a.checks)
                os << csv_field(r.source) << "," << csv_field(r.scenario_name) << "," << r.verb << "," << a.verb << ","
                   << csv_field(ck.name) << "," << to_string(ck.status) << "," << num(ck.value) << "," << num(ck.threshold) << ","
                   << csv_field(ck.detail) << "\n";
    }
    return os.str();
}

std::string reports_text(const std::vector<Report>& rs) {
    std::ostringstream os;
    for (const auto& r : rs) {
        os << "== " << (r.scenario_name.empty() ? r.source : r.scenario_name) << " [" << r.verb << "] ";
        if (r.input_error) {
            os << "INPUT ERROR: " << *r.input_error << "\n";
            continue;
        }
        os << to_string(r.overall()) << " (" << num(r.wall_clock) << " s)\n";
        for (const auto& a : r.analyses) {
            os << "  " << a.verb << "\n";
            for (const auto& ck : a.checks) {
                os << "    [" << to_string(ck.status) << "] " << ck.name;
                if (ck.status != Status::Info) os << " = " << num(ck.value) << " (threshold " << num(ck.threshold) << ")";
                if (!ck.detail.empty()) os << " : " << ck.detail;
                os << "\n";
            }
        }
    }
    if (rs.size() > 1) os << "exit code " << exit_code(rs) << "\n";
    return os.str();
}

void write_atomically(const std::string& path, const std::string& content) {
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError(path + ": cannot write report");
        out << content;
        if (!out) throw ValidationError(path + ": write failed");
    }
    fs::rename(tmp, target);
}

}  // namespace ncpb
