#include "ncpb/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ncpb {

namespace {

const std::set<std::string> kVerbs = {"classify", "harmonic", "boundary", "double-ergodicity", "mv", "foguel",
                                      "tensor",   "entropy",  "furstenberg", "gap",            "dilate"};

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ValidationError(path + ": " + msg); }

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void check_keys(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) fail(at(path, it.key()), "unknown key");
}

double get_number(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
}

long long get_integer(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<long long>();
}

bool get_bool(const Json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected true or false");
    return j.get<bool>();
}

std::string get_string(const Json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

const Json& array_at(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    return j;
}

std::vector<Index> get_positive_list(const Json& j, const std::string& path) {
    std::vector<Index> out;
    const Json& a = array_at(j, path);
    if (a.empty()) fail(path, "must not be empty");
    for (std::size_t i = 0; i < a.size(); ++i) {
        long long v = get_integer(a[i], at(path, i));
        if (v <= 0) fail(at(path, i), "must be a positive integer");
        out.push_back(Index(v));
    }
    return out;
}

std::vector<double> get_number_list(const Json& j, const std::string& path) {
    std::vector<double> out;
    const Json& a = array_at(j, path);
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(get_number(a[i], at(path, i)));
    return out;
}

Mat get_matrix(const Json& j, const std::string& path) {
    const Json& rows = array_at(j, path);
    if (rows.empty()) fail(path, "matrix must have at least one row");
    Index n = -1;
    Mat out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Json& row = array_at(rows[r], at(path, r));
        if (n < 0) {
            n = Index(row.size());
            if (n == 0) fail(at(path, r), "matrix rows must not be empty");
            out.resize(Index(rows.size()), n);
        } else if (Index(row.size()) != n) {
            fail(at(path, r), "ragged matrix row");
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::string p = at(at(path, r), c);
            const Json& e = row[c];
            if (!e.is_array() || e.size() != 2) fail(p, "entries must be [re, im] pairs");
            out(Index(r), Index(c)) = cd(get_number(e[0], p + "[0]"), get_number(e[1], p + "[1]"));
        }
    }
    return out;
}

std::vector<Mat> get_matrix_list(const Json& j, const std::string& path) {
    std::vector<Mat> out;
    const Json& a = array_at(j, path);
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(get_matrix(a[i], at(path, i)));
    return out;
}

Json emit_matrix(const Mat& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(row);
    }
    return rows;
}

Json emit_matrix_list(const std::vector<Mat>& ms) {
    Json a = Json::array();
    for (const Mat& m : ms) a.push_back(emit_matrix(m));
    return a;
}

std::vector<std::vector<int>> named_group(const std::string& name, const std::string& path) {
    if (name == "S3") return symmetric_group3_table();
    if (name.size() >= 2 && name[0] == 'Z') {
        try {
            std::size_t used = 0;
            int n = std::stoi(name.substr(1), &used);
            if (used == name.size() - 1 && n >= 1 && n <= 64) return cyclic_group_table(n);
        } catch (const std::exception&) {
        }
    }
    fail(path, "unknown group '" + name + "' (expected Z<n> or S3)");
}

AlgebraSpec parse_algebra(const Json& j, const std::string& path) {
    check_keys(j, path, {"blocks", "weights", "group"});
    AlgebraSpec a;
    if (j.contains("group")) {
        if (j.contains("blocks") || j.contains("weights")) fail(path, "'group' excludes 'blocks' and 'weights'");
        const Json& g = j["group"];
        std::string gp = at(path, "group");
        if (g.is_string()) {
            a.group = named_group(g.get<std::string>(), gp);
        } else {
            std::vector<std::vector<int>> t;
            const Json& rows = array_at(g, gp);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                std::vector<int> row;
                const Json& jr = array_at(rows[r], at(gp, r));
                for (std::size_t c = 0; c < jr.size(); ++c) row.push_back(int(get_integer(jr[c], at(at(gp, r), c))));
                t.push_back(row);
            }
            a.group = t;
        }
        return a;
    }
    if (!j.contains("blocks")) fail(path, "needs 'blocks' or 'group'");
    a.blocks = get_positive_list(j["blocks"], at(path, "blocks"));
    if (j.contains("weights")) {
        std::vector<double> w = get_number_list(j["weights"], at(path, "weights"));
        if (w.size() != a.blocks.size()) fail(at(path, "weights"), "must have one entry per block");
        for (std::size_t i = 0; i < w.size(); ++i)
            if (w[i] <= 0) fail(at(at(path, "weights"), i), "must be positive");
        a.weights = w;
    }
    return a;
}

Json emit_algebra(const AlgebraSpec& a) {
    Json j = Json::object();
    if (a.group) {
        j["group"] = *a.group;
        return j;
    }
    j["blocks"] = a.blocks;
    if (a.weights) j["weights"] = *a.weights;
    return j;
}

HyperstateSpec parse_hyperstate(const Json& j, const std::string& path) {
    check_keys(j, path, {"kraus", "density", "group_walk"});
    HyperstateSpec h;
    int kinds = int(j.contains("kraus")) + int(j.contains("density")) + int(j.contains("group_walk"));
    if (kinds != 1) fail(path, "needs exactly one of 'kraus', 'density', 'group_walk'");
    if (j.contains("kraus")) {
        std::string kp = at(path, "kraus");
        const Json& a = array_at(j["kraus"], kp);
        if (a.empty()) fail(kp, "must not be empty");
        for (std::size_t i = 0; i < a.size(); ++i) {
            std::string ip = at(kp, i);
            check_keys(a[i], ip, {"matrix", "weight"});
            if (!a[i].contains("matrix")) fail(ip, "missing 'matrix'");
            Mat m = get_matrix(a[i]["matrix"], at(ip, "matrix"));
            double w = a[i].contains("weight") ? get_number(a[i]["weight"], at(ip, "weight")) : 1.0;
            if (w <= 0) fail(at(ip, "weight"), "must be positive");
            h.kraus.emplace_back(std::move(m), w);
        }
    } else if (j.contains("density")) {
        h.density = get_matrix(j["density"], at(path, "density"));
    } else {
        std::string gp = at(path, "group_walk");
        check_keys(j["group_walk"], gp, {"measure"});
        if (!j["group_walk"].contains("measure")) fail(gp, "missing 'measure'");
        std::vector<double> mu = get_number_list(j["group_walk"]["measure"], at(gp, "measure"));
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (mu[i] < 0) fail(at(at(gp, "measure"), i), "must be nonnegative");
        h.group_walk = mu;
    }
    return h;
}

Json emit_hyperstate(const HyperstateSpec& h) {
    Json j = Json::object();
    if (h.density) {
        j["density"] = emit_matrix(*h.density);
    } else if (h.group_walk) {
        j["group_walk"] = {{"measure", *h.group_walk}};
    } else {
        Json a = Json::array();
        for (const auto& [m, w] : h.kraus) a.push_back({{"matrix", emit_matrix(m)}, {"weight", w}});
        j["kraus"] = a;
    }
    return j;
}

InclusionSpec parse_inclusion(const Json& j, const std::string& path) {
    check_keys(j, path, {"blocks", "embedding", "rho", "stationary_for"});
    InclusionSpec inc;
    if (!j.contains("embedding")) fail(path, "missing 'embedding'");
    const Json& e = j["embedding"];
    std::string ep = at(path, "embedding");
    if (e.is_string()) {
        if (e.get<std::string>() != "left-regular") fail(ep, "expected \"left-regular\" or an object");
        if (j.contains("blocks")) fail(at(path, "blocks"), "not allowed with the left-regular embedding");
        inc.left_regular = true;
    } else {
        check_keys(e, ep, {"multiplicities", "unitaries"});
        if (!j.contains("blocks")) fail(path, "missing 'blocks'");
        inc.blocks = get_positive_list(j["blocks"], at(path, "blocks"));
        if (!e.contains("multiplicities")) fail(ep, "missing 'multiplicities'");
        std::string mp = at(ep, "multiplicities");
        const Json& rows = array_at(e["multiplicities"], mp);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::vector<Index> row;
            const Json& r = array_at(rows[i], at(mp, i));
            for (std::size_t k = 0; k < r.size(); ++k) {
                long long v = get_integer(r[k], at(at(mp, i), k));
                if (v < 0) fail(at(at(mp, i), k), "must be nonnegative");
                row.push_back(Index(v));
            }
            if (row.size() != inc.blocks.size()) fail(at(mp, i), "needs one entry per block of A");
            inc.multiplicities.push_back(row);
        }
        if (e.contains("unitaries")) {
            inc.unitaries = get_matrix_list(e["unitaries"], at(ep, "unitaries"));
            if (inc.unitaries.size() != inc.blocks.size()) fail(at(ep, "unitaries"), "needs one unitary per block of A");
        }
    }
    if (!j.contains("rho")) fail(path, "missing 'rho'");
    const Json& r = j["rho"];
    if (r.is_string()) {
        std::string s = r.get<std::string>();
        if (s == "solve-stationary") inc.rho_kind = InclusionSpec::Rho::SolveStationary;
        else if (s == "trace") inc.rho_kind = InclusionSpec::Rho::Trace;
        else fail(at(path, "rho"), "expected a matrix, \"solve-stationary\" or \"trace\"");
    } else {
        inc.rho_kind = InclusionSpec::Rho::Explicit;
        inc.rho = get_matrix(r, at(path, "rho"));
    }
    if (j.contains("stationary_for")) {
        std::string s = get_string(j["stationary_for"], at(path, "stationary_for"));
        if (s != "hyperstate" && s != "partner") fail(at(path, "stationary_for"), "expected \"hyperstate\" or \"partner\"");
        inc.stationary_for_partner = s == "partner";
    }
    return inc;
}

Json emit_inclusion(const InclusionSpec& inc) {
    Json j = Json::object();
    if (inc.left_regular) {
        j["embedding"] = "left-regular";
    } else {
        j["blocks"] = inc.blocks;
        Json e = Json::object();
        e["multiplicities"] = inc.multiplicities;
        if (!inc.unitaries.empty()) e["unitaries"] = emit_matrix_list(inc.unitaries);
        j["embedding"] = e;
    }
    switch (inc.rho_kind) {
        case InclusionSpec::Rho::Explicit: j["rho"] = emit_matrix(inc.rho); break;
        case InclusionSpec::Rho::SolveStationary: j["rho"] = "solve-stationary"; break;
        case InclusionSpec::Rho::Trace: j["rho"] = "trace"; break;
    }
    if (inc.stationary_for_partner) j["stationary_for"] = "partner";
    return j;
}

bool same(const Mat& a, const Mat& b) { return a.rows() == b.rows() && a.cols() == b.cols() && a == b; }

bool same(const std::vector<Mat>& a, const std::vector<Mat>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same(a[i], b[i])) return false;
    return true;
}

bool same(const AlgebraSpec& a, const AlgebraSpec& b) { return a.blocks == b.blocks && a.weights == b.weights && a.group == b.group; }

bool same(const HyperstateSpec& a, const HyperstateSpec& b) {
    if (a.kraus.size() != b.kraus.size() || a.group_walk != b.group_walk || a.density.has_value() != b.density.has_value())
        return false;
    if (a.density && !same(*a.density, *b.density)) return false;
    for (std::size_t i = 0; i < a.kraus.size(); ++i)
        if (!same(a.kraus[i].first, b.kraus[i].first) || a.kraus[i].second != b.kraus[i].second) return false;
    return true;
}

bool same(const InclusionSpec& a, const InclusionSpec& b) {
    return a.blocks == b.blocks && a.left_regular == b.left_regular && a.multiplicities == b.multiplicities &&
           same(a.unitaries, b.unitaries) && a.rho_kind == b.rho_kind &&
           (a.rho_kind != InclusionSpec::Rho::Explicit || same(a.rho, b.rho)) && a.stationary_for_partner == b.stationary_for_partner;
}

template <class T, class F>
bool same_opt(const std::optional<T>& a, const std::optional<T>& b, F eq) {
    if (a.has_value() != b.has_value()) return false;
    return !a || eq(*a, *b);
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

Mat checked_element(const TracialAlgebra& alg, const Mat& x, const std::string& path) {
    if (x.rows() != alg.size() || x.cols() != alg.size())
        fail(path, "expected a " + std::to_string(alg.size()) + "x" + std::to_string(alg.size()) + " block-diagonal matrix");
    if (alg.off_block_norm(x) > 1e-12) fail(path, "matrix has entries outside the diagonal blocks of M");
    return x;
}

struct BuiltAlgebra {
    GnsPtr gns;
    std::optional<GroupAlgebra> group;
};

BuiltAlgebra build_algebra_spec(const AlgebraSpec& a) {
    BuiltAlgebra b;
    if (a.group) {
        b.group = group_algebra(*a.group);
        b.gns = b.group->gns;
    } else {
        b.gns = gns_build(build_algebra(a.blocks, a.weights));
    }
    return b;
}

Hyperstate build_hyperstate(const HyperstateSpec& h, const BuiltAlgebra& alg, const std::string& path) {
    const TracialAlgebra& m = alg.gns->algebra();
    if (h.density) {
        if (h.density->rows() != alg.gns->dim() || h.density->cols() != alg.gns->dim())
            fail(at(path, "density"), "expected a " + std::to_string(alg.gns->dim()) + "x" + std::to_string(alg.gns->dim()) + " matrix");
        return Hyperstate::from_density(alg.gns, *h.density);
    }
    KrausFamily fam;
    if (h.group_walk) {
        if (!alg.group) fail(at(path, "group_walk"), "requires a group algebra");
        const auto& mu = *h.group_walk;
        if (mu.size() != alg.group->u.size()) fail(at(path, "group_walk.measure"), "needs one entry per group element");
        double total = 0;
        for (double v : mu) total += v;
        if (std::abs(total - 1) > 1e-12) fail(at(path, "group_walk.measure"), "must sum to 1");
        for (std::size_t g = 0; g < mu.size(); ++g)
            if (mu[g] > 0) fam.emplace_back(alg.group->u[g], mu[g]);
    } else {
        for (std::size_t i = 0; i < h.kraus.size(); ++i)
            fam.emplace_back(checked_element(m, h.kraus[i].first, at(at(path, "kraus"), i) + ".matrix"), h.kraus[i].second);
    }
    try {
        return from_kraus(alg.gns, fam);
    } catch (const ValidationError& e) {
        fail(path, e.what());
    }
}

}  // namespace

bool operator==(const Scenario& a, const Scenario& b) {
    auto eq_alg = [](const AlgebraSpec& x, const AlgebraSpec& y) { return same(x, y); };
    auto eq_h = [](const HyperstateSpec& x, const HyperstateSpec& y) { return same(x, y); };
    auto eq_p = [&](const PartnerSpec& x, const PartnerSpec& y) { return same_opt(x.algebra, y.algebra, eq_alg) && same(x.hyperstate, y.hyperstate); };
    auto eq_i = [](const InclusionSpec& x, const InclusionSpec& y) { return same(x, y); };
    auto eq_c = [](const ChannelSpec& x, const ChannelSpec& y) { return same(x.kraus, y.kraus) && same(x.subalgebra, y.subalgebra); };
    const Parameters &p = a.params, &q = b.params;
    const Tolerances &s = a.tol, &t = b.tol;
    const Expectations &e = a.expect, &f = b.expect;
    return a.name == b.name && a.description == b.description && same_opt(a.algebra, b.algebra, eq_alg) &&
           same_opt(a.hyperstate, b.hyperstate, eq_h) && same_opt(a.partner, b.partner, eq_p) &&
           same_opt(a.inclusion, b.inclusion, eq_i) && same_opt(a.channel, b.channel, eq_c) && a.analyses == b.analyses &&
           p.foguel_n_max == q.foguel_n_max && p.mc_samples == q.mc_samples && p.word_length == q.word_length &&
           p.depth == q.depth && p.dim_cap == q.dim_cap && p.entropy_n_max == q.entropy_n_max &&
           p.random_probes == q.random_probes && p.seed == q.seed && s.residual == t.residual && s.structure == t.structure &&
           s.subspace == t.subspace && s.entropy == t.entropy && s.additivity == t.additivity && s.monte_carlo == t.monte_carlo &&
           e.classification == f.classification && e.harmonic_dim == f.harmonic_dim && e.boundary_blocks == f.boundary_blocks &&
           e.vn_entropy == f.vn_entropy && e.foguel_decays == f.foguel_decays && e.dilation_dims == f.dilation_dims &&
           e.fix_dims == f.fix_dims;
}

Scenario scenario_from_json(const Json& j) {
    check_keys(j, "", {"name", "description", "algebra", "hyperstate", "partner", "inclusion", "channel", "analyses",
                       "parameters", "tolerances", "expect"});
    Scenario s;
    if (j.contains("name")) s.name = get_string(j["name"], "name");
    if (j.contains("description")) s.description = get_string(j["description"], "description");
    if (j.contains("algebra")) s.algebra = parse_algebra(j["algebra"], "algebra");
    if (j.contains("hyperstate")) {
        if (!s.algebra) fail("hyperstate", "requires 'algebra'");
        s.hyperstate = parse_hyperstate(j["hyperstate"], "hyperstate");
    }
    if (j.contains("partner")) {
        if (!s.hyperstate) fail("partner", "requires 'hyperstate'");
        check_keys(j["partner"], "partner", {"algebra", "hyperstate"});
        PartnerSpec p;
        if (j["partner"].contains("algebra")) p.algebra = parse_algebra(j["partner"]["algebra"], "partner.algebra");
        if (!j["partner"].contains("hyperstate")) fail("partner", "missing 'hyperstate'");
        p.hyperstate = parse_hyperstate(j["partner"]["hyperstate"], "partner.hyperstate");
        s.partner = p;
    }
    if (j.contains("inclusion")) {
        if (!s.hyperstate) fail("inclusion", "requires 'hyperstate'");
        s.inclusion = parse_inclusion(j["inclusion"], "inclusion");
        if (s.inclusion->stationary_for_partner && !s.partner) fail("inclusion.stationary_for", "no partner given");
    }
    if (j.contains("channel")) {
        check_keys(j["channel"], "channel", {"kraus", "subalgebra"});
        ChannelSpec c;
        if (!j["channel"].contains("kraus")) fail("channel", "missing 'kraus'");
        c.kraus = get_matrix_list(j["channel"]["kraus"], "channel.kraus");
        if (j["channel"].contains("subalgebra")) c.subalgebra = get_matrix_list(j["channel"]["subalgebra"], "channel.subalgebra");
        s.channel = c;
    }
    if (!s.hyperstate && !s.channel) fail("<root>", "needs a 'hyperstate' or a 'channel'");
    if (j.contains("analyses")) {
        const Json& a = array_at(j["analyses"], "analyses");
        for (std::size_t i = 0; i < a.size(); ++i) {
            std::string v = get_string(a[i], at("analyses", i));
            if (!kVerbs.count(v)) fail(at("analyses", i), "unknown analysis '" + v + "'");
            s.analyses.push_back(v);
        }
    }
    if (j.contains("parameters")) {
        const Json& p = j["parameters"];
        check_keys(p, "parameters",
                   {"foguel_n_max", "mc_samples", "word_length", "depth", "dim_cap", "entropy_n_max", "random_probes", "seed"});
        auto pos_int = [&](const char* key, auto& dst) {
            if (!p.contains(key)) return;
            long long v = get_integer(p[key], at("parameters", key));
            if (v <= 0) fail(at("parameters", key), "must be positive");
            dst = static_cast<std::remove_reference_t<decltype(dst)>>(v);
        };
        pos_int("foguel_n_max", s.params.foguel_n_max);
        pos_int("mc_samples", s.params.mc_samples);
        pos_int("word_length", s.params.word_length);
        pos_int("depth", s.params.depth);
        pos_int("dim_cap", s.params.dim_cap);
        pos_int("entropy_n_max", s.params.entropy_n_max);
        pos_int("random_probes", s.params.random_probes);
        if (p.contains("seed")) {
            if (!p["seed"].is_number_unsigned()) fail("parameters.seed", "expected a nonnegative integer");
            s.params.seed = p["seed"].get<std::uint64_t>();
        }
    }
    if (j.contains("tolerances")) {
        const Json& t = j["tolerances"];
        check_keys(t, "tolerances", {"residual", "structure", "subspace", "entropy", "additivity", "monte_carlo"});
        auto tol = [&](const char* key, double& dst) {
            if (!t.contains(key)) return;
            double v = get_number(t[key], at("tolerances", key));
            if (v <= 0) fail(at("tolerances", key), "must be positive");
            dst = v;
        };
        tol("residual", s.tol.residual);
        tol("structure", s.tol.structure);
        tol("subspace", s.tol.subspace);
        tol("entropy", s.tol.entropy);
        tol("additivity", s.tol.additivity);
        tol("monte_carlo", s.tol.monte_carlo);
    }
    if (j.contains("expect")) {
        const Json& e = j["expect"];
        check_keys(e, "expect", {"classification", "harmonic_dim", "boundary_blocks", "vn_entropy", "foguel_decays", "dilation_dims", "fix_dims"});
        if (e.contains("classification")) {
            check_keys(e["classification"], "expect.classification", {"regular", "generating", "strongly_generating", "symmetric"});
            for (auto it = e["classification"].begin(); it != e["classification"].end(); ++it)
                s.expect.classification[it.key()] = get_bool(it.value(), "expect.classification." + it.key());
        }
        if (e.contains("harmonic_dim")) s.expect.harmonic_dim = Index(get_integer(e["harmonic_dim"], "expect.harmonic_dim"));
        if (e.contains("boundary_blocks")) s.expect.boundary_blocks = get_positive_list(e["boundary_blocks"], "expect.boundary_blocks");
        if (e.contains("vn_entropy")) s.expect.vn_entropy = get_number(e["vn_entropy"], "expect.vn_entropy");
        if (e.contains("foguel_decays")) s.expect.foguel_decays = get_bool(e["foguel_decays"], "expect.foguel_decays");
        if (e.contains("dilation_dims")) s.expect.dilation_dims = get_positive_list(e["dilation_dims"], "expect.dilation_dims");
        if (e.contains("fix_dims")) s.expect.fix_dims = get_positive_list(e["fix_dims"], "expect.fix_dims");
    }
    return s;
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        std::ostringstream os;
        os << origin << ":" << line << ":" << col << ": malformed JSON (" << e.what() << ")";
        throw ValidationError(os.str());
    }
    try {
        return scenario_from_json(j);
    } catch (const ValidationError& e) {
        throw ValidationError(origin + ": " + e.what());
    }
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path + ": cannot open scenario file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str(), path);
}

Json emit_scenario(const Scenario& s) {
    Json j = Json::object();
    if (!s.name.empty()) j["name"] = s.name;
    if (!s.description.empty()) j["description"] = s.description;
    if (s.algebra) j["algebra"] = emit_algebra(*s.algebra);
    if (s.hyperstate) j["hyperstate"] = emit_hyperstate(*s.hyperstate);
    if (s.partner) {
        Json p = Json::object();
        if (s.partner->algebra) p["algebra"] = emit_algebra(*s.partner->algebra);
        p["hyperstate"] = emit_hyperstate(s.partner->hyperstate);
        j["partner"] = p;
    }
    if (s.inclusion) j["inclusion"] = emit_inclusion(*s.inclusion);
    if (s.channel) {
        Json c = {{"kraus", emit_matrix_list(s.channel->kraus)}};
        if (!s.channel->subalgebra.empty()) c["subalgebra"] = emit_matrix_list(s.channel->subalgebra);
        j["channel"] = c;
    }
    if (!s.analyses.empty()) j["analyses"] = s.analyses;
    const Parameters& p = s.params;
    j["parameters"] = {{"foguel_n_max", p.foguel_n_max}, {"mc_samples", p.mc_samples},       {"word_length", p.word_length},
                       {"depth", p.depth},               {"dim_cap", p.dim_cap},             {"entropy_n_max", p.entropy_n_max},
                       {"random_probes", p.random_probes}, {"seed", p.seed}};
    const Tolerances& t = s.tol;
    j["tolerances"] = {{"residual", t.residual}, {"structure", t.structure},   {"subspace", t.subspace},
                       {"entropy", t.entropy},   {"additivity", t.additivity}, {"monte_carlo", t.monte_carlo}};
    Json e = Json::object();
    if (!s.expect.classification.empty()) {
        Json c = Json::object();
        for (const auto& [k, v] : s.expect.classification) c[k] = v;
        e["classification"] = c;
    }
    if (s.expect.harmonic_dim) e["harmonic_dim"] = *s.expect.harmonic_dim;
    if (s.expect.boundary_blocks) e["boundary_blocks"] = *s.expect.boundary_blocks;
    if (s.expect.vn_entropy) e["vn_entropy"] = *s.expect.vn_entropy;
    if (s.expect.foguel_decays) e["foguel_decays"] = *s.expect.foguel_decays;
    if (s.expect.dilation_dims) e["dilation_dims"] = *s.expect.dilation_dims;
    if (s.expect.fix_dims) e["fix_dims"] = *s.expect.fix_dims;
    if (!e.empty()) j["expect"] = e;
    return j;
}

std::string scenario_hash(const Scenario& s) {
    std::string text = emit_scenario(s).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Materialized materialize(const Scenario& s) {
    Materialized out;
    std::optional<BuiltAlgebra> alg;
    if (s.algebra) {
        alg = build_algebra_spec(*s.algebra);
        out.m = alg->gns;
        out.group = alg->group;
    }
    if (s.hyperstate) out.phi = build_hyperstate(*s.hyperstate, *alg, "hyperstate");
    if (s.partner) {
        BuiltAlgebra palg = s.partner->algebra ? build_algebra_spec(*s.partner->algebra) : *alg;
        out.partner_same_algebra = !s.partner->algebra;
        out.partner_m = palg.gns;
        out.partner = build_hyperstate(s.partner->hyperstate, palg, "partner.hyperstate");
    }
    if (s.inclusion) {
        const InclusionSpec& is = *s.inclusion;
        if (is.stationary_for_partner && !out.partner_same_algebra)
            fail("inclusion.stationary_for", "the partner must live on the scenario algebra");
        Inclusion inc = is.left_regular ? embed_left_regular(out.m)
                                        : embed_by_multiplicities(out.m, is.blocks, is.multiplicities, is.unitaries);
        switch (is.rho_kind) {
            case InclusionSpec::Rho::Explicit:
                out.inclusion = build_inclusion(std::move(inc), is.rho);
                break;
            case InclusionSpec::Rho::Trace: {
                Mat rho = trace_like_density(inc);
                out.inclusion = build_inclusion(std::move(inc), rho);
                break;
            }
            case InclusionSpec::Rho::SolveStationary: {
                const Hyperstate& target = is.stationary_for_partner ? *out.partner : *out.phi;
                out.stationary = stationary_state_solve(target, inc);
                if (out.stationary->faithful) out.inclusion = build_inclusion(std::move(inc), out.stationary->rho);
                break;
            }
        }
    }
    if (s.channel) out.channel = ucp_from_kraus(s.channel->kraus, s.channel->subalgebra);
    return out;
}

Generated generate_scenario(const std::string& kind, std::uint64_t seed, const std::string& group,
                            const std::optional<std::vector<double>>& measure) {
    Generated g;
    Scenario& s = g.scenario;
    s.params.seed = seed;
    if (kind == "random-regular") {
        Rng rng(seed);
        s.name = "random-regular-" + std::to_string(seed);
        s.description = "M_2 with the family {u1, u1*, u2, u2*}/2 for Haar unitaries u1, u2";
        s.algebra = AlgebraSpec{{2}, std::nullopt, std::nullopt};
        HyperstateSpec h;
        for (int i = 0; i < 2; ++i) {
            Mat u = random_unitary(2, rng);
            h.kraus.emplace_back(u, 0.25);
            h.kraus.emplace_back(u.adjoint(), 0.25);
        }
        s.hyperstate = h;
        s.expect.classification = {{"regular", true}, {"symmetric", true}};
    } else if (kind == "group-walk") {
        AlgebraSpec a;
        a.group = named_group(group, "group");
        const std::size_t n = a.group->size();
        GroupAlgebra ga = group_algebra(*a.group);
        std::vector<double> mu;
        if (measure) {
            mu = *measure;
            if (mu.size() != n) throw ValidationError("measure: needs one entry per group element");
        } else {
            mu.assign(n, 0.0);
            if (n == 1) {
                mu[0] = 1;
            } else {
                const int gen = ga.identity == 0 ? 1 : 0;
                mu[std::size_t(gen)] += 0.5;
                mu[std::size_t(ga.inverse[std::size_t(gen)])] += 0.5;
            }
        }
        bool symmetric = true;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(mu[i] - mu[std::size_t(ga.inverse[i])]) > 1e-15) symmetric = false;
        if (symmetric && std::any_of(mu.begin(), mu.end(), [](double v) { return v == 0.0; }))
            g.warnings.push_back("measure does not have full support");
        s.name = "group-walk-" + group;
        s.description = "random walk on the group algebra with z_g = sqrt(mu(g)) u_g";
        s.algebra = a;
        HyperstateSpec h;
        h.group_walk = mu;
        s.hyperstate = h;
    } else if (kind == "non-generating-control") {
        s.name = "non-generating-control";
        s.description = "M_2 with {1, X}/sqrt(2): regular, generates only span{1, X}";
        s.algebra = AlgebraSpec{{2}, std::nullopt, std::nullopt};
        HyperstateSpec h;
        h.kraus.emplace_back(Mat::Identity(2, 2), 0.5);
        h.kraus.emplace_back(pauli_x(), 0.5);
        s.hyperstate = h;
        s.expect.classification = {{"regular", true}, {"generating", false}, {"strongly_generating", false}};
    } else {
        throw ValidationError("generate: unknown kind '" + kind + "' (expected random-regular, group-walk, non-generating-control)");
    }
    return g;
}

}  // namespace ncpb
