#pragma once

#include "ncpb/dilation.hpp"
#include "ncpb/entropy.hpp"
#include "ncpb/hyperstate.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ncpb {

using Json = nlohmann::ordered_json;

/// Either explicit blocks (with optional weights) or a group multiplication table.
struct AlgebraSpec {
    std::vector<Index> blocks;
    std::optional<std::vector<double>> weights;
    std::optional<std::vector<std::vector<int>>> group;
};

/// Exactly one of kraus, density, group_walk is populated.
struct HyperstateSpec {
    KrausFamily kraus;
    std::optional<Mat> density;
    std::optional<std::vector<double>> group_walk;  // mu(g), indexed like the table
};

struct PartnerSpec {
    std::optional<AlgebraSpec> algebra;  // absent: same algebra as the scenario
    HyperstateSpec hyperstate;
};

struct InclusionSpec {
    enum class Rho { Explicit, SolveStationary, Trace };
    std::vector<Index> blocks;
    bool left_regular = false;
    std::vector<std::vector<Index>> multiplicities;
    std::vector<Mat> unitaries;
    Rho rho_kind = Rho::Trace;
    Mat rho;
    bool stationary_for_partner = false;
};

struct ChannelSpec {
    std::vector<Mat> kraus;
    std::vector<Mat> subalgebra;  // empty: all of B(H_0)
};

struct Parameters {
    int foguel_n_max = 500;
    int mc_samples = 100000;
    int word_length = 6;
    int depth = 3;
    Index dim_cap = 4096;
    int entropy_n_max = 4;
    int random_probes = 20;
    std::uint64_t seed = 1;
};

struct Tolerances {
    double residual = 1e-10;
    double structure = 1e-9;
    double subspace = 1e-8;
    double entropy = 1e-8;
    double additivity = 1e-7;
    double monte_carlo = 1e-3;
};

/// Known answers a fixture asserts about itself.
struct Expectations {
    std::map<std::string, bool> classification;
    std::optional<Index> harmonic_dim;
    std::optional<std::vector<Index>> boundary_blocks;
    std::optional<double> vn_entropy;
    std::optional<bool> foguel_decays;
    std::optional<std::vector<Index>> dilation_dims;
    std::optional<std::vector<Index>> fix_dims;
};

struct Scenario {
    std::string name;
    std::string description;
    std::optional<AlgebraSpec> algebra;
    std::optional<HyperstateSpec> hyperstate;
    std::optional<PartnerSpec> partner;
    std::optional<InclusionSpec> inclusion;
    std::optional<ChannelSpec> channel;
    std::vector<std::string> analyses;
    Parameters params;
    Tolerances tol;
    Expectations expect;
};

bool operator==(const Scenario& a, const Scenario& b);

/// Parse errors carry line context; validation errors name the offending field path.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<string>");
Scenario scenario_from_json(const Json& j);
Json emit_scenario(const Scenario& s);

/// FNV-1a over the canonical emitted form.
std::string scenario_hash(const Scenario& s);

/// Module inputs built from a scenario.
struct Materialized {
    GnsPtr m;
    std::optional<GroupAlgebra> group;
    std::optional<Hyperstate> phi;
    GnsPtr partner_m;
    std::optional<Hyperstate> partner;
    bool partner_same_algebra = false;
    std::optional<InclusionState> inclusion;
    std::optional<StationarySolution> stationary;  // when rho was solved
    std::optional<UcpMap> channel;
};

/// Throws ValidationError for inputs the modules reject.
Materialized materialize(const Scenario& s);

struct Generated {
    Scenario scenario;
    std::vector<std::string> warnings;
};
/// kind in {random-regular, group-walk, non-generating-control}.
/// `group` names the group for group-walk ("Z<n>" or "S3"); `measure` defaults to
/// uniform on {g, g^-1} for the first non-identity g.
Generated generate_scenario(const std::string& kind, std::uint64_t seed, const std::string& group = "Z3",
                            const std::optional<std::vector<double>>& measure = std::nullopt);

}  // namespace ncpb
