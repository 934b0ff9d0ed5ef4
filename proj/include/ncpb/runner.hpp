#pragma once

#include "ncpb/scenario.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ncpb {

enum class Status { Pass, Fail, Inconclusive, Info };
std::string to_string(Status s);

/// One assertion: pass when `value` compares to `threshold` as the check requires.
struct Check {
    std::string name;
    Status status = Status::Info;
    double value = 0;
    double threshold = 0;
    std::string detail;
};

struct AnalysisResult {
    std::string verb;
    Json data = Json::object();
    std::vector<Check> checks;
};

struct Report {
    std::string source;  // file the scenario came from
    std::string scenario_name;
    std::string scenario_hash;
    std::string verb;
    double wall_clock = 0;
    std::vector<AnalysisResult> analyses;
    std::optional<std::string> input_error;

    Status overall() const;
    /// 0 pass, 1 failure, 2 inconclusive present, 3 input error.
    int exit_code() const;
};

struct RunFlags {
    std::optional<double> tol;  // replaces the residual and subspace tolerances
    std::optional<int> depth;
    std::optional<std::uint64_t> seed;
    double perturb = 0;  // size of a deliberate Hermitian density perturbation
};

inline const std::vector<std::string>& analysis_verbs() {
    static const std::vector<std::string> v = {"classify", "harmonic", "boundary", "double-ergodicity", "mv", "foguel",
                                               "tensor",   "entropy",  "furstenberg", "gap",            "dilate"};
    return v;
}

/// Runs one verb (or verify-all) on a parsed scenario; module errors become checks,
/// never exceptions.
Report run(const std::string& verb, const Scenario& s, const RunFlags& flags, const std::string& source = "");
/// Parses and runs; parse errors are reported as input errors.
Report run_file(const std::string& verb, const std::string& path, const RunFlags& flags);
/// A scenario file, or every *.json in a directory (sorted by name).
std::vector<Report> verify_all(const std::string& path, const RunFlags& flags);

int exit_code(const std::vector<Report>& reports);

Json report_json(const Report& r);
Json reports_json(const std::vector<Report>& rs);
std::string reports_csv(const std::vector<Report>& rs);
std::string reports_text(const std::vector<Report>& rs);

/// Writes through a temporary file and a rename.
void write_atomically(const std::string& path, const std::string& content);

}  // namespace ncpb
