#include "ncpb/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return 0;
    }
    try {
        ncpb::write_atomically(out, text);
    } catch (const std::exception& e) {
        std::cerr << "ncpb: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson boundaries of finite tracial algebras: analyses and verification"};
    app.set_version_flag("--version", std::string(NCPB_VERSION));

    std::string verb, target, format = "text", out, group = "Z3";
    double tol = 0, perturb = 0;
    int depth = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> verbs = ncpb::analysis_verbs();
    verbs.push_back("verify-all");
    verbs.push_back("generate");

    app.add_option("verb", verb, "analysis verb, verify-all, or generate")->required()->check(CLI::IsMember(verbs));
    app.add_option("target", target, "scenario file (a directory for verify-all; a kind for generate)")->required();
    auto* tol_opt = app.add_option("--tol", tol, "override the residual and subspace tolerances")->check(CLI::PositiveNumber);
    auto* depth_opt = app.add_option("--depth", depth, "dilation depth")->check(CLI::Range(1, 16));
    app.add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv", "text"}));
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    app.add_option("--out", out, "write the report (or generated scenario) here");
    app.add_option("--perturb", perturb, "perturb every density by this amount before checking")->check(CLI::NonNegativeNumber);
    app.add_option("--group", group, "group for generate group-walk (Z<n> or S3)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    if (verb == "generate") {
        try {
            ncpb::Generated g = ncpb::generate_scenario(target, seed_opt->count() ? seed : 7, group);
            for (const auto& w : g.warnings) std::cerr << "ncpb: warning: " << w << "\n";
            return emit(ncpb::emit_scenario(g.scenario).dump(2), out);
        } catch (const std::exception& e) {
            std::cerr << "ncpb: " << e.what() << "\n";
            return 3;
        }
    }

    ncpb::RunFlags flags;
    if (tol_opt->count()) flags.tol = tol;
    if (depth_opt->count()) flags.depth = depth;
    if (seed_opt->count()) flags.seed = seed;
    flags.perturb = perturb;

    std::vector<ncpb::Report> reports =
        verb == "verify-all" ? ncpb::verify_all(target, flags) : std::vector<ncpb::Report>{ncpb::run_file(verb, target, flags)};

    std::string text;
    if (format == "json") text = ncpb::reports_json(reports).dump(2);
    else if (format == "csv") text = ncpb::reports_csv(reports);
    else text = ncpb::reports_text(reports);
    for (const auto& r : reports)
        if (r.input_error) std::cerr << "ncpb: " << *r.input_error << "\n";
    int code = emit(text, out);
    return code != 0 ? code : ncpb::exit_code(reports);
}
