// simmer: command-line driver for Adam training, retrofitting, ab initio
// simmering, ensemble evaluation and Hessian spectra.
//
// On failure prints a single JSON line to stderr,
//   {"error":"<kind>","message":"<text>"}
// and exits with 2 (usage/config), 3 (data/io), 4 (numerical) or 1 (other).

#include "simmer/diagnostics.hpp"
#include "simmer/error.hpp"
#include "simmer/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <sstream>

namespace {

int fail(const char* kind, const std::string& message, int code) {
    std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
    return code;
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw simmer::ConfigError(flag + ": cannot parse '" + cell + "' as a number");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace simmer;
    CLI::App app{"Thermostatted sampling of neural network parameters"};
    app.set_version_flag("--version", cli::code_version());
    app.require_subcommand(1);

    std::string config_path, out_dir, from_run, run_dir, bounds_text;
    std::uint64_t seed = 0;
    std::uint32_t replicates = 1;
    std::size_t grid = 0, cap = diagnostics::kDefaultHessianCap;
    std::vector<std::string> points;

    auto add_common = [&](CLI::App* sub, bool from_run_flag) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "run directory to create")->required();
        sub->add_option("--seed", seed, "override the experiment seed");
        sub->add_option("--replicates", replicates, "override the replicate count")->check(CLI::PositiveNumber);
        if (from_run_flag) sub->add_option("--from-run", from_run, "existing train-adam run")->check(CLI::ExistingDirectory);
    };

    auto* train = app.add_subcommand("train-adam", "train with Adam and save the last two iterates");
    add_common(train, false);
    auto* retrofit = app.add_subcommand("retrofit", "simmer from an Adam endpoint with a temperature ramp");
    add_common(retrofit, true);
    auto* simmer_cmd = app.add_subcommand("simmer", "ab initio simmering at constant temperature");
    add_common(simmer_cmd, false);
    auto* spectrum = app.add_subcommand("spectrum", "Hessian eigenvalues at an Adam endpoint");
    add_common(spectrum, true);
    spectrum->add_option("--cap", cap, "largest parameter count to attempt");

    auto* evaluate = app.add_subcommand("evaluate", "decision grids and prediction distributions from a run");
    evaluate->add_option("--from-run,--run", run_dir, "retrofit or simmer run directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    evaluate->add_option("--out", out_dir, "directory for evaluation artifacts")->required();
    evaluate->add_option("--grid", grid, "decision grid resolution per axis");
    evaluate->add_option("--bounds", bounds_text, "grid bounds x_min,x_max,y_min,y_max");
    evaluate->add_option("--at", points, "input point x1,x2,... (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (evaluate->parsed()) {
            cli::EvaluateRequest req;
            if (grid > 0) req.grid_resolution = grid;
            if (!bounds_text.empty()) {
                const auto b = parse_list(bounds_text, "--bounds");
                if (b.size() != 4) throw ConfigError("--bounds: expected 4 numbers");
                req.grid_bounds = ensemble::GridBounds{b[0], b[1], b[2], b[3]};
            }
            for (const auto& p : points) req.distribution_points.push_back(parse_list(p, "--at"));
            cli::run_evaluate(run_dir, req, out_dir);
            return 0;
        }

        cli::RunOptions opts;
        opts.out_dir = out_dir;
        CLI::App* sub = app.get_subcommands().front();
        if (sub->count("--seed")) opts.seed = seed;
        if (sub->count("--replicates")) opts.replicates = replicates;
        if (!from_run.empty()) opts.from_run = from_run;
        const auto config = cli::with_overrides(cli::ExperimentConfig::load(config_path), opts);

        if (train->parsed()) cli::run_train_adam(config, opts);
        else if (retrofit->parsed()) cli::run_retrofit(config, opts);
        else if (simmer_cmd->parsed()) cli::run_simmer(config, opts);
        else if (spectrum->parsed()) cli::run_spectrum(config, opts, cap);
        return 0;
    } catch (const ConfigError& e) {
        return fail("config", e.what(), 2);
    } catch (const InvalidArgument& e) {
        return fail("invalid_argument", e.what(), 2);
    } catch (const DataError& e) {
        return fail("data", e.what(), 3);
    } catch (const ShapeError& e) {
        return fail("shape", e.what(), 3);
    } catch (const NonFiniteError& e) {
        return fail("non_finite", e.what(), 4);
    } catch (const std::filesystem::filesystem_error& e) {
        return fail("io", e.what(), 3);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
}
