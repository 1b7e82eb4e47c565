#include "simmer/experiment.hpp"

#include "simmer/diagnostics.hpp"
#include "simmer/error.hpp"

#include <charconv>
#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>

#ifndef SIMMER_VERSION
#define SIMMER_VERSION "unknown"
#endif

namespace simmer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() { return std::string("simmer ") + SIMMER_VERSION; }

namespace {

std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError(context + ": cannot parse '" + s + "'");
    }
    return v;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

json topology_json(const net::Topology& t) {
    std::vector<std::string> acts;
    for (auto a : t.activations()) acts.emplace_back(net::to_string(a));
    return {{"layers", t.layer_sizes()}, {"activations", acts}};
}

net::Topology topology_from_json(const json& j) {
    std::vector<net::Activation> acts;
    for (const auto& a : j.at("activations")) acts.push_back(net::parse_activation(a.get<std::string>()));
    return net::Topology(j.at("layers").get<std::vector<std::size_t>>(), acts);
}

json scaler_json(const data::ScalerParams& s) {
    return {{"min", s.min}, {"max", s.max}, {"names", s.names}};
}

data::ScalerParams scaler_from_json(const json& j) {
    data::ScalerParams s;
    s.min = j.at("min").get<std::vector<double>>();
    s.max = j.at("max").get<std::vector<double>>();
    s.names = j.at("names").get<std::vector<std::string>>();
    return s;
}

void write_f64le(std::ostream& out, std::span<const double> values) {
    static_assert(sizeof(double) == 8);
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        char bytes[8];
        for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
        out.write(bytes, 8);
    }
}

void read_f64le(std::istream& in, std::span<double> values, const fs::path& path) {
    for (double& v : values) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError(path.string() + ": truncated file");
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
        std::memcpy(&v, &bits, 8);
    }
}

void prepare_out_dir(const RunOptions& opts) {
    if (opts.out_dir.empty()) throw ConfigError("--out: an output directory is required");
    if (opts.from_run && fs::exists(opts.out_dir) &&
        fs::equivalent(opts.out_dir, *opts.from_run)) {
        throw ConfigError("--out: must differ from --from-run (input runs are never modified)");
    }
    fs::create_directories(opts.out_dir);
}

void write_resolved_config(const fs::path& dir, const ExperimentConfig& config, const std::string& command) {
    json j;
    j["code_version"] = code_version();
    j["command"] = command;
    j["config_hash"] = config_hash(config);
    j["config"] = config.to_json();
    write_text(dir / "config.resolved.json", j.dump(2) + "\n");
}

ExperimentConfig read_resolved_config(const fs::path& run_dir) {
    const json j = read_json(run_dir / "config.resolved.json");
    return ExperimentConfig::from_json(j.at("config"));
}

std::string trajectory_name(std::uint32_t r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "trajectory_rep%03u.csv", r);
    return buf;
}

template <class Fn>
void for_each_replicate(std::uint32_t n, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (std::uint32_t r = 0; r < n; ++r) {
        try {
            fn(r);
        } catch (...) {
            errors[r] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<int> true_labels(const Experiment& ex) {
    if (ex.topology.output_size() == 1) {
        std::vector<int> out(ex.test.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = ex.test.targets(static_cast<Eigen::Index>(i), 0) > 0.5;
        return out;
    }
    return diagnostics::labels_from_one_hot(ex.test.targets);
}

Matrix raw_test_features(const Experiment& ex) { return data::select_rows(ex.dataset.features, ex.split.test); }

void write_metric_report(const fs::path& dir, const ExperimentConfig& config, const Experiment& ex,
                         const std::vector<double>& adam_metrics, const std::vector<double>& ensemble_metrics,
                         const ensemble::EnsembleBundle& pooled) {
    const std::string kind = metric_kind(ex);
    json j;
    j["metric_kind"] = kind;
    j["adam_test_metric"] = nullptr;
    if (!adam_metrics.empty()) {
        double s = 0.0;
        for (double m : adam_metrics) s += m;
        j["adam_test_metric"] = s / static_cast<double>(adam_metrics.size());
    }
    const double ens = ensemble_test_metric(ex, pooled);
    j["ensemble_test_metric"] = ens;
    j["improved"] = adam_metrics.empty() ? false : metric_improved(kind, j["adam_test_metric"].get<double>(), ens);
    j["ensemble_size"] = pooled.size();
    json reps = json::array();
    for (std::uint32_t r = 0; r < config.replicates; ++r) {
        json e = {{"replicate", r}, {"seed", config.replicate_seed(r)}};
        if (r < adam_metrics.size()) e["adam_test_metric"] = adam_metrics[r];
        if (r < ensemble_metrics.size()) e["ensemble_test_metric"] = ensemble_metrics[r];
        reps.push_back(e);
    }
    j["replicates"] = reps;
    j["seeds"] = {{"seed", config.seed},
                  {"dataset", config.dataset_seed()},
                  {"split", config.split_seed()},
                  {"sampling", config.sampling_seed()}};
    j["config_hash"] = config_hash(config);
    j["code_version"] = code_version();
    write_text(dir / "metrics.json", j.dump(2) + "\n");
}

void require_sampling(const ExperimentConfig& config) {
    if (!config.simmer) throw ConfigError("simmer: section required for this command");
    if (!config.sampling) throw ConfigError("sampling: section required for this command");
}

}  // namespace

// ---------------------------------------------------------------------------

Experiment prepare(const ExperimentConfig& config) {
    Experiment ex;
    if (config.dataset.kind == "noisy_sine") {
        ex.dataset = data::gen_noisy_sine(config.dataset.n_points, config.dataset.noise_amp, config.dataset_seed());
    } else {
        ex.dataset = data::load_csv(config.dataset.path, data::Schema::load(config.dataset.schema));
    }
    ex.task = ex.dataset.task;
    if (config.split.n_train >= ex.dataset.size()) {
        throw ConfigError("split.n_train: " + std::to_string(config.split.n_train) + " leaves no test rows (dataset has " +
                          std::to_string(ex.dataset.size()) + ")");
    }
    ex.split = data::split(ex.dataset, config.split.n_train, config.split_seed());
    ex.feature_scaler = data::minmax_fit(ex.dataset, ex.split);
    ex.topology = config.topology();
    ex.loss = config.loss_kind();

    if (ex.topology.input_size() != static_cast<std::size_t>(ex.dataset.features.cols())) {
        throw ConfigError("network.layers: input width " + std::to_string(ex.topology.input_size()) +
                          " does not match the dataset's " + std::to_string(ex.dataset.features.cols()) + " features");
    }
    Matrix targets = ex.dataset.targets;
    if (ex.task == data::TaskKind::classification && ex.topology.output_size() == 1 && targets.cols() == 2) {
        targets = targets.col(1).eval();  // single-logit binary classifier
    }
    if (ex.topology.output_size() != static_cast<std::size_t>(targets.cols())) {
        throw ConfigError("network.layers: output width " + std::to_string(ex.topology.output_size()) +
                          " does not match the dataset's " + std::to_string(targets.cols()) + " targets");
    }

    auto make_batch = [&](const std::vector<std::size_t>& rows) {
        net::Batch b;
        b.inputs = data::minmax_apply(ex.feature_scaler, data::select_rows(ex.dataset.features, rows));
        b.targets = data::select_rows(targets, rows);
        return b;
    };
    ex.train = make_batch(ex.split.train);
    ex.test = make_batch(ex.split.test);
    if (ex.task == data::TaskKind::regression) {
        ex.target_scaler = data::minmax_fit(targets, ex.split.train, ex.dataset.target_names);
        for (std::size_t k = 0; k < ex.target_scaler->size(); ++k) {
            const double lo = ex.target_scaler->min[k];
            const double hi = ex.target_scaler->max[k];
            for (net::Batch* b : {&ex.train, &ex.test}) {
                b->output_scale.push_back(0.5 * (hi - lo));
                b->output_offset.push_back(lo + 0.5 * (hi - lo));
            }
        }
    }
    return ex;
}

ParamVector initial_params(const ExperimentConfig& config, const net::Topology& topology,
                           std::uint32_t replicate) {
    const std::uint64_t seed = config.replicate_seed(replicate);
    if (config.network.initializer == "stratified_glorot") return net::init_stratified_glorot(topology, seed);
    return net::init_glorot_normal(topology, seed);
}

std::string metric_kind(const Experiment& ex) {
    return ex.task == data::TaskKind::classification ? "accuracy" : "mse";
}

double single_test_metric(const Experiment& ex, std::span<const double> params) {
    const Matrix out = net::forward(ex.topology, params, ex.test.inputs);
    if (ex.task == data::TaskKind::classification) {
        return diagnostics::accuracy(ensemble::decide_classes(out), true_labels(ex));
    }
    return diagnostics::mse(net::apply_output_map(ex.test, out), ex.test.targets);
}

double ensemble_test_metric(const Experiment& ex, const ensemble::EnsembleBundle& bundle) {
    const Matrix raw = raw_test_features(ex);
    if (ex.task == data::TaskKind::classification) {
        return diagnostics::accuracy(ensemble::majority_vote(bundle, raw), true_labels(ex));
    }
    return diagnostics::mse(ensemble::regression_mean(bundle, raw), ex.test.targets);
}

bool metric_improved(const std::string& kind, double baseline, double candidate) {
    return kind == "accuracy" ? candidate > baseline : candidate < baseline;
}

optimize::TrainReport adam_phase(const ExperimentConfig& config, const Experiment& ex,
                                 std::uint32_t replicate) {
    if (!config.adam) throw ConfigError("adam: section required for this command");
    return optimize::train_adam(ex.topology, initial_params(config, ex.topology, replicate), ex.train, &ex.test,
                                ex.loss, config.adam->epochs, config.adam->learning_rate);
}

SimmerOutcome simmer_phase(const ExperimentConfig& config, const Experiment& ex,
                           dynamics::PhaseState state, std::uint32_t replicate) {
    require_sampling(config);
    const dynamics::IntegratorConfig ic = config.integrator();
    const std::int64_t total = config.simmer->total_iterations;

    ensemble::SamplingPlan plan;
    plan.total_iterations = total;
    plan.burn_in = config.sampling->burn_in;
    plan.stride = config.sampling->stride;
    plan.fraction = config.sampling->fraction;
    plan.seed = config.sampling_seed() + replicate;
    std::vector<bool> keep(static_cast<std::size_t>(total), false);
    for (auto it : plan.selected_iterations()) keep[static_cast<std::size_t>(it)] = true;

    const dynamics::GradientFn grad = [&](std::span<const double> x, std::span<double> g) {
        net::loss_and_gradient(ex.topology, x, ex.train, ex.loss, g);
    };

    SimmerOutcome out;
    out.trajectory.records.reserve(static_cast<std::size_t>(total));
    for (std::int64_t it = 0; it < total; ++it) {
        const double T = dynamics::schedule_at(ic.schedule, it);
        dynamics::nhc_step(state, grad, ic, T);
        TrajectoryRecord rec;
        rec.iteration = it;
        rec.T_target = T;
        rec.T_kinetic = dynamics::kinetic_temperature(state);
        rec.loss_train = net::batch_loss(ex.topology, state.x, ex.train, ex.loss);
        rec.loss_test = net::batch_loss(ex.topology, state.x, ex.test, ex.loss);
        rec.extended_energy = dynamics::extended_energy(state, rec.loss_train, T);
        out.trajectory.records.push_back(rec);
        if (keep[static_cast<std::size_t>(it)]) {
            out.trajectory.snapshots.push_back({it, T, replicate, state.x});
        }
    }
    out.bundle = ensemble::collect(out.trajectory, plan, ex.topology, ex.feature_scaler, ex.target_scaler, ex.task);
    out.trajectory.snapshots.clear();  // the bundle owns the copies now
    out.trajectory.snapshots.shrink_to_fit();
    return out;
}

// ---------------------------------------------------------------------------

void write_params(const fs::path& stem, const net::Topology& topology, std::span<const double> params) {
    if (params.size() != topology.param_count()) throw ShapeError("write_params: parameter count mismatch");
    fs::path bin = stem;
    bin += ".bin";
    fs::path side = stem;
    side += ".json";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw DataError("cannot write " + bin.string());
    write_f64le(out, params);
    json j = {{"format", "f64le"},
              {"count", params.size()},
              {"layout", "layer-major; per layer W (fan_out x fan_in, row-major) then b (fan_out)"},
              {"topology", topology_json(topology)}};
    write_text(side, j.dump(2) + "\n");
}

ParamVector read_params(const fs::path& stem, net::Topology* topology) {
    fs::path bin = stem;
    bin += ".bin";
    fs::path side = stem;
    side += ".json";
    const json j = read_json(side);
    if (j.at("format") != "f64le") throw DataError(side.string() + ": unsupported format");
    const net::Topology t = topology_from_json(j.at("topology"));
    const auto count = j.at("count").get<std::size_t>();
    if (count != t.param_count()) throw DataError(side.string() + ": count does not match topology");
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw DataError("cannot open " + bin.string());
    ParamVector p(count);
    read_f64le(in, p, bin);
    if (topology) *topology = t;
    return p;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory) {
    std::string text = "iteration,T_target,T_kinetic,loss_train,loss_test,extended_energy\n";
    text.reserve(trajectory.records.size() * 96);
    for (const auto& r : trajectory.records) {
        text += std::to_string(r.iteration);
        for (double v : {r.T_target, r.T_kinetic, r.loss_train, r.loss_test, r.extended_energy}) {
            text += ',';
            text += num(v);
        }
        text += '\n';
    }
    write_text(path, text);
}

std::vector<TrajectoryRecord> read_trajectory_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "iteration,T_target,T_kinetic,loss_train,loss_test,extended_energy") {
        throw DataError(path.string() + ": unexpected header");
    }
    std::vector<TrajectoryRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6) throw DataError(path.string() + ": bad row '" + line + "'");
        TrajectoryRecord r;
        r.iteration = std::stoll(cells[0]);
        r.T_target = parse_double(cells[1], path.string());
        r.T_kinetic = parse_double(cells[2], path.string());
        r.loss_train = parse_double(cells[3], path.string());
        r.loss_test = parse_double(cells[4], path.string());
        r.extended_energy = parse_double(cells[5], path.string());
        out.push_back(r);
    }
    return out;
}

void write_bundle(const fs::path& dir, const ensemble::EnsembleBundle& bundle) {
    bundle.validate();
    fs::create_directories(dir);
    json members = json::array();
    std::ofstream out(dir / "bundle.bin", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "bundle.bin").string());
    for (const auto& m : bundle.members) {
        members.push_back({{"iteration", m.iteration}, {"temperature", m.temperature}, {"replicate", m.replicate}});
        write_f64le(out, m.params);
    }
    json j = {{"format", "f64le"},
              {"param_count", bundle.topology.param_count()},
              {"member_count", bundle.size()},
              {"topology", topology_json(bundle.topology)},
              {"task", bundle.task == data::TaskKind::classification ? "classification" : "regression"},
              {"feature_scaler", scaler_json(bundle.feature_scaler)},
              {"target_scaler", bundle.target_scaler ? scaler_json(*bundle.target_scaler) : json(nullptr)},
              {"members", members}};
    write_text(dir / "bundle.json", j.dump(1) + "\n");
}

ensemble::EnsembleBundle read_bundle(const fs::path& dir) {
    const json j = read_json(dir / "bundle.json");
    ensemble::EnsembleBundle b;
    b.topology = topology_from_json(j.at("topology"));
    b.task = j.at("task") == "classification" ? data::TaskKind::classification : data::TaskKind::regression;
    b.feature_scaler = scaler_from_json(j.at("feature_scaler"));
    if (!j.at("target_scaler").is_null()) b.target_scaler = scaler_from_json(j.at("target_scaler"));
    if (j.at("param_count").get<std::size_t>() != b.topology.param_count()) {
        throw DataError((dir / "bundle.json").string() + ": param_count does not match topology");
    }
    std::ifstream in(dir / "bundle.bin", std::ios::binary);
    if (!in) throw DataError("cannot open " + (dir / "bundle.bin").string());
    for (const auto& m : j.at("members")) {
        Snapshot s;
        s.iteration = m.at("iteration").get<std::int64_t>();
        s.temperature = m.at("temperature").get<double>();
        s.replicate = m.at("replicate").get<std::uint32_t>();
        s.params.resize(b.topology.param_count());
        read_f64le(in, s.params, dir / "bundle.bin");
        b.members.push_back(std::move(s));
    }
    b.validate();
    return b;
}

// ---------------------------------------------------------------------------

ExperimentConfig with_overrides(ExperimentConfig config, const RunOptions& opts) {
    if (opts.seed) config.seed = *opts.seed;
    if (opts.replicates) config.replicates = *opts.replicates;
    config.validate();
    return config;
}

void run_train_adam(const ExperimentConfig& config, const RunOptions& opts) {
    if (config.replicates != 1) throw ConfigError("replicates: train-adam runs a single replicate; vary --seed instead");
    prepare_out_dir(opts);
    const Experiment ex = prepare(config);
    const optimize::TrainReport report = adam_phase(config, ex, 0);
    write_resolved_config(opts.out_dir, config, "train-adam");

    std::string csv = "epoch,loss_train,loss_test\n";
    for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
        csv += std::to_string(e + 1) + "," + num(report.train_loss[e]) + "," + num(report.test_loss[e]) + "\n";
    }
    write_text(opts.out_dir / "adam_loss.csv", csv);
    write_params(opts.out_dir / "params_final", ex.topology, report.final_params);
    write_params(opts.out_dir / "params_previous", ex.topology, report.previous_params);
    json j = {{"epochs", report.train_loss.size()},
              {"learning_rate", config.adam->learning_rate},
              {"final_train_loss", report.train_loss.back()},
              {"final_test_loss", report.test_loss.back()},
              {"metric_kind", metric_kind(ex)},
              {"test_metric", single_test_metric(ex, report.final_params)},
              {"seed", config.seed}};
    write_text(opts.out_dir / "train_report.json", j.dump(2) + "\n");
}

void run_retrofit(const ExperimentConfig& config, const RunOptions& opts) {
    require_sampling(config);
    if (config.simmer->schedule.kind == "ramp" && config.simmer->schedule.T_initial != 0.0) {
        throw ConfigError("simmer.schedule.T_initial: retrofitting starts at T=0");
    }
    if (opts.from_run && config.replicates != 1) {
        throw ConfigError("replicates: --from-run retrofits one Adam endpoint; use 1 replicate");
    }
    if (!opts.from_run && !config.adam) throw ConfigError("adam: section required unless --from-run is given");
    prepare_out_dir(opts);
    const Experiment ex = prepare(config);
    const dynamics::IntegratorConfig ic = config.integrator();
    const double gamma = config.adam ? config.adam->learning_rate : config.simmer->dt;

    const std::uint32_t n = config.replicates;
    std::vector<SimmerOutcome> outcomes(n);
    std::vector<double> adam_metrics(n), ensemble_metrics(n);
    for_each_replicate(n, [&](std::uint32_t r) {
        optimize::TrainReport report;
        if (opts.from_run) {
            net::Topology t;
            report.final_params = read_params(*opts.from_run / "params_final", &t);
            report.previous_params = read_params(*opts.from_run / "params_previous");
            if (!(t == ex.topology)) throw ConfigError("network: topology differs from the --from-run snapshots");
        } else {
            report = adam_phase(config, ex, r);
        }
        adam_metrics[r] = single_test_metric(ex, report.final_params);
        outcomes[r] = simmer_phase(config, ex, optimize::retrofit_init(report, gamma, ic), r);
        ensemble_metrics[r] = ensemble_test_metric(ex, outcomes[r].bundle);
    });

    write_resolved_config(opts.out_dir, config, "retrofit");
    std::vector<ensemble::EnsembleBundle> bundles;
    for (std::uint32_t r = 0; r < n; ++r) {
        write_trajectory_csv(opts.out_dir / trajectory_name(r), outcomes[r].trajectory);
        bundles.push_back(std::move(outcomes[r].bundle));
    }
    const ensemble::EnsembleBundle pooled = ensemble::pool(std::move(bundles));
    write_bundle(opts.out_dir / "ensemble", pooled);
    write_metric_report(opts.out_dir, config, ex, adam_metrics, ensemble_metrics, pooled);
}

void run_simmer(const ExperimentConfig& config, const RunOptions& opts) {
    require_sampling(config);
    if (config.simmer->schedule.kind != "constant") {
        throw ConfigError("simmer.schedule.kind: ab initio simmering needs a constant schedule");
    }
    prepare_out_dir(opts);
    const Experiment ex = prepare(config);
    const dynamics::IntegratorConfig ic = config.integrator();
    const double T = config.simmer->schedule.T_target;

    const std::uint32_t n = config.replicates;
    std::vector<SimmerOutcome> outcomes(n);
    std::vector<double> ensemble_metrics(n);
    for_each_replicate(n, [&](std::uint32_t r) {
        auto start = dynamics::initial_state(initial_params(config, ex.topology, r), ic, T,
                                             config.replicate_seed(r), r);
        outcomes[r] = simmer_phase(config, ex, std::move(start), r);
        ensemble_metrics[r] = ensemble_test_metric(ex, outcomes[r].bundle);
    });

    // baseline: Adam from replicate 0's initialization, same split and architecture
    std::vector<double> adam_metrics;
    if (config.adam) adam_metrics.push_back(single_test_metric(ex, adam_phase(config, ex, 0).final_params));

    write_resolved_config(opts.out_dir, config, "simmer");
    std::vector<ensemble::EnsembleBundle> bundles;
    for (std::uint32_t r = 0; r < n; ++r) {
        write_trajectory_csv(opts.out_dir / trajectory_name(r), outcomes[r].trajectory);
        bundles.push_back(std::move(outcomes[r].bundle));
    }
    const ensemble::EnsembleBundle pooled = ensemble::pool(std::move(bundles));
    write_bundle(opts.out_dir / "ensemble", pooled);
    write_metric_report(opts.out_dir, config, ex, adam_metrics, ensemble_metrics, pooled);
}

void run_evaluate(const fs::path& run_dir, const EvaluateRequest& request, const fs::path& out_dir) {
    if (!fs::exists(run_dir / "ensemble" / "bundle.json")) {
        throw DataError(run_dir.string() + ": no ensemble bundle (run retrofit or simmer first)");
    }
    if (out_dir.empty()) throw ConfigError("--out: an output directory is required");
    if (fs::exists(out_dir) && fs::equivalent(out_dir, run_dir)) {
        throw ConfigError("--out: must differ from the run directory (input runs are never modified)");
    }
    const ExperimentConfig config = read_resolved_config(run_dir);
    const ensemble::EnsembleBundle bundle = read_bundle(run_dir / "ensemble");
    const Experiment ex = prepare(config);
    fs::create_directories(out_dir);

    json summary;
    summary["metric_kind"] = metric_kind(ex);
    summary["ensemble_test_metric"] = ensemble_test_metric(ex, bundle);
    summary["ensemble_size"] = bundle.size();
    summary["source_config_hash"] = config_hash(config);

    if (request.grid_resolution) {
        if (bundle.task != data::TaskKind::classification) {
            throw ConfigError("--grid: decision grids need a classification run");
        }
        ensemble::GridBounds bounds;
        if (request.grid_bounds) {
            bounds = *request.grid_bounds;
        } else {
            const auto& s = bundle.feature_scaler;
            if (s.size() != 2) throw ConfigError("--grid: needs a 2-feature network");
            const double px = 0.1 * (s.max[0] - s.min[0]);
            const double py = 0.1 * (s.max[1] - s.min[1]);
            bounds = {s.min[0] - px, s.max[0] + px, s.min[1] - py, s.max[1] + py};
        }
        const auto grid = ensemble::decision_grid(bundle, bounds, *request.grid_resolution);
        std::string csv = "x,y";
        for (std::size_t k = 0; k < bundle.class_count(); ++k) {
            const std::string name = k < ex.dataset.target_names.size() && bundle.topology.output_size() > 1
                                         ? ex.dataset.target_names[k]
                                         : std::to_string(k);
            csv += ",p_" + name;
        }
        csv += "\n";
        for (Eigen::Index r = 0; r < grid.points.rows(); ++r) {
            csv += num(grid.points(r, 0)) + "," + num(grid.points(r, 1));
            for (Eigen::Index k = 0; k < grid.proportions.cols(); ++k) csv += "," + num(grid.proportions(r, k));
            csv += "\n";
        }
        write_text(out_dir / "grid.csv", csv);
        summary["grid"] = {{"resolution", *request.grid_resolution},
                           {"bounds", {bounds.x_min, bounds.x_max, bounds.y_min, bounds.y_max}},
                           {"file", "grid.csv"}};
    }

    json dists = json::array();
    for (std::size_t p = 0; p < request.distribution_points.size(); ++p) {
        const auto& point = request.distribution_points[p];
        if (point.size() != bundle.topology.input_size()) {
            throw ConfigError("--at: point " + std::to_string(p) + " has " + std::to_string(point.size()) +
                              " coordinates, network takes " + std::to_string(bundle.topology.input_size()));
        }
        const auto d = ensemble::regression_distribution(bundle, point);
        std::string csv = "member,replicate,iteration,temperature";
        for (Eigen::Index k = 0; k < d.values.cols(); ++k) csv += ",output_" + std::to_string(k);
        if (bundle.task == data::TaskKind::classification) csv += ",class";
        csv += "\n";
        const auto classes = ensemble::decide_classes(d.values);
        for (std::size_t m = 0; m < bundle.size(); ++m) {
            const auto& mem = bundle.members[m];
            csv += std::to_string(m) + "," + std::to_string(mem.replicate) + "," + std::to_string(mem.iteration) + "," +
                   num(mem.temperature);
            for (Eigen::Index k = 0; k < d.values.cols(); ++k) csv += "," + num(d.values(static_cast<Eigen::Index>(m), k));
            if (bundle.task == data::TaskKind::classification) csv += "," + std::to_string(classes[m]);
            csv += "\n";
        }
        const std::string file = "distribution_" + std::to_string(p) + ".csv";
        write_text(out_dir / file, csv);
        dists.push_back({{"input", point}, {"mean", d.mean}, {"file", file}});
    }
    summary["distributions"] = dists;
    write_text(out_dir / "metrics_summary.json", summary.dump(2) + "\n");
}

void run_spectrum(const ExperimentConfig& config, const RunOptions& opts, std::size_t cap) {
    prepare_out_dir(opts);
    const Experiment ex = prepare(config);
    ParamVector params;
    if (opts.from_run) {
        net::Topology t;
        params = read_params(*opts.from_run / "params_final", &t);
        if (!(t == ex.topology)) throw ConfigError("network: topology differs from the --from-run snapshot");
    } else {
        params = adam_phase(config, ex, 0).final_params;
    }
    const auto spec = diagnostics::hessian_spectrum(ex.topology, params, ex.train, ex.loss, cap);
    write_resolved_config(opts.out_dir, config, "spectrum");
    std::string csv = "rank,eigenvalue\n";
    for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
        csv += std::to_string(i) + "," + num(spec.eigenvalues[i]) + "\n";
    }
    write_text(opts.out_dir / "spectrum.csv", csv);
    json j = {{"param_count", params.size()},
              {"cap", cap},
              {"raw_asymmetry", spec.raw_asymmetry},
              {"spread_decades", spec.spread_decades},
              {"largest", spec.eigenvalues.front()},
              {"smallest", spec.eigenvalues.back()},
              {"train_loss", net::batch_loss(ex.topology, params, ex.train, ex.loss)}};
    write_text(opts.out_dir / "spectrum.json", j.dump(2) + "\n");
}

}  // namespace simmer::cli
