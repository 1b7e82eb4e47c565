#include "simmer/config.hpp"

#include "simmer/error.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace simmer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Typed access to one JSON object, reporting errors by dotted field path and
// rejecting keys it was never asked about.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    template <class T>
    T get(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(field(key) + ": required field is missing");
        return convert<T>(key);
    }

    template <class T>
    T get(const char* key, T fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        return convert<T>(key);
    }

    template <class T>
    std::optional<T> optional(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
        return convert<T>(key);
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    Section child(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(field(key) + ": required section is missing");
        return Section(j_.at(key), field(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(field(it.key().c_str()) + ": unknown field");
        }
    }

    std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "<root>" : path_; }

private:
    template <class T>
    T convert(const char* key) {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(field(key) + ": wrong type");
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return fs::weakly_canonical(base / p);
}

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError(field + ": " + what);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
    ExperimentConfig c;
    Section root(j, "");
    c.name = root.get<std::string>("name", c.name);
    c.seed = root.get<std::uint64_t>("seed", 0);
    c.replicates = root.get<std::uint32_t>("replicates", 1);

    {
        Section d = root.child("dataset");
        c.dataset.kind = d.get<std::string>("kind");
        if (c.dataset.kind == "noisy_sine") {
            c.dataset.n_points = d.get<std::size_t>("n_points", c.dataset.n_points);
            c.dataset.noise_amp = d.get<double>("noise_amp", c.dataset.noise_amp);
            c.dataset.seed = d.optional<std::uint64_t>("seed");
        } else if (c.dataset.kind == "csv") {
            c.dataset.path = resolve(d.get<std::string>("path"), base_dir);
            c.dataset.schema = resolve(d.get<std::string>("schema"), base_dir);
        } else {
            throw ConfigError("dataset.kind: expected 'noisy_sine' or 'csv', got '" + c.dataset.kind + "'");
        }
        d.finish();
    }
    {
        Section s = root.child("split");
        c.split.n_train = s.get<std::size_t>("n_train");
        c.split.seed = s.optional<std::uint64_t>("seed");
        s.finish();
    }
    {
        Section n = root.child("network");
        c.network.layers = n.get<std::vector<std::size_t>>("layers");
        c.network.activations = n.get<std::vector<std::string>>("activations");
        c.network.loss = n.get<std::string>("loss");
        c.network.initializer = n.get<std::string>("initializer", c.network.initializer);
        n.finish();
    }
    if (root.has("adam")) {
        Section a = root.child("adam");
        AdamSpec spec;
        spec.learning_rate = a.get<double>("learning_rate", spec.learning_rate);
        spec.epochs = a.get<std::int64_t>("epochs");
        a.finish();
        c.adam = spec;
    } else {
        root.optional<json>("adam");
    }
    if (root.has("simmer")) {
        Section s = root.child("simmer");
        SimmerSpec spec;
        spec.dt = s.get<double>("dt");
        spec.chain_length = s.get<std::size_t>("chain_length", spec.chain_length);
        spec.chain_mass = s.get<double>("chain_mass", spec.chain_mass);
        spec.particle_mass = s.get<double>("particle_mass", spec.particle_mass);
        spec.total_iterations = s.get<std::int64_t>("total_iterations");
        Section t = s.child("schedule");
        spec.schedule.kind = t.get<std::string>("kind");
        spec.schedule.T_target = t.get<double>("T_target");
        if (spec.schedule.kind == "ramp") {
            spec.schedule.T_initial = t.get<double>("T_initial", 0.0);
            spec.schedule.delta_T = t.get<double>("delta_T");
            spec.schedule.hold_iterations = t.get<std::int64_t>("hold_iterations");
        } else if (spec.schedule.kind == "constant") {
            spec.schedule.T_initial = spec.schedule.T_target;
        } else {
            throw ConfigError("simmer.schedule.kind: expected 'constant' or 'ramp'");
        }
        t.finish();
        s.finish();
        c.simmer = spec;
    } else {
        root.optional<json>("simmer");
    }
    if (root.has("sampling")) {
        Section s = root.child("sampling");
        SamplingSpec spec;
        spec.burn_in = s.get<std::int64_t>("burn_in");
        spec.stride = s.get<std::int64_t>("stride", 1);
        spec.fraction = s.get<double>("fraction", 1.0);
        spec.seed = s.optional<std::uint64_t>("seed");
        s.finish();
        c.sampling = spec;
    } else {
        root.optional<json>("sampling");
    }
    root.finish();
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    return from_json(j, fs::absolute(path).parent_path());
}

void ExperimentConfig::validate() const {
    require(replicates >= 1, "replicates", "must be >= 1");
    if (dataset.kind == "noisy_sine") {
        require(dataset.n_points >= 2, "dataset.n_points", "must be >= 2");
        require(dataset.noise_amp >= 0.0, "dataset.noise_amp", "must be >= 0");
    } else {
        require(fs::exists(dataset.path), "dataset.path", "file not found: " + dataset.path.string());
        require(fs::exists(dataset.schema), "dataset.schema", "file not found: " + dataset.schema.string());
    }
    require(split.n_train >= 1, "split.n_train", "must be >= 1");
    require(network.layers.size() >= 2, "network.layers", "needs at least an input and an output layer");
    for (auto s : network.layers) require(s >= 1, "network.layers", "sizes must be positive");
    require(network.activations.size() + 1 == network.layers.size(), "network.activations",
            "needs one entry per non-input layer");
    for (const auto& a : network.activations) {
        try {
            net::parse_activation(a);
        } catch (const Error&) {
            throw ConfigError("network.activations: unknown activation '" + a + "'");
        }
    }
    try {
        net::parse_loss(network.loss);
    } catch (const Error&) {
        throw ConfigError("network.loss: unknown loss '" + network.loss + "'");
    }
    require(network.initializer == "glorot_normal" || network.initializer == "stratified_glorot",
            "network.initializer", "expected 'glorot_normal' or 'stratified_glorot'");
    if (adam) {
        require(adam->learning_rate > 0.0, "adam.learning_rate", "must be > 0");
        require(adam->epochs >= 2, "adam.epochs", "must be >= 2");
    }
    if (simmer) {
        require(simmer->dt > 0.0, "simmer.dt", "must be > 0");
        require(simmer->chain_length >= 1, "simmer.chain_length", "must be >= 1");
        require(simmer->chain_mass > 0.0, "simmer.chain_mass", "must be > 0");
        require(simmer->particle_mass > 0.0, "simmer.particle_mass", "must be > 0");
        require(simmer->total_iterations >= 1, "simmer.total_iterations", "must be >= 1");
        const auto& t = simmer->schedule;
        require(t.T_target >= 0.0, "simmer.schedule.T_target", "must be >= 0");
        if (t.kind == "ramp") {
            require(t.T_initial >= 0.0 && t.T_initial <= t.T_target, "simmer.schedule.T_initial",
                    "must be in [0, T_target]");
            require(t.delta_T > 0.0, "simmer.schedule.delta_T", "must be > 0");
            require(t.hold_iterations >= 1, "simmer.schedule.hold_iterations", "must be >= 1");
        }
    }
    if (sampling) {
        require(simmer.has_value(), "sampling", "requires a simmer section");
        require(sampling->burn_in >= 0 && sampling->burn_in < simmer->total_iterations, "sampling.burn_in",
                "must be in [0, simmer.total_iterations)");
        require(sampling->stride >= 1, "sampling.stride", "must be >= 1");
        require(sampling->fraction > 0.0 && sampling->fraction <= 1.0, "sampling.fraction", "must be in (0, 1]");
    }
}

json ExperimentConfig::to_json() const {
    json j;
    j["name"] = name;
    j["seed"] = seed;
    j["replicates"] = replicates;
    json d;
    d["kind"] = dataset.kind;
    if (dataset.kind == "noisy_sine") {
        d["n_points"] = dataset.n_points;
        d["noise_amp"] = dataset.noise_amp;
        d["seed"] = dataset_seed();
    } else {
        d["path"] = dataset.path.string();
        d["schema"] = dataset.schema.string();
    }
    j["dataset"] = d;
    j["split"] = {{"n_train", split.n_train}, {"seed", split_seed()}};
    j["network"] = {{"layers", network.layers},
                    {"activations", network.activations},
                    {"loss", network.loss},
                    {"initializer", network.initializer}};
    if (adam) j["adam"] = {{"learning_rate", adam->learning_rate}, {"epochs", adam->epochs}};
    if (simmer) {
        json t = {{"kind", simmer->schedule.kind}, {"T_target", simmer->schedule.T_target}};
        if (simmer->schedule.kind == "ramp") {
            t["T_initial"] = simmer->schedule.T_initial;
            t["delta_T"] = simmer->schedule.delta_T;
            t["hold_iterations"] = simmer->schedule.hold_iterations;
        }
        j["simmer"] = {{"dt", simmer->dt},
                       {"chain_length", simmer->chain_length},
                       {"chain_mass", simmer->chain_mass},
                       {"particle_mass", simmer->particle_mass},
                       {"total_iterations", simmer->total_iterations},
                       {"schedule", t}};
    }
    if (sampling) {
        j["sampling"] = {{"burn_in", sampling->burn_in},
                         {"stride", sampling->stride},
                         {"fraction", sampling->fraction},
                         {"seed", sampling_seed()}};
    }
    return j;
}

net::Topology ExperimentConfig::topology() const {
    std::vector<net::Activation> acts;
    for (const auto& a : network.activations) acts.push_back(net::parse_activation(a));
    return net::Topology(network.layers, acts);
}

net::LossKind ExperimentConfig::loss_kind() const { return net::parse_loss(network.loss); }

dynamics::IntegratorConfig ExperimentConfig::integrator() const {
    if (!simmer) throw ConfigError("simmer: section required for this command");
    dynamics::IntegratorConfig ic;
    ic.dt = simmer->dt;
    ic.chain_length = simmer->chain_length;
    ic.chain_mass = simmer->chain_mass;
    ic.particle_mass = simmer->particle_mass;
    const auto& t = simmer->schedule;
    ic.schedule = t.kind == "ramp"
                      ? dynamics::TemperatureSchedule::ramp(t.T_initial, t.T_target, t.delta_T, t.hold_iterations)
                      : dynamics::TemperatureSchedule::fixed(t.T_target);
    return ic;
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string text = config.to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace simmer::cli
