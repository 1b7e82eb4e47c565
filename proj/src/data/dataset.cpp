#include "simmer/data.hpp"

#include "simmer/error.hpp"
#include "simmer/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

namespace simmer::data {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_number(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
    return value;
}

}  // namespace

Schema Schema::parse(const std::string& text) {
    Schema s;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool task_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::istringstream words(line);
        std::string key, value, extra;
        words >> key >> value;
        if (value.empty() || (words >> extra)) {
            throw DataError("schema line " + std::to_string(lineno) + ": expected '<directive> <value>'");
        }
        if (key == "task") {
            if (value == "regression") s.task = TaskKind::regression;
            else if (value == "classification") s.task = TaskKind::classification;
            else throw DataError("schema line " + std::to_string(lineno) + ": unknown task '" + value + "'");
            task_seen = true;
        } else if (key == "feature") {
            s.features.push_back(value);
        } else if (key == "target") {
            s.targets.push_back(value);
        } else if (key == "invalid_rows") {
            if (value == "drop") s.invalid_rows = InvalidRowPolicy::drop;
            else if (value == "error") s.invalid_rows = InvalidRowPolicy::error;
            else throw DataError("schema line " + std::to_string(lineno) + ": invalid_rows must be drop|error");
        } else {
            throw DataError("schema line " + std::to_string(lineno) + ": unknown directive '" + key + "'");
        }
    }
    if (!task_seen) throw DataError("schema: missing 'task' directive");
    if (s.features.empty()) throw DataError("schema: at least one 'feature' is required");
    if (s.targets.empty()) throw DataError("schema: at least one 'target' is required");
    if (s.task == TaskKind::classification && s.targets.size() != 1) {
        throw DataError("schema: classification takes exactly one target column");
    }
    return s;
}

Schema Schema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string Schema::to_text() const {
    std::ostringstream out;
    out << "task " << (task == TaskKind::classification ? "classification" : "regression") << '\n';
    for (const auto& f : features) out << "feature " << f << '\n';
    for (const auto& t : targets) out << "target " << t << '\n';
    out << "invalid_rows " << (invalid_rows == InvalidRowPolicy::drop ? "drop" : "error") << '\n';
    return out.str();
}

Dataset gen_noisy_sine(std::size_t n_points, double noise_amp, std::uint64_t seed) {
    if (n_points < 2) throw InvalidArgument("gen_noisy_sine: need at least 2 points");
    Dataset d;
    d.task = TaskKind::regression;
    d.feature_names = {"x"};
    d.target_names = {"y"};
    d.features.resize(static_cast<Eigen::Index>(n_points), 1);
    d.targets.resize(static_cast<Eigen::Index>(n_points), 1);
    Rng rng(seed, StreamPurpose::data_noise);
    const double last = static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double x = -1.0 + 2.0 * static_cast<double>(i) / last;
        const auto r = static_cast<Eigen::Index>(i);
        d.features(r, 0) = x;
        d.targets(r, 0) = std::sin(2.0 * std::numbers::pi * x) + noise_amp * rng.normal();
    }
    return d;
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const std::vector<std::string> header = split_fields(line);

    auto column_of = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError(path.string() + ": unknown column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> fcols, tcols;
    for (const auto& f : schema.features) fcols.push_back(column_of(f));
    for (const auto& t : schema.targets) tcols.push_back(column_of(t));
    const bool classify = schema.task == TaskKind::classification;

    std::vector<std::vector<double>> feats;
    std::vector<std::vector<double>> numeric_targets;
    std::vector<std::string> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_fields(line);
        std::string problem;
        std::vector<double> row;
        std::vector<double> trow;
        std::string label;
        if (cells.size() != header.size()) {
            problem = "expected " + std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size());
        } else {
            for (auto c : fcols) {
                const auto v = parse_number(cells[c]);
                if (!v) {
                    problem = "column '" + header[c] + "' value '" + cells[c] + "' is not a finite number";
                    break;
                }
                row.push_back(*v);
            }
            if (problem.empty() && classify) {
                label = cells[tcols[0]];
                if (label.empty()) problem = "empty class label";
            } else if (problem.empty()) {
                for (auto c : tcols) {
                    const auto v = parse_number(cells[c]);
                    if (!v) {
                        problem = "column '" + header[c] + "' value '" + cells[c] + "' is not a finite number";
                        break;
                    }
                    trow.push_back(*v);
                }
            }
        }
        if (!problem.empty()) {
            if (schema.invalid_rows == InvalidRowPolicy::drop) continue;
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + problem);
        }
        feats.push_back(std::move(row));
        if (classify) labels.push_back(std::move(label));
        else numeric_targets.push_back(std::move(trow));
    }
    if (feats.empty()) throw DataError(path.string() + ": no usable rows");

    Dataset d;
    d.task = schema.task;
    d.feature_names = schema.features;
    const auto S = static_cast<Eigen::Index>(feats.size());
    d.features.resize(S, static_cast<Eigen::Index>(fcols.size()));
    for (Eigen::Index r = 0; r < S; ++r) {
        for (Eigen::Index c = 0; c < d.features.cols(); ++c) d.features(r, c) = feats[r][c];
    }
    if (classify) {
        const std::set<std::string> classes(labels.begin(), labels.end());
        d.target_names.assign(classes.begin(), classes.end());
        std::map<std::string, Eigen::Index> index;
        for (std::size_t k = 0; k < d.target_names.size(); ++k) {
            index[d.target_names[k]] = static_cast<Eigen::Index>(k);
        }
        d.targets = Matrix::Zero(S, static_cast<Eigen::Index>(classes.size()));
        for (Eigen::Index r = 0; r < S; ++r) d.targets(r, index.at(labels[r])) = 1.0;
    } else {
        d.target_names = schema.targets;
        d.targets.resize(S, static_cast<Eigen::Index>(tcols.size()));
        for (Eigen::Index r = 0; r < S; ++r) {
            for (Eigen::Index c = 0; c < d.targets.cols(); ++c) d.targets(r, c) = numeric_targets[r][c];
        }
    }
    return d;
}

Split split(const Dataset& dataset, std::size_t n_train, std::uint64_t seed) {
    const std::size_t S = dataset.size();
    if (n_train == 0 || n_train >= S) {
        throw InvalidArgument("split: n_train must be in (0, " + std::to_string(S) + "), got " +
                              std::to_string(n_train));
    }
    std::vector<std::size_t> perm(S);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed, StreamPurpose::split);
    for (std::size_t i = S - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.below(i + 1)]);
    }
    Split sp;
    sp.seed = seed;
    sp.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    sp.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    return sp;
}

ScalerParams minmax_fit(const Matrix& m, const std::vector<std::size_t>& rows,
                        const std::vector<std::string>& names) {
    if (rows.empty()) throw InvalidArgument("minmax_fit: no rows");
    ScalerParams p;
    p.names = names;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        double lo = m(static_cast<Eigen::Index>(rows[0]), c);
        double hi = lo;
        for (auto r : rows) {
            lo = std::min(lo, m(static_cast<Eigen::Index>(r), c));
            hi = std::max(hi, m(static_cast<Eigen::Index>(r), c));
        }
        if (!(hi > lo)) {
            const std::string name = static_cast<std::size_t>(c) < names.size()
                                         ? names[static_cast<std::size_t>(c)]
                                         : "column " + std::to_string(c);
            throw DataError("minmax_fit: feature '" + name + "' is constant on the training rows");
        }
        p.min.push_back(lo);
        p.max.push_back(hi);
    }
    return p;
}

ScalerParams minmax_fit(const Dataset& dataset, const Split& split) {
    return minmax_fit(dataset.features, split.train, dataset.feature_names);
}

Matrix minmax_apply(const ScalerParams& s, const Matrix& m) {
    if (static_cast<std::size_t>(m.cols()) != s.size()) throw ShapeError("minmax_apply: column count mismatch");
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double lo = s.min[c];
        const double range = s.max[c] - lo;
        out.col(c) = (2.0 * (m.col(c).array() - lo) / range - 1.0).matrix();
    }
    return out;
}

Matrix minmax_invert(const ScalerParams& s, const Matrix& m) {
    if (static_cast<std::size_t>(m.cols()) != s.size()) throw ShapeError("minmax_invert: column count mismatch");
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double lo = s.min[c];
        const double range = s.max[c] - lo;
        out.col(c) = ((m.col(c).array() + 1.0) * (0.5 * range) + lo).matrix();
    }
    return out;
}

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

}  // namespace simmer::data
