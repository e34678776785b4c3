#include "muygps/cli.hpp"

#include "muygps/errors.hpp"
#include "muygps/linalg.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

namespace muygps::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& s, char delim = ',') {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, delim)) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot read '" + s + "' as a number for " + what);
    }
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// ---------------------------------------------------------------------------
// Config files: TOML sections map onto dotted option names, so
//   [kernel]
//   nu = 1.5
// sets --kernel.nu.

class FlatToml : public CLI::ConfigTOML {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::vector<CLI::ConfigItem> flat;
        for (auto& item : CLI::ConfigTOML::from_config(input)) {
            if (item.name == "++" || item.name == "--") continue;
            CLI::ConfigItem f;
            f.name = item.fullname();
            f.inputs = std::move(item.inputs);
            flat.push_back(std::move(f));
        }
        return flat;
    }
};

char parse_delimiter(const std::string& s) {
    if (s == "comma" || s == ",") return ',';
    if (s == "tab" || s == "\\t" || s == "\t") return '\t';
    if (s == "semicolon" || s == ";") return ';';
    if (s == "space" || s == " ") return ' ';
    if (s == "pipe" || s == "|") return '|';
    if (s.size() == 1) return s[0];
    throw ConfigError("unsupported delimiter '" + s + "'");
}

std::string delimiter_name(char c) {
    switch (c) {
        case ',': return "comma";
        case '\t': return "tab";
        case ';': return "semicolon";
        case ' ': return "space";
        case '|': return "pipe";
        default: return std::string(1, c);
    }
}

// ---------------------------------------------------------------------------
// Flat tables: predictions, truth files and free-form test locations.

struct Table {
    std::vector<std::string> comments;  // without the leading "# "
    std::map<std::string, std::vector<double>> columns;
    std::size_t rows = 0;
};

Table read_table(const std::string& path, char delim, const std::vector<std::string>& wanted) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    Table t;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    std::vector<int> slot;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind('#', 0) == 0) {
            t.comments.push_back(line.size() > 2 ? line.substr(2) : "");
            continue;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<std::string> fields;
        {
            std::string f;
            std::istringstream s(line);
            while (std::getline(s, f, delim)) fields.push_back(f);
            if (!line.empty() && line.back() == delim) fields.emplace_back();
        }
        for (auto& f : fields) {
            const auto b = f.find_first_not_of(" \t\"");
            const auto e = f.find_last_not_of(" \t\"");
            f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
        }
        if (header.empty()) {
            header = fields;
            for (const auto& w : wanted) {
                const auto it = std::find(header.begin(), header.end(), w);
                if (it == header.end()) throw ParseError(path + ": missing column '" + w + "'", lineno);
                t.columns[w];
            }
            for (const auto& h : header) {
                slot.push_back(std::find(wanted.begin(), wanted.end(), h) != wanted.end() ? 1 : 0);
            }
            continue;
        }
        if (fields.size() != header.size()) {
            throw ParseError(path + ": expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             lineno);
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (!slot[j]) continue;
            const auto& f = fields[j];
            double v = std::numeric_limits<double>::quiet_NaN();
            if (!(f.empty() || f == "NA" || f == "nan" || f == "NaN")) {
                try {
                    std::size_t used = 0;
                    v = std::stod(f, &used);
                    if (used != f.size()) throw std::invalid_argument(f);
                } catch (const std::exception&) {
                    throw ParseError(path + ": cannot parse '" + f + "' in column " + header[j], lineno);
                }
            }
            t.columns[header[j]].push_back(v);
        }
        ++t.rows;
    }
    if (header.empty()) throw ParseError(path + ": header row required", 1);
    return t;
}

// ---------------------------------------------------------------------------
// Model file: `key = value` lines, the resolved config as `# config:` comments.

struct DataSource {
    std::string path;
    CsvSchema schema;
    std::string mask_file;
    double test_fraction = 0.0;
    std::uint64_t split_seed = 0;
};

GridDataset load_source(const DataSource& src) {
    if (src.path.empty()) throw ConfigError("no data file given (--data)");
    GridDataset d = load_csv(src.path, src.schema);
    if (!src.mask_file.empty()) {
        d = apply_mask(std::move(d), load_mask_csv(src.mask_file, d.rows, d.cols));
    } else if (src.test_fraction > 0.0) {
        d = mask_split(std::move(d), src.test_fraction, src.split_seed);
    }
    return d;
}

NormalizationTransform resolve_transform(const std::string& mode, const GridDataset& d) {
    if (mode == "fit") return NormalizationTransform::fit(d);
    if (mode == "heaton") return NormalizationTransform::heaton();
    if (mode == "none") return {};
    throw ConfigError("unknown normalization '" + mode + "' (expected fit, heaton or none)");
}

struct SavedModel {
    DataSource source;
    std::string normalize_mode;
    NormalizationTransform transform;
    ModelSettings settings;
    HyperParams fitted;
    std::vector<std::string> free;
    MeanModel mean;
    Index train_n = 0;
    double train_checksum = 0.0;
    double objective_initial = 0.0;
    double objective_final = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    double nn_build_s = 0.0;
    double train_s = 0.0;
    std::vector<std::string> config;
};

double checksum(const Vector& y) {
    return y.sum();
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
}

void write_model(const SavedModel& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write " + path);
    f << "# muygps model\n";
    for (const auto& line : m.config) f << "# config: " << line << "\n";
    auto kv = [&](const std::string& k, const std::string& v) { f << k << " = " << v << "\n"; };
    kv("format", "1");
    kv("data.path", m.source.path);
    kv("data.delimiter", delimiter_name(m.source.schema.delimiter));
    kv("data.lon", m.source.schema.lon);
    kv("data.lat", m.source.schema.lat);
    kv("data.response", m.source.schema.response);
    kv("data.truth", m.source.schema.truth);
    kv("data.mask", m.source.schema.mask);
    kv("split.mask_file", m.source.mask_file);
    kv("split.test_fraction", num(m.source.test_fraction));
    kv("split.seed", std::to_string(m.source.split_seed));
    kv("normalize.mode", m.normalize_mode);
    kv("normalize.offset_x", num(m.transform.offset_x));
    kv("normalize.offset_y", num(m.transform.offset_y));
    kv("normalize.scale", num(m.transform.scale));
    kv("kernel.sigma_sq", num(m.fitted.sigma_sq.value));
    kv("kernel.rho", num(m.fitted.rho.value));
    kv("kernel.nu", num(m.fitted.nu.value));
    kv("kernel.tau_sq", num(m.fitted.tau_sq.value));
    kv("kernel.free", m.free.empty() ? "none" : join(m.free, ","));
    kv("k", std::to_string(m.settings.k));
    kv("backend", std::string(to_string(m.settings.backend)));
    kv("hnsw.degree", std::to_string(m.settings.hnsw.degree));
    kv("hnsw.ef_construction", std::to_string(m.settings.hnsw.ef_construction));
    kv("hnsw.ef_search", std::to_string(m.settings.hnsw.ef_search));
    kv("hnsw.seed", std::to_string(m.settings.hnsw.seed));
    kv("batch.size", std::to_string(m.settings.batch.size));
    kv("batch.seed", std::to_string(m.settings.batch.seed));
    kv("mean", std::string(m.mean.name()));
    std::visit(
        [&](const auto& mm) {
            using T = std::decay_t<decltype(mm)>;
            if constexpr (std::is_same_v<T, ConstantMean>) {
                kv("mean.c", num(mm.c));
            } else if constexpr (std::is_same_v<T, LinearMean>) {
                kv("mean.beta", num(mm.beta[0]) + " " + num(mm.beta[1]) + " " + num(mm.beta[2]) + " " + num(mm.beta[3]));
            } else if constexpr (std::is_same_v<T, SmootherMean>) {
                kv("mean.grid", std::to_string(mm.grid.rows) + " " + std::to_string(mm.grid.cols) + " " + num(mm.grid.x0) +
                                    " " + num(mm.grid.y0) + " " + num(mm.grid.dx) + " " + num(mm.grid.dy));
                kv("mean.bandwidth", num(mm.options.bandwidth));
                kv("mean.kernel", std::string(to_string(mm.options.kernel)));
                f << "mean.field =";
                for (double v : mm.field) f << ' ' << num(v);
                f << '\n';
            }
        },
        m.mean.variant());
    kv("train.n", std::to_string(m.train_n));
    kv("train.checksum", num(m.train_checksum));
    kv("train.objective_initial", num(m.objective_initial));
    kv("train.objective_final", num(m.objective_final));
    kv("train.iterations", std::to_string(m.iterations));
    kv("train.evaluations", std::to_string(m.evaluations));
    kv("train.converged", m.converged ? "true" : "false");
    kv("time.nn_build_s", num(m.nn_build_s));
    kv("time.train_s", num(m.train_s));
    if (!f) throw ParseError("error writing " + path);
}

class KeyValues {
public:
    KeyValues(const std::string& path) : path_(path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open model file " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find(" = ");
            if (eq == std::string::npos) {
                // An empty value is written as "key = " and may lose its trailing space.
                if (line.size() > 2 && line.compare(line.size() - 2, 2, " =") == 0) {
                    values_[line.substr(0, line.size() - 2)] = "";
                    continue;
                }
                throw ParseError(path + ": expected 'key = value'", lineno);
            }
            values_[line.substr(0, eq)] = line.substr(eq + 3);
        }
    }

    [[nodiscard]] const std::string& str(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ParseError(path_ + ": missing key '" + key + "'");
        return it->second;
    }
    [[nodiscard]] double real(const std::string& key) const {
        try {
            return std::stod(str(key));
        } catch (const std::logic_error&) {
            throw ParseError(path_ + ": key '" + key + "' is not a number");
        }
    }
    [[nodiscard]] std::uint64_t integer(const std::string& key) const {
        try {
            return std::stoull(str(key));
        } catch (const std::logic_error&) {
            throw ParseError(path_ + ": key '" + key + "' is not an integer");
        }
    }
    [[nodiscard]] std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        std::istringstream in(str(key));
        std::string tok;
        while (in >> tok) {
            try {
                out.push_back(std::stod(tok));
            } catch (const std::logic_error&) {
                throw ParseError(path_ + ": key '" + key + "' holds a non-number");
            }
        }
        return out;
    }

private:
    std::string path_;
    std::map<std::string, std::string> values_;
};

SavedModel read_model(const std::string& path) {
    const KeyValues kv(path);
    if (kv.str("format") != "1") throw CompatibilityError(path + ": unsupported model format " + kv.str("format"));
    SavedModel m;
    m.source.path = kv.str("data.path");
    m.source.schema.delimiter = parse_delimiter(kv.str("data.delimiter"));
    m.source.schema.lon = kv.str("data.lon");
    m.source.schema.lat = kv.str("data.lat");
    m.source.schema.response = kv.str("data.response");
    m.source.schema.truth = kv.str("data.truth");
    m.source.schema.mask = kv.str("data.mask");
    m.source.mask_file = kv.str("split.mask_file");
    m.source.test_fraction = kv.real("split.test_fraction");
    m.source.split_seed = kv.integer("split.seed");
    m.normalize_mode = kv.str("normalize.mode");
    m.transform = {kv.real("normalize.offset_x"), kv.real("normalize.offset_y"), kv.real("normalize.scale")};
    m.fitted = HyperParams::make(kv.real("kernel.sigma_sq"), kv.real("kernel.rho"), kv.real("kernel.nu"),
                                 kv.real("kernel.tau_sq"));
    if (kv.str("kernel.free") != "none") m.free = split_list(kv.str("kernel.free"));
    m.settings.k = kv.integer("k");
    m.settings.backend = parse_backend(kv.str("backend"));
    m.settings.hnsw.degree = kv.integer("hnsw.degree");
    m.settings.hnsw.ef_construction = kv.integer("hnsw.ef_construction");
    m.settings.hnsw.ef_search = kv.integer("hnsw.ef_search");
    m.settings.hnsw.seed = kv.integer("hnsw.seed");
    m.settings.batch.size = static_cast<Index>(kv.integer("batch.size"));
    m.settings.batch.seed = kv.integer("batch.seed");
    const std::string mean = kv.str("mean");
    m.settings.mean = parse_mean_kind(mean);
    switch (m.settings.mean) {
        case MeanKind::constant: m.mean = MeanModel(ConstantMean{kv.real("mean.c")}); break;
        case MeanKind::linear: {
            const auto b = kv.reals("mean.beta");
            if (b.size() != 4) throw ParseError(path + ": mean.beta needs 4 coefficients");
            m.mean = MeanModel(LinearMean{{b[0], b[1], b[2], b[3]}});
            break;
        }
        case MeanKind::smoother: {
            const auto g = kv.reals("mean.grid");
            if (g.size() != 6) throw ParseError(path + ": mean.grid needs 6 values");
            SmootherMean sm;
            sm.grid = {static_cast<Index>(g[0]), static_cast<Index>(g[1]), g[2], g[3], g[4], g[5]};
            sm.options.bandwidth = kv.real("mean.bandwidth");
            sm.options.kernel = parse_smoother_kernel(kv.str("mean.kernel"));
            sm.field = kv.reals("mean.field");
            if (static_cast<Index>(sm.field.size()) != sm.grid.cells()) {
                throw ParseError(path + ": mean.field does not match mean.grid");
            }
            m.settings.smoother = sm.options;
            m.mean = MeanModel(std::move(sm));
            break;
        }
    }
    m.train_n = static_cast<Index>(kv.integer("train.n"));
    m.train_checksum = kv.real("train.checksum");
    m.objective_initial = kv.real("train.objective_initial");
    m.objective_final = kv.real("train.objective_final");
    m.iterations = static_cast<int>(kv.integer("train.iterations"));
    m.evaluations = static_cast<int>(kv.integer("train.evaluations"));
    m.converged = kv.str("train.converged") == "true";
    m.nn_build_s = kv.real("time.nn_build_s");
    m.train_s = kv.real("time.train_s");
    return m;
}

// ---------------------------------------------------------------------------
// Command-line options.

struct Options {
    // data
    std::string data;
    std::string delimiter = "comma";
    std::string lon_col = "lon";
    std::string lat_col = "lat";
    std::string response_col = "response";
    std::string truth_col;
    std::string mask_col;
    std::string mask_file;
    double test_fraction = 0.0;
    std::optional<std::uint64_t> split_seed;
    std::string normalize = "fit";
    // kernel
    double sigma_sq = 1.0;
    double rho = 1.0;
    double nu = 1.0;
    double tau_sq = 0.001;
    std::string free = "nu";
    std::string rho_bounds = "0.01,10";
    std::string nu_bounds = "0.1,5";
    std::string tau_sq_bounds = "1e-6,1";
    // model
    std::size_t k = 50;
    std::string backend = "exact";
    HnswParams hnsw;
    Index batch_size = 500;
    std::uint64_t seed = 0;
    std::string optimizer = "quasi_newton";
    int max_iterations = 100;
    std::string mean = "const";
    double bandwidth = 25.0;
    std::string smoother_kernel = "exponential";
    std::string smoother_method = "automatic";
    double level = 0.95;
    int workers = 0;
    // outputs and inputs of individual commands
    std::string model = "model.txt";
    std::string out;
    std::string truth_out;
    std::string test;
    std::string predictions;
    std::string truth;
    std::string eval_truth_col = "truth";
    std::string report;
    // simulate
    Index rows = 40;
    Index cols = 40;
    double sim_mean = 0.0;
    // study
    std::string study_axis = "batch_size";
    std::string study_values = "25,100,500,2000";
    int study_reps = 20;
};

Bounds parse_bounds(const std::string& s, const std::string& name) {
    const auto parts = split_list(s);
    if (parts.size() != 2) throw ConfigError(name + " bounds must be 'lo,hi'");
    return {to_double(parts[0], name), to_double(parts[1], name)};
}

HyperParams kernel_from(const Options& o) {
    HyperParams p = HyperParams::make(o.sigma_sq, o.rho, o.nu, o.tau_sq);
    for (const auto& name : split_list(o.free == "none" ? "" : o.free)) {
        if (name == "rho") {
            const auto b = parse_bounds(o.rho_bounds, "kernel.rho");
            p.rho = Param::free(o.rho, b.lo, b.hi);
        } else if (name == "nu") {
            const auto b = parse_bounds(o.nu_bounds, "kernel.nu");
            p.nu = Param::free(o.nu, b.lo, b.hi);
        } else if (name == "tau_sq") {
            const auto b = parse_bounds(o.tau_sq_bounds, "kernel.tau_sq");
            p.tau_sq = Param::free(o.tau_sq, b.lo, b.hi);
        } else {
            throw ConfigError("cannot free '" + name + "': choose from rho, nu, tau_sq");
        }
    }
    p.validate();
    return p;
}

ModelSettings settings_from(const Options& o) {
    ModelSettings s;
    s.init = kernel_from(o);
    s.k = o.k;
    s.backend = parse_backend(o.backend);
    s.hnsw = o.hnsw;
    s.batch = {o.batch_size, o.seed};
    s.optimizer.method = parse_optimizer_method(o.optimizer);
    s.optimizer.max_iterations = o.max_iterations;
    s.mean = parse_mean_kind(o.mean);
    s.smoother.bandwidth = o.bandwidth;
    s.smoother.kernel = parse_smoother_kernel(o.smoother_kernel);
    if (o.smoother_method == "automatic") s.smoother.method = SmootherMethod::automatic;
    else if (o.smoother_method == "direct") s.smoother.method = SmootherMethod::direct;
    else if (o.smoother_method == "fft") s.smoother.method = SmootherMethod::fft;
    else throw ConfigError("unknown smoother method '" + o.smoother_method + "'");
    s.level = o.level;
    return s;
}

DataSource source_from(const Options& o) {
    DataSource d;
    d.path = o.data;
    d.schema.delimiter = parse_delimiter(o.delimiter);
    d.schema.lon = o.lon_col;
    d.schema.lat = o.lat_col;
    d.schema.response = o.response_col;
    d.schema.truth = o.truth_col;
    d.schema.mask = o.mask_col;
    d.mask_file = o.mask_file;
    if (o.test_fraction < 0.0 || o.test_fraction >= 1.0) throw ConfigError("test-fraction must lie in [0, 1)");
    d.test_fraction = o.test_fraction;
    d.split_seed = o.split_seed.value_or(o.seed);
    return d;
}

struct Context {
    CLI::App& app;
    Options& o;
    std::ostream& out;
    std::string stage;

    [[nodiscard]] bool given(const std::string& name) const { return app.count(name) > 0; }

    [[nodiscard]] std::vector<std::string> config_echo() const {
        std::vector<std::string> lines;
        std::istringstream in(app.config_to_str(true, false));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line.rfind("config=", 0) == 0 || line.rfind("config =", 0) == 0) continue;
            lines.push_back(line);
        }
        return lines;
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write " + path);
    f << text;
    if (!f) throw ParseError("error writing " + path);
}

std::string params_text(const HyperParams& p) {
    return "kernel.sigma_sq = " + num(p.sigma_sq.value) + "\nkernel.rho = " + num(p.rho.value) +
           "\nkernel.nu = " + num(p.nu.value) + "\nkernel.tau_sq = " + num(p.tau_sq.value) + "\n";
}

void cmd_train(Context& c) {
    const Options& o = c.o;
    c.stage = "config";
    const ModelSettings s = settings_from(o);
    const DataSource src = source_from(o);
    c.stage = "data";
    const GridDataset d = load_source(src);
    const NormalizationTransform t = resolve_transform(o.normalize, d);
    const Problem p = make_problem(d, t);
    c.stage = "prepare";
    const Prepared prep = prepare(p, s);
    c.stage = "train";
    const std::uint64_t jitter_before = jitter_count();
    const TrainResult r = train(prep, s);
    const std::uint64_t jitters = jitter_count() - jitter_before;

    SavedModel m;
    m.source = src;
    m.normalize_mode = o.normalize;
    m.transform = t;
    m.settings = s;
    m.settings.batch.size = std::min(s.batch.size, p.train_x.rows());
    m.fitted = r.params;
    m.free = s.init.free_names();
    m.mean = prep.mean;
    m.train_n = p.train_x.rows();
    m.train_checksum = checksum(p.train_y);
    m.objective_initial = r.initial_objective();
    m.objective_final = r.final_objective();
    m.iterations = r.iterations;
    m.evaluations = r.evaluations;
    m.converged = r.converged;
    m.nn_build_s = prep.nn_build_s;
    m.train_s = prep.mean_s + r.timings.neighbors_s + r.timings.optimize_s + r.timings.sigma_s;
    m.config = c.config_echo();
    c.stage = "write model";
    write_model(m, o.model);

    c.out << "model = " << o.model << "\n"
          << "n_train = " << d.count(CellStatus::train) << "\n"
          << "n_test = " << d.count(CellStatus::test) << "\n"
          << "n_missing = " << d.count(CellStatus::missing) << "\n"
          << "mean = " << prep.mean.name() << "\n"
          << params_text(r.params) << "objective.initial = " << num(r.initial_objective()) << "\n"
          << "objective.final = " << num(r.final_objective()) << "\n"
          << "iterations = " << r.iterations << "\n"
          << "evaluations = " << r.evaluations << "\n"
          << "converged = " << (r.converged ? "true" : "false") << "\n"
          << "jitter_retries = " << jitters << "\n"
          << "time.nn_build_s = " << num(m.nn_build_s) << "\n"
          << "time.train_s = " << num(m.train_s) << "\n";
}

void check_compatible(const Context& c, const SavedModel& m) {
    const Options& o = c.o;
    auto mismatch = [](const std::string& what, const std::string& model, const std::string& asked) {
        throw CompatibilityError(what + " is " + model + " in the model but " + asked + " was requested");
    };
    if (c.given("--mean") && parse_mean_kind(o.mean) != m.settings.mean) {
        mismatch("mean", std::string(to_string(m.settings.mean)), o.mean);
    }
    if (c.given("--k") && o.k != m.settings.k) mismatch("k", std::to_string(m.settings.k), std::to_string(o.k));
    if (c.given("--backend") && parse_backend(o.backend) != m.settings.backend) {
        mismatch("backend", std::string(to_string(m.settings.backend)), o.backend);
    }
    if (c.given("--normalize") && o.normalize != m.normalize_mode) mismatch("normalization", m.normalize_mode, o.normalize);
    // Values of free parameters were only starting points; fixed ones must agree.
    auto fixed_param = [&](const std::string& name, const std::string& flag, double model, double asked) {
        if (!c.given(flag)) return;
        if (std::find(m.free.begin(), m.free.end(), name) != m.free.end()) return;
        if (model != asked) mismatch(flag.substr(2), num(model), num(asked));
    };
    fixed_param("rho", "--kernel.rho", m.fitted.rho.value, o.rho);
    fixed_param("nu", "--kernel.nu", m.fitted.nu.value, o.nu);
    fixed_param("tau_sq", "--kernel.tau_sq", m.fitted.tau_sq.value, o.tau_sq);
}

void cmd_predict(Context& c) {
    const Options& o = c.o;
    c.stage = "model";
    const SavedModel m = read_model(o.model);
    check_compatible(c, m);
    if (o.out.empty()) throw ConfigError("predict needs an output path (--out)");
    DataSource src = m.source;
    if (c.given("--data")) src = source_from(o);

    c.stage = "data";
    const GridDataset d = load_source(src);
    const Problem p = make_problem(d, m.transform);
    if (p.train_x.rows() != m.train_n || checksum(p.train_y) != m.train_checksum) {
        throw CompatibilityError("training data in " + src.path + " differ from those the model was fitted on");
    }

    std::vector<double> lon, lat;
    Locations test;
    Vector truth;
    if (!o.test.empty()) {
        const Table t = read_table(o.test, parse_delimiter(o.delimiter), {o.lon_col, o.lat_col});
        lon = t.columns.at(o.lon_col);
        lat = t.columns.at(o.lat_col);
        test.resize(static_cast<Index>(lon.size()), 2);
        for (std::size_t i = 0; i < lon.size(); ++i) {
            if (!std::isfinite(lon[i]) || !std::isfinite(lat[i])) {
                throw ParseError(o.test + ": non-finite test coordinate in data row " + std::to_string(i + 1));
            }
            const auto x = m.transform.apply(lon[i], lat[i]);
            test(static_cast<Index>(i), 0) = x[0];
            test(static_cast<Index>(i), 1) = x[1];
        }
    } else {
        for (Index cell : d.cell_ids(CellStatus::test)) {
            lon.push_back(d.lon[static_cast<std::size_t>(cell)]);
            lat.push_back(d.lat[static_cast<std::size_t>(cell)]);
        }
        test = p.test_x;
        truth = p.test_y;
    }

    c.stage = "predict";
    ModelSettings s = m.settings;
    s.level = o.level;
    const std::uint64_t jitter_before = jitter_count();
    const auto start = Clock::now();
    Prepared prep{m.mean, TrainingSet{p.train_x, m.mean.detrend(p.train_x, p.train_y)},
                  NeighborIndex::build(p.train_x, s.backend, s.hnsw)};
    const PredictionSet preds = predict(prep, m.fitted, test, s);
    const double predict_s = seconds_since(start);

    c.stage = "write predictions";
    std::ostringstream csv;
    csv << "# muygps predictions\n# model = " << o.model << "\n";
    for (const auto& line : split_list(params_text(m.fitted), '\n')) csv << "# " << line << "\n";
    csv << "# interval.level = " << num(s.level) << "\n";
    for (const auto& line : c.config_echo()) csv << "# config: " << line << "\n";
    csv << "lon,lat,mean,variance,lo,hi\n";
    for (std::size_t i = 0; i < preds.points.size(); ++i) {
        const auto& q = preds.points[i];
        csv << num(lon[i]) << ',' << num(lat[i]) << ',' << num(q.mean) << ',' << num(q.variance) << ',' << num(q.lo)
            << ',' << num(q.hi) << '\n';
    }
    write_text(o.out, csv.str());
    write_text(o.out + ".timing", "nn_build_s = " + num(m.nn_build_s) + "\ntrain_s = " + num(m.train_s) +
                                      "\npredict_s = " + num(predict_s) + "\n");
    if (!o.truth_out.empty()) {
        if (truth.size() != static_cast<Index>(lon.size()) || !truth.allFinite()) {
            throw ConfigError("--truth-out needs test cells with known truth in the data file");
        }
        std::ostringstream t;
        t << "lon,lat,truth\n";
        for (std::size_t i = 0; i < lon.size(); ++i) {
            t << num(lon[i]) << ',' << num(lat[i]) << ',' << num(truth[static_cast<Index>(i)]) << '\n';
        }
        write_text(o.truth_out, t.str());
    }
    c.out << "predictions = " << o.out << "\n"
          << "n_test = " << preds.points.size() << "\n"
          << "clamped_variances = " << preds.clamped << "\n"
          << "jitter_retries = " << jitter_count() - jitter_before << "\n"
          << "time.predict_s = " << num(predict_s) << "\n";
}

std::optional<double> comment_value(const Table& t, const std::string& key) {
    const std::string prefix = key + " = ";
    for (const auto& line : t.comments) {
        if (line.rfind(prefix, 0) == 0) return std::stod(line.substr(prefix.size()));
    }
    return std::nullopt;
}

MetricsTimings read_timings(const std::string& path) {
    MetricsTimings t;
    std::ifstream in(path);
    if (!in) return t;
    std::string key, eq;
    double v = 0.0;
    while (in >> key >> eq >> v) {
        if (key == "nn_build_s") t.nn_build_s = v;
        else if (key == "train_s") t.train_s = v;
        else if (key == "predict_s") t.predict_s = v;
    }
    return t;
}

void cmd_eval(Context& c) {
    const Options& o = c.o;
    if (o.predictions.empty() || o.truth.empty()) throw ConfigError("eval needs --predictions and --truth");
    c.stage = "read";
    const char delim = parse_delimiter(o.delimiter);
    const Table pred = read_table(o.predictions, ',', {"lon", "lat", "mean", "variance", "lo", "hi"});
    const Table truth = read_table(o.truth, delim, {o.lon_col, o.lat_col, o.eval_truth_col});
    c.stage = "align";
    if (pred.rows != truth.rows) {
        throw AlignmentError(std::to_string(pred.rows) + " predictions but " + std::to_string(truth.rows) +
                             " truth rows");
    }
    const auto& plon = pred.columns.at("lon");
    const auto& plat = pred.columns.at("lat");
    const auto& tlon = truth.columns.at(o.lon_col);
    const auto& tlat = truth.columns.at(o.lat_col);
    auto same = [](double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a)); };
    for (std::size_t i = 0; i < pred.rows; ++i) {
        if (!same(plon[i], tlon[i]) || !same(plat[i], tlat[i])) {
            throw AlignmentError("row " + std::to_string(i + 1) + ": prediction at (" + num(plon[i]) + ", " +
                                 num(plat[i]) + ") but truth at (" + num(tlon[i]) + ", " + num(tlat[i]) + ")");
        }
    }
    auto vec = [](const std::vector<double>& v) { return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()))); };
    const Vector y = vec(truth.columns.at(o.eval_truth_col));
    if (!y.allFinite()) throw ParseError(o.truth + ": truth column has missing values");

    c.stage = "metrics";
    double level = o.level;
    if (!c.given("--level")) level = comment_value(pred, "interval.level").value_or(o.level);
    MetricsReport r = evaluate(y, vec(pred.columns.at("mean")), vec(pred.columns.at("variance")),
                               vec(pred.columns.at("lo")), vec(pred.columns.at("hi")), 1.0 - level);
    r.timings = read_timings(o.predictions + ".timing");
    const std::string text = r.to_key_value() + MetricsReport::table_header() + "\n" + r.table_row() + "\n";
    c.out << text;
    if (!o.report.empty()) write_text(o.report, text);
}

void cmd_simulate(Context& c) {
    const Options& o = c.o;
    if (o.out.empty()) throw ConfigError("simulate needs an output path (--out)");
    c.stage = "config";
    SimulationSpec spec;
    spec.rows = o.rows;
    spec.cols = o.cols;
    spec.params = HyperParams::make(o.sigma_sq, o.rho, o.nu, o.tau_sq);
    spec.trend = MeanModel(ConstantMean{o.sim_mean});
    spec.seed = o.seed;
    if (o.test_fraction < 0.0 || o.test_fraction >= 1.0) throw ConfigError("test-fraction must lie in [0, 1)");
    c.stage = "simulate";
    Simulation sim = simulate_gp(spec);
    GridDataset d = std::move(sim.data);
    if (o.test_fraction > 0.0) d = mask_split(std::move(d), o.test_fraction, o.split_seed.value_or(o.seed));
    c.stage = "write";
    write_csv(d, o.out);
    if (!o.truth_out.empty()) {
        std::ostringstream t;
        t << "lon,lat,truth\n";
        for (Index cell : d.cell_ids(CellStatus::test)) {
            const auto i = static_cast<std::size_t>(cell);
            t << num(d.lon[i]) << ',' << num(d.lat[i]) << ',' << num(d.response[i]) << '\n';
        }
        write_text(o.truth_out, t.str());
    }
    c.out << "data = " << o.out << "\n"
          << "rows = " << d.rows << "\ncols = " << d.cols << "\n"
          << "n_train = " << d.count(CellStatus::train) << "\n"
          << "n_test = " << d.count(CellStatus::test) << "\n"
          << params_text(sim.truth);
}

void cmd_study(Context& c) {
    const Options& o = c.o;
    c.stage = "config";
    const ModelSettings s = settings_from(o);
    StudySpec spec;
    spec.axis = parse_study_axis(o.study_axis);
    for (const auto& v : split_list(o.study_values)) {
        const double x = to_double(v, "study.values");
        if (x != std::floor(x) || x < 1) throw ParameterError("study values must be positive integers");
        spec.values.push_back(static_cast<Index>(x));
    }
    spec.reps = o.study_reps;
    c.stage = "data";
    const GridDataset d = load_source(source_from(o));
    const Problem p = make_problem(d, resolve_transform(o.normalize, d));
    c.stage = "study";
    const std::string csv = study_csv(run_study(p, s, spec));
    if (o.out.empty()) {
        c.out << csv;
    } else {
        write_text(o.out, csv);
        c.out << "study = " << o.out << "\n";
    }
}

}  // namespace

MeanKind parse_mean_kind(std::string_view name) {
    if (name == "const" || name == "constant") return MeanKind::constant;
    if (name == "linear") return MeanKind::linear;
    if (name == "smoother") return MeanKind::smoother;
    throw ConfigError("unknown mean model '" + std::string(name) + "' (expected const, linear or smoother)");
}

std::string_view to_string(MeanKind kind) {
    switch (kind) {
        case MeanKind::constant: return "const";
        case MeanKind::linear: return "linear";
        case MeanKind::smoother: return "smoother";
    }
    return "?";
}

Problem make_problem(const GridDataset& data, const NormalizationTransform& transform) {
    data.validate();
    Problem p;
    const auto train_ids = data.cell_ids(CellStatus::train);
    const auto test_ids = data.cell_ids(CellStatus::test);
    p.train_x = normalize(data, transform, train_ids);
    p.train_y = data.responses(CellStatus::train);
    p.test_x = normalize(data, transform, test_ids);
    p.test_y = data.responses(CellStatus::test);
    try {
        p.grid = grid_spec(data, transform);
    } catch (const StructureError&) {
        p.grid.reset();  // only the smoother needs it
    }
    p.grid_values.assign(static_cast<std::size_t>(data.cells()), 0.0);
    p.grid_observed.assign(static_cast<std::size_t>(data.cells()), 0);
    for (Index id : train_ids) {
        p.grid_values[static_cast<std::size_t>(id)] = data.response[static_cast<std::size_t>(id)];
        p.grid_observed[static_cast<std::size_t>(id)] = 1;
    }
    return p;
}

MeanModel fit_mean(const Problem& problem, const ModelSettings& settings) {
    switch (settings.mean) {
        case MeanKind::constant: return fit_constant(problem.train_y);
        case MeanKind::linear: return fit_linear(problem.train_x, problem.train_y);
        case MeanKind::smoother:
            if (!problem.grid) throw StructureError("the smoother mean needs evenly spaced grid coordinates");
            return fit_smoother(*problem.grid, problem.grid_values, problem.grid_observed, settings.smoother);
    }
    throw ConfigError("unknown mean model");
}

Prepared prepare(const Problem& problem, const ModelSettings& settings) {
    auto start = Clock::now();
    MeanModel mean = fit_mean(problem, settings);
    TrainingSet train{problem.train_x, mean.detrend(problem.train_x, problem.train_y)};
    const double mean_s = seconds_since(start);
    start = Clock::now();
    NeighborIndex index = NeighborIndex::build(problem.train_x, settings.backend, settings.hnsw);
    return {std::move(mean), std::move(train), std::move(index), mean_s, seconds_since(start)};
}

TrainResult train(const Prepared& prepared, const ModelSettings& settings) {
    BatchSpec batch = settings.batch;
    batch.size = std::min(batch.size, prepared.train.size());
    return optimize(prepared.train, prepared.index, batch, settings.k, settings.init, settings.optimizer);
}

PredictionSet predict(const Prepared& prepared, const HyperParams& fitted, const Locations& test,
                      const ModelSettings& settings) {
    const NnPredictor predictor(prepared.train, prepared.index, settings.k, fitted, &prepared.mean,
                                PredictOptions{settings.level});
    return predictor.predict(test);
}

StudyAxis parse_study_axis(std::string_view name) {
    if (name == "batch_size" || name == "batch-size" || name == "b") return StudyAxis::batch_size;
    if (name == "k") return StudyAxis::k;
    throw ParameterError("unknown study axis '" + std::string(name) + "' (expected batch_size or k)");
}

std::string_view to_string(StudyAxis axis) {
    return axis == StudyAxis::k ? "k" : "batch_size";
}

std::vector<StudyRow> run_study(const Problem& problem, const ModelSettings& settings, const StudySpec& spec) {
    if (spec.values.empty()) throw ParameterError("study needs at least one axis value");
    if (spec.reps < 1) throw ParameterError("study needs at least one repetition");
    if (problem.test_y.size() == 0 || !problem.test_y.allFinite()) {
        throw InsufficientDataError("study needs test cells with known truth");
    }
    const Prepared prep = prepare(problem, settings);
    std::vector<StudyRow> rows;
    for (Index value : spec.values) {
        StudyRow row;
        row.axis = spec.axis;
        row.value = value;
        for (int rep = 0; rep < spec.reps; ++rep) {
            ModelSettings s = settings;
            if (spec.axis == StudyAxis::batch_size) s.batch.size = value;
            else s.k = static_cast<std::size_t>(value);
            s.batch.seed = settings.batch.seed + static_cast<std::uint64_t>(rep);
            const auto start = Clock::now();
            const TrainResult r = train(prep, s);
            const PredictionSet preds = predict(prep, r.params, problem.test_x, s);
            row.time_s.push_back(seconds_since(start));
            row.rmse.push_back(rmse(problem.test_y, preds.means()));
        }
        const auto n = static_cast<double>(row.rmse.size());
        row.rmse_mean = std::accumulate(row.rmse.begin(), row.rmse.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : row.rmse) ss += (v - row.rmse_mean) * (v - row.rmse_mean);
        row.rmse_std = row.rmse.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        row.rmse_q025 = quantile(row.rmse, 0.025);
        row.rmse_q975 = quantile(row.rmse, 0.975);
        row.rmse_q05 = quantile(row.rmse, 0.05);
        row.rmse_q95 = quantile(row.rmse, 0.95);
        row.time_mean_s = std::accumulate(row.time_s.begin(), row.time_s.end(), 0.0) / n;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string study_csv(const std::vector<StudyRow>& rows) {
    std::string s = "axis,value,reps,rmse_mean,rmse_std,rmse_q025,rmse_q975,rmse_q05,rmse_q95,time_mean_s\n";
    for (const auto& r : rows) {
        s += std::string(to_string(r.axis)) + "," + std::to_string(r.value) + "," + std::to_string(r.rmse.size()) + "," +
             num(r.rmse_mean) + "," + num(r.rmse_std) + "," + num(r.rmse_q025) + "," + num(r.rmse_q975) + "," +
             num(r.rmse_q05) + "," + num(r.rmse_q95) + "," + num(r.time_mean_s) + "\n";
    }
    return s;
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
        dynamic_cast<const CompatibilityError*>(&e)) {
        return 2;
    }
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const StructureError*>(&e) ||
        dynamic_cast<const InsufficientDataError*>(&e) || dynamic_cast<const AlignmentError*>(&e) ||
        dynamic_cast<const ShapeError*>(&e) || dynamic_cast<const DegenerateDesignError*>(&e)) {
        return 3;
    }
    if (dynamic_cast<const SingularityError*>(&e) || dynamic_cast<const NumericalError*>(&e) ||
        dynamic_cast<const StateError*>(&e)) {
        return 4;
    }
    return 1;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nearest-neighbor Gaussian process regression on gridded spatial data", "muygps"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file; command-line flags override its values");
    app.config_formatter(std::make_shared<FlatToml>());
    app.set_version_flag("--version", "muygps 1.0");

    Options o;
    // data
    app.add_option("--data", o.data, "Gridded data CSV")->group("Data");
    app.add_option("--delimiter", o.delimiter, "Field delimiter: comma, tab, semicolon, space, pipe or one character")
        ->capture_default_str()->group("Data");
    app.add_option("--lon-col", o.lon_col, "Longitude column")->capture_default_str()->group("Data");
    app.add_option("--lat-col", o.lat_col, "Latitude column")->capture_default_str()->group("Data");
    app.add_option("--response-col", o.response_col, "Response column")->capture_default_str()->group("Data");
    app.add_option("--truth-col", o.truth_col, "Column with held-out truth where the response is NA")->group("Data");
    app.add_option("--mask-col", o.mask_col, "0/1 column, 1 holds a cell out for testing")->group("Data");
    app.add_option("--mask-file", o.mask_file, "Grid-shaped 0/1 CSV, 1 marks test cells")->group("Data");
    app.add_option("--test-fraction", o.test_fraction, "Hold out this fraction of observed cells at random")
        ->capture_default_str()->group("Data");
    app.add_option("--split-seed", o.split_seed, "Seed of the random hold-out (default: --seed)")->group("Data");
    app.add_option("--normalize", o.normalize, "Coordinate normalization: fit, heaton or none")
        ->capture_default_str()->group("Data");
    // kernel
    app.add_option("--kernel.sigma_sq", o.sigma_sq, "Variance scale (simulate only; trained models estimate it)")
        ->capture_default_str()->group("Kernel");
    app.add_option("--kernel.rho", o.rho, "Length scale, or its starting value when free")
        ->capture_default_str()->check(CLI::PositiveNumber)->group("Kernel");
    app.add_option("--kernel.nu", o.nu, "Smoothness, or its starting value when free")
        ->capture_default_str()->check(CLI::PositiveNumber)->group("Kernel");
    app.add_option("--kernel.tau_sq", o.tau_sq, "Relative nugget, or its starting value when free")
        ->capture_default_str()->group("Kernel");
    app.add_option("--kernel.free", o.free, "Comma-separated parameters to fit (rho, nu, tau_sq) or none")
        ->capture_default_str()->group("Kernel");
    app.add_option("--kernel.rho_bounds", o.rho_bounds, "lo,hi")->capture_default_str()->group("Kernel");
    app.add_option("--kernel.nu_bounds", o.nu_bounds, "lo,hi")->capture_default_str()->group("Kernel");
    app.add_option("--kernel.tau_sq_bounds", o.tau_sq_bounds, "lo,hi")->capture_default_str()->group("Kernel");
    // model
    app.add_option("--k", o.k, "Nearest neighbors per prediction")->capture_default_str()->group("Model");
    app.add_option("--backend", o.backend, "Neighbor search: exact or approximate")->capture_default_str()->group("Model");
    app.add_option("--hnsw.degree", o.hnsw.degree)->capture_default_str()->group("Model");
    app.add_option("--hnsw.ef_construction", o.hnsw.ef_construction)->capture_default_str()->group("Model");
    app.add_option("--hnsw.ef_search", o.hnsw.ef_search)->capture_default_str()->group("Model");
    app.add_option("--hnsw.seed", o.hnsw.seed)->capture_default_str()->group("Model");
    app.add_option("--batch-size", o.batch_size, "Training batch size")->capture_default_str()->group("Model");
    app.add_option("--seed", o.seed, "Seed for batches, splits and simulation")->capture_default_str()->group("Model");
    app.add_option("--optimizer", o.optimizer, "quasi_newton or golden")->capture_default_str()->group("Model");
    app.add_option("--max-iter", o.max_iterations, "Optimizer iteration cap")->capture_default_str()->group("Model");
    app.add_option("--mean", o.mean, "Mean model: const, linear or smoother")
        ->capture_default_str()->check(CLI::IsMember({"const", "constant", "linear", "smoother"}))->group("Model");
    app.add_option("--smoother.bandwidth", o.bandwidth, "Smoother bandwidth in grid cells")
        ->capture_default_str()->group("Model");
    app.add_option("--smoother.kernel", o.smoother_kernel, "exponential or gaussian")->capture_default_str()->group("Model");
    app.add_option("--smoother.method", o.smoother_method, "automatic, direct or fft")->capture_default_str()->group("Model");
    app.add_option("--level", o.level, "Nominal coverage of prediction intervals")->capture_default_str()->group("Model");
    app.add_option("--workers", o.workers, "Worker threads (0: runtime default)")
        ->capture_default_str()->check(CLI::NonNegativeNumber)->group("Model");
    // files
    app.add_option("--model", o.model, "Model file written by train, read by predict")->capture_default_str()->group("Files");
    app.add_option("--out", o.out, "Output file")->group("Files");
    app.add_option("--truth-out", o.truth_out, "Also write lon,lat,truth of the test cells here")->group("Files");
    app.add_option("--test", o.test, "CSV of test locations (default: the data file's test cells)")->group("Files");
    app.add_option("--predictions", o.predictions, "Predictions CSV to evaluate")->group("Files");
    app.add_option("--truth", o.truth, "Truth CSV to evaluate against")->group("Files");
    app.add_option("--eval.truth-col", o.eval_truth_col, "Truth column of --truth")->capture_default_str()->group("Files");
    app.add_option("--report", o.report, "Also write the evaluation report here")->group("Files");
    // simulate and study
    app.add_option("--rows", o.rows, "Simulated grid rows")->capture_default_str()->group("Simulate");
    app.add_option("--cols", o.cols, "Simulated grid columns")->capture_default_str()->group("Simulate");
    app.add_option("--sim.mean", o.sim_mean, "Constant mean of simulated responses")->capture_default_str()->group("Simulate");
    app.add_option("--study.axis", o.study_axis, "batch_size or k")->capture_default_str()->group("Study");
    app.add_option("--study.values", o.study_values, "Comma-separated axis values")->capture_default_str()->group("Study");
    app.add_option("--study.reps", o.study_reps, "Repetitions per value")->capture_default_str()->group("Study");

    auto* train_cmd = app.add_subcommand("train", "Fit hyperparameters and write a model file");
    auto* predict_cmd = app.add_subcommand("predict", "Predict at test locations with a model file");
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against truth");
    auto* simulate_cmd = app.add_subcommand("simulate", "Draw a synthetic GP dataset");
    auto* study_cmd = app.add_subcommand("study", "Sweep batch size or k and report RMSE and time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "muygps: " << e.what() << "\n";
        return 2;
    }

    std::string name = app.get_subcommands().front()->get_name();
    Context c{app, o, out, "setup"};
    try {
        if (o.workers > 0) omp_set_num_threads(o.workers);
        if (*train_cmd) cmd_train(c);
        else if (*predict_cmd) cmd_predict(c);
        else if (*eval_cmd) cmd_eval(c);
        else if (*simulate_cmd) cmd_simulate(c);
        else if (*study_cmd) cmd_study(c);
    } catch (const std::exception& e) {
        err << "muygps " << name << ": " << c.stage << ": " << e.what() << "\n";
        return exit_code(e);
    }
    return 0;
}

}  // namespace muygps::cli
