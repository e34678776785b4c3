#include "muygps/data.hpp"

#include "muygps/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

namespace muygps {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

bool is_na(std::string_view s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null" || s == "NULL";
}

double parse_number(std::string_view s, std::string_view column, std::size_t line) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ParseError("cannot parse '" + std::string(s) + "' in column " + std::string(column), line);
    }
    return v;
}

std::size_t column_of(const std::vector<std::string>& header, const std::string& name, bool required) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        if (required) throw ParseError("missing column '" + name + "'", 1);
        return std::numeric_limits<std::size_t>::max();
    }
    return static_cast<std::size_t>(it - header.begin());
}

struct Row {
    double lon, lat, response, truth;
    int mask;
};

// Sorted distinct values and, for each input value, its position among them.
std::vector<double> distinct(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

Index position(const std::vector<double>& sorted, double v) {
    return static_cast<Index>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
}

void check_even(const std::vector<double>& values, double origin, double step, const char* axis) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double expect = origin + static_cast<double>(i) * step;
        if (std::abs(values[i] - expect) > 1e-6 * std::abs(step)) {
            throw StructureError(std::string(axis) + " values are not evenly spaced");
        }
    }
}

}  // namespace

Index GridDataset::count(CellStatus s) const {
    return static_cast<Index>(std::count(status.begin(), status.end(), s));
}

std::vector<Index> GridDataset::cell_ids(CellStatus s) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < status.size(); ++i) {
        if (status[i] == s) out.push_back(static_cast<Index>(i));
    }
    return out;
}

Vector GridDataset::responses(CellStatus s) const {
    const auto ids = cell_ids(s);
    Vector out(static_cast<Index>(ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j) out[static_cast<Index>(j)] = response[static_cast<std::size_t>(ids[j])];
    return out;
}

void GridDataset::validate() const {
    if (rows < 1 || cols < 1) throw StructureError("grid must have at least one row and column");
    const auto n = static_cast<std::size_t>(cells());
    if (lon.size() != n || lat.size() != n || response.size() != n || status.size() != n) {
        throw StructureError("per-cell arrays do not match the grid size");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(lon[i]) || !std::isfinite(lat[i])) {
            throw StructureError("non-finite coordinate at cell " + std::to_string(i));
        }
        if (status[i] != CellStatus::missing && !std::isfinite(response[i])) {
            throw StructureError("observed cell " + std::to_string(i) + " has no finite response");
        }
    }
}

GridDataset parse_csv(std::istream& in, const CsvSchema& schema, const std::string& provenance) {
    std::string text;
    if (!std::getline(in, text)) throw ParseError("empty input: header row required", 1);
    std::vector<std::string> header;
    for (auto f : split(text, schema.delimiter)) header.emplace_back(f);
    // A UTF-8 byte order mark would otherwise hide the first column name.
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

    const std::size_t c_lon = column_of(header, schema.lon, true);
    const std::size_t c_lat = column_of(header, schema.lat, true);
    const std::size_t c_resp = column_of(header, schema.response, true);
    const std::size_t c_truth = schema.truth.empty() ? SIZE_MAX : column_of(header, schema.truth, true);
    const std::size_t c_mask = schema.mask.empty() ? SIZE_MAX : column_of(header, schema.mask, true);

    std::vector<Row> rows;
    std::size_t line = 1;
    while (std::getline(in, text)) {
        ++line;
        if (trim(text).empty() || text[0] == '#') continue;
        const auto fields = split(text, schema.delimiter);
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line);
        }
        Row r{};
        if (is_na(fields[c_lon]) || is_na(fields[c_lat])) throw ParseError("missing coordinate", line);
        r.lon = parse_number(fields[c_lon], schema.lon, line);
        r.lat = parse_number(fields[c_lat], schema.lat, line);
        if (!std::isfinite(r.lon) || !std::isfinite(r.lat)) throw ParseError("non-finite coordinate", line);
        r.response = is_na(fields[c_resp]) ? nan : parse_number(fields[c_resp], schema.response, line);
        if (std::isinf(r.response)) throw ParseError("infinite response", line);
        r.truth = nan;
        if (c_truth != SIZE_MAX && !is_na(fields[c_truth])) {
            r.truth = parse_number(fields[c_truth], schema.truth, line);
            if (std::isinf(r.truth)) throw ParseError("infinite truth value", line);
        }
        r.mask = 0;
        if (c_mask != SIZE_MAX) {
            const double m = is_na(fields[c_mask]) ? 0.0 : parse_number(fields[c_mask], schema.mask, line);
            if (m != 0.0 && m != 1.0) throw ParseError("mask values must be 0 or 1", line);
            r.mask = static_cast<int>(m);
        }
        rows.push_back(r);
    }
    if (rows.empty()) throw InsufficientDataError("no data rows in " + provenance);

    std::vector<double> lons(rows.size()), lats(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        lons[i] = rows[i].lon;
        lats[i] = rows[i].lat;
    }
    const auto ux = distinct(lons);
    const auto uy = distinct(lats);

    GridDataset d;
    d.rows = static_cast<Index>(uy.size());
    d.cols = static_cast<Index>(ux.size());
    d.provenance = provenance;
    if (static_cast<std::size_t>(d.cells()) != rows.size()) {
        throw StructureError(std::to_string(rows.size()) + " rows do not fill a " + std::to_string(d.rows) + " x " +
                             std::to_string(d.cols) + " grid");
    }
    const auto n = rows.size();
    d.lon.assign(n, nan);
    d.lat.assign(n, nan);
    d.response.assign(n, nan);
    d.status.assign(n, CellStatus::missing);
    std::vector<bool> seen(n, false);
    for (const Row& r : rows) {
        const auto cell = static_cast<std::size_t>(position(uy, r.lat) * d.cols + position(ux, r.lon));
        if (seen[cell]) throw StructureError("duplicate grid cell at lon " + std::to_string(r.lon) + ", lat " +
                                             std::to_string(r.lat));
        seen[cell] = true;
        d.lon[cell] = r.lon;
        d.lat[cell] = r.lat;
        if (c_mask != SIZE_MAX) {
            if (std::isfinite(r.response)) {
                d.response[cell] = r.response;
                d.status[cell] = r.mask ? CellStatus::test : CellStatus::train;
            } else if (r.mask && std::isfinite(r.truth)) {
                d.response[cell] = r.truth;
                d.status[cell] = CellStatus::test;
            }
        } else if (std::isfinite(r.response)) {
            d.response[cell] = r.response;
            d.status[cell] = CellStatus::train;
        } else if (std::isfinite(r.truth)) {
            d.response[cell] = r.truth;
            d.status[cell] = CellStatus::test;
        }
    }
    d.validate();
    return d;
}

GridDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return parse_csv(in, schema, path);
}

void write_csv(const GridDataset& data, const std::string& path) {
    data.validate();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ParseError("cannot write " + path);
    std::fprintf(f, "lon,lat,response,mask\n");
    for (std::size_t i = 0; i < data.status.size(); ++i) {
        if (data.status[i] == CellStatus::missing) {
            std::fprintf(f, "%.17g,%.17g,NA,0\n", data.lon[i], data.lat[i]);
        } else {
            std::fprintf(f, "%.17g,%.17g,%.17g,%d\n", data.lon[i], data.lat[i], data.response[i],
                         data.status[i] == CellStatus::test ? 1 : 0);
        }
    }
    if (std::fclose(f) != 0) throw ParseError("error writing " + path);
}

NormalizationTransform NormalizationTransform::heaton() {
    return {218.0, 218.0, 464.0};
}

NormalizationTransform NormalizationTransform::fit(const GridDataset& data) {
    data.validate();
    const auto [lon_lo, lon_hi] = std::minmax_element(data.lon.begin(), data.lon.end());
    const auto [lat_lo, lat_hi] = std::minmax_element(data.lat.begin(), data.lat.end());
    double scale = std::max(*lon_hi - *lon_lo, *lat_hi - *lat_lo);
    if (!(scale > 0.0)) scale = 1.0;
    return {0.0 - *lon_lo, 0.0 - *lat_lo, scale};
}

void NormalizationTransform::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("normalization scale must be positive");
    if (!std::isfinite(offset_x) || !std::isfinite(offset_y)) throw ParameterError("normalization offsets must be finite");
}

std::array<double, 2> NormalizationTransform::apply(double lon, double lat) const {
    return {(lon + offset_x) / scale, (lat + offset_y) / scale};
}

std::array<double, 2> NormalizationTransform::invert(double x, double y) const {
    return {x * scale - offset_x, y * scale - offset_y};
}

Locations normalize(const GridDataset& data, const NormalizationTransform& t, const std::vector<Index>& cells) {
    t.validate();
    Locations out(static_cast<Index>(cells.size()), 2);
    for (std::size_t j = 0; j < cells.size(); ++j) {
        const Index c = cells[j];
        if (c < 0 || c >= data.cells()) throw ParameterError("cell id out of range");
        const auto i = static_cast<std::size_t>(c);
        if (!std::isfinite(data.lon[i]) || !std::isfinite(data.lat[i])) {
            throw ParameterError("non-finite coordinate at cell " + std::to_string(c));
        }
        const auto p = t.apply(data.lon[i], data.lat[i]);
        out(static_cast<Index>(j), 0) = p[0];
        out(static_cast<Index>(j), 1) = p[1];
    }
    return out;
}

Locations normalize(const GridDataset& data, const NormalizationTransform& t) {
    std::vector<Index> all(static_cast<std::size_t>(data.cells()));
    std::iota(all.begin(), all.end(), Index{0});
    return normalize(data, t, all);
}

GridSpec grid_spec(const GridDataset& data, const NormalizationTransform& t) {
    data.validate();
    t.validate();
    std::vector<double> xs(static_cast<std::size_t>(data.cols)), ys(static_cast<std::size_t>(data.rows));
    for (Index c = 0; c < data.cols; ++c) xs[static_cast<std::size_t>(c)] = t.apply(data.lon[static_cast<std::size_t>(c)], 0.0)[0];
    for (Index r = 0; r < data.rows; ++r) {
        ys[static_cast<std::size_t>(r)] = t.apply(0.0, data.lat[static_cast<std::size_t>(r * data.cols)])[1];
    }
    GridSpec g;
    g.rows = data.rows;
    g.cols = data.cols;
    g.x0 = xs.front();
    g.y0 = ys.front();
    g.dx = data.cols > 1 ? (xs.back() - xs.front()) / static_cast<double>(data.cols - 1) : 1.0;
    g.dy = data.rows > 1 ? (ys.back() - ys.front()) / static_cast<double>(data.rows - 1) : 1.0;
    check_even(xs, g.x0, g.dx, "longitude");
    check_even(ys, g.y0, g.dy, "latitude");
    return g;
}

Simulation simulate_gp(const SimulationSpec& spec) {
    if (spec.rows < 1 || spec.cols < 1) throw ParameterError("simulation grid must be at least 1 x 1");
    if (spec.rows * spec.cols > max_simulation_cells) {
        throw ParameterError("simulation grid of " + std::to_string(spec.rows * spec.cols) + " cells exceeds the cap of " +
                             std::to_string(max_simulation_cells));
    }
    spec.params.validate();
    if (!spec.trend.fitted()) throw StateError("simulation trend is not set");

    GridDataset d;
    d.rows = spec.rows;
    d.cols = spec.cols;
    d.provenance = "simulate_gp(seed=" + std::to_string(spec.seed) + ")";
    const Index n = d.cells();
    const Index side = std::max(spec.rows, spec.cols);
    const double h = side > 1 ? 1.0 / static_cast<double>(side - 1) : 1.0;
    d.lon.resize(static_cast<std::size_t>(n));
    d.lat.resize(static_cast<std::size_t>(n));
    Locations x(n, 2);
    for (Index r = 0; r < spec.rows; ++r) {
        for (Index c = 0; c < spec.cols; ++c) {
            const Index i = r * spec.cols + c;
            d.lon[static_cast<std::size_t>(i)] = x(i, 0) = static_cast<double>(c) * h;
            d.lat[static_cast<std::size_t>(i)] = x(i, 1) = static_cast<double>(r) * h;
        }
    }

    const Eigen::LLT<Matrix> llt(local_covariance(x, MaternKernel(spec.params)));
    if (llt.info() != Eigen::Success) throw SingularityError("simulation covariance is not positive definite", 0);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal;
    Vector z(n);
    for (Index i = 0; i < n; ++i) z[i] = normal(rng);
    const Vector y = llt.matrixL() * z + spec.trend.evaluate(x);

    d.response.assign(y.data(), y.data() + n);
    d.status.assign(static_cast<std::size_t>(n), CellStatus::train);
    return {std::move(d), spec.params};
}

GridDataset mask_split(GridDataset data, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("test fraction must lie in (0, 1)");
    data.validate();
    std::vector<Index> observed;
    for (std::size_t i = 0; i < data.status.size(); ++i) {
        if (data.status[i] != CellStatus::missing) observed.push_back(static_cast<Index>(i));
    }
    const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(observed.size())));
    std::mt19937_64 rng(seed);
    for (std::size_t j = 0; j < n_test && j + 1 < observed.size(); ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, observed.size() - 1);
        std::swap(observed[j], observed[pick(rng)]);
    }
    for (std::size_t j = 0; j < observed.size(); ++j) {
        data.status[static_cast<std::size_t>(observed[j])] = j < n_test ? CellStatus::test : CellStatus::train;
    }
    return data;
}

GridDataset apply_mask(GridDataset data, const std::vector<std::uint8_t>& mask) {
    data.validate();
    if (static_cast<Index>(mask.size()) != data.cells()) {
        throw StructureError("mask has " + std::to_string(mask.size()) + " cells, grid has " +
                             std::to_string(data.cells()));
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (data.status[i] == CellStatus::missing) continue;
        data.status[i] = mask[i] ? CellStatus::test : CellStatus::train;
    }
    return data;
}

std::vector<std::uint8_t> load_mask_csv(const std::string& path, Index rows, Index cols) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(rows * cols));
    std::string text;
    std::size_t line = 0;
    Index seen_rows = 0;
    while (std::getline(in, text)) {
        ++line;
        if (trim(text).empty()) continue;
        const auto fields = split(text, ',');
        if (static_cast<Index>(fields.size()) != cols) {
            throw StructureError("mask row " + std::to_string(line) + " has " + std::to_string(fields.size()) +
                                 " values, grid has " + std::to_string(cols) + " columns");
        }
        for (auto f : fields) {
            if (f == "0") out.push_back(0);
            else if (f == "1") out.push_back(1);
            else throw ParseError("mask values must be 0 or 1", line);
        }
        ++seen_rows;
    }
    if (seen_rows != rows) {
        throw StructureError("mask has " + std::to_string(seen_rows) + " rows, grid has " + std::to_string(rows));
    }
    return out;
}

}  // namespace muygps
