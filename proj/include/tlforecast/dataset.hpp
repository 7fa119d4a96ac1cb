#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tlforecast/errors.hpp"
#include "tlforecast/numkernel.hpp"

namespace tlf {

// ============================================================================
// Calendar dates
// ============================================================================

/// A calendar day, stored as days since 1970-01-01. Proleptic Gregorian,
/// no time-of-day: the data cadence is one record per day.
struct Date {
    std::int64_t days = 0;

    friend auto operator<=>(const Date&, const Date&) = default;
    Date next() const { return {days + 1}; }
};

namespace detail {

// Howard Hinnant's civil-from-days / days-from-civil algorithms.
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

}  // namespace detail

inline Date make_date(int year, int month, int day) {
    return {detail::days_from_civil(year, month, day)};
}

/// Strict ISO-8601 YYYY-MM-DD.
inline std::optional<Date> try_parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    auto y = num(0, 4), m = num(5, 2), d = num(8, 2);
    if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1 || *d > 31) return std::nullopt;
    return make_date(*y, *m, *d);
}

inline std::string format_date(Date date) {
    int y, m, d;
    detail::civil_from_days(date.days, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
}

// ============================================================================
// TimeSeriesDataset
// ============================================================================

/// Missing observations are stored as quiet NaN; there are no silent zeros.
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

/// Daily multi-feature series. Dates are strictly increasing with exact
/// daily cadence: calendar gaps are materialized as all-missing rows.
/// Immutable after construction; freely shareable read-only.
struct TimeSeriesDataset {
    std::vector<std::string> feature_names;
    std::vector<Date> dates;
    std::vector<std::vector<double>> rows;  // rows[i] has feature_names.size() entries

    std::size_t size() const { return rows.size(); }
    std::size_t feature_count() const { return feature_names.size(); }

    std::size_t feature_index(std::string_view name) const {
        for (std::size_t i = 0; i < feature_names.size(); ++i)
            if (feature_names[i] == name) return i;
        throw ConfigError("unknown feature '" + std::string(name) + "'");
    }

    bool has_feature(std::string_view name) const {
        return std::find(feature_names.begin(), feature_names.end(), name) !=
               feature_names.end();
    }

    /// First `count` records, same features.
    TimeSeriesDataset prefix(std::size_t count) const {
        TimeSeriesDataset out;
        out.feature_names = feature_names;
        out.dates.assign(dates.begin(), dates.begin() + std::min(count, dates.size()));
        out.rows.assign(rows.begin(), rows.begin() + std::min(count, rows.size()));
        return out;
    }
};

// ============================================================================
// CSV ingestion
// ============================================================================

struct CsvSchema {
    std::string date_column = "date";
    /// Empty: take every non-date column. Otherwise: require and keep
    /// exactly these columns, in this order.
    std::vector<std::string> feature_columns;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline bool is_missing_token(const std::string& cell) {
    if (cell.empty()) return true;
    std::string low;
    for (char c : cell) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return low == "na" || low == "nan";
}

/// Unparseable cells become missing markers.
inline double parse_cell(const std::string& raw) {
    const std::string cell = trim(raw);
    if (is_missing_token(cell)) return missing_value();
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return missing_value();
    return v;
}

}  // namespace detail

/// Loads a daily CSV (header `date,<feature>,...`, ISO dates). Rows are
/// sorted by date, duplicate dates rejected, calendar gaps densified into
/// all-missing rows.
inline TimeSeriesDataset load_csv(const std::string& path, const CsvSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw CsvError(CsvError::Kind::missing_file, "cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line))
        throw CsvError(CsvError::Kind::malformed_header, path + ": empty file");
    auto header = detail::split_csv_line(line);
    for (auto& h : header) h = detail::trim(h);

    std::size_t date_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == schema.date_column) date_col = i;
    if (date_col == header.size())
        throw CsvError(CsvError::Kind::malformed_header,
                       path + ": header lacks date column '" + schema.date_column + "'");

    // map dataset feature order -> csv column index
    std::vector<std::string> feature_names;
    std::vector<std::size_t> feature_cols;
    if (schema.feature_columns.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i == date_col) continue;
            if (header[i].empty())
                throw CsvError(CsvError::Kind::malformed_header, path + ": empty column name");
            feature_names.push_back(header[i]);
            feature_cols.push_back(i);
        }
    } else {
        for (const auto& want : schema.feature_columns) {
            auto it = std::find(header.begin(), header.end(), want);
            if (it == header.end())
                throw CsvError(CsvError::Kind::malformed_header,
                               path + ": header lacks feature column '" + want + "'");
            feature_names.push_back(want);
            feature_cols.push_back(static_cast<std::size_t>(it - header.begin()));
        }
    }
    if (feature_names.empty())
        throw CsvError(CsvError::Kind::malformed_header, path + ": no feature columns");
    {
        auto sorted = feature_names;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw CsvError(CsvError::Kind::malformed_header, path + ": duplicate column name");
    }

    std::map<Date, std::vector<double>> by_date;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() > header.size())
            throw CsvError(CsvError::Kind::malformed_row,
                           path + ":" + std::to_string(line_no) + ": more cells than header columns");
        cells.resize(header.size());  // short rows: absent cells are missing

        auto date = try_parse_date(detail::trim(cells[date_col]));
        if (!date)
            throw CsvError(CsvError::Kind::malformed_row,
                           path + ":" + std::to_string(line_no) + ": unparseable date '" +
                               detail::trim(cells[date_col]) + "'");
        if (by_date.count(*date))
            throw CsvError(CsvError::Kind::duplicate_timestamp,
                           path + ":" + std::to_string(line_no) + ": duplicate date " +
                               format_date(*date));

        std::vector<double> row(feature_names.size());
        for (std::size_t f = 0; f < feature_cols.size(); ++f)
            row[f] = detail::parse_cell(cells[feature_cols[f]]);
        by_date.emplace(*date, std::move(row));
    }
    if (by_date.empty())
        throw CsvError(CsvError::Kind::malformed_header, path + ": no data rows");

    TimeSeriesDataset ds;
    ds.feature_names = std::move(feature_names);
    const Date first = by_date.begin()->first;
    const Date last = by_date.rbegin()->first;
    for (Date d = first; d <= last; d = d.next()) {
        ds.dates.push_back(d);
        auto it = by_date.find(d);
        if (it != by_date.end())
            ds.rows.push_back(std::move(it->second));
        else
            ds.rows.emplace_back(ds.feature_names.size(), missing_value());
    }
    return ds;
}

inline void write_csv(const TimeSeriesDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CsvError(CsvError::Kind::missing_file, "cannot write CSV file: " + path);
    out << "date";
    for (const auto& name : ds.feature_names) out << ',' << name;
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << format_date(ds.dates[i]);
        for (double v : ds.rows[i]) {
            out << ',';
            if (!is_missing(v)) out << v;
        }
        out << '\n';
    }
}

// ============================================================================
// Imputation
// ============================================================================

/// Forward-fills missing runs of length <= max_gap from the last observed
/// value, per feature. Longer runs and leading gaps are left missing; the
/// windower will drop samples touching them.
inline TimeSeriesDataset impute(const TimeSeriesDataset& ds, std::size_t max_gap) {
    TimeSeriesDataset out = ds;
    const std::size_t n = out.size();
    for (std::size_t f = 0; f < out.feature_count(); ++f) {
        std::size_t i = 0;
        while (i < n) {
            if (!is_missing(out.rows[i][f])) {
                ++i;
                continue;
            }
            std::size_t run_end = i;
            while (run_end < n && is_missing(out.rows[run_end][f])) ++run_end;
            const std::size_t run_len = run_end - i;
            if (i > 0 && run_len <= max_gap) {
                const double fill = out.rows[i - 1][f];
                for (std::size_t j = i; j < run_end; ++j) out.rows[j][f] = fill;
            }
            i = run_end;
        }
    }
    return out;
}

// ============================================================================
// Min-max rescaling
// ============================================================================

/// Per-feature affine map of the training range onto [r_min, r_max]:
///   x_std    = (x - x_min) / (x_max - x_min)
///   x_scaled = x_std * (r_max - r_min) + r_min
/// Out-of-range inputs extrapolate linearly; nothing is clamped.
struct ScalerParams {
    std::vector<std::string> feature_names;
    std::vector<double> x_min, x_max;
    double r_min = 0.0;
    double r_max = 1.0;

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < feature_names.size(); ++i)
            if (feature_names[i] == name) return i;
        throw ConfigError("scaler: unknown feature '" + std::string(name) + "'");
    }

    friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

/// Fits per-feature min/max over the non-missing values of the given slice
/// (leakage rule: callers must pass the training portion only).
inline ScalerParams fit_scaler(const TimeSeriesDataset& train_slice, double r_min = 0.0,
                               double r_max = 1.0) {
    if (train_slice.size() == 0) throw ScalerError("fit_scaler: empty training slice");
    if (!(r_max > r_min)) throw ScalerError("fit_scaler: requires r_max > r_min");

    ScalerParams p;
    p.feature_names = train_slice.feature_names;
    p.r_min = r_min;
    p.r_max = r_max;
    p.x_min.assign(train_slice.feature_count(), 0.0);
    p.x_max.assign(train_slice.feature_count(), 0.0);

    for (std::size_t f = 0; f < train_slice.feature_count(); ++f) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& row : train_slice.rows) {
            const double v = row[f];
            if (is_missing(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(hi > lo))
            throw ScalerError("fit_scaler: feature '" + train_slice.feature_names[f] +
                              "' has fewer than two distinct observed values");
        p.x_min[f] = lo;
        p.x_max[f] = hi;
    }
    return p;
}

inline double scale(double x, std::size_t feature, const ScalerParams& p) {
    if (feature >= p.x_min.size()) throw ConfigError("scale: feature index out of range");
    const double x_std = (x - p.x_min[feature]) / (p.x_max[feature] - p.x_min[feature]);
    return x_std * (p.r_max - p.r_min) + p.r_min;
}

inline double inverse_scale(double y, std::size_t feature, const ScalerParams& p) {
    if (feature >= p.x_min.size()) throw ConfigError("inverse_scale: feature index out of range");
    const double x_std = (y - p.r_min) / (p.r_max - p.r_min);
    return x_std * (p.x_max[feature] - p.x_min[feature]) + p.x_min[feature];
}

inline double scale(double x, std::string_view feature, const ScalerParams& p) {
    return scale(x, p.index_of(feature), p);
}

inline double inverse_scale(double y, std::string_view feature, const ScalerParams& p) {
    return inverse_scale(y, p.index_of(feature), p);
}

// ============================================================================
// Windowing
// ============================================================================

/// One supervised sample: B consecutive days of all features predicting the
/// target feature on the following day.
struct WindowedSample {
    Matrix inputs;         // B x F, oldest row first
    double target = 0.0;   // target feature at the day after the window
    Date target_timestamp;
};

/// Slides a B-day window over the series; the sample for target day t uses
/// rows t-B..t-1. Samples whose inputs or target touch a missing value are
/// dropped. Chronological order is preserved.
inline std::vector<WindowedSample> make_windows(const TimeSeriesDataset& ds, std::size_t window,
                                                std::string_view target_feature) {
    if (window < 1) throw ConfigError("make_windows: window must be >= 1");
    const std::size_t target_idx = ds.feature_index(target_feature);
    const std::size_t n = ds.size();
    const std::size_t f_count = ds.feature_count();

    std::vector<WindowedSample> samples;
    if (n <= window) return samples;

    for (std::size_t t = window; t < n; ++t) {
        const double y = ds.rows[t][target_idx];
        if (is_missing(y)) continue;
        bool clean = true;
        for (std::size_t r = t - window; r < t && clean; ++r)
            for (std::size_t f = 0; f < f_count; ++f)
                if (is_missing(ds.rows[r][f])) {
                    clean = false;
                    break;
                }
        if (!clean) continue;

        WindowedSample s;
        s.inputs = Matrix(window, f_count);
        for (std::size_t r = 0; r < window; ++r)
            for (std::size_t f = 0; f < f_count; ++f)
                s.inputs(r, f) = ds.rows[t - window + r][f];
        s.target = y;
        s.target_timestamp = ds.dates[t];
        samples.push_back(std::move(s));
    }
    return samples;
}

/// Applies a fitted scaler to every window input (per feature column) and to
/// the target (by the target feature's parameters).
inline std::vector<WindowedSample> scale_windows(const std::vector<WindowedSample>& samples,
                                                 const ScalerParams& scaler,
                                                 std::string_view target_feature) {
    const std::size_t target_idx = scaler.index_of(target_feature);
    std::vector<WindowedSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        WindowedSample t = s;
        for (std::size_t r = 0; r < t.inputs.rows; ++r)
            for (std::size_t f = 0; f < t.inputs.cols; ++f)
                t.inputs(r, f) = scale(t.inputs(r, f), f, scaler);
        t.target = scale(t.target, target_idx, scaler);
        out.push_back(std::move(t));
    }
    return out;
}

// ============================================================================
// Chronological split
// ============================================================================

struct SplitSpec {
    double train_frac = 0.70;
    double val_frac = 0.25;
    double test_frac = 0.05;

    void validate() const {
        if (train_frac <= 0.0 || val_frac <= 0.0 || test_frac <= 0.0)
            throw SplitError("split: fractions must be positive");
        if (std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
            throw SplitError("split: fractions must sum to 1");
    }
};

struct SplitResult {
    std::vector<WindowedSample> train, val, test;
};

/// Time-ordered partition: first floor(n*train_frac) samples, then
/// floor(n*val_frac), then the remainder. No shuffling.
inline SplitResult chronological_split(const std::vector<WindowedSample>& samples,
                                       const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = samples.size();
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * spec.train_frac));
    const std::size_t n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * spec.val_frac));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw SplitError("split: a partition would be empty (n=" + std::to_string(n) + ")");

    SplitResult out;
    out.train.assign(samples.begin(), samples.begin() + n_train);
    out.val.assign(samples.begin() + n_train, samples.begin() + n_train + n_val);
    out.test.assign(samples.begin() + n_train + n_val, samples.end());
    return out;
}

// ============================================================================
// Synthetic multi-station data
// ============================================================================

/// Generator model, per feature j of station s (day t):
///   latent  = coupling * shared_j(t) + (1 - coupling) * own_{s,j}(t)
///   value   = base_j + spread_j * (latent + seasonal + noise)
/// where shared_j and own_{s,j} are AR(1) processes with coefficient 0.98
/// and unit stationary variance, seasonal is an annual sinusoid and noise
/// is white Gaussian. Matched feature indices across stations share the
/// same regional latent, which is what the coupling knob controls.
struct SynthConfig {
    std::size_t stations = 2;
    std::size_t features_per_station = 4;
    std::size_t days = 2000;
    double coupling = 0.8;          // kappa in [0,1]
    double noise_sd = 0.05;
    double seasonal_amplitude = 0.25;
    std::uint64_t seed = 1;

    void validate() const {
        if (stations < 1) throw ConfigError("synth: stations must be >= 1");
        if (features_per_station < 1) throw ConfigError("synth: features_per_station must be >= 1");
        if (days < 1) throw ConfigError("synth: days must be >= 1");
        if (coupling < 0.0 || coupling > 1.0) throw ConfigError("synth: coupling must be in [0,1]");
        if (noise_sd < 0.0) throw ConfigError("synth: noise_sd must be >= 0");
        if (seasonal_amplitude < 0.0) throw ConfigError("synth: seasonal_amplitude must be >= 0");
    }
};

namespace detail {

struct FeatureMagnitude {
    const char* name;
    double base;
    double spread;
};

// Plausible daily pollutant / weather magnitudes to anchor synthetic series.
inline const std::array<FeatureMagnitude, 12>& feature_palette() {
    static const std::array<FeatureMagnitude, 12> palette = {{
        {"pm10", 45.0, 6.0},
        {"pm25", 28.0, 4.0},
        {"no2", 35.0, 5.0},
        {"no", 18.0, 3.0},
        {"co", 0.8, 0.1},
        {"so2", 9.0, 1.5},
        {"o3", 60.0, 8.0},
        {"temp", 22.0, 3.0},
        {"rh", 75.0, 6.0},
        {"wind", 12.0, 2.0},
        {"pressure", 1012.0, 4.0},
        {"precip", 5.0, 1.0},
    }};
    return palette;
}

inline std::string synth_feature_name(std::size_t j) {
    const auto& pal = feature_palette();
    if (j < pal.size()) return pal[j].name;
    return pal[j % pal.size()].name + std::string("_") + std::to_string(j / pal.size());
}

/// AR(1) with unit stationary variance: z_t = phi z_{t-1} + sqrt(1-phi^2) eta.
inline std::vector<double> ar1_path(SeededRng& rng, std::size_t n, double phi) {
    std::vector<double> z(n);
    const double innov_sd = std::sqrt(1.0 - phi * phi);
    double state = rng.next_normal();  // stationary start
    for (std::size_t t = 0; t < n; ++t) {
        z[t] = state;
        state = phi * state + innov_sd * rng.next_normal();
    }
    return z;
}

}  // namespace detail

inline constexpr double kSynthArCoefficient = 0.98;

/// Station names are "station0", "station1", ...; the calendar starts on
/// 2001-10-01. Deterministic under the rng seed.
inline std::map<std::string, TimeSeriesDataset> synthesize(const SynthConfig& cfg,
                                                           SeededRng& rng) {
    cfg.validate();
    const std::size_t S = cfg.stations, F = cfg.features_per_station, N = cfg.days;
    const double phi = kSynthArCoefficient;
    constexpr double two_pi = 6.283185307179586476925286766559;

    // Draw order is fixed: shared latents first, then per-station latents
    // and noise, so the coupling weight never changes the draw sequence.
    std::vector<std::vector<double>> shared(F);
    for (std::size_t j = 0; j < F; ++j) shared[j] = detail::ar1_path(rng, N, phi);

    std::vector<std::vector<std::vector<double>>> own(S);
    std::vector<std::vector<std::vector<double>>> noise(S);
    for (std::size_t s = 0; s < S; ++s) {
        own[s].resize(F);
        noise[s].resize(F);
        for (std::size_t j = 0; j < F; ++j) {
            own[s][j] = detail::ar1_path(rng, N, phi);
            noise[s][j].resize(N);
            for (std::size_t t = 0; t < N; ++t) noise[s][j][t] = rng.next_normal();
        }
    }

    const Date start = make_date(2001, 10, 1);
    std::map<std::string, TimeSeriesDataset> out;
    for (std::size_t s = 0; s < S; ++s) {
        TimeSeriesDataset ds;
        for (std::size_t j = 0; j < F; ++j)
            ds.feature_names.push_back(detail::synth_feature_name(j));
        ds.dates.resize(N);
        ds.rows.assign(N, std::vector<double>(F, 0.0));
        for (std::size_t t = 0; t < N; ++t) ds.dates[t] = Date{start.days + static_cast<std::int64_t>(t)};

        for (std::size_t j = 0; j < F; ++j) {
            const auto& mag = detail::feature_palette()[j % detail::feature_palette().size()];
            const double phase = static_cast<double>(j) * 37.0;  // de-synchronize features
            for (std::size_t t = 0; t < N; ++t) {
                const double latent = cfg.coupling * shared[j][t] +
                                      (1.0 - cfg.coupling) * own[s][j][t];
                const double seasonal =
                    cfg.seasonal_amplitude *
                    std::sin(two_pi * (static_cast<double>(t) + phase) / 365.25);
                const double v = latent + seasonal + cfg.noise_sd * noise[s][j][t];
                ds.rows[t][j] = mag.base + mag.spread * v;
            }
        }
        out.emplace("station" + std::to_string(s), std::move(ds));
    }
    return out;
}

inline std::map<std::string, TimeSeriesDataset> synthesize(const SynthConfig& cfg) {
    SeededRng rng(cfg.seed);
    return synthesize(cfg, rng);
}

/// Joins per-station series on their common calendar into one dataset with
/// columns named "<station>.<feature>". Stations must share dates exactly.
inline TimeSeriesDataset merge_stations(const std::map<std::string, TimeSeriesDataset>& stations) {
    if (stations.empty()) throw ConfigError("merge_stations: no stations");
    TimeSeriesDataset out;
    const auto& first = stations.begin()->second;
    out.dates = first.dates;
    for (const auto& [name, ds] : stations) {
        if (ds.dates != first.dates)
            throw ConfigError("merge_stations: station '" + name + "' calendar differs");
        for (const auto& f : ds.feature_names) out.feature_names.push_back(name + "." + f);
    }
    out.rows.assign(out.dates.size(), {});
    for (std::size_t t = 0; t < out.dates.size(); ++t) {
        out.rows[t].reserve(out.feature_names.size());
        for (const auto& [name, ds] : stations)
            out.rows[t].insert(out.rows[t].end(), ds.rows[t].begin(), ds.rows[t].end());
    }
    return out;
}

// ============================================================================
// JSON config parsing
// ============================================================================

inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
    SynthConfig cfg;
    if (j.contains("stations")) cfg.stations = j.at("stations").get<std::size_t>();
    if (j.contains("features_per_station"))
        cfg.features_per_station = j.at("features_per_station").get<std::size_t>();
    if (j.contains("days")) cfg.days = j.at("days").get<std::size_t>();
    if (j.contains("coupling")) cfg.coupling = j.at("coupling").get<double>();
    if (j.contains("noise_sd")) cfg.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("seasonal_amplitude"))
        cfg.seasonal_amplitude = j.at("seasonal_amplitude").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

inline nlohmann::json synth_config_to_json(const SynthConfig& cfg) {
    return {{"stations", cfg.stations},
            {"features_per_station", cfg.features_per_station},
            {"days", cfg.days},
            {"coupling", cfg.coupling},
            {"noise_sd", cfg.noise_sd},
            {"seasonal_amplitude", cfg.seasonal_amplitude},
            {"seed", cfg.seed}};
}

inline nlohmann::json scaler_to_json(const ScalerParams& p) {
    return {{"feature_names", p.feature_names},
            {"x_min", p.x_min},
            {"x_max", p.x_max},
            {"r_min", p.r_min},
            {"r_max", p.r_max}};
}

inline ScalerParams scaler_from_json(const nlohmann::json& j) {
    ScalerParams p;
    p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    p.x_min = j.at("x_min").get<std::vector<double>>();
    p.x_max = j.at("x_max").get<std::vector<double>>();
    p.r_min = j.at("r_min").get<double>();
    p.r_max = j.at("r_max").get<double>();
    if (p.x_min.size() != p.feature_names.size() || p.x_max.size() != p.feature_names.size())
        throw ShapeError("scaler: min/max arrays do not match feature names");
    return p;
}

}  // namespace tlf
