#include "crossalarm/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace crossalarm {

namespace {

// Days since the epoch for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yr + (m <= 2));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

} // namespace

std::int64_t parse_iso8601(const std::string& text) {
    int y, mo, d, h, mi, s;
    int n = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d%n", &y, &mo, &d, &h, &mi, &s, &n) != 6 &&
        std::sscanf(text.c_str(), "%d-%d-%d %d:%d:%d%n", &y, &mo, &d, &h, &mi, &s, &n) != 6)
        throw DataError("unparseable timestamp: '" + text + "'");
    const char* rest = text.c_str() + n;
    if (*rest == '.') {   // fractional seconds: truncate
        ++rest;
        while (*rest >= '0' && *rest <= '9') ++rest;
    }
    std::int64_t offset = 0;
    if (*rest == 'Z' || *rest == '\0') {
        // UTC
    } else if (*rest == '+' || *rest == '-') {
        const int sign = *rest == '-' ? -1 : 1;
        int oh = 0, om = 0;
        if (std::sscanf(rest + 1, "%2d:%2d", &oh, &om) >= 1 ||
            std::sscanf(rest + 1, "%2d%2d", &oh, &om) >= 1)
            offset = sign * (oh * 3600 + om * 60);
        else
            throw DataError("unparseable timezone offset in '" + text + "'");
    } else {
        throw DataError("unparseable timestamp suffix in '" + text + "'");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
        s < 0 || s > 60)
        throw DataError("timestamp fields out of range: '" + text + "'");
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
           h * 3600 + mi * 60 + s - offset;
}

std::string format_iso8601(std::int64_t t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    int y;
    unsigned mo, d;
    civil_from_days(days, y, mo, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, mo, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

TimeSeriesFrame TimeSeriesFrame::slice_rows(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows()) throw DimensionError("slice_rows: bad range");
    TimeSeriesFrame out;
    out.channels = channels;
    out.cadence_s = cadence_s;
    out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
    out.values.assign(values.begin() + begin * dims(), values.begin() + end * dims());
    return out;
}

std::optional<std::size_t> TimeSeriesFrame::channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
        if (channels[i] == name) return i;
    return std::nullopt;
}

std::optional<std::size_t> TimeSeriesFrame::row_at_or_after(std::int64_t t) const {
    auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
    if (it == timestamps.end()) return std::nullopt;
    return static_cast<std::size_t>(it - timestamps.begin());
}

TimeSeriesFrame ingest_csv(const std::string& path, const ChannelMap& map,
                           IngestReport* report) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV file: " + path);

    const std::vector<std::string> header = split_csv_line(line);
    auto find_col = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return i;
        throw ConfigError("CSV '" + path + "' is missing mapped column '" + name + "'");
    };

    const std::size_t ts_col = find_col(map.timestamp_column);
    if (map.channels.empty()) throw ConfigError("channel map is empty");
    std::vector<std::size_t> cols;
    cols.reserve(map.channels.size());
    for (const auto& [canonical, csv_name] : map.channels) {
        (void)canonical;
        cols.push_back(find_col(csv_name));
    }

    IngestReport rep;
    const std::size_t D = cols.size();
    // timestamp -> row values; map keeps rows sorted and collapses duplicates
    // to the last value seen.
    std::map<std::int64_t, std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        std::int64_t t;
        try {
            if (ts_col >= fields.size()) throw DataError("short row");
            t = parse_iso8601(trim(fields[ts_col]));
        } catch (const DataError&) {
            ++rep.dropped_bad_timestamp;
            continue;
        }
        std::vector<double> vals(D);
        bool ok = true;
        for (std::size_t i = 0; i < D; ++i) {
            if (cols[i] >= fields.size()) {
                ok = false;
                break;
            }
            const std::string f = trim(fields[cols[i]]);
            char* endp = nullptr;
            const double v = std::strtod(f.c_str(), &endp);
            if (f.empty() || endp != f.c_str() + f.size() || !std::isfinite(v)) {
                ok = false;
                break;
            }
            vals[i] = v;
        }
        if (!ok) {
            ++rep.dropped_bad_value;
            continue;
        }
        if (rows.count(t)) ++rep.duplicates_collapsed;
        rows[t] = std::move(vals);
        ++rep.rows_parsed;
    }
    if (rows.empty()) throw DataError("CSV '" + path + "' contains no usable rows");

    TimeSeriesFrame frame;
    frame.channels.reserve(D);
    for (const auto& [canonical, csv_name] : map.channels) {
        (void)csv_name;
        frame.channels.push_back(canonical);
    }
    frame.timestamps.reserve(rows.size());
    frame.values.reserve(rows.size() * D);
    for (auto& [t, vals] : rows) {
        frame.timestamps.push_back(t);
        frame.values.insert(frame.values.end(), vals.begin(), vals.end());
    }
    if (report) *report = rep;
    return frame;
}

std::vector<TimeSeriesFrame> resample_linear(const TimeSeriesFrame& frame,
                                             double cadence_s, double max_gap_s) {
    if (frame.rows() < 2) throw DataError("resample: need at least 2 rows");
    if (cadence_s <= 0) throw DataError("resample: cadence must be positive");
    const auto cadence = static_cast<std::int64_t>(cadence_s);
    if (static_cast<double>(cadence) != cadence_s || cadence < 1)
        throw DataError("resample: cadence must be a whole number of seconds");

    const std::size_t D = frame.dims();
    std::vector<TimeSeriesFrame> segments;
    std::size_t seg_begin = 0;
    auto flush = [&](std::size_t begin, std::size_t end) {
        if (end - begin < 2) return;   // degenerate run, nothing to interpolate
        const std::int64_t t0 = frame.timestamps[begin];
        const std::int64_t t1 = frame.timestamps[end - 1];
        const std::size_t count = static_cast<std::size_t>((t1 - t0) / cadence) + 1;
        TimeSeriesFrame seg;
        seg.channels = frame.channels;
        seg.cadence_s = static_cast<double>(cadence);
        seg.timestamps.resize(count);
        seg.values.resize(count * D);
        std::size_t right = begin + 1;   // bracket [right-1, right]
        for (std::size_t g = 0; g < count; ++g) {
            const std::int64_t t = t0 + static_cast<std::int64_t>(g) * cadence;
            seg.timestamps[g] = t;
            while (right + 1 < end && frame.timestamps[right] <= t) ++right;
            const std::int64_t ta = frame.timestamps[right - 1];
            const std::int64_t tb = frame.timestamps[right];
            const double w = static_cast<double>(t - ta) / static_cast<double>(tb - ta);
            for (std::size_t dch = 0; dch < D; ++dch) {
                const double va = frame.at(right - 1, dch);
                const double vb = frame.at(right, dch);
                seg.values[g * D + dch] = w == 1.0 ? vb : va + w * (vb - va);
            }
        }
        segments.push_back(std::move(seg));
    };

    for (std::size_t i = 1; i < frame.rows(); ++i) {
        const double gap = static_cast<double>(frame.timestamps[i] - frame.timestamps[i - 1]);
        if (gap > max_gap_s) {
            flush(seg_begin, i);
            seg_begin = i;
        }
    }
    flush(seg_begin, frame.rows());
    if (segments.empty())
        throw DataError("resample: every inter-sample gap exceeds max_gap (" +
                        std::to_string(max_gap_s) + " s); no contiguous segment remains");
    return segments;
}

NormStats fit_stats(const TimeSeriesFrame& train) {
    if (train.rows() == 0) throw DataError("fit_stats: empty frame");
    const std::size_t D = train.dims();
    const std::size_t n = train.rows();
    NormStats st;
    st.channels = train.channels;
    st.mean.resize(D);
    st.stddev.resize(D);
    for (std::size_t c = 0; c < D; ++c) {
        double mu = 0.0;
        for (std::size_t r = 0; r < n; ++r) mu += train.at(r, c);
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = train.at(r, c) - mu;
            var += d * d;
        }
        var /= static_cast<double>(n);
        st.mean[c] = mu;
        st.stddev[c] = std::sqrt(var);
        if (st.stddev[c] <= 1e-12 * std::max(1.0, std::fabs(mu)))
            throw DataError("channel '" + train.channels[c] +
                            "' is constant on the training split; cannot normalize");
    }
    return st;
}

namespace {

void check_stats(const TimeSeriesFrame& frame, const NormStats& stats) {
    if (stats.channels != frame.channels)
        throw ConfigError("normalization stats were fitted on different channels");
}

} // namespace

TimeSeriesFrame normalize(const TimeSeriesFrame& frame, const NormStats& stats) {
    check_stats(frame, stats);
    TimeSeriesFrame out = frame;
    const std::size_t D = frame.dims();
    for (std::size_t r = 0; r < frame.rows(); ++r)
        for (std::size_t c = 0; c < D; ++c)
            out.at(r, c) = (frame.at(r, c) - stats.mean[c]) / stats.stddev[c];
    return out;
}

TimeSeriesFrame denormalize(const TimeSeriesFrame& frame, const NormStats& stats) {
    check_stats(frame, stats);
    TimeSeriesFrame out = frame;
    const std::size_t D = frame.dims();
    for (std::size_t r = 0; r < frame.rows(); ++r)
        for (std::size_t c = 0; c < D; ++c)
            out.at(r, c) = frame.at(r, c) * stats.stddev[c] + stats.mean[c];
    return out;
}

SplitResult split(const TimeSeriesFrame& frame, const SplitSpec& spec) {
    const double sum = spec.train_frac + spec.val_frac + spec.test_frac;
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1, got " + std::to_string(sum));
    if (spec.train_frac <= 0 || spec.val_frac < 0 || spec.test_frac <= 0)
        throw ConfigError("split fractions must be positive (val may be 0)");
    const std::size_t n = frame.rows();
    const auto i1 = static_cast<std::size_t>(std::floor(n * spec.train_frac + 1e-9));
    const auto i2 = static_cast<std::size_t>(
        std::floor(n * (spec.train_frac + spec.val_frac) + 1e-9));
    if (i1 == 0 || i2 >= n)
        throw ConfigError("split: frame too short for the requested fractions");
    SplitResult out;
    out.train = frame.slice_rows(0, i1);
    out.val = frame.slice_rows(i1, i2);
    out.test = frame.slice_rows(i2, n);
    if (spec.anomaly_start) {
        const std::int64_t a = *spec.anomaly_start;
        if (a < out.test.timestamps.front() || a > out.test.timestamps.back())
            throw ConfigError("annotated anomaly at " + format_iso8601(a) +
                              " is not inside the test split [" +
                              format_iso8601(out.test.timestamps.front()) + ", " +
                              format_iso8601(out.test.timestamps.back()) + "]");
    }
    return out;
}

WindowSet::WindowSet(const TimeSeriesFrame& frame, std::size_t T, std::size_t tau,
                     std::size_t stride)
    : frame_(&frame), T_(T), tau_(tau), stride_(stride == 0 ? 1 : stride) {
    if (T == 0 || tau == 0) throw UsageError("WindowSet: T and tau must be positive");
    if (frame.rows() < T + tau)
        throw DataError("frame too short for windows: " + std::to_string(frame.rows()) +
                        " rows < T+tau = " + std::to_string(T + tau));
    count_ = (frame.rows() - T - tau) / stride_ + 1;
}

std::size_t WindowSet::start_row(std::size_t k) const {
    if (k >= count_) throw UsageError("window index out of range");
    return k * stride_;
}

Tensor WindowSet::input(std::size_t k) const {
    const std::size_t s = start_row(k);
    const std::size_t D = frame_->dims();
    std::vector<double> buf(frame_->values.begin() + s * D,
                            frame_->values.begin() + (s + T_) * D);
    return Tensor::from({T_, D}, std::move(buf));
}

Tensor WindowSet::target(std::size_t k) const {
    const std::size_t s = start_row(k) + T_;
    const std::size_t D = frame_->dims();
    std::vector<double> buf(frame_->values.begin() + s * D,
                            frame_->values.begin() + (s + tau_) * D);
    return Tensor::from({tau_, D}, std::move(buf));
}

} // namespace crossalarm
