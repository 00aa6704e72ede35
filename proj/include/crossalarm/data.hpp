#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crossalarm/tensor.hpp"

// Ingestion and preprocessing for timestamped multivariate drilling CSVs:
// parse, sort, dedupe, resample onto a uniform grid, normalize with
// train-split statistics, split contiguously in time, and window.
// All operations are pure; no function mutates its input frame.

namespace crossalarm {

// Unix seconds, UTC. ISO-8601 with offset, e.g. "2007-07-06T19:23:52Z".
std::int64_t parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t unix_seconds);

struct TimeSeriesFrame {
    std::vector<std::int64_t> timestamps;
    std::vector<std::string> channels;
    std::vector<double> values;      // rows x channels, row-major
    double cadence_s = 0;            // 0 until resampled onto a uniform grid

    std::size_t rows() const { return timestamps.size(); }
    std::size_t dims() const { return channels.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * dims() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * dims() + c]; }
    TimeSeriesFrame slice_rows(std::size_t begin, std::size_t end) const;
    std::optional<std::size_t> channel_index(const std::string& name) const;
    std::optional<std::size_t> row_at_or_after(std::int64_t t) const;
};

struct ChannelMap {
    std::string timestamp_column = "time";
    // canonical name -> CSV header; order fixes the frame's channel order
    // (depth channels first by convention).
    std::vector<std::pair<std::string, std::string>> channels;
};

struct IngestReport {
    std::size_t rows_parsed = 0;
    std::size_t dropped_bad_timestamp = 0;
    std::size_t dropped_bad_value = 0;
    std::size_t duplicates_collapsed = 0;
};

TimeSeriesFrame ingest_csv(const std::string& path, const ChannelMap& map,
                           IngestReport* report = nullptr);

// Uniform grid per contiguous run; gaps longer than max_gap_s split the data
// into separate segments instead of being interpolated across. cadence must
// be a whole number of seconds.
std::vector<TimeSeriesFrame> resample_linear(const TimeSeriesFrame& frame,
                                             double cadence_s, double max_gap_s = 300.0);

struct NormStats {
    std::vector<std::string> channels;
    std::vector<double> mean;
    std::vector<double> stddev;   // population
};

NormStats fit_stats(const TimeSeriesFrame& train);
TimeSeriesFrame normalize(const TimeSeriesFrame& frame, const NormStats& stats);
TimeSeriesFrame denormalize(const TimeSeriesFrame& frame, const NormStats& stats);

struct SplitSpec {
    double train_frac = 0.7;
    double val_frac = 0.1;
    double test_frac = 0.2;
    std::optional<std::int64_t> anomaly_start;   // must land inside the test split
};

struct SplitResult {
    TimeSeriesFrame train, val, test;
};

SplitResult split(const TimeSeriesFrame& frame, const SplitSpec& spec);

// Lazy (input T x D, target tau x D) windows over a frame.
class WindowSet {
public:
    WindowSet(const TimeSeriesFrame& frame, std::size_t T, std::size_t tau,
              std::size_t stride = 1);

    std::size_t size() const { return count_; }
    std::size_t start_row(std::size_t k) const;
    Tensor input(std::size_t k) const;    // T x D
    Tensor target(std::size_t k) const;   // tau x D

    std::size_t input_len() const { return T_; }
    std::size_t horizon() const { return tau_; }
    const TimeSeriesFrame& frame() const { return *frame_; }

private:
    const TimeSeriesFrame* frame_;
    std::size_t T_, tau_, stride_, count_;
};

} // namespace crossalarm
