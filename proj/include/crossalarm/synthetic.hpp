#pragma once

#include <cstdint>

#include "crossalarm/data.hpp"

// Deterministic synthetic drilling-like dataset: three depth channels plus
// seven drilling channels driven by shared sinusoidal latents with light
// Gaussian noise. An optional regime shift rewires the coupling of torque,
// wob and rop over a window inside the test region, standing in for the
// early signs of a stuck event.

namespace crossalarm {

struct SyntheticConfig {
    std::size_t steps = 24000;
    std::int64_t start_time = 1183748632;   // arbitrary fixed instant
    double cadence_s = 4;
    std::uint64_t seed = 7;
    double noise = 0.02;                    // fraction of channel swing
    bool inject_shift = false;
    double shift_begin_frac = 0.93;
    double shift_end_frac = 0.97;
};

TimeSeriesFrame make_synthetic(const SyntheticConfig& cfg);

// Timestamp of the injected regime shift (the annotated event instant).
std::int64_t synthetic_shift_start(const SyntheticConfig& cfg);
std::int64_t synthetic_shift_end(const SyntheticConfig& cfg);

void write_frame_csv(const TimeSeriesFrame& frame, const std::string& path);

} // namespace crossalarm
