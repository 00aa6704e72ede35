#include "crossalarm/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace crossalarm {

namespace {

constexpr double kTwoPi = 6.283185307179586477;

struct Coupling {
    double offset;
    double a1, a2, a3;   // weights on the three latents
};

// Channel order: depth channels first, then the seven drilling parameters.
const char* kChannelNames[10] = {
    "hole_depth", "bit_depth", "block_position", "torque",  "hookload",
    "rotary_speed", "spp",     "mud_flow_in",    "wob",     "rop",
};

const Coupling kDrilling[7] = {
    {12.0, 1.5, 0.8, 0.4},       // torque
    {95.0, -0.6, 1.0, 2.0},      // hookload
    {120.0, 6.0, -2.0, 0.0},     // rotary_speed
    {14000.0, 400.0, 700.0, 250.0},  // spp
    {2600.0, 0.0, 120.0, 60.0},  // mud_flow_in
    {9.0, 1.2, 0.0, 0.5},        // wob
    {28.0, 4.0, 2.5, 1.5},       // rop
};

// Shifted couplings for torque, wob, rop plus a fast latent the model never
// saw during training.
const Coupling kShifted[7] = {
    {12.6, -0.8, 1.5, 0.0},
    {95.0, -0.6, 1.0, 2.0},
    {120.0, 6.0, -2.0, 0.0},
    {14000.0, 400.0, 700.0, 250.0},
    {2600.0, 0.0, 120.0, 60.0},
    {9.5, -1.2, 0.0, 0.0},
    {29.5, -4.0, 0.0, 1.5},
};

const bool kShiftChannel[7] = {true, false, false, false, false, true, true};

} // namespace

std::int64_t synthetic_shift_start(const SyntheticConfig& cfg) {
    const auto row = static_cast<std::size_t>(cfg.shift_begin_frac *
                                              static_cast<double>(cfg.steps));
    return cfg.start_time + static_cast<std::int64_t>(row * cfg.cadence_s);
}

std::int64_t synthetic_shift_end(const SyntheticConfig& cfg) {
    const auto row = static_cast<std::size_t>(cfg.shift_end_frac *
                                              static_cast<double>(cfg.steps));
    return cfg.start_time + static_cast<std::int64_t>(row * cfg.cadence_s);
}

TimeSeriesFrame make_synthetic(const SyntheticConfig& cfg) {
    if (cfg.steps < 10) throw UsageError("make_synthetic: needs at least 10 steps");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    TimeSeriesFrame frame;
    frame.cadence_s = cfg.cadence_s;
    frame.channels.assign(std::begin(kChannelNames), std::end(kChannelNames));
    frame.timestamps.resize(cfg.steps);
    frame.values.resize(cfg.steps * 10);

    const std::size_t shift_begin =
        static_cast<std::size_t>(cfg.shift_begin_frac * static_cast<double>(cfg.steps));
    const std::size_t shift_end =
        static_cast<std::size_t>(cfg.shift_end_frac * static_cast<double>(cfg.steps));

    for (std::size_t t = 0; t < cfg.steps; ++t) {
        frame.timestamps[t] =
            cfg.start_time + static_cast<std::int64_t>(t * cfg.cadence_s);
        const auto ft = static_cast<double>(t);
        const double s1 = std::sin(kTwoPi * ft / 150.0);
        const double s2 = std::sin(kTwoPi * ft / 345.0 + 0.7);
        const double s3 = std::sin(kTwoPi * ft / 675.0 + 1.9);
        const double fast = std::sin(kTwoPi * ft / 47.0 + 0.3);

        const double hole = 1800.0 + 0.008 * ft * cfg.cadence_s;
        frame.at(t, 0) = hole;
        frame.at(t, 1) = hole - 1.5 + 0.3 * s3;
        frame.at(t, 2) = 16.0 + 9.0 * std::sin(kTwoPi * ft / 1500.0 + 0.3);

        const bool shifted = cfg.inject_shift && t >= shift_begin && t < shift_end;
        for (std::size_t c = 0; c < 7; ++c) {
            const Coupling& cp =
                (shifted && kShiftChannel[c]) ? kShifted[c] : kDrilling[c];
            const double swing =
                std::fabs(cp.a1) + std::fabs(cp.a2) + std::fabs(cp.a3);
            double v = cp.offset + cp.a1 * s1 + cp.a2 * s2 + cp.a3 * s3;
            if (shifted && kShiftChannel[c]) v += 0.8 * swing * fast;
            v += cfg.noise * swing * gauss(rng);
            frame.at(t, 3 + c) = v;
        }
    }
    return frame;
}

void write_frame_csv(const TimeSeriesFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write CSV: " + path);
    out << "time";
    for (const std::string& c : frame.channels) out << "," << c;
    out << "\n";
    char buf[32];
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out << format_iso8601(frame.timestamps[r]);
        for (std::size_t c = 0; c < frame.dims(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", frame.at(r, c));
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw DataError("failed while writing CSV: " + path);
}

} // namespace crossalarm
