#pragma once

// Classical bit transmission through the mechanical mode. Only the complex
// baseband envelope is integrated; the carrier at f_m is implicit.

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "eomkit/fit_kit.hpp"
#include "eomkit/trace.hpp"

namespace eomkit {

enum class DriveMode {
    coherent,  // resonant tone while the bit is high
    thermal,   // white-noise bath while the bit is high
};

struct LinkConfig {
    std::vector<std::uint8_t> bits;
    double rate = 0.0;         // bit/s
    double f_if = 50e6;        // Hz
    double v0 = 1.0;           // settled |V_det| of a held 1
    double gamma_m = 0.0;      // total mechanical linewidth, Hz
    double noise_rms = 0.0;    // V, added to I and Q independently
    int samples_per_bit = 16;
    std::uint64_t seed = 0;
    DriveMode drive = DriveMode::coherent;
};

/// Throws InvalidParameter for malformed configs and SamplingError when
/// samples_per_bit * rate < 20 gamma_m.
void validate(const LinkConfig& cfg);

/// Smallest samples_per_bit (>= 16) that satisfies the sampling rule.
int auto_samples_per_bit(double rate, double gamma_m);

/// Parses a string of '0'/'1' characters; whitespace is ignored.
std::vector<std::uint8_t> parse_bits(const std::string& text);

struct EyeMetrics {
    double opening = 0.0;            // min high minus max low at the sampling instant, floored at 0
    double extinction_ratio = 0.0;   // mean high / mean low, capped at kExtinctionCap
    double mean_high = 0.0;
    double mean_low = 0.0;
    int transitions = 0;
    double fitted_gamma_m = std::numeric_limits<double>::quiet_NaN();

    static constexpr double kExtinctionCap = 1e6;
};

struct EyeDiagram {
    Eigen::ArrayXd t;                       // -T .. T around the transition
    std::vector<Eigen::ArrayXd> segments;   // one per transition
    std::vector<bool> rising;
    EyeMetrics metrics;
};

struct LinkRun {
    Trace envelope;            // |V_det| = sqrt(I^2 + Q^2)
    Trace i;
    Trace q;
    Eigen::ArrayXcd baseband;  // noiseless mechanical envelope, same time base
    Eigen::ArrayXd drive;      // per-sample drive level applied over [t_k, t_k+1)
};

LinkRun run_link(const LinkConfig& cfg);

EyeDiagram eye_diagram(const LinkRun& run, const LinkConfig& cfg);

enum class RingKind { ringup, ringdown };

/// Envelope from the bit boundary before `bit` (which must differ from its
/// predecessor) to the end of the run of equal bits it starts.
Trace edge_segment(const LinkRun& run, const LinkConfig& cfg, std::size_t bit);

/// Fits V_f (1 - exp(-pi gamma t)) or V_i exp(-pi gamma t); reports gamma_m in
/// ordinary-frequency Hz. The segment's first sample is the transition.
FitResult fit_ring(const Trace& segment, RingKind kind);

struct SquareWaveDrive {
    double f0 = 0.0;             // square-wave fundamental, Hz
    double gamma_m = 0.0;        // Hz
    double f_m = 0.0;            // carrier label added to the offset axis
    double v0 = 1.0;
    int periods = 64;
    int samples_per_period = 0;  // 0 picks automatically
};

/// Power spectrum (per FFT bin, two-sided around f_m) of the steady-state
/// envelope under 50%-duty on/off square modulation.
Trace harmonic_spectrum(const SquareWaveDrive& drive);

/// Power in the bin nearest f_m + offset.
double bin_power(const Trace& spectrum, double f_m, double offset);

}  // namespace eomkit
