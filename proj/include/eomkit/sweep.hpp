#pragma once

// Parameter sweeps over a device bundle. Parameter paths name a device-file
// key (`optical.kappa_o_hz`, `qubit.c_q_f`, `pump.n_c`, ...) or a drive
// setting (`drive.p_mu_w`, `drive.f_hz`).

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eomkit/device_file.hpp"
#include "eomkit/spectrum.hpp"

namespace eomkit {

enum class SweepScale { linear, log };

struct SweepRange {
    double start = 0.0;
    double stop = 0.0;
    int count = 1;
    SweepScale scale = SweepScale::linear;
};

struct SweepSpec {
    std::string target;
    std::vector<double> values;  // used when non-empty, otherwise `range`
    SweepRange range;
    std::vector<std::string> quantities;
    /// Paths scaled by value / baseline of the target.
    std::vector<std::string> co_scaled;
    /// Path adjusted so that target + compensate stays at its baseline sum.
    std::optional<std::string> compensate;
};

/// The sweep's drive tone; f = 0 means "at the device's f_m".
struct SweepContext {
    DeviceBundle bundle;
    DriveTone drive{0.0, 0.0};
};

struct SweepTable {
    std::string target;
    std::vector<std::string> quantities;
    Eigen::VectorXd values;
    Eigen::MatrixXd data;  // rows follow `values`, columns follow `quantities`; NaN where a row is invalid
};

const std::vector<std::string>& sweep_quantities();
const std::vector<std::string>& sweep_paths();

std::vector<double> sweep_values(const SweepRange& range);

double get_parameter(const SweepContext& ctx, const std::string& path);

/// Returns a copy of `ctx` with `path` set to `value`; throws
/// ValidationError when the change breaks a device invariant.
SweepContext set_parameter(const SweepContext& ctx, const std::string& path, double value);

/// Operating point of the context. On-chip power is held fixed when the
/// pump specifies it, otherwise the photon number is.
PumpState sweep_pump(const SweepContext& ctx);

double evaluate_quantity(const SweepContext& ctx, const std::string& quantity);

/// Rows are evaluated on up to `threads` workers; the table is identical for
/// any thread count.
SweepTable run_sweep(const SweepSpec& spec, const SweepContext& ctx, unsigned threads = 1);

void write_sweep_csv(std::ostream& out, const SweepTable& table);

}  // namespace eomkit
