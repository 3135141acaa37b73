#pragma once

#include <Eigen/Core>
#include <string>

namespace eomkit {

enum class Unit {
    hz,
    s,
    dimensionless,
    psd,      // linear power spectral density (arbitrary scale)
    db,
    volt,
    rad,
};

std::string to_string(Unit u);
Unit parse_unit(const std::string& s);

struct TraceMeta {
    std::string x_label;
    std::string y_label;
    double rbw = 0.0;  // Hz; 0 when not a spectrum
};

/// Sampled series with strictly increasing abscissa.
class Trace {
public:
    Trace() = default;
    Trace(Eigen::ArrayXd x, Eigen::ArrayXd y, Unit x_unit, Unit y_unit, TraceMeta meta = {});

    const Eigen::ArrayXd& x() const noexcept { return x_; }
    const Eigen::ArrayXd& y() const noexcept { return y_; }
    Unit x_unit() const noexcept { return x_unit_; }
    Unit y_unit() const noexcept { return y_unit_; }
    const TraceMeta& meta() const noexcept { return meta_; }
    TraceMeta& meta() noexcept { return meta_; }

    Eigen::Index size() const noexcept { return x_.size(); }
    bool empty() const noexcept { return x_.size() == 0; }

    Trace with_y(Eigen::ArrayXd y) const;

private:
    Eigen::ArrayXd x_;
    Eigen::ArrayXd y_;
    Unit x_unit_ = Unit::hz;
    Unit y_unit_ = Unit::dimensionless;
    TraceMeta meta_;
};

/// Trapezoidal integral of y over x.
double trapezoid(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y);

/// Linear interpolation of `t` at the points `x`; constant beyond the ends.
Eigen::ArrayXd interpolate(const Trace& t, const Eigen::ArrayXd& x);

Eigen::ArrayXd linear_grid(double start, double stop, Eigen::Index count);

}  // namespace eomkit
