#include "eomkit/trace.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "eomkit/errors.hpp"

namespace eomkit {

std::string to_string(Unit u) {
    switch (u) {
        case Unit::hz: return "hz";
        case Unit::s: return "s";
        case Unit::dimensionless: return "1";
        case Unit::psd: return "psd";
        case Unit::db: return "db";
        case Unit::volt: return "v";
        case Unit::rad: return "rad";
    }
    return "?";
}

Unit parse_unit(const std::string& s) {
    if (s == "hz") return Unit::hz;
    if (s == "s") return Unit::s;
    if (s == "1") return Unit::dimensionless;
    if (s == "psd") return Unit::psd;
    if (s == "db") return Unit::db;
    if (s == "v") return Unit::volt;
    if (s == "rad") return Unit::rad;
    throw ParseError("unknown unit '" + s + "'");
}

Trace::Trace(Eigen::ArrayXd x, Eigen::ArrayXd y, Unit x_unit, Unit y_unit, TraceMeta meta)
    : x_(std::move(x)), y_(std::move(y)), x_unit_(x_unit), y_unit_(y_unit), meta_(std::move(meta)) {
    if (x_.size() != y_.size()) throw InvalidParameter("trace x and y differ in length");
    for (Eigen::Index i = 0; i < x_.size(); ++i) {
        if (!std::isfinite(x_[i]) || std::isnan(y_[i])) throw InvalidParameter("trace contains non-finite values");
        if (i > 0 && !(x_[i] > x_[i - 1])) throw InvalidParameter("trace x must be strictly increasing");
    }
}

Trace Trace::with_y(Eigen::ArrayXd y) const { return Trace(x_, std::move(y), x_unit_, y_unit_, meta_); }

double trapezoid(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
    const Eigen::Index n = x.size();
    if (n < 2) return 0.0;
    const auto dx = x.tail(n - 1) - x.head(n - 1);
    return (0.5 * dx * (y.tail(n - 1) + y.head(n - 1))).sum();
}

Eigen::ArrayXd interpolate(const Trace& t, const Eigen::ArrayXd& x) {
    if (t.empty()) throw InvalidParameter("cannot interpolate an empty trace");
    const auto& tx = t.x();
    const auto& ty = t.y();
    Eigen::ArrayXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] <= tx[0]) {
            out[i] = ty[0];
        } else if (x[i] >= tx[tx.size() - 1]) {
            out[i] = ty[ty.size() - 1];
        } else {
            const auto it = std::upper_bound(tx.data(), tx.data() + tx.size(), x[i]);
            const Eigen::Index k = static_cast<Eigen::Index>(it - tx.data());
            const double w = (x[i] - tx[k - 1]) / (tx[k] - tx[k - 1]);
            out[i] = (1.0 - w) * ty[k - 1] + w * ty[k];
        }
    }
    return out;
}

Eigen::ArrayXd linear_grid(double start, double stop, Eigen::Index count) {
    if (count < 2 || !(stop > start)) throw InvalidParameter("grid needs count >= 2 and stop > start");
    return Eigen::ArrayXd::LinSpaced(count, start, stop);
}

}  // namespace eomkit
