#include "eomkit/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "eomkit/core_model.hpp"
#include "eomkit/errors.hpp"
#include "eomkit/swap.hpp"
#include "eomkit/trace_io.hpp"

namespace eomkit {

namespace {

double* field_ref(DeviceParams::Fields& f, const std::string& path) {
    if (path == "optical.f_o_hz") return &f.f_o;
    if (path == "optical.kappa_o_hz") return &f.kappa_o;
    if (path == "optical.kappa_oe_hz") return &f.kappa_oe;
    if (path == "optical.eta_oc") return &f.eta_oc;
    if (path == "mechanical.f_m_hz") return &f.f_m;
    if (path == "mechanical.gamma_mi_hz") return &f.gamma_mi;
    if (path == "mechanical.g_om_hz") return &f.g_om;
    if (path == "electromechanical.gamma_me_hz") return &f.gamma_me;
    if (path == "electromechanical.c_idt_f") return &f.c_idt;
    if (path == "electromechanical.z0_ohm") return &f.z0;
    return nullptr;
}

const PumpSpec& require_pump(const SweepContext& ctx) {
    if (!ctx.bundle.pump_spec) throw InvalidParameter("this quantity needs a [pump] section");
    return *ctx.bundle.pump_spec;
}

const QubitConfig& require_qubit(const SweepContext& ctx) {
    if (!ctx.bundle.qubit) throw InvalidParameter("this quantity needs a [qubit] section");
    return *ctx.bundle.qubit;
}

DriveTone effective_drive(const SweepContext& ctx) {
    DriveTone d = ctx.drive;
    if (d.f == 0.0) d.f = ctx.bundle.device.f_m();
    return d;
}

std::vector<MechanicalMode> operating_modes(const SweepContext& ctx, const PumpState& pump) {
    const DeviceParams& dev = ctx.bundle.device;
    if (ctx.bundle.modes.empty()) return {principal_mode(dev, pump.n_c, pump.sign())};
    std::vector<MechanicalMode> modes;
    for (const auto& m : ctx.bundle.modes) modes.push_back(with_backaction(m, dev, pump.n_c, pump.sign()));
    return modes;
}

}  // namespace

const std::vector<std::string>& sweep_quantities() {
    static const std::vector<std::string> q = {"n_c",   "c_om",  "gamma_om", "gamma_tot",      "eta_o",
                                               "eta_em", "eta_tot", "n_th",   "z_q",            "g_em",
                                               "swap_threshold", "c_em", "n_coh", "coherent_peak_area"};
    return q;
}

const std::vector<std::string>& sweep_paths() {
    static const std::vector<std::string> p = {
        "optical.f_o_hz",          "optical.kappa_o_hz",          "optical.kappa_oe_hz",     "optical.eta_oc",
        "mechanical.f_m_hz",       "mechanical.gamma_mi_hz",      "mechanical.g_om_hz",      "mechanical.temperature_k",
        "electromechanical.gamma_me_hz", "electromechanical.c_idt_f", "electromechanical.z0_ohm",
        "pump.detuning_hz",        "pump.p_on_chip_w",            "pump.n_c",                "qubit.c_q_f",
        "qubit.f_mu_hz",           "qubit.kappa_mu_hz",           "drive.p_mu_w",            "drive.f_hz"};
    return p;
}

std::vector<double> sweep_values(const SweepRange& r) {
    if (r.count < 1) throw InvalidParameter("sweep count must be at least 1");
    if (!std::isfinite(r.start) || !std::isfinite(r.stop)) throw InvalidParameter("sweep bounds must be finite");
    if (r.count == 1) return {r.start};
    if (!(r.start < r.stop)) throw InvalidParameter("sweep range needs start < stop");
    if (r.scale == SweepScale::log && !(r.start > 0.0)) throw InvalidParameter("log sweep needs a positive start");
    std::vector<double> v(static_cast<std::size_t>(r.count));
    for (int k = 0; k < r.count; ++k) {
        const double t = static_cast<double>(k) / (r.count - 1);
        v[k] = r.scale == SweepScale::linear ? r.start + t * (r.stop - r.start)
                                             : r.start * std::pow(r.stop / r.start, t);
    }
    v.back() = r.stop;
    return v;
}

double get_parameter(const SweepContext& ctx, const std::string& path) {
    DeviceParams::Fields f = ctx.bundle.device.fields();
    if (double* ref = field_ref(f, path)) return *ref;
    if (path == "mechanical.temperature_k") return ctx.bundle.temperature;
    if (path == "pump.detuning_hz") return require_pump(ctx).detuning;
    if (path == "pump.p_on_chip_w") return sweep_pump(ctx).p_on_chip;
    if (path == "pump.n_c") return sweep_pump(ctx).n_c;
    if (path == "qubit.c_q_f") return require_qubit(ctx).c_q;
    if (path == "qubit.f_mu_hz") return require_qubit(ctx).f_mu;
    if (path == "qubit.kappa_mu_hz") return require_qubit(ctx).kappa_mu;
    if (path == "drive.p_mu_w") return ctx.drive.p_mu;
    if (path == "drive.f_hz") return effective_drive(ctx).f;
    throw InvalidParameter("unknown parameter path '" + path + "'");
}

SweepContext set_parameter(const SweepContext& ctx, const std::string& path, double value) {
    SweepContext out = ctx;
    DeviceParams::Fields f = ctx.bundle.device.fields();
    if (double* ref = field_ref(f, path)) {
        *ref = value;
        out.bundle.device = DeviceParams(f);
        return out;
    }
    if (path == "mechanical.temperature_k") {
        if (!(value > 0.0)) throw InvalidParameter("temperature must be positive");
        out.bundle.temperature = value;
    } else if (path == "pump.detuning_hz") {
        require_pump(ctx);
        out.bundle.pump_spec->detuning = value;
    } else if (path == "pump.p_on_chip_w") {
        require_pump(ctx);
        out.bundle.pump_spec->p_on_chip = value;
        out.bundle.pump_spec->n_c.reset();
    } else if (path == "pump.n_c") {
        require_pump(ctx);
        out.bundle.pump_spec->n_c = value;
        out.bundle.pump_spec->p_on_chip.reset();
    } else if (path == "qubit.c_q_f") {
        require_qubit(ctx);
        out.bundle.qubit->c_q = value;
    } else if (path == "qubit.f_mu_hz") {
        require_qubit(ctx);
        out.bundle.qubit->f_mu = value;
    } else if (path == "qubit.kappa_mu_hz") {
        require_qubit(ctx);
        out.bundle.qubit->kappa_mu = value;
    } else if (path == "drive.p_mu_w") {
        if (!(value >= 0.0)) throw InvalidParameter("drive power must be non-negative");
        out.drive.p_mu = value;
    } else if (path == "drive.f_hz") {
        if (!(value > 0.0)) throw InvalidParameter("drive frequency must be positive");
        out.drive.f = value;
    } else {
        throw InvalidParameter("unknown parameter path '" + path + "'");
    }
    return out;
}

PumpState sweep_pump(const SweepContext& ctx) {
    const PumpSpec& p = require_pump(ctx);
    if (p.p_on_chip) return PumpState::make(ctx.bundle.device, p.detuning, p.p_on_chip, std::nullopt);
    return PumpState::make(ctx.bundle.device, p.detuning, std::nullopt, p.n_c);
}

double evaluate_quantity(const SweepContext& ctx, const std::string& q) {
    const DeviceParams& dev = ctx.bundle.device;
    if (q == "n_th") return thermal_occupation(dev.f_m(), ctx.bundle.temperature);
    if (q == "eta_o") return efficiencies(dev, dev.gamma_mi()).eta_o;
    if (q == "eta_em") return efficiencies(dev, dev.gamma_mi()).eta_em;
    if (q == "z_q") return qubit_impedance(require_qubit(ctx), dev);
    if (q == "g_em") return coupling_g_em(dev, require_qubit(ctx));
    if (q == "swap_threshold") return swap_feasibility(dev, require_qubit(ctx)).threshold_gamma;
    if (q == "c_em") return swap_feasibility(dev, require_qubit(ctx)).c_em;

    const PumpState pump = sweep_pump(ctx);
    if (q == "n_c") return pump.n_c;
    if (q == "c_om") return cooperativity(dev, pump.n_c, dev.gamma_mi());
    if (q == "gamma_om") return backaction_rate(dev, pump.n_c);
    if (q == "gamma_tot") return total_mech_linewidth(dev, pump.n_c, pump.sign());
    if (q == "eta_tot") return total_efficiency(dev, pump, pump.sign());
    if (q == "n_coh" || q == "coherent_peak_area") {
        const DriveTone drive = effective_drive(ctx);
        double n_coh = 0.0;
        double area = 0.0;
        for (const auto& m : operating_modes(ctx, pump)) {
            const double n = coherent_phonons(m, drive);
            n_coh += n;
            area += n * 4.0 * pump.n_c * m.g * m.g / dev.kappa_o();
        }
        return q == "n_coh" ? n_coh : area;
    }
    throw InvalidParameter("unknown quantity '" + q + "'");
}

SweepTable run_sweep(const SweepSpec& spec, const SweepContext& ctx, unsigned threads) {
    for (const auto& q : spec.quantities) {
        if (std::find(sweep_quantities().begin(), sweep_quantities().end(), q) == sweep_quantities().end()) {
            throw InvalidParameter("unknown quantity '" + q + "'");
        }
    }
    if (spec.quantities.empty()) throw InvalidParameter("sweep needs at least one quantity");
    const auto known_path = [](const std::string& p) {
        return std::find(sweep_paths().begin(), sweep_paths().end(), p) != sweep_paths().end();
    };
    if (!known_path(spec.target)) throw InvalidParameter("unknown parameter path '" + spec.target + "'");
    for (const auto& p : spec.co_scaled) {
        if (!known_path(p)) throw InvalidParameter("unknown co-scaled path '" + p + "'");
    }
    if (spec.compensate && !known_path(*spec.compensate)) {
        throw InvalidParameter("unknown compensating path '" + *spec.compensate + "'");
    }

    const std::vector<double> values = spec.values.empty() ? sweep_values(spec.range) : spec.values;
    const double base = get_parameter(ctx, spec.target);
    if (!spec.co_scaled.empty() && base == 0.0) {
        throw InvalidParameter("co-scaling needs a nonzero baseline of '" + spec.target + "'");
    }
    std::vector<double> co_base;
    for (const auto& p : spec.co_scaled) co_base.push_back(get_parameter(ctx, p));
    const double comp_sum = spec.compensate ? base + get_parameter(ctx, *spec.compensate) : 0.0;

    SweepTable table;
    table.target = spec.target;
    table.quantities = spec.quantities;
    const auto rows = static_cast<Eigen::Index>(values.size());
    const auto cols = static_cast<Eigen::Index>(spec.quantities.size());
    table.values = Eigen::Map<const Eigen::VectorXd>(values.data(), rows);
    table.data = Eigen::MatrixXd::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());

    const auto eval_row = [&](Eigen::Index r) {
        std::optional<SweepContext> row;
        try {
            row = set_parameter(ctx, spec.target, values[r]);
            for (std::size_t k = 0; k < spec.co_scaled.size(); ++k) {
                row = set_parameter(*row, spec.co_scaled[k], co_base[k] * values[r] / base);
            }
            if (spec.compensate) row = set_parameter(*row, *spec.compensate, comp_sum - values[r]);
        } catch (const Error&) {
            return;
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            try {
                table.data(r, c) = evaluate_quantity(*row, spec.quantities[c]);
            } catch (const Error&) {
            }
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rows)));
    if (workers == 1) {
        for (Eigen::Index r = 0; r < rows; ++r) eval_row(r);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (Eigen::Index r = w; r < rows; r += workers) eval_row(r);
            });
        }
        for (auto& t : pool) t.join();
    }
    return table;
}

void write_sweep_csv(std::ostream& out, const SweepTable& table) {
    out << table.target;
    for (const auto& q : table.quantities) out << ',' << q;
    out << '\n';
    for (Eigen::Index r = 0; r < table.values.size(); ++r) {
        out << format_number(table.values[r]);
        for (Eigen::Index c = 0; c < table.data.cols(); ++c) out << ',' << format_number(table.data(r, c));
        out << '\n';
    }
}

}  // namespace eomkit
