#include "eomkit/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "eomkit/core_model.hpp"
#include "eomkit/device_file.hpp"
#include "eomkit/errors.hpp"
#include "eomkit/fit_kit.hpp"
#include "eomkit/link_sim.hpp"
#include "eomkit/spectrum.hpp"
#include "eomkit/swap.hpp"
#include "eomkit/sweep.hpp"
#include "eomkit/trace_io.hpp"

namespace eomkit {

namespace {

struct CommonArgs {
    std::string device = "table1_measured";
    std::uint64_t seed = 0;
    std::string out;
};

struct PumpArgs {
    std::string power;
    std::optional<double> n_c;
    std::string detuning;
};

void add_device(CLI::App* cmd, CommonArgs& c) {
    cmd->add_option("--device", c.device, "Device file or bundled name")->capture_default_str();
}

void add_pump(CLI::App* cmd, PumpArgs& p) {
    cmd->add_option("--power", p.power, "On-chip pump power, e.g. -7.9dbm or 1.6e-4w");
    cmd->add_option("--n-c", p.n_c, "Intracavity photon number");
    cmd->add_option("--detuning", p.detuning, "blue, red, or a signed detuning in Hz");
}

DeviceBundle load_bundle(const CommonArgs& c) { return load_device(resolve_device_path(c.device)); }

double parse_number(const std::string& text, const std::string& flag) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
        throw InvalidParameter(flag + ": expected a number, got '" + text + "'");
    }
    return v;
}

double parse_detuning_arg(const std::string& text, const DeviceParams& dev) {
    if (text == "blue") return dev.f_m();
    if (text == "red") return -dev.f_m();
    return parse_number(text, "--detuning");
}

/// Command-line pump settings override the device file's [pump] section.
PumpState resolve_pump(const DeviceBundle& b, const PumpArgs& a) {
    std::optional<double> det;
    std::optional<double> p;
    std::optional<double> n;
    if (b.pump_spec) {
        det = b.pump_spec->detuning;
        p = b.pump_spec->p_on_chip;
        n = b.pump_spec->n_c;
    }
    if (!a.detuning.empty()) det = parse_detuning_arg(a.detuning, b.device);
    if (!a.power.empty() || a.n_c) {
        p.reset();
        n.reset();
        if (!a.power.empty()) p = parse_power(a.power);
        if (a.n_c) n = *a.n_c;
    } else if (!a.detuning.empty() && p) {
        n.reset();
    }
    if (!det) throw InvalidParameter("no pump detuning: pass --detuning or add a [pump] section");
    if (!p && !n) throw InvalidParameter("no pump strength: pass --power or --n-c, or add a [pump] section");
    return PumpState::make(b.device, *det, p, n);
}

Detuning parse_sign(const std::string& s) { return parse_detuning(s); }

/// Writes through `path` when given, otherwise to `fallback`.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw InvalidParameter("cannot write '" + path + "'");
            os_ = file_.get();
        }
    }
    std::ostream& operator*() { return *os_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

void kv(std::ostream& out, const std::string& key, double v) { out << key << " = " << format_number(v) << '\n'; }

std::vector<MechanicalMode> spectrum_modes(const DeviceBundle& b, const PumpState& pump) {
    if (b.modes.empty()) return {principal_mode(b.device, pump.n_c, pump.sign())};
    std::vector<MechanicalMode> modes;
    for (const auto& m : b.modes) modes.push_back(with_backaction(m, b.device, pump.n_c, pump.sign()));
    return modes;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Electro-optomechanical transducer toolkit", "eomkit"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    CommonArgs common;
    PumpArgs pump_args;
    app.add_option("--seed", common.seed, "Seed for every stochastic path")->capture_default_str();

    // efficiency
    auto* eff = app.add_subcommand("efficiency", "Conversion efficiency chain at one operating point");
    add_device(eff, common);
    add_pump(eff, pump_args);

    // spectrum
    std::string spec_kind;
    double fmin = 0.0;
    double fmax = 0.0;
    int points = 4001;
    std::optional<double> n_th_arg;
    std::string p_mu = "6.3e-6w";
    std::optional<double> drive_f;
    double rbw = 10e3;
    double noise = 0.0;
    auto* spec = app.add_subcommand("spectrum", "Synthesize a spectrum as CSV");
    spec->add_option("kind", spec_kind, "thermal, driven or soe")
        ->required()
        ->check(CLI::IsMember({"thermal", "driven", "soe"}));
    add_device(spec, common);
    add_pump(spec, pump_args);
    spec->add_option("--fmin", fmin, "Grid start, Hz (default: f_m - 5 gamma)");
    spec->add_option("--fmax", fmax, "Grid stop, Hz (default: f_m + 5 gamma)");
    spec->add_option("--points", points, "Grid points")->capture_default_str();
    spec->add_option("--n-th", n_th_arg, "Thermal occupation (default: from temperature)");
    spec->add_option("--p-mu", p_mu, "Microwave drive power")->capture_default_str();
    spec->add_option("--drive-f", drive_f, "Drive frequency, Hz (default: f_m)");
    spec->add_option("--rbw", rbw, "Resolution bandwidth, Hz")->capture_default_str();
    spec->add_option("--noise", noise, "Additive Gaussian noise sigma (trace units)");
    spec->add_option("--out", common.out, "Output CSV (default: stdout)");

    // fit
    std::string fit_kind;
    std::string trace_path;
    std::string magnitude_path;
    std::string phase_path;
    std::string sign_arg = "blue";
    std::optional<double> kappa_o_arg;
    int n_peaks = 1;
    std::string background = "constant";
    std::string branch_arg;
    auto* fit = app.add_subcommand("fit", "Fit a model to trace files");
    fit->add_option("kind", fit_kind, "dip, phase, linewidth or lorentz")
        ->required()
        ->check(CLI::IsMember({"dip", "phase", "linewidth", "lorentz"}));
    fit->add_option("--trace", trace_path, "Input CSV (dip, linewidth as n_c vs gamma, lorentz)");
    fit->add_option("--magnitude", magnitude_path, "Sideband magnitude CSV (phase)");
    fit->add_option("--phase", phase_path, "Sideband phase CSV (phase)");
    add_device(fit, common);
    fit->add_option("--sign", sign_arg, "Pump sign for the linewidth fit")->capture_default_str();
    fit->add_option("--kappa-o", kappa_o_arg, "Optical linewidth for the linewidth fit (default: device)");
    fit->add_option("--peaks", n_peaks, "Number of Lorentzians")->capture_default_str();
    fit->add_option("--background", background, "constant, linear, or a reference CSV")->capture_default_str();
    fit->add_option("--branch", branch_arg, "Also report the under or over coupled cavity (dip)")
        ->check(CLI::IsMember({"under", "over"}));

    // link
    LinkConfig link_cfg;
    std::string bits_text;
    std::string bits_file;
    std::string drive_mode = "coherent";
    std::string envelope_out;
    std::string eye_out;
    link_cfg.samples_per_bit = 0;
    auto* link = app.add_subcommand("link", "Simulate a bit transmission through the mechanical mode");
    link->add_option("--bits", bits_text, "Bit string, e.g. 0101");
    link->add_option("--bits-file", bits_file, "File holding the bit string");
    link->add_option("--rate", link_cfg.rate, "Bit rate, bit/s")->required();
    link->add_option("--gamma-m", link_cfg.gamma_m, "Total mechanical linewidth, Hz")->required();
    link->add_option("--f-if", link_cfg.f_if, "Intermediate frequency, Hz")->capture_default_str();
    link->add_option("--v0", link_cfg.v0, "Settled amplitude of a 1")->capture_default_str();
    link->add_option("--noise", link_cfg.noise_rms, "Noise rms on I and Q")->capture_default_str();
    link->add_option("--samples-per-bit", link_cfg.samples_per_bit, "0 picks the smallest valid value")
        ->capture_default_str();
    link->add_option("--drive", drive_mode, "coherent or thermal")
        ->check(CLI::IsMember({"coherent", "thermal"}))
        ->capture_default_str();
    link->add_option("--envelope-out", envelope_out, "Envelope CSV");
    link->add_option("--eye-out", eye_out, "Eye CSV (segment,t_s,v)");

    // harmonics
    SquareWaveDrive square;
    auto* harm = app.add_subcommand("harmonics", "Spectrum of a square-wave modulated mechanical mode");
    harm->add_option("--f0", square.f0, "Square-wave frequency, Hz")->required();
    harm->add_option("--gamma-m", square.gamma_m, "Mechanical linewidth, Hz")->required();
    harm->add_option("--f-m", square.f_m, "Carrier frequency added to the axis, Hz")->capture_default_str();
    harm->add_option("--periods", square.periods, "Recorded periods")->capture_default_str();
    harm->add_option("--out", common.out, "Output CSV (default: stdout)");

    // swap
    std::optional<double> c_q;
    std::optional<double> f_mu;
    std::optional<double> kappa_mu;
    std::optional<double> gamma_mi_override;
    std::string rabi_out;
    double t_max = 0.0;
    auto* swap = app.add_subcommand("swap", "Qubit-phonon swap feasibility");
    add_device(swap, common);
    swap->add_option("--c-q", c_q, "Qubit capacitance, F");
    swap->add_option("--f-mu", f_mu, "Microwave resonance, Hz (default: f_m)");
    swap->add_option("--kappa-mu", kappa_mu, "Microwave linewidth, Hz");
    swap->add_option("--gamma-mi", gamma_mi_override, "Override the intrinsic mechanical linewidth, Hz");
    swap->add_option("--rabi-out", rabi_out, "Write the Rabi exchange (t, qubit, phonon) as CSV");
    swap->add_option("--t-max", t_max, "Rabi simulation length, s (default: 4 swap periods)");

    // sweep
    SweepSpec sweep_spec;
    std::vector<double> sweep_list;
    std::string scale = "linear";
    std::string compensate;
    unsigned threads = 1;
    double sweep_p_mu = 0.0;
    double sweep_drive_f = 0.0;
    auto* sweep = app.add_subcommand("sweep", "Tabulate quantities over a parameter sweep");
    add_device(sweep, common);
    add_pump(sweep, pump_args);
    sweep->add_option("--param", sweep_spec.target, "Parameter path, e.g. pump.n_c")->required();
    sweep->add_option("--values", sweep_list, "Explicit values")->delimiter(',');
    sweep->add_option("--start", sweep_spec.range.start, "Range start");
    sweep->add_option("--stop", sweep_spec.range.stop, "Range stop");
    sweep->add_option("--count", sweep_spec.range.count, "Range points")->capture_default_str();
    sweep->add_option("--scale", scale, "linear or log")->check(CLI::IsMember({"linear", "log"}))->capture_default_str();
    sweep->add_option("--quantity", sweep_spec.quantities, "Output quantity (repeatable)")
        ->required()
        ->delimiter(',');
    sweep->add_option("--co-scale", sweep_spec.co_scaled, "Paths scaled with the parameter")->delimiter(',');
    sweep->add_option("--compensate", compensate, "Path adjusted to hold parameter + path constant");
    sweep->add_option("--p-mu", sweep_p_mu, "Drive power for n_coh, W")->capture_default_str();
    sweep->add_option("--drive-f", sweep_drive_f, "Drive frequency for n_coh, Hz (default: f_m)");
    sweep->add_option("--threads", threads, "Worker threads")->capture_default_str();
    sweep->add_option("--out", common.out, "Output CSV (default: stdout)");

    // device
    auto* device_cmd = app.add_subcommand("device", "Validate a device file and print its normalized form");
    add_device(device_cmd, common);

    if (argc <= 1) {
        err << app.help();
        return kExitUsage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kExitUsage;
    }
    if (app.get_subcommands().empty()) {
        err << app.help();
        return kExitUsage;
    }

    try {
        if (*eff) {
            const DeviceBundle b = load_bundle(common);
            const PumpState pump = resolve_pump(b, pump_args);
            const EfficiencyChain c = efficiency_chain(b.device, pump.n_c, pump.sign());
            out << "detuning = " << to_string(pump.sign()) << '\n';
            kv(out, "detuning_hz", pump.detuning);
            kv(out, "p_on_chip_w", pump.p_on_chip);
            kv(out, "p_on_chip_dbm", watts_to_dbm(pump.p_on_chip));
            kv(out, "n_c", c.n_c);
            kv(out, "gamma_om_hz", c.gamma_om);
            kv(out, "gamma_tot_hz", c.gamma_tot);
            kv(out, "c_om", c.c_om);
            kv(out, "eta_oc", c.eta_oc);
            kv(out, "eta_o", c.eta_o);
            kv(out, "eta_em", c.eta_em);
            kv(out, "eta_tot", c.eta_tot);
            return kExitOk;
        }

        if (*spec) {
            const DeviceBundle b = load_bundle(common);
            const PumpState pump = resolve_pump(b, pump_args);
            const auto modes = spectrum_modes(b, pump);
            double lo = fmin;
            double hi = fmax;
            if (lo == 0.0 && hi == 0.0) {
                double gmax = 0.0;
                double fl = modes.front().f;
                double fh = fl;
                for (const auto& m : modes) {
                    gmax = std::max(gmax, m.gamma);
                    fl = std::min(fl, m.f);
                    fh = std::max(fh, m.f);
                }
                lo = fl - 5.0 * gmax;
                hi = fh + 5.0 * gmax;
            }
            if (!(lo < hi) || points < 2) throw InvalidParameter("--fmin must be below --fmax with at least 2 points");
            const Eigen::ArrayXd grid = linear_grid(lo, hi, points);
            const double n_th = n_th_arg ? *n_th_arg : thermal_occupation(b.device.f_m(), b.temperature);
            Trace t;
            if (spec_kind == "thermal") {
                t = thermal_spectrum(b.device, modes, pump.n_c, n_th, grid);
            } else if (spec_kind == "driven") {
                const DriveTone drive{drive_f ? *drive_f : b.device.f_m(), parse_power(p_mu)};
                t = driven_spectrum(b.device, modes, pump.n_c, n_th, drive, rbw, grid);
            } else {
                t = s_oe_spectrum(b.device, modes, pump, grid);
            }
            if (noise > 0.0) t = add_white_noise(t, noise, common.seed);
            Sink sink(common.out, out);
            write_trace(*sink, t);
            return kExitOk;
        }

        if (*fit) {
            FitResult r;
            const auto need = [](const std::string& path, const char* flag) {
                if (path.empty()) throw InvalidParameter(std::string(flag) + " is required for this fit");
                return read_trace(std::filesystem::path(path));
            };
            if (fit_kind == "dip") {
                r = fit_optical_dip(need(trace_path, "--trace"));
            } else if (fit_kind == "phase") {
                const DeviceBundle b = load_bundle(common);
                r = fit_phase_detuning(need(magnitude_path, "--magnitude"), need(phase_path, "--phase"), b.device);
            } else if (fit_kind == "linewidth") {
                const Trace t = need(trace_path, "--trace");
                const double kappa_o = kappa_o_arg ? *kappa_o_arg : load_bundle(common).device.kappa_o();
                std::vector<LinewidthPoint> pts;
                for (Eigen::Index i = 0; i < t.size(); ++i) pts.push_back({t.x()[i], t.y()[i]});
                r = fit_linewidth_vs_photons(pts, parse_sign(sign_arg), kappa_o);
            } else {
                Background bg = ConstantBackground{};
                if (background == "linear") {
                    bg = LinearBackground{};
                } else if (background != "constant") {
                    bg = ReferenceBackground{read_trace(std::filesystem::path(background))};
                }
                r = fit_lorentzian_multi(need(trace_path, "--trace"), n_peaks, bg);
            }
            out << format_fit(r);
            if (!branch_arg.empty() && fit_kind == "dip") {
                const auto c = select_branch(r, branch_arg == "under" ? CouplingBranch::under : CouplingBranch::over);
                kv(out, "kappa_oe_hz", c.kappa_oe);
                kv(out, "kappa_oi_hz", c.kappa_oi);
                kv(out, "q_oi", c.f_o / c.kappa_oi);
            }
            if (!r.converged) {
                err << "error: fit did not converge\n";
                return kExitFit;
            }
            return kExitOk;
        }

        if (*link) {
            if (bits_text.empty() == bits_file.empty()) throw InvalidParameter("give exactly one of --bits and --bits-file");
            if (!bits_file.empty()) {
                std::ifstream in(bits_file);
                if (!in) throw InvalidParameter("cannot open '" + bits_file + "'");
                std::stringstream ss;
                ss << in.rdbuf();
                bits_text = ss.str();
            }
            link_cfg.bits = parse_bits(bits_text);
            link_cfg.seed = common.seed;
            link_cfg.drive = drive_mode == "thermal" ? DriveMode::thermal : DriveMode::coherent;
            if (link_cfg.samples_per_bit == 0 && link_cfg.rate > 0.0 && link_cfg.gamma_m > 0.0) {
                link_cfg.samples_per_bit = auto_samples_per_bit(link_cfg.rate, link_cfg.gamma_m);
            }
            const LinkRun run = run_link(link_cfg);
            const EyeDiagram eye = eye_diagram(run, link_cfg);
            if (!envelope_out.empty()) write_trace(std::filesystem::path(envelope_out), run.envelope);
            if (!eye_out.empty()) {
                std::ofstream f(eye_out);
                if (!f) throw InvalidParameter("cannot write '" + eye_out + "'");
                write_eye_csv(f, eye);
            }
            const EyeMetrics& m = eye.metrics;
            out << "samples_per_bit = " << link_cfg.samples_per_bit << '\n';
            out << "transitions = " << m.transitions << '\n';
            kv(out, "eye_opening", m.opening);
            kv(out, "extinction_ratio", m.extinction_ratio);
            kv(out, "mean_high", m.mean_high);
            kv(out, "mean_low", m.mean_low);
            kv(out, "fitted_gamma_m_hz", m.fitted_gamma_m);
            return kExitOk;
        }

        if (*harm) {
            const Trace t = harmonic_spectrum(square);
            Sink sink(common.out, out);
            write_trace(*sink, t);
            return kExitOk;
        }

        if (*swap) {
            const DeviceBundle b = load_bundle(common);
            DeviceParams dev = b.device;
            if (gamma_mi_override) {
                auto f = dev.fields();
                f.gamma_mi = *gamma_mi_override;
                dev = DeviceParams(f);
            }
            QubitConfig q = b.qubit.value_or(QubitConfig{70e-15, dev.f_m(), 1.2e6});
            if (c_q) q.c_q = *c_q;
            if (f_mu) q.f_mu = *f_mu;
            if (kappa_mu) q.kappa_mu = *kappa_mu;
            const SwapReport r = swap_feasibility(dev, q);
            kv(out, "z_q_ohm", r.z_q);
            kv(out, "g_em_hz", r.g_em);
            kv(out, "threshold_gamma_mi_hz", r.threshold_gamma);
            kv(out, "gamma_mi_hz", dev.gamma_mi());
            out << "feasible = " << (r.feasible ? "true" : "false") << '\n';
            kv(out, "c_em", r.c_em);
            kv(out, "c_em_at_threshold", r.c_em_at_threshold);
            if (!rabi_out.empty()) {
                if (!(r.g_em > 0.0)) throw InvalidParameter("Rabi simulation needs g_em > 0");
                const double span = t_max > 0.0 ? t_max : 4.0 / (2.0 * r.g_em);
                const auto n = static_cast<Eigen::Index>(std::ceil(span * 40.0 * r.g_em)) + 1;
                const auto tr = rabi_swap_sim(dev, q, linear_grid(0.0, span, n));
                std::ofstream f(rabi_out);
                if (!f) throw InvalidParameter("cannot write '" + rabi_out + "'");
                f << "t_s,qubit,phonon\n";
                for (Eigen::Index i = 0; i < n; ++i) {
                    f << format_number(tr.qubit.x()[i]) << ',' << format_number(tr.qubit.y()[i]) << ','
                      << format_number(tr.phonon.y()[i]) << '\n';
                }
            }
            return kExitOk;
        }

        if (*sweep) {
            DeviceBundle b = load_bundle(common);
            if (!pump_args.power.empty() || pump_args.n_c || !pump_args.detuning.empty()) {
                const PumpState p = resolve_pump(b, pump_args);
                b.pump_spec = PumpSpec{p.detuning, std::nullopt, std::nullopt};
                if (!pump_args.power.empty()) {
                    b.pump_spec->p_on_chip = p.p_on_chip;
                } else {
                    b.pump_spec->n_c = p.n_c;
                }
            }
            sweep_spec.values = sweep_list;
            sweep_spec.range.scale = scale == "log" ? SweepScale::log : SweepScale::linear;
            if (!compensate.empty()) sweep_spec.compensate = compensate;
            SweepContext ctx{b, DriveTone{sweep_drive_f, sweep_p_mu}};
            const SweepTable table = run_sweep(sweep_spec, ctx, threads);
            Sink sink(common.out, out);
            write_sweep_csv(*sink, table);
            return kExitOk;
        }

        if (*device_cmd) {
            write_device(out, load_bundle(common));
            return kExitOk;
        }
    } catch (const FitError& e) {
        err << "error: " << e.what() << '\n';
        return kExitFit;
    } catch (const ValidationError& e) {
        err << "error: invalid input\n";
        for (const auto& issue : e.issues()) err << "  " << issue << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 1;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace eomkit
