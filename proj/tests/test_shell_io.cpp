#include <catch_amalgamated.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "eomkit/device_file.hpp"
#include "eomkit/errors.hpp"
#include "eomkit/sweep.hpp"
#include "eomkit/trace_io.hpp"

using namespace eomkit;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

const std::string kMinimal = R"(
[optical]
f_o_hz = 194.9e12
kappa_o_hz = 2.1e9
kappa_oe_hz = 0.99e9

[mechanical]
f_m_hz = 4.32e9
gamma_mi_hz = 8.4e6
g_om_hz = 130e3

[electromechanical]
gamma_me_hz = 58
)";

DeviceBundle parse(const std::string& text) {
    std::istringstream in(text);
    return parse_device(in, "test.cfg");
}

std::vector<std::string> issues_of(const std::string& text) {
    try {
        parse(text);
    } catch (const ValidationError& e) {
        return e.issues();
    }
    return {};
}

bool contains(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v) {
        if (s.find(needle) != std::string::npos) return true;
    }
    return false;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
    s.replace(s.find(from), from.size(), to);
    return s;
}

SweepContext measured_context() { return SweepContext{load_device(resolve_device_path("table1_measured"))}; }

}  // namespace

TEST_CASE("bundled measured device") {
    const auto b = load_device(resolve_device_path("table1_measured"));
    const auto& d = b.device;
    CHECK(d.f_o() == 194.9e12);
    CHECK(d.kappa_o() == 2.1e9);
    CHECK(d.kappa_oe() == 0.99e9);
    CHECK(d.f_m() == 4.32e9);
    CHECK(d.gamma_mi() == 8.4e6);
    CHECK(d.gamma_me() == 58.0);
    CHECK(d.g_om() == 130e3);
    CHECK(d.eta_oc() == 0.29);
    CHECK(b.temperature == 295.0);
    REQUIRE(b.pump_spec);
    CHECK(b.pump_spec->detuning == 4.32e9);
    CHECK(*b.pump_spec->p_on_chip == Approx(1e-3 * std::pow(10.0, -0.79)));
    REQUIRE(b.qubit);
    CHECK(b.qubit->c_q == 70e-15);
    REQUIRE(b.modes.size() == 1);
    CHECK(b.pump()->sign() == Detuning::blue);

    for (const char* name : {"table1_sim_adjusted", "table1_sim_initial"}) {
        CHECK_NOTHROW(load_device(resolve_device_path(name)));
    }
}

TEST_CASE("device file validation") {
    const auto ok = parse(kMinimal);
    CHECK(ok.device.eta_oc() == 1.0);
    CHECK(ok.temperature == 300.0);
    CHECK_FALSE(ok.pump_spec);
    CHECK(ok.modes.empty());

    SECTION("coupling above the total linewidth names both keys") {
        const auto issues = issues_of(replace(kMinimal, "kappa_oe_hz = 0.99e9", "kappa_oe_hz = 3e9"));
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].find("kappa_oe") != std::string::npos);
        CHECK(issues[0].find("kappa_o ") != std::string::npos);
    }

    SECTION("a key without its unit suffix") {
        const auto issues = issues_of(replace(kMinimal, "g_om_hz = 130e3", "g_om: 130e3"));
        CHECK(contains(issues, "test.cfg:10: key 'g_om' is missing its unit suffix (expected g_om_hz)"));
    }

    SECTION("every violation is reported at once") {
        std::string text = replace(kMinimal, "g_om_hz = 130e3", "g_om_khz = 130");
        text = replace(text, "gamma_mi_hz = 8.4e6", "gamma_mi_hz = abc");
        text += "\n[bogus]\nx = 1\n";
        const auto issues = issues_of(text);
        CHECK(issues.size() >= 4);
        CHECK(contains(issues, "unit suffix mismatch for 'g_om_khz'"));
        CHECK(contains(issues, "not a finite number"));
        CHECK(contains(issues, "unknown section [bogus]"));
        CHECK(contains(issues, "missing required key"));
    }

    SECTION("pump, qubit and modes") {
        const auto issues = issues_of(kMinimal + "\n[pump]\ndetuning_hz = 4.32e9\np_on_chip_dbm = -7.9\n"
                                                 "p_on_chip_w = 1e-4\n[qubit]\nc_q_f = -1\nf_mu_hz = 4e9\n"
                                                 "kappa_mu_hz = 1e6\n[modes]\nf_hz = 4e9\n");
        CHECK(contains(issues, "not both"));
        CHECK(contains(issues, "[qubit] values must be positive"));
        CHECK(contains(issues, "mode 0 is missing 'gamma_hz'"));
    }

    SECTION("duplicates") {
        const auto issues = issues_of(kMinimal + "gamma_me_hz = 1\n[optical]\n");
        CHECK(contains(issues, "duplicate key 'gamma_me_hz'"));
        CHECK(contains(issues, "duplicate section [optical]"));
    }
}

TEST_CASE("power parsing") {
    CHECK(parse_power("-7.9dbm") == Approx(1e-3 * std::pow(10.0, -0.79)));
    CHECK(parse_power("1.6e-4w") == 1.6e-4);
    CHECK(parse_power("2e-3") == 2e-3);
    CHECK(watts_to_dbm(dbm_to_watts(-5.0)) == Approx(-5.0));
    CHECK_THROWS_AS(parse_power("3 volts"), ParseError);
}

TEST_CASE("device files round trip losslessly") {
    for (const char* name : {"table1_measured", "table1_sim_adjusted", "table1_sim_initial"}) {
        const auto b = load_device(resolve_device_path(name));
        std::ostringstream out;
        write_device(out, b);
        CHECK(parse(out.str()) == b);
    }
    auto b = parse(kMinimal);
    b.device = DeviceParams([] {
        auto f = parse(kMinimal).device.fields();
        f.kappa_oe = 0.1 + 0.2;  // not exactly representable in short form
        return f;
    }());
    std::ostringstream out;
    write_device(out, b);
    CHECK(parse(out.str()).device.kappa_oe() == b.device.kappa_oe());
}

TEST_CASE("trace files") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::ArrayXd x(1000), y(1000);
    double acc = 4.2e9;
    for (int i = 0; i < 1000; ++i) {
        acc += 1e3 * (0.1 + u(rng)) / 3.0;
        x[i] = acc;
        y[i] = std::exp(-40 * u(rng)) / 7.0;
    }
    const Trace t(x, y, Unit::hz, Unit::psd);
    std::stringstream buf;
    write_trace(buf, t);
    const auto back = read_trace(buf);
    CHECK(back.x_unit() == Unit::hz);
    CHECK(back.y_unit() == Unit::psd);
    CHECK((back.x() == x).all());
    CHECK((back.y() == y).all());

    const auto path = fs::temp_directory_path() / "eomkit_trace_roundtrip.csv";
    write_trace(path, t);
    CHECK((read_trace(path).y() == y).all());
    fs::remove(path);

    const auto error_of = [](const std::string& text) {
        std::istringstream in(text);
        try {
            read_trace(in, "t.csv");
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(error_of("hz,psd\n1,2\n3,4\n2,5\n").find("t.csv:4") != std::string::npos);
    CHECK(error_of("hz,psd\n1,2\n3,4\n2,5\n").find("strictly increasing") != std::string::npos);
    CHECK(error_of("hz,psd\n1,2\n2;3\n").find("t.csv:3: mixed delimiters") != std::string::npos);
    CHECK(error_of("hz,psd\n1,2\n2\t3\n").find("mixed delimiters") != std::string::npos);
    CHECK(error_of("hz,psd\n1,nan\n").find("NaN") != std::string::npos);
    CHECK(error_of("hz,psd,extra\n1,2\n").find("header") != std::string::npos);
    CHECK(error_of("hz,psd\n1,2,3\n").find("two comma-separated") != std::string::npos);
    CHECK(error_of("").find("empty") != std::string::npos);
    CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("sweeps") {
    const auto ctx = measured_context();

    SECTION("optomechanical cooperativity is linear in photon number") {
        SweepSpec spec;
        spec.target = "pump.n_c";
        spec.values = {1e3, 5e3, 1e4, 2e4};
        spec.quantities = {"n_c", "c_om"};
        const auto table = run_sweep(spec, ctx);
        for (Eigen::Index r = 0; r < table.values.size(); ++r) {
            CHECK(table.data(r, 0) == Approx(table.values[r]));
            CHECK(table.data(r, 1) / table.values[r] == Approx(4 * 130e3 * 130e3 / (2.1e9 * 8.4e6)));
        }
    }

    SECTION("coherent peak area is linear in drive power") {
        SweepSpec spec;
        spec.target = "drive.p_mu_w";
        spec.range = {1e-7, 1e-5, 5, SweepScale::log};
        spec.quantities = {"coherent_peak_area", "n_coh"};
        const auto table = run_sweep(spec, ctx);
        const double ratio = table.data(0, 0) / table.values[0];
        CHECK(ratio > 0.0);
        for (Eigen::Index r = 0; r < table.values.size(); ++r) {
            CHECK(table.data(r, 0) / table.values[r] == Approx(ratio).epsilon(1e-12));
        }
    }

    SECTION("scaling the IDT at fixed total capacitance") {
        SweepSpec spec;
        spec.target = "electromechanical.c_idt_f";
        spec.values = {0.21e-15, 0.42e-15, 0.84e-15, 1.68e-15};
        spec.co_scaled = {"electromechanical.gamma_me_hz"};
        spec.compensate = "qubit.c_q_f";
        spec.quantities = {"g_em", "z_q"};
        const auto table = run_sweep(spec, ctx);
        const double g0 = table.data(1, 0);
        for (Eigen::Index r = 0; r < table.values.size(); ++r) {
            CHECK(table.data(r, 0) == Approx(g0 * std::sqrt(table.values[r] / 0.42e-15)).epsilon(1e-12));
            CHECK(table.data(r, 1) == Approx(table.data(1, 1)).epsilon(1e-12));
        }
    }

    SECTION("parallel and serial evaluation agree exactly") {
        SweepSpec spec;
        spec.target = "optical.kappa_oe_hz";
        spec.range = {0.1e9, 2.5e9, 37, SweepScale::linear};
        spec.quantities = sweep_quantities();
        spec.quantities.erase(std::find(spec.quantities.begin(), spec.quantities.end(), "n_coh"));
        const auto a = run_sweep(spec, ctx, 1);
        const auto b = run_sweep(spec, ctx, 4);
        REQUIRE(a.data.rows() == 37);
        bool same = true;
        for (Eigen::Index i = 0; i < a.data.size(); ++i) {
            const double x = a.data.data()[i], y = b.data.data()[i];
            same = same && ((std::isnan(x) && std::isnan(y)) || x == y);
        }
        CHECK(same);
        // kappa_oe above kappa_o invalidates the row rather than the sweep.
        CHECK(std::isnan(a.data(36, 0)));
        CHECK_FALSE(std::isnan(a.data(0, 0)));

        std::ostringstream sa, sb;
        write_sweep_csv(sa, a);
        write_sweep_csv(sb, b);
        CHECK(sa.str() == sb.str());
    }

    SECTION("bad requests") {
        SweepSpec spec;
        spec.target = "optical.kappa_o_hz";
        spec.values = {2e9};
        spec.quantities = {"flux_capacitance"};
        CHECK_THROWS_AS(run_sweep(spec, ctx), InvalidParameter);
        spec.quantities = {"c_om"};
        spec.target = "optical.nope";
        CHECK_THROWS_AS(run_sweep(spec, ctx), InvalidParameter);
        CHECK_THROWS_AS(set_parameter(ctx, "optical.kappa_oe_hz", 5e9), ValidationError);
        CHECK(get_parameter(set_parameter(ctx, "qubit.c_q_f", 1e-13), "qubit.c_q_f") == 1e-13);
    }
}

TEST_CASE("device path resolution") {
    const auto dir = fs::temp_directory_path() / "eomkit_device_path_test";
    fs::create_directories(dir);
    std::ofstream(dir / "bench.cfg") << kMinimal;
    ::setenv("EOMKIT_DEVICE_PATH", ("/nonexistent:" + dir.string()).c_str(), 1);
    CHECK(resolve_device_path("bench") == dir / "bench.cfg");
    CHECK(load_device(resolve_device_path("bench.cfg")).device.g_om() == 130e3);
    ::unsetenv("EOMKIT_DEVICE_PATH");
    CHECK_THROWS_AS(resolve_device_path("bench"), ParseError);
    fs::remove_all(dir);
}
