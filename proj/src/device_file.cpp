#include "eomkit/device_file.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "eomkit/errors.hpp"

namespace eomkit {

namespace {

const std::vector<std::string> kSuffixes = {"_hz", "_dbm", "_w", "_f", "_ohm", "_k", "_rad"};

const std::map<std::string, std::vector<std::string>>& section_keys() {
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"optical", {"f_o_hz", "kappa_o_hz", "kappa_oe_hz", "eta_oc"}},
        {"mechanical", {"f_m_hz", "gamma_mi_hz", "g_om_hz", "temperature_k"}},
        {"electromechanical", {"gamma_me_hz", "c_idt_f", "z0_ohm"}},
        {"pump", {"detuning_hz", "p_on_chip_dbm", "p_on_chip_w", "n_c"}},
        {"qubit", {"c_q_f", "f_mu_hz", "kappa_mu_hz"}},
        {"modes", {"f_hz", "gamma_hz", "g_hz", "phi_rad", "gamma_e_hz"}},
    };
    return keys;
}

std::string strip_suffix(const std::string& key) {
    for (const auto& s : kSuffixes) {
        if (key.size() > s.size() && key.compare(key.size() - s.size(), s.size(), s) == 0) {
            return key.substr(0, key.size() - s.size());
        }
    }
    return key;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> to_number(const std::string& text) {
    if (text.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

using Block = std::map<std::string, double>;

struct RawFile {
    std::map<std::string, Block> sections;
    std::vector<Block> modes;
};

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

double watts_to_dbm(double watts) {
    if (!(watts > 0.0)) throw InvalidParameter("dBm needs a positive power");
    return 10.0 * std::log10(watts / 1e-3);
}

double parse_power(const std::string& text) {
    std::string t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto ends_with = [&](const std::string& s) {
        return t.size() > s.size() && t.compare(t.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with("dbm")) {
        if (auto v = to_number(trim(t.substr(0, t.size() - 3)))) return dbm_to_watts(*v);
    } else if (ends_with("w")) {
        if (auto v = to_number(trim(t.substr(0, t.size() - 1)))) return *v;
    } else if (auto v = to_number(t)) {
        return *v;
    }
    throw ParseError("cannot parse power '" + text + "' (use e.g. -7.9dbm or 1.6e-4w)");
}

std::optional<PumpState> DeviceBundle::pump() const {
    if (!pump_spec) return std::nullopt;
    return PumpState::make(device, pump_spec->detuning, pump_spec->p_on_chip, pump_spec->n_c);
}

DeviceBundle parse_device(std::istream& in, const std::string& source) {
    std::vector<std::string> issues;
    RawFile raw;
    std::string section;
    Block* block = nullptr;
    std::string line;
    int lineno = 0;
    const auto where = [&](int n) { return source + ":" + std::to_string(n) + ": "; };

    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back(where(lineno) + "malformed section header '" + line + "'");
                block = nullptr;
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (!section_keys().count(section)) {
                issues.push_back(where(lineno) + "unknown section [" + section + "]");
                block = nullptr;
            } else if (section == "modes") {
                raw.modes.emplace_back();
                block = &raw.modes.back();
            } else {
                if (raw.sections.count(section)) issues.push_back(where(lineno) + "duplicate section [" + section + "]");
                block = &raw.sections[section];
            }
            continue;
        }

        const auto sep = line.find_first_of("=:");
        if (sep == std::string::npos) {
            issues.push_back(where(lineno) + "expected 'key = value', got '" + line + "'");
            continue;
        }
        const std::string key = trim(line.substr(0, sep));
        const std::string value = trim(line.substr(sep + 1));
        if (block == nullptr) {
            issues.push_back(where(lineno) + "key '" + key + "' outside a known section");
            continue;
        }

        const auto& allowed = section_keys().at(section);
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            // A key is a known quantity with a missing or foreign unit suffix
            // when it equals, or extends with '_', an allowed key's stem.
            std::string expected;
            bool bare = false;
            for (const auto& a : allowed) {
                const std::string stem = strip_suffix(a);
                if (stem == a) continue;
                if (key == stem || key.rfind(stem + "_", 0) == 0) {
                    expected += (expected.empty() ? "" : " or ") + a;
                    bare = bare || key == stem;
                }
            }
            if (expected.empty()) {
                issues.push_back(where(lineno) + "unknown key '" + key + "' in [" + section + "]");
            } else if (bare) {
                issues.push_back(where(lineno) + "key '" + key + "' is missing its unit suffix (expected " + expected + ")");
            } else {
                issues.push_back(where(lineno) + "unit suffix mismatch for '" + key + "' (expected " + expected + ")");
            }
            continue;
        }
        const auto v = to_number(value);
        if (!v) {
            issues.push_back(where(lineno) + "value of '" + key + "' is not a finite number: '" + value + "'");
            continue;
        }
        if (!block->emplace(key, *v).second) issues.push_back(where(lineno) + "duplicate key '" + key + "'");
    }

    const auto get = [&](const std::string& sec, const std::string& key, std::optional<double> fallback) -> double {
        const auto s = raw.sections.find(sec);
        if (s != raw.sections.end()) {
            const auto k = s->second.find(key);
            if (k != s->second.end()) return k->second;
        }
        if (fallback) return *fallback;
        issues.push_back(source + ": missing required key '" + key + "' in [" + sec + "]");
        return 0.0;
    };

    DeviceParams::Fields f;
    f.f_o = get("optical", "f_o_hz", std::nullopt);
    f.kappa_o = get("optical", "kappa_o_hz", std::nullopt);
    f.kappa_oe = get("optical", "kappa_oe_hz", std::nullopt);
    f.eta_oc = get("optical", "eta_oc", 1.0);
    f.f_m = get("mechanical", "f_m_hz", std::nullopt);
    f.gamma_mi = get("mechanical", "gamma_mi_hz", std::nullopt);
    f.g_om = get("mechanical", "g_om_hz", std::nullopt);
    const double temperature = get("mechanical", "temperature_k", 300.0);
    f.gamma_me = get("electromechanical", "gamma_me_hz", std::nullopt);
    f.c_idt = get("electromechanical", "c_idt_f", 0.0);
    f.z0 = get("electromechanical", "z0_ohm", 50.0);
    if (!(temperature > 0.0)) issues.push_back(source + ": temperature_k must be positive");

    const bool fields_ok = DeviceParams::violations(f).empty();
    for (auto& v : DeviceParams::violations(f)) issues.push_back(source + ": " + v);

    std::optional<PumpSpec> pump;
    if (const auto s = raw.sections.find("pump"); s != raw.sections.end()) {
        const Block& b = s->second;
        PumpSpec p;
        p.detuning = get("pump", "detuning_hz", std::nullopt);
        const bool has_dbm = b.count("p_on_chip_dbm") > 0;
        const bool has_w = b.count("p_on_chip_w") > 0;
        if (has_dbm && has_w) issues.push_back(source + ": give p_on_chip_dbm or p_on_chip_w, not both");
        if (has_dbm) p.p_on_chip = dbm_to_watts(b.at("p_on_chip_dbm"));
        if (has_w) p.p_on_chip = b.at("p_on_chip_w");
        if (b.count("n_c")) p.n_c = b.at("n_c");
        if (!p.p_on_chip && !p.n_c) issues.push_back(source + ": [pump] needs p_on_chip_dbm, p_on_chip_w or n_c");
        if (fields_ok && (p.p_on_chip || p.n_c)) {
            try {
                PumpState::make(DeviceParams(f), p.detuning, p.p_on_chip, p.n_c);
            } catch (const Error& e) {
                issues.push_back(source + ": [pump] " + e.what());
            }
        }
        pump = p;
    }

    std::optional<QubitConfig> qubit;
    if (raw.sections.count("qubit")) {
        QubitConfig q{get("qubit", "c_q_f", std::nullopt), get("qubit", "f_mu_hz", std::nullopt),
                      get("qubit", "kappa_mu_hz", std::nullopt)};
        if (!(q.c_q > 0.0 && q.f_mu > 0.0 && q.kappa_mu > 0.0)) {
            issues.push_back(source + ": [qubit] values must be positive");
        }
        qubit = q;
    }

    std::vector<MechanicalMode> modes;
    for (std::size_t i = 0; i < raw.modes.size(); ++i) {
        const Block& b = raw.modes[i];
        const auto req = [&](const char* key) {
            const auto k = b.find(key);
            if (k != b.end()) return k->second;
            issues.push_back(source + ": mode " + std::to_string(i) + " is missing '" + key + "'");
            return 0.0;
        };
        const auto opt = [&](const char* key, double fallback) {
            const auto k = b.find(key);
            return k != b.end() ? k->second : fallback;
        };
        MechanicalMode m{req("f_hz"), req("gamma_hz"), req("g_hz"), opt("phi_rad", 0.0), req("gamma_e_hz")};
        try {
            validate(m);
        } catch (const Error& e) {
            issues.push_back(source + ": mode " + std::to_string(i) + ": " + e.what());
        }
        modes.push_back(m);
    }

    if (!issues.empty()) throw ValidationError(std::move(issues));
    return DeviceBundle{DeviceParams(f), pump, qubit, std::move(modes), temperature};
}

DeviceBundle load_device(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open device file '" + path.string() + "'");
    return parse_device(in, path.string());
}

void write_device(std::ostream& out, const DeviceBundle& b) {
    const auto& f = b.device.fields();
    out << "[optical]\n"
        << "f_o_hz = " << g17(f.f_o) << '\n'
        << "kappa_o_hz = " << g17(f.kappa_o) << '\n'
        << "kappa_oe_hz = " << g17(f.kappa_oe) << '\n'
        << "eta_oc = " << g17(f.eta_oc) << "\n\n"
        << "[mechanical]\n"
        << "f_m_hz = " << g17(f.f_m) << '\n'
        << "gamma_mi_hz = " << g17(f.gamma_mi) << '\n'
        << "g_om_hz = " << g17(f.g_om) << '\n'
        << "temperature_k = " << g17(b.temperature) << "\n\n"
        << "[electromechanical]\n"
        << "gamma_me_hz = " << g17(f.gamma_me) << '\n'
        << "c_idt_f = " << g17(f.c_idt) << '\n'
        << "z0_ohm = " << g17(f.z0) << '\n';
    if (b.pump_spec) {
        out << "\n[pump]\n" << "detuning_hz = " << g17(b.pump_spec->detuning) << '\n';
        if (b.pump_spec->p_on_chip) out << "p_on_chip_w = " << g17(*b.pump_spec->p_on_chip) << '\n';
        if (b.pump_spec->n_c) out << "n_c = " << g17(*b.pump_spec->n_c) << '\n';
    }
    if (b.qubit) {
        out << "\n[qubit]\n"
            << "c_q_f = " << g17(b.qubit->c_q) << '\n'
            << "f_mu_hz = " << g17(b.qubit->f_mu) << '\n'
            << "kappa_mu_hz = " << g17(b.qubit->kappa_mu) << '\n';
    }
    for (const auto& m : b.modes) {
        out << "\n[modes]\n"
            << "f_hz = " << g17(m.f) << '\n'
            << "gamma_hz = " << g17(m.gamma) << '\n'
            << "g_hz = " << g17(m.g) << '\n'
            << "phi_rad = " << g17(m.phi) << '\n'
            << "gamma_e_hz = " << g17(m.gamma_e) << '\n';
    }
}

std::filesystem::path resolve_device_path(const std::string& name) {
    namespace fs = std::filesystem;
    const auto try_path = [](const fs::path& p) -> std::optional<fs::path> {
        if (fs::is_regular_file(p)) return p;
        fs::path with_ext = p;
        with_ext += ".cfg";
        if (fs::is_regular_file(with_ext)) return with_ext;
        return std::nullopt;
    };
    if (auto p = try_path(name)) return *p;
    if (const char* env = std::getenv("EOMKIT_DEVICE_PATH")) {
        std::stringstream ss(env);
        std::string dir;
        while (std::getline(ss, dir, ':')) {
            if (dir.empty()) continue;
            if (auto p = try_path(fs::path(dir) / name)) return *p;
        }
    }
#ifdef EOMKIT_DATA_DIR
    if (auto p = try_path(fs::path(EOMKIT_DATA_DIR) / name)) return *p;
#endif
    throw ParseError("device file '" + name + "' not found (searched cwd, $EOMKIT_DEVICE_PATH, bundled data)");
}

}  // namespace eomkit
