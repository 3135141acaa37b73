#include "eomkit/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "eomkit/errors.hpp"

namespace eomkit {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string at(const std::string& source, int line) { return source + ":" + std::to_string(line) + ": "; }

double parse_cell(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    if (t.empty()) throw ParseError(where + "empty value");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw ParseError(where + "not a number: '" + t + "'");
    if (std::isnan(v)) throw ParseError(where + "NaN value");
    return v;
}

}  // namespace

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Trace read_trace(std::istream& in, const std::string& source) {
    std::string line;
    int lineno = 0;
    std::string header;
    while (std::getline(in, line)) {
        ++lineno;
        header = trim(line);
        if (!header.empty()) break;
    }
    if (header.empty()) throw ParseError(source + ": empty trace file");
    const auto comma = header.find(',');
    if (comma == std::string::npos || header.find(',', comma + 1) != std::string::npos) {
        throw ParseError(at(source, lineno) + "header must be 'x_unit,y_unit'");
    }
    Unit xu;
    Unit yu;
    try {
        xu = parse_unit(trim(header.substr(0, comma)));
        yu = parse_unit(trim(header.substr(comma + 1)));
    } catch (const Error& e) {
        throw ParseError(at(source, lineno) + e.what());
    }

    std::vector<double> xs;
    std::vector<double> ys;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const std::string where = at(source, lineno);
        if (row.find_first_of(";\t") != std::string::npos) {
            throw ParseError(where + "mixed delimiters (only ',' is accepted)");
        }
        const auto c = row.find(',');
        if (c == std::string::npos || row.find(',', c + 1) != std::string::npos) {
            throw ParseError(where + "expected exactly two comma-separated columns");
        }
        const double x = parse_cell(row.substr(0, c), where);
        const double y = parse_cell(row.substr(c + 1), where);
        if (!std::isfinite(x)) throw ParseError(where + "x must be finite");
        if (!xs.empty() && !(x > xs.back())) throw ParseError(where + "x is not strictly increasing");
        xs.push_back(x);
        ys.push_back(y);
    }
    const auto n = static_cast<Eigen::Index>(xs.size());
    return Trace(Eigen::Map<Eigen::ArrayXd>(xs.data(), n), Eigen::Map<Eigen::ArrayXd>(ys.data(), n), xu, yu);
}

Trace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open trace file '" + path.string() + "'");
    return read_trace(in, path.string());
}

void write_trace(std::ostream& out, const Trace& trace) {
    out << to_string(trace.x_unit()) << ',' << to_string(trace.y_unit()) << '\n';
    for (Eigen::Index i = 0; i < trace.size(); ++i) {
        out << format_number(trace.x()[i]) << ',' << format_number(trace.y()[i]) << '\n';
    }
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    write_trace(out, trace);
}

void write_eye_csv(std::ostream& out, const EyeDiagram& eye) {
    out << "segment,t_s,v\n";
    for (std::size_t s = 0; s < eye.segments.size(); ++s) {
        const auto& seg = eye.segments[s];
        for (Eigen::Index k = 0; k < seg.size(); ++k) {
            out << s << ',' << format_number(eye.t[k]) << ',' << format_number(seg[k]) << '\n';
        }
    }
}

}  // namespace eomkit
