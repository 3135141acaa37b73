#pragma once

// Two-column CSV traces with a `x_unit,y_unit` header line, e.g.
//
//   hz,psd
//   4.3e9,1.25e-3
//
// Values are written with 17 significant digits so a round trip is exact.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "eomkit/link_sim.hpp"
#include "eomkit/trace.hpp"

namespace eomkit {

Trace read_trace(std::istream& in, const std::string& source = "<input>");
Trace read_trace(const std::filesystem::path& path);

void write_trace(std::ostream& out, const Trace& trace);
void write_trace(const std::filesystem::path& path, const Trace& trace);

/// Long-form eye data: `segment,t_s,v`, one row per sample of each segment.
void write_eye_csv(std::ostream& out, const EyeDiagram& eye);

/// "%.17g" formatting used by every text writer.
std::string format_number(double v);

}  // namespace eomkit
