#include "coalbg/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace coalbg::report {

std::string format_value(double v) {
  if (!std::isfinite(v)) return "NA";
  if (v == 0.0) return "0";
  char buf[40];
  // Integral values (counts, indices, exact constants) print without an
  // exponent as long as every digit is significant.
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  // Shortest round-trip form: widen the precision until the value parses
  // back exactly; 17 significant digits always suffice for a double.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string to_csv(const Table& table) {
  std::ostringstream out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out << ',';
    out << table.header[c];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::invalid_argument("to_csv: row width differs from header");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << format_value(row[c]);
    }
    out << '\n';
  }
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_csv(const std::string& path, const Table& table) {
  write_text(path, to_csv(table));
}

std::string to_json(const RunManifest& manifest) {
  nlohmann::ordered_json j;
  j["command"] = manifest.command;
  nlohmann::ordered_json params;
  for (const auto& [key, value] : manifest.parameters) params[key] = value;
  j["parameters"] = params;
  j["scale"] = manifest.scale;
  j["seed"] = manifest.seed;
  nlohmann::ordered_json disc;
  for (const auto& [key, value] : manifest.discretization) disc[key] = value;
  j["discretization"] = disc;
  j["version"] = manifest.version;
  j["walltime_seconds"] = manifest.walltime_seconds;
  j["outputs"] = manifest.outputs;
  return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  write_text(path, to_json(manifest));
}

std::vector<std::pair<std::string, std::string>> describe(
    const ModelParams& params) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("mu1", format_value(params.mu1));
  out.emplace_back("mu2", format_value(params.mu2));
  out.emplace_back("r", format_value(params.r));
  out.emplace_back("nu", format_value(params.nu));
  switch (params.selection.kind) {
    case SelectionProfile::Kind::directional:
      out.emplace_back("selection.kind", "directional");
      out.emplace_back("selection.s0", format_value(params.selection.s0));
      break;
    case SelectionProfile::Kind::balancing:
      out.emplace_back("selection.kind", "balancing");
      out.emplace_back("selection.s0", format_value(params.selection.s0));
      out.emplace_back("selection.p0", format_value(params.selection.p0));
      break;
    case SelectionProfile::Kind::tabulated: {
      out.emplace_back("selection.kind", "tabulated");
      std::ostringstream pts;
      for (std::size_t i = 0; i < params.selection.breakpoints.size(); ++i) {
        if (i) pts << ';';
        pts << format_value(params.selection.breakpoints[i].first) << ':'
            << format_value(params.selection.breakpoints[i].second);
      }
      out.emplace_back("selection.breakpoints", pts.str());
      break;
    }
  }
  if (params.N) out.emplace_back("N", std::to_string(*params.N));
  return out;
}

}  // namespace coalbg::report
