#pragma once
// Dataset emission: CSV tables with lossless numeric formatting and the
// run manifest that accompanies every dataset directory.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "coalbg/core.hpp"

namespace coalbg::report {

// Shortest representation that round-trips a double (up to 17 significant
// digits, '.' decimal separator).  Non-finite values render as NA, the
// only non-numeric token the tables may carry.
std::string format_value(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// One header line, comma separators, '\n' line ends, no trailing blank.
std::string to_csv(const Table& table);
void write_csv(const std::string& path, const Table& table);

// Raw text writer used by every exporter (binary mode, so files are
// byte-identical across platforms); exposed for callers that assemble
// CSV text with mixed string/number columns themselves.
void write_text(const std::string& path, const std::string& text);

// Everything needed to reproduce a dataset: the command, the complete
// parameter set and scale convention, the seed, the discretization, the
// software version, and the wall-clock time of the run.  Re-running the
// recorded command reproduces every CSV byte for byte; the wall-clock
// entry is informational and lives only here.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::string scale;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> discretization;
  std::string version = kVersion;
  double walltime_seconds = 0.0;
  std::vector<std::string> outputs;  // CSV files this manifest covers
};

// JSON with insertion-ordered keys.
std::string to_json(const RunManifest& manifest);
void write_manifest(const std::string& path, const RunManifest& manifest);

// Key/value rendering of a parameter set, in a fixed field order, for
// embedding into manifests.
std::vector<std::pair<std::string, std::string>> describe(
    const ModelParams& params);

}  // namespace coalbg::report
