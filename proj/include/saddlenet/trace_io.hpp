#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "saddlenet/solvers.hpp"

namespace saddlenet {

/// Shortest round-trip representation ("%.17g"); empty string for nullopt.
std::string format_real(double v);
std::string format_real(const std::optional<double>& v);

/// Column order of the saddle-point trace CSV.
inline const std::vector<std::string> kTraceColumns = {"iter",        "f_value",      "vi_residual", "step_norm",
                                                        "dist_to_ref", "ergodic_gap", "delta_k"};

/// Minimal CSV emitter; values never contain separators so no quoting is done.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& columns);
  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double v) { return cell(format_real(v)); }
  CsvWriter& cell(const std::optional<double>& v) { return cell(format_real(v)); }
  CsvWriter& cell(long v) { return cell(std::to_string(v)); }
  CsvWriter& cell(int v) { return cell(std::to_string(v)); }
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

void write_trace_header(std::ostream& out);
void write_trace_row(std::ostream& out, const TraceRecord& record);
void write_trace_csv(std::ostream& out, const RunTrace& trace);

}  // namespace saddlenet
