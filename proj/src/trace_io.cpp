#include "saddlenet/trace_io.hpp"

#include <cstdio>

namespace saddlenet {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) cell(c);
  end_row();
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (!first_) out_ << ',';
  out_ << s;
  first_ = false;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

void write_trace_header(std::ostream& out) { CsvWriter(out).header(kTraceColumns); }

void write_trace_row(std::ostream& out, const TraceRecord& r) {
  CsvWriter w(out);
  w.cell(r.iter).cell(r.f_value).cell(r.vi_residual).cell(r.step_norm).cell(r.dist_to_ref).cell(r.ergodic_gap).cell(
      r.delta_k);
  w.end_row();
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  write_trace_header(out);
  for (const auto& r : trace.records) write_trace_row(out, r);
}

}  // namespace saddlenet
