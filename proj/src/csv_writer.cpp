#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "entrate/sweeps.hpp"

namespace entrate {

std::string format_number(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

namespace {

std::ofstream open_for_writing(const std::string& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(file + ": cannot open for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& file) {
  out.flush();
  if (!out) throw std::runtime_error(file + ": write failed");
}

}  // namespace

void write_csv(const SweepResult& result, std::ostream& out) {
  out << "axis,user_index,rate_ebit_s,yield,memory_cells,objective,status\n";
  for (const SweepRow& row : result.rows) {
    for (std::size_t j = 0; j < row.users; ++j) {
      out << format_number(row.axis_value) << ',' << j << ',';
      if (row.has_values()) {
        out << format_number(row.rates[j]) << ',' << format_number(row.yields[j]) << ','
            << format_number(row.memory_cells[j]) << ',' << format_number(row.objective);
      } else {
        out << ",,,";
      }
      out << ',' << to_string(row.status) << '\n';
    }
  }
}

void write_csv(const SweepResult& result, const std::string& file) {
  std::ofstream out = open_for_writing(file);
  write_csv(result, out);
  finish(out, file);
}

void write_raw_csv(const SweepResult& result, std::ostream& out) {
  out << "axis,run,user_index,distance_km,rate_ebit_s,yield,memory_cells,objective,status\n";
  for (const RawRow& raw : result.raw) {
    const RateAllocation& a = raw.allocation;
    for (std::size_t j = 0; j < raw.distances_km.size(); ++j) {
      out << format_number(raw.axis_value) << ',' << raw.run << ',' << j << ','
          << format_number(raw.distances_km[j]) << ',';
      if (a.optimal()) {
        out << format_number(a.rates[j]) << ',' << format_number(a.yields[j]) << ','
            << a.memory_cells[j] << ',' << format_number(a.objective);
      } else {
        out << ",,,";
      }
      out << ',' << to_string(a.status) << '\n';
    }
  }
}

void write_raw_csv(const SweepResult& result, const std::string& file) {
  std::ofstream out = open_for_writing(file);
  write_raw_csv(result, out);
  finish(out, file);
}

}  // namespace entrate
