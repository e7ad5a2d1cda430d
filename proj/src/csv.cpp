#include "rta/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace rta {

namespace {

constexpr int kColumns = 23;

void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(begin));
      return fields;
    }
    fields.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

double field_double(const std::string& s, int line_no, int column) {
  if (s.empty())
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": empty numeric field " +
                             std::to_string(column + 1));
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);  // accepts inf/nan spellings
  if (end != s.c_str() + s.size())
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": bad number '" + s +
                             "' in field " + std::to_string(column + 1));
  return v;
}

long field_int(const std::string& s, int line_no, int column) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": bad integer '" + s +
                             "' in field " + std::to_string(column + 1));
  return v;
}

}  // namespace

std::string csv_header() {
  return "time_s,deputy,x,y,z,xdot,ydot,zdot,"
         "udes_x,udes_y,udes_z,uact_x,uact_y,uact_z,intervening,"
         "phi_1,phi_2,phi_3,phi_4,phi_5,phi_6,phi_7,qp_status";
}

void write_log_csv(std::ostream& out, const SimulationLog& log) {
  out << csv_header() << '\n';
  std::string line;
  for (const LogRow& row : log.rows) {
    line.clear();
    append_double(line, row.time);
    line += ',';
    line += std::to_string(row.deputy);
    for (int k = 0; k < 6; ++k) {
      line += ',';
      append_double(line, row.state[k]);
    }
    for (int k = 0; k < 3; ++k) {
      line += ',';
      append_double(line, row.u_des[k]);
    }
    for (int k = 0; k < 3; ++k) {
      line += ',';
      append_double(line, row.u_act[k]);
    }
    line += row.intervening ? ",1" : ",0";
    for (int k = 0; k < 7; ++k) {
      line += ',';
      append_double(line, row.phi[static_cast<std::size_t>(k)]);
    }
    line += ',';
    line += row.qp_status;
    out << line << '\n';
  }
}

SimulationLog read_log_csv(std::istream& in) {
  SimulationLog log;
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header())
    throw std::runtime_error("csv line 1: unexpected header '" + line + "'");

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto fields = split_line(line);
    if (fields.size() != kColumns)
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(kColumns) + " fields, got " +
                               std::to_string(fields.size()));

    LogRow row;
    int c = 0;
    row.time = field_double(fields[static_cast<std::size_t>(c)], line_no, c);
    ++c;
    row.deputy = static_cast<int>(field_int(fields[static_cast<std::size_t>(c)], line_no, c));
    ++c;
    for (int k = 0; k < 6; ++k, ++c)
      row.state[k] = field_double(fields[static_cast<std::size_t>(c)], line_no, c);
    for (int k = 0; k < 3; ++k, ++c)
      row.u_des[k] = field_double(fields[static_cast<std::size_t>(c)], line_no, c);
    for (int k = 0; k < 3; ++k, ++c)
      row.u_act[k] = field_double(fields[static_cast<std::size_t>(c)], line_no, c);
    {
      const long flag = field_int(fields[static_cast<std::size_t>(c)], line_no, c);
      if (flag != 0 && flag != 1)
        throw std::runtime_error("csv line " + std::to_string(line_no) +
                                 ": intervening must be 0 or 1");
      row.intervening = flag == 1;
      ++c;
    }
    for (int k = 0; k < 7; ++k, ++c)
      row.phi[static_cast<std::size_t>(k)] =
          field_double(fields[static_cast<std::size_t>(c)], line_no, c);
    row.qp_status = fields[static_cast<std::size_t>(c)];
    if (row.qp_status.empty())
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": empty qp_status");
    log.rows.push_back(std::move(row));
  }
  return log;
}

}  // namespace rta
