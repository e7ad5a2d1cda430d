#pragma once

#include <iosfwd>
#include <string>

#include "rta/scenario.hpp"

// Simulation-log CSV: fixed column order, doubles at 17 significant digits so
// a written log re-parses to the exact in-memory values (and equal runs
// produce byte-identical files).

namespace rta {

std::string csv_header();

void write_log_csv(std::ostream& out, const SimulationLog& log);

// Strict reader: header and every row validated; errors carry line numbers.
// wall_clock_seconds is not part of the CSV and comes back zero.
SimulationLog read_log_csv(std::istream& in);

}  // namespace rta
