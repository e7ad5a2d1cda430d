#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "rta/csv.hpp"
#include "rta/scenario.hpp"

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

rta::LogRow sample_row(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  rta::LogRow row;
  row.time = std::abs(u(rng));
  row.deputy = static_cast<int>(rng() % 7);
  for (int k = 0; k < 6; ++k) row.state[k] = u(rng);
  for (int k = 0; k < 3; ++k) row.u_des[k] = u(rng) / 1e3;
  for (int k = 0; k < 3; ++k) row.u_act[k] = u(rng) / 1e3;
  row.intervening = (rng() & 1) != 0;
  for (auto& p : row.phi) p = u(rng);
  row.qp_status = (rng() & 1) ? "optimal" : "na";
  return row;
}

std::string expect_failure(const std::string& text) {
  std::istringstream in(text);
  try {
    (void)rta::read_log_csv(in);
  } catch (const std::runtime_error& e) {
    return e.what();
  }
  throw std::logic_error("read_log_csv unexpectedly succeeded");
}

// A minimal well-formed data line to mutate in the error cases.
std::string good_line() {
  return "0,0,1,2,3,4,5,6,0.1,0.2,0.3,0.1,0.2,0.3,0,1,2,3,4,5,6,7,optimal";
}

}  // namespace

TEST_SUITE("csv") {

TEST_CASE("random rows survive a write/read round trip exactly") {
  std::mt19937_64 rng(2024);
  rta::SimulationLog log;
  for (int k = 0; k < 200; ++k) log.rows.push_back(sample_row(rng));
  log.wall_clock_seconds = 3.5;  // not serialized; must come back zero

  std::ostringstream out;
  rta::write_log_csv(out, log);
  std::istringstream in(out.str());
  const auto back = rta::read_log_csv(in);

  REQUIRE(back.rows.size() == log.rows.size());
  CHECK(back.wall_clock_seconds == 0.0);
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    const auto& a = log.rows[k];
    const auto& b = back.rows[k];
    CHECK(a.time == b.time);
    CHECK(a.deputy == b.deputy);
    CHECK((a.state.array() == b.state.array()).all());
    CHECK((a.u_des.array() == b.u_des.array()).all());
    CHECK((a.u_act.array() == b.u_act.array()).all());
    CHECK(a.intervening == b.intervening);
    for (int i = 0; i < 7; ++i) CHECK(a.phi[static_cast<std::size_t>(i)] ==
                                      b.phi[static_cast<std::size_t>(i)]);
    CHECK(a.qp_status == b.qp_status);
  }

  // Re-serializing the parsed log reproduces the bytes.
  std::ostringstream again;
  rta::write_log_csv(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("awkward doubles round-trip: denormals, ulps, infinities") {
  rta::LogRow row;
  row.time = 0.1 + 0.2;  // 0.30000000000000004
  row.deputy = 3;
  row.state << 1.0 / 3.0, -0.0, 5e-324, 1e308, std::nextafter(1.0, 2.0), -2.2250738585072014e-308;
  row.u_des << M_PI, -1e-17, 0.0;
  row.u_act << 1.0, -1.0, 0.1;
  row.intervening = true;
  row.phi = {0.3, kInf, -kInf, 1e-300, -4.9406564584124654e-324, 0.0, 123456.789012345678};
  row.qp_status = "relaxed";
  rta::SimulationLog log;
  log.rows.push_back(row);

  std::ostringstream out;
  rta::write_log_csv(out, log);
  std::istringstream in(out.str());
  const auto back = rta::read_log_csv(in);
  REQUIRE(back.rows.size() == 1);
  const auto& b = back.rows[0];

  CHECK(b.time == row.time);
  for (int k = 0; k < 6; ++k) CHECK(b.state[k] == row.state[k]);
  // -0.0 keeps its sign through the text form
  CHECK(std::signbit(b.state[1]));
  for (int k = 0; k < 3; ++k) CHECK(b.u_des[k] == row.u_des[k]);
  CHECK(b.phi[0] == 0.3);
  CHECK(b.phi[1] == kInf);
  CHECK(b.phi[2] == -kInf);
  CHECK(b.phi[3] == 1e-300);
  CHECK(b.phi[4] == -4.9406564584124654e-324);
  CHECK(b.phi[6] == row.phi[6]);
}

TEST_CASE("header text is stable and strictly enforced") {
  CHECK(rta::csv_header() ==
        "time_s,deputy,x,y,z,xdot,ydot,zdot,"
        "udes_x,udes_y,udes_z,uact_x,uact_y,uact_z,intervening,"
        "phi_1,phi_2,phi_3,phi_4,phi_5,phi_6,phi_7,qp_status");

  CHECK(expect_failure("") == "csv: empty input");
  CHECK(expect_failure("time,deputy\n1,2\n") ==
        "csv line 1: unexpected header 'time,deputy'");

  // case matters
  const std::string upper = "TIME_S" + rta::csv_header().substr(6);
  CHECK(expect_failure(upper + "\n").find("unexpected header") != std::string::npos);
}

TEST_CASE("row shape errors carry the line number") {
  const std::string header = rta::csv_header() + "\n";

  CHECK(expect_failure(header + "1,2,3\n") == "csv line 2: expected 23 fields, got 3");
  CHECK(expect_failure(header + good_line() + ",extra\n") ==
        "csv line 2: expected 23 fields, got 24");
  CHECK(expect_failure(header + good_line() + "\n" + "1,2\n") ==
        "csv line 3: expected 23 fields, got 2");
}

TEST_CASE("field errors name the offending column") {
  const std::string header = rta::csv_header() + "\n";

  {  // time (field 1) not a number
    auto line = good_line();
    line.replace(0, 1, "soon");
    CHECK(expect_failure(header + line + "\n") ==
          "csv line 2: bad number 'soon' in field 1");
  }
  {  // deputy (field 2) not an integer
    CHECK(expect_failure(header + "0,two,1,2,3,4,5,6,0,0,0,0,0,0,0,1,2,3,4,5,6,7,na\n") ==
          "csv line 2: bad integer 'two' in field 2");
  }
  {  // empty numeric field
    CHECK(expect_failure(header + "0,0,,2,3,4,5,6,0,0,0,0,0,0,0,1,2,3,4,5,6,7,na\n") ==
          "csv line 2: empty numeric field 3");
  }
  {  // intervening flag outside {0, 1}
    CHECK(expect_failure(header + "0,0,1,2,3,4,5,6,0,0,0,0,0,0,2,1,2,3,4,5,6,7,na\n") ==
          "csv line 2: intervening must be 0 or 1");
  }
  {  // empty status
    CHECK(expect_failure(header + "0,0,1,2,3,4,5,6,0,0,0,0,0,0,0,1,2,3,4,5,6,7,\n") ==
          "csv line 2: empty qp_status");
  }
  {  // trailing junk inside a numeric field
    CHECK(expect_failure(header + "0,0,1,2,3,4,5,6,0,0,0,0,0,0,0,1,2,3,4,5,6,7e1x,na\n") ==
          "csv line 2: bad number '7e1x' in field 22");
  }
}

TEST_CASE("carriage returns and blank lines are tolerated") {
  const std::string text = rta::csv_header() + "\r\n" + good_line() + "\r\n" + "\n" +
                           good_line() + "\n" + "\r\n";
  std::istringstream in(text);
  const auto log = rta::read_log_csv(in);
  REQUIRE(log.rows.size() == 2);
  CHECK(log.rows[0].state[0] == 1.0);
  CHECK(log.rows[1].qp_status == "optimal");
}

TEST_CASE("simulation output parses back to the in-memory log") {
  auto cfg = rta::default_config();
  cfg.deputies = 2;
  cfg.duration = 30.0;
  cfg.backup_horizon = 100.0;
  const auto log = rta::run_simulation(cfg);
  REQUIRE(log.rows.size() == 60);

  std::ostringstream out;
  rta::write_log_csv(out, log);
  std::istringstream in(out.str());
  const auto back = rta::read_log_csv(in);

  REQUIRE(back.rows.size() == log.rows.size());
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    const auto& a = log.rows[k];
    const auto& b = back.rows[k];
    CHECK(a.time == b.time);
    CHECK((a.state.array() == b.state.array()).all());
    CHECK((a.u_act.array() == b.u_act.array()).all());
    for (int i = 0; i < 7; ++i)
      CHECK(a.phi[static_cast<std::size_t>(i)] == b.phi[static_cast<std::size_t>(i)]);
    CHECK(a.qp_status == b.qp_status);
  }

  // Summaries computed before writing and after reading agree.
  const auto s1 = rta::summarize(log);
  const auto s2 = rta::summarize(back);
  CHECK(s1.min_overall == s2.min_overall);
  CHECK(s1.interventions == s2.interventions);
  CHECK(s1.qp_relaxations == s2.qp_relaxations);
}

}  // TEST_SUITE
