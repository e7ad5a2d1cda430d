#include "rta/config.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

namespace rta {

namespace {

std::string compose(const std::string& message, const std::string& source, int line,
                    const std::string& field) {
  std::string out;
  if (!source.empty()) {
    out += source;
    if (line >= 1) out += ":" + std::to_string(line);
    out += ": ";
  }
  if (!field.empty()) out += field + ": ";
  out += message;
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v) {
  const std::string t = trim(v);
  if (t.empty()) throw std::invalid_argument("expected a number, got an empty value");
  char* end = nullptr;
  const double d = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw std::invalid_argument("expected a number, got '" + t + "'");
  return d;
}

long long parse_int(const std::string& v) {
  const std::string t = trim(v);
  if (t.empty()) throw std::invalid_argument("expected an integer, got an empty value");
  char* end = nullptr;
  const long long i = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size())
    throw std::invalid_argument("expected an integer, got '" + t + "'");
  return i;
}

std::uint64_t parse_u64(const std::string& v) {
  const std::string t = trim(v);
  if (t.empty() || t[0] == '-')
    throw std::invalid_argument("expected a non-negative integer, got '" + t + "'");
  char* end = nullptr;
  const unsigned long long i = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size())
    throw std::invalid_argument("expected a non-negative integer, got '" + t + "'");
  return i;
}

bool parse_bool(const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw std::invalid_argument("expected true/false, got '" + t + "'");
}

std::vector<double> parse_doubles(const std::string& v, std::size_t count) {
  std::istringstream in(trim(v));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok));
  if (out.size() != count)
    throw std::invalid_argument("expected " + std::to_string(count) +
                                " space-separated numbers, got " + std::to_string(out.size()));
  return out;
}

// Applies one key in one section; throws std::invalid_argument on unknown
// keys or malformed values.
void apply_kv(InspectionConfig& cfg, const std::string& section, const std::string& key,
              const std::string& value) {
  if (section == "scenario") {
    if (key == "u_max") { cfg.u_max = parse_double(value); return; }
    if (key == "mass") { cfg.mass = parse_double(value); return; }
    if (key == "mean_motion") { cfg.mean_motion = parse_double(value); return; }
    if (key == "e_sun") {
      const auto v = parse_doubles(value, 3);
      cfg.e_sun = Eigen::Vector3d(v[0], v[1], v[2]);
      return;
    }
    if (key == "r_d") { cfg.r_d = parse_double(value); return; }
    if (key == "r_c") { cfg.r_c = parse_double(value); return; }
    if (key == "nu0") { cfg.nu0 = parse_double(value); return; }
    if (key == "nu1") { cfg.nu1 = parse_double(value); return; }
    if (key == "theta_s") { cfg.theta_s = parse_double(value); return; }
    if (key == "v_max") { cfg.v_max = parse_double(value); return; }
    if (key == "deputies") { cfg.deputies = static_cast<int>(parse_int(value)); return; }
    if (key == "duration") { cfg.duration = parse_double(value); return; }
    if (key == "dt") { cfg.dt = parse_double(value); return; }
    if (key == "seed") { cfg.seed = parse_u64(value); return; }
    if (key == "primary_lqr_r") { cfg.primary_lqr_r = parse_double(value); return; }
    throw std::invalid_argument("unknown key '" + key + "' in [scenario]");
  }
  if (section == "filter") {
    if (key == "kind") { cfg.filter = filter_kind_from_string(trim(value)); return; }
    if (key == "implicit_stride") {
      cfg.implicit_stride = static_cast<int>(parse_int(value));
      return;
    }
    if (key == "local_minima_rows") { cfg.local_minima_rows = parse_bool(value); return; }
    // phiK_rel_degree / phiK_alpha, K in 1..7
    if (key.size() >= 5 && key.compare(0, 3, "phi") == 0) {
      const char c = key[3];
      if (c >= '1' && c <= '7' && key[4] == '_') {
        const std::size_t k = static_cast<std::size_t>(c - '1');
        const std::string rest = key.substr(5);
        if (rest == "rel_degree") {
          cfg.tuning[k].rel_degree = static_cast<int>(parse_int(value));
          return;
        }
        if (rest == "alpha") {
          const auto v = parse_doubles(value, 2);
          cfg.tuning[k].alpha_a = v[0];
          cfg.tuning[k].alpha_b = v[1];
          return;
        }
      }
    }
    throw std::invalid_argument("unknown key '" + key + "' in [filter]");
  }
  if (section == "backup") {
    if (key == "horizon") { cfg.backup_horizon = parse_double(value); return; }
    if (key == "dt_b") { cfg.backup_dt = parse_double(value); return; }
    if (key == "lqr_r") { cfg.backup_lqr_r = parse_double(value); return; }
    throw std::invalid_argument("unknown key '" + key + "' in [backup]");
  }
  if (section == "qp") {
    // The solver is exact and currently exposes no tunables; the section is
    // reserved so configs can carry it without erroring.
    throw std::invalid_argument("unknown key '" + key + "' in [qp]");
  }
  throw std::invalid_argument("unknown section [" + section + "]");
}

}  // namespace

ConfigError::ConfigError(const std::string& message, std::string source, int line,
                         std::string field)
    : std::runtime_error(compose(message, source, line, field)),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field)) {}

InspectionConfig parse_config(std::istream& in, const std::string& source_name) {
  InspectionConfig cfg;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("malformed section header '" + line + "'", source_name, line_no);
      section = trim(line.substr(1, line.size() - 2));
      if (section != "scenario" && section != "filter" && section != "backup" &&
          section != "qp")
        throw ConfigError("unknown section [" + section + "]", source_name, line_no);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value', got '" + line + "'", source_name, line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("missing key before '='", source_name, line_no);
    if (section.empty())
      throw ConfigError("key '" + key + "' appears before any [section]", source_name, line_no);

    try {
      apply_kv(cfg, section, key, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what(), source_name, line_no, section + "." + key);
    }
  }

  cfg.finalize();
  try {
    validate_config(cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), source_name);
  }
  return cfg;
}

InspectionConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file", path);
  return parse_config(in, path);
}

void apply_override(InspectionConfig& cfg, const std::string& dotted_key,
                    const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= dotted_key.size())
    throw ConfigError("override key must look like section.key", "", -1, dotted_key);
  try {
    apply_kv(cfg, dotted_key.substr(0, dot), dotted_key.substr(dot + 1), value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), "", -1, dotted_key);
  }
}

std::string default_config_text() {
  return R"(# Multi-agent inspection experiment, reference configuration.

[scenario]
u_max = 1.0          # N, per-axis thrust limit
mass = 12.0          # kg
mean_motion = 0.001027  # rad/s
e_sun = 1 0 0        # unit vector toward the sun
r_d = 5.0            # m, deputy collision radius
r_c = 5.0            # m, chief collision radius
nu0 = 0.2            # m/s, speed floor of the dynamic limit
# nu1 defaults to 4 * mean_motion when omitted
theta_s = 0.5235987755982988  # rad, sun exclusion full angle (30 deg)
v_max = 2.0          # m/s, per-axis velocity cap
deputies = 5
duration = 2000      # s
dt = 1               # s
seed = 7
primary_lqr_r = 10000

[filter]
kind = explicit-asif  # none | explicit-simplex | implicit-simplex | explicit-asif | implicit-asif
# Position-only constraints need the higher-order transform (no direct
# control influence in their raw forms).
phi1_rel_degree = 2
phi2_rel_degree = 2
phi3_rel_degree = 1
phi4_rel_degree = 2
phi5_rel_degree = 1
phi6_rel_degree = 1
phi7_rel_degree = 1
# Strengthening exponents (a b): alpha(z) = 10^a z + 10^b z^3
phi1_alpha = -2 -2
phi2_alpha = -2 -2
phi3_alpha = -2 -2
phi4_alpha = -2 -2
phi5_alpha = -2 -2
phi6_alpha = -2 -2
phi7_alpha = -2 -2
implicit_stride = 5
local_minima_rows = true

[backup]
horizon = 500  # s
dt_b = 1       # s
lqr_r = 1000

[qp]
# Exact active-set solver; no tunables.
)";
}

}  // namespace rta
