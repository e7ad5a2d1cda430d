#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "rta/scenario.hpp"

// INI-style configuration for the inspection experiment. Sections mirror the
// library layout ([scenario], [filter], [backup], [qp]); every
// InspectionConfig field is addressable. Unknown sections or keys are errors,
// reported with file, line, and field.

namespace rta {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string source = "", int line = -1,
              std::string field = "");

  const std::string& source() const { return source_; }
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string source_;
  int line_;
  std::string field_;
};

// Parses `# comments`, `; comments`, `[section]` headers, `key = value`
// pairs. Returns a finalized, validated config.
InspectionConfig parse_config(std::istream& in, const std::string& source_name);
InspectionConfig load_config(const std::string& path);

// Applies one `section.key = value` override (used by CLI flags). Revalidates
// nothing; callers finalize + validate when done.
void apply_override(InspectionConfig& cfg, const std::string& dotted_key,
                    const std::string& value);

// The shipped default configuration, as parseable text.
std::string default_config_text();

}  // namespace rta
