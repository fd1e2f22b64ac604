#pragma once

#include "pcap/verify.hpp"

#include <string>
#include <vector>

namespace pcap {

/// Malformed or unreadable configuration; the message names the line or field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Config {
  std::vector<ExperimentSpec> experiments;
  std::string output;  // empty: caller's default
  int verbosity = 0;
};

/// Parses a config document. Relative model paths resolve against base_dir.
/// Either one experiment object, or {"experiments": [...], "output", "verbosity"}.
Config parse_config(const std::string& text, const std::string& base_dir = ".");
Config load_config(const std::string& path);

}  // namespace pcap
