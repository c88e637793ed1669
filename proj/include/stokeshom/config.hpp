#pragma once

#include <string>

#include "stokeshom/twoscale.hpp"

namespace shom {

// Run configuration parsed from JSON; validation failures carry the JSON
// pointer of the offending field.
struct RunConfig {
  SweepConfig sweep;
  std::string out_dir = "out";
  bool write_vtk_files = true;
  bool write_csv = true;
  bool write_json = true;
  std::string digest;  // content hash of the config file

  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& json_text);
};

constexpr const char* kToolVersion = "0.1.0";

}  // namespace shom
