#pragma once

#include <string>

#include <doctest.h>

#include "hiernav/scenario.hpp"

namespace hiernav::test {

inline std::string fixture_path(const std::string& name) { return std::string(HIERNAV_FIXTURE_DIR) + "/" + name; }

inline Scenario fixture(const std::string& name) { return load_scenario(fixture_path(name)); }

inline Scenario fixture3r() { return fixture("fixture3r.json"); }

}  // namespace hiernav::test
