#pragma once

#include <string>
#include <vector>

#include "mixorder/mixture.hpp"

namespace mixorder {

// Built-in data-generating designs of the size/power study, keyed by table
// and model number. Power tables reuse the parameter tables they cite
// (table3-* aliases table2-*, table6-* aliases table5-*).
struct SimDesign {
  std::string name;
  MixtureParams truth;
  int test_m0 = 1;  // null order the test targets under this design
};

std::vector<std::string> design_names();
SimDesign get_design(const std::string& name);

}  // namespace mixorder
