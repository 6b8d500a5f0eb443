#pragma once

#include "hifd/feeder.hpp"

namespace hifd {

// Reference four-node chain (source at node 0, loads at 1..3) used as the
// default throughout the CLI and the benchmark suites.
FeederModel default_feeder();

// Eight-node tree with two laterals, the default topology for sensor
// placement studies.
FeederModel placement_feeder();

}  // namespace hifd
