#include "hifd/fixtures.hpp"

namespace hifd {

FeederModel default_feeder() {
  FeederModel f;
  f.nodes = {0, 1, 2, 3};
  f.lines = {
      {0, 1, 2.0, 0.008},
      {1, 2, 2.0, 0.008},
      {2, 3, 2.0, 0.008},
  };
  f.source = {0, 14400.0, 60.0};
  // Mixed power factors: per-node load jitter then shifts the aggregate
  // impedance angle, so the operating point drifts between windows.
  f.loads[1] = {400e3, 130e3};
  f.loads[2] = {600e3, 320e3};
  f.loads[3] = {500e3, 375e3};
  validate(f);
  return f;
}

FeederModel placement_feeder() {
  FeederModel f;
  f.nodes = {0, 1, 2, 3, 4, 5, 6, 7};
  f.lines = {
      {0, 1, 8.0, 0.030},
      {1, 2, 10.0, 0.040},
      {2, 3, 12.0, 0.050},
      {3, 4, 9.0, 0.035},
      {2, 5, 14.0, 0.050},
      {5, 6, 11.0, 0.040},
      {1, 7, 13.0, 0.045},
  };
  f.source = {0, 14400.0, 60.0};
  f.loads[2] = {90e3, 30e3};
  f.loads[3] = {70e3, 25e3};
  f.loads[4] = {60e3, 20e3};
  f.loads[5] = {80e3, 28e3};
  f.loads[6] = {50e3, 15e3};
  f.loads[7] = {65e3, 22e3};
  validate(f);
  return f;
}

}  // namespace hifd
