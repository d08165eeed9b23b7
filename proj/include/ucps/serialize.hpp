#pragma once

#include <string>

#include "ucps/state.hpp"

namespace ucps {

// Text formats use hexadecimal floating point, so round-trips are exact and
// files are stable across platforms with IEEE doubles.

std::string state_to_text(const UcpsState& state);
UcpsState state_from_text(const std::string& text);

void save_state(const std::string& path, const UcpsState& state);
UcpsState load_state(const std::string& path);

// Everything the imaginary- and real-time drivers carry between steps, so a
// resumed run reproduces an uninterrupted one bit for bit.
struct TdvpCheckpoint {
  UcpsState state;
  long step = 0;
  double dt = 0.0;
  int success_run = 0;
  Matrix warm_B;     // solver warm start; may be empty
  double time = 0.0; // real-time clock, unused by the ground-state driver
  std::string rng;   // serialised generator state; may be empty
};

void save_checkpoint(const std::string& path, const TdvpCheckpoint& ck);
TdvpCheckpoint load_checkpoint(const std::string& path);

}  // namespace ucps
