#pragma once

#include <stdexcept>
#include <string>

namespace twinforge {

struct EmptyScene : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SamplingExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidStart : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotReset : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoGoalDetected : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfFrame : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Degenerate : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PlantUnreachable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ProtocolViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace twinforge
