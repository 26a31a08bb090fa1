#pragma once

#include <cstdint>
#include <string>

#include "twinforge/learner/policy.hpp"
#include "twinforge/learner/ppo.hpp"

namespace twinforge::learner {

// Versioned binary checkpoint: magic "TFCK", u32 version, u32 header length,
// JSON header with shapes/metadata, then little-endian f64 arrays
// (params, adam_m, adam_v).
struct PolicyCheckpoint {
  PolicyParams params;
  Adam optimizer;
  std::int64_t global_step = 0;
  double mean_eval_reward = 0.0;
  bool is_best = false;
};

// Write-then-rename so a partial file is never left at `path`.
void save_checkpoint(const PolicyCheckpoint& ckpt, const std::string& path);
PolicyCheckpoint load_checkpoint(const std::string& path);

}  // namespace twinforge::learner
