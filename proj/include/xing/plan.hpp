#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xing/mdp.hpp"

namespace xing {

struct PlanBlock {
    int block_index = 0;
    MusicCondition condition = MusicCondition::Happy;
    std::string track_id;

    bool operator==(const PlanBlock&) const = default;
};

/// Block schedule of one session. Conditions alternate block to block; the
/// starting condition is a seeded coin flip and each condition's track pool
/// is walked in a seeded permutation, cycling when exhausted.
struct ExperimentPlan {
    std::vector<PlanBlock> blocks;
    int trials_per_block = 12;
    bool counterbalance_aware_first = false;
    double inter_trial_pause = 3.0;
    double pre_block_pause = 3.0;
    std::uint64_t seed = 0;

    int total_trials() const { return static_cast<int>(blocks.size()) * trials_per_block; }
    const PlanBlock& block_for_trial(int trial_index) const;
    bool operator==(const ExperimentPlan&) const = default;
};

inline constexpr int kProtocolBlocks = 16;
inline constexpr int kProtocolTrialsPerBlock = 12;

// Throws std::invalid_argument on an empty track pool or a block count that
// is not a positive even number.
ExperimentPlan build_plan(std::uint64_t seed, bool aware_first,
                          const std::vector<std::string>& happy_tracks,
                          const std::vector<std::string>& sad_tracks,
                          int block_count = kProtocolBlocks,
                          int trials_per_block = kProtocolTrialsPerBlock);

}  // namespace xing
