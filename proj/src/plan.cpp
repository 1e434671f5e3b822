#include "xing/plan.hpp"

#include <numeric>
#include <stdexcept>

#include "xing/rng.hpp"
#include "xing/sim.hpp"

namespace xing {

namespace {

std::vector<std::string> permuted(const std::vector<std::string>& pool, Rng& rng) {
    std::vector<std::string> out = pool;
    // Fisher-Yates with the local unbiased index draw.
    for (std::size_t i = out.size(); i > 1; --i) {
        std::swap(out[i - 1], out[uniform_index(rng, i)]);
    }
    return out;
}

}  // namespace

const PlanBlock& ExperimentPlan::block_for_trial(int trial_index) const {
    if (trial_index < 0 || trial_index >= total_trials()) {
        throw ContractViolation("plan: trial index " + std::to_string(trial_index) + " out of range");
    }
    return blocks[static_cast<std::size_t>(trial_index / trials_per_block)];
}

ExperimentPlan build_plan(std::uint64_t seed, bool aware_first,
                          const std::vector<std::string>& happy_tracks,
                          const std::vector<std::string>& sad_tracks, int block_count,
                          int trials_per_block) {
    if (happy_tracks.empty()) throw std::invalid_argument("build_plan: happy track pool is empty");
    if (sad_tracks.empty()) throw std::invalid_argument("build_plan: sad track pool is empty");
    if (block_count < 2 || block_count % 2 != 0) {
        throw std::invalid_argument("build_plan: block count must be a positive even number");
    }
    if (trials_per_block < 1) throw std::invalid_argument("build_plan: trials_per_block must be >= 1");

    Rng rng = make_rng(seed, RngStream::Plan);
    const bool happy_first = bernoulli(rng, 0.5);
    const auto happy = permuted(happy_tracks, rng);
    const auto sad = permuted(sad_tracks, rng);

    ExperimentPlan plan;
    plan.trials_per_block = trials_per_block;
    plan.counterbalance_aware_first = aware_first;
    plan.seed = seed;
    std::size_t n_happy = 0, n_sad = 0;
    for (int b = 0; b < block_count; ++b) {
        const bool is_happy = (b % 2 == 0) == happy_first;
        PlanBlock block;
        block.block_index = b;
        block.condition = is_happy ? MusicCondition::Happy : MusicCondition::Sad;
        block.track_id = is_happy ? happy[n_happy++ % happy.size()] : sad[n_sad++ % sad.size()];
        plan.blocks.push_back(std::move(block));
    }
    return plan;
}

}  // namespace xing
