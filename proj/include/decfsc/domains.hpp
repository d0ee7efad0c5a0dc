#pragma once

#include "decfsc/model.hpp"

#include <string>

namespace decfsc::domains {

/**
 * Two-agent broadcast channel. Each agent holds a one-message buffer; state
 * index is 2 * buffer_1 + buffer_2 (0 empty, 1 full).
 *
 * Per step: an agent that sends occupies the channel; two senders collide and
 * neither message goes through. A lone sender with a full buffer delivers its
 * message (reward) and empties the buffer. Afterwards every empty buffer
 * receives a new message with that agent's arrival probability.
 *
 * Observations (per agent): collision, sent/empty, sent/full, idle/empty,
 * idle/full, where empty/full is the agent's own buffer after arrivals.
 */
struct BroadcastParams {
    double arrival_agent1 = 0.9;
    double arrival_agent2 = 0.1;
    double success_reward = 1.0;
    double discount = 0.9;
    bool agent1_starts_full = true;
    bool agent2_starts_full = false;
};

/**
 * Two recycling robots with high/low batteries (state 2 * battery_1 +
 * battery_2, 0 high, 1 low). Actions: search small, search large, recharge.
 * Each robot observes its own battery level exactly.
 *
 * Searching from high may drop the battery to low; searching from low may
 * exhaust it, in which case the robot is rescued (penalty, no can) and starts
 * the next step with a high battery. Recharging always yields high.
 */
struct RecyclingParams {
    double small_reward = 2.0;
    double large_reward = 5.0;
    double small_high_to_low = 0.3;
    double large_high_to_low = 0.5;
    double small_depletion = 0.3;
    double large_depletion = 0.6;
    double depletion_penalty = -3.0;
    double discount = 0.9;
};

/// Two-agent tiger; states tiger-left/tiger-right, actions open-left,
/// open-right, listen; observations hear-left/hear-right.
struct TigerParams {
    double both_listen = -2.0;
    double both_open_treasure = 20.0;
    double both_open_tiger = -50.0;
    double open_different_doors = -100.0;
    double listen_other_opens_treasure = 9.0;
    double listen_other_opens_tiger = -101.0;
    double hearing_accuracy = 0.85;
    double discount = 0.9;
};

DecPomdp broadcast(const BroadcastParams& params = {});
DecPomdp recycling(const RecyclingParams& params = {});
DecPomdp tiger(const TigerParams& params = {});

/// Looks a built-in domain up by name (broadcast, recycling, tiger) with
/// default parameters; throws std::invalid_argument for unknown names.
DecPomdp by_name(const std::string& name);

}  // namespace decfsc::domains
