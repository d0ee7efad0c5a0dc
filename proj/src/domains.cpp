#include "decfsc/domains.hpp"

#include <array>
#include <stdexcept>

namespace decfsc::domains {

namespace {

void require_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

void require_discount(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
}

}  // namespace

DecPomdp broadcast(const BroadcastParams& params) {
    require_probability(params.arrival_agent1, "arrival_agent1");
    require_probability(params.arrival_agent2, "arrival_agent2");
    require_discount(params.discount);

    const std::vector<std::string> obs = {"collision", "sent-empty", "sent-full", "idle-empty", "idle-full"};
    DecPomdp model({"empty-empty", "empty-full", "full-empty", "full-full"},
                   {{"wait", "send"}, {"wait", "send"}}, {obs, obs}, params.discount);

    const std::array<double, 2> arrival = {params.arrival_agent1, params.arrival_agent2};
    const auto& ja = model.joint_actions();
    const auto& jo = model.joint_observations();

    for (std::size_t s = 0; s < 4; ++s) {
        const std::array<int, 2> buffer = {static_cast<int>(s / 2), static_cast<int>(s % 2)};
        for (std::size_t a = 0; a < ja.size(); ++a) {
            const std::array<int, 2> sends = {static_cast<int>(ja.digit(a, 0)), static_cast<int>(ja.digit(a, 1))};
            const bool collision = sends[0] && sends[1];
            std::array<int, 2> after = buffer;
            if (!collision) {
                for (int i = 0; i < 2; ++i) {
                    if (sends[i] && buffer[i]) {
                        after[i] = 0;
                        model.reward(s, a) = params.success_reward;
                    }
                }
            }
            // Arrivals into empty buffers, independently per agent.
            for (std::size_t s2 = 0; s2 < 4; ++s2) {
                const std::array<int, 2> next = {static_cast<int>(s2 / 2), static_cast<int>(s2 % 2)};
                double p = 1.0;
                for (int i = 0; i < 2; ++i) {
                    if (after[i]) p *= next[i] ? 1.0 : 0.0;
                    else p *= next[i] ? arrival[i] : 1.0 - arrival[i];
                }
                model.transition(s, a, s2) = p;
            }
        }
    }
    for (std::size_t a = 0; a < ja.size(); ++a) {
        const bool collision = ja.digit(a, 0) == 1 && ja.digit(a, 1) == 1;
        for (std::size_t s2 = 0; s2 < 4; ++s2) {
            const std::array<std::size_t, 2> next = {s2 / 2, s2 % 2};
            std::array<std::size_t, 2> o{};
            for (int i = 0; i < 2; ++i) {
                if (collision) o[i] = 0;
                else o[i] = (ja.digit(a, i) == 1 ? 1 : 3) + next[i];
            }
            model.observation(a, s2, jo.flatten(o)) = 1.0;
        }
    }
    std::vector<double> start(4, 0.0);
    start[2 * (params.agent1_starts_full ? 1 : 0) + (params.agent2_starts_full ? 1 : 0)] = 1.0;
    model.set_start(std::move(start));
    return model;
}

DecPomdp recycling(const RecyclingParams& params) {
    require_probability(params.small_high_to_low, "small_high_to_low");
    require_probability(params.large_high_to_low, "large_high_to_low");
    require_probability(params.small_depletion, "small_depletion");
    require_probability(params.large_depletion, "large_depletion");
    require_discount(params.discount);

    enum { kSmall = 0, kLarge = 1, kRecharge = 2 };
    const std::vector<std::string> actions = {"search-small", "search-large", "recharge"};
    const std::vector<std::string> obs = {"high", "low"};
    DecPomdp model({"high-high", "high-low", "low-high", "low-low"}, {actions, actions}, {obs, obs},
                   params.discount);

    // P(next battery = low | battery, action) and P(exhausted | battery, action).
    auto to_low = [&](int battery, int action) {
        if (action == kRecharge) return 0.0;
        if (battery == 0) return action == kSmall ? params.small_high_to_low : params.large_high_to_low;
        return 1.0 - (action == kSmall ? params.small_depletion : params.large_depletion);
    };
    auto depletion = [&](int battery, int action) {
        if (action == kRecharge || battery == 0) return 0.0;
        return action == kSmall ? params.small_depletion : params.large_depletion;
    };

    const auto& ja = model.joint_actions();
    const auto& jo = model.joint_observations();
    for (std::size_t s = 0; s < 4; ++s) {
        const std::array<int, 2> battery = {static_cast<int>(s / 2), static_cast<int>(s % 2)};
        for (std::size_t a = 0; a < ja.size(); ++a) {
            const std::array<int, 2> act = {static_cast<int>(ja.digit(a, 0)), static_cast<int>(ja.digit(a, 1))};
            const std::array<double, 2> d = {depletion(battery[0], act[0]), depletion(battery[1], act[1])};
            double r = 0.0;
            for (int i = 0; i < 2; ++i) {
                if (act[i] == kSmall) r += params.small_reward * (1.0 - d[i]);
                r += params.depletion_penalty * d[i];
            }
            if (act[0] == kLarge && act[1] == kLarge) r += params.large_reward * (1.0 - d[0]) * (1.0 - d[1]);
            model.reward(s, a) = r;

            for (std::size_t s2 = 0; s2 < 4; ++s2) {
                const std::array<int, 2> next = {static_cast<int>(s2 / 2), static_cast<int>(s2 % 2)};
                double p = 1.0;
                for (int i = 0; i < 2; ++i) {
                    const double low = to_low(battery[i], act[i]);
                    p *= next[i] ? low : 1.0 - low;
                }
                model.transition(s, a, s2) = p;
            }
        }
    }
    for (std::size_t a = 0; a < ja.size(); ++a)
        for (std::size_t s2 = 0; s2 < 4; ++s2)
            model.observation(a, s2, jo.flatten(std::array<std::size_t, 2>{s2 / 2, s2 % 2})) = 1.0;
    model.set_start({1.0, 0.0, 0.0, 0.0});
    return model;
}

DecPomdp tiger(const TigerParams& params) {
    require_probability(params.hearing_accuracy, "hearing_accuracy");
    require_discount(params.discount);

    enum { kOpenLeft = 0, kOpenRight = 1, kListen = 2 };
    const std::vector<std::string> actions = {"open-left", "open-right", "listen"};
    const std::vector<std::string> obs = {"hear-left", "hear-right"};
    DecPomdp model({"tiger-left", "tiger-right"}, {actions, actions}, {obs, obs}, params.discount);

    const auto& ja = model.joint_actions();
    const auto& jo = model.joint_observations();
    for (std::size_t a = 0; a < ja.size(); ++a) {
        const int a1 = static_cast<int>(ja.digit(a, 0));
        const int a2 = static_cast<int>(ja.digit(a, 1));
        const bool both_listen = a1 == kListen && a2 == kListen;
        for (std::size_t s = 0; s < 2; ++s) {
            const int tiger_door = static_cast<int>(s);  // 0 left, 1 right; open-left == 0
            double r = 0.0;
            if (both_listen) {
                r = params.both_listen;
            } else if (a1 == kListen || a2 == kListen) {
                const int opened = a1 == kListen ? a2 : a1;
                r = opened == tiger_door ? params.listen_other_opens_tiger : params.listen_other_opens_treasure;
            } else if (a1 == a2) {
                r = a1 == tiger_door ? params.both_open_tiger : params.both_open_treasure;
            } else {
                r = params.open_different_doors;
            }
            model.reward(s, a) = r;
            for (std::size_t s2 = 0; s2 < 2; ++s2)
                model.transition(s, a, s2) = both_listen ? (s == s2 ? 1.0 : 0.0) : 0.5;
        }
        for (std::size_t s2 = 0; s2 < 2; ++s2) {
            for (std::size_t o = 0; o < jo.size(); ++o) {
                double p = 0.25;
                if (both_listen) {
                    p = 1.0;
                    for (std::size_t i = 0; i < 2; ++i)
                        p *= jo.digit(o, i) == s2 ? params.hearing_accuracy : 1.0 - params.hearing_accuracy;
                }
                model.observation(a, s2, o) = p;
            }
        }
    }
    model.set_start({0.5, 0.5});
    return model;
}

DecPomdp by_name(const std::string& name) {
    if (name == "broadcast") return broadcast();
    if (name == "recycling") return recycling();
    if (name == "tiger") return tiger();
    throw std::invalid_argument("unknown domain '" + name + "' (expected broadcast, recycling or tiger)");
}

}  // namespace decfsc::domains
