#include "decfsc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace decfsc {

JointIndexer::JointIndexer(std::vector<std::size_t> radices) : radices_(std::move(radices)) {
    strides_.assign(radices_.size(), 1);
    size_ = 1;
    for (std::size_t k = radices_.size(); k-- > 0;) {
        if (radices_[k] == 0) throw ModelError("JointIndexer: zero radix");
        strides_[k] = size_;
        size_ *= radices_[k];
    }
}

std::size_t JointIndexer::flatten(std::span<const std::size_t> digits) const {
    if (digits.size() != radices_.size())
        throw ModelError("JointIndexer::flatten: wrong tuple length");
    std::size_t index = 0;
    for (std::size_t k = 0; k < digits.size(); ++k) {
        if (digits[k] >= radices_[k]) throw ModelError("JointIndexer::flatten: digit out of range");
        index += digits[k] * strides_[k];
    }
    return index;
}

void JointIndexer::unflatten(std::size_t index, std::span<std::size_t> digits) const {
    for (std::size_t k = 0; k < radices_.size(); ++k) digits[k] = digit(index, k);
}

std::vector<std::size_t> JointIndexer::unflatten(std::size_t index) const {
    std::vector<std::size_t> digits(radices_.size());
    unflatten(index, digits);
    return digits;
}

std::vector<std::vector<std::size_t>> JointIndexer::enumerate() const {
    std::vector<std::vector<std::size_t>> out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) out.push_back(unflatten(i));
    return out;
}

namespace {

std::vector<std::size_t> sizes_of(const std::vector<std::vector<std::string>>& labels) {
    std::vector<std::size_t> out;
    for (const auto& l : labels) out.push_back(l.size());
    return out;
}

std::string tuple_string(const std::vector<std::size_t>& digits) {
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < digits.size(); ++k) os << (k ? "," : "") << digits[k];
    os << ')';
    return os.str();
}

}  // namespace

DecPomdp::DecPomdp(std::vector<std::string> states,
                   std::vector<std::vector<std::string>> actions,
                   std::vector<std::vector<std::string>> observations, double discount)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      observations_(std::move(observations)),
      discount_(discount) {
    if (actions_.empty()) throw ModelError("DecPomdp: at least one agent is required");
    if (actions_.size() != observations_.size())
        throw ModelError("DecPomdp: action and observation sets disagree on the agent count");
    if (states_.empty()) throw ModelError("DecPomdp: at least one state is required");
    for (std::size_t i = 0; i < actions_.size(); ++i) {
        if (actions_[i].empty() || observations_[i].empty())
            throw ModelError("DecPomdp: agent " + std::to_string(i) +
                             " needs at least one action and one observation");
    }
    joint_actions_ = JointIndexer(sizes_of(actions_));
    joint_observations_ = JointIndexer(sizes_of(observations_));
    const std::size_t ns = states_.size();
    transition_.assign(ns * joint_actions_.size() * ns, 0.0);
    observation_.assign(joint_actions_.size() * ns * joint_observations_.size(), 0.0);
    reward_.assign(ns * joint_actions_.size(), 0.0);
    start_.assign(ns, 0.0);
    start_[0] = 1.0;
}

void DecPomdp::set_start(std::vector<double> start) {
    if (start.size() != num_states()) throw ModelError("DecPomdp: start distribution has wrong length");
    start_ = std::move(start);
}

double DecPomdp::min_reward() const { return *std::min_element(reward_.begin(), reward_.end()); }
double DecPomdp::max_reward() const { return *std::max_element(reward_.begin(), reward_.end()); }
double DecPomdp::max_abs_reward() const {
    double m = 0.0;
    for (double r : reward_) m = std::max(m, std::abs(r));
    return m;
}

std::vector<Violation> validate(const DecPomdp& model) {
    std::vector<Violation> report;
    const double gamma = model.discount();
    if (!(gamma >= 0.0 && gamma < 1.0))
        report.push_back({"discount", "discount out of range", gamma});

    const std::size_t ns = model.num_states();
    const auto& ja = model.joint_actions();

    auto check_entries = [&](std::span<const double> row, const std::string& where) {
        for (double p : row) {
            if (!(p >= 0.0 && p <= 1.0)) {
                report.push_back({where, "probability outside [0, 1]", p});
                return false;
            }
        }
        return true;
    };
    auto check_sum = [&](std::span<const double> row, const std::string& where) {
        const double sum = std::accumulate(row.begin(), row.end(), 0.0);
        if (std::abs(sum - 1.0) > kProbabilityTolerance)
            report.push_back({where, "row does not sum to 1", 1.0 - sum});
    };

    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < ja.size(); ++a) {
            const std::string where =
                "T(s=" + std::to_string(s) + ", a=" + tuple_string(ja.unflatten(a)) + ")";
            auto row = model.transition_row(s, a);
            if (check_entries(row, where)) check_sum(row, where);
        }
    }
    for (std::size_t a = 0; a < ja.size(); ++a) {
        for (std::size_t s2 = 0; s2 < ns; ++s2) {
            const std::string where =
                "O(a=" + tuple_string(ja.unflatten(a)) + ", s'=" + std::to_string(s2) + ")";
            auto row = model.observation_row(a, s2);
            if (check_entries(row, where)) check_sum(row, where);
        }
    }
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < ja.size(); ++a) {
            const double r = model.reward(s, a);
            if (!std::isfinite(r))
                report.push_back({"R(s=" + std::to_string(s) + ", a=" + tuple_string(ja.unflatten(a)) + ")",
                                  "reward is not finite", r});
        }
    }
    if (model.start().size() != ns) {
        report.push_back({"start", "start distribution has wrong length",
                          static_cast<double>(model.start().size())});
    } else if (check_entries(model.start(), "start")) {
        check_sum(model.start(), "start");
    }
    return report;
}

std::string describe(const std::vector<Violation>& report) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& v : report) os << v.where << ": " << v.message << " (residual " << v.residual << ")\n";
    return os.str();
}

std::vector<std::vector<std::size_t>> joint_actions(const DecPomdp& model) {
    return model.joint_actions().enumerate();
}

std::vector<std::vector<std::size_t>> joint_observations(const DecPomdp& model) {
    return model.joint_observations().enumerate();
}

void normalize_rows(DecPomdp& model) {
    auto normalize = [](std::span<double> row) {
        const double sum = std::accumulate(row.begin(), row.end(), 0.0);
        if (sum > 0.0)
            for (double& p : row) p /= sum;
    };
    for (std::size_t s = 0; s < model.num_states(); ++s)
        for (std::size_t a = 0; a < model.num_joint_actions(); ++a) normalize(model.transition_row(s, a));
    for (std::size_t a = 0; a < model.num_joint_actions(); ++a)
        for (std::size_t s2 = 0; s2 < model.num_states(); ++s2) normalize(model.observation_row(a, s2));
    auto start = model.start();
    normalize(start);
    model.set_start(std::move(start));
}

}  // namespace decfsc
