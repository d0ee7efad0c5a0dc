#pragma once

#include "decfsc/controller.hpp"
#include "decfsc/evaluation.hpp"
#include "decfsc/model.hpp"

#include <string>
#include <vector>

namespace decfsc {

/// Index-set sizes and constraint counts of the full-variable program.
struct NlpSummary {
    std::size_t joint_nodes = 0;
    std::size_t device_states = 1;
    std::size_t x_variables = 0;
    std::size_t y_variables = 0;
    std::size_t z_variables = 0;
    std::size_t w_variables = 0;
    std::size_t bellman_constraints = 0;
    std::size_t independence_constraints = 0;
    std::size_t probability_constraints = 0;
};

struct NlpExport {
    NlpSummary summary;
    std::string text;
};

/**
 * Writes the fixed-size controller program over joint variables
 *
 *   x(q, a[, c])        P(a | q[, c])
 *   y(q, a, o, q'[, c]) P(q' | q, a, o[, c])
 *   z(q, s[, c])        V(q, s[, c])
 *   w(c, c')            P(c' | c)             (device_size > 1 only)
 *
 * as an AMPL model followed by its data section: the start-value objective,
 * one Bellman equality per (q, s[, c]), per-agent independence equalities
 * against reference nodes, actions and observations fixed at index 0 for the
 * other agents, and the row-sum constraints. With device_size 1 the device
 * index is dropped entirely. Output is deterministic.
 */
NlpSummary nlp_summary(const DecPomdp& model, std::size_t nodes_per_agent, std::size_t device_size);
NlpExport export_nlp(const DecPomdp& model, std::size_t nodes_per_agent, std::size_t device_size,
                     DeviceRecursion recursion = DeviceRecursion::next_state);

/// A point of the full-variable program, laid out with the device index last:
/// x[(q*A + a)*C + c], y[(((q*A + a)*O + o)*Q + q')*C + c], z[(q*S + s)*C + c],
/// w[c*C + c'].
struct NlpPoint {
    std::vector<std::size_t> nodes;  // per-agent |Q_i|
    std::size_t device_states = 1;
    std::vector<double> x, y, z, w;
};

/// Expands product-form controllers (and a value table) into joint variables.
NlpPoint expand_policy(const DecPomdp& model, const JointPolicy& policy, const ValueTable& values);

struct NlpResiduals {
    double bellman = 0.0;
    double independence = 0.0;
    double probability = 0.0;
};

/// Largest violation of each constraint family of the exported program.
NlpResiduals nlp_residuals(const DecPomdp& model, const NlpPoint& point,
                           DeviceRecursion recursion = DeviceRecursion::next_state);

}  // namespace decfsc
