#include "decfsc/nlp_export.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace decfsc {

namespace {

std::string num(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// Joint index with every agent except `agent` set to digit 0.
std::size_t reference(const JointIndexer& indexer, std::size_t joint, std::size_t agent) {
    return indexer.digit(joint, agent) * indexer.stride(agent);
}

JointIndexer uniform_nodes(std::size_t agents, std::size_t nodes) {
    return JointIndexer(std::vector<std::size_t>(agents, nodes));
}

}  // namespace

NlpSummary nlp_summary(const DecPomdp& model, std::size_t nodes_per_agent, std::size_t device_size) {
    if (nodes_per_agent == 0) throw std::invalid_argument("export_nlp: nodes_per_agent must be at least 1");
    if (device_size == 0) throw std::invalid_argument("export_nlp: device_size must be at least 1");
    const JointIndexer nodes = uniform_nodes(model.num_agents(), nodes_per_agent);
    const std::size_t nq = nodes.size();
    const std::size_t na = model.num_joint_actions();
    const std::size_t no = model.num_joint_observations();
    const std::size_t nc = device_size;

    NlpSummary s;
    s.joint_nodes = nq;
    s.device_states = nc;
    s.x_variables = nq * na * nc;
    s.y_variables = nq * na * no * nq * nc;
    s.z_variables = nq * model.num_states() * nc;
    s.w_variables = nc > 1 ? nc * nc : 0;
    s.bellman_constraints = s.z_variables;
    for (std::size_t i = 0; i < model.num_agents(); ++i)
        s.independence_constraints += nq * model.num_actions(i) * nc + nq * na * no * nodes_per_agent * nc;
    s.probability_constraints = nq * nc + nq * na * no * nc + (nc > 1 ? nc : 0);
    return s;
}

NlpExport export_nlp(const DecPomdp& model, std::size_t nodes_per_agent, std::size_t device_size,
                     DeviceRecursion recursion) {
    if (const auto report = validate(model); !report.empty())
        throw ModelError("export_nlp: invalid model: " + report.front().where + ": " + report.front().message);
    NlpExport out;
    out.summary = nlp_summary(model, nodes_per_agent, device_size);
    const bool corr = device_size > 1;
    const std::size_t n = model.num_agents();
    const JointIndexer nodes = uniform_nodes(n, nodes_per_agent);
    const JointIndexer& ja = model.joint_actions();
    const JointIndexer& jo = model.joint_observations();
    const std::size_t ns = model.num_states();

    const std::string ci = corr ? ",c" : "";
    const std::string cs = corr ? ", c in C" : "";
    std::string next_value = "z[q2,s2]";
    if (corr) next_value = recursion == DeviceRecursion::next_state ? "sum {c2 in C} w[c,c2] * z[q2,s2,c2]"
                                                                    : "sum {c2 in C} w[c,c2] * z[q2,s2,c]";

    std::ostringstream os;
    os << "# Fixed-size joint controller program, " << n << " agent(s), " << nodes_per_agent
       << " node(s) per agent" << (corr ? ", correlation device with " + std::to_string(device_size) + " states" : "")
       << ".\n";
    os << "# variables: x " << out.summary.x_variables << ", y " << out.summary.y_variables << ", z "
       << out.summary.z_variables << ", w " << out.summary.w_variables << "\n";
    os << "# constraints: bellman " << out.summary.bellman_constraints << ", independence "
       << out.summary.independence_constraints << ", probability " << out.summary.probability_constraints
       << "\n\n";

    os << "param NAGENTS integer > 0;\nparam NS integer > 0;\nparam NA integer > 0;\nparam NO integer > 0;\n"
          "param NQ integer > 0;\n";
    if (corr) os << "param NC integer > 0;\n";
    os << "set I := 1..NAGENTS;\nset S := 0..NS-1;\nset A := 0..NA-1;\nset O := 0..NO-1;\nset Q := 0..NQ-1;\n";
    if (corr) os << "set C := 0..NC-1;\n";
    os << "\nparam gamma >= 0, < 1;\nparam b0 {S} >= 0;\nparam R {S, A};\n"
          "param P {S, A, S} >= 0 default 0;\nparam Obs {A, S, O} >= 0 default 0;\n"
          "param q0 in Q;\n";
    if (corr) os << "param c0 in C;\n";
    os << "param nq {I} integer > 0;\nparam na {I} integer > 0;\n"
          "param qd {Q, I} integer;   # agent i's node within joint node q\n"
          "param ad {A, I} integer;\nparam od {O, I} integer;\n"
          "param qref {Q, I} in Q;    # agent i's node kept, every other agent at node 0\n"
          "param aref {A, I} in A;\nparam oref {O, I} in O;\n\n";

    os << "var x {Q, A" << (corr ? ", C" : "") << "} >= 0, <= 1;\n";
    os << "var y {Q, A, O, Q" << (corr ? ", C" : "") << "} >= 0, <= 1;\n";
    os << "var z {Q, S" << (corr ? ", C" : "") << "};\n";
    if (corr) os << "var w {C, C} >= 0, <= 1;\n";
    os << "\nmaximize value: sum {s in S} b0[s] * z[q0,s" << (corr ? ",c0" : "") << "];\n\n";

    os << "subject to bellman {q in Q, s in S" << cs << "}:\n"
       << "    z[q,s" << ci << "] = sum {a in A} x[q,a" << ci << "] * (R[s,a] + gamma *\n"
       << "        sum {s2 in S, o in O: P[s,a,s2] * Obs[a,s2,o] > 0} P[s,a,s2] * Obs[a,s2,o] *\n"
       << "            sum {q2 in Q} y[q,a,o,q2" << ci << "] * " << next_value << ");\n\n";
    os << "subject to independence_x {i in I, q in Q, ai in 0..na[i]-1" << cs << "}:\n"
       << "    sum {a in A: ad[a,i] = ai} x[q,a" << ci << "] = sum {a in A: ad[a,i] = ai} x[qref[q,i],a" << ci
       << "];\n\n";
    os << "subject to independence_y {i in I, q in Q, a in A, o in O, qi in 0..nq[i]-1" << cs << "}:\n"
       << "    sum {q2 in Q: qd[q2,i] = qi} y[q,a,o,q2" << ci << "] =\n"
       << "    sum {q2 in Q: qd[q2,i] = qi} y[qref[q,i],aref[a,i],oref[o,i],q2" << ci << "];\n\n";
    os << "subject to probability_x {q in Q" << cs << "}: sum {a in A} x[q,a" << ci << "] = 1;\n";
    os << "subject to probability_y {q in Q, a in A, o in O" << cs << "}: sum {q2 in Q} y[q,a,o,q2" << ci
       << "] = 1;\n";
    if (corr) os << "subject to probability_w {c in C}: sum {c2 in C} w[c,c2] = 1;\n";

    os << "\ndata;\n\n";
    os << "param NAGENTS := " << n << ";\nparam NS := " << ns << ";\nparam NA := " << ja.size()
       << ";\nparam NO := " << jo.size() << ";\nparam NQ := " << nodes.size() << ";\n";
    if (corr) os << "param NC := " << device_size << ";\n";
    os << "param gamma := " << num(model.discount()) << ";\n";
    os << "param q0 := 0;\n";
    if (corr) os << "param c0 := 0;\n";

    os << "param b0 :=";
    for (std::size_t s = 0; s < ns; ++s) os << ' ' << s << ' ' << num(model.start()[s]);
    os << ";\n";
    os << "param nq :=";
    for (std::size_t i = 0; i < n; ++i) os << ' ' << i + 1 << ' ' << nodes_per_agent;
    os << ";\nparam na :=";
    for (std::size_t i = 0; i < n; ++i) os << ' ' << i + 1 << ' ' << model.num_actions(i);
    os << ";\n";

    os << "param R :=\n";
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < ja.size(); ++a) os << "  " << s << ' ' << a << ' ' << num(model.reward(s, a)) << "\n";
    os << ";\nparam P :=\n";
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < ja.size(); ++a)
            for (std::size_t s2 = 0; s2 < ns; ++s2)
                if (const double p = model.transition(s, a, s2); p != 0.0)
                    os << "  " << s << ' ' << a << ' ' << s2 << ' ' << num(p) << "\n";
    os << ";\nparam Obs :=\n";
    for (std::size_t a = 0; a < ja.size(); ++a)
        for (std::size_t s2 = 0; s2 < ns; ++s2)
            for (std::size_t o = 0; o < jo.size(); ++o)
                if (const double p = model.observation(a, s2, o); p != 0.0)
                    os << "  " << a << ' ' << s2 << ' ' << o << ' ' << num(p) << "\n";
    os << ";\n";

    auto digits = [&](const char* name, const JointIndexer& indexer) {
        os << "param " << name << " :=\n";
        for (std::size_t j = 0; j < indexer.size(); ++j)
            for (std::size_t i = 0; i < n; ++i) os << "  " << j << ' ' << i + 1 << ' ' << indexer.digit(j, i) << "\n";
        os << ";\n";
    };
    auto references = [&](const char* name, const JointIndexer& indexer) {
        os << "param " << name << " :=\n";
        for (std::size_t j = 0; j < indexer.size(); ++j)
            for (std::size_t i = 0; i < n; ++i) os << "  " << j << ' ' << i + 1 << ' ' << reference(indexer, j, i) << "\n";
        os << ";\n";
    };
    digits("qd", nodes);
    digits("ad", ja);
    digits("od", jo);
    references("qref", nodes);
    references("aref", ja);
    references("oref", jo);
    os << "\nend;\n";
    out.text = os.str();
    return out;
}

NlpPoint expand_policy(const DecPomdp& model, const JointPolicy& policy, const ValueTable& values) {
    check_dimensions(model, policy);
    const JointIndexer nodes = policy.joint_nodes();
    const JointIndexer& ja = model.joint_actions();
    const JointIndexer& jo = model.joint_observations();
    const std::size_t nq = nodes.size(), na = ja.size(), no = jo.size(), nc = policy.device_states();
    const std::size_t ns = model.num_states();
    if (values.joint_nodes() != nq || values.states() != ns || values.device_states() != nc)
        throw ModelError("expand_policy: value table does not match the policy");

    NlpPoint p;
    for (const auto& f : policy.agents) p.nodes.push_back(f.num_nodes());
    p.device_states = nc;
    p.x.resize(nq * na * nc);
    p.y.resize(nq * na * no * nq * nc);
    p.z = values.values();
    p.w.resize(nc * nc);
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t c2 = 0; c2 < nc; ++c2) p.w[c * nc + c2] = policy.device_transition(c, c2);

    for (std::size_t q = 0; q < nq; ++q)
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t c = 0; c < nc; ++c) {
                double prob = 1.0;
                for (std::size_t i = 0; i < policy.num_agents(); ++i)
                    prob *= policy.agents[i].action_prob(c, nodes.digit(q, i), ja.digit(a, i));
                p.x[(q * na + a) * nc + c] = prob;
                for (std::size_t o = 0; o < no; ++o)
                    for (std::size_t q2 = 0; q2 < nq; ++q2) {
                        double move = 1.0;
                        for (std::size_t i = 0; i < policy.num_agents(); ++i)
                            move *= policy.agents[i].transition_prob(c, nodes.digit(q, i), ja.digit(a, i),
                                                                     jo.digit(o, i), nodes.digit(q2, i));
                        p.y[(((q * na + a) * no + o) * nq + q2) * nc + c] = move;
                    }
            }
    return p;
}

NlpResiduals nlp_residuals(const DecPomdp& model, const NlpPoint& point, DeviceRecursion recursion) {
    const JointIndexer nodes(point.nodes);
    const JointIndexer& ja = model.joint_actions();
    const JointIndexer& jo = model.joint_observations();
    const std::size_t nq = nodes.size(), na = ja.size(), no = jo.size(), nc = point.device_states;
    const std::size_t ns = model.num_states();
    const std::size_t n = model.num_agents();
    if (point.nodes.size() != n || point.x.size() != nq * na * nc || point.y.size() != nq * na * no * nq * nc ||
        point.z.size() != nq * ns * nc || point.w.size() != nc * nc)
        throw ModelError("nlp_residuals: point does not match the model");

    auto x = [&](std::size_t q, std::size_t a, std::size_t c) { return point.x[(q * na + a) * nc + c]; };
    auto y = [&](std::size_t q, std::size_t a, std::size_t o, std::size_t q2, std::size_t c) {
        return point.y[(((q * na + a) * no + o) * nq + q2) * nc + c];
    };
    auto z = [&](std::size_t q, std::size_t s, std::size_t c) { return point.z[(q * ns + s) * nc + c]; };
    auto w = [&](std::size_t c, std::size_t c2) { return point.w[c * nc + c2]; };

    NlpResiduals r;
    const double gamma = model.discount();
    for (std::size_t q = 0; q < nq; ++q)
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t c = 0; c < nc; ++c) {
                double rhs = 0.0;
                for (std::size_t a = 0; a < na; ++a) {
                    double future = 0.0;
                    for (std::size_t s2 = 0; s2 < ns; ++s2) {
                        const double pt = model.transition(s, a, s2);
                        if (pt == 0.0) continue;
                        for (std::size_t o = 0; o < no; ++o) {
                            const double po = model.observation(a, s2, o);
                            if (po == 0.0) continue;
                            double inner = 0.0;
                            for (std::size_t q2 = 0; q2 < nq; ++q2) {
                                double cont = 0.0;
                                for (std::size_t c2 = 0; c2 < nc; ++c2)
                                    cont += w(c, c2) * z(q2, s2, recursion == DeviceRecursion::next_state ? c2 : c);
                                inner += y(q, a, o, q2, c) * cont;
                            }
                            future += pt * po * inner;
                        }
                    }
                    rhs += x(q, a, c) * (model.reward(s, a) + gamma * future);
                }
                r.bellman = std::max(r.bellman, std::abs(z(q, s, c) - rhs));
            }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = 0; q < nq; ++q) {
            const std::size_t qr = reference(nodes, q, i);
            for (std::size_t c = 0; c < nc; ++c) {
                for (std::size_t ai = 0; ai < model.num_actions(i); ++ai) {
                    double lhs = 0.0, rhs = 0.0;
                    for (std::size_t a = 0; a < na; ++a)
                        if (ja.digit(a, i) == ai) {
                            lhs += x(q, a, c);
                            rhs += x(qr, a, c);
                        }
                    r.independence = std::max(r.independence, std::abs(lhs - rhs));
                }
                for (std::size_t a = 0; a < na; ++a)
                    for (std::size_t o = 0; o < no; ++o)
                        for (std::size_t qi = 0; qi < point.nodes[i]; ++qi) {
                            double lhs = 0.0, rhs = 0.0;
                            for (std::size_t q2 = 0; q2 < nq; ++q2)
                                if (nodes.digit(q2, i) == qi) {
                                    lhs += y(q, a, o, q2, c);
                                    rhs += y(qr, reference(ja, a, i), reference(jo, o, i), q2, c);
                                }
                            r.independence = std::max(r.independence, std::abs(lhs - rhs));
                        }
            }
        }

    auto simplex = [&](auto&& entry, std::size_t len) {
        double sum = 0.0;
        for (std::size_t k = 0; k < len; ++k) {
            const double v = entry(k);
            r.probability = std::max(r.probability, -v);
            sum += v;
        }
        r.probability = std::max(r.probability, std::abs(sum - 1.0));
    };
    for (std::size_t q = 0; q < nq; ++q)
        for (std::size_t c = 0; c < nc; ++c) {
            simplex([&](std::size_t a) { return x(q, a, c); }, na);
            for (std::size_t a = 0; a < na; ++a)
                for (std::size_t o = 0; o < no; ++o)
                    simplex([&](std::size_t q2) { return y(q, a, o, q2, c); }, nq);
        }
    for (std::size_t c = 0; c < nc; ++c) simplex([&](std::size_t c2) { return w(c, c2); }, nc);
    return r;
}

}  // namespace decfsc
