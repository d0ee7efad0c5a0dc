#include "decfsc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace decfsc {

FormatError::FormatError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(line == 0 ? message
                                   : "line " + std::to_string(line) + ", column " + std::to_string(column) +
                                         ": " + message),
      message_(message),
      line_(line),
      column_(column) {}

namespace {

struct Token {
    std::string_view text;
    std::size_t column;
};

struct Field {
    std::vector<Token> tokens;
    std::size_t column;
};

struct Line {
    std::size_t number;
    std::vector<Field> fields;

    const Token& keyword() const { return fields.front().tokens.front(); }
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<Line> tokenize(std::string_view text) {
    std::vector<Line> lines;
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view raw = text.substr(pos, end - pos);
        ++number;
        pos = end + 1;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);

        Line line{number, {}};
        Field field{{}, 1};
        for (std::size_t i = 0; i < raw.size();) {
            if (raw[i] == ':') {
                line.fields.push_back(std::move(field));
                field = Field{{}, i + 2};
                ++i;
            } else if (is_space(raw[i])) {
                ++i;
            } else {
                std::size_t j = i;
                while (j < raw.size() && !is_space(raw[j]) && raw[j] != ':') ++j;
                field.tokens.push_back({raw.substr(i, j - i), i + 1});
                i = j;
            }
        }
        line.fields.push_back(std::move(field));
        const bool blank = line.fields.size() == 1 && line.fields[0].tokens.empty();
        if (!blank) {
            if (line.fields[0].tokens.empty())
                throw FormatError("statement has no keyword", number, line.fields[0].column);
            lines.push_back(std::move(line));
        }
        if (end == text.size()) break;
    }
    return lines;
}

[[noreturn]] void fail(const Line& line, const Token& token, const std::string& message) {
    throw FormatError(message, line.number, token.column);
}
[[noreturn]] void fail(const Line& line, const std::string& message) {
    throw FormatError(message, line.number, line.fields.front().column);
}

double parse_number(const Line& line, const Token& token) {
    std::string_view t = token.text;
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value))
        fail(line, token, "expected a finite number, got '" + std::string(token.text) + "'");
    return value;
}

std::size_t parse_count(const Line& line, const Token& token) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.text.data(), token.text.data() + token.text.size(), value);
    if (ec != std::errc() || ptr != token.text.data() + token.text.size())
        fail(line, token, "expected a non-negative integer, got '" + std::string(token.text) + "'");
    return value;
}

double parse_probability(const Line& line, const Token& token) {
    const double p = parse_number(line, token);
    if (p < 0.0 || p > 1.0) fail(line, token, "probability " + std::string(token.text) + " outside [0, 1]");
    return p;
}

std::string format_number(double v) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, result.ptr);
}

/// Labels with their lookup table; tokens resolve by label first, then index.
class LabelSet {
public:
    LabelSet() = default;
    LabelSet(const Line& line, const Field& field, std::string what) : what_(std::move(what)) {
        if (field.tokens.empty()) fail(line, "empty " + what_ + " list");
        for (const auto& t : field.tokens) {
            if (!index_.emplace(std::string(t.text), labels_.size()).second)
                fail(line, t, "duplicate " + what_ + " label '" + std::string(t.text) + "'");
            labels_.emplace_back(t.text);
        }
    }
    explicit LabelSet(const std::vector<std::string>& labels) {
        for (const auto& l : labels) index_.emplace(l, index_.size());
        labels_ = labels;
    }

    std::size_t resolve(const Line& line, const Token& token) const {
        if (auto it = index_.find(std::string(token.text)); it != index_.end()) return it->second;
        std::size_t value = 0;
        const auto [ptr, ec] = std::from_chars(token.text.data(), token.text.data() + token.text.size(), value);
        if (ec == std::errc() && ptr == token.text.data() + token.text.size() && value < labels_.size())
            return value;
        fail(line, token, "unknown " + what_ + " '" + std::string(token.text) + "'");
    }
    const std::vector<std::string>& labels() const { return labels_; }

private:
    std::string what_;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Agent number in a keyword such as "actions 2", converted to 0-based.
std::size_t agent_number(const Line& line, std::size_t agents) {
    const auto& tokens = line.fields.front().tokens;
    if (tokens.size() != 2) fail(line, "expected '" + std::string(tokens.front().text) + " <agent>:'");
    const std::size_t i = parse_count(line, tokens[1]);
    if (i < 1 || i > agents)
        fail(line, tokens[1], "agent number must lie in 1.." + std::to_string(agents));
    return i - 1;
}

void expect_fields(const Line& line, std::size_t count) {
    if (line.fields.size() != count)
        fail(line, "'" + std::string(line.keyword().text) + "' expects " + std::to_string(count - 1) +
                       " ':'-separated field(s), got " + std::to_string(line.fields.size() - 1));
}

const Token& single(const Line& line, const Field& field, const char* what) {
    if (field.tokens.size() != 1) {
        if (field.tokens.empty()) throw FormatError(std::string("missing ") + what, line.number, field.column);
        fail(line, field.tokens[1], std::string("expected a single ") + what);
    }
    return field.tokens.front();
}

std::string joint_string(const std::vector<LabelSet>& sets, std::span<const std::size_t> digits) {
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i) out += ' ';
        out += sets[i].labels()[digits[i]];
    }
    return out;
}

void check_label(const std::string& label, const char* what) {
    if (label.empty() || label.find_first_of(" \t\r\n:#") != std::string::npos)
        throw ModelError(std::string("write_instance: ") + what + " label '" + label + "' is not writable");
}

}  // namespace

DecPomdp parse_instance(std::string_view text) {
    const std::vector<Line> lines = tokenize(text);

    std::optional<std::size_t> agents;
    std::optional<double> discount;
    bool cost = false;
    bool normalize = false;
    std::optional<LabelSet> states;
    std::vector<std::optional<LabelSet>> actions, observations;
    std::optional<std::vector<double>> start;
    std::size_t start_line = 0;
    std::unordered_map<std::string, std::size_t> seen_headers;
    std::vector<const Line*> entries;

    auto once = [&](const Line& line, const std::string& key) {
        if (auto [it, fresh] = seen_headers.emplace(key, line.number); !fresh)
            fail(line, "duplicate '" + key + "' statement (first on line " + std::to_string(it->second) + ")");
    };
    auto need_agents = [&](const Line& line) {
        if (!agents) fail(line, "'agents:' must precede per-agent declarations");
        return *agents;
    };

    for (const Line& line : lines) {
        const std::string keyword(line.keyword().text);
        if (keyword == "T" || keyword == "O" || keyword == "R") {
            if (line.fields.front().tokens.size() != 1) fail(line, line.fields.front().tokens[1], "unexpected token");
            entries.push_back(&line);
            continue;
        }
        if (keyword == "actions" || keyword == "observations") {
            expect_fields(line, 2);
            const std::size_t i = agent_number(line, need_agents(line));
            once(line, keyword + " " + std::to_string(i + 1));
            auto& slot = keyword == "actions" ? actions[i] : observations[i];
            slot = LabelSet(line, line.fields[1], keyword == "actions" ? "action" : "observation");
            continue;
        }
        if (line.fields.front().tokens.size() != 1) fail(line, line.fields.front().tokens[1], "unexpected token");
        expect_fields(line, 2);
        once(line, keyword);
        const Field& value = line.fields[1];
        if (keyword == "agents") {
            const std::size_t n = parse_count(line, single(line, value, "agent count"));
            if (n == 0) fail(line, value.tokens[0], "at least one agent is required");
            agents = n;
            actions.resize(n);
            observations.resize(n);
        } else if (keyword == "discount") {
            discount = parse_number(line, single(line, value, "discount"));
        } else if (keyword == "values") {
            const Token& t = single(line, value, "value type");
            if (t.text == "cost") cost = true;
            else if (t.text != "reward") fail(line, t, "values must be 'reward' or 'cost'");
        } else if (keyword == "normalize") {
            const Token& t = single(line, value, "flag");
            if (t.text == "true") normalize = true;
            else if (t.text != "false") fail(line, t, "normalize must be 'true' or 'false'");
        } else if (keyword == "states") {
            states = LabelSet(line, value, "state");
        } else if (keyword == "start") {
            std::vector<double> p;
            for (const auto& t : value.tokens) p.push_back(parse_probability(line, t));
            start = std::move(p);
            start_line = line.number;
        } else {
            fail(line, line.keyword(), "unknown statement '" + keyword + "'");
        }
    }

    if (!agents) throw FormatError("missing 'agents:' statement");
    if (!discount) throw FormatError("missing 'discount:' statement");
    if (!states) throw FormatError("missing 'states:' statement");
    for (std::size_t i = 0; i < *agents; ++i) {
        if (!actions[i]) throw FormatError("missing 'actions " + std::to_string(i + 1) + ":' statement");
        if (!observations[i]) throw FormatError("missing 'observations " + std::to_string(i + 1) + ":' statement");
    }
    if (!start) throw FormatError("missing 'start:' statement");
    if (start->size() != states->labels().size())
        throw FormatError("start lists " + std::to_string(start->size()) + " probabilities for " +
                              std::to_string(states->labels().size()) + " states",
                          start_line, 1);

    std::vector<LabelSet> action_sets, observation_sets;
    std::vector<std::vector<std::string>> action_labels, observation_labels;
    for (std::size_t i = 0; i < *agents; ++i) {
        action_sets.push_back(*actions[i]);
        observation_sets.push_back(*observations[i]);
        action_labels.push_back(actions[i]->labels());
        observation_labels.push_back(observations[i]->labels());
    }
    DecPomdp model(states->labels(), action_labels, observation_labels, *discount);
    model.set_start(*start);

    const std::size_t ns = model.num_states();
    const std::size_t na = model.num_joint_actions();
    const std::size_t no = model.num_joint_observations();
    const JointIndexer& ja = model.joint_actions();
    const JointIndexer& jo = model.joint_observations();

    auto joint = [&](const Line& line, const Field& field, const std::vector<LabelSet>& sets,
                     const JointIndexer& indexer, const char* what) {
        if (field.tokens.size() != sets.size())
            throw FormatError("expected " + std::to_string(sets.size()) + " " + what + " label(s), got " +
                                  std::to_string(field.tokens.size()),
                              line.number, field.column);
        std::vector<std::size_t> digits(sets.size());
        for (std::size_t i = 0; i < sets.size(); ++i) digits[i] = sets[i].resolve(line, field.tokens[i]);
        return indexer.flatten(digits);
    };

    std::unordered_map<std::size_t, std::size_t> t_seen, o_seen, r_seen, t_rows, o_rows;
    auto record = [&](std::unordered_map<std::size_t, std::size_t>& seen, std::size_t key, const Line& line,
                      const char* what) {
        if (auto [it, fresh] = seen.emplace(key, line.number); !fresh)
            fail(line, std::string("duplicate ") + what + " entry (first on line " + std::to_string(it->second) +
                           ")");
    };

    for (const Line* lp : entries) {
        const Line& line = *lp;
        const char kind = line.keyword().text.front();
        if (kind == 'T') {
            expect_fields(line, 5);
            const std::size_t a = joint(line, line.fields[1], action_sets, ja, "action");
            const std::size_t s = states->resolve(line, single(line, line.fields[2], "state"));
            const std::size_t s2 = states->resolve(line, single(line, line.fields[3], "next state"));
            const double p = parse_probability(line, single(line, line.fields[4], "probability"));
            record(t_seen, (s * na + a) * ns + s2, line, "T");
            t_rows.emplace(s * na + a, line.number);
            model.transition(s, a, s2) = p;
        } else if (kind == 'O') {
            expect_fields(line, 5);
            const std::size_t a = joint(line, line.fields[1], action_sets, ja, "action");
            const std::size_t s2 = states->resolve(line, single(line, line.fields[2], "next state"));
            const std::size_t o = joint(line, line.fields[3], observation_sets, jo, "observation");
            const double p = parse_probability(line, single(line, line.fields[4], "probability"));
            record(o_seen, (a * ns + s2) * no + o, line, "O");
            o_rows.emplace(a * ns + s2, line.number);
            model.observation(a, s2, o) = p;
        } else {
            expect_fields(line, 4);
            const std::size_t a = joint(line, line.fields[1], action_sets, ja, "action");
            const std::size_t s = states->resolve(line, single(line, line.fields[2], "state"));
            const double r = parse_number(line, single(line, line.fields[3], "reward"));
            record(r_seen, s * na + a, line, "R");
            model.reward(s, a) = cost ? -r : r;
        }
    }

    if (normalize) normalize_rows(model);

    auto row_line = [](const std::unordered_map<std::size_t, std::size_t>& rows, std::size_t key) {
        const auto it = rows.find(key);
        return it == rows.end() ? std::size_t{0} : it->second;
    };
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
            const auto row = model.transition_row(s, a);
            const double sum = std::accumulate(row.begin(), row.end(), 0.0);
            if (std::abs(sum - 1.0) > kProbabilityTolerance) {
                const std::size_t at = row_line(t_rows, s * na + a);
                throw FormatError("T row (" + joint_string(action_sets, ja.unflatten(a)) + " : " +
                                      states->labels()[s] + ") sums to " + format_number(sum) + ", not 1",
                                  at, at ? 1 : 0);
            }
        }
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t s2 = 0; s2 < ns; ++s2) {
            const auto row = model.observation_row(a, s2);
            const double sum = std::accumulate(row.begin(), row.end(), 0.0);
            if (std::abs(sum - 1.0) > kProbabilityTolerance) {
                const std::size_t at = row_line(o_rows, a * ns + s2);
                throw FormatError("O row (" + joint_string(action_sets, ja.unflatten(a)) + " : " +
                                      states->labels()[s2] + ") sums to " + format_number(sum) + ", not 1",
                                  at, at ? 1 : 0);
            }
        }
    const double start_sum = std::accumulate(model.start().begin(), model.start().end(), 0.0);
    if (std::abs(start_sum - 1.0) > kProbabilityTolerance)
        throw FormatError("start distribution sums to " + format_number(start_sum) + ", not 1", start_line, 1);

    if (const auto report = validate(model); !report.empty())
        throw FormatError("invalid model: " + report.front().where + ": " + report.front().message);
    return model;
}

std::string write_instance(const DecPomdp& model) {
    const std::size_t n = model.num_agents();
    std::vector<LabelSet> action_sets, observation_sets;
    for (const auto& l : model.state_labels()) check_label(l, "state");
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& l : model.action_labels(i)) check_label(l, "action");
        for (const auto& l : model.observation_labels(i)) check_label(l, "observation");
        action_sets.emplace_back(model.action_labels(i));
        observation_sets.emplace_back(model.observation_labels(i));
    }
    const auto& states = model.state_labels();
    const JointIndexer& ja = model.joint_actions();
    const JointIndexer& jo = model.joint_observations();

    std::ostringstream os;
    os << "agents: " << n << "\n";
    os << "discount: " << format_number(model.discount()) << "\n";
    os << "values: reward\n";
    os << "states:";
    for (const auto& l : states) os << ' ' << l;
    os << "\n";
    for (std::size_t i = 0; i < n; ++i) {
        os << "actions " << i + 1 << ":";
        for (const auto& l : model.action_labels(i)) os << ' ' << l;
        os << "\n";
    }
    for (std::size_t i = 0; i < n; ++i) {
        os << "observations " << i + 1 << ":";
        for (const auto& l : model.observation_labels(i)) os << ' ' << l;
        os << "\n";
    }
    os << "start:";
    for (double p : model.start()) os << ' ' << format_number(p);
    os << "\n";

    for (std::size_t a = 0; a < ja.size(); ++a) {
        const std::string act = joint_string(action_sets, ja.unflatten(a));
        for (std::size_t s = 0; s < states.size(); ++s)
            for (std::size_t s2 = 0; s2 < states.size(); ++s2)
                if (const double p = model.transition(s, a, s2); p != 0.0)
                    os << "T: " << act << " : " << states[s] << " : " << states[s2] << " : " << format_number(p)
                       << "\n";
    }
    for (std::size_t a = 0; a < ja.size(); ++a) {
        const std::string act = joint_string(action_sets, ja.unflatten(a));
        for (std::size_t s2 = 0; s2 < states.size(); ++s2)
            for (std::size_t o = 0; o < jo.size(); ++o)
                if (const double p = model.observation(a, s2, o); p != 0.0)
                    os << "O: " << act << " : " << states[s2] << " : "
                       << joint_string(observation_sets, jo.unflatten(o)) << " : " << format_number(p) << "\n";
    }
    for (std::size_t a = 0; a < ja.size(); ++a) {
        const std::string act = joint_string(action_sets, ja.unflatten(a));
        for (std::size_t s = 0; s < states.size(); ++s)
            if (const double r = model.reward(s, a); r != 0.0)
                os << "R: " << act << " : " << states[s] << " : " << format_number(r) << "\n";
    }
    return os.str();
}

namespace {

/// Reads the probability tokens of a row statement and checks the simplex.
void read_row(const Line& line, const Field& field, std::span<double> row, const std::string& name) {
    if (field.tokens.size() != row.size())
        throw FormatError(name + " expects " + std::to_string(row.size()) + " probabilities, got " +
                              std::to_string(field.tokens.size()),
                          line.number, field.column);
    double sum = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) sum += (row[k] = parse_probability(line, field.tokens[k]));
    if (std::abs(sum - 1.0) > kProbabilityTolerance)
        throw FormatError(name + " sums to " + format_number(sum) + ", not 1", line.number, field.column);
}

std::vector<std::size_t> indices(const Line& line, const Field& field, std::span<const std::size_t> limits,
                                 std::span<const char* const> names) {
    if (field.tokens.size() != limits.size())
        throw FormatError("expected " + std::to_string(limits.size()) + " indices before ':'", line.number,
                          field.column);
    std::vector<std::size_t> out(limits.size());
    for (std::size_t k = 0; k < limits.size(); ++k) {
        out[k] = parse_count(line, field.tokens[k]);
        if (out[k] >= limits[k])
            fail(line, field.tokens[k],
                 std::string(names[k]) + " index must be below " + std::to_string(limits[k]));
    }
    return out;
}

std::string row_name(const char* kind, std::size_t agent, std::span<const std::size_t> idx) {
    std::string out = std::string(kind) + " row (agent " + std::to_string(agent + 1);
    for (std::size_t v : idx) out += ", " + std::to_string(v);
    return out + ")";
}

}  // namespace

JointPolicy parse_policy(std::string_view text) {
    const std::vector<Line> lines = tokenize(text);
    std::optional<std::size_t> agents;
    std::optional<std::pair<std::size_t, std::size_t>> device;  // states, initial
    std::vector<std::optional<Fsc>> controllers;
    std::vector<const Line*> rows;

    // Headers first so rows may appear in any order.
    for (const Line& line : lines) {
        const std::string keyword(line.keyword().text);
        if (keyword == "W" || keyword == "psi" || keyword == "eta") {
            rows.push_back(&line);
            continue;
        }
        expect_fields(line, 2);
        const auto& value = line.fields[1].tokens;
        if (keyword == "agents") {
            if (agents) fail(line, "duplicate 'agents' statement");
            if (line.fields[0].tokens.size() != 1) fail(line, line.fields[0].tokens[1], "unexpected token");
            agents = parse_count(line, single(line, line.fields[1], "agent count"));
            if (*agents == 0) fail(line, value[0], "at least one agent is required");
        } else if (keyword == "device") {
            if (device) fail(line, "duplicate 'device' statement");
            if (value.empty()) throw FormatError("missing device size", line.number, line.fields[1].column);
            const std::size_t states = parse_count(line, value[0]);
            if (states == 0) fail(line, value[0], "device needs at least one state");
            std::size_t initial = 0;
            if (value.size() == 3 && value[1].text == "initial") initial = parse_count(line, value[2]);
            else if (value.size() != 1) fail(line, value[1], "expected 'device: <states> initial <state>'");
            if (initial >= states) fail(line, value.back(), "initial device state out of range");
            device = {states, initial};
        }
    }
    if (!agents) throw FormatError("missing 'agents:' statement");
    controllers.resize(*agents);
    const std::size_t nc = device ? device->first : 1;

    for (const Line& line : lines) {
        if (line.keyword().text != "controller") continue;
        const std::size_t i = agent_number(line, *agents);
        if (controllers[i]) fail(line, "duplicate controller " + std::to_string(i + 1));
        const auto& value = line.fields[1].tokens;
        std::unordered_map<std::string, std::size_t> kv;
        if (value.size() % 2 != 0) fail(line, value.back(), "expected key/value pairs");
        for (std::size_t k = 0; k < value.size(); k += 2) {
            const std::string key(value[k].text);
            if (key != "nodes" && key != "actions" && key != "observations" && key != "initial")
                fail(line, value[k], "unknown controller attribute '" + key + "'");
            if (!kv.emplace(key, parse_count(line, value[k + 1])).second)
                fail(line, value[k], "duplicate attribute '" + key + "'");
        }
        for (const char* key : {"nodes", "actions", "observations"})
            if (!kv.count(key)) fail(line, std::string("controller is missing '") + key + "'");
        const std::size_t initial = kv.count("initial") ? kv["initial"] : 0;
        try {
            controllers[i] = Fsc(kv["nodes"], kv["actions"], kv["observations"], nc, initial);
        } catch (const ModelError& e) {
            fail(line, e.what());
        }
    }
    for (std::size_t i = 0; i < *agents; ++i)
        if (!controllers[i]) throw FormatError("missing 'controller " + std::to_string(i + 1) + ":' statement");
    for (const Line& line : lines) {
        const std::string keyword(line.keyword().text);
        if (keyword != "agents" && keyword != "device" && keyword != "controller" && keyword != "W" &&
            keyword != "psi" && keyword != "eta")
            fail(line, line.keyword(), "unknown statement '" + keyword + "'");
    }

    JointPolicy policy;
    for (auto& c : controllers) policy.agents.push_back(std::move(*c));
    if (device) policy.device = CorrelationDevice(device->first, device->second);

    std::unordered_map<std::string, std::size_t> seen;
    for (const Line* lp : rows) {
        const Line& line = *lp;
        const std::string keyword(line.keyword().text);
        expect_fields(line, 3);
        std::string key;
        if (keyword == "W") {
            if (!policy.device) fail(line, "device row given but no 'device:' statement");
            if (line.fields[0].tokens.size() != 1) fail(line, line.fields[0].tokens[1], "unexpected token");
            const std::size_t limits[] = {nc};
            const char* const names[] = {"device state"};
            const auto idx = indices(line, line.fields[1], limits, names);
            key = "W " + std::to_string(idx[0]);
            if (!seen.emplace(key, line.number).second) fail(line, "duplicate device row " + std::to_string(idx[0]));
            read_row(line, line.fields[2], policy.device->row(idx[0]), "device row " + std::to_string(idx[0]));
            continue;
        }
        const std::size_t i = agent_number(line, *agents);
        Fsc& fsc = policy.agents[i];
        if (keyword == "psi") {
            const std::size_t limits[] = {nc, fsc.num_nodes()};
            const char* const names[] = {"device state", "node"};
            const auto idx = indices(line, line.fields[1], limits, names);
            const std::string name = row_name("psi", i, idx);
            if (!seen.emplace(name, line.number).second) fail(line, "duplicate " + name);
            read_row(line, line.fields[2], fsc.action_row(idx[0], idx[1]), name);
        } else {
            const std::size_t limits[] = {nc, fsc.num_nodes(), fsc.num_actions(), fsc.num_observations()};
            const char* const names[] = {"device state", "node", "action", "observation"};
            const auto idx = indices(line, line.fields[1], limits, names);
            const std::string name = row_name("eta", i, idx);
            if (!seen.emplace(name, line.number).second) fail(line, "duplicate " + name);
            read_row(line, line.fields[2], fsc.transition_row(idx[0], idx[1], idx[2], idx[3]), name);
        }
    }

    // Every row must have been given.
    if (policy.device)
        for (std::size_t c = 0; c < nc; ++c)
            if (!seen.count("W " + std::to_string(c))) throw FormatError("missing device row " + std::to_string(c));
    for (std::size_t i = 0; i < policy.num_agents(); ++i) {
        const Fsc& fsc = policy.agents[i];
        for (std::size_t c = 0; c < nc; ++c)
            for (std::size_t q = 0; q < fsc.num_nodes(); ++q) {
                const std::size_t pi[] = {c, q};
                if (!seen.count(row_name("psi", i, pi))) throw FormatError("missing " + row_name("psi", i, pi));
                for (std::size_t a = 0; a < fsc.num_actions(); ++a)
                    for (std::size_t o = 0; o < fsc.num_observations(); ++o) {
                        const std::size_t ei[] = {c, q, a, o};
                        if (!seen.count(row_name("eta", i, ei)))
                            throw FormatError("missing " + row_name("eta", i, ei));
                    }
            }
    }
    return policy;
}

std::string write_policy(const JointPolicy& policy) {
    std::ostringstream os;
    auto row = [&](std::span<const double> values) {
        for (double p : values) os << ' ' << format_number(p);
        os << "\n";
    };
    os << "agents: " << policy.num_agents() << "\n";
    if (policy.device) {
        os << "device: " << policy.device->num_states() << " initial " << policy.device->initial_state() << "\n";
        for (std::size_t c = 0; c < policy.device->num_states(); ++c) {
            os << "W: " << c << " :";
            row(policy.device->row(c));
        }
    }
    for (std::size_t i = 0; i < policy.num_agents(); ++i) {
        const Fsc& fsc = policy.agents[i];
        os << "controller " << i + 1 << ": nodes " << fsc.num_nodes() << " actions " << fsc.num_actions()
           << " observations " << fsc.num_observations() << " initial " << fsc.initial_node() << "\n";
        for (std::size_t c = 0; c < fsc.num_device_states(); ++c)
            for (std::size_t q = 0; q < fsc.num_nodes(); ++q) {
                os << "psi " << i + 1 << ": " << c << ' ' << q << " :";
                row(fsc.action_row(c, q));
            }
        for (std::size_t c = 0; c < fsc.num_device_states(); ++c)
            for (std::size_t q = 0; q < fsc.num_nodes(); ++q)
                for (std::size_t a = 0; a < fsc.num_actions(); ++a)
                    for (std::size_t o = 0; o < fsc.num_observations(); ++o) {
                        os << "eta " << i + 1 << ": " << c << ' ' << q << ' ' << a << ' ' << o << " :";
                        row(fsc.transition_row(c, q, a, o));
                    }
    }
    return os.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << contents;
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace decfsc
