#pragma once

#include "decfsc/controller.hpp"
#include "decfsc/model.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace decfsc {

/// Syntax or semantic error in an instance or policy document. line() and
/// column() are 1-based; 0 means the error has no single source position.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& message, std::size_t line = 0, std::size_t column = 0);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::string& message() const { return message_; }

private:
    std::string message_;
    std::size_t line_;
    std::size_t column_;
};

/**
 * Instance grammar (one statement per line, '#' starts a comment, agents are
 * numbered from 1, labels may also be referenced by 0-based index):
 *
 *   agents: <n>
 *   discount: <gamma>
 *   values: reward | cost            optional, default reward
 *   normalize: true | false          optional, default false
 *   states: <label>...
 *   actions <i>: <label>...          one line per agent
 *   observations <i>: <label>...     one line per agent
 *   start: <p>...                    one probability per state
 *   T: <a_1> ... <a_n> : <s> : <s'> : <p>
 *   O: <a_1> ... <a_n> : <s'> : <o_1> ... <o_n> : <p>
 *   R: <a_1> ... <a_n> : <s> : <r>
 *
 * Unlisted T, O and R entries are 0; listing an entry twice is an error.
 * With `values: cost` every R entry is negated. With `normalize: true` T and
 * O rows and the start distribution are rescaled to sum to 1 before the
 * model is validated; otherwise an invalid row is reported.
 */
DecPomdp parse_instance(std::string_view text);

/// Shortest round-trip decimal for every number; T and O entries that are 0
/// and R entries that are 0 are omitted.
std::string write_instance(const DecPomdp& model);

/**
 * Policy grammar:
 *
 *   agents: <n>
 *   device: <|C|> initial <c0>                     optional
 *   W: <c> : <p>...                                 one row per device state
 *   controller <i>: nodes <|Q|> actions <|A|> observations <|O|> initial <q0>
 *   psi <i>: <c> <q> : <p>...                       |A| entries
 *   eta <i>: <c> <q> <a> <o> : <p>...               |Q| entries
 *
 * Every row must appear exactly once and be a distribution within 1e-9.
 * Without a device line the only device index is 0.
 */
JointPolicy parse_policy(std::string_view text);
std::string write_policy(const JointPolicy& policy);

/// Reads a whole file; throws std::runtime_error when it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace decfsc
