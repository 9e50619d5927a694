#pragma once

// Line-oriented circuit description language (.mlc files).
//
//   muscle <id> mode (expand|contract) channel <id>
//   gate <id> kind (AND|OR|NAND|NOR) [out_mode (expand|contract)]
//   connector <id> units <int> [tolerance <float>]
//   skeleton <id> units <int>
//   wire <id>.<port> -> <id>.<port>
//   schedule <channel> square period <float> duty <float>
//   schedule <channel> step <t>:<0|1> ...
//   schedule <channel> const <0|1>
//
// `#` starts a comment that runs to the end of the line.

#include <string>
#include <string_view>
#include <vector>

#include "mlc/dynamics.hpp"
#include "mlc/geometry.hpp"
#include "mlc/model.hpp"

namespace mlc::netlist {

struct ScheduleDecl {
    std::string channel;
    dynamics::Waveform wave;
    bool operator==(const ScheduleDecl&) const = default;
};

struct CircuitSpec {
    model::CircuitPlan plan;
    std::vector<ScheduleDecl> schedules;
    bool operator==(const CircuitSpec&) const = default;
};

/// Throws SyntaxError, DuplicateIdAt or UnknownReference, each with the
/// 1-based line and column of the offending token.
CircuitSpec parse(std::string_view text);

/// Canonical text of a spec; parse(print(s)) == s.
std::string print(const CircuitSpec& spec);

struct Elaborated {
    model::Assembly assembly;
    dynamics::ActuationSchedule schedule;
};

/// Build the circuit and bind its schedules. Throws UnboundChannel when a
/// schedule names a channel no muscle listens on.
Elaborated elaborate(const CircuitSpec& spec, const geometry::CoreGeometry& core);

}  // namespace mlc::netlist
