#include <functional>
#include <set>

#include "mlc/errors.hpp"
#include "mlc/model.hpp"

namespace mlc::model {

namespace {

enum class Kind { Muscle, Gate, Connector, Skeleton };

struct Instance {
    Kind kind;
    std::size_t index;
};

struct Signal {
    double value;  ///< +0.5 or -0.5
    int state;     ///< logic state with every muscle at rest
};

double signal_of(MuscleMode m) { return m == MuscleMode::Expand ? 0.5 : -0.5; }

std::string key(const Endpoint& e) { return e.instance + "." + e.port; }

}  // namespace

Assembly build_circuit(const CircuitPlan& plan, const geometry::CoreGeometry& core) {
    std::map<std::string, Instance> inst;
    auto declare = [&](const std::string& id, Kind k, std::size_t i) {
        if (!inst.emplace(id, Instance{k, i}).second) throw DuplicateId("instance '" + id + "' declared twice");
    };
    for (std::size_t i = 0; i < plan.muscles.size(); ++i) declare(plan.muscles[i].id, Kind::Muscle, i);
    for (std::size_t i = 0; i < plan.gates.size(); ++i) declare(plan.gates[i].id, Kind::Gate, i);
    for (std::size_t i = 0; i < plan.connectors.size(); ++i) declare(plan.connectors[i].id, Kind::Connector, i);
    for (std::size_t i = 0; i < plan.skeletons.size(); ++i) declare(plan.skeletons[i].id, Kind::Skeleton, i);

    auto is_input = [&](const Endpoint& e) {
        const auto& in = inst.at(e.instance);
        switch (in.kind) {
            case Kind::Muscle: return false;
            case Kind::Gate: return e.port == "in1" || e.port == "in2";
            case Kind::Connector: return e.port == "in";
            case Kind::Skeleton: {
                const int dofs = 2 * plan.skeletons[in.index].units;
                for (int k = 0; k < dofs; ++k)
                    if (e.port == "dof" + std::to_string(k)) return true;
                return false;
            }
        }
        return false;
    };
    auto is_output = [&](const Endpoint& e) { return inst.at(e.instance).kind != Kind::Skeleton && e.port == "out"; };

    std::map<std::string, Endpoint> driver;  // input endpoint -> source
    std::set<std::string> used_outputs;
    for (const auto& w : plan.wires) {
        for (const auto* e : {&w.from, &w.to})
            if (!inst.count(e->instance)) throw UnknownPort("no instance named '" + e->instance + "'");
        if (!is_output(w.from)) {
            if (is_input(w.from)) throw PortMismatch("wire source " + key(w.from) + " is an input");
            throw UnknownPort("no output port " + key(w.from));
        }
        if (!is_input(w.to)) {
            if (is_output(w.to)) throw PortMismatch("wire target " + key(w.to) + " is an output");
            throw UnknownPort("no input port " + key(w.to));
        }
        if (!driver.emplace(key(w.to), w.from).second) throw DoubleWire("input " + key(w.to) + " is wired twice");
        if (inst.at(w.from.instance).kind != Kind::Muscle && !used_outputs.insert(key(w.from)).second)
            throw DoubleWire("output " + key(w.from) + " is wired twice");
    }

    // Logic state and signal of every output at zero actuation.
    std::map<std::string, Signal> out_signal;
    std::set<std::string> visiting;
    std::function<std::optional<Signal>(const std::string&, const std::string&)> input_signal;
    std::function<Signal(const std::string&)> output_of = [&](const std::string& id) -> Signal {
        if (auto it = out_signal.find(id); it != out_signal.end()) return it->second;
        if (!visiting.insert(id).second) throw InvalidSpec("circuit contains a feedback loop through '" + id + "'");
        const auto& in = inst.at(id);
        Signal s{0.5, 0};
        switch (in.kind) {
            case Kind::Muscle: s = {signal_of(plan.muscles[in.index].mode), 0}; break;
            case Kind::Gate: {
                const auto& g = plan.gates[in.index];
                const auto a = input_signal(id, "in1"), b = input_signal(id, "in2");
                const MuscleMode om = g.out_mode.value_or(default_output_mode(g.kind));
                s = {signal_of(om), gate_output_state(g.kind, {a ? a->state : 0, b ? b->state : 0})};
                break;
            }
            case Kind::Connector: {
                const auto a = input_signal(id, "in");
                s = a ? *a : Signal{0.5, 0};
                break;
            }
            case Kind::Skeleton: throw InvalidSpec("skeletons have no output");
        }
        visiting.erase(id);
        out_signal[id] = s;
        return s;
    };
    input_signal = [&](const std::string& id, const std::string& port) -> std::optional<Signal> {
        auto it = driver.find(id + "." + port);
        if (it == driver.end()) return std::nullopt;
        return output_of(it->second.instance);
    };
    for (const auto& [id, in] : inst)
        if (in.kind != Kind::Skeleton) output_of(id);

    std::vector<Assembly> parts;
    std::vector<Wire> wires;
    std::vector<std::pair<std::string, std::string>> channel_of_port;  // port name -> muscle channel

    auto hook_up = [&](const Endpoint& to, const std::string& target_port) {
        const Endpoint& from = driver.at(key(to));
        const auto& src = inst.at(from.instance);
        if (src.kind == Kind::Muscle)
            channel_of_port.emplace_back(target_port, plan.muscles[src.index].channel);
        else
            wires.push_back({key(from), target_port});
    };

    for (const auto& g : plan.gates) {
        const auto a = input_signal(g.id, "in1"), b = input_signal(g.id, "in2");
        MuscleMode mm = g.kind == GateKind::NAND ? MuscleMode::Expand : MuscleMode::Contract;
        if (a && b && a->value != b->value)
            throw PortMismatch("inputs of gate '" + g.id + "' carry different signal modes");
        if (a) mm = a->value > 0 ? MuscleMode::Expand : MuscleMode::Contract;
        else if (b) mm = b->value > 0 ? MuscleMode::Expand : MuscleMode::Contract;
        GateOptions opt;
        opt.initial = {a ? a->state : 0, b ? b->state : 0};
        const MuscleMode om = g.out_mode.value_or(default_output_mode(g.kind));
        parts.push_back(namespaced(build_gate(g.kind, mm, om, core, opt), g.id));
        for (const char* port : {"in1", "in2"})
            if (driver.count(g.id + "." + port)) hook_up({g.id, port}, g.id + "." + port);
    }
    for (const auto& c : plan.connectors) {
        const auto a = input_signal(c.id, "in");
        parts.push_back(
            namespaced(build_connector(c.units, c.tolerance, a ? a->value : 0.5, a ? a->state : 0), c.id));
        if (a) hook_up({c.id, "in"}, c.id + ".in");
    }
    for (const auto& s : plan.skeletons) {
        const int dofs = 2 * s.units;
        std::vector<int> states(dofs, 0);
        for (int k = 0; k < dofs; ++k) {
            const std::string port = "dof" + std::to_string(k);
            const auto a = input_signal(s.id, port);
            if (!a) continue;
            states[k] = a->state;
            // Adapt the unit signal onto the skeleton DOF.
            const std::string adaptor = s.id + "." + port + ".adaptor";
            parts.push_back(namespaced(build_adaptor(a->value, a->state), adaptor));
            hook_up({s.id, port}, adaptor + ".in");
            wires.push_back({adaptor + ".out", s.id + "." + port});
        }
        parts.push_back(namespaced(build_skeleton(s.units, states), s.id));
    }
    std::set<std::string> driving;
    for (const auto& [to, from] : driver) driving.insert(from.instance);
    for (const auto& m : plan.muscles) {
        if (driving.count(m.id)) continue;
        Assembly fixture = namespaced(build_muscle_fixture(m.mode, m.channel), m.id);
        for (auto& mus : fixture.muscles) mus.channel = m.channel;
        parts.push_back(std::move(fixture));
    }

    Assembly out = compose(parts, wires);
    for (const auto& [port_name, channel] : channel_of_port) {
        const std::string muscle = out.port(port_name).muscle;
        for (auto& m : out.muscles)
            if (m.id == muscle) m.channel = channel;
        std::erase_if(out.ports, [&](const Port& p) { return p.name == port_name; });
    }
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------

std::string to_string(TetrisSource s) {
    switch (s) {
        case TetrisSource::Y: return "y";
        case TetrisSource::B: return "b";
        case TetrisSource::YAndB: return "y&b";
    }
    return "";
}

TetrisChoice TetrisChoice::default_choice() {
    return {{{TetrisSource::Y, 1}, {TetrisSource::B, 2}, {TetrisSource::YAndB, 4}, {TetrisSource::YAndB, 7}}};
}

CircuitPlan tetris_plan(const TetrisChoice& choice) {
    CircuitPlan plan;
    plan.muscles = {{"y", MuscleMode::Expand, "y"}, {"b", MuscleMode::Expand, "b"}};
    plan.skeletons = {{"skeleton", 4}};
    std::set<int> seen;
    int gates = 0;
    for (const auto& [src, dof] : choice.dof_map) {
        if (dof < 0 || dof >= 8) throw InvalidSpec("tetris DOF index out of range");
        if (!seen.insert(dof).second) throw DoubleWire("tetris DOF " + std::to_string(dof) + " mapped twice");
        const Endpoint to{"skeleton", "dof" + std::to_string(dof)};
        if (src == TetrisSource::YAndB) {
            const std::string g = "and" + std::to_string(gates++);
            plan.gates.push_back({g, GateKind::AND, MuscleMode::Expand});
            plan.wires.push_back({{"y", "out"}, {g, "in1"}});
            plan.wires.push_back({{"b", "out"}, {g, "in2"}});
            plan.wires.push_back({{g, "out"}, to});
        } else {
            plan.wires.push_back({{src == TetrisSource::Y ? "y" : "b", "out"}, to});
        }
    }
    return plan;
}

Assembly build_tetris_robot(const TetrisChoice& choice, const geometry::CoreGeometry& core) {
    return build_circuit(tetris_plan(choice), core);
}

std::array<int, 8> tetris_targets(const TetrisChoice& choice, int y, int b) {
    std::array<int, 8> out{};
    for (const auto& [src, dof] : choice.dof_map) {
        int v = 0;
        switch (src) {
            case TetrisSource::Y: v = y; break;
            case TetrisSource::B: v = b; break;
            case TetrisSource::YAndB: v = y & b; break;
        }
        out.at(dof) = v;
    }
    return out;
}

}  // namespace mlc::model
