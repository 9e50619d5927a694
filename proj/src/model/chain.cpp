#include <cmath>

#include "mlc/errors.hpp"
#include "mlc/model.hpp"
#include "sketch.hpp"

namespace mlc::model {

using detail::Sketch;
using detail::WorldPoint;

namespace {

constexpr double kRhombusSide = 1.1;
constexpr double kPlateHalfWidth = 0.75;
constexpr double kAdaptorExtent = 2.5;

void check_state(int s) {
    if (s != 0 && s != 1) throw InvalidSpec("states must be 0 or 1");
}

MuscleMode mode_of(double signal) { return signal > 0 ? MuscleMode::Expand : MuscleMode::Contract; }

double actuated(double rest, double signal) { return rest * (signal > 0 ? 1.5 : 0.5); }

}  // namespace

Assembly build_connector(int units, double tolerance, double signal, int initial_state) {
    if (units < 1) throw InvalidSpec("connector needs at least one unit");
    if (!(tolerance >= 0)) throw InvalidSpec("tolerance must be non-negative");
    if (std::abs(signal) != 0.5) throw InvalidSpec("connector signal must be +-0.5");
    check_state(initial_state);

    const double ns = 1.0 + signal * initial_state;
    const double ew = 2.0 * std::sqrt(kRhombusSide * kRhombusSide - 0.25 * ns * ns);
    const Vec3 N(0, ns / 2, 0), S(0, -ns / 2, 0), E(ew / 2, 0, 0), W(-ew / 2, 0, 0);
    const Vec3 Z = Vec3::UnitZ();

    Sketch sk;
    auto half = [&](const std::string& tag, double zc) {
        const Vec3 o = zc * Z;
        sk.body(tag + ".ne", E - N, Z);
        sk.body(tag + ".es", S - E, Z);
        sk.body(tag + ".sw", W - S, Z);
        sk.body(tag + ".wn", N - W, Z);
        sk.hinge(tag + ".n", tag + ".wn", tag + ".ne", N + o, Z, tolerance);
        sk.hinge(tag + ".e", tag + ".ne", tag + ".es", E + o, Z, tolerance);
        sk.hinge(tag + ".s", tag + ".es", tag + ".sw", S + o, Z, tolerance);
        sk.hinge(tag + ".w", tag + ".sw", tag + ".wn", W + o, Z, tolerance);
    };
    for (int k = 0; k < units; ++k) {
        half("u" + std::to_string(k) + ".a", k + 0.25);
        half("u" + std::to_string(k) + ".b", k + 0.75);
    }
    for (int k = 0; k < units; ++k) {
        const std::string u = "u" + std::to_string(k);
        const double z0 = k;
        sk.universal(u + ".e", u + ".a.ne", u + ".b.ne", E + (z0 + 0.5) * Z, tolerance);
        sk.universal(u + ".w", u + ".a.wn", u + ".b.wn", W + (z0 + 0.5) * Z, tolerance);
        const Vec3 top = (z0 + 1) * Z;
        if (k + 1 < units) {
            const std::string next = "u" + std::to_string(k + 1);
            sk.universal(u + ".n", u + ".b.ne", next + ".a.ne", N + top, tolerance);
            sk.universal(u + ".s", u + ".b.es", next + ".a.es", S + top, tolerance);
        }
        sk.probe("stage" + std::to_string(k + 1), {u + ".b.ne", N + top}, {u + ".b.es", S + top}, 1.0, signal,
                 ProbeRole::ConnectorStage);
    }
    sk.probe("in", {"u0.a.ne", N}, {"u0.a.es", S}, 1.0, signal, ProbeRole::GateInput);
    sk.muscle("m", {"u0.a.ne", N}, {"u0.a.es", S}, 1.0, actuated(1.0, signal), mode_of(signal), "in");
    sk.port("in", "in", PortDirection::Input, "m");
    sk.port("out", "stage" + std::to_string(units), PortDirection::Output);
    return sk.finish();
}

Assembly build_skeleton(int units, const std::vector<int>& initial_states) {
    if (units < 1) throw InvalidSpec("skeleton needs at least one unit");
    const int dofs = 2 * units;
    std::vector<int> states(initial_states);
    if (states.empty()) states.assign(dofs, 0);
    if (int(states.size()) != dofs) throw InvalidSpec("one initial state per skeleton DOF is required");
    for (int s : states) check_state(s);

    const double w = kPlateHalfWidth;
    const double r = std::hypot(1.0, 2 * w);
    const double rest_sep = 2 * std::asin(1.0 / r);
    const double bend = 2 * std::asin(1.5 / r) - rest_sep;

    // Plate k has origin o_k and in-plane direction angle a_k; hinge j joins
    // plate j at local (2, y_j) to plate j+1 at local (0, y_j).
    auto dir = [](double a) { return Vec3(std::cos(a), std::sin(a), 0); };
    auto nrm = [](double a) { return Vec3(-std::sin(a), std::cos(a), 0); };
    std::vector<Vec3> origin(dofs + 1);
    std::vector<double> angle(dofs + 1, 0.0);
    origin[0] = Vec3::Zero();
    for (int j = 0; j < dofs; ++j) {
        const double y = j % 2 == 0 ? w : -w;
        const Vec3 hinge = origin[j] + 2 * dir(angle[j]) + y * nrm(angle[j]);
        angle[j + 1] = angle[j] + (j % 2 == 0 ? 1 : -1) * bend * states[j];
        origin[j + 1] = hinge - y * nrm(angle[j + 1]);
    }
    auto at = [&](int k, double x, double y) -> Vec3 { return origin[k] + x * dir(angle[k]) + y * nrm(angle[k]); };

    const Vec3 Z = Vec3::UnitZ();
    Sketch sk;
    for (int k = 0; k <= dofs; ++k) {
        const std::string id = "s" + std::to_string(k);
        sk.body(id, dir(angle[k]), Z);
        for (double x : {0.0, 2.0})
            for (double y : {-w, w}) sk.enclose(id, at(k, x, y));
    }
    for (int j = 0; j < dofs; ++j) {
        const double y = j % 2 == 0 ? w : -w;
        const std::string a = "s" + std::to_string(j), b = "s" + std::to_string(j + 1);
        const std::string tag = "dof" + std::to_string(j);
        sk.hinge("h" + std::to_string(j), a, b, at(j, 2, y), Z, 0.0);
        const WorldPoint pa{a, at(j, 1, -y)}, pb{b, at(j + 1, 1, -y)};
        sk.probe(tag, pa, pb, 2.0, 1.0, ProbeRole::SkeletonDof);
        sk.muscle("m" + std::to_string(j), pa, pb, 2.0, actuated(2.0, 1.0), MuscleMode::Expand, tag);
        sk.port(tag, tag, PortDirection::Input, "m" + std::to_string(j));
    }
    return sk.finish();
}

Assembly build_adaptor(double in_signal, int initial_state, double tolerance) {
    if (std::abs(in_signal) != 0.5) throw InvalidSpec("adaptor input signal must be +-0.5");
    if (!(tolerance >= 0)) throw InvalidSpec("tolerance must be non-negative");
    check_state(initial_state);
    const auto lever = detail::plan_lever(1.0, in_signal, 2.0, 1.0, kAdaptorExtent);
    const bool crossed = lever.geo.spec.hinge == geometry::HingeType::Crossed;
    const double len = 1.0 + in_signal * initial_state;
    const Vec3 Z = Vec3::UnitZ();
    const auto p = detail::pose_from_input(lever, initial_state, Vec3(0, -len / 2, 0), Vec3(0, len / 2, 0),
                                           Vec3::UnitX());
    Sketch sk;
    sk.body("u", (crossed ? p.out_minus : p.out_plus) - p.in_plus, Z);
    sk.body("d", (crossed ? p.out_plus : p.out_minus) - p.in_minus, Z);
    sk.stack_arms("u", "d", p.apex, Z);
    sk.hinge("p", "u", "d", p.apex, Z, tolerance);
    const std::string plus_arm = crossed ? "d" : "u", minus_arm = crossed ? "u" : "d";
    sk.probe("in", {"u", p.in_plus}, {"d", p.in_minus}, 1.0, in_signal, ProbeRole::GateInput);
    sk.muscle("m", {"u", p.in_plus}, {"d", p.in_minus}, 1.0, actuated(1.0, in_signal), mode_of(in_signal), "in");
    sk.probe("out", {plus_arm, p.out_plus}, {minus_arm, p.out_minus}, 2.0, 1.0, ProbeRole::GateOutput);
    sk.port("in", "in", PortDirection::Input, "m");
    sk.port("out", "out", PortDirection::Output);
    return sk.finish();
}

Assembly build_muscle_fixture(MuscleMode mode, const std::string& channel, int initial_state) {
    check_state(initial_state);
    const double signal = mode == MuscleMode::Expand ? 0.5 : -0.5;
    const double len = 1.0 + signal * initial_state;
    const Vec3 X = Vec3::UnitX(), Z = Vec3::UnitZ();
    Sketch sk;
    sk.body("a", X, Z);
    sk.body("b", X, Z);
    sk.enclose("a", Vec3(-1, 0, 0));
    sk.enclose("b", Vec3(len + 1, 0, 0));
    const WorldPoint pa{"a", Vec3::Zero()}, pb{"b", Vec3(len, 0, 0)};
    sk.muscle("m", pa, pb, 1.0, actuated(1.0, signal), mode, channel);
    sk.probe("out", pa, pb, 1.0, signal, ProbeRole::GateOutput);
    sk.port("out", "out", PortDirection::Output);
    return sk.finish();
}

}  // namespace mlc::model
