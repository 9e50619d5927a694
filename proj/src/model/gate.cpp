#include <cmath>

#include "mlc/errors.hpp"
#include "mlc/model.hpp"
#include "sketch.hpp"

namespace mlc::model {

using detail::LeverPose;
using detail::Sketch;
using geometry::HingeType;

std::string to_string(GateKind k) {
    switch (k) {
        case GateKind::AND: return "AND";
        case GateKind::OR: return "OR";
        case GateKind::NAND: return "NAND";
        case GateKind::NOR: return "NOR";
    }
    return "";
}

GateKind gate_kind_from_string(const std::string& s) {
    for (auto k : {GateKind::AND, GateKind::OR, GateKind::NAND, GateKind::NOR})
        if (to_string(k) == s) return k;
    throw InvalidSpec("unknown gate kind '" + s + "'");
}

bool gate_logic(GateKind k, bool a, bool b) {
    switch (k) {
        case GateKind::AND: return a && b;
        case GateKind::OR: return a || b;
        case GateKind::NAND: return !(a && b);
        case GateKind::NOR: return !(a || b);
    }
    return false;
}

int gate_output_state(GateKind kind, std::array<int, 2> inputs) {
    return gate_logic(kind, inputs[0] != 0, inputs[1] != 0) ? 1 : 0;
}

MuscleMode default_output_mode(GateKind kind) {
    return kind == GateKind::NAND ? MuscleMode::Expand : MuscleMode::Contract;
}

namespace {

double signal_of(MuscleMode m) { return m == MuscleMode::Expand ? 0.5 : -0.5; }

bool input_not(GateKind k) { return k == GateKind::OR || k == GateKind::NOR; }
bool output_not(GateKind k) { return k == GateKind::NAND || k == GateKind::OR; }

HingeType hinge_for(double dl_in, double dl_out) {
    return (dl_in > 0) == (dl_out > 0) ? HingeType::Crossed : HingeType::Open;
}

}  // namespace

GatePolarity gate_polarity(GateKind kind, MuscleMode muscle_mode, MuscleMode output_mode) {
    GatePolarity p;
    p.input_not = input_not(kind);
    p.output_not = output_not(kind);
    p.input_hinge = hinge_for(signal_of(muscle_mode), p.input_not ? -1.0 : 1.0);
    p.output_hinge = hinge_for(1.0, p.output_not ? -signal_of(output_mode) : signal_of(output_mode));
    return p;
}

Assembly build_gate(GateKind kind, MuscleMode muscle_mode, MuscleMode output_mode,
                    const geometry::CoreGeometry& core, const GateOptions& options) {
    for (int s : options.initial)
        if (s != 0 && s != 1) throw InvalidSpec("gate input states must be 0 or 1");
    if (!(options.tolerance >= 0)) throw InvalidSpec("tolerance must be non-negative");
    if (!(core.spec.delta_in_frac > 0 && core.delta_out_frac > 0))
        throw GeometryInfeasible("the logic core must have a positive output signal");

    const double delta = core.spec.delta_in_frac;
    const double h = core.spec.h_frac;
    const double sm = signal_of(muscle_mode);
    const double so = signal_of(output_mode);
    const bool inot = input_not(kind), onot = output_not(kind);
    const double tol = options.tolerance;

    const auto in_lever = inot ? detail::plan_lever(1.0, sm, 1.0 + delta, -delta, options.input_extent)
                               : detail::plan_lever(1.0, sm, 1.0, delta, options.input_extent);
    const auto out_lever = onot ? detail::plan_lever(h, core.delta_out_frac, 1.0 + so, -so, options.output_extent)
                                : detail::plan_lever(h, core.delta_out_frac, 1.0, so, options.output_extent);
    const bool in_crossed = in_lever.geo.spec.hinge == HingeType::Crossed;
    const bool out_crossed = out_lever.geo.spec.hinge == HingeType::Crossed;

    const int c1 = options.initial[0] ^ int(inot), c2 = options.initial[1] ^ int(inot);
    const auto pose = geometry::core_pose(core, 1.0 + delta * c1, 1.0 + delta * c2);
    const int core_out = c1 & c2;

    const Vec3 X = Vec3::UnitX(), Z = Vec3::UnitZ();
    const double sb = core.half_base();
    const Vec3 a(-sb, 0, 0), b(sb, 0, 0), c(pose.cx, pose.cy, 0), d(0, pose.dy, 0), bottom = Vec3::Zero();

    Sketch sk;
    sk.body("ab", X, Z);
    sk.body("cd", d - c, Z);

    // Input levers hang off the core inputs ac and bc, input ends outward.
    struct Arms {
        std::string up, down;
        LeverPose pose;
        std::string anchor_arm, c_arm;
    };
    auto input_lever = [&](int i, const Vec3& anchor, const Vec3& toward) {
        Arms arms;
        const std::string tag = "in" + std::to_string(i);
        arms.up = tag + ".u";
        arms.down = tag + ".d";
        const Vec3 v = (c - anchor).normalized();
        Vec3 u = Z.cross(v);
        if (u.dot(toward - anchor) < 0) u = -u;
        arms.pose = detail::pose_from_output(in_lever, options.initial[i - 1], anchor, c, u);
        const auto& p = arms.pose;
        sk.body(arms.up, (in_crossed ? p.out_minus : p.out_plus) - p.in_plus, Z);
        sk.body(arms.down, (in_crossed ? p.out_plus : p.out_minus) - p.in_minus, Z);
        sk.stack_arms(arms.up, arms.down, p.apex, Z);
        arms.anchor_arm = in_crossed ? arms.up : arms.down;
        arms.c_arm = in_crossed ? arms.down : arms.up;
        return arms;
    };
    const Arms l1 = input_lever(1, a, b);
    const Arms l2 = input_lever(2, b, a);

    // Output lever stands on ab and d, in the plane normal to ab.
    const auto p3 = detail::pose_from_input(out_lever, core_out, bottom, d, Z);
    sk.body("out.u", (out_crossed ? p3.out_minus : p3.out_plus) - p3.in_plus, X);
    sk.body("out.d", (out_crossed ? p3.out_plus : p3.out_minus) - p3.in_minus, X);
    sk.stack_arms("out.u", "out.d", p3.apex, X);
    const std::string out_plus_arm = out_crossed ? "out.d" : "out.u";
    const std::string out_minus_arm = out_crossed ? "out.u" : "out.d";

    sk.hinge("a", l1.anchor_arm, "ab", a, Z, tol);
    sk.hinge("b", l2.anchor_arm, "ab", b, Z, tol);
    // Both input levers hinge on cd at c, each with its own bond pair.
    const Vec3 zo = Z * kHalfWidth;
    sk.joint("c", JointKind::Hinge,
             {{{"cd", c + zo}, {l1.c_arm, c + zo}},
              {{"cd", c - zo}, {l1.c_arm, c - zo}},
              {{"cd", c + zo}, {l2.c_arm, c + zo}},
              {{"cd", c - zo}, {l2.c_arm, c - zo}}},
             tol);
    sk.hinge("p1", l1.up, l1.down, l1.pose.apex, Z, tol);
    sk.hinge("p2", l2.up, l2.down, l2.pose.apex, Z, tol);
    sk.hinge("p3", "out.u", "out.d", p3.apex, X, tol);
    sk.hinge("bottom", "out.d", "ab", bottom, X, tol);
    sk.universal("d", "out.u", "cd", d, tol);

    const double act = muscle_mode == MuscleMode::Expand ? 1.5 : 0.5;
    for (const Arms* l : {&l1, &l2}) {
        const std::string port = l == &l1 ? "in1" : "in2";
        const std::string muscle = l == &l1 ? "m1" : "m2";
        sk.muscle(muscle, {l->up, l->pose.in_plus}, {l->down, l->pose.in_minus}, 1.0, act, muscle_mode, port);
        sk.probe(port, {l->up, l->pose.in_plus}, {l->down, l->pose.in_minus}, 1.0, sm, ProbeRole::GateInput);
        sk.port(port, port, PortDirection::Input, muscle);
    }
    sk.probe("out", {out_plus_arm, p3.out_plus}, {out_minus_arm, p3.out_minus}, 1.0, so, ProbeRole::GateOutput);
    sk.probe("core", {"ab", bottom}, {"cd", d}, h, core.delta_out_frac, ProbeRole::CoreOutput);
    sk.port("out", "out", PortDirection::Output);
    return sk.finish();
}

}  // namespace mlc::model
