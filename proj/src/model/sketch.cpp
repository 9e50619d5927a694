#include "sketch.hpp"

#include <algorithm>
#include <cmath>

#include "mlc/errors.hpp"

namespace mlc::model::detail {

namespace {

constexpr double kMinHalfLength = 0.05;
constexpr double kArmLayer = 0.75;

JointKind with_tolerance(JointKind k, double tol) {
    if (tol <= 0) return k;
    return k == JointKind::Hinge ? JointKind::ToleranceHinge : JointKind::ToleranceUniversal;
}

}  // namespace

void Sketch::body(const std::string& id, const Vec3& chord, const Vec3& axis) {
    for (const auto& b : bodies_)
        if (b.id == id) throw DuplicateId("body '" + id + "' declared twice");
    bodies_.push_back({id, chord, axis, {}});
}

Sketch::BodyDraft& Sketch::draft(const std::string& id) {
    for (auto& b : bodies_)
        if (b.id == id) return b;
    throw InvalidSpec("sketch refers to undeclared body '" + id + "'");
}

void Sketch::touch(const WorldPoint& w) { draft(w.body).points.push_back(w.p); }

void Sketch::enclose(const std::string& body, const Vec3& p) { draft(body).points.push_back(p); }

void Sketch::stack_arms(const std::string& up, const std::string& down, const Vec3& apex, const Vec3& axis) {
    const Vec3 n = axis.normalized();
    enclose(up, apex);
    enclose(down, apex);
    enclose(up, apex + kArmLayer * n);
    enclose(down, apex - kArmLayer * n);
}

void Sketch::hinge(const std::string& id, const std::string& a, const std::string& b, const Vec3& p,
                   const Vec3& axis, double tolerance) {
    const Vec3 off = axis.normalized() * kHalfWidth;
    joint(id, JointKind::Hinge, {{{a, p + off}, {b, p + off}}, {{a, p - off}, {b, p - off}}}, tolerance);
}

void Sketch::universal(const std::string& id, const std::string& a, const std::string& b, const Vec3& p,
                       double tolerance) {
    joint(id, JointKind::Universal, {{{a, p}, {b, p}}}, tolerance);
}

void Sketch::joint(const std::string& id, JointKind kind, std::vector<std::pair<WorldPoint, WorldPoint>> bonds,
                   double tolerance) {
    for (const auto& [x, y] : bonds) {
        touch(x);
        touch(y);
    }
    joints_.push_back({id, with_tolerance(kind, tolerance), std::move(bonds), tolerance});
}

void Sketch::muscle(const std::string& id, WorldPoint a, WorldPoint b, double rest, double actuated,
                    MuscleMode mode, const std::string& channel) {
    touch(a);
    touch(b);
    Muscle m;
    m.id = id;
    m.rest_length = rest;
    m.actuated_length = actuated;
    m.mode = mode;
    m.channel = channel;
    muscles_.push_back({m, std::move(a), std::move(b)});
}

void Sketch::probe(const std::string& id, WorldPoint a, WorldPoint b, double rest, double signal, ProbeRole role) {
    touch(a);
    touch(b);
    Probe p;
    p.id = id;
    p.rest_length = rest;
    p.signal = signal;
    p.role = role;
    probes_.push_back({p, std::move(a), std::move(b)});
}

void Sketch::port(const std::string& name, const std::string& probe, PortDirection dir, const std::string& muscle) {
    ports_.push_back({name, probe, dir, muscle});
}

Assembly Sketch::finish() const {
    Assembly out;
    struct Frame {
        Eigen::Matrix3d R;
        Vec3 center_local;
    };
    std::map<std::string, Frame> frames;
    for (const auto& b : bodies_) {
        const Vec3 ex = b.chord.normalized();
        Vec3 ey = b.axis - b.axis.dot(ex) * ex;
        if (ey.norm() < 1e-9) throw InvalidSpec("body '" + b.id + "' has its chord along its hinge axis");
        ey.normalize();
        Eigen::Matrix3d R;
        R.col(0) = ex;
        R.col(1) = ey;
        R.col(2) = ex.cross(ey);
        Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
        for (const auto& p : b.points) {
            const Vec3 q = R.transpose() * p;
            lo = lo.cwiseMin(q);
            hi = hi.cwiseMax(q);
        }
        if (b.points.empty()) throw InvalidSpec("body '" + b.id + "' carries no attachments");
        const Vec3 center = 0.5 * (lo + hi);
        RigidSlab s;
        s.id = b.id;
        s.half_extents = (0.5 * (hi - lo)).cwiseMax(Vec3(kMinHalfLength, kHalfWidth, kHalfThickness));
        s.position = R * center;
        s.orientation = Quat(R).normalized();
        out.slabs.push_back(s);
        frames[b.id] = {R, center};
    }
    auto attach = [&](const WorldPoint& w) {
        const auto& f = frames.at(w.body);
        return AttachmentPoint{w.body, f.R.transpose() * w.p - f.center_local};
    };
    for (const auto& j : joints_) {
        Joint joint;
        joint.id = j.id;
        joint.kind = j.kind;
        joint.tolerance = j.tolerance;
        for (const auto& [a, b] : j.bonds) joint.bonds.push_back({attach(a), attach(b)});
        out.joints.push_back(std::move(joint));
    }
    for (const auto& m : muscles_) {
        Muscle muscle = m.m;
        muscle.a = attach(m.a);
        muscle.b = attach(m.b);
        out.muscles.push_back(std::move(muscle));
    }
    for (const auto& p : probes_) {
        Probe probe = p.p;
        probe.a = attach(p.a);
        probe.b = attach(p.b);
        out.probes.push_back(std::move(probe));
    }
    out.ports = ports_;
    out.validate();
    return out;
}

double LeverPlan::theta_in(int state) const {
    const int e = swapped ? 1 - state : state;
    return geo.theta1 + e * geo.dtheta;
}

double LeverPlan::theta_out(int state) const {
    const int e = swapped ? 1 - state : state;
    const double sign = geo.spec.hinge == geometry::HingeType::Crossed ? 1.0 : -1.0;
    return geo.theta2 + sign * e * geo.dtheta;
}

LeverPlan plan_lever(double l_in, double dl_in, double l_out, double dl_out, double extent) {
    using geometry::HingeType;
    const HingeType hinge = (dl_in > 0) == (dl_out > 0) ? HingeType::Crossed : HingeType::Open;
    geometry::LeverSpec spec{l_in, l_out, dl_in, dl_out, extent, hinge};
    LeverPlan plan;
    try {
        spec.validate();
    } catch (const InvalidSpec&) {
        spec = {l_in + dl_in, l_out + dl_out, -dl_in, -dl_out, extent, hinge};
        plan.swapped = true;
    }
    try {
        plan.geo = geometry::solve_lever(spec, 1e-12, geometry::LeverConvention::HalfSpan);
    } catch (const NoConvergence& e) {
        throw GeometryInfeasible(std::string("lever has no solution: ") + e.what());
    }
    return plan;
}

namespace {

void check_span(double have, double want) {
    if (std::abs(have - want) > 1e-9)
        throw GeometryInfeasible("lever anchors do not match the lever span");
}

}  // namespace

LeverPose pose_from_output(const LeverPlan& lp, int state, const Vec3& out_minus, const Vec3& out_plus,
                           const Vec3& u) {
    const double t1 = lp.theta_in(state), t2 = lp.theta_out(state);
    const Vec3 v = (out_plus - out_minus).normalized();
    check_span(0.5 * (out_plus - out_minus).norm(), lp.geo.l2 * std::sin(t2));
    LeverPose p;
    p.out_minus = out_minus;
    p.out_plus = out_plus;
    p.apex = 0.5 * (out_minus + out_plus) - lp.geo.l2 * std::cos(t2) * u;
    const Vec3 base = p.apex - lp.geo.l1 * std::cos(t1) * u;
    p.in_minus = base - lp.geo.l1 * std::sin(t1) * v;
    p.in_plus = base + lp.geo.l1 * std::sin(t1) * v;
    return p;
}

LeverPose pose_from_input(const LeverPlan& lp, int state, const Vec3& in_minus, const Vec3& in_plus,
                          const Vec3& u) {
    const double t1 = lp.theta_in(state), t2 = lp.theta_out(state);
    const Vec3 v = (in_plus - in_minus).normalized();
    check_span(0.5 * (in_plus - in_minus).norm(), lp.geo.l1 * std::sin(t1));
    LeverPose p;
    p.in_minus = in_minus;
    p.in_plus = in_plus;
    p.apex = 0.5 * (in_minus + in_plus) + lp.geo.l1 * std::cos(t1) * u;
    const Vec3 base = p.apex + lp.geo.l2 * std::cos(t2) * u;
    p.out_minus = base - lp.geo.l2 * std::sin(t2) * v;
    p.out_plus = base + lp.geo.l2 * std::sin(t2) * v;
    return p;
}

}  // namespace mlc::model::detail
