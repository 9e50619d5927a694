#pragma once

// Builders describe an assembly in world coordinates; Sketch turns the
// description into slabs with local attachment points.

#include <map>
#include <string>
#include <vector>

#include "mlc/model.hpp"

namespace mlc::model::detail {

struct WorldPoint {
    std::string body;
    Vec3 p;
};

class Sketch {
public:
    /// Declare a body whose local x follows `chord` and local y follows `axis`.
    void body(const std::string& id, const Vec3& chord, const Vec3& axis);

    /// Hinge between two bodies at `p`, bonds at p +- half width along `axis`.
    void hinge(const std::string& id, const std::string& a, const std::string& b, const Vec3& p,
               const Vec3& axis, double tolerance);
    void universal(const std::string& id, const std::string& a, const std::string& b, const Vec3& p,
                   double tolerance);
    void joint(const std::string& id, JointKind kind, std::vector<std::pair<WorldPoint, WorldPoint>> bonds,
               double tolerance);

    void muscle(const std::string& id, WorldPoint a, WorldPoint b, double rest, double actuated,
                MuscleMode mode, const std::string& channel);
    void probe(const std::string& id, WorldPoint a, WorldPoint b, double rest, double signal, ProbeRole role);
    void port(const std::string& name, const std::string& probe, PortDirection dir,
              const std::string& muscle = "");

    /// Extra point a body must enclose without carrying an attachment.
    void enclose(const std::string& body, const Vec3& p);

    /// Put the two arms of a scissor lever in adjacent layers along its axis.
    void stack_arms(const std::string& up, const std::string& down, const Vec3& apex, const Vec3& axis);

    Assembly finish() const;

private:
    struct BodyDraft {
        std::string id;
        Vec3 chord, axis;
        std::vector<Vec3> points;
    };
    struct JointDraft {
        std::string id;
        JointKind kind;
        std::vector<std::pair<WorldPoint, WorldPoint>> bonds;
        double tolerance;
    };
    struct MuscleDraft {
        Muscle m;
        WorldPoint a, b;
    };
    struct ProbeDraft {
        Probe p;
        WorldPoint a, b;
    };

    BodyDraft& draft(const std::string& id);
    void touch(const WorldPoint& w);

    std::vector<BodyDraft> bodies_;
    std::vector<JointDraft> joints_;
    std::vector<MuscleDraft> muscles_;
    std::vector<ProbeDraft> probes_;
    std::vector<Port> ports_;
};

/// Points of a symmetric scissor lever in a given state. `v` is the spread
/// direction and `u` points from the input span toward the output span.
struct LeverPose {
    Vec3 apex;
    Vec3 in_minus, in_plus;
    Vec3 out_minus, out_plus;
};

/// Half spreads of a lever in the given state, with rest/actuated swapped
/// when the lever was solved from its actuated side.
struct LeverPlan {
    geometry::LeverGeometry geo;
    bool swapped = false;

    double theta_in(int state) const;
    double theta_out(int state) const;
};

/// Solve a lever for the given mapping. Falls back to solving from the
/// actuated side when the rest side violates the spec invariants.
LeverPlan plan_lever(double l_in, double dl_in, double l_out, double dl_out, double extent);

/// Pose from the output anchors (input levers).
LeverPose pose_from_output(const LeverPlan& lp, int state, const Vec3& out_minus, const Vec3& out_plus,
                           const Vec3& u);
/// Pose from the input anchors (output levers).
LeverPose pose_from_input(const LeverPlan& lp, int state, const Vec3& in_minus, const Vec3& in_plus,
                          const Vec3& u);

}  // namespace mlc::model::detail
