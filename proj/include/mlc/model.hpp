#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <json.hpp>

#include "mlc/geometry.hpp"

namespace mlc::model {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Slab width and thickness shared by every body.
inline constexpr double kHalfWidth = 0.25;
inline constexpr double kHalfThickness = 0.005;

struct RigidSlab {
    std::string id;
    Vec3 half_extents = Vec3(0.5, kHalfWidth, kHalfThickness);
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
    double drag = 1.0;
    double rot_drag = 1.0;

    Vec3 to_world(const Vec3& local) const { return position + orientation * local; }
};

struct AttachmentPoint {
    std::string body;
    Vec3 local = Vec3::Zero();
};

enum class JointKind { Hinge, Universal, ToleranceHinge, ToleranceUniversal };

struct Bond {
    AttachmentPoint a, b;
};

/// Hinges carry two bonds along the axis, or four when one body hinges to two others.
struct Joint {
    std::string id;
    JointKind kind = JointKind::Hinge;
    std::vector<Bond> bonds;
    double stiffness = 1.0;
    double tolerance = 0.0;

    bool is_hinge() const { return kind == JointKind::Hinge || kind == JointKind::ToleranceHinge; }
};

enum class MuscleMode { Expand, Contract };

struct Muscle {
    std::string id;
    AttachmentPoint a, b;
    double stiffness = 1.0;
    double rest_length = 1.0;
    double actuated_length = 1.5;
    MuscleMode mode = MuscleMode::Expand;
    std::string channel;
};

enum class ProbeRole { GateInput, GateOutput, CoreOutput, ConnectorStage, SkeletonDof };

struct Probe {
    std::string id;
    AttachmentPoint a, b;
    double rest_length = 1.0;
    double signal = 0.5;
    ProbeRole role = ProbeRole::GateOutput;
};

enum class PortDirection { Input, Output };

struct Port {
    std::string name;
    std::string probe;
    PortDirection direction = PortDirection::Input;
    std::string muscle;  ///< muscle driving this input while it is unwired
};

struct Assembly {
    std::vector<RigidSlab> slabs;
    std::vector<Joint> joints;
    std::vector<Muscle> muscles;
    std::vector<Probe> probes;
    std::vector<Port> ports;

    /// Throws DuplicateId or InvalidSpec when an invariant is violated.
    void validate() const;

    const RigidSlab& slab(const std::string& id) const;
    const Probe& probe(const std::string& id) const;
    const Port& port(const std::string& name) const;
    const Port* find_port(const std::string& name) const;
    std::size_t slab_index(const std::string& id) const;

    Vec3 world(const AttachmentPoint& p) const;
    double probe_length(const Probe& p) const;
    std::vector<std::string> channels() const;
};

std::string to_string(JointKind k);
std::string to_string(MuscleMode m);
std::string to_string(ProbeRole r);
std::string to_string(PortDirection d);
JointKind joint_kind_from_string(const std::string& s);
MuscleMode muscle_mode_from_string(const std::string& s);
ProbeRole probe_role_from_string(const std::string& s);
PortDirection port_direction_from_string(const std::string& s);

nlohmann::json to_json(const Assembly& a);
Assembly assembly_from_json(const nlohmann::json& j);

/// Copy of `a` with every identifier, port name and channel prefixed by
/// `prefix` followed by a dot.
Assembly namespaced(const Assembly& a, const std::string& prefix);

// ---------------------------------------------------------------------------
// Gates

enum class GateKind { AND, OR, NAND, NOR };

std::string to_string(GateKind k);
GateKind gate_kind_from_string(const std::string& s);
bool gate_logic(GateKind k, bool a, bool b);

struct GateOptions {
    std::array<int, 2> initial{0, 0};  ///< muscle states the gate is built in
    double tolerance = 0.0;
    double input_extent = 1.5;
    double output_extent = 2.0;
};

/// Which levers of a gate carry a NOT, and the hinge types that realize them.
struct GatePolarity {
    bool input_not = false;
    bool output_not = false;
    geometry::HingeType input_hinge = geometry::HingeType::Open;
    geometry::HingeType output_hinge = geometry::HingeType::Open;
};

GatePolarity gate_polarity(GateKind kind, MuscleMode muscle_mode, MuscleMode output_mode);

/// Default output polarity of a gate kind when none is given.
MuscleMode default_output_mode(GateKind kind);

Assembly build_gate(GateKind kind, MuscleMode muscle_mode, MuscleMode output_mode,
                    const geometry::CoreGeometry& core, const GateOptions& options = {});

/// Output state of a gate for the given muscle states.
int gate_output_state(GateKind kind, std::array<int, 2> inputs);

// ---------------------------------------------------------------------------
// Connectors, skeletons and adaptors

/// Connector chain. `signal` is the transmitted signal (+0.5 or -0.5);
/// `initial_state` selects the built configuration.
Assembly build_connector(int units, double tolerance, double signal = 0.5, int initial_state = 0);

/// Robot skeleton of `units` units. Each DOF carries a locking muscle on
/// channel "dof<k>" that is removed when the DOF is wired.
Assembly build_skeleton(int units, const std::vector<int>& initial_states = {});

/// Crossed lever adapting a gate output (rest 1, `in_signal`) to a skeleton
/// DOF (rest 2, signal +1).
Assembly build_adaptor(double in_signal, int initial_state = 0, double tolerance = 0.0);

/// Two free slabs joined by a single muscle; the muscle length is exposed as
/// the output port "out".
Assembly build_muscle_fixture(MuscleMode mode, const std::string& channel, int initial_state = 0);

// ---------------------------------------------------------------------------
// Composition

struct Wire {
    std::string from;  ///< output port name
    std::string to;    ///< input port name
};

/// Merge parts (whose identifiers must already be distinct) and fuse each
/// wired output probe onto its input probe with two universal joints.
Assembly compose(const std::vector<Assembly>& parts, const std::vector<Wire>& wires,
                 double tolerance = 0.0);

// ---------------------------------------------------------------------------
// Circuits

struct MuscleDecl {
    std::string id;
    MuscleMode mode = MuscleMode::Contract;
    std::string channel;
    bool operator==(const MuscleDecl&) const = default;
};

struct GateDecl {
    std::string id;
    GateKind kind = GateKind::AND;
    std::optional<MuscleMode> out_mode;
    bool operator==(const GateDecl&) const = default;
};

struct ConnectorDecl {
    std::string id;
    int units = 1;
    double tolerance = 0.0;
    bool operator==(const ConnectorDecl&) const = default;
};

struct SkeletonDecl {
    std::string id;
    int units = 1;
    bool operator==(const SkeletonDecl&) const = default;
};

struct Endpoint {
    std::string instance;
    std::string port;
    bool operator==(const Endpoint&) const = default;
};

struct WireDecl {
    Endpoint from, to;
    bool operator==(const WireDecl&) const = default;
};

/// Instances and wires of a circuit, independent of any text syntax.
struct CircuitPlan {
    std::vector<MuscleDecl> muscles;
    std::vector<GateDecl> gates;
    std::vector<ConnectorDecl> connectors;
    std::vector<SkeletonDecl> skeletons;
    std::vector<WireDecl> wires;
    bool operator==(const CircuitPlan&) const = default;
};

/// Build a circuit at the state reached when every muscle is at rest.
Assembly build_circuit(const CircuitPlan& plan, const geometry::CoreGeometry& core);

enum class TetrisSource { Y, B, YAndB };

std::string to_string(TetrisSource s);

/// DOF-mapping table of the robot: each entry drives one skeleton DOF.
struct TetrisChoice {
    std::vector<std::pair<TetrisSource, int>> dof_map;
    static TetrisChoice default_choice();
};

CircuitPlan tetris_plan(const TetrisChoice& choice);

Assembly build_tetris_robot(const TetrisChoice& choice, const geometry::CoreGeometry& core);

/// DOF states the robot reaches for inputs (y, b), from the mapping table.
std::array<int, 8> tetris_targets(const TetrisChoice& choice, int y, int b);

}  // namespace mlc::model
