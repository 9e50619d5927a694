#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <set>

#include "mlc/errors.hpp"
#include "mlc/model.hpp"

namespace mlc::model {

namespace {

constexpr double kAttachSlack = 1e-9;

template <class T, class F>
void check_unique(const std::vector<T>& items, F key, const char* what) {
    std::set<std::string> seen;
    for (const auto& it : items)
        if (!seen.insert(key(it)).second) throw DuplicateId(std::string(what) + " '" + key(it) + "' is not unique");
}

}  // namespace

void Assembly::validate() const {
    check_unique(slabs, [](const RigidSlab& s) { return s.id; }, "slab");
    check_unique(joints, [](const Joint& j) { return j.id; }, "joint");
    check_unique(muscles, [](const Muscle& m) { return m.id; }, "muscle");
    check_unique(probes, [](const Probe& p) { return p.id; }, "probe");
    check_unique(ports, [](const Port& p) { return p.name; }, "port");

    std::map<std::string, const RigidSlab*> by_id;
    for (const auto& s : slabs) {
        if (!(s.half_extents.array() > 0).all()) throw InvalidSpec("slab '" + s.id + "' has non-positive extents");
        if (std::abs(s.orientation.norm() - 1) > 1e-9) throw InvalidSpec("slab '" + s.id + "' orientation not unit");
        if (!(s.drag > 0 && s.rot_drag > 0)) throw InvalidSpec("slab '" + s.id + "' drag must be positive");
        by_id[s.id] = &s;
    }
    auto check_point = [&](const AttachmentPoint& p, const std::string& owner) {
        auto it = by_id.find(p.body);
        if (it == by_id.end()) throw InvalidSpec(owner + " refers to unknown slab '" + p.body + "'");
        if (!((p.local.cwiseAbs() - it->second->half_extents).array() <= kAttachSlack).all())
            throw InvalidSpec(owner + " attaches outside slab '" + p.body + "'");
    };
    for (const auto& j : joints) {
        // A hinge holds one bond pair per hinged body beyond the first.
        const std::size_t n = j.bonds.size();
        const bool ok = j.is_hinge() ? (n == 2 || n == 4) : n == 1;
        if (!ok) throw InvalidSpec("joint '" + j.id + "' has the wrong number of bonds");
        const bool tol_kind = j.kind == JointKind::ToleranceHinge || j.kind == JointKind::ToleranceUniversal;
        if (!(j.tolerance >= 0) || (!tol_kind && j.tolerance != 0))
            throw InvalidSpec("joint '" + j.id + "' has an invalid tolerance");
        if (!(j.stiffness > 0)) throw InvalidSpec("joint '" + j.id + "' stiffness must be positive");
        for (const auto& b : j.bonds) {
            check_point(b.a, "joint '" + j.id + "'");
            check_point(b.b, "joint '" + j.id + "'");
        }
    }
    for (const auto& m : muscles) {
        check_point(m.a, "muscle '" + m.id + "'");
        check_point(m.b, "muscle '" + m.id + "'");
        const double want = m.rest_length * (m.mode == MuscleMode::Expand ? 1.5 : 0.5);
        if (!(m.rest_length > 0) || std::abs(m.actuated_length - want) > 1e-12)
            throw InvalidSpec("muscle '" + m.id + "' actuated length disagrees with its mode");
        if (m.channel.empty()) throw InvalidSpec("muscle '" + m.id + "' has no channel");
    }
    for (const auto& p : probes) {
        check_point(p.a, "probe '" + p.id + "'");
        check_point(p.b, "probe '" + p.id + "'");
        if (p.signal == 0 || !(std::abs(p.signal) <= p.rest_length))
            throw InvalidSpec("probe '" + p.id + "' has an invalid signal");
    }
    for (const auto& port : ports) {
        if (!std::any_of(probes.begin(), probes.end(), [&](const Probe& p) { return p.id == port.probe; }))
            throw InvalidSpec("port '" + port.name + "' refers to unknown probe '" + port.probe + "'");
        if (!port.muscle.empty() &&
            !std::any_of(muscles.begin(), muscles.end(), [&](const Muscle& m) { return m.id == port.muscle; }))
            throw InvalidSpec("port '" + port.name + "' refers to unknown muscle '" + port.muscle + "'");
    }
}

const RigidSlab& Assembly::slab(const std::string& id) const { return slabs.at(slab_index(id)); }

std::size_t Assembly::slab_index(const std::string& id) const {
    for (std::size_t i = 0; i < slabs.size(); ++i)
        if (slabs[i].id == id) return i;
    throw InvalidSpec("unknown slab '" + id + "'");
}

const Probe& Assembly::probe(const std::string& id) const {
    for (const auto& p : probes)
        if (p.id == id) return p;
    throw InvalidSpec("unknown probe '" + id + "'");
}

const Port* Assembly::find_port(const std::string& name) const {
    for (const auto& p : ports)
        if (p.name == name) return &p;
    return nullptr;
}

const Port& Assembly::port(const std::string& name) const {
    if (const Port* p = find_port(name)) return *p;
    throw UnknownPort("no port named '" + name + "'");
}

Vec3 Assembly::world(const AttachmentPoint& p) const { return slab(p.body).to_world(p.local); }

double Assembly::probe_length(const Probe& p) const { return (world(p.a) - world(p.b)).norm(); }

std::vector<std::string> Assembly::channels() const {
    std::set<std::string> s;
    for (const auto& m : muscles) s.insert(m.channel);
    return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------

std::string to_string(JointKind k) {
    switch (k) {
        case JointKind::Hinge: return "hinge";
        case JointKind::Universal: return "universal";
        case JointKind::ToleranceHinge: return "tolerance_hinge";
        case JointKind::ToleranceUniversal: return "tolerance_universal";
    }
    return "";
}

std::string to_string(MuscleMode m) { return m == MuscleMode::Expand ? "expand" : "contract"; }

std::string to_string(ProbeRole r) {
    switch (r) {
        case ProbeRole::GateInput: return "gate_input";
        case ProbeRole::GateOutput: return "gate_output";
        case ProbeRole::CoreOutput: return "core_output";
        case ProbeRole::ConnectorStage: return "connector_stage";
        case ProbeRole::SkeletonDof: return "skeleton_dof";
    }
    return "";
}

std::string to_string(PortDirection d) { return d == PortDirection::Input ? "input" : "output"; }

JointKind joint_kind_from_string(const std::string& s) {
    for (auto k : {JointKind::Hinge, JointKind::Universal, JointKind::ToleranceHinge, JointKind::ToleranceUniversal})
        if (to_string(k) == s) return k;
    throw InvalidSpec("unknown joint kind '" + s + "'");
}

MuscleMode muscle_mode_from_string(const std::string& s) {
    if (s == "expand") return MuscleMode::Expand;
    if (s == "contract") return MuscleMode::Contract;
    throw InvalidSpec("unknown muscle mode '" + s + "'");
}

ProbeRole probe_role_from_string(const std::string& s) {
    for (auto r : {ProbeRole::GateInput, ProbeRole::GateOutput, ProbeRole::CoreOutput, ProbeRole::ConnectorStage,
                   ProbeRole::SkeletonDof})
        if (to_string(r) == s) return r;
    throw InvalidSpec("unknown probe role '" + s + "'");
}

PortDirection port_direction_from_string(const std::string& s) {
    if (s == "input") return PortDirection::Input;
    if (s == "output") return PortDirection::Output;
    throw InvalidSpec("unknown port direction '" + s + "'");
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
json point(const AttachmentPoint& p) { return {{"body", p.body}, {"local", vec(p.local)}}; }
AttachmentPoint point(const json& j) { return {j.at("body").get<std::string>(), vec(j.at("local"))}; }

}  // namespace

nlohmann::json to_json(const Assembly& a) {
    json slabs = json::array(), joints = json::array(), muscles = json::array(), probes = json::array(),
         ports = json::array();
    for (const auto& s : a.slabs) {
        const auto& q = s.orientation;
        slabs.push_back({{"id", s.id},
                         {"half_extents", vec(s.half_extents)},
                         {"position", vec(s.position)},
                         {"orientation", json::array({q.w(), q.x(), q.y(), q.z()})},
                         {"drag", s.drag},
                         {"rot_drag", s.rot_drag}});
    }
    for (const auto& j : a.joints) {
        json bonds = json::array();
        for (const auto& b : j.bonds) bonds.push_back({{"a", point(b.a)}, {"b", point(b.b)}});
        joints.push_back({{"id", j.id},
                          {"kind", to_string(j.kind)},
                          {"stiffness", j.stiffness},
                          {"tolerance", j.tolerance},
                          {"bonds", bonds}});
    }
    for (const auto& m : a.muscles)
        muscles.push_back({{"id", m.id},
                           {"a", point(m.a)},
                           {"b", point(m.b)},
                           {"stiffness", m.stiffness},
                           {"rest_length", m.rest_length},
                           {"actuated_length", m.actuated_length},
                           {"mode", to_string(m.mode)},
                           {"channel", m.channel}});
    for (const auto& p : a.probes)
        probes.push_back({{"id", p.id},
                          {"a", point(p.a)},
                          {"b", point(p.b)},
                          {"rest_length", p.rest_length},
                          {"signal", p.signal},
                          {"role", to_string(p.role)}});
    for (const auto& p : a.ports)
        ports.push_back(
            {{"name", p.name}, {"probe", p.probe}, {"direction", to_string(p.direction)}, {"muscle", p.muscle}});
    return {{"slabs", slabs}, {"joints", joints}, {"muscles", muscles}, {"probes", probes}, {"ports", ports}};
}

Assembly assembly_from_json(const nlohmann::json& j) {
    Assembly a;
    try {
        for (const auto& s : j.at("slabs")) {
            RigidSlab slab;
            slab.id = s.at("id").get<std::string>();
            slab.half_extents = vec(s.at("half_extents"));
            slab.position = vec(s.at("position"));
            const auto& q = s.at("orientation");
            slab.orientation = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                    q.at(3).get<double>());
            slab.drag = s.value("drag", 1.0);
            slab.rot_drag = s.value("rot_drag", slab.drag);
            a.slabs.push_back(slab);
        }
        for (const auto& s : j.at("joints")) {
            Joint joint;
            joint.id = s.at("id").get<std::string>();
            joint.kind = joint_kind_from_string(s.at("kind").get<std::string>());
            joint.stiffness = s.value("stiffness", 1.0);
            joint.tolerance = s.value("tolerance", 0.0);
            for (const auto& b : s.at("bonds")) joint.bonds.push_back({point(b.at("a")), point(b.at("b"))});
            a.joints.push_back(std::move(joint));
        }
        for (const auto& s : j.at("muscles")) {
            Muscle m;
            m.id = s.at("id").get<std::string>();
            m.a = point(s.at("a"));
            m.b = point(s.at("b"));
            m.stiffness = s.value("stiffness", 1.0);
            m.rest_length = s.at("rest_length").get<double>();
            m.actuated_length = s.at("actuated_length").get<double>();
            m.mode = muscle_mode_from_string(s.at("mode").get<std::string>());
            m.channel = s.at("channel").get<std::string>();
            a.muscles.push_back(std::move(m));
        }
        for (const auto& s : j.at("probes")) {
            Probe p;
            p.id = s.at("id").get<std::string>();
            p.a = point(s.at("a"));
            p.b = point(s.at("b"));
            p.rest_length = s.at("rest_length").get<double>();
            p.signal = s.at("signal").get<double>();
            p.role = probe_role_from_string(s.at("role").get<std::string>());
            a.probes.push_back(std::move(p));
        }
        for (const auto& s : j.at("ports"))
            a.ports.push_back({s.at("name").get<std::string>(), s.at("probe").get<std::string>(),
                               port_direction_from_string(s.at("direction").get<std::string>()),
                               s.value("muscle", std::string())});
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed scene: ") + e.what());
    }
    a.validate();
    return a;
}

Assembly namespaced(const Assembly& a, const std::string& prefix) {
    const std::string pre = prefix + ".";
    Assembly out = a;
    auto fix = [&](AttachmentPoint& p) { p.body = pre + p.body; };
    for (auto& s : out.slabs) s.id = pre + s.id;
    for (auto& j : out.joints) {
        j.id = pre + j.id;
        for (auto& b : j.bonds) {
            fix(b.a);
            fix(b.b);
        }
    }
    for (auto& m : out.muscles) {
        m.id = pre + m.id;
        m.channel = pre + m.channel;
        fix(m.a);
        fix(m.b);
    }
    for (auto& p : out.probes) {
        p.id = pre + p.id;
        fix(p.a);
        fix(p.b);
    }
    for (auto& p : out.ports) {
        p.name = pre + p.name;
        p.probe = pre + p.probe;
        if (!p.muscle.empty()) p.muscle = pre + p.muscle;
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Placement {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Vec3 t = Vec3::Zero();
};

constexpr int kRollSteps = 36;

Assembly transformed(const Assembly& a, const Placement& pl) {
    Assembly out = a;
    const Quat q(pl.R);
    for (auto& s : out.slabs) {
        s.position = pl.R * s.position + pl.t;
        s.orientation = (q * s.orientation).normalized();
    }
    return out;
}

}  // namespace

Assembly compose(const std::vector<Assembly>& parts, const std::vector<Wire>& wires, double tolerance) {
    if (!(tolerance >= 0)) throw InvalidSpec("tolerance must be non-negative");
    std::map<std::string, std::size_t> owner;
    for (std::size_t i = 0; i < parts.size(); ++i)
        for (const auto& p : parts[i].ports)
            if (!owner.emplace(p.name, i).second) throw DuplicateId("port '" + p.name + "' is not unique");

    struct Link {
        std::size_t from_part, to_part;
        const Port* from;
        const Port* to;
    };
    std::vector<Link> links;
    std::set<std::string> used;
    for (const auto& w : wires) {
        auto fi = owner.find(w.from), ti = owner.find(w.to);
        if (fi == owner.end()) throw UnknownPort("no port named '" + w.from + "'");
        if (ti == owner.end()) throw UnknownPort("no port named '" + w.to + "'");
        if (!used.insert(w.from).second) throw DoubleWire("port '" + w.from + "' is wired twice");
        if (!used.insert(w.to).second) throw DoubleWire("port '" + w.to + "' is wired twice");
        const Port& from = parts[fi->second].port(w.from);
        const Port& to = parts[ti->second].port(w.to);
        if (from.direction != PortDirection::Output || to.direction != PortDirection::Input)
            throw PortMismatch("wire " + w.from + " -> " + w.to + " must join an output to an input");
        const Probe& pf = parts[fi->second].probe(from.probe);
        const Probe& pt = parts[ti->second].probe(to.probe);
        if (std::abs(pf.rest_length - pt.rest_length) > 1e-9 || std::abs(pf.signal - pt.signal) > 1e-9)
            throw PortMismatch("wire " + w.from + " -> " + w.to + " joins ports of different rest length or signal");
        links.push_back({fi->second, ti->second, &from, &to});
    }

    // Place parts breadth-first over the wire graph, rooted at the largest part
    // of each connected component.
    std::vector<std::optional<Assembly>> placed(parts.size());
    std::vector<Vec3> centers;
    auto commit = [&](std::size_t i, const Placement& pl) {
        placed[i] = transformed(parts[i], pl);
        for (const auto& s : placed[i]->slabs) centers.push_back(s.position);
    };
    std::vector<std::size_t> order(parts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return parts[a].slabs.size() > parts[b].slabs.size(); });
    for (std::size_t root : order) {
        if (placed[root]) continue;
        Placement shift;
        if (!centers.empty()) {
            double max_x = -1e300, min_x = 1e300;
            for (const auto& c : centers) max_x = std::max(max_x, c.x());
            for (const auto& s : parts[root].slabs) min_x = std::min(min_x, s.position.x());
            shift.t = Vec3(max_x - min_x + 4.0, 0, 0);
        }
        commit(root, shift);
        std::deque<std::size_t> queue{root};
        while (!queue.empty()) {
            const std::size_t cur = queue.front();
            queue.pop_front();
            for (const auto& l : links) {
                std::size_t other;
                const Probe *fixed_probe, *moving_probe;
                if (l.from_part == cur && !placed[l.to_part]) {
                    other = l.to_part;
                    fixed_probe = &placed[cur]->probe(l.from->probe);
                    moving_probe = &parts[other].probe(l.to->probe);
                } else if (l.to_part == cur && !placed[l.from_part]) {
                    other = l.from_part;
                    fixed_probe = &placed[cur]->probe(l.to->probe);
                    moving_probe = &parts[other].probe(l.from->probe);
                } else {
                    continue;
                }
                const Vec3 P1 = placed[cur]->world(fixed_probe->a), P2 = placed[cur]->world(fixed_probe->b);
                const Vec3 Q1 = parts[other].world(moving_probe->a), Q2 = parts[other].world(moving_probe->b);
                if (std::abs((P2 - P1).norm() - (Q2 - Q1).norm()) > 1e-9)
                    throw PortMismatch("wired probes are built in different states");
                const Eigen::Matrix3d R0 = Quat::FromTwoVectors(Q2 - Q1, P2 - P1).toRotationMatrix();
                const Vec3 axis = (P2 - P1).normalized();
                Placement best;
                double best_score = -1;
                for (int k = 0; k < kRollSteps; ++k) {
                    Placement pl;
                    pl.R = Eigen::AngleAxisd(2 * std::numbers::pi * k / kRollSteps, axis).toRotationMatrix() * R0;
                    pl.t = P1 - pl.R * Q1;
                    double score = 1e300;
                    for (const auto& s : parts[other].slabs) {
                        const Vec3 c = pl.R * s.position + pl.t;
                        for (const auto& o : centers) score = std::min(score, (c - o).norm());
                    }
                    if (score > best_score + 1e-12) {
                        best_score = score;
                        best = pl;
                    }
                }
                commit(other, best);
                queue.push_back(other);
            }
        }
    }

    Assembly out;
    for (const auto& p : placed) {
        out.slabs.insert(out.slabs.end(), p->slabs.begin(), p->slabs.end());
        out.joints.insert(out.joints.end(), p->joints.begin(), p->joints.end());
        out.muscles.insert(out.muscles.end(), p->muscles.begin(), p->muscles.end());
        out.probes.insert(out.probes.end(), p->probes.begin(), p->probes.end());
        out.ports.insert(out.ports.end(), p->ports.begin(), p->ports.end());
    }
    const JointKind kind = tolerance > 0 ? JointKind::ToleranceUniversal : JointKind::Universal;
    std::set<std::string> dropped_muscles;
    for (const auto& l : links) {
        const Probe& pf = out.probe(l.from->probe);
        const Probe& pt = out.probe(l.to->probe);
        const std::string base = "fuse." + l.from->name + "->" + l.to->name;
        out.joints.push_back({base + ".1", kind, {{pf.a, pt.a}}, 1.0, tolerance});
        out.joints.push_back({base + ".2", kind, {{pf.b, pt.b}}, 1.0, tolerance});
        if (!l.to->muscle.empty()) dropped_muscles.insert(l.to->muscle);
    }
    std::erase_if(out.muscles, [&](const Muscle& m) { return dropped_muscles.count(m.id) > 0; });
    std::erase_if(out.ports, [&](const Port& p) { return used.count(p.name) > 0; });
    out.validate();
    return out;
}

}  // namespace mlc::model
