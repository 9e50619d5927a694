#include "mlc/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include "mlc/errors.hpp"
#include "mlc/format.hpp"

namespace mlc::dynamics {

void SimParams::validate() const {
    if (!(dt > 0) || !(dt < 1)) throw InvalidSpec("dt must satisfy 0 < dt < gamma/k0");
    if (!(kbt >= 0) || !std::isfinite(kbt)) throw InvalidSpec("kbt must be non-negative");
    if (!(eps_wca >= 0) || !(r0 > 0)) throw InvalidSpec("invalid exclusion parameters");
    if (record_every < 1) throw InvalidSpec("record_every must be positive");
}

Waveform Waveform::constant(int state) {
    Waveform w;
    w.kind = WaveKind::Constant;
    w.state = state;
    return w;
}

Waveform Waveform::square(double period, double duty, double phase) {
    Waveform w;
    w.kind = WaveKind::Square;
    w.period = period;
    w.duty = duty;
    w.phase = phase;
    return w;
}

Waveform Waveform::step(std::vector<std::pair<double, int>> steps) {
    Waveform w;
    w.kind = WaveKind::Step;
    w.steps = std::move(steps);
    return w;
}

void Waveform::validate() const {
    auto bit = [](int s) { return s == 0 || s == 1; };
    switch (kind) {
        case WaveKind::Constant:
            if (!bit(state)) throw InvalidSpec("constant state must be 0 or 1");
            break;
        case WaveKind::Square:
            if (!(period > 0) || !std::isfinite(period)) throw InvalidSpec("square period must be positive");
            if (!(duty > 0 && duty < 1)) throw InvalidSpec("square duty must lie in (0, 1)");
            if (!std::isfinite(phase)) throw InvalidSpec("square phase must be finite");
            break;
        case WaveKind::Step:
            if (steps.empty()) throw InvalidSpec("step waveform needs at least one step");
            for (std::size_t i = 0; i < steps.size(); ++i) {
                if (!bit(steps[i].second)) throw InvalidSpec("step states must be 0 or 1");
                if (!std::isfinite(steps[i].first)) throw InvalidSpec("step times must be finite");
                if (i > 0 && !(steps[i].first > steps[i - 1].first))
                    throw InvalidSpec("step times must be strictly increasing");
            }
            break;
    }
}

int Waveform::value_at(double t) const {
    switch (kind) {
        case WaveKind::Constant: return state;
        case WaveKind::Square: {
            double x = std::fmod(t / period - phase, 1.0);
            if (x < 0) x += 1.0;
            return x < duty ? 1 : 0;
        }
        case WaveKind::Step: {
            int s = 0;
            for (const auto& [time, v] : steps) {
                if (t >= time) s = v;
                else break;
            }
            return s;
        }
    }
    return 0;
}

int ActuationSchedule::state(const std::string& channel, double t) const {
    auto it = channels.find(channel);
    return it == channels.end() ? 0 : it->second.value_at(t);
}

void ActuationSchedule::validate() const {
    for (const auto& [c, w] : channels) w.validate();
}

BodyState initial_state(const model::Assembly& a) {
    BodyState x;
    for (const auto& s : a.slabs) {
        x.position.push_back(s.position);
        x.orientation.push_back(s.orientation);
    }
    return x;
}

// ---------------------------------------------------------------------------

std::uint64_t body_key(const std::string& id) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : id) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double uniform(std::uint64_t seed, std::uint64_t key, std::uint64_t counter) {
    const std::uint64_t bits = splitmix(splitmix(seed ^ splitmix(key)) + counter);
    return ((bits >> 11) + 0.5) * 0x1.0p-53;  // open interval (0, 1)
}

// Three standard normals from two Box-Muller pairs.
std::array<double, 3> normals(std::uint64_t seed, std::uint64_t key, std::uint64_t step) {
    const std::uint64_t base = step * 4;
    const double u1 = uniform(seed, key, base), u2 = uniform(seed, key, base + 1);
    const double u3 = uniform(seed, key, base + 2), u4 = uniform(seed, key, base + 3);
    const double r1 = std::sqrt(-2 * std::log(u1)), r2 = std::sqrt(-2 * std::log(u3));
    const double tau = 2 * std::numbers::pi;
    return {r1 * std::cos(tau * u2), r1 * std::sin(tau * u2), r2 * std::cos(tau * u4)};
}

}  // namespace

double noise(std::uint64_t seed, std::uint64_t key, std::uint64_t step, int axis) {
    return normals(seed, key, step).at(axis);
}

// ---------------------------------------------------------------------------

System::System(const model::Assembly& a) {
    std::map<std::string, std::uint32_t> index;
    for (std::size_t i = 0; i < a.slabs.size(); ++i) {
        index[a.slabs[i].id] = std::uint32_t(i);
        drag_.push_back(a.slabs[i].drag);
        rot_drag_.push_back(a.slabs[i].rot_drag);
        body_key_.push_back(body_key(a.slabs[i].id));
    }
    for (const auto& j : a.joints)
        for (const auto& b : j.bonds)
            bonds_.push_back({index.at(b.a.body), index.at(b.b.body), b.a.local, b.b.local, j.stiffness, j.tolerance,
                              -1});
    std::set<std::string> channels;
    for (const auto& m : a.muscles) {
        bonds_.push_back({index.at(m.a.body), index.at(m.b.body), m.a.local, m.b.local, m.stiffness, 0.0,
                          int(muscle_rest_.size())});
        muscle_channel_.push_back(m.channel);
        muscle_rest_.push_back(m.rest_length);
        muscle_act_.push_back(m.actuated_length);
        channels.insert(m.channel);
    }
    channels_.assign(channels.begin(), channels.end());
    for (const auto& p : a.probes) {
        probes_.push_back({index.at(p.a.body), index.at(p.b.body), p.a.local, p.b.local});
        probe_ids_.push_back(p.id);
    }
}

std::vector<double> System::muscle_targets(const ActuationSchedule& s, double t) const {
    std::vector<double> out(muscle_rest_.size());
    std::map<std::string, int> cache;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto it = cache.find(muscle_channel_[i]);
        if (it == cache.end()) it = cache.emplace(muscle_channel_[i], s.state(muscle_channel_[i], t)).first;
        out[i] = it->second ? muscle_act_[i] : muscle_rest_[i];
    }
    return out;
}

namespace {

struct Frames {
    std::vector<Eigen::Matrix3d> R;
};

Frames frames_of(const BodyState& x) {
    Frames f;
    f.R.reserve(x.orientation.size());
    for (const auto& q : x.orientation) f.R.push_back(q.toRotationMatrix());
    return f;
}

}  // namespace

Forces System::forces(const BodyState& x, const std::vector<double>& muscle_eq, const SimParams& p) const {
    const std::size_t n = body_count();
    Forces f{std::vector<Vec3>(n, Vec3::Zero()), std::vector<Vec3>(n, Vec3::Zero())};
    const Frames fr = frames_of(x);
    for (const auto& b : bonds_) {
        const Vec3 ra = fr.R[b.a] * b.la, rb = fr.R[b.b] * b.lb;
        const Vec3 d = (x.position[b.a] + ra) - (x.position[b.b] + rb);
        Vec3 F;  // force on the `a` end
        if (b.muscle >= 0) {
            const double r = d.norm();
            if (r == 0) continue;
            F = -b.k * (r - muscle_eq[b.muscle]) / r * d;
        } else if (b.slack > 0) {
            const double r = d.norm();
            if (r <= b.slack) continue;
            F = -b.k * (r - b.slack) / r * d;
        } else {
            F = -b.k * d;
        }
        f.force[b.a] += F;
        f.force[b.b] -= F;
        f.torque[b.a] += ra.cross(F);
        f.torque[b.b] -= rb.cross(F);
    }
    if (p.eps_wca > 0) {
        const double sig = 2 * p.r0;
        const double cut2 = std::pow(2.0, 1.0 / 3.0) * sig * sig;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const Vec3 d = x.position[i] - x.position[j];
                const double r2 = d.squaredNorm();
                if (r2 >= cut2) continue;
                const double s2 = sig * sig / r2, s6 = s2 * s2 * s2;
                // -dU/dr / r
                const double coef = 24 * p.eps_wca * (2 * s6 * s6 - s6) / r2;
                f.force[i] += coef * d;
                f.force[j] -= coef * d;
            }
    }
    return f;
}

double System::energy(const BodyState& x, const std::vector<double>& muscle_eq, const SimParams& p) const {
    const Frames fr = frames_of(x);
    double e = 0;
    for (const auto& b : bonds_) {
        const Vec3 d = (x.position[b.a] + fr.R[b.a] * b.la) - (x.position[b.b] + fr.R[b.b] * b.lb);
        double ext;
        if (b.muscle >= 0) ext = d.norm() - muscle_eq[b.muscle];
        else if (b.slack > 0) ext = std::max(0.0, d.norm() - b.slack);
        else ext = d.norm();
        e += 0.5 * b.k * ext * ext;
    }
    if (p.eps_wca > 0) {
        const double sig = 2 * p.r0;
        const double cut = std::pow(2.0, 1.0 / 6.0) * sig;
        for (std::size_t i = 0; i < body_count(); ++i)
            for (std::size_t j = i + 1; j < body_count(); ++j) {
                const double r = (x.position[i] - x.position[j]).norm();
                if (r >= cut) continue;
                const double s6 = std::pow(sig / r, 6);
                e += 4 * p.eps_wca * (s6 * s6 - s6) + p.eps_wca;
            }
    }
    return e;
}

std::vector<double> System::probe_lengths(const BodyState& x) const {
    std::vector<double> out;
    out.reserve(probes_.size());
    for (const auto& pr : probes_) {
        const Vec3 pa = x.position[pr.a] + x.orientation[pr.a] * pr.la;
        const Vec3 pb = x.position[pr.b] + x.orientation[pr.b] * pr.lb;
        out.push_back((pa - pb).norm());
    }
    return out;
}

BodyState System::step(const BodyState& x, const SimParams& p, const ActuationSchedule& s, double t,
                       std::uint64_t index) const {
    const auto f = forces(x, muscle_targets(s, t), p);
    BodyState y = x;
    for (std::size_t i = 0; i < body_count(); ++i) {
        Vec3 dx = p.dt / drag_[i] * f.force[i];
        if (p.kbt > 0) {
            const double amp = std::sqrt(2 * p.kbt * p.dt / drag_[i]);
            const auto eta = normals(p.seed, body_key_[i], index);
            dx += amp * Vec3(eta[0], eta[1], eta[2]);
        }
        y.position[i] += dx;
        const Vec3 rot = p.dt / rot_drag_[i] * f.torque[i];
        const double angle = rot.norm();
        if (angle > 0) y.orientation[i] = Quat(Eigen::AngleAxisd(angle, rot / angle)) * y.orientation[i];
        y.orientation[i].normalize();
        if (!y.position[i].allFinite() || !y.orientation[i].coeffs().allFinite())
            throw NumericalBlowup("non-finite body state at step " + std::to_string(index));
    }
    return y;
}

// ---------------------------------------------------------------------------

std::size_t Trajectory::probe_column(const std::string& id) const {
    for (std::size_t i = 0; i < probe_ids.size(); ++i)
        if (probe_ids[i] == id) return i;
    throw InvalidSpec("trajectory has no probe '" + id + "'");
}

std::size_t Trajectory::channel_column(const std::string& channel) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
        if (channels[i] == channel) return i;
    throw InvalidSpec("trajectory has no channel '" + channel + "'");
}

std::string Trajectory::to_csv() const {
    std::string out = "t";
    for (const auto& p : probe_ids) out += "," + p;
    for (const auto& c : channels) out += "," + c + "_ideal";
    out += "\n";
    for (std::size_t r = 0; r < times.size(); ++r) {
        out += format_number(times[r]);
        for (double v : probe_lengths[r]) out += "," + format_number(v);
        for (int v : schedule_trace[r]) out += "," + std::to_string(v);
        out += "\n";
    }
    return out;
}

std::string Trajectory::to_jsonl() const {
    std::string out;
    for (std::size_t r = 0; r < times.size(); ++r) {
        nlohmann::json line;
        line["t"] = times[r];
        nlohmann::json probes = nlohmann::json::object();
        for (std::size_t i = 0; i < probe_ids.size(); ++i) probes[probe_ids[i]] = probe_lengths[r][i];
        line["probes"] = probes;
        if (body_states) {
            nlohmann::json bodies = nlohmann::json::array();
            const auto& st = (*body_states)[r];
            for (std::size_t i = 0; i < body_ids.size(); ++i) {
                const auto& q = st.orientation[i];
                const auto& x = st.position[i];
                bodies.push_back({{"id", body_ids[i]},
                                  {"position", {x.x(), x.y(), x.z()}},
                                  {"orientation", {q.w(), q.x(), q.y(), q.z()}}});
            }
            line["bodies"] = bodies;
        }
        out += line.dump() + "\n";
    }
    return out;
}

Forces compute_forces(const model::Assembly& a, const BodyState& x, const SimParams& p, const ActuationSchedule& s,
                      double t) {
    const System sys(a);
    return sys.forces(x, sys.muscle_targets(s, t), p);
}

BodyState step(const model::Assembly& a, const BodyState& x, const SimParams& p, const ActuationSchedule& s,
               double t, std::uint64_t index) {
    p.validate();
    return System(a).step(x, p, s, t, index);
}

Trajectory run(const model::Assembly& a, const SimParams& p, const ActuationSchedule& s, double duration,
               const RunOptions& options) {
    p.validate();
    s.validate();
    if (!(duration > 0) || !std::isfinite(duration)) throw InvalidSpec("duration must be positive");
    const System sys(a);
    BodyState x = options.start ? *options.start : initial_state(a);
    if (x.position.size() != sys.body_count()) throw InvalidSpec("start state does not match the assembly");

    Trajectory traj;
    traj.probe_ids = sys.probe_ids();
    traj.channels = sys.channels();
    for (const auto& sl : a.slabs) traj.body_ids.push_back(sl.id);
    if (options.record_bodies) traj.body_states.emplace();
    auto record = [&](std::uint64_t n) {
        const double t = double(n) * p.dt / kT0;
        traj.times.push_back(t);
        traj.probe_lengths.push_back(sys.probe_lengths(x));
        std::vector<int> trace;
        for (const auto& c : traj.channels) trace.push_back(s.state(c, t));
        traj.schedule_trace.push_back(std::move(trace));
        if (traj.body_states) traj.body_states->push_back(x);
    };

    const auto steps = std::uint64_t(std::llround(duration * kT0 / p.dt));
    record(0);
    for (std::uint64_t n = 0; n < steps; ++n) {
        x = sys.step(x, p, s, double(n) * p.dt / kT0, n);
        if ((n + 1) % std::uint64_t(p.record_every) == 0) record(n + 1);
    }
    return traj;
}

}  // namespace mlc::dynamics
