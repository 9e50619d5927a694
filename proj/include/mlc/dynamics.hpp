#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlc/model.hpp"

namespace mlc::dynamics {

using model::Quat;
using model::Vec3;

/// One t0 in units of gamma/k0.
inline constexpr double kT0 = 1000.0;

struct SimParams {
    double dt = 0.05;  ///< gamma/k0
    double kbt = 1e-5;
    double eps_wca = 1e-4;
    double r0 = 0.1;
    std::uint64_t seed = 0;
    int record_every = 2000;

    void validate() const;
};

enum class WaveKind { Square, Step, Constant };

/// Ideal 0/1 state of a channel over time (t0 units).
struct Waveform {
    WaveKind kind = WaveKind::Constant;
    double period = 1.0;
    double duty = 0.5;
    double phase = 0.0;
    std::vector<std::pair<double, int>> steps;
    int state = 0;

    static Waveform constant(int state);
    static Waveform square(double period, double duty = 0.5, double phase = 0.0);
    static Waveform step(std::vector<std::pair<double, int>> steps);

    void validate() const;
    int value_at(double t) const;
    bool operator==(const Waveform&) const = default;
};

struct ActuationSchedule {
    std::map<std::string, Waveform> channels;

    /// State of a channel; channels without a waveform stay at rest.
    int state(const std::string& channel, double t) const;
    void validate() const;
};

struct BodyState {
    std::vector<Vec3> position;
    std::vector<Quat> orientation;
};

BodyState initial_state(const model::Assembly& a);

struct Forces {
    std::vector<Vec3> force;
    std::vector<Vec3> torque;
};

/// Index-based form of an assembly used by the integrator.
class System {
public:
    explicit System(const model::Assembly& a);

    std::size_t body_count() const { return drag_.size(); }
    const std::vector<std::string>& channels() const { return channels_; }
    const std::vector<std::string>& probe_ids() const { return probe_ids_; }

    /// Muscle equilibrium lengths for the given channel states.
    std::vector<double> muscle_targets(const ActuationSchedule& s, double t) const;

    Forces forces(const BodyState& x, const std::vector<double>& muscle_eq, const SimParams& p) const;
    double energy(const BodyState& x, const std::vector<double>& muscle_eq, const SimParams& p) const;
    std::vector<double> probe_lengths(const BodyState& x) const;

    /// One Euler-Maruyama step; `t` in t0 units, `index` selects the noise.
    BodyState step(const BodyState& x, const SimParams& p, const ActuationSchedule& s, double t,
                   std::uint64_t index) const;

private:
    struct Bond {
        std::uint32_t a, b;
        Vec3 la, lb;
        double k;
        double slack;   ///< tolerance
        int muscle;     ///< index into muscle arrays, -1 for joints
    };
    struct ProbeRef {
        std::uint32_t a, b;
        Vec3 la, lb;
    };

    std::vector<Bond> bonds_;
    std::vector<double> drag_, rot_drag_;
    std::vector<std::uint64_t> body_key_;
    std::vector<std::string> muscle_channel_;
    std::vector<double> muscle_rest_, muscle_act_;
    std::vector<ProbeRef> probes_;
    std::vector<std::string> probe_ids_;
    std::vector<std::string> channels_;
};

struct Trajectory {
    std::vector<double> times;  ///< t0 units
    std::vector<std::string> probe_ids;
    std::vector<std::vector<double>> probe_lengths;  ///< [sample][probe]
    std::vector<std::string> channels;
    std::vector<std::vector<int>> schedule_trace;  ///< [sample][channel]
    std::vector<std::string> body_ids;
    std::optional<std::vector<BodyState>> body_states;

    std::size_t probe_column(const std::string& id) const;
    std::size_t channel_column(const std::string& channel) const;
    std::string to_csv() const;
    std::string to_jsonl() const;
};

Forces compute_forces(const model::Assembly& a, const BodyState& x, const SimParams& p,
                      const ActuationSchedule& s = {}, double t = 0.0);

BodyState step(const model::Assembly& a, const BodyState& x, const SimParams& p, const ActuationSchedule& s,
               double t, std::uint64_t index);

struct RunOptions {
    bool record_bodies = false;
    std::optional<BodyState> start;
};

/// Integrate for `duration` t0 from the built configuration.
Trajectory run(const model::Assembly& a, const SimParams& p, const ActuationSchedule& s, double duration,
               const RunOptions& options = {});

/// Standard normal draw of the counter-based noise stream.
double noise(std::uint64_t seed, std::uint64_t body_key, std::uint64_t step, int axis);

std::uint64_t body_key(const std::string& id);

}  // namespace mlc::dynamics
