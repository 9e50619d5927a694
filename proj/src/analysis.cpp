#include "mlc/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "mlc/errors.hpp"
#include "mlc/format.hpp"

namespace mlc::analysis {

StateReading classify_state(double length, const model::Probe& probe) {
    const double threshold = probe.rest_length + probe.signal / 2;
    StateReading r;
    r.probe = probe.id;
    r.length = length;
    r.state = probe.signal > 0 ? (length >= threshold) : (length <= threshold);
    r.margin = std::abs(length - threshold);
    return r;
}

double settled_mean(const dynamics::Trajectory& t, const std::string& probe) {
    const std::size_t col = t.probe_column(probe);
    const std::size_t n = t.times.size();
    const std::size_t tail = std::max<std::size_t>(1, (n + 4) / 5);
    double sum = 0;
    for (std::size_t i = n - tail; i < n; ++i) sum += t.probe_lengths[i][col];
    return sum / double(tail);
}

// ---------------------------------------------------------------------------

unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MLC_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) n = std::min<unsigned>(n, unsigned(cap));
    }
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_at = n;
    std::exception_ptr failure;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

TruthTable truth_table(const model::Assembly& assembly, const std::vector<std::string>& channels, double settle,
                       int trials, const dynamics::SimParams& params, const std::string& output_port) {
    if (trials < 1) throw InvalidSpec("truth table needs at least one trial");
    if (channels.empty() || channels.size() > 16) throw InvalidSpec("truth table needs 1 to 16 input channels");
    const auto known = assembly.channels();
    for (const auto& c : channels)
        if (std::find(known.begin(), known.end(), c) == known.end())
            throw UnboundChannel("no muscle listens on channel '" + c + "'");
    const model::Probe& probe = assembly.probe(assembly.port(output_port).probe);
    const std::size_t combos = std::size_t(1) << channels.size();

    std::vector<StateReading> readings(combos * std::size_t(trials));
    parallel_for(readings.size(), [&](std::size_t job) {
        const std::size_t row = job / std::size_t(trials);
        const int trial = int(job % std::size_t(trials));
        dynamics::ActuationSchedule s;
        for (std::size_t c = 0; c < channels.size(); ++c)
            s.channels[channels[c]] = dynamics::Waveform::constant(int(row >> (channels.size() - 1 - c)) & 1);
        dynamics::SimParams p = params;
        p.seed = params.seed + std::uint64_t(trial);
        const auto traj = dynamics::run(assembly, p, s, settle);
        readings[job] = classify_state(settled_mean(traj, probe.id), probe);
    });

    TruthTable table;
    table.channels = channels;
    table.output_probe = probe.id;
    table.trials = trials;
    for (std::size_t row = 0; row < combos; ++row) {
        TruthRow r;
        for (std::size_t c = 0; c < channels.size(); ++c) r.inputs.push_back(int(row >> (channels.size() - 1 - c)) & 1);
        r.output = readings[row * trials].state;
        r.min_margin = 1e300;
        double sum = 0;
        for (int t = 0; t < trials; ++t) {
            const auto& rd = readings[row * trials + t];
            if (rd.state != r.output) {
                std::string in;
                for (int v : r.inputs) in += char('0' + v);
                throw Unsettled("output of row " + in + " differs between trials");
            }
            r.min_margin = std::min(r.min_margin, rd.margin);
            sum += rd.length;
        }
        r.mean_length = sum / trials;
        table.rows.push_back(r);
    }
    return table;
}

std::string TruthTable::to_csv() const {
    std::string out;
    for (const auto& c : channels) out += c + ",";
    out += "output,mean_length,min_margin\n";
    for (const auto& r : rows) {
        for (int v : r.inputs) out += std::to_string(v) + ",";
        out += std::to_string(r.output) + "," + format_number(r.mean_length) + "," + format_number(r.min_margin) + "\n";
    }
    return out;
}

nlohmann::json TruthTable::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows)
        rows_json.push_back(
            {{"inputs", r.inputs}, {"output", r.output}, {"mean_length", r.mean_length}, {"min_margin", r.min_margin}});
    return {{"channels", channels}, {"output_probe", output_probe}, {"trials", trials}, {"rows", rows_json}};
}

// ---------------------------------------------------------------------------

double rmsd_response(const dynamics::Trajectory& t, const std::string& channel, const model::Probe& probe,
                     double period) {
    if (!(period > 0)) throw InvalidSpec("period must be positive");
    if (t.times.empty()) throw NoCycles("empty trajectory");
    const double span = t.times.back() - t.times.front();
    const double cycles = std::floor(span / period + 1e-9);
    if (cycles < 1) throw NoCycles("trajectory is shorter than one period");
    const double end = t.times.front() + cycles * period;
    const std::size_t pc = t.probe_column(probe.id), cc = t.channel_column(channel);
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.times.size(); ++i) {
        if (t.times[i] >= end - 1e-12) break;
        const double y = (t.probe_lengths[i][pc] - probe.rest_length) / probe.signal;
        const double e = y - t.schedule_trace[i][cc];
        sum += e * e;
        ++n;
    }
    return std::sqrt(sum / double(n));
}

model::CircuitPlan relay_plan(int units, double tolerance) {
    using model::MuscleMode;
    model::CircuitPlan plan;
    plan.muscles = {{"m1", MuscleMode::Expand, "a"}, {"m2", MuscleMode::Expand, "b"}};
    plan.gates = {{"g1", model::GateKind::AND, MuscleMode::Expand}, {"g2", model::GateKind::AND, MuscleMode::Expand}};
    plan.connectors = {{"c", units, tolerance}};
    plan.wires = {{{"m1", "out"}, {"g1", "in1"}},
                  {{"m2", "out"}, {"g1", "in2"}},
                  {{"g1", "out"}, {"c", "in"}},
                  {{"c", "out"}, {"g2", "in1"}}};
    return plan;
}

int cycles_for(double frequency) {
    // At least three periods and at least 20 t0 of signal.
    return std::max(3, int(std::ceil(20.0 * frequency - 1e-9)));
}

dynamics::BodyState warm_start(const model::Assembly& assembly, const dynamics::SimParams& params,
                               const dynamics::ActuationSchedule& schedule, double duration) {
    // Every scheduled channel held at its t = 0 state, on a noise stream
    // disjoint from the run that follows.
    dynamics::ActuationSchedule held;
    for (const auto& [channel, wave] : schedule.channels)
        held.channels[channel] = dynamics::Waveform::constant(wave.value_at(0.0));
    dynamics::SimParams p = params;
    p.seed = params.seed ^ 0x9e3779b97f4a7c15ull;
    p.record_every = std::max(1, int(std::llround(duration * dynamics::kT0 / p.dt)));
    dynamics::RunOptions opts;
    opts.record_bodies = true;
    return dynamics::run(assembly, p, held, duration, opts).body_states->back();
}

FrequencyResponse freq_response(int units, const std::vector<double>& frequencies, const dynamics::SimParams& params,
                                const geometry::CoreGeometry& core, double warmup) {
    for (double f : frequencies)
        if (!(f > 0) || !std::isfinite(f)) throw InvalidSpec("frequencies must be positive");
    const auto circuit = model::build_circuit(relay_plan(units), core);
    const model::Probe& out = circuit.probe(circuit.port("g2.out").probe);
    FrequencyResponse fr;
    fr.units = units;
    fr.points.resize(frequencies.size());
    parallel_for(frequencies.size(), [&](std::size_t i) {
        FrequencyPoint& pt = fr.points[i];
        pt.frequency = frequencies[i];
        pt.period = 1.0 / pt.frequency;
        pt.duration = cycles_for(pt.frequency) * pt.period;
        dynamics::ActuationSchedule s;
        s.channels["a"] = dynamics::Waveform::square(pt.period);
        s.channels["b"] = dynamics::Waveform::square(pt.period);
        s.channels["g2.in2"] = dynamics::Waveform::constant(1);
        dynamics::SimParams p = params;
        // At least 50 samples per period.
        const double steps_per_period = pt.period * dynamics::kT0 / p.dt;
        p.record_every = std::max(1, std::min(p.record_every, int(steps_per_period / 50)));
        dynamics::RunOptions opts;
        opts.start = warm_start(circuit, params, s, warmup);
        const auto traj = dynamics::run(circuit, p, s, pt.duration, opts);
        pt.rmsd = rmsd_response(traj, "a", out, pt.period);
    });
    return fr;
}

std::string FrequencyResponse::to_csv() const { return analysis::to_csv(std::vector<FrequencyResponse>{*this}); }

std::string to_csv(const std::vector<FrequencyResponse>& sweep) {
    std::string out = "units,frequency,period,duration,rmsd\n";
    for (const auto& fr : sweep)
        for (const auto& p : fr.points)
            out += std::to_string(fr.units) + "," + format_number(p.frequency) + "," + format_number(p.period) + "," +
                   format_number(p.duration) + "," + format_number(p.rmsd) + "\n";
    return out;
}

nlohmann::json to_json(const std::vector<FrequencyResponse>& sweep) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& fr : sweep) out.push_back(fr.to_json());
    return out;
}

nlohmann::json FrequencyResponse::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points)
        pts.push_back({{"frequency", p.frequency}, {"period", p.period}, {"duration", p.duration}, {"rmsd", p.rmsd}});
    return {{"units", units}, {"points", pts}};
}

// ---------------------------------------------------------------------------

AttenuationStats signal_attenuation(int units, double tolerance, int trials, const dynamics::SimParams& params,
                                    const geometry::CoreGeometry& core, const AttenuationOptions& options) {
    if (trials < 2) throw InvalidSpec("attenuation needs at least two trials");
    if (!(options.settle >= 0) || !(options.window > 0)) throw InvalidSpec("invalid sampling window");
    using model::MuscleMode;
    model::CircuitPlan plan;
    plan.muscles = {{"m1", MuscleMode::Expand, "in"}, {"m2", MuscleMode::Expand, "in"}};
    plan.gates = {{"g", model::GateKind::AND, MuscleMode::Expand}};
    plan.connectors = {{"c", units, tolerance}};
    plan.wires = {{{"m1", "out"}, {"g", "in1"}}, {{"m2", "out"}, {"g", "in2"}}, {{"g", "out"}, {"c", "in"}}};
    const auto circuit = model::build_circuit(plan, core);
    std::vector<std::string> stages;
    for (int k = 1; k <= units; ++k) stages.push_back("c.stage" + std::to_string(k));

    dynamics::ActuationSchedule s;
    s.channels["in"] = dynamics::Waveform::constant(1);
    const double total = options.settle + options.window;

    // samples[trial][stage] -> values inside the window
    std::vector<std::vector<std::vector<double>>> samples(static_cast<std::size_t>(trials));
    parallel_for(std::size_t(trials), [&](std::size_t trial) {
        dynamics::SimParams p = params;
        p.seed = params.seed + trial;
        const auto traj = dynamics::run(circuit, p, s, total);
        auto& mine = samples[trial];
        mine.resize(stages.size());
        for (std::size_t k = 0; k < stages.size(); ++k) {
            const std::size_t col = traj.probe_column(stages[k]);
            for (std::size_t i = 0; i < traj.times.size(); ++i)
                if (traj.times[i] > options.settle + 1e-12) mine[k].push_back(traj.probe_lengths[i][col]);
        }
    });

    AttenuationStats st;
    st.units = units;
    st.tolerance = tolerance;
    st.trials = trials;
    st.trial_means.assign(std::size_t(trials), std::vector<double>(stages.size(), 0.0));
    for (std::size_t k = 0; k < stages.size(); ++k) {
        double sum = 0, sq = 0;
        std::size_t n = 0;
        for (int t = 0; t < trials; ++t) {
            const auto& v = samples[t][k];
            if (v.empty()) throw InvalidSpec("sampling window holds no recorded samples");
            double ts = 0;
            for (double x : v) {
                sum += x;
                ts += x;
            }
            st.trial_means[t][k] = ts / double(v.size());
            n += v.size();
        }
        const double mean = sum / double(n);
        for (int t = 0; t < trials; ++t)
            for (double x : samples[t][k]) sq += (x - mean) * (x - mean);
        st.mean.push_back(mean);
        st.variance.push_back(sq / double(n - 1));
        st.count.push_back(n);
    }
    return st;
}

std::string to_csv(const std::vector<AttenuationStats>& sweep) {
    std::string out = "units,tolerance,unit,mean,variance,count\n";
    for (const auto& st : sweep)
        for (std::size_t k = 0; k < st.mean.size(); ++k)
            out += std::to_string(st.units) + "," + format_number(st.tolerance) + "," + std::to_string(k + 1) + "," + format_number(st.mean[k]) + "," +
                   format_number(st.variance[k]) + "," + std::to_string(st.count[k]) + "\n";
    return out;
}

nlohmann::json to_json(const std::vector<AttenuationStats>& sweep) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& st : sweep)
        out.push_back({{"units", st.units},
                       {"tolerance", st.tolerance},
                       {"trials", st.trials},
                       {"mean", st.mean},
                       {"variance", st.variance},
                       {"count", st.count}});
    return out;
}

// ---------------------------------------------------------------------------

std::string classify_tetris(const std::array<int, 8>& dofs) {
    std::string label;
    bool straight = true;
    for (int u = 0; u < 4; ++u) {
        const int a = dofs[2 * u] != 0, b = dofs[2 * u + 1] != 0;
        straight = straight && !a && !b;
        label += a && b ? 'S' : a ? 'U' : b ? 'D' : '-';
    }
    return straight ? "I" : label;
}

TetrisReading tetris_run(const model::Assembly& robot, int y, int b, double duration,
                         const dynamics::SimParams& params) {
    std::vector<const model::Probe*> dof_probes;
    for (const auto& p : robot.probes)
        if (p.role == model::ProbeRole::SkeletonDof) dof_probes.push_back(&p);
    if (dof_probes.size() != 8) throw InvalidSpec("robot must expose eight skeleton DOF probes");
    dynamics::ActuationSchedule s;
    s.channels["y"] = dynamics::Waveform::constant(y);
    s.channels["b"] = dynamics::Waveform::constant(b);
    const auto traj = dynamics::run(robot, params, s, duration);
    TetrisReading r;
    r.y = y;
    r.b = b;
    r.min_margin = 1e300;
    for (std::size_t k = 0; k < 8; ++k) {
        const auto rd = classify_state(settled_mean(traj, dof_probes[k]->id), *dof_probes[k]);
        r.dofs[k] = rd.state;
        r.min_margin = std::min(r.min_margin, rd.margin);
    }
    r.label = classify_tetris(r.dofs);
    return r;
}

// ---------------------------------------------------------------------------

std::vector<ScaleEstimate> scale_estimates() {
    const double kbt_pn_nm = 4.1;
    std::vector<ScaleEstimate> rows;
    // DNA hinge 10 nm wide: ~10 bonds of 15 pN nm each.
    rows.push_back({"10nm", kbt_pn_nm / (15.0 * 10.0), 0});
    // Micron hinge: ~1e3 DNA bonds of ~6 kBT each.
    rows.push_back({"1um", 1.0 / (6.0 * 1e3), 0});
    // Metal hinge: 1 GPa over (100 um)^2 pulled 1 um, in N m.
    const double binding = 1e9 * (100e-6 * 100e-6) * 1e-6;
    rows.push_back({"100um", 4.1e-21 / binding, 0});
    for (auto& r : rows) r.log10 = int(std::floor(std::log10(r.ratio)));
    return rows;
}

std::string to_csv(const std::vector<ScaleEstimate>& rows) {
    std::string out = "scale,kbt_over_ksigma2,log10\n";
    for (const auto& r : rows) out += r.scale + "," + format_number(r.ratio) + "," + std::to_string(r.log10) + "\n";
    return out;
}

nlohmann::json to_json(const std::vector<ScaleEstimate>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) out.push_back({{"scale", r.scale}, {"kbt_over_ksigma2", r.ratio}, {"log10", r.log10}});
    return out;
}

}  // namespace mlc::analysis
