#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mlc/dynamics.hpp"
#include "mlc/geometry.hpp"
#include "mlc/model.hpp"

namespace mlc::analysis {

// ---------------------------------------------------------------------------
// State classification

struct StateReading {
    std::string probe;
    double length = 0;
    int state = 0;
    double margin = 0;  ///< distance from the threshold
};

/// Midpoint rule: threshold = rest + signal / 2.
StateReading classify_state(double length, const model::Probe& probe);

/// Mean of a probe column over the final 20% of the samples.
double settled_mean(const dynamics::Trajectory& t, const std::string& probe);

// ---------------------------------------------------------------------------
// Worker threads

/// Worker count: hardware concurrency capped by MLC_THREADS when set.
unsigned worker_count();

/// Run fn(0..n-1) over the worker pool. Results must be written by index;
/// the first exception (lowest index) is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Truth tables

struct TruthRow {
    std::vector<int> inputs;
    int output = 0;
    double mean_length = 0;  ///< over trials
    double min_margin = 0;   ///< worst trial
};

struct TruthTable {
    std::vector<std::string> channels;
    std::string output_probe;
    int trials = 0;
    std::vector<TruthRow> rows;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

/// Run every input combination for `settle` t0, `trials` times with seeds
/// params.seed + trial. Throws Unsettled when trials disagree.
TruthTable truth_table(const model::Assembly& assembly, const std::vector<std::string>& channels, double settle,
                       int trials, const dynamics::SimParams& params, const std::string& output_port = "out");

// ---------------------------------------------------------------------------
// Frequency response

/// RMSD between the probe, mapped so rest -> 0 and rest + signal -> 1, and
/// the ideal 0/1 trace of `channel`, over whole periods. Throws NoCycles.
double rmsd_response(const dynamics::Trajectory& t, const std::string& channel, const model::Probe& probe,
                     double period);

/// AND gate -> connector -> AND gate, muscles and outputs expanding. The
/// driving channels are "a" and "b"; the second gate's free input listens
/// on "g2.in2".
model::CircuitPlan relay_plan(int units, double tolerance = 0.0);

struct FrequencyPoint {
    double frequency = 0;  ///< 1/t0
    double period = 0;     ///< t0
    double duration = 0;   ///< t0
    double rmsd = 0;
};

struct FrequencyResponse {
    int units = 0;
    std::vector<FrequencyPoint> points;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

std::string to_csv(const std::vector<FrequencyResponse>& sweep);
nlohmann::json to_json(const std::vector<FrequencyResponse>& sweep);

/// Number of whole periods simulated at a frequency.
int cycles_for(double frequency);

/// Final state after holding every channel of `schedule` at its t = 0 state
/// for `duration` t0.
dynamics::BodyState warm_start(const model::Assembly& assembly, const dynamics::SimParams& params,
                               const dynamics::ActuationSchedule& schedule, double duration);

/// Square-wave both inputs of the relay circuit at each frequency and read
/// the second gate's output against the ideal trace. Each run starts from
/// a `warmup` t0 hold at the t = 0 input state.
FrequencyResponse freq_response(int units, const std::vector<double>& frequencies, const dynamics::SimParams& params,
                                const geometry::CoreGeometry& core, double warmup = 10.0);

// ---------------------------------------------------------------------------
// Attenuation

struct AttenuationStats {
    int units = 0;
    double tolerance = 0;
    int trials = 0;
    std::vector<double> mean;      ///< per stage, sigma
    std::vector<double> variance;  ///< per stage, sigma^2
    std::vector<std::size_t> count;
    /// Per-trial means of every stage, [trial][stage].
    std::vector<std::vector<double>> trial_means;
};

struct AttenuationOptions {
    double settle = 20.0;  ///< t0 before sampling starts
    double window = 10.0;  ///< t0 of sampling
};

/// Actuate an AND gate feeding a connector of `units` to state 1 and sample
/// every stage probe across trials (seeds params.seed + trial).
AttenuationStats signal_attenuation(int units, double tolerance, int trials, const dynamics::SimParams& params,
                                    const geometry::CoreGeometry& core, const AttenuationOptions& options = {});

std::string to_csv(const std::vector<AttenuationStats>& sweep);
nlohmann::json to_json(const std::vector<AttenuationStats>& sweep);

// ---------------------------------------------------------------------------
// Tetris

/// Per-unit bend code from the unit's two DOF bits: "-" straight, "U" first
/// DOF, "D" second DOF, "S" both. A fully straight chain reads "I".
std::string classify_tetris(const std::array<int, 8>& dofs);

struct TetrisReading {
    int y = 0, b = 0;
    std::array<int, 8> dofs{};
    double min_margin = 0;
    std::string label;
};

TetrisReading tetris_run(const model::Assembly& robot, int y, int b, double duration,
                         const dynamics::SimParams& params);

// ---------------------------------------------------------------------------
// Scale estimates

struct ScaleEstimate {
    std::string scale;
    double ratio = 0;  ///< kBT / (k sigma^2)
    int log10 = 0;     ///< order of magnitude, floor(log10(ratio))
};

std::vector<ScaleEstimate> scale_estimates();
std::string to_csv(const std::vector<ScaleEstimate>& rows);
nlohmann::json to_json(const std::vector<ScaleEstimate>& rows);

}  // namespace mlc::analysis
