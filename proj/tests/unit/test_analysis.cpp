#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include "mlc/analysis.hpp"
#include "mlc/errors.hpp"

using namespace mlc;

namespace {

const geometry::CoreGeometry& default_core() {
    static const auto core = geometry::solve_core({0.5, 2.0});
    return core;
}

model::Probe probe(double rest, double signal) {
    model::Probe p;
    p.id = "p";
    p.rest_length = rest;
    p.signal = signal;
    return p;
}

// Square ideal on channel "a" sampled n times per period over `cycles`
// periods, with the probe reading `response(ideal, i)`.
template <class F>
dynamics::Trajectory synthetic(double period, int cycles, int n, F response) {
    dynamics::Trajectory t;
    t.probe_ids = {"p"};
    t.channels = {"a"};
    const auto wave = dynamics::Waveform::square(period);
    for (int i = 0; i <= cycles * n; ++i) {
        const double time = period * i / n;
        const int ideal = wave.value_at(time);
        t.times.push_back(time);
        t.schedule_trace.push_back({ideal});
        t.probe_lengths.push_back({response(ideal, i)});
    }
    return t;
}

}  // namespace

TEST_CASE("midpoint classification") {
    const auto up = probe(1.0, 0.5);
    CHECK(analysis::classify_state(1.0, up).state == 0);
    CHECK(analysis::classify_state(1.5, up).state == 1);
    const auto near = analysis::classify_state(1.24, up);
    CHECK(near.state == 0);
    CHECK(near.margin == doctest::Approx(0.01));
    const auto down = probe(1.0, -0.5);
    CHECK(analysis::classify_state(0.5, down).state == 1);
    CHECK(analysis::classify_state(1.0, down).state == 0);
    CHECK(analysis::classify_state(0.76, down).margin == doctest::Approx(0.01));
}

TEST_CASE("classification is monotone in the signal direction") {
    for (double sig : {0.5, -0.5, 1.0}) {
        const auto p = probe(1.0, sig);
        int last = 0;
        for (int i = 0; i <= 400; ++i) {
            const double len = 1.0 + sig * (-1.0 + 3.0 * i / 400.0);
            const int s = analysis::classify_state(len, p).state;
            CHECK(s >= last);
            last = s;
        }
        CHECK(last == 1);
    }
}

TEST_CASE("settled mean averages the last fifth") {
    dynamics::Trajectory t;
    t.probe_ids = {"p"};
    for (int i = 0; i < 10; ++i) {
        t.times.push_back(i);
        t.probe_lengths.push_back({double(i)});
    }
    CHECK(analysis::settled_mean(t, "p") == doctest::Approx(8.5));
}

TEST_CASE("parallel_for writes by index and rethrows the lowest failure") {
    std::vector<int> out(257, -1);
    analysis::parallel_for(out.size(), [&](std::size_t i) { out[i] = int(i * i % 101); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == int(i * i % 101));

    try {
        analysis::parallel_for(50, [&](std::size_t i) {
            if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
        });
        FAIL("expected a failure");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "7");
    }
}

TEST_CASE("thread cap") {
    setenv("MLC_THREADS", "1", 1);
    CHECK(analysis::worker_count() == 1);
    unsetenv("MLC_THREADS");
    CHECK(analysis::worker_count() >= 1);
}

TEST_CASE("rmsd of ideal, constant and lagged responses") {
    const auto p = probe(1.0, 0.5);
    const auto ideal = synthetic(2.0, 4, 100, [](int s, int) { return 1.0 + 0.5 * s; });
    CHECK(analysis::rmsd_response(ideal, "a", p, 2.0) < 1e-12);

    const auto flat = synthetic(2.0, 4, 100, [](int, int) { return 1.0; });
    CHECK(analysis::rmsd_response(flat, "a", p, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));

    // Output one quarter period late: wrong half of every half period.
    const auto wave = dynamics::Waveform::square(2.0);
    const auto late = synthetic(2.0, 4, 100, [&](int, int i) { return 1.0 + 0.5 * wave.value_at(2.0 * i / 100 - 0.5); });
    CHECK(analysis::rmsd_response(late, "a", p, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(0.02));
}

TEST_CASE("rmsd is invariant under affine rescaling of probe lengths") {
    std::uint64_t state = 99;
    auto noise = [&] {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        return double(state >> 11) / double(1ull << 53) - 0.5;
    };
    std::vector<double> jitter;
    for (int i = 0; i <= 300; ++i) jitter.push_back(noise());
    auto lengths = [&](double a, double b) {
        return synthetic(3.0, 3, 100, [&](int s, int i) { return a * (1.0 + 0.5 * s + 0.2 * jitter[i]) + b; });
    };
    const double base = analysis::rmsd_response(lengths(1, 0), "a", probe(1.0, 0.5), 3.0);
    for (auto [a, b] : {std::pair{2.0, 0.0}, {0.1, 3.0}, {-1.5, 4.0}}) {
        const double r = analysis::rmsd_response(lengths(a, b), "a", probe(a * 1.0 + b, a * 0.5), 3.0);
        CHECK(r == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("rmsd needs a whole period") {
    const auto t = synthetic(2.0, 1, 10, [](int s, int) { return 1.0 + 0.5 * s; });
    CHECK_THROWS_AS(analysis::rmsd_response(t, "a", probe(1.0, 0.5), 5.0), NoCycles);
    CHECK_THROWS_AS(analysis::rmsd_response(dynamics::Trajectory{}, "a", probe(1.0, 0.5), 1.0), NoCycles);
    CHECK_THROWS_AS(analysis::rmsd_response(t, "a", probe(1.0, 0.5), 0.0), InvalidSpec);
}

TEST_CASE("settled gate under a constant schedule tracks its ideal") {
    auto gate = model::build_gate(model::GateKind::AND, model::MuscleMode::Expand, model::MuscleMode::Expand,
                                  default_core());
    dynamics::ActuationSchedule s;
    s.channels["in1"] = dynamics::Waveform::constant(1);
    s.channels["in2"] = dynamics::Waveform::constant(1);
    dynamics::SimParams p;
    p.seed = 5;
    p.record_every = 200;
    dynamics::RunOptions opts;
    opts.start = analysis::warm_start(gate, p, s, 1.0);
    const auto t = dynamics::run(gate, p, s, 1.0, opts);
    CHECK(analysis::rmsd_response(t, "in1", gate.probe(gate.port("out").probe), 1.0) < 0.02);
}

TEST_CASE("AND gate truth table") {
    const auto gate = model::build_gate(model::GateKind::AND, model::MuscleMode::Contract,
                                        model::MuscleMode::Contract, default_core());
    dynamics::SimParams p;
    p.seed = 11;
    const auto table = analysis::truth_table(gate, {"in1", "in2"}, 2.0, 2, p);
    REQUIRE(table.rows.size() == 4);
    for (const auto& r : table.rows) {
        CAPTURE(r.inputs[0]);
        CAPTURE(r.inputs[1]);
        CHECK(r.output == (r.inputs[0] & r.inputs[1]));
        CHECK(r.min_margin >= 0.15);
    }
    CHECK(table.to_csv().rfind("in1,in2,output,mean_length,min_margin\n", 0) == 0);
    CHECK(table.to_json()["rows"].size() == 4);
    CHECK_THROWS_AS(analysis::truth_table(gate, {"nope"}, 1.0, 1, p), UnboundChannel);
    CHECK_THROWS_AS(analysis::truth_table(gate, {"in1"}, 1.0, 0, p), InvalidSpec);
}

TEST_CASE("cycle count covers three periods and twenty time units") {
    for (double f : {0.01, 0.05, 0.15, 0.5, 1.0, 5.0, 7.3}) {
        const int n = analysis::cycles_for(f);
        CHECK(n >= 3);
        CHECK(n / f >= 20.0 - 1e-9);
        CHECK((n - 1) / f < std::max(20.0, 3.0 / f) + 1e-9);
    }
}

TEST_CASE("relay circuit plan") {
    const auto plan = analysis::relay_plan(5, 0.02);
    CHECK(plan.gates.size() == 2);
    CHECK(plan.connectors.at(0).units == 5);
    CHECK(plan.connectors.at(0).tolerance == 0.02);
    const auto c = model::build_circuit(plan, default_core());
    const auto ch = c.channels();
    CHECK(std::set<std::string>(ch.begin(), ch.end()) == std::set<std::string>{"a", "b", "g2.in2"});
}

TEST_CASE("short frequency response is deterministic") {
    dynamics::SimParams p;
    p.seed = 3;
    const auto a = analysis::freq_response(1, {5.0}, p, default_core(), 0.2);
    const auto b = analysis::freq_response(1, {5.0}, p, default_core(), 0.2);
    REQUIRE(a.points.size() == 1);
    CHECK(a.points[0].period == doctest::Approx(0.2));
    CHECK(a.points[0].duration == doctest::Approx(20.0));
    CHECK(a.points[0].rmsd >= 0.0);
    CHECK(a.points[0].rmsd <= 1.0);
    CHECK(a.to_csv() == b.to_csv());
    CHECK(a.to_csv().rfind("units,frequency,period,duration,rmsd\n", 0) == 0);
    CHECK_THROWS_AS(analysis::freq_response(1, {0.0}, p, default_core()), InvalidSpec);
}

TEST_CASE("ideal connector transmits the full signal") {
    dynamics::SimParams p;
    p.kbt = 0;
    const auto st = analysis::signal_attenuation(2, 0.0, 2, p, default_core(), {1.0, 0.5});
    REQUIRE(st.mean.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(st.mean[k] == doctest::Approx(1.5).epsilon(1e-3));
        CHECK(st.variance[k] < 1e-8);
        CHECK(st.count[k] > 0);
    }
    CHECK(st.trial_means.size() == 2);
    CHECK(analysis::to_csv({st}).rfind("units,tolerance,unit,mean,variance,count\n", 0) == 0);
    CHECK_THROWS_AS(analysis::signal_attenuation(2, 0.0, 1, p, default_core()), InvalidSpec);
}

TEST_CASE("tetris labels") {
    CHECK(analysis::classify_tetris({0, 0, 0, 0, 0, 0, 0, 0}) == "I");
    CHECK(analysis::classify_tetris({1, 0, 0, 0, 0, 0, 0, 0}) == "U---");
    CHECK(analysis::classify_tetris({0, 1, 0, 0, 0, 0, 0, 0}) == "D---");
    CHECK(analysis::classify_tetris({1, 1, 0, 0, 0, 0, 0, 1}) == "S--D");

    const auto choice = model::TetrisChoice::default_choice();
    std::set<std::string> labels;
    for (int y = 0; y < 2; ++y)
        for (int b = 0; b < 2; ++b) labels.insert(analysis::classify_tetris(model::tetris_targets(choice, y, b)));
    CHECK(labels.size() == 4);
    CHECK(analysis::classify_tetris(model::tetris_targets(choice, 0, 0)) == "I");
}

TEST_CASE("scale estimates") {
    const auto rows = analysis::scale_estimates();
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].scale == "10nm");
    CHECK(rows[1].scale == "1um");
    CHECK(rows[2].scale == "100um");
    CHECK(rows[0].log10 == -2);
    CHECK(rows[1].log10 == -4);
    CHECK(rows[2].log10 == -16);
    // Hand arithmetic: 4.1/150, 1/6000, 4.1e-21 J / (1e9 Pa * 1e-8 m^2 * 1e-6 m).
    CHECK(rows[0].ratio == doctest::Approx(0.027333).epsilon(1e-4));
    CHECK(rows[1].ratio == doctest::Approx(1.6667e-4).epsilon(1e-4));
    CHECK(rows[2].ratio == doctest::Approx(4.1e-16).epsilon(1e-9));
    for (const auto& r : rows) CHECK(std::pow(10.0, r.log10) <= r.ratio);
    CHECK(analysis::to_csv(rows).rfind("scale,kbt_over_ksigma2,log10\n", 0) == 0);
    CHECK(analysis::to_json(rows).size() == 3);
}
