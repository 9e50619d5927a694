#include <doctest.h>

#include <cmath>

#include "mlc/dynamics.hpp"
#include "mlc/errors.hpp"
#include "mlc/geometry.hpp"
#include "mlc/model.hpp"

using namespace mlc;
using dynamics::SimParams;
using model::Vec3;

namespace {

model::RigidSlab slab(const std::string& id, const Vec3& at) {
    model::RigidSlab s;
    s.id = id;
    s.half_extents = Vec3(0.5, 0.25, 0.005);
    s.position = at;
    s.orientation = model::Quat::Identity();
    return s;
}

model::Assembly free_slabs(int n, double spacing = 10.0) {
    model::Assembly a;
    for (int i = 0; i < n; ++i) a.slabs.push_back(slab("s" + std::to_string(i), Vec3(spacing * i, 0, 0)));
    return a;
}

// Two slabs joined at their centers by one bond.
model::Assembly bonded_pair(double separation, double tolerance) {
    model::Assembly a;
    a.slabs = {slab("a", Vec3::Zero()), slab("b", Vec3(separation, 0, 0))};
    model::Joint j;
    j.id = "j";
    j.kind = tolerance > 0 ? model::JointKind::ToleranceUniversal : model::JointKind::Universal;
    j.tolerance = tolerance;
    j.bonds = {{{"a", Vec3::Zero()}, {"b", Vec3::Zero()}}};
    a.joints = {j};
    a.validate();
    return a;
}

SimParams quiet() {
    SimParams p;
    p.kbt = 0;
    p.eps_wca = 0;
    return p;
}

}  // namespace

TEST_CASE("coincident bond points exert no force") {
    const auto a = bonded_pair(0.0, 0.0);
    const auto f = dynamics::compute_forces(a, dynamics::initial_state(a), quiet());
    for (int i = 0; i < 2; ++i) {
        CHECK(f.force[i].norm() == 0.0);
        CHECK(f.torque[i].norm() == 0.0);
    }
}

TEST_CASE("stretched muscle pulls both ends back with k |L - L0|") {
    model::Assembly a;
    a.slabs = {slab("a", Vec3::Zero()), slab("b", Vec3(1.3, 0, 0))};
    model::Muscle m;
    m.id = "m";
    m.a = {"a", Vec3::Zero()};
    m.b = {"b", Vec3::Zero()};
    m.rest_length = 1.0;
    m.actuated_length = 1.5;
    m.mode = model::MuscleMode::Expand;
    m.channel = "x";
    a.muscles = {m};
    a.validate();
    const auto x = dynamics::initial_state(a);
    auto f = dynamics::compute_forces(a, x, quiet());
    CHECK(f.force[0].x() == doctest::Approx(0.3));
    CHECK(f.force[1].x() == doctest::Approx(-0.3));
    CHECK(f.force[0].y() == 0.0);

    dynamics::ActuationSchedule on;
    on.channels["x"] = dynamics::Waveform::constant(1);
    f = dynamics::compute_forces(a, x, quiet(), on);
    CHECK(f.force[0].x() == doctest::Approx(-0.2));
    CHECK(f.force[1].x() == doctest::Approx(0.2));
}

TEST_CASE("tolerance bonds are slack up to the tolerance") {
    {
        const auto a = bonded_pair(0.03, 0.05);
        const auto f = dynamics::compute_forces(a, dynamics::initial_state(a), quiet());
        CHECK(f.force[0].norm() == 0.0);
        CHECK(f.force[1].norm() == 0.0);
    }
    {
        const auto a = bonded_pair(0.0499999999, 0.05);
        const auto f = dynamics::compute_forces(a, dynamics::initial_state(a), quiet());
        CHECK(f.force[0].norm() == 0.0);
    }
    {
        const auto a = bonded_pair(0.08, 0.05);
        const auto f = dynamics::compute_forces(a, dynamics::initial_state(a), quiet());
        CHECK(f.force[0].norm() == doctest::Approx(0.03));
        CHECK(f.force[0].x() > 0);
        CHECK(f.force[1].x() < 0);
    }
}

TEST_CASE("off-center bond produces a torque about the center") {
    model::Assembly a;
    a.slabs = {slab("a", Vec3::Zero()), slab("b", Vec3(0.0, 1.0, 0))};
    model::Joint j;
    j.id = "j";
    j.kind = model::JointKind::Universal;
    j.bonds = {{{"a", Vec3(0.5, 0, 0)}, {"b", Vec3(0.5, 0, 0)}}};
    a.joints = {j};
    const auto f = dynamics::compute_forces(a, dynamics::initial_state(a), quiet());
    // Force on a is +y at lever arm +x: torque +z.
    CHECK(f.force[0].y() == doctest::Approx(1.0));
    CHECK(f.torque[0].z() == doctest::Approx(0.5));
    CHECK(f.torque[1].z() == doctest::Approx(-0.5));
}

TEST_CASE("WCA repulsion is continuous at its cutoff and radial") {
    SimParams p = quiet();
    p.eps_wca = 1e-4;
    const double cut = std::pow(2.0, 1.0 / 6.0) * 0.2;
    for (double r : {cut + 1e-9, cut - 1e-9}) {
        const auto a = free_slabs(2, r);
        const auto f = dynamics::compute_forces(a, dynamics::initial_state(a), p);
        CHECK(f.force[0].norm() < 1e-9);
    }
    const auto a = free_slabs(2, 0.18);
    const auto f = dynamics::compute_forces(a, dynamics::initial_state(a), p);
    // Independent evaluation of -dU/dr for U = 4 eps ((s/r)^12 - (s/r)^6).
    const double s = 0.2, r = 0.18;
    const double want = 4 * 1e-4 * (12 * std::pow(s, 12) / std::pow(r, 13) - 6 * std::pow(s, 6) / std::pow(r, 7));
    CHECK(f.force[1].x() == doctest::Approx(want));
    CHECK(f.force[0].x() == doctest::Approx(-want));
    CHECK(f.torque[0].norm() == 0.0);
}

TEST_CASE("zero force and zero temperature leave the state unchanged") {
    const auto a = free_slabs(3);
    const auto x = dynamics::initial_state(a);
    const auto y = dynamics::step(a, x, quiet(), {}, 0.0, 0);
    for (int i = 0; i < 3; ++i) {
        CHECK(y.position[i] == x.position[i]);
        CHECK(y.orientation[i].coeffs() == x.orientation[i].coeffs());
    }
}

TEST_CASE("free slab diffusion follows 6 kT t / gamma") {
    const int n = 10000, steps = 100;
    const auto a = free_slabs(n);
    SimParams p;
    p.kbt = 1e-5;
    p.eps_wca = 0;
    p.seed = 7;
    const dynamics::System sys(a);
    const auto x0 = dynamics::initial_state(a);
    auto x = x0;
    for (int k = 0; k < steps; ++k) x = sys.step(x, p, {}, 0.0, std::uint64_t(k));
    double msd = 0;
    for (int i = 0; i < n; ++i) msd += (x.position[i] - x0.position[i]).squaredNorm();
    msd /= n;
    const double want = 6 * p.kbt * steps * p.dt;
    CHECK(std::abs(msd / want - 1) < 0.05);
}

TEST_CASE("noise draws are standard normal") {
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = dynamics::noise(3, 11, std::uint64_t(i / 3), i % 3);
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1) < 0.02);
}

TEST_CASE("bonded pair relaxes at rate 2 k / gamma") {
    SimParams p = quiet();
    p.dt = 0.01;
    const double d0 = 0.1;
    const auto a = bonded_pair(d0, 0.0);
    const dynamics::System sys(a);
    auto x = dynamics::initial_state(a);
    const int steps = 100;
    for (int k = 0; k < steps; ++k) x = sys.step(x, p, {}, 0.0, std::uint64_t(k));
    const double d = (x.position[1] - x.position[0]).norm();
    const double rate = -std::log(d / d0) / (steps * p.dt);
    CHECK(std::abs(rate / 2.0 - 1) < 0.02);
}

TEST_CASE("overdamped descent never raises the energy") {
    const auto core = geometry::solve_core({0.5, 2.0});
    const auto g = model::build_gate(model::GateKind::NAND, model::MuscleMode::Expand, model::MuscleMode::Expand, core);
    SimParams p;
    p.kbt = 0;
    const dynamics::System sys(g);
    dynamics::ActuationSchedule s;
    s.channels["in1"] = dynamics::Waveform::constant(1);
    s.channels["in2"] = dynamics::Waveform::constant(1);
    const auto eq = sys.muscle_targets(s, 0);
    auto x = dynamics::initial_state(g);
    double e = sys.energy(x, eq, p);
    const double e0 = e;
    bool monotone = true;
    for (int k = 0; k < 4000; ++k) {
        x = sys.step(x, p, s, 0.0, std::uint64_t(k));
        const double e1 = sys.energy(x, eq, p);
        monotone = monotone && e1 <= e + 1e-15;
        e = e1;
        for (const auto& q : x.orientation) monotone = monotone && std::abs(q.norm() - 1) < 1e-9;
    }
    CHECK(monotone);
    CHECK(e < 0.5 * e0);
}

TEST_CASE("quaternions stay normalized under noise") {
    const auto g = model::build_connector(2, 0.0);
    SimParams p;
    p.record_every = 100;
    dynamics::RunOptions opt;
    opt.record_bodies = true;
    const auto tr = dynamics::run(g, p, {}, 0.5, opt);
    double worst = 0;
    for (const auto& st : *tr.body_states)
        for (const auto& q : st.orientation) worst = std::max(worst, std::abs(q.norm() - 1));
    CHECK(worst < 1e-9);
}

TEST_CASE("runs are bitwise reproducible and seed dependent") {
    const auto g = model::build_connector(1, 0.0);
    SimParams p;
    p.seed = 42;
    p.record_every = 500;
    dynamics::ActuationSchedule s;
    s.channels["in"] = dynamics::Waveform::square(0.2);
    const auto a = dynamics::run(g, p, s, 0.5);
    const auto b = dynamics::run(g, p, s, 0.5);
    CHECK(a.probe_lengths == b.probe_lengths);
    CHECK(a.to_csv() == b.to_csv());
    p.seed = 43;
    const auto c = dynamics::run(g, p, s, 0.5);
    CHECK(a.probe_lengths != c.probe_lengths);
}

TEST_CASE("noise follows bodies, not their order") {
    auto a = free_slabs(3);
    auto b = a;
    std::swap(b.slabs[0], b.slabs[2]);
    SimParams p;
    p.eps_wca = 0;
    p.seed = 5;
    auto xa = dynamics::initial_state(a), xb = dynamics::initial_state(b);
    xa = dynamics::step(a, xa, p, {}, 0.0, 17);
    xb = dynamics::step(b, xb, p, {}, 0.0, 17);
    CHECK(xa.position[0] == xb.position[2]);
    CHECK(xa.position[1] == xb.position[1]);
}

TEST_CASE("non-finite states raise NumericalBlowup") {
    const auto a = free_slabs(1);
    auto x = dynamics::initial_state(a);
    x.position[0].x() = std::nan("");
    CHECK_THROWS_AS(dynamics::step(a, x, quiet(), {}, 0.0, 0), NumericalBlowup);
}

TEST_CASE("parameter and schedule validation") {
    SimParams p;
    p.dt = 1.0;
    CHECK_THROWS_AS(p.validate(), InvalidSpec);
    p.dt = 0.05;
    p.kbt = -1;
    CHECK_THROWS_AS(p.validate(), InvalidSpec);
    CHECK_THROWS_AS(dynamics::Waveform::square(0.0).validate(), InvalidSpec);
    CHECK_THROWS_AS(dynamics::Waveform::square(1.0, 1.0).validate(), InvalidSpec);
    CHECK_THROWS_AS(dynamics::Waveform::step({{1.0, 1}, {1.0, 0}}).validate(), InvalidSpec);
    CHECK_THROWS_AS(dynamics::Waveform::constant(2).validate(), InvalidSpec);
}

TEST_CASE("waveforms") {
    const auto sq = dynamics::Waveform::square(10.0, 0.5);
    CHECK(sq.value_at(0.0) == 1);
    CHECK(sq.value_at(4.9) == 1);
    CHECK(sq.value_at(5.0) == 0);
    CHECK(sq.value_at(12.0) == 1);
    const auto st = dynamics::Waveform::step({{1.0, 1}, {3.0, 0}});
    CHECK(st.value_at(0.5) == 0);
    CHECK(st.value_at(1.0) == 1);
    CHECK(st.value_at(3.5) == 0);
}

TEST_CASE("trajectory shape and export") {
    const auto g = model::build_connector(1, 0.0);
    SimParams p;
    p.record_every = 1000;
    dynamics::ActuationSchedule s;
    s.channels["in"] = dynamics::Waveform::constant(1);
    const auto tr = dynamics::run(g, p, s, 0.2);
    CHECK(tr.times.size() == 5);
    for (std::size_t i = 1; i < tr.times.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);
    CHECK(tr.probe_lengths.size() == tr.times.size());
    CHECK(tr.schedule_trace.size() == tr.times.size());
    const std::string csv = tr.to_csv();
    CHECK(csv.substr(0, csv.find('\n')) == "t,stage1,in,in_ideal");
    const std::string jl = tr.to_jsonl();
    CHECK(std::count(jl.begin(), jl.end(), '\n') == 5);

    // A run shorter than one record interval holds the initial sample only.
    const auto short_run = dynamics::run(g, p, s, 0.01);
    CHECK(short_run.times.size() == 1);
}
