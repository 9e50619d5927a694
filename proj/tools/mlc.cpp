// mlc: command-line front end for the mechanical logic circuit toolkit.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mlc/analysis.hpp"
#include "mlc/dynamics.hpp"
#include "mlc/errors.hpp"
#include "mlc/format.hpp"
#include "mlc/geometry.hpp"
#include "mlc/model.hpp"
#include "mlc/netlist.hpp"

namespace fs = std::filesystem;
using namespace mlc;

namespace {

constexpr const char* kUnits =
    "lengths: sigma (muscle rest length)\n"
    "times: t0 = 1000 gamma/k0 (--duration, --settle, --freqs in 1/t0)\n"
    "dt: gamma/k0\n"
    "energies: k0 sigma^2 (--kbt)\n";

/// A command-line problem found before any work starts.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::uint64_t seed = 0;
    std::string out;
    bool json = false;
    bool units = false;
};

struct Sim {
    double dt = 0.05;
    double kbt = 1e-5;
    int record_every = 0;

    dynamics::SimParams params(std::uint64_t seed) const {
        dynamics::SimParams p;
        p.dt = dt;
        p.kbt = kbt;
        p.seed = seed;
        if (record_every > 0) p.record_every = record_every;
        try {
            p.validate();
        } catch (const InvalidSpec& e) {
            throw UsageError(e.what());
        }
        return p;
    }
};

struct CoreFlags {
    double delta_in = 0.5;
    double h = 2.0;
    geometry::CoreGeometry solve() const { return geometry::solve_core({delta_in, h}); }
};

void add_common(CLI::App* sub, Common& c) {
    // "--h" is the core height, so help is long-form only.
    sub->set_help_flag("--help", "Print this help message and exit");
    sub->add_option("--seed", c.seed, "Noise seed");
    sub->add_option("-o,--out", c.out, "Output file (default: standard output)");
    sub->add_flag("--json", c.json, "Emit JSON instead of CSV");
    sub->add_flag("--units", c.units, "Print the unit conventions and exit");
}

void add_sim(CLI::App* sub, Sim& s) {
    sub->add_option("--dt", s.dt, "Time step in gamma/k0");
    sub->add_option("--kbt", s.kbt, "Thermal energy in k0 sigma^2");
}

void add_core(CLI::App* sub, CoreFlags& c) {
    sub->add_option("--delta-in", c.delta_in, "Core input expansion over sigma");
    sub->add_option("--h", c.h, "Core height over sigma");
}

void check_out_path(const std::string& out) {
    if (out.empty()) return;
    const fs::path p(out);
    const fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw UsageError("output directory does not exist: " + dir.string());
    if (fs::is_directory(p, ec)) throw UsageError("output path is a directory: " + out);
}

/// Write the whole artifact at once; a reader never sees a partial file.
void emit(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    const fs::path target(out);
    fs::path tmp = target;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << text;
        f.flush();
        if (!f) {
            f.close();
            fs::remove(tmp);
            throw std::runtime_error("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

model::MuscleMode mode_arg(const std::string& s) {
    return s == "expand" ? model::MuscleMode::Expand : model::MuscleMode::Contract;
}

/// Output port of an assembly: the named one, or the only output.
std::string output_port(const model::Assembly& a, const std::string& wanted) {
    if (!wanted.empty()) return wanted;
    std::string found;
    for (const auto& p : a.ports)
        if (p.direction == model::PortDirection::Output) {
            if (!found.empty()) throw UsageError("circuit has several outputs; choose one with --output");
            found = p.name;
        }
    if (found.empty()) throw UsageError("circuit has no unwired output");
    return found;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mechanical logic circuits: geometry, assembly, Brownian dynamics and analysis"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    Common common;
    Sim sim;
    CoreFlags core;
    std::string circuit;
    double sim_duration = 10.0, tetris_duration = 200.0;
    std::function<std::string()> run;

    // solve-core
    auto* sc = app.add_subcommand("solve-core", "Solve the logic core for (delta_in, h)");
    add_common(sc, common);
    add_core(sc, core);
    sc->callback([&] {
        run = [&] {
            const auto g = core.solve();
            nlohmann::json j = g;
            j["residuals"] = geometry::core_residuals(g);
            return dump(j);
        };
    });

    // solve-lever
    geometry::LeverSpec lever;
    std::string hinge = "open";
    auto* sl = app.add_subcommand("solve-lever", "Solve a scissor lever");
    add_common(sl, common);
    sl->add_option("--l-in", lever.l_in, "Input rest length");
    sl->add_option("--l-out", lever.l_out, "Output rest length");
    sl->add_option("--dl-in", lever.dl_in, "Input change");
    sl->add_option("--dl-out", lever.dl_out, "Output change");
    sl->add_option("--l", lever.l, "Slab length");
    sl->add_option("--hinge", hinge, "Hinge type")->check(CLI::IsMember({"open", "crossed"}));
    sl->callback([&] {
        run = [&] {
            lever.hinge = geometry::hinge_from_string(hinge == "open" ? "Open" : "Crossed");
            const auto g = geometry::solve_lever(lever);
            nlohmann::json j = g;
            j["residuals"] = geometry::lever_residuals(g);
            j["monotone"] = geometry::lever_is_monotone(g);
            return dump(j);
        };
    });

    // sweep-core
    std::vector<double> sweep_din, sweep_h{1.5, 2.0, 2.5};
    for (int i = 0; i <= 20; ++i) sweep_din.push_back(0.05 * i);
    auto* sw = app.add_subcommand("sweep-core", "Output expansion over a grid of delta_in and h");
    add_common(sw, common);
    sw->add_option("--delta-in", sweep_din, "Comma-separated delta_in values")->delimiter(',');
    sw->add_option("--h", sweep_h, "Comma-separated h values")->delimiter(',');
    sw->callback([&] {
        run = [&] {
            const auto rows = geometry::sweep_core(sweep_din, sweep_h);
            if (!common.json) return geometry::sweep_to_csv(rows);
            nlohmann::json j = nlohmann::json::array();
            for (const auto& r : rows)
                j.push_back({{"delta_in_frac", r.delta_in_frac},
                             {"h_frac", r.h_frac},
                             {"delta_out_frac", r.delta_out_frac ? nlohmann::json(*r.delta_out_frac) : nullptr}});
            return dump(j);
        };
    });

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Integrate a circuit file under its schedules");
    add_common(sim_cmd, common);
    add_sim(sim_cmd, sim);
    add_core(sim_cmd, core);
    sim_cmd->add_option("-c,--circuit", circuit, "Circuit file (.mlc)")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--duration", sim_duration, "Simulated time in t0")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--record-every", sim.record_every, "Steps between samples");
    sim_cmd->callback([&] {
        const auto p = sim.params(common.seed);
        const std::string text = slurp(circuit);
        run = [&, p, text] {
            const auto e = netlist::elaborate(netlist::parse(text), core.solve());
            const auto traj = dynamics::run(e.assembly, p, e.schedule, sim_duration);
            return common.json ? traj.to_jsonl() : traj.to_csv();
        };
    });

    // elaborate
    auto* el = app.add_subcommand("elaborate", "Write the assembly scene of a circuit file");
    add_common(el, common);
    add_core(el, core);
    el->add_option("-c,--circuit", circuit, "Circuit file (.mlc)")->required()->check(CLI::ExistingFile);
    el->callback([&] {
        const std::string text = slurp(circuit);
        run = [&, text] { return dump(model::to_json(netlist::elaborate(netlist::parse(text), core.solve()).assembly)); };
    });

    // truth-table
    std::string gate_kind = "AND", muscle_mode = "contract", out_mode, out_name;
    double settle = 20.0;
    int tt_trials = 5, at_trials = 20;
    auto* tt = app.add_subcommand("truth-table", "Truth table of a gate or circuit file");
    add_common(tt, common);
    add_sim(tt, sim);
    add_core(tt, core);
    tt->add_option("-c,--circuit", circuit, "Circuit file; every muscle channel is an input")
        ->check(CLI::ExistingFile);
    tt->add_option("--gate", gate_kind, "Gate kind when no circuit is given")
        ->check(CLI::IsMember({"AND", "OR", "NAND", "NOR"}));
    tt->add_option("--muscle-mode", muscle_mode, "Input muscle mode")->check(CLI::IsMember({"expand", "contract"}));
    tt->add_option("--out-mode", out_mode, "Output mode (default depends on the kind)")
        ->check(CLI::IsMember({"expand", "contract"}));
    tt->add_option("--output", out_name, "Output port of a circuit");
    tt->add_option("--settle", settle, "Settling time per row in t0")->check(CLI::PositiveNumber);
    tt->add_option("--trials", tt_trials, "Seeds per row")->check(CLI::PositiveNumber);
    tt->callback([&] {
        const auto p = sim.params(common.seed);
        const std::string text = circuit.empty() ? std::string() : slurp(circuit);
        run = [&, p, text] {
            model::Assembly a;
            std::vector<std::string> channels;
            std::string port = "out";
            if (!text.empty()) {
                a = netlist::elaborate(netlist::parse(text), core.solve()).assembly;
                channels = a.channels();
                port = output_port(a, out_name);
            } else {
                const auto kind = model::gate_kind_from_string(gate_kind);
                const auto om = out_mode.empty() ? model::default_output_mode(kind) : mode_arg(out_mode);
                a = model::build_gate(kind, mode_arg(muscle_mode), om, core.solve());
                channels = {"in1", "in2"};
            }
            const auto t = analysis::truth_table(a, channels, settle, tt_trials, p, port);
            return common.json ? dump(t.to_json()) : t.to_csv();
        };
    });

    // freq-response
    std::vector<int> units_list;
    std::vector<double> freqs{5.0, 0.5, 0.05};
    double warmup = 10.0;
    auto* fr = app.add_subcommand("freq-response", "RMSD of the two-gate relay against a square drive");
    add_common(fr, common);
    add_sim(fr, sim);
    add_core(fr, core);
    fr->add_option("--units-list", units_list, "Connector lengths")->delimiter(',')->check(CLI::PositiveNumber);
    fr->add_option("--freqs", freqs, "Drive frequencies in 1/t0")->delimiter(',')->check(CLI::PositiveNumber);
    fr->add_option("--warmup", warmup, "Hold time before the drive starts, t0")->check(CLI::NonNegativeNumber);
    fr->callback([&] {
        const auto p = sim.params(common.seed);
        if (units_list.empty()) units_list = {5};
        run = [&, p] {
            const auto c = core.solve();
            std::vector<analysis::FrequencyResponse> out;
            for (int u : units_list) out.push_back(analysis::freq_response(u, freqs, p, c, warmup));
            return common.json ? dump(analysis::to_json(out)) : analysis::to_csv(out);
        };
    });

    // attenuation
    std::vector<double> tolerances{0.0, 0.02, 0.05};
    analysis::AttenuationOptions att;
    auto* at = app.add_subcommand("attenuation", "Stage statistics along a connector");
    add_common(at, common);
    add_sim(at, sim);
    add_core(at, core);
    at->add_option("--units-list", units_list, "Connector lengths")->delimiter(',')->check(CLI::PositiveNumber);
    at->add_option("--tolerances", tolerances, "Joint tolerances in sigma")
        ->delimiter(',')
        ->check(CLI::NonNegativeNumber);
    at->add_option("--trials", at_trials, "Trials per tolerance")->check(CLI::Range(2, 1 << 20));
    at->add_option("--settle", att.settle, "Settling time in t0")->check(CLI::NonNegativeNumber);
    at->add_option("--window", att.window, "Sampling window in t0")->check(CLI::PositiveNumber);
    at->callback([&] {
        const auto p = sim.params(common.seed);
        if (units_list.empty()) units_list = {10};
        run = [&, p] {
            const auto c = core.solve();
            std::vector<analysis::AttenuationStats> out;
            for (int u : units_list)
                for (double tol : tolerances) out.push_back(analysis::signal_attenuation(u, tol, at_trials, p, c, att));
            return common.json ? dump(analysis::to_json(out)) : analysis::to_csv(out);
        };
    });

    // tetris
    std::string input;
    auto* te = app.add_subcommand("tetris", "Fold the robot skeleton for its inputs");
    add_common(te, common);
    add_sim(te, sim);
    add_core(te, core);
    te->add_option("--duration", tetris_duration, "Simulated time per input in t0")->check(CLI::PositiveNumber);
    te->add_option("--input", input, "Input bits yb (default: all four)")
        ->check(CLI::IsMember({"00", "01", "10", "11"}));
    te->callback([&] {
        const auto p = sim.params(common.seed);
        run = [&, p] {
            const auto choice = model::TetrisChoice::default_choice();
            const auto robot = model::build_tetris_robot(choice, core.solve());
            std::vector<std::pair<int, int>> inputs;
            if (input.empty())
                inputs = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
            else
                inputs = {{input[0] - '0', input[1] - '0'}};
            std::vector<analysis::TetrisReading> readings(inputs.size());
            analysis::parallel_for(inputs.size(), [&](std::size_t i) {
                readings[i] = analysis::tetris_run(robot, inputs[i].first, inputs[i].second, tetris_duration, p);
            });
            if (common.json) {
                nlohmann::json j = nlohmann::json::array();
                for (const auto& r : readings)
                    j.push_back({{"y", r.y}, {"b", r.b}, {"label", r.label}, {"dofs", r.dofs}, {"min_margin", r.min_margin}});
                return dump(j);
            }
            std::string out = "y,b,label,dofs,min_margin\n";
            for (const auto& r : readings) {
                std::string bits;
                for (int d : r.dofs) bits += char('0' + d);
                out += std::to_string(r.y) + "," + std::to_string(r.b) + "," + r.label + "," + bits + "," +
                       format_number(r.min_margin) + "\n";
            }
            return out;
        };
    });

    // estimates
    auto* es = app.add_subcommand("estimates", "Thermal to binding energy ratios at three scales");
    add_common(es, common);
    es->callback([&] {
        run = [&] {
            const auto rows = analysis::scale_estimates();
            return common.json ? dump(analysis::to_json(rows)) : analysis::to_csv(rows);
        };
    });

    try {
        app.parse(argc, argv);
        check_out_path(common.out);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "UsageError: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "UsageError: " << e.what() << "\n";
        return 2;
    }

    if (common.units) {
        std::cout << kUnits;
        return 0;
    }

    try {
        emit(common.out, run());
    } catch (const UsageError& e) {
        std::cerr << "UsageError: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << e.name() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "Error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
