#include "mlc/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>

#include "mlc/errors.hpp"
#include "mlc/format.hpp"

namespace mlc::netlist {

namespace {

struct Token {
    std::string text;
    std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == '#') break;
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (line.substr(i, 2) == "->") {
            out.push_back({"->", i + 1});
            i += 2;
            continue;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '#' &&
               line.substr(i, 2) != "->")
            ++i;
        out.push_back({std::string(line.substr(start, i - start)), start + 1});
    }
    return out;
}

bool is_ident(std::string_view s, bool allow_dot) {
    if (s.empty()) return false;
    auto head = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    if (!head(s[0])) return false;
    for (char c : s.substr(1))
        if (!(head(c) || std::isdigit(static_cast<unsigned char>(c)) || (allow_dot && c == '.'))) return false;
    return true;
}

std::optional<double> to_double(std::string_view s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<int> to_int(std::string_view s) {
    int v = 0;
    if (s.empty() || !std::isdigit(static_cast<unsigned char>(s[0]))) return std::nullopt;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

struct Pending {
    model::Endpoint end;
    std::size_t line, column, port_column;
};

class LineParser {
public:
    LineParser(std::vector<Token> toks, std::size_t line, std::size_t end_column)
        : toks_(std::move(toks)), line_(line), end_column_(end_column) {}

    const Token& next(const std::string& expected) {
        if (pos_ >= toks_.size()) throw SyntaxError(line_, end_column_, expected);
        return toks_[pos_++];
    }
    bool at_end() const { return pos_ >= toks_.size(); }
    const Token* peek() const { return pos_ < toks_.size() ? &toks_[pos_] : nullptr; }

    void keyword(const std::string& word) {
        const auto& t = next("'" + word + "'");
        if (t.text != word) fail(t, "'" + word + "'");
    }
    const Token& ident(const std::string& what, bool allow_dot = false) {
        const auto& t = next(what);
        if (!is_ident(t.text, allow_dot)) fail(t, what);
        return t;
    }
    template <class T>
    T choice(const std::vector<std::pair<std::string, T>>& options, const std::string& what) {
        const auto& t = next(what);
        for (const auto& [w, v] : options)
            if (t.text == w) return v;
        fail(t, what);
    }
    int positive_int(const std::string& what) {
        const auto& t = next(what);
        const auto v = to_int(t.text);
        if (!v || *v < 1) fail(t, what);
        return *v;
    }
    double number(const std::string& what, bool (*ok)(double)) {
        const auto& t = next(what);
        const auto v = to_double(t.text);
        if (!v || !ok(*v)) fail(t, what);
        return *v;
    }
    void end() {
        if (!at_end()) fail(toks_[pos_], "end of line");
    }
    [[noreturn]] void fail(const Token& t, const std::string& expected) const {
        throw SyntaxError(line_, t.column, expected);
    }
    std::size_t line() const { return line_; }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::size_t line_, end_column_;
};

const std::vector<std::pair<std::string, model::MuscleMode>> kModes = {
    {"expand", model::MuscleMode::Expand}, {"contract", model::MuscleMode::Contract}};
const std::vector<std::pair<std::string, model::GateKind>> kKinds = {
    {"AND", model::GateKind::AND}, {"OR", model::GateKind::OR}, {"NAND", model::GateKind::NAND},
    {"NOR", model::GateKind::NOR}};
const std::vector<std::pair<std::string, int>> kBits = {{"0", 0}, {"1", 1}};

dynamics::Waveform parse_wave(LineParser& lp) {
    const auto& kind = lp.next("waveform (square, step, const)");
    if (kind.text == "square") {
        lp.keyword("period");
        const double period = lp.number("positive period", [](double v) { return v > 0; });
        lp.keyword("duty");
        const double duty = lp.number("duty in (0, 1)", [](double v) { return v > 0 && v < 1; });
        return dynamics::Waveform::square(period, duty);
    }
    if (kind.text == "const") return dynamics::Waveform::constant(lp.choice(kBits, "state 0 or 1"));
    if (kind.text == "step") {
        std::vector<std::pair<double, int>> steps;
        do {
            const auto& t = lp.next("<time>:<0|1>");
            const auto colon = t.text.find(':');
            if (colon == std::string::npos) lp.fail(t, "<time>:<0|1>");
            const auto time = to_double(std::string_view(t.text).substr(0, colon));
            const std::string state = t.text.substr(colon + 1);
            if (!time) lp.fail(t, "step time");
            if (state != "0" && state != "1") throw SyntaxError(lp.line(), t.column + colon + 1, "state 0 or 1");
            if (!steps.empty() && !(*time > steps.back().first)) lp.fail(t, "strictly increasing step time");
            steps.emplace_back(*time, state == "1" ? 1 : 0);
        } while (!lp.at_end());
        return dynamics::Waveform::step(std::move(steps));
    }
    lp.fail(kind, "waveform (square, step, const)");
}

bool port_exists(const model::CircuitPlan& plan, const std::string& id, const std::string& port) {
    for (const auto& m : plan.muscles)
        if (m.id == id) return port == "out";
    for (const auto& g : plan.gates)
        if (g.id == id) return port == "in1" || port == "in2" || port == "out";
    for (const auto& c : plan.connectors)
        if (c.id == id) return port == "in" || port == "out";
    for (const auto& s : plan.skeletons)
        if (s.id == id) {
            if (port.rfind("dof", 0) != 0) return false;
            const auto k = to_int(std::string_view(port).substr(3));
            return k && *k < 2 * s.units && std::to_string(*k) == port.substr(3);
        }
    return false;
}

}  // namespace

CircuitSpec parse(std::string_view text) {
    CircuitSpec spec;
    auto& plan = spec.plan;
    std::map<std::string, std::size_t> ids;  // instance -> declaring line
    std::map<std::string, std::size_t> scheduled;
    std::vector<Pending> pending;

    std::size_t line_no = 0, pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string_view line = text.substr(pos, eol - pos);
        ++line_no;
        pos = eol + 1;

        auto toks = tokenize(line);
        if (toks.empty()) continue;
        std::size_t end_col = line.size() + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) end_col = hash + 1;
        LineParser lp(std::move(toks), line_no, end_col);

        auto declare = [&](const Token& t) {
            if (!ids.emplace(t.text, line_no).second)
                throw DuplicateIdAt(line_no, t.column, "'" + t.text + "' is already declared");
        };

        const auto& head = lp.next("statement");
        if (head.text == "muscle") {
            const auto& id = lp.ident("identifier");
            declare(id);
            lp.keyword("mode");
            const auto mode = lp.choice(kModes, "'expand' or 'contract'");
            lp.keyword("channel");
            const auto& ch = lp.ident("channel name", true);
            plan.muscles.push_back({id.text, mode, ch.text});
        } else if (head.text == "gate") {
            const auto& id = lp.ident("identifier");
            declare(id);
            lp.keyword("kind");
            model::GateDecl g{id.text, lp.choice(kKinds, "gate kind (AND, OR, NAND, NOR)"), std::nullopt};
            if (!lp.at_end()) {
                lp.keyword("out_mode");
                g.out_mode = lp.choice(kModes, "'expand' or 'contract'");
            }
            plan.gates.push_back(g);
        } else if (head.text == "connector") {
            const auto& id = lp.ident("identifier");
            declare(id);
            lp.keyword("units");
            model::ConnectorDecl c{id.text, lp.positive_int("positive unit count"), 0.0};
            if (!lp.at_end()) {
                lp.keyword("tolerance");
                c.tolerance = lp.number("non-negative tolerance", [](double v) { return v >= 0; });
            }
            plan.connectors.push_back(c);
        } else if (head.text == "skeleton") {
            const auto& id = lp.ident("identifier");
            declare(id);
            lp.keyword("units");
            plan.skeletons.push_back({id.text, lp.positive_int("positive unit count")});
        } else if (head.text == "wire") {
            model::WireDecl w;
            for (int side = 0; side < 2; ++side) {
                if (side == 1) lp.keyword("->");
                const auto& t = lp.next("<instance>.<port>");
                const auto dot = t.text.find('.');
                if (dot == std::string::npos) lp.fail(t, "<instance>.<port>");
                const std::string inst = t.text.substr(0, dot), port = t.text.substr(dot + 1);
                if (!is_ident(inst, false)) lp.fail(t, "instance identifier");
                if (!is_ident(port, false)) throw SyntaxError(line_no, t.column + dot + 1, "port name");
                (side == 0 ? w.from : w.to) = {inst, port};
                pending.push_back({{inst, port}, line_no, t.column, t.column + dot + 1});
            }
            plan.wires.push_back(w);
        } else if (head.text == "schedule") {
            const auto& ch = lp.ident("channel name", true);
            if (!scheduled.emplace(ch.text, line_no).second)
                throw DuplicateIdAt(line_no, ch.column, "channel '" + ch.text + "' already has a schedule");
            spec.schedules.push_back({ch.text, parse_wave(lp)});
        } else {
            lp.fail(head, "statement (muscle, gate, connector, skeleton, wire, schedule)");
        }
        lp.end();
    }

    for (const auto& p : pending) {
        if (!ids.count(p.end.instance))
            throw UnknownReference(p.line, p.column, "no instance named '" + p.end.instance + "'");
        if (!port_exists(plan, p.end.instance, p.end.port))
            throw UnknownReference(p.line, p.port_column,
                                   "'" + p.end.instance + "' has no port '" + p.end.port + "'");
    }
    return spec;
}

std::string print(const CircuitSpec& spec) {
    const auto& plan = spec.plan;
    std::string out;
    for (const auto& m : plan.muscles)
        out += "muscle " + m.id + " mode " + model::to_string(m.mode) + " channel " + m.channel + "\n";
    for (const auto& g : plan.gates) {
        out += "gate " + g.id + " kind " + model::to_string(g.kind);
        if (g.out_mode) out += " out_mode " + model::to_string(*g.out_mode);
        out += "\n";
    }
    for (const auto& c : plan.connectors) {
        out += "connector " + c.id + " units " + std::to_string(c.units);
        if (c.tolerance != 0) out += " tolerance " + format_number(c.tolerance);
        out += "\n";
    }
    for (const auto& s : plan.skeletons) out += "skeleton " + s.id + " units " + std::to_string(s.units) + "\n";
    for (const auto& w : plan.wires)
        out += "wire " + w.from.instance + "." + w.from.port + " -> " + w.to.instance + "." + w.to.port + "\n";
    for (const auto& s : spec.schedules) {
        out += "schedule " + s.channel;
        switch (s.wave.kind) {
            case dynamics::WaveKind::Square:
                out += " square period " + format_number(s.wave.period) + " duty " + format_number(s.wave.duty);
                break;
            case dynamics::WaveKind::Step:
                out += " step";
                for (const auto& [t, v] : s.wave.steps) out += " " + format_number(t) + ":" + std::to_string(v);
                break;
            case dynamics::WaveKind::Constant: out += " const " + std::to_string(s.wave.state); break;
        }
        out += "\n";
    }
    return out;
}

Elaborated elaborate(const CircuitSpec& spec, const geometry::CoreGeometry& core) {
    Elaborated e;
    e.assembly = model::build_circuit(spec.plan, core);
    const auto channels = e.assembly.channels();
    for (const auto& s : spec.schedules) {
        if (std::find(channels.begin(), channels.end(), s.channel) == channels.end())
            throw UnboundChannel("schedule for '" + s.channel + "' binds to no muscle channel");
        e.schedule.channels[s.channel] = s.wave;
    }
    e.schedule.validate();
    return e;
}

}  // namespace mlc::netlist
