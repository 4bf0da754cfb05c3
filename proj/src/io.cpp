#include "qsed/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace qsed::io {

using nlohmann::json;

namespace {

/// Strict view of one JSON object: every key must be consumed.
class Fields {
public:
    Fields(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw CaseError(path_, "expected an object");
        }
    }

    std::string at(const std::string &key) const { return path_ + "." + key; }

    bool has(const std::string &key) const { return j_.contains(key); }

    const json &get(const std::string &key) {
        used_.insert(key);
        if (!j_.contains(key)) {
            throw CaseError(at(key), "missing required field");
        }
        return j_.at(key);
    }

    double number(const std::string &key) {
        const auto &v = get(key);
        if (!v.is_number()) {
            throw CaseError(at(key), "expected a number");
        }
        return v.get<double>();
    }

    double number(const std::string &key, double fallback) { return has(key) ? number(key) : fallback; }

    int integer(const std::string &key) {
        const auto &v = get(key);
        if (!v.is_number_integer()) {
            throw CaseError(at(key), "expected an integer");
        }
        return v.get<int>();
    }

    bool boolean(const std::string &key, bool fallback) {
        if (!has(key)) {
            return fallback;
        }
        const auto &v = get(key);
        if (!v.is_boolean()) {
            throw CaseError(at(key), "expected true or false");
        }
        return v.get<bool>();
    }

    std::string string(const std::string &key) {
        const auto &v = get(key);
        if (!v.is_string()) {
            throw CaseError(at(key), "expected a string");
        }
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string &key) {
        const auto &v = get(key);
        if (!v.is_array()) {
            throw CaseError(at(key), "expected an array of numbers");
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) {
                throw CaseError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    /// Array of objects, possibly absent.
    std::vector<std::pair<const json *, std::string>> objects(const std::string &key, bool required) {
        std::vector<std::pair<const json *, std::string>> out;
        if (!required && !has(key)) {
            return out;
        }
        const auto &v = get(key);
        if (!v.is_array()) {
            throw CaseError(at(key), "expected an array");
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            out.emplace_back(&v[i], at(key) + "[" + std::to_string(i) + "]");
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) {
                throw CaseError(at(it.key()), "unknown field");
            }
        }
    }

private:
    const json &j_;
    std::string path_;
    std::set<std::string> used_;
};

int bus_index(Fields &f, const std::string &key, std::size_t buses) {
    const int b = f.integer(key);
    if (b < 1 || static_cast<std::size_t>(b) > buses) {
        throw CaseError(f.at(key), "bus number " + std::to_string(b) + " outside 1.." + std::to_string(buses));
    }
    return b - 1;
}

uqae::NormalComponent component(Fields &f) {
    uqae::NormalComponent c;
    c.mean = f.number("mean_pu");
    c.stddev = f.number("stddev_pu");
    return c;
}

uqae::ErrorDistribution distribution(const json &j, const std::string &path) {
    Fields f(j, path);
    const auto kind = f.string("kind");
    uqae::ErrorDistribution d;
    if (kind == "normal") {
        d.components.push_back(component(f));
    } else if (kind == "mixture") {
        for (const auto &[cj, cp] : f.objects("components", true)) {
            Fields cf(*cj, cp);
            auto c = component(cf);
            c.weight = cf.number("weight");
            cf.finish();
            d.components.push_back(c);
        }
    } else {
        throw CaseError(f.at("kind"), "expected \"normal\" or \"mixture\", got \"" + kind + "\"");
    }
    f.finish();
    try {
        d.validate();
    } catch (const std::invalid_argument &e) {
        throw CaseError(path, e.what());
    }
    return d;
}

json component_json(const uqae::NormalComponent &c) {
    return json{{"mean_pu", c.mean}, {"stddev_pu", c.stddev}};
}

} // namespace

dispatch::DispatchCase parse_case(const std::string &text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error &e) {
        throw CaseError("$", std::string("parse error: ") + e.what());
    }
    Fields f(root, "$");
    const auto schema = f.string("schema");
    if (schema != kCaseSchema) {
        throw CaseError(f.at("schema"), "schema version \"" + schema + "\" is not \"" + kCaseSchema + "\"");
    }
    dispatch::DispatchCase dc;
    dc.name = f.string("name");
    dc.horizon = f.integer("horizon_h");
    dc.base_mva = f.number("base_mva", 100.0);

    for (const auto &[j, p] : f.objects("buses", true)) {
        Fields b(*j, p);
        dispatch::Bus bus;
        bus.name = b.string("name");
        bus.load_mw = b.numbers("load_mw");
        b.finish();
        dc.buses.push_back(std::move(bus));
    }
    const auto nb = dc.buses.size();
    for (const auto &[j, p] : f.objects("lines", false)) {
        Fields l(*j, p);
        dispatch::Line line;
        line.name = l.string("name");
        line.from = bus_index(l, "from_bus", nb);
        line.to = bus_index(l, "to_bus", nb);
        line.reactance_pu = l.number("reactance_pu");
        line.limit_mw = l.number("limit_mw");
        l.finish();
        dc.lines.push_back(std::move(line));
    }
    for (const auto &[j, p] : f.objects("generators", true)) {
        Fields g(*j, p);
        dispatch::Generator gen;
        gen.name = g.string("name");
        gen.bus = bus_index(g, "bus", nb);
        gen.p_min_mw = g.number("p_min_mw");
        gen.p_max_mw = g.number("p_max_mw");
        gen.ramp_mw_per_h = g.number("ramp_mw_per_h");
        gen.startup_cost = g.number("startup_cost_usd", 0.0);
        gen.no_load_cost = g.number("no_load_cost_usd_per_h", 0.0);
        gen.marginal_cost = g.number("marginal_cost_usd_per_mwh");
        gen.initially_on = g.boolean("initially_on", false);
        gen.must_run = g.boolean("must_run", false);
        if (g.has("initial_output_mw")) {
            gen.initial_output_mw = g.number("initial_output_mw");
        }
        g.finish();
        dc.generators.push_back(std::move(gen));
    }
    for (const auto &[j, p] : f.objects("storages", false)) {
        Fields s(*j, p);
        dispatch::Storage st;
        st.name = s.string("name");
        st.bus = bus_index(s, "bus", nb);
        st.energy_mwh = s.number("energy_mwh");
        st.soc_min = s.number("soc_min_frac", 0.0);
        st.soc_max = s.number("soc_max_frac", 1.0);
        st.charge_max_mw = s.number("charge_max_mw");
        st.discharge_max_mw = s.number("discharge_max_mw");
        st.charge_cost = s.number("charge_cost_usd_per_mwh", 0.0);
        st.discharge_cost = s.number("discharge_cost_usd_per_mwh", 0.0);
        st.round_trip_efficiency = s.number("round_trip_efficiency", 1.0);
        st.initial_soc = s.number("initial_soc_frac", 0.5);
        st.mode_binaries = s.boolean("mode_binaries", false);
        s.finish();
        dc.storages.push_back(std::move(st));
    }
    for (const auto &[j, p] : f.objects("res_units", false)) {
        Fields r(*j, p);
        dispatch::ResUnit res;
        res.name = r.string("name");
        res.bus = bus_index(r, "bus", nb);
        res.capacity_mw = r.number("capacity_mw");
        res.forecast_mw = r.numbers("forecast_mw");
        res.distribution = distribution(r.get("error"), r.at("error"));
        Fields e(r.get("encoding"), r.at("encoding"));
        res.encoding.n1 = e.integer("integer_bits");
        res.encoding.m1 = e.integer("fraction_bits");
        e.finish();
        try {
            res.encoding.validate();
        } catch (const std::invalid_argument &ex) {
            throw CaseError(r.at("encoding"), ex.what());
        }
        r.finish();
        dc.res_units.push_back(std::move(res));
    }
    f.finish();
    try {
        dc.validate();
    } catch (const std::invalid_argument &e) {
        throw CaseError("$", e.what());
    }
    return dc;
}

dispatch::DispatchCase load_case(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CaseError(path.string(), "cannot open case file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

std::string case_to_json(const dispatch::DispatchCase &dc) {
    json root;
    root["schema"] = kCaseSchema;
    root["name"] = dc.name;
    root["horizon_h"] = dc.horizon;
    root["base_mva"] = dc.base_mva;
    root["buses"] = json::array();
    for (const auto &b : dc.buses) {
        root["buses"].push_back({{"name", b.name}, {"load_mw", b.load_mw}});
    }
    root["lines"] = json::array();
    for (const auto &l : dc.lines) {
        root["lines"].push_back({{"name", l.name},
                                 {"from_bus", l.from + 1},
                                 {"to_bus", l.to + 1},
                                 {"reactance_pu", l.reactance_pu},
                                 {"limit_mw", l.limit_mw}});
    }
    root["generators"] = json::array();
    for (const auto &g : dc.generators) {
        json gj{{"name", g.name},
                {"bus", g.bus + 1},
                {"p_min_mw", g.p_min_mw},
                {"p_max_mw", g.p_max_mw},
                {"ramp_mw_per_h", g.ramp_mw_per_h},
                {"startup_cost_usd", g.startup_cost},
                {"no_load_cost_usd_per_h", g.no_load_cost},
                {"marginal_cost_usd_per_mwh", g.marginal_cost},
                {"initially_on", g.initially_on},
                {"must_run", g.must_run}};
        if (g.initial_output_mw) {
            gj["initial_output_mw"] = *g.initial_output_mw;
        }
        root["generators"].push_back(gj);
    }
    root["storages"] = json::array();
    for (const auto &s : dc.storages) {
        root["storages"].push_back({{"name", s.name},
                                    {"bus", s.bus + 1},
                                    {"energy_mwh", s.energy_mwh},
                                    {"soc_min_frac", s.soc_min},
                                    {"soc_max_frac", s.soc_max},
                                    {"charge_max_mw", s.charge_max_mw},
                                    {"discharge_max_mw", s.discharge_max_mw},
                                    {"charge_cost_usd_per_mwh", s.charge_cost},
                                    {"discharge_cost_usd_per_mwh", s.discharge_cost},
                                    {"round_trip_efficiency", s.round_trip_efficiency},
                                    {"initial_soc_frac", s.initial_soc},
                                    {"mode_binaries", s.mode_binaries}});
    }
    root["res_units"] = json::array();
    for (const auto &r : dc.res_units) {
        json err;
        if (r.distribution.is_normal()) {
            err = component_json(r.distribution.components.front());
            err["kind"] = "normal";
        } else {
            err["kind"] = "mixture";
            err["components"] = json::array();
            for (const auto &c : r.distribution.components) {
                auto cj = component_json(c);
                cj["weight"] = c.weight;
                err["components"].push_back(cj);
            }
        }
        root["res_units"].push_back({{"name", r.name},
                                     {"bus", r.bus + 1},
                                     {"capacity_mw", r.capacity_mw},
                                     {"forecast_mw", r.forecast_mw},
                                     {"error", err},
                                     {"encoding", {{"integer_bits", r.encoding.n1}, {"fraction_bits", r.encoding.m1}}}});
    }
    return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// CSV

namespace {

bool needs_quotes(const std::string &cell) {
    return cell.find_first_of(",\"\r\n") != std::string::npos;
}

void write_row(std::ostream &os, const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) {
            os << ',';
        }
        if (needs_quotes(cells[i])) {
            os << '"';
            for (char c : cells[i]) {
                if (c == '"') {
                    os << '"';
                }
                os << c;
            }
            os << '"';
        } else {
            os << cells[i];
        }
    }
    os << '\n';
}

} // namespace

void write_csv(std::ostream &os, const Table &t) {
    write_row(os, t.header);
    for (const auto &r : t.rows) {
        if (r.size() != t.header.size()) {
            throw std::invalid_argument("write_csv: row width differs from header");
        }
        write_row(os, r);
    }
}

std::string to_csv(const Table &t) {
    std::ostringstream os;
    write_csv(os, t);
    return os.str();
}

Table parse_csv(std::istream &is) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool any = false;
    char c;
    while (is.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (is.peek() == '"') {
                    is.get();
                    cell += '"';
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n') {
            row.push_back(std::move(cell));
            cell.clear();
            records.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            cell += c;
        }
    }
    if (quoted) {
        throw std::runtime_error("parse_csv: unterminated quoted cell");
    }
    if (any) {
        row.push_back(std::move(cell));
        records.push_back(std::move(row));
    }
    Table t;
    if (records.empty()) {
        throw std::runtime_error("parse_csv: missing header");
    }
    t.header = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() != t.header.size()) {
            throw std::runtime_error("parse_csv: line " + std::to_string(i + 1) + " has " +
                                     std::to_string(records[i].size()) + " cells, header has " +
                                     std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(records[i]));
    }
    return t;
}

Table parse_csv(const std::string &text) {
    std::istringstream is(text);
    return parse_csv(is);
}

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (v == 0.0) {
        v = 0.0; // drop the sign of -0
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string &s) {
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    return v;
}

std::string bit_string(const Bits &bits) {
    std::string s;
    for (auto b : bits) {
        s += b ? '1' : '0';
    }
    return s;
}

Table scenario_table(const dispatch::DispatchCase &dc, const uqae::ScenarioSet &set) {
    Table t;
    t.header.push_back("scenario");
    for (const auto &r : dc.res_units) {
        t.header.push_back(r.name + "_error_pu");
    }
    t.header.push_back("weight");
    for (std::size_t s = 0; s < set.scenarios.size(); ++s) {
        std::vector<std::string> row{std::to_string(s)};
        for (double e : set.scenarios[s].errors) {
            row.push_back(format_number(e));
        }
        row.push_back(format_number(set.scenarios[s].weight));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table histogram_table(const dispatch::DispatchCase &dc, const uqae::ScenarioSet &set) {
    Table t;
    t.header = {"res", "index", "value", "weight"};
    for (std::size_t r = 0; r < set.per_res_values.size(); ++r) {
        for (std::size_t i = 0; i < set.per_res_values[r].size(); ++i) {
            t.rows.push_back({dc.res_units[r].name, std::to_string(i), format_number(set.per_res_values[r][i]),
                              format_number(set.per_res_weights[r][i])});
        }
    }
    return t;
}

Table trace_table(const benders::BendersResult &r) {
    Table t;
    t.header = {"iteration",        "lower",          "upper",      "trial",
                "trial_feasible",   "optimality_cuts", "aggregates", "feasibility_new",
                "feasibility_total", "feasibility_selected", "master", "qubo_dimension"};
    for (const auto &rec : r.trace) {
        t.rows.push_back({std::to_string(rec.iteration), format_number(rec.lower), format_number(rec.upper),
                          bit_string(rec.trial), rec.trial_feasible ? "1" : "0",
                          std::to_string(rec.optimality_cuts), std::to_string(rec.aggregates),
                          std::to_string(rec.feasibility_new), std::to_string(rec.feasibility_total),
                          std::to_string(rec.feasibility_selected), rec.master_backend,
                          std::to_string(rec.qubo_dimension)});
    }
    return t;
}

Table schedule_table(const dispatch::DispatchCase &dc, const dispatch::ScheduleReport &rep) {
    Table t;
    t.header = {"quantity", "device", "hour", "value"};
    auto emit = [&](const char *quantity, const std::vector<std::vector<double>> &values, auto name_of) {
        for (std::size_t d = 0; d < values.size(); ++d) {
            for (std::size_t h = 0; h < values[d].size(); ++h) {
                t.rows.push_back({quantity, name_of(d), std::to_string(h), format_number(values[d][h])});
            }
        }
    };
    std::vector<std::vector<double>> commit;
    for (const auto &row : rep.commitment) {
        commit.emplace_back(row.begin(), row.end());
    }
    auto gen = [&](std::size_t i) { return dc.generators[i].name; };
    auto sto = [&](std::size_t i) { return dc.storages[i].name; };
    auto res = [&](std::size_t i) { return dc.res_units[i].name; };
    auto line = [&](std::size_t i) { return dc.lines[i].name; };
    emit("commitment", commit, gen);
    emit("output_mw", rep.output_mw, gen);
    emit("storage_mw", rep.storage_mw, sto);
    emit("soc_mwh", rep.soc_mwh, sto);
    emit("curtail_mw", rep.curtail_mw, res);
    emit("flow_mw", rep.flow_mw, line);
    return t;
}

void write_schedule_text(std::ostream &os, const dispatch::DispatchCase &dc,
                         const dispatch::ScheduleReport &rep) {
    const auto T = static_cast<std::size_t>(dc.horizon);
    auto hours = [&](const std::string &label) {
        os << std::left << std::setw(16) << label;
        for (std::size_t h = 0; h < T; ++h) {
            os << std::right << std::setw(10) << ("h" + std::to_string(h));
        }
        os << '\n';
    };
    auto line = [&](const std::string &label, const std::vector<double> &v) {
        os << std::left << std::setw(16) << label;
        for (double x : v) {
            os << std::right << std::setw(10) << std::fixed << std::setprecision(2) << x;
        }
        os << '\n';
    };
    os << "case " << dc.name << "\n\n";
    hours("commitment");
    for (std::size_t g = 0; g < rep.commitment.size(); ++g) {
        os << std::left << std::setw(16) << dc.generators[g].name;
        for (int u : rep.commitment[g]) {
            os << std::right << std::setw(10) << u;
        }
        os << '\n';
    }
    os << '\n';
    hours("output MW");
    for (std::size_t g = 0; g < rep.output_mw.size(); ++g) {
        line(dc.generators[g].name, rep.output_mw[g]);
    }
    if (!rep.storage_mw.empty()) {
        os << '\n';
        hours("storage MW");
        for (std::size_t s = 0; s < rep.storage_mw.size(); ++s) {
            line(dc.storages[s].name, rep.storage_mw[s]);
        }
        hours("SoC MWh");
        for (std::size_t s = 0; s < rep.soc_mwh.size(); ++s) {
            line(dc.storages[s].name, rep.soc_mwh[s]);
        }
    }
    if (!rep.curtail_mw.empty()) {
        os << '\n';
        hours("curtailed MW");
        for (std::size_t r = 0; r < rep.curtail_mw.size(); ++r) {
            line(dc.res_units[r].name, rep.curtail_mw[r]);
        }
    }
    os << '\n' << std::fixed << std::setprecision(4);
    os << "startup cost      " << rep.startup_cost << '\n';
    os << "no-load cost      " << rep.no_load_cost << '\n';
    os << "energy cost       " << rep.energy_cost << '\n';
    os << "storage cost      " << rep.storage_cost << '\n';
    os << "first stage       " << rep.first_stage_cost << '\n';
    os << "second stage      " << rep.second_stage_cost << '\n';
    os << "expected total    " << rep.total_cost << '\n';
    os.unsetf(std::ios::floatfield);
}

// ---------------------------------------------------------------------------
// Runs

void RunConfig::validate() const {
    if (case_path.empty()) {
        throw std::invalid_argument("run config: case path is empty");
    }
    if (!std::filesystem::exists(case_path)) {
        throw std::invalid_argument("run config: case file '" + case_path.string() + "' does not exist");
    }
    if (scenarios.kind == uqae::WeightMode::Sampled && scenarios.shots == 0) {
        throw std::invalid_argument("run config: sampled weights need at least one shot");
    }
    if (!(benders.epsilon >= 0.0)) {
        throw std::invalid_argument("run config: epsilon must be non-negative");
    }
    if (benders.max_iterations == 0) {
        throw std::invalid_argument("run config: iteration cap must be >= 1");
    }
    if (trials == 0) {
        throw std::invalid_argument("run config: robustness needs at least one trial");
    }
}

std::filesystem::path output_directory(const RunConfig &cfg) {
    if (const char *env = std::getenv("QSED_OUTPUT_DIR"); env && *env) {
        return env;
    }
    return cfg.output_dir;
}

OutputGuard::~OutputGuard() {
    if (committed_) {
        return;
    }
    for (const auto &f : files_) {
        std::error_code ec;
        std::filesystem::remove(f, ec);
    }
}

void OutputGuard::write(const std::filesystem::path &path, const std::string &content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    files_.push_back(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
}

SolveOutcome solve_case(const dispatch::DispatchCase &dc, const uqae::ScenarioMode &mode,
                        const benders::BendersConfig &cfg) {
    SolveOutcome out;
    const auto prog = dispatch::compile(dc);
    out.scenarios = uqae::generate_scenarios(dc.uncertainties(), mode);
    out.result = benders::run(prog, out.scenarios, cfg);
    if (out.result.z0.size() == prog.m && std::isfinite(out.result.objective)) {
        const auto eval = dispatch::evaluate_first_stage(prog, out.scenarios, out.result.z0);
        VectorXd mean = VectorXd::Zero(static_cast<Eigen::Index>(prog.n));
        for (std::size_t s = 0; s < eval.scenarios.size(); ++s) {
            mean += out.scenarios.scenarios[s].weight * eval.scenarios[s].x;
        }
        out.schedule = dispatch::decode_schedule(prog, out.result.z0, mean);
    }
    return out;
}

namespace {

void log_result(std::ostream &log, const std::string &label, const benders::BendersResult &r) {
    log << label << ": " << (r.converged ? "converged" : "not converged") << " (" << r.stop_reason << ") after "
        << r.iterations() << " iterations, objective " << format_number(r.objective) << ", lower bound "
        << format_number(r.lower) << ", z0 " << bit_string(r.z0) << '\n';
    for (const auto &n : r.notices) {
        log << "  note: " << n << '\n';
    }
}

template <class F>
int guarded(std::ostream &log, F &&body) {
    try {
        return body();
    } catch (const std::exception &e) {
        log << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace

int cmd_sample(const RunConfig &cfg, std::ostream &log) {
    return guarded(log, [&] {
        cfg.validate();
        const auto dc = load_case(cfg.case_path);
        const auto set = uqae::generate_scenarios(dc.uncertainties(), cfg.scenarios);
        const auto dir = output_directory(cfg);
        OutputGuard out;
        out.write(dir / "scenarios.csv", to_csv(scenario_table(dc, set)));
        out.write(dir / "histogram.csv", to_csv(histogram_table(dc, set)));
        out.commit();
        log << set.size() << " scenarios, total weight " << format_number(set.total_weight()) << '\n';
        return 0;
    });
}

int cmd_solve(const RunConfig &cfg, std::ostream &log) {
    return guarded(log, [&] {
        cfg.validate();
        const auto dc = load_case(cfg.case_path);
        const auto run = solve_case(dc, cfg.scenarios, cfg.benders);
        const auto dir = output_directory(cfg);
        OutputGuard out;
        out.write(dir / "trace.csv", to_csv(trace_table(run.result)));
        if (!run.result.z0.empty() || std::isfinite(run.result.objective)) {
            out.write(dir / "schedule.csv", to_csv(schedule_table(dc, run.schedule)));
            std::ostringstream text;
            write_schedule_text(text, dc, run.schedule);
            out.write(dir / "schedule.txt", text.str());
        }
        out.commit();
        log_result(log, benders::to_string(cfg.benders.master), run.result);
        return run.result.converged ? 0 : 1;
    });
}

int cmd_compare(const RunConfig &cfg, std::ostream &log) {
    return guarded(log, [&] {
        cfg.validate();
        const auto dc = load_case(cfg.case_path);
        auto ref_cfg = cfg.benders;
        ref_cfg.master = cfg.reference;
        const auto a = solve_case(dc, cfg.scenarios, cfg.benders).result;
        const auto b = solve_case(dc, cfg.scenarios, ref_cfg).result;
        Table t;
        t.header = {"backend", "objective", "lower", "iterations", "converged", "z0"};
        for (const auto *r : {&a, &b}) {
            const auto *name = benders::to_string(r == &a ? cfg.benders.master : cfg.reference);
            t.rows.push_back({name, format_number(r->objective), format_number(r->lower),
                              std::to_string(r->iterations()), r->converged ? "1" : "0", bit_string(r->z0)});
        }
        OutputGuard out;
        out.write(output_directory(cfg) / "compare.csv", to_csv(t));
        out.commit();
        log_result(log, benders::to_string(cfg.benders.master), a);
        log_result(log, benders::to_string(cfg.reference), b);
        const double delta = a.objective - b.objective;
        const bool agree = std::isfinite(delta) && std::abs(delta) <= cfg.compare_tolerance;
        log << "objective delta " << format_number(delta) << (agree ? " (within " : " (exceeds ")
            << format_number(cfg.compare_tolerance) << ")\n";
        return a.converged && b.converged && agree ? 0 : 1;
    });
}

int cmd_robustness(const RunConfig &cfg, std::ostream &log) {
    return guarded(log, [&] {
        cfg.validate();
        const auto dc = load_case(cfg.case_path);
        const std::size_t n = cfg.trials;
        std::vector<benders::BendersResult> runs(n);
        std::vector<std::uint64_t> seeds(n);
        unsigned workers = cfg.benders.threads ? cfg.benders.threads
                                               : std::max(1U, std::thread::hardware_concurrency());
        workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
        std::vector<std::exception_ptr> errors(workers);
        auto work = [&](unsigned w) {
            try {
                for (std::size_t i = w; i < n; i += workers) {
                    auto mode = cfg.scenarios;
                    auto bc = cfg.benders;
                    seeds[i] = uqae::split_seed(cfg.scenarios.seed, i);
                    mode.seed = seeds[i];
                    bc.qaoa.seed = uqae::split_seed(cfg.benders.qaoa.seed, i);
                    bc.anneal.seed = uqae::split_seed(cfg.benders.anneal.seed, i);
                    bc.threads = 1;
                    runs[i] = solve_case(dc, mode, bc).result;
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        };
        if (workers <= 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < workers; ++w) {
                pool.emplace_back(work, w);
            }
            for (auto &t : pool) {
                t.join();
            }
        }
        for (auto &e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
        Table t;
        t.header = {"trial", "seed", "objective", "iterations", "converged", "z0"};
        double sum = 0.0;
        bool all = true;
        for (std::size_t i = 0; i < n; ++i) {
            t.rows.push_back({std::to_string(i), std::to_string(seeds[i]), format_number(runs[i].objective),
                              std::to_string(runs[i].iterations()), runs[i].converged ? "1" : "0",
                              bit_string(runs[i].z0)});
            sum += runs[i].objective;
            all = all && runs[i].converged;
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto &r : runs) {
            ss += (r.objective - mean) * (r.objective - mean);
        }
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        OutputGuard out;
        out.write(output_directory(cfg) / "robustness.csv", to_csv(t));
        out.commit();
        log << n << " runs, mean objective " << format_number(mean) << ", sample standard deviation "
            << format_number(sd) << ", " << (all ? "all converged" : "some runs did not converge") << '\n';
        return all ? 0 : 1;
    });
}

} // namespace qsed::io
