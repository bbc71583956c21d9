#include "selfsim/config.hpp"

#include "selfsim/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace selfsim {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kSchema = {
    {"problem", {"kind", "k", "rho0", "xi_s", "unit_jump_speed", "surface_density"}},
    {"eos", {"family", "gamma", "s", "q", "rho_ref", "lambda", "p0", "table"}},
    {"exponents", {"alpha", "beta", "free"}},
    {"solver",
     {"tol_alpha", "delta_stop", "eps", "h_jump", "xi_max_factor", "rtol", "atol", "mode", "scan_points", "bracket",
      "secant", "threads", "approach_tol", "tol_n", "max_iterations", "h_max_rel"}},
    {"grid", {"r_min", "r_max", "r_points", "t"}},
    {"output", {"dir", "format", "plot"}},
};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d))
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, v));
    }
}

int to_int(const std::string& key, const std::string& v)
{
    const double d = to_double(key, v);
    if (d != std::floor(d) || std::abs(d) > 1e9)
        throw ConfigError(fmt::format("{}: '{}' is not an integer", key, v));
    return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "yes" || v == "on" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "off" || v == "0")
        return false;
    throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, v));
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

void require_positive(const std::string& key, double v)
{
    if (!(v > 0.0))
        throw ConfigError(fmt::format("{} must be positive", key));
}

// Looks up values and remembers which ones were given.
class Section {
public:
    Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    std::optional<std::string> raw(const std::string& key) const
    {
        if (!tree_)
            return std::nullopt;
        const auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v)
            return std::nullopt;
        return trim(*v);
    }
    std::string full(const std::string& key) const { return name_ + "." + key; }
    double number(const std::string& key, double def) const
    {
        const auto v = raw(key);
        return v ? to_double(full(key), *v) : def;
    }
    std::optional<double> number(const std::string& key) const
    {
        const auto v = raw(key);
        if (!v)
            return std::nullopt;
        return to_double(full(key), *v);
    }
    int integer(const std::string& key, int def) const
    {
        const auto v = raw(key);
        return v ? to_int(full(key), *v) : def;
    }
    bool boolean(const std::string& key, bool def) const
    {
        const auto v = raw(key);
        return v ? to_bool(full(key), *v) : def;
    }
    std::string text(const std::string& key, const std::string& def) const { return raw(key).value_or(def); }

private:
    const pt::ptree* tree_;
    std::string name_;
};

std::vector<std::pair<double, double>> parse_table(const std::string& key, const std::string& v)
{
    std::vector<std::pair<double, double>> rows;
    for (const auto& item : split(v, ',')) {
        if (item.empty())
            continue;
        std::istringstream in(item);
        std::string a, b, extra;
        if (!(in >> a >> b) || (in >> extra))
            throw ConfigError(fmt::format("{}: entry '{}' is not a 'x y' pair", key, item));
        rows.emplace_back(to_double(key, a), to_double(key, b));
    }
    if (rows.size() < 2)
        throw ConfigError(key + ": a table needs at least two rows");
    return rows;
}

struct EosSettings {
    std::string family;
    double gamma = 1.4, s = 0, q = 0, rho_ref = 1, lambda = 0, p0 = 0;
    std::vector<std::pair<double, double>> table;
};

EosModel build_eos(const EosSettings& e)
{
    try {
        if (e.family == "ideal")
            return EosModel::ideal_gamma(e.gamma, e.p0);
        if (e.family == "pseudo_mg") {
            if (e.p0 != 0.0)
                throw ConfigError("eos.p0 must be 0 for pseudo_mg");
            return EosModel::pseudo_mie_gruneisen(e.s, e.q, e.rho_ref);
        }
        std::vector<double> x, y;
        for (const auto& [a, b] : e.table) {
            x.push_back(a);
            y.push_back(b);
        }
        if (e.family == "density" || e.family == "tabulated") {
            if (e.table.empty())
                throw ConfigError("eos.table is required for a tabulated density family");
            return EosModel::tabulated(x, y, e.p0);
        }
        if (e.family == "power_law") {
            if (e.table.empty()) {
                const double g = e.gamma;
                return EosModel::power_law_scaled(e.lambda, [g](double) { return g; }, {}, [](double) { return 0.0; },
                                                  e.p0);
            }
            auto table = std::make_shared<MonotoneCubic>(x, y);
            auto g = [table](double z) {
                if (z < table->x_min() || z > table->x_max())
                    throw DomainError("power-law EOS argument outside the table");
                return (*table)(z);
            };
            auto dg = [table](double z) { return table->derivative(z); };
            return EosModel::power_law_scaled(e.lambda, g, {}, dg, e.p0);
        }
        if (e.family == "general") {
            // Only the family matters for classification; no scaling solution exists.
            const double g = e.gamma;
            return EosModel::general([g](double, double) { return g; }, {}, e.p0);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("eos: ") + ex.what());
    }
    throw ConfigError("eos.family: unknown family '" + e.family + "'");
}

struct Parsed {
    EosSettings eos;
    std::string free = "auto";
};

} // namespace

std::uint64_t fnv1a64(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::pair<double, double> parse_bracket(const std::string& s)
{
    const auto parts = split(s, ',');
    if (parts.size() != 2)
        throw ConfigError("bracket must be 'lo,hi'");
    const double lo = to_double("bracket", parts[0]), hi = to_double("bracket", parts[1]);
    if (!(lo < hi))
        throw ConfigError("bracket must satisfy lo < hi");
    return {lo, hi};
}

RunConfig parse_config(const std::string& text)
{
    // '#' comment lines are accepted in addition to ';'.
    std::string cleaned;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            const auto t = trim(line);
            if (!t.empty() && t[0] == '#')
                continue;
            cleaned += line + "\n";
        }
    }
    pt::ptree tree;
    try {
        std::istringstream in(cleaned);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("malformed config (line {}): {}", e.line(), e.message()));
    }
    for (const auto& [name, sec] : tree) {
        const auto it = kSchema.find(name);
        if (it == kSchema.end()) {
            if (sec.empty())
                throw ConfigError("key '" + name + "' outside of any section");
            throw ConfigError("unknown section [" + name + "]");
        }
        for (const auto& [key, val] : sec) {
            if (!it->second.count(key))
                throw ConfigError("unknown key " + name + "." + key);
            if (!val.empty())
                throw ConfigError("nested value under " + name + "." + key);
        }
    }
    auto section = [&](const std::string& name) {
        const auto c = tree.get_child_optional(name);
        return Section(c ? &*c : nullptr, name);
    };

    RunConfig cfg;
    Parsed extra;

    const auto problem = section("problem");
    const auto kind = problem.raw("kind");
    if (!kind)
        throw ConfigError("problem.kind is required");
    try {
        cfg.spec.kind = problem_kind_from_string(*kind);
    } catch (const std::exception&) {
        throw ConfigError("problem.kind must be cavity or shock");
    }
    cfg.spec.k = problem.integer("k", 2);
    cfg.spec.rho0 = problem.number("rho0", 1.0);
    cfg.spec.xi_s = problem.number("xi_s", 1.0);
    cfg.spec.unit_jump_speed = problem.boolean("unit_jump_speed", false);
    cfg.spec.surface_density = problem.number("surface_density", 1.0);

    const auto eos = section("eos");
    const auto fam = eos.raw("family");
    if (!fam)
        throw ConfigError("eos.family is required");
    extra.eos.family = *fam;
    extra.eos.gamma = eos.number("gamma", 1.4);
    extra.eos.s = eos.number("s", 0.0);
    extra.eos.q = eos.number("q", 0.0);
    extra.eos.rho_ref = eos.number("rho_ref", 1.0);
    extra.eos.lambda = eos.number("lambda", 0.0);
    extra.eos.p0 = eos.number("p0", 0.0);
    if (const auto t = eos.raw("table"))
        extra.eos.table = parse_table("eos.table", *t);
    if (extra.eos.family == "pseudo_mg" && (!eos.raw("s") || !eos.raw("q")))
        throw ConfigError("pseudo_mg needs eos.s and eos.q");
    cfg.spec.eos = build_eos(extra.eos);

    const auto ex = section("exponents");
    cfg.spec.exponents.alpha = ex.number("alpha", 0.0);
    cfg.spec.exponents.beta = ex.number("beta", 0.0);
    extra.free = ex.text("free", "auto");
    if (extra.free == "alpha")
        cfg.solver.free = FreeParameter::Alpha;
    else if (extra.free == "beta")
        cfg.solver.free = FreeParameter::Beta;
    else if (extra.free != "auto")
        throw ConfigError("exponents.free must be alpha, beta or auto");

    const auto so = section("solver");
    auto& o = cfg.solver;
    o.tol_alpha = so.number("tol_alpha", o.tol_alpha);
    o.delta_stop = so.number("delta_stop", o.delta_stop);
    o.eps = so.number("eps", o.eps);
    o.h_jump = so.number("h_jump", o.h_jump);
    o.xi_max_factor = so.number("xi_max_factor", o.xi_max_factor);
    o.rtol = so.number("rtol", o.rtol);
    o.atol = so.number("atol", o.atol);
    o.approach_tol = so.number("approach_tol", o.approach_tol);
    o.tol_N = so.number("tol_n", o.tol_N);
    o.h_max_rel = so.number("h_max_rel", o.h_max_rel);
    o.scan_points = so.integer("scan_points", o.scan_points);
    o.max_iterations = so.integer("max_iterations", o.max_iterations);
    o.secant = so.boolean("secant", o.secant);
    const int threads = so.integer("threads", 0);
    if (threads < 0)
        throw ConfigError("solver.threads must be >= 0");
    o.threads = static_cast<unsigned>(threads);
    try {
        o.mode = integration_mode_from_string(so.text("mode", to_string(o.mode)));
    } catch (const std::exception&) {
        throw ConfigError("solver.mode must be direct or desingularized");
    }
    if (const auto b = so.raw("bracket"))
        cfg.bracket = parse_bracket(*b);

    const auto gr = section("grid");
    cfg.grid.r_min = gr.number("r_min", cfg.grid.r_min);
    cfg.grid.r_max = gr.number("r_max", cfg.grid.r_max);
    cfg.grid.r_points = gr.integer("r_points", cfg.grid.r_points);
    if (const auto t = gr.raw("t")) {
        cfg.grid.t.clear();
        for (const auto& item : split(*t, ','))
            if (!item.empty())
                cfg.grid.t.push_back(to_double("grid.t", item));
    }

    const auto out = section("output");
    cfg.output.dir = out.text("dir", cfg.output.dir);
    cfg.output.format = out.text("format", cfg.output.format);
    cfg.output.plot = out.boolean("plot", cfg.output.plot);

    // Validation.
    if (cfg.spec.k != 1 && cfg.spec.k != 2)
        throw ConfigError("problem.k must be 1 or 2");
    require_positive("problem.rho0", cfg.spec.rho0);
    require_positive("problem.xi_s", cfg.spec.xi_s);
    require_positive("problem.surface_density", cfg.spec.surface_density);
    for (const auto& [k, v] : {std::pair<const char*, double>{"solver.tol_alpha", o.tol_alpha},
                               {"solver.delta_stop", o.delta_stop},
                               {"solver.eps", o.eps},
                               {"solver.h_jump", o.h_jump},
                               {"solver.xi_max_factor", o.xi_max_factor},
                               {"solver.rtol", o.rtol},
                               {"solver.atol", o.atol},
                               {"solver.approach_tol", o.approach_tol},
                               {"solver.tol_n", o.tol_N},
                               {"solver.h_max_rel", o.h_max_rel}})
        require_positive(k, v);
    if (o.tol_alpha < 1e-12)
        throw ConfigError("solver.tol_alpha must be at least 1e-12");
    if (o.xi_max_factor <= 1.0)
        throw ConfigError("solver.xi_max_factor must exceed 1");
    if (o.scan_points < 2)
        throw ConfigError("solver.scan_points must be at least 2");
    if (o.max_iterations < 1)
        throw ConfigError("solver.max_iterations must be positive");
    require_positive("grid.r_min", cfg.grid.r_min);
    if (!(cfg.grid.r_max >= cfg.grid.r_min))
        throw ConfigError("grid.r_max must not be below grid.r_min");
    if (cfg.grid.r_points < 0)
        throw ConfigError("grid.r_points must be >= 0");
    for (double t : cfg.grid.t)
        if (!(t < 0.0))
            throw ConfigError("grid.t entries must be negative (pre-focus times)");
    if (cfg.output.format != "csv" && cfg.output.format != "json")
        throw ConfigError("output.format must be csv or json");
    if (cfg.output.dir.empty())
        throw ConfigError("output.dir must not be empty");
    try {
        cfg.spec.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    // Canonical echo.
    std::string table;
    for (std::size_t i = 0; i < extra.eos.table.size(); ++i)
        table += fmt::format("{}{} {}", i ? ", " : "", num(extra.eos.table[i].first), num(extra.eos.table[i].second));
    std::string ts;
    for (std::size_t i = 0; i < cfg.grid.t.size(); ++i)
        ts += (i ? "," : "") + num(cfg.grid.t[i]);
    std::vector<std::pair<std::string, std::string>> kv = {
        {"problem.kind", to_string(cfg.spec.kind)},
        {"problem.k", std::to_string(cfg.spec.k)},
        {"problem.rho0", num(cfg.spec.rho0)},
        {"problem.xi_s", num(cfg.spec.xi_s)},
        {"problem.unit_jump_speed", cfg.spec.unit_jump_speed ? "true" : "false"},
        {"problem.surface_density", num(cfg.spec.surface_density)},
        {"eos.family", extra.eos.family},
        {"eos.gamma", num(extra.eos.gamma)},
        {"eos.s", num(extra.eos.s)},
        {"eos.q", num(extra.eos.q)},
        {"eos.rho_ref", num(extra.eos.rho_ref)},
        {"eos.lambda", num(extra.eos.lambda)},
        {"eos.p0", num(extra.eos.p0)},
        {"eos.table", table},
        {"exponents.alpha", num(cfg.spec.exponents.alpha)},
        {"exponents.beta", num(cfg.spec.exponents.beta)},
        {"exponents.free", extra.free},
        {"solver.bracket", num(cfg.bracket.first) + "," + num(cfg.bracket.second)},
        {"grid.r_min", num(cfg.grid.r_min)},
        {"grid.r_max", num(cfg.grid.r_max)},
        {"grid.r_points", std::to_string(cfg.grid.r_points)},
        {"grid.t", ts},
        {"output.dir", cfg.output.dir},
        {"output.format", cfg.output.format},
        {"output.plot", cfg.output.plot ? "true" : "false"},
    };
    cfg.echo.clear();
    for (const auto& [k, v] : kv)
        cfg.echo += k + " = " + v + "\n";
    cfg.refresh_echo();
    return cfg;
}

void RunConfig::refresh_echo()
{
    // Solver and override-able settings are regenerated so CLI flags show up.
    std::string base;
    std::istringstream in(echo);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("solver.", 0) != 0 && line.rfind("problem.k ", 0) != 0)
            base += line + "\n";
    const auto& o = solver;
    std::vector<std::pair<std::string, std::string>> kv = {
        {"problem.k", std::to_string(spec.k)},
        {"solver.tol_alpha", num(o.tol_alpha)},
        {"solver.delta_stop", num(o.delta_stop)},
        {"solver.eps", num(o.eps)},
        {"solver.h_jump", num(o.h_jump)},
        {"solver.xi_max_factor", num(o.xi_max_factor)},
        {"solver.rtol", num(o.rtol)},
        {"solver.atol", num(o.atol)},
        {"solver.approach_tol", num(o.approach_tol)},
        {"solver.tol_n", num(o.tol_N)},
        {"solver.h_max_rel", num(o.h_max_rel)},
        {"solver.mode", to_string(o.mode)},
        {"solver.scan_points", std::to_string(o.scan_points)},
        {"solver.max_iterations", std::to_string(o.max_iterations)},
        {"solver.secant", o.secant ? "true" : "false"},
        {"solver.bracket", num(bracket.first) + "," + num(bracket.second)},
    };
    for (const auto& [k, v] : kv)
        base += k + " = " + v + "\n";
    // Stable order regardless of how the lines were assembled.
    std::vector<std::string> lines;
    std::istringstream in2(base);
    while (std::getline(in2, line))
        if (!line.empty())
            lines.push_back(line);
    std::sort(lines.begin(), lines.end());
    echo.clear();
    for (const auto& l : lines)
        echo += l + "\n";
    hash = fnv1a64(echo);
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace selfsim
