#include "selfsim/cli.hpp"

#include "selfsim/config.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

namespace selfsim {

namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> out, format, bracket, profile;
    std::optional<int> k;
    std::optional<double> tol_alpha, r_min, r_max, t;
    std::optional<int> r_points;
    bool plot = false;
};

void add_common(CLI::App* sub, Flags& f)
{
    sub->add_option("--config", f.config, "run configuration")->required();
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--format", f.format, "data format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--plot", f.plot, "write SVG plots");
    sub->add_option("--k", f.k, "geometry (1 cylindrical, 2 spherical)")->check(CLI::IsMember({1, 2}));
    sub->add_option("--bracket", f.bracket, "search interval LO,HI");
    sub->add_option("--tol-alpha", f.tol_alpha, "eigenvalue tolerance");
}

void add_profile(CLI::App* sub, Flags& f)
{
    sub->add_option("--profile", f.profile, "profile file (default OUT/profile.csv)");
}

RunConfig effective_config(const Flags& f)
{
    auto cfg = load_config(f.config);
    if (f.out)
        cfg.output.dir = *f.out;
    if (f.format)
        cfg.output.format = *f.format;
    if (f.plot)
        cfg.output.plot = true;
    if (f.k)
        cfg.spec.k = *f.k;
    if (f.bracket)
        cfg.bracket = parse_bracket(*f.bracket);
    if (f.tol_alpha) {
        if (!(*f.tol_alpha >= 1e-12))
            throw ConfigError("--tol-alpha must be at least 1e-12");
        cfg.solver.tol_alpha = *f.tol_alpha;
    }
    if (f.r_min)
        cfg.grid.r_min = *f.r_min;
    if (f.r_max)
        cfg.grid.r_max = *f.r_max;
    if (f.r_points)
        cfg.grid.r_points = *f.r_points;
    if (f.t)
        cfg.grid.t = {*f.t};
    if (!(cfg.grid.r_min > 0.0) || !(cfg.grid.r_max >= cfg.grid.r_min) || cfg.grid.r_points < 0)
        throw ConfigError("grid must satisfy 0 < r_min <= r_max and r_points >= 0");
    for (double t : cfg.grid.t)
        if (!(t < 0.0))
            throw ConfigError("grid times must be negative");
    cfg.refresh_echo();
    return cfg;
}

std::string ext(const RunConfig& cfg) { return cfg.output.format == "json" ? ".json" : ".csv"; }

fs::path out_dir(const RunConfig& cfg)
{
    fs::path d(cfg.output.dir);
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec)
        throw ConfigError(fmt::format("cannot create output directory '{}': {}", d.string(), ec.message()));
    return d;
}

std::string profile_path(const Flags& f, const RunConfig& cfg)
{
    if (f.profile)
        return *f.profile;
    return (fs::path(cfg.output.dir) / ("profile" + ext(cfg))).string();
}

ConstraintSet constraints(const RunConfig& cfg) { return classify_constraints(cfg.spec.eos, cfg.spec.kind); }

int cmd_classify(const RunConfig& cfg, std::ostream& out)
{
    const auto cs = constraints(cfg);
    out << fmt::format("family: {}\nproblem: {}\n", to_string(cfg.spec.eos.family()), to_string(cfg.spec.kind));
    out << cs.render() << '\n';
    out << fmt::format("free_dims: {}\n", cs.free_dims);
    if (cs.free_dims == 0) {
        out << "no scaling solution: the exponents are over-determined\n";
        return kExitUnsolvable;
    }
    return kExitOk;
}

void plot_profile(const fs::path& dir, const std::string& stem, const SolutionProfile& p)
{
    const std::pair<const char*, const std::vector<double>*> fields[] = {{"R", &p.R}, {"V", &p.V}, {"Pi", &p.Pi}};
    for (const auto& [name, ys] : fields)
        write_svg_plot((dir / fmt::format("{}_{}.svg", stem, name)).string(), fmt::format("{} vs xi", name), "xi",
                       {{name, p.xi, *ys}});
}

int cmd_scan(const RunConfig& cfg, std::ostream& out)
{
    if (constraints(cfg).free_dims == 0)
        return kExitUnsolvable;
    const auto dir = out_dir(cfg);
    const auto entries = scan(cfg.spec, cfg.bracket.first, cfg.bracket.second, cfg.solver.scan_points, cfg.solver);
    write_scan_csv((dir / "scan.csv").string(), entries);
    int changes = 0;
    for (std::size_t i = 0; i + 1 < entries.size(); ++i)
        if (entries[i].numerator_sign * entries[i + 1].numerator_sign < 0) {
            out << fmt::format("sign change in [{:.17g}, {:.17g}]\n", entries[i].value, entries[i + 1].value);
            ++changes;
        }
    out << fmt::format("{} sign change(s); wrote {}\n", changes, (dir / "scan.csv").string());
    return changes ? kExitOk : kExitNoEigenvalue;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    if (constraints(cfg).free_dims == 0) {
        err << "problem is unsolvable by scaling (free_dims = 0)\n";
        return kExitUnsolvable;
    }
    const auto dir = out_dir(cfg);
    const auto res = solve(cfg.spec, cfg.bracket.first, cfg.bracket.second, cfg.solver);
    write_scan_csv((dir / "scan.csv").string(), res.scan);
    for (const auto& f : res.failures)
        err << "refinement failed " << f << '\n';
    if (res.solutions.empty()) {
        err << fmt::format("no eigenvalue in [{:.17g}, {:.17g}]; scan written to {}\n", cfg.bracket.first,
                           cfg.bracket.second, (dir / "scan.csv").string());
        return kExitNoEigenvalue;
    }
    std::vector<std::string> files;
    for (std::size_t i = 0; i < res.solutions.size(); ++i) {
        const auto& s = res.solutions[i];
        const std::string stem = i == 0 ? "profile" : fmt::format("profile_{}", i + 1);
        const std::string name = stem + ext(cfg);
        if (cfg.output.format == "json") {
            write_profile_json((dir / name).string(), s.profile);
        } else {
            write_profile_csv((dir / name).string(), s.profile);
            write_slopes_csv((dir / (stem + "_slopes.csv")).string(), s.profile);
        }
        if (cfg.output.plot)
            plot_profile(dir, stem, s.profile);
        files.push_back(name);
        out << fmt::format("alpha = {:.17g}  beta = {:.17g}  sonic_xi = {:.17g}  -> {}\n", s.exponents.alpha,
                           s.exponents.beta, s.sonic_xi, (dir / name).string());
    }
    write_json((dir / "eigen.json").string(), eigen_metadata(cfg, res, files));
    return kExitOk;
}

SolutionProfile read_profile(const Flags& f, const RunConfig& cfg)
{
    const auto path = profile_path(f, cfg);
    if (!fs::exists(path))
        throw ConfigError("profile file '" + path + "' not found");
    return load_profile(path, cfg.spec);
}

int cmd_reconstruct(const Flags& f, const RunConfig& cfg, std::ostream& out)
{
    const auto prof = read_profile(f, cfg);
    std::vector<double> r;
    const auto& g = cfg.grid;
    for (int i = 0; i < g.r_points; ++i) {
        if (g.r_points == 1) {
            r.push_back(g.r_min);
            break;
        }
        const double u = static_cast<double>(i) / (g.r_points - 1);
        r.push_back(std::exp(std::log(g.r_min) + u * (std::log(g.r_max) - std::log(g.r_min))));
    }
    const auto rows = sample_grid(prof, r, r.empty() ? std::vector<double>{} : g.t);
    const auto dir = out_dir(cfg);
    const auto path = (dir / ("reconstruct" + ext(cfg))).string();
    if (cfg.output.format == "json")
        write_samples_json(path, rows);
    else
        write_samples_csv(path, rows);
    out << fmt::format("{} rows -> {}\n", rows.size(), path);
    return kExitOk;
}

int cmd_verify(const Flags& f, const RunConfig& cfg, std::ostream& out)
{
    const auto prof = read_profile(f, cfg);
    VerifyOptions vo;
    if (!cfg.grid.t.empty())
        vo.t_probe = cfg.grid.t.front();
    const auto rep = verify_profile(prof, vo);
    const auto dir = out_dir(cfg);
    const auto path = (dir / "verification.json").string();
    write_json(path, verification_json(rep));
    out << fmt::format("pde residual (mass, momentum, energy): {:.3e} {:.3e} {:.3e}\n", rep.pde_residual_norms[0],
                       rep.pde_residual_norms[1], rep.pde_residual_norms[2]);
    out << fmt::format("conservation (c1, c2, c3): {:.3e} {:.3e} {:.3e}\n", rep.conservation[0], rep.conservation[1],
                       rep.conservation[2]);
    out << fmt::format("entropy: {} (margin {:.6g}{})\n", rep.entropy.ok ? "ok" : "violated", rep.entropy.margin,
                       rep.entropy.enforced ? "" : ", reported only");
    out << fmt::format("ivt: {}\n", rep.ivt.ok ? "ok" : "failed");
    for (const auto& n : rep.notes)
        out << "note: " << n << '\n';
    out << fmt::format("{} -> {}\n", rep.passed ? "PASSED" : "FAILED", path);
    return rep.passed ? kExitOk : kExitVerifyFailed;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Self-similar cavity collapse and converging shock solver", "selfsim"};
    app.require_subcommand(1);
    Flags f;
    auto* classify = app.add_subcommand("classify", "print the admissible exponent constraints");
    auto* solve_cmd = app.add_subcommand("solve", "find the eigenvalue and write the profile");
    auto* scan_cmd = app.add_subcommand("scan", "tabulate the numerator sign over the bracket");
    auto* recon = app.add_subcommand("reconstruct", "sample physical fields from a profile");
    auto* verify = app.add_subcommand("verify", "check a profile against the flow equations");
    for (auto* s : {classify, solve_cmd, scan_cmd, recon, verify})
        add_common(s, f);
    add_profile(recon, f);
    add_profile(verify, f);
    recon->add_option("--r-min", f.r_min, "smallest radius");
    recon->add_option("--r-max", f.r_max, "largest radius");
    recon->add_option("--r-points", f.r_points, "number of radii (log spaced)");
    recon->add_option("--t", f.t, "sample time (negative)");
    verify->add_option("--t", f.t, "probe time (negative)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const auto cfg = effective_config(f);
        if (classify->parsed())
            return cmd_classify(cfg, out);
        if (scan_cmd->parsed())
            return cmd_scan(cfg, out);
        if (solve_cmd->parsed())
            return cmd_solve(cfg, out, err);
        if (recon->parsed())
            return cmd_reconstruct(f, cfg, out);
        if (verify->parsed())
            return cmd_verify(f, cfg, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NoSignChange& e) {
        err << e.what() << '\n';
        return kExitNoEigenvalue;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

int run_cli(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace selfsim
