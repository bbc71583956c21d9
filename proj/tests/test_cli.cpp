#include "selfsim/cli.hpp"
#include "selfsim/config.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/io.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace selfsim;
namespace fs = std::filesystem;

namespace {

const char* kGuderley = R"(# ideal gas converging shock
[problem]
kind = shock
k = 2

[eos]
family = ideal
gamma = 1.4

[exponents]
free = alpha

[solver]
bracket = -0.3,-0.25
scan_points = 4
)";

const char* kCavity = R"([problem]
kind = cavity
k = 1
unit_jump_speed = true

[eos]
family = pseudo_mg
s = 1.489
q = 0.25

[solver]
bracket = -0.5,-0.44
scan_points = 4
)";

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() / ("selfsim_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& text) const
    {
        std::ofstream(path / name) << text;
        return (path / name).string();
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

} // namespace

TEST_CASE("config: parses sections and defaults")
{
    const auto cfg = parse_config(kGuderley);
    CHECK(cfg.spec.kind == ProblemKind::Shock);
    CHECK(cfg.spec.k == 2);
    CHECK(cfg.spec.eos.family() == EosFamily::IdealGamma);
    CHECK(cfg.bracket.first == -0.3);
    CHECK(cfg.bracket.second == -0.25);
    CHECK(cfg.solver.scan_points == 4);
    CHECK(cfg.solver.tol_alpha == SolverOptions{}.tol_alpha);
    CHECK(cfg.output.format == "csv");
    CHECK(cfg.echo.find("problem.kind = shock") != std::string::npos);
}

TEST_CASE("config: rejects malformed input")
{
    const std::string base = kGuderley;
    CHECK_THROWS_AS(parse_config(base + "[solver2]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(base + "[eos]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("kind = shock\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[eos]\nfamily = ideal\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[problem]\nkind = shock\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[problem\nkind = shock\n"), ConfigError);
    const auto with_solver = [](const std::string& line) {
        return std::string("[problem]\nkind = shock\n[eos]\nfamily = ideal\n[solver]\n") + line + "\n";
    };
    CHECK_NOTHROW(parse_config(with_solver("rtol = 1e-10")));
    CHECK_THROWS_AS(parse_config(with_solver("rtol = -1e-10")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_solver("tol_alpha = 0")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_solver("bracket = -0.2,-0.3")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_solver("bracket = -0.2")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_solver("eps = abc")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_solver("mode = sideways")), ConfigError);
    CHECK_THROWS_AS(parse_config("[problem]\nkind = shock\nk = 3\n[eos]\nfamily = ideal\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[problem]\nkind = cavity\n[eos]\nfamily = pseudo_mg\ns = 1.4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[problem]\nkind = cavity\n[eos]\nfamily = ideal\ngamma = 0.9\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/selfsim.ini"), ConfigError);
}

TEST_CASE("config: hash follows the effective settings")
{
    auto a = parse_config(kGuderley), b = parse_config(kGuderley);
    CHECK(a.echo == b.echo);
    CHECK(a.hash == b.hash);
    b.solver.tol_alpha = 1e-9;
    b.refresh_echo();
    CHECK(a.hash != b.hash);
    CHECK(b.echo.find("solver.tol_alpha = 1.0000000000000001e-09") != std::string::npos);
    const auto c = parse_config(std::string(kGuderley) + "\n# trailing comment\n");
    CHECK(c.hash == a.hash);
}

TEST_CASE("io: profile, scan and sample files round-trip exactly")
{
    TempDir d;
    const auto& r = fixtures::guderley();
    write_profile_csv(d / "profile.csv", r.profile);
    write_slopes_csv(d / "profile_slopes.csv", r.profile);
    auto p = load_profile(d / "profile.csv", fixtures::guderley_spec());
    CHECK(p.xi == r.profile.xi);
    CHECK(p.R == r.profile.R);
    CHECK(p.V == r.profile.V);
    CHECK(p.Pi == r.profile.Pi);
    CHECK(p.dR == r.profile.dR);
    CHECK(p.dPi == r.profile.dPi);
    // Without metadata the exponents come from the config and the sonic point
    // from the sign change of delta.
    auto spec = fixtures::guderley_spec();
    spec.exponents = r.exponents;
    p = load_profile(d / "profile.csv", spec);
    CHECK(p.sonic_xi == doctest::Approx(r.sonic_xi).epsilon(1e-3));
    CHECK(p.state_at(2.5).V == r.profile.state_at(2.5).V);

    write_profile_json(d / "profile.json", r.profile);
    const auto pj = load_profile(d / "profile.json", spec);
    CHECK(pj.R == r.profile.R);
    CHECK(pj.dV == r.profile.dV);

    const auto s = scan(fixtures::guderley_spec(), -0.5, -0.1, 5);
    write_scan_csv(d / "scan.csv", s);
    const auto s2 = load_scan_csv(d / "scan.csv");
    REQUIRE(s2.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s2[i].value == s[i].value);
        CHECK(s2[i].stop_reason == s[i].stop_reason);
        CHECK(s2[i].numerator_sign == s[i].numerator_sign);
        CHECK(s2[i].numerator == s[i].numerator);
        CHECK(s2[i].stop_xi == s[i].stop_xi);
    }

    const auto rows = sample_grid(r.profile, {0.5, 1.5, 3.0}, {-1.0, -0.5});
    write_samples_csv(d / "rows.csv", rows);
    const auto back = load_samples_csv(d / "rows.csv");
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].r == rows[i].r);
        CHECK(back[i].t == rows[i].t);
        CHECK(back[i].rho == rows[i].rho);
        CHECK(back[i].u == rows[i].u);
        CHECK(back[i].p == rows[i].p);
        CHECK(back[i].region == rows[i].region);
    }
    CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("io: loaders reject damaged files")
{
    TempDir d;
    CHECK_THROWS_AS(load_profile(d.file("a.csv", "x,y\n1,2\n"), fixtures::guderley_spec()), ConfigError);
    CHECK_THROWS_AS(load_profile(d.file("b.csv", "xi,R,V,Pi,X,C2,delta,numerator\n1,2,3\n"), fixtures::guderley_spec()),
                    ConfigError);
    CHECK_THROWS_AS(load_scan_csv(d.file("c.csv", "value,stop_reason,numerator_sign,numerator,stop_xi\n1,odd,1,1,1\n")),
                    ConfigError);
    CHECK_THROWS_AS(read_json(d.file("d.json", "{")), ConfigError);
}

TEST_CASE("cli: classify exit codes")
{
    TempDir d;
    CHECK(cli({"classify", "--config", d.file("g.ini", kGuderley)}).code == kExitOk);
    const auto ig = cli({"classify", "--config", d.file("i.ini", "[problem]\nkind = cavity\n[eos]\nfamily = ideal\n")});
    CHECK(ig.code == kExitOk);
    CHECK(ig.out.find("free_dims: 2") != std::string::npos);
    CHECK(cli({"classify", "--config", d.file("x.ini", "[problem]\nkind = shock\n[eos]\nfamily = general\n")}).code ==
          kExitUnsolvable);
    CHECK(cli({"classify", "--config", d.file("m.ini", "[problem]\nkind = shock\nnot a pair\n")}).code == kExitConfig);
    CHECK(cli({"classify", "--config", d / "missing.ini"}).code == kExitConfig);
    CHECK(cli({"classify"}).code == kExitConfig);
    CHECK(cli({"frobnicate", "--config", d / "g.ini"}).code == kExitConfig);
    CHECK(cli({"solve", "--config", d.file("x2.ini", "[problem]\nkind = shock\n[eos]\nfamily = general\n"), "--out",
               d / "o"})
              .code == kExitUnsolvable);
}

TEST_CASE("cli: solve, reconstruct and verify")
{
    TempDir d;
    const auto cfg = d.file("g.ini", kGuderley);
    const auto out = d / "out";
    auto r = cli({"solve", "--config", cfg, "--out", out, "--plot"});
    REQUIRE(r.code == kExitOk);
    for (const char* f : {"profile.csv", "profile_slopes.csv", "eigen.json", "scan.csv", "profile_R.svg"})
        CHECK(fs::exists(fs::path(out) / f));
    const auto meta = read_json(out + "/eigen.json");
    CHECK(meta["alpha"].get<double>() == doctest::Approx(fixtures::guderley().exponents.alpha).epsilon(1e-9));
    CHECK(meta["tool_version"] == kToolVersion);
    CHECK(meta["config_hash"].get<std::string>().size() == 16);
    CHECK(meta["tolerances"]["tol_alpha"].get<double>() == 1e-10);
    CHECK(meta.contains("iterations"));
    CHECK(meta["config"]["problem.kind"] == "shock");

    // t = -1 reconstruction reproduces the similarity columns.
    r = cli({"reconstruct", "--config", cfg, "--out", out, "--r-min", "1.5", "--r-max", "3", "--r-points", "3"});
    REQUIRE(r.code == kExitOk);
    const auto rows = load_samples_csv(out + "/reconstruct.csv");
    REQUIRE(rows.size() == 3);
    const auto prof = load_profile(out + "/profile.csv", fixtures::guderley_spec());
    CHECK(rows[0].rho == doctest::Approx(prof.state_at(1.5).R).epsilon(1e-14));
    CHECK(rows[2].u == doctest::Approx(prof.state_at(3.0).V).epsilon(1e-14));

    r = cli({"reconstruct", "--config", cfg, "--out", d / "empty", "--profile", out + "/profile.csv", "--r-points", "0"});
    CHECK(r.code == kExitOk);
    CHECK(load_samples_csv(d / "empty/reconstruct.csv").empty());
    CHECK(cli({"reconstruct", "--config", cfg, "--profile", d / "none.csv"}).code == kExitConfig);

    r = cli({"verify", "--config", cfg, "--out", out});
    CHECK(r.code == kExitOk);
    const auto rep = read_json(out + "/verification.json");
    CHECK(rep["passed"] == true);

    // Same data with a perturbed exponent in the metadata fails verification.
    auto m = read_json(out + "/eigen.json");
    m["solutions"][0]["alpha"] = m["solutions"][0]["alpha"].get<double>() + 1e-3;
    write_json(out + "/eigen.json", m);
    CHECK(cli({"verify", "--config", cfg, "--out", out}).code == kExitVerifyFailed);
}

TEST_CASE("cli: no eigenvalue in bracket writes the scan")
{
    TempDir d;
    const auto r = cli({"solve", "--config", d.file("g.ini", kGuderley), "--out", d / "o", "--bracket", "-0.2,-0.1"});
    CHECK(r.code == kExitNoEigenvalue);
    CHECK(load_scan_csv(d / "o/scan.csv").size() == 4);
    CHECK_FALSE(fs::exists(fs::path(d / "o") / "profile.csv"));
    CHECK(cli({"scan", "--config", d / "g.ini", "--out", d / "s", "--bracket", "-0.2,-0.1"}).code == kExitNoEigenvalue);
    CHECK(cli({"scan", "--config", d / "g.ini", "--out", d / "s"}).code == kExitOk);
    CHECK(cli({"solve", "--config", d / "g.ini", "--bracket", "-0.1,-0.2"}).code == kExitConfig);
}

TEST_CASE("cli: overrides")
{
    TempDir d;
    const auto cfg = d.file("c.ini", kCavity);
    auto r = cli({"solve", "--config", cfg, "--out", d / "j", "--format", "json"});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(fs::path(d / "j") / "profile.json"));
    CHECK(cli({"verify", "--config", cfg, "--out", d / "j", "--format", "json"}).code == kExitOk);
    r = cli({"solve", "--config", cfg, "--out", d / "t", "--tol-alpha", "1e-8", "--k", "1"});
    REQUIRE(r.code == kExitOk);
    const auto meta = read_json(d / "t/eigen.json");
    CHECK(meta["tolerances"]["tol_alpha"].get<double>() == 1e-8);
    CHECK(meta["iterations"].get<int>() < fixtures::cavity_k1().iterations);
    CHECK(meta["config"]["problem.k"] == "1");
    CHECK(cli({"classify", "--config", cfg, "--k", "3"}).code == kExitConfig);
    CHECK(cli({"solve", "--config", cfg, "--tol-alpha", "1e-14"}).code == kExitConfig);
}

TEST_CASE("cli: identical configs give byte-identical files")
{
    TempDir d;
    const auto cfg = d.file("g.ini", kGuderley);
    REQUIRE(cli({"solve", "--config", cfg, "--out", d / "a"}).code == kExitOk);
    REQUIRE(cli({"solve", "--config", cfg, "--out", d / "b"}).code == kExitOk);
    for (const char* f : {"profile.csv", "profile_slopes.csv", "eigen.json", "scan.csv"})
        CHECK(slurp(d / (std::string("a/") + f)) == slurp(d / (std::string("b/") + f)));
}
