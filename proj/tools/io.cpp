#include "selfsim/io.hpp"

#include "selfsim/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace selfsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    return in;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

double parse_cell(const std::string& s, const std::string& path)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw ConfigError(fmt::format("{}: bad number '{}'", path, s));
    return v;
}

// Header plus numeric rows; rejects a header that differs from `expected`.
std::vector<std::vector<std::string>> read_table(const std::string& path, const std::string& expected)
{
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != expected)
        throw ConfigError(fmt::format("{}: expected header '{}'", path, expected));
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        rows.push_back(split_csv(line));
    }
    return rows;
}

Region region_from_string(const std::string& s)
{
    for (auto r : {Region::Vacuum, Region::Upstream, Region::Disturbed, Region::Invalid})
        if (to_string(r) == s)
            return r;
    throw ConfigError("unknown region tag '" + s + "'");
}

struct Local {
    double X, C2, delta, N;
};

Local local_columns(const SolutionProfile& p, std::size_t i)
{
    const SimilarityState s{p.xi[i], p.R[i], p.V[i], p.Pi[i]};
    try {
        return {group_velocity(p.spec, s), scaled_sound_speed_sq(p.spec, s), sonic_discriminant(p.spec, s),
                numerator(p.spec, s)};
    } catch (const Error&) {
        const double nan = std::nan("");
        return {group_velocity(p.spec, s), nan, nan, nan};
    }
}

const char* kProfileHeader = "xi,R,V,Pi,X,C2,delta,numerator";
const char* kSlopesHeader = "xi,dR,dV,dPi";
const char* kScanHeader = "value,stop_reason,numerator_sign,numerator,stop_xi";
const char* kSamplesHeader = "r,t,rho,u,p,region";

} // namespace

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

void write_profile_csv(const std::string& path, const SolutionProfile& p)
{
    auto out = open_out(path);
    out << kProfileHeader << '\n';
    for (std::size_t i = 0; i < p.xi.size(); ++i) {
        const auto l = local_columns(p, i);
        out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", p.xi[i], p.R[i],
                           p.V[i], p.Pi[i], l.X, l.C2, l.delta, l.N);
    }
}

void write_slopes_csv(const std::string& path, const SolutionProfile& p)
{
    auto out = open_out(path);
    out << kSlopesHeader << '\n';
    for (std::size_t i = 0; i < p.dR.size(); ++i)
        out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", p.xi[i], p.dR[i], p.dV[i], p.dPi[i]);
}

void write_profile_json(const std::string& path, const SolutionProfile& p)
{
    json j;
    j["xi"] = p.xi;
    j["R"] = p.R;
    j["V"] = p.V;
    j["Pi"] = p.Pi;
    j["dR"] = p.dR;
    j["dV"] = p.dV;
    j["dPi"] = p.dPi;
    std::vector<double> X, C2, D, N;
    for (std::size_t i = 0; i < p.xi.size(); ++i) {
        const auto l = local_columns(p, i);
        X.push_back(l.X);
        C2.push_back(l.C2);
        D.push_back(l.delta);
        N.push_back(l.N);
    }
    j["X"] = X;
    j["C2"] = C2;
    j["delta"] = D;
    j["numerator"] = N;
    write_json(path, j);
}

namespace {

std::string slopes_path_for(const std::string& profile_path)
{
    const fs::path p(profile_path);
    return (p.parent_path() / (p.stem().string() + "_slopes.csv")).string();
}

} // namespace

SolutionProfile load_profile(const std::string& path, const ProblemSpec& spec)
{
    SolutionProfile prof;
    prof.spec = spec;
    const fs::path fp(path);
    if (fp.extension() == ".json") {
        const auto j = read_json(path);
        try {
            prof.xi = j.at("xi").get<std::vector<double>>();
            prof.R = j.at("R").get<std::vector<double>>();
            prof.V = j.at("V").get<std::vector<double>>();
            prof.Pi = j.at("Pi").get<std::vector<double>>();
            if (j.contains("dR")) {
                prof.dR = j.at("dR").get<std::vector<double>>();
                prof.dV = j.at("dV").get<std::vector<double>>();
                prof.dPi = j.at("dPi").get<std::vector<double>>();
            }
        } catch (const json::exception& e) {
            throw ConfigError(path + ": " + e.what());
        }
    } else {
        for (const auto& row : read_table(path, kProfileHeader)) {
            if (row.size() != 8)
                throw ConfigError(path + ": expected 8 columns");
            prof.xi.push_back(parse_cell(row[0], path));
            prof.R.push_back(parse_cell(row[1], path));
            prof.V.push_back(parse_cell(row[2], path));
            prof.Pi.push_back(parse_cell(row[3], path));
        }
        const auto sp = slopes_path_for(path);
        if (fs::exists(sp)) {
            const auto rows = read_table(sp, kSlopesHeader);
            if (rows.size() == prof.xi.size()) {
                for (const auto& row : rows) {
                    if (row.size() != 4)
                        throw ConfigError(sp + ": expected 4 columns");
                    prof.dR.push_back(parse_cell(row[1], sp));
                    prof.dV.push_back(parse_cell(row[2], sp));
                    prof.dPi.push_back(parse_cell(row[3], sp));
                }
            }
        }
    }
    if (prof.xi.size() < 2)
        throw ConfigError(path + ": profile needs at least two samples");
    for (std::size_t i = 0; i + 1 < prof.xi.size(); ++i)
        if (!(prof.xi[i + 1] > prof.xi[i]))
            throw ConfigError(path + ": xi column must be strictly increasing");
    prof.xi_s = prof.xi.front();

    // Metadata from the sibling eigen.json.
    bool have_meta = false;
    const auto meta_path = fp.parent_path() / "eigen.json";
    if (fs::exists(meta_path)) {
        const auto meta = read_json(meta_path.string());
        if (meta.contains("solutions"))
            for (const auto& s : meta["solutions"])
                if (s.value("profile", "") == fp.filename().string()) {
                    prof.spec.exponents.alpha = s.at("alpha").get<double>();
                    prof.spec.exponents.beta = s.at("beta").get<double>();
                    prof.sonic_xi = s.at("sonic_xi").get<double>();
                    have_meta = true;
                }
    }
    if (!have_meta) {
        for (std::size_t i = 0; i + 1 < prof.xi.size(); ++i) {
            try {
                const double a = sonic_discriminant(prof.spec, {prof.xi[i], prof.R[i], prof.V[i], prof.Pi[i]});
                const double b =
                    sonic_discriminant(prof.spec, {prof.xi[i + 1], prof.R[i + 1], prof.V[i + 1], prof.Pi[i + 1]});
                if (a < 0.0 && b >= 0.0) {
                    prof.sonic_xi = b == 0.0 ? prof.xi[i + 1] : prof.xi[i];
                    break;
                }
            } catch (const Error&) {
            }
        }
    }
    if (!prof.spec.unit_jump_speed)
        prof.spec.xi_s = prof.xi_s;
    prof.build();
    return prof;
}

void write_scan_csv(const std::string& path, const std::vector<ScanEntry>& scan)
{
    auto out = open_out(path);
    out << kScanHeader << '\n';
    for (const auto& e : scan)
        out << fmt::format("{:.17g},{},{},{:.17g},{:.17g}\n", e.value, to_string(e.stop_reason), e.numerator_sign,
                           e.numerator, e.stop_xi);
}

std::vector<ScanEntry> load_scan_csv(const std::string& path)
{
    std::vector<ScanEntry> out;
    for (const auto& row : read_table(path, kScanHeader)) {
        if (row.size() != 5)
            throw ConfigError(path + ": expected 5 columns");
        ScanEntry e;
        e.value = parse_cell(row[0], path);
        try {
            e.stop_reason = stop_reason_from_string(row[1]);
        } catch (const std::exception& ex) {
            throw ConfigError(path + ": " + ex.what());
        }
        e.numerator_sign = static_cast<int>(parse_cell(row[2], path));
        e.numerator = parse_cell(row[3], path);
        e.stop_xi = parse_cell(row[4], path);
        out.push_back(e);
    }
    return out;
}

void write_samples_csv(const std::string& path, const std::vector<PhysicalSample>& rows)
{
    auto out = open_out(path);
    out << kSamplesHeader << '\n';
    for (const auto& s : rows)
        out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", s.r, s.t, s.rho, s.u, s.p,
                           to_string(s.region));
}

void write_samples_json(const std::string& path, const std::vector<PhysicalSample>& rows)
{
    json j = json::array();
    for (const auto& s : rows) {
        json row;
        row["r"] = s.r;
        row["t"] = s.t;
        row["rho"] = std::isfinite(s.rho) ? json(s.rho) : json(nullptr);
        row["u"] = std::isfinite(s.u) ? json(s.u) : json(nullptr);
        row["p"] = std::isfinite(s.p) ? json(s.p) : json(nullptr);
        row["region"] = to_string(s.region);
        j.push_back(row);
    }
    write_json(path, j);
}

std::vector<PhysicalSample> load_samples_csv(const std::string& path)
{
    std::vector<PhysicalSample> out;
    for (const auto& row : read_table(path, kSamplesHeader)) {
        if (row.size() != 6)
            throw ConfigError(path + ": expected 6 columns");
        PhysicalSample s;
        s.r = parse_cell(row[0], path);
        s.t = parse_cell(row[1], path);
        s.rho = parse_cell(row[2], path);
        s.u = parse_cell(row[3], path);
        s.p = parse_cell(row[4], path);
        s.region = region_from_string(row[5]);
        out.push_back(s);
    }
    return out;
}

json solution_json(const EigenResult& r, const std::string& profile_file)
{
    json j;
    j["free_parameter"] = r.free == FreeParameter::Alpha ? "alpha" : "beta";
    j["value"] = r.value;
    j["alpha"] = r.exponents.alpha;
    j["beta"] = r.exponents.beta;
    j["xi_s"] = r.profile.xi_s;
    j["sonic_xi"] = r.sonic_xi;
    j["residual"] = r.residual;
    j["residual_scale"] = r.residual_scale;
    j["iterations"] = r.iterations;
    j["bracket"] = {r.lo, r.hi};
    j["crossing_slopes"] = {r.crossing_slopes[0], r.crossing_slopes[1]};
    j["samples"] = r.profile.xi.size();
    j["xi_end"] = r.profile.xi.empty() ? 0.0 : r.profile.xi.back();
    j["profile"] = profile_file;
    return j;
}

json eigen_metadata(const RunConfig& cfg, const SolveOutcome& out, const std::vector<std::string>& profile_files)
{
    json j;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = fmt::format("{:016x}", cfg.hash);
    json echo = json::object();
    {
        std::istringstream in(cfg.echo);
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find(" = ");
            if (eq != std::string::npos)
                echo[line.substr(0, eq)] = line.substr(eq + 3);
        }
    }
    j["config"] = echo;
    const auto& o = cfg.solver;
    j["tolerances"] = {{"tol_alpha", o.tol_alpha}, {"delta_stop", o.delta_stop}, {"eps", o.eps},
                       {"h_jump", o.h_jump},       {"xi_max_factor", o.xi_max_factor}, {"rtol", o.rtol},
                       {"atol", o.atol},           {"tol_n", o.tol_N}};
    json sols = json::array();
    for (std::size_t i = 0; i < out.solutions.size(); ++i)
        sols.push_back(solution_json(out.solutions[i], i < profile_files.size() ? profile_files[i] : ""));
    j["solutions"] = sols;
    j["failures"] = out.failures;
    if (!out.solutions.empty()) {
        const auto& r = out.solutions.front();
        j["alpha"] = r.exponents.alpha;
        j["beta"] = r.exponents.beta;
        j["xi_s"] = r.profile.xi_s;
        j["sonic_xi"] = r.sonic_xi;
        j["residual"] = r.residual;
        j["iterations"] = r.iterations;
    }
    return j;
}

json verification_json(const VerificationReport& rep)
{
    json j;
    j["pde_residual_norms"] = {{"mass", rep.pde_residual_norms[0]},
                               {"momentum", rep.pde_residual_norms[1]},
                               {"energy", rep.pde_residual_norms[2]}};
    j["conservation_norms"] = {{"c1", rep.conservation[0]}, {"c2", rep.conservation[1]}, {"c3", rep.conservation[2]}};
    j["entropy"] = {{"ok", rep.entropy.ok},
                    {"enforced", rep.entropy.enforced},
                    {"margin", rep.entropy.margin},
                    {"where", rep.entropy.where},
                    {"note", rep.entropy.note}};
    j["ivt"] = {{"ok", rep.ivt.ok},
                {"delta_near", rep.ivt.delta_near},
                {"delta_far", rep.ivt.delta_far},
                {"last_negative_xi", rep.ivt.last_negative_xi},
                {"first_positive_xi", rep.ivt.first_positive_xi},
                {"sonic_xi", rep.ivt.sonic_xi}};
    j["entropy_indicator"] = {{"positive", rep.indicator_positive}, {"negative", rep.indicator_negative}};
    j["notes"] = rep.notes;
    j["passed"] = rep.passed;
    return j;
}

void write_json(const std::string& path, const json& j)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json read_json(const std::string& path)
{
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::vector<Series>& series)
{
    const double W = 640, H = 400, ml = 70, mr = 20, mt = 40, mb = 50;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0.0) || !std::isfinite(s.y[i]))
                continue;
            x0 = std::min(x0, std::log10(s.x[i]));
            x1 = std::max(x1, std::log10(s.x[i]));
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x1 > x0)) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (!(y1 > y0)) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double lx) { return ml + (lx - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    auto out = open_out(path);
    out << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
                       "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
                       W, H, W, H);
    out << fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
    out << fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", W / 2, title);
    out << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", ml, mt,
                       W - ml - mr, H - mt - mb);
    for (int d = static_cast<int>(std::ceil(x0)); d <= static_cast<int>(std::floor(x1)); ++d) {
        const double x = px(d);
        out << fmt::format("<line x1=\"{:.2f}\" y1=\"{}\" x2=\"{:.2f}\" y2=\"{}\" stroke=\"#ccc\"/>\n", x, mt, x,
                           H - mb);
        out << fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">1e{}</text>\n", x, H - mb + 16, d);
    }
    for (int i = 0; i <= 4; ++i) {
        const double y = y0 + (y1 - y0) * i / 4.0;
        out << fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:.4g}</text>\n", ml - 6, py(y) + 4, y);
    }
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (ml + W - mr) / 2, H - 12,
                       x_label);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        out << fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"", colors[k % 4]);
        bool first = true;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0.0) || !std::isfinite(s.y[i]))
                continue;
            out << fmt::format("{}{:.2f},{:.2f}", first ? "" : " ", px(std::log10(s.x[i])), py(s.y[i]));
            first = false;
        }
        out << "\"/>\n";
        out << fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", ml + 10, mt + 16 + 14 * k, colors[k % 4],
                           s.label);
    }
    out << "</svg>\n";
}

} // namespace selfsim
