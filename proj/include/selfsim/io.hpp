#pragma once

#include "selfsim/config.hpp"
#include "selfsim/eigensolver.hpp"
#include "selfsim/reconstruct.hpp"
#include "selfsim/verify.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace selfsim {

inline constexpr const char* kToolVersion = "selfsim 0.1.0";

// Fixed 17-significant-digit formatting used by every data file.
std::string format_number(double v);

// Columns xi,R,V,Pi,X,C2,delta,numerator.
void write_profile_csv(const std::string& path, const SolutionProfile& profile);
// Columns xi,dR,dV,dPi (sample derivatives, needed for exact reloads).
void write_slopes_csv(const std::string& path, const SolutionProfile& profile);
void write_profile_json(const std::string& path, const SolutionProfile& profile);

// Reads a profile written by the functions above. Exponents, xi_s and the
// sonic point come from the eigen.json next to the file when present, else
// from spec and the sign change of the delta column.
SolutionProfile load_profile(const std::string& path, const ProblemSpec& spec);

void write_scan_csv(const std::string& path, const std::vector<ScanEntry>& scan);
std::vector<ScanEntry> load_scan_csv(const std::string& path);

// Columns r,t,rho,u,p,region.
void write_samples_csv(const std::string& path, const std::vector<PhysicalSample>& rows);
void write_samples_json(const std::string& path, const std::vector<PhysicalSample>& rows);
std::vector<PhysicalSample> load_samples_csv(const std::string& path);

nlohmann::json solution_json(const EigenResult& r, const std::string& profile_file);
nlohmann::json eigen_metadata(const RunConfig& cfg, const SolveOutcome& out,
                              const std::vector<std::string>& profile_files);
nlohmann::json verification_json(const VerificationReport& rep);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

struct Series {
    std::string label;
    std::vector<double> x, y;
};
// Static line plot with a logarithmic x axis.
void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::vector<Series>& series);

} // namespace selfsim
