#pragma once

#include "selfsim/eigensolver.hpp"
#include "selfsim/similarity.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace selfsim {

struct OutputConfig {
    std::string dir = "out";
    std::string format = "csv"; // csv | json
    bool plot = false;
};

// Reconstruction grid: r is log-spaced on [r_min, r_max] unless r_points == 1.
struct GridConfig {
    double r_min = 0.5;
    double r_max = 50.0;
    int r_points = 100;
    std::vector<double> t{-1.0};
};

struct RunConfig {
    ProblemSpec spec;
    SolverOptions solver;
    std::pair<double, double> bracket{-0.99, -0.05};
    GridConfig grid;
    OutputConfig output;
    // Canonical listing of every effective setting, one "section.key = value"
    // line each; the reproducibility hash is taken over this text.
    std::string echo;
    std::uint64_t hash = 0;

    void refresh_echo();
};

// Sectioned key = value text. Unknown sections or keys raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& s);

// "lo,hi" -> ordered pair; throws ConfigError otherwise.
std::pair<double, double> parse_bracket(const std::string& s);

} // namespace selfsim
