#pragma once

#include <string>

namespace selfsim {

enum class ProblemKind { Cavity, Shock };

// Scaling exponents: r ~ |t|^(alpha+1), rho ~ |t|^beta.
struct Exponents {
    double alpha = 0.0;
    double beta = 0.0;
};

enum class FreeParameter { Alpha, Beta };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);

} // namespace selfsim
