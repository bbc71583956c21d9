#pragma once

#include "selfsim/eigensolver.hpp"

namespace fixtures {

inline selfsim::ProblemSpec guderley_spec(double gamma = 1.4, int k = 2)
{
    selfsim::ProblemSpec sp;
    sp.kind = selfsim::ProblemKind::Shock;
    sp.k = k;
    sp.eos = selfsim::EosModel::ideal_gamma(gamma);
    return sp;
}

inline selfsim::ProblemSpec cavity_spec(int k)
{
    selfsim::ProblemSpec sp;
    sp.kind = selfsim::ProblemKind::Cavity;
    sp.k = k;
    sp.eos = selfsim::EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0);
    sp.unit_jump_speed = true;
    return sp;
}

// Converged solutions, computed once per test binary.
inline const selfsim::EigenResult& guderley()
{
    static const auto r = selfsim::find_eigenvalue(guderley_spec(), -0.3, -0.25);
    return r;
}

inline const selfsim::EigenResult& cavity_k1()
{
    static const auto r = selfsim::find_eigenvalue(cavity_spec(1), -0.5, -0.44);
    return r;
}

} // namespace fixtures
