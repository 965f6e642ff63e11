#pragma once

#include <random>

#include <doctest.h>

#include "isac/model.hpp"

namespace testing {

inline double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

inline isac::SystemConfig tiny(int nth, int ntv, int qh, int qv, int m, int k)
{
    isac::SystemConfig c = isac::SystemConfig::desk_profile();
    c.n_th = nth;
    c.n_tv = ntv;
    c.n_r = nth * ntv;
    c.q_th = qh;
    c.q_tv = qv;
    c.num_subcarriers = m;
    c.num_targets = k;
    c.dict_size = c.n_r;
    return c;
}

// Angles kept away from the domain edges where phi is unobservable.
inline double rand_theta(isac::Rng& g)
{
    return std::uniform_real_distribution<double>(0.3, isac::kPi - 0.3)(g);
}
inline double rand_phi(isac::Rng& g)
{
    return std::uniform_real_distribution<double>(-1.2, 1.2)(g);
}

} // namespace testing
