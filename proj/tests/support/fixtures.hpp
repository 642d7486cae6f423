#pragma once

#include "contagion/hawkes.hpp"
#include "contagion/jump_law.hpp"
#include "contagion/market.hpp"

namespace fixtures {

inline contagion::HawkesParams hawkes1(double alpha = 2.0, double linf = 1.0, double l0 = 1.0,
                                       double d = 1.0) {
    return contagion::HawkesParams({alpha}, {linf}, {l0}, {d});
}

inline contagion::HawkesParams hawkes2_symmetric(double alpha = 2.0, double linf = 1.0,
                                                 double l0 = 1.0, double d = 0.5) {
    return contagion::HawkesParams({alpha, alpha}, {linf, linf}, {l0, l0}, {d, d, d, d});
}

// Single class, single asset.
inline contagion::MarketParams market1(const contagion::JumpLaw& law, double j = -1.0,
                                       double Rbar = 0.05, double upsilon = 0.2, double r = 0.03) {
    return contagion::MarketParams(r, 1, 1, {upsilon}, {0.0}, {Rbar}, {0.0}, {j}, {law});
}

// Two classes, one asset each (the flight-to-quality layout).
inline contagion::MarketParams market2(const contagion::JumpLaw& law1,
                                       const contagion::JumpLaw& law2, double r = 0.02) {
    return contagion::MarketParams(r, 2, 1, {0.18, 0.22}, {0.0, 0.0}, {0.05, 0.06},
                                   {0.0, 0.0}, {-1.0, -1.0}, {law1, law2});
}

} // namespace fixtures
