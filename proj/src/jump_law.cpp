#include "contagion/jump_law.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace contagion {

JumpLaw::JumpLaw(DeterministicLaw law) : law_(law) { validate(); }
JumpLaw::JumpLaw(BinomialLaw law) : law_(law) { validate(); }
JumpLaw::JumpLaw(DiscreteLaw law) : law_(std::move(law)) { validate(); }

void JumpLaw::validate() const {
    const auto zs = support();
    const auto ps = probabilities();
    if (zs.empty()) throw std::invalid_argument("jump law: empty support");
    bool has_pos = false, has_neg = false;
    for (double z : zs) {
        if (!std::isfinite(z) || std::abs(z) > 1.0) {
            throw std::invalid_argument("jump law: support points must lie in [-1, 1]");
        }
        has_pos = has_pos || z > 0.0;
        has_neg = has_neg || z < 0.0;
    }
    if (has_pos && has_neg) {
        throw std::invalid_argument(
            "jump law: mixed-sign support is not representable; use one sign convention per class");
    }
    double total = 0.0;
    for (double p : ps) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            throw std::invalid_argument("jump law: probabilities must lie in [0, 1]");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("jump law: probabilities must sum to 1 within 1e-12");
    }
}

std::vector<double> JumpLaw::support() const {
    if (auto* det = std::get_if<DeterministicLaw>(&law_)) return {det->zbar};
    if (auto* bin = std::get_if<BinomialLaw>(&law_)) return {bin->u, bin->dn};
    return std::get<DiscreteLaw>(law_).support;
}

std::vector<double> JumpLaw::probabilities() const {
    if (std::holds_alternative<DeterministicLaw>(law_)) return {1.0};
    if (auto* bin = std::get_if<BinomialLaw>(&law_)) return {bin->p, 1.0 - bin->p};
    return std::get<DiscreteLaw>(law_).probs;
}

double JumpLaw::mean() const {
    return expect([](double z) { return z; });
}

double JumpLaw::max_abs_support() const {
    double m = 0.0;
    for (double z : support()) m = std::max(m, std::abs(z));
    return m;
}

double JumpLaw::sample(double uniform01) const {
    const auto zs = support();
    const auto ps = probabilities();
    double cum = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        cum += ps[i];
        if (uniform01 <= cum) return zs[i];
    }
    return zs.back();
}

std::string JumpLaw::describe() const {
    std::ostringstream os;
    if (auto* det = std::get_if<DeterministicLaw>(&law_)) {
        os << "deterministic(zbar=" << det->zbar << ")";
    } else if (auto* bin = std::get_if<BinomialLaw>(&law_)) {
        os << "binomial(u=" << bin->u << ", dn=" << bin->dn << ", p=" << bin->p << ")";
    } else {
        os << "discrete(" << std::get<DiscreteLaw>(law_).support.size() << " atoms)";
    }
    return os.str();
}

JumpLaw JumpLaw::negated() const {
    if (auto* det = std::get_if<DeterministicLaw>(&law_)) {
        return JumpLaw(DeterministicLaw{-det->zbar});
    }
    if (auto* bin = std::get_if<BinomialLaw>(&law_)) {
        return JumpLaw(BinomialLaw{-bin->u, -bin->dn, bin->p});
    }
    DiscreteLaw d = std::get<DiscreteLaw>(law_);
    for (double& z : d.support) z = -z;
    return JumpLaw(std::move(d));
}

} // namespace contagion
