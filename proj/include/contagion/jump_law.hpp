#pragma once

#include <string>
#include <variant>
#include <vector>

namespace contagion {

// Law of the scalar jump mark Z_l. Canonical support lies in [0,1]; the sign
// of the asset response lives in the scaling j_l (see MarketParams, which
// normalizes an all-nonpositive support into the sign of j).
struct DeterministicLaw {
    double zbar = 0.0;
};

struct BinomialLaw {
    double u = 0.0;  // outcome with probability p
    double dn = 0.0; // outcome with probability 1-p
    double p = 0.5;
};

struct DiscreteLaw {
    std::vector<double> support;
    std::vector<double> probs;
};

class JumpLaw {
public:
    using Variant = std::variant<DeterministicLaw, BinomialLaw, DiscreteLaw>;

    JumpLaw() : JumpLaw(DeterministicLaw{0.0}) {}
    explicit JumpLaw(DeterministicLaw law);
    explicit JumpLaw(BinomialLaw law);
    explicit JumpLaw(DiscreteLaw law);

    static JumpLaw deterministic(double zbar) { return JumpLaw(DeterministicLaw{zbar}); }
    static JumpLaw binomial(double u, double dn, double p) { return JumpLaw(BinomialLaw{u, dn, p}); }
    static JumpLaw discrete(std::vector<double> support, std::vector<double> probs) {
        return JumpLaw(DiscreteLaw{std::move(support), std::move(probs)});
    }

    const Variant& value() const { return law_; }
    bool is_deterministic() const { return std::holds_alternative<DeterministicLaw>(law_); }
    bool is_binomial() const { return std::holds_alternative<BinomialLaw>(law_); }
    bool is_discrete() const { return std::holds_alternative<DiscreteLaw>(law_); }

    // Atoms and weights; every law here is finitely supported.
    std::vector<double> support() const;
    std::vector<double> probabilities() const;
    double mean() const;
    double max_abs_support() const;

    // Inverse-CDF draw from a uniform in (0,1).
    double sample(double uniform01) const;

    // Expectations of f(z); f supplied with whatever derivatives the caller needs.
    template <typename F>
    double expect(F&& f) const {
        const auto zs = support();
        const auto ps = probabilities();
        double acc = 0.0;
        for (std::size_t i = 0; i < zs.size(); ++i) acc += ps[i] * f(zs[i]);
        return acc;
    }

    std::string describe() const;

    // Flip the sign of every support point (used when moving an all-negative
    // support into the sign of j).
    JumpLaw negated() const;

private:
    void validate() const;
    Variant law_;
};

} // namespace contagion
