#include "contagion/io_json.hpp"

#include <fstream>

namespace contagion {

namespace {

const json& field(const json& j, const char* name, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    auto it = j.find(name);
    if (it == j.end()) throw ConfigError(path + "." + name, "missing required field");
    return *it;
}

double num(const json& j, const char* name, const std::string& path) {
    const json& v = field(j, name, path);
    if (!v.is_number()) throw ConfigError(path + "." + name, "expected a number");
    return v.get<double>();
}

int integer(const json& j, const char* name, const std::string& path) {
    const json& v = field(j, name, path);
    if (!v.is_number_integer()) throw ConfigError(path + "." + name, "expected an integer");
    return v.get<int>();
}

std::vector<double> num_vector(const json& j, const char* name, const std::string& path) {
    const json& v = field(j, name, path);
    if (!v.is_array()) throw ConfigError(path + "." + name, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(path + "." + name, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

} // namespace

json hawkes_to_json(const HawkesParams& p) {
    json d_rows = json::array();
    for (int l = 0; l < p.m(); ++l) {
        json row = json::array();
        for (int j = 0; j < p.m(); ++j) row.push_back(p.d(l, j));
        d_rows.push_back(row);
    }
    return json{{"m", p.m()},
                {"alpha", p.alpha()},
                {"lambda_inf", p.lambda_inf()},
                {"lambda0", p.lambda0()},
                {"d", d_rows}};
}

HawkesParams hawkes_from_json(const json& j, const std::string& path) {
    const int m = integer(j, "m", path);
    if (m < 1) throw ConfigError(path + ".m", "must be >= 1");
    const auto alpha = num_vector(j, "alpha", path);
    const auto linf = num_vector(j, "lambda_inf", path);
    const auto l0 = num_vector(j, "lambda0", path);
    const json& dj = field(j, "d", path);
    if (!dj.is_array() || int(dj.size()) != m) {
        throw ConfigError(path + ".d", "expected an array of m rows");
    }
    std::vector<double> d;
    for (const auto& row : dj) {
        if (!row.is_array() || int(row.size()) != m) {
            throw ConfigError(path + ".d", "each row must have m entries");
        }
        for (const auto& e : row) d.push_back(e.get<double>());
    }
    try {
        return HawkesParams(alpha, linf, l0, d);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
}

json law_to_json(const JumpLaw& law) {
    if (auto* det = std::get_if<DeterministicLaw>(&law.value())) {
        return json{{"type", "deterministic"}, {"zbar", det->zbar}};
    }
    if (auto* bin = std::get_if<BinomialLaw>(&law.value())) {
        return json{{"type", "binomial"}, {"u", bin->u}, {"dn", bin->dn}, {"p", bin->p}};
    }
    const auto& disc = std::get<DiscreteLaw>(law.value());
    return json{{"type", "discrete"}, {"support", disc.support}, {"probs", disc.probs}};
}

JumpLaw law_from_json(const json& j, const std::string& path) {
    const json& tv = field(j, "type", path);
    if (!tv.is_string()) throw ConfigError(path + ".type", "expected a string");
    const std::string type = tv.get<std::string>();
    try {
        if (type == "deterministic") return JumpLaw::deterministic(num(j, "zbar", path));
        if (type == "binomial") {
            return JumpLaw::binomial(num(j, "u", path), num(j, "dn", path), num(j, "p", path));
        }
        if (type == "discrete") {
            return JumpLaw::discrete(num_vector(j, "support", path), num_vector(j, "probs", path));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(path + ".type", "unknown law type '" + type + "'");
}

json market_to_json(const MarketParams& p) {
    json laws = json::array();
    for (const auto& law : p.laws()) laws.push_back(law_to_json(law));
    return json{{"r", p.r()},       {"m", p.m()},        {"k", p.k()},
                {"upsilon", p.upsilon()}, {"rho", p.rho()},    {"Rbar", p.Rbar()},
                {"Rperp", p.Rperp()},     {"j", p.j()},        {"laws", laws}};
}

MarketParams market_from_json(const json& j, const std::string& path) {
    const double r = num(j, "r", path);
    const int m = integer(j, "m", path);
    const int k = integer(j, "k", path);
    const auto upsilon = num_vector(j, "upsilon", path);
    const auto rho = num_vector(j, "rho", path);
    const auto Rbar = num_vector(j, "Rbar", path);
    const auto Rperp = num_vector(j, "Rperp", path);
    const auto jj = num_vector(j, "j", path);
    const json& lv = field(j, "laws", path);
    if (!lv.is_array() || int(lv.size()) != m) {
        throw ConfigError(path + ".laws", "expected one law per class");
    }
    std::vector<JumpLaw> laws;
    for (std::size_t i = 0; i < lv.size(); ++i) {
        laws.push_back(law_from_json(lv[i], path + ".laws[" + std::to_string(i) + "]"));
    }
    try {
        return MarketParams(r, m, k, upsilon, rho, Rbar, Rperp, jj, laws);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
}

json utility_to_json(const UtilitySpec& u) {
    json out{{"kind", u.kind_name()}, {"beta", u.beta}};
    if (u.kind != UtilitySpec::Kind::log_utility) out["gamma"] = u.gamma;
    return out;
}

UtilitySpec utility_from_json(const json& j, const std::string& path) {
    const json& kv = field(j, "kind", path);
    if (!kv.is_string()) throw ConfigError(path + ".kind", "expected a string");
    const std::string kind = kv.get<std::string>();
    const double beta = num(j, "beta", path);
    try {
        if (kind == "log") return UtilitySpec::log_u(beta);
        if (kind == "power") return UtilitySpec::power_u(beta, num(j, "gamma", path));
        if (kind == "exponential") return UtilitySpec::exponential_u(beta, num(j, "gamma", path));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(path + ".kind", "unknown utility kind '" + kind + "'");
}

RunConfig load_config(const std::string& file_path) {
    std::ifstream in(file_path);
    if (!in) throw ConfigError("config", "cannot open '" + file_path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("parse error: ") + e.what());
    }
    RunConfig cfg;
    cfg.raw = j;
    if (j.contains("hawkes")) cfg.hawkes = hawkes_from_json(j["hawkes"], "hawkes");
    if (j.contains("market")) cfg.market = market_from_json(j["market"], "market");
    if (j.contains("utility")) cfg.utility = utility_from_json(j["utility"], "utility");
    return cfg;
}

} // namespace contagion
