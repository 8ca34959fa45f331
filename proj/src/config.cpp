#include "txnsim/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace txnsim {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* constraint) {
    throw ConfigError("config key '" + key + "' = '" + value + "' violates: " + constraint);
}

double parse_double(const std::string& key, const std::string& v) {
    if (v == "inf" || v == "infinity")
        return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size())
            bad_value(key, v, "not a number");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        bad_value(key, v, "not a number");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size())
            bad_value(key, v, "not a non-negative integer");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        bad_value(key, v, "not a non-negative integer");
    }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            bad_value(key, v, "empty list element");
        out.push_back(parse_double(key, item));
    }
    return out;
}

std::string fmt_double(double x) {
    if (std::isinf(x))
        return "inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    SimConfig& b = cfg.base;
    if (key == "n_nodes") {
        b.n_nodes = static_cast<std::uint32_t>(parse_u64(key, value));
    } else if (key == "capacity") {
        b.capacity = static_cast<std::uint32_t>(parse_u64(key, value));
    } else if (key == "density") {
        b.density = parse_double(key, value);
    } else if (key == "duration") {
        b.duration = parse_double(key, value);
    } else if (key == "inject_rate") {
        b.inject_rate = parse_double(key, value);
    } else if (key == "mean_ttf") {
        b.mean_ttf = parse_double(key, value);
    } else if (key == "cascade_prob") {
        b.cascade_prob = parse_double(key, value);
    } else if (key == "dep_window") {
        b.dep_window = parse_double(key, value);
    } else if (key == "ttl") {
        b.ttl = parse_double(key, value);
    } else if (key == "txn_len_mean") {
        b.txn_len_mean = parse_double(key, value);
    } else if (key == "txn_len_sd") {
        b.txn_len_sd = parse_double(key, value);
    } else if (key == "seed") {
        b.seed = parse_u64(key, value);
    } else if (key == "abort_threshold") {
        b.abort_threshold = parse_double(key, value);
    } else if (key == "capacities") {
        cfg.capacities.clear();
        for (double c : parse_double_list(key, value)) {
            if (c < 2 || c != std::floor(c))
                bad_value(key, value, "capacities must be integers >= 2");
            cfg.capacities.push_back(static_cast<std::uint32_t>(c));
        }
    } else if (key == "densities") {
        cfg.densities = parse_double_list(key, value);
    } else if (key == "replications") {
        cfg.replications = static_cast<std::uint32_t>(parse_u64(key, value));
    } else if (key == "bisection_tolerance") {
        cfg.bisection_tolerance = parse_double(key, value);
    } else if (key == "ray_angles") {
        cfg.ray_angles = parse_double_list(key, value);
    } else if (key == "p0_values") {
        cfg.p0_values = value.empty() ? std::vector<double>{} : parse_double_list(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

}  // namespace

void SimConfig::validate() const {
    auto check = [](bool ok, const char* key, double value, const char* constraint) {
        if (!ok) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "config key '%s' = %.17g violates: %s", key, value, constraint);
            throw ConfigError(buf);
        }
    };
    check(n_nodes >= 2, "n_nodes", n_nodes, "n_nodes >= 2");
    check(capacity >= 2, "capacity", capacity, "C >= 2");
    check(density > 0.0 && density <= 1.0, "density", density, "0 < d <= 1");
    const double edges = density * static_cast<double>(n_nodes) * static_cast<double>(n_nodes - 1);
    check(std::llround(edges) >= 1, "density", density, "d*n*(n-1) must round to >= 1 edge");
    check(duration > 0.0, "duration", duration, "S > 0");
    check(inject_rate >= 0.0, "inject_rate", inject_rate, "r >= 0");
    check(mean_ttf > 0.0, "mean_ttf", mean_ttf, "T_f > 0 (inf disables faults)");
    check(cascade_prob >= 0.0 && cascade_prob <= 1.0, "cascade_prob", cascade_prob, "0 <= p0 <= 1");
    check(dep_window > 0.0, "dep_window", dep_window, "window > 0");
    check(ttl > 0.0, "ttl", ttl, "ttl > 0");
    check(txn_len_mean >= 1.0, "txn_len_mean", txn_len_mean, "mean >= 1");
    check(txn_len_sd >= 0.0, "txn_len_sd", txn_len_sd, "sd >= 0");
    check(abort_threshold > 0.0 && abort_threshold < 1.0, "abort_threshold", abort_threshold,
          "0 < threshold < 1");
}

void ExperimentConfig::validate() const {
    base.validate();
    if (replications < 1)
        throw ConfigError("config key 'replications' violates: replications >= 1");
    if (!(bisection_tolerance > 0.0))
        throw ConfigError("config key 'bisection_tolerance' violates: tolerance > 0");
    if (capacities.empty())
        throw ConfigError("config key 'capacities' violates: non-empty list");
    if (densities.empty())
        throw ConfigError("config key 'densities' violates: non-empty list");
    for (double d : densities)
        if (!(d > 0.0) || d > 1.0)
            throw ConfigError("config key 'densities' violates: 0 < d <= 1");
    for (double a : ray_angles)
        if (a < 0.0 || a > 90.0)
            throw ConfigError("config key 'ray_angles' violates: angle in [0, 90] degrees");
    for (double p : p0_values)
        if (p < 0.0 || p > 1.0)
            throw ConfigError("config key 'p0_values' violates: 0 <= p0 <= 1");
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + ov + "'");
        apply_key(cfg, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), overrides);
}

std::string emit_config(const ExperimentConfig& cfg) {
    const SimConfig& b = cfg.base;
    std::ostringstream os;
    auto list = [](const auto& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            if constexpr (std::is_floating_point_v<std::decay_t<decltype(v[0])>>)
                s += fmt_double(v[i]);
            else
                s += std::to_string(v[i]);
        }
        return s;
    };
    os << "n_nodes=" << b.n_nodes << '\n'
       << "capacity=" << b.capacity << '\n'
       << "density=" << fmt_double(b.density) << '\n'
       << "duration=" << fmt_double(b.duration) << '\n'
       << "inject_rate=" << fmt_double(b.inject_rate) << '\n'
       << "mean_ttf=" << fmt_double(b.mean_ttf) << '\n'
       << "cascade_prob=" << fmt_double(b.cascade_prob) << '\n'
       << "dep_window=" << fmt_double(b.dep_window) << '\n'
       << "ttl=" << fmt_double(b.ttl) << '\n'
       << "txn_len_mean=" << fmt_double(b.txn_len_mean) << '\n'
       << "txn_len_sd=" << fmt_double(b.txn_len_sd) << '\n'
       << "seed=" << b.seed << '\n'
       << "abort_threshold=" << fmt_double(b.abort_threshold) << '\n'
       << "capacities=" << list(cfg.capacities) << '\n'
       << "densities=" << list(cfg.densities) << '\n'
       << "replications=" << cfg.replications << '\n'
       << "bisection_tolerance=" << fmt_double(cfg.bisection_tolerance) << '\n'
       << "ray_angles=" << list(cfg.ray_angles) << '\n'
       << "p0_values=" << list(cfg.p0_values) << '\n';
    return os.str();
}

}  // namespace txnsim
