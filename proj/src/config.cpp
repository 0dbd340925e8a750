#include "genrs/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace genrs {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != std::floor(d)) throw ConfigError("config: key '" + key + "' expects an integer");
    return static_cast<int>(d);
}

const std::set<std::string> kSlowSchemes = {"prop-rs", "1l-rs", "noma", "ofdma"};
const std::set<std::string> kFastSchemes = {"fast-prop", "fast-1l", "fast-cor", "fast-iid"};

}  // namespace

RequestProfile ExperimentConfig::profile() const {
    RequestProfile p;
    p.num_users = users;
    p.num_messages = messages;
    p.requests = requests;
    return p;
}

ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (kv.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
        kv[key] = val;
    }

    ExperimentConfig cfg;
    auto take = [&](const char* key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) return "";
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    if (auto v = take("scenario"); !v.empty()) cfg.scenario = v;
    if (auto v = take("users"); !v.empty()) cfg.users = to_int("users", v);
    if (auto v = take("messages"); !v.empty()) cfg.messages = to_int("messages", v);
    cfg.requests.assign(std::max(0, cfg.users), {});
    for (int k = 1; k <= cfg.users; ++k) {
        const std::string key = "request." + std::to_string(k);
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("config: missing key '" + key + "'");
        for (const auto& tok : split(it->second, ','))
            cfg.requests[k - 1].push_back(to_int(key, tok));
        std::sort(cfg.requests[k - 1].begin(), cfg.requests[k - 1].end());
        kv.erase(key);
    }

    std::string alpha_raw = take("alpha");
    if (auto v = take("schemes"); !v.empty()) cfg.schemes = split(v, ',');
    if (auto v = take("channel"); !v.empty()) cfg.channel = v;
    if (auto v = take("groups"); !v.empty()) cfg.groups = to_int("groups", v);
    if (auto v = take("angular_spread_deg"); !v.empty())
        cfg.angular_spread_deg = to_double("angular_spread_deg", v);
    if (auto v = take("antenna_spacing"); !v.empty())
        cfg.antenna_spacing = to_double("antenna_spacing", v);
    if (auto v = take("lambda"); !v.empty()) cfg.lambda = to_double("lambda", v);
    if (auto v = take("subcarriers"); !v.empty()) cfg.subcarriers = to_int("subcarriers", v);
    if (auto v = take("antennas"); !v.empty()) cfg.antennas = to_int("antennas", v);
    if (auto v = take("bandwidth_hz"); !v.empty()) cfg.bandwidth_hz = to_double("bandwidth_hz", v);
    if (auto v = take("noise_w"); !v.empty()) cfg.noise_w = to_double("noise_w", v);
    if (auto v = take("power_dbm"); !v.empty()) cfg.power_dbm = to_double("power_dbm", v);
    if (auto v = take("sweep"); !v.empty()) cfg.sweep = v;
    if (auto v = take("sweep_values"); !v.empty())
        for (const auto& tok : split(v, ',')) cfg.sweep_values.push_back(to_double("sweep_values", tok));
    if (auto v = take("realizations"); !v.empty()) cfg.realizations = to_int("realizations", v);
    if (auto v = take("seed"); !v.empty()) cfg.seed = static_cast<std::uint64_t>(std::stoull(v));
    if (auto v = take("out_dir"); !v.empty()) cfg.out_dir = v;
    if (auto v = take("cccp_obj_tol_rel"); !v.empty())
        cfg.cccp_obj_tol_rel = to_double("cccp_obj_tol_rel", v);
    if (auto v = take("cccp_max_outer"); !v.empty()) cfg.cccp_max_outer = to_int("cccp_max_outer", v);
    if (auto v = take("ssca_iterations"); !v.empty())
        cfg.ssca_iterations = to_int("ssca_iterations", v);
    if (auto v = take("mc_samples"); !v.empty()) cfg.mc_samples = to_int("mc_samples", v);
    if (auto v = take("solver_tol"); !v.empty()) cfg.solver_tol = to_double("solver_tol", v);

    if (!kv.empty()) throw ConfigError("config: unknown key '" + kv.begin()->first + "'");

    // Resolve the weights against the canonical group order.
    RequestProfile profile = cfg.profile();
    try {
        profile.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid request profile: ") + e.what());
    }
    const auto part = partition_messages(profile);
    const auto groups = part.groups();
    if (alpha_raw.empty() || alpha_raw == "uniform") {
        cfg.alpha.assign(groups.size(), 1.0 / static_cast<double>(groups.size()));
    } else {
        for (const auto& tok : split(alpha_raw, ','))
            cfg.alpha.push_back(to_double("alpha", tok));
        if (cfg.alpha.size() != groups.size())
            throw ConfigError("config: alpha needs one weight per message unit (" +
                              std::to_string(groups.size()) + " units in canonical order)");
    }

    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.scenario != "slow" && cfg.scenario != "fast")
        throw ConfigError("config: scenario must be slow or fast");
    RequestProfile p = cfg.profile();
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid request profile: ") + e.what());
    }
    if (cfg.schemes.empty() && !cfg.sweep_values.empty() && cfg.sweep == "none")
        throw ConfigError("config: sweep_values given without a sweep axis");

    for (const auto& s : cfg.schemes) {
        const bool slow = kSlowSchemes.count(s) > 0;
        const bool fast = kFastSchemes.count(s) > 0;
        if (!slow && !fast) throw ConfigError("config: unknown scheme '" + s + "'");
        if (cfg.scenario == "slow" && !slow)
            throw ConfigError("config: scheme '" + s + "' requires scenario = fast");
        if (cfg.scenario == "fast" && !fast)
            throw ConfigError("config: scheme '" + s + "' requires scenario = slow");
        if (s == "fast-iid" && cfg.channel != "iid")
            throw ConfigError("config: scheme 'fast-iid' requires channel = iid");
    }

    if (cfg.channel != "onering" && cfg.channel != "iid")
        throw ConfigError("config: channel must be onering or iid");
    if (cfg.channel == "onering" && (cfg.groups < 1 || cfg.groups > cfg.users))
        throw ConfigError("config: groups must satisfy 1 <= G <= K");
    if (cfg.lambda <= 0.0) throw ConfigError("config: lambda must be positive");
    if (cfg.subcarriers < 1 || cfg.antennas < 1)
        throw ConfigError("config: subcarriers and antennas must be positive");
    if (cfg.bandwidth_hz <= 0.0 || cfg.noise_w <= 0.0)
        throw ConfigError("config: bandwidth_hz and noise_w must be positive");
    if (cfg.realizations < 1) throw ConfigError("config: realizations must be positive");

    if (cfg.sweep != "none" && cfg.sweep != "M" && cfg.sweep != "P" && cfg.sweep != "G")
        throw ConfigError("config: sweep must be one of none, M, P, G");
    if (cfg.sweep != "none" && cfg.sweep_values.empty())
        throw ConfigError("config: sweep axis set but sweep_values empty");
    for (double v : cfg.sweep_values) {
        if (cfg.sweep == "M" && (v < 1.0 || v != std::floor(v)))
            throw ConfigError("config: sweep M values must be positive integers");
        if (cfg.sweep == "G") {
            if (v < 1.0 || v != std::floor(v) || v > cfg.users)
                throw ConfigError("config: sweep G values must be integers in [1, K]");
            if (cfg.channel != "onering")
                throw ConfigError("config: sweep G requires channel = onering");
        }
    }
    for (double a : cfg.alpha)
        if (a < 0.0) throw ConfigError("config: alpha weights must be nonnegative");
    if (std::all_of(cfg.alpha.begin(), cfg.alpha.end(), [](double a) { return a == 0.0; }))
        throw ConfigError("config: at least one alpha weight must be positive");
    if (cfg.cccp_obj_tol_rel <= 0.0) throw ConfigError("config: cccp_obj_tol_rel must be positive");
    if (cfg.cccp_max_outer < 1) throw ConfigError("config: cccp_max_outer must be positive");
    if (cfg.ssca_iterations < 1) throw ConfigError("config: ssca_iterations must be positive");
    if (cfg.mc_samples < 2) throw ConfigError("config: mc_samples must be at least 2");
    if (cfg.solver_tol <= 0.0) throw ConfigError("config: solver_tol must be positive");
}

}  // namespace genrs
