#include "genrs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "genrs/fast.hpp"
#include "genrs/rng.hpp"
#include "genrs/slow.hpp"

namespace genrs {

namespace {

struct Cell {
    std::string scheme;
    int sweep_idx = 0;
    double sweep_value = 0.0;
    int realization = 0;
};

LayerPolicy policy_of(const std::string& scheme) {
    if (scheme == "prop-rs" || scheme == "fast-prop" || scheme == "fast-cor" ||
        scheme == "fast-iid")
        return LayerPolicy::FullGeneral;
    if (scheme == "1l-rs" || scheme == "fast-1l") return LayerPolicy::OneLayer;
    return LayerPolicy::NoSplit;  // noma, ofdma
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t a,
                          std::uint64_t b = 0) {
    return RngStream::mix(RngStream::mix(RngStream::mix(master ^ (0x9e3779b97f4a7c15ull * tag)) ^
                                         a) ^
                          b);
}

// Effective scenario parameters of one sweep cell.
struct CellSetup {
    int antennas;
    int groups;
    double power_w;
};
CellSetup cell_setup(const ExperimentConfig& cfg, double sweep_value) {
    CellSetup s{cfg.antennas, cfg.groups, cfg.power_watts()};
    if (cfg.sweep == "M") s.antennas = static_cast<int>(sweep_value);
    if (cfg.sweep == "G") s.groups = static_cast<int>(sweep_value);
    if (cfg.sweep == "P") s.power_w = std::pow(10.0, (sweep_value - 30.0) / 10.0);
    return s;
}

ChannelStatistics make_stats(const ExperimentConfig& cfg, const CellSetup& setup) {
    if (cfg.channel == "iid") {
        return ChannelStatistics(IidModel{cfg.lambda}, cfg.users, setup.antennas);
    }
    OneRingModel model;
    model.azimuth_rad = group_azimuths(setup.groups, cfg.users);
    model.angular_spread_rad = cfg.angular_spread_deg * M_PI / 180.0;
    model.antenna_spacing = cfg.antenna_spacing;
    return ChannelStatistics(model, setup.antennas);
}

// Weights of a policy's structure from the canonical full weights (the
// group set does not depend on the policy).
std::vector<double> weights_for(const ExperimentConfig& cfg) { return cfg.alpha; }

void fill_rates(ResultRecord& rec, const SplitStructure& s, const RateAllocation& alloc,
                const std::vector<UserSet>& groups, const std::vector<UserSet>& layers) {
    rec.unit_rates.assign(groups.size(), 0.0);
    rec.layer_rates.assign(layers.size(), 0.0);
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
        rec.unit_rates[gi] = message_rate(alloc, s, groups[gi]);
    for (std::size_t li = 0; li < layers.size(); ++li)
        if (s.layer_index(layers[li]) >= 0)
            rec.layer_rates[li] = transmission_rate(alloc, s, layers[li]);
}

}  // namespace

RunOutput run(const ExperimentConfig& cfg, int jobs) {
    validate_config(cfg);
    RunOutput out;

    const RequestProfile profile = cfg.profile();
    const MessageUnitPartition partition = partition_messages(profile);
    const SplitStructure full(partition, LayerPolicy::FullGeneral);
    out.groups = full.groups();
    out.layers = full.layers();

    std::map<std::string, SplitStructure> structures;
    for (const auto& scheme : cfg.schemes)
        structures.try_emplace(scheme, partition, policy_of(scheme));

    const std::vector<double> sweep_values =
        cfg.sweep == "none" ? std::vector<double>{0.0} : cfg.sweep_values;

    std::vector<Cell> cells;
    for (int si = 0; si < static_cast<int>(sweep_values.size()); ++si) {
        for (const auto& scheme : cfg.schemes) {
            const bool fast = cfg.scenario == "fast";
            const int reps = fast ? 1 : cfg.realizations;
            for (int r = 0; r < reps; ++r)
                cells.push_back({scheme, si, sweep_values[si], r});
        }
    }
    out.records.resize(cells.size());

    auto run_cell = [&](const Cell& cell, ResultRecord& rec) {
        const auto t0 = std::chrono::steady_clock::now();
        rec.scheme = cell.scheme;
        rec.sweep_value = cell.sweep_value;
        rec.realization = cell.realization;
        const CellSetup setup = cell_setup(cfg, cell.sweep_value);
        const SplitStructure& s = structures.at(cell.scheme);
        rec.unit_rates.assign(out.groups.size(), 0.0);
        rec.layer_rates.assign(out.layers.size(), 0.0);
        try {
            ChannelStatistics stats = make_stats(cfg, setup);
            if (cfg.scenario == "slow") {
                // Schemes share channel draws for paired comparison.
                rec.seed = derive_seed(cfg.seed, 1, cell.sweep_idx);
                const ChannelRealization h =
                    sample_realization(stats, cfg.subcarriers, rec.seed, cell.realization);
                SlowParams params;
                params.power = setup.power_w;
                params.bandwidth = cfg.bandwidth_hz;
                params.noise = cfg.noise_w;
                params.weights = weights_for(cfg);
                params.obj_tol_rel = cfg.cccp_obj_tol_rel;
                params.max_outer = cfg.cccp_max_outer;
                params.solver.tol = cfg.solver_tol;
                if (cell.scheme == "ofdma") {
                    auto res = ofdma_baseline(h, s, params);
                    rec.wsr = res.wsr;
                    rec.iterations = 1;
                    for (std::size_t gi = 0; gi < out.groups.size(); ++gi)
                        rec.unit_rates[gi] = res.unit_rates[gi];
                    // Each unit rides its own single-group stream.
                    for (std::size_t li = 0; li < out.layers.size(); ++li) {
                        const int gi = s.group_index(out.layers[li]);
                        if (gi >= 0) rec.layer_rates[li] = res.unit_rates[gi];
                    }
                } else {
                    auto sol = cccp_slow(h, s, params);
                    rec.wsr = sol.objective_trace.back();
                    rec.iterations = sol.outer_iterations;
                    fill_rates(rec, s, sol.iterate.rates, out.groups, out.layers);
                }
            } else {
                rec.seed = derive_seed(cfg.seed, 2, cell.sweep_idx,
                                       std::hash<std::string>{}(cell.scheme));
                FastParams params;
                params.power = setup.power_w;
                params.bandwidth = cfg.bandwidth_hz;
                params.noise = cfg.noise_w;
                params.weights = weights_for(cfg);
                params.mc_samples = cfg.mc_samples;
                params.obj_tol_rel = cfg.cccp_obj_tol_rel;
                params.max_outer = cfg.cccp_max_outer;
                params.solver.tol = cfg.solver_tol;
                const ChannelStatistics& cell_stats = stats;
                std::vector<cvec> beams;
                if (cell.scheme == "fast-prop" || cell.scheme == "fast-1l") {
                    SscaParams ssca;
                    ssca.iterations = cfg.ssca_iterations;
                    auto sol = run_ssca(s, cell_stats, cfg.subcarriers, params, ssca, rec.seed);
                    if (!sol.slack_ok) rec.status = "failed:ssca-slack";
                    beams = sol.iterate.w;
                    rec.iterations = static_cast<int>(sol.objective_trace.size());
                    if (!cfg.out_dir.empty()) {
                        std::filesystem::create_directories(cfg.out_dir);
                        std::ofstream tf(cfg.out_dir + "/ssca_trace_" + cell.scheme + "_s" +
                                         std::to_string(cell.sweep_idx) + ".csv");
                        tf << "iteration,objective_bps,slack_norm,omega,gamma\n";
                        tf.precision(9);
                        for (std::size_t i = 0; i < sol.objective_trace.size(); ++i)
                            tf << (i + 1) << ',' << sol.objective_trace[i] << ','
                               << sol.slack_trace[i] << ',' << ssca.omega(static_cast<int>(i) + 1)
                               << ',' << ssca.gamma(static_cast<int>(i) + 1) << "\n";
                    }
                } else if (cell.scheme == "fast-cor") {
                    auto sol = cccp_correlated(s, cell_stats, cfg.subcarriers, params);
                    beams = sol.w;
                    rec.iterations = sol.outer_iterations;
                } else {  // fast-iid
                    auto sol = cccp_iid(s, cfg.subcarriers, cfg.lambda, params);
                    beams = recover_w(sol.t, setup.antennas);
                    rec.iterations = sol.outer_iterations;
                }
                // Honest final rates from a dedicated evaluation stream.
                const std::uint64_t eval_seed = derive_seed(cfg.seed, 3, cell.sweep_idx);
                auto lp = rate_lp(beams, s, cell_stats, params, cfg.mc_samples, eval_seed);
                rec.wsr = lp.wsr;
                fill_rates(rec, s, lp.rates, out.groups, out.layers);
            }
        } catch (const std::exception& e) {
            rec.status = std::string("failed:") + e.what();
            rec.wsr = 0.0;
        }
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
    };

    const int workers = jobs > 0 ? jobs
                                 : std::max(1u, std::thread::hardware_concurrency());
    if (workers <= 1 || cells.size() <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(cells[i], out.records[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cells.size()) return;
                    run_cell(cells[i], out.records[i]);
                }
            });
        for (auto& th : pool) th.join();
    }

    for (const auto& rec : out.records) out.any_failed = out.any_failed || rec.status != "ok";
    return out;
}

namespace {

std::string fmt9(double v) {
    std::ostringstream ss;
    ss.precision(9);
    ss << v;
    return ss.str();
}

}  // namespace

void emit_csv(const RunOutput& out, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("emit_csv: cannot open " + path);
    f << "scheme,sweep,realization,seed,status,wsr_bps,iterations,wall_ms";
    for (const auto& g : out.groups) {
        f << ",unit_rate{";
        const auto m = g.members();
        for (std::size_t i = 0; i < m.size(); ++i) f << (i ? "+" : "") << m[i];
        f << "}";
    }
    for (const auto& l : out.layers) {
        f << ",layer_rate{";
        const auto m = l.members();
        for (std::size_t i = 0; i < m.size(); ++i) f << (i ? "+" : "") << m[i];
        f << "}";
    }
    f << "\n";
    for (const auto& r : out.records) {
        f << r.scheme << ',' << fmt9(r.sweep_value) << ',' << r.realization << ',' << r.seed
          << ',' << r.status << ',' << fmt9(r.wsr) << ',' << r.iterations << ','
          << fmt9(r.wall_ms);
        for (double v : r.unit_rates) f << ',' << fmt9(v);
        for (double v : r.layer_rates) f << ',' << fmt9(v);
        f << "\n";
    }
}

RunOutput parse_records_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("parse_records_csv: cannot open " + path);
    RunOutput out;
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("parse_records_csv: empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) header.push_back(tok);
    }
    int unit_cols = 0, layer_cols = 0;
    for (const auto& h : header) {
        if (h.rfind("unit_rate{", 0) == 0) {
            ++unit_cols;
            UserSet set;
            std::string inner = h.substr(10, h.size() - 11);
            for (const auto& tok : [&] {
                     std::vector<std::string> parts;
                     std::stringstream ps(inner);
                     std::string p;
                     while (std::getline(ps, p, '+')) parts.push_back(p);
                     return parts;
                 }())
                set = set.with(std::stoi(tok));
            out.groups.push_back(set);
        }
        if (h.rfind("layer_rate{", 0) == 0) {
            ++layer_cols;
            UserSet set;
            std::string inner = h.substr(11, h.size() - 12);
            std::stringstream ps(inner);
            std::string p;
            while (std::getline(ps, p, '+')) set = set.with(std::stoi(p));
            out.layers.push_back(set);
        }
    }
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<std::string> tok;
        std::string t;
        while (std::getline(ss, t, ',')) tok.push_back(t);
        if (static_cast<int>(tok.size()) != 8 + unit_cols + layer_cols)
            throw std::runtime_error("parse_records_csv: ragged row");
        ResultRecord r;
        r.scheme = tok[0];
        r.sweep_value = std::stod(tok[1]);
        r.realization = std::stoi(tok[2]);
        r.seed = std::stoull(tok[3]);
        r.status = tok[4];
        r.wsr = std::stod(tok[5]);
        r.iterations = std::stoi(tok[6]);
        r.wall_ms = std::stod(tok[7]);
        for (int i = 0; i < unit_cols; ++i) r.unit_rates.push_back(std::stod(tok[8 + i]));
        for (int i = 0; i < layer_cols; ++i)
            r.layer_rates.push_back(std::stod(tok[8 + unit_cols + i]));
        out.any_failed = out.any_failed || r.status != "ok";
        out.records.push_back(std::move(r));
    }
    return out;
}

Summary summarize(const std::vector<ResultRecord>& records) {
    Summary sum;
    std::map<std::pair<std::string, double>, std::vector<const ResultRecord*>> cells;
    for (const auto& r : records) {
        if (r.status != "ok") continue;
        cells[{r.scheme, r.sweep_value}].push_back(&r);
    }
    for (const auto& [key, recs] : cells) {
        SummaryCell c;
        c.scheme = key.first;
        c.sweep_value = key.second;
        c.count = static_cast<int>(recs.size());
        for (const auto* r : recs) c.mean += r->wsr;
        c.mean /= c.count;
        if (c.count > 1) {
            double var = 0.0;
            for (const auto* r : recs) var += (r->wsr - c.mean) * (r->wsr - c.mean);
            var /= (c.count - 1);
            c.std_error = std::sqrt(var / c.count);
        } else {
            c.degenerate = true;
            sum.warnings.push_back("cell (" + c.scheme + ", " + fmt9(c.sweep_value) +
                                   ") has a single record; spread unavailable");
        }
        if (c.count < 5)
            sum.warnings.push_back("cell (" + c.scheme + ", " + fmt9(c.sweep_value) +
                                   ") has fewer than 5 records");
        sum.cells.push_back(c);
    }

    // Matched-realization differences per sweep value (variance-reduced
    // scheme comparison).
    std::map<double, std::vector<std::string>> schemes_at;
    for (const auto& c : sum.cells) schemes_at[c.sweep_value].push_back(c.scheme);
    for (auto& [sv, schemes] : schemes_at) {
        std::sort(schemes.begin(), schemes.end());
        for (std::size_t a = 0; a < schemes.size(); ++a) {
            for (std::size_t b = a + 1; b < schemes.size(); ++b) {
                std::map<int, double> wa, wb;
                for (const auto& r : records) {
                    if (r.status != "ok" || r.sweep_value != sv) continue;
                    if (r.scheme == schemes[a]) wa[r.realization] = r.wsr;
                    if (r.scheme == schemes[b]) wb[r.realization] = r.wsr;
                }
                std::vector<double> diffs;
                for (const auto& [rz, v] : wa)
                    if (wb.count(rz)) diffs.push_back(v - wb.at(rz));
                if (diffs.empty()) continue;
                PairwiseDiff d;
                d.scheme_a = schemes[a];
                d.scheme_b = schemes[b];
                d.sweep_value = sv;
                d.pairs = static_cast<int>(diffs.size());
                for (double v : diffs) d.mean_diff += v;
                d.mean_diff /= d.pairs;
                if (d.pairs > 1) {
                    double var = 0.0;
                    for (double v : diffs) var += (v - d.mean_diff) * (v - d.mean_diff);
                    var /= (d.pairs - 1);
                    d.se_diff = std::sqrt(var / d.pairs);
                }
                sum.pairwise.push_back(d);
            }
        }
    }
    return sum;
}

std::string format_summary(const Summary& summary) {
    std::ostringstream ss;
    ss.precision(6);
    ss << "scheme            sweep      n   mean WSR [bit/s]   std err\n";
    for (const auto& c : summary.cells) {
        ss << c.scheme;
        for (std::size_t i = c.scheme.size(); i < 18; ++i) ss << ' ';
        ss << c.sweep_value << "      " << c.count << "   " << c.mean << "   "
           << (c.degenerate ? std::string("degenerate") : fmt9(c.std_error)) << "\n";
    }
    if (!summary.pairwise.empty()) {
        ss << "\npairwise (matched realizations, A - B):\n";
        for (const auto& d : summary.pairwise)
            ss << "  " << d.scheme_a << " vs " << d.scheme_b << " @ " << d.sweep_value << ": "
               << d.mean_diff << " +- " << d.se_diff << " (" << d.pairs << " pairs)\n";
    }
    for (const auto& w : summary.warnings) ss << "warning: " << w << "\n";
    return ss.str();
}

std::vector<std::string> ordering_violations(const Summary& summary) {
    std::vector<std::string> out;
    auto check = [&](const std::string& lead, const std::vector<std::string>& baselines) {
        for (const auto& c : summary.cells) {
            if (c.scheme != lead) continue;
            for (const auto& base : baselines) {
                for (const auto& o : summary.cells) {
                    if (o.scheme != base || o.sweep_value != c.sweep_value) continue;
                    if (c.mean < o.mean * 0.99) {
                        std::ostringstream ss;
                        ss << lead << " mean " << c.mean << " trails " << base << " mean "
                           << o.mean << " at sweep " << c.sweep_value;
                        out.push_back(ss.str());
                    }
                }
            }
        }
    };
    check("prop-rs", {"1l-rs", "noma", "ofdma"});
    check("fast-prop", {"fast-1l"});
    return out;
}

}  // namespace genrs
