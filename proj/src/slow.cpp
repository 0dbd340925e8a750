#include "genrs/slow.hpp"

#include <cmath>
#include <stdexcept>

#include "dc_core.hpp"

namespace genrs {

namespace {

detail::DcParams to_dc_params(const SlowParams& p, const SplitStructure& s) {
    if (p.power <= 0.0 || p.bandwidth <= 0.0 || p.noise <= 0.0)
        throw std::invalid_argument("SlowParams: power, bandwidth, noise must be positive");
    if (p.weights.size() != s.groups().size())
        throw std::invalid_argument("SlowParams: one weight per group required");
    bool any = false;
    for (double a : p.weights) {
        if (a < 0.0) throw std::invalid_argument("SlowParams: negative weight");
        any = any || a > 0.0;
    }
    if (!any) throw std::invalid_argument("SlowParams: at least one positive weight");
    detail::DcParams dp;
    dp.power = p.power;
    dp.weights = p.weights;
    dp.obj_tol_rel = p.obj_tol_rel;
    dp.obj_tol_abs = p.obj_tol_abs > 0.0 ? p.obj_tol_abs / p.bandwidth : 0.0;
    dp.iterate_eps = p.iterate_eps;
    dp.max_outer = p.max_outer;
    dp.solver = p.solver;
    return dp;
}

detail::DcEngine make_engine(const ChannelRealization& h, const SplitStructure& s,
                             const SlowParams& p) {
    return detail::DcEngine(s, h.num_subcarriers, h.num_antennas,
                            detail::realization_forms(h, p.noise), detail::mrt_directions(h, s),
                            to_dc_params(p, s));
}

SlowIterate from_dc(const detail::DcIterate& it, const SlowParams& p) {
    SlowIterate out;
    out.w = it.w;
    out.rates.values = it.rates;
    for (auto& r : out.rates.values) r *= p.bandwidth;
    out.e = it.e;
    for (auto& e : out.e) e *= p.bandwidth;
    out.u.resize(it.v.size());
    for (std::size_t i = 0; i < it.v.size(); ++i) out.u[i] = std::exp2(it.v[i]);
    return out;
}

detail::DcIterate to_dc(const SlowIterate& it, const SlowParams& p) {
    detail::DcIterate out;
    out.w = it.w;
    out.rates = it.rates.values;
    for (auto& r : out.rates) r /= p.bandwidth;
    out.e = it.e;
    for (auto& e : out.e) e /= p.bandwidth;
    out.v.resize(it.u.size());
    for (std::size_t i = 0; i < it.u.size(); ++i) {
        if (!(it.u[i] > 0.0)) throw std::invalid_argument("SlowIterate: u must be positive");
        out.v[i] = std::log2(it.u[i]);
    }
    return out;
}

}  // namespace

double achievable_rate_rhs(const ChannelRealization& h, const std::vector<cvec>& w,
                           const SplitStructure& structure, const SlowParams& params, int k,
                           const std::vector<int>& x) {
    const int L = static_cast<int>(structure.layers().size());
    const int N = h.num_subcarriers;
    const auto& mine = structure.user_layers(k);
    double total = 0.0;
    for (int n = 1; n <= N; ++n) {
        double sig = 0.0, interf = 0.0;
        for (int li : x) sig += std::norm(h.at(k, n).dot(w[li * N + (n - 1)]));
        for (int li = 0; li < L; ++li) {
            if (!std::binary_search(mine.begin(), mine.end(), li))
                interf += std::norm(h.at(k, n).dot(w[li * N + (n - 1)]));
        }
        total += std::log2(1.0 + sig / (params.noise + interf));
    }
    return params.bandwidth * total;
}

SlowIterate init_feasible_slow(const ChannelRealization& h, const SplitStructure& structure,
                               const SlowParams& params) {
    return from_dc(make_engine(h, structure, params).feasible_init(), params);
}

SlowSubproblem build_problem4(const ChannelRealization& h, const SplitStructure& structure,
                              const SlowIterate& previous, const SlowParams& params) {
    auto engine = make_engine(h, structure, params);
    const detail::DcIterate prev = to_dc(previous, params);
    SlowSubproblem out{engine.build_subproblem(prev), engine.pack(prev)};
    return out;
}

SlowSolution cccp_slow(const ChannelRealization& h, const SplitStructure& structure,
                       const SlowParams& params, const std::optional<SlowIterate>& init) {
    auto engine = make_engine(h, structure, params);
    std::optional<detail::DcIterate> dc_init;
    if (init) dc_init = to_dc(*init, params);
    detail::DcSolution sol = engine.run(std::move(dc_init));
    SlowSolution out;
    out.iterate = from_dc(sol.iterate, params);
    out.objective_trace = std::move(sol.objective_trace);
    for (auto& o : out.objective_trace) o *= params.bandwidth;
    out.outer_iterations = sol.outer_iterations;
    out.newton_iterations = sol.newton_iterations;
    return out;
}

double lemma1_activity(const SlowIterate& iterate, const SlowParams& params) {
    double gap = 0.0;
    for (std::size_t i = 0; i < iterate.e.size(); ++i) {
        const double log_ratio = iterate.e[i] / params.bandwidth - std::log2(iterate.u[i]);
        gap = std::max(gap, std::abs(std::expm1(log_ratio * 0.6931471805599453)));
    }
    return gap;
}

double slow_feasibility_gap(const ChannelRealization& h, const SplitStructure& structure,
                            const SlowParams& params, const SlowIterate& iterate) {
    double worst = -std::numeric_limits<double>::infinity();
    // Power, relative to P.
    double pw = 0.0;
    for (const auto& w : iterate.w) pw += w.squaredNorm();
    worst = std::max(worst, (pw - params.power) / params.power);
    // Rate region, relative to the rhs magnitude.
    for (int k = 1; k <= structure.num_users(); ++k) {
        for (const auto& x : decode_subsets(structure, k)) {
            double lhs = 0.0;
            for (int li : x)
                lhs += transmission_rate(iterate.rates, structure, structure.layers()[li]);
            const double rhs = achievable_rate_rhs(h, iterate.w, structure, params, k, x);
            worst = std::max(worst, (lhs - rhs) / std::max(params.bandwidth, rhs));
        }
    }
    return worst;
}

OfdmaResult ofdma_baseline(const ChannelRealization& h, const SplitStructure& structure,
                           const SlowParams& params) {
    const int N = h.num_subcarriers;
    const int G = static_cast<int>(structure.groups().size());
    if (params.weights.size() != structure.groups().size())
        throw std::invalid_argument("ofdma_baseline: one weight per group required");

    // Per (group, subcarrier): MRT beam along the principal eigenvector of
    // the group's summed channel outer products; the unit rate on that
    // subcarrier is limited by the weakest group member.
    Eigen::MatrixXd gain(G, N);  // min-member |h^H d|^2 / sigma^2
    for (int gi = 0; gi < G; ++gi) {
        const auto members = structure.groups()[gi].members();
        for (int n = 1; n <= N; ++n) {
            cmat sum = cmat::Zero(h.num_antennas, h.num_antennas);
            for (int k : members) sum += h.at(k, n) * h.at(k, n).adjoint();
            Eigen::SelfAdjointEigenSolver<cmat> es(sum);
            const cvec dir = es.eigenvectors().col(h.num_antennas - 1);
            double worst = std::numeric_limits<double>::infinity();
            for (int k : members) worst = std::min(worst, std::norm(h.at(k, n).dot(dir)));
            gain(gi, n - 1) = worst / params.noise;
        }
    }

    // Greedy assignment by weighted marginal rate at equal power, lowest
    // subcarrier first; ties resolved toward the lower group index.
    OfdmaResult res;
    res.assignment.assign(N, 0);
    const double equal_power = params.power / static_cast<double>(N);
    for (int n = 0; n < N; ++n) {
        double best = -1.0;
        for (int gi = 0; gi < G; ++gi) {
            const double marginal =
                params.weights[gi] * std::log2(1.0 + equal_power * gain(gi, n));
            if (marginal > best + 1e-15) {
                best = marginal;
                res.assignment[n] = gi;
            }
        }
    }

    // Power allocation: maximize sum_n alpha_{a(n)} B log2(1 + p_n g_n)
    // subject to sum p <= P, p >= 0, via the kernel with neg-log atoms.
    VariableSpace vs;
    const Block pblk = vs.add_block("p", N, equal_power);
    const Block tblk = vs.add_block("t", N, 10.0);  // per-subcarrier rates, units of B
    ConvexProgram prog(vs);
    LinearForm obj;
    for (int n = 0; n < N; ++n) obj.add(tblk.at(n), 1.0);
    prog.maximize(obj);
    {
        LinearForm f;
        for (int n = 0; n < N; ++n) f.add(pblk.at(n), 1.0);
        f.constant = -params.power;
        prog.add_constraint(params.power).affine(std::move(f));
    }
    for (int n = 0; n < N; ++n) {
        prog.add_constraint(equal_power).affine(LinearForm{}.add(pblk.at(n), -1.0));
        // t_n - alpha w log2(1 + g p) <= 0
        Constraint& con = prog.add_constraint(10.0);
        con.affine(LinearForm{}.add(tblk.at(n), 1.0));
        NegLogAtom nl;
        LinearForm arg;
        arg.add(pblk.at(n), gain(res.assignment[n], n));
        arg.constant = 1.0;
        nl.terms.push_back({params.weights[res.assignment[n]], std::move(arg)});
        con.neglog(std::move(nl));
    }
    Eigen::VectorXd start(2 * N);
    for (int n = 0; n < N; ++n) {
        start(pblk.at(n)) = 0.5 * equal_power;
        start(tblk.at(n)) =
            0.5 * params.weights[res.assignment[n]] *
            std::log2(1.0 + 0.5 * equal_power * gain(res.assignment[n], n));
    }
    SolveOptions opt = params.solver;
    Solution sol = solve(prog, start, opt);
    if (sol.status == SolveStatus::Infeasible)
        throw std::runtime_error("ofdma_baseline: power allocation infeasible");

    res.power.assign(N, 0.0);
    res.unit_rates.assign(G, 0.0);
    for (int n = 0; n < N; ++n) {
        res.power[n] = std::max(0.0, sol.x(pblk.at(n)));
        const int gi = res.assignment[n];
        res.unit_rates[gi] +=
            params.bandwidth * std::log2(1.0 + res.power[n] * gain(gi, n));
    }
    for (int gi = 0; gi < G; ++gi) res.wsr += params.weights[gi] * res.unit_rates[gi];
    return res;
}

}  // namespace genrs
