#include "genrs/fast.hpp"

#include <cmath>
#include <stdexcept>

#include "dc_core.hpp"

namespace genrs {

namespace {

constexpr double kLn2 = 0.6931471805599453;

void check_fast_params(const FastParams& p, const SplitStructure& s) {
    if (p.power <= 0.0 || p.bandwidth <= 0.0 || p.noise <= 0.0)
        throw std::invalid_argument("FastParams: power, bandwidth, noise must be positive");
    if (p.weights.size() != s.groups().size())
        throw std::invalid_argument("FastParams: one weight per group required");
    if (p.mc_samples < 1) throw std::invalid_argument("FastParams: mc_samples must be >= 1");
}

int w_flat_dim(const SplitStructure& s, int N, int M) {
    return static_cast<int>(s.layers().size()) * N * 2 * M;
}

Eigen::VectorXd flatten_w(const std::vector<cvec>& w, int N, int M) {
    Eigen::VectorXd x(static_cast<int>(w.size()) * 2 * M);
    int off = 0;
    for (const auto& v : w)
        for (int m = 0; m < M; ++m) {
            x(off++) = v(m).real();
            x(off++) = v(m).imag();
        }
    (void)N;
    return x;
}

std::vector<cvec> unflatten_w(const Eigen::VectorXd& x, int beams, int M) {
    std::vector<cvec> w(beams);
    int off = 0;
    for (auto& v : w) {
        v = cvec(M);
        for (int m = 0; m < M; ++m) {
            v(m) = std::complex<double>(x(off), x(off + 1));
            off += 2;
        }
    }
    return w;
}

// Adds c * (coefficient pattern of Re/Im of q^H w_{G,n}) into a dense
// vector over the flattened w reals.
void add_inner_gradient(Eigen::VectorXd& acc, int layer, int n, int N, int M, const cvec& q,
                        std::complex<double> z0, double scale) {
    const int base = (layer * N + (n - 1)) * 2 * M;
    for (int m = 0; m < M; ++m) {
        const double a = q(m).real(), b = q(m).imag();
        // scale * d/dw Re{conj(z0) * q^H w}
        acc(base + 2 * m) += scale * (z0.real() * a - z0.imag() * b);
        acc(base + 2 * m + 1) += scale * (z0.real() * b + z0.imag() * a);
    }
}

std::vector<double> normalized_weights(const FastParams& p) { return p.weights; }

}  // namespace

void SscaParams::validate() const {
    if (iterations < 1) throw std::invalid_argument("SscaParams: need at least one iteration");
    if (tau <= 0.0) throw std::invalid_argument("SscaParams: tau must be positive");
    if (!(a_omega > 0.0 && a_omega <= 1.0))
        throw std::invalid_argument("SscaParams: need 0 < a_omega <= 1");
    if (!(a_gamma > a_omega && a_gamma <= 1.0))
        throw std::invalid_argument("SscaParams: need a_omega < a_gamma <= 1");
    if (!(2.0 * a_gamma > 1.0)) throw std::invalid_argument("SscaParams: need 2 a_gamma > 1");
    if (rho < 0.0) throw std::invalid_argument("SscaParams: rho must be nonnegative");
}

double SscaParams::omega(int i) const { return std::pow(static_cast<double>(i), -a_omega); }
double SscaParams::gamma(int i) const { return std::pow(static_cast<double>(i), -a_gamma); }

SurrogateState SurrogateState::zeros(int num_slots, int w_dim) {
    SurrogateState s;
    s.num_slots = num_slots;
    s.w_dim = w_dim;
    s.quad.assign(num_slots, 0.0);
    s.lin.assign(num_slots, Eigen::VectorXd::Zero(w_dim));
    s.constant.assign(num_slots, 0.0);
    return s;
}

double SurrogateState::evaluate(int slot, const Eigen::VectorXd& w_flat) const {
    return constant[slot] + lin[slot].dot(w_flat) - quad[slot] * w_flat.squaredNorm();
}

McEstimate ergodic_rate_rhs(const std::vector<cvec>& w, const ChannelStatistics& stats,
                            const SplitStructure& structure, const FastParams& params, int k,
                            const std::vector<int>& x, int samples, std::uint64_t seed) {
    check_fast_params(params, structure);
    if (samples < 1) throw std::invalid_argument("ergodic_rate_rhs: samples must be >= 1");
    const int N = static_cast<int>(w.size()) / static_cast<int>(structure.layers().size());
    const int L = static_cast<int>(structure.layers().size());
    const auto& mine = structure.user_layers(k);
    std::vector<int> out_layers;
    for (int li = 0; li < L; ++li)
        if (!std::binary_search(mine.begin(), mine.end(), li)) out_layers.push_back(li);

    const int pairs = (samples + 1) / 2;
    double acc = 0.0, acc2 = 0.0;
    for (int p = 0; p < pairs; ++p) {
        double pair_mean = 0.0;
        for (int half = 0; half < 2; ++half) {
            double slot_sum = 0.0;
            for (int n = 1; n <= N; ++n) {
                const cvec g = standard_complex_gaussian(stats.num_antennas(), seed,
                                                         static_cast<std::uint64_t>(p), k, n,
                                                         half == 1);
                const cvec h = stats.covariance_sqrt(k, n) * g;
                double sig = 0.0, interf = 0.0;
                for (int li : x) sig += std::norm(h.dot(w[li * N + (n - 1)]));
                for (int li : out_layers) interf += std::norm(h.dot(w[li * N + (n - 1)]));
                slot_sum += std::log2(1.0 + sig / (params.noise + interf));
            }
            pair_mean += 0.5 * slot_sum;
        }
        acc += pair_mean;
        acc2 += pair_mean * pair_mean;
    }
    McEstimate est;
    const double mean = acc / pairs;
    est.mean = params.bandwidth * mean;
    if (pairs > 1) {
        const double var = std::max(0.0, acc2 / pairs - mean * mean) /
                           static_cast<double>(pairs - 1);
        est.std_error = params.bandwidth * std::sqrt(var);
    }
    return est;
}

void ssca_step(SscaState& state, const ChannelRealization& h_sample,
               const SplitStructure& structure, const FastParams& params,
               const SscaParams& ssca, int i) {
    check_fast_params(params, structure);
    ssca.validate();
    if (i < 1) throw std::invalid_argument("ssca_step: iteration index is 1-based");
    const int N = h_sample.num_subcarriers;
    const int M = h_sample.num_antennas;
    const int L = static_cast<int>(structure.layers().size());
    const detail::KxLayout kx = detail::KxLayout::build(structure);
    const int nkx = kx.num_kx();
    const int wdim = w_flat_dim(structure, N, M);
    if (state.surrogate.num_slots != nkx * N)
        throw std::invalid_argument("ssca_step: surrogate layout mismatch");

    const double inv_sigma = 1.0 / std::sqrt(params.noise);
    const Eigen::VectorXd w_prev_flat = flatten_w(state.iterate.w, N, M);
    const double omega = ssca.omega(i);

    std::vector<std::vector<int>> out_layers(structure.num_users());
    for (int k = 1; k <= structure.num_users(); ++k) {
        const auto& mine = structure.user_layers(k);
        for (int li = 0; li < L; ++li)
            if (!std::binary_search(mine.begin(), mine.end(), li))
                out_layers[k - 1].push_back(li);
    }

    // Surrogate recursion with the sample's convex approximation.
    for (int slot_kx = 0; slot_kx < nkx; ++slot_kx) {
        const auto [k, xi] = kx.flat[slot_kx];
        const auto& x = kx.per_user[k - 1][xi];
        for (int n = 1; n <= N; ++n) {
            const int slot = slot_kx * N + (n - 1);
            const cvec h = inv_sigma * h_sample.at(k, n);
            double sig = 0.0, interf = 0.0;
            std::vector<std::complex<double>> zx(x.size()), zo(out_layers[k - 1].size());
            for (std::size_t j = 0; j < x.size(); ++j) {
                zx[j] = h.dot(state.iterate.w[x[j] * N + (n - 1)]);
                sig += std::norm(zx[j]);
            }
            for (std::size_t j = 0; j < out_layers[k - 1].size(); ++j) {
                zo[j] = h.dot(state.iterate.w[out_layers[k - 1][j] * N + (n - 1)]);
                interf += std::norm(zo[j]);
            }
            const double denom_full = kLn2 * (1.0 + interf + sig);
            const double denom_int = kLn2 * (1.0 + interf);

            Eigen::VectorXd lin = Eigen::VectorXd::Zero(wdim);
            double cst = std::log2(1.0 + sig / (1.0 + interf));
            for (std::size_t j = 0; j < x.size(); ++j) {
                add_inner_gradient(lin, x[j], n, N, M, h, zx[j], 2.0 / denom_full);
                cst -= 2.0 * std::norm(zx[j]) / denom_full;
            }
            for (std::size_t j = 0; j < out_layers[k - 1].size(); ++j) {
                const int li = out_layers[k - 1][j];
                add_inner_gradient(lin, li, n, N, M, h, zo[j], 2.0 / denom_full);
                add_inner_gradient(lin, li, n, N, M, h, zo[j], -2.0 / denom_int);
                cst -= 2.0 * std::norm(zo[j]) / denom_full;
                cst += 2.0 * std::norm(zo[j]) / denom_int;
            }
            // Proximal term -tau ||w - w_prev||^2.
            lin += 2.0 * ssca.tau * w_prev_flat;
            cst -= ssca.tau * w_prev_flat.squaredNorm();

            auto& sur = state.surrogate;
            sur.quad[slot] = (1.0 - omega) * sur.quad[slot] + omega * ssca.tau;
            sur.lin[slot] = (1.0 - omega) * sur.lin[slot] + omega * lin;
            sur.constant[slot] = (1.0 - omega) * sur.constant[slot] + omega * cst;
        }
    }
    state.surrogate.iteration = i;

    // Penalized convex subproblem.
    const double wscale = std::sqrt(params.power / static_cast<double>(L * N));
    VariableSpace vs;
    const Block wblk = vs.add_block("w", wdim, wscale);
    const Block rblk = vs.add_block("R", structure.num_split_indices(), 10.0);
    const Block sblk = vs.add_block("s", nkx, 10.0);
    ConvexProgram prog(vs);
    LinearForm obj;
    for (std::size_t gi = 0; gi < structure.groups().size(); ++gi)
        for (int li : structure.layers_of_group(static_cast<int>(gi)))
            obj.add(rblk.at(structure.split_index(static_cast<int>(gi), li)),
                    normalized_weights(params)[gi]);
    for (int j = 0; j < nkx; ++j) obj.add(sblk.at(j), -state.rho);
    prog.maximize(obj);
    {
        Constraint& con = prog.add_constraint(params.power);
        QuadraticAtom q;
        for (int c = 0; c < wdim; ++c) q.terms.push_back({1.0, LinearForm{}.add(wblk.at(c), 1.0)});
        con.quadratic(std::move(q));
        con.affine(LinearForm{{}, -params.power});
    }
    for (int c = 0; c < rblk.size; ++c)
        prog.add_constraint(1.0).affine(LinearForm{}.add(rblk.at(c), -1.0));
    for (int j = 0; j < nkx; ++j)
        prog.add_constraint(1.0).affine(LinearForm{}.add(sblk.at(j), -1.0));

    for (int slot_kx = 0; slot_kx < nkx; ++slot_kx) {
        const auto [k, xi] = kx.flat[slot_kx];
        const auto& x = kx.per_user[k - 1][xi];
        Constraint& con = prog.add_constraint(10.0);
        LinearForm aff;
        for (int li : x)
            for (int gi : structure.origins_of_layer(li))
                aff.add(rblk.at(structure.split_index(gi, li)), 1.0);
        aff.add(sblk.at(slot_kx), -1.0);
        double quad_total = 0.0;
        for (int n = 1; n <= N; ++n) {
            const int slot = slot_kx * N + (n - 1);
            aff.constant -= state.surrogate.constant[slot];
            const auto& lin = state.surrogate.lin[slot];
            for (int c = 0; c < wdim; ++c)
                if (lin(c) != 0.0) aff.add(wblk.at(c), -lin(c));
            quad_total += state.surrogate.quad[slot];
        }
        con.affine(std::move(aff));
        if (quad_total > 0.0) {
            QuadraticAtom q;
            for (int c = 0; c < wdim; ++c)
                q.terms.push_back({quad_total, LinearForm{}.add(wblk.at(c), 1.0)});
            con.quadratic(std::move(q));
        }
    }

    // Strictly feasible start: previous beams, small rates, generous slack.
    Eigen::VectorXd start = Eigen::VectorXd::Zero(prog.dimension());
    start.head(wdim) = w_prev_flat;
    for (int c = 0; c < rblk.size; ++c) start(rblk.at(c)) = 1e-3;
    for (int slot_kx = 0; slot_kx < nkx; ++slot_kx) {
        const auto [k, xi] = kx.flat[slot_kx];
        const auto& x = kx.per_user[k - 1][xi];
        double lhs = 0.0;
        for (int li : x) lhs += 1e-3 * static_cast<double>(structure.origins_of_layer(li).size());
        for (int n = 1; n <= N; ++n)
            lhs -= state.surrogate.evaluate(slot_kx * N + (n - 1), w_prev_flat);
        start(sblk.at(slot_kx)) = std::max(1.0, lhs + 1.0);
    }

    Solution sol = solve(prog, start, params.solver);
    if (sol.status == SolveStatus::Infeasible)
        throw std::runtime_error("ssca_step: subproblem reported infeasible");

    const double gamma = ssca.gamma(i);
    const Eigen::VectorXd w_bar = sol.x.head(wdim);
    const Eigen::VectorXd w_new = (1.0 - gamma) * w_prev_flat + gamma * w_bar;
    state.iterate.w = unflatten_w(w_new, L * N, M);
    state.iterate.rates.values.assign(rblk.size, 0.0);
    for (int c = 0; c < rblk.size; ++c)
        state.iterate.rates.values[c] = params.bandwidth * sol.x(rblk.at(c));
    state.iterate.slack.assign(nkx, 0.0);
    for (int j = 0; j < nkx; ++j)
        state.iterate.slack[j] = params.bandwidth * std::max(0.0, sol.x(sblk.at(j)));
}

FastSolution run_ssca(const SplitStructure& structure, const ChannelStatistics& stats,
                      int num_subcarriers, const FastParams& params, const SscaParams& ssca,
                      std::uint64_t seed) {
    check_fast_params(params, structure);
    ssca.validate();
    const int N = num_subcarriers;
    const int M = stats.num_antennas();
    const int L = static_cast<int>(structure.layers().size());
    const detail::KxLayout kx = detail::KxLayout::build(structure);

    double alpha_sum = 0.0;
    for (double a : params.weights) alpha_sum += a;
    double rho = ssca.rho > 0.0 ? ssca.rho : 10.0 * alpha_sum;

    FastSolution out;
    for (int attempt = 0; attempt <= ssca.max_escalations; ++attempt) {
        SscaState state;
        state.rho = rho;
        state.surrogate = SurrogateState::zeros(kx.num_kx() * N, w_flat_dim(structure, N, M));
        // Statistical MRT directions with the start power concentrated on
        // an interference-free anchor layer; equal-power starts are
        // interference-limited and the averaged surrogates then climb
        // slowly under the decaying step sizes.
        const auto dirs = detail::statistics_directions(stats, structure, N);
        int anchor = structure.layer_index(UserSet::all(structure.num_users()));
        if (anchor < 0) anchor = L - 1;
        constexpr double whisper = 1e-8;
        const double anchor_beam =
            0.9 * params.power * (1.0 - whisper) / static_cast<double>(N);
        const double other_beam =
            L > 1 ? 0.9 * params.power * whisper / static_cast<double>((L - 1) * N) : 0.0;
        state.iterate.w.resize(L * N);
        for (int b = 0; b < L * N; ++b)
            state.iterate.w[b] =
                std::sqrt(b / N == anchor ? anchor_beam : other_beam) * dirs[b];
        state.iterate.rates = RateAllocation::zeros(structure);
        state.iterate.slack.assign(kx.num_kx(), 0.0);

        out.objective_trace.clear();
        out.slack_trace.clear();
        const std::uint64_t attempt_seed = RngStream::mix(seed + 0x5ca1ab1e * attempt);
        for (int i = 1; i <= ssca.iterations; ++i) {
            const ChannelRealization h = sample_realization(stats, N, attempt_seed, i);
            ssca_step(state, h, structure, params, ssca, i);
            double obj = 0.0;
            for (std::size_t gi = 0; gi < structure.groups().size(); ++gi)
                for (int li : structure.layers_of_group(static_cast<int>(gi)))
                    obj += params.weights[gi] *
                           state.iterate.rates.values[structure.split_index(
                               static_cast<int>(gi), li)];
            double smax = 0.0;
            for (double s : state.iterate.slack) smax = std::max(smax, s);
            for (double s : state.iterate.slack) obj -= state.rho * s;
            out.objective_trace.push_back(obj);
            out.slack_trace.push_back(smax / (params.bandwidth * N));
        }
        out.iterate = state.iterate;
        out.rho_final = rho;
        out.escalations = attempt;
        out.slack_ok = out.slack_trace.back() <= ssca.slack_tol;
        if (out.slack_ok) break;
        rho *= 10.0;
    }
    return out;
}

FastCorSolution cccp_correlated(const SplitStructure& structure, const ChannelStatistics& stats,
                                int num_subcarriers, const FastParams& params,
                                const std::optional<SlowIterate>& init) {
    check_fast_params(params, structure);
    detail::DcParams dp;
    dp.power = params.power;
    dp.weights = params.weights;
    dp.obj_tol_rel = params.obj_tol_rel;
    dp.obj_tol_abs = params.obj_tol_abs > 0.0 ? params.obj_tol_abs / params.bandwidth : 0.0;
    dp.max_outer = params.max_outer;
    dp.solver = params.solver;
    detail::DcEngine engine(structure, num_subcarriers, stats.num_antennas(),
                            detail::statistics_forms(stats, num_subcarriers, params.noise),
                            detail::statistics_directions(stats, structure, num_subcarriers), dp);
    std::optional<detail::DcIterate> dc_init;
    if (init) {
        detail::DcIterate it;
        it.w = init->w;
        it.rates = init->rates.values;
        for (auto& r : it.rates) r /= params.bandwidth;
        it.e = init->e;
        for (auto& e : it.e) e /= params.bandwidth;
        it.v.resize(init->u.size());
        for (std::size_t i = 0; i < init->u.size(); ++i) it.v[i] = std::log2(init->u[i]);
        dc_init = std::move(it);
    }
    detail::DcSolution sol = engine.run(std::move(dc_init));
    FastCorSolution out;
    out.w = std::move(sol.iterate.w);
    out.rates.values = sol.iterate.rates;
    for (auto& r : out.rates.values) r *= params.bandwidth;
    out.objective_trace = std::move(sol.objective_trace);
    for (auto& o : out.objective_trace) o *= params.bandwidth;
    out.outer_iterations = sol.outer_iterations;
    return out;
}

SlowSubproblem build_problem8(const ChannelStatistics& stats, int num_subcarriers,
                              const SplitStructure& structure, const SlowIterate& previous,
                              const FastParams& params) {
    check_fast_params(params, structure);
    detail::DcParams dp;
    dp.power = params.power;
    dp.weights = params.weights;
    dp.solver = params.solver;
    detail::DcEngine engine(structure, num_subcarriers, stats.num_antennas(),
                            detail::statistics_forms(stats, num_subcarriers, params.noise),
                            detail::statistics_directions(stats, structure, num_subcarriers), dp);
    detail::DcIterate prev;
    prev.w = previous.w;
    prev.rates = previous.rates.values;
    for (auto& r : prev.rates) r /= params.bandwidth;
    prev.e = previous.e;
    for (auto& e : prev.e) e /= params.bandwidth;
    prev.v.resize(previous.u.size());
    for (std::size_t i = 0; i < previous.u.size(); ++i) prev.v[i] = std::log2(previous.u[i]);
    return SlowSubproblem{engine.build_subproblem(prev), engine.pack(prev)};
}

RateLpResult rate_lp(const std::vector<cvec>& w, const SplitStructure& structure,
                     const ChannelStatistics& stats, const FastParams& params, int samples,
                     std::uint64_t seed) {
    check_fast_params(params, structure);
    const detail::KxLayout kx = detail::KxLayout::build(structure);
    const int nkx = kx.num_kx();
    std::vector<double> rhs(nkx);
    for (int j = 0; j < nkx; ++j) {
        const auto [k, xi] = kx.flat[j];
        rhs[j] =
            ergodic_rate_rhs(w, stats, structure, params, k, kx.per_user[k - 1][xi], samples, seed)
                .mean;
    }
    return rate_lp_from_rhs(structure, params, rhs);
}

RateLpResult rate_lp_from_rhs(const SplitStructure& structure, const FastParams& params,
                              const std::vector<double>& rhs) {
    check_fast_params(params, structure);
    const detail::KxLayout kx = detail::KxLayout::build(structure);
    const int nkx = kx.num_kx();
    if (static_cast<int>(rhs.size()) != nkx)
        throw std::invalid_argument("rate_lp_from_rhs: rhs count mismatch");

    RateLpResult res;
    res.rhs = rhs;

    // Layers whose weakest singleton budget vanishes carry no rate.
    const int L = static_cast<int>(structure.layers().size());
    std::vector<bool> layer_dead(L, false);
    for (int j = 0; j < nkx; ++j) {
        const auto [k, xi] = kx.flat[j];
        const auto& x = kx.per_user[k - 1][xi];
        if (x.size() == 1 && res.rhs[j] <= 1e-9 * params.bandwidth) layer_dead[x[0]] = true;
    }

    std::vector<int> split_var(structure.num_split_indices(), -1);
    int nvar = 0;
    for (int si = 0; si < structure.num_split_indices(); ++si)
        if (!layer_dead[structure.split_indices()[si].layer]) split_var[si] = nvar++;

    res.rates = RateAllocation::zeros(structure);
    if (nvar > 0) {
        VariableSpace vs;
        const Block rblk = vs.add_block("R", nvar, 10.0);
        ConvexProgram prog(vs);
        LinearForm obj;
        for (std::size_t gi = 0; gi < structure.groups().size(); ++gi)
            for (int li : structure.layers_of_group(static_cast<int>(gi))) {
                const int v = split_var[structure.split_index(static_cast<int>(gi), li)];
                if (v >= 0) obj.add(rblk.at(v), params.weights[gi]);
            }
        prog.maximize(obj);
        for (int v = 0; v < nvar; ++v)
            prog.add_constraint(1.0).affine(LinearForm{}.add(rblk.at(v), -1.0));
        double min_rhs = std::numeric_limits<double>::infinity();
        int max_terms = 1;
        for (int j = 0; j < nkx; ++j) {
            const auto [k, xi] = kx.flat[j];
            const auto& x = kx.per_user[k - 1][xi];
            LinearForm f;
            int terms = 0;
            for (int li : x)
                for (int gi : structure.origins_of_layer(li)) {
                    const int v = split_var[structure.split_index(gi, li)];
                    if (v >= 0) {
                        f.add(rblk.at(v), 1.0);
                        ++terms;
                    }
                }
            if (terms == 0) continue;
            f.constant = -res.rhs[j] / params.bandwidth;
            prog.add_constraint(std::max(1.0, res.rhs[j] / params.bandwidth))
                .affine(std::move(f));
            min_rhs = std::min(min_rhs, res.rhs[j] / params.bandwidth);
            max_terms = std::max(max_terms, terms);
        }
        Eigen::VectorXd start =
            Eigen::VectorXd::Constant(nvar, 0.5 * min_rhs / static_cast<double>(max_terms));
        Solution sol = solve(prog, start, params.solver);
        if (sol.status == SolveStatus::Infeasible)
            throw std::runtime_error("rate_lp: infeasible rate polytope");
        for (int si = 0; si < structure.num_split_indices(); ++si)
            if (split_var[si] >= 0)
                res.rates.values[si] =
                    params.bandwidth * std::max(0.0, sol.x(rblk.at(split_var[si])));
    }
    for (std::size_t gi = 0; gi < structure.groups().size(); ++gi)
        res.wsr += params.weights[gi] *
                   message_rate(res.rates, structure, structure.groups()[gi]);
    return res;
}

namespace {

// User permutations that map the group set onto itself with matching
// weights.  The i.i.d. power problem is invariant under these and under
// subcarrier relabeling.
std::vector<std::vector<int>> structure_automorphisms(const SplitStructure& s,
                                                      const std::vector<double>& weights) {
    const int K = s.num_users();
    std::vector<std::vector<int>> out;
    std::vector<int> ident(K);
    for (int k = 0; k < K; ++k) ident[k] = k + 1;
    if (K > 6) return {ident};  // factorial search not worth it beyond toy sizes
    std::vector<int> perm = ident;
    do {
        auto map_set = [&](UserSet u) {
            UserSet v;
            for (int k : u.members()) v = v.with(perm[k - 1]);
            return v;
        };
        bool ok = true;
        for (std::size_t gi = 0; gi < s.groups().size() && ok; ++gi) {
            const int im = s.group_index(map_set(s.groups()[gi]));
            ok = im >= 0 && std::abs(weights[im] - weights[gi]) <= 1e-15;
        }
        for (std::size_t li = 0; li < s.layers().size() && ok; ++li)
            ok = s.layer_index(map_set(s.layers()[li])) >= 0;
        if (ok) out.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

}  // namespace

FastIidSolution cccp_iid(const SplitStructure& structure, int num_subcarriers, double lambda,
                         const FastParams& params) {
    check_fast_params(params, structure);
    if (lambda <= 0.0) throw std::invalid_argument("cccp_iid: lambda must be positive");
    const int N = num_subcarriers;
    const int L = static_cast<int>(structure.layers().size());
    const detail::KxLayout kx = detail::KxLayout::build(structure);
    const int nkx = kx.num_kx();
    const double lam = lambda / params.noise;  // normalized per-antenna gain

    std::vector<std::vector<int>> out_layers(structure.num_users());
    for (int k = 1; k <= structure.num_users(); ++k) {
        const auto& mine = structure.user_layers(k);
        for (int li = 0; li < L; ++li)
            if (!std::binary_search(mine.begin(), mine.end(), li))
                out_layers[k - 1].push_back(li);
    }

    // The problem data is invariant under subcarrier relabeling and under
    // the structure automorphisms, so the search is restricted to the
    // symmetric subspace: one power variable per layer orbit (uniform over
    // subcarriers), one rate variable per split-index orbit.  Each convex
    // subproblem loses nothing under this restriction, and the loop then
    // converges to the symmetric stationary point instead of drifting
    // across degenerate asymmetric ones.
    const auto autos = structure_automorphisms(structure, params.weights);
    std::vector<std::vector<int>> layer_maps;  // per automorphism: layer image
    std::vector<std::vector<int>> split_maps;  // per automorphism: split image
    for (const auto& perm : autos) {
        auto map_set = [&](UserSet u) {
            UserSet v;
            for (int k : u.members()) v = v.with(perm[k - 1]);
            return v;
        };
        std::vector<int> lmap(L), smap(structure.num_split_indices());
        for (int li = 0; li < L; ++li) lmap[li] = structure.layer_index(map_set(structure.layers()[li]));
        for (int si = 0; si < structure.num_split_indices(); ++si) {
            const auto& idx = structure.split_indices()[si];
            smap[si] = structure.split_index(
                structure.group_index(map_set(structure.groups()[idx.group])),
                structure.layer_index(map_set(structure.layers()[idx.layer])));
        }
        layer_maps.push_back(std::move(lmap));
        split_maps.push_back(std::move(smap));
    }
    auto orbit_ids = [](const std::vector<std::vector<int>>& maps, int count) {
        std::vector<int> rep(count);
        for (int i = 0; i < count; ++i) {
            int lo = i;
            for (const auto& m : maps) lo = std::min(lo, m[i]);
            rep[i] = lo;
        }
        // Compress to contiguous ids through the representative chain.
        for (int i = 0; i < count; ++i)
            while (rep[rep[i]] != rep[i]) rep[i] = rep[rep[i]];
        std::vector<int> ids(count, -1);
        int next = 0;
        for (int i = 0; i < count; ++i)
            if (rep[i] == i) ids[i] = next++;
        for (int i = 0; i < count; ++i) ids[i] = ids[rep[i]];
        return std::pair{ids, next};
    };
    const auto [layer_orbit, n_layer_orbits] = orbit_ids(layer_maps, L);
    const auto [split_orbit, n_split_orbits] =
        orbit_ids(split_maps, structure.num_split_indices());

    // Representative decode subsets: one row per (k, X) orbit.
    std::vector<int> kx_keep;
    {
        std::vector<char> seen(nkx, 0);
        auto kx_index = [&](int k, const std::vector<int>& x_sorted) {
            const auto& subsets = kx.per_user[k - 1];
            for (std::size_t xi = 0; xi < subsets.size(); ++xi)
                if (subsets[xi] == x_sorted) {
                    int base = 0;
                    for (int kk = 1; kk < k; ++kk)
                        base += static_cast<int>(kx.per_user[kk - 1].size());
                    return base + static_cast<int>(xi);
                }
            return -1;
        };
        for (int j = 0; j < nkx; ++j) {
            if (seen[j]) continue;
            kx_keep.push_back(j);
            const auto [k, xi] = kx.flat[j];
            for (std::size_t a = 0; a < autos.size(); ++a) {
                std::vector<int> ximg;
                for (int li : kx.per_user[k - 1][xi]) ximg.push_back(layer_maps[a][li]);
                std::sort(ximg.begin(), ximg.end());
                const int jm = kx_index(autos[a][k - 1], ximg);
                if (jm >= 0) seen[jm] = 1;
            }
        }
    }

    // Per-slot powers indexed by layer orbit; rates by split orbit.
    auto rhs_at = [&](const std::vector<double>& t_orb, int k, const std::vector<int>& x) {
        double sig = 0.0, interf = 0.0;
        for (int li : x) sig += lam * t_orb[layer_orbit[li]];
        for (int li : out_layers[k - 1]) interf += lam * t_orb[layer_orbit[li]];
        return static_cast<double>(N) * std::log2(1.0 + sig / (1.0 + interf));
    };

    // Orbit multiplicities for sums over original indices.
    std::vector<double> layer_mult(n_layer_orbits, 0.0), split_w(n_split_orbits, 0.0);
    for (int li = 0; li < L; ++li) layer_mult[layer_orbit[li]] += 1.0;
    for (std::size_t gi = 0; gi < structure.groups().size(); ++gi)
        for (int li : structure.layers_of_group(static_cast<int>(gi)))
            split_w[split_orbit[structure.split_index(static_cast<int>(gi), li)]] +=
                params.weights[gi];

    // Feasible init: nearly all starting power on the interference-free
    // anchor layer (the all-users layer when present), a whisper elsewhere
    // so every layer can still be grown; uniform powers would start deep in
    // the interference-limited region where the majorization climbs slowly.
    std::vector<double> t(n_layer_orbits, 0.0);
    std::vector<double> r(n_split_orbits, 0.0);
    {
        int anchor = structure.layer_index(UserSet::all(structure.num_users()));
        if (anchor < 0) anchor = L - 1;
        const int anchor_orbit = layer_orbit[anchor];
        constexpr double whisper = 1e-8;
        const double total = 0.9 * params.power;
        const double other_slots =
            static_cast<double>(L * N) - layer_mult[anchor_orbit] * N;
        for (int lo = 0; lo < n_layer_orbits; ++lo)
            t[lo] = other_slots > 0.0 ? total * whisper / other_slots : 0.0;
        t[anchor_orbit] = total * (1.0 - whisper) / (layer_mult[anchor_orbit] * N);
    }
    {
        double fill = std::numeric_limits<double>::infinity();
        for (int j : kx_keep) {
            const auto [k, xi] = kx.flat[j];
            const auto& x = kx.per_user[k - 1][xi];
            int terms = 0;
            for (int li : x) terms += static_cast<int>(structure.origins_of_layer(li).size());
            fill = std::min(fill, 0.999 * rhs_at(t, k, x) / terms);
        }
        if (!(fill > 0.0)) throw std::runtime_error("cccp_iid: degenerate setup");
        r.assign(r.size(), fill * 0.999);
    }

    auto objective = [&](const std::vector<double>& rates) {
        double obj = 0.0;
        for (int so = 0; so < n_split_orbits; ++so) obj += split_w[so] * rates[so];
        return obj;
    };

    FastIidSolution out;
    double obj = objective(r);
    out.objective_trace.push_back(obj * params.bandwidth);
    double warm_t = 0.0;
    for (int outer = 0; outer < params.max_outer; ++outer) {
        VariableSpace vs;
        const Block tblk = vs.add_block("t", n_layer_orbits, params.power / (L * N));
        const Block rblk = vs.add_block("R", n_split_orbits, 10.0);
        ConvexProgram prog(vs);
        LinearForm obj_form;
        for (int so = 0; so < n_split_orbits; ++so) obj_form.add(rblk.at(so), split_w[so]);
        prog.maximize(obj_form);
        {
            LinearForm f;
            for (int lo = 0; lo < n_layer_orbits; ++lo)
                f.add(tblk.at(lo), layer_mult[lo] * N);
            f.constant = -params.power;
            prog.add_constraint(params.power).affine(std::move(f));
        }
        for (int lo = 0; lo < n_layer_orbits; ++lo)
            prog.add_constraint(params.power / (L * N))
                .affine(LinearForm{}.add(tblk.at(lo), -1.0));
        for (int so = 0; so < n_split_orbits; ++so)
            prog.add_constraint(1.0).affine(LinearForm{}.add(rblk.at(so), -1.0));

        for (int j : kx_keep) {
            const auto [k, xi] = kx.flat[j];
            const auto& x = kx.per_user[k - 1][xi];
            Constraint& con = prog.add_constraint(10.0);
            LinearForm aff;
            // Explicit vanishing slack keeps re-linearized rows strictly
            // negative against float roundoff on dark subsets.
            aff.constant = -1e-12;
            for (int li : x)
                for (int gi : structure.origins_of_layer(li))
                    aff.add(rblk.at(split_orbit[structure.split_index(gi, li)]), 1.0);
            NegLogAtom nl;
            // Convex part: -N log2(1 + lam * sum_{out ∪ X} t).
            LinearForm arg;
            arg.constant = 1.0;
            for (int li : x) arg.add(tblk.at(layer_orbit[li]), lam);
            for (int li : out_layers[k - 1]) arg.add(tblk.at(layer_orbit[li]), lam);
            nl.terms.push_back({static_cast<double>(N), std::move(arg)});
            // Linearized concave part: +N log2(1 + lam sum_out t_prev) + tangent.
            double int_prev = 0.0;
            for (int li : out_layers[k - 1]) int_prev += lam * t[layer_orbit[li]];
            aff.constant += N * std::log2(1.0 + int_prev);
            const double slope = N * lam / (kLn2 * (1.0 + int_prev));
            for (int li : out_layers[k - 1]) {
                aff.add(tblk.at(layer_orbit[li]), slope);
                aff.constant -= slope * t[layer_orbit[li]];
            }
            con.neglog(std::move(nl));
            con.affine(std::move(aff));
        }

        Eigen::VectorXd start(prog.dimension());
        for (int lo = 0; lo < n_layer_orbits; ++lo) start(tblk.at(lo)) = t[lo];
        for (int so = 0; so < n_split_orbits; ++so) start(rblk.at(so)) = r[so];
        SolveOptions opt = params.solver;
        opt.t0 = warm_t;
        Solution sol = solve(prog, start, opt);
        if (sol.status == SolveStatus::Infeasible)
            throw std::runtime_error("cccp_iid: subproblem infeasible from a feasible iterate");
        std::vector<double> t_new(n_layer_orbits), r_new(n_split_orbits);
        for (int lo = 0; lo < n_layer_orbits; ++lo) t_new[lo] = sol.x(tblk.at(lo));
        for (int so = 0; so < n_split_orbits; ++so)
            r_new[so] = sol.x(rblk.at(so)) * (1.0 - 1e-12);
        const double cand = objective(r_new);
        ++out.outer_iterations;
        if (cand < obj - 1e-12 * std::max(1.0, std::abs(obj))) break;
        const double delta = cand - obj;
        t = std::move(t_new);
        r = std::move(r_new);
        obj = cand;
        out.objective_trace.push_back(obj * params.bandwidth);
        warm_t = std::max(1.0, sol.barrier_t / (opt.mu * opt.mu * opt.mu));
        if (params.obj_tol_abs > 0.0 && delta * params.bandwidth <= params.obj_tol_abs) break;
        if (delta <= params.obj_tol_rel * std::max(1.0, std::abs(obj))) break;
    }

    // Expand orbits back to per-slot powers and per-split rates.
    out.t.assign(static_cast<std::size_t>(L) * N, 0.0);
    for (int li = 0; li < L; ++li)
        for (int n = 0; n < N; ++n)
            out.t[li * N + n] = std::max(0.0, t[layer_orbit[li]]);
    out.rates = RateAllocation::zeros(structure);
    for (int si = 0; si < structure.num_split_indices(); ++si)
        out.rates.values[si] = std::max(0.0, r[split_orbit[si]]) * params.bandwidth;
    return out;
}

std::vector<cvec> recover_w(const std::vector<double>& t, int num_antennas) {
    std::vector<cvec> w(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < 0.0) throw std::invalid_argument("recover_w: negative power");
        w[i] = cvec::Zero(num_antennas);
        w[i](0) = std::sqrt(t[i]);
    }
    return w;
}

}  // namespace genrs
