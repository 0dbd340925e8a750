#include "dc_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace genrs::detail {

namespace {
constexpr double kLn2 = 0.6931471805599453;
}

KxLayout KxLayout::build(const SplitStructure& s) {
    KxLayout out;
    out.per_user.resize(s.num_users());
    for (int k = 1; k <= s.num_users(); ++k) {
        out.per_user[k - 1] = decode_subsets(s, k);
        for (std::size_t x = 0; x < out.per_user[k - 1].size(); ++x)
            out.flat.emplace_back(k, static_cast<int>(x));
    }
    return out;
}

DcEngine::DcEngine(const SplitStructure& structure, int num_subcarriers, int num_antennas,
                   std::vector<FormSet> forms, std::vector<cvec> init_directions, DcParams params)
    : structure_(structure), K_(structure.num_users()), N_(num_subcarriers), M_(num_antennas),
      L_(static_cast<int>(structure.layers().size())), forms_(std::move(forms)),
      init_dirs_(std::move(init_directions)), params_(std::move(params)),
      kx_(KxLayout::build(structure)) {
    if (static_cast<int>(forms_.size()) != K_ * N_)
        throw std::invalid_argument("DcEngine: form count mismatch");
    if (static_cast<int>(init_dirs_.size()) != L_ * N_)
        throw std::invalid_argument("DcEngine: init direction count mismatch");
    if (static_cast<int>(params_.weights.size()) != static_cast<int>(structure.groups().size()))
        throw std::invalid_argument("DcEngine: weight count mismatch");
    if (params_.power <= 0.0) throw std::invalid_argument("DcEngine: power must be positive");

    out_layers_.resize(K_);
    for (int k = 1; k <= K_; ++k) {
        const auto& mine = structure.user_layers(k);
        for (int li = 0; li < L_; ++li)
            if (!std::binary_search(mine.begin(), mine.end(), li)) out_layers_[k - 1].push_back(li);
    }
    kx_splits_.resize(kx_.num_kx());
    for (int kx = 0; kx < kx_.num_kx(); ++kx) {
        const auto [k, xi] = kx_.flat[kx];
        for (int li : kx_.per_user[k - 1][xi])
            for (int gi : structure.origins_of_layer(li))
                kx_splits_[kx].push_back(structure.split_index(gi, li));
    }
}

double DcEngine::objective(const DcIterate& it) const {
    double obj = 0.0;
    for (std::size_t gi = 0; gi < structure_.groups().size(); ++gi)
        for (int li : structure_.layers_of_group(static_cast<int>(gi)))
            obj += params_.weights[gi] * it.rates[structure_.split_index(static_cast<int>(gi), li)];
    return obj;
}

double DcEngine::rate_region_rhs(const std::vector<cvec>& w, int k,
                                 const std::vector<int>& x) const {
    double rhs = 0.0;
    for (int n = 1; n <= N_; ++n) {
        double sig = 0.0, interf = 0.0;
        for (int li : x) sig += form(k, n).eval(w[wi(li, n)]);
        for (int li : out_layers_[k - 1]) interf += form(k, n).eval(w[wi(li, n)]);
        rhs += std::log2(1.0 + sig / (1.0 + interf));
    }
    return rhs;
}

DcIterate DcEngine::feasible_init() const {
    DcIterate it;
    it.w.resize(L_ * N_);

    // Almost all of the start power rides on an anchor layer that no user
    // treats as interference (the all-users layer when present, otherwise
    // the layer with the strongest worst-member aggregate).  Equal-power
    // splits start deep in the interference-limited region, from which the
    // majorization can only raise the SINR auxiliaries by a bounded factor
    // per iteration; an interference-free anchor starts the climb at high
    // SNR instead.  The remaining layers get a whisper of power so their
    // linearized cross terms are nonzero and the loop can grow them.
    int anchor = structure_.layer_index(UserSet::all(K_));
    if (anchor < 0) {
        double best = -1.0;
        for (int li = 0; li < L_; ++li) {
            double worst = std::numeric_limits<double>::infinity();
            for (int k : structure_.layers()[li].members()) {
                double agg = 0.0;
                for (int n = 1; n <= N_; ++n) agg += form(k, n).eval(init_dirs_[wi(li, n)]);
                worst = std::min(worst, agg);
            }
            if (worst > best) {
                best = worst;
                anchor = li;
            }
        }
    }
    constexpr double whisper = 1e-8;
    const double anchor_beam = 0.9 * params_.power * (1.0 - whisper) / static_cast<double>(N_);
    const double other_beam =
        L_ > 1 ? 0.9 * params_.power * whisper / static_cast<double>((L_ - 1) * N_) : 0.0;
    for (int li = 0; li < L_; ++li)
        for (int n = 1; n <= N_; ++n)
            it.w[wi(li, n)] =
                std::sqrt(li == anchor ? anchor_beam : other_beam) * init_dirs_[wi(li, n)];

    const int nkx = kx_.num_kx();
    it.e.assign(nkx * N_, 0.0);
    it.v.assign(nkx * N_, 0.0);
    constexpr double margin = 1e-3;
    for (int kx = 0; kx < nkx; ++kx) {
        const auto [k, xi] = kx_.flat[kx];
        const auto& x = kx_.per_user[k - 1][xi];
        for (int n = 1; n <= N_; ++n) {
            double sig = 0.0, interf = 0.0;
            for (int li : x) sig += form(k, n).eval(it.w[wi(li, n)]);
            for (int li : out_layers_[k - 1]) interf += form(k, n).eval(it.w[wi(li, n)]);
            const double ratio = (sig + interf + 1.0) / (interf + 1.0);
            it.v[slot(kx, n)] = std::log2(1.0 + (ratio - 1.0) * (1.0 - margin));
        }
    }

    // Best rate fill for these budgets, by a small linear program, then
    // pulled strictly inside.
    std::vector<double> caps(nkx, 0.0);
    for (int kx = 0; kx < nkx; ++kx) {
        for (int n = 1; n <= N_; ++n) caps[kx] += it.v[slot(kx, n)];
        caps[kx] *= 1.0 - margin;
        if (!(caps[kx] > 0.0))
            throw std::runtime_error("DcEngine: degenerate channel, no interior rate point");
    }
    std::vector<double> lp_rates(structure_.num_split_indices(), 0.0);
    {
        VariableSpace vs;
        const Block rblk = vs.add_block("R", structure_.num_split_indices(), 10.0);
        ConvexProgram lp(vs);
        LinearForm obj;
        for (std::size_t gi = 0; gi < structure_.groups().size(); ++gi)
            for (int li : structure_.layers_of_group(static_cast<int>(gi)))
                obj.add(rblk.at(structure_.split_index(static_cast<int>(gi), li)),
                        params_.weights[gi]);
        lp.maximize(obj);
        for (int i = 0; i < rblk.size; ++i)
            lp.add_constraint(1.0).affine(LinearForm{}.add(rblk.at(i), -1.0));
        for (int kx = 0; kx < nkx; ++kx) {
            LinearForm f;
            for (int si : kx_splits_[kx]) f.add(rblk.at(si), 1.0);
            f.constant = -caps[kx];
            lp.add_constraint(std::max(1.0, caps[kx])).affine(std::move(f));
        }
        double fill = std::numeric_limits<double>::infinity();
        for (int kx = 0; kx < nkx; ++kx)
            fill = std::min(fill, caps[kx] / static_cast<double>(2 * kx_splits_[kx].size()));
        Solution sol =
            solve(lp, Eigen::VectorXd::Constant(rblk.size, fill), params_.solver);
        if (sol.status == SolveStatus::Infeasible)
            throw std::runtime_error("DcEngine: infeasible init rate fill");
        for (int i = 0; i < rblk.size; ++i) lp_rates[i] = std::max(0.0, sol.x(rblk.at(i)));
    }
    for (auto& r : lp_rates) r *= 1.0 - margin;
    double eps = std::numeric_limits<double>::infinity();
    for (int kx = 0; kx < nkx; ++kx) {
        double used = 0.0;
        for (int si : kx_splits_[kx]) used += lp_rates[si];
        eps = std::min(eps, (caps[kx] - used) / static_cast<double>(2 * kx_splits_[kx].size()));
    }
    eps = std::max(1e-12, eps);
    it.rates = lp_rates;
    for (auto& r : it.rates) r += eps;

    for (int kx = 0; kx < nkx; ++kx) {
        double total = 0.0;
        for (int si : kx_splits_[kx]) total += it.rates[si];
        double cap_sum = 0.0;
        for (int n = 1; n <= N_; ++n) cap_sum += it.v[slot(kx, n)];
        for (int n = 1; n <= N_; ++n)
            it.e[slot(kx, n)] = total * it.v[slot(kx, n)] / cap_sum;
    }
    return it;
}

void DcEngine::form_pair(const Block& wblk, int layer, int n, const cvec& q, LinearForm& re,
                         LinearForm& im) const {
    const int base = ((layer * N_) + (n - 1)) * 2 * M_;
    for (int m = 0; m < M_; ++m) {
        const double a = q(m).real(), b = q(m).imag();
        // (q^H w): real part gets (a, b), imag part gets (-b, a) on (re, im).
        re.add(wblk.at(base + 2 * m), a);
        re.add(wblk.at(base + 2 * m + 1), b);
        im.add(wblk.at(base + 2 * m), -b);
        im.add(wblk.at(base + 2 * m + 1), a);
    }
}

ConvexProgram DcEngine::build_subproblem(const DcIterate& prev) const {
    return build_impl(prev, true);
}

ConvexProgram DcEngine::build_subproblem_reduced(const DcIterate& prev) const {
    return build_impl(prev, false);
}

ConvexProgram DcEngine::build_impl(const DcIterate& prev, bool with_aux_e) const {
    const int nkx = kx_.num_kx();
    const double wscale = std::sqrt(params_.power / static_cast<double>(L_ * N_));

    VariableSpace vs;
    const Block wblk = vs.add_block("w", L_ * N_ * 2 * M_, wscale);
    const Block rblk = vs.add_block("R", structure_.num_split_indices(), 10.0);
    Block eblk{};
    if (with_aux_e) eblk = vs.add_block("e", nkx * N_, 10.0);
    const Block vblk = vs.add_block("v", nkx * N_, 10.0);

    ConvexProgram prog(vs);

    // Objective: weighted sum of split rates.
    LinearForm obj;
    for (std::size_t gi = 0; gi < structure_.groups().size(); ++gi)
        for (int li : structure_.layers_of_group(static_cast<int>(gi)))
            obj.add(rblk.at(structure_.split_index(static_cast<int>(gi), li)),
                    params_.weights[gi]);
    prog.maximize(obj);

    // Total power.
    {
        Constraint& con = prog.add_constraint(params_.power);
        QuadraticAtom q;
        q.terms.reserve(wblk.size);
        for (int i = 0; i < wblk.size; ++i)
            q.terms.push_back({1.0, LinearForm{}.add(wblk.at(i), 1.0)});
        con.quadratic(std::move(q));
        con.affine(LinearForm{{}, -params_.power});
    }

    // R >= 0.
    for (int i = 0; i < rblk.size; ++i)
        prog.add_constraint(1.0).affine(LinearForm{}.add(rblk.at(i), -1.0));

    for (int kx = 0; kx < nkx; ++kx) {
        const auto [k, xi] = kx_.flat[kx];
        const auto& x = kx_.per_user[k - 1][xi];

        if (with_aux_e) {
            // Split-rate coupling: sum of feeding rates equals sum_n e.
            LinearForm eq;
            for (int si : kx_splits_[kx]) eq.add(rblk.at(si), 1.0);
            for (int n = 1; n <= N_; ++n) eq.add(eblk.at(slot(kx, n)), -1.0);
            prog.add_equality(std::move(eq));
        } else {
            // Aggregated budget: sum of feeding rates <= sum_n v.
            LinearForm f;
            for (int si : kx_splits_[kx]) f.add(rblk.at(si), 1.0);
            for (int n = 1; n <= N_; ++n) f.add(vblk.at(slot(kx, n)), -1.0);
            prog.add_constraint(10.0 * N_).affine(std::move(f));
        }

        for (int n = 1; n <= N_; ++n) {
            if (with_aux_e) {
                // 2^{e/B} <= u in log form: e - v <= 0.
                LinearForm f;
                f.add(eblk.at(slot(kx, n)), 1.0);
                f.add(vblk.at(slot(kx, n)), -1.0);
                prog.add_constraint(10.0).affine(std::move(f));
            }

            // Convexified SINR constraint around prev.
            const double u_prev = std::exp2(prev.v[slot(kx, n)]);
            double sig_prev = 0.0, int_prev = 0.0;
            for (int li : x) sig_prev += form(k, n).eval(prev.w[wi(li, n)]);
            for (int li : out_layers_[k - 1]) int_prev += form(k, n).eval(prev.w[wi(li, n)]);
            const double a_prev = sig_prev + int_prev + 1.0;

            // Values near feasibility live at the interference-floor scale.
            Constraint& con = prog.add_constraint(int_prev + 1.0);

            // Interference quadratic, kept convex.
            if (!out_layers_[k - 1].empty()) {
                QuadraticAtom q;
                for (int li : out_layers_[k - 1]) {
                    const FormSet& fs = form(k, n);
                    for (std::size_t i = 0; i < fs.weights.size(); ++i) {
                        LinearForm re, im;
                        form_pair(wblk, li, n, fs.vectors[i], re, im);
                        q.terms.push_back({fs.weights[i], std::move(re)});
                        q.terms.push_back({fs.weights[i], std::move(im)});
                    }
                }
                con.quadratic(std::move(q));
            }

            // a_prev * u / u_prev^2 with u = 2^v.
            {
                ExponentialAtom ea;
                ea.scale = a_prev / (u_prev * u_prev);
                ea.exp_index = vblk.at(slot(kx, n));
                ea.denom = 1.0;
                con.exponential(std::move(ea));
            }

            // Linearized cross terms and constants.
            LinearForm lin;
            lin.constant = 1.0 - 2.0 / u_prev;  // sigma^2 and -2 sigma^2 / u_prev, normalized
            for (int li : x) {
                const FormSet& fs = form(k, n);
                for (std::size_t i = 0; i < fs.weights.size(); ++i) {
                    const std::complex<double> z0 = fs.vectors[i].dot(prev.w[wi(li, n)]);
                    LinearForm re, im;
                    form_pair(wblk, li, n, fs.vectors[i], re, im);
                    const double cr = -2.0 * fs.weights[i] * z0.real() / u_prev;
                    const double ci = -2.0 * fs.weights[i] * z0.imag() / u_prev;
                    for (auto& [idx, c] : re.coeffs) lin.add(idx, cr * c);
                    for (auto& [idx, c] : im.coeffs) lin.add(idx, ci * c);
                }
            }
            for (int li : out_layers_[k - 1]) {
                const FormSet& fs = form(k, n);
                for (std::size_t i = 0; i < fs.weights.size(); ++i) {
                    const std::complex<double> z0 = fs.vectors[i].dot(prev.w[wi(li, n)]);
                    LinearForm re, im;
                    form_pair(wblk, li, n, fs.vectors[i], re, im);
                    const double cr = -2.0 * fs.weights[i] * z0.real() / u_prev;
                    const double ci = -2.0 * fs.weights[i] * z0.imag() / u_prev;
                    for (auto& [idx, c] : re.coeffs) lin.add(idx, cr * c);
                    for (auto& [idx, c] : im.coeffs) lin.add(idx, ci * c);
                }
            }
            con.affine(std::move(lin));
        }
    }

    // Per-slot variable scales: v near its current magnitude.
    for (int s = 0; s < nkx * N_; ++s) {
        prog.space().set_scale(vblk.at(s), std::max(1.0, std::abs(prev.v[s])));
        if (with_aux_e) prog.space().set_scale(eblk.at(s), std::max(1.0, std::abs(prev.e[s])));
    }
    return prog;
}

Eigen::VectorXd DcEngine::pack(const DcIterate& it) const {
    const int nkx = kx_.num_kx();
    const int wlen = L_ * N_ * 2 * M_;
    Eigen::VectorXd x(wlen + structure_.num_split_indices() + 2 * nkx * N_);
    int off = 0;
    for (int li = 0; li < L_; ++li)
        for (int n = 1; n <= N_; ++n)
            for (int m = 0; m < M_; ++m) {
                x(off++) = it.w[wi(li, n)](m).real();
                x(off++) = it.w[wi(li, n)](m).imag();
            }
    for (double r : it.rates) x(off++) = r;
    for (double e : it.e) x(off++) = e;
    for (double v : it.v) x(off++) = v;
    return x;
}

Eigen::VectorXd DcEngine::pack_reduced(const DcIterate& it) const {
    const int nkx = kx_.num_kx();
    const int wlen = L_ * N_ * 2 * M_;
    Eigen::VectorXd x(wlen + structure_.num_split_indices() + nkx * N_);
    int off = 0;
    for (int li = 0; li < L_; ++li)
        for (int n = 1; n <= N_; ++n)
            for (int m = 0; m < M_; ++m) {
                x(off++) = it.w[wi(li, n)](m).real();
                x(off++) = it.w[wi(li, n)](m).imag();
            }
    for (double r : it.rates) x(off++) = r;
    for (double v : it.v) x(off++) = v;
    return x;
}

DcIterate DcEngine::unpack_reduced(const Eigen::VectorXd& x) const {
    DcIterate it;
    const int nkx = kx_.num_kx();
    it.w.resize(L_ * N_);
    int off = 0;
    for (int li = 0; li < L_; ++li)
        for (int n = 1; n <= N_; ++n) {
            cvec w(M_);
            for (int m = 0; m < M_; ++m) {
                w(m) = std::complex<double>(x(off), x(off + 1));
                off += 2;
            }
            it.w[wi(li, n)] = std::move(w);
        }
    it.rates.resize(structure_.num_split_indices());
    for (auto& r : it.rates) r = x(off++);
    it.v.resize(nkx * N_);
    for (auto& v : it.v) v = x(off++);
    // Reconstruct the slack e: spread the budget deficit uniformly so that
    // e_n <= v_n holds per subcarrier and the sums couple exactly.
    it.e.assign(nkx * N_, 0.0);
    for (int kx = 0; kx < nkx; ++kx) {
        double need = 0.0;
        for (int si : kx_splits_[kx]) need += it.rates[si];
        double have = 0.0;
        for (int n = 1; n <= N_; ++n) have += it.v[slot(kx, n)];
        const double deficit = std::max(0.0, have - need) / static_cast<double>(N_);
        for (int n = 1; n <= N_; ++n) it.e[slot(kx, n)] = it.v[slot(kx, n)] - deficit;
    }
    return it;
}

DcIterate DcEngine::unpack(const Eigen::VectorXd& x) const {
    DcIterate it;
    const int nkx = kx_.num_kx();
    it.w.resize(L_ * N_);
    int off = 0;
    for (int li = 0; li < L_; ++li)
        for (int n = 1; n <= N_; ++n) {
            cvec w(M_);
            for (int m = 0; m < M_; ++m) {
                w(m) = std::complex<double>(x(off), x(off + 1));
                off += 2;
            }
            it.w[wi(li, n)] = std::move(w);
        }
    it.rates.resize(structure_.num_split_indices());
    for (auto& r : it.rates) r = x(off++);
    it.e.resize(nkx * N_);
    for (auto& e : it.e) e = x(off++);
    it.v.resize(nkx * N_);
    for (auto& v : it.v) v = x(off++);
    return it;
}

double DcEngine::activity_gap(const DcIterate& it) const {
    double gap = 0.0;
    for (std::size_t s = 0; s < it.e.size(); ++s) {
        // |2^e - u| / u = |2^{e - v} - 1|, safe against cancellation.
        gap = std::max(gap, std::abs(std::expm1((it.e[s] - it.v[s]) * kLn2)));
    }
    return gap;
}

DcSolution DcEngine::run(std::optional<DcIterate> init) const {
    DcSolution out;
    DcIterate cur = init ? std::move(*init) : feasible_init();
    double obj = objective(cur);
    out.objective_trace.push_back(obj);

    double warm_t = 0.0;
    for (int outer = 0; outer < params_.max_outer; ++outer) {
        ConvexProgram prog = build_subproblem_reduced(cur);
        SolveOptions opt = params_.solver;
        opt.t0 = warm_t;
        Solution sol = solve(prog, pack_reduced(cur), opt);
        out.newton_iterations += sol.newton_iterations;
        if (sol.status == SolveStatus::Infeasible)
            throw std::runtime_error("DcEngine: subproblem infeasible from a feasible iterate");
        DcIterate cand = unpack_reduced(sol.x);
        // A relative hair off the rates keeps the next subproblem's
        // re-linearized rows strictly negative against float roundoff.
        for (auto& r : cand.rates) r *= 1.0 - 1e-12;
        const double cand_obj = objective(cand);
        ++out.outer_iterations;
        if (cand_obj < obj - 1e-12 * std::max(1.0, std::abs(obj))) {
            // The subproblem could not improve past solver noise: converged.
            break;
        }
        double step = 0.0;
        if (params_.iterate_eps > 0.0) step = (pack(cand) - pack(cur)).norm();
        const double delta = cand_obj - obj;
        cur = cand;
        obj = cand_obj;
        out.objective_trace.push_back(obj);
        // Warm start the next barrier run where its duality gap roughly
        // matches the move this iteration made: big moves retrace the path
        // from low t, small ones only polish.
        const double gap_est =
            std::max(3.0 * delta, 1e-5 * std::max(1.0, std::abs(obj)));
        warm_t = std::clamp(static_cast<double>(prog.num_constraints()) / gap_est, 1.0,
                            sol.barrier_t);

        if (params_.obj_tol_abs > 0.0 && delta <= params_.obj_tol_abs) break;
        if (delta <= params_.obj_tol_rel * std::max(1.0, std::abs(obj))) break;
        if (params_.iterate_eps > 0.0 && step <= params_.iterate_eps) break;
    }

    // Tighten the auxiliaries: u can always be lowered to its active value
    // without changing the objective or leaving the feasible set, which is
    // the form the optimum is stated in.
    for (int kx = 0; kx < kx_.num_kx(); ++kx) {
        double need = 0.0;
        for (int si : kx_splits_[kx]) need += cur.rates[si];
        double have = 0.0;
        for (int n = 1; n <= N_; ++n) have += cur.v[slot(kx, n)];
        const double shift = std::max(0.0, have - need) / static_cast<double>(N_);
        for (int n = 1; n <= N_; ++n) {
            cur.v[slot(kx, n)] -= shift;
            cur.e[slot(kx, n)] = cur.v[slot(kx, n)];
        }
    }
    out.iterate = std::move(cur);
    return out;
}

std::vector<FormSet> realization_forms(const ChannelRealization& h, double noise) {
    if (noise <= 0.0) throw std::invalid_argument("realization_forms: noise must be positive");
    const double inv_sigma = 1.0 / std::sqrt(noise);
    std::vector<FormSet> out;
    out.reserve(static_cast<std::size_t>(h.num_users) * h.num_subcarriers);
    for (int k = 1; k <= h.num_users; ++k)
        for (int n = 1; n <= h.num_subcarriers; ++n) {
            FormSet fs;
            fs.weights = {1.0};
            fs.vectors = {inv_sigma * h.at(k, n)};
            out.push_back(std::move(fs));
        }
    return out;
}

std::vector<FormSet> statistics_forms(const ChannelStatistics& stats, int num_subcarriers,
                                      double noise) {
    if (noise <= 0.0) throw std::invalid_argument("statistics_forms: noise must be positive");
    std::vector<FormSet> out;
    out.reserve(static_cast<std::size_t>(stats.num_users()) * num_subcarriers);
    for (int k = 1; k <= stats.num_users(); ++k) {
        for (int n = 1; n <= num_subcarriers; ++n) {
            const cmat q = stats.covariance(k, n) / noise;
            Eigen::SelfAdjointEigenSolver<cmat> es(q);
            FormSet fs;
            const double cutoff = 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff());
            for (int i = 0; i < es.eigenvalues().size(); ++i) {
                if (es.eigenvalues()(i) > cutoff) {
                    fs.weights.push_back(es.eigenvalues()(i));
                    fs.vectors.push_back(es.eigenvectors().col(i));
                }
            }
            out.push_back(std::move(fs));
        }
    }
    return out;
}

std::vector<cvec> mrt_directions(const ChannelRealization& h, const SplitStructure& s) {
    const int L = static_cast<int>(s.layers().size());
    std::vector<cvec> dirs(static_cast<std::size_t>(L) * h.num_subcarriers);
    for (int li = 0; li < L; ++li) {
        for (int n = 1; n <= h.num_subcarriers; ++n) {
            cvec sum = cvec::Zero(h.num_antennas);
            for (int k : s.layers()[li].members()) sum += h.at(k, n);
            const double nrm = sum.norm();
            cvec dir = cvec::Zero(h.num_antennas);
            if (nrm > 1e-300)
                dir = sum / nrm;
            else
                dir(0) = 1.0;
            dirs[li * h.num_subcarriers + (n - 1)] = std::move(dir);
        }
    }
    return dirs;
}

std::vector<cvec> statistics_directions(const ChannelStatistics& stats, const SplitStructure& s,
                                        int num_subcarriers) {
    const int L = static_cast<int>(s.layers().size());
    const int M = stats.num_antennas();
    std::vector<cvec> dirs(static_cast<std::size_t>(L) * num_subcarriers);
    for (int li = 0; li < L; ++li) {
        for (int n = 1; n <= num_subcarriers; ++n) {
            cmat sum = cmat::Zero(M, M);
            for (int k : s.layers()[li].members()) sum += stats.covariance(k, n);
            Eigen::SelfAdjointEigenSolver<cmat> es(sum);
            cvec dir = es.eigenvectors().col(M - 1);
            // Deterministic phase: largest component real positive.
            int imax = 0;
            for (int m = 1; m < M; ++m)
                if (std::abs(dir(m)) > std::abs(dir(imax))) imax = m;
            if (std::abs(dir(imax)) > 0.0) dir *= std::conj(dir(imax)) / std::abs(dir(imax));
            dirs[li * num_subcarriers + (n - 1)] = std::move(dir);
        }
    }
    return dirs;
}

}  // namespace genrs::detail
