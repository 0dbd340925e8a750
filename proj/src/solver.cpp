#include "genrs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace genrs {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kExpCap = 1000.0;  // 2^x overflow guard on the exponent

struct AtomEval {
    double value = 0.0;
    bool in_domain = true;
};

AtomEval atom_value(const ConstraintAtom& atom, const Eigen::VectorXd& x) {
    AtomEval out;
    if (const auto* a = std::get_if<AffineAtom>(&atom)) {
        out.value = a->form.value_at(x);
    } else if (const auto* q = std::get_if<QuadraticAtom>(&atom)) {
        double v = 0.0;
        for (const auto& t : q->terms) {
            const double phi = t.form.value_at(x);
            v += t.weight * phi * phi;
        }
        out.value = v;
    } else if (const auto* e = std::get_if<ExponentialAtom>(&atom)) {
        const double expo = x(e->exp_index) / e->denom;
        if (expo > kExpCap) {
            out.in_domain = false;
            out.value = std::numeric_limits<double>::infinity();
        } else {
            out.value = e->scale * std::exp2(expo) + e->linear.value_at(x);
        }
    } else if (const auto* n = std::get_if<NegLogAtom>(&atom)) {
        double v = 0.0;
        for (const auto& t : n->terms) {
            const double phi = t.form.value_at(x);
            if (phi <= 0.0) {
                out.in_domain = false;
                out.value = std::numeric_limits<double>::infinity();
                return out;
            }
            v -= t.weight * std::log2(phi);
        }
        out.value = v;
    }
    return out;
}

// Scratch for one constraint's dense-but-sparse gradient.
struct GradScratch {
    Eigen::VectorXd values;
    std::vector<int> touched;
    std::vector<char> mark;

    void init(int dim) {
        values = Eigen::VectorXd::Zero(dim);
        mark.assign(dim, 0);
        touched.clear();
        touched.reserve(128);
    }
    void reset() {
        for (int i : touched) {
            values(i) = 0.0;
            mark[i] = 0;
        }
        touched.clear();
    }
    void add(int i, double v) {
        if (!mark[i]) {
            mark[i] = 1;
            touched.push_back(i);
        }
        values(i) += v;
    }
};

void atom_gradient(const ConstraintAtom& atom, const Eigen::VectorXd& x, GradScratch& g) {
    if (const auto* a = std::get_if<AffineAtom>(&atom)) {
        for (const auto& [i, c] : a->form.coeffs) g.add(i, c);
    } else if (const auto* q = std::get_if<QuadraticAtom>(&atom)) {
        for (const auto& t : q->terms) {
            const double phi = t.form.value_at(x);
            const double s = 2.0 * t.weight * phi;
            for (const auto& [i, c] : t.form.coeffs) g.add(i, s * c);
        }
    } else if (const auto* e = std::get_if<ExponentialAtom>(&atom)) {
        const double d = e->scale * (kLn2 / e->denom) * std::exp2(x(e->exp_index) / e->denom);
        g.add(e->exp_index, d);
        for (const auto& [i, c] : e->linear.coeffs) g.add(i, c);
    } else if (const auto* n = std::get_if<NegLogAtom>(&atom)) {
        for (const auto& t : n->terms) {
            const double phi = t.form.value_at(x);
            const double s = -t.weight / (kLn2 * phi);
            for (const auto& [i, c] : t.form.coeffs) g.add(i, s * c);
        }
    }
}

// H += weight * ∇²atom, lower triangle only.
void atom_hessian(const ConstraintAtom& atom, const Eigen::VectorXd& x, double weight,
                  Eigen::MatrixXd& H) {
    auto rank1 = [&H](double w, const LinearForm& f) {
        for (const auto& [i, ci] : f.coeffs)
            for (const auto& [j, cj] : f.coeffs)
                if (i >= j) H(i, j) += w * ci * cj;
    };
    if (const auto* q = std::get_if<QuadraticAtom>(&atom)) {
        for (const auto& t : q->terms) rank1(weight * 2.0 * t.weight, t.form);
    } else if (const auto* e = std::get_if<ExponentialAtom>(&atom)) {
        const double r = kLn2 / e->denom;
        H(e->exp_index, e->exp_index) +=
            weight * e->scale * r * r * std::exp2(x(e->exp_index) / e->denom);
    } else if (const auto* n = std::get_if<NegLogAtom>(&atom)) {
        for (const auto& t : n->terms) {
            const double phi = t.form.value_at(x);
            rank1(weight * t.weight / (kLn2 * phi * phi), t.form);
        }
    }
}

struct ValueSweep {
    bool in_domain = true;
    bool strictly_feasible = true;
    double max_scaled = -std::numeric_limits<double>::infinity();
    double barrier = 0.0;  // -Σ log(-f_i)
};

ValueSweep sweep_values(const ConvexProgram& prog, const Eigen::VectorXd& x,
                        std::vector<double>* fvals = nullptr) {
    ValueSweep s;
    int idx = 0;
    for (const auto& con : prog.constraints()) {
        double v = 0.0;
        bool dom = true;
        for (const auto& atom : con.atoms) {
            const AtomEval ae = atom_value(atom, x);
            if (!ae.in_domain) {
                dom = false;
                break;
            }
            v += ae.value;
        }
        if (fvals) (*fvals)[idx] = v;
        if (!dom) {
            s.in_domain = false;
            s.strictly_feasible = false;
            return s;
        }
        s.max_scaled = std::max(s.max_scaled, v / con.scale);
        if (v >= 0.0) {
            s.strictly_feasible = false;
        } else {
            s.barrier -= std::log(-v);
        }
        ++idx;
    }
    return s;
}

class Barrier {
public:
    Barrier(const ConvexProgram& prog, const SolveOptions& opt) : prog_(prog), opt_(opt) {
        // The stationarity residual achievable at barrier scale goes like
        // sqrt(newton decrement); center as tightly as conditioning allows.
        newton_tol_ = std::clamp(0.5 * opt.tol * opt.tol, 1e-12, 1e-10);
        dim_ = prog.dimension();
        m_ = prog.num_constraints();
        p_ = prog.num_equalities();
        scales_ = Eigen::Map<const Eigen::VectorXd>(prog.space().scales().data(), dim_);
        cobj_ = Eigen::VectorXd::Zero(dim_);
        for (const auto& [i, c] : prog.objective().coeffs) cobj_(i) += c;
        c0_ = prog.objective().constant;
        if (p_ > 0) {
            A_ = Eigen::MatrixXd::Zero(p_, dim_);
            b_ = Eigen::VectorXd::Zero(p_);
            for (int r = 0; r < p_; ++r) {
                for (const auto& [i, c] : prog.equalities()[r].coeffs) A_(r, i) += c;
                b_(r) = -prog.equalities()[r].constant;
            }
            As_ = A_ * scales_.asDiagonal();
        }
        scratch_.init(dim_);
        fvals_.resize(m_);
        if (!opt.trace_path.empty()) trace_.open(opt.trace_path);
        if (trace_) trace_ << "stage,newton,t,objective,decrement,max_constraint\n";
    }

    double objective(const Eigen::VectorXd& x) const { return cobj_.dot(x) + c0_; }

    // Projects onto {Ax = b} in scale-weighted least-change sense.
    bool project_equalities(Eigen::VectorXd& x) const {
        if (p_ == 0) return true;
        Eigen::VectorXd r = A_ * x - b_;
        if (r.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + b_.cwiseAbs().maxCoeff())) return true;
        Eigen::MatrixXd AAt = As_ * As_.transpose();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(AAt);
        if (ldlt.info() != Eigen::Success) return false;
        x -= scales_.asDiagonal() * (As_.transpose() * ldlt.solve(r));
        return true;
    }

    // One barrier centering run at parameter t to decrement tolerance
    // lambda2_tol.  Intermediate stages only need loose centering to track
    // the path; the final stage is polished to the resolution limit.
    template <typename StopFn>
    bool center(double t, Eigen::VectorXd& x, int& newton_count, int stage, StopFn should_stop,
                double lambda2_tol) {
        if (H_.rows() != dim_) {
            H_.resize(dim_, dim_);
            Hw_.resize(dim_, dim_);
            g_.resize(dim_);
            jac_.resize(dim_);
        }
        Eigen::MatrixXd& H = H_;
        Eigen::VectorXd& g = g_;
        double best_lambda2 = std::numeric_limits<double>::infinity();
        int flat_iters = 0;
        for (int it = 0; it < opt_.max_newton_per_stage; ++it) {
            if (should_stop(x)) return true;
            // Assemble gradient and Hessian of t*f0 + barrier, f0 = -objective.
            H.setZero();
            g = -t * cobj_;
            bool ok = true;
            for (int ci = 0; ci < m_; ++ci) {
                const auto& con = prog_.constraints()[ci];
                double f = 0.0;
                scratch_.reset();
                for (const auto& atom : con.atoms) {
                    const AtomEval ae = atom_value(atom, x);
                    if (!ae.in_domain) ok = false;
                    f += ae.value;
                    atom_gradient(atom, x, scratch_);
                }
                if (!ok || f >= 0.0) {
                    ok = false;
                    break;
                }
                const double inv = 1.0 / (-f);
                for (int i : scratch_.touched) g(i) += inv * scratch_.values(i);
                // (1/f^2) grad gradᵀ
                const double w2 = inv * inv;
                const auto& touched = scratch_.touched;
                for (std::size_t a = 0; a < touched.size(); ++a) {
                    const int ia = touched[a];
                    const double va = scratch_.values(ia);
                    for (std::size_t b2 = 0; b2 < touched.size(); ++b2) {
                        const int ib = touched[b2];
                        if (ia >= ib) H(ia, ib) += w2 * va * scratch_.values(ib);
                    }
                }
                for (const auto& atom : con.atoms) atom_hessian(atom, x, inv, H);
            }
            if (!ok) return false;  // should not happen from a feasible iterate

            // Scale by the block scales, then Jacobi-equilibrate so the
            // factorization sees a unit diagonal; the curvature spread of
            // the barrier is otherwise far beyond double precision.  All
            // large temporaries live in the workspace.
            Eigen::VectorXd& jac = jac_;
            for (int i = 0; i < dim_; ++i) {
                const double hii = H(i, i) * scales_(i) * scales_(i);
                jac(i) = scales_(i) / std::sqrt(std::max(hii, 1e-300));
            }
            for (int cI = 0; cI < dim_; ++cI)
                for (int rI = cI; rI < dim_; ++rI)
                    Hw_(rI, cI) = H(rI, cI) * jac(rI) * jac(cI);
            Eigen::VectorXd gj = jac.asDiagonal() * g;
            Eigen::VectorXd dy;
            Eigen::VectorXd nu;
            bool factored = false;
            for (int attempt = 0; attempt < 8 && !factored; ++attempt) {
                // Unregularized first; a ridge only as a failure fallback.
                if (attempt > 0) {
                    const double ridge = std::pow(10.0, attempt - 15.0) - std::pow(10.0, attempt - 16.0);
                    Hw_.diagonal().array() += ridge;
                }
                llt_.compute(Hw_.selfadjointView<Eigen::Lower>());
                if (llt_.info() != Eigen::Success) continue;
                if (p_ == 0) {
                    dy = jac.asDiagonal() * llt_.solve(-gj);
                } else {
                    Eigen::MatrixXd Aj = A_ * jac.asDiagonal();
                    Eigen::VectorXd hg = llt_.solve(gj);
                    Eigen::MatrixXd Y = llt_.solve(Aj.transpose());
                    Eigen::MatrixXd S = Aj * Y;
                    S.diagonal().array() += 1e-14 * std::max(1.0, S.diagonal().maxCoeff());
                    Eigen::LDLT<Eigen::MatrixXd> sldlt(S);
                    if (sldlt.info() != Eigen::Success) continue;
                    nu = sldlt.solve(-(Aj * hg));
                    dy = jac.asDiagonal() * (-hg - Y * nu);
                }
                factored = true;
            }
            if (!factored) return false;

            const double lambda2 = -g.dot(dy);
            ++newton_count;
            if (trace_)
                trace_ << stage << ',' << newton_count << ',' << t << ',' << objective(x) << ','
                       << lambda2 << ',' << sweep_values(prog_, x).max_scaled << '\n';
            if (lambda2 < 2.0 * lambda2_tol) {
                if (p_ > 0 && nu.size() == p_) last_nu_ = nu / t;
                return true;
            }
            // Backtracking line search keeping strict feasibility.
            const Eigen::VectorXd& dx = dy;
            const double phi0 = t * (-objective(x)) + sweep_values(prog_, x).barrier;
            double alpha = 1.0;
            bool stepped = false;
            double achieved = 0.0;
            for (int ls = 0; ls < 80; ++ls, alpha *= 0.5) {
                Eigen::VectorXd xn = x + alpha * dx;
                const ValueSweep s = sweep_values(prog_, xn);
                if (!s.in_domain || !s.strictly_feasible) continue;
                const double phin = t * (-objective(xn)) + s.barrier;
                if (phin <= phi0 - 0.1 * alpha * lambda2) {
                    x = std::move(xn);
                    stepped = true;
                    achieved = phi0 - phin;
                    break;
                }
            }
            if (!stepped) {
                // Search direction exhausted at numerical precision.
                if (p_ > 0 && nu.size() == p_) last_nu_ = nu / t;
                return true;
            }

            // Numerical floor: stop once neither the decrement nor the
            // barrier objective makes real progress; conditioning has
            // exhausted what double precision can resolve here.
            if (lambda2 < 0.9 * best_lambda2) {
                best_lambda2 = lambda2;
                flat_iters = 0;
            } else if (achieved <= 1e-10 * (1.0 + std::abs(phi0))) {
                if (++flat_iters >= 3) {
                    if (p_ > 0 && nu.size() == p_) last_nu_ = nu / t;
                    return true;
                }
            } else {
                flat_iters = 0;
            }
        }
        return false;
    }

    const Eigen::VectorXd& last_nu() const { return last_nu_; }
    double newton_tol() const { return newton_tol_; }

    // Residuals for the Solution report.
    double kkt_residual(const Eigen::VectorXd& x, double t) {
        std::vector<double> f(m_);
        sweep_values(prog_, x, &f);
        Eigen::VectorXd stat = -cobj_;
        for (int ci = 0; ci < m_; ++ci) {
            const auto& con = prog_.constraints()[ci];
            scratch_.reset();
            for (const auto& atom : con.atoms) atom_gradient(atom, x, scratch_);
            const double lambda = 1.0 / (t * std::max(1e-300, -f[ci]));
            for (int i : scratch_.touched) stat(i) += lambda * scratch_.values(i);
        }
        if (p_ > 0 && last_nu_.size() == p_) stat += A_.transpose() * last_nu_;
        const double gscale = std::max(1.0, (scales_.asDiagonal() * cobj_).cwiseAbs().maxCoeff());
        const double r_stat = (scales_.asDiagonal() * stat).cwiseAbs().maxCoeff() / gscale;
        const double obj = std::abs(objective(x));
        const double r_gap = static_cast<double>(m_) / (t * std::max(1.0, obj));
        double r_eq = 0.0;
        if (p_ > 0)
            r_eq = (A_ * x - b_).cwiseAbs().maxCoeff() / std::max(1.0, b_.cwiseAbs().maxCoeff());
        return std::max({r_stat, r_gap, r_eq});
    }

    const ConvexProgram& prog_;
    SolveOptions opt_;
    int dim_ = 0, m_ = 0, p_ = 0;
    Eigen::VectorXd scales_;
    Eigen::VectorXd cobj_;
    double c0_ = 0.0;
    Eigen::MatrixXd A_, As_;
    Eigen::VectorXd b_;
    Eigen::VectorXd last_nu_;
    GradScratch scratch_;
    Eigen::MatrixXd H_, Hw_;
    Eigen::VectorXd g_, jac_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    std::vector<double> fvals_;
    std::ofstream trace_;
    double newton_tol_ = 1e-9;
};

}  // namespace

std::vector<ConstraintEval> evaluate_constraints(const ConvexProgram& program,
                                                 const Eigen::VectorXd& x) {
    if (x.size() != program.dimension())
        throw std::invalid_argument("evaluate_constraints: dimension mismatch");
    std::vector<ConstraintEval> out(program.num_constraints());
    GradScratch scratch;
    scratch.init(program.dimension());
    for (int ci = 0; ci < program.num_constraints(); ++ci) {
        auto& ev = out[ci];
        ev.gradient = Eigen::VectorXd::Zero(program.dimension());
        scratch.reset();
        for (const auto& atom : program.constraints()[ci].atoms) {
            const AtomEval ae = atom_value(atom, x);
            ev.value += ae.value;
            ev.in_domain = ev.in_domain && ae.in_domain;
            if (ae.in_domain) atom_gradient(atom, x, scratch);
        }
        if (ev.in_domain)
            for (int i : scratch.touched) ev.gradient(i) = scratch.values(i);
    }
    return out;
}

Phase1Result phase1_start(const ConvexProgram& program,
                          const std::optional<Eigen::VectorXd>& hint, const SolveOptions& options) {
    Phase1Result res;
    const int d = program.dimension();
    Eigen::VectorXd x = hint && hint->size() == d ? *hint : Eigen::VectorXd::Zero(d);

    Barrier helper(program, options);
    if (!helper.project_equalities(x)) return res;

    auto strict_margin = [&](const Eigen::VectorXd& pt) {
        return sweep_values(program, pt).in_domain ? sweep_values(program, pt).max_scaled
                                                   : std::numeric_limits<double>::infinity();
    };
    double margin = strict_margin(x);
    if (margin <= -options.feas_margin) {
        res.x = std::move(x);
        res.feasible = true;
        return res;
    }
    if (!std::isfinite(margin)) {
        // Hint outside some atom domain; retry from the origin.
        x.setZero();
        if (!helper.project_equalities(x)) return res;
        margin = strict_margin(x);
        if (!std::isfinite(margin)) return res;
        if (margin <= -options.feas_margin) {
            res.x = std::move(x);
            res.feasible = true;
            return res;
        }
    }

    // Auxiliary problem: maximize -s subject to f_i - scale_i * s <= 0.
    VariableSpace space = program.space();
    const Block sblk = space.add_block("phase1_slack", 1, std::max(1.0, margin));
    ConvexProgram aux(space);
    LinearForm obj;
    obj.add(sblk.at(0), -1.0);
    aux.maximize(obj);
    for (const auto& con : program.constraints()) {
        Constraint& c = aux.add_constraint(con.scale);
        c.atoms = con.atoms;
        LinearForm slack;
        slack.add(sblk.at(0), -con.scale);
        c.affine(std::move(slack));
    }
    for (const auto& eq : program.equalities()) aux.add_equality(eq);

    Eigen::VectorXd x0(d + 1);
    x0.head(d) = x;
    x0(d) = margin + 0.1 * std::abs(margin) + 1.0;

    SolveOptions aux_opt = options;
    aux_opt.trace_path.clear();

    Barrier bar(aux, aux_opt);
    double t = std::max(1.0, static_cast<double>(aux.num_constraints()) / (std::abs(x0(d)) + 1.0));
    int newtons = 0;
    const double target = -2.0 * options.feas_margin;
    auto done = [&](const Eigen::VectorXd& pt) {
        return sweep_values(program, pt.head(d)).max_scaled <= target;
    };
    for (int stage = 0; stage < 60; ++stage) {
        bar.center(t, x0, newtons, stage, done, 1e-6);
        if (sweep_values(program, x0.head(d)).max_scaled <= target) {
            res.x = x0.head(d);
            res.feasible = true;
            return res;
        }
        if (static_cast<double>(aux.num_constraints()) / t < 1e-9 * std::max(1.0, std::abs(x0(d))))
            break;
        t *= options.mu;
    }
    // Converged without reaching a strict interior: infeasible (possibly
    // only numerically so).
    return res;
}

Solution solve(const ConvexProgram& program, const Eigen::VectorXd& start,
               const SolveOptions& options) {
    Solution sol;
    if (program.num_constraints() == 0)
        throw std::invalid_argument("solve: program has no inequality constraints");

    Eigen::VectorXd x = start;
    if (x.size() != program.dimension())
        throw std::invalid_argument("solve: start dimension mismatch");

    Barrier bar(program, options);
    if (!bar.project_equalities(x)) {
        sol.status = SolveStatus::Infeasible;
        return sol;
    }
    {
        const ValueSweep s = sweep_values(program, x);
        if (!s.in_domain || !s.strictly_feasible) {
            Phase1Result p1 = phase1_start(program, x, options);
            if (!p1.feasible) {
                sol.status = SolveStatus::Infeasible;
                return sol;
            }
            x = std::move(p1.x);
        }
    }

    // Start the path at a modest parameter: the first centerings are then
    // cheap and the iterate tracks the path instead of taking a long
    // damped-Newton march at high t.
    const int m = program.num_constraints();
    double t = options.t0 > 0.0 ? options.t0 : 1.0;
    int newtons = 0;
    auto never = [](const Eigen::VectorXd&) { return false; };
    int stage = 0;
    for (; stage < 60; ++stage) {
        const double obj_now = std::abs(bar.objective(x));
        const bool final_stage =
            static_cast<double>(m) / t <= options.tol * std::max(1.0, obj_now);
        bar.center(t, x, newtons, stage, never,
                   final_stage ? bar.newton_tol() : 1e-3);
        if (final_stage) break;
        t *= options.mu;
    }

    sol.x = x;
    sol.objective = bar.objective(x);
    sol.newton_iterations = newtons;
    sol.barrier_t = t;
    sol.kkt_residual = bar.kkt_residual(x, t);
    // The duality-gap bound certifies optimality; the stationarity part of
    // the residual can be looser on ill-conditioned instances.
    const double gap = static_cast<double>(m) / (t * std::max(1.0, std::abs(sol.objective)));
    sol.status = gap <= options.tol ? SolveStatus::Optimal : SolveStatus::MaxIter;
    return sol;
}

}  // namespace genrs
