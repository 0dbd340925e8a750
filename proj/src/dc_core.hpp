#pragma once

// Shared CCCP engine for the per-realization and covariance-approximated
// weighted sum rate problems.  Both have the same difference-of-convex
// shape; they differ only in the quadratic forms standing in for the
// received signal powers: rank-1 channel outer products per realization,
// covariance eigenform sets for the statistics-based variant.
//
// Everything here works in normalized units: channels divided by the
// noise standard deviation (so the noise floor is 1), rates and the e
// auxiliaries in units of the subcarrier bandwidth B, and the SINR
// auxiliaries u carried as v = log2(u).  The log parametrization keeps
// the 2^{e/B} <= u coupling affine and evaluates without catastrophic
// cancellation at high SNR.

#include <complex>
#include <optional>
#include <vector>

#include "genrs/channel.hpp"
#include "genrs/multicast.hpp"
#include "genrs/program.hpp"
#include "genrs/solver.hpp"

namespace genrs::detail {

// Noise-normalized quadratic form set for one (user, subcarrier):
// phi(w) = sum_i weight_i |q_i^H w|^2.
struct FormSet {
    std::vector<double> weights;
    std::vector<cvec> vectors;

    double eval(const cvec& w) const {
        double v = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const std::complex<double> z = vectors[i].dot(w);
            v += weights[i] * std::norm(z);
        }
        return v;
    }
};

// Enumeration of the per-user decode subsets X ⊆ G^(k), flattened in
// canonical order (k ascending, subsets in submask order).
struct KxLayout {
    std::vector<std::vector<std::vector<int>>> per_user;  // [k-1][x] = layer indices
    std::vector<std::pair<int, int>> flat;                // (k, x index)

    static KxLayout build(const SplitStructure& s);
    int num_kx() const { return static_cast<int>(flat.size()); }
};

struct DcIterate {
    std::vector<cvec> w;        // [layer*N + n-1], physical magnitude (W^1/2)
    std::vector<double> rates;  // split rates, units of B
    std::vector<double> e;      // [kx*N + n-1], units of B
    std::vector<double> v;      // [kx*N + n-1], v = log2(u)
};

struct DcParams {
    double power = 1.0;               // P
    std::vector<double> weights;      // alpha per group, canonical order
    double obj_tol_rel = 1e-3;        // outer stop on relative objective change
    double obj_tol_abs = 0.0;         // optional absolute stop, units of B; 0 = off
    double iterate_eps = 0.0;         // optional iterate-change stop; 0 = off
    int max_outer = 50;
    SolveOptions solver;
};

struct DcSolution {
    DcIterate iterate;
    std::vector<double> objective_trace;  // units of B, one entry per accepted iterate
    int outer_iterations = 0;
    int newton_iterations = 0;
};

class DcEngine {
public:
    // forms[(k-1)*N + (n-1)] are the noise-normalized signal power forms;
    // init_directions[layer*N + (n-1)] are unit beam directions for the
    // feasible initializer.
    DcEngine(const SplitStructure& structure, int num_subcarriers, int num_antennas,
             std::vector<FormSet> forms, std::vector<cvec> init_directions, DcParams params);

    const KxLayout& layout() const { return kx_; }
    int num_layers() const { return L_; }

    double objective(const DcIterate& it) const;

    // Strictly feasible point: equal-power beams along the supplied
    // directions at 0.9 P, then u from the resulting SINR ratios with a
    // 1e-3 interiority margin and a uniform max-min rate fill.
    DcIterate feasible_init() const;

    // The convexified subproblem around prev (the CCCP majorization),
    // with the auxiliary e variables and their coupling constraints spelled
    // out explicitly.
    ConvexProgram build_subproblem(const DcIterate& prev) const;

    // The same subproblem with the pure-slack e block eliminated: the
    // equality plus the per-subcarrier 2^{e/B} <= u links collapse to one
    // aggregated budget row per decode subset.  Exact transformation; it
    // is what the CCCP loop actually solves (no equality rows to drift).
    ConvexProgram build_subproblem_reduced(const DcIterate& prev) const;

    Eigen::VectorXd pack(const DcIterate& it) const;
    DcIterate unpack(const Eigen::VectorXd& x) const;
    Eigen::VectorXd pack_reduced(const DcIterate& it) const;
    DcIterate unpack_reduced(const Eigen::VectorXd& x) const;

    DcSolution run(std::optional<DcIterate> init = std::nullopt) const;

    // Direct re-evaluation of the rate-region right-hand side for (k, X)
    // at the given beams: sum_n log2(1 + S/(1+I)), units of B.
    double rate_region_rhs(const std::vector<cvec>& w, int k, const std::vector<int>& x) const;

    // max over slots of |2^{e/B} - u| / u, evaluated cancellation-safe.
    double activity_gap(const DcIterate& it) const;

private:
    const SplitStructure& structure_;
    int K_, N_, M_, L_;
    std::vector<FormSet> forms_;           // (k-1)*N + (n-1)
    std::vector<cvec> init_dirs_;          // layer*N + (n-1)
    DcParams params_;
    KxLayout kx_;
    std::vector<std::vector<int>> out_layers_;  // per user: G \ G^(k)
    std::vector<std::vector<int>> kx_splits_;   // per kx: split indices feeding X

    ConvexProgram build_impl(const DcIterate& prev, bool with_aux_e) const;

    int wi(int layer, int n) const { return layer * N_ + (n - 1); }
    int slot(int kx, int n) const { return kx * N_ + (n - 1); }

    const FormSet& form(int k, int n) const { return forms_[(k - 1) * N_ + (n - 1)]; }

    // Adds the real/imag linear forms of q^H w_{G,n} over the w block.
    void form_pair(const Block& wblk, int layer, int n, const cvec& q, LinearForm& re,
                   LinearForm& im) const;
};

// Forms for a channel realization (rank-1 per (k,n)), noise-normalized.
std::vector<FormSet> realization_forms(const ChannelRealization& h, double noise);

// Forms from covariance statistics (eigendecomposition of Q / sigma^2),
// dropping numerically zero eigenvalues.
std::vector<FormSet> statistics_forms(const ChannelStatistics& stats, int num_subcarriers,
                                      double noise);

// Group-sum-channel MRT directions from rank-1 realization forms.
std::vector<cvec> mrt_directions(const ChannelRealization& h, const SplitStructure& s);

// Principal-eigenvector directions of the group-summed covariance.
std::vector<cvec> statistics_directions(const ChannelStatistics& stats,
                                        const SplitStructure& s, int num_subcarriers);

}  // namespace genrs::detail
