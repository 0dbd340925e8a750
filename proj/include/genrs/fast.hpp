#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "genrs/channel.hpp"
#include "genrs/multicast.hpp"
#include "genrs/slow.hpp"

namespace genrs {

/// Parameters of the ergodic-rate problems: link budget plus the
/// Monte-Carlo evaluation budget.
struct FastParams {
    double power = 1.0;
    double bandwidth = 30e3;
    double noise = 1e-9;
    std::vector<double> weights;  // alpha per group, canonical order
    int mc_samples = 2000;        // ergodic-rate evaluation budget
    SolveOptions solver;

    // Outer CCCP stops for the statistics-based variants.
    double obj_tol_rel = 1e-3;
    double obj_tol_abs = 0.0;
    int max_outer = 50;
};

/// Step-size and penalty schedule of the stochastic algorithm:
/// omega_i = i^-a_omega, gamma_i = i^-a_gamma.
struct SscaParams {
    int iterations = 200;  // T
    double rho = 0.0;      // penalty weight; 0 = 10 * sum(alpha)
    double tau = 1e-3;     // proximal curvature of each sample surrogate
    double a_omega = 0.6;
    double a_gamma = 0.9;
    double slack_tol = 1e-3;  // on max slack / (B N)
    int max_escalations = 3;

    /// Enforces 0 < a_omega <= 1, a_omega < a_gamma <= 1, 2 a_gamma > 1.
    void validate() const;
    double omega(int i) const;
    double gamma(int i) const;
};

/// Recursively averaged surrogate of each ergodic rate term: per decode
/// slot (kx, n) the aggregate is constant + linear - quad * ||w||^2 over
/// the flattened beamformer reals, which reproduces the weighted sum of
/// all past per-sample surrogates exactly.
struct SurrogateState {
    int num_slots = 0;
    int w_dim = 0;
    std::vector<double> quad;            // >= 0
    std::vector<Eigen::VectorXd> lin;
    std::vector<double> constant;
    int iteration = 0;

    static SurrogateState zeros(int num_slots, int w_dim);
    double evaluate(int slot, const Eigen::VectorXd& w_flat) const;
};

struct FastIterate {
    std::vector<cvec> w;          // [layer * N + (n-1)]
    RateAllocation rates;         // bits/s
    std::vector<double> slack;    // bits/s, per decode subset (kx order)
};

struct FastSolution {
    FastIterate iterate;
    std::vector<double> objective_trace;  // penalized objective, bits/s
    std::vector<double> slack_trace;      // max slack / (B N)
    double rho_final = 0.0;
    int escalations = 0;
    bool slack_ok = false;
};

/// Monte-Carlo estimate of B sum_n E[log2(1 + S/(sigma^2+I))] for user k
/// and layer subset x, with antithetic radial pairs; deterministic for a
/// fixed seed and independent of the scheduling of samples.
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};
McEstimate ergodic_rate_rhs(const std::vector<cvec>& w, const ChannelStatistics& stats,
                            const SplitStructure& structure, const FastParams& params, int k,
                            const std::vector<int>& x, int samples, std::uint64_t seed);

/// One stochastic iteration: surrogate recursion with the new channel
/// sample, the penalized convex subproblem, and the averaged beamformer
/// update.  `i` is 1-based.
struct SscaState {
    FastIterate iterate;
    SurrogateState surrogate;
    double rho = 0.0;
};
void ssca_step(SscaState& state, const ChannelRealization& h_sample,
               const SplitStructure& structure, const FastParams& params,
               const SscaParams& ssca, int i);

/// Full stochastic run with penalty escalation until the slack vanishes
/// (or the escalation budget is exhausted; see FastSolution::slack_ok).
FastSolution run_ssca(const SplitStructure& structure, const ChannelStatistics& stats,
                      int num_subcarriers, const FastParams& params, const SscaParams& ssca,
                      std::uint64_t seed);

/// CCCP on the covariance-approximated problem (spatially correlated
/// statistics); returns the beams and the approximation-objective trace.
struct FastCorSolution {
    std::vector<cvec> w;
    RateAllocation rates;                 // bits/s, from the approximate problem
    std::vector<double> objective_trace;  // bits/s
    int outer_iterations = 0;
};
FastCorSolution cccp_correlated(const SplitStructure& structure, const ChannelStatistics& stats,
                                int num_subcarriers, const FastParams& params,
                                const std::optional<SlowIterate>& init = std::nullopt);

/// The convex subproblem of the covariance-approximated problem around
/// `previous` (same shape as the per-realization one with w^H Q w forms).
SlowSubproblem build_problem8(const ChannelStatistics& stats, int num_subcarriers,
                              const SplitStructure& structure, const SlowIterate& previous,
                              const FastParams& params);

/// Feasible-rate linear program at fixed beams: maximizes the weighted sum
/// rate under Monte-Carlo ergodic rate constraints.  Returns the
/// allocation and the sampled right-hand sides (bits/s, kx order).
struct RateLpResult {
    RateAllocation rates;
    std::vector<double> rhs;
    double wsr = 0.0;
};
RateLpResult rate_lp(const std::vector<cvec>& w, const SplitStructure& structure,
                     const ChannelStatistics& stats, const FastParams& params, int samples,
                     std::uint64_t seed);

/// The same linear program with externally supplied right-hand sides
/// (bits/s, in canonical decode-subset order).
RateLpResult rate_lp_from_rhs(const SplitStructure& structure, const FastParams& params,
                              const std::vector<double>& rhs);

/// CCCP over per-layer powers for i.i.d. statistics (the problem is
/// independent of the antenna count).  t is indexed [layer * N + (n-1)].
struct FastIidSolution {
    std::vector<double> t;                // watts
    RateAllocation rates;                 // bits/s
    std::vector<double> objective_trace;  // bits/s
    int outer_iterations = 0;
};
FastIidSolution cccp_iid(const SplitStructure& structure, int num_subcarriers, double lambda,
                         const FastParams& params);

/// Any beam direction of the right norm is optimal under i.i.d.
/// statistics; the first canonical axis is used for reproducibility.
std::vector<cvec> recover_w(const std::vector<double>& t, int num_antennas);

}  // namespace genrs
