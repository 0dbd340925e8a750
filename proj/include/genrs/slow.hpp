#pragma once

#include <optional>
#include <vector>

#include "genrs/channel.hpp"
#include "genrs/multicast.hpp"
#include "genrs/program.hpp"
#include "genrs/solver.hpp"

namespace genrs {

/// Parameters of the per-realization weighted sum rate problem.
struct SlowParams {
    double power = 1.0;           // P, watts
    double bandwidth = 30e3;      // B, Hz per subcarrier
    double noise = 1e-9;          // sigma^2, watts
    std::vector<double> weights;  // alpha per group, canonical group order

    // Outer CCCP stops: relative objective change (primary), optional
    // absolute objective change in bits/s, optional iterate-change norm.
    double obj_tol_rel = 1e-3;
    double obj_tol_abs = 0.0;
    double iterate_eps = 0.0;
    int max_outer = 50;
    SolveOptions solver;
};

/// One feasible point of the auxiliary-variable problem.  Beamformers are
/// indexed [layer * N + (n-1)]; e (bits/s) and u are indexed
/// [kx * N + (n-1)] where kx runs over users' decode subsets in canonical
/// order (k ascending, then submask order).
struct SlowIterate {
    std::vector<cvec> w;
    RateAllocation rates;   // bits/s
    std::vector<double> e;  // bits/s
    std::vector<double> u;  // SINR-style auxiliaries, > 0
};

struct SlowSolution {
    SlowIterate iterate;
    std::vector<double> objective_trace;  // weighted sum rate, bits/s
    int outer_iterations = 0;
    int newton_iterations = 0;
};

/// B * sum_n log2(1 + S/(sigma^2 + I)) for user k decoding the layer
/// subset X jointly (X holds layer indices into structure.layers()).
double achievable_rate_rhs(const ChannelRealization& h, const std::vector<cvec>& w,
                           const SplitStructure& structure, const SlowParams& params, int k,
                           const std::vector<int>& x);

/// Strictly feasible starting point: equal-power MRT toward the group sum
/// channel at 0.9 P, auxiliaries from the resulting SINRs with a small
/// interiority margin, and a uniform max-min rate fill.
SlowIterate init_feasible_slow(const ChannelRealization& h, const SplitStructure& structure,
                               const SlowParams& params);

/// The convex subproblem linearized around `previous`, plus the packed
/// starting vector and the blocks to inspect it.
struct SlowSubproblem {
    ConvexProgram program;
    Eigen::VectorXd start;
};
SlowSubproblem build_problem4(const ChannelRealization& h, const SplitStructure& structure,
                              const SlowIterate& previous, const SlowParams& params);

/// CCCP on the per-realization problem; the objective trace is
/// nondecreasing and the returned iterate satisfies the original rate
/// region constraints.
SlowSolution cccp_slow(const ChannelRealization& h, const SplitStructure& structure,
                       const SlowParams& params,
                       const std::optional<SlowIterate>& init = std::nullopt);

/// Max relative gap |2^{e/B} - u| / u over all auxiliary slots.
double lemma1_activity(const SlowIterate& iterate, const SlowParams& params);

/// Re-evaluates the rate-region and power constraints of the original
/// problem at the iterate (not through e, u); returns the worst relative
/// violation (<= 0 when feasible).
double slow_feasibility_gap(const ChannelRealization& h, const SplitStructure& structure,
                            const SlowParams& params, const SlowIterate& iterate);

/// Single-group-multicast-per-subcarrier baseline: per-subcarrier MRT
/// beams, greedy unit assignment by weighted marginal rate, then a
/// water-filling-style concave power allocation.
struct OfdmaResult {
    double wsr = 0.0;                 // bits/s
    std::vector<double> unit_rates;   // per group, canonical order, bits/s
    std::vector<int> assignment;      // per subcarrier: group index
    std::vector<double> power;        // per subcarrier, watts
};
OfdmaResult ofdma_baseline(const ChannelRealization& h, const SplitStructure& structure,
                           const SlowParams& params);

}  // namespace genrs
