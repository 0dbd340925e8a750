#pragma once

#include <optional>
#include <string>

#include "genrs/program.hpp"

namespace genrs {

enum class SolveStatus { Optimal, MaxIter, Infeasible };

struct Solution {
    Eigen::VectorXd x;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int newton_iterations = 0;
    SolveStatus status = SolveStatus::MaxIter;
    double barrier_t = 0.0;  // final barrier parameter, usable as a warm-start hint
};

struct SolveOptions {
    double tol = 1e-6;             // relative KKT / duality-gap target
    double feas_margin = 1e-8;     // strict-interior margin for starts (scaled)
    int max_newton_per_stage = 200;
    double mu = 20.0;              // barrier parameter growth per stage
    double t0 = 0.0;               // 0 = choose from the objective scale
    std::string trace_path;        // optional per-solve CSV trace
};

/// Log-barrier interior-point solve of a ConvexProgram (maximization).
/// `start` must be strictly feasible (all constraints < 0, equalities
/// satisfied); if it is not, a phase-I pass runs first.  Returns
/// Infeasible when no strict interior point exists.
Solution solve(const ConvexProgram& program, const Eigen::VectorXd& start,
               const SolveOptions& options = {});

/// Seeks a strictly feasible point: the hint is accepted as-is when it
/// already satisfies every constraint with margin, otherwise an auxiliary
/// slack-minimization problem is solved.  Result has all constraint
/// values ≤ -feas_margin·scale, or status Infeasible.
struct Phase1Result {
    Eigen::VectorXd x;
    bool feasible = false;
};
Phase1Result phase1_start(const ConvexProgram& program,
                          const std::optional<Eigen::VectorXd>& hint = std::nullopt,
                          const SolveOptions& options = {});

}  // namespace genrs
