#pragma once

#include <string>
#include <vector>

#include "genrs/config.hpp"
#include "genrs/multicast.hpp"

namespace genrs {

/// One optimization outcome: a (scheme, sweep value, realization) cell.
/// Unit rates follow the canonical group order; layer rates follow the
/// full-general layer order (schemes with fewer layers report zeros on
/// the missing ones).  Wall time is the only nondeterministic field.
struct ResultRecord {
    std::string scheme;
    double sweep_value = 0.0;
    int realization = 0;
    std::uint64_t seed = 0;
    std::string status = "ok";
    double wsr = 0.0;  // bits/s
    std::vector<double> unit_rates;
    std::vector<double> layer_rates;
    int iterations = 0;
    double wall_ms = 0.0;
};

struct RunOutput {
    std::vector<ResultRecord> records;
    std::vector<UserSet> groups;  // canonical unit order for the columns
    std::vector<UserSet> layers;  // full-general layer order
    bool any_failed = false;
};

/// Runs every (scheme, sweep value, realization) cell on a small worker
/// pool.  Outputs are fully determined by (config, seed); failures are
/// recorded per cell and do not stop the run.
RunOutput run(const ExperimentConfig& config, int jobs = 0);

/// CSV with a fixed, documented header; floats carry 9 significant
/// digits.  Round-trips through parse_records_csv.
void emit_csv(const RunOutput& out, const std::string& path);
RunOutput parse_records_csv(const std::string& path);

/// Per-(scheme, sweep) means with standard errors plus matched-seed
/// pairwise differences between schemes.
struct SummaryCell {
    std::string scheme;
    double sweep_value = 0.0;
    int count = 0;
    double mean = 0.0;
    double std_error = 0.0;
    bool degenerate = false;  // a single record has no spread estimate
};
struct PairwiseDiff {
    std::string scheme_a, scheme_b;
    double sweep_value = 0.0;
    int pairs = 0;
    double mean_diff = 0.0;  // a minus b, bits/s
    double se_diff = 0.0;
};
struct Summary {
    std::vector<SummaryCell> cells;
    std::vector<PairwiseDiff> pairwise;
    std::vector<std::string> warnings;
};
Summary summarize(const std::vector<ResultRecord>& records);
std::string format_summary(const Summary& summary);

/// Mean-WSR ordering check used by the CLI's --assert-ordering: the
/// full-split scheme must not trail any baseline by more than 1% in any
/// sweep cell.  Returns the violations (empty when the ordering holds).
std::vector<std::string> ordering_violations(const Summary& summary);

}  // namespace genrs
