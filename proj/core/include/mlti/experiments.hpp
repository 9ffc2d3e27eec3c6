#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlti/random.hpp"
#include "mlti/system.hpp"

namespace mlti::experiments {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

bool all_pass(const std::vector<Check>& checks);

/// Experiment "7.1": fixed 3x2-state SISO Tucker system. Golden reachability
/// and observability slices, unfolding ranks, and the stability verdict.
struct ReachObsExample {
    MltiSystem system;
    double rho_product = 0.0;
    Index rank_reach = 0, rank_obs = 0;
    Index rank_reach_ttd = 0, rank_obs_ttd = 0;
    StabilityVerdict stability;
    EvenPairedTensor reach;
    EvenPairedTensor obs;
    std::vector<Check> checks;
    double wall_seconds = 0.0;
};
ReachObsExample run_reach_obs_example();

/// The fixed system behind experiment "7.1".
TuckerSystem reach_obs_example_tucker();

/// Experiment "7.2": sigma_max of phi(A) from the TT pipeline against a
/// dense SVD, with wall times, on planted generalized-TT systems with
/// 2^n-state unfoldings.
struct SigmaTimingRow {
    Index n = 0;
    double ttd_seconds = 0.0;
    double svd_seconds = 0.0;
    double sigma_ttd = 0.0;
    double sigma_svd = 0.0;
    double rel_error = 0.0;
    std::string verdict;
};
struct SigmaTimingResult {
    std::vector<SigmaTimingRow> rows;
    std::vector<Check> checks;
    bool trend_ok = true;        // non-blocking: TTD faster than SVD at n = 12
    std::string trend_note;
};
SigmaTimingResult run_sigma_timing(const std::vector<Index>& sizes, std::uint64_t seed);

/// Experiment "7.3": Kronecker-rank and TT-rank truncation ladders on a
/// seeded random sparse SISO system with 3x3x3 states.
struct RankTruncationRow {
    std::string format;       // "gen-cpd" or "gen-ttd"
    std::string ranks_label;
    Index parameters = 0;
    double recon_error = 0.0; // Frobenius, on A
    double hinf_error = 0.0;
};
struct RankTruncationResult {
    Index full_parameters = 0;
    std::array<Index, 3> formula_params{}; // parameter formula at R1 = 49, 20, 10 (R2 = R3 = 2)
    std::vector<RankTruncationRow> rows;
    std::vector<Check> checks;
};
RankTruncationResult run_rank_truncation(std::uint64_t seed);

/// Experiment "7.4": parameter budgets of the exact generalized TTD of a
/// planted low-TT-rank 6x6x6 MIMO system against balanced truncation.
struct MemoryComparisonRow {
    std::string method;
    std::string ranks_label;
    Index parameters = 0;
    double hinf_error = 0.0;
};
struct MemoryComparisonResult {
    Index full_parameters = 0;
    std::vector<MemoryComparisonRow> rows;
    std::vector<Check> checks;
};
MemoryComparisonResult run_memory_comparison(std::uint64_t seed);

} // namespace mlti::experiments
