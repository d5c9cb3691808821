#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "svkit/model.hpp"
#include "svkit/rng.hpp"

namespace svkit {

/// Brute-force Monte Carlo estimate of a closed-form quantity.
struct OracleEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::string target;
};

inline constexpr int kOracleBatches = 100;

/// Central moment of the given order (2, 3 or 4) of stationary returns;
/// batch-means standard error over 100 batches.
OracleEstimate mc_moment(const ModelSpec& spec, int order, std::size_t n, RngPolicy rng);

/// Sample mean of r_t e^{h_{t+k}} over independent stationary segments.
OracleEstimate mc_gamma(const ModelSpec& spec, int k, std::size_t n, RngPolicy rng);

/// Every quantity the report checks, estimated from one set of draws.
struct OracleBundle {
  OracleEstimate m2, m3, m4, skewness, kurtosis, var_exp_h, mean_correction;
  std::vector<OracleEstimate> gammas;  // k = -max_lag..max_lag
  int max_lag = 0;
};

OracleBundle mc_bundle(const ModelSpec& spec, int max_lag, std::size_t n, RngPolicy rng);

/// Status of one (spec, quantity) comparison.
enum class CellStatus {
  ok,                    // |z| <= 4
  flagged,               // |z| > 4 on a cell with no registered doubt
  confirmed_as_printed,  // registered doubtful cell, oracle agrees
  documented_discrepancy // registered doubtful cell, oracle disagrees
};

const char* status_name(CellStatus s) noexcept;

struct DiscrepancyEntry {
  ModelSpec spec;
  std::string quantity;
  double analytic = 0.0;
  double oracle = 0.0;
  double se = 0.0;
  double z = 0.0;
  CellStatus status = CellStatus::ok;
  bool preregistered = false;
};

struct DiscrepancyReport {
  std::vector<DiscrepancyEntry> entries;
  std::size_t n = 0;

  std::size_t flagged_count() const;
};

inline constexpr double kFlagThreshold = 4.0;
inline constexpr int kReportMaxLag = 2;

/// True for table cells whose printed form was doubted before any oracle run.
bool is_preregistered(ModelId model, const std::string& quantity);

/// Compares every analytic quantity for every spec with its oracle estimate.
/// Cells are evaluated in parallel, each on its own RNG stream.
DiscrepancyReport discrepancy_report(const std::vector<ModelSpec>& grid, std::size_t n,
                                     std::uint64_t seed, unsigned max_threads = 0);

/// CSV columns: model,quantity,analytic,oracle,se,z,flag (plus a spec column).
void write_report_csv(const DiscrepancyReport& report, std::ostream& os);

/// Default three-point grid per family.
std::vector<ModelSpec> default_verification_grid();

}  // namespace svkit
