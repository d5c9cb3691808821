#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "svkit/leadlag.hpp"

namespace svkit {

struct ReturnSeries {
  std::vector<std::string> timestamps;  // empty, or one entry per return
  std::vector<double> returns;
  bool mean_adjusted = false;
  double removed_mean = 0.0;  // sample mean subtracted when mean_adjusted

  std::size_t size() const noexcept { return returns.size(); }
};

/// Log returns r_t = log P_t - log P_{t-1}; the sample mean is removed when
/// `adjust` is set.
ReturnSeries from_prices(std::span<const double> prices, bool adjust);

/// Wraps an already-computed return series (T >= 2).
ReturnSeries from_returns(std::span<const double> returns, bool adjust);

/// Sample moments with 1/T normalisation.
struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
};

SummaryStats summary_stats(const ReturnSeries& series);

/// Corr(r_t, r_{t+k}^2) over the aligned overlap for k in [-max_lag, max_lag].
/// gammas hold the matching sample covariances.
LeadLagProfile empirical_leadlag(const ReturnSeries& series, int max_lag);

/// Pearson correlation of two equal-length samples. Sums are accumulated in
/// sorted order, so permuting the pairs leaves the result bit-identical.
double pearson(std::span<const double> x, std::span<const double> y);

/// Half-width z_{(1+level)/2} / sqrt(T) of the independence band.
double bartlett_band(std::size_t T, double level);

struct IngestResult {
  ReturnSeries series;
  std::size_t malformed_dates = 0;
  bool from_prices = false;
};

/// Reads a CSV with a header naming `date` and one of `price` / `return`.
IngestResult read_series_csv(std::istream& in, bool adjust);
IngestResult read_series_csv_file(const std::string& path, bool adjust);

}  // namespace svkit
