#include "svkit/empirical.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "svkit/error.hpp"

namespace svkit {

namespace {

double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

void adjust_mean(ReturnSeries& s) {
  const double mean =
      std::accumulate(s.returns.begin(), s.returns.end(), 0.0) / static_cast<double>(s.size());
  for (double& r : s.returns) r -= mean;
  s.mean_adjusted = true;
  s.removed_mean = mean;
}

}  // namespace

ReturnSeries from_prices(std::span<const double> prices, bool adjust) {
  if (prices.size() < 3) {
    throw Error(ErrorCategory::precondition, "from_prices requires at least 3 prices");
  }
  for (std::size_t i = 0; i < prices.size(); ++i) {
    if (!(prices[i] > 0.0) || !std::isfinite(prices[i])) {
      throw Error(ErrorCategory::precondition,
                  "nonpositive price at index " + std::to_string(i));
    }
  }
  ReturnSeries s;
  s.returns.reserve(prices.size() - 1);
  for (std::size_t i = 1; i < prices.size(); ++i) {
    s.returns.push_back(std::log(prices[i]) - std::log(prices[i - 1]));
  }
  if (adjust) adjust_mean(s);
  return s;
}

ReturnSeries from_returns(std::span<const double> returns, bool adjust) {
  if (returns.size() < 2) {
    throw Error(ErrorCategory::precondition, "a return series needs at least 2 values");
  }
  for (std::size_t i = 0; i < returns.size(); ++i) {
    if (!std::isfinite(returns[i])) {
      throw Error(ErrorCategory::precondition,
                  "non-finite return at index " + std::to_string(i));
    }
  }
  ReturnSeries s;
  s.returns.assign(returns.begin(), returns.end());
  if (adjust) adjust_mean(s);
  return s;
}

SummaryStats summary_stats(const ReturnSeries& series) {
  const auto& r = series.returns;
  if (r.size() < 4) throw Error(ErrorCategory::precondition, "summary_stats requires T >= 4");
  const double n = static_cast<double>(r.size());
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : r) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw Error(ErrorCategory::numeric, "summary_stats: zero variance");
  return {mean, std::sqrt(m2), m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) {
    throw Error(ErrorCategory::precondition, "pearson needs two samples of equal length >= 2");
  }
  std::vector<double> terms(x.begin(), x.end());
  const double mx = sorted_sum(terms) / static_cast<double>(n);
  terms.assign(y.begin(), y.end());
  const double my = sorted_sum(terms) / static_cast<double>(n);

  std::vector<double> sxy(n), sxx(n), syy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy[i] = dx * dy;
    sxx[i] = dx * dx;
    syy[i] = dy * dy;
  }
  const double cxy = sorted_sum(sxy);
  const double cxx = sorted_sum(sxx);
  const double cyy = sorted_sum(syy);
  if (!(cxx > 0.0) || !(cyy > 0.0)) {
    throw Error(ErrorCategory::numeric, "pearson: degenerate variance");
  }
  return std::clamp(cxy / std::sqrt(cxx * cyy), -1.0, 1.0);
}

LeadLagProfile empirical_leadlag(const ReturnSeries& series, int max_lag) {
  const auto& r = series.returns;
  if (max_lag < 0) throw Error(ErrorCategory::precondition, "max_lag must be >= 0");
  if (r.size() <= static_cast<std::size_t>(max_lag) + 4) {
    throw Error(ErrorCategory::precondition,
                "empirical_leadlag requires T > max_lag + 4 (T=" + std::to_string(r.size()) +
                    ", max_lag=" + std::to_string(max_lag) + ")");
  }
  const std::size_t T = r.size();
  LeadLagProfile out;
  out.max_lag = max_lag;
  out.source = ProfileSource::empirical;
  std::vector<double> x, y;
  for (int k = -max_lag; k <= max_lag; ++k) {
    const std::size_t a = static_cast<std::size_t>(std::abs(k));
    x.clear();
    y.clear();
    for (std::size_t t = 0; t + a < T; ++t) {
      // k > 0 pairs r_t with r_{t+k}^2; k < 0 pairs r_{t+|k|} with r_t^2.
      const std::size_t it = k >= 0 ? t : t + a;
      const std::size_t iv = k >= 0 ? t + a : t;
      x.push_back(r[it]);
      y.push_back(r[iv] * r[iv]);
    }
    double corr;
    try {
      corr = pearson(x, y);
    } catch (const Error& e) {
      throw Error(e.category(), std::string(e.what()) + " at lag " + std::to_string(k));
    }
    // Covariance from the correlation and the two sample variances.
    const auto sd = [](const std::vector<double>& v) {
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double s = 0.0;
      for (double z : v) s += (z - m) * (z - m);
      return std::sqrt(s / static_cast<double>(v.size()));
    };
    out.rhos.push_back(corr);
    out.gammas.push_back(corr * sd(x) * sd(y));
  }
  return out;
}

double bartlett_band(std::size_t T, double level) {
  if (T < 2) throw Error(ErrorCategory::precondition, "bartlett_band requires T >= 2");
  if (!(level >= 0.0 && level < 1.0)) {
    throw Error(ErrorCategory::precondition, "bartlett_band level must lie in [0, 1)");
  }
  if (level == 0.0) return 0.0;
  const boost::math::normal_distribution<double> std_normal;
  const double z = boost::math::quantile(std_normal, 0.5 * (1.0 + level));
  return z / std::sqrt(static_cast<double>(T));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r\"");
    const auto e = field.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_iso_date(const std::string& s) {
  static const std::regex iso(R"(^\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?$)");
  if (!std::regex_match(s, iso)) return false;
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

}  // namespace

IngestResult read_series_csv(std::istream& in, bool adjust) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw Error(ErrorCategory::io, "CSV input is empty or lacks a header row");
  int date_col = -1, value_col = -1;
  bool prices = false;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lower(header[i]);
    if (h == "date") date_col = static_cast<int>(i);
    if (h == "price" || h == "return") {
      value_col = static_cast<int>(i);
      prices = h == "price";
    }
  }
  if (value_col < 0) {
    throw Error(ErrorCategory::config, "CSV header must name a 'price' or 'return' column");
  }

  IngestResult result;
  result.from_prices = prices;
  std::vector<double> values;
  std::vector<std::string> dates;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) <= value_col || fields[value_col].empty()) {
      throw Error(ErrorCategory::io, "missing value on line " + std::to_string(line_no));
    }
    const std::string& f = fields[value_col];
    double v = 0.0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
      throw Error(ErrorCategory::io, "unparseable value '" + f + "' on line " +
                                         std::to_string(line_no));
    }
    values.push_back(v);
    std::string date;
    if (date_col >= 0 && static_cast<int>(fields.size()) > date_col) date = fields[date_col];
    if (date_col >= 0 && !is_iso_date(date)) {
      ++result.malformed_dates;
      date.clear();
    }
    dates.push_back(date);
  }

  if (prices) {
    result.series = from_prices(values, adjust);
    if (date_col >= 0) result.series.timestamps.assign(dates.begin() + 1, dates.end());
  } else {
    result.series = from_returns(values, adjust);
    if (date_col >= 0) result.series.timestamps = std::move(dates);
  }
  return result;
}

IngestResult read_series_csv_file(const std::string& path, bool adjust) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot open input file '" + path + "'");
  return read_series_csv(in, adjust);
}

}  // namespace svkit
