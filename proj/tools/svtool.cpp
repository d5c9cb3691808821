#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "svkit/closed_form.hpp"
#include "svkit/empirical.hpp"
#include "svkit/error.hpp"
#include "svkit/format.hpp"
#include "svkit/inference.hpp"
#include "svkit/leadlag.hpp"
#include "svkit/model.hpp"
#include "svkit/oracle.hpp"
#include "svkit/simulate.hpp"

namespace fs = std::filesystem;
using namespace svkit;

namespace {

using Settings = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat key=value file; "[section]" lines prefix the keys that follow.
Settings read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::config, "cannot open config file '" + path + "'");
  Settings out;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(ErrorCategory::config, "bad section header on line " + std::to_string(line_no));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCategory::config, "expected key=value on line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    out[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCategory::config, "setting '" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCategory::config, "setting '" + key + "' expects an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCategory::config, "setting '" + key + "' expects true/false, got '" + v + "'");
}

struct RunConfig {
  std::string command;
  ModelSpec spec;
  PriorConfig priors;
  McmcConfig mcmc;
  std::string input_path;
  std::string output_dir;
  std::uint64_t seed = 1;
  int max_lag = 20;
  std::size_t T = 2000;
  std::size_t n = 1000000;
  double band_level = 0.95;
  bool force = false;
  bool model_given = false;
};

// Applies every setting; unknown keys are a config error.
void apply_settings(const Settings& s, RunConfig& cfg) {
  SvParams& p = cfg.spec.params;
  PriorConfig& pr = cfg.priors;
  McmcConfig& m = cfg.mcmc;
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
      {"run.model",
       [&](const std::string& k, const std::string& v) {
         const auto id = parse_model(v);
         if (!id) throw Error(ErrorCategory::config, "setting '" + k + "': unknown model '" + v + "'");
         cfg.spec.model = *id;
         cfg.model_given = true;
       }},
      {"run.seed", [&](auto& k, auto& v) { cfg.seed = static_cast<std::uint64_t>(to_integer(k, v)); }},
      {"run.input", [&](auto&, auto& v) { cfg.input_path = v; }},
      {"run.output_dir", [&](auto&, auto& v) { cfg.output_dir = v; }},
      {"run.max_lag", [&](auto& k, auto& v) { cfg.max_lag = static_cast<int>(to_integer(k, v)); }},
      {"run.T", [&](auto& k, auto& v) { cfg.T = static_cast<std::size_t>(to_integer(k, v)); }},
      {"run.n", [&](auto& k, auto& v) { cfg.n = static_cast<std::size_t>(to_integer(k, v)); }},
      {"run.band_level", [&](auto& k, auto& v) { cfg.band_level = to_double(k, v); }},
      {"model.alpha", [&](auto& k, auto& v) { p.alpha = to_double(k, v); }},
      {"model.phi", [&](auto& k, auto& v) { p.phi = to_double(k, v); }},
      {"model.sigma", [&](auto& k, auto& v) { p.sigma = to_double(k, v); }},
      {"model.rho", [&](auto& k, auto& v) { p.rho = to_double(k, v); }},
      {"model.nu", [&](auto& k, auto& v) { p.nu = to_double(k, v); }},
      {"model.lambda", [&](auto& k, auto& v) { p.lambda = to_double(k, v); }},
      {"model.pi1", [&](auto& k, auto& v) { p.pi1 = to_double(k, v); }},
      {"model.pi2", [&](auto& k, auto& v) { p.pi2 = to_double(k, v); }},
      {"prior.alpha_mean", [&](auto& k, auto& v) { pr.alpha_mean = to_double(k, v); }},
      {"prior.alpha_sd", [&](auto& k, auto& v) { pr.alpha_sd = to_double(k, v); }},
      {"prior.phi_a", [&](auto& k, auto& v) { pr.phi_a = to_double(k, v); }},
      {"prior.phi_b", [&](auto& k, auto& v) { pr.phi_b = to_double(k, v); }},
      {"prior.prec_shape", [&](auto& k, auto& v) { pr.prec_shape = to_double(k, v); }},
      {"prior.prec_rate", [&](auto& k, auto& v) { pr.prec_rate = to_double(k, v); }},
      {"prior.nu_mean", [&](auto& k, auto& v) { pr.nu_mean = to_double(k, v); }},
      {"prior.nu_max", [&](auto& k, auto& v) { pr.nu_max = to_double(k, v); }},
      {"prior.lambda_mean", [&](auto& k, auto& v) { pr.lambda_mean = to_double(k, v); }},
      {"prior.lambda_sd", [&](auto& k, auto& v) { pr.lambda_sd = to_double(k, v); }},
      {"prior.jump_a", [&](auto& k, auto& v) { pr.jump_a = to_double(k, v); }},
      {"prior.jump_b", [&](auto& k, auto& v) { pr.jump_b = to_double(k, v); }},
      {"mcmc.n_chains", [&](auto& k, auto& v) { m.n_chains = static_cast<int>(to_integer(k, v)); }},
      {"mcmc.burn_in", [&](auto& k, auto& v) { m.burn_in = static_cast<int>(to_integer(k, v)); }},
      {"mcmc.n_keep", [&](auto& k, auto& v) { m.n_keep = static_cast<int>(to_integer(k, v)); }},
      {"mcmc.thin", [&](auto& k, auto& v) { m.thin = static_cast<int>(to_integer(k, v)); }},
      {"mcmc.adapt_window",
       [&](auto& k, auto& v) { m.adapt_window = static_cast<int>(to_integer(k, v)); }},
      {"mcmc.target_accept", [&](auto& k, auto& v) { m.target_accept = to_double(k, v); }},
      {"mcmc.h_draws_per_chain",
       [&](auto& k, auto& v) { m.h_draws_per_chain = static_cast<int>(to_integer(k, v)); }},
      {"mcmc.prior_only", [&](auto& k, auto& v) { m.prior_only = to_bool(k, v); }},
      {"mcmc.max_threads",
       [&](auto& k, auto& v) { m.max_threads = static_cast<unsigned>(to_integer(k, v)); }},
  };
  for (const auto& [key, value] : s) {
    // Keys without a section belong to [run].
    const std::string full = key.find('.') == std::string::npos ? "run." + key : key;
    const auto it = setters.find(full);
    if (it == setters.end()) throw Error(ErrorCategory::config, "unknown setting '" + key + "'");
    it->second(full, value);
  }
}

class Outputs {
 public:
  Outputs(const RunConfig& cfg) : dir_(cfg.output_dir), force_(cfg.force) {}

  fs::path path(const std::string& name) const { return dir_ / name; }

  // Refuses to touch anything before every target has been checked.
  void claim(const std::vector<std::string>& names) const {
    for (const auto& n : names) {
      if (fs::exists(path(n)) && !force_) {
        throw Error(ErrorCategory::config,
                    "output '" + path(n).string() + "' exists; pass --force to overwrite");
      }
    }
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCategory::io, "cannot create output directory '" + dir_.string() + "'");
  }

  std::ofstream open(const std::string& name, const std::string& header) const {
    std::ofstream os(path(name));
    if (!os) throw Error(ErrorCategory::io, "cannot write '" + path(name).string() + "'");
    os << header << '\n';
    return os;
  }

 private:
  fs::path dir_;
  bool force_;
};

std::string header(const std::string& spec, std::uint64_t seed) {
  return "# spec=" + spec + ", seed=" + std::to_string(seed) + ", version=" + kVersion;
}

ReturnSeries load_input(const RunConfig& cfg) {
  if (cfg.input_path.empty()) throw Error(ErrorCategory::config, "this command needs --input");
  if (!fs::exists(cfg.input_path)) {
    throw Error(ErrorCategory::config, "input file '" + cfg.input_path + "' does not exist");
  }
  auto ingest = read_series_csv_file(cfg.input_path, true);
  if (ingest.malformed_dates > 0) {
    std::cerr << "warning: " << ingest.malformed_dates << " malformed date(s) in "
              << cfg.input_path << '\n';
  }
  return std::move(ingest.series);
}

void cmd_simulate(const RunConfig& cfg) {
  require_valid(cfg.spec);
  const Outputs out(cfg);
  out.claim({"path.csv"});
  const auto path = simulate_path(cfg.spec, cfg.T, RngPolicy{cfg.seed, 0});
  auto os = out.open("path.csv", header(describe(cfg.spec) + " T=" + std::to_string(cfg.T), cfg.seed));
  write_path_csv(path, os);
}

void cmd_moments(const RunConfig& cfg) {
  const auto report = validate(cfg.spec);
  if (!report.valid()) require_valid(cfg.spec);
  const int order = report.capabilities.kurtosis ? 4 : report.capabilities.skewness ? 3 : 2;
  const auto m = moments(cfg.spec, order);
  const Outputs out(cfg);
  out.claim({"moments.csv"});
  auto os = out.open("moments.csv", header(describe(cfg.spec), cfg.seed));
  os << "quantity,value\n"
     << "m2," << fmt_double(m.m2) << '\n'
     << "m3," << fmt_double(m.m3) << '\n'
     << "m4," << fmt_double(m.m4) << '\n'
     << "skewness," << fmt_double(m.skewness) << '\n'
     << "kurtosis," << fmt_double(m.kurtosis) << '\n'
     << "mean_correction," << fmt_double(m.mu) << '\n';
}

void write_profile_rows(std::ostream& os, const LeadLagProfile& p) {
  for (std::size_t i = 0; i < p.rhos.size(); ++i) {
    os << p.lag_at(i) << ',' << fmt_double(p.rhos[i]) << ',' << source_name(p.source) << '\n';
  }
}

void cmd_leadlag(const RunConfig& cfg) {
  require_valid(cfg.spec);
  const auto analytic = leadlag_profile(cfg.spec, cfg.max_lag);
  std::optional<ReturnSeries> series;
  if (!cfg.input_path.empty()) series = load_input(cfg);
  const Outputs out(cfg);
  out.claim({"leadlag.csv"});
  auto os = out.open("leadlag.csv", header(describe(cfg.spec), cfg.seed));
  os << "lag,value,source\n";
  write_profile_rows(os, analytic);
  if (series) {
    write_profile_rows(os, empirical_leadlag(*series, cfg.max_lag));
    const double band = bartlett_band(series->size(), cfg.band_level);
    os << "# bartlett_band=" << fmt_double(band) << '\n';
  }
}

std::vector<std::string> fit_outputs(const RunConfig& cfg) {
  std::vector<std::string> names{"summary.csv", "h_draws.csv", "fit_metadata.txt"};
  for (int c = 0; c < cfg.mcmc.n_chains; ++c) names.push_back("chain_" + std::to_string(c) + ".csv");
  return names;
}

std::string fit_spec(const RunConfig& cfg, const ReturnSeries& s) {
  return std::string(model_name(cfg.spec.model)) + " input=" + cfg.input_path +
         " T=" + std::to_string(s.size());
}

void write_fit(const RunConfig& cfg, const Outputs& out, const PosteriorResult& res,
               const std::string& spec) {
  const std::string h = header(spec, cfg.seed);
  {
    auto os = out.open("summary.csv", h);
    write_summary_csv(res, os);
  }
  for (int c = 0; c < cfg.mcmc.n_chains; ++c) {
    auto os = out.open("chain_" + std::to_string(c) + ".csv", h);
    write_chain_csv(res, c, os);
  }
  {
    auto os = out.open("h_draws.csv", h);
    write_h_draws_csv(res, os);
  }
  {
    auto os = out.open("fit_metadata.txt", h);
    os << "input=" << cfg.input_path << '\n';
    write_fit_metadata(res, os);
  }
}

void cmd_fit(RunConfig cfg) {
  const auto series = load_input(cfg);
  const Outputs out(cfg);
  out.claim(fit_outputs(cfg));
  cfg.mcmc.seed = cfg.seed;
  const auto res = fit(series, cfg.spec.model, cfg.priors, cfg.mcmc);
  write_fit(cfg, out, res, fit_spec(cfg, series));
  if (!res.psrf) std::cerr << "warning: " << res.psrf_note << '\n';
}

void cmd_verify(const RunConfig& cfg) {
  std::vector<ModelSpec> grid = default_verification_grid();
  if (cfg.model_given) {
    std::erase_if(grid, [&](const ModelSpec& s) { return s.model != cfg.spec.model; });
  }
  const Outputs out(cfg);
  out.claim({"verify.csv"});
  const auto report = discrepancy_report(grid, cfg.n, cfg.seed, cfg.mcmc.max_threads);
  auto os = out.open("verify.csv",
                     header(std::string("grid=") +
                                (cfg.model_given ? std::string(model_name(cfg.spec.model)) : "all") +
                                " n=" + std::to_string(cfg.n),
                            cfg.seed));
  write_report_csv(report, os);
  std::cerr << report.flagged_count() << " flagged cell(s) of " << report.entries.size() << '\n';
}

void cmd_report(RunConfig cfg) {
  const auto series = load_input(cfg);
  const Outputs out(cfg);
  auto names = fit_outputs(cfg);
  names.insert(names.end(), {"summary_stats.csv", "leadlag.csv"});
  out.claim(names);
  cfg.mcmc.seed = cfg.seed;
  const std::string spec = fit_spec(cfg, series);
  const std::string h = header(spec, cfg.seed);

  const auto stats = summary_stats(series);
  {
    auto os = out.open("summary_stats.csv", h);
    os << "statistic,value\n"
       << "T," << series.size() << '\n'
       << "removed_mean," << fmt_double(series.removed_mean) << '\n'
       << "sd," << fmt_double(stats.sd) << '\n'
       << "skewness," << fmt_double(stats.skewness) << '\n'
       << "kurtosis," << fmt_double(stats.kurtosis) << '\n';
  }
  const auto empirical = empirical_leadlag(series, cfg.max_lag);
  const auto res = fit(series, cfg.spec.model, cfg.priors, cfg.mcmc);
  write_fit(cfg, out, res, spec);
  const auto posterior = posterior_leadlag(res, series, cfg.max_lag);
  auto os = out.open("leadlag.csv", h);
  os << "lag,value,source\n";
  write_profile_rows(os, empirical);
  write_profile_rows(os, posterior);
  os << "# bartlett_band=" << fmt_double(bartlett_band(series.size(), cfg.band_level)) << '\n';
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::validation: return 3;
    case ErrorCategory::nonexistence: return 4;
    case ErrorCategory::numeric: return 5;
    case ErrorCategory::io: return 6;
    case ErrorCategory::precondition: return 7;
  }
  return 1;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic-volatility simulation, analytics and estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path, model, input, output_dir;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_lag, chains, burn_in, keep, thin;
  std::optional<std::size_t> T, n;
  bool force = false, prior_only = false;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "key=value configuration file");
    sub->add_option("-m,--model", model, "model family, e.g. M3.1");
    sub->add_option("-o,--output-dir", output_dir, "output directory (default $SVKIT_OUTPUT_DIR or .)");
    sub->add_option("-s,--seed", seed, "random seed");
    sub->add_option("--set", sets, "override, e.g. --set model.rho=-0.5");
    sub->add_flag("-f,--force", force, "overwrite existing outputs");
  };
  const auto with_input = [&](CLI::App* sub) {
    sub->add_option("-i,--input", input, "CSV with date and price or return columns");
  };
  const auto with_lag = [&](CLI::App* sub) {
    sub->add_option("--max-lag", max_lag, "largest lead/lag (default 20)");
  };
  const auto with_mcmc = [&](CLI::App* sub) {
    sub->add_option("--chains", chains, "number of chains");
    sub->add_option("--burn-in", burn_in, "burn-in iterations per chain");
    sub->add_option("--keep", keep, "kept draws per chain");
    sub->add_option("--thin", thin, "thinning interval");
    sub->add_flag("--prior-only", prior_only, "sample the prior (likelihood off)");
  };

  auto* sim = app.add_subcommand("simulate", "simulate a return/log-volatility path");
  common(sim);
  sim->add_option("-T,--length", T, "number of periods (default 2000)");
  auto* mom = app.add_subcommand("moments", "closed-form return moments");
  common(mom);
  auto* ll = app.add_subcommand("leadlag", "analytic (and empirical) lead-lag correlations");
  common(ll);
  with_input(ll);
  with_lag(ll);
  auto* fi = app.add_subcommand("fit", "Bayesian estimation by MCMC");
  common(fi);
  with_input(fi);
  with_mcmc(fi);
  auto* ver = app.add_subcommand("verify", "Monte Carlo check of every closed form");
  common(ver);
  ver->add_option("-n,--draws", n, "oracle draws per grid point (default 1e6)");
  auto* rep = app.add_subcommand("report", "statistics, lead-lag and fit for one dataset");
  common(rep);
  with_input(rep);
  with_lag(rep);
  with_mcmc(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: category=config message=" << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    RunConfig cfg;
    cfg.command = app.get_subcommands().front()->get_name();
    if (const char* env = std::getenv("SVKIT_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    else cfg.output_dir = ".";

    Settings settings;
    if (!config_path.empty()) settings = read_config_file(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCategory::config, "--set expects key=value, got '" + s + "'");
      }
      settings[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
    if (!model.empty()) settings["run.model"] = model;
    apply_settings(settings, cfg);

    if (seed) cfg.seed = *seed;
    if (!input.empty()) cfg.input_path = input;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (max_lag) cfg.max_lag = *max_lag;
    if (T) cfg.T = *T;
    if (n) cfg.n = *n;
    if (chains) cfg.mcmc.n_chains = *chains;
    if (burn_in) cfg.mcmc.burn_in = *burn_in;
    if (keep) cfg.mcmc.n_keep = *keep;
    if (thin) cfg.mcmc.thin = *thin;
    if (prior_only) cfg.mcmc.prior_only = true;
    cfg.force = force;
    if (cfg.max_lag < 0) throw Error(ErrorCategory::config, "max_lag must be >= 0");

    if (cfg.command == "simulate") cmd_simulate(cfg);
    else if (cfg.command == "moments") cmd_moments(cfg);
    else if (cfg.command == "leadlag") cmd_leadlag(cfg);
    else if (cfg.command == "fit") cmd_fit(cfg);
    else if (cfg.command == "verify") cmd_verify(cfg);
    else if (cfg.command == "report") cmd_report(cfg);
  } catch (const Error& e) {
    std::cerr << "error: category=" << category_name(e.category())
              << " message=" << one_line(e.what()) << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: category=internal message=" << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
