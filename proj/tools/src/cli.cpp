#include "divkernel_cli/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "divkernel/config.hpp"
#include "divkernel/errors.hpp"
#include "divkernel/export.hpp"

namespace divkernel::cli {

namespace fs = std::filesystem;
using config::ConfigError;
using config::ConfigFile;
using estimation::Method;

namespace {

enum class Level { Error = 0, Info = 1, Debug = 2 };

class Log {
 public:
  Log(std::ostream& err, std::string command) : err_(err), command_(std::move(command)) {
    const char* env = std::getenv("DIVKERNEL_LOG");
    const std::string v = env ? env : "error";
    if (v == "debug") {
      level_ = Level::Debug;
    } else if (v == "info") {
      level_ = Level::Info;
    }
  }

  void info(const std::string& msg) const { emit(Level::Info, "info", msg); }
  void debug(const std::string& msg) const { emit(Level::Debug, "debug", msg); }

 private:
  void emit(Level lvl, const char* name, const std::string& msg) const {
    if (lvl <= level_) err_ << "level=" << name << " cmd=" << command_ << " msg=\"" << msg << "\"\n";
  }
  std::ostream& err_;
  std::string command_;
  Level level_ = Level::Error;
};

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n' || c == '\r') {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out + '"';
}

struct Failure {
  int code;
  std::string kind;
  std::string message;
};

struct Options {
  std::string command;
  std::optional<std::string> config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> methods;
  bool genealogy = false;
  std::optional<std::string> horizons;
  // ntcheck
  std::optional<std::uint32_t> n0;
  std::optional<double> rate;
  std::optional<std::uint32_t> replicates;
};

struct Outcome {
  std::size_t rows = 0;
  std::vector<std::string> files;
};

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  template <class Writer>
  void write(const std::string& name, Writer&& writer) {
    const std::size_t rows = io::write_file(dir_ / name, std::forward<Writer>(writer));
    outcome.rows += rows;
    outcome.files.push_back(name);
  }

  Outcome outcome;

 private:
  fs::path dir_;
};

ConfigFile load_config(const Options& opt) {
  ConfigFile cfg = opt.config_path ? ConfigFile::load(*opt.config_path) : ConfigFile::parse("", "<defaults>");
  if (opt.seed) cfg.set("seed", std::to_string(*opt.seed));
  if (opt.threads) cfg.set("threads", std::to_string(*opt.threads));
  if (opt.genealogy) cfg.set("genealogy", "true");
  return cfg;
}

void apply_methods(ConfigFile& cfg, const Options& opt, const char* key) {
  if (opt.methods) cfg.set(key, *opt.methods);
}

void apply_horizons(ConfigFile& cfg, const Options& opt, const char* key) {
  if (opt.horizons) cfg.set(key, *opt.horizons);
}

Outcome run_simulate(const Options& opt, Outputs& outs, const Log& log) {
  ConfigFile cfg = load_config(opt);
  apply_horizons(cfg, opt, "horizon");
  const auto sc = config::sim_config_from(cfg);
  log.info("simulating to T=" + io::format_double(sc.horizon));
  const auto traj = sim::simulate(sc);
  log.info("divisions=" + std::to_string(traj.m_t()) + " alive=" + std::to_string(traj.n_final()));
  outs.write("trajectory.csv", [&](std::ostream& o) { return io::write_trajectory_csv(o, traj); });
  outs.write("population.csv", [&](std::ostream& o) { return io::write_population_csv(o, traj); });
  if (!sc.snapshot_times.empty())
    outs.write("snapshots.csv", [&](std::ostream& o) { return io::write_snapshot_csv(o, traj); });
  return outs.outcome;
}

Outcome run_estimate(const Options& opt, Outputs& outs, const Log& log) {
  ConfigFile cfg = load_config(opt);
  apply_methods(cfg, opt, "method");
  const auto ec = config::estimate_config_from(cfg);
  const estimation::Sample sample(config::read_sample(ec.sample));
  const KernelSpec kernel = gaussian_kernel();
  const auto H = BandwidthGrid::for_sample(sample.m_t(), ec.delta, ec.cap, ec.dmax_floor);
  log.info("m_t=" + std::to_string(sample.m_t()) + " method=" + std::string(estimation::to_string(ec.method)));
  estimation::DensityEstimate est;
  switch (ec.method) {
    case Method::GL:
      est = estimation::gl_select(sample, kernel, H, ec.epsilon, ec.grid);
      break;
    case Method::CV:
      est = estimation::cv_select(sample, kernel, H, ec.grid);
      break;
    case Method::RoT:
      est = estimation::rot_select(sample, kernel, ec.grid);
      break;
    case Method::Oracle:
      est = estimation::oracle_select(sample, kernel, H, ec.grid, estimation::tabulate(*ec.truth, ec.grid));
      break;
    case Method::ML: {
      const auto fit = estimation::beta_mle(sample);
      static_cast<GridFunction&>(est) = estimation::tabulate(DivisionKernelModel::beta(fit.a), ec.grid);
      est.method = Method::ML;
      est.m_t = sample.m_t();
      est.selector_mode = "beta-mle a=" + io::format_double(fit.a);
      break;
    }
    case Method::Fixed:
      est = estimation::kde(sample, kernel, ec.bandwidth, ec.grid);
      break;
  }
  outs.write("estimate.csv", [&](std::ostream& o) { return io::write_estimate_csv(o, est); });
  outs.write("estimate.json", [&](std::ostream& o) {
    io::write_estimate_json(o, est);
    return std::size_t{0};
  });
  return outs.outcome;
}

experiments::ExperimentConfig experiment_from(const Options& opt) {
  ConfigFile cfg = load_config(opt);
  apply_methods(cfg, opt, "methods");
  apply_horizons(cfg, opt, "horizons");
  return config::experiment_config_from(cfg);
}

void write_report(Outputs& outs, const experiments::McReport& report) {
  outs.write("table.csv", [&](std::ostream& o) { return io::write_table_csv(o, report); });
  outs.write("replicates.csv", [&](std::ostream& o) { return io::write_replicates_csv(o, report); });
}

void log_report(const Log& log, const experiments::McReport& report) {
  for (const auto& s : report.summary)
    log.info("T=" + io::format_double(s.horizon) + " method=" + std::string(estimation::to_string(s.method)) +
             " e_bar=" + io::format_double(s.mean_error));
  if (report.redraws > 0) log.info("redrawn replicates=" + std::to_string(report.redraws));
}

Outcome run_mise(const Options& opt, Outputs& outs, const Log& log, bool symmetrized) {
  const auto ec = experiment_from(opt);
  log.info("replicates=" + std::to_string(ec.replicates) + " horizons=" + std::to_string(ec.horizons.size()));
  const auto report =
      symmetrized ? experiments::run_symmetrized_experiment(ec) : experiments::run_mise_experiment(ec);
  log_report(log, report);
  write_report(outs, report);
  return outs.outcome;
}

Outcome run_calibrate(const Options& opt, Outputs& outs, const Log& log) {
  ConfigFile cfg = load_config(opt);
  apply_horizons(cfg, opt, "horizons");
  const auto ec = config::experiment_config_from(cfg);
  const auto eps = config::epsilons_from(cfg);
  log.info("epsilons=" + std::to_string(eps.size()) + " T=" + io::format_double(ec.horizons.front()));
  const auto report = experiments::calibrate_epsilon(ec, eps);
  log.info("oracle bandwidth=" + io::format_double(report.oracle_bandwidth));
  outs.write("epsilon.csv", [&](std::ostream& o) { return io::write_epsilon_csv(o, report); });
  return outs.outcome;
}

Outcome run_rate(const Options& opt, Outputs& outs, const Log& log) {
  ConfigFile cfg = load_config(opt);
  apply_methods(cfg, opt, "methods");
  apply_horizons(cfg, opt, "horizons");
  const auto ec = config::experiment_config_from(cfg);
  const double smoothness = cfg.get_double("smoothness", 1.0);
  if (!(smoothness > 0.0)) throw ConfigError("config:" + cfg.source() + ": smoothness must be positive");
  if (ec.horizons.size() < 2) throw ConfigError("config:" + cfg.source() + ": rate needs at least two horizons");
  const auto result = experiments::fit_rate(ec, smoothness);
  log_report(log, result.report);
  for (const auto& f : result.fits)
    log.info("method=" + std::string(estimation::to_string(f.method)) + " slope=" + io::format_double(f.slope));
  outs.write("rate.csv", [&](std::ostream& o) { return io::write_rate_csv(o, result); });
  write_report(outs, result.report);
  return outs.outcome;
}

Outcome run_meanage(const Options& opt, Outputs& outs, const Log& log) {
  ConfigFile cfg = load_config(opt);
  if (opt.horizons) cfg.set("time_end", *opt.horizons);
  const auto mc = config::mean_age_config_from(cfg);
  log.info("trees=" + std::to_string(mc.n_trees) + " kernels=" + std::to_string(mc.beta_params.size()));
  const auto report = experiments::run_mean_age_experiment(mc);
  outs.write("meanage.csv", [&](std::ostream& o) { return io::write_meanage_csv(o, report); });
  outs.write("spread.csv", [&](std::ostream& o) { return io::write_spread_csv(o, report); });
  return outs.outcome;
}

Outcome run_ntcheck(const Options& opt, Outputs& outs, const Log& log) {
  ConfigFile cfg = load_config(opt);
  experiments::NtCheckConfig nc;
  nc.n0 = static_cast<std::uint32_t>(cfg.get_uint("n0", nc.n0));
  nc.division_rate = cfg.get_double("division_rate", nc.division_rate);
  nc.horizon = cfg.get_double("horizon", nc.horizon);
  nc.replicates = static_cast<std::uint32_t>(cfg.get_uint("replicates", nc.replicates));
  nc.master_seed = cfg.get_uint("seed", nc.master_seed);
  nc.threads = static_cast<unsigned>(cfg.get_uint("threads", 0));
  if (opt.n0) nc.n0 = *opt.n0;
  if (opt.rate) nc.division_rate = *opt.rate;
  if (opt.horizons) {
    cfg.set("horizon", *opt.horizons);
    nc.horizon = cfg.get_double("horizon", nc.horizon);
  }
  if (opt.replicates) nc.replicates = *opt.replicates;
  try {
    nc.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("ntcheck: ") + e.what());
  }
  const auto rep = experiments::run_nt_check(nc);
  log.info("z_mean=" + io::format_double(rep.z_mean) + " z_inv=" + io::format_double(rep.z_inv) +
           " p=" + io::format_double(rep.p_value));
  outs.write("ntcheck.csv", [&](std::ostream& o) { return io::write_ntcheck_csv(o, rep); });
  outs.write("ntbins.csv", [&](std::ostream& o) { return io::write_ntbins_csv(o, rep); });
  return outs.outcome;
}

const std::map<std::string, std::string, std::less<>> kCommands{
    {"simulate", "Simulate one trajectory of the branching process"},
    {"estimate", "Estimate a division kernel density from a sample file"},
    {"mise", "Monte Carlo relative L2 errors per method and horizon"},
    {"symmetrized", "Same as mise, errors measured after symmetrization"},
    {"calibrate", "Sweep the GL constant epsilon on shared samples"},
    {"rate", "Fit the log-linear error rate across horizons"},
    {"meanage", "Mean-age trajectories and quartile spreads across Beta kernels"},
    {"ntcheck", "Compare simulated N_T with its exact law"},
};

std::string usage() {
  std::ostringstream s;
  s << "usage: divkernel <command> [--config FILE] [--out DIR] [--seed N] [--threads N]\n"
       "                 [--methods LIST] [--genealogy] [--T LIST]\ncommands:\n";
  for (const auto& [name, help] : kCommands) s << "  " << name << "  " << help << '\n';
  return s.str();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto fail = [&](const Failure& f) {
    err << "error code=" << f.code << " kind=" << f.kind << " message=" << quote(f.message) << '\n';
    return f.code;
  };
  if (args.empty()) return fail({kUnknownCommand, "usage", "missing command"});
  if (args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    out << usage();
    return kOk;
  }
  const auto cmd = kCommands.find(args[0]);
  if (cmd == kCommands.end()) return fail({kUnknownCommand, "unknown_command", "unknown command '" + args[0] + "'"});

  Options opt;
  opt.command = args[0];
  CLI::App app(cmd->second, "divkernel " + opt.command);
  app.add_option("--config", opt.config_path, "Configuration file (key = value)");
  app.add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", opt.seed, "Master seed override");
  app.add_option("--threads", opt.threads, "Worker threads (0 = hardware concurrency)");
  app.add_option("--methods", opt.methods, "Comma-separated methods: GL,Oracle,CV,RoT,ML,Fixed");
  app.add_flag("--genealogy", opt.genealogy, "Track Ulam-Harris labels");
  app.add_option("--T", opt.horizons, "Horizon override (comma-separated list for experiments)");
  if (opt.command == "ntcheck") {
    app.add_option("--n0", opt.n0, "Number of founders");
    app.add_option("--R", opt.rate, "Division rate");
    app.add_option("--replicates", opt.replicates, "Monte Carlo replicates");
  }
  std::vector<std::string> rest(args.begin() + 1, args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    return fail({kInvalidInput, "usage", e.what()});
  }

  const Log log(err, opt.command);
  const auto start = std::chrono::steady_clock::now();
  try {
    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + opt.out_dir + "': " + ec.message());
    Outputs outs{fs::path(opt.out_dir)};
    Outcome result;
    if (opt.command == "simulate") {
      result = run_simulate(opt, outs, log);
    } else if (opt.command == "estimate") {
      result = run_estimate(opt, outs, log);
    } else if (opt.command == "mise") {
      result = run_mise(opt, outs, log, false);
    } else if (opt.command == "symmetrized") {
      result = run_mise(opt, outs, log, true);
    } else if (opt.command == "calibrate") {
      result = run_calibrate(opt, outs, log);
    } else if (opt.command == "rate") {
      result = run_rate(opt, outs, log);
    } else if (opt.command == "meanage") {
      result = run_meanage(opt, outs, log);
    } else {
      result = run_ntcheck(opt, outs, log);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char wall_text[32];
    std::snprintf(wall_text, sizeof wall_text, "%.3f", wall);
    out << opt.command << ": rows=" << result.rows << " files=";
    for (std::size_t i = 0; i < result.files.size(); ++i) out << (i ? "," : "") << result.files[i];
    out << " out=" << opt.out_dir << " wall=" << wall_text << "s\n";
    return kOk;
  } catch (const ConfigError& e) {
    return fail({kInvalidInput, "config", e.what()});
  } catch (const InvalidArgument& e) {
    return fail({kInvalidInput, "invalid_input", e.what()});
  } catch (const ConvergenceError& e) {
    return fail({kRuntimeFailure, "convergence", e.what()});
  } catch (const std::exception& e) {
    return fail({kRuntimeFailure, "runtime", e.what()});
  }
}

}  // namespace divkernel::cli
