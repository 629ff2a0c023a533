#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "divkernel_cli/cli.hpp"

namespace cli_fixtures {

namespace fs = std::filesystem;

struct Invocation {
  std::vector<std::string> args;  // without --out
};

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline RunResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  RunResult r;
  r.code = divkernel::cli::dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

inline std::string read_bytes(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Small configurations for every command, written into `dir`.
inline std::vector<Invocation> small_invocations(const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "sim.cfg", "horizon = 8\nsnapshot_step = 2\ngenealogy = true\n");
  write_text(dir / "sample.txt", "0.31\n0.52\n0.47\n0.66\n0.12\n0.58\n0.44\n0.71\n0.39\n0.5\n");
  write_text(dir / "est.cfg", "sample = sample.txt\nmethod = GL\ngrid_points = 401\n");
  write_text(dir / "mc.cfg",
             "horizons = 7\nreplicates = 4\nmethods = GL, Oracle, CV, RoT, ML\ngrid_points = 801\n");
  write_text(dir / "cal.cfg", "horizons = 7\nreplicates = 4\nepsilons = -0.68, 0\ngrid_points = 801\n");
  write_text(dir / "rate.cfg", "horizons = 6, 8\nreplicates = 3\nmethods = GL, RoT\ngrid_points = 801\n");
  write_text(dir / "age.cfg",
             "n_trees = 4\nbeta_params = 0.5, 2\ntime_start = 1\ntime_step = 1\ntime_end = 6\n");
  const std::string d = dir.string();
  return {
      {{"simulate", "--config", d + "/sim.cfg", "--seed", "5"}},
      {{"estimate", "--config", d + "/est.cfg"}},
      {{"mise", "--config", d + "/mc.cfg", "--seed", "9", "--threads", "2"}},
      {{"symmetrized", "--config", d + "/mc.cfg", "--seed", "9", "--methods", "GL"}},
      {{"calibrate", "--config", d + "/cal.cfg", "--seed", "9"}},
      {{"rate", "--config", d + "/rate.cfg", "--seed", "9"}},
      {{"meanage", "--config", d + "/age.cfg", "--seed", "9"}},
      {{"ntcheck", "--n0", "2", "--R", "1", "--T", "1", "--replicates", "500", "--seed", "9"}},
  };
}

/// Runs `inv` twice into separate directories and reports whether every
/// output file is byte-identical. `detail` names the first difference.
inline bool deterministic(const Invocation& inv, const fs::path& scratch, std::string& detail) {
  std::vector<fs::path> dirs{scratch / "run_a", scratch / "run_b"};
  for (const auto& dir : dirs) {
    fs::remove_all(dir);
    auto args = inv.args;
    args.push_back("--out");
    args.push_back(dir.string());
    const auto r = run(args);
    if (r.code != 0) {
      detail = inv.args[0] + " exited " + std::to_string(r.code) + ": " + r.err;
      return false;
    }
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    ++files;
    const auto other = dirs[1] / entry.path().filename();
    if (!fs::exists(other) || read_bytes(entry.path()) != read_bytes(other)) {
      detail = inv.args[0] + ": " + entry.path().filename().string() + " differs";
      return false;
    }
  }
  if (files == 0) {
    detail = inv.args[0] + ": no output files";
    return false;
  }
  return true;
}

}  // namespace cli_fixtures
