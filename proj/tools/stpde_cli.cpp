// stpde command-line front end: thin wrapper over the C API. Builds a flat
// "key = value" configuration from --config / --set / convenience flags,
// runs one named study, and writes <out>/<command>.json and .csv.
//
// Exit codes: 0 pass/inconclusive/oracle-limited, 1 failure, 2 usage error.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "stpde.h"

namespace {

struct Options {
  std::string config_file;
  std::vector<std::string> sets;
  std::string out_dir;
  bool quiet = false;
};

const std::map<std::string, std::string> kDescriptions = {
    {"calculus-check",
     "verify the exact discrete-calculus identities on randomized fields"},
    {"kernel-validate",
     "compare the closed-form lattice heat kernel with the series oracle and "
     "fit norm-decay exponents"},
    {"parametrix-validate",
     "validate the variable-coefficient propagator: fixed-point residual, "
     "ODE-residual order, constant-coefficient degeneration, propagation"},
    {"dual-solve",
     "solve the backward dual reaction-diffusion problem over a mesh ladder "
     "and cross-check ODE vs Duhamel solvers"},
    {"simulate",
     "integrate Monte Carlo paths of the stochastic transport scheme "
     "(requires dx)"},
    {"stability-study",
     "L2 energy-stability ladder over mesh refinement with Monte Carlo error "
     "bars"},
    {"convergence-study",
     "weak pairing error against a mean-field oracle over a refinement "
     "ladder"},
    {"consistency-suite",
     "measure discretization distances between projected operators and their "
     "analytic targets"},
};

bool write_file(const std::string& path, const char* text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << text;
  return static_cast<bool>(out);
}

int run_one(const std::string& command, const Options& opt) {
  std::string cfg;
  if (!opt.config_file.empty()) {
    std::ifstream in(opt.config_file);
    if (!in) {
      std::fprintf(stderr, "stpde %s: cannot read config file '%s'\n",
                   command.c_str(), opt.config_file.c_str());
      return 2;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = ss.str() + "\n";
  }
  for (const std::string& kv : opt.sets) {
    if (kv.find('=') == std::string::npos) {
      std::fprintf(stderr, "stpde %s: --set expects KEY=VALUE, got '%s'\n",
                   command.c_str(), kv.c_str());
      return 2;
    }
    cfg += kv + "\n";
  }

  stpde_report* report = nullptr;
  const int code = stpde_run(command.c_str(), cfg.c_str(), &report);
  if (report == nullptr) {
    std::fprintf(stderr, "stpde %s: %s\n", command.c_str(),
                 stpde_last_error());
    return code == 0 ? 1 : code;
  }

  std::string dir = opt.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("STPDE_OUT_DIR");
    dir = (env != nullptr && env[0] != '\0') ? env : ".";
  }
  int final_code = code;
  std::error_code fs_err;
  std::filesystem::create_directories(dir, fs_err);
  const std::string json_path = dir + "/" + command + ".json";
  if (!write_file(json_path, stpde_report_json(report))) {
    std::fprintf(stderr, "stpde %s: cannot write '%s'\n", command.c_str(),
                 json_path.c_str());
    final_code = final_code == 0 ? 1 : final_code;
  }
  const char* csv = stpde_report_csv(report);
  std::string csv_note;
  if (csv[0] != '\0') {
    const std::string csv_path = dir + "/" + command + ".csv";
    if (!write_file(csv_path, csv)) {
      std::fprintf(stderr, "stpde %s: cannot write '%s'\n", command.c_str(),
                   csv_path.c_str());
      final_code = final_code == 0 ? 1 : final_code;
    } else {
      csv_note = " " + csv_path;
    }
  }

  if (!opt.quiet) {
    std::printf("[%s] %s: %s\n", stpde_report_status(report), command.c_str(),
                stpde_report_message(report));
    std::printf("wrote %s%s\n", json_path.c_str(), csv_note.c_str());
  }
  stpde_report_free(report);
  return final_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "stpde: studies of an explicit upwind Euler-Maruyama scheme for "
      "transport noise, with exact-kernel and dual-problem validators"};
  app.set_version_flag("--version", stpde_version());
  app.require_subcommand(1);

  // One shared option block per subcommand, stored per command name.
  std::map<std::string, Options> opts;
  std::istringstream names(stpde_commands());
  std::string name;
  while (names >> name) {
    const auto desc = kDescriptions.find(name);
    CLI::App* sub = app.add_subcommand(
        name, desc == kDescriptions.end() ? std::string{} : desc->second);
    Options& o = opts[name];
    sub->add_option("-c,--config", o.config_file,
                    "configuration file of key = value lines");
    sub->add_option("-s,--set", o.sets,
                    "override one configuration entry (KEY=VALUE, repeatable)");
    sub->add_option("-o,--out", o.out_dir,
                    "output directory (default: $STPDE_OUT_DIR or '.')");
    sub->add_flag("-q,--quiet", o.quiet, "suppress the summary line");
    // Convenience spellings for the most common keys.
    for (const char* key :
         {"dx", "dt", "T", "seed", "paths", "threads", "fixture", "dim",
          "half_width", "boundary", "dx_ladder", "tol"}) {
      sub->add_option_function<std::string>(
          std::string("--") + key,
          [&o, key](const std::string& v) {
            o.sets.push_back(std::string(key) + "=" + v);
          },
          "sets the '" + std::string(key) + "' configuration key");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (const auto& [cmd, o] : opts)
    if (app.got_subcommand(cmd)) return run_one(cmd, o);
  return 2;
}
