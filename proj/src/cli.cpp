// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#include "softcrowd/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "softcrowd/casestudy.hpp"
#include "softcrowd/control.hpp"
#include "softcrowd/io.hpp"
#include "softcrowd/server.hpp"
#include "softcrowd/sysid.hpp"

namespace softcrowd::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool ci_mode() {
  const char* v = std::getenv("SOFTCROWD_CI");
  return v && *v && std::string(v) != "0";
}

std::vector<double> read_numbers(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      return json::parse(text).get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw Error(path.string() + ": " + e.what());
    }
  }
  for (char& c : text)
    if (c == ',') c = ' ';
  std::istringstream is(text);
  std::vector<double> v;
  std::string tok;
  std::size_t k = 0;
  while (is >> tok) {
    ++k;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(path.string() + ": value " + std::to_string(k) + " is not a number");
    }
  }
  return v;
}

// Common state of one invocation.
struct Run {
  std::vector<std::string> args;
  std::string command;
  CLI::App* sub = nullptr;
  bool json_out = false;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool randomized = false;
  std::vector<std::string> outputs;

  void resolve_seed() {
    if (!randomized || seed_given) return;
    if (ci_mode()) throw UsageError("--seed is required when SOFTCROWD_CI is set");
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  }

  fs::path out_path(const std::string& name) {
    const fs::path p = fs::path(out_dir) / name;
    outputs.push_back(p.string());
    return p;
  }

  void write_manifest() {
    json params = json::object();
    for (const CLI::App* app = sub; app; app = app->get_parent()) {
      for (const CLI::Option* o : app->get_options()) {
        if (o->count() == 0 || o->get_name().empty() || o->get_name() == "--help") continue;
        std::string key = o->get_name();
        while (!key.empty() && key.front() == '-') key.erase(key.begin());
        const auto& r = o->results();
        params[key] = r.size() == 1 ? json(r.front()) : json(r);
      }
    }
    std::vector<std::string> argv = args;
    if (randomized && !seed_given) {
      argv.push_back("--seed");
      argv.push_back(std::to_string(seed));
    }
    json m{{"command", command},
           {"parameters", params},
           {"argv", argv},
           {"seed", randomized ? json(seed) : json(nullptr)},
           {"outputs", outputs},
           {"toolkit_version", kVersion}};
    const fs::path p = fs::path(out_dir) / "manifest.json";
    write_json_file(p, m);
  }
};

void print_design(Run& run, std::ostream& out, const control::InfluenceDesign& d) {
  write_json_file(run.out_path("design.json"), control::design_to_json(d));
  run.write_manifest();
  if (run.json_out) {
    out << control::design_to_json(d).dump(2) << '\n';
    return;
  }
  char buf[160];
  switch (d.kind) {
    case control::DesignKind::constant:
      std::snprintf(buf, sizeof buf, "beta = %.4f", d.beta);
      break;
    case control::DesignKind::distance_profile:
      std::snprintf(buf, sizeof buf, "c = %.4f", d.c);
      break;
    case control::DesignKind::dynamic:
      std::snprintf(buf, sizeof buf, "schedule: %zu steps, beta(0) = %.4f", d.schedule.size(),
                    d.schedule.empty() ? 0.0 : d.schedule.front());
      break;
  }
  out << buf;
  std::snprintf(buf, sizeof buf, "  delta_mse = %.4f  (%s)", d.delta_mse, d.method.c_str());
  out << buf << '\n';
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  const auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("bad grid '" + spec + "'");
    }
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    if (parts.size() != 3) throw UsageError("grid must be start:stop:step");
    try {
      return control::make_grid(num(parts[0]), num(parts[1]), num(parts[2]));
    } catch (const Error& e) {
      throw UsageError(std::string("bad grid '") + spec + "': " + e.what());
    }
  }
  std::vector<double> v;
  std::stringstream ss(spec);
  std::string p;
  while (std::getline(ss, p, ',')) v.push_back(num(p));
  if (v.empty()) throw UsageError("empty grid");
  return v;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"softcrowd: soft-feedback collective learning toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Run run;
  run.args = args;

  const auto add_common = [&](CLI::App* s, bool randomized) {
    s->add_option("--out", run.out_dir, "Output directory")->capture_default_str();
    s->add_flag("--json", run.json_out, "Machine-readable output on stdout");
    if (randomized) s->add_option("--seed", run.seed, "RNG seed (required when SOFTCROWD_CI is set)");
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate one crowd trajectory");
  std::size_t n = 0, horizon = 0, replicates = 5000;
  std::vector<double> gains;
  double sigma = 0.0, beta = 0.0, profile_c = 0.0, mse0 = 0.0, common = kDefaultCommonShare;
  double state_bound = 500.0;
  std::string schedule_file, init_file, noise = "gaussian";
  sim->add_option("--n", n, "Crowd size")->required()->check(CLI::PositiveNumber);
  sim->add_option("--gain", gains, "Learning gain, or one per agent (comma separated)")
      ->required()
      ->delimiter(',');
  sim->add_option("--sigma", sigma, "Noise standard deviation")->required()->check(CLI::NonNegativeNumber);
  auto* o_beta = sim->add_option("--beta", beta, "Constant influence weight");
  auto* o_c = sim->add_option("--profile-c", profile_c, "Distance-profile decay rate");
  auto* o_sched = sim->add_option("--schedule-file", schedule_file, "Per-step weights file");
  o_beta->excludes(o_c)->excludes(o_sched);
  o_c->excludes(o_sched);
  sim->add_option("--horizon", horizon, "Number of steps T")->required()->check(CLI::PositiveNumber);
  auto* o_mse0 = sim->add_option("--mse0", mse0, "Initial MSE")->check(CLI::NonNegativeNumber);
  auto* o_init = sim->add_option("--init-file", init_file, "Initial errors file");
  o_mse0->excludes(o_init);
  sim->add_option("--common-share", common, "Share of MSE(0) in the common crowd error")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sim->add_option("--noise", noise, "Noise distribution")
      ->capture_default_str()
      ->check(CLI::IsMember({"gaussian", "uniform"}));
  sim->add_option("--state-bound", state_bound, "Clamp on |x|")->capture_default_str()->check(CLI::PositiveNumber);
  add_common(sim, true);

  // optimize
  auto* opt = app.add_subcommand("optimize", "Optimal degree of social influence");
  opt->require_subcommand(1);
  double gain = 0.75, ratio = 0.0;
  std::size_t opt_horizon = 30;
  std::string grid_spec;
  auto* robust = opt->add_subcommand("robust", "Minimize the worst-case cumulative MSE bound");
  auto* dynamic = opt->add_subcommand("dynamic", "Greedy per-step weights on the bound");
  for (auto* s : {robust, dynamic}) {
    s->add_option("--gain", gain, "Learning gain")->capture_default_str();
    s->add_option("--noise-ratio", ratio, "sigma^2 / MSE(0)")->required()->check(CLI::NonNegativeNumber);
    s->add_option("--horizon", opt_horizon, "T")->capture_default_str()->check(CLI::PositiveNumber);
    add_common(s, false);
  }
  auto* mcs = opt->add_subcommand("mc", "Monte Carlo search over constant weights");
  auto* prof = opt->add_subcommand("profile", "Monte Carlo search over distance-profile decay rates");
  double mc_gain = 0.0;
  for (auto* s : {mcs, prof}) {
    s->add_option("--gain", mc_gain, "Learning gain")->required();
    s->add_option("--sigma", sigma, "Noise standard deviation")->required()->check(CLI::NonNegativeNumber);
    s->add_option("--n", n, "Crowd size")->required()->check(CLI::PositiveNumber);
    s->add_option("--horizon", horizon, "T")->required()->check(CLI::PositiveNumber);
    s->add_option("--mse0", mse0, "Initial MSE")->required()->check(CLI::NonNegativeNumber);
    s->add_option("--common-share", common, "Share of MSE(0) in the common crowd error")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    s->add_option("--replicates", replicates, "MC replicates")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--grid", grid_spec,
                  s == mcs ? "Weight grid start:stop:step (default 0:0.99:0.01)"
                           : "Decay-rate grid start:stop:step (default 0.001:0.1:0.001)");
    add_common(s, true);
  }

  // sysid
  auto* sid = app.add_subcommand("sysid", "Identify gain, noise and influence from trajectories");
  std::string open_csv, soft_csv;
  bool fit_profile = false;
  sid->add_option("--open", open_csv, "Open-loop trajectory CSV")->required();
  sid->add_option("--soft", soft_csv, "Soft-feedback trajectory CSV");
  sid->add_flag("--profile", fit_profile, "Also fit the distance profile on --soft");
  sid->add_option("--replicates", replicates, "MC replicates")->capture_default_str()->check(CLI::PositiveNumber);
  add_common(sid, true);

  // phase
  auto* ph = app.add_subcommand("phase", "Robust optimum over a gain x noise-ratio grid");
  std::string gains_spec = "0.05:0.95:0.05", ratios_spec = "0:0.25:0.01";
  ph->add_option("--gains", gains_spec, "Gain grid")->capture_default_str();
  ph->add_option("--ratios", ratios_spec, "Noise-ratio grid")->capture_default_str();
  ph->add_option("--horizon", opt_horizon, "T")->capture_default_str()->check(CLI::PositiveNumber);
  add_common(ph, false);

  // case
  auto* cs = app.add_subcommand("case", "Panel-data case study");
  std::string panel_csv, label;
  std::size_t window = 10;
  double theta_star = 0.0;
  cs->add_option("--csv", panel_csv, "Panel CSV (entity,year,value)")->required();
  cs->add_option("--window", window, "Trailing years for theta*")->capture_default_str()->check(CLI::PositiveNumber);
  auto* o_theta = cs->add_option("--theta-star", theta_star, "Consensus value override");
  cs->add_option("--label", label, "Description column");
  cs->add_option("--replicates", replicates, "MC replicates")->capture_default_str()->check(CLI::PositiveNumber);
  add_common(cs, true);

  // serve
  auto* sv = app.add_subcommand("serve", "Run the game server");
  std::string host = "127.0.0.1";
  int port = 8080;
  game::GameConfig gcfg;
  sv->add_option("--host", host)->capture_default_str();
  sv->add_option("--port", port)->capture_default_str();
  sv->add_option("--bots", gcfg.n_bots, "Simulated agents per session")->capture_default_str();
  sv->add_option("--bot-gain", gcfg.bot_gain)->capture_default_str();
  sv->add_option("--bot-sigma", gcfg.bot_sigma)->capture_default_str();
  sv->add_option("--bot-beta", gcfg.bot_beta)->capture_default_str();
  sv->add_option("--seed", run.seed, "Seed for session ids and default session seeds");

  // replay
  auto* rp = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  std::string manifest_path, replay_out;
  rp->add_option("--manifest", manifest_path)->required();
  rp->add_option("--out", replay_out, "Override the output directory");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto* s : {sim, mcs, prof, sid, cs, sv})
      if (s->parsed()) run.seed_given = s->count("--seed") > 0;

    if (sim->parsed()) {
      run.command = "simulate";
      run.sub = sim;
      run.randomized = true;
      run.resolve_seed();
      if (!o_mse0->count() && !o_init->count()) throw UsageError("one of --mse0 or --init-file is required");
      CrowdConfig c;
      c.n = n;
      c.gains = gains;
      c.noise_sigma = sigma;
      c.state_bound = state_bound;
      c.noise_dist = noise == "uniform" ? NoiseDist::uniform : NoiseDist::gaussian;
      if (o_init->count())
        c.init = ExplicitInit{read_numbers(init_file)};
      else
        c.init = TargetMseInit{mse0, common};
      InfluencePolicy p = policy::Off{};
      if (o_beta->count()) p = policy::Constant{beta};
      if (o_c->count()) p = policy::DistanceProfile{profile_c};
      if (o_sched->count()) p = policy::Schedule{read_numbers(schedule_file)};
      const auto traj = simulate(c, p, horizon, run.seed);
      const auto csv = run.out_path("trajectory.csv");
      write_trajectory_csv(csv, traj);
      write_trajectory_meta(run.out_path(meta_path_for(csv).filename().string()), traj);
      run.write_manifest();
      if (run.json_out) {
        out << json{{"final_mse", traj.mse.back()}, {"cost", traj.cost}, {"seed", run.seed},
                    {"outputs", run.outputs}}
                   .dump(2)
            << '\n';
      } else {
        char buf[128];
        std::snprintf(buf, sizeof buf, "final_mse = %.6g  cost = %.6g  seed = %llu\n", traj.mse.back(), traj.cost,
                      static_cast<unsigned long long>(run.seed));
        out << buf;
      }
      return 0;
    }

    if (robust->parsed() || dynamic->parsed()) {
      run.command = robust->parsed() ? "optimize robust" : "optimize dynamic";
      run.sub = robust->parsed() ? robust : dynamic;
      const control::RobustProblem prob{gain, ratio, opt_horizon};
      try {
        prob.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      print_design(run, out, robust->parsed() ? control::optimize_beta_robust(prob)
                                              : control::robust_dynamic_schedule(prob));
      return 0;
    }

    if (mcs->parsed() || prof->parsed()) {
      const bool is_mc = mcs->parsed();
      run.command = is_mc ? "optimize mc" : "optimize profile";
      run.sub = is_mc ? mcs : prof;
      run.randomized = true;
      run.resolve_seed();
      CrowdConfig c;
      c.n = n;
      c.gains = {mc_gain};
      c.noise_sigma = sigma;
      c.init = TargetMseInit{mse0, common};
      const control::McOptions mo{replicates, run.seed};
      const auto grid = parse_grid(grid_spec.empty() ? (is_mc ? "0:0.99:0.01" : "0.001:0.1:0.001") : grid_spec);
      print_design(run, out, is_mc ? control::optimize_beta_mc(c, horizon, grid, mo)
                                   : control::optimize_profile_mc(c, horizon, grid, mo));
      return 0;
    }

    if (sid->parsed()) {
      run.command = "sysid";
      run.sub = sid;
      run.randomized = true;
      run.resolve_seed();
      if (fit_profile && soft_csv.empty()) throw UsageError("--profile needs --soft");
      const sysid::McFitOptions fo{replicates, run.seed};
      const auto open = read_trajectory_csv(fs::path(open_csv));
      auto result = sysid::refine_mc(open, sysid::estimate_open_loop(open), fo);
      if (!soft_csv.empty()) {
        const auto soft = read_trajectory_csv(fs::path(soft_csv));
        const auto b = sysid::estimate_beta(soft, result, fo);
        if (fit_profile) result.c_hat = sysid::estimate_beta_profile(soft, result).c_hat;
        result.beta_hat = b.beta_hat;
        result.r2 = b.r2;
        result.objective = b.objective;
      }
      const json j = sysid::result_to_json(result);
      write_json_file(run.out_path("sysid.json"), j);
      run.write_manifest();
      if (run.json_out) {
        out << j.dump(2) << '\n';
      } else {
        char buf[200];
        std::snprintf(buf, sizeof buf, "gain_hat = %.4f  sigma_hat = %.4f", result.gain_hat, result.sigma_hat);
        out << buf;
        if (result.beta_hat) {
          std::snprintf(buf, sizeof buf, "  beta_hat = %.4f", *result.beta_hat);
          out << buf;
        }
        if (result.c_hat) {
          std::snprintf(buf, sizeof buf, "  c_hat = %.5f", *result.c_hat);
          out << buf;
        }
        std::snprintf(buf, sizeof buf, "  r2 = %.4f\n", result.r2);
        out << buf;
      }
      return 0;
    }

    if (ph->parsed()) {
      run.command = "phase";
      run.sub = ph;
      const auto pd = control::phase_diagram(parse_grid(gains_spec), parse_grid(ratios_spec), opt_horizon);
      {
        std::ofstream f;
        const auto p = run.out_path("phase.csv");
        fs::create_directories(p.parent_path());
        f.open(p);
        if (!f) throw Error("cannot write: " + p.string());
        control::write_phase_csv(f, pd);
      }
      run.write_manifest();
      if (run.json_out)
        out << json{{"gains", pd.gains}, {"ratios", pd.ratios}, {"horizon", pd.horizon}, {"beta", pd.beta}}.dump()
            << '\n';
      else
        control::write_phase_csv(out, pd);
      return 0;
    }

    if (cs->parsed()) {
      run.command = "case";
      run.sub = cs;
      run.randomized = true;
      run.resolve_seed();
      auto panel = casestudy::load_panel_csv(fs::path(panel_csv));
      if (!label.empty()) panel.label = label;
      casestudy::AnalyzeOptions ao;
      ao.window = window;
      if (o_theta->count()) ao.theta_star = theta_star;
      ao.replicates = replicates;
      ao.seed = run.seed;
      const auto r = casestudy::analyze(panel, ao);
      write_json_file(run.out_path("report.json"), casestudy::report_to_json(r));
      {
        std::ofstream f(run.out_path("report.csv"));
        if (!f) throw Error("cannot write report.csv");
        casestudy::write_report_csv_header(f);
        casestudy::write_report_csv_row(f, r);
      }
      run.write_manifest();
      if (run.json_out) {
        out << casestudy::report_to_json(r).dump(2) << '\n';
      } else {
        casestudy::write_report_csv_header(out);
        casestudy::write_report_csv_row(out, r);
      }
      return 0;
    }

    if (sv->parsed()) {
      run.seed_given = sv->count("--seed") > 0;
      run.randomized = true;
      run.resolve_seed();
      gcfg.validate();
      game::SessionManager manager(
          [] {
            using namespace std::chrono;
            return duration<double>(steady_clock::now().time_since_epoch()).count();
          },
          run.seed);
      err << "serving on http://" << host << ":" << port << '\n';
      game::serve(manager, gcfg, host, port);
      return 0;
    }

    if (rp->parsed()) {
      const json m = read_json_file(manifest_path);
      auto argv = m.at("argv").get<std::vector<std::string>>();
      if (!replay_out.empty()) {
        bool replaced = false;
        for (std::size_t k = 0; k + 1 < argv.size(); ++k)
          if (argv[k] == "--out") argv[k + 1] = replay_out, replaced = true;
        if (!replaced) argv.insert(argv.end(), {"--out", replay_out});
      }
      return cli::run(argv, out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace softcrowd::cli
