// Command-line front end: single missions, seeded sweeps, offline fits and
// depth-filter replay.
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "intercept/config.hpp"
#include "intercept/experiment.hpp"
#include "intercept/lemniscate.hpp"
#include "intercept/replay.hpp"
#include "intercept/sim/mission.hpp"

namespace fs = std::filesystem;
using intercept::config::Json;
using namespace intercept;

namespace {

struct Options {
  std::vector<std::string> configs;
  std::vector<std::string> overrides;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::string out;
  bool trace = false;
  bool print_config = false;
  std::string input;  // positional file of sweep / fit / depth-replay
};

/// Fatal problems with the data being processed rather than with the config.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json resolved_tree(const Options& o) {
  std::vector<Json> layers;
  for (const auto& path : o.configs) layers.push_back(config::read_file(path));
  return config::resolve(layers, o.overrides);
}

fs::path out_dir(const Options& o) {
  fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

Json point_json(const Point3& p) { return Json::array({p.x(), p.y(), p.z()}); }

Json nullable(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json intercept_json(const InterceptPose& ip) {
  return {{"position", point_json(ip.position_G)},
          {"yaw", ip.yaw_G},
          {"direction", std::string(to_string(ip.direction))},
          {"t_i", ip.t_i},
          {"t_t", ip.t_t}};
}

Json estimate_json(const LemniscateEstimate& est) {
  Json rot = Json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back({est.pose.rotation()(r, 0), est.pose.rotation()(r, 1), est.pose.rotation()(r, 2)});
  }
  return {{"a", est.a},
          {"shift_x", est.shift_x},
          {"center", point_json(est.pose.translation())},
          {"rotation", rot}};
}

Json result_json(const sim::MissionResult& r, std::uint64_t seed) {
  Json modes = Json::array();
  for (const auto& m : r.mode_log) {
    modes.push_back({{"t", m.timestamp},
                     {"from", std::string(to_string(m.from))},
                     {"to", std::string(to_string(m.to))},
                     {"trigger", std::string(to_string(m.trigger))}});
  }
  Json history = Json::array();
  for (const auto& h : r.history) history.push_back({h.point_count, h.d_h});
  return {{"seed", seed},
          {"success", r.success},
          {"converged", r.converged},
          {"arrived", r.arrived},
          {"loops_used", r.loops_used},
          {"intercept_error_m", nullable(r.intercept_error)},
          {"focal_error_m", nullable(r.focal_error)},
          {"estimated_a", nullable(r.estimated_a)},
          {"true_a", r.target.a},
          {"true_direction", std::string(to_string(r.target.direction))},
          {"final_dH_m", nullable(r.final_dh)},
          {"final_ratio", nullable(r.final_ratio)},
          {"n_observations", r.n_observations},
          {"mission_duration_s", r.duration},
          {"follow_interruptions", r.follow_interruptions},
          {"intercept", r.intercept ? intercept_json(*r.intercept) : Json(nullptr)},
          {"mode_log", modes},
          {"dH_history", history}};
}

int cmd_simulate(const Options& o) {
  const Json tree = resolved_tree(o);
  if (o.print_config) {
    std::cout << tree.dump(2) << '\n';
    return 0;
  }
  const auto cfg = config::from_json(tree);

  std::ofstream trace_file;
  sim::TraceSink sink;
  if (o.trace) {
    trace_file = open_out(out_dir(o) / "trace.jsonl");
    sink = [&trace_file](const sim::TraceRecord& rec) {
      const Json j = {{"t", rec.t},
                      {"mode", std::string(to_string(rec.mode))},
                      {"follower", {rec.follower.position.x(), rec.follower.position.y(),
                                    rec.follower.position.z(), rec.follower.yaw}},
                      {"target", point_json(rec.target)},
                      {"estimate", rec.estimate ? point_json(*rec.estimate) : Json(nullptr)}};
      trace_file << j.dump() << '\n';
    };
  }

  const auto result = sim::run_mission(cfg, o.seed, sink);
  const Json summary = result_json(result, o.seed);
  std::cout << summary.dump(2) << '\n';

  if (!o.out.empty()) {
    const auto dir = out_dir(o);
    open_out(dir / "result.json") << summary.dump(2) << '\n';
    auto obs = open_out(dir / "observations.txt");
    obs << "# t x y z  (estimator buffer, global frame)\n";
    for (const auto& p : result.observations) {
      obs << experiment::format_number(p.t) << ' ' << experiment::format_number(p.p.x()) << ' '
          << experiment::format_number(p.p.y()) << ' ' << experiment::format_number(p.p.z()) << '\n';
    }
  }
  return 0;
}

int cmd_sweep(const Options& o) {
  std::vector<Json> layers;
  for (const auto& path : o.configs) layers.push_back(config::read_file(path));
  const auto spec = experiment::parse_spec(config::read_file(o.input), layers, o.overrides);
  if (o.print_config) {
    const Json j = {{"base", spec.base},
                    {"variable", spec.variable},
                    {"values", spec.values},
                    {"trials", spec.trials},
                    {"seed_base", spec.seed_base}};
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  experiment::sweep_configs(spec);  // reject bad values before any mission runs
  const auto result = experiment::run_sweep(spec, o.jobs);

  const auto dir = out_dir(o);
  {
    auto f = open_out(dir / "trials.csv");
    experiment::write_trials_csv(f, result.trials);
  }
  {
    auto f = open_out(dir / "summary.csv");
    experiment::write_summary_csv(f, result.summary);
  }
  experiment::write_summary_csv(std::cout, result.summary);
  return 0;
}

std::vector<TimedPoint> read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<TimedPoint> pts;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    TimedPoint p;
    if (!(ss >> p.t)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw InputError(path + ":" + std::to_string(n) + ": expected 't x y z'");
    }
    std::string extra;
    if (!(ss >> p.p.x() >> p.p.y() >> p.p.z()) || (ss >> extra)) {
      throw InputError(path + ":" + std::to_string(n) + ": expected 't x y z'");
    }
    pts.push_back(p);
  }
  return pts;
}

int cmd_fit(const Options& o) {
  const Json tree = resolved_tree(o);
  if (o.print_config) {
    std::cout << tree.at("pipeline").dump(2) << '\n';
    return 0;
  }
  const auto pc = config::from_json(tree).pipeline;
  ObservationSet obs;
  try {
    obs = ObservationSet(read_points(o.input));
  } catch (const InvalidInput& e) {
    throw InputError(o.input + ": " + e.what());
  }

  const auto fit = sim::fit_points(obs.positions(), pc);
  if (!fit) throw InputError("points are degenerate (fewer than 4, or collinear)");
  Json out = {{"n_points", obs.size()},
              {"estimate", estimate_json(fit->est)},
              {"dH_m", fit->report.d_h},
              {"ratio", fit->report.ratio},
              {"threshold", pc.threshold},
              {"converged", fit->report.converged},
              {"intercept", nullptr}};
  if (fit->report.converged) {
    if (auto ip = sim::plan_intercept(fit->est, obs.positions(), pc.direction)) {
      out["intercept"] = intercept_json(*ip);
    } else {
      out["intercept"] = "direction undecided";
    }
  }
  std::cout << out.dump(2) << '\n';
  if (!o.out.empty()) open_out(out_dir(o) / "fit.json") << out.dump(2) << '\n';
  return 0;
}

int cmd_depth_replay(const Options& o) {
  const Json tree = resolved_tree(o);
  const auto cfg = config::from_json(tree);
  if (o.print_config) {
    std::cout << tree.at("pipeline").at("tracker").at("depth").dump(2) << '\n';
    return 0;
  }
  std::ifstream in(o.input);
  if (!in) throw InputError("cannot open " + o.input);
  const auto report = replay::replay_patches(in, cfg.pipeline.tracker.depth);

  std::ofstream file;
  if (!o.out.empty()) file = open_out(out_dir(o) / "replay.jsonl");
  for (const auto& p : report.patches) {
    Json j = {{"line", p.line}};
    if (p.depth) j["depth"] = *p.depth;
    if (p.truth) j["truth"] = *p.truth;
    if (const auto e = p.abs_error()) j["abs_error"] = *e;
    if (!p.error.empty()) j["error"] = p.error;
    std::cout << j.dump() << '\n';
    if (file) file << j.dump() << '\n';
    if (!p.error.empty() && !p.depth) std::cerr << o.input << ":" << p.line << ": " << p.error << '\n';
  }
  const Json summary = {{"patches", report.patches.size()},
                        {"malformed", report.malformed},
                        {"no_estimate", report.no_estimate},
                        {"with_truth", report.with_truth},
                        {"within_one_bin", report.within_one_bin},
                        {"mean_abs_error", nullable(report.mean_abs_error)}};
  std::cout << summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Figure-eight target reconstruction and interception simulator"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.configs, "JSON config layer (repeatable, applied in order)")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", o.overrides, "override, e.g. --set target.speed=4 (repeatable)");
    sub->add_option("--seed", o.seed, "mission seed");
    sub->add_option("--jobs", o.jobs, "concurrent missions")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--trace", o.trace, "write a per-tick trace (simulate)");
    sub->add_flag("--print-config", o.print_config, "print the resolved configuration and exit");
  };

  auto* simulate = app.add_subcommand("simulate", "run one mission");
  common(simulate);
  auto* sweep = app.add_subcommand("sweep", "run a seeded parameter sweep");
  common(sweep);
  sweep->add_option("spec", o.input, "experiment spec (JSON)")->required();
  auto* fit = app.add_subcommand("fit", "fit a lemniscate to a 't x y z' point file");
  common(fit);
  fit->add_option("points", o.input, "point file")->required();
  auto* replay_cmd = app.add_subcommand("depth-replay", "run the depth filter on recorded patches");
  common(replay_cmd);
  replay_cmd->add_option("patches", o.input, "JSON-lines patch file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (fit->parsed()) return cmd_fit(o);
    return cmd_depth_replay(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
