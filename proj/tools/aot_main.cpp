#include <algorithm>
#include <atomic>
#include <cmath>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "aot/environments.hpp"
#include "aot/model_io.hpp"
#include "aot/planner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aot;

namespace {

// ---------------------------------------------------------------------------
// Logging: AOT_LOG = error | warn | info | debug (default warn)

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
  static const Level level = [] {
    const char* env = std::getenv("AOT_LOG");
    const std::string v = env ? env : "warn";
    if (v == "error") return Level::Error;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
  }();
  return level;
}

void log(Level level, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level <= log_level()) std::cerr << "[aot " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidModel:
    case ErrorKind::InvalidArgument:
    case ErrorKind::TagMismatch:
    case ErrorKind::MissingVmax:
      return 2;
    case ErrorKind::Io:
      return 4;
    default:
      return 3;
  }
}

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Configuration shared by the subcommands

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out;
  bool compare_full = false;
  bool timing = false;
  double init_fraction = 0.15;
  std::size_t refine_step = 5;
  std::size_t max_iterations = 100000;
  std::optional<std::size_t> depth;
  std::size_t obs_samples = 50;
  std::size_t particles = 50;
  std::optional<double> epsilon;
  std::optional<double> vmax;
  std::optional<double> lambda;
  std::size_t budget_nodes = kDefaultNodeBudget;
  std::string topology_file;

  // model source
  std::string model_file;
  RandomPomdpSpec gen;
  std::string family = "random";  // random | symmetric

  // beacon
  std::string world_file;
  std::optional<std::uint64_t> layout_seed;
  std::size_t steps = 10;
  std::size_t horizon = 3;
  std::size_t belief_particles = 200;

  // bench
  std::string mode = "exact";
  std::size_t seeds = 10;
  std::size_t jobs = 1;
};

void add_shared(CLI::App* app, RunConfig& c) {
  app->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  app->add_option("--out", c.out, "Output directory (file for gen-pomdp)")->required();
  app->add_flag("--compare-full", c.compare_full, "Also run the all-original baseline under common seeds");
  app->add_flag("--timing", c.timing, "Write measured times (outputs are then not byte-stable)");
  app->add_option("--init-fraction", c.init_fraction, "Initial fraction of original-regime nodes")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_option("--refine-step", c.refine_step, "Nodes flipped per refinement")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--max-iterations", c.max_iterations, "Refinement iteration cap")->capture_default_str();
  app->add_option("--depth", c.depth, "Planning depth (overrides the model horizon)")->check(CLI::PositiveNumber);
  app->add_option("--obs-samples", c.obs_samples, "Observation samples per original node (C)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--particles", c.particles, "Particles per belief (N)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--epsilon", c.epsilon, "Interval separation slack")->check(CLI::NonNegativeNumber);
  app->add_option("--vmax", c.vmax, "Value range for the concentration bound");
  app->add_option("--lambda", c.lambda, "Deviation for the concentration bound")->check(CLI::PositiveNumber);
  app->add_option("--budget-nodes", c.budget_nodes, "Exact-tree node budget")->capture_default_str();
  app->add_option("--topology-file", c.topology_file, "Initial topology JSON");
}

void add_generator(CLI::App* app, RunConfig& c, bool with_model_file) {
  auto* states = app->add_option("--states", c.gen.num_states, "Generated model: |X|")->capture_default_str();
  app->add_option("--actions", c.gen.num_actions, "Generated model: |A|")->capture_default_str();
  app->add_option("--observations", c.gen.num_observations, "Generated model: |Z|")->capture_default_str();
  app->add_option("--horizon", c.gen.horizon, "Generated model: L")->capture_default_str();
  app->add_option("--reward-lo", c.gen.reward_lo, "Generated model: reward lower end")->capture_default_str();
  app->add_option("--reward-hi", c.gen.reward_hi, "Generated model: reward upper end")->capture_default_str();
  if (with_model_file) {
    auto* file = app->add_option("--model", c.model_file, "Tabular model JSON")->check(CLI::ExistingFile);
    file->excludes(states);
  }
}

PlannerOptions planner_options(const RunConfig& c) {
  PlannerOptions o;
  o.epsilon = c.epsilon;
  o.budget_nodes = c.budget_nodes;
  o.sample.obs_samples = c.obs_samples;
  o.sample.particles = c.particles;
  o.sample.seed = hash_combine(c.seed, hash_tag("sample"));
  if (!c.topology_file.empty()) o.initial = Topology::from_json(json::parse(read_text_file(c.topology_file)));
  return o;
}

RefinementSchedule schedule_for(const RunConfig& c) {
  RefinementSchedule s;
  s.flips_per_iteration = c.refine_step;
  s.initial_fraction = c.init_fraction;
  s.seed = c.seed;
  s.max_iterations = c.max_iterations;
  return s;
}

TabularPomdp symmetric_family(const RandomPomdpSpec& spec) {
  if (spec.num_actions == 0) return gen_random_pomdp(spec);  // raises the num_actions error
  RandomPomdpSpec one = spec;
  one.num_actions = 1;
  TabularPomdp base = gen_random_pomdp(one);
  TabularPomdp m = base;
  m.num_actions = spec.num_actions;
  m.transition.clear();
  m.reward.clear();
  for (std::size_t a = 0; a < spec.num_actions; ++a)
    m.transition.insert(m.transition.end(), base.transition.begin(), base.transition.end());
  for (std::size_t x = 0; x < m.num_states; ++x)
    for (std::size_t a = 0; a < spec.num_actions; ++a) m.reward.push_back(base.r(x, 0));
  m.validate();
  return m;
}

TabularPomdp load_model(const RunConfig& c, std::uint64_t seed) {
  TabularPomdp m;
  if (!c.model_file.empty()) {
    m = load_tabular(c.model_file);
  } else {
    RandomPomdpSpec spec = c.gen;
    spec.seed = seed;
    m = c.family == "symmetric" ? symmetric_family(spec) : gen_random_pomdp(spec);
  }
  if (c.depth) m.horizon = *c.depth;
  return m;
}

json bounds_json(const PlanResult& r) {
  json out = json::array();
  if (r.trace.empty()) return out;
  const IterationRecord& last = r.trace.back();
  for (std::size_t a = 0; a < last.bounds.size(); ++a) {
    out.push_back({{"action", a},
                   {"lb", number_or_null(last.bounds[a].lb)},
                   {"ub", number_or_null(last.bounds[a].ub)},
                   {"pruned", static_cast<bool>(last.pruned[a])}});
  }
  return out;
}

json concentration_json(const RunConfig& c, std::size_t actions, std::size_t horizon, double vmax) {
  if (!c.lambda) return nullptr;
  const ConcentrationBound b = concentration(
      {.obs_samples = c.obs_samples, .horizon = horizon, .num_actions = actions, .lambda = *c.lambda, .v_max = vmax});
  return {{"lambda", *c.lambda}, {"v_max", vmax}, {"error_bound", b.error_bound}, {"probability", b.probability}};
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_gen_pomdp(const RunConfig& c) {
  RandomPomdpSpec spec = c.gen;
  spec.seed = c.seed;
  const TabularPomdp m = c.family == "symmetric" ? symmetric_family(spec) : gen_random_pomdp(spec);
  save_tabular(m, c.out);
  log(Level::Info, "wrote " + c.out);
  return 0;
}

struct SolveOutcome {
  PlanResult result;
  std::optional<PlanResult> baseline;
  double elapsed_ms = 0.0;
  double baseline_ms = 0.0;
};

SolveOutcome solve_one(const TabularPomdp& m, PlanMode mode, const RunConfig& c) {
  SolveOutcome out;
  const PlannerOptions opts = planner_options(c);
  const DiscreteBelief b0{m.initial_belief};
  const RefinementSchedule schedule = schedule_for(c);
  // Sampler tables are model setup shared by both planners, so they sit outside the timed region.
  std::optional<TabularSampler> sampler;
  if (mode == PlanMode::Sampled) sampler.emplace(m);
  auto t0 = std::chrono::steady_clock::now();
  out.result = sampler ? plan_sampled(*sampler, exact_particles(b0), schedule, opts) : plan(m, b0, schedule, mode, opts);
  out.elapsed_ms = ms_since(t0);
  if (c.compare_full) {
    t0 = std::chrono::steady_clock::now();
    out.baseline = sampler ? plan_sampled_full(*sampler, exact_particles(b0), opts) : plan_full(m, b0, mode, opts);
    out.baseline_ms = ms_since(t0);
  }
  return out;
}

int cmd_solve(const RunConfig& c, PlanMode mode) {
  const TabularPomdp m = load_model(c, c.seed);
  const fs::path out(c.out);
  SolveOutcome s;
  try {
    s = solve_one(m, mode, c);
  } catch (const PlanFailure& e) {
    write_text_file(out / "trace.csv", trace_csv(e.partial(), c.timing));
    throw;
  }
  const PlanResult& r = s.result;
  write_text_file(out / "trace.csv", trace_csv(r, c.timing));
  json summary{{"command", mode == PlanMode::Exact ? "solve-exact" : "solve-sparse"},
               {"seed", c.seed},
               {"chosen_action", r.chosen_action},
               {"identified", r.identified},
               {"termination", std::string(to_string(r.termination))},
               {"iterations", r.iterations},
               {"elapsed_ms", c.timing ? s.elapsed_ms : 0.0},
               {"work", r.work},
               {"final_topology_label", r.final_topology_label},
               {"final_bounds", bounds_json(r)},
               {"baseline_action", s.baseline ? json(s.baseline->chosen_action) : json(nullptr)},
               {"baseline_elapsed_ms", s.baseline ? json(c.timing ? s.baseline_ms : 0.0) : json(nullptr)},
               {"baseline_work", s.baseline ? json(s.baseline->work) : json(nullptr)},
               {"agreement", s.baseline ? json(s.baseline->chosen_action == r.chosen_action) : json(nullptr)}};
  if (mode == PlanMode::Sampled) {
    const double vmax = c.vmax.value_or(v_max_for(m));
    summary["concentration"] = concentration_json(c, m.num_actions, m.horizon, vmax);
  }
  write_text_file(out / "summary.json", dump(summary));
  log(Level::Info, "chosen action " + std::to_string(r.chosen_action) + " after " + std::to_string(r.iterations) +
                       " iteration(s)");
  return 0;
}

BeaconWorld load_world(const RunConfig& c) {
  BeaconWorld w = c.layout_seed ? BeaconWorld::seeded_layout(*c.layout_seed)
                                : c.world_file.empty() ? BeaconWorld::default_world()
                                                       : BeaconWorld::load(c.world_file);
  if (c.vmax) w.vmax = c.vmax;
  return w;
}

int cmd_beacon(const RunConfig& c) {
  const BeaconWorld world = load_world(c);
  const std::size_t horizon = c.depth.value_or(c.horizon);
  const BeaconPomdp model = make_beacon_pomdp(world, horizon);

  EpisodeConfig cfg;
  cfg.steps = c.steps;
  cfg.seed = c.seed;
  cfg.belief_particles = c.belief_particles;
  cfg.schedule = schedule_for(c);
  cfg.options = planner_options(c);
  cfg.compare_full = c.compare_full;

  Rng start(hash_combine(c.seed, hash_tag("start")));
  const Vec2 truth = model.initial_state_sampler(start);
  const auto belief = beacon_start_belief(world, c.belief_particles, start);
  const auto record = replan_episode(model, truth, belief, cfg);

  std::string csv = "step,action,reward,planning_ms,x,y,identified,iterations,baseline_action\n";
  double total_ms = 0.0, baseline_ms = 0.0, total_reward = 0.0;
  std::size_t agree = 0;
  std::uint64_t work = 0, baseline_work = 0;
  for (std::size_t t = 0; t < record.steps.size(); ++t) {
    const auto& s = record.steps[t];
    csv += std::to_string(t) + ',' + std::to_string(s.action) + ',' + format_number(s.reward) + ',' +
           (c.timing ? format_number(s.planning_ms) : std::string("0")) + ',' + format_number(s.state[0]) + ',' +
           format_number(s.state[1]) + ',' + (s.identified ? "1" : "0") + ',' +
           std::to_string(s.iterations) + ',' + (s.baseline_action ? std::to_string(*s.baseline_action) : "") + '\n';
    total_ms += s.planning_ms;
    baseline_ms += s.baseline_ms;
    total_reward += s.reward;
    work += s.work;
    baseline_work += s.baseline_work;
    agree += s.baseline_action == s.action;
  }
  const fs::path out(c.out);
  write_text_file(out / "episode.csv", csv);
  const Vec2 final_state = record.steps.empty() ? record.initial_state : record.steps.back().state;
  json summary{{"command", "beacon-run"},
               {"seed", c.seed},
               {"steps", record.steps.size()},
               {"horizon", horizon},
               {"initial_state", {record.initial_state[0], record.initial_state[1]}},
               {"final_state", {final_state[0], final_state[1]}},
               {"final_distance", norm(final_state - world.goal)},
               {"total_reward", total_reward},
               {"total_planning_ms", c.timing ? total_ms : 0.0},
               {"work", work},
               {"world", world.to_json()}};
  if (c.compare_full) {
    summary["baseline_total_planning_ms"] = c.timing ? baseline_ms : 0.0;
    summary["baseline_work"] = baseline_work;
    summary["agreement_rate"] =
        record.steps.empty() ? 1.0 : static_cast<double>(agree) / static_cast<double>(record.steps.size());
  }
  // r_g is unbounded near the goal, so V_max is a configured constant.
  const double vmax = world.vmax.value_or(5e4 * static_cast<double>(horizon));
  summary["v_max"] = vmax;
  summary["concentration"] = concentration_json(c, 4, horizon, vmax);
  write_text_file(out / "summary.json", dump(summary));
  return 0;
}

struct BenchRow {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  SolveOutcome outcome;
};

int cmd_bench(const RunConfig& c) {
  const PlanMode mode = c.mode == "sampled" ? PlanMode::Sampled : PlanMode::Exact;
  RunConfig run = c;
  run.compare_full = true;
  std::vector<BenchRow> rows(c.seeds);
  std::mutex log_mutex;
  auto work = [&](std::size_t i) {
    BenchRow& row = rows[i];
    row.seed = c.seed + i;
    try {
      RunConfig rc = run;
      rc.seed = row.seed;
      const TabularPomdp m = load_model(rc, row.seed);
      row.outcome = solve_one(m, mode, rc);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
      const std::lock_guard<std::mutex> lock(log_mutex);
      log(Level::Warn, "seed " + std::to_string(row.seed) + " failed: " + row.error);
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(c.jobs, c.seeds));
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < c.seeds; i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();

  const fs::path out(c.out);
  std::string csv =
      "seed,ok,chosen_action,baseline_action,agreement,identified,termination,iterations,work,baseline_work,"
      "elapsed_ms,baseline_ms\n";
  std::size_t ok = 0, agree = 0, identified = 0, agree_identified = 0;
  std::vector<double> time_speedups, work_speedups;
  std::map<std::size_t, std::size_t> histogram;
  json failures = json::array();
  for (const BenchRow& row : rows) {
    if (!row.ok) {
      failures.push_back({{"seed", row.seed}, {"error", row.error}});
      csv += std::to_string(row.seed) + ",0,,,,,,,,,,\n";
      continue;
    }
    const PlanResult& r = row.outcome.result;
    const PlanResult& b = *row.outcome.baseline;
    const bool same = r.chosen_action == b.chosen_action;
    ++ok;
    agree += same;
    identified += r.identified;
    agree_identified += r.identified && same;
    ++histogram[r.iterations];
    if (r.work > 0) work_speedups.push_back(static_cast<double>(b.work) / static_cast<double>(r.work));
    if (row.outcome.elapsed_ms > 0) time_speedups.push_back(row.outcome.baseline_ms / row.outcome.elapsed_ms);
    csv += std::to_string(row.seed) + ",1," + std::to_string(r.chosen_action) + ',' + std::to_string(b.chosen_action) +
           ',' + (same ? "1" : "0") + ',' + (r.identified ? "1" : "0") + ',' + std::string(to_string(r.termination)) +
           ',' + std::to_string(r.iterations) + ',' + std::to_string(r.work) + ',' + std::to_string(b.work) + ',' +
           (c.timing ? format_number(row.outcome.elapsed_ms) : "0") + ',' +
           (c.timing ? format_number(row.outcome.baseline_ms) : "0") + '\n';
    write_text_file(out / "runs" / ("seed_" + std::to_string(row.seed) + ".csv"), trace_csv(r, c.timing));
  }
  json hist = json::object();
  for (const auto& [iters, count] : histogram) hist[std::to_string(iters)] = count;
  auto rate = [](std::size_t num, std::size_t den) { return den ? json(static_cast<double>(num) / den) : json(nullptr); };
  json report{{"command", "bench"},
              {"mode", c.mode},
              {"family", c.family},
              {"seeds", c.seeds},
              {"first_seed", c.seed},
              {"completed", ok},
              {"agreement_rate", rate(agree, ok)},
              {"identified_rate", rate(identified, ok)},
              {"agreement_rate_identified", rate(agree_identified, identified)},
              {"median_work_speedup", number_or_null(median(work_speedups))},
              {"median_time_speedup", c.timing ? number_or_null(median(time_speedups)) : json(nullptr)},
              {"median_iterations", number_or_null([&] {
                 std::vector<double> its;
                 for (const auto& row : rows)
                   if (row.ok) its.push_back(static_cast<double>(row.outcome.result.iterations));
                 return median(its);
               }())},
              {"iteration_histogram", hist},
              {"failures", failures}};
  write_text_file(out / "runs.csv", csv);
  write_text_file(out / "report.json", dump(report));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive observation topology planner"};
  app.require_subcommand(1);
  RunConfig c;

  auto* gen = app.add_subcommand("gen-pomdp", "Generate a random tabular model");
  gen->add_option("--seed", c.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", c.out, "Output model file")->required();
  gen->add_option("--family", c.family, "random | symmetric")->check(CLI::IsMember({"random", "symmetric"}));
  add_generator(gen, c, false);

  auto* exact = app.add_subcommand("solve-exact", "Plan on a tabular model with exact bounds");
  add_shared(exact, c);
  add_generator(exact, c, true);
  exact->add_option("--family", c.family, "random | symmetric")->check(CLI::IsMember({"random", "symmetric"}));

  auto* sparse = app.add_subcommand("solve-sparse", "Plan on a tabular model with sampled bounds");
  add_shared(sparse, c);
  add_generator(sparse, c, true);
  sparse->add_option("--family", c.family, "random | symmetric")->check(CLI::IsMember({"random", "symmetric"}));

  auto* beacon = app.add_subcommand("beacon-run", "Closed-loop beacon navigation episode");
  add_shared(beacon, c);
  beacon->add_option("--world", c.world_file, "Beacon world JSON (default: built-in layout)")
      ->check(CLI::ExistingFile);
  beacon->add_option("--layout-seed", c.layout_seed, "Use a seeded random layout");
  beacon->add_option("--steps", c.steps, "Episode length")->capture_default_str();
  beacon->add_option("--horizon", c.horizon, "Planning horizon L")->check(CLI::PositiveNumber)->capture_default_str();
  beacon->add_option("--belief-particles", c.belief_particles, "Particles in the filtering belief")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Seed sweep against the all-original baseline");
  add_shared(bench, c);
  add_generator(bench, c, false);
  bench->add_option("--mode", c.mode, "exact | sampled")->check(CLI::IsMember({"exact", "sampled"}));
  bench->add_option("--family", c.family, "random | symmetric")->check(CLI::IsMember({"random", "symmetric"}));
  bench->add_option("--seeds", c.seeds, "Number of consecutive seeds")->capture_default_str();
  bench->add_option("--jobs", c.jobs, "Concurrent runs")->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen_pomdp(c);
    if (*exact) return cmd_solve(c, PlanMode::Exact);
    if (*sparse) return cmd_solve(c, PlanMode::Sampled);
    if (*beacon) return cmd_beacon(c);
    if (*bench) return cmd_bench(c);
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    std::cerr << json{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}, {"exit_code", code}}.dump()
              << '\n';
    return code;
  } catch (const json::exception& e) {
    std::cerr << json{{"error", "InvalidArgument"}, {"message", e.what()}, {"exit_code", 2}}.dump() << '\n';
    return 2;
  }
  return 0;
}
