#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "pairforge/config.hpp"
#include "pairforge/error.hpp"
#include "pairforge/pipeline.hpp"
#include "pairforge/simulation.hpp"

using namespace pairforge;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kAborted = 2;

std::atomic<bool> g_cancel{false};

void on_signal(int) { g_cancel.store(true); }

std::string override_help() {
  std::ostringstream out;
  out << "Config override keys (--set key=value, or environment PAIRFORGE_<KEY> with dots as underscores;\n"
         "precedence: config file < environment < command line):\n";
  for (const auto& k : override_keys()) {
    out << "  " << k.key;
    for (std::size_t i = k.key.size(); i < 26; ++i) out << ' ';
    out << k.description << '\n';
  }
  return out.str();
}

/// "2.8e18" rather than "2.8e+18".
std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  std::string s(buf);
  if (auto p = s.find("e+"); p != std::string::npos) s.erase(p + 1, 1);
  return s;
}

std::string demo_seed_lines() {
  static const char* topics[] = {"photosynthesis", "binary search", "supply and demand", "the water cycle",
                                 "recursion", "plate tectonics", "compound interest", "vaccination",
                                 "hash tables", "the French revolution"};
  std::string out;
  for (int i = 0; i < 10; ++i) {
    Json j = {{"id", "demo-" + std::to_string(i)},
              {"instruction", std::string("Explain ") + topics[i] + " to a curious high-school student."},
              {"response", std::string("In short, ") + topics[i] + " is a topic worth understanding step by step."}};
    out += j.dump() + "\n";
  }
  return out;
}

struct ConfigOptions {
  std::string config;
  bool demo = false;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string seeds;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "pipeline config (JSON)");
    cmd->add_flag("--demo", demo, "use the built-in all-mock configuration");
    cmd->add_option("--set", sets, "override a config key, key=value (repeatable)");
    cmd->add_option("-o,--out", out_dir, "output directory (paths.out_dir)");
    cmd->add_option("--seeds", seeds, "seed dataset (paths.seed)");
    cmd->add_option("--seed", seed, "master random seed");
  }

  /// File < environment < --set < dedicated flags.
  PipelineConfig load() const {
    if (config.empty() && !demo) throw ConfigError("pass --config FILE or --demo");
    Json doc = demo ? demo_config_document() : load_config_document(config);
    apply_env_overrides(doc);
    apply_overrides(doc, sets);
    if (!out_dir.empty()) apply_override(doc, "paths.out_dir", Json(out_dir).dump());
    if (!seeds.empty()) apply_override(doc, "paths.seed", Json(seeds).dump());
    if (seed) apply_override(doc, "seed", std::to_string(*seed));
    auto c = config_from_json(doc);
    if (demo && c.paths.seed.empty()) {
      fs::create_directories(c.paths.out_dir);
      c.paths.seed = c.paths.out_dir / "demo_seed.jsonl";
      write_file_atomic(c.paths.seed, demo_seed_lines());
    }
    c.validate();
    return c;
  }
};

// ------------------------------------------------------------ run

int cmd_run(const ConfigOptions& opts, bool resume, std::optional<std::size_t> stop_after) {
  auto config = opts.load();
  std::cerr << "effective seed: " << config.seed << "\n";
  auto gateway = make_gateway(config);
  gateway->set_log_sink([](const std::string& line) { std::cerr << line << "\n"; });

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  RunOptions ro;
  ro.resume = resume;
  ro.stop_after = stop_after;
  ro.cancel = &g_cancel;
  ro.progress = [](const std::string& line) { std::cerr << line << "\n"; };
  auto result = run_pipeline(config, *gateway, ro);
  const auto& c = result.counts;
  std::cerr << "seeds " << result.cursor << "/" << result.total << ", base fallbacks " << c.base_fallbacks
            << ", seed fallbacks " << c.seed_fallbacks << ", referee parse failures " << c.referee_parse_failures
            << ", dropped candidates " << c.dropped_candidates << ", gateway retries " << gateway->retries() << "\n";
  if (result.status == RunStatus::aborted) {
    std::cerr << "aborted: " << result.abort_reason << "\ncheckpoint: " << config.paths.checkpoint_path().string()
              << " (rerun with --resume)\n";
    return kAborted;
  }
  std::cout << config.paths.output_path().string() << "\n";
  return kOk;
}

// ------------------------------------------------------------ score

int cmd_score(const ConfigOptions& opts, const std::string& dataset, std::string small, std::string large, bool rank,
              const std::string& out_path) {
  ConfigOptions copy = opts;
  if (copy.seeds.empty()) copy.seeds = dataset;
  auto config = copy.load();
  if (small.empty()) small = config.scorer_small;
  if (large.empty()) large = config.scorer_large;
  const auto& s = config.agent(small);
  const auto& l = config.agent(large);
  auto gateway = make_gateway(config);
  auto samples = load_seed_dataset(dataset);

  struct Row {
    std::string id;
    double small, large;
  };
  std::vector<Row> rows;
  for (const auto& sample : samples) {
    rows.push_back({sample.id, compute_ifd(*gateway, s, sample.instruction, sample.response),
                    compute_ifd(*gateway, l, sample.instruction, sample.response)});
  }
  if (rank) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.small - a.large > b.small - b.large; });
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    out << Json{{"id", r.id}, {"ifd_small", r.small}, {"ifd_large", r.large}, {"diff", r.small - r.large}}.dump()
        << "\n";
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    write_file_atomic(out_path, out.str());
  }
  return kOk;
}

// ------------------------------------------------------------ simulate

struct SimulateArgs {
  std::string profiles = "0.6:0.8,0.1:0.3x9";
  std::size_t iterations = 70000;
  double beta = 0.05;
  std::uint64_t seed = 1;
  std::size_t stride = 100;
  std::string out_dir = ".";
  std::size_t sweep_seeds = 0;
  std::vector<double> betas;
  std::vector<std::string> profile_sets;
};

int cmd_simulate(const SimulateArgs& a) {
  std::cerr << "effective seed: " << a.seed << "\n";
  auto profiles = parse_profiles(a.profiles);
  fs::create_directories(a.out_dir);
  SimulationOptions opt;
  opt.iterations = a.iterations;
  opt.beta = a.beta;
  opt.rng_seed = a.seed;
  opt.stride = a.stride;
  auto traj = simulate_evolution(profiles, opt);
  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  write_file_atomic(fs::path(a.out_dir) / "trajectory.csv", csv.str());
  std::cout << "trajectory.csv: " << traj.points.size() * traj.pairs.size() << " rows\n";
  std::cout << "final:";
  for (std::size_t i = 0; i < traj.pairs.size(); ++i) {
    std::cout << ' ' << traj.pairs[i].to_string() << '=' << format_number(traj.final_probs[i]);
  }
  std::cout << "\n";

  if (a.sweep_seeds > 0) {
    std::vector<SweepCell> cells;
    auto betas = a.betas.empty() ? std::vector<double>{a.beta} : a.betas;
    std::vector<std::pair<std::string, std::string>> sets;
    for (const auto& s : a.profile_sets) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--profile-set expects name=profiles");
      sets.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (sets.empty()) sets.emplace_back("default", a.profiles);
    for (double b : betas) {
      for (const auto& [name, spec] : sets) cells.push_back({b, name, parse_profiles(spec)});
    }
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < a.sweep_seeds; ++i) seeds.push_back(a.seed + i);
    auto rows = sweep_parallel(cells, a.iterations, seeds);
    std::ostringstream sweep, means;
    write_sweep_csv(sweep, rows);
    write_sweep_means_csv(means, rows);
    write_file_atomic(fs::path(a.out_dir) / "sweep.csv", sweep.str());
    write_file_atomic(fs::path(a.out_dir) / "sweep_means.csv", means.str());
    std::cout << "sweep.csv: " << rows.size() << " rows\n" << means.str();
  }
  return kOk;
}

// ------------------------------------------------------------ inspect

int cmd_inspect(const std::string& path, bool json) {
  auto log = load_candidate_log(path);
  struct SeedSummary {
    std::size_t candidates = 0, dropped = 0;
    double best = 0.0;
    std::string winner = "base";
  };
  std::vector<std::string> order;
  std::map<std::string, SeedSummary> seeds;
  std::map<std::string, std::pair<std::size_t, double>> pairs;  // count, composite sum
  std::size_t dropped = 0, parse_failures = 0;
  for (const auto& c : log) {
    if (!seeds.count(c.seed_id)) order.push_back(c.seed_id);
    auto& s = seeds[c.seed_id];
    ++s.candidates;
    if (c.status != CandidateStatus::ok) {
      ++s.dropped;
      ++dropped;
    }
    parse_failures += c.referee_parse_failure;
    if (c.is_base) continue;
    auto& p = pairs[c.pair.to_string()];
    ++p.first;
    p.second += c.pi_composite;
    if (c.status == CandidateStatus::ok && c.pi_composite > s.best) {
      s.best = c.pi_composite;
      s.winner = c.pair.to_string();
    }
  }
  if (json) {
    Json per_seed = Json::array();
    for (const auto& id : order) {
      const auto& s = seeds[id];
      per_seed.push_back({{"seed_id", id}, {"candidates", s.candidates}, {"dropped", s.dropped},
                          {"winner", s.winner}, {"score", s.best}});
    }
    Json per_pair = Json::object();
    for (const auto& [p, v] : pairs) {
      per_pair[p] = {{"candidates", v.first}, {"mean_composite", v.second / static_cast<double>(v.first)}};
    }
    std::cout << Json{{"candidates", log.size()}, {"seeds", order.size()}, {"dropped", dropped},
                      {"referee_parse_failures", parse_failures}, {"per_seed", per_seed}, {"per_pair", per_pair}}
                     .dump(2)
              << "\n";
    return kOk;
  }
  std::cout << log.size() << " candidates";
  if (log.empty()) {
    std::cout << "\n";
    return kOk;
  }
  std::cout << " over " << order.size() << " seeds, " << dropped << " dropped, " << parse_failures
            << " referee parse failures\n\n";
  std::printf("%-24s %10s %8s %8s %10s\n", "seed_id", "candidates", "dropped", "winner", "score");
  for (const auto& id : order) {
    const auto& s = seeds[id];
    std::printf("%-24s %10zu %8zu %8s %10.6f\n", id.c_str(), s.candidates, s.dropped, s.winner.c_str(), s.best);
  }
  std::printf("\n%-8s %10s %15s\n", "pair", "candidates", "mean_composite");
  for (const auto& [p, v] : pairs) {
    std::printf("%-8s %10zu %15.6f\n", p.c_str(), v.first, v.second / static_cast<double>(v.first));
  }
  return kOk;
}

// ------------------------------------------------------------ bank-stats

int cmd_bank_stats(const std::string& path, bool json) {
  auto cp = PipelineCheckpoint::load(path);
  const auto& bank = cp.state.bank;
  const auto& m = cp.state.matrix;
  auto name = [&](AgentPair p) {
    return m.instruction_agents().at(static_cast<std::size_t>(p.instruction)) + " -> " +
           m.response_agents().at(static_cast<std::size_t>(p.response));
  };
  auto counts = bank.per_pair_counts();
  if (json) {
    Json per_pair = Json::object();
    for (const auto& [p, n] : counts) per_pair[p.to_string()] = n;
    std::cout << Json{{"size", bank.size()}, {"capacity", bank.capacity()}, {"tau", bank.tau()},
                      {"dim", bank.dim()}, {"admitted", bank.stats().admitted},
                      {"rejected", bank.stats().rejected}, {"evicted", bank.stats().evicted},
                      {"per_pair", per_pair}}
                     .dump(2)
              << "\n";
    return kOk;
  }
  std::cout << "entries " << bank.size() << "/" << bank.capacity() << " (dim " << bank.dim() << ", tau "
            << bank.tau() << ")\n"
            << "admitted " << bank.stats().admitted << ", rejected " << bank.stats().rejected << ", evicted "
            << bank.stats().evicted << "\n";
  for (const auto& [p, n] : counts) std::printf("  %-6s %-40s %zu\n", p.to_string().c_str(), name(p).c_str(), n);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pairforge: instruction-tuning data curation with evolving agent pairs"};
  app.require_subcommand(1);
  app.footer(override_help());

  ConfigOptions run_opts;
  bool resume = false;
  std::optional<std::size_t> stop_after;
  auto* run = app.add_subcommand("run", "run the curation pipeline over a seed dataset");
  run_opts.add_to(run);
  run->add_flag("--resume", resume, "continue from the checkpoint in the output directory");
  run->add_option("--stop-after", stop_after, "stop (resumably) after this many seeds");
  run->footer(override_help());

  ConfigOptions score_opts;
  std::string score_dataset, small, large, score_out;
  bool rank = false;
  auto* score = app.add_subcommand("score", "IFD of each sample under the small and large scorers");
  score->add_option("dataset", score_dataset, "JSONL with id, instruction, response")->required();
  score_opts.add_to(score);
  score->add_option("--small", small, "small scorer agent name (default: config scorer_small)");
  score->add_option("--large", large, "large scorer agent name (default: config scorer_large)");
  score->add_flag("--rank", rank, "sort by ifd_small - ifd_large, descending");
  score->add_option("--output", score_out, "write JSONL here instead of stdout");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "evolve the pair distribution against synthetic rewards");
  simulate->add_option("--profiles", sim.profiles, "win:dual list, xN repeats")->capture_default_str();
  simulate->add_option("--iterations", sim.iterations)->capture_default_str();
  simulate->add_option("--beta", sim.beta)->capture_default_str();
  simulate->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  simulate->add_option("--stride", sim.stride, "record every stride-th iteration")->capture_default_str();
  simulate->add_option("-o,--out", sim.out_dir, "output directory")->capture_default_str();
  simulate->add_option("--sweep-seeds", sim.sweep_seeds, "also write sweep.csv over this many seeds")
      ->capture_default_str();
  simulate->add_option("--betas", sim.betas, "sweep beta values (default: --beta)")->delimiter(',');
  simulate->add_option("--profile-set", sim.profile_sets, "sweep profile set name=profiles (repeatable)");

  std::string inspect_path;
  bool inspect_json = false;
  auto* inspect = app.add_subcommand("inspect", "summarize a candidate log");
  inspect->add_option("log", inspect_path, "candidates.jsonl")->required();
  inspect->add_flag("--json", inspect_json, "machine-readable output");

  double macs = 0, pairs_invoked = 0, samples = 0;
  auto* cost = app.add_subcommand("estimate-cost", "multiply-accumulates: macs * pairs * samples");
  cost->add_option("macs", macs, "MACs per sample")->required();
  cost->add_option("pairs", pairs_invoked, "agent pairs invoked per sample")->required();
  cost->add_option("samples", samples, "number of samples")->required();

  std::string bank_path;
  bool bank_json = false;
  auto* bank = app.add_subcommand("bank-stats", "memory bank statistics from a checkpoint");
  bank->add_option("checkpoint", bank_path, "checkpoint.json")->required();
  bank->add_flag("--json", bank_json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_opts, resume, stop_after);
    if (*score) return cmd_score(score_opts, score_dataset, small, large, rank, score_out);
    if (*simulate) return cmd_simulate(sim);
    if (*inspect) return cmd_inspect(inspect_path, inspect_json);
    if (*cost) {
      std::cout << format_number(estimate_compute({{"model", macs}}, pairs_invoked, samples)) << "\n";
      return kOk;
    }
    if (*bank) return cmd_bank_stats(bank_path, bank_json);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
