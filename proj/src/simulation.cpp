#include "pairforge/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "pairforge/error.hpp"
#include "pairforge/hashing.hpp"
#include "pairforge/pair_matrix.hpp"

namespace pairforge {

std::vector<SyntheticPairProfile> make_profiles(std::span<const std::pair<double, double>> win_and_dual) {
  std::vector<SyntheticPairProfile> out;
  for (std::size_t i = 0; i < win_and_dual.size(); ++i) {
    out.push_back({AgentPair{0, static_cast<int>(i)}, win_and_dual[i].first, win_and_dual[i].second});
  }
  return out;
}

namespace {

double parse_double(std::string_view text, std::string_view whole) {
  double v = 0.0;
  auto t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("bad number '" + t + "' in profile list '" + std::string(whole) + "'");
  }
  return v;
}

void check_profiles(std::span<const SyntheticPairProfile> profiles) {
  if (profiles.size() < 2) throw PreconditionError("simulation needs at least two profiles");
  for (const auto& p : profiles) {
    if (!(p.win_prob >= 0.0 && p.win_prob <= 1.0 && p.dual_mean >= 0.0 && p.dual_mean <= 1.0)) {
      throw PreconditionError("profile " + p.pair.to_string() + " has win_prob or dual_mean outside [0,1]");
    }
  }
}

std::size_t dominant_index(std::span<const SyntheticPairProfile> profiles) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < profiles.size(); ++i) {
    if (profiles[i].expected_reward() > profiles[best].expected_reward()) best = i;
  }
  return best;
}

}  // namespace

std::vector<SyntheticPairProfile> parse_profiles(std::string_view spec) {
  std::vector<std::pair<double, double>> values;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto end = spec.find(',', pos);
    if (end == std::string_view::npos) end = spec.size();
    auto item = spec.substr(pos, end - pos);
    pos = end + 1;
    if (trim(item).empty()) continue;
    std::size_t repeat = 1;
    if (auto x = item.find('x'); x != std::string_view::npos) {
      repeat = static_cast<std::size_t>(parse_double(item.substr(x + 1), spec));
      item = item.substr(0, x);
    }
    auto colon = item.find(':');
    if (colon == std::string_view::npos) throw ConfigError("profile '" + std::string(item) + "' is not win:dual");
    std::pair<double, double> v{parse_double(item.substr(0, colon), spec), parse_double(item.substr(colon + 1), spec)};
    values.insert(values.end(), repeat, v);
  }
  return make_profiles(values);
}

Trajectory simulate_evolution(std::span<const SyntheticPairProfile> profiles, const SimulationOptions& options) {
  check_profiles(profiles);
  if (options.iterations < 1) throw PreconditionError("simulation needs at least one iteration");
  if (options.stride < 1) throw PreconditionError("trajectory stride must be >= 1");

  // Lay the profiles on a grid large enough to hold their pairs.
  int rows = 0, cols = 0;
  for (const auto& p : profiles) {
    rows = std::max(rows, p.pair.instruction + 1);
    cols = std::max(cols, p.pair.response + 1);
  }
  std::vector<std::string> ins(static_cast<std::size_t>(rows)), res(static_cast<std::size_t>(cols));
  for (int j = 0; j < rows; ++j) ins[static_cast<std::size_t>(j)] = "i" + std::to_string(j);
  for (int k = 0; k < cols; ++k) res[static_cast<std::size_t>(k)] = "r" + std::to_string(k);
  std::vector<AgentPair> unused;
  for (int j = 0; j < rows; ++j) {
    for (int k = 0; k < cols; ++k) {
      AgentPair p{j, k};
      bool used = std::any_of(profiles.begin(), profiles.end(), [&](const auto& pr) { return pr.pair == p; });
      if (!used) unused.push_back(p);
    }
  }
  // Cells without a profile are excluded from sampling like base pairs.
  auto matrix = PairMatrix::init_uniform(ins, res, unused, options.beta);
  if (matrix.non_base_pairs().size() != profiles.size()) throw PreconditionError("profiles name duplicate pairs");

  std::map<AgentPair, const SyntheticPairProfile*> by_pair;
  for (const auto& p : profiles) by_pair[p.pair] = &p;

  Trajectory traj;
  for (const auto& p : profiles) traj.pairs.push_back(p.pair);
  const std::size_t dom = dominant_index(profiles);
  auto snapshot = [&] {
    std::vector<double> v;
    v.reserve(profiles.size());
    for (const auto& p : profiles) v.push_back(matrix.prob(p.pair));
    return v;
  };
  auto dominant_leads = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i != dom && v[i] >= v[dom]) return false;
    }
    return true;
  };

  Rng rng(options.rng_seed);
  std::uint64_t last_not_leading = 0;
  std::vector<Reward> rewards;
  for (std::size_t t = 1; t <= options.iterations; ++t) {
    auto draw = sample_pairs(matrix, options.pairs_per_iteration, {}, 0, rng());
    rewards.clear();
    for (auto pair : draw.sampled) {
      const auto* prof = by_pair.at(pair);
      const double pi = uniform01(rng) < prof->win_prob ? prof->dual_mean : 0.0;
      rewards.push_back({pair, pi});
    }
    matrix.apply_reward(rewards);
    auto v = snapshot();
    if (!dominant_leads(v)) last_not_leading = t;
    if (t % options.stride == 0) {
      traj.iterations.push_back(t);
      traj.points.push_back(v);
    }
    if (t == options.iterations) traj.final_probs = std::move(v);
  }
  if (last_not_leading < options.iterations) traj.crossover = last_not_leading + 1;
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const auto old = out.precision(17);
  out << "iteration,pair,probability\n";
  for (std::size_t t = 0; t < trajectory.iterations.size(); ++t) {
    for (std::size_t i = 0; i < trajectory.pairs.size(); ++i) {
      out << trajectory.iterations[t] << ',' << trajectory.pairs[i].to_string() << ',' << trajectory.points[t][i]
          << '\n';
    }
  }
  out.precision(old);
}

namespace {

SweepRow run_cell(const SweepCell& cell, std::size_t iterations, std::uint64_t seed) {
  SimulationOptions opt;
  opt.iterations = iterations;
  opt.beta = cell.beta;
  opt.rng_seed = seed;
  opt.stride = iterations;  // only the final point is needed
  auto traj = simulate_evolution(cell.profiles, opt);
  const auto dom = dominant_index(cell.profiles);
  return {cell.beta, cell.profile_set, seed, std::move(traj.final_probs), dom, cell.profiles[dom].pair, traj.crossover};
}

void check_sweep(std::span<const SweepCell> cells, std::span<const std::uint64_t> seeds) {
  if (cells.empty()) throw PreconditionError("sweep grid is empty");
  if (seeds.empty()) throw PreconditionError("sweep needs at least one seed");
}

}  // namespace

std::vector<SweepRow> sweep_serial(std::span<const SweepCell> cells, std::size_t iterations,
                                   std::span<const std::uint64_t> seeds) {
  check_sweep(cells, seeds);
  std::vector<SweepRow> rows;
  rows.reserve(cells.size() * seeds.size());
  for (const auto& cell : cells) {
    for (auto seed : seeds) rows.push_back(run_cell(cell, iterations, seed));
  }
  return rows;
}

std::vector<SweepRow> sweep_parallel(std::span<const SweepCell> cells, std::size_t iterations,
                                     std::span<const std::uint64_t> seeds) {
  check_sweep(cells, seeds);
  const std::size_t total = cells.size() * seeds.size();
  std::vector<SweepRow> rows(total);
  const auto n = static_cast<std::ptrdiff_t>(total);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    rows[u] = run_cell(cells[u / seeds.size()], iterations, seeds[u % seeds.size()]);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  const auto old = out.precision(17);
  out << "beta,profile_set,seed,dominant_pair,dominant_final,weakest_final,crossover_iteration,final_probs\n";
  for (const auto& r : rows) {
    const double weakest = *std::min_element(r.final_probs.begin(), r.final_probs.end());
    out << r.beta << ',' << r.profile_set << ',' << r.seed << ',' << r.dominant_pair.to_string() << ',' << r.final_probs[r.dominant]
        << ',' << weakest << ',';
    if (r.crossover) out << *r.crossover;
    out << ',';
    for (std::size_t i = 0; i < r.final_probs.size(); ++i) out << (i ? ";" : "") << r.final_probs[i];
    out << '\n';
  }
  out.precision(old);
}

void write_sweep_means_csv(std::ostream& out, std::span<const SweepRow> rows) {
  struct Acc {
    std::size_t n = 0;
    double dominant = 0.0, weakest = 0.0, crossover = 0.0;
    std::size_t crossed = 0;
  };
  std::vector<std::pair<std::pair<double, std::string>, Acc>> groups;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.beta, r.profile_set);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = groups.end() - 1;
    }
    auto& a = it->second;
    ++a.n;
    a.dominant += r.final_probs[r.dominant];
    a.weakest += *std::min_element(r.final_probs.begin(), r.final_probs.end());
    if (r.crossover) {
      a.crossover += static_cast<double>(*r.crossover);
      ++a.crossed;
    }
  }
  const auto old = out.precision(17);
  out << "beta,profile_set,seeds,mean_dominant_final,mean_weakest_final,mean_crossover_iteration\n";
  for (const auto& [key, a] : groups) {
    out << key.first << ',' << key.second << ',' << a.n << ',' << a.dominant / static_cast<double>(a.n) << ','
        << a.weakest / static_cast<double>(a.n) << ',';
    if (a.crossed) out << a.crossover / static_cast<double>(a.crossed);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace pairforge
