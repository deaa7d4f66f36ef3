#include "pairforge/pair_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "pairforge/error.hpp"
#include "pairforge/hashing.hpp"

namespace pairforge {

PairMatrix PairMatrix::init_uniform(std::vector<std::string> instruction_agents,
                                    std::vector<std::string> response_agents, std::vector<AgentPair> base_pairs,
                                    double beta) {
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  PairMatrix m;
  m.instruction_agents_ = std::move(instruction_agents);
  m.response_agents_ = std::move(response_agents);
  for (auto bp : base_pairs) {
    if (!m.contains(bp)) throw ConfigError("base pair " + bp.to_string() + " is outside the agent roster");
    if (!m.is_base(bp)) m.base_pairs_.push_back(bp);
  }
  m.beta_ = beta;
  m.index_pairs();
  if (m.non_base_.empty()) throw ConfigError("no non-base agent pair to sample from");
  m.probs_.assign(m.rows() * m.cols(), 0.0);
  const double p = 1.0 / static_cast<double>(m.non_base_.size());
  for (auto pair : m.non_base_) m.probs_[m.offset(pair)] = p;
  return m;
}

void PairMatrix::index_pairs() {
  non_base_.clear();
  for (std::size_t j = 0; j < rows(); ++j) {
    for (std::size_t k = 0; k < cols(); ++k) {
      AgentPair p{static_cast<int>(j), static_cast<int>(k)};
      if (!is_base(p)) non_base_.push_back(p);
    }
  }
}

bool PairMatrix::contains(AgentPair pair) const {
  return pair.instruction >= 0 && pair.response >= 0 && static_cast<std::size_t>(pair.instruction) < rows() &&
         static_cast<std::size_t>(pair.response) < cols();
}

bool PairMatrix::is_base(AgentPair pair) const {
  return std::find(base_pairs_.begin(), base_pairs_.end(), pair) != base_pairs_.end();
}

double PairMatrix::prob(AgentPair pair) const {
  if (!contains(pair)) throw ContractError("pair " + pair.to_string() + " is outside the matrix");
  return probs_[offset(pair)];
}

double PairMatrix::total() const {
  double s = 0.0;
  for (double p : probs_) s += p;
  return s;
}

void PairMatrix::apply_reward(std::span<const Reward> rewards) {
  double added = 0.0;
  for (const auto& r : rewards) {
    if (!contains(r.pair)) throw ContractError("reward for unknown pair " + r.pair.to_string());
    if (is_base(r.pair)) throw ContractError("reward for base pair " + r.pair.to_string());
    if (!(r.pi >= 0.0 && r.pi <= 1.0)) throw ContractError("reward " + std::to_string(r.pi) + " outside [0,1]");
    added += r.pi;
  }
  ++update_count_;
  if (added == 0.0 || beta_ == 0.0) return;
  for (const auto& r : rewards) probs_[offset(r.pair)] += beta_ * r.pi;
  const double sum = total();
  for (double& p : probs_) p /= sum;
}

Json PairMatrix::to_json() const {
  Json probs = Json::array();
  for (std::size_t j = 0; j < rows(); ++j) {
    probs.push_back(std::vector<double>(probs_.begin() + static_cast<std::ptrdiff_t>(j * cols()),
                                        probs_.begin() + static_cast<std::ptrdiff_t>((j + 1) * cols())));
  }
  Json base = Json::array();
  for (auto bp : base_pairs_) base.push_back(bp.to_string());
  return {{"instruction_agents", instruction_agents_},
          {"response_agents", response_agents_},
          {"base_pairs", base},
          {"probs", probs},
          {"beta", beta_},
          {"update_count", update_count_}};
}

PairMatrix PairMatrix::from_json(const Json& j) {
  try {
    PairMatrix m;
    m.instruction_agents_ = j.at("instruction_agents").get<std::vector<std::string>>();
    m.response_agents_ = j.at("response_agents").get<std::vector<std::string>>();
    for (const auto& s : j.at("base_pairs")) m.base_pairs_.push_back(AgentPair::parse(s.get<std::string>()));
    m.beta_ = j.at("beta").get<double>();
    m.update_count_ = j.at("update_count").get<std::uint64_t>();
    const auto& rows = j.at("probs");
    if (rows.size() != m.rows()) throw ParseError("pair matrix has the wrong number of rows");
    for (const auto& row : rows) {
      auto values = row.get<std::vector<double>>();
      if (values.size() != m.cols()) throw ParseError("pair matrix has the wrong number of columns");
      m.probs_.insert(m.probs_.end(), values.begin(), values.end());
    }
    m.index_pairs();
    for (auto bp : m.base_pairs_) {
      if (!m.contains(bp)) throw ParseError("base pair outside the matrix");
      if (m.probs_[m.offset(bp)] != 0.0) throw ParseError("base pair " + bp.to_string() + " carries probability");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("pair matrix: ") + e.what());
  }
}

void PairMatrix::write_trajectory_rows(std::ostream& out) const {
  const auto old = out.precision(17);
  for (auto pair : non_base_) out << update_count_ << ',' << pair.to_string() << ',' << probs_[offset(pair)] << '\n';
  out.precision(old);
}

namespace {

// Weighted draw without replacement of `count` items from `pool`, which is
// consumed. Weights that are all zero fall back to uniform.
void draw_without_replacement(const PairMatrix& matrix, std::vector<AgentPair>& pool, std::size_t count, Rng& rng,
                              std::vector<AgentPair>& out) {
  for (std::size_t n = 0; n < count; ++n) {
    double total = 0.0;
    for (auto p : pool) total += matrix.prob(p);
    std::size_t pick = pool.size();
    if (total > 0.0) {
      const double u = uniform01(rng) * total;
      double acc = 0.0;
      std::size_t last_positive = pool.size();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const double w = matrix.prob(pool[i]);
        if (w <= 0.0) continue;
        last_positive = i;
        acc += w;
        if (u < acc) {
          pick = i;
          break;
        }
      }
      if (pick == pool.size()) pick = last_positive;  // rounding can leave u == acc
    } else {
      pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pool.size()));
    }
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
}

}  // namespace

PairDraw sample_pairs(const PairMatrix& matrix, std::size_t m, std::span<const AgentPair> memory_pool, std::size_t l,
                      std::uint64_t rng_seed, std::string seed_id) {
  const auto& all = matrix.non_base_pairs();
  if (m > all.size()) {
    throw PreconditionError("cannot draw " + std::to_string(m) + " distinct pairs from " + std::to_string(all.size()));
  }
  if (l > m) throw PreconditionError("memory draws l=" + std::to_string(l) + " exceed M=" + std::to_string(m));

  std::vector<AgentPair> pool;
  for (auto p : memory_pool) {
    if (!matrix.contains(p) || matrix.is_base(p)) {
      throw ContractError("memory pool pair " + p.to_string() + " is not a sampleable pair");
    }
    if (std::find(pool.begin(), pool.end(), p) == pool.end()) pool.push_back(p);
  }
  // Keep the matrix's row-major order so the draw does not depend on the
  // order in which the bank returned the pairs.
  std::sort(pool.begin(), pool.end());

  PairDraw draw;
  draw.seed_id = std::move(seed_id);
  draw.rng_seed = rng_seed;
  Rng rng(rng_seed);

  const std::size_t from_pool = std::min(l, pool.size());
  draw_without_replacement(matrix, pool, from_pool, rng, draw.sampled);
  draw.from_memory = from_pool;

  std::vector<AgentPair> rest;
  for (auto p : all) {
    if (std::find(draw.sampled.begin(), draw.sampled.end(), p) == draw.sampled.end()) rest.push_back(p);
  }
  draw_without_replacement(matrix, rest, m - from_pool, rng, draw.sampled);
  return draw;
}

}  // namespace pairforge
