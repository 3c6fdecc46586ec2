#include "ipaths/metrics.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ipaths {

namespace {

void check_table(const AttributionTable& table, int target) {
  if (table.rows.empty() || table.rows.front().empty())
    throw std::invalid_argument("empty attribution table");
  if (target < 0 || target >= table.num_paths())
    throw std::invalid_argument("target path out of range");
  if (table.num_paths() < 2)
    throw std::invalid_argument("comparison pool is empty");
}

}  // namespace

double t_value_exact(const AttributionTable& table, int target) {
  check_table(table, target);
  std::uint64_t wins = 0, total = 0;
  for (const auto& row : table.rows) {
    const double a = row[static_cast<size_t>(target)];
    for (int p = 0; p < table.num_paths(); ++p) {
      if (p == target) continue;
      wins += a > row[static_cast<size_t>(p)] ? 1 : 0;  // ties count against
      ++total;
    }
  }
  return static_cast<double>(wins) / static_cast<double>(total);
}

double t_value_mc(const AttributionTable& table, int target, std::int64_t samples,
                  std::uint64_t seed) {
  check_table(table, target);
  if (samples <= 0) throw std::invalid_argument("sample budget must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_sentence(0, table.num_sentences() - 1);
  // Draw from the pool without the target by shifting the upper half.
  std::uniform_int_distribution<int> pick_other(0, table.num_paths() - 2);

  std::int64_t wins = 0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const auto& row = table.rows[static_cast<size_t>(pick_sentence(rng))];
    int p = pick_other(rng);
    if (p >= target) ++p;
    wins += row[static_cast<size_t>(target)] > row[static_cast<size_t>(p)] ? 1 : 0;
  }
  return static_cast<double>(wins) / static_cast<double>(samples);
}

double t_value(const AttributionTable& table, int target, std::int64_t samples,
               std::uint64_t seed, int exact_threshold) {
  if (table.num_paths() <= exact_threshold) return t_value_exact(table, target);
  return t_value_mc(table, target, samples, seed);
}

ShareResult share(const AttributionTable& table, int target) {
  check_table(table, target);
  ShareResult out;
  double acc = 0.0;
  double mean_target = 0.0;
  int used = 0;
  for (const auto& row : table.rows) {
    const double a = row[static_cast<size_t>(target)];
    mean_target += a;
    double pool = 0.0;
    if (a >= 0.0) {
      for (double x : row) pool += x > 0.0 ? x : 0.0;
    } else {
      for (double x : row) pool += x < 0.0 ? -x : 0.0;
    }
    if (pool == 0.0) {
      ++out.skipped;
      continue;
    }
    acc += std::abs(a) / pool;
    ++used;
  }
  if (used == 0) throw std::invalid_argument("all sentences skipped in share");
  out.share = acc / static_cast<double>(used);
  out.positive = mean_target / static_cast<double>(table.num_sentences()) >= 0.0;
  return out;
}

std::vector<double> neuron_t_values(const AttributionTable& table,
                                    const std::set<int>& exclude) {
  if (table.rows.empty() || table.rows.front().empty())
    throw std::invalid_argument("empty attribution table");
  const int H = table.num_paths();
  std::vector<int> pool;
  for (int p = 0; p < H; ++p)
    if (!exclude.count(p)) pool.push_back(p);
  if (pool.size() <= 1) throw std::invalid_argument("exclusion empties the pool");

  std::vector<double> out(static_cast<size_t>(H), 0.0);
  for (int target = 0; target < H; ++target) {
    std::uint64_t wins = 0, total = 0;
    for (const auto& row : table.rows) {
      const double a = row[static_cast<size_t>(target)];
      for (int p : pool) {
        if (p == target) continue;
        wins += a > row[static_cast<size_t>(p)] ? 1 : 0;
        ++total;
      }
    }
    out[static_cast<size_t>(target)] =
        static_cast<double>(wins) / static_cast<double>(total);
  }
  return out;
}

double p_plus(const std::vector<double>& totals) {
  if (totals.empty()) throw std::invalid_argument("no sentences");
  int pos = 0;
  for (double t : totals) pos += t > 0.0 ? 1 : 0;
  return static_cast<double>(pos) / static_cast<double>(totals.size());
}

}  // namespace ipaths
