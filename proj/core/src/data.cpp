#include "aflguard/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

#include "aflguard/error.hpp"

namespace aflguard {

namespace {

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  // explicit Fisher-Yates so the permutation depends only on the engine's output
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  }
}

// First k entries of a uniformly random k-permutation of `pool`.
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, std::size_t k,
                                                  Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

SyntheticRegression gen_synthetic_regression(std::uint64_t seed, std::size_t num_samples,
                                             std::size_t dim, double theta_std) {
  if (num_samples == 0 || dim == 0) {
    throw std::invalid_argument("gen_synthetic_regression: sizes must be positive");
  }
  if (!(theta_std > 0.0)) throw std::invalid_argument("gen_synthetic_regression: theta_std <= 0");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ParamVector theta(dim);
  for (double& x : theta) x = theta_std * normal(rng);

  Dataset ds{TaskKind::regression, 0, {}};
  ds.examples.reserve(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) {
    ParamVector u(dim);
    for (double& x : u) x = normal(rng);
    const double y = dot(u, theta) + normal(rng);
    ds.examples.push_back({std::move(u), y});
  }
  return {std::move(ds), std::move(theta)};
}

Dataset gen_synthetic_classification(std::uint64_t seed, const ClassificationMixtureSpec& mix) {
  if (mix.num_samples == 0 || mix.dim == 0 || mix.num_classes < 2 || mix.trigger_period == 0) {
    throw std::invalid_argument("gen_synthetic_classification: invalid mixture");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<ParamVector> means;
  for (std::size_t c = 0; c < mix.num_classes; ++c) {
    ParamVector mu(mix.dim);
    for (double& x : mu) x = mix.class_separation * normal(rng);
    for (std::size_t j = 0; j < mix.dim; j += mix.trigger_period) mu[j] += mix.trigger_offset;
    means.push_back(std::move(mu));
  }

  Dataset ds{TaskKind::classification, mix.num_classes, {}};
  ds.examples.reserve(mix.num_samples);
  for (std::size_t i = 0; i < mix.num_samples; ++i) {
    const std::size_t c = uniform_index(rng, mix.num_classes);
    ParamVector x = means[c];
    for (double& v : x) v += normal(rng);
    ds.examples.push_back({std::move(x), static_cast<double>(c)});
  }
  return ds;
}

TrainTestSplit split_train_test(const Dataset& ds, std::size_t train_count, std::uint64_t seed) {
  if (train_count == 0 || train_count >= ds.size()) {
    throw std::invalid_argument("split_train_test: need 0 < train_count < " +
                                std::to_string(ds.size()));
  }
  Rng rng(seed);
  auto idx = iota_indices(ds.size());
  shuffle_indices(idx, rng);
  TrainTestSplit out{ds.empty_like(), ds.empty_like()};
  out.train.examples.reserve(train_count);
  out.test.examples.reserve(ds.size() - train_count);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    (k < train_count ? out.train : out.test).examples.push_back(ds.examples[idx[k]]);
  }
  return out;
}

std::size_t noniid_group_of(std::size_t client, std::size_t num_clients, std::size_t num_groups) {
  // groups are contiguous id ranges; group g covers [g*n/C, (g+1)*n/C)
  return ((client + 1) * num_groups - 1) / num_clients;
}

std::vector<Dataset> partition(const Dataset& ds, const PartitionSpec& mix, std::uint64_t seed) {
  if (mix.num_clients == 0) throw std::invalid_argument("partition: num_clients must be >= 1");
  Rng rng(seed);
  std::vector<Dataset> clients(mix.num_clients, ds.empty_like());

  if (mix.mode == PartitionMode::iid) {
    auto idx = iota_indices(ds.size());
    shuffle_indices(idx, rng);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      clients[k % mix.num_clients].examples.push_back(ds.examples[idx[k]]);
    }
    return clients;
  }

  if (ds.kind != TaskKind::classification) {
    throw std::invalid_argument("partition: noniid mode requires a classification dataset");
  }
  const std::size_t C = ds.num_classes;
  if (mix.num_clients < C) {
    throw std::invalid_argument("partition: noniid mode needs at least one client per class group");
  }
  const double q = mix.noniid_degree;
  if (!(q >= 1.0 / static_cast<double>(C) - 1e-12) || !(q <= 1.0)) {
    throw std::invalid_argument("partition: noniid_degree must lie in [1/C, 1]");
  }

  std::vector<std::vector<std::size_t>> groups(C);
  for (std::size_t i = 0; i < mix.num_clients; ++i) {
    groups[noniid_group_of(i, mix.num_clients, C)].push_back(i);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const Example& ex : ds.examples) {
    const std::size_t label = class_label(ex);
    std::size_t g = label;
    if (unit(rng) >= q) {
      // uniform over the C-1 other groups
      g = uniform_index(rng, C - 1);
      if (g >= label) ++g;
    }
    const auto& members = groups[g];
    clients[members[uniform_index(rng, members.size())]].examples.push_back(ex);
  }
  return clients;
}

Dataset sample_trusted(const Dataset& ds, const TrustedSetSpec& mix, std::uint64_t seed) {
  if (mix.size == 0 || mix.size > ds.size()) {
    throw std::invalid_argument("sample_trusted: size must be in [1, " + std::to_string(ds.size()) +
                                "]");
  }
  Rng rng(seed);
  Dataset out = ds.empty_like();

  std::vector<std::size_t> picked;
  if (ds.kind == TaskKind::regression) {
    picked = draw_without_replacement(iota_indices(ds.size()), mix.size, rng);
  } else {
    if (!(mix.distribution_shift >= 0.0 && mix.distribution_shift <= 1.0)) {
      throw std::invalid_argument("sample_trusted: distribution_shift must be in [0, 1]");
    }
    std::vector<std::size_t> first_class;
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      (class_label(ds.examples[i]) == 0 ? first_class : others).push_back(i);
    }
    const auto from_first = static_cast<std::size_t>(
        std::llround(mix.distribution_shift * static_cast<double>(mix.size)));
    const std::size_t from_others = mix.size - from_first;
    if (from_first > first_class.size() || from_others > others.size()) {
      throw std::invalid_argument("sample_trusted: not enough examples in the required classes");
    }
    picked = draw_without_replacement(std::move(first_class), from_first, rng);
    auto rest = draw_without_replacement(std::move(others), from_others, rng);
    picked.insert(picked.end(), rest.begin(), rest.end());
  }

  out.examples.reserve(picked.size());
  for (std::size_t i : picked) out.examples.push_back(ds.examples[i]);
  return out;
}

std::vector<std::size_t> minibatch_indices(std::size_t population, std::size_t batch_size,
                                           Rng& rng) {
  if (batch_size == 0 || batch_size > population) {
    throw std::invalid_argument("minibatch: batch size " + std::to_string(batch_size) +
                                " outside [1, " + std::to_string(population) + "]");
  }
  return draw_without_replacement(iota_indices(population), batch_size, rng);
}

std::vector<Example> minibatch(const Dataset& ds, std::size_t batch_size, Rng& rng) {
  std::vector<Example> batch;
  batch.reserve(batch_size);
  for (std::size_t i : minibatch_indices(ds.size(), batch_size, rng)) {
    batch.push_back(ds.examples[i]);
  }
  return batch;
}

// --- CSV ---------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

[[noreturn]] void csv_fail(const std::filesystem::path& path, std::size_t line,
                           const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) csv_fail(path, 1, "missing header line");
  ++lineno;

  Dataset ds;
  {
    std::string_view h = trim(line);
    if (h.empty() || h.front() != '#') csv_fail(path, lineno, "header must start with '#'");
    std::istringstream tokens{std::string(h.substr(1))};
    std::string tok;
    bool have_kind = false;
    while (tokens >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) csv_fail(path, lineno, "bad header token '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string value = tok.substr(eq + 1);
      if (key == "kind") {
        if (value == "regression") {
          ds.kind = TaskKind::regression;
        } else if (value == "classification") {
          ds.kind = TaskKind::classification;
        } else {
          csv_fail(path, lineno, "unknown kind '" + value + "'");
        }
        have_kind = true;
      } else if (key == "classes") {
        double c = 0;
        if (!parse_double(value, c) || c < 2 || c != std::floor(c)) {
          csv_fail(path, lineno, "classes must be an integer >= 2");
        }
        ds.num_classes = static_cast<std::size_t>(c);
      } else {
        csv_fail(path, lineno, "unknown header key '" + key + "'");
      }
    }
    if (!have_kind) csv_fail(path, lineno, "header lacks kind=");
    if (ds.kind == TaskKind::classification && ds.num_classes < 2) {
      csv_fail(path, lineno, "classification header lacks classes=");
    }
    if (ds.kind == TaskKind::regression) ds.num_classes = 0;
  }

  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    std::vector<double> values;
    std::size_t start = 0;
    while (true) {
      const auto comma = row.find(',', start);
      const auto cell = row.substr(start, comma == std::string_view::npos ? row.npos : comma - start);
      double v = 0;
      if (!parse_double(cell, v) || !std::isfinite(v)) {
        csv_fail(path, lineno, "cannot parse '" + std::string(trim(cell)) + "' as a finite real");
      }
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (values.size() < 2) csv_fail(path, lineno, "need at least one feature and a label");
    if (width == 0) width = values.size();
    if (values.size() != width) {
      csv_fail(path, lineno,
               "expected " + std::to_string(width) + " columns, got " + std::to_string(values.size()));
    }
    const double y = values.back();
    values.pop_back();
    if (ds.kind == TaskKind::classification &&
        (y < 0 || y != std::floor(y) || y >= static_cast<double>(ds.num_classes))) {
      csv_fail(path, lineno, "label must be an integer class in [0, " +
                                 std::to_string(ds.num_classes) + ")");
    }
    ds.examples.push_back({ParamVector::checked(std::move(values)), y});
  }
  if (in.bad()) throw std::runtime_error("read error on " + path.string());
  return ds;
}

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (ds.kind == TaskKind::regression) {
    out << "# kind=regression\n";
  } else {
    out << "# kind=classification classes=" << ds.num_classes << "\n";
  }
  std::string row;
  for (const auto& ex : ds.examples) {
    row.clear();
    for (double v : ex.features) {
      append_number(row, v);
      row.push_back(',');
    }
    append_number(row, ex.y);
    row.push_back('\n');
    out << row;
  }
  if (!out) throw std::runtime_error("write error on " + path.string());
}

}  // namespace aflguard
