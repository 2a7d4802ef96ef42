#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "aflguard/dataset.hpp"
#include "aflguard/vecmath.hpp"

namespace aflguard {

/// Every randomized routine in the simulator draws from this engine.
using Rng = std::mt19937_64;

struct SyntheticRegression {
  Dataset data;
  ParamVector true_model;
};

/// Linear-Gaussian data: u ~ N(0, I), theta* entries ~ N(0, theta_std^2),
/// y = <u, theta*> + e with e ~ N(0, 1).
SyntheticRegression gen_synthetic_regression(std::uint64_t seed, std::size_t num_samples,
                                             std::size_t dim, double theta_std = 5.0);

struct ClassificationMixtureSpec {
  std::size_t num_samples = 6000;
  std::size_t dim = 120;
  std::size_t num_classes = 6;
  double class_separation = 0.35;  // std of the per-class mean entries
  double trigger_offset = 2.0;     // mean shift on coordinates 0, period, 2*period, ...
  std::size_t trigger_period = 20;
};

/// Gaussian-mixture classification data with uniform class priors and unit
/// within-class noise. The offset on the trigger coordinates gives the
/// backdoor trigger (zeroing those coordinates) a linearly visible signature.
Dataset gen_synthetic_classification(std::uint64_t seed, const ClassificationMixtureSpec& mix);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

TrainTestSplit split_train_test(const Dataset& ds, std::size_t train_count, std::uint64_t seed);

enum class PartitionMode { iid, noniid };

struct PartitionSpec {
  std::size_t num_clients = 100;
  PartitionMode mode = PartitionMode::iid;
  double noniid_degree = 0.5;  // q, classification only
};

/// Assigns every example to exactly one client.
///
/// iid: shuffle, then deal round-robin (client sizes differ by at most one).
/// noniid: clients are split into C near-equal groups; an example of class c
/// goes to a uniform client of group c with probability q, otherwise to a
/// uniform client of a uniformly chosen other group.
std::vector<Dataset> partition(const Dataset& ds, const PartitionSpec& plan, std::uint64_t seed);

/// Index of the client group that client `client` belongs to under noniid partitioning.
std::size_t noniid_group_of(std::size_t client, std::size_t num_clients, std::size_t num_groups);

struct TrustedSetSpec {
  std::size_t size = 100;
  double distribution_shift = 0.5;  // classification only
};

/// Server-side clean sample. Classification: round(DS * size) examples from
/// class 0, the rest uniformly from the other classes. Regression: uniform.
/// Sampling is without replacement.
Dataset sample_trusted(const Dataset& ds, const TrustedSetSpec& trusted, std::uint64_t seed);

/// Uniform sample of `batch_size` distinct examples.
std::vector<Example> minibatch(const Dataset& ds, std::size_t batch_size, Rng& rng);

/// Same draw as `minibatch`, returning positions into `ds.examples`.
std::vector<std::size_t> minibatch_indices(std::size_t population, std::size_t batch_size,
                                           Rng& rng);

// CSV: first line "# kind=regression" or "# kind=classification classes=C",
// then one example per line, features first and the label last.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace aflguard
