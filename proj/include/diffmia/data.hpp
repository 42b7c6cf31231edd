#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffmia/diffusion.hpp"

namespace diffmia {

// Synthetic dataset with its generator parameters and the cumulative
// standardization applied to it.
struct Dataset {
  std::string name;
  int dim = 0;
  int components = 1;
  double separation = 0.0;
  uint64_t seed = 0;
  std::vector<std::vector<double>> points;
  std::vector<double> standardize_mean;   // cumulative shift per coordinate
  std::vector<double> standardize_scale;  // cumulative scale per coordinate
};

// Disjoint member/non-member pools plus a balanced query subset of each.
struct SplitSpec {
  std::vector<int> member_ids;
  std::vector<int> nonmember_ids;
  std::vector<int> query_member_ids;
  std::vector<int> query_nonmember_ids;
  uint64_t seed = 0;
};

struct QuerySample {
  int64_t id = 0;
  std::vector<double> x;
  bool is_member = false;
};
using QuerySet = std::vector<QuerySample>;

// Gaussian mixture with component means spaced `separation` apart (scaled
// axis vectors when components <= dim, a circle in the first two coordinates
// otherwise), unit covariance, round-robin component assignment. The result
// is standardized over all its points.
Dataset make_gaussian_mixture(int n, int components, int dim, double separation, uint64_t seed);

// Standardizes every point using the per-coordinate mean/deviation of the
// subset `ids`, composing with any previous standardization.
void standardize(Dataset& dataset, const std::vector<int>& ids);

// Random disjoint member/non-member pools with balanced query subsets.
SplitSpec split(const Dataset& dataset, int member_count, int query_size, uint64_t seed);

std::vector<std::vector<double>> gather(const Dataset& dataset, const std::vector<int>& ids);
QuerySet make_query_set(const Dataset& dataset, const SplitSpec& spec);

// Checkpoint container errors, one kind per failure mode.
class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, VersionMismatch, Truncated, ShapeMismatch };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Self-describing binary container: header (format version, data_dim,
// parameterization, schedule kind/steps/alphas as 64-bit little-endian),
// then named parameter arrays with shapes, values in 32-bit little-endian.
// Round trips are bit-exact.
void save_checkpoint(const DiffusionModel& model, const std::string& path);
DiffusionModel load_checkpoint(const std::string& path);

// Dataset CSV (header row of coordinate names) plus a JSON sidecar with the
// generator parameters.
void save_dataset(const Dataset& dataset, const std::string& csv_path);
Dataset load_dataset(const std::string& csv_path);

// Plain numeric CSV for sample sets (ancestral samples, reconstruction sets).
void save_vectors_csv(const std::vector<std::vector<double>>& rows, const std::string& path);
std::vector<std::vector<double>> load_vectors_csv(const std::string& path);

// Loss-trajectory cache: one row per (sample, step) with columns
// sample_id, kind, t, value, noise_draws.
void save_trajectories_csv(const std::vector<LossTrajectory>& trajectories,
                           const std::string& path);
std::vector<LossTrajectory> load_trajectories_csv(const std::string& path);

}  // namespace diffmia
