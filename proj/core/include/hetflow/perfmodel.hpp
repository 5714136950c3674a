#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetflow/rng.hpp"

namespace hetflow {

enum class DesignId { D1, D2, D2A };
enum class TaskKind { Tiling, Counting };

std::string to_string(DesignId d);
std::string to_string(TaskKind k);
DesignId design_from_string(const std::string& s);
TaskKind kind_from_string(const std::string& s);

/// Linear execution-time model: mean duration = alpha * size_mb + beta,
/// with homoscedastic Gaussian noise of sigma = noise_std around the mean.
struct ExecTimeModel {
  double alpha = 0.0;     // seconds per MB
  double beta = 0.0;      // seconds
  double noise_std = 0.0; // seconds
  DesignId design = DesignId::D1;
  TaskKind kind = TaskKind::Tiling;
};

/// Sampled durations never go below this floor, so a large noise draw cannot
/// produce a non-positive task time.
inline constexpr double kDurationFloorSeconds = 0.001;

/// Mean duration for an image of the given size. Throws InputError for
/// non-positive sizes.
double predict_mean(const ExecTimeModel& model, double size_mb);

/// predict_mean plus one Gaussian noise draw, floored at
/// kDurationFloorSeconds. Deterministic given the rng state.
double sample_duration(const ExecTimeModel& model, double size_mb, Rng& rng);

struct FitResult {
  double alpha = 0.0;
  double beta = 0.0;
  double r_squared = 0.0;
  double s_error = 0.0; // sqrt(SSE / (n - 2))
  std::size_t n_points = 0;
};

using SizeDurationPair = std::pair<double, double>; // (size_mb, duration_s)

/// Ordinary least squares y = alpha*x + beta. Requires >= 3 points and at
/// least two distinct sizes; throws FitError otherwise.
/// r_squared = 1 - SSE/SST (1.0 when SST == 0, which for OLS implies SSE == 0).
FitResult fit_linear(const std::vector<SizeDurationPair>& pairs);

/// Per-bin sample statistics. std uses the sample (n-1) convention;
/// quartiles use linear interpolation between closest ranks; whiskers are
/// the most extreme samples within 1.5*IQR of the quartiles.
struct SizeBin {
  double lower_mb = 0.0;
  double upper_mb = 0.0;
  std::vector<double> samples;
  double mean = 0.0;
  double stddev = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;

  std::size_t count() const { return samples.size(); }
};

/// Partitions pairs into ceil((hi-lo)/width) bins by size. Lower edge
/// inclusive, upper exclusive; the last bin includes its upper edge. Empty
/// bins are kept (statistics zeroed, samples empty). A pair outside [lo, hi]
/// raises InputError naming the offending pair.
std::vector<SizeBin> bin_by_size(const std::vector<SizeDurationPair>& pairs, double bin_width_mb,
                                 double lo_mb, double hi_mb);

std::string bins_to_csv(const std::vector<SizeBin>& bins);

/// Default bin grid used throughout: 22 bins of 125 MB over [50, 2800] MB.
inline constexpr double kDefaultBinLoMb = 50.0;
inline constexpr double kDefaultBinWidthMb = 125.0;
inline constexpr int kDefaultBinCount = 22;

/// Keeps only pairs whose size falls in bins [first_bin, last_bin]
/// (1-based) of the given grid. When first_bin <= 1 the lower cut is open
/// (nothing excluded below) and when last_bin >= the bin count the upper cut
/// is open, so [1, n] is the identity. The head and tail of the size
/// distribution carry too few samples to constrain the fit; the default
/// window [4, 18] drops them.
std::vector<SizeDurationPair> restrict_to_representative_bins(
    const std::vector<SizeDurationPair>& pairs, int first_bin = 4, int last_bin = 18,
    double lo_mb = kDefaultBinLoMb, double width_mb = kDefaultBinWidthMb,
    int bin_count = kDefaultBinCount);

/// Fitted parameters per (design, task kind).
class ModelRegistry {
public:
  const ExecTimeModel& at(DesignId d, TaskKind k) const;
  std::optional<ExecTimeModel> find(DesignId d, TaskKind k) const;
  void put(ExecTimeModel model);
  bool has(DesignId d, TaskKind k) const { return find(d, k).has_value(); }
  std::size_t size() const { return models_.size(); }

  /// JSON: {"d1": {"tiling": {"alpha":..,"beta":..,"noise_std":..}, ...}, ...}
  /// "t1"/"t2" are accepted as kind aliases on load.
  std::string to_json() const;
  static ModelRegistry from_json(const std::string& json_text);
  static ModelRegistry load(const std::string& path);
  void save(const std::string& path) const;

private:
  std::map<std::pair<DesignId, TaskKind>, ExecTimeModel> models_;
};

/// The reference parameter sets for all six (design, task) combinations,
/// with noise_std set to each fit's standard error.
ModelRegistry default_registry();

std::string fit_result_to_json(const FitResult& fit);

} // namespace hetflow
