#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hetflow {

/// One input image: the unit of work. Size in MB is the sole covariate the
/// execution-time models use.
struct ImageSpec {
  std::string id;
  double size_mb = 0.0;

  bool operator==(const ImageSpec&) const = default;
};

using Workload = std::vector<ImageSpec>;

/// Parameters for synthesizing a workload whose sizes follow a truncated
/// normal distribution.
struct WorkloadSpec {
  std::size_t count = 0;
  double mean_mb = 0.0;
  double std_mb = 1.0;
  double min_mb = 1.0;
  double max_mb = 2.0;
  std::uint64_t seed = 0;
};

/// Validates the spec fields; throws ConfigError on violation.
void validate(const WorkloadSpec& spec);

/// Draws `count` image sizes from N(mean_mb, std_mb), rejecting and
/// resampling any draw outside [min_mb, max_mb]. Deterministic for a given
/// seed. Image ids are "img-000000", "img-000001", ...
Workload generate_workload(const WorkloadSpec& spec);

/// Reads a workload manifest (CSV, header `id,size_mb`). Images are returned
/// in file order; duplicate ids and non-positive sizes are rejected.
Workload load_workload(const std::string& path);
Workload read_workload_csv(std::istream& in, const std::string& origin);

/// Writes the manifest format accepted by load_workload.
void save_workload(const Workload& workload, const std::string& path);
void write_workload_csv(const Workload& workload, std::ostream& out);

double total_size_mb(const Workload& workload);

/// Stable content fingerprint, used to check that compared runs saw the same
/// input.
std::uint64_t fingerprint(const Workload& workload);

} // namespace hetflow
