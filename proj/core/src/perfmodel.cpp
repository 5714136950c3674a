#include "hetflow/perfmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hetflow/errors.hpp"
#include "hetflow/io_util.hpp"

namespace hetflow {

std::string to_string(DesignId d) {
  switch (d) {
  case DesignId::D1:
    return "d1";
  case DesignId::D2:
    return "d2";
  case DesignId::D2A:
    return "d2a";
  }
  return "?";
}

std::string to_string(TaskKind k) {
  return k == TaskKind::Tiling ? "tiling" : "counting";
}

DesignId design_from_string(const std::string& s) {
  if (s == "d1" || s == "D1")
    return DesignId::D1;
  if (s == "d2" || s == "D2")
    return DesignId::D2;
  if (s == "d2a" || s == "D2A" || s == "d2.a" || s == "D2.A")
    return DesignId::D2A;
  throw InputError("unknown design id '" + s + "' (expected d1, d2 or d2a)");
}

TaskKind kind_from_string(const std::string& s) {
  if (s == "tiling" || s == "t1" || s == "T1")
    return TaskKind::Tiling;
  if (s == "counting" || s == "t2" || s == "T2")
    return TaskKind::Counting;
  throw InputError("unknown task kind '" + s + "' (expected tiling/counting)");
}

double predict_mean(const ExecTimeModel& model, double size_mb) {
  if (size_mb <= 0.0)
    throw InputError("predict_mean: size_mb must be positive, got " + format_double(size_mb));
  return model.alpha * size_mb + model.beta;
}

double sample_duration(const ExecTimeModel& model, double size_mb, Rng& rng) {
  double mean = predict_mean(model, size_mb);
  double d = mean + (model.noise_std > 0.0 ? rng.gaussian(0.0, model.noise_std) : 0.0);
  return std::max(kDurationFloorSeconds, d);
}

FitResult fit_linear(const std::vector<SizeDurationPair>& pairs) {
  const std::size_t n = pairs.size();
  if (n < 3)
    throw FitError("fit_linear: need at least 3 points, got " + std::to_string(n));

  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : pairs) {
    sx += x;
    sy += y;
  }
  const double xbar = sx / static_cast<double>(n);
  const double ybar = sy / static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pairs) {
    sxx += (x - xbar) * (x - xbar);
    sxy += (x - xbar) * (y - ybar);
  }
  if (sxx == 0.0)
    throw FitError("fit_linear: all sizes are equal, slope is undetermined");

  FitResult fit;
  fit.n_points = n;
  fit.alpha = sxy / sxx;
  fit.beta = ybar - fit.alpha * xbar;

  double sse = 0.0, sst = 0.0;
  for (const auto& [x, y] : pairs) {
    const double resid = y - (fit.alpha * x + fit.beta);
    sse += resid * resid;
    sst += (y - ybar) * (y - ybar);
  }
  fit.r_squared = sst > 0.0 ? 1.0 - sse / sst : 1.0;
  fit.s_error = std::sqrt(std::max(0.0, sse) / static_cast<double>(n - 2));
  return fit;
}

namespace {

// Linear interpolation between closest ranks over a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty())
    return 0.0;
  if (sorted.size() == 1)
    return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size())
    return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

void finalize_bin(SizeBin& bin) {
  if (bin.samples.empty())
    return;
  const std::size_t n = bin.samples.size();
  double sum = 0.0;
  for (double v : bin.samples)
    sum += v;
  bin.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : bin.samples)
    ss += (v - bin.mean) * (v - bin.mean);
  bin.stddev = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;

  std::vector<double> sorted = bin.samples;
  std::sort(sorted.begin(), sorted.end());
  bin.q1 = quantile_sorted(sorted, 0.25);
  bin.median = quantile_sorted(sorted, 0.5);
  bin.q3 = quantile_sorted(sorted, 0.75);

  const double iqr = bin.q3 - bin.q1;
  const double lo_fence = bin.q1 - 1.5 * iqr;
  const double hi_fence = bin.q3 + 1.5 * iqr;
  bin.whisker_lo = sorted.front();
  bin.whisker_hi = sorted.back();
  for (double v : sorted) {
    if (v >= lo_fence) {
      bin.whisker_lo = v;
      break;
    }
  }
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
    if (*it <= hi_fence) {
      bin.whisker_hi = *it;
      break;
    }
  }
}

} // namespace

std::vector<SizeBin> bin_by_size(const std::vector<SizeDurationPair>& pairs, double bin_width_mb,
                                 double lo_mb, double hi_mb) {
  if (bin_width_mb <= 0.0)
    throw InputError("bin_by_size: bin width must be positive");
  if (hi_mb <= lo_mb)
    throw InputError("bin_by_size: range upper bound must exceed lower bound");

  const int n_bins = static_cast<int>(std::ceil((hi_mb - lo_mb) / bin_width_mb - 1e-12));
  std::vector<SizeBin> bins(static_cast<std::size_t>(n_bins));
  for (int i = 0; i < n_bins; ++i) {
    bins[static_cast<std::size_t>(i)].lower_mb = lo_mb + bin_width_mb * i;
    bins[static_cast<std::size_t>(i)].upper_mb = lo_mb + bin_width_mb * (i + 1);
  }

  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& [size, dur] = pairs[p];
    if (size < lo_mb || size > hi_mb)
      throw InputError("bin_by_size: pair #" + std::to_string(p + 1) + " (size " +
                       format_double(size) + " MB) outside range [" + format_double(lo_mb) + ", " +
                       format_double(hi_mb) + "]");
    int idx = static_cast<int>((size - lo_mb) / bin_width_mb);
    if (idx >= n_bins)
      idx = n_bins - 1; // upper edge of the last bin is inclusive
    bins[static_cast<std::size_t>(idx)].samples.push_back(dur);
  }
  for (auto& bin : bins)
    finalize_bin(bin);
  return bins;
}

std::string bins_to_csv(const std::vector<SizeBin>& bins) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,n,mean,std,q1,median,q3\n";
  for (const auto& b : bins) {
    out << format_double(b.lower_mb) << ',' << format_double(b.upper_mb) << ',' << b.count();
    if (b.count() == 0) {
      out << ",,,,,\n";
    } else {
      out << ',' << format_double(b.mean) << ',' << format_double(b.stddev) << ','
          << format_double(b.q1) << ',' << format_double(b.median) << ',' << format_double(b.q3)
          << '\n';
    }
  }
  return out.str();
}

std::vector<SizeDurationPair> restrict_to_representative_bins(
    const std::vector<SizeDurationPair>& pairs, int first_bin, int last_bin, double lo_mb,
    double width_mb, int bin_count) {
  if (first_bin > last_bin)
    throw InputError("restrict_to_representative_bins: first_bin > last_bin");
  const double lower =
      first_bin <= 1 ? -std::numeric_limits<double>::infinity() : lo_mb + width_mb * (first_bin - 1);
  const double upper =
      last_bin >= bin_count ? std::numeric_limits<double>::infinity() : lo_mb + width_mb * last_bin;

  std::vector<SizeDurationPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs)
    if (p.first >= lower && p.first < upper)
      out.push_back(p);
  return out;
}

const ExecTimeModel& ModelRegistry::at(DesignId d, TaskKind k) const {
  auto it = models_.find({d, k});
  if (it == models_.end())
    throw ConfigError("model registry has no entry for (" + to_string(d) + ", " + to_string(k) +
                      ")");
  return it->second;
}

std::optional<ExecTimeModel> ModelRegistry::find(DesignId d, TaskKind k) const {
  auto it = models_.find({d, k});
  if (it == models_.end())
    return std::nullopt;
  return it->second;
}

void ModelRegistry::put(ExecTimeModel model) {
  models_[{model.design, model.kind}] = model;
}

std::string ModelRegistry::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& [key, model] : models_) {
    j[to_string(key.first)][to_string(key.second)] = {
        {"alpha", model.alpha}, {"beta", model.beta}, {"noise_std", model.noise_std}};
  }
  return j.dump(2) + "\n";
}

ModelRegistry ModelRegistry::from_json(const std::string& json_text) {
  ModelRegistry reg;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model registry: invalid JSON: ") + e.what());
  }
  for (auto& [design_key, kinds] : j.items()) {
    DesignId d = design_from_string(design_key);
    for (auto& [kind_key, params] : kinds.items()) {
      ExecTimeModel m;
      m.design = d;
      m.kind = kind_from_string(kind_key);
      m.alpha = params.at("alpha").get<double>();
      m.beta = params.at("beta").get<double>();
      m.noise_std = params.value("noise_std", 0.0);
      if (m.alpha < 0.0 || m.beta < 0.0 || m.noise_std < 0.0)
        throw InputError("model registry: negative parameter for (" + design_key + ", " +
                         kind_key + ")");
      reg.put(m);
    }
  }
  return reg;
}

ModelRegistry ModelRegistry::load(const std::string& path) {
  return from_json(read_file(path));
}

void ModelRegistry::save(const std::string& path) const {
  atomic_write_file(path, to_json());
}

ModelRegistry default_registry() {
  ModelRegistry reg;
  reg.put({1.92e-2, 60.49, 1.93, DesignId::D1, TaskKind::Tiling});
  reg.put({5.21e-2, 128.53, 5.73, DesignId::D1, TaskKind::Counting});
  reg.put({3.174e-2, 64.81, 5.50, DesignId::D2, TaskKind::Tiling});
  reg.put({4.71e-2, 95.83, 5.96, DesignId::D2, TaskKind::Counting});
  reg.put({2.74e-2, 49.03, 3.89, DesignId::D2A, TaskKind::Tiling});
  reg.put({4.8e-2, 87.36, 6.19, DesignId::D2A, TaskKind::Counting});
  return reg;
}

std::string fit_result_to_json(const FitResult& fit) {
  nlohmann::ordered_json j = {{"alpha", fit.alpha},
                              {"beta", fit.beta},
                              {"r_squared", fit.r_squared},
                              {"s_error", fit.s_error},
                              {"n_points", fit.n_points}};
  return j.dump(2) + "\n";
}

} // namespace hetflow
