#include <cmath>
#include <vector>

#include <doctest.h>

#include "hetflow/errors.hpp"
#include "hetflow/perfmodel.hpp"

using namespace hetflow;

namespace {

// Independent OLS oracle: solve the normal equations with Cramer's rule on
// raw (uncentered) sums, unlike the library's centered-sum implementation.
struct OlsOracle {
  double alpha, beta, r_squared, s_error;
};

OlsOracle normal_equations(const std::vector<SizeDurationPair>& pts) {
  double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double det = n * sxx - sx * sx;
  double alpha = (n * sxy - sx * sy) / det;
  double beta = (sxx * sy - sx * sxy) / det;
  double sse = 0, sst = 0;
  double ybar = sy / n;
  for (auto [x, y] : pts) {
    double e = y - (alpha * x + beta);
    sse += e * e;
    sst += (y - ybar) * (y - ybar);
  }
  double r2 = sst == 0.0 ? 1.0 : 1.0 - sse / sst;
  double se = pts.size() > 2 ? std::sqrt(sse / (n - 2)) : 0.0;
  return {alpha, beta, r2, se};
}

} // namespace

TEST_CASE("enum string round trips") {
  CHECK(to_string(DesignId::D2A) == "d2a");
  CHECK(design_from_string("d1") == DesignId::D1);
  CHECK(design_from_string("D2") == DesignId::D2);
  CHECK_THROWS_AS(design_from_string("d3"), InputError);
  CHECK(to_string(TaskKind::Counting) == "counting");
  CHECK(kind_from_string("tiling") == TaskKind::Tiling);
  CHECK(kind_from_string("t2") == TaskKind::Counting);
  CHECK_THROWS_AS(kind_from_string("t3"), InputError);
}

TEST_CASE("predict_mean matches hand values") {
  ModelRegistry reg = default_registry();
  // alpha * 1000 + beta for the two Design 1 models.
  CHECK(predict_mean(reg.at(DesignId::D1, TaskKind::Tiling), 1000.0) ==
        doctest::Approx(79.69).epsilon(1e-12));
  CHECK(predict_mean(reg.at(DesignId::D1, TaskKind::Counting), 1000.0) ==
        doctest::Approx(180.63).epsilon(1e-12));
  CHECK_THROWS_AS(predict_mean(reg.at(DesignId::D1, TaskKind::Tiling), 0.0), InputError);
  CHECK_THROWS_AS(predict_mean(reg.at(DesignId::D1, TaskKind::Tiling), -3.0), InputError);
}

TEST_CASE("sample_duration is floored and deterministic") {
  ExecTimeModel tiny{1e-6, 0.0, 50.0, DesignId::D1, TaskKind::Tiling};
  Rng rng(5);
  bool floored = false;
  for (int i = 0; i < 200; ++i) {
    double d = sample_duration(tiny, 1.0, rng);
    CHECK(d >= kDurationFloorSeconds);
    if (d == kDurationFloorSeconds)
      floored = true;
  }
  CHECK(floored); // sigma dwarfs the mean, so some draws must hit the floor

  Rng a(7), b(7);
  ExecTimeModel m{0.02, 60.0, 5.0, DesignId::D1, TaskKind::Tiling};
  for (int i = 0; i < 20; ++i)
    CHECK(sample_duration(m, 800.0, a) == sample_duration(m, 800.0, b));

  ExecTimeModel exact{0.02, 60.0, 0.0, DesignId::D1, TaskKind::Tiling};
  CHECK(sample_duration(exact, 800.0, a) == doctest::Approx(76.0).epsilon(1e-12));
}

TEST_CASE("fit recovers an exact line") {
  std::vector<SizeDurationPair> pts;
  for (int x = 1; x <= 10; ++x)
    pts.emplace_back(x, 2.0 * x + 1.0);
  FitResult f = fit_linear(pts);
  CHECK(f.alpha == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.beta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.r_squared == 1.0);
  CHECK(f.s_error == doctest::Approx(0.0));
  CHECK(f.n_points == 10);
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS(fit_linear({}), FitError);
  CHECK_THROWS_AS(fit_linear({{1, 2}, {2, 3}}), FitError); // fewer than 3 points
  CHECK_THROWS_AS(fit_linear({{5, 1}, {5, 2}, {5, 3}}), FitError); // no size spread
}

TEST_CASE("fit matches the normal-equations oracle") {
  Rng rng(2024);
  for (int inst = 0; inst < 5; ++inst) {
    std::vector<SizeDurationPair> pts;
    int n = 5 + inst * 5;
    for (int i = 0; i < n; ++i) {
      double x = rng.uniform(100.0, 2500.0);
      double y = 0.03 * x + 50.0 + rng.gaussian(0.0, 4.0);
      pts.emplace_back(x, y);
    }
    FitResult f = fit_linear(pts);
    OlsOracle o = normal_equations(pts);
    CHECK(f.alpha == doctest::Approx(o.alpha).epsilon(1e-9));
    CHECK(f.beta == doctest::Approx(o.beta).epsilon(1e-9));
    CHECK(f.r_squared == doctest::Approx(o.r_squared).epsilon(1e-9));
    CHECK(f.s_error == doctest::Approx(o.s_error).epsilon(1e-9));
  }
}

TEST_CASE("binning statistics on a two-sample bin") {
  std::vector<SizeDurationPair> pts = {{100.0, 1.0}, {110.0, 3.0}};
  auto bins = bin_by_size(pts, 125.0, 50.0, 300.0);
  REQUIRE(bins.size() == 2);
  const SizeBin& b = bins[0];
  CHECK(b.count() == 2);
  CHECK(b.mean == doctest::Approx(2.0));
  CHECK(b.stddev == doctest::Approx(std::sqrt(2.0)));
  CHECK(b.q1 == doctest::Approx(1.5));
  CHECK(b.median == doctest::Approx(2.0));
  CHECK(b.q3 == doctest::Approx(2.5));
  CHECK(bins[1].count() == 0); // empty bins are kept
}

TEST_CASE("bin edges and membership") {
  // Default grid: bin k (1-based) spans [50+125(k-1), 50+125k).
  std::vector<SizeDurationPair> pts = {
      {50.0, 1.0},     // first bin, lower edge inclusive
      {174.999, 1.0},  // still first bin
      {175.0, 1.0},    // second bin
      {2800.0, 1.0},   // last bin includes its upper edge
  };
  auto bins = bin_by_size(pts, kDefaultBinWidthMb, kDefaultBinLoMb, 2800.0);
  REQUIRE(bins.size() == 22);
  CHECK(bins[0].count() == 2);
  CHECK(bins[1].count() == 1);
  CHECK(bins[21].count() == 1);
  CHECK(bins[3].lower_mb == doctest::Approx(425.0));
  CHECK(bins[17].upper_mb == doctest::Approx(2300.0));

  CHECK_THROWS_WITH_AS(bin_by_size({{10.0, 1.0}}, 125.0, 50.0, 2800.0).size(),
                       doctest::Contains("pair #1"), InputError);
  CHECK_THROWS_AS(bin_by_size({{2800.1, 1.0}}, 125.0, 50.0, 2800.0), InputError);
}

TEST_CASE("representative-bin restriction") {
  std::vector<SizeDurationPair> pts = {
      {424.999, 1.0}, // below bin 4
      {425.0, 2.0},   // bin 4 lower edge, kept
      {1000.0, 3.0},  // interior
      {2299.999, 4.0}, // bin 18, kept
      {2300.0, 5.0},  // bin 19, dropped
      {30.0, 6.0},    // far below the grid
      {5000.0, 7.0},  // far above the grid
  };
  auto kept = restrict_to_representative_bins(pts);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].first == 425.0);
  CHECK(kept[1].first == 1000.0);
  CHECK(kept[2].first == 2299.999);

  // [1, bin_count] disables both cuts, so even out-of-grid sizes survive.
  auto all = restrict_to_representative_bins(pts, 1, kDefaultBinCount);
  CHECK(all.size() == pts.size());
}

TEST_CASE("registry holds the six reference parameter sets") {
  ModelRegistry reg = default_registry();
  REQUIRE(reg.size() == 6);
  struct Row {
    DesignId d;
    TaskKind k;
    double alpha, beta, noise;
  };
  const Row rows[] = {
      {DesignId::D1, TaskKind::Tiling, 1.92e-2, 60.49, 1.93},
      {DesignId::D1, TaskKind::Counting, 5.21e-2, 128.53, 5.73},
      {DesignId::D2, TaskKind::Tiling, 3.174e-2, 64.81, 5.50},
      {DesignId::D2, TaskKind::Counting, 4.71e-2, 95.83, 5.96},
      {DesignId::D2A, TaskKind::Tiling, 2.74e-2, 49.03, 3.89},
      {DesignId::D2A, TaskKind::Counting, 4.8e-2, 87.36, 6.19},
  };
  for (const auto& r : rows) {
    const ExecTimeModel& m = reg.at(r.d, r.k);
    CHECK(m.alpha == doctest::Approx(r.alpha).epsilon(1e-12));
    CHECK(m.beta == doctest::Approx(r.beta).epsilon(1e-12));
    CHECK(m.noise_std == doctest::Approx(r.noise).epsilon(1e-12));
  }
}

TEST_CASE("registry json round trip and lookup errors") {
  ModelRegistry reg = default_registry();
  ModelRegistry back = ModelRegistry::from_json(reg.to_json());
  REQUIRE(back.size() == 6);
  CHECK(back.at(DesignId::D2A, TaskKind::Counting).alpha ==
        reg.at(DesignId::D2A, TaskKind::Counting).alpha);

  ModelRegistry empty;
  CHECK_THROWS_AS(empty.at(DesignId::D1, TaskKind::Tiling), ConfigError);
  CHECK_FALSE(empty.find(DesignId::D1, TaskKind::Tiling).has_value());

  // "t1"/"t2" kind aliases are accepted on load.
  ModelRegistry alias = ModelRegistry::from_json(
      R"({"d1":{"t1":{"alpha":0.01,"beta":1.0,"noise_std":0.5}}})");
  CHECK(alias.at(DesignId::D1, TaskKind::Tiling).beta == doctest::Approx(1.0));
}
