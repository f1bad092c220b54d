#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "ppc/diffusion.hpp"
#include "ppc/harness/config.hpp"
#include "ppc/harness/scenarios.hpp"
#include "ppc/oculomotor.hpp"
#include "ppc/popcode.hpp"
#include "ppc/transform.hpp"

using namespace ppc;

namespace {

int failures = 0;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void report(int n, bool pass, const std::string& detail, double seconds, double budget) {
  const bool ok = pass && seconds < budget;
  if (!ok) ++failures;
  std::printf("criterion %d: %s  %s  [%.2f s, budget %.0f s]\n", n, ok ? "PASS" : "FAIL",
              detail.c_str(), seconds, budget);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void divisive_normalization() {
  Stopwatch sw;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.01, 500.0);
  const double w2 = 0.25;
  double law = 0.0;
  double var_form = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double g1 = u(rng);
    const double g2 = u(rng);
    const double g = combine_gain(g1, g2);
    law = std::max(law, std::abs(g - g1 * g2 / (g1 + g2)));
    const double v = w2 / g1 + w2 / g2;
    var_form = std::max(var_form, std::abs(w2 / g - v) / v);
  }
  report(1, law <= 1e-12 && var_form <= 1e-9,
         fmt("max |law error| %.3g (<= 1e-12), max variance-form rel error %.3g (<= 1e-9)", law,
             var_form),
         sw.seconds(), 1.0);
}

void decoder_calibration() {
  Stopwatch sw;
  const auto grid = TuningGrid::standard();
  Rng rng = make_rng(1, Stream::kEncode);
  bool pass = true;
  std::string detail;
  for (double total : {5.0, 20.0, 80.0}) {
    const double gain = gain_for_total(grid, 0.0, total, 1.0);
    double s = 0.0, s2 = 0.0, sd_sum = 0.0;
    int n = 0;
    for (int i = 0; i < 10000; ++i) {
      const auto act = encode(grid, 0.0, gain, 1.0, rng);
      if (act.total() == 0.0) continue;
      const auto post = decode(grid, act);
      s += post.mean;
      s2 += post.mean * post.mean;
      sd_sum += post.stddev();
      ++n;
    }
    const double m = s / n;
    const double emp = std::sqrt((s2 - n * m * m) / (n - 1));
    const double ratio = emp / (sd_sum / n);
    pass = pass && std::abs(ratio - 1.0) <= 0.10;
    detail += fmt("gain %g: sd ratio %.4f; ", total, ratio);
  }
  report(2, pass, detail + "(within 10%)", sw.seconds(), 30.0);
}

void additivity() {
  Stopwatch sw;
  const auto grid = TuningGrid::standard();
  Rng rng = make_rng(3, Stream::kEncode);
  std::uniform_real_distribution<double> stim(-3.0, 3.0);
  std::uniform_real_distribution<double> tot(2.0, 100.0);
  double worst_mean = 0.0;
  double worst_var = 0.0;
  int n = 0;
  while (n < 1000) {
    const double s = stim(rng);
    const auto a = encode(grid, s, gain_for_total(grid, s, tot(rng), 1.0), 1.0, rng);
    const auto b = encode(grid, s, gain_for_total(grid, s, tot(rng), 1.0), 1.0, rng);
    if (a.total() == 0.0 || b.total() == 0.0) continue;
    PopulationActivity sum = a;
    sum.counts += b.counts;
    const auto joint = decode(grid, sum);
    const auto fused = fuse(decode(grid, a), decode(grid, b));
    worst_mean = std::max(worst_mean, std::abs(joint.mean - fused.mean));
    worst_var = std::max(worst_var, std::abs(joint.variance - fused.variance) / fused.variance);
    ++n;
  }
  report(3, worst_mean <= 1e-9 && worst_var <= 1e-9,
         fmt("1000 cases, max mean diff %.3g, max rel variance diff %.3g (<= 1e-9)", worst_mean,
             worst_var),
         sw.seconds(), 1e9);
}

void kalman_vs_oracle() {
  Stopwatch sw;
  const auto base = *harness::validate_config("").config;
  const auto grid = base.grid.build();
  const auto cfg = base.resolved_kalman();
  const double bound = 0.3 * grid.tuning_width();
  double worst_mae = 0.0;
  double worst_var = 0.0;
  std::size_t windows = 0;
  std::size_t increasing = 0;
  std::size_t net_increase = 0;
  std::size_t drops = 0;
  std::size_t silent_drops = 0;
  std::size_t oracle_drops = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto trace = diffusion::run(cfg, grid, base.dt, seed);
    double mae = 0.0;
    for (const auto& s : trace.steps) {
      mae += std::abs(s.network_mean - s.oracle_mean);
      worst_var = std::max(worst_var, std::abs(s.network_var - s.oracle_var) / s.oracle_var);
    }
    worst_mae = std::max(worst_mae, mae / static_cast<double>(trace.steps.size()));
    for (const auto& [b, e] : diffusion::low_gain_windows(trace)) {
      ++windows;
      bool strict = true;
      for (std::size_t k = b + 1; k < e; ++k) {
        const auto& now = trace.steps[k];
        const auto& prev = trace.steps[k - 1];
        if (now.network_var > prev.network_var) continue;
        strict = false;
        ++drops;
        silent_drops += !now.observation.has_value();
        oracle_drops += now.oracle_var <= prev.oracle_var;
      }
      increasing += strict;
      net_increase += trace.steps[e - 1].network_var > trace.steps[b].network_var;
    }
  }
  report(4,
         worst_mae < bound && worst_var <= 0.25 && windows > 0 && increasing == windows,
         fmt("20 seeds: worst MAE %.4f (< %.3f), worst variance rel error %.3f (<= 0.25), "
             "%zu/%zu low-gain windows strictly increasing (%zu/%zu end above start; %zu "
             "decreasing steps, %zu without an input spike, %zu where the exact filter also "
             "decreased)",
             worst_mae, bound, worst_var, increasing, windows, net_increase, windows, drops,
             silent_drops, oracle_drops),
         sw.seconds(), 120.0);
}

struct TrendStats {
  double slope = 0.0;
  bool thirds_increasing = false;
};

TrendStats variance_trend(const oculomotor::EpisodeTrace& t) {
  const std::size_t b = t.init_steps;
  const std::size_t n = t.steps.size() - b;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = b; k < t.steps.size(); ++k) {
    const double x = t.steps[k].t;
    const double y = t.steps[k].kalman_var;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  TrendStats s;
  s.slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  double third[3] = {0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < n; ++k) third[std::min<std::size_t>(3 * k / n, 2)] +=
      t.steps[b + k].kalman_var;
  s.thirds_increasing = third[0] < third[1] && third[1] < third[2];
  return s;
}

void tracking_and_ablation() {
  const auto base = *harness::validate_config("").config;
  const auto grid = base.grid.build();
  oculomotor::EpisodeOptions options;
  options.network = base.network;

  Stopwatch sw;
  const auto gated = oculomotor::run_episode(base.task, grid, base.dt, base.seed, options);
  const auto gs = oculomotor::summarize(gated);
  const double gated_seconds = sw.seconds();

  auto exact_options = options;
  exact_options.estimator = oculomotor::Estimator::kExactKalman;
  const auto exact = oculomotor::summarize(
      oculomotor::run_episode(base.task, grid, base.dt, base.seed, exact_options));
  report(5, gs.fraction_within > 0.8,
         fmt("seed %llu: fraction within 0.5 = %.4f (> 0.8); exact-filter calibration run %.4f",
             static_cast<unsigned long long>(base.seed), gs.fraction_within,
             exact.fraction_within),
         gated_seconds, 60.0);

  Stopwatch sw6;
  auto ablated_options = options;
  ablated_options.ablation = true;
  const auto ablated =
      oculomotor::run_episode(base.task, grid, base.dt, base.seed, ablated_options);
  const auto as = oculomotor::summarize(ablated);
  const auto trend = variance_trend(ablated);
  const double var_ratio = as.variance_at_end / as.variance_at_init_end;
  const double err_ratio = as.final_error / gs.final_error;
  const double seconds6 = sw6.seconds();

  int seeds_ok = 0;
  const int seeds = 10;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    const auto g = oculomotor::summarize(
        oculomotor::run_episode(base.task, grid, base.dt, seed, options));
    const auto a = oculomotor::summarize(
        oculomotor::run_episode(base.task, grid, base.dt, seed, ablated_options));
    seeds_ok += a.final_error >= 2.0 * g.final_error;
  }
  report(6, var_ratio >= 3.0 && trend.slope > 0.0 && trend.thirds_increasing && err_ratio >= 2.0,
         fmt("seed %llu: variance %.4g -> %.4g (x%.1f, >= 3), slope %.3g, thirds increasing %s; "
             "final-5 s error %.4f vs gated %.4f (x%.2f, >= 2); error ratio >= 2 on %d/%d seeds",
             static_cast<unsigned long long>(base.seed), as.variance_at_init_end,
             as.variance_at_end, var_ratio, trend.slope, trend.thirds_increasing ? "yes" : "no",
             as.final_error, gs.final_error, err_ratio, seeds_ok, seeds),
         seconds6, 1e9);

  Stopwatch sw7;
  long long last = -1000000000;
  std::size_t gate_violations = 0;
  std::size_t stale_violations = 0;
  std::size_t open_samples = 0;
  const double tol = base.task.max_speed * base.dt + 1e-12;
  for (std::size_t k = 0; k < gated.steps.size(); ++k) {
    const auto& s = gated.steps[k];
    if (s.u != 0.0) last = static_cast<long long>(k);
    const bool recent = static_cast<long long>(k) - last < static_cast<long long>(gated.gate_steps);
    const bool closed = s.gate_gain == base.task.gate_floor;
    const bool open = s.gate_gain == base.task.gate_ceiling;
    gate_violations += closed != recent || open == recent;
    if (open && k >= gated.init_steps) {
      ++open_samples;
      stale_violations += std::abs(s.proprio_source - s.eye) > tol;
    }
  }
  report(7, gate_violations == 0 && stale_violations == 0 && open_samples > 0,
         fmt("%zu steps, %zu gate mismatches; %zu gate-open samples, %zu farther than "
             "max_speed*dt from the eye",
             gated.steps.size(), gate_violations, open_samples, stale_violations),
         sw7.seconds(), 1e9);
}

void determinism() {
  Stopwatch sw;
  std::string detail;
  bool pass = true;
  for (const auto& [scenario, name] : harness::scenario_names()) {
    auto c = *harness::validate_config("").config;
    c.scenario = scenario;
    c.seed = 7;
    const auto a = harness::simulate(c);
    const auto b = harness::simulate(c);
    const bool same = a.csv == b.csv && a.svg == b.svg && a.sidecar.dump() == b.sidecar.dump();
    pass = pass && same;
    detail += fmt("%s %s; ", name.c_str(), same ? "identical" : "DIFFERS");
  }
  report(8, pass, detail, sw.seconds(), 1e9);
}

}  // namespace

int main() {
  divisive_normalization();
  decoder_calibration();
  additivity();
  kalman_vs_oracle();
  tracking_and_ablation();
  determinism();
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
