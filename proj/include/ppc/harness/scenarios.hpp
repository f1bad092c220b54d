#pragma once

// Scenario execution. `simulate` is pure: it returns the CSV trace, the SVG
// figure and the JSON sidecar as strings. `run_scenario` writes them to
// <out>/<scenario>.{csv,svg,json}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ppc/diffusion.hpp"
#include "ppc/harness/config.hpp"
#include "ppc/harness/csv.hpp"
#include "ppc/harness/svg.hpp"
#include "ppc/oculomotor.hpp"
#include "ppc/popcode.hpp"
#include "ppc/random.hpp"
#include "ppc/transform.hpp"

namespace ppc::harness {

struct Artifacts {
  std::string stem;
  std::string csv;
  std::string svg;
  json sidecar;
};

namespace colors {
inline const char* const kBlue = "#1f77b4";
inline const char* const kOrange = "#ff7f0e";
inline const char* const kGreen = "#2ca02c";
inline const char* const kRed = "#d62728";
inline const char* const kPurple = "#9467bd";
inline const char* const kGrey = "#7f7f7f";
inline const char* const kBlack = "#222222";
}  // namespace colors

namespace detail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline std::vector<double> gaussian_pdf(const std::vector<double>& xs, double mean, double var) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs)
    out.push_back(std::exp(-0.5 * (x - mean) * (x - mean) / var) /
                  std::sqrt(2.0 * std::numbers::pi * var));
  return out;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

/// Histogram of finite values as (bin centres, counts).
inline std::pair<std::vector<double>, std::vector<double>> histogram(const std::vector<double>& v,
                                                                     double lo, double hi,
                                                                     std::size_t bins) {
  std::vector<double> centres(bins);
  std::vector<double> counts(bins, 0.0);
  const double w = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) centres[b] = lo + w * (static_cast<double>(b) + 0.5);
  for (double x : v) {
    if (!std::isfinite(x) || x < lo || x >= hi) continue;
    counts[static_cast<std::size_t>((x - lo) / w)] += 1.0;
  }
  return {centres, counts};
}

inline std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace detail

inline Artifacts simulate_encode(const ScenarioConfig& c) {
  const auto grid = c.grid.build();
  const auto& e = c.encode;
  Rng rng = make_rng(c.seed, Stream::kEncode);

  std::ostringstream csv;
  CsvWriter w(csv);
  w.row({"gain", "trial", "total", "mean", "variance", "degenerate"});

  json per_gain = json::array();
  std::vector<double> emp_sd;
  std::vector<double> post_sd;
  std::vector<std::vector<double>> means_by_gain;
  std::vector<PopulationActivity> samples;
  for (double g : e.gains) {
    const double gain = gain_for_total(grid, e.stimulus, g, e.window);
    std::vector<double> means;
    double sd_sum = 0.0;
    std::size_t degenerate = 0;
    for (std::size_t trial = 0; trial < e.trials; ++trial) {
      const auto act = encode(grid, e.stimulus, gain, e.window, rng);
      if (trial == 0) samples.push_back(act);
      if (act.total() > 0.0) {
        const auto post = decode(grid, act);
        means.push_back(post.mean);
        sd_sum += post.stddev();
        w.row({g, trial, act.total(), post.mean, post.variance, false});
      } else {
        ++degenerate;
        w.row({g, trial, 0.0, detail::nan(), detail::nan(), true});
      }
    }
    const auto n = static_cast<double>(means.size());
    double m = 0.0;
    for (double x : means) m += x;
    m /= std::max(n, 1.0);
    double ss = 0.0;
    for (double x : means) ss += (x - m) * (x - m);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : detail::nan();
    const double psd = n > 0 ? sd_sum / n : detail::nan();
    emp_sd.push_back(sd);
    post_sd.push_back(psd);
    means_by_gain.push_back(std::move(means));
    per_gain.push_back({{"gain", g},
                        {"empirical_sd", sd},
                        {"mean_posterior_sd", psd},
                        {"ratio", sd / psd},
                        {"degenerate", degenerate}});
  }

  const char* palette[] = {colors::kBlue, colors::kOrange, colors::kGreen, colors::kPurple,
                           colors::kRed};
  auto color = [&](std::size_t i) { return std::string(palette[i % 5]); };
  svg::Figure fig(2, 2);

  // Sample response of the strongest encoding, with tuning curves at the
  // same gain.
  const std::size_t top = e.gains.size() - 1;
  const double top_gain = gain_for_total(grid, e.stimulus, e.gains[top], e.window);
  auto& p1 = fig.add(svg::Panel("Sample response and tuning curves", "preferred stimulus",
                                "spike count"));
  p1.bars(grid.preferred(), detail::to_vector(samples[top].counts), colors::kGrey,
          "response, total " + format_number(e.gains[top]));
  const auto xs = detail::linspace(grid.lo(), grid.hi(), 400);
  for (std::size_t i = 0; i < grid.size(); i += 4) {
    std::vector<double> curve;
    for (double s : xs) curve.push_back(top_gain * e.window * grid.tuning(s, grid.preferred(i)));
    p1.line(xs, curve, colors::kBlue, i == 0 ? "tuning curves" : "", 0.7);
  }

  auto& p2 = fig.add(svg::Panel("Decoded posterior (first trial)", "stimulus", "density"));
  for (std::size_t i = 0; i < e.gains.size(); ++i) {
    if (!(samples[i].total() > 0.0)) continue;
    const auto post = decode(grid, samples[i]);
    p2.line(xs, detail::gaussian_pdf(xs, post.mean, post.variance), color(i),
            "total " + format_number(e.gains[i]));
  }

  auto& p3 = fig.add(svg::Panel("Decoded means across trials", "decoded mean", "trials"));
  const double spread = 4.0 * (post_sd.empty() ? 1.0 : std::max(post_sd.front(), 1e-3));
  for (std::size_t i = 0; i < e.gains.size(); ++i) {
    auto [cx, cy] = detail::histogram(means_by_gain[i], e.stimulus - spread, e.stimulus + spread, 60);
    p3.steps(cx, cy, color(i), "total " + format_number(e.gains[i]));
  }

  auto& p4 = fig.add(svg::Panel("Calibration", "expected total spikes", "std of decoded mean"));
  p4.line(e.gains, emp_sd, colors::kBlue, "empirical");
  p4.scatter(e.gains, emp_sd, colors::kBlue, "", 3.0, 1.0);
  p4.line(e.gains, post_sd, colors::kOrange, "mean posterior", 1.2, true);
  p4.scatter(e.gains, post_sd, colors::kOrange, "", 3.0, 1.0);

  json summary{{"per_gain", per_gain}};
  return {"encode-demo", csv.str(), fig.render(), summary};
}

inline Artifacts simulate_transform(const ScenarioConfig& c) {
  const auto grid = c.grid.build();
  const auto circuit = TransformCircuit::with_summed_output(grid, grid);
  const auto& t = c.transform;
  const auto mode = t.stochastic ? TransformMode::kStochastic : TransformMode::kDeterministic;
  Rng rng = make_rng(c.seed, Stream::kTransform);
  const double gain_a = gain_for_total(grid, t.stimulus_a, t.gain_a, t.window);
  const double gain_b = gain_for_total(grid, t.stimulus_b, t.gain_b, t.window);

  std::ostringstream csv;
  CsvWriter w(csv);
  w.row({"trial", "mean_a", "var_a", "gain_a", "mean_b", "var_b", "gain_b", "target_mean",
         "target_var", "target_gain", "out_mean", "out_var", "out_gain", "degenerate"});

  std::vector<double> out_means;
  std::vector<double> out_gains;
  std::optional<PopulationActivity> sample_a;
  std::optional<PopulationActivity> sample_b;
  std::optional<PopulationActivity> sample_out;
  const double nan = detail::nan();
  for (std::size_t trial = 0; trial < t.trials; ++trial) {
    const auto act_a = encode(grid, t.stimulus_a, gain_a, t.window, rng);
    const auto act_b = encode(grid, t.stimulus_b, gain_b, t.window, rng);
    if (!(act_a.total() > 0.0) || !(act_b.total() > 0.0)) {
      w.row({trial, nan, nan, act_a.total(), nan, nan, act_b.total(), nan, nan, nan, nan, nan,
             nan, true});
      continue;
    }
    const auto pa = decode(grid, act_a);
    const auto pb = decode(grid, act_b);
    const auto target = circuit.target_posterior(act_a, act_b);
    const auto out = circuit.transform(act_a, act_b, rng, mode);
    if (!sample_out) {
      sample_a = act_a;
      sample_b = act_b;
      sample_out = out;
    }
    if (!(out.total() > 0.0)) {
      w.row({trial, pa.mean, pa.variance, pa.gain, pb.mean, pb.variance, pb.gain, target.mean,
             target.variance, target.gain, nan, nan, 0.0, true});
      continue;
    }
    const auto po = decode(circuit.grid_out(), out);
    out_means.push_back(po.mean);
    out_gains.push_back(po.gain);
    w.row({trial, pa.mean, pa.variance, pa.gain, pb.mean, pb.variance, pb.gain, target.mean,
           target.variance, target.gain, po.mean, po.variance, po.gain, false});
  }

  const double expected_mean = t.stimulus_a + t.stimulus_b;
  const double expected_gain = combine_gain(t.gain_a, t.gain_b);
  double m = 0.0;
  double g = 0.0;
  for (std::size_t i = 0; i < out_means.size(); ++i) {
    m += out_means[i];
    g += out_gains[i];
  }
  const auto n = static_cast<double>(out_means.size());
  m /= std::max(n, 1.0);
  g /= std::max(n, 1.0);
  double ss = 0.0;
  for (double x : out_means) ss += (x - m) * (x - m);
  const double stderr_mean = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : nan;

  svg::Figure fig(2, 2);
  const auto& og = circuit.grid_out();
  auto& p1 = fig.add(svg::Panel("Sample responses", "preferred stimulus", "spike count"));
  if (sample_out) {
    p1.bars(grid.preferred(), detail::to_vector(sample_a->counts), colors::kBlue, "input a", 0.6);
    p1.bars(grid.preferred(), detail::to_vector(sample_b->counts), colors::kGreen, "input b", 0.6);
    p1.bars(og.preferred(), detail::to_vector(sample_out->counts), colors::kRed, "sum", 0.6);
  }
  auto& p2 = fig.add(svg::Panel("Decoded posteriors (first trial)", "stimulus", "density"));
  const auto xs = detail::linspace(og.lo(), og.hi(), 600);
  if (sample_out) {
    const auto pa = decode(grid, *sample_a);
    const auto pb = decode(grid, *sample_b);
    p2.line(xs, detail::gaussian_pdf(xs, pa.mean, pa.variance), colors::kBlue, "input a");
    p2.line(xs, detail::gaussian_pdf(xs, pb.mean, pb.variance), colors::kGreen, "input b");
    if (sample_out->total() > 0.0) {
      const auto po = decode(og, *sample_out);
      p2.line(xs, detail::gaussian_pdf(xs, po.mean, po.variance), colors::kRed, "sum");
    }
    const auto exact = circuit.target_posterior(*sample_a, *sample_b);
    p2.line(xs, detail::gaussian_pdf(xs, exact.mean, exact.variance), colors::kBlack,
            "exact convolution", 1.0, true);
  }
  auto& p3 = fig.add(svg::Panel("Output decoded means", "decoded mean", "trials"));
  {
    auto [cx, cy] = detail::histogram(out_means, expected_mean - 1.0, expected_mean + 1.0, 50);
    p3.steps(cx, cy, colors::kRed, "output");
    const double peak = cy.empty() ? 1.0 : *std::max_element(cy.begin(), cy.end());
    p3.line({expected_mean, expected_mean}, {0.0, peak}, colors::kBlack, "a + b", 1.0, true);
  }
  auto& p4 = fig.add(svg::Panel("Output gain", "decoded total activity", "trials"));
  {
    const double top_count = std::ceil(3.0 * expected_gain);
    auto [cx, cy] = detail::histogram(out_gains, -0.5, top_count + 0.5,
                                      static_cast<std::size_t>(top_count) + 1);
    p4.steps(cx, cy, colors::kRed, "output");
    const double peak = cy.empty() ? 1.0 : *std::max_element(cy.begin(), cy.end());
    p4.line({expected_gain, expected_gain}, {0.0, peak}, colors::kBlack,
            "g1 g2 / (g1 + g2)", 1.0, true);
  }

  json summary{{"expected_mean", expected_mean},
               {"mean_out_mean", m},
               {"stderr_out_mean", stderr_mean},
               {"expected_gain", expected_gain},
               {"mean_out_gain", g},
               {"decodable_trials", out_means.size()}};
  return {"transform-demo", csv.str(), fig.render(), summary};
}

inline Artifacts simulate_kalman(const ScenarioConfig& c) {
  const auto grid = c.grid.build();
  const auto every = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(c.kalman_snapshot_interval / c.dt)));
  const auto trace = diffusion::run(c.resolved_kalman(), grid, c.dt, c.seed, every);

  std::ostringstream csv;
  CsvWriter w(csv);
  w.row({"t", "truth", "gain", "obs_mean", "obs_var", "obs_degenerate", "network_mean",
         "network_var", "oracle_mean", "oracle_var", "rate_min", "rate_max", "rate_total"});
  const double nan = detail::nan();
  std::vector<double> t, truth, gain, obs, net, lo, hi, oracle;
  double mae = 0.0;
  double var_rel = 0.0;
  for (const auto& s : trace.steps) {
    const bool degenerate = !s.observation.has_value();
    w.row({s.t, s.truth, s.gain, degenerate ? nan : s.observation->mean,
           degenerate ? nan : s.observation->variance, degenerate, s.network_mean, s.network_var,
           s.oracle_mean, s.oracle_var, s.rate_min, s.rate_max, s.rate_total});
    t.push_back(s.t);
    truth.push_back(s.truth);
    gain.push_back(s.gain);
    obs.push_back(degenerate ? nan : s.observation->mean);
    net.push_back(s.network_mean);
    const double sd = std::sqrt(s.network_var);
    lo.push_back(s.network_mean - 2.0 * sd);
    hi.push_back(s.network_mean + 2.0 * sd);
    oracle.push_back(s.oracle_mean);
    mae += std::abs(s.network_mean - s.oracle_mean);
    var_rel = std::max(var_rel, std::abs(s.network_var - s.oracle_var) / s.oracle_var);
  }
  mae /= std::max<double>(1.0, static_cast<double>(trace.steps.size()));

  std::size_t windows = 0;
  std::size_t increasing = 0;
  for (const auto& [b, e] : diffusion::low_gain_windows(trace)) {
    ++windows;
    if (trace.steps[e - 1].network_var > trace.steps[b].network_var) ++increasing;
  }

  svg::Figure fig(2, 2);
  fig.add(svg::Panel("Input population gain", "time (s)", "gain"))
      .line(t, gain, colors::kBlue);
  fig.add(svg::Panel("Input population decode", "time (s)", "stimulus"))
      .scatter(t, obs, colors::kOrange, "decoded input", 0.8, 0.5)
      .line(t, truth, colors::kBlack, "stimulus", 1.0);
  svg::Heatmap hm;
  hm.y = grid.preferred();
  hm.values.resize(static_cast<Eigen::Index>(grid.size()),
                   static_cast<Eigen::Index>(trace.snapshots.size()));
  for (std::size_t k = 0; k < trace.snapshots.size(); ++k) {
    hm.x.push_back(static_cast<double>(k * every) * c.dt);
    hm.values.col(static_cast<Eigen::Index>(k)) = trace.snapshots[k];
  }
  fig.add(svg::Panel("Kalman population activity", "time (s)", "preferred stimulus"))
      .heatmap(std::move(hm));
  fig.add(svg::Panel("Kalman population decode", "time (s)", "stimulus"))
      .band(t, lo, hi, colors::kBlue, "mean +/- 2 sd")
      .line(t, truth, colors::kBlack, "stimulus", 1.0)
      .line(t, net, colors::kBlue, "network mean", 1.2)
      .line(t, oracle, colors::kRed, "exact filter", 1.0, true);

  json summary{{"mean_abs_error_vs_oracle", mae},
               {"max_relative_variance_error", var_rel},
               {"clamped", trace.clamped},
               {"low_gain_windows", windows},
               {"windows_with_variance_increase", increasing}};
  return {"kalman-demo", csv.str(), fig.render(), summary};
}

namespace detail {

inline json episode_summary(const oculomotor::EpisodeTrace& trace) {
  const auto s = oculomotor::summarize(trace);
  return {{"fraction_within_tolerance", s.fraction_within},
          {"final_mean_abs_error", s.final_error},
          {"variance_at_init_end", s.variance_at_init_end},
          {"variance_at_end", s.variance_at_end},
          {"clamped", trace.clamped}};
}

inline void episode_panel(svg::Panel& p, const oculomotor::EpisodeTrace& trace) {
  std::vector<double> t, target, eye, mean, lo, hi;
  for (const auto& s : trace.steps) {
    t.push_back(s.t);
    target.push_back(s.target);
    eye.push_back(s.eye);
    mean.push_back(s.kalman_mean);
    const double sd = std::sqrt(s.kalman_var);
    lo.push_back(s.kalman_mean - 2.0 * sd);
    hi.push_back(s.kalman_mean + 2.0 * sd);
  }
  p.band(t, lo, hi, colors::kBlue, "estimate +/- 2 sd")
      .steps(t, target, colors::kGrey, "target", 1.0)
      .line(t, eye, colors::kBlack, "eye", 1.0)
      .line(t, mean, colors::kBlue, "estimate", 1.0);
}

}  // namespace detail

inline Artifacts simulate_episode(const ScenarioConfig& c) {
  const auto grid = c.grid.build();
  oculomotor::EpisodeOptions options;
  options.ablation = c.ablated();
  options.estimator = c.estimator;
  options.network = c.network;
  const auto trace = oculomotor::run_episode(c.task, grid, c.dt, c.seed, options);

  std::ostringstream csv;
  CsvWriter w(csv);
  w.row({"t", "target", "eye", "u", "gate_gain", "proprio_mean", "proprio_var",
         "proprio_degenerate", "kalman_mean", "kalman_var"});
  const double nan = detail::nan();
  std::vector<double> t, gate, proprio, eye;
  for (const auto& s : trace.steps) {
    const bool degenerate = !s.proprio.has_value();
    w.row({s.t, s.target, s.eye, s.u, s.gate_gain, degenerate ? nan : s.proprio->mean,
           degenerate ? nan : s.proprio->variance, degenerate, s.kalman_mean, s.kalman_var});
    t.push_back(s.t);
    gate.push_back(s.gate_gain);
    proprio.push_back(degenerate ? nan : s.proprio->mean);
    eye.push_back(s.eye);
  }

  json summary{{"run", detail::episode_summary(trace)}};
  std::optional<oculomotor::EpisodeTrace> withheld;
  if (!options.ablation) {
    auto ablated = options;
    ablated.ablation = true;
    withheld = oculomotor::run_episode(c.task, grid, c.dt, c.seed, ablated);
    summary["withheld_proprioception"] = detail::episode_summary(*withheld);
  }

  svg::Figure fig(4, 1, 900.0, 230.0);
  fig.add(svg::Panel("Proprioceptive gain", "time (s)", "gain")).steps(t, gate, colors::kBlue);
  fig.add(svg::Panel("Proprioceptive decode", "time (s)", "eye position"))
      .scatter(t, proprio, colors::kOrange, "decoded proprioception", 0.8, 0.5)
      .line(t, eye, colors::kBlack, "eye", 0.8);
  detail::episode_panel(fig.add(svg::Panel("Kalman population decode", "time (s)", "eye position")),
                        trace);
  detail::episode_panel(
      fig.add(svg::Panel("Kalman decode, proprioception withheld after initialization",
                         "time (s)", "eye position")),
      withheld ? *withheld : trace);

  return {to_string(c.scenario), csv.str(), fig.render(), summary};
}

inline Artifacts simulate(const ScenarioConfig& config) {
  Artifacts a;
  switch (config.scenario) {
    case Scenario::kEncodeDemo: a = simulate_encode(config); break;
    case Scenario::kTransformDemo: a = simulate_transform(config); break;
    case Scenario::kKalmanDemo: a = simulate_kalman(config); break;
    case Scenario::kEyeControl:
    case Scenario::kAblation: a = simulate_episode(config); break;
  }
  json sidecar;
  sidecar["scenario"] = to_string(config.scenario);
  sidecar["seed"] = config.seed;
  sidecar["trace"] = a.stem + ".csv";
  sidecar["plot"] = a.stem + ".svg";
  sidecar["summary"] = std::move(a.sidecar);
  sidecar["config"] = to_json(config);
  a.sidecar = std::move(sidecar);
  return a;
}

/// Writes the artifacts; returns the paths written.
inline std::vector<std::filesystem::path> write_artifacts(const Artifacts& a,
                                                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths{dir / (a.stem + ".csv"), dir / (a.stem + ".svg"),
                                           dir / (a.stem + ".json")};
  const std::string contents[] = {a.csv, a.svg, a.sidecar.dump(2) + "\n"};
  for (std::size_t i = 0; i < paths.size(); ++i) {
    std::ofstream out(paths[i], std::ios::binary);
    out << contents[i];
    out.close();
    if (!out) throw std::runtime_error("cannot write " + paths[i].string());
  }
  return paths;
}

inline std::vector<std::filesystem::path> run_scenario(const ScenarioConfig& config,
                                                       const std::filesystem::path& dir) {
  return write_artifacts(simulate(config), dir);
}

}  // namespace ppc::harness
