// homsim command-line front end: simulation, synthetic-experiment
// generation, tag-file analysis and dephasing/Purcell inference as
// reproducible batch commands emitting CSV tables.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "homsim/homsim.hpp"

namespace {

using namespace homsim;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Output sink: a file path or "-" for stdout.
class Output {
public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") {
      os_ = &std::cout;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw DataError("cannot open output file '" + path + "'");
      os_ = file_.get();
    }
  }
  std::ostream& stream() { return *os_; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

/// Emitter options shared by several subcommands. Lifetimes are the
/// primary interface; explicit rates override them when given.
struct EmitterOpts {
  double t1_ns = 1.9;
  double t2_star_ns = 2.4;
  double gamma_sp_per_ns = 0.0;   // 0: derive from t1_ns
  double gamma_star_per_ns = -1.0; // <0: derive from t2_star_ns

  void attach(CLI::App* cmd) {
    cmd->add_option("--t1_ns", t1_ns, "spontaneous emission lifetime T1 [ns]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--t2_star_ns", t2_star_ns,
                    "pure dephasing time T2* [ns]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--gamma_sp_per_ns", gamma_sp_per_ns,
                    "spontaneous emission rate [1/ns], overrides --t1_ns")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--gamma_star_per_ns", gamma_star_per_ns,
                    "pure dephasing rate [1/ns], overrides --t2_star_ns "
                    "(0 disables dephasing)")
        ->check(CLI::NonNegativeNumber);
  }

  EmitterParams resolve() const {
    const double gsp = gamma_sp_per_ns > 0.0 ? gamma_sp_per_ns : 1.0 / t1_ns;
    const double gst =
        gamma_star_per_ns >= 0.0 ? gamma_star_per_ns : 1.0 / t2_star_ns;
    return EmitterParams(gsp, gst);
  }
};

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n < 1 || !(hi >= lo)) throw ParameterError("bad grid specification");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return g;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1)
    throw ParameterError("bad log grid specification");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = n == 1 ? lo
                  : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) *
                                                static_cast<double>(i) / (n - 1));
  return g;
}

// ---------------------------------------------------------------- commands

struct VisibilityCmd {
  EmitterOpts emitter;
  std::vector<double> gamma_star_list; // optional sweep [1/ns]
  std::vector<double> dt_list;         // explicit dt values [ns]
  double dt_min = 0.5, dt_max = 12.5;
  std::size_t dt_count = 25;
  std::size_t grid_n = 256;
  std::string out = "-";

  void run() const {
    std::vector<double> dts = dt_list;
    if (dts.empty()) dts = linear_grid(dt_min, dt_max, dt_count);
    std::sort(dts.begin(), dts.end());
    dts.erase(std::unique(dts.begin(), dts.end()), dts.end());
    const EmitterParams base = emitter.resolve();
    std::vector<double> sweeps = gamma_star_list;
    if (sweeps.empty()) sweeps.push_back(base.gamma_star());

    Output output(out);
    auto& os = output.stream();
    os << "# homsim simulate visibility: gamma_star_per_ns,dt_ns,v_hom\n";
    for (const double gs : sweeps) {
      const EmitterParams p(base.gamma_sp(), gs);
      const VisibilityCurve curve = visibility_curve(p, dts, grid_n);
      for (std::size_t i = 0; i < curve.dt_ns.size(); ++i)
        os << num(gs) << ',' << num(curve.dt_ns[i]) << ',' << num(curve.v[i])
           << '\n';
    }
  }
};

struct MapCmd {
  double gs_min = 0.05, gs_max = 5.0;
  std::size_t gs_count = 41;
  double dt_min = 0.25, dt_max = 8.0;
  std::size_t dt_count = 32;
  std::size_t grid_n = 256;
  std::string out = "-";

  DephasingMap build() const {
    return build_dephasing_map(log_grid(gs_min, gs_max, gs_count),
                               linear_grid(dt_min, dt_max, dt_count), grid_n);
  }

  void run() const {
    const DephasingMap map = build();
    Output output(out);
    auto& os = output.stream();
    os << "# homsim simulate map (gamma_sp = 1 units): "
          "gamma_star_over_gamma_sp,tau_v_times_gamma_sp\n";
    for (std::size_t i = 0; i < map.gamma_star.size(); ++i)
      os << num(map.gamma_star[i]) << ',' << num(map.tau_v[i]) << '\n';
  }
};

struct InferCmd {
  MapCmd map_opts;
  double tau_v_ns = 0.0;
  double t1_ns = 1.9;
  bool selftest = false;
  std::string out = "-";

  void run() const {
    const double gamma_sp = 1.0 / t1_ns;
    const DephasingMap map = map_opts.build();
    const DephasingEstimate est = invert_dephasing(map, tau_v_ns, gamma_sp);

    Output output(out);
    auto& os = output.stream();
    os << "# homsim infer dephasing: key,value\n";
    os << "tau_v_ns," << num(tau_v_ns) << '\n';
    os << "gamma_sp_per_ns," << num(gamma_sp) << '\n';
    os << "gamma_star_per_ns," << num(est.gamma_star_per_ns) << '\n';
    os << "t2_star_ns," << num(est.t2_star_ns) << '\n';
    os << "t2_ns," << num(est.t2_ns) << '\n';
    os << "t2_limit_2t1_ns," << num(2.0 * t1_ns) << '\n';
    os << "t2_over_limit," << num(est.t2_ns / (2.0 * t1_ns)) << '\n';

    if (selftest) {
      // invert the map's own forward values and require 1 % closure
      double worst = 0.0;
      for (std::size_t i = 1; i + 1 < map.gamma_star.size(); ++i) {
        const double tau_ns_i = map.tau_v[i] / gamma_sp;
        const DephasingEstimate back = invert_dephasing(map, tau_ns_i, gamma_sp);
        const double gs_expected = map.gamma_star[i] * gamma_sp;
        worst = std::max(worst, std::abs(back.gamma_star_per_ns - gs_expected) /
                                    gs_expected);
      }
      os << "selftest_roundtrip_worst_rel," << num(worst) << '\n';
      if (worst > 0.01)
        throw SelfTestError("map inversion round trip exceeds 1 %");
    }
  }
};

struct PurcellCmd {
  double t1_ns = 1.9;
  double t2_star_ns = 2.4;
  std::vector<double> f_p_list;
  double target_v = 0.0;
  bool allow_inhibition = false;
  std::string out = "-";

  void run() const {
    Output output(out);
    auto& os = output.stream();
    if (target_v > 0.0) {
      const double fp = required_purcell(t1_ns, t2_star_ns, target_v);
      os << "# homsim purcell (inverse mode): v_target,f_p_required,t1_eff_ns\n";
      os << num(target_v) << ',' << num(fp) << ',' << num(t1_ns / fp) << '\n';
      return;
    }
    std::vector<double> fps = f_p_list;
    if (fps.empty()) fps = {1.0, 7.0, 15.0};
    os << "# homsim purcell: f_p,t1_eff_ns,visibility\n";
    for (const double fp : fps) {
      const PurcellResult r =
          purcell_visibility(t1_ns, t2_star_ns, fp, allow_inhibition);
      os << num(r.f_p) << ',' << num(r.t1_eff_ns) << ',' << num(r.visibility)
         << '\n';
    }
  }
};

struct GenerateCmd {
  EmitterOpts emitter;
  std::string mode = "hbt";
  std::int64_t n_pulses = 100000;
  double rep_period_ns = 12.5;
  double p_background = 0.0;
  double jitter_sigma_ns = 0.0;
  double loss = 1.0;
  std::uint64_t seed = 0;
  std::string out;

  void run() const {
    McConfig cfg;
    cfg.emitter = emitter.resolve();
    if (mode == "hbt")
      cfg.mode = McMode::hbt;
    else if (mode == "hom_parallel")
      cfg.mode = McMode::hom_parallel;
    else if (mode == "hom_orthogonal")
      cfg.mode = McMode::hom_orthogonal;
    else
      throw ParameterError("mode must be hbt|hom_parallel|hom_orthogonal");
    cfg.n_pulses = n_pulses;
    cfg.rep_period_ns = rep_period_ns;
    cfg.p_background = p_background;
    cfg.detector_jitter_sigma_ns = jitter_sigma_ns;
    cfg.loss = loss;
    cfg.seed = seed;
    cfg.validate();
    if (cfg.rep_period_is_short())
      std::cerr << "warning: rep_period <= 10 T1; emission tails will spill "
                   "into neighboring periods\n";
    const TagStream stream = generate_stream(cfg);
    write_tags_file(stream, out);
    std::cerr << "wrote " << stream.records.size() << " records to " << out
              << "\n";
  }
};

void write_coincidence_csv(const CoincidenceHistogram& hist,
                           const std::string& path) {
  Output output(path);
  auto& os = output.stream();
  os << "# homsim coincidence histogram: tau_ps,counts\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    os << hist.bin_center_ps(i) << ',' << hist.counts[i] << '\n';
}

void write_peaks(std::ostream& os, const std::string& prefix,
                 const PeakAreas& areas) {
  for (const auto& e : areas.entries) {
    os << prefix << "_area_" << e.index << ',' << num(e.area) << '\n';
    os << prefix << "_sigma_" << e.index << ',' << num(e.sigma)
       << (e.zero_regularized ? " # zero-count, sigma regularized to 1" : "")
       << '\n';
  }
}

struct AnalyzeHbtCmd {
  std::string input;
  double window_start_ns = 0.0;
  double window_width_ns = 0.0; // 0: no post-selection
  std::int64_t bin_width_ps = 50;
  int max_delay_periods = 6;
  std::int64_t halfwidth_ps = 0; // 0: default heuristic
  std::string out = "-";
  std::string hist_out;

  void run() const {
    const TagStream stream = parse_tags_file(input);
    if (stream.records.empty()) throw DataError("empty tag stream");
    AnalysisSettings settings;
    settings.bin_width_ps = bin_width_ps;
    settings.max_delay_periods = max_delay_periods;
    if (halfwidth_ps > 0) settings.halfwidth_ps = halfwidth_ps;
    std::optional<PostSelectionWindow> window;
    if (window_width_ns > 0.0)
      window.emplace(window_start_ns, window_width_ns);
    const HbtReport report = analyze_g2(stream, window, settings);
    if (!hist_out.empty()) write_coincidence_csv(report.histogram, hist_out);

    Output output(out);
    auto& os = output.stream();
    os << "# homsim analyze hbt: key,value\n";
    os << "n_records," << stream.records.size() << '\n';
    os << "g2_0," << num(report.g2.value) << '\n';
    os << "g2_sigma," << num(report.g2.sigma) << '\n';
    os << "halfwidth_ps," << report.halfwidth_ps << '\n';
    write_peaks(os, "peak", report.areas);
  }
};

struct AnalyzeHomCmd {
  std::string parallel_path;
  std::string orthogonal_path;
  std::string hbt_path; // optional companion purity stream
  double window_start_ns = 0.0;
  double window_width_ns = 3.0;
  double g2_hbt = 0.0;
  double g2_hbt_sigma = 0.0;
  std::int64_t bin_width_ps = 50;
  int max_delay_periods = 6;
  std::int64_t halfwidth_ps = 0;
  std::string out = "-";
  std::string hist_out_prefix;

  void run() const {
    const TagStream par = parse_tags_file(parallel_path);
    const TagStream orth = parse_tags_file(orthogonal_path);
    if (par.records.empty() || orth.records.empty())
      throw DataError("empty tag stream");
    AnalysisSettings settings;
    settings.bin_width_ps = bin_width_ps;
    settings.max_delay_periods = max_delay_periods;
    if (halfwidth_ps > 0) settings.halfwidth_ps = halfwidth_ps;
    const PostSelectionWindow window(window_start_ns, window_width_ns);

    ValueWithError purity{g2_hbt, g2_hbt_sigma};
    if (!hbt_path.empty()) {
      const TagStream hbt = parse_tags_file(hbt_path);
      purity = analyze_g2(hbt, window, settings).g2;
    }
    settings.g2_hbt = purity;

    const HomReport report = hom_analysis(par, orth, window, settings);
    if (!hist_out_prefix.empty()) {
      write_coincidence_csv(report.parallel.histogram,
                            hist_out_prefix + "_parallel.csv");
      write_coincidence_csv(report.orthogonal.histogram,
                            hist_out_prefix + "_orthogonal.csv");
    }

    Output output(out);
    auto& os = output.stream();
    os << "# homsim analyze hom: key,value\n";
    os << "window_start_ns," << num(window.start_ns) << '\n';
    os << "window_width_ns," << num(window.width_ns) << '\n';
    os << "g2_hbt," << num(report.g2_hbt.value) << '\n';
    os << "g2_hbt_sigma," << num(report.g2_hbt.sigma) << '\n';
    os << "g2_parallel," << num(report.parallel.g2.value) << '\n';
    os << "g2_parallel_sigma," << num(report.parallel.g2.sigma) << '\n';
    os << "g2_orthogonal," << num(report.orthogonal.g2.value) << '\n';
    os << "g2_orthogonal_sigma," << num(report.orthogonal.g2.sigma) << '\n';
    os << "v_raw," << num(report.v_raw.value) << '\n';
    os << "v_raw_sigma," << num(report.v_raw.sigma) << '\n';
    os << "v_corrected," << num(report.v_corrected.value) << '\n';
    os << "v_corrected_sigma," << num(report.v_corrected.sigma) << '\n';
    write_peaks(os, "parallel_peak", report.parallel.areas);
    write_peaks(os, "orthogonal_peak", report.orthogonal.areas);
  }
};

struct FitLifetimeCmd {
  std::string input;
  std::int64_t bin_width_ps = 50;
  double fit_lo_ns = -1.0; // <0: default 2 bins
  double fit_hi_ns = -1.0; // <0: default 0.6 period
  std::string hist_out;
  std::string out = "-";

  void run() const {
    const TagStream stream = parse_tags_file(input);
    if (stream.records.empty()) throw DataError("empty tag stream");
    const ArrivalHistogram hist = arrival_histogram(stream, bin_width_ps);
    const double period_ns = static_cast<double>(stream.sync_period_ps) / 1000.0;
    const double lo =
        fit_lo_ns >= 0.0 ? fit_lo_ns : 2.0 * static_cast<double>(bin_width_ps) / 1000.0;
    const double hi = fit_hi_ns > 0.0 ? fit_hi_ns : 0.6 * period_ns;
    const LifetimeFit fit = fit_lifetime(hist, lo, hi);

    if (!hist_out.empty()) {
      Output houtput(hist_out);
      auto& hos = houtput.stream();
      hos << "# homsim arrival histogram: bin_left_ps,counts\n";
      for (std::size_t i = 0; i < hist.counts.size(); ++i)
        hos << static_cast<std::int64_t>(i) * hist.bin_width_ps << ','
            << hist.counts[i] << '\n';
    }

    Output output(out);
    auto& os = output.stream();
    os << "# homsim fit lifetime: key,value\n";
    os << "t1_ns," << num(fit.t1_ns) << '\n';
    os << "t1_sigma_ns," << num(fit.sigma_ns) << '\n';
    os << "fit_lo_ns," << num(lo) << '\n';
    os << "fit_hi_ns," << num(hi) << '\n';
  }
};

struct ValidateCmd {
  std::uint64_t seed = 12345;

  void run() const {
    // 1) quadrature vs the closed-form route, including the worked value
    {
      struct Case {
        double gsp, gst, dt;
      };
      const Case cases[] = {{1.0, 1.0, 1.0},
                            {1.0 / 1.9, 1.0 / 2.4, 3.0},
                            {0.7, 0.2, 5.0},
                            {2.0, 3.0, 2.0},
                            {1.0, 0.5, 50.0}};
      for (const auto& c : cases) {
        const EmitterParams p(c.gsp, c.gst);
        const PostSelectionWindow w = PostSelectionWindow::from_width(c.dt);
        const double got = g2_hom_postselected(p, w).g2_hom;
        const double want = reference_g2_hom(p, w);
        if (std::abs(got - want) > 1e-6 * std::max(std::abs(want), 1e-3))
          throw AccuracyError("quadrature disagrees with the closed form");
      }
      std::cout << "[ok] quadrature matches the closed form (5 cases)\n";
    }
    // 2) tag-file round trip
    {
      McConfig cfg;
      cfg.emitter = EmitterParams(1.0 / 1.9, 1.0 / 2.4);
      cfg.n_pulses = 1000;
      cfg.mode = McMode::hom_parallel;
      cfg.seed = seed;
      const TagStream stream = generate_stream(cfg);
      std::ostringstream first, second;
      write_tags(stream, first);
      std::istringstream in(first.str());
      write_tags(parse_tags(in), second);
      if (first.str() != second.str())
        throw DataError("tag round trip is not canonical");
      std::cout << "[ok] tag-file round trip is lossless\n";
    }
    // 3) map inversion round trip at gamma_star = 0.5 gamma_sp
    {
      const auto gs = log_grid(0.2, 1.5, 9);
      const auto dts = linear_grid(0.25, 8.0, 20);
      const DephasingMap map = build_dephasing_map(gs, dts, 128);
      const VisibilityCurve curve =
          visibility_curve(EmitterParams(1.0, 0.5), dts, 128);
      const double tau = fit_visibility_decay(curve).tau_v;
      const DephasingEstimate est = invert_dephasing(map, tau, 1.0);
      if (std::abs(est.gamma_star_per_ns - 0.5) / 0.5 > 0.01)
        throw SelfTestError("map inversion round trip exceeds 1 %");
      std::cout << "[ok] dephasing map round trip within 1 %\n";
    }
    // 4) Monte Carlo vs master equation at reduced statistics
    {
      McConfig cfg;
      cfg.emitter = EmitterParams(1.0 / 1.9, 1.0 / 2.4);
      cfg.n_pulses = 200000;
      cfg.seed = seed;
      cfg.mode = McMode::hom_parallel;
      const TagStream par = generate_stream(cfg);
      cfg.mode = McMode::hom_orthogonal;
      cfg.seed = seed + 1;
      const TagStream orth = generate_stream(cfg);
      const PostSelectionWindow window(0.0, 3.0);
      const HomReport report = hom_analysis(par, orth, window);
      const double v_theory =
          1.0 - 2.0 * g2_hom_postselected(cfg.emitter, window).g2_hom;
      const double dev = std::abs(report.v_raw.value - v_theory);
      if (dev > 4.0 * report.v_raw.sigma)
        throw SelfTestError("Monte Carlo visibility deviates > 4 sigma "
                            "from the master equation");
      std::cout << "[ok] Monte Carlo visibility within 4 sigma of theory ("
                << num(report.v_raw.value) << " vs " << num(v_theory) << ")\n";
    }
    std::cout << "all validations passed\n";
  }
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-photon interference simulator and analysis toolkit for a "
               "dephasing two-level emitter"};
  app.require_subcommand(1);
  app.set_config("--config", "", "structured-text config file (ini format)");
  app.allow_config_extras(false);

  VisibilityCmd vis;
  MapCmd map_cmd;
  InferCmd infer;
  PurcellCmd purcell;
  GenerateCmd gen;
  AnalyzeHbtCmd hbt;
  AnalyzeHomCmd hom;
  FitLifetimeCmd lifetime;
  ValidateCmd validate;

  auto* sim = app.add_subcommand("simulate", "master-equation simulations");
  sim->require_subcommand(1);
  {
    auto* c = sim->add_subcommand("visibility",
                                  "post-selected HOM visibility vs window width");
    vis.emitter.attach(c);
    c->add_option("--gamma_star_sweep_per_ns", vis.gamma_star_list,
                  "sweep of dephasing rates [1/ns] (repeatable)");
    c->add_option("--dt_ns", vis.dt_list, "window widths [ns] (repeatable)");
    c->add_option("--dt_min_ns", vis.dt_min)->capture_default_str();
    c->add_option("--dt_max_ns", vis.dt_max)->capture_default_str();
    c->add_option("--dt_count", vis.dt_count)->capture_default_str();
    c->add_option("--grid_n", vis.grid_n, "quadrature grid size")
        ->capture_default_str();
    c->add_option("--out", vis.out, "output CSV path or -")->capture_default_str();
    c->callback([&vis] { vis.run(); });
  }
  {
    auto* c = sim->add_subcommand(
        "map", "decay time tau_V vs dephasing rate (gamma_sp = 1 units)");
    c->add_option("--gs_min", map_cmd.gs_min)->capture_default_str();
    c->add_option("--gs_max", map_cmd.gs_max)->capture_default_str();
    c->add_option("--gs_count", map_cmd.gs_count)->capture_default_str();
    c->add_option("--map_dt_min", map_cmd.dt_min)->capture_default_str();
    c->add_option("--map_dt_max", map_cmd.dt_max)->capture_default_str();
    c->add_option("--map_dt_count", map_cmd.dt_count)->capture_default_str();
    c->add_option("--grid_n", map_cmd.grid_n)->capture_default_str();
    c->add_option("--out", map_cmd.out)->capture_default_str();
    c->callback([&map_cmd] { map_cmd.run(); });
  }

  auto* inf = app.add_subcommand("infer", "parameter inference");
  inf->require_subcommand(1);
  {
    auto* c = inf->add_subcommand(
        "dephasing", "invert a measured visibility decay time to gamma_star");
    c->add_option("--tau_v_ns", infer.tau_v_ns, "measured decay time [ns]")
        ->required()
        ->check(CLI::PositiveNumber);
    c->add_option("--t1_ns", infer.t1_ns)->capture_default_str();
    c->add_option("--gs_min", infer.map_opts.gs_min)->capture_default_str();
    c->add_option("--gs_max", infer.map_opts.gs_max)->capture_default_str();
    c->add_option("--gs_count", infer.map_opts.gs_count)->capture_default_str();
    c->add_option("--map_dt_min", infer.map_opts.dt_min)->capture_default_str();
    c->add_option("--map_dt_max", infer.map_opts.dt_max)->capture_default_str();
    c->add_option("--map_dt_count", infer.map_opts.dt_count)
        ->capture_default_str();
    c->add_option("--grid_n", infer.map_opts.grid_n)->capture_default_str();
    c->add_flag("--selftest", infer.selftest,
                "also run the inversion round-trip self-test");
    c->add_option("--out", infer.out)->capture_default_str();
    c->callback([&infer] { infer.run(); });
  }

  {
    auto* c = app.add_subcommand(
        "purcell", "visibility vs Purcell factor (or required factor)");
    c->add_option("--t1_ns", purcell.t1_ns)->capture_default_str();
    c->add_option("--t2_star_ns", purcell.t2_star_ns)->capture_default_str();
    c->add_option("--f_p", purcell.f_p_list,
                  "Purcell factors (repeatable; default 1, 7, 15)");
    c->add_option("--target_v", purcell.target_v,
                  "inverse mode: required F_p for this visibility");
    c->add_flag("--allow_inhibition", purcell.allow_inhibition,
                "accept Purcell factors below 1");
    c->add_option("--out", purcell.out)->capture_default_str();
    c->callback([&purcell] { purcell.run(); });
  }

  {
    auto* c = app.add_subcommand("generate",
                                 "generate a synthetic time-tag stream");
    gen.emitter.attach(c);
    c->add_option("--mode", gen.mode, "hbt|hom_parallel|hom_orthogonal")
        ->capture_default_str();
    c->add_option("--n_pulses", gen.n_pulses)->capture_default_str();
    c->add_option("--rep_period_ns", gen.rep_period_ns)->capture_default_str();
    c->add_option("--p_background", gen.p_background)->capture_default_str();
    c->add_option("--jitter_sigma_ns", gen.jitter_sigma_ns)
        ->capture_default_str();
    c->add_option("--loss", gen.loss, "per-photon survival probability")
        ->capture_default_str();
    c->add_option("--seed", gen.seed, "RNG seed (mandatory)")->required();
    c->add_option("--out", gen.out, "output tag file")->required();
    c->callback([&gen] { gen.run(); });
  }

  auto* analyze = app.add_subcommand("analyze", "tag-file analysis");
  analyze->require_subcommand(1);
  {
    auto* c = analyze->add_subcommand("hbt", "g2(0) from a single stream");
    c->add_option("--input", hbt.input)->required();
    c->add_option("--window_start_ns", hbt.window_start_ns)
        ->capture_default_str();
    c->add_option("--window_width_ns", hbt.window_width_ns,
                  "post-selection width [ns]; 0 disables")
        ->capture_default_str();
    c->add_option("--bin_width_ps", hbt.bin_width_ps)->capture_default_str();
    c->add_option("--max_delay_periods", hbt.max_delay_periods)
        ->capture_default_str();
    c->add_option("--halfwidth_ps", hbt.halfwidth_ps,
                  "peak integration halfwidth; 0 selects the default");
    c->add_option("--out", hbt.out)->capture_default_str();
    c->add_option("--hist_out", hbt.hist_out, "coincidence histogram CSV");
    c->callback([&hbt] { hbt.run(); });
  }
  {
    auto* c = analyze->add_subcommand(
        "hom", "visibility from parallel/orthogonal stream pair");
    c->add_option("--parallel", hom.parallel_path)->required();
    c->add_option("--orthogonal", hom.orthogonal_path)->required();
    c->add_option("--hbt", hom.hbt_path,
                  "companion HBT stream for the purity correction");
    c->add_option("--window_start_ns", hom.window_start_ns)
        ->capture_default_str();
    c->add_option("--window_width_ns", hom.window_width_ns)
        ->capture_default_str();
    c->add_option("--g2_hbt", hom.g2_hbt, "measured purity g2_HBT(0)")
        ->capture_default_str();
    c->add_option("--g2_hbt_sigma", hom.g2_hbt_sigma)->capture_default_str();
    c->add_option("--bin_width_ps", hom.bin_width_ps)->capture_default_str();
    c->add_option("--max_delay_periods", hom.max_delay_periods)
        ->capture_default_str();
    c->add_option("--halfwidth_ps", hom.halfwidth_ps)->capture_default_str();
    c->add_option("--out", hom.out)->capture_default_str();
    c->add_option("--hist_out_prefix", hom.hist_out_prefix);
    c->callback([&hom] { hom.run(); });
  }

  auto* fit = app.add_subcommand("fit", "fits on tag files");
  fit->require_subcommand(1);
  {
    auto* c = fit->add_subcommand("lifetime",
                                  "T1 from the folded arrival histogram");
    c->add_option("--input", lifetime.input)->required();
    c->add_option("--bin_width_ps", lifetime.bin_width_ps)
        ->capture_default_str();
    c->add_option("--fit_lo_ns", lifetime.fit_lo_ns,
                  "fit range start [ns]; default 2 bins");
    c->add_option("--fit_hi_ns", lifetime.fit_hi_ns,
                  "fit range end [ns]; default 0.6 periods");
    c->add_option("--hist_out", lifetime.hist_out, "arrival histogram CSV");
    c->add_option("--out", lifetime.out)->capture_default_str();
    c->callback([&lifetime] { lifetime.run(); });
  }

  {
    auto* c = app.add_subcommand(
        "validate", "run the internal oracle suite (closed form vs "
                    "quadrature, MC vs theory at reduced statistics)");
    c->add_option("--seed", validate.seed)->capture_default_str();
    c->callback([&validate] { validate.run(); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
    app.exit(e);
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return 3;
  } catch (const RangeError& e) {
    std::cerr << "extrapolation error: " << e.what() << "\n";
    return 3;
  } catch (const AccuracyError& e) {
    std::cerr << "numerical-accuracy error: " << e.what() << "\n";
    return 4;
  } catch (const SelfTestError& e) {
    std::cerr << "self-test failure: " << e.what() << "\n";
    return 5;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
