// Copyright 2026 The peakrate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "peakrate/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "peakrate/cev.hpp"
#include "peakrate/csv.hpp"
#include "peakrate/error.hpp"
#include "peakrate/ingest.hpp"
#include "peakrate/poisson.hpp"
#include "peakrate/segmentation.hpp"
#include "peakrate/simulate.hpp"
#include "peakrate/spectral.hpp"
#include "peakrate/tail_stats.hpp"

namespace peakrate::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Files, digests and run directories

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::string fmt(double v) { return csv::format_double(v); }

constexpr std::size_t kDefaultSpectralK = 450;

// Collects the outputs of one invocation and writes the manifest last.
class RunDir {
 public:
  RunDir(std::string subcommand, json config) : sub_(std::move(subcommand)), config_(std::move(config)) {}

  void add_input(const std::string& path) { inputs_[path] = hex(fnv1a(read_file(path))); }

  // Creates the directory; must be called after all inputs are registered.
  void open(const std::string& out_dir, const std::string& run_dir) {
    if (!run_dir.empty()) {
      path_ = run_dir;
    } else {
      const std::string digest = hex(fnv1a(manifest().dump())).substr(0, 8);
      const std::string base = sub_ + "-" + utc_stamp() + "-" + digest;
      path_ = fs::path(out_dir) / base;
      for (int i = 2; fs::exists(path_); ++i) path_ = fs::path(out_dir) / (base + "-" + std::to_string(i));
    }
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec || !fs::is_directory(path_)) throw ParameterError("cannot create run directory " + path_.string());
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(path_ / name, std::ios::binary);
    if (!out) throw DataError("cannot write " + (path_ / name).string());
    out << content;
    outputs_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void finish() {
    std::sort(outputs_.begin(), outputs_.end());
    json m = manifest();
    m["outputs"] = outputs_;
    std::ofstream out(path_ / "manifest.json", std::ios::binary);
    out << m.dump(2) << "\n";
  }

  const fs::path& path() const { return path_; }

 private:
  json manifest() const {
    return {{"tool", "peakrate"}, {"version", kVersion}, {"subcommand", sub_}, {"config", config_}, {"inputs", inputs_}};
  }

  std::string sub_;
  json config_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  fs::path path_;
};

std::vector<Session> load_sessions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_sessions_csv(in);
}

std::string sessions_csv(std::span<const Session> sessions) {
  std::ostringstream os;
  write_sessions_csv(os, sessions);
  return os.str();
}

// "lo:hi[:step]"
std::vector<std::size_t> parse_k_range(const std::string& text) {
  std::vector<std::size_t> parts;
  for (auto field : csv::split(text, ':')) {
    auto v = csv::parse_uint(field);
    if (!v) throw ParameterError("bad k range '" + text + "'");
    parts.push_back(static_cast<std::size_t>(*v));
  }
  if (parts.size() < 2 || parts.size() > 3) throw ParameterError("k range must be lo:hi or lo:hi:step");
  return k_range(parts[0], parts[1], parts.size() == 3 ? parts[2] : 1);
}

double variable_value(const Session& s, const std::string& var) {
  if (var == "S") return s.size;
  if (var == "D") return s.duration;
  if (var == "R") return s.rate;
  if (var == "Rpeak") return s.peak_rate;
  throw ParameterError("unknown variable '" + var + "' (S, D, R, Rpeak)");
}

std::vector<double> column(std::span<const Session> sessions, const std::string& var) {
  std::vector<double> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(variable_value(s, var));
  return out;
}

std::vector<std::size_t> select_groups(const std::vector<std::size_t>& requested, std::size_t q) {
  if (requested.empty()) {
    std::vector<std::size_t> all(q);
    for (std::size_t g = 0; g < q; ++g) all[g] = g + 1;
    return all;
  }
  for (std::size_t g : requested) {
    if (g < 1 || g > q) throw ParameterError("group index out of range 1.." + std::to_string(q));
  }
  return requested;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const std::string& what) {
  if (!seed) throw ParameterError("--seed is mandatory for " + what);
  return *seed;
}

json group_header(const SessionGroup& g) {
  return {{"group", g.index}, {"n", g.sessions.size()}, {"lo_percent", g.lo_percent}, {"hi_percent", g.hi_percent}};
}

json ev_json(const EvTestCurve& c) {
  json pts = json::array();
  for (const auto& p : c.points) {
    pts.push_back({{"k", p.k}, {"gamma", p.gamma}, {"statistic", p.statistic}, {"p_value", p.p_value}});
  }
  return pts;
}

std::string ev_csv(const EvTestCurve& c) {
  std::ostringstream os;
  os << "k,gamma,statistic,p_value\n";
  for (const auto& p : c.points) {
    os << p.k << ',' << fmt(p.gamma) << ',' << fmt(p.statistic) << ',' << fmt(p.p_value) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Options

struct Common {
  std::string out_dir = "runs";
  std::string run_dir;
};

struct GroupingOpts {
  std::string sessions;
  std::size_t q = 10;
  std::string predictor = "peak";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out-dir", c.out_dir, "Parent directory for run directories")->capture_default_str();
  sub->add_option("--run-dir", c.run_dir, "Explicit run directory (overrides --out-dir naming)");
}

void add_grouping(CLI::App* sub, GroupingOpts& g) {
  sub->add_option("--sessions", g.sessions, "Session CSV")->required()->check(CLI::ExistingFile);
  sub->add_option("--q,--groups", g.q, "Number of quantile groups")->capture_default_str();
  sub->add_option("--predictor", g.predictor, "Segmentation predictor: peak | maxinput | deltapeak")
      ->capture_default_str();
}

json grouping_json(const GroupingOpts& g) {
  return {{"sessions", g.sessions}, {"q", g.q}, {"predictor", g.predictor}};
}

std::vector<SessionGroup> load_groups(const GroupingOpts& g) {
  auto sessions = load_sessions(g.sessions);
  return split_by_quantiles(sessions, g.q, parse_predictor(g.predictor));
}

// ---------------------------------------------------------------------------
// Subcommands

struct IngestOpts {
  std::string input;
  double gap = 2.0;
  double min_duration = 0.1;
  std::optional<double> delta;
  std::size_t max_peak_packets = 10000;
};

void cmd_ingest(const IngestOpts& o, const Common& c, std::ostream& out) {
  if (!(o.gap > 0.0)) throw ParameterError("gap threshold must be positive");
  if (o.min_duration < 0.0) throw ParameterError("minimum duration must be nonnegative");
  if (o.delta && !(*o.delta > 0.0)) throw ParameterError("delta must be positive");
  json cfg = {{"input", o.input}, {"gap", o.gap}, {"min_duration", o.min_duration},
              {"delta", o.delta ? json(*o.delta) : json(nullptr)}, {"max_peak_packets", o.max_peak_packets}};
  RunDir run("ingest", cfg);
  run.add_input(o.input);
  run.open(c.out_dir, c.run_dir);

  std::ifstream in(o.input);
  auto packets = parse_packets(in);
  IngestConfig ic;
  ic.gap_threshold = o.gap;
  ic.min_duration = o.min_duration;
  ic.delta = o.delta;
  ic.compute_legacy = o.delta.has_value();
  ic.max_peak_packets = o.max_peak_packets;
  IngestStats stats;
  auto sessions = sessionize(packets, ic, &stats);

  run.write("sessions.csv", sessions_csv(sessions));
  run.write_json("ingest.json", {{"packets", stats.packets},
                                 {"sessions", stats.sessions},
                                 {"discarded_sessions", stats.discarded_sessions},
                                 {"total_bytes", stats.total_bytes},
                                 {"discarded_bytes", stats.discarded_bytes}});
  run.finish();
  out << run.path().string() << "\n";
}

void cmd_segment(const GroupingOpts& g, const Common& c, std::ostream& out) {
  RunDir run("segment", grouping_json(g));
  run.add_input(g.sessions);
  run.open(c.out_dir, c.run_dir);
  auto groups = load_groups(g);
  const Predictor pred = parse_predictor(g.predictor);
  json arr = json::array();
  for (const auto& grp : groups) {
    json j = group_header(grp);
    j["min"] = predictor_value(grp.sessions.front(), pred);
    j["max"] = predictor_value(grp.sessions.back(), pred);
    arr.push_back(j);
    run.write("group_" + std::to_string(grp.index) + ".csv", sessions_csv(grp.sessions));
  }
  run.write_json("segments.json", {{"predictor", predictor_name(pred)}, {"groups", arr}});
  run.finish();
  out << run.path().string() << "\n";
}

struct TailsOpts {
  GroupingOpts grouping;
  std::string var = "S";
  std::vector<std::size_t> groups;
  std::vector<std::size_t> k;
  std::string k_range;
  std::optional<std::size_t> gpd_k;
  bool ev = false;
  bool weibull = false;
  std::string ev_k_range;
  std::string gamma_estimator = "hill";
  std::size_t mc_replications = 10000;
  std::size_t mc_grid = 2000;
  double n_prime = 1e6;
  std::optional<std::uint64_t> seed;
};

void cmd_tails(const TailsOpts& o, const Common& c, std::ostream& out) {
  const bool stochastic = o.ev || o.weibull;
  if (stochastic) require_seed(o.seed, "the extreme-value test");
  if (o.gamma_estimator != "hill" && o.gamma_estimator != "mle") throw ParameterError("--gamma-estimator: hill | mle");
  variable_value(Session{}, o.var);
  json cfg = grouping_json(o.grouping);
  cfg.update({{"var", o.var},
              {"groups", o.groups},
              {"k", o.k},
              {"k_range", o.k_range},
              {"gpd_k", o.gpd_k ? json(*o.gpd_k) : json(nullptr)},
              {"ev", o.ev},
              {"weibull", o.weibull},
              {"ev_k_range", o.ev_k_range},
              {"gamma_estimator", o.gamma_estimator},
              {"mc_replications", o.mc_replications},
              {"mc_grid", o.mc_grid},
              {"n_prime", o.n_prime},
              {"seed", o.seed ? json(*o.seed) : json(nullptr)}});
  RunDir run("tails", cfg);
  run.add_input(o.grouping.sessions);
  run.open(c.out_dir, c.run_dir);

  auto groups = load_groups(o.grouping);
  std::optional<EvLimitSample> reference;
  if (stochastic) {
    McConfig mc;
    mc.replications = o.mc_replications;
    mc.grid = o.mc_grid;
    mc.seed = o.seed;
    reference = simulate_ev_limit(mc);
  }
  const GammaEstimator est = o.gamma_estimator == "mle" ? GammaEstimator::Mle : GammaEstimator::Hill;

  json arr = json::array();
  for (std::size_t gi : select_groups(o.groups, o.grouping.q)) {
    const auto& grp = groups[gi - 1];
    const auto x = column(grp.sessions, o.var);
    const std::size_t n = x.size();
    std::vector<std::size_t> ks = o.k;
    if (!o.k_range.empty()) {
      auto r = parse_k_range(o.k_range);
      ks.insert(ks.end(), r.begin(), r.end());
    }
    if (ks.empty() && n >= 3) ks = k_range(std::min<std::size_t>(10, n - 1), std::max<std::size_t>(std::min<std::size_t>(10, n - 1), n / 5), std::max<std::size_t>(1, n / 500));
    json j = group_header(grp);
    j["var"] = o.var;

    auto curve = hill_curve(x, ks);
    json hill = json::array();
    std::ostringstream hc;
    hc << "k,gamma,se\n";
    for (const auto& p : curve.points) {
      hill.push_back({{"k", p.k}, {"gamma", p.gamma}, {"se", p.se}});
      hc << p.k << ',' << fmt(p.gamma) << ',' << fmt(p.se) << '\n';
    }
    j["hill"] = hill;
    const std::string tag = "_g" + std::to_string(gi) + "_" + o.var;
    run.write("hill" + tag + ".csv", hc.str());

    if (o.gpd_k) {
      auto fit = gpd_fit_excesses(x, *o.gpd_k);
      j["gpd"] = {{"k", fit.k}, {"gamma", fit.gamma}, {"beta", fit.beta}, {"threshold", fit.threshold},
                  {"loglik", fit.loglik}, {"qq_correlation", fit.qq_correlation}};
      std::ostringstream qq;
      qq << "empirical,exponential\n";
      for (const auto& [a, b] : fit.qq_points) qq << fmt(a) << ',' << fmt(b) << '\n';
      run.write("gpd_qq" + tag + ".csv", qq.str());
    }
    if (stochastic) {
      std::vector<std::size_t> eks = o.ev_k_range.empty()
                                         ? k_range(std::max<std::size_t>(10, n / 100), std::max<std::size_t>(10, n / 10),
                                                   std::max<std::size_t>(1, n / 1000))
                                         : parse_k_range(o.ev_k_range);
      if (o.ev) {
        auto ev = ev_condition_test(x, eks, *reference, est);
        j["ev"] = ev_json(ev);
        run.write("ev" + tag + ".csv", ev_csv(ev));
      }
      if (o.weibull) {
        auto wb = weibull_alternative_test(x, eks, *reference, o.n_prime, est);
        j["weibull"] = ev_json(wb);
        run.write("weibull" + tag + ".csv", ev_csv(wb));
      }
    }
    arr.push_back(j);
  }
  run.write_json("tails.json", {{"var", o.var}, {"groups", arr}});
  run.finish();
  out << run.path().string() << "\n";
}

struct SpectralOpts {
  GroupingOpts grouping;
  std::vector<std::size_t> k;
  std::optional<double> k_fraction;
  std::string psi_k_range;
  std::size_t bins = 20;
  std::size_t bootstrap_B = 0;
  std::optional<std::size_t> bootstrap_m;
  std::string optimizer = "newton";
  bool fix_slope_zero = false;
  std::optional<std::uint64_t> seed;
};

void cmd_spectral(const SpectralOpts& o, const Common& c, std::ostream& out) {
  if (o.bootstrap_B > 0) require_seed(o.seed, "the bootstrap");
  if (o.optimizer != "newton" && o.optimizer != "brent") throw ParameterError("--optimizer: newton | brent");
  if (o.k_fraction && !(*o.k_fraction > 0.0 && *o.k_fraction <= 1.0)) {
    throw ParameterError("--k-fraction must lie in (0, 1]");
  }
  if (o.k_fraction && !o.k.empty()) throw ParameterError("--k and --k-fraction are exclusive");
  if (o.bins < 1) throw ParameterError("--bins must be positive");
  if (!o.k.empty() && o.k.size() != 1 && o.k.size() != o.grouping.q) {
    throw ParameterError("--k takes one value or one per group");
  }
  json cfg = grouping_json(o.grouping);
  cfg.update({{"k", o.k},
              {"k_fraction", o.k_fraction ? json(*o.k_fraction) : json(nullptr)},
              {"psi_k_range", o.psi_k_range},
              {"bins", o.bins},
              {"bootstrap_B", o.bootstrap_B},
              {"bootstrap_m", o.bootstrap_m ? json(*o.bootstrap_m) : json(nullptr)},
              {"optimizer", o.optimizer},
              {"fix_slope_zero", o.fix_slope_zero},
              {"seed", o.seed ? json(*o.seed) : json(nullptr)}});
  RunDir run("spectral", cfg);
  run.add_input(o.grouping.sessions);
  run.open(c.out_dir, c.run_dir);

  auto sessions = load_sessions(o.grouping.sessions);
  auto groups = split_by_quantiles(sessions, o.grouping.q, parse_predictor(o.grouping.predictor));
  std::vector<TrendGroup> tg;
  std::vector<std::size_t> ks;
  json arr = json::array();
  for (const auto& grp : groups) {
    const std::size_t n = grp.sessions.size();
    std::size_t k = std::min<std::size_t>(kDefaultSpectralK, n);
    if (o.k_fraction) {
      k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(*o.k_fraction * static_cast<double>(n))));
    } else if (!o.k.empty()) {
      k = o.k.size() == 1 ? o.k[0] : o.k[grp.index - 1];
    }
    ks.push_back(k);
    tg.push_back(make_trend_group(grp.sessions, k));
    const auto& t = tg.back();
    json j = group_header(grp);
    j["k"] = k;
    j["n_retained"] = t.angles.size();
    j["median_log_peak_rate"] = t.median_log_peak_rate;
    auto fit = logistic_mle(t.angles);
    j["psi"] = fit.psi;
    j["loglik"] = fit.loglik;
    j["degenerate"] = fit.degenerate;
    std::vector<std::size_t> hist(o.bins, 0);
    for (double a : t.angles) {
      ++hist[std::min(o.bins - 1, static_cast<std::size_t>(a * static_cast<double>(o.bins)))];
    }
    j["theta_histogram"] = hist;
    arr.push_back(j);
    if (!o.psi_k_range.empty()) {
      std::ostringstream pc;
      pc << "k,n_retained,psi\n";
      for (std::size_t kk : parse_k_range(o.psi_k_range)) {
        auto tk = make_trend_group(grp.sessions, kk);
        if (tk.angles.size() < 10) continue;
        pc << kk << ',' << tk.angles.size() << ',' << fmt(logistic_mle(tk.angles).psi) << '\n';
      }
      run.write("psi_curve_g" + std::to_string(grp.index) + ".csv", pc.str());
    }
    std::ostringstream os;
    os << "theta,log_peak_rate\n";
    for (std::size_t i = 0; i < t.angles.size(); ++i) os << fmt(t.angles[i]) << ',' << fmt(t.log_peak_rate[i]) << '\n';
    run.write("angles_g" + std::to_string(grp.index) + ".csv", os.str());
  }

  TrendOptions topts;
  topts.fix_slope_zero = o.fix_slope_zero;
  topts.optimizer = o.optimizer == "brent" ? TrendOptimizer::NestedBrent : TrendOptimizer::Newton;
  auto trend = fit_trend(tg, topts);
  std::ostringstream med;
  med << "group,median_log_peak_rate,psi,trend_psi\n";
  for (std::size_t g = 0; g < arr.size(); ++g) {
    const double tp = half_logit(trend.beta0 + trend.beta1 * tg[g].median_log_peak_rate);
    arr[g]["trend_psi"] = tp;
    med << g + 1 << ',' << fmt(tg[g].median_log_peak_rate) << ',' << fmt(arr[g]["psi"].get<double>()) << ','
        << fmt(tp) << '\n';
  }
  run.write("psi_by_median.csv", med.str());
  if (o.bootstrap_B > 0) {
    BootstrapConfig bc;
    bc.m = o.bootstrap_m.value_or(sessions.size() / 4);
    bc.B = o.bootstrap_B;
    bc.q = o.grouping.q;
    bc.ks = ks;
    bc.seed = *o.seed;
    auto boot = bootstrap_trend_se(sessions, bc);
    trend.se_beta0 = boot.se_beta0;
    trend.se_beta1 = boot.se_beta1;
    trend.B = bc.B;
    trend.m = bc.m;
    trend.dropped = boot.dropped;
    std::ostringstream os;
    os << "beta0,beta1\n";
    for (std::size_t i = 0; i < boot.beta0.size(); ++i) os << fmt(boot.beta0[i]) << ',' << fmt(boot.beta1[i]) << '\n';
    run.write("bootstrap.csv", os.str());
  }
  json tj = {{"beta0", trend.beta0},
             {"beta1", trend.beta1},
             {"se_beta0", std::isnan(trend.se_beta0) ? json(nullptr) : json(trend.se_beta0)},
             {"se_beta1", std::isnan(trend.se_beta1) ? json(nullptr) : json(trend.se_beta1)},
             {"loglik", trend.loglik},
             {"B", trend.B},
             {"m", trend.m},
             {"dropped", trend.dropped},
             {"optimizer", trend.optimizer == TrendOptimizer::Newton ? "newton" : "brent"}};
  run.write_json("spectral.json", {{"groups", arr}, {"trend", tj}});
  run.finish();
  out << run.path().string() << "\n";
}

struct CevOpts {
  GroupingOpts grouping;
  std::string x = "R";
  std::string y = "S";
  std::vector<std::size_t> groups;
  std::string k_range;
  double window = 0.1;
  double max_range = 0.05;
};

void cmd_cev(const CevOpts& o, const Common& c, std::ostream& out) {
  variable_value(Session{}, o.x);
  variable_value(Session{}, o.y);
  json cfg = grouping_json(o.grouping);
  cfg.update({{"x", o.x}, {"y", o.y}, {"groups", o.groups}, {"k_range", o.k_range}, {"window", o.window},
              {"max_range", o.max_range}});
  RunDir run("cev", cfg);
  run.add_input(o.grouping.sessions);
  run.open(c.out_dir, c.run_dir);

  auto groups = load_groups(o.grouping);
  const std::string label = o.x + "|" + o.y;
  StabilityConfig sc{o.window, o.max_range};
  json arr = json::array();
  for (std::size_t gi : select_groups(o.groups, o.grouping.q)) {
    const auto& grp = groups[gi - 1];
    const auto xs = column(grp.sessions, o.x);
    const auto ys = column(grp.sessions, o.y);
    const std::size_t n = xs.size();
    auto ks = o.k_range.empty() ? k_range(std::min<std::size_t>(2, n), n, std::max<std::size_t>(1, n / 200))
                                : parse_k_range(o.k_range);
    auto curve = hillish_curve(xs, ys, ks, label);
    auto stab = hillish_stability(curve, sc);
    std::ostringstream hc, sr;
    hc << "k,hillish\n";
    for (const auto& p : curve.points) hc << p.k << ',' << fmt(p.hillish) << '\n';
    sr << "k_start,k_end,relative_range\n";
    for (const auto& w : stab.windows) sr << w.k_start << ',' << w.k_end << ',' << fmt(w.relative_range) << '\n';
    const std::string tag = "_g" + std::to_string(gi);
    run.write("hillish" + tag + ".csv", hc.str());
    run.write("stability" + tag + ".csv", sr.str());
    json j = group_header(grp);
    j["pair"] = label;
    j["stable"] = stab.stable;
    if (!stab.windows.empty()) {
      j["best_window"] = {{"k_start", stab.best.k_start}, {"k_end", stab.best.k_end},
                          {"relative_range", stab.best.relative_range}};
    }
    arr.push_back(j);
  }
  run.write_json("cev.json", {{"pair", label}, {"groups", arr}});
  run.finish();
  out << run.path().string() << "\n";
}

struct PoissonOpts {
  GroupingOpts grouping;
  std::optional<std::size_t> max_lag;
  double alpha = 0.05;
};

void cmd_poisson(const PoissonOpts& o, const Common& c, std::ostream& out) {
  json cfg = grouping_json(o.grouping);
  cfg.update({{"max_lag", o.max_lag ? json(*o.max_lag) : json(nullptr)}, {"alpha", o.alpha}});
  RunDir run("poisson", cfg);
  run.add_input(o.grouping.sessions);
  run.open(c.out_dir, c.run_dir);

  auto groups = load_groups(o.grouping);
  json arr = json::array();
  for (const auto& grp : groups) {
    auto d = poisson_diagnostics(grp.sessions, o.max_lag, o.alpha);
    json j = group_header(grp);
    j.update({{"lambda_hat", d.lambda_hat}, {"qq_correlation", d.qq_correlation}, {"bound", d.bound},
              {"max_lag", d.acf.size() - 1}, {"spikes", d.spikes}, {"spike_fraction", d.spike_fraction}});
    arr.push_back(j);
    std::ostringstream qq, acf;
    qq << "empirical,exponential\n";
    for (const auto& [a, b] : d.qq_points) qq << fmt(a) << ',' << fmt(b) << '\n';
    acf << "lag,acf,bound\n";
    for (const auto& [h, r] : d.acf) acf << h << ',' << fmt(r) << ',' << fmt(d.bound) << '\n';
    const std::string tag = "_g" + std::to_string(grp.index);
    run.write("qq" + tag + ".csv", qq.str());
    run.write("acf" + tag + ".csv", acf.str());
  }
  run.write_json("poisson.json", {{"alpha", o.alpha}, {"groups", arr}});
  run.finish();
  out << run.path().string() << "\n";
}

// Simulation spec from JSON. Relative paths resolve against the spec file.
SimulationSpec load_spec(const std::string& path, std::vector<std::string>& inputs) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DataError("spec " + path + ": " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();
  try {
    const std::size_t q = j.value("q", std::size_t{10});
    SimulationSpec spec;
    std::vector<Session> reference;
    if (j.contains("sessions")) {
      const fs::path p = base / j.at("sessions").get<std::string>();
      inputs.push_back(p.string());
      reference = load_sessions(p.string());
      spec = spec_from_sessions(reference, q);
    }
    spec.q = q;
    if (j.contains("rpeak_source")) spec.rpeak_source = j.at("rpeak_source").get<std::vector<double>>();
    if (j.contains("lambdas")) spec.lambdas = j.at("lambdas").get<std::vector<double>>();
    spec.beta0 = j.at("beta0").get<double>();
    spec.beta1 = j.at("beta1").get<double>();
    if (j.contains("radial_gamma")) spec.radial_gamma = j.at("radial_gamma").get<double>();
    spec.radial_scale = j.value("radial_scale", 1.0);
    if (j.contains("horizon_seconds")) spec.horizon_seconds = j.at("horizon_seconds").get<double>();
    if (j.contains("horizon_sessions")) spec.horizon_sessions = j.at("horizon_sessions").get<std::size_t>();
    if (j.value("backtransform", false)) {
      if (reference.empty()) throw ParameterError("backtransform needs a reference sessions file");
      std::vector<MarginalTable> tables;
      for (const auto& g : split_by_quantiles(reference, q, Predictor::PeakRate)) {
        MarginalTable t;
        for (const auto& s : g.sessions) {
          t.size.push_back(s.size);
          t.duration.push_back(s.duration);
        }
        std::sort(t.size.begin(), t.size.end());
        std::sort(t.duration.begin(), t.duration.end());
        tables.push_back(std::move(t));
      }
      spec.backtransform = std::move(tables);
    }
    return spec;
  } catch (const json::exception& e) {
    throw ParameterError("spec " + path + ": " + e.what());
  }
}

struct SimulateOpts {
  std::string spec;
  std::optional<std::uint64_t> seed;
};

void cmd_simulate(const SimulateOpts& o, const Common& c, std::ostream& out) {
  const std::uint64_t seed = require_seed(o.seed, "simulate");
  std::vector<std::string> inputs{o.spec};
  auto spec = load_spec(o.spec, inputs);
  spec.seed = seed;
  validate(spec);
  RunDir run("simulate", {{"spec", o.spec}, {"seed", seed}});
  for (const auto& p : inputs) run.add_input(p);
  run.open(c.out_dir, c.run_dir);

  auto sim = simulate_sessions(spec);
  run.write("sessions.csv", sessions_csv(sim.sessions));
  std::ostringstream lat;
  lat << "group,psi,theta,radius\n";
  std::vector<std::size_t> counts(spec.q, 0);
  for (std::size_t i = 0; i < sim.sessions.size(); ++i) {
    lat << sim.group[i] << ',' << fmt(sim.psi[i]) << ',' << fmt(sim.theta[i]) << ',' << fmt(sim.radius[i]) << '\n';
    ++counts[sim.group[i] - 1];
  }
  run.write("latent.csv", lat.str());
  run.write_json("simulate.json", {{"sessions", sim.sessions.size()},
                                   {"horizon", sim.horizon},
                                   {"group_counts", counts},
                                   {"q", spec.q},
                                   {"lambdas", spec.lambdas},
                                   {"beta0", spec.beta0},
                                   {"beta1", spec.beta1},
                                   {"radial_gamma", spec.radial_gamma},
                                   {"radial_scale", spec.radial_scale},
                                   {"backtransform", spec.backtransform.has_value()},
                                   {"seed", seed}});
  run.finish();
  out << run.path().string() << "\n";
}

struct ReportOpts {
  std::vector<std::string> runs;
  std::string root;
};

void cmd_report(const ReportOpts& o, const Common& c, std::ostream& out) {
  std::vector<fs::path> dirs;
  for (const auto& r : o.runs) dirs.emplace_back(r);
  if (!o.root.empty()) {
    if (!fs::is_directory(o.root)) throw ParameterError("not a directory: " + o.root);
    for (const auto& e : fs::directory_iterator(o.root)) {
      if (e.is_directory() && fs::exists(e.path() / "manifest.json")) dirs.push_back(e.path());
    }
  }
  if (dirs.empty()) throw ParameterError("report needs --runs or --root");
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    if (!fs::exists(d / "manifest.json")) throw ParameterError("no manifest in " + d.string());
  }
  std::vector<std::string> names;
  for (const auto& d : dirs) names.push_back(d.string());
  RunDir run("report", {{"runs", names}});
  run.open(c.out_dir, c.run_dir);

  json arr = json::array();
  for (const auto& d : dirs) {
    json entry = {{"dir", d.filename().string()}};
    entry["manifest"] = json::parse(read_file(d / "manifest.json"));
    json artifacts = json::object();
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(d)) {
      if (e.path().extension() == ".json" && e.path().filename() != "manifest.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) artifacts[f.filename().string()] = json::parse(read_file(f));
    entry["artifacts"] = artifacts;
    arr.push_back(entry);
  }
  run.write_json("report.json", {{"runs", arr}});
  run.finish();
  out << run.path().string() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Session-level extremal dependence analysis of packet traces", "peakrate"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;

  IngestOpts ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Cluster packets into sessions");
  s_ingest->add_option("--input", ingest.input, "Packet CSV (ts,src,dst,bytes)")->required()->check(CLI::ExistingFile);
  s_ingest->add_option("--gap", ingest.gap, "Gap threshold t in seconds")->capture_default_str();
  s_ingest->add_option("--min-duration", ingest.min_duration, "Drop sessions shorter than this")->capture_default_str();
  s_ingest->add_option("--delta", ingest.delta, "Window for the legacy I_delta / R_delta predictors");
  s_ingest->add_option("--max-peak-packets", ingest.max_peak_packets,
                      "Refuse the quadratic peak-rate scan above this packet count")->capture_default_str();
  add_common(s_ingest, common);

  GroupingOpts segment;
  auto* s_segment = app.add_subcommand("segment", "Split sessions into quantile groups");
  add_grouping(s_segment, segment);
  add_common(s_segment, common);

  TailsOpts tails;
  auto* s_tails = app.add_subcommand("tails", "Hill, GPD and extreme-value-condition diagnostics");
  add_grouping(s_tails, tails.grouping);
  s_tails->add_option("--var", tails.var, "Variable: S | D | R | Rpeak")->capture_default_str();
  s_tails->add_option("--group", tails.groups, "Group indices (default all)");
  s_tails->add_option("--k", tails.k, "Hill k values");
  s_tails->add_option("--k-range", tails.k_range, "Hill k range lo:hi[:step]");
  s_tails->add_option("--gpd-k", tails.gpd_k, "Fit a GPD to the k largest excesses");
  s_tails->add_flag("--ev", tails.ev, "Run the extreme-value-condition test");
  s_tails->add_flag("--weibull", tails.weibull, "Re-test after the finite-endpoint transform");
  s_tails->add_option("--ev-k-range", tails.ev_k_range, "k range for the test lo:hi[:step]");
  s_tails->add_option("--gamma-estimator", tails.gamma_estimator, "hill | mle")->capture_default_str();
  s_tails->add_option("--mc-replications", tails.mc_replications, "Monte Carlo draws of the limit law")->capture_default_str();
  s_tails->add_option("--mc-grid", tails.mc_grid, "Brownian path grid points")->capture_default_str();
  s_tails->add_option("--n-prime", tails.n_prime, "Offset 1/n' of the finite-endpoint transform")->capture_default_str();
  s_tails->add_option("--seed", tails.seed, "RNG seed (mandatory with --ev/--weibull)");
  add_common(s_tails, common);

  SpectralOpts spectral;
  auto* s_spectral = app.add_subcommand("spectral", "Logistic spectral fits and the peak-rate trend");
  add_grouping(s_spectral, spectral.grouping);
  s_spectral->add_option("--k", spectral.k, "Antirank k (one value or one per group)");
  s_spectral->add_option("--k-fraction", spectral.k_fraction, "Per-group k as a fraction of group size");
  s_spectral->add_option("--psi-k-range", spectral.psi_k_range, "Emit psi(k) stability curves over lo:hi[:step]");
  s_spectral->add_option("--bins", spectral.bins, "Angle histogram bins")->capture_default_str();
  s_spectral->add_option("--bootstrap-B", spectral.bootstrap_B, "Bootstrap replications (0 = none)")
      ->capture_default_str();
  s_spectral->add_option("--bootstrap-m", spectral.bootstrap_m, "Bootstrap resample size (default n/4)");
  s_spectral->add_option("--optimizer", spectral.optimizer, "newton | brent")->capture_default_str();
  s_spectral->add_flag("--fix-slope-zero", spectral.fix_slope_zero, "Fit the intercept only");
  s_spectral->add_option("--seed", spectral.seed, "RNG seed (mandatory with the bootstrap)");
  add_common(s_spectral, common);

  CevOpts cev;
  auto* s_cev = app.add_subcommand("cev", "Hillish curves and stability windows");
  add_grouping(s_cev, cev.grouping);
  s_cev->add_option("--x", cev.x, "Conditioned variable")->capture_default_str();
  s_cev->add_option("--y", cev.y, "Heavy-tailed conditioning variable")->capture_default_str();
  s_cev->add_option("--group", cev.groups, "Group indices (default all)");
  s_cev->add_option("--k-range", cev.k_range, "k range lo:hi[:step]");
  s_cev->add_option("--window", cev.window, "Window width as a fraction of n")->capture_default_str();
  s_cev->add_option("--max-range", cev.max_range, "Relative range threshold")->capture_default_str();
  add_common(s_cev, common);

  PoissonOpts poisson;
  auto* s_poisson = app.add_subcommand("poisson", "Exponential QQ and autocorrelation checks");
  add_grouping(s_poisson, poisson.grouping);
  s_poisson->add_option("--max-lag", poisson.max_lag, "Largest lag (default n-1)");
  s_poisson->add_option("--alpha", poisson.alpha, "Significance level of the ACF bound")->capture_default_str();
  add_common(s_poisson, common);

  SimulateOpts simulate;
  auto* s_simulate = app.add_subcommand("simulate", "Generate synthetic sessions");
  s_simulate->add_option("--spec", simulate.spec, "Simulation spec JSON")->required()->check(CLI::ExistingFile);
  s_simulate->add_option("--seed", simulate.seed, "RNG seed")->required();
  add_common(s_simulate, common);

  ReportOpts report;
  auto* s_report = app.add_subcommand("report", "Collate run directories into one JSON summary");
  s_report->add_option("--runs", report.runs, "Run directories");
  s_report->add_option("--root", report.root, "Collate every run directory under this path");
  add_common(s_report, common);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (s_ingest->parsed()) cmd_ingest(ingest, common, out);
    if (s_segment->parsed()) cmd_segment(segment, common, out);
    if (s_tails->parsed()) cmd_tails(tails, common, out);
    if (s_spectral->parsed()) cmd_spectral(spectral, common, out);
    if (s_cev->parsed()) cmd_cev(cev, common, out);
    if (s_poisson->parsed()) cmd_poisson(poisson, common, out);
    if (s_simulate->parsed()) cmd_simulate(simulate, common, out);
    if (s_report->parsed()) cmd_report(report, common, out);
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kConvergence;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}

}  // namespace peakrate::cli
