#include "hrg/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/sha.h>

#include "hrg/ensemble.hpp"
#include "hrg/errors.hpp"
#include "hrg/hamiltonian.hpp"
#include "hrg/observables.hpp"
#include "hrg/renorm.hpp"
#include "hrg/rgflow.hpp"

namespace fs = std::filesystem;

namespace hrg {

namespace {

// ---- config access --------------------------------------------------------

std::string child(const std::string& at, const std::string& key) { return at + "/" + key; }

void check_keys(const json& j, const std::string& at, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(at.empty() ? "/" : at, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(child(at, key), "unknown key");
    }
  }
}

double number(const json& j, const std::string& at, const char* key, std::optional<double> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(child(at, key), "required number is missing");
  }
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(child(at, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(child(at, key), "expected a finite number");
  return x;
}

std::int64_t integer(const json& j, const std::string& at, const char* key, std::optional<std::int64_t> def = std::nullopt,
                     std::int64_t lo = std::numeric_limits<std::int64_t>::min(),
                     std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
  std::int64_t x;
  if (!j.contains(key)) {
    if (!def) throw ConfigError(child(at, key), "required integer is missing");
    x = *def;
  } else {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(child(at, key), "expected an integer");
    x = v.get<std::int64_t>();
  }
  if (x < lo || x > hi) throw ConfigError(child(at, key), fmt::format("value {} outside [{}, {}]", x, lo, hi));
  return x;
}

std::uint64_t unsigned_integer(const json& j, const std::string& at, const char* key, std::uint64_t def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) throw ConfigError(child(at, key), "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string text(const json& j, const std::string& at, const char* key, std::optional<std::string> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(child(at, key), "required string is missing");
  }
  if (!j.at(key).is_string()) throw ConfigError(child(at, key), "expected a string");
  return j.at(key).get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& at, const char* key,
                            std::optional<std::vector<double>> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(child(at, key), "required array is missing");
  }
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(child(at, key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(fmt::format("{}/{}", child(at, key), i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

Interval interval(const json& j, const std::string& at, const char* key, std::optional<Interval> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(child(at, key), "required interval is missing");
  }
  const auto v = numbers(j, at, key);
  if (v.size() != 2) throw ConfigError(child(at, key), "expected [lo, hi]");
  if (v[0] > v[1]) throw ConfigError(child(at, key), "interval needs lo <= hi");
  return {v[0], v[1]};
}

std::complex<double> complex_value(const json& j, const std::string& at, const char* key, std::complex<double> def) {
  if (!j.contains(key)) return def;
  const auto v = numbers(j, at, key);
  if (v.size() != 2) throw ConfigError(child(at, key), "expected [re, im]");
  return {v[0], v[1]};
}

const json& object(const json& j, const std::string& at, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ConfigError(child(at, key), "expected an object");
  return j.at(key);
}

GridOptions parse_grid(const json& j, const std::string& at) {
  check_keys(j, at, {"bins", "tail_target", "iqr_span"});
  GridOptions g;
  g.bins = static_cast<std::size_t>(integer(j, at, "bins", 4096, 16, 1 << 22));
  g.tail_target = number(j, at, "tail_target", g.tail_target);
  g.iqr_span = number(j, at, "iqr_span", g.iqr_span);
  return g;
}

// ---- output ---------------------------------------------------------------

std::string num(double x) { return fmt::format("{}", x); }

class Csv {
 public:
  Csv(const fs::path& path, const std::string& digest, std::initializer_list<const char*> header) : os_(path) {
    if (!os_) throw Error(fmt::format("cannot write {}", path.string()));
    os_ << "# config_digest " << digest << '\n';
    bool first = true;
    for (const char* h : header) {
      os_ << (first ? "" : ",") << h;
      first = false;
    }
    os_ << '\n';
  }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }

 private:
  static std::string cell(double x) { return num(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I, std::enable_if_t<std::is_integral_v<I>, int> = 0>
  static std::string cell(I i) { return std::to_string(i); }
  std::ofstream os_;
};

void write_json(const fs::path& path, json j, const std::string& digest) {
  if (j.is_object() && !j.contains("config_digest")) j["config_digest"] = digest;
  std::ofstream os(path);
  if (!os) throw Error(fmt::format("cannot write {}", path.string()));
  os << j.dump(2) << '\n';
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---- shared run context -----------------------------------------------------

struct Context {
  const json& cfg;
  std::uint64_t master_seed;
  int threads;
  std::size_t dense_cap;
  fs::path out;
  std::string digest;
  ExperimentResult& result;

  Csv csv(const char* name, std::initializer_list<const char*> header) const { return Csv(out / name, digest, header); }
  Csv csv(const std::string& name, std::initializer_list<const char*> header) const {
    return Csv(out / name, digest, header);
  }
  void json_file(const char* name, const json& j) const { write_json(out / name, j, digest); }

  SeedSchedule seeds(std::uint64_t stream) const { return {master_seed, stream}; }
  void put(const std::string& key, double v) const { result.summary.emplace_back(key, v); }
  void warn(std::string w) const { result.warnings.push_back(std::move(w)); }

  template <class T>
  void record_failures(const EnsembleRun<T>& run) const {
    for (const auto& f : run.failures) {
      warn(fmt::format("realization {} (seed {}) excluded: {}", f.index, f.seed, f.message));
    }
    if (run.resamples > 0) warn(fmt::format("{} singular draws were resampled", run.resamples));
  }
};

std::size_t realizations(const json& cfg, std::size_t def) {
  return static_cast<std::size_t>(integer(cfg, "", "realizations", static_cast<std::int64_t>(def), 1, 100000000));
}

void require_dense(int n, std::size_t cap) {
  if ((std::size_t{1} << n) > cap) {
    throw ResourceError(fmt::format("n = {} needs a {}x{} dense matrix, above the dense cap {}; raise --dense-cap or "
                                    "use a block experiment",
                                    n, std::size_t{1} << n, std::size_t{1} << n, cap));
  }
}

std::string mode_name(const LaplacianMode& mode) {
  if (const auto* t = std::get_if<Truncated>(&mode)) return fmt::format("truncated(m={})", t->m);
  return "tail_corrected";
}

// ---- experiments ------------------------------------------------------------

void run_spectrum(const Context& ctx) {
  const auto model = parse_model(ctx.cfg);
  require_dense(model.n, ctx.dense_cap);
  const std::size_t count = realizations(ctx.cfg, 1);
  {
    auto lv = ctx.csv("laplacian_levels.csv", {"level", "value", "multiplicity"});
    int level = 0;
    for (const auto& l : laplacian_eigensystem(model.hopping, model.mode, model.n)) lv.row(level++, l.value, l.multiplicity);
  }
  struct Out {
    Eigen::VectorXd ev;
    std::size_t degenerate = 0;
    double stochastic_error = 0.0;
  };
  auto run = run_ensemble(ctx.seeds(0), count, ctx.threads, [&](std::uint64_t seed) {
    const auto sys = assemble(model.hopping, model.mode, sample_potential(model.density, std::size_t{1} << model.n, seed),
                              0.0, seed);
    const auto sd = diagonalize(sys, ctx.dense_cap);
    const Eigen::MatrixXd sq = sd.eigenvectors.cwiseAbs2();
    const double err = std::max((sq.rowwise().sum().array() - 1.0).abs().maxCoeff(),
                                (sq.colwise().sum().array() - 1.0).abs().maxCoeff());
    return Out{sd.eigenvalues, sd.degenerate_pairs, err};
  });
  ctx.record_failures(run);
  auto csv = ctx.csv("eigenvalues.csv", {"realization", "index", "eigenvalue"});
  RunningStats degenerate;
  double max_err = 0.0;
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    if (!run.results[i]) continue;
    const auto& r = *run.results[i];
    for (Eigen::Index k = 0; k < r.ev.size(); ++k) csv.row(i, k, r.ev(k));
    degenerate.add(static_cast<double>(r.degenerate));
    max_err = std::max(max_err, r.stochastic_error);
  }
  ctx.json_file("spectrum.json", {{"n", model.n},
                                   {"mode", mode_name(model.mode)},
                                   {"density", model.density.describe()},
                                   {"realizations", run.succeeded()},
                                   {"max_stochasticity_error", max_err}});
  ctx.put("realizations", static_cast<double>(run.succeeded()));
  ctx.put("mean_degenerate_pairs", degenerate.mean());
  ctx.put("max_stochasticity_error", max_err);
}

void run_rgflow(const Context& ctx) {
  const json& c = ctx.cfg;
  const auto model = parse_model(c);
  const int r_max = static_cast<int>(integer(c, "", "r_max", 12, 1, 200));
  const auto energies = c.contains("energies") ? numbers(c, "", "energies") : std::vector<double>{number(c, "", "energy", 0.0)};
  if (energies.empty()) throw ConfigError("/energies", "needs at least one energy");
  const GridOptions grid = parse_grid(object(c, "", "grid"), "/grid");
  const std::string method_name = text(c, "", "method", "grid");
  FlowMethod method = GridMethod{};
  if (method_name == "mc") {
    method = McMethod{static_cast<std::size_t>(integer(c, "", "samples", 1 << 14, 16, 1 << 24)), derive_seed(ctx.seeds(2), 0)};
  } else if (method_name != "grid") {
    throw ConfigError("/method", "expected \"grid\" or \"mc\"");
  }

  const auto dom = check_cauchy_domination(model.density);
  if (!dom.ok) ctx.warn("single-site density is not Cauchy dominated on the probe grid");

  json verdicts = json::array();
  auto summary = ctx.csv("verdicts.csv", {"energy", "rate_hat", "rate_se", "delta_hat", "holds"});
  double worst_rate = -INFINITY, worst_se = 0.0, worst_delta = INFINITY;
  bool all_hold = true;
  for (std::size_t e = 0; e < energies.size(); ++e) {
    const auto state = run_flow(model.density, model.hopping, energies[e], r_max, method, grid);
    const auto name = energies.size() == 1 ? std::string("flow.csv") : fmt::format("flow_{:03d}.csv", e);
    auto flow = ctx.csv(name, {"r", "p_r", "supnorm", "mass_leak"});
    for (std::size_t r = 0; r < state.supnorm_series.size(); ++r) {
      flow.row(r, r == 0 ? 0.0 : state.hopping_prefix[r - 1], state.supnorm_series[r], state.mass_leak[r]);
    }
    const auto v = assumption_verdict(state, model.hopping.c());
    summary.row(energies[e], v.rate_hat, v.rate_se, v.delta_hat, v.holds ? 1 : 0);
    verdicts.push_back({{"energy", energies[e]},
                        {"rate_hat", v.rate_hat},
                        {"rate_se", v.rate_se},
                        {"delta_hat", v.delta_hat},
                        {"holds", v.holds},
                        {"fit_points", v.fit_points}});
    if (v.rate_hat > worst_rate) {
      worst_rate = v.rate_hat;
      worst_se = v.rate_se;
    }
    worst_delta = std::min(worst_delta, v.delta_hat);
    all_hold = all_hold && v.holds;
    if (energies.size() == 1) {
      auto dens = ctx.csv("density.csv", {"x", "density"});
      for (std::size_t i = 0; i < state.density.bins(); ++i) dens.row(state.density.midpoint(i), state.density.values[i]);
    }
  }
  ctx.json_file("flow.json", {{"density", model.density.describe()},
                                     {"c", model.hopping.c()},
                                     {"method", method_name},
                                     {"r_max", r_max},
                                     {"cauchy_domination", {{"c_hat", finite_or_null(dom.c_hat)}, {"ok", dom.ok}}},
                                     {"verdicts", verdicts},
                                     {"sup_rate_hat", worst_rate},
                                     {"holds", all_hold}});
  ctx.put("rate_hat", worst_rate);
  ctx.put("rate_se", worst_se);
  ctx.put("delta_hat", worst_delta);
  ctx.put("holds", all_hold ? 1.0 : 0.0);
}

void run_greens(const Context& ctx) {
  const json& c = ctx.cfg;
  const auto model = parse_model(c);
  require_dense(model.n, ctx.dense_cap);
  const double energy = number(c, "", "energy", 0.0);
  const std::size_t count = realizations(c, 100);
  const std::size_t size = std::size_t{1} << model.n;
  std::vector<SiteIndex> sites;
  if (c.contains("sites")) {
    for (double s : numbers(c, "", "sites")) {
      if (s < 0 || s >= static_cast<double>(size) || s != std::floor(s)) throw ConfigError("/sites", "site outside B_n");
      sites.push_back(static_cast<SiteIndex>(s));
    }
  } else {
    for (SiteIndex j = 0; j < size; ++j) sites.push_back(j);
  }
  struct Row {
    std::vector<double> dense, rec;
  };
  auto run = run_ensemble(ctx.seeds(0), count, ctx.threads, [&](std::uint64_t seed) {
    const auto sys = assemble(model.hopping, model.mode, sample_potential(model.density, size, seed), 0.0, seed);
    const Eigen::VectorXd col = green_column(sys, 0, energy, ctx.dense_cap);
    Row r;
    for (SiteIndex j : sites) {
      r.dense.push_back(col(static_cast<Eigen::Index>(j)));
      r.rec.push_back(green_recursion(sys, j, energy, ctx.dense_cap).value);
    }
    return r;
  });
  ctx.record_failures(run);
  auto csv = ctx.csv("greens.csv", {"realization", "j", "distance", "dense", "recursion", "rel_err"});
  double max_rel = 0.0;
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    if (!run.results[i]) continue;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      const double d = run.results[i]->dense[k], r = run.results[i]->rec[k];
      const double rel = std::abs(d - r) / std::max(std::abs(d), 1e-300);
      max_rel = std::max(max_rel, rel);
      csv.row(i, sites[k], hier_distance(0, sites[k]), d, r, rel);
    }
  }
  ctx.put("realizations", static_cast<double>(run.succeeded()));
  ctx.put("max_rel_err", max_rel);

  // Optional law of Phi_n(E) against the grid flow of the shifted density.
  if (c.contains("phi")) {
    const json& p = object(c, "", "phi");
    check_keys(p, "/phi", {"realizations", "grid"});
    const std::size_t pc = static_cast<std::size_t>(integer(p, "/phi", "realizations", 10000, 10, 100000000));
    const auto g = parse_grid(object(p, "/phi", "grid"), "/phi/grid");
    auto phis = run_ensemble(ctx.seeds(1), pc, ctx.threads, [&](std::uint64_t seed) {
      const auto sys = assemble(model.hopping, Truncated{model.n}, sample_potential(model.density, size, seed), 0.0, seed);
      return phi_by_renormalization(sys, energy);
    });
    ctx.record_failures(phis);
    std::vector<double> values;
    for (const auto& v : phis.results) {
      if (v) values.push_back(*v);
    }
    std::sort(values.begin(), values.end());
    const auto flow = run_flow(model.density, model.hopping, energy, model.n, GridMethod{}, g);
    const double ks = ks_distance(values, [&](double x) { return flow.density.cdf(x); });
    auto pcsv = ctx.csv("phi.csv", {"quantile", "empirical", "flow_cdf"});
    for (std::size_t k = 1; k < 100; ++k) {
      const double x = quantile_sorted(values, k / 100.0);
      pcsv.row(k / 100.0, x, flow.density.cdf(x));
    }
    ctx.put("phi_ks", ks);
  }
}

void run_fracmom(const Context& ctx) {
  const json& c = ctx.cfg;
  const auto model = parse_model(c);
  require_dense(model.n, ctx.dense_cap);
  FmScanSpec spec;
  spec.density = model.density;
  spec.hopping = model.hopping;
  spec.mode = model.mode;
  spec.n = model.n;
  spec.energy = number(c, "", "energy", 0.0);
  spec.s = number(c, "", "s", 0.5);
  if (!(spec.s > 0 && spec.s < 1)) throw ConfigError("/s", "fractional moment needs s in (0, 1)");
  spec.realizations = realizations(c, 1000);
  spec.seeds = ctx.seeds(0);
  spec.threads = ctx.threads;
  spec.dense_cap = ctx.dense_cap;
  if (c.contains("sites")) {
    for (double s : numbers(c, "", "sites")) spec.k_list.push_back(static_cast<SiteIndex>(s));
  }
  const auto scan = fractional_moment_scan(spec);
  for (const auto& w : scan.warnings) ctx.warn(w);
  if (scan.failures > 0) ctx.warn(fmt::format("{} realizations excluded", scan.failures));
  auto csv = ctx.csv("fracmom.csv", {"distance", "s", "mean", "stderr", "count"});
  for (const auto& r : scan.rows) csv.row(r.distance, r.s, r.mean, r.stderr_mean, r.count);
  ctx.put("one_plus_mu", scan.one_plus_mu);
  ctx.put("one_plus_mu_se", scan.one_plus_mu_se);
  ctx.put("mu_hat", scan.mu_hat);
}

struct EcRun {
  EcFit fit;
  double c_hat = 0.0;
  std::size_t realizations = 0;
};

// Eigenpairs with eigenvalue in [lo, hi].
SpectralData eigenpairs_in(const HamiltonianSystem& sys, const Interval& I, std::size_t cap) {
  return diagonalize_window(sys, std::nextafter(I.lo, -INFINITY), I.hi, cap);
}

// Shell means at site 0 per realization plus the decay fit and constant.
EcRun ec_ensemble(const Context& ctx, const ModelSpec& model, const Interval& I, std::size_t count, std::uint64_t stream) {
  auto run = run_ensemble(ctx.seeds(stream), count, ctx.threads, [&](std::uint64_t seed) {
    const auto sys = assemble(model.hopping, model.mode, sample_potential(model.density, std::size_t{1} << model.n, seed),
                              0.0, seed);
    return ec_shell_means(eigenpairs_in(sys, I, ctx.dense_cap), 0, I);
  });
  ctx.record_failures(run);
  std::vector<std::vector<double>> per;
  for (auto& r : run.results) {
    if (r) per.push_back(std::move(*r));
  }
  EcRun out;
  out.realizations = per.size();
  out.fit = ec_decay_fit(per);
  out.c_hat = ec_weighted_constant(out.fit.table, 0.5 * out.fit.mu_hat, I.width());
  return out;
}

void run_ec(const Context& ctx) {
  const json& c = ctx.cfg;
  const auto model = parse_model(c);
  require_dense(model.n, ctx.dense_cap);
  const Interval I = interval(c, "", "interval");
  const auto ec = ec_ensemble(ctx, model, I, realizations(c, 300), 0);
  auto csv = ctx.csv("shells.csv", {"distance", "mean", "stderr", "count"});
  for (const auto& r : ec.fit.table) csv.row(r.distance, r.mean, r.stderr_mean, r.count);
  for (int d : ec.fit.empty_shells) ctx.warn(fmt::format("shell {} has vanishing mean", d));
  ctx.json_file("ec.json", {{"mu_hat", ec.fit.mu_hat},
                                   {"stderr_mu", ec.fit.stderr_mu},
                                   {"ci95", {ec.fit.ci_lo, ec.fit.ci_hi}},
                                   {"c_hat", finite_or_null(ec.c_hat)},
                                   {"c_hat_mu", 0.5 * ec.fit.mu_hat},
                                   {"interval", {I.lo, I.hi}},
                                   {"realizations", ec.realizations}});
  ctx.put("mu_hat", ec.fit.mu_hat);
  ctx.put("stderr_mu", ec.fit.stderr_mu);
  ctx.put("ci_lo", ec.fit.ci_lo);
  ctx.put("ci_hi", ec.fit.ci_hi);
  ctx.put("c_hat", ec.c_hat);
}

void run_ipr(const Context& ctx) {
  const json& c = ctx.cfg;
  const auto model = parse_model(c);
  require_dense(model.n, ctx.dense_cap);
  const double energy = number(c, "", "energy", 0.0);
  const double w = number(c, "", "W", 1.0);
  const double eps = number(c, "", "eps_ipr", 0.1);
  const double q = number(c, "", "q", 2.0);
  const Interval I = interval(c, "", "interval");
  const std::size_t count = realizations(c, 200);
  const double half = std::exp2(-model.n - 1) * w;
  const Interval near{energy - half, energy + half};

  struct Out {
    IprSample window, interval;
    bool event = false;
    double pq_sum = 0.0;
    std::vector<double> shells;
  };
  auto run = run_ensemble(ctx.seeds(0), count, ctx.threads, [&](std::uint64_t seed) {
    const auto sys = assemble(model.hopping, model.mode, sample_potential(model.density, std::size_t{1} << model.n, seed),
                              0.0, seed);
    const auto sd = eigenpairs_in(sys, {std::min(I.lo, near.lo), std::max(I.hi, near.hi)}, ctx.dense_cap);
    Out o{ipr_sample(sd, near), ipr_sample(sd, I), ipr_event(sd, model.n, energy, w, eps), 0.0, ec_shell_means(sd, 0, I)};
    for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k) {
      if (near.contains(sd.eigenvalues(k))) {
        o.pq_sum += ipr(std::span<const double>(sd.eigenvectors.col(k).data(), sd.eigenvectors.rows()), q);
      }
    }
    return o;
  });
  ctx.record_failures(run);
  std::vector<IprSample> win, full;
  std::vector<bool> events;
  std::vector<std::vector<double>> shells;
  double pq = 0.0;
  auto csv = ctx.csv("ipr.csv", {"realization", "window_count", "window_sum_p2", "interval_count", "interval_sum_p2"});
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    if (!run.results[i]) continue;
    const auto& r = *run.results[i];
    csv.row(i, r.window.count, r.window.sum_p2, r.interval.count, r.interval.sum_p2);
    win.push_back(r.window);
    full.push_back(r.interval);
    events.push_back(r.event);
    shells.push_back(r.shells);
    pq += r.pq_sum;
  }
  double c_hat = c.contains("c_hat") ? number(c, "", "c_hat") : NAN;
  if (!c.contains("c_hat")) {
    const auto fit = ec_decay_fit(shells);
    c_hat = ec_weighted_constant(fit.table, 0.5 * fit.mu_hat, I.width());
  }
  double window_states = 0.0;
  for (const auto& s : win) window_states += s.count;
  json report = {{"n", model.n}, {"energy", energy}, {"W", w}, {"eps_ipr", eps}, {"c_hat", finite_or_null(c_hat)}};
  double mean_p2 = NAN, mean_p2_se = NAN;
  if (window_states > 0) {
    const auto a = averaged_ipr(win, near, model.n, c_hat);
    mean_p2 = a.pi_hat;
    mean_p2_se = a.stderr_pi;
  } else {
    ctx.warn("no eigenvalue fell in the 2^{-n-1} W window");
  }
  const auto pi = averaged_ipr(full, I, model.n, c_hat);
  const auto ev = ipr_event_probability(events, w, eps, c_hat);
  report["window_mean_p2"] = finite_or_null(mean_p2);
  report["window_mean_p2_se"] = finite_or_null(mean_p2_se);
  report["window_mean_pq"] = finite_or_null(window_states > 0 ? pq / window_states : NAN);
  report["pi_hat"] = pi.pi_hat;
  report["pi_se"] = pi.stderr_pi;
  report["nu_hat"] = pi.nu_hat;
  report["lower_bound"] = finite_or_null(pi.lower_bound);
  report["bound_holds"] = pi.bound_holds;
  report["event_probability"] = {{"estimate", ev.estimate.estimate}, {"lo", ev.estimate.lo}, {"hi", ev.estimate.hi},
                                 {"bound", finite_or_null(ev.bound)}, {"consistent", ev.consistent}};
  ctx.json_file("ipr.json", report);
  ctx.put("mean_p2", mean_p2);
  ctx.put("mean_p2_se", mean_p2_se);
  ctx.put("pi_hat", pi.pi_hat);
  ctx.put("lower_bound", pi.lower_bound);
  ctx.put("bound_holds", pi.bound_holds ? 1.0 : 0.0);
  ctx.put("event_probability", ev.estimate.estimate);
  ctx.put("c_hat", c_hat);
}

PoissonThresholds parse_poisson_thresholds(const json& j) {
  check_keys(j, "/thresholds", {"subwindow", "var_mean_lo", "var_mean_hi", "gap_ks_max", "min_points"});
  PoissonThresholds t;
  t.subwindow = number(j, "/thresholds", "subwindow", t.subwindow);
  t.var_mean_lo = number(j, "/thresholds", "var_mean_lo", t.var_mean_lo);
  t.var_mean_hi = number(j, "/thresholds", "var_mean_hi", t.var_mean_hi);
  t.gap_ks_max = number(j, "/thresholds", "gap_ks_max", t.gap_ks_max);
  t.min_points = static_cast<std::size_t>(integer(j, "/thresholds", "min_points", 1000, 1));
  return t;
}

void run_levelstats(const Context& ctx) {
  const json& c = ctx.cfg;
  const json& m = object(c, "", "model");
  check_keys(m, "/model", {"hopping", "density", "n", "m"});
  BlockSamplerSpec spec;
  spec.hopping = parse_hopping(object(m, "/model", "hopping"), "/model/hopping");
  spec.density = parse_density(object(m, "/model", "density"), "/model/density");
  spec.n = static_cast<int>(integer(m, "/model", "n", 16, 1, 40));
  spec.m = static_cast<int>(integer(m, "/model", "m", 8, 0, spec.n));
  spec.energy = number(c, "", "energy", 0.0);
  spec.window = interval(c, "", "window", Interval{-500.0, 500.0});
  spec.realizations = realizations(c, 20);
  spec.seeds = ctx.seeds(0);
  spec.threads = ctx.threads;
  spec.dense_cap = ctx.dense_cap;
  const auto th = parse_poisson_thresholds(object(c, "", "thresholds"));
  const auto samples = block_process_sampler(spec);
  if (samples.size() < spec.realizations) {
    ctx.warn(fmt::format("{} realizations excluded", spec.realizations - samples.size()));
  }
  const auto rep = poisson_tests(samples, 0.0, th);

  auto gaps = interior_gaps(samples);
  {
    const double h = 0.1 / rep.intensity;
    auto csv = ctx.csv("gaps.csv", {"gap_lo", "gap_hi", "count", "expected"});
    std::vector<std::size_t> hist(80, 0);
    for (double g : gaps) {
      const auto b = static_cast<std::size_t>(g / h);
      if (b < hist.size()) ++hist[b];
    }
    const double rate = gaps.empty() ? 0.0 : 1.0 / mean_of(gaps);
    for (std::size_t b = 0; b < hist.size(); ++b) {
      const double lo = b * h, hi = (b + 1) * h;
      csv.row(lo, hi, hist[b], static_cast<double>(gaps.size()) * (std::exp(-rate * lo) - std::exp(-rate * hi)));
    }
  }
  {
    auto csv = ctx.csv("two_point.csv", {"width", "ratio"});
    for (const auto& [w, r] : rep.two_point) csv.row(w, r);
  }
  ctx.json_file("levelstats.json",
             {{"points", rep.points},
              {"gaps", rep.gaps},
              {"intensity", rep.intensity},
              {"count_mean", rep.count_mean},
              {"count_var", rep.count_var},
              {"var_mean", rep.var_mean},
              {"chi2", rep.chi2},
              {"chi2_dof", rep.chi2_dof},
              {"chi2_p", finite_or_null(rep.chi2_p)},
              {"gap_ks", rep.gap_ks},
              {"block_chi2_p", rep.block_chi2_p},
              {"var_mean_ok", rep.var_mean_ok},
              {"gap_ok", rep.gap_ok},
              {"thresholds",
               {{"var_mean", {th.var_mean_lo, th.var_mean_hi}}, {"gap_ks_max", th.gap_ks_max}, {"subwindow", th.subwindow}}}});
  ctx.put("points", static_cast<double>(rep.points));
  ctx.put("gaps", static_cast<double>(rep.gaps));
  ctx.put("intensity", rep.intensity);
  ctx.put("var_mean", rep.var_mean);
  ctx.put("gap_ks", rep.gap_ks);
  ctx.put("chi2_p", rep.chi2_p);
  ctx.put("var_mean_ok", rep.var_mean_ok ? 1.0 : 0.0);
  ctx.put("gap_ok", rep.gap_ok ? 1.0 : 0.0);
}

void run_counting(const Context& ctx) {
  const json& c = ctx.cfg;
  const auto model = parse_model(c);
  const int m = model.n;
  require_dense(m, ctx.dense_cap);
  const double energy = number(c, "", "energy", 0.0);
  std::vector<double> widths = numbers(c, "", "widths", std::vector<double>{});
  if (widths.empty()) {
    // One decade ending where the expected count 2^m rho_sup |I| reaches 0.1.
    const double top = 0.1 / (std::exp2(m) * model.density.supnorm());
    for (int k = 0; k <= 10; ++k) widths.push_back(top * std::pow(10.0, -k / 10.0));
  }
  for (double w : widths) {
    if (!(w >= 0)) throw ConfigError("/widths", "widths must be non-negative");
  }
  const double wmax = *std::max_element(widths.begin(), widths.end());
  const std::size_t count = realizations(c, 100000);
  const json& tj = object(c, "", "thresholds");
  check_keys(tj, "/thresholds", {"exponent_lo", "exponent_hi", "ratio_max"});
  CountingThresholds th;
  th.exponent_lo = number(tj, "/thresholds", "exponent_lo", th.exponent_lo);
  th.exponent_hi = number(tj, "/thresholds", "exponent_hi", th.exponent_hi);
  th.ratio_max = number(tj, "/thresholds", "ratio_max", th.ratio_max);

  auto run = run_ensemble(ctx.seeds(0), count, ctx.threads, [&](std::uint64_t seed) {
    const auto sys = assemble(model.hopping, model.mode, sample_potential(model.density, std::size_t{1} << m, seed), 0.0, seed);
    const Eigen::VectorXd ev =
        eigenvalues_window(sys, std::nextafter(energy - 0.5 * wmax, -INFINITY), energy + 0.5 * wmax, ctx.dense_cap);
    std::vector<std::uint32_t> k(widths.size(), 0);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      for (std::size_t j = 0; j < widths.size(); ++j) {
        if (std::abs(ev(i) - energy) <= 0.5 * widths[j]) ++k[j];
      }
    }
    return k;
  });
  ctx.record_failures(run);
  std::vector<std::vector<std::uint32_t>> counts;
  for (auto& r : run.results) {
    if (r) counts.push_back(std::move(*r));
  }
  const double rho_sup = model.density.supnorm();
  const auto rep = counting_bounds_check(counts, widths, m, rho_sup, th);
  auto csv = ctx.csv("counting.csv", {"width", "p1", "p2", "nu_hat", "nu_se"});
  for (const auto& r : rep.rows) csv.row(r.width, r.p1, r.p2, r.nu_hat, r.nu_se);
  ctx.json_file("counting.json", {{"exponent1", rep.exponent1},
                                         {"exponent1_se", rep.exponent1_se},
                                         {"exponent2", rep.exponent2},
                                         {"exponent2_se", rep.exponent2_se},
                                         {"max_ratio", rep.max_ratio},
                                         {"rho_sup", rho_sup},
                                         {"exponent_ok", rep.exponent_ok},
                                         {"ratio_ok", rep.ratio_ok},
                                         {"wegner_ok", rep.wegner_ok}});
  ctx.put("exponent1", rep.exponent1);
  ctx.put("exponent2", rep.exponent2);
  ctx.put("max_ratio", rep.max_ratio);
  ctx.put("exponent_ok", rep.exponent_ok ? 1.0 : 0.0);
  ctx.put("ratio_ok", rep.ratio_ok ? 1.0 : 0.0);
  ctx.put("wegner_ok", rep.wegner_ok ? 1.0 : 0.0);
}

void run_decoupling(const Context& ctx) {
  const json& c = ctx.cfg;
  const double s = number(c, "", "s", 0.5);
  if (!(s > 0 && s < 1)) throw ConfigError("/s", "decoupling needs s in (0, 1)");
  const auto z = complex_value(c, "", "z", {0.0, 1.0});
  if (!(z.imag() > 0)) throw ConfigError("/z", "decoupling needs Im z > 0");
  const auto est = estimate_decoupling(s, z);
  auto csv = ctx.csv("decoupling.csv", {"gamma_re", "gamma_im", "ratio"});
  for (std::size_t i = 0; i < est.gamma_grid.size(); ++i) csv.row(est.gamma_grid[i].real(), est.gamma_grid[i].imag(), est.ratio[i]);
  if (est.flagged > 0) ctx.warn(fmt::format("{} grid points flagged by the quadrature error check", est.flagged));
  json report = {{"s", s},
                 {"z", {z.real(), z.imag()}},
                 {"d_hat", est.d_hat},
                 {"argmax", {est.argmax.real(), est.argmax.imag()}},
                 {"flagged", est.flagged}};
  ctx.put("d_hat", est.d_hat);
  if (c.contains("fm_check")) {
    const json& f = object(c, "", "fm_check");
    check_keys(f, "/fm_check", {"n", "k", "realizations", "hopping"});
    FmInequalitySpec spec;
    spec.z = z;
    spec.s = s;
    spec.n = static_cast<int>(integer(f, "/fm_check", "n", 4, 2, 12));
    spec.k = static_cast<SiteIndex>(integer(f, "/fm_check", "k", 2, 1));
    spec.realizations = static_cast<std::size_t>(integer(f, "/fm_check", "realizations", 10000, 10));
    if (f.contains("hopping")) spec.hopping = parse_hopping(object(f, "/fm_check", "hopping"), "/fm_check/hopping");
    spec.seeds = ctx.seeds(0);
    spec.threads = ctx.threads;
    const auto fm = fm_inequality_check(spec);
    if (fm.failures > 0) ctx.warn(fmt::format("{} realizations excluded", fm.failures));
    report["fm_check"] = {{"lhs", fm.lhs},   {"lhs_se", fm.lhs_se}, {"base", fm.base},   {"base_se", fm.base_se},
                          {"rhs", fm.rhs},   {"ratio", fm.ratio},   {"verdict", fm.verdict}, {"chain_ok", fm.chain_ok}};
    ctx.put("fm_lhs", fm.lhs);
    ctx.put("fm_rhs", fm.rhs);
    ctx.put("fm_verdict", fm.verdict ? 1.0 : 0.0);
  }
  ctx.json_file("decoupling.json", report);
}

// ---- dispatch ---------------------------------------------------------------

const std::vector<std::string> kKinds{"spectrum", "rgflow",     "greens",   "fracmom",    "ec",
                                      "ipr",      "levelstats", "counting", "decoupling", "sweep"};

void check_top_keys(const json& c, const std::string& kind) {
  static const std::set<std::string> common{"experiment", "master_seed", "threads", "dense_cap", "output", "description"};
  static const std::map<std::string, std::set<std::string>> extra{
      {"spectrum", {"model", "realizations"}},
      {"rgflow", {"model", "energy", "energies", "r_max", "grid", "method", "samples"}},
      {"greens", {"model", "energy", "realizations", "sites", "phi"}},
      {"fracmom", {"model", "energy", "s", "realizations", "sites"}},
      {"ec", {"model", "interval", "realizations"}},
      {"ipr", {"model", "energy", "W", "eps_ipr", "q", "interval", "realizations", "c_hat"}},
      {"levelstats", {"model", "energy", "window", "realizations", "thresholds"}},
      {"counting", {"model", "energy", "widths", "realizations", "thresholds"}},
      {"decoupling", {"s", "z", "fm_check"}},
      {"sweep", {"sweep", "base"}},
  };
  const auto& allowed = extra.at(kind);
  for (const auto& [key, _] : c.items()) {
    if (!common.count(key) && !allowed.count(key)) throw ConfigError("/" + key, fmt::format("unknown key for {}", kind));
  }
}

std::string sweep_pointer(const std::string& parameter) {
  static const std::map<std::string, std::string> alias{{"E", "/energy"},
                                                        {"c", "/model/hopping/c"},
                                                        {"sigma", "/model/density/sigma"},
                                                        {"n", "/model/n"},
                                                        {"s", "/s"}};
  if (auto it = alias.find(parameter); it != alias.end()) return it->second;
  if (!parameter.empty() && parameter.front() == '/') return parameter;
  throw ConfigError("/sweep/parameter", "expected one of E, c, sigma, n, s or a JSON pointer");
}

void run_sweep(const Context& ctx, const RunOptions& opt) {
  const json& c = ctx.cfg;
  const json& sw = object(c, "", "sweep");
  check_keys(sw, "/sweep", {"parameter", "values"});
  const std::string parameter = text(sw, "/sweep", "parameter");
  const auto values = numbers(sw, "/sweep", "values");
  if (values.empty()) throw ConfigError("/sweep/values", "needs at least one value");
  const json& base = object(c, "", "base");
  const std::string inner = text(base, "/base", "experiment");
  if (inner == "sweep" || std::find(kKinds.begin(), kKinds.end(), inner) == kKinds.end()) {
    throw ConfigError("/base/experiment", "expected a non-sweep experiment kind");
  }
  const json::json_pointer ptr(sweep_pointer(parameter));
  const bool integral = parameter == "n" || parameter == "/model/n";

  std::vector<std::string> keys;
  std::vector<std::optional<ExperimentResult>> results;
  std::vector<std::string> errors;
  for (std::size_t i = 0; i < values.size(); ++i) {
    json point = base;
    point["master_seed"] = ctx.master_seed;
    if (integral) {
      point[ptr] = static_cast<std::int64_t>(std::llround(values[i]));
    } else {
      point[ptr] = values[i];
    }
    RunOptions sub = opt;
    sub.out = ctx.out / fmt::format("point_{:03d}", i);
    sub.seed = ctx.master_seed;
    sub.threads = ctx.threads;
    sub.dense_cap = ctx.dense_cap;
    try {
      auto r = run_experiment(point, inner, sub);
      for (const auto& [k, _] : r.summary) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
      }
      results.push_back(std::move(r));
      errors.emplace_back();
    } catch (const std::exception& e) {
      results.emplace_back();
      errors.emplace_back(e.what());
      ctx.warn(fmt::format("grid point {} ({} = {}) failed: {}", i, parameter, values[i], e.what()));
    }
  }
  std::ofstream os(ctx.out / "summary.csv");
  os << "# config_digest " << ctx.digest << '\n';
  os << "point," << parameter << ",status";
  for (const auto& k : keys) os << ',' << k;
  os << '\n';
  std::size_t ok = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    os << i << ',' << num(values[i]) << ',' << (results[i] ? "ok" : "failed");
    for (const auto& k : keys) {
      os << ',';
      if (!results[i]) continue;
      for (const auto& [name, v] : results[i]->summary) {
        if (name == k) os << num(v);
      }
    }
    os << '\n';
    if (results[i]) ++ok;
  }
  ctx.put("points", static_cast<double>(values.size()));
  ctx.put("succeeded", static_cast<double>(ok));
}

}  // namespace

// ---- public -----------------------------------------------------------------

const std::vector<std::string>& experiment_kinds() { return kKinds; }

json load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("/", fmt::format("cannot open config {}", path.string()));
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
  }
}

HoppingSequence parse_hopping(const json& j, const std::string& at) {
  check_keys(j, at, {"eps", "c", "values"});
  const double eps = number(j, at, "eps", 1.0);
  const double c = number(j, at, "c");
  if (!(c > 0.0)) {
    throw ConfigError(child(at, "c"),
                      fmt::format("hopping decay c = {} must be positive: the hopping sequence has to be summable", c));
  }
  if (j.contains("values")) return HoppingSequence::explicit_list(numbers(j, at, "values"), eps, c);
  return HoppingSequence::geometric(eps, c);
}

DensityModel parse_density(const json& j, const std::string& at) {
  if (!j.is_object()) throw ConfigError(at, "expected a density object");
  const std::string kind = text(j, at, "kind", "gaussian");
  if (kind == "gaussian" || kind == "cauchy") {
    check_keys(j, at, {"kind", "mu", "sigma"});
    const double mu = number(j, at, "mu", 0.0), sigma = number(j, at, "sigma", 1.0);
    if (!(sigma > 0)) throw ConfigError(child(at, "sigma"), "scale must be positive");
    return kind == "gaussian" ? DensityModel::gaussian(mu, sigma) : DensityModel::cauchy(mu, sigma);
  }
  if (kind == "uniform") {
    check_keys(j, at, {"kind", "lo", "hi"});
    const double lo = number(j, at, "lo"), hi = number(j, at, "hi");
    if (!(hi > lo)) throw ConfigError(child(at, "hi"), "uniform density needs lo < hi");
    return DensityModel::tabulated(GridDensity{lo, hi, {1.0 / (hi - lo)}, 0.0, 0.0});
  }
  if (kind == "mixture") {
    check_keys(j, at, {"kind", "weights", "components"});
    const auto w = numbers(j, at, "weights");
    if (!j.contains("components") || !j.at("components").is_array()) {
      throw ConfigError(child(at, "components"), "expected an array of densities");
    }
    std::vector<DensityModel> comps;
    for (std::size_t i = 0; i < j.at("components").size(); ++i) {
      comps.push_back(parse_density(j.at("components")[i], fmt::format("{}/components/{}", at, i)));
    }
    if (comps.size() != w.size() || comps.empty()) throw ConfigError(child(at, "weights"), "one weight per component");
    try {
      return DensityModel::mixture(w, comps);
    } catch (const InputError& e) {
      throw ConfigError(child(at, "weights"), e.what());
    }
  }
  if (kind == "cauchy_convolved") {
    check_keys(j, at, {"kind", "base", "z"});
    const auto z = complex_value(j, at, "z", {0.0, 1.0});
    if (!(z.imag() > 0)) throw ConfigError(child(at, "z"), "needs Im z > 0");
    return DensityModel::cauchy_convolved(parse_density(object(j, at, "base"), child(at, "base")), z);
  }
  if (kind == "tabulated") {
    check_keys(j, at, {"kind", "lo", "hi", "values", "tail_lo", "tail_hi"});
    GridDensity g{number(j, at, "lo"), number(j, at, "hi"), numbers(j, at, "values"), number(j, at, "tail_lo", 0.0),
                  number(j, at, "tail_hi", 0.0)};
    try {
      g.validate(1e-6);
    } catch (const std::exception& e) {
      throw ConfigError(at, e.what());
    }
    return DensityModel::tabulated(std::move(g));
  }
  throw ConfigError(child(at, "kind"), fmt::format("unknown density kind '{}'", kind));
}

ModelSpec parse_model(const json& cfg, const std::string& at) {
  const json& j = object(cfg, "", "model");
  check_keys(j, at, {"hopping", "density", "n", "m"});
  ModelSpec m;
  if (j.contains("hopping")) m.hopping = parse_hopping(j.at("hopping"), child(at, "hopping"));
  if (j.contains("density")) m.density = parse_density(j.at("density"), child(at, "density"));
  m.n = static_cast<int>(integer(j, at, "n", 6, 0, 40));
  if (j.contains("m")) m.mode = Truncated{static_cast<int>(integer(j, at, "m", 0, 0, m.n))};
  return m;
}

std::string config_digest(const json& config, std::uint64_t master_seed) {
  const std::string payload = config.dump() + "\n" + std::to_string(master_seed);
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(payload.data()), payload.size(), md);
  std::string hex;
  for (unsigned char b : md) hex += fmt::format("{:02x}", b);
  return hex;
}

ExperimentResult run_experiment(json config, const std::string& kind_arg, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  if (!config.is_object()) throw ConfigError("/", "config must be a JSON object");
  std::string kind = kind_arg;
  if (config.contains("experiment")) {
    const std::string declared = text(config, "", "experiment");
    if (!kind.empty() && declared != kind) {
      throw ConfigError("/experiment", fmt::format("config declares '{}' but '{}' was requested", declared, kind));
    }
    kind = declared;
  }
  if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end()) {
    throw ConfigError("/experiment", fmt::format("unknown experiment '{}'", kind));
  }
  config["experiment"] = kind;
  check_top_keys(config, kind);

  const std::uint64_t seed = opt.seed ? *opt.seed : unsigned_integer(config, "", "master_seed", 0);
  config["master_seed"] = seed;
  const int threads = opt.threads ? *opt.threads
                                  : static_cast<int>(integer(config, "", "threads", default_threads(), 1, 1024));
  const std::size_t dense_cap =
      opt.dense_cap ? *opt.dense_cap : static_cast<std::size_t>(integer(config, "", "dense_cap", kDefaultDenseCap, 1));
  const fs::path out = opt.out ? *opt.out : fs::path(text(config, "", "output", "hrg_out"));
  fs::create_directories(out);

  // threads, dense cap and output location never change results, so they stay out of the digest.
  json digest_view = config;
  for (const char* k : {"threads", "output", "dense_cap"}) digest_view.erase(k);
  const std::string digest = config_digest(digest_view, seed);

  ExperimentResult result;
  result.kind = kind;
  result.out_dir = out;
  const Context ctx{config, seed, threads, dense_cap, out, digest, result};
  if (kind == "spectrum") run_spectrum(ctx);
  else if (kind == "rgflow") run_rgflow(ctx);
  else if (kind == "greens") run_greens(ctx);
  else if (kind == "fracmom") run_fracmom(ctx);
  else if (kind == "ec") run_ec(ctx);
  else if (kind == "ipr") run_ipr(ctx);
  else if (kind == "levelstats") run_levelstats(ctx);
  else if (kind == "counting") run_counting(ctx);
  else if (kind == "decoupling") run_decoupling(ctx);
  else run_sweep(ctx, opt);

  json summary = json::object();
  for (const auto& [k, v] : result.summary) summary[k] = finite_or_null(v);
  write_json(out / "summary.json", {{"experiment", kind}, {"config_digest", digest}, {"summary", summary}}, digest);

  const double duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(out / "manifest.json", {{"config_digest", digest},
                                     {"master_seed", seed},
                                     {"seed_schedule", {{"master_seed", seed}, {"derivation", "mix64 stream/index"}}},
                                     {"experiment", kind},
                                     {"version", kVersion},
                                     {"started_at", started},
                                     {"duration_s", duration},
                                     {"warnings", result.warnings},
                                     {"config", config}},
             digest);
  return result;
}

}  // namespace hrg
