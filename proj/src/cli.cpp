#include "locsolv/cli.hpp"

#include "locsolv/oracle_m2.hpp"
#include "locsolv/perturbation.hpp"
#include "locsolv/witness.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace locsolv::cli {

namespace {

const std::pair<const char*, const char*> kSubcommands[] = {
    {"sigma", "threshold values of alpha in a window"},
    {"moments", "moments of the kernel function"},
    {"lambda", "coefficients Lambda_n of the small eigenvalue"},
    {"polys", "Lambda_n, c_n and Q_n as polynomials in the Taylor data"},
    {"forced", "Taylor values forced by Lambda_1..Lambda_N = 0"},
    {"decide", "solvability verdict to order N"},
    {"sweep", "small eigenvalue against eps with a polynomial fit"},
    {"witness", "ratio of the solvability inequality along frequencies"},
};

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trimmed(item));
  if (!text.empty() && text.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& text, const std::string& flag) {
  const std::string t = trimmed(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw PreconditionError("malformed number '" + text + "' for " + flag);
  }
  return v;
}

std::vector<double> parse_doubles(const std::vector<std::string>& items, const std::string& flag) {
  std::vector<double> out;
  for (const auto& s : items) out.push_back(parse_double(s, flag));
  return out;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

SeriesOptions series_options(const RunConfig& cfg) {
  SeriesOptions s;
  if (cfg.dim) s.start_dim = *cfg.dim;
  if (cfg.scale) s.scale = *cfg.scale;
  s.c_floor_rel = cfg.c_floor;
  return s;
}

DecideOptions decide_options(const RunConfig& cfg) {
  DecideOptions d;
  d.tol_sigma = cfg.tol_sigma;
  d.tol_lambda = cfg.tol_lambda;
  d.sigma_root_tol = cfg.tol;
  d.series = series_options(cfg);
  return d;
}

ConvergenceOptions convergence_options(const RunConfig& cfg) {
  ConvergenceOptions c;
  if (cfg.dim) c.start_dim = *cfg.dim;
  if (cfg.scale) c.scale = *cfg.scale;
  return c;
}

Branch branch_for(const RunConfig& cfg, double a0) {
  return cfg.branch ? parse_branch(*cfg.branch) : applicable_branch(*cfg.m, a0);
}

// Replace a0 by the threshold value it approximates (within tol_sigma).
double snap_threshold(const RunConfig& cfg, Branch branch, double a0) {
  SigmaOptions opts;
  opts.convergence = convergence_options(cfg);
  const SigmaSet set = sigma_set(*cfg.m, branch, a0 - 0.25, a0 + 0.25, cfg.tol, opts);
  for (double s : set.elements) {
    if (std::abs(s - a0) <= cfg.tol_sigma) return s;
  }
  std::ostringstream os;
  os.precision(17);
  os << "a0 = " << a0 << " is not within " << cfg.tol_sigma << " of a threshold value for m = " << *cfg.m
     << " (branch " << to_string(branch) << ")";
  throw PreconditionError(os.str());
}

Json poly_json(const MultiPoly& p) {
  Json j = Json::object();
  for (const auto& [e, c] : p.terms()) j[monomial_key(e)] = c;
  return j;
}

Json poly_json(const exact::RationalPoly& p) {
  Json j = Json::object();
  for (const auto& [e, c] : p.terms()) j[monomial_key(e)] = exact::to_string(c);
  return j;
}

int exact_level(const exact::Rational& a0, Branch branch) {
  const exact::Rational twice_plus_one = branch == Branch::Plus ? exact::Rational(-a0) : a0;
  exact::Rational k = (twice_plus_one - 1) / 2;
  k.canonicalize();
  if (k.get_den() != 1 || k < 0) {
    throw PreconditionError("a0 = " + exact::to_string(a0) + " is not an exact threshold value " +
                            (branch == Branch::Plus ? "-(2K+1)" : "2K+1"));
  }
  return static_cast<int>(k.get_num().get_si());
}

void require(bool present, const std::string& flag, const std::string& sub) {
  if (!present) throw PreconditionError(sub + " requires " + flag);
}

struct Outcome {
  Json outputs = Json::object();
  Json provenance = Json::object();
  std::vector<std::string> warnings;
};

Outcome run_sigma(const RunConfig& cfg) {
  require(cfg.window.has_value(), "--window lo,hi", "sigma");
  const auto [lo, hi] = *cfg.window;
  const Branch branch = cfg.branch ? parse_branch(*cfg.branch) : Branch::Plus;
  Outcome o;
  if (cfg.exact) {
    Json elements = Json::array();
    for (int k = 0;; ++k) {
      const exact::Rational v = exact::threshold_value(k, branch);
      if (std::abs(v.get_d()) > std::max(std::abs(lo), std::abs(hi))) break;
      if (v.get_d() >= lo && v.get_d() <= hi) elements.push_back(exact::to_string(v));
    }
    if (branch == Branch::Plus) std::reverse(elements.begin(), elements.end());
    o.outputs = {{"elements", elements}, {"branch", to_string(branch)}};
    return o;
  }
  SigmaOptions opts;
  opts.convergence = convergence_options(cfg);

  std::optional<ResultCache> cache;
  if (cfg.cache) {
    cache.emplace(*cfg.cache);
  } else if (auto dir = default_cache_dir()) {
    cache.emplace(*dir);
  }
  CacheKey key{"sigma", *cfg.m, to_string(branch), lo, hi, cfg.tol, opts.convergence.start_dim,
               opts.convergence.scale};
  if (cache) {
    if (auto hit = cache->load(key, o.warnings)) {
      o.outputs = hit->outputs;
      o.provenance = hit->provenance;
      o.provenance["cache"] = "hit";
      return o;
    }
  }
  const SigmaSet set = sigma_set(*cfg.m, branch, lo, hi, cfg.tol, opts);
  o.outputs = {{"elements", set.elements},
               {"crossing_index", set.crossing_index},
               {"branch", to_string(branch)},
               {"lo", set.lo},
               {"hi", set.hi}};
  o.provenance = {{"basis_dim", set.basis_used.dim}, {"basis_scale", set.basis_used.scale}};
  if (cache) {
    ResultEnvelope stored;
    stored.outputs = o.outputs;
    stored.provenance = o.provenance;
    cache->store(key, stored);
    o.provenance["cache"] = "miss";
  }
  return o;
}

Outcome run_moments(const RunConfig& cfg) {
  require(cfg.a0.has_value(), "--a0", "moments");
  Outcome o;
  if (cfg.exact) {
    const exact::Rational a0 = exact::parse_rational(*cfg.a0);
    const Branch branch = cfg.branch ? parse_branch(*cfg.branch) : applicable_branch(2, a0.get_d());
    const int level = exact_level(a0, branch);
    Json mu = Json::array();
    for (int j = 0; j <= cfg.j_max; ++j) mu.push_back(exact::to_string(exact::exact_moment(level, j)));
    o.outputs = {{"mu", mu}, {"level", level}, {"branch", to_string(branch)}};
    return o;
  }
  const double a0 = parse_double(*cfg.a0, "--a0");
  const Branch branch = branch_for(cfg, a0);
  const double alpha = snap_threshold(cfg, branch, a0);
  const KernelData data = kernel_and_moments(*cfg.m, alpha, branch, cfg.j_max, series_options(cfg));
  Json residuals = Json::array();
  const int m = *cfg.m;
  for (int j = -2; 2 * m + j - 1 <= cfg.j_max; ++j) {
    const double scale = moment_recurrence_scale(data.moments, j);
    const double r = moment_recurrence_residual(data.moments, j);
    residuals.push_back({{"j", j}, {"residual", r}, {"relative", scale > 0.0 ? std::abs(r) / scale : 0.0}});
  }
  o.outputs = {{"mu", data.moments.mu},
               {"alpha", alpha},
               {"branch", to_string(branch)},
               {"kernel_value", data.kernel_value},
               {"recurrence", residuals}};
  o.provenance = {{"basis_dim", data.moments.basis.dim}};
  return o;
}

Outcome run_lambda(const RunConfig& cfg) {
  require(cfg.a0.has_value(), "--a0", "lambda");
  require(cfg.order.has_value(), "--order", "lambda");
  Outcome o;
  if (cfg.exact) {
    const exact::Rational a0 = exact::parse_rational(*cfg.a0);
    const Branch branch = cfg.branch ? parse_branch(*cfg.branch) : applicable_branch(2, a0.get_d());
    std::vector<exact::Rational> taylor;
    for (const auto& t : cfg.taylor) taylor.push_back(exact::parse_rational(t));
    const auto lambdas = exact::exact_lambda_series(exact_level(a0, branch), taylor, *cfg.order, branch);
    Json out = Json::array();
    for (const auto& l : lambdas) out.push_back(exact::to_string(l));
    o.outputs = {{"lambdas", out}, {"branch", to_string(branch)}};
    return o;
  }
  const double a0 = parse_double(*cfg.a0, "--a0");
  ModelParams params;
  params.m = *cfg.m;
  params.branch = branch_for(cfg, a0);
  params.alpha = snap_threshold(cfg, params.branch, a0);
  params.taylor = parse_doubles(cfg.taylor, "--taylor");
  const PerturbSeries s = lambda_series(params, *cfg.order, series_options(cfg));
  Json forced = Json::object();
  for (const auto& [n, v] : s.forced) forced[std::to_string(n)] = v;
  o.outputs = {{"lambdas", s.lambdas}, {"c", s.c},           {"forced", forced},
               {"c_floor", s.c_floor}, {"moments", s.moments}, {"alpha", s.alpha},
               {"branch", to_string(s.branch)}};
  o.provenance = {{"basis_dim", s.basis.dim}, {"refinements", s.refinements}};
  return o;
}

Outcome run_polys(const RunConfig& cfg) {
  require(cfg.a0.has_value(), "--a0", "polys");
  require(cfg.order.has_value(), "--order", "polys");
  Outcome o;
  if (cfg.exact) {
    const exact::Rational a0 = exact::parse_rational(*cfg.a0);
    const Branch branch = cfg.branch ? parse_branch(*cfg.branch) : applicable_branch(2, a0.get_d());
    const auto polys = exact::exact_lambda_polynomials(exact_level(a0, branch), *cfg.order, branch);
    Json out = Json::array();
    for (const auto& p : polys) out.push_back(poly_json(p));
    o.outputs = {{"lambdas", out}, {"branch", to_string(branch)}};
    return o;
  }
  const double a0 = parse_double(*cfg.a0, "--a0");
  const Branch branch = branch_for(cfg, a0);
  const double alpha = snap_threshold(cfg, branch, a0);
  const PolySeries s = lambda_polynomials(*cfg.m, alpha, branch, *cfg.order, series_options(cfg));
  Json lambdas = Json::array(), q = Json::array(), forced = Json::object();
  for (const auto& p : s.lambdas) lambdas.push_back(poly_json(p));
  for (const auto& p : s.q) q.push_back(poly_json(p));
  for (const auto& [n, p] : s.forced) forced[std::to_string(n)] = poly_json(p);
  o.outputs = {{"lambdas", lambdas}, {"c", s.c},         {"q", q},
               {"forced", forced},   {"alpha", s.alpha}, {"branch", to_string(branch)},
               {"c_floor", s.c_floor}};
  o.provenance = {{"basis_dim", s.basis.dim}, {"refinements", s.refinements}};
  return o;
}

Outcome run_forced(const RunConfig& cfg) {
  require(cfg.a0.has_value(), "--a0", "forced");
  require(cfg.order.has_value(), "--order", "forced");
  const double a0 = parse_double(*cfg.a0, "--a0");
  const ForcedResult r =
      forced_taylor(*cfg.m, a0, parse_doubles(cfg.taylor, "--taylor"), *cfg.order, decide_options(cfg));
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"order", e.order},
                       {"value", e.value},
                       {"forced", e.forced},
                       {"obstruction", e.obstruction},
                       {"lambda", e.lambda},
                       {"c", e.c}});
  }
  Outcome o;
  o.outputs = {{"branch", to_string(r.branch)},
               {"threshold", r.threshold},
               {"entries", entries},
               {"obstruction_order", r.obstruction_order ? Json(*r.obstruction_order) : Json(nullptr)}};
  o.provenance = {{"basis_dim", r.basis.dim}};
  return o;
}

Outcome run_decide(const RunConfig& cfg) {
  require(cfg.a0.has_value(), "--a0", "decide");
  require(cfg.order.has_value(), "--order", "decide");
  if (cfg.branch) throw PreconditionError("decide selects the branch itself; drop --branch");
  const double a0 = parse_double(*cfg.a0, "--a0");
  const DecideOptions opts = decide_options(cfg);
  const Decision d = decide(*cfg.m, a0, parse_doubles(cfg.taylor, "--taylor"), *cfg.order, opts);
  const auto optional_json = [](const auto& v) { return v ? Json(*v) : Json(nullptr); };
  Outcome o;
  o.outputs = {{"verdict", to_string(d.verdict)},
               {"order", d.order},
               {"witness_order", optional_json(d.witness_order)},
               {"branch", d.branch ? Json(to_string(*d.branch)) : Json(nullptr)},
               {"threshold", optional_json(d.threshold)},
               {"lambda_value", d.lambda_value},
               {"sigma_distance", optional_json(d.sigma_distance)},
               {"exceptions", d.exceptions},
               {"lambdas", d.lambdas},
               {"tolerances",
                {{"tol_sigma", opts.tol_sigma}, {"tol_lambda", opts.tol_lambda}, {"c_floor_rel", opts.series.c_floor_rel}}}};
  o.provenance = {{"basis_dim", d.basis_dim}, {"refinements", d.refinements}};
  return o;
}

Outcome run_sweep(const RunConfig& cfg) {
  require(cfg.a0.has_value(), "--a0", "sweep");
  const double a0 = parse_double(*cfg.a0, "--a0");
  ModelParams params;
  params.m = *cfg.m;
  params.branch = branch_for(cfg, a0);
  params.alpha = snap_threshold(cfg, params.branch, a0);
  params.taylor = parse_doubles(cfg.taylor, "--taylor");
  SmallEigenConfig sc = SmallEigenConfig::defaults();
  sc.fit_order = cfg.fit_order;
  sc.convergence = convergence_options(cfg);
  const SweepFit fit = sweep_fit(params, sc);
  Outcome o;
  o.outputs = {{"coefficients", fit.coefficients}, {"residual", fit.residual}, {"eps", fit.eps},
               {"values", fit.values},             {"alpha", params.alpha},     {"branch", to_string(params.branch)}};
  return o;
}

Outcome run_witness(const RunConfig& cfg) {
  require(cfg.a0.has_value(), "--a0", "witness");
  const double a0 = parse_double(*cfg.a0, "--a0");
  ModelParams params;
  params.m = *cfg.m;
  params.branch = branch_for(cfg, a0);
  params.alpha = snap_threshold(cfg, params.branch, a0);
  params.taylor = parse_doubles(cfg.taylor, "--taylor");
  WitnessConfig wc;
  wc.A = cfg.witness_A;
  wc.B = cfg.witness_B;
  if (!cfg.lambdas.empty()) wc.lambdas = cfg.lambdas;
  wc.allow_solvable = cfg.allow_solvable;
  wc.tol_lambda = cfg.tol_lambda;
  wc.series = series_options(cfg);
  wc.validate();
  const WitnessModel model(params, wc.A, wc.series, wc.tol_lambda);
  Outcome o;
  o.warnings = model.warnings();
  Json rows = Json::array();
  std::vector<double> ratios;
  for (double lambda : wc.lambdas) {
    const RatioReport r = solvability_ratio(model, lambda, wc);
    ratios.push_back(r.ratio);
    rows.push_back({{"lambda", r.lambda},
                    {"ratio", r.ratio},
                    {"pairing", r.pairing},
                    {"h_norm", r.h_norm},
                    {"Lg_norm", r.Lg_norm},
                    {"Lg_sup", r.Lg_sup},
                    {"G_peak", r.G_peak},
                    {"z_x", r.z_x},
                    {"z_t", r.z_t},
                    {"support_x", r.support_x},
                    {"support_t", r.support_t},
                    {"predicted_support_x", r.predicted_support_x},
                    {"predicted_support_t", r.predicted_support_t},
                    {"G_l2_squared", r.G_l2_squared},
                    {"grid_x", r.grid_x},
                    {"grid_t", r.grid_t}});
  }
  bool increasing = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) increasing = increasing && ratios[i] > ratios[i - 1];
  o.outputs = {{"rows", rows},
               {"strictly_increasing", increasing},
               {"growth", ratios.front() > 0.0 ? ratios.back() / ratios.front() : 0.0},
               {"alpha", params.alpha},
               {"branch", to_string(params.branch)},
               {"vanishing_to_order_A", model.vanishing_to_order_A()}};
  o.provenance = {{"basis_dim", model.basis().dim}, {"refinements", model.series().refinements}};
  return o;
}

Json inputs_json(const RunConfig& cfg) {
  Json j = {{"subcommand", cfg.subcommand}, {"exact", cfg.exact}, {"taylor", cfg.taylor}};
  if (cfg.m) j["m"] = *cfg.m;
  if (cfg.a0) j["a0"] = *cfg.a0;
  if (cfg.order) j["order"] = *cfg.order;
  if (cfg.branch) j["branch"] = *cfg.branch;
  if (cfg.window) j["window"] = {cfg.window->first, cfg.window->second};
  if (cfg.dim) j["dim"] = *cfg.dim;
  if (cfg.scale) j["scale"] = *cfg.scale;
  j["tol"] = cfg.tol;
  j["tol_sigma"] = cfg.tol_sigma;
  j["tol_lambda"] = cfg.tol_lambda;
  j["c_floor"] = cfg.c_floor;
  if (cfg.subcommand == "moments") j["j_max"] = cfg.j_max;
  if (cfg.subcommand == "sweep") j["fit_order"] = cfg.fit_order;
  if (cfg.subcommand == "witness") {
    j["A"] = cfg.witness_A;
    j["B"] = cfg.witness_B;
    j["lambdas"] = cfg.lambdas;
    j["allow_solvable"] = cfg.allow_solvable;
  }
  return j;
}

std::string csv_number(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Flattens nested outputs into path,value rows.
void flatten(const Json& v, const std::string& path, std::vector<std::pair<std::string, std::string>>& rows) {
  if (v.is_object()) {
    for (const auto& [k, item] : v.items()) flatten(item, path.empty() ? k : path + "." + k, rows);
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(v[i], path + "[" + std::to_string(i) + "]", rows);
  } else {
    rows.emplace_back(path, csv_number(v));
  }
}

}  // namespace

std::optional<RunConfig> parse(const std::vector<std::string>& args, std::ostream& help) {
  RunConfig cfg;
  CLI::App app{"Local solvability calculator for x-degenerate doubly characteristic operators", "locsolv"};
  app.require_subcommand(1, 1);

  std::string taylor_text, window_text, format_text = "json", lambdas_text;
  std::string a0_text, branch_text;
  int m = 0, order = 0, dim = 0;
  double scale = 1.0;
  for (const auto& [name, description] : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--m", m, "degeneracy order m >= 2");
    sub->add_option("--a0", a0_text, "a(0)");
    sub->add_option("--taylor", taylor_text, "a'(0),a''(0),... as derivative values");
    sub->add_option("--order", order, "perturbation order N");
    sub->add_option("--branch", branch_text, "+ or -");
    sub->add_option("--window", window_text, "lo,hi search window");
    sub->add_flag("--exact", cfg.exact, "exact rational pipeline (m = 2 only)");
    sub->add_option("--format", format_text, "json, csv or text");
    sub->add_option("--out", cfg.out, "write the result to this file");
    sub->add_option("--cache", cfg.cache, "cache directory");
    sub->add_option("--dim", dim, "starting basis dimension");
    sub->add_option("--scale", scale, "basis length scale");
    sub->add_option("--tol", cfg.tol, "threshold root tolerance");
    sub->add_option("--tol-sigma", cfg.tol_sigma, "distance to a threshold value counted as on it");
    sub->add_option("--tol-lambda", cfg.tol_lambda, "|Lambda_n| counted as zero");
    sub->add_option("--c-floor", cfg.c_floor, "relative floor for c_n");
    if (std::string(name) == "moments") sub->add_option("--j-max", cfg.j_max, "highest moment index");
    if (std::string(name) == "sweep") sub->add_option("--fit-order", cfg.fit_order, "polynomial fit order");
    if (std::string(name) == "witness") {
      sub->add_option("--A", cfg.witness_A, "truncation order of the formal eigenfunction");
      sub->add_option("--B", cfg.witness_B, "derivative order of the norms");
      sub->add_option("--lambdas", lambdas_text, "comma separated frequencies");
      sub->add_flag("--allow-solvable", cfg.allow_solvable, "run even if Lambda_n does not vanish");
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    help << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    help << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw PreconditionError(e.what());
  }
  for (const CLI::App* sub : app.get_subcommands()) {
    cfg.subcommand = sub->get_name();
    const auto given = [&](const char* flag) { return sub->count(flag) > 0; };
    if (given("--m")) cfg.m = m;
    if (given("--a0")) cfg.a0 = a0_text;
    if (given("--order")) cfg.order = order;
    if (given("--branch")) cfg.branch = branch_text;
    if (given("--dim")) cfg.dim = dim;
    if (given("--scale")) cfg.scale = scale;
    if (given("--taylor")) {
      cfg.taylor = split_list(taylor_text);
      for (const auto& t : cfg.taylor) {
        if (t.empty()) throw PreconditionError("empty entry in --taylor");
      }
    }
    if (given("--window")) {
      const auto parts = split_list(window_text);
      if (parts.size() != 2) throw PreconditionError("--window expects lo,hi");
      cfg.window = {parse_double(parts[0], "--window"), parse_double(parts[1], "--window")};
      if (!(cfg.window->first < cfg.window->second)) throw PreconditionError("--window needs lo < hi");
    }
    if (cfg.subcommand == "witness" && given("--lambdas")) cfg.lambdas = parse_doubles(split_list(lambdas_text), "--lambdas");
  }

  if (format_text == "json") {
    cfg.format = Format::Json;
  } else if (format_text == "csv") {
    cfg.format = Format::Csv;
  } else if (format_text == "text") {
    cfg.format = Format::Text;
  } else {
    throw PreconditionError("--format must be json, csv or text");
  }

  if (!cfg.m) throw PreconditionError(cfg.subcommand + " requires --m");
  if (*cfg.m < 2) throw PreconditionError("--m must be at least 2");
  if (cfg.branch) parse_branch(*cfg.branch);
  if (cfg.order && *cfg.order < 1) throw PreconditionError("--order must be at least 1");
  if (cfg.dim && *cfg.dim < BasisSpec::kMinDim) throw PreconditionError("--dim must be at least 8");
  if (cfg.scale && !(*cfg.scale > 0.0)) throw PreconditionError("--scale must be positive");
  for (double t : {cfg.tol, cfg.tol_sigma, cfg.tol_lambda, cfg.c_floor}) {
    if (!(t > 0.0)) throw PreconditionError("tolerances must be positive");
  }
  if (cfg.exact) {
    if (*cfg.m != 2) throw PreconditionError("--exact is only available for m = 2");
    const std::string& s = cfg.subcommand;
    if (s != "sigma" && s != "moments" && s != "lambda" && s != "polys") {
      throw PreconditionError("--exact is not supported by " + s);
    }
  } else {
    if (cfg.a0) parse_double(*cfg.a0, "--a0");
    for (const auto& t : cfg.taylor) parse_double(t, "--taylor");
  }
  return cfg;
}

ResultEnvelope execute(const RunConfig& cfg) {
  const Timer timer;
  Outcome o;
  const std::string& s = cfg.subcommand;
  if (s == "sigma") {
    o = run_sigma(cfg);
  } else if (s == "moments") {
    o = run_moments(cfg);
  } else if (s == "lambda") {
    o = run_lambda(cfg);
  } else if (s == "polys") {
    o = run_polys(cfg);
  } else if (s == "forced") {
    o = run_forced(cfg);
  } else if (s == "decide") {
    o = run_decide(cfg);
  } else if (s == "sweep") {
    o = run_sweep(cfg);
  } else if (s == "witness") {
    o = run_witness(cfg);
  } else {
    throw PreconditionError("unknown subcommand " + s);
  }
  ResultEnvelope env;
  env.inputs = inputs_json(cfg);
  env.outputs = std::move(o.outputs);
  env.provenance = std::move(o.provenance);
  env.provenance["code_version"] = kCodeVersion;
  env.provenance["warnings"] = o.warnings;
  env.provenance["wall_time_s"] = timer.seconds();
  return env;
}

std::string render(const ResultEnvelope& envelope, const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  switch (cfg.format) {
    case Format::Json:
      os << envelope.dump(2) << '\n';
      break;
    case Format::Text:
      for (const auto& [k, v] : envelope.outputs.items()) os << k << ": " << v.dump() << '\n';
      break;
    case Format::Csv: {
      const Json& out = envelope.outputs;
      if (cfg.subcommand == "sweep") {
        os << "eps,small_eigenvalue\n";
        for (std::size_t i = 0; i < out["eps"].size(); ++i) os << out["eps"][i].dump() << ',' << out["values"][i].dump() << '\n';
      } else if (cfg.subcommand == "witness") {
        const char* cols[] = {"lambda", "ratio", "pairing", "h_norm", "Lg_norm", "Lg_sup", "G_peak",
                              "support_x", "support_t", "G_l2_squared"};
        for (std::size_t c = 0; c < std::size(cols); ++c) os << (c ? "," : "") << cols[c];
        os << '\n';
        for (const auto& row : out["rows"]) {
          for (std::size_t c = 0; c < std::size(cols); ++c) os << (c ? "," : "") << row[cols[c]].dump();
          os << '\n';
        }
      } else {
        std::vector<std::pair<std::string, std::string>> rows;
        flatten(out, "", rows);
        os << "key,value\n";
        for (const auto& [k, v] : rows) os << k << ',' << v << '\n';
      }
      break;
    }
  }
  return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto fail = [&](const std::string& kind, const std::string& message, int code) {
    err << Json{{"error", kind}, {"message", message}}.dump() << '\n';
    return code;
  };
  try {
    const auto cfg = parse(args, out);
    if (!cfg) return 0;
    const ResultEnvelope env = execute(*cfg);
    const std::string text = render(env, *cfg);
    if (cfg->out) {
      std::ofstream file(*cfg->out, std::ios::trunc);
      if (!file) return fail("io", "cannot open " + *cfg->out, 1);
      file << text;
    } else {
      out << text;
    }
    for (const auto& w : env.provenance["warnings"]) err << Json{{"warning", w}}.dump() << '\n';
    return 0;
  } catch (const PreconditionError& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}

}  // namespace locsolv::cli
