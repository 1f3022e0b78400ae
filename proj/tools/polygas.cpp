#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polygas/polygas.hpp"

using json = nlohmann::json;
using namespace polygas;
namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

enum Exit { kOk = 0, kVerifyFailed = 1, kInfeasible = 2, kUsage = 3 };

const std::set<std::string> kKnownKeys{
    "seed",         "out",          "eta",        "margin",        "lattice.L",      "lattice.N",
    "lattice.n",    "lattice.d",    "lattice.ell", "lattice.Lcal", "model.g",        "model.phibar",
    "model.nu",     "model.irrelevant", "bounds.h", "bounds.delta", "bounds.g0",     "bounds.L",
    "predict.mode", "predict.decades", "mc.side",  "mc.d",         "mc.g0",          "mc.nu",
    "mc.h",         "mc.sweeps",    "mc.burn_in", "mc.step",       "mc.laplacian",   "mc.zero_mode",
    "mc.initial",   "mc.chains",    "verify.instance"};

/** @brief Config file plus command-line overrides, read through typed getters. */
struct Settings {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  RunConfig cfg;

  void resolve() {
    if (!config_path.empty()) cfg = RunConfig::parse_file(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    cfg.require_known(kKnownKeys);
  }
  fs::path out() const { return cfg.get_string("out", "."); }
  json echo() const {
    json j = json::object();
    for (const auto& [k, v] : cfg.values()) j[k] = v;
    return j;
  }
};

/// Registers --flag as an override of config key.
void flag(CLI::App* app, Settings& s, const std::string& name, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(name, [&s, key](const std::string& v) { s.overrides[key] = v; }, help + " [" + key + "]");
}

json envelope(const std::string& kind, const Settings& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind;
  j["config"] = s.echo();
  return j;
}

void emit(const fs::path& path, const json& j) {
  atomic_write(path, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
}

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

TorusSpec lattice_spec(const RunConfig& c) {
  TorusSpec t;
  t.L = static_cast<int>(c.get_long("lattice.L", 3));
  t.N = static_cast<int>(c.get_long("lattice.N", 3));
  t.n = static_cast<int>(c.get_long("lattice.n", 1));
  t.d = static_cast<int>(c.get_long("lattice.d", 2));
  t.ell = static_cast<int>(c.get_long("lattice.ell", 1));
  t.Lcal = static_cast<int>(c.get_long("lattice.Lcal", 1));
  t.validate();
  return t;
}

MultiplierModel multiplier_model(const RunConfig& c) {
  MultiplierModel m;
  m.nu = c.get_double("model.nu", 0.0);
  m.irrelevant_amplitude = c.get_double("model.irrelevant", 0.0);
  return m;
}

json ledger_json(const ConditionLedger& l) {
  json a = json::array();
  for (const auto& e : l.entries)
    a.push_back({{"name", e.name}, {"label", e.label}, {"margin", e.margin}, {"threshold", e.threshold}, {"ok", e.ok()}});
  return a;
}

json scale_json(const ScaleChoice& s) {
  return {{"h", s.h},         {"L", s.L},         {"g0", s.g0},         {"n", s.n},       {"ell", s.ell},
          {"Lcal", s.Lcal},   {"r_frak", s.r_frak}, {"eps_hat", s.eps_hat}, {"delta", s.delta}, {"eta", s.eta},
          {"hbar", s.hbar},   {"phibar", s.phibar}, {"g", s.g},         {"nu", s.nu},     {"window_x", s.window_x}};
}

int cmd_kernels(const Settings& s) {
  const auto& c = s.cfg;
  TorusSpec t = lattice_spec(c);
  LatticeHierarchy h(t);
  auto A = background_kernel(h);
  auto col = A.column0();
  double worst = 0.0;
  {
    auto M = A.dense();
    worst = (M.rowwise().sum().array() - 1.0).abs().maxCoeff();
  }
  const double g = c.get_double("model.g", 0.3), pb = c.get_double("model.phibar", 0.9);
  auto cov = gamma(multiplier_model(c), A, g, pb);

  auto header = [&](const Torus& T, Level level) {
    KernelHeader hd;
    hd.d = static_cast<std::uint32_t>(T.dim());
    hd.rank = static_cast<std::uint32_t>(T.dim());
    for (int a = 0; a < T.dim(); ++a) hd.shape[a] = static_cast<std::uint32_t>(T.side());
    hd.level = static_cast<std::uint32_t>(level);
    return hd;
  };
  const fs::path dir = s.out();
  write_kernel(dir / "background_kernel.pgkn", header(h.fine(), Level::Fine), col);
  write_kernel(dir / "gamma_kernel.pgkn", header(h.block(), Level::Block), cov.Gamma.stencil);

  json j = envelope("kernels", s);
  j["lattice"] = {{"L", t.L}, {"N", t.N}, {"n", t.n}, {"d", t.d}};
  j["background"] = {{"file", "background_kernel.pgkn"}, {"row_sum_residual", worst}, {"decay_rate", fit_decay_rate(A)}};
  j["gamma"] = {{"file", "gamma_kernel.pgkn"},
                {"g", g},
                {"phibar", pb},
                {"square_residual", gamma_square_residual(cov)},
                {"mass2", cov.mass2()}};
  emit(dir / "kernels.json", j);
  return kOk;
}

int cmd_verify_combinatorics(const Settings& s) {
  json checks = json::array();
  bool all = true;
  auto add = [&](const std::string& name, bool pass, json detail) {
    checks.push_back({{"name", name}, {"pass", pass}, {"detail", std::move(detail)}});
    all = all && pass;
  };
  for (int n = 1; n <= 6; ++n) {
    std::int64_t expect = ((n % 2) ? 1 : -1) * factorial(n - 1);
    auto v = ursell(LabeledGraph::complete(n));
    add("ursell_complete_" + std::to_string(n), v == expect, {{"value", v}, {"expected", expect}});
  }
  std::mt19937_64 rng(s.cfg.get_long("seed", 1));
  std::bernoulli_distribution B(0.5);
  int agree = 0, bound = 0, total = 0;
  for (int n = 2; n <= 7; ++n)
    for (int t = 0; t < 20; ++t) {
      LabeledGraph g;
      g.n = n;
      for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k)
          if (B(rng)) g.edges.emplace_back(i, k);
      agree += ursell(g) == ursell_by_subsets(g);
      bound += ursell_tree_bound(g).holds;
      ++total;
    }
  add("ursell_two_algorithms", agree == total, {{"agree", agree}, {"total", total}});
  add("tree_graph_bound", bound == total, {{"holds", bound}, {"total", total}});
  for (int n = 2; n <= 7; ++n) {
    auto r = dtree_factorial_sum(n);
    add("dtree_sum_" + std::to_string(n), r.holds, {{"lhs", r.lhs}, {"rhs", r.rhs}});
    add("cayley_" + std::to_string(n), cayley_total(n) == ipow(n, n - 2), {{"value", cayley_total(n)}});
  }
  json j = envelope("verify_combinatorics", s);
  j["checks"] = checks;
  j["pass"] = all;
  emit(s.out() / "verify_combinatorics.json", j);
  return all ? kOk : kVerifyFailed;
}

int cmd_verify_expansion(const Settings& s) {
  const std::string name = s.cfg.get_string("verify.instance", "twoblock");
  auto inst = named_cluster_instance(name);
  auto r = cluster_identity_check(inst);
  const bool mc = r.lhs_method == "monte-carlo";
  const bool identity = mc ? r.z_score <= 3.0 : r.rel_error <= 1e-6;
  const bool pass = identity && r.reblock_residual <= 1e-12;
  json j = envelope("verify_expansion", s);
  j["instance"] = name;
  j["lhs"] = r.lhs;
  j["lhs_error"] = r.lhs_error;
  j["lhs_method"] = r.lhs_method;
  j["closed_form"] = r.closed_form;
  j["rhs"] = r.rhs;
  j["rel_error"] = r.rel_error;
  j["rel_error_exact"] = r.rel_error_exact;
  j["z_score"] = r.z_score;
  j["reblock_residual"] = r.reblock_residual;
  j["pass"] = pass;
  emit(s.out() / "verify_expansion.json", j);
  return pass ? kOk : kVerifyFailed;
}

int cmd_verify_covariance(const Settings& s) {
  const auto& c = s.cfg;
  LatticeHierarchy h(lattice_spec(c));
  auto A = background_kernel(h);
  const double g = c.get_double("model.g", 0.3), pb = c.get_double("model.phibar", 0.9);
  auto cov = gamma(multiplier_model(c), A, g, pb);
  json checks = json::array();
  bool all = true;
  auto add = [&](const std::string& name, double value, double limit, bool pass) {
    checks.push_back({{"name", name}, {"value", value}, {"limit", limit}, {"pass", pass}});
    all = all && pass;
  };
  const double sq = gamma_square_residual(cov);
  add("gamma_square", sq, 1e-10, sq <= 1e-10);
  auto hs = hs_norm(cov, {0}, {0}, c.get_double("eta", 0.25));
  add("schur_dominates_gram", hs.value - hs.gram_top_eigenvalue, 0.0, hs.value >= hs.gram_top_eigenvalue * (1 - 1e-12));
  auto ms = multiscale_decompose(cov.Gamma, cov.mass2());
  add("multiscale_reconstruction", ms.reconstruction_error, 1e-8, ms.reconstruction_error <= 1e-8);
  json j = envelope("verify_covariance", s);
  j["checks"] = checks;
  j["hs_norm"] = {{"value", hs.value}, {"sharp_target", hs.sharp_target}, {"margin_condhs", hs.margin_condhs}};
  j["multiscale_J"] = ms.J;
  j["pass"] = all;
  emit(s.out() / "verify_covariance.json", j);
  return all ? kOk : kVerifyFailed;
}

int cmd_bounds(const Settings& s, bool print_margins) {
  const auto& c = s.cfg;
  CertificateOptions o;
  o.eta = c.get_double("eta", 0.25);
  o.margin_min = c.get_double("margin", 10.0);
  const double h = c.get_double("bounds.h", 1e-8), delta = c.get_double("bounds.delta", 0.2);
  const double L = c.get_double("bounds.L", 2.0), g0 = c.get_double("bounds.g0", 1e-3);
  auto cert = error_certificate(h, delta, L, g0, o);
  json stages = json::array();
  for (const auto& st : cert.stages)
    stages.push_back({{"name", st.name}, {"ok", st.ok}, {"value", st.value}, {"detail", st.detail}, {"condition", st.condition}});
  json j = envelope("bounds", s);
  j["scale"] = scale_json(cert.scale);
  j["ledger"] = ledger_json(cert.ledger);
  j["stages"] = stages;
  j["refused"] = cert.refused;
  j["binding_stage"] = cert.binding_stage;
  j["binding_condition"] = cert.binding_condition;
  j["m_leading"] = cert.m_leading;
  j["m_asymptotic"] = cert.m_asymptotic;
  j["relative_bound"] = cert.refused ? json(nullptr) : json(cert.relative_bound);
  std::string csv = "name,margin,threshold,ok\n";
  for (const auto& e : cert.ledger.entries)
    csv += e.name + "," + fmt(e.margin) + "," + fmt(e.threshold) + "," + (e.ok() ? "1" : "0") + "\n";
  atomic_write(s.out() / "bounds_margins.csv", csv);
  emit(s.out() / "bounds.json", j);
  if (print_margins) std::cerr << csv;
  if (cert.refused) {
    std::cerr << "certificate refused at stage " << cert.binding_stage << ", binding condition "
              << cert.binding_condition << "\n";
    return kInfeasible;
  }
  return kOk;
}

PredictMode parse_mode(const std::string& m) {
  if (m == "asymptotic") return PredictMode::Asymptotic;
  if (m == "refined") return PredictMode::Refined;
  throw ConfigError("predict.mode must be asymptotic or refined");
}

int cmd_predict(const Settings& s) {
  const auto& c = s.cfg;
  PredictOptions po;
  po.L = c.get_double("bounds.L", 2.0);
  po.delta = c.get_double("bounds.delta", 0.2);
  po.g0 = c.get_double("bounds.g0", 1.0);
  const double h = c.get_double("bounds.h", 1e-6);
  const std::string mode = c.get_string("predict.mode", "refined");
  parse_mode(mode);
  ScaleOptions so;
  so.eta = c.get_double("eta", 0.25);
  so.margin_min = c.get_double("margin", 10.0);
  auto sc = choose_scales(h, po.delta, po.L, po.g0, so);
  json j = envelope("predict", s);
  j["mode"] = mode;
  j["n"] = sc.n;
  j["g"] = sc.g;
  j["phibar"] = sc.phibar;
  j["hbar"] = sc.hbar;
  j["m_asymptotic"] = predict_magnetization(h, PredictMode::Asymptotic);
  j["m_refined"] = predict_magnetization(h, PredictMode::Refined, po);
  j["m"] = predict_magnetization(h, parse_mode(mode), po);
  j["ledger"] = ledger_json(sc.ledger);
  const long decades = c.get_long("predict.decades", 0);
  if (decades < 0) throw ConfigError("predict.decades must be nonnegative");
  if (decades > 0) {
    std::string csv = "h,m_asymptotic,m_refined\n";
    json scan = json::array();
    for (long k = 0; k <= 4 * decades; ++k) {
      const double hk = h * std::pow(10.0, -0.25 * static_cast<double>(k));
      const double a = predict_magnetization(hk, PredictMode::Asymptotic), r = predict_magnetization(hk, PredictMode::Refined, po);
      csv += fmt(hk) + "," + fmt(a) + "," + fmt(r) + "\n";
      scan.push_back({{"h", hk}, {"m_asymptotic", a}, {"m_refined", r}});
    }
    j["scan"] = scan;
    atomic_write(s.out() / "predict_scan.csv", csv);
  }
  emit(s.out() / "predict.json", j);
  return kOk;
}

MCConfig mc_config(const RunConfig& c) {
  MCConfig m;
  m.side = static_cast<int>(c.get_long("mc.side", m.side));
  m.d = static_cast<int>(c.get_long("mc.d", m.d));
  m.g0 = c.get_double("mc.g0", m.g0);
  m.nu = c.get_double("mc.nu", m.nu);
  m.h = c.get_double("mc.h", m.h);
  m.sweeps = c.get_long("mc.sweeps", m.sweeps);
  m.burn_in = c.get_long("mc.burn_in", m.burn_in);
  m.step = c.get_double("mc.step", m.step);
  m.laplacian = c.get_bool("mc.laplacian", m.laplacian);
  m.zero_mode = c.get_bool("mc.zero_mode", m.zero_mode);
  m.initial = c.get_double("mc.initial", m.initial);
  const long seed = c.get_long("seed", 1);
  if (seed < 0) throw ConfigError("seed must be nonnegative");
  m.seed = static_cast<std::uint64_t>(seed);
  m.validate();
  return m;
}

int cmd_simulate(const Settings& s) {
  MCConfig m = mc_config(s.cfg);
  const long chains = s.cfg.get_long("mc.chains", 1);
  if (chains < 1) throw ConfigError("mc.chains must be >= 1");
  auto r = chains == 1 ? run_chain(m) : run_chains(m, static_cast<int>(chains));
  json j = envelope("simulate", s);
  j["magnetization"] = r.magnetization;
  j["std_error"] = r.std_error;
  j["acceptance"] = r.acceptance;
  j["step"] = r.step;
  j["samples"] = r.magnetization_series.size();
  if (!m.laplacian && !m.zero_mode) j["decoupled_oracle"] = decoupled_magnetization(m.g0, m.nu, m.h);
  std::string csv = "sample,magnetization,action\n";
  for (std::size_t k = 0; k < r.magnetization_series.size(); ++k)
    csv += std::to_string(k) + "," + fmt(r.magnetization_series[k]) + "," + fmt(r.energy_series[k]) + "\n";
  atomic_write(s.out() / "simulate_series.csv", csv);
  emit(s.out() / "simulate.json", j);
  return kOk;
}

/** @brief Minimal SVG line chart with optional log10 axes. */
std::string svg_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series,
                      bool logx, bool logy) {
  const double W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& [name, pts] : series)
    for (auto [x, y] : pts) {
      if (!std::isfinite(tx(x)) || !std::isfinite(ty(y))) continue;
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, ty(y));
      y1 = std::max(y1, ty(y));
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double x) { return ml + (tx(x) - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (ty(y) - y0) / (y1 - y0) * (H - mt - mb); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  o << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel
    << (logx ? " (log10)" : "") << "</text>\n";
  o << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
    << ")\" text-anchor=\"middle\" font-size=\"13\">" << ylabel << (logy ? " (log10)" : "") << "</text>\n";
  for (double f : {0.0, 0.5, 1.0}) {
    const double xv = x0 + f * (x1 - x0), yv = y0 + f * (y1 - y0);
    o << "<text x=\"" << ml + f * (W - ml - mr) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << xv << "</text>\n";
    o << "<text x=\"" << ml - 6 << "\" y=\"" << H - mb - f * (H - mt - mb) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
      << yv << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    o << "<polyline fill=\"none\" stroke=\"" << colors[k % 4] << "\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : series[k].second)
      if (std::isfinite(tx(x)) && std::isfinite(ty(y))) o << px(x) << "," << py(y) << " ";
    o << "\"/>\n";
    o << "<text x=\"" << W - mr - 150 << "\" y=\"" << mt + 16 * (k + 1) << "\" font-size=\"12\" fill=\"" << colors[k % 4]
      << "\">" << series[k].first << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void flatten(const std::string& prefix, const json& j, std::vector<std::pair<std::string, std::string>>& rows) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(prefix.empty() ? k : prefix + "." + k, v, rows);
  } else if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) flatten(prefix + "[" + std::to_string(k) + "]", j[k], rows);
  } else {
    rows.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
  }
}

int cmd_report(const Settings& s, const std::string& dir_arg) {
  const fs::path dir = dir_arg.empty() ? s.out() : fs::path(dir_arg);
  if (!fs::is_directory(dir)) {
    std::cerr << "report: artifact directory " << dir.string() << " does not exist\n";
    return kVerifyFailed;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json" && e.path().filename() != "report.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  json artifacts = json::object();
  for (const auto& f : files) {
    std::ifstream in(f);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("kind")) continue;
    artifacts[j["kind"].get<std::string>()] = j;
  }
  if (artifacts.empty()) {
    std::cerr << "report: no artifacts in " << dir.string() << "\n";
    return kVerifyFailed;
  }
  json r = envelope("report", s);
  r["artifacts"] = artifacts;
  json plots = json::array();
  if (artifacts.contains("predict") && artifacts["predict"].contains("scan")) {
    std::vector<std::pair<double, double>> a, b;
    for (const auto& p : artifacts["predict"]["scan"]) {
      a.emplace_back(p["h"].get<double>(), p["m_asymptotic"].get<double>());
      b.emplace_back(p["h"].get<double>(), p["m_refined"].get<double>());
    }
    atomic_write(dir / "report_m_h.svg", svg_chart("magnetization against h", "h", "m", {{"asymptotic", a}, {"refined", b}}, true, true));
    plots.push_back("report_m_h.svg");
  }
  if (artifacts.contains("bounds")) {
    std::vector<std::pair<double, double>> m;
    double k = 0;
    for (const auto& e : artifacts["bounds"]["ledger"]) {
      const double v = e["margin"].is_number() ? e["margin"].get<double>() / e["threshold"].get<double>() : NAN;
      m.emplace_back(k++, v);
    }
    atomic_write(dir / "report_margins.svg",
                 svg_chart("ledger margins over threshold", "condition index", "margin / threshold", {{"margin", m}}, false, true));
    plots.push_back("report_margins.svg");
  }
  r["plots"] = plots;
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& [kind, j] : artifacts.items()) {
    std::vector<std::pair<std::string, std::string>> sub;
    flatten("", j, sub);
    for (auto& [k, v] : sub) rows.emplace_back(kind + "," + k, v);
  }
  std::string csv = "artifact,key,value\n";
  for (const auto& [k, v] : rows) {
    std::string q = v;
    if (q.find_first_of(",\"\n") != std::string::npos) {
      std::string e = "\"";
      for (char ch : q) e += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      q = e + "\"";
    }
    csv += k + "," + q + "\n";
  }
  atomic_write(dir / "report.csv", csv);
  atomic_write(dir / "report.json", r.dump(2) + "\n");
  std::cout << "report: " << artifacts.size() << " artifacts, " << plots.size() << " plots written to " << dir.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polygas: block-spin kernels, polymer expansions, certified bounds and Monte Carlo checks"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  app.fallthrough();
  Settings s;
  app.add_option("-c,--config", s.config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option_function<std::vector<std::string>>(
      "--set",
      [&s](const std::vector<std::string>& kv) {
        for (const auto& e : kv) {
          auto eq = e.find('=');
          if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value");
          s.overrides[e.substr(0, eq)] = e.substr(eq + 1);
        }
      },
      "config override key=value");
  flag(&app, s, "--out", "out", "output directory");
  flag(&app, s, "--seed", "seed", "global seed");
  flag(&app, s, "--eta", "eta", "slack eta");
  flag(&app, s, "--margin", "margin", "minimum ledger margin");

  auto* kernels = app.add_subcommand("kernels", "export background and covariance kernels");
  for (const char* k : {"L", "N", "n", "d"}) flag(kernels, s, std::string("--") + k, std::string("lattice.") + k, "lattice");
  flag(kernels, s, "--g", "model.g", "coupling");
  flag(kernels, s, "--phibar", "model.phibar", "minimizer");

  auto* verify = app.add_subcommand("verify", "brute-force verification suites");
  verify->require_subcommand(1);
  auto* v_comb = verify->add_subcommand("combinatorics", "Ursell, tree, d-tree and Cayley checks");
  auto* v_exp = verify->add_subcommand("expansion", "cluster expansion identity on a named instance");
  flag(v_exp, s, "--instance", "verify.instance", "decoupled | twoblock | threeblock | random:<seed>");
  auto* v_cov = verify->add_subcommand("covariance", "covariance square root, Schur bound and multiscale checks");
  for (const char* k : {"L", "N", "n", "d"}) flag(v_cov, s, std::string("--") + k, std::string("lattice.") + k, "lattice");

  auto* bounds = app.add_subcommand("bounds", "certified bound pipeline");
  bool margins = false;
  for (const char* k : {"h", "delta", "g0", "L"}) flag(bounds, s, std::string("--") + k, std::string("bounds.") + k, "scale");
  bounds->add_flag("--margins", margins, "print the ledger margins CSV to stderr");

  auto* predict = app.add_subcommand("predict", "magnetization predictor");
  for (const char* k : {"h", "delta", "g0", "L"}) flag(predict, s, std::string("--") + k, std::string("bounds.") + k, "scale");
  flag(predict, s, "--mode", "predict.mode", "asymptotic | refined");
  flag(predict, s, "--decades", "predict.decades", "scan this many decades below h");

  auto* simulate = app.add_subcommand("simulate", "Metropolis chain");
  for (const char* k : {"side", "d", "g0", "nu", "h", "sweeps", "burn_in", "chains"})
    flag(simulate, s, std::string("--") + k, std::string("mc.") + k, "chain");

  auto* report = app.add_subcommand("report", "consolidate artifacts into JSON, CSV and SVG");
  std::string report_dir;
  report->add_option("--dir", report_dir, "artifact directory (defaults to --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    s.resolve();
    if (*kernels) return cmd_kernels(s);
    if (*v_comb) return cmd_verify_combinatorics(s);
    if (*v_exp) return cmd_verify_expansion(s);
    if (*v_cov) return cmd_verify_covariance(s);
    if (*bounds) return cmd_bounds(s, margins);
    if (*predict) return cmd_predict(s);
    if (*simulate) return cmd_simulate(s);
    if (*report) return cmd_report(s, report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << " (binding condition " << e.binding << ")\n";
    return kInfeasible;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kVerifyFailed;
  }
  return kUsage;
}
