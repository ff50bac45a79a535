#include "weakform/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>

#include "weakform/dataset.hpp"
#include "weakform/dataset_io.hpp"
#include "weakform/density_pde.hpp"
#include "weakform/errors.hpp"
#include "weakform/ks.hpp"
#include "weakform/library.hpp"
#include "weakform/models.hpp"
#include "weakform/noise.hpp"
#include "weakform/ode.hpp"
#include "weakform/particles.hpp"
#include "weakform/rng.hpp"
#include "weakform/sparse.hpp"
#include "weakform/support_select.hpp"
#include "weakform/weak_system.hpp"
#include "weakform/wendy.hpp"

namespace weakform {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed_override = -1;
  int threads_override = 0;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// Config plumbing: strict keys, typed access, defaults echoed back into the
// config object so the emitted resolved_config.json reproduces the run.
// ---------------------------------------------------------------------------

json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValueError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ValueError("config root must be a JSON object");
  return j;
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ValueError("unknown config key '" + item.key() + "' in " + where);
  }
}

template <typename T>
T convert_value(const json& v, const std::string& key) {
  if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ValueError("config key '" + key + "' must be a number");
    return v.get<double>();
  } else if constexpr (std::is_same_v<T, std::int64_t>) {
    if (!v.is_number_integer()) throw ValueError("config key '" + key + "' must be an integer");
    return v.get<std::int64_t>();
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ValueError("config key '" + key + "' must be a boolean");
    return v.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ValueError("config key '" + key + "' must be a string");
    return v.get<std::string>();
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    if (!v.is_array()) throw ValueError("config key '" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ValueError("config key '" + key + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  } else if constexpr (std::is_same_v<T, std::vector<int>>) {
    if (!v.is_array()) throw ValueError("config key '" + key + "' must be an array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer())
        throw ValueError("config key '" + key + "' must be an array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  } else {
    static_assert(std::is_same_v<T, std::vector<std::string>>);
    if (!v.is_array()) throw ValueError("config key '" + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw ValueError("config key '" + key + "' must be an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }
}

template <typename T>
T require_key(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key))
    throw ValueError(where + ": missing required config key '" + key + "'");
  return convert_value<T>(obj.at(key), key);
}

template <typename T>
T get_default(json& obj, const std::string& key, const T& def) {
  if (!obj.contains(key)) {
    obj[key] = def;
    return def;
  }
  return convert_value<T>(obj.at(key), key);
}

int get_int(json& obj, const std::string& key, std::int64_t def) {
  return static_cast<int>(get_default<std::int64_t>(obj, key, def));
}

void check_schema_and_command(json& cfg, const std::string& command) {
  if (!cfg.contains("schema"))
    throw ValueError("missing required config key 'schema' (expected 1)");
  if (!cfg.at("schema").is_number_integer() || cfg.at("schema").get<std::int64_t>() != 1)
    throw ValueError("unsupported config schema (expected 1)");
  if (cfg.contains("command")) {
    const std::string c = convert_value<std::string>(cfg.at("command"), "command");
    if (c != command)
      throw ValueError("config is for command '" + c + "', not '" + command + "'");
  }
  cfg["command"] = command;
}

std::uint64_t resolve_seed(json& cfg) {
  const std::int64_t s = get_default<std::int64_t>(cfg, "seed", 0);
  if (s < 0) throw ValueError("seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

int resolve_threads(json& cfg, const CommonArgs& args) {
  int t = get_int(cfg, "threads", 0);
  if (args.threads_override > 0) {
    t = args.threads_override;
    cfg["threads"] = t;
  }
  if (t < 0) throw ValueError("threads must be non-negative");
  return t;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

fs::path ensure_out_dir(const CommonArgs& args) {
  fs::path p(args.out_dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create output directory '" + args.out_dir + "'");
  return p;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_resolved_config(const json& cfg, const fs::path& out_dir) {
  write_text_file(out_dir / "resolved_config.json", cfg.dump(2) + "\n");
}

FileFormat parse_format(const std::string& s) {
  if (s == "csv") return FileFormat::Csv;
  if (s == "binary") return FileFormat::Binary;
  throw ValueError("format must be \"csv\" or \"binary\", got \"" + s + "\"");
}

Dataset read_input_dataset(json& cfg, const std::string& where) {
  const std::string input = require_key<std::string>(cfg, where, "input");
  const std::string fmt = get_default<std::string>(cfg, "format", std::string("csv"));
  return read_dataset(input, parse_format(fmt));
}

// Display formatting (files use format_double; stdout uses %.6g).
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt_params(const Eigen::VectorXd& w) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (i) s += ", ";
    s += fmt(w[i]);
  }
  return s + ")";
}

json grid_json(const Grid& g) {
  json out = json::array();
  for (const Axis& ax : g.axes())
    out.push_back(json{{"n", ax.n}, {"lo", ax.lo}, {"hi", ax.hi}});
  return out;
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces
// ---------------------------------------------------------------------------

FeatureLibrary build_library_cfg(json& lib, const std::string& default_type,
                                 int ode_components) {
  if (lib.is_null()) lib = json::object();
  if (!lib.is_object()) throw ValueError("'library' must be a JSON object");
  const std::string type = get_default<std::string>(lib, "type", default_type);
  if (type == "ode_poly") {
    reject_unknown_keys(lib, "library", {"type", "max_degree", "trig_frequencies"});
    const int deg = get_int(lib, "max_degree", 3);
    const std::vector<int> freqs =
        get_default<std::vector<int>>(lib, "trig_frequencies", {});
    return ode_poly_trig_library(ode_components, deg, freqs);
  }
  if (type == "pde_poly") {
    reject_unknown_keys(lib, "library", {"type", "max_derivative", "max_power"});
    return pde_poly_library(get_int(lib, "max_derivative", 6), get_int(lib, "max_power", 6));
  }
  if (type == "density") {
    reject_unknown_keys(lib, "library",
                        {"type", "max_derivative", "max_power", "max_coord_power"});
    return density_poly_library(get_int(lib, "max_derivative", 2),
                                get_int(lib, "max_power", 2),
                                get_int(lib, "max_coord_power", 1));
  }
  if (type == "explicit") {
    reject_unknown_keys(lib, "library", {"type", "definition"});
    if (!lib.contains("definition"))
      throw ValueError("config: library type 'explicit' requires key 'definition'");
    FeatureLibrary fl = FeatureLibrary::from_json(lib.at("definition"));
    if (fl.size() == 0) throw ValueError("config: explicit library has no terms");
    return fl;
  }
  throw ValueError("unknown library type '" + type +
                   "' (expected ode_poly, pde_poly, density, or explicit)");
}

void validate_library_vs_data(const FeatureLibrary& lib, const Dataset& d) {
  if (lib.spatial_dims() != d.grid().ndim() - 1)
    throw ValueError("library dimensionality does not match the data grid");
  if (lib.components() != d.components())
    throw ValueError("library component count does not match the data");
}

// Derivative order each axis' stencil must carry: the library's per-axis
// maximum on spatial axes, order one on the evolution (last) axis.
std::vector<int> stencil_orders(const FeatureLibrary& lib, int ndim) {
  std::vector<int> orders(static_cast<std::size_t>(ndim), 0);
  const std::vector<int> sp = lib.max_derivative_per_axis();
  for (int a = 0; a + 1 < ndim; ++a)
    orders[static_cast<std::size_t>(a)] =
        a < static_cast<int>(sp.size()) ? sp[static_cast<std::size_t>(a)] : 0;
  orders[static_cast<std::size_t>(ndim - 1)] = 1;
  return orders;
}

struct SelectorKnobs {
  json tf = json::object();  // validated test_function sub-config
  double attenuation = 1e-3;
  double max_radius_fraction = 0.125;
};

SelectorKnobs read_selector_knobs(json& cfg) {
  SelectorKnobs k;
  json& tf = cfg["test_function"];
  if (tf.is_null()) tf = json::object();
  if (!tf.is_object()) throw ValueError("'test_function' must be a JSON object");
  const std::string family =
      get_default<std::string>(tf, "family", std::string("poly_bump"));
  if (family == "poly_bump") {
    reject_unknown_keys(tf, "test_function", {"family", "degree"});
    if (get_int(tf, "degree", 0) < 0)
      throw ValueError("test_function degree must be non-negative (0 = automatic)");
  } else if (family == "cinf_bump") {
    reject_unknown_keys(tf, "test_function", {"family", "max_derivative"});
    get_int(tf, "max_derivative", 8);
  } else if (family == "shinbrot_sin") {
    reject_unknown_keys(tf, "test_function", {"family", "n", "omega"});
    get_int(tf, "n", 0);
    get_default<double>(tf, "omega", 1.0);
  } else if (family == "valeur_asym") {
    reject_unknown_keys(tf, "test_function", {"family", "alpha", "beta"});
    get_default<double>(tf, "alpha", 0.0);
    get_default<double>(tf, "beta", 0.0);
  } else if (family == "takaya_hermite") {
    reject_unknown_keys(tf, "test_function", {"family", "n"});
    get_int(tf, "n", 0);
  } else if (family == "patra_cas") {
    reject_unknown_keys(tf, "test_function", {"family", "n", "k", "window"});
    get_int(tf, "n", 0);
    get_int(tf, "k", 1);
    get_default<double>(tf, "window", 1.0);
  } else {
    throw ValueError("unknown test_function family '" + family +
                     "' (poly_bump, cinf_bump, shinbrot_sin, takaya_hermite, "
                     "valeur_asym, patra_cas)");
  }
  k.tf = tf;
  k.attenuation = get_default<double>(cfg, "attenuation", 1e-3);
  k.max_radius_fraction = get_default<double>(cfg, "max_radius_fraction", 0.125);
  if (!(k.attenuation > 0.0 && k.attenuation < 1.0))
    throw ValueError("attenuation must lie in (0, 1)");
  if (!(k.max_radius_fraction > 0.0 && k.max_radius_fraction <= 0.5))
    throw ValueError("max_radius_fraction must lie in (0, 0.5]");
  return k;
}

// Instantiates the configured family for one axis; integer parameters given
// as 0 mean "pick the default for this derivative order".
TestFunction make_family(const json& tf, int order) {
  const std::string family = tf.at("family").get<std::string>();
  auto int_or = [&](const char* key, int def) {
    const int v = tf.at(key).get<int>();
    return v == 0 ? def : v;
  };
  TestFunction f = [&]() {
    if (family == "poly_bump") return TestFunction::poly_bump(int_or("degree", order + 3));
    if (family == "cinf_bump")
      return TestFunction::cinf_bump(
          1.0, std::max(tf.at("max_derivative").get<int>(), order + 1));
    if (family == "shinbrot_sin")
      return TestFunction::shinbrot_sin(int_or("n", order + 3), tf.at("omega").get<double>());
    if (family == "valeur_asym") {
      double alpha = tf.at("alpha").get<double>();
      double beta = tf.at("beta").get<double>();
      if (alpha <= 0.0) alpha = order + 3;
      if (beta <= 0.0) beta = order + 3;
      return TestFunction::valeur_asym(alpha, beta);
    }
    if (family == "takaya_hermite") return TestFunction::takaya_hermite(tf.at("n").get<int>());
    return TestFunction::patra_cas(int_or("n", order + 3), tf.at("k").get<int>(),
                                   tf.at("window").get<double>());
  }();
  if (f.max_derivative() < order)
    throw ValueError("test_function family '" + family +
                     "' cannot supply derivative order " + std::to_string(order));
  return f;
}

struct StencilSetup {
  std::vector<Stencil> stencils;
  json report;  // per-axis selection summary
};

// shared_bandwidth widens the automatic family degree on every axis to the
// one required by the stiffest axis. Support identification needs that: a
// slowly decaying window on one axis lets broadband noise through and the
// nonlinear library terms turn it into spurious in-band features. Parameter
// refinement on a known support keeps the per-axis degree instead - milder
// smoothing leaves more independent samples and the reweighted solver
// accounts for the remaining noise covariance itself.
StencilSetup build_stencils(const Dataset& d, const FeatureLibrary& lib,
                            const SelectorKnobs& knobs, bool shared_bandwidth) {
  const int ndim = d.grid().ndim();
  const std::vector<int> orders = stencil_orders(lib, ndim);
  const int top_order = *std::max_element(orders.begin(), orders.end());
  StencilSetup out;
  out.report = json::array();
  for (int a = 0; a < ndim; ++a) {
    const int order = orders[static_cast<std::size_t>(a)];
    SupportSelectOptions opt;
    opt.max_order = order;
    opt.attenuation = knobs.attenuation;
    opt.family = make_family(knobs.tf, shared_bandwidth ? top_order : order);
    const std::int64_t n = d.grid().axis_size(a);
    opt.max_radius = static_cast<int>(std::max<std::int64_t>(
        order + 1, static_cast<std::int64_t>(std::floor(
                       static_cast<double>(n) * knobs.max_radius_fraction))));
    const SupportSelection sel = select_support(d, a, opt);
    out.stencils.push_back(discretize(*opt.family, d.grid().spacing(a), sel.radius, order));
    out.report.push_back(json{{"axis", a},
                              {"order", order},
                              {"family", knobs.tf.at("family")},
                              {"radius", sel.radius},
                              {"corner_wavenumber", sel.corner_wavenumber},
                              {"degenerate", sel.degenerate}});
  }
  return out;
}

struct PlanKnobs {
  std::int64_t stride = 0;
  std::int64_t query_count = 0;
};

PlanKnobs read_plan_knobs(json& cfg) {
  PlanKnobs k;
  k.stride = get_default<std::int64_t>(cfg, "stride", 0);
  k.query_count = get_default<std::int64_t>(cfg, "query_count", 0);
  if (k.stride < 0) throw ValueError("stride must be non-negative (0 = automatic)");
  if (k.query_count < 0) throw ValueError("query_count must be non-negative (0 = automatic)");
  return k;
}

QueryPlan build_plan(const Dataset& d, const std::vector<Stencil>& stencils,
                     const PlanKnobs& knobs, std::int64_t default_count) {
  if (knobs.stride > 0) return query_plan(d.grid(), stencils, knobs.stride);
  const std::int64_t count = knobs.query_count > 0 ? knobs.query_count : default_count;
  return query_plan_for_count(d.grid(), stencils, count);
}

// Default query budget for support identification: thresholding needs enough
// rows to average the noise down, well beyond the 10-rows-per-term rule of
// thumb, capped by how many interior positions the stencil margins leave.
std::int64_t discovery_query_default(const Dataset& d, const std::vector<Stencil>& stencils,
                                     std::int64_t terms) {
  std::int64_t avail = 1;
  for (int a = 0; a < d.grid().ndim(); ++a)
    avail *= std::max<std::int64_t>(
        1, d.grid().axis_size(a) - 2 * stencils[static_cast<std::size_t>(a)].radius);
  return std::min(avail, std::max<std::int64_t>(10 * terms, 4000));
}

json query_json(const QueryPlan& plan) {
  return json{{"stride", plan.stride},
              {"start", plan.start},
              {"count_per_axis", plan.count},
              {"count", plan.total()}};
}

std::vector<double> build_lambdas(json& cfg) {
  const double lo = get_default<double>(cfg, "lambda_min", 1e-4);
  const double hi = get_default<double>(cfg, "lambda_max", 1.0);
  const int count = get_int(cfg, "lambda_count", 40);
  if (!(lo > 0.0) || !(hi >= lo)) throw ValueError("need 0 < lambda_min <= lambda_max");
  if (count < 1) throw ValueError("lambda_count must be at least 1");
  std::vector<double> lambdas(static_cast<std::size_t>(count));
  if (count == 1) {
    lambdas[0] = lo;
  } else {
    const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(count - 1);
    for (int i = 0; i < count; ++i)
      lambdas[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + step * i);
  }
  return lambdas;
}

json errors_vs_truth(const Eigen::VectorXd& w, const Eigen::VectorXd& truth) {
  json per = json::array();
  for (Eigen::Index i = 0; i < truth.size(); ++i)
    per.push_back(std::abs(w[i] - truth[i]) / std::abs(truth[i]));
  return json{{"per_parameter", per},
              {"l2", (w - truth).norm() / truth.norm()}};
}

BuiltinOde builtin_ode_by_name(const std::string& name) {
  if (name == "logistic") return builtin_logistic();
  if (name == "lorenz") return builtin_lorenz();
  if (name == "fhn") return builtin_fhn();
  throw ValueError("unknown model '" + name + "' (expected logistic, lorenz, fhn, or ks)");
}

// Forward solver over the data grid for output-error fitting. The initial
// state is the first time slice of the data.
std::function<Dataset(const Eigen::VectorXd&)> make_forward(const std::string& model_name,
                                                            const FixedModel& rmodel,
                                                            const Dataset& data,
                                                            double ode_tol, double ks_dt) {
  if (model_name == "ks") {
    if (data.grid().ndim() != 2 || data.components() != 1)
      throw ValueError("ks estimation needs scalar (x, t) data");
    const Axis x = data.grid().axis(0);
    const Axis t = data.grid().axis(1);
    KsConfig kc;
    kc.n = x.n;
    kc.length = x.spacing() * static_cast<double>(x.n);
    kc.t_end = t.hi - t.lo;
    kc.saves = t.n;
    kc.dt = ks_dt;
    std::vector<double> u0(static_cast<std::size_t>(x.n));
    for (std::int64_t i = 0; i < x.n; ++i)
      u0[static_cast<std::size_t>(i)] = data.values()[static_cast<std::size_t>(i * t.n)];
    return [kc, u0](const Eigen::VectorXd& w) {
      if (w.size() != 3) throw ValueError("ks forward solve needs 3 coefficients");
      KsConfig c = kc;
      c.coeffs[0] = w[0];
      c.coeffs[1] = w[1];
      c.coeffs[2] = w[2];
      return integrate_ks(u0, c);
    };
  }
  if (data.grid().ndim() != 1)
    throw ValueError("ode estimation needs single-axis time-series data");
  const Axis t = data.grid().axis(0);
  const int C = data.components();
  std::vector<double> u0(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) u0[static_cast<std::size_t>(c)] = data.values()[static_cast<std::size_t>(c)];
  const FixedModel structure = rmodel;
  return [structure, u0, t, ode_tol](const Eigen::VectorXd& w) {
    return integrate_ode(OdeModel{structure, w}, u0, t, ode_tol);
  };
}

// Weak-form ordinary least squares on the fixed support; the zero-noise
// setting short-circuits the covariance iteration.
Eigen::VectorXd weak_ols(const Dataset& d, const FixedModel& rmodel,
                         const std::vector<Stencil>& stencils, const QueryPlan& plan) {
  WendyOptions opt;
  opt.sigma = 0.0;
  return wendy_estimate(d, rmodel, stencils, plan, opt).w;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(json& cfg, const CommonArgs& args, const fs::path& out_dir) {
  const std::string model = require_key<std::string>(cfg, "simulate", "model");
  const std::uint64_t seed = resolve_seed(cfg);
  resolve_threads(cfg, args);
  const std::string output = get_default<std::string>(cfg, "output", model + "_data.csv");
  const std::string fmt_s = get_default<std::string>(cfg, "format", std::string("csv"));
  const FileFormat format = parse_format(fmt_s);

  Dataset d = [&]() {
    if (model == "ks") {
      reject_unknown_keys(cfg, "simulate",
                          {"schema", "command", "seed", "threads", "model", "output",
                           "format", "n", "length", "t_end", "saves", "dt"});
      const BuiltinKs base = builtin_ks();
      KsConfig kc = base.config;
      kc.n = get_default<std::int64_t>(cfg, "n", kc.n);
      kc.length = get_default<double>(cfg, "length", kc.length);
      kc.t_end = get_default<double>(cfg, "t_end", kc.t_end);
      kc.saves = get_default<std::int64_t>(cfg, "saves", kc.saves);
      kc.dt = get_default<double>(cfg, "dt", kc.dt);
      const std::vector<double> u0 = ks_random_initial(kc.n, kc.length, seed);
      return integrate_ks(u0, kc);
    }
    reject_unknown_keys(cfg, "simulate",
                        {"schema", "command", "seed", "threads", "model", "output",
                         "format", "samples", "t_end"});
    const BuiltinOde m = builtin_ode_by_name(model);
    Axis t = m.t_axis;
    t.n = get_default<std::int64_t>(cfg, "samples", t.n);
    t.hi = get_default<double>(cfg, "t_end", t.hi);
    return integrate_ode(OdeModel{m.model, m.params}, m.u0, t, m.tol);
  }();

  write_dataset(d, (out_dir / output).string(), format);
  write_resolved_config(cfg, out_dir);
  std::cout << "simulate: wrote " << (out_dir / output).string() << " ("
            << d.num_samples() << " samples, " << d.components() << " component"
            << (d.components() == 1 ? "" : "s") << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// noise
// ---------------------------------------------------------------------------

int cmd_noise(json& cfg, const CommonArgs& args, const fs::path& out_dir) {
  reject_unknown_keys(cfg, "noise",
                      {"schema", "command", "seed", "threads", "input", "output",
                       "format", "level"});
  const std::uint64_t seed = resolve_seed(cfg);
  resolve_threads(cfg, args);
  const double level = require_key<double>(cfg, "noise", "level");
  if (level < 0.0) throw ValueError("noise level must be non-negative");
  const std::string output = get_default<std::string>(cfg, "output", std::string("noisy.csv"));
  const Dataset d = read_input_dataset(cfg, "noise");
  const FileFormat format = parse_format(cfg.at("format").get<std::string>());

  NoiseSpec spec;
  spec.level = level;
  spec.seed = seed;
  const Dataset noisy = add_noise(d, spec);
  write_dataset(noisy, (out_dir / output).string(), format);
  write_resolved_config(cfg, out_dir);
  std::cout << "noise: wrote " << (out_dir / output).string() << " (level " << fmt(level)
            << ", clean rms " << fmt(d.rms()) << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// discover
// ---------------------------------------------------------------------------

int cmd_discover(json& cfg, const CommonArgs& args, const fs::path& out_dir) {
  reject_unknown_keys(cfg, "discover",
                      {"schema", "command", "seed", "threads", "input", "format",
                       "library", "test_function", "attenuation",
                       "max_radius_fraction", "stride", "query_count", "lambda_min",
                       "lambda_max", "lambda_count", "gamma", "output_prefix"});
  resolve_seed(cfg);
  resolve_threads(cfg, args);
  const std::string prefix =
      get_default<std::string>(cfg, "output_prefix", std::string("model"));
  const Dataset d = read_input_dataset(cfg, "discover");

  const std::string default_type = d.grid().ndim() == 1 ? "ode_poly" : "pde_poly";
  json& lib_cfg = cfg["library"];
  const FeatureLibrary lib = build_library_cfg(lib_cfg, default_type, d.components());
  validate_library_vs_data(lib, d);

  const SelectorKnobs sknobs = read_selector_knobs(cfg);
  const PlanKnobs pknobs = read_plan_knobs(cfg);
  const std::vector<double> lambdas = build_lambdas(cfg);
  const double gamma = get_default<double>(cfg, "gamma", 0.4);
  if (gamma < 0.0) throw ValueError("gamma must be non-negative");

  const Timer t_total;
  StencilSetup st = build_stencils(d, lib, sknobs, /*shared_bandwidth=*/true);
  const QueryPlan plan = build_plan(
      d, st.stencils, pknobs,
      discovery_query_default(d, st.stencils, static_cast<std::int64_t>(lib.size())));

  const Timer t_asm;
  const WeakSystem sys = assemble(d, lib, st.stencils, plan);
  const double assembly_s = t_asm.seconds();

  const Timer t_reg;
  std::vector<DiscoveryResult> eqs;
  eqs.reserve(static_cast<std::size_t>(d.components()));
  for (int c = 0; c < d.components(); ++c)
    eqs.push_back(discover_equation(sys, c, lambdas, gamma));
  const double regression_s = t_reg.seconds();

  // Loss-curve CSV: one row per (response, threshold).
  std::ostringstream loss;
  loss << "response,lambda,loss\n";
  for (std::size_t c = 0; c < eqs.size(); ++c)
    for (const auto& [lam, val] : eqs[c].sparse.loss_curve)
      loss << c << ',' << format_double(lam) << ',' << format_double(val) << '\n';
  write_text_file(out_dir / (prefix + "_loss.csv"), loss.str());

  json eq_json = json::array();
  std::cout << "discover: " << lib.size() << "-term library, " << plan.total()
            << " query points\n";
  for (std::size_t c = 0; c < eqs.size(); ++c) {
    const DiscoveryResult& r = eqs[c];
    json terms = json::array();
    for (int j : r.support)
      terms.push_back(json{{"index", j},
                           {"name", lib.term_name(j)},
                           {"coefficient", r.coefficients[j]}});
    eq_json.push_back(json{{"response", c},
                           {"lambda_star", r.sparse.lambda_star},
                           {"residual", r.residual},
                           {"support", r.support},
                           {"terms", terms}});
    std::cout << "response " << c << ": " << r.support.size() << " terms, lambda* "
              << fmt(r.sparse.lambda_star) << ", residual " << fmt(r.residual) << "\n";
    for (int j : r.support)
      std::cout << "  " << fmt(r.coefficients[j]) << "  " << lib.term_name(j) << "\n";
  }

  const json report{{"command", "discover"},
                    {"input", cfg.at("input").get<std::string>()},
                    {"grid", grid_json(d.grid())},
                    {"components", d.components()},
                    {"library", json{{"type", lib_cfg.at("type")}, {"size", lib.size()}}},
                    {"selector", st.report},
                    {"query", query_json(plan)},
                    {"equations", eq_json},
                    {"walltime_s", json{{"assembly", assembly_s},
                                        {"regression", regression_s},
                                        {"total", t_total.seconds()}}}};
  write_text_file(out_dir / (prefix + "_report.json"), report.dump(2) + "\n");
  write_resolved_config(cfg, out_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

int cmd_estimate(json& cfg, const CommonArgs& args, const fs::path& out_dir) {
  reject_unknown_keys(cfg, "estimate",
                      {"schema", "command", "seed", "threads", "input", "format", "model",
                       "method", "sigma", "tol", "max_iterations", "regularization",
                       "stride", "query_count", "test_function", "attenuation",
                       "max_radius_fraction", "oe_max_evaluations", "oe_tol", "ks_dt",
                       "output_prefix"});
  resolve_seed(cfg);
  resolve_threads(cfg, args);
  const std::string model_name = require_key<std::string>(cfg, "estimate", "model");
  const std::string method = get_default<std::string>(cfg, "method", std::string("wendy"));
  if (method != "wendy" && method != "oe" && method != "both")
    throw ValueError("method must be wendy, oe, or both");
  const double sigma = get_default<double>(cfg, "sigma", -1.0);
  const double tol = get_default<double>(cfg, "tol", 1e-6);
  const int max_iterations = get_int(cfg, "max_iterations", 100);
  const double regularization = get_default<double>(cfg, "regularization", 1e-10);
  const int oe_max_evaluations = get_int(cfg, "oe_max_evaluations", 400);
  const double oe_tol = get_default<double>(cfg, "oe_tol", 1e-8);
  const double ks_dt = get_default<double>(cfg, "ks_dt", 0.05);
  const std::string prefix =
      get_default<std::string>(cfg, "output_prefix", std::string("estimate"));
  const SelectorKnobs sknobs = read_selector_knobs(cfg);
  const PlanKnobs pknobs = read_plan_knobs(cfg);

  const Dataset d = read_input_dataset(cfg, "estimate");

  FixedModel full;
  Eigen::VectorXd truth;
  if (model_name == "ks") {
    const BuiltinKs bk = builtin_ks();
    full = bk.model;
    truth = bk.params;
  } else {
    const BuiltinOde bo = builtin_ode_by_name(model_name);
    full = bo.model;
    truth = bo.params;
  }
  const FixedModel rmodel = restrict_to_support(full);
  validate_library_vs_data(rmodel.library, d);
  const int P = rmodel.parameter_count();

  const StencilSetup st = build_stencils(d, rmodel.library, sknobs, /*shared_bandwidth=*/false);
  const QueryPlan plan =
      build_plan(d, st.stencils, pknobs, std::max<std::int64_t>(20 * P, 100));

  json methods_json = json::array();
  if (method == "wendy" || method == "both") {
    WendyOptions wo;
    if (sigma >= 0.0) wo.sigma = sigma;
    wo.tol = tol;
    wo.max_iterations = max_iterations;
    wo.regularization = regularization;
    const Timer t;
    const GlsResult r = wendy_estimate(d, rmodel, st.stencils, plan, wo);
    const double wt = t.seconds();
    json std_json = json::array();
    for (int i = 0; i < P; ++i)
      std_json.push_back(std::sqrt(std::max(r.covariance_estimate(i, i), 0.0)));
    std::vector<double> params(r.w.data(), r.w.data() + r.w.size());
    methods_json.push_back(json{{"method", "wendy"},
                                {"parameters", params},
                                {"parameter_std", std_json},
                                {"iterations", r.iterations},
                                {"converged", r.converged},
                                {"sigma_hat", r.sigma_hat},
                                {"errors", errors_vs_truth(r.w, truth)},
                                {"walltime_s", wt}});
    std::cout << "estimate[wendy]: params " << fmt_params(r.w) << ", " << r.iterations
              << " iterations, " << (r.converged ? "converged" : "not converged")
              << ", sigma_hat " << fmt(r.sigma_hat) << ", walltime " << fmt(wt) << " s\n";
  }
  if (method == "oe" || method == "both") {
    const Timer t;
    const Eigen::VectorXd w0 = weak_ols(d, rmodel, st.stencils, plan);
    const auto forward = make_forward(model_name, rmodel, d, oe_tol, ks_dt);
    NelderMeadOptions nm;
    nm.max_evaluations = oe_max_evaluations;
    const OutputErrorResult r = output_error_estimate(d, forward, w0, nm);
    const double wt = t.seconds();
    std::vector<double> params(r.w.data(), r.w.data() + r.w.size());
    methods_json.push_back(json{{"method", "oe"},
                                {"parameters", params},
                                {"evaluations", r.evaluations},
                                {"converged", r.converged},
                                {"objective", r.objective},
                                {"errors", errors_vs_truth(r.w, truth)},
                                {"walltime_s", wt}});
    std::cout << "estimate[oe]: params " << fmt_params(r.w) << ", " << r.evaluations
              << " evaluations, objective " << fmt(r.objective) << ", walltime " << fmt(wt)
              << " s\n";
  }

  const json report{{"command", "estimate"},
                    {"model", model_name},
                    {"input", cfg.at("input").get<std::string>()},
                    {"grid", grid_json(d.grid())},
                    {"parameter_count", P},
                    {"selector", st.report},
                    {"query", query_json(plan)},
                    {"methods", methods_json}};
  write_text_file(out_dir / (prefix + "_report.json"), report.dump(2) + "\n");
  write_resolved_config(cfg, out_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// coarsegrain
// ---------------------------------------------------------------------------

int cmd_coarsegrain(json& cfg, const CommonArgs& args, const fs::path& out_dir) {
  const std::string problem = get_default<std::string>(cfg, "problem", std::string("ou"));
  if (problem == "ou") {
    reject_unknown_keys(cfg, "coarsegrain",
                        {"schema", "command", "seed", "threads", "problem", "particles",
                         "x_bins", "x_lo", "x_hi", "t_end", "saves", "dt_internal",
                         "theta", "diffusion", "init_std", "library",
                         "test_function", "attenuation", "max_radius_fraction",
                         "stride", "query_count", "lambda_min", "lambda_max",
                         "lambda_count", "gamma", "output_prefix"});
  } else if (problem == "oscillatory") {
    reject_unknown_keys(cfg, "coarsegrain",
                        {"schema", "command", "seed", "threads", "problem", "particles",
                         "x_bins", "x_lo", "x_hi", "t_end", "saves", "dt_internal",
                         "diff_mean", "diff_amp", "omega", "init_std", "library",
                         "test_function", "attenuation", "max_radius_fraction",
                         "stride", "query_count", "lambda_min", "lambda_max",
                         "lambda_count", "gamma", "output_prefix"});
  } else {
    throw ValueError("unknown problem '" + problem + "' (expected ou or oscillatory)");
  }

  const std::uint64_t seed = resolve_seed(cfg);
  const int threads = resolve_threads(cfg, args);
  const std::int64_t particles = get_default<std::int64_t>(cfg, "particles", 100000);
  const int x_bins = get_int(cfg, "x_bins", 64);
  const bool is_ou = problem == "ou";
  const double x_lo = get_default<double>(cfg, "x_lo", is_ou ? -4.0 : -8.0);
  const double x_hi = get_default<double>(cfg, "x_hi", is_ou ? 4.0 : 8.0);
  const double t_end = get_default<double>(cfg, "t_end", is_ou ? 5.0 : 2.0);
  const std::int64_t saves = get_default<std::int64_t>(cfg, "saves", 51);
  const double dt_internal = get_default<double>(cfg, "dt_internal", is_ou ? 0.01 : 0.002);
  const double init_std = get_default<double>(cfg, "init_std", is_ou ? 1.5 : 1.0);
  if (particles < 1) throw ValueError("particles must be positive");
  if (x_bins < 4) throw ValueError("x_bins must be at least 4");
  if (!(x_lo < x_hi)) throw ValueError("need x_lo < x_hi");
  if (saves < 2) throw ValueError("saves must be at least 2");
  if (!(t_end > 0.0) || !(dt_internal > 0.0))
    throw ValueError("t_end and dt_internal must be positive");

  ParticleEnsemble ens;
  if (is_ou) {
    const double theta = get_default<double>(cfg, "theta", 1.0);
    const double diffusion = get_default<double>(cfg, "diffusion", 0.5);
    ens = make_ou_ensemble(particles, theta, diffusion, init_std, seed);
  } else {
    const double mean = get_default<double>(cfg, "diff_mean", 0.5);
    const double amp = get_default<double>(cfg, "diff_amp", 0.4);
    const double omega = get_default<double>(cfg, "omega", 50.0);
    ens = make_oscillatory_ensemble(particles, mean, amp, omega, init_std, seed);
  }

  json& lib_cfg = cfg["library"];
  const FeatureLibrary lib = build_library_cfg(lib_cfg, "density", 1);
  if (lib_cfg.at("type").get<std::string>() != "density")
    throw ValueError("coarsegrain needs a density library");
  const SelectorKnobs sknobs = read_selector_knobs(cfg);
  const PlanKnobs pknobs = read_plan_knobs(cfg);
  const std::vector<double> lambdas = build_lambdas(cfg);
  const double gamma = get_default<double>(cfg, "gamma", 0.4);
  const std::string prefix =
      get_default<std::string>(cfg, "output_prefix", std::string("coarsegrain"));

  const Axis x_axis{x_bins, x_lo, x_hi};
  const Axis t_axis{saves, 0.0, t_end};

  const Timer t_total;
  const Timer t_sim;
  const ParticleTrajectories traj = simulate_ips(ens, t_axis, dt_internal, threads);
  double outside = 0.0;
  const Dataset density = histogram_density(traj, x_axis, &outside);
  const double simulate_s = t_sim.seconds();
  write_dataset(density, (out_dir / (prefix + "_density.csv")).string(), FileFormat::Csv);

  const Timer t_disc;
  const StencilSetup st = build_stencils(density, lib, sknobs, /*shared_bandwidth=*/true);
  const QueryPlan plan = build_plan(
      density, st.stencils, pknobs,
      discovery_query_default(density, st.stencils, static_cast<std::int64_t>(lib.size())));
  const WeakSystem sys = assemble(density, lib, st.stencils, plan);
  const DiscoveryResult disc = discover_equation(sys, 0, lambdas, gamma);
  const double discovery_s = t_disc.seconds();

  // Replay the discovered density equation from the first histogram slice and
  // compare against the observed histogram.
  const Timer t_replay;
  std::vector<double> p0(static_cast<std::size_t>(x_bins));
  for (int i = 0; i < x_bins; ++i)
    p0[static_cast<std::size_t>(i)] =
        density.values()[static_cast<std::size_t>(i) * static_cast<std::size_t>(saves)];
  const Dataset replay = solve_density_pde(lib, disc.coefficients, p0, x_axis, t_axis);
  const double replay_l1 = density_l1_error(replay, density);
  const double replay_s = t_replay.seconds();

  const bool high_residual = disc.residual > 0.25;
  json terms = json::array();
  for (int j : disc.support)
    terms.push_back(json{{"index", j},
                         {"name", lib.term_name(j)},
                         {"coefficient", disc.coefficients[j]}});

  json report{{"command", "coarsegrain"},
              {"problem", problem},
              {"particles", particles},
              {"outside_fraction", outside},
              {"grid", grid_json(density.grid())},
              {"library", json{{"type", "density"}, {"size", lib.size()}}},
              {"selector", st.report},
              {"query", query_json(plan)},
              {"lambda_star", disc.sparse.lambda_star},
              {"residual", disc.residual},
              {"high_residual", high_residual},
              {"support", disc.support},
              {"terms", terms},
              {"replay_l1_error", replay_l1},
              {"walltime_s", json{{"simulate", simulate_s},
                                  {"discovery", discovery_s},
                                  {"replay", replay_s},
                                  {"total", t_total.seconds()}}}};
  if (is_ou) {
    const BuiltinOu ou = builtin_ou();
    report["expected_support"] = ou.support;
    const bool match = disc.support == ou.support;
    report["matches_expected_support"] = match;
    if (match) {
      Eigen::VectorXd w(2);
      w << disc.coefficients[ou.support[0]], disc.coefficients[ou.support[1]];
      Eigen::VectorXd truth(2);
      truth << cfg.at("theta").get<double>(), cfg.at("diffusion").get<double>();
      report["errors"] = errors_vs_truth(w, truth);
    }
  }
  write_text_file(out_dir / (prefix + "_report.json"), report.dump(2) + "\n");
  write_resolved_config(cfg, out_dir);

  std::cout << "coarsegrain[" << problem << "]: " << particles << " particles, outside fraction "
            << fmt(outside) << "\n";
  std::cout << "discovered " << disc.support.size() << " terms, residual " << fmt(disc.residual)
            << (high_residual ? " (HIGH RESIDUAL: sampling noise likely dominates)" : "")
            << "\n";
  for (int j : disc.support)
    std::cout << "  " << fmt(disc.coefficients[j]) << "  " << lib.term_name(j) << "\n";
  std::cout << "replay L1 error " << fmt(replay_l1) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct TrialResult {
  std::string method;
  double level = 0.0;
  std::uint64_t seed = 0;
  double walltime_s = 0.0;
  Eigen::VectorXd rel_err;
  double err_l2 = 0.0;
};

double geometric_mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += std::log(std::max(x, 1e-16));
  return std::exp(acc / static_cast<double>(v.size()));
}

int cmd_bench(json& cfg, const CommonArgs& args, const fs::path& out_dir) {
  reject_unknown_keys(cfg, "bench",
                      {"schema", "command", "seed", "threads", "problem", "methods",
                       "noise_levels", "trials", "sigma", "tol", "max_iterations",
                       "regularization", "stride", "query_count", "test_function",
                       "attenuation", "max_radius_fraction", "oe_max_evaluations",
                       "oe_tol", "ks_dt", "ks_data_seed", "output_prefix"});
  const std::uint64_t seed = resolve_seed(cfg);
  const int threads = resolve_threads(cfg, args);
  const std::string problem = require_key<std::string>(cfg, "bench", "problem");
  const bool is_ks = problem == "ks";
  const std::vector<std::string> default_methods =
      is_ks ? std::vector<std::string>{"wendy", "oe"} : std::vector<std::string>{"wendy", "ee"};
  const std::vector<std::string> methods =
      get_default<std::vector<std::string>>(cfg, "methods", default_methods);
  if (methods.empty()) throw ValueError("methods must not be empty");
  for (const std::string& m : methods) {
    if (m != "wendy" && m != "ee" && m != "oe")
      throw ValueError("unknown method '" + m + "' (expected wendy, ee, or oe)");
    if (m == "ee" && is_ks)
      throw ValueError("the equation-error baseline needs single-axis time-series data");
  }
  const std::vector<double> levels =
      get_default<std::vector<double>>(cfg, "noise_levels", {0.1, 0.2});
  if (levels.empty()) throw ValueError("noise_levels must not be empty");
  for (double l : levels)
    if (l < 0.0) throw ValueError("noise levels must be non-negative");
  const int trials = get_int(cfg, "trials", 20);
  if (trials < 1) throw ValueError("trials must be at least 1");
  const double sigma = get_default<double>(cfg, "sigma", -1.0);
  const double tol = get_default<double>(cfg, "tol", 1e-6);
  const int max_iterations = get_int(cfg, "max_iterations", 100);
  const double regularization = get_default<double>(cfg, "regularization", 1e-10);
  const int oe_max_evaluations = get_int(cfg, "oe_max_evaluations", 400);
  const double oe_tol = get_default<double>(cfg, "oe_tol", 1e-8);
  const double ks_dt = get_default<double>(cfg, "ks_dt", 0.05);
  const std::uint64_t ks_data_seed =
      static_cast<std::uint64_t>(get_default<std::int64_t>(cfg, "ks_data_seed", 0));
  const std::string prefix =
      get_default<std::string>(cfg, "output_prefix", std::string("bench"));
  const SelectorKnobs sknobs = read_selector_knobs(cfg);
  const PlanKnobs pknobs = read_plan_knobs(cfg);

  FixedModel full;
  Eigen::VectorXd truth;
  Dataset clean = [&]() {
    if (is_ks) {
      const BuiltinKs bk = builtin_ks_estimation();
      full = bk.model;
      truth = bk.params;
      return bk.simulate(ks_data_seed);
    }
    const BuiltinOde bo = builtin_ode_by_name(problem);
    full = bo.model;
    truth = bo.params;
    return bo.simulate();
  }();
  const FixedModel rmodel = restrict_to_support(full);
  const int P = rmodel.parameter_count();
  write_resolved_config(cfg, out_dir);

  const std::size_t n_methods = methods.size();
  const std::int64_t n_tasks = static_cast<std::int64_t>(levels.size()) * trials;
  std::vector<TrialResult> rows(static_cast<std::size_t>(n_tasks) * n_methods);

  auto run_trial = [&](std::int64_t task) {
    const std::size_t li = static_cast<std::size_t>(task / trials);
    const double level = levels[li];
    const std::uint64_t nseed = derive_seed(seed, static_cast<std::uint64_t>(task) + 1);
    NoiseSpec spec;
    spec.level = level;
    spec.seed = nseed;
    const Dataset noisy = add_noise(clean, spec);
    const StencilSetup st = build_stencils(noisy, rmodel.library, sknobs,
                                           /*shared_bandwidth=*/false);
    const QueryPlan plan =
        build_plan(noisy, st.stencils, pknobs, std::max<std::int64_t>(20 * P, 100));
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      TrialResult& row = rows[static_cast<std::size_t>(task) * n_methods + mi];
      row.method = methods[mi];
      row.level = level;
      row.seed = nseed;
      const Timer t;
      Eigen::VectorXd w;
      if (methods[mi] == "wendy") {
        WendyOptions wo;
        if (sigma >= 0.0) wo.sigma = sigma;
        wo.tol = tol;
        wo.max_iterations = max_iterations;
        wo.regularization = regularization;
        w = wendy_estimate(noisy, rmodel, st.stencils, plan, wo).w;
      } else if (methods[mi] == "ee") {
        w = equation_error_ols(noisy, rmodel);
      } else {
        const Eigen::VectorXd w0 = weak_ols(noisy, rmodel, st.stencils, plan);
        const auto forward =
            make_forward(is_ks ? "ks" : problem, rmodel, noisy, oe_tol, ks_dt);
        NelderMeadOptions nm;
        nm.max_evaluations = oe_max_evaluations;
        w = output_error_estimate(noisy, forward, w0, nm).w;
      }
      row.walltime_s = t.seconds();
      row.rel_err.resize(P);
      for (int i = 0; i < P; ++i)
        row.rel_err[i] = std::abs(w[i] - truth[i]) / std::abs(truth[i]);
      row.err_l2 = (w - truth).norm() / truth.norm();
    }
  };

  const int pool = std::max(1, threads == 0 ? 1 : threads);
  if (pool == 1 || n_tasks == 1) {
    for (std::int64_t task = 0; task < n_tasks; ++task) run_trial(task);
  } else {
    std::atomic<std::int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto worker = [&]() {
      for (;;) {
        const std::int64_t task = next.fetch_add(1);
        if (task >= n_tasks) return;
        try {
          run_trial(task);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> ts;
    const int n = static_cast<int>(std::min<std::int64_t>(pool, n_tasks));
    ts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ts.emplace_back(worker);
    for (std::thread& t : ts) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  std::ostringstream tcsv;
  tcsv << "method,noise_level,seed,walltime_s,err_l2";
  for (int i = 0; i < P; ++i) tcsv << ",err_p" << i;
  tcsv << '\n';
  for (const TrialResult& r : rows) {
    tcsv << r.method << ',' << format_double(r.level) << ',' << r.seed << ','
         << format_double(r.walltime_s) << ',' << format_double(r.err_l2);
    for (int i = 0; i < P; ++i) tcsv << ',' << format_double(r.rel_err[i]);
    tcsv << '\n';
  }
  write_text_file(out_dir / (prefix + "_trials.csv"), tcsv.str());

  std::ostringstream scsv;
  scsv << "method,noise_level,trials,geomean_err_l2,mean_walltime_s\n";
  std::cout << "bench[" << problem << "]: " << trials << " trials per level\n";
  for (const std::string& m : methods) {
    for (std::size_t li = 0; li < levels.size(); ++li) {
      std::vector<double> errs;
      double wt = 0.0;
      for (std::int64_t ti = 0; ti < trials; ++ti) {
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
          const TrialResult& r =
              rows[(li * static_cast<std::size_t>(trials) + static_cast<std::size_t>(ti)) *
                       n_methods +
                   mi];
          if (r.method != m) continue;
          errs.push_back(r.err_l2);
          wt += r.walltime_s;
        }
      }
      const double ge = geometric_mean(errs);
      const double mw = wt / static_cast<double>(trials);
      scsv << m << ',' << format_double(levels[li]) << ',' << trials << ','
           << format_double(ge) << ',' << format_double(mw) << '\n';
      std::cout << "  " << m << " @ noise " << fmt(levels[li]) << ": geomean err "
                << fmt(ge) << ", mean walltime " << fmt(mw) << " s\n";
    }
  }
  write_text_file(out_dir / (prefix + "_summary.csv"), scsv.str());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"weak-form model discovery and parameter estimation"};
  app.require_subcommand(1);
  CommonArgs args;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"simulate", "integrate a built-in model and write the dataset"},
      {"noise", "add seeded Gaussian noise to a dataset"},
      {"discover", "sparse weak-form equation discovery"},
      {"estimate", "parameter estimation for a known model structure"},
      {"coarsegrain", "particle simulation, histogram density, discovery, replay"},
      {"bench", "seeded estimator-comparison trials"},
  };
  for (const auto& [name, desc] : subs) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", args.config_path, "JSON config file")->required();
    sub->add_option("--out", args.out_dir, "output directory (default: current)");
    sub->add_option("--seed", args.seed_override, "override the config seed");
    sub->add_option("--threads", args.threads_override,
                    "worker threads (0 = command default)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const fs::path out_dir = ensure_out_dir(args);
    json cfg = load_config_file(args.config_path);
    check_schema_and_command(cfg, command);
    if (args.seed_override >= 0) cfg["seed"] = args.seed_override;

    if (command == "simulate") return cmd_simulate(cfg, args, out_dir);
    if (command == "noise") return cmd_noise(cfg, args, out_dir);
    if (command == "discover") return cmd_discover(cfg, args, out_dir);
    if (command == "estimate") return cmd_estimate(cfg, args, out_dir);
    if (command == "coarsegrain") return cmd_coarsegrain(cfg, args, out_dir);
    if (command == "bench") return cmd_bench(cfg, args, out_dir);
    throw ValueError("unknown command '" + command + "'");
  } catch (const ValueError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace weakform
