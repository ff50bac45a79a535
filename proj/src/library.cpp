#include "weakform/library.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "weakform/errors.hpp"

namespace weakform {

namespace {

double int_pow(double v, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= v;
  return r;
}

std::vector<int> normalized(std::vector<int> v, int size) {
  v.resize(static_cast<std::size_t>(size), 0);
  return v;
}

}  // namespace

int Term::total_degree() const {
  if (kind != Kind::Monomial) return 1;
  return std::accumulate(powers.begin(), powers.end(), 0);
}

int Term::derivative_order() const {
  return std::accumulate(derivative.begin(), derivative.end(), 0);
}

double Term::eval(std::span<const double> u, std::span<const double> x) const {
  double v = 1.0;
  for (std::size_t a = 0; a < coord_powers.size(); ++a) v *= int_pow(x[a], coord_powers[a]);
  if (kind == Kind::Monomial) {
    for (std::size_t c = 0; c < powers.size(); ++c) v *= int_pow(u[c], powers[c]);
    return v;
  }
  double arg = static_cast<double>(frequency) * u[static_cast<std::size_t>(component)];
  return v * (kind == Kind::Sin ? std::sin(arg) : std::cos(arg));
}

double Term::deriv_state(std::span<const double> u, std::span<const double> x, int comp) const {
  double v = 1.0;
  for (std::size_t a = 0; a < coord_powers.size(); ++a) v *= int_pow(x[a], coord_powers[a]);
  if (kind == Kind::Monomial) {
    std::size_t cc = static_cast<std::size_t>(comp);
    if (cc >= powers.size() || powers[cc] == 0) return 0.0;
    for (std::size_t c = 0; c < powers.size(); ++c) {
      int p = powers[c];
      if (c == cc)
        v *= static_cast<double>(p) * int_pow(u[c], p - 1);
      else
        v *= int_pow(u[c], p);
    }
    return v;
  }
  if (comp != component) return 0.0;
  double w = static_cast<double>(frequency);
  double arg = w * u[static_cast<std::size_t>(component)];
  return v * w * (kind == Kind::Sin ? std::cos(arg) : -std::sin(arg));
}

std::string Term::name(int components, int spatial_dims) const {
  static const char* axis_names[] = {"x", "y", "z"};
  std::string inner;
  for (int a = 0; a < static_cast<int>(coord_powers.size()); ++a) {
    if (coord_powers[a] == 0) continue;
    if (!inner.empty()) inner += "*";
    inner += std::string(a < 3 ? axis_names[a] : "x" + std::to_string(a)) + "^" +
             std::to_string(coord_powers[a]);
  }
  if (kind == Kind::Monomial) {
    std::string mono;
    for (int c = 0; c < static_cast<int>(powers.size()); ++c) {
      if (powers[c] == 0) continue;
      if (!mono.empty()) mono += "*";
      std::string var = components == 1 ? "u" : "u" + std::to_string(c + 1);
      mono += var + "^" + std::to_string(powers[c]);
    }
    if (mono.empty() && inner.empty())
      inner = "1";
    else if (!mono.empty())
      inner = inner.empty() ? mono : inner + "*" + mono;
  } else {
    std::string var = components == 1 ? "u" : "u" + std::to_string(component + 1);
    std::string fn = kind == Kind::Sin ? "sin" : "cos";
    std::string trig = fn + "(" + (frequency == 1 ? "" : std::to_string(frequency) + "*") + var + ")";
    inner = inner.empty() ? trig : inner + "*" + trig;
  }
  std::string out = inner;
  for (int a = spatial_dims - 1; a >= 0; --a) {
    int k = a < static_cast<int>(derivative.size()) ? derivative[a] : 0;
    if (k == 0) continue;
    std::string ax = a < 3 ? axis_names[a] : "x" + std::to_string(a);
    std::string op = k == 1 ? "d/d" + ax : "d^" + std::to_string(k) + "/d" + ax + "^" + std::to_string(k);
    out = op + "(" + out + ")";
  }
  return out;
}

FeatureLibrary::FeatureLibrary(int components, int spatial_dims, std::vector<Term> terms)
    : components_(components), spatial_dims_(spatial_dims), terms_(std::move(terms)) {
  if (components_ < 1) throw ValueError("library needs components >= 1");
  if (spatial_dims_ < 0) throw ValueError("library: negative spatial dims");
  for (Term& t : terms_) {
    t.coord_powers = normalized(std::move(t.coord_powers), spatial_dims_);
    t.derivative = normalized(std::move(t.derivative), spatial_dims_);
    if (t.kind == Term::Kind::Monomial) {
      t.powers = normalized(std::move(t.powers), components_);
      for (int p : t.powers)
        if (p < 0) throw ValueError("library: negative monomial power");
      bool zero_state = t.total_degree() == 0;
      bool zero_coord = std::all_of(t.coord_powers.begin(), t.coord_powers.end(),
                                    [](int p) { return p == 0; });
      if (zero_state && zero_coord && t.derivative_order() > 0)
        throw ValueError("library: derivative of the constant term is identically zero");
    } else {
      if (t.frequency < 1) throw ValueError("library: trig frequency must be >= 1");
      if (t.component < 0 || t.component >= components_)
        throw ValueError("library: trig component out of range");
    }
    for (int k : t.derivative)
      if (k < 0) throw ValueError("library: negative derivative order");
    for (int p : t.coord_powers)
      if (p < 0) throw ValueError("library: negative coordinate power");
  }
  for (std::size_t i = 0; i < terms_.size(); ++i)
    for (std::size_t j = i + 1; j < terms_.size(); ++j)
      if (terms_[i] == terms_[j])
        throw ValueError("library: duplicate term '" +
                         terms_[i].name(components_, spatial_dims_) + "'");
}

std::vector<int> FeatureLibrary::max_derivative_per_axis() const {
  std::vector<int> m(static_cast<std::size_t>(spatial_dims_), 0);
  for (const Term& t : terms_)
    for (int a = 0; a < spatial_dims_; ++a) m[a] = std::max(m[a], t.derivative[a]);
  return m;
}

bool FeatureLibrary::uses_coordinates() const {
  for (const Term& t : terms_)
    for (int p : t.coord_powers)
      if (p != 0) return true;
  return false;
}

FeatureLibrary FeatureLibrary::restricted(std::span<const int> keep) const {
  std::vector<Term> sub;
  for (int j : keep) {
    if (j < 0 || j >= static_cast<int>(terms_.size()))
      throw ValueError("library restriction index " + std::to_string(j) +
                       " out of range [0," + std::to_string(terms_.size()) + ")");
    sub.push_back(terms_[static_cast<std::size_t>(j)]);
  }
  return FeatureLibrary(components_, spatial_dims_, std::move(sub));
}

nlohmann::json FeatureLibrary::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const Term& t : terms_) {
    nlohmann::json jt;
    if (t.kind == Term::Kind::Monomial) {
      jt["kind"] = "monomial";
      jt["powers"] = t.powers;
    } else {
      jt["kind"] = t.kind == Term::Kind::Sin ? "sin" : "cos";
      jt["frequency"] = t.frequency;
      jt["component"] = t.component;
    }
    jt["coord_powers"] = t.coord_powers;
    jt["derivative"] = t.derivative;
    terms.push_back(jt);
  }
  return {{"components", components_}, {"spatial_dims", spatial_dims_}, {"terms", terms}};
}

FeatureLibrary FeatureLibrary::from_json(const nlohmann::json& j) {
  std::vector<Term> terms;
  for (const nlohmann::json& jt : j.at("terms")) {
    Term t;
    std::string kind = jt.at("kind").get<std::string>();
    if (kind == "monomial") {
      t.kind = Term::Kind::Monomial;
      t.powers = jt.at("powers").get<std::vector<int>>();
    } else if (kind == "sin" || kind == "cos") {
      t.kind = kind == "sin" ? Term::Kind::Sin : Term::Kind::Cos;
      t.frequency = jt.at("frequency").get<int>();
      t.component = jt.at("component").get<int>();
    } else {
      throw ValueError("library json: unknown term kind '" + kind + "'");
    }
    if (jt.contains("coord_powers")) t.coord_powers = jt.at("coord_powers").get<std::vector<int>>();
    if (jt.contains("derivative")) t.derivative = jt.at("derivative").get<std::vector<int>>();
    terms.push_back(std::move(t));
  }
  return FeatureLibrary(j.at("components").get<int>(), j.at("spatial_dims").get<int>(),
                        std::move(terms));
}

FeatureLibrary pde_poly_library(int max_derivative, int max_power) {
  if (max_derivative < 0 || max_power < 0)
    throw ValueError("pde_poly_library: negative bounds");
  std::vector<Term> terms;
  for (int k = 0; k <= max_derivative; ++k) {
    for (int p = 0; p <= max_power; ++p) {
      if (p == 0 && k > 0) continue;  // derivative of a constant
      Term t;
      t.powers = {p};
      t.derivative = {k};
      terms.push_back(std::move(t));
    }
  }
  return FeatureLibrary(1, 1, std::move(terms));
}

namespace {

void enumerate_monomials(int components, int degree, int from, std::vector<int>& cur,
                         std::vector<std::vector<int>>& out) {
  if (degree == 0) {
    out.push_back(cur);
    return;
  }
  if (from == components) return;
  // Descending lexicographic order: put as much degree on the earliest
  // component first.
  for (int p = degree; p >= 0; --p) {
    cur[static_cast<std::size_t>(from)] = p;
    if (from == components - 1) {
      if (p == degree) out.push_back(cur);
    } else {
      enumerate_monomials(components, degree - p, from + 1, cur, out);
    }
    cur[static_cast<std::size_t>(from)] = 0;
  }
}

}  // namespace

FeatureLibrary ode_poly_trig_library(int components, int max_degree,
                                     std::span<const int> trig_frequencies) {
  if (components < 1) throw ValueError("ode_poly_trig_library: components >= 1");
  if (max_degree < 0) throw ValueError("ode_poly_trig_library: max_degree >= 0");
  std::vector<Term> terms;
  for (int d = 0; d <= max_degree; ++d) {
    std::vector<std::vector<int>> monos;
    std::vector<int> cur(static_cast<std::size_t>(components), 0);
    enumerate_monomials(components, d, 0, cur, monos);
    for (std::vector<int>& m : monos) {
      Term t;
      t.powers = std::move(m);
      terms.push_back(std::move(t));
    }
  }
  for (int f : trig_frequencies) {
    if (f < 1) throw ValueError("ode_poly_trig_library: trig frequency must be >= 1");
    for (int c = 0; c < components; ++c) {
      Term s;
      s.kind = Term::Kind::Sin;
      s.frequency = f;
      s.component = c;
      terms.push_back(std::move(s));
      Term co;
      co.kind = Term::Kind::Cos;
      co.frequency = f;
      co.component = c;
      terms.push_back(std::move(co));
    }
  }
  return FeatureLibrary(components, 0, std::move(terms));
}

FeatureLibrary density_poly_library(int max_derivative, int max_power, int max_coord_power) {
  if (max_derivative < 0 || max_power < 1 || max_coord_power < 0)
    throw ValueError("density_poly_library: bad bounds");
  std::vector<Term> terms;
  Term constant;
  constant.powers = {0};
  terms.push_back(std::move(constant));
  for (int k = 0; k <= max_derivative; ++k)
    for (int a = 0; a <= max_coord_power; ++a)
      for (int p = 1; p <= max_power; ++p) {
        Term t;
        t.powers = {p};
        t.coord_powers = {a};
        t.derivative = {k};
        terms.push_back(std::move(t));
      }
  return FeatureLibrary(1, 1, std::move(terms));
}

namespace {

// Walks the grid in row-major order and fills field[i] = fn(u_i, x_i).
template <class Fn>
std::vector<double> pointwise_field(const Term& term, const Dataset& d, Fn&& fn) {
  const Grid& g = d.grid();
  int dim = g.ndim();
  int comps = d.components();
  std::int64_t npts = g.num_points();
  std::vector<double> field(static_cast<std::size_t>(npts));

  bool needs_x = std::any_of(term.coord_powers.begin(), term.coord_powers.end(),
                             [](int p) { return p != 0; });
  const double* v = d.values().data();
  std::vector<std::int64_t> idx(static_cast<std::size_t>(dim), 0);
  std::vector<double> xs(static_cast<std::size_t>(dim), 0.0);
  if (needs_x)
    for (int a = 0; a < dim; ++a) xs[static_cast<std::size_t>(a)] = g.coord(a, 0);
  for (std::int64_t i = 0; i < npts; ++i) {
    std::span<const double> u(v + i * comps, static_cast<std::size_t>(comps));
    field[static_cast<std::size_t>(i)] = fn(u, std::span<const double>(xs));
    if (i + 1 < npts) {
      for (int a = dim - 1; a >= 0; --a) {
        if (++idx[a] < g.axis_size(a)) {
          if (needs_x) xs[a] = g.coord(a, idx[a]);
          break;
        }
        idx[a] = 0;
        if (needs_x) xs[a] = g.coord(a, 0);
      }
    }
  }
  for (double f : field)
    if (!std::isfinite(f))
      throw NumericError("pointwise feature overflow in term '" +
                         term.name(comps, dim - 1) + "'");
  return field;
}

}  // namespace

std::vector<double> evaluate_pointwise(const Term& term, const Dataset& d) {
  return pointwise_field(term, d,
                         [&](std::span<const double> u, std::span<const double> x) {
                           return term.eval(u, x);
                         });
}

std::vector<double> evaluate_pointwise_deriv(const Term& term, const Dataset& d, int comp) {
  if (comp < 0 || comp >= d.components())
    throw ValueError("evaluate_pointwise_deriv: component out of range");
  return pointwise_field(term, d,
                         [&](std::span<const double> u, std::span<const double> x) {
                           return term.deriv_state(u, x, comp);
                         });
}

}  // namespace weakform
