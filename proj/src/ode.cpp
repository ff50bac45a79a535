#include "weakform/ode.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "weakform/errors.hpp"

namespace weakform {

void OdeModel::rhs(const std::vector<double>& u, std::vector<double>& dudt) const {
  const int C = dim();
  dudt.assign(static_cast<std::size_t>(C), 0.0);
  std::span<const double> su(u.data(), u.size());
  const std::span<const double> x;  // time-series features never see coordinates
  for (int c = 0; c < C; ++c) {
    const std::vector<int>& sup = structure.supports[static_cast<std::size_t>(c)];
    const int ofs = structure.offset(c);
    double acc = 0.0;
    for (std::size_t i = 0; i < sup.size(); ++i)
      acc += params[ofs + static_cast<int>(i)] *
             structure.library.term(sup[i]).eval(su, x);
    dudt[static_cast<std::size_t>(c)] = acc;
  }
}

Dataset integrate_ode(const OdeModel& model, std::span<const double> u0,
                      const Axis& t_axis, double tol) {
  namespace odeint = boost::numeric::odeint;
  const int C = model.dim();
  if (static_cast<int>(u0.size()) != C)
    throw ValueError("integrate_ode: initial state size does not match the model");
  if (!(tol > 0.0)) throw ValueError("integrate_ode: tolerance must be positive");
  if (t_axis.n < 2) throw ValueError("integrate_ode: need at least two save times");
  if (!(t_axis.hi > t_axis.lo))
    throw ValueError("integrate_ode: time axis must be increasing");
  if (static_cast<int>(model.params.size()) != model.structure.parameter_count())
    throw ValueError("integrate_ode: parameter count does not match the model structure");
  for (double v : u0)
    if (!std::isfinite(v)) throw ValueError("integrate_ode: non-finite initial state");

  using State = std::vector<double>;
  const std::int64_t n = t_axis.n;
  std::vector<double> times(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    times[static_cast<std::size_t>(i)] =
        t_axis.lo + static_cast<double>(i) * t_axis.spacing();

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n * C));
  auto system = [&](const State& u, State& dudt, double) { model.rhs(u, dudt); };
  auto observer = [&](const State& u, double t) {
    for (double v : u) {
      if (!std::isfinite(v))
        throw NumericError("integrate_ode: solution blew up near t = " + std::to_string(t));
      values.push_back(v);
    }
  };

  State state(u0.begin(), u0.end());
  auto stepper = odeint::make_dense_output(tol, tol,
                                           odeint::runge_kutta_dopri5<State>());
  try {
    odeint::integrate_times(stepper, system, state, times.begin(), times.end(),
                            t_axis.spacing() / 16.0, observer);
  } catch (const NumericError&) {
    throw;
  } catch (const std::exception& e) {
    throw NumericError(std::string("integrate_ode: integrator failed: ") + e.what());
  }
  return Dataset(make_grid({t_axis}), C, std::move(values));
}

}  // namespace weakform
