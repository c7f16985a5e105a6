#include "campanato/phi.hpp"

#include "campanato/report.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace campanato {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadratureTolerance = 1e-9;
constexpr double kSegmentTolerance = 1e-12;
constexpr unsigned kMaxBisections = 15;

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_unit_interval(double r) {
  if (!(r > 0.0 && r <= 1.0)) {
    std::ostringstream msg;
    msg << "phi is defined on (0,1], got r = " << r;
    throw std::domain_error(msg.str());
  }
}

std::string format_number(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

// log(e/r) and log log(e^e/r).
double log_factor(double r) { return 1.0 - std::log(r); }
double loglog_factor(double r) { return std::log(std::exp(1.0) - std::log(r)); }

std::vector<double> sorted_grid(std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("grid must not be empty");
  std::vector<double> g(grid.begin(), grid.end());
  for (double r : g) require_unit_interval(r);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

}  // namespace

Phi Phi::one() { return Phi(One{}); }
Phi Phi::psi() { return Phi(Psi{}); }

Phi Phi::power_log(double alpha, double beta, double gamma) {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma)) {
    throw std::invalid_argument("power-log parameters must be finite");
  }
  return Phi(PowerLog{alpha, beta, gamma});
}

Phi Phi::table(std::vector<std::pair<double, double>> points) {
  if (points.empty()) throw std::invalid_argument("phi table needs at least one point");
  std::sort(points.begin(), points.end());
  Table t;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [r, v] = points[i];
    require_unit_interval(r);
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("phi table values must be positive and finite");
    if (i > 0 && r == points[i - 1].first) throw std::invalid_argument("phi table has a repeated r");
    t.log_r.push_back(std::log(r));
    t.log_v.push_back(std::log(v));
  }
  return Phi(std::move(t));
}

Phi Phi::quotient(const Phi& base) { return Phi(Quotient{std::make_shared<const Phi>(base)}); }

Phi::Kind Phi::kind() const {
  return std::visit(Overloaded{[](const One&) { return Kind::one; }, [](const Psi&) { return Kind::psi; },
                               [](const PowerLog&) { return Kind::power_log; },
                               [](const Table&) { return Kind::table; },
                               [](const Quotient&) { return Kind::quotient; }},
                    rep_);
}

std::string Phi::describe() const {
  return std::visit(
      Overloaded{[](const One&) { return std::string("one"); }, [](const Psi&) { return std::string("psi"); },
                 [](const PowerLog& p) {
                   return "powerlog(" + format_number(p.alpha) + "," + format_number(p.beta) + "," +
                          format_number(p.gamma) + ")";
                 },
                 [](const Table& t) { return "table(" + std::to_string(t.log_r.size()) + " points)"; },
                 [](const Quotient& q) { return "quotient(" + q.base->describe() + ")"; }},
      rep_);
}

const Phi& Phi::base() const {
  if (const auto* q = std::get_if<Quotient>(&rep_)) return *q->base;
  throw std::logic_error("phi " + describe() + " is not a quotient");
}

bool Phi::uses_loglog_factor() const {
  if (const auto* p = std::get_if<PowerLog>(&rep_)) return p->gamma != 0.0;
  if (const auto* q = std::get_if<Quotient>(&rep_)) return q->base->uses_loglog_factor();
  return false;
}

double Phi::operator()(double r) const {
  require_unit_interval(r);
  return eval_unchecked(r);
}

double Phi::eval_unchecked(double r) const {
  return std::visit(Overloaded{[](const One&) { return 1.0; }, [r](const Psi&) { return 1.0 / log_factor(r); },
                               [r](const PowerLog& p) {
                                 double v = p.alpha == 0.0 ? 1.0 : std::pow(r, p.alpha);
                                 if (p.beta != 0.0) v *= std::pow(log_factor(r), -p.beta);
                                 if (p.gamma != 0.0) v *= std::pow(loglog_factor(r), -p.gamma);
                                 return v;
                               },
                               [r](const Table& t) {
                                 const std::size_t n = t.log_r.size();
                                 if (n == 1) return std::exp(t.log_v.front());
                                 const double x = std::log(r);
                                 std::size_t hi =
                                     static_cast<std::size_t>(std::upper_bound(t.log_r.begin(), t.log_r.end(), x) -
                                                              t.log_r.begin());
                                 hi = std::clamp<std::size_t>(hi, 1, n - 1);
                                 const std::size_t lo = hi - 1;
                                 const double w = (x - t.log_r[lo]) / (t.log_r[hi] - t.log_r[lo]);
                                 return std::exp(t.log_v[lo] + w * (t.log_v[hi] - t.log_v[lo]));
                               },
                               [r](const Quotient& q) {
                                 const double star = phi_star(*q.base, r);
                                 if (!std::isfinite(star)) {
                                   throw std::domain_error("phi* of " + q.base->describe() + " diverges");
                                 }
                                 return (*q.base)(r) / star;
                               }},
                    rep_);
}

std::optional<double> Phi::star_closed_form(double r) const {
  require_unit_interval(r);
  const double L = log_factor(r);
  if (std::holds_alternative<One>(rep_)) return L;
  if (std::holds_alternative<Psi>(rep_)) return 1.0 + std::log(L);
  if (const auto* p = std::get_if<PowerLog>(&rep_)) {
    if (p->gamma != 0.0) return std::nullopt;
    if (p->beta == 0.0) {
      if (p->alpha == 0.0) return L;
      return 1.0 + (1.0 - std::pow(r, p->alpha)) / p->alpha;
    }
    if (p->alpha == 0.0) {
      if (p->beta == 1.0) return 1.0 + std::log(L);
      return 1.0 + (std::pow(L, 1.0 - p->beta) - 1.0) / (1.0 - p->beta);
    }
  }
  return std::nullopt;
}

std::optional<double> Phi::power_integral_closed_form(double p, double w, double r) const {
  require_unit_interval(r);
  double alpha = 0.0;
  if (const auto* pl = std::get_if<PowerLog>(&rep_)) {
    if (pl->beta != 0.0 || pl->gamma != 0.0) return std::nullopt;
    alpha = pl->alpha;
  } else if (!std::holds_alternative<One>(rep_)) {
    return std::nullopt;
  }
  const double e = alpha * p + w;
  if (e <= -1.0) return kInf;
  return std::pow(r, e + 1.0) / (e + 1.0);
}

std::vector<double> Phi::kinks() const {
  if (const auto* t = std::get_if<Table>(&rep_)) {
    std::vector<double> out;
    for (double lr : t->log_r) {
      if (lr < 0.0) out.push_back(std::exp(lr));
    }
    return out;
  }
  if (const auto* q = std::get_if<Quotient>(&rep_)) return q->base->kinks();
  return {};
}

Integral star_integral_quadrature(const Phi& phi, double r) {
  require_unit_interval(r);
  const double span = -std::log(r);
  std::vector<double> cuts;
  for (double a = 1.0; a < span; a += 1.0) cuts.push_back(a);
  for (double k : phi.kinks()) {
    const double s = -std::log(k);
    if (s > 0.0 && s < span) cuts.push_back(s);
  }
  cuts.push_back(span);
  std::sort(cuts.begin(), cuts.end());
  Integral out;
  double a = 0.0;
  for (double b : cuts) {
    if (b <= a) continue;
    double err = 0.0;
    out.value += Kronrod::integrate([&](double s) { return phi(std::min(1.0, std::exp(-s))); }, a, b,
                                    kMaxBisections, kSegmentTolerance, &err);
    out.error += err;
    a = b;
  }
  if (!std::isfinite(out.value)) {
    out.divergent = true;
    out.converged = false;
    out.value = kInf;
  } else {
    out.converged = out.error <= kQuadratureTolerance * std::max(1.0, std::abs(out.value));
  }
  return out;
}

Integral integrate_from_zero(const std::function<double(double)>& g, double r) {
  require_unit_interval(r);
  Integral out;
  double previous = 0.0;
  double previous_ratio = std::numeric_limits<double>::quiet_NaN();
  int non_decaying = 0;

  auto finish_divergent = [&out] {
    out.value = kInf;
    out.divergent = true;
    out.converged = false;
  };

  for (int k = 0;; ++k) {
    double err = 0.0;
    const double c = Kronrod::integrate(
        [&](double s) {
          const double t = r * std::exp(-s);
          return t > 0.0 ? g(t) * t : 0.0;
        },
        static_cast<double>(k), static_cast<double>(k + 1), kMaxBisections, kSegmentTolerance, &err);
    if (!std::isfinite(c)) {
      finish_divergent();
      return out;
    }
    out.value += c;
    out.error += err;

    if (k >= 2 && c <= 1e-16 * out.value) break;

    if (previous > 0.0) {
      const double q = c / previous;
      non_decaying = q >= 1.0 - 1e-9 ? non_decaying + 1 : 0;
      if (k >= 20 && non_decaying >= 8) {
        finish_divergent();
        return out;
      }
      if (q < 1.0 && std::isfinite(previous_ratio) && std::abs(q - previous_ratio) <= 1e-7 * q) {
        // Contributions decay geometrically: add the remaining tail in closed form.
        const double tail = c * q / (1.0 - q);
        out.value += tail;
        out.error += tail * std::abs(q - previous_ratio) / (1.0 - q);
        break;
      }
      previous_ratio = q;
    }
    previous = c;

    if (r * std::exp(-static_cast<double>(k + 1)) < 1e-290) {
      if (std::isfinite(previous_ratio) && previous_ratio < 1.0) {
        const double tail = c * previous_ratio / (1.0 - previous_ratio);
        out.value += tail;
        out.error += tail;
      } else {
        finish_divergent();
        return out;
      }
      break;
    }
  }
  out.converged = out.error <= kQuadratureTolerance * std::max(1e-300, std::abs(out.value));
  return out;
}

double phi_star(const Phi& phi, double r) {
  if (auto closed = phi.star_closed_form(r)) return *closed;
  const Integral i = star_integral_quadrature(phi, r);
  return i.divergent ? kInf : 1.0 + i.value;
}

Phi quotient_phi(const Phi& phi) {
  // φ* is finite on (0,1] for any positive continuous φ; probe the far end of
  // the default grid so a failing quadrature surfaces here rather than later.
  if (!std::isfinite(phi_star(phi, std::ldexp(1.0, -40)))) {
    throw std::domain_error("phi* of " + phi.describe() + " diverges");
  }
  return Phi::quotient(phi);
}

GridConstant doubling_constant(const Phi& phi, std::span<const double> grid) {
  const auto g = sorted_grid(grid);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = phi(g[i]);
  GridConstant out;
  out.at_r = g.front();
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = i + 1; j < g.size() && g[j] <= 2.0 * g[i] * (1.0 + 1e-12); ++j) {
      const double ratio = std::max(v[i] / v[j], v[j] / v[i]);
      if (ratio > out.value) {
        out.value = ratio;
        out.at_r = g[i];
      }
    }
  }
  return out;
}

namespace {

GridConstant integral_condition(std::span<const double> grid, const std::function<std::optional<double>(double)>& closed,
                                const std::function<double(double)>& integrand,
                                const std::function<double(double)>& scale) {
  const auto g = sorted_grid(grid);
  GridConstant out;
  out.value = 0.0;
  out.at_r = g.front();
  for (double r : g) {
    double numerator = 0.0;
    if (auto c = closed(r)) {
      numerator = *c;
    } else {
      const Integral i = integrate_from_zero(integrand, r);
      numerator = i.value;
      out.converged = out.converged && i.converged;
    }
    if (!std::isfinite(numerator)) {
      out.value = kInf;
      out.at_r = r;
      out.divergent = true;
      return out;
    }
    const double ratio = numerator / scale(r);
    if (ratio > out.value) {
      out.value = ratio;
      out.at_r = r;
    }
  }
  return out;
}

}  // namespace

GridConstant int_condition_constant(const Phi& phi, double p, std::span<const double> grid) {
  if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
  return integral_condition(
      grid, [&](double r) { return phi.power_integral_closed_form(p, 0.0, r); },
      [&](double t) { return std::pow(phi(t), p); }, [&](double r) { return r * std::pow(phi(r), p); });
}

GridConstant int_condition_power_weight(const Phi& phi, double p, std::span<const double> grid) {
  if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
  const double w = 1.0 / p - 1.0;
  auto closed = [&](double r) -> std::optional<double> {
    // φ(t) t^w = (φ(t)^p)^{1/p} t^w; only pure powers have a closed form.
    if (phi.kind() == Phi::Kind::one) return phi.power_integral_closed_form(1.0, w, r);
    if (phi.kind() == Phi::Kind::power_log) return phi.power_integral_closed_form(1.0, w, r);
    return std::nullopt;
  };
  return integral_condition(
      grid, closed, [&](double t) { return phi(t) * std::pow(t, w); },
      [&](double r) { return phi(r) * std::pow(r, 1.0 / p); });
}

std::pair<double, double> almost_monotone_constants(const Phi& phi, std::span<const double> grid) {
  const auto g = sorted_grid(grid);
  double increasing = 1.0;
  double decreasing = 1.0;
  double max_below = 0.0;
  double min_below = kInf;
  for (double s : g) {
    const double v = phi(s);
    max_below = std::max(max_below, v);
    min_below = std::min(min_below, v);
    increasing = std::max(increasing, max_below / v);
    decreasing = std::max(decreasing, v / min_below);
  }
  return {increasing, decreasing};
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::star_like_phi:
      return "phi* ~ phi";
    case Regime::star_bounded:
      return "phi* ~ 1";
    case Regime::neither:
      return "neither";
  }
  return "neither";
}

RegimeReport classify_regime(const Phi& phi, std::span<const double> grid) {
  const auto g = sorted_grid(grid);
  RegimeReport out;
  out.r_min = g.front();
  out.sup_star_over_phi = 0.0;
  out.sup_star = 0.0;
  for (double r : g) {
    const double star = phi_star(phi, r);
    out.sup_star = std::max(out.sup_star, star);
    out.sup_star_over_phi = std::max(out.sup_star_over_phi, star / phi(r));
  }
  const double r0 = out.r_min;
  const double r1 = std::min(1.0, 10.0 * r0);
  const double star0 = phi_star(phi, r0);
  const double star1 = phi_star(phi, r1);
  out.decade_growth_star_over_phi = (star0 / phi(r0)) / (star1 / phi(r1)) - 1.0;
  out.decade_growth_star = star0 / star1 - 1.0;
  out.quotient_at_min = phi(r0) / star0;

  if (out.decade_growth_star_over_phi <= kBoundedDecadeGrowth) {
    out.regime = Regime::star_like_phi;
  } else if (out.decade_growth_star <= kBoundedDecadeGrowth) {
    out.regime = Regime::star_bounded;
  } else {
    out.regime = Regime::neither;
  }
  out.label = to_string(out.regime);
  if (out.regime == Regime::neither && out.quotient_at_min < phi(r1) / star1) out.label += "; phi/phi* -> 0";
  return out;
}

PhiReport phi_report(const Phi& phi, std::span<const double> ps, std::span<const double> grid) {
  PhiReport out;
  out.phi = phi.describe();
  out.grid = sorted_grid(grid);
  out.doubling = doubling_constant(phi, out.grid);
  std::tie(out.almost_increasing, out.almost_decreasing) = almost_monotone_constants(phi, out.grid);
  for (double p : ps) {
    out.int_condition.emplace_back(p, int_condition_constant(phi, p, out.grid));
    out.power_weight.emplace_back(p, int_condition_power_weight(phi, p, out.grid));
  }
  out.regime = classify_regime(phi, out.grid);
  out.notes.push_back("condition constants are sups measured over grid (lower bounds for the analytic constants)");
  if (phi.uses_loglog_factor()) {
    out.notes.push_back("log-log factor evaluated as log log(e^e/r) so that it stays positive at r = 1");
  }
  return out;
}

nlohmann::json to_json(const PhiReport& report) {
  auto constant = [](const GridConstant& c) {
    return nlohmann::json{{"value", number_to_json(c.value)},
                          {"at_r", number_to_json(c.at_r)},
                          {"divergent", c.divergent},
                          {"converged", c.converged}};
  };
  nlohmann::json j;
  j["phi"] = report.phi;
  j["grid_points"] = report.grid.size();
  j["r_min"] = number_to_json(report.grid.front());
  j["doubling_constant"] = constant(report.doubling);
  j["almost_increasing_constant"] = number_to_json(report.almost_increasing);
  j["almost_decreasing_constant"] = number_to_json(report.almost_decreasing);
  nlohmann::json ic = nlohmann::json::array();
  for (const auto& [p, c] : report.int_condition) {
    auto e = constant(c);
    e["p"] = p;
    ic.push_back(e);
  }
  j["int_condition"] = ic;
  nlohmann::json pw = nlohmann::json::array();
  for (const auto& [p, c] : report.power_weight) {
    auto e = constant(c);
    e["p"] = p;
    pw.push_back(e);
  }
  j["power_weight_condition"] = pw;
  j["regime"] = {{"label", report.regime.label},
                 {"sup_star_over_phi", number_to_json(report.regime.sup_star_over_phi)},
                 {"sup_star", number_to_json(report.regime.sup_star)},
                 {"decade_growth_star_over_phi", number_to_json(report.regime.decade_growth_star_over_phi)},
                 {"decade_growth_star", number_to_json(report.regime.decade_growth_star)},
                 {"quotient_at_r_min", number_to_json(report.regime.quotient_at_min)}};
  j["notes"] = report.notes;
  return j;
}

std::vector<double> default_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 40; ++k) g.push_back(std::ldexp(1.0, -k));
  for (int k = 0; k < 40; ++k) g.push_back(std::ldexp(std::sqrt(0.5), -k));
  std::sort(g.begin(), g.end());
  return g;
}

std::vector<double> geometric_grid(double r_min, int points_per_decade) {
  require_unit_interval(r_min);
  if (points_per_decade < 1) throw std::invalid_argument("points_per_decade must be positive");
  const double decades = -std::log10(r_min);
  const int steps = static_cast<int>(std::ceil(decades * points_per_decade - 1e-9));
  std::vector<double> g;
  for (int i = 0; i <= steps; ++i) {
    g.push_back(i == steps ? r_min : std::pow(10.0, -static_cast<double>(i) / points_per_decade));
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

}  // namespace campanato
