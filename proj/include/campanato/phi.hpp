#pragma once

// Weight functions φ : (0,1] → (0,∞), the transform
//     φ*(r) = 1 + ∫_r^1 φ(t)/t dt,
// and grid measurements of the growth conditions used by the multiplier
// theory (doubling, almost monotone, ∫_0^r φ^p ≤ C r φ(r)^p).
//
// All condition constants are sups over a finite grid: lower bounds for the
// analytic constants, labelled "measured over grid" in reports.

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace campanato {

class Phi {
 public:
  enum class Kind { one, psi, power_log, table, quotient };

  /// φ ≡ 1 (BMO when p = 1).
  static Phi one();
  /// ψ(r) = 1 / log(e/r).
  static Phi psi();
  /// r^α (log(e/r))^{-β} (log log(e^e/r))^{-γ}. The inner e^e keeps the
  /// last factor positive at r = 1.
  static Phi power_log(double alpha, double beta = 0.0, double gamma = 0.0);
  static Phi power(double alpha) { return power_log(alpha, 0.0, 0.0); }
  /// Log-log linear interpolation through (r, φ(r)) points; the end segments
  /// are extended as power laws.
  static Phi table(std::vector<std::pair<double, double>> points);
  /// r ↦ base(r) / base*(r).
  static Phi quotient(const Phi& base);

  /// φ(r). Throws std::domain_error for r outside (0,1].
  double operator()(double r) const;

  Kind kind() const;
  std::string describe() const;
  /// The φ inside a quotient; throws std::logic_error for other kinds.
  const Phi& base() const;
  /// True when the log-log factor (with its adjusted inner constant) is used.
  bool uses_loglog_factor() const;

  /// Points of (0,1) where φ is not smooth: the interior table knots, also
  /// through a quotient. Empty for the analytic families.
  std::vector<double> kinks() const;

  /// φ*(r) in closed form when one is known for this kind.
  std::optional<double> star_closed_form(double r) const;
  /// ∫_0^r φ(t)^p t^w dt in closed form when known (+inf when divergent).
  std::optional<double> power_integral_closed_form(double p, double w, double r) const;

 private:
  struct One {};
  struct Psi {};
  struct PowerLog {
    double alpha, beta, gamma;
  };
  struct Table {
    std::vector<double> log_r, log_v;
  };
  struct Quotient {
    std::shared_ptr<const Phi> base;
  };
  using Rep = std::variant<One, Psi, PowerLog, Table, Quotient>;

  explicit Phi(Rep rep) : rep_(std::move(rep)) {}
  double eval_unchecked(double r) const;

  Rep rep_;
};

struct Integral {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  bool divergent = false;
};

/// ∫_r^1 φ(t)/t dt by adaptive Gauss–Kronrod on s = log(1/t), one unit
/// segment at a time.
Integral star_integral_quadrature(const Phi& phi, double r);

/// ∫_0^r g(t) dt via t = r e^{-s}; segments in s are summed until the tail
/// is negligible or a geometric tail can be extrapolated. Flags divergence
/// when segment contributions stop decaying.
Integral integrate_from_zero(const std::function<double(double)>& g, double r);

/// φ*(r): closed form when available, quadrature otherwise; +inf when the
/// quadrature diverges.
double phi_star(const Phi& phi, double r);

/// φ / φ*.
Phi quotient_phi(const Phi& phi);

struct GridConstant {
  double value = 1.0;
  double at_r = 1.0;  // grid point attaining the sup
  bool divergent = false;
  bool converged = true;
};

/// sup over grid pairs with 1/2 ≤ r/s ≤ 2 of max(φ(r)/φ(s), φ(s)/φ(r)).
/// Throws std::invalid_argument for an empty grid.
GridConstant doubling_constant(const Phi& phi, std::span<const double> grid);

/// sup over the grid of (∫_0^r φ(t)^p dt) / (r φ(r)^p).
GridConstant int_condition_constant(const Phi& phi, double p, std::span<const double> grid);

/// sup over the grid of (∫_0^r φ(t) t^{1/p-1} dt) / (φ(r) r^{1/p}).
GridConstant int_condition_power_weight(const Phi& phi, double p, std::span<const double> grid);

/// (sup_{r≤s} φ(r)/φ(s), sup_{r≤s} φ(s)/φ(r)) over grid points.
std::pair<double, double> almost_monotone_constants(const Phi& phi, std::span<const double> grid);

enum class Regime { star_like_phi, star_bounded, neither };

struct RegimeReport {
  Regime regime = Regime::neither;
  std::string label;
  double r_min = 1.0;
  double sup_star_over_phi = 1.0;
  double sup_star = 1.0;
  // Relative increase of φ*/φ and of φ* over the last decade [r_min, 10 r_min].
  double decade_growth_star_over_phi = 0.0;
  double decade_growth_star = 0.0;
  double quotient_at_min = 1.0;  // φ/φ* at r_min
};

/// Relative growth per decade below which a quantity counts as bounded.
inline constexpr double kBoundedDecadeGrowth = 0.05;

RegimeReport classify_regime(const Phi& phi, std::span<const double> grid);
std::string to_string(Regime regime);

struct PhiReport {
  std::string phi;
  std::vector<double> grid;
  GridConstant doubling;
  double almost_increasing = 1.0;
  double almost_decreasing = 1.0;
  std::vector<std::pair<double, GridConstant>> int_condition;  // per p
  std::vector<std::pair<double, GridConstant>> power_weight;   // per p
  RegimeReport regime;
  std::vector<std::string> notes;
};

PhiReport phi_report(const Phi& phi, std::span<const double> ps, std::span<const double> grid);
nlohmann::json to_json(const PhiReport& report);

/// r = 2^{-k} for k = 0..40 plus the half steps 2^{-k-1/2}, ascending.
std::vector<double> default_grid();
/// Geometric grid from r_min up to 1 with the given density, ascending.
std::vector<double> geometric_grid(double r_min, int points_per_decade);

}  // namespace campanato
