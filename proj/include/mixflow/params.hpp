#pragma once

namespace mixflow {

/// Behavioural and economic parameters of the two vehicle classes.
///
/// Money is in dollars, time in minutes, distance in miles. Only the fuel
/// price has an empirical default; everything else is an experiment knob.
struct ClassParams {
  double vot_rv = 1.0;          // $/minute
  double vot_av = 0.5;          // $/minute
  double fuel_price = 5.5;      // $/gallon
  double theta = 0.1;           // logit dispersion, 1/$
  double nesting = 0.5;         // cross-nested logit nesting coefficient, (0, 1]
  double mu_rv = 0.85;          // flow swapping degree, regular vehicles
  double mu_av = 1.0;           // flow swapping degree, autonomous vehicles
  double penetration = 0.5;     // autonomous share of total OD demand
  double av_capacity_ratio = 2.0;  // Q_A = ratio * Q_R when no AV capacity column exists
  double flow_floor = 1e-9;     // veh/h, lower clamp inside ln(f/q)

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;
};

}  // namespace mixflow
