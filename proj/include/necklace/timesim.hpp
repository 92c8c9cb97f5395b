#pragma once

// Stormer-Verlet integration of u_tt - Delta u + alpha u = +-|u|^{p-1} u on the
// symmetric subspace, with the same spatial operator as the breather solver.

#include <functional>
#include <iosfwd>
#include <vector>

#include "necklace/solver.hpp"

namespace necklace {

struct WaveState {
  NecklaceGrid grid;
  double t = 0.0;
  RealVector u;  // symmetric nodal layout
  RealVector v;  // du/dt
};

/// u(., 0) = sum_j a_j, v(., 0) = 0.
WaveState initial_data(const TimeFourierField& field);
WaveState initial_data(const BreatherState& b);

struct TimesimOptions {
  Dispersion dispersion = Dispersion::exact;
  bool linear = false;  // drop the nonlinearity
};

struct Observation {
  double t = 0.0;
  double energy = 0.0;
  double l2_norm = 0.0;
  double tail_mass = 0.0;   // fraction of the L2 mass in cells |n| > N/2
  double return_gap = 0.0;  // ||u(t) - u_ansatz(t)|| / ||u(0)||
};

struct ReturnReport {
  double dt = 0.0;     // step actually used (period / steps)
  int steps = 0;
  double period = 0.0;
  double return_error = 0.0;      // ||u(T) - u(0)|| / ||u(0)||
  double antiperiod_error = 0.0;  // ||u(T - period/2) + u(0)|| / ||u(0)||
  double energy_drift = 0.0;      // |E(T) - E(0)| / |E(0)|
  double energy_oscillation = 0.0;  // max_t |E(t) - E(0)| / |E(0)|
  double tail_growth = 0.0;       // max_t tail_mass(t) / tail_mass(0)
  double flux_residual = 0.0;     // Kirchhoff residual of the final state
  double initial_flux_residual = 0.0;
};

class WaveIntegrator {
 public:
  WaveIntegrator(const NecklaceGrid& grid, double alpha, double p, Nonlinearity sign, TimesimOptions options = {},
                 SpatialOperatorPtr op = nullptr);
  /// Reuses the operator and parameters of a breather problem.
  explicit WaveIntegrator(const BreatherProblem& problem, bool linear = false);

  const NecklaceGrid& grid() const { return op_->grid(); }
  const SpatialOperatorPtr& spatial_operator() const { return op_; }
  /// Linear stability limit 2 / sqrt(max eigenvalue + alpha).
  double max_stable_dt() const;

  RealVector acceleration(const RealVector& u) const;
  double energy(const WaveState& s) const;
  double l2_norm(const RealVector& u) const;
  double tail_mass(const RealVector& u) const;

  /// One kick-drift-kick step. Throws DomainError when dt exceeds max_stable_dt().
  void step(WaveState& s, double dt) const;
  /// steps of size dt; the observer (if any) sees every state including the first.
  void run(WaveState& s, double dt, int steps, const std::function<void(const WaveState&)>& observer = {}) const;

 private:
  SpatialOperatorPtr op_;
  double alpha_;
  double p_;
  double coupling_;  // +1 focusing, -1 defocusing, 0 linear
};

/// Integrates breather initial data over whole ansatz periods 2 pi / (kappa omega) with a
/// step no larger than dt, rounded so a period holds an even number of steps. The return
/// and antiperiod errors refer to the last period. Zero data is allowed (errors are then
/// absolute).
ReturnReport simulate(const BreatherState& b, double dt, int periods, const WaveIntegrator& integrator,
                      std::vector<Observation>* observations = nullptr);

/// Integrates the breather over one ansatz period 2 pi / (kappa omega) with a step no
/// larger than dt (rounded so the period holds an even number of steps).
ReturnReport return_error(const BreatherState& b, double dt, const WaveIntegrator& integrator,
                          std::vector<Observation>* observations = nullptr);
ReturnReport return_error(const BreatherState& b, double dt);

/// Throws DomainError when waves leaving the core can wrap around or reflect back
/// within run_time (needs N >= run_time / (2 * 2 pi)).
void check_reflection_free(const NecklaceGrid& grid, double run_time);

void write_observables_csv(std::ostream& os, const std::vector<Observation>& obs);

}  // namespace necklace
