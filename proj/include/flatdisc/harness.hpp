#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flatdisc/quad_example.hpp"
#include "flatdisc/rk4.hpp"
#include "flatdisc/scheme.hpp"
#include "flatdisc/systems.hpp"
#include "flatdisc/tracking.hpp"

namespace flatdisc {

// ---------------------------------------------------------------------------
// Configuration and trace rows
// ---------------------------------------------------------------------------

/// Closed-loop simulation settings. Defaults reproduce the demo scenario.
struct SimConfig {
  double h = 0.05;         ///< controller cycle (s)
  double horizon = 10.0;   ///< total simulated time (s)
  Vec initial_state = (Vec(5) << 0.5, 0.2, 0.1, 0.2, 0.0).finished();
  int reset_period_cycles = 20;  ///< overwrite model x from truth every N cycles
  bool reset_full = false;       ///< also overwrite the compensator state y
  int truth_substeps = 100;      ///< RK4 substeps per cycle for the truth plant
  std::uint64_t seed = 0;        ///< recorded for provenance; the loop itself is deterministic
  std::string output_path;       ///< write_trace destination; empty = no file
};

inline void validate(const SimConfig& cfg) {
  if (!(cfg.h > 0.0)) throw std::invalid_argument("SimConfig: h must be positive");
  if (cfg.horizon < 0.0) throw std::invalid_argument("SimConfig: negative horizon");
  if (cfg.reset_period_cycles < 1) {
    throw std::invalid_argument("SimConfig: reset_period_cycles must be >= 1");
  }
  if (cfg.truth_substeps < 1) {
    throw std::invalid_argument("SimConfig: truth_substeps must be >= 1");
  }
  if (cfg.initial_state.size() != 5) {
    throw std::invalid_argument("SimConfig: initial state must be a 5-vector");
  }
}

/// One recorded controller cycle. The x-columns of the CSV trace carry the
/// discrete model state (the controller's view); the truth trajectory enters
/// through rel_err = |x_model - x_truth|_2 / |x_truth|_2 over the 4 plant
/// coordinates.
struct TraceRow {
  double t = 0.0;
  Vec model_state;  ///< xi[k] = (x1..x4, y), the discrete model
  Vec truth_state;  ///< truth plant x(kh) plus truth-side compensator y
  Vec input;        ///< u[k] applied (zero-order hold) over [kh, (k+1)h)
  double z1 = 0.0;
  double z4 = 0.0;
  double z1_star = 0.0;
  double z4_star = 0.0;
  double rel_err = 0.0;
};

namespace detail {

/// Rethrows the current exception with the cycle index prepended, keeping
/// the concrete type (so CLI exit-code mapping still works). Unknown types
/// propagate unchanged.
[[noreturn]] inline void rethrow_with_cycle(int k) {
  const std::string where = "cycle " + std::to_string(k) + ": ";
  try {
    throw;
  } catch (const StepsizeError& e) {
    throw StepsizeError(where + e.what());
  } catch (const SingularityError& e) {
    throw SingularityError(where + e.what());
  } catch (const DomainError& e) {
    throw DomainError(where + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(where + e.what(), e.final_residual());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Truth integration
// ---------------------------------------------------------------------------

/// Advances the truth plant one controller cycle under the held input:
/// classical fourth-order method with fixed substeps (deterministic), guard
/// checked at substep boundaries.
[[nodiscard]] inline Vec truth_step(const ControlSystem& sys, const Vec& x, const Vec& u_held,
                                    double h, int substeps) {
  return rk4_integrate(sys, x, u_held, h, substeps);
}

// ---------------------------------------------------------------------------
// Trace output
// ---------------------------------------------------------------------------

/// Writes rows as CSV with the fixed header
///   t,x1,x2,x3,x4,y,u1,u2,z1,z4,z1_star,z4_star,rel_err
/// and every value printed with 12 significant digits, one row per cycle,
/// newline-terminated — bit-exact for regression comparison.
inline void write_trace(const std::vector<TraceRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: identical bytes on every platform
  if (!out) {
    throw IoError("write_trace: cannot open '" + path + "' for writing");
  }
  out << "t,x1,x2,x3,x4,y,u1,u2,z1,z4,z1_star,z4_star,rel_err\n";
  char buf[32];
  const auto put = [&](double value, char sep) {
    std::snprintf(buf, sizeof buf, "%.12g", value);
    out << buf << sep;
  };
  for (const TraceRow& row : rows) {
    put(row.t, ',');
    for (int i = 0; i < 5; ++i) put(row.model_state(i), ',');
    put(row.input(0), ',');
    put(row.input(1), ',');
    put(row.z1, ',');
    put(row.z4, ',');
    put(row.z1_star, ',');
    put(row.z4_star, ',');
    put(row.rel_err, '\n');
  }
  if (!out) {
    throw IoError("write_trace: failed while writing '" + path + "'");
  }
}

// ---------------------------------------------------------------------------
// Closed loop
// ---------------------------------------------------------------------------

/// Runs the sampled-data loop: per cycle k,
///   1. z[k] = Phi(xi[k]) from the discrete model state,
///   2. v[k] = v*[k] + K (z[k] - z*[k]),
///   3. u[k] = (psi1(x[k], y[k], v[k]), y[k]) held over the cycle,
///   4. record the row (post-reset at reset cycles, so rel_err = 0 there),
///   5. advance the truth plant by truth_step under u[k], the truth-side
///      compensator by the scheme's update applied to the truth state, and
///      the model by scheme.step;
/// every reset_period_cycles the model's plant part is overwritten with the
/// truth plant state (x only, unless reset_full). Returns one row per cycle
/// boundary, ceil(horizon/h) + 1 rows total; horizon 0 gives the single
/// initial row. Writes the trace to cfg.output_path when set.
///
/// Emits a warning (stderr) when the closed-loop spectral radius is >= 1,
/// and still runs — open-loop studies do exactly that on purpose.
[[nodiscard]] inline std::vector<TraceRow> run_closed_loop(const SimConfig& cfg,
                                                           const DiscreteScheme& scheme,
                                                           const TrackingLaw& law,
                                                           const quad::QuadExampleSystem& sys) {
  validate(cfg);
  validate(law);
  if (scheme.state_dim != 5 || scheme.input_dim != 2) {
    throw std::invalid_argument("run_closed_loop: scheme must step the 5-state extension");
  }
  if (std::abs(law.reference.h - cfg.h) > 1e-15) {
    throw std::invalid_argument("run_closed_loop: reference stepsize differs from cfg.h");
  }
  const int cycles = static_cast<int>(std::ceil(cfg.horizon / cfg.h - 1e-9));
  if (law.reference.steps() < cycles) {
    throw std::invalid_argument("run_closed_loop: reference horizon shorter than cfg.horizon");
  }
  {
    const double radius =
        spectral_radius(closed_loop_spectrum(law.lind.a_h, law.lind.b_h, law.gain));
    if (!(radius < 1.0)) {
      std::cerr << "run_closed_loop: warning: closed-loop spectral radius " << radius
                << " >= 1; no asymptotic tracking expected\n";
    }
  }

  std::vector<TraceRow> rows;
  rows.reserve(static_cast<std::size_t>(cycles) + 1);
  Vec model = cfg.initial_state;
  Vec truth = cfg.initial_state;
  for (int k = 0; k <= cycles; ++k) {
    if (k > 0 && k % cfg.reset_period_cycles == 0) {
      model.head(4) = truth.head(4);
      if (cfg.reset_full) {
        model(4) = truth(4);
      }
    }
    Vec z, v, u;
    try {
      z = quad::phi(model);
      v = control_step(law, z, k);
      u = sys.extended.feedback(model.head(4), model.tail(1), v);
    } catch (...) {
      detail::rethrow_with_cycle(k);
    }
    TraceRow row;
    row.t = k * cfg.h;
    row.model_state = model;
    row.truth_state = truth;
    row.input = u;
    row.z1 = z(0);
    row.z4 = z(3);
    row.z1_star = law.reference.samples[static_cast<std::size_t>(k)][0];
    row.z4_star = law.reference.samples[static_cast<std::size_t>(k)][1];
    const double num = (model.head(4) - truth.head(4)).norm();
    row.rel_err = num == 0.0 ? 0.0 : num / truth.head(4).norm();
    rows.push_back(std::move(row));

    if (k < cycles) {
      try {
        const Vec truth_plant =
            truth_step(sys.original, truth.head(4), u, cfg.h, cfg.truth_substeps);
        const double truth_comp = scheme.step(truth, v, cfg.h)(4);
        model = scheme.step(model, v, cfg.h);
        truth.head(4) = truth_plant;
        truth(4) = truth_comp;
      } catch (...) {
        detail::rethrow_with_cycle(k);
      }
    }
  }
  if (!cfg.output_path.empty()) {
    write_trace(rows, cfg.output_path);
  }
  return rows;
}

}  // namespace flatdisc
