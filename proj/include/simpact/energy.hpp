#pragma once

// Per-impact energy accounting.

#include <vector>

#include "simpact/model.hpp"
#include "simpact/stepper.hpp"

namespace simpact
{

/// Gains above this fraction of the reference energy are hard errors.
inline constexpr double kEnergyGainTolerance = 1e-9;

struct EnergyEntry
{
  double t = 0.0;
  double before = 0.0;         ///< kinetic energy just before the reset
  double after = 0.0;
  double delta = 0.0;          ///< after - before
  double cumulative = 0.0;     ///< sum of deltas so far
  double cumulative_fraction = 0.0; ///< cumulative / initial
  bool gain = false;
};

struct EnergyReport
{
  double initial = 0.0;        ///< total energy of the first sample
  std::vector<EnergyEntry> entries;
  double cumulative = 0.0;
  double cumulative_fraction = 0.0;
  bool gain_detected = false;
  double max_gain_fraction = 0.0;
};

EnergyReport report_energy(const MechModel& model, const Trajectory& trajectory);

}  // namespace simpact
