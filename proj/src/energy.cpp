#include "simpact/energy.hpp"

#include <algorithm>
#include <cmath>

namespace simpact
{

EnergyReport report_energy(const MechModel& model, const Trajectory& trajectory)
{
  EnergyReport rep;
  if (!trajectory.samples.empty())
  {
    const Sample& s = trajectory.samples.front();
    rep.initial = model.total_energy(s.q, s.p);
  }
  for (const ImpactEvent& ev : trajectory.events)
  {
    EnergyEntry e;
    e.t = ev.t;
    e.before = ev.kinetic_before;
    e.after = ev.kinetic_after;
    e.delta = ev.kinetic_after - ev.kinetic_before;
    rep.cumulative += e.delta;
    e.cumulative = rep.cumulative;
    e.cumulative_fraction = rep.initial != 0.0 ? rep.cumulative / rep.initial : 0.0;

    const double reference = std::max(std::abs(rep.initial), ev.kinetic_before);
    const double gain = reference > 0.0 ? e.delta / reference : 0.0;
    e.gain = gain > kEnergyGainTolerance;
    rep.gain_detected = rep.gain_detected || e.gain;
    rep.max_gain_fraction = std::max(rep.max_gain_fraction, gain);
    rep.entries.push_back(e);
  }
  rep.cumulative_fraction = rep.initial != 0.0 ? rep.cumulative / rep.initial : 0.0;
  return rep;
}

}  // namespace simpact
