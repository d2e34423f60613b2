#pragma once

#include <charconv>
#include <ostream>
#include <string>

#include "netcontest/builder.hpp"
#include "netcontest/coalition.hpp"
#include "netcontest/equilibrium.hpp"
#include "netcontest/instance_io.hpp"
#include "netcontest/three_node.hpp"
#include "netcontest/transfer.hpp"

namespace netcontest {

/// Shortest round-trip decimal form.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline void write_sweep_csv(std::ostream& out, const TransferCurve& curve) {
  out << "tau,U_a,U_b,beneficial\n";
  for (std::size_t k = 0; k < curve.grid.size(); ++k)
    out << format_double(curve.grid[k]) << ',' << format_double(curve.U_a[k]) << ','
        << format_double(curve.U_b[k]) << ',' << (curve.beneficial[k] ? 1 : 0) << '\n';
  if (!out) throw IOError("failed to write sweep CSV");
}

/// Long format: one row per (iteration, donor, option).
inline void write_trace_csv(std::ostream& out, const OptimizerTrace& trace) {
  out << "iter,i,j,b_ij,f_ij,U_i\n";
  for (const OptimizerRecord& rec : trace.records) {
    for (Player i : trace.donors) {
      const auto& support = rec.profile.support[i];
      for (std::size_t k = 0; k < support.size(); ++k)
        out << rec.iter << ',' << i << ',' << support[k] << ','
            << format_double(rec.profile.rows[i][k]) << ',' << format_double(rec.gradients[i][k])
            << ',' << format_double(rec.payoffs[i]) << '\n';
    }
  }
  if (!out) throw IOError("failed to write trace CSV");
}

inline Json solution_to_json(const ContestInstance& inst, const EquilibriumSolution& sol) {
  Json allocations = Json::array();
  for (Player i = 0; i < inst.size(); ++i)
    for (const auto& [j, x] : sol.allocations[i]) allocations.push_back({{"i", i}, {"j", j}, {"x", x}});
  return {{"budgets", std::vector<double>(inst.budgets().begin(), inst.budgets().end())},
          {"costs", std::vector<double>(sol.costs.values().begin(), sol.costs.values().end())},
          {"allocations", std::move(allocations)},
          {"payoffs", sol.payoffs},
          {"residual", sol.residual}};
}

inline Json sensitivity_to_json(const TransferSensitivity& s) {
  return {{"donor", s.donor},
          {"recipient", s.recipient},
          {"dU_donor", s.dU_a},
          {"dU_recipient", s.dU_b},
          {"mutually_beneficial", s.mutually_beneficial()}};
}

inline Json curve_to_json(const TransferCurve& curve) {
  Json intervals = Json::array();
  for (const auto& iv : curve.intervals) intervals.push_back({{"lo", iv.lo}, {"hi", iv.hi}});
  Json points = Json::array();
  for (std::size_t k = 0; k < curve.grid.size(); ++k)
    points.push_back({{"tau", curve.grid[k]},
                      {"U_a", curve.U_a[k]},
                      {"U_b", curve.U_b[k]},
                      {"beneficial", static_cast<bool>(curve.beneficial[k])}});
  return {{"donor", curve.donor},
          {"recipient", curve.recipient},
          {"baseline", {curve.baseline.first, curve.baseline.second}},
          {"intervals", std::move(intervals)},
          {"points", std::move(points)}};
}

inline Json feasibility_to_json(const ThreeNodeFeasibility& f) {
  Json out{{"feasible", f.feasible},
           {"upper_holds", f.upper_holds},
           {"lower_holds", f.lower_holds},
           {"separation_holds", f.separation_holds},
           {"chain_margin", f.chain_margin},
           {"separation_margin", f.separation_margin},
           {"exact", f.exact}};
  if (f.exact) {
    out["chain"] = f.chain_text();
    out["separation"] = f.separation_text();
  }
  return out;
}

inline Json closed_form_to_json(const ThreeNodeClosedForm& cf) {
  return {{"x1_star", cf.x1_star}, {"x2_star", cf.x2_star},   {"U1_star", cf.U1_star},
          {"U3_star", cf.U3_star}, {"tau_bound_1", cf.tau_bound_1}, {"tau_bound_3", cf.tau_bound_3}};
}

inline Json profile_to_json(const DonationProfile& p) {
  Json rows = Json::array();
  for (Player i = 0; i < p.size(); ++i) {
    Json row = Json::array();
    for (std::size_t k = 0; k < p.support[i].size(); ++k)
      row.push_back({{"j", p.support[i][k]}, {"b", p.rows[i][k]}});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json trace_to_json(const ContestInstance& inst, const OptimizerTrace& trace) {
  const OptimizerRecord& last = trace.final();
  Json gradients = Json::object();
  for (Player i : trace.donors) gradients[std::to_string(i)] = last.gradients[i];
  return {{"donors", trace.donors},
          {"reason", trace.reason ? to_string(*trace.reason) : "failed"},
          {"iterations", last.iter},
          {"profile", profile_to_json(last.profile)},
          {"effective_budgets", effective_budgets(inst, last.profile)},
          {"payoffs", last.payoffs},
          {"gradients", std::move(gradients)},
          {"dispersion", last.dispersion}};
}

}  // namespace netcontest
