#include "divkernel/export.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"

namespace divkernel::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// Comma-joins fields and ends the row.
class Row {
 public:
  explicit Row(std::ostream& out) : out_(out) {}
  ~Row() { out_ << '\n'; }
  Row& operator<<(double v) { return put(format_double(v)); }
  Row& operator<<(std::uint64_t v) { return put(std::to_string(v)); }
  Row& operator<<(std::uint32_t v) { return put(std::to_string(v)); }
  Row& operator<<(std::string_view v) { return put(v); }

 private:
  Row& put(std::string_view s) {
    if (!first_) out_ << ',';
    first_ = false;
    out_ << s;
    return *this;
  }
  std::ostream& out_;
  bool first_ = true;
};

nlohmann::ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

std::size_t write_trajectory_csv(std::ostream& out, const sim::Trajectory& traj) {
  const bool labels = traj.config.genealogy;
  out << (labels ? "event_index,time,parent_label,parent_toxicity,gamma\n"
                 : "event_index,time,parent_toxicity,gamma\n");
  std::uint64_t i = 0;
  for (const auto& r : traj.records) {
    Row row(out);
    row << i++ << r.time;
    if (labels) row << (r.parent ? r.parent->to_string() : std::string());
    row << r.parent_toxicity << r.gamma;
  }
  return traj.records.size();
}

std::size_t write_snapshot_csv(std::ostream& out, const sim::Trajectory& traj) {
  out << "time,n_alive,mean_age,total_toxicity,q25,q75\n";
  for (const auto& s : traj.snapshots)
    Row(out) << s.time << s.n_alive << s.mean_age << s.total_toxicity << s.q25 << s.q75;
  return traj.snapshots.size();
}

std::size_t write_population_csv(std::ostream& out, const sim::Trajectory& traj) {
  const bool labels = !traj.final_labels.empty();
  out << (labels ? "index,label,toxicity\n" : "index,toxicity\n");
  for (std::size_t i = 0; i < traj.final_toxicity.size(); ++i) {
    Row row(out);
    row << static_cast<std::uint64_t>(i);
    if (labels) row << traj.final_labels[i].to_string();
    row << traj.final_toxicity[i];
  }
  return traj.final_toxicity.size();
}

std::size_t write_estimate_csv(std::ostream& out, const estimation::DensityEstimate& est) {
  out << "gamma,value\n";
  for (std::size_t i = 0; i < est.values.size(); ++i) Row(out) << est.grid.point(i) << est.values[i];
  return est.values.size();
}

void write_estimate_json(std::ostream& out, const estimation::DensityEstimate& est) {
  nlohmann::ordered_json j;
  j["method"] = std::string(estimation::to_string(est.method));
  j["bandwidth"] = number(est.bandwidth);
  j["m_t"] = est.m_t;
  j["epsilon"] = number(est.epsilon);
  j["delta"] = number(est.delta);
  j["selector_mode"] = est.selector_mode;
  j["symmetrized"] = est.symmetrized;
  j["grid"] = {{"lo", est.grid.lo}, {"hi", est.grid.hi}, {"n_points", est.grid.n_points}};
  auto diag = nlohmann::ordered_json::array();
  for (const auto& d : est.diagnostics)
    diag.push_back({{"ell", number(d.ell)},
                    {"A", number(d.a_value)},
                    {"penalty", number(d.penalty)},
                    {"objective", number(d.objective)}});
  j["diagnostics"] = std::move(diag);
  out << j.dump(2) << '\n';
}

std::size_t write_table_csv(std::ostream& out, const experiments::McReport& report) {
  out << "T,method,e_bar,sigma_e,ell_bar,replicates\n";
  for (const auto& s : report.summary)
    Row(out) << s.horizon << estimation::to_string(s.method) << s.mean_error << s.sd_error
             << s.mean_bandwidth << s.replicates;
  return report.summary.size();
}

std::size_t write_replicates_csv(std::ostream& out, const experiments::McReport& report) {
  out << "T,replicate,method,error,bandwidth,m_t\n";
  for (const auto& r : report.replicates)
    Row(out) << r.horizon << r.replicate << estimation::to_string(r.method) << r.error << r.bandwidth
             << r.m_t;
  return report.replicates.size();
}

std::size_t write_rate_csv(std::ostream& out, const experiments::RateResult& result) {
  out << "method,T,e_bar,log_e_bar,slope,intercept,theoretical_slope\n";
  std::size_t rows = 0;
  for (const auto& f : result.fits) {
    for (const auto& p : f.points) {
      Row(out) << estimation::to_string(f.method) << p.horizon << p.mean_error << std::log(p.mean_error)
               << f.slope << f.intercept << f.theoretical_slope;
      ++rows;
    }
  }
  return rows;
}

std::size_t write_epsilon_csv(std::ostream& out, const experiments::CalibrationReport& report) {
  out << "T,epsilon,mise,mean_rel_error,mean_bandwidth,mean_gap,oracle_bandwidth\n";
  for (const auto& r : report.rows)
    Row(out) << report.horizon << r.epsilon << r.mise << r.mean_rel_error << r.mean_bandwidth << r.mean_gap
             << report.oracle_bandwidth;
  return report.rows.size();
}

std::size_t write_meanage_csv(std::ostream& out, const experiments::MeanAgeReport& report) {
  out << "a,time,mean_of_means,q25_of_means,q75_of_means,mean_within_q25,mean_within_q75\n";
  for (const auto& r : report.rows)
    Row(out) << r.a << r.time << r.mean_of_means << r.q25_of_means << r.q75_of_means << r.mean_within_q25
             << r.mean_within_q75;
  return report.rows.size();
}

std::size_t write_spread_csv(std::ostream& out, const experiments::MeanAgeReport& report) {
  out << "a,within_spread,across_spread,mean_age\n";
  for (const auto& s : report.spreads) Row(out) << s.a << s.within_spread << s.across_spread << s.mean_age;
  return report.spreads.size();
}

std::size_t write_ntcheck_csv(std::ostream& out, const experiments::NtCheckReport& r) {
  out << "n0,R,T,replicates,mean_sim,mean_se,mean_theory,z_mean,inv_sim,inv_se,inv_theory,z_inv,"
         "chi2,dof,p_value\n";
  Row(out) << r.config.n0 << r.config.division_rate << r.config.horizon << r.config.replicates
           << r.mean_sim << r.mean_se << r.mean_theory << r.z_mean << r.inv_sim << r.inv_se
           << r.inv_theory << r.z_inv << r.chi2 << r.dof << r.p_value;
  return 1;
}

std::size_t write_ntbins_csv(std::ostream& out, const experiments::NtCheckReport& r) {
  out << "lo,hi,observed,expected\n";
  for (const auto& b : r.bins) {
    Row row(out);
    row << b.lo;
    if (b.hi == std::numeric_limits<std::uint64_t>::max()) {
      row << std::string_view("inf");
    } else {
      row << b.hi;
    }
    row << b.observed << b.expected;
  }
  return r.bins.size();
}

}  // namespace divkernel::io
