#pragma once

// Check orchestration: runs the selected verification checks over a sampled
// point set, collects per-point residuals for CSV export and assembles a
// deterministic JSON report (no timestamps, ordered keys, value-identical
// across reruns of the same config).

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "kmob/cone.hpp"
#include "kmob/config.hpp"
#include "kmob/nullity.hpp"

namespace kmob {

inline const char* engine_version() { return "1.0.0"; }

// Worker count: hardware concurrency capped by the KMOB_THREADS variable.
inline int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("KMOB_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1 && cap < hw) hw = cap;
  }
  return hw;
}

// Index-ordered parallel map; rethrows the first captured exception.
template <typename Fn>
inline void parallel_for(int count, Fn&& fn) {
  const int workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct CsvRow {
  std::string check;
  int point_index = 0;
  std::vector<double> coords;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct RunResult {
  json report;
  bool all_pass = true;
  std::vector<CsvRow> rows;
};

namespace detail {

inline double default_tolerance(const std::string& check) {
  // jet-exact identities at 1e-7; checks that lean on finite differences at
  // 1e-4; cone parallelism (one extra derivative of assembled jets) at 1e-6
  static const std::map<std::string, double> defaults{
      {"kahler", 1e-7},   {"solution", 1e-7}, {"extended", 1e-4},
      {"nullity", 1e-6},  {"equivalence", 1e-6}, {"mobility", 1e-6},
      {"f_poly", 1e-7},   {"cproj", 1e-7},    {"cone", 1e-6}};
  return defaults.at(check);
}

inline std::string anchor(const std::string& check) {
  static const std::map<std::string, std::string> a{
      {"kahler", "integrable complex structure, closed form, potential 1-form"},
      {"solution", "first order system defining the solution endomorphism"},
      {"extended", "closed extended system for the triple (A, Lambda, mu)"},
      {"nullity", "curvature nullity of the shifted operator"},
      {"equivalence", "equivalent characterizations and commutator identities"},
      {"mobility", "lower bound for the dimension of the solution space"},
      {"f_poly", "point independence of the invariant polynomial"},
      {"cproj", "c-projectively equivalent companion metric round trip"},
      {"cone", "parallel hermitian endomorphism on the metric cone"}};
  return a.at(check);
}

inline json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json vec_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

struct CheckState {
  InstancePtr inst;
  std::vector<Eigen::VectorXd> pts;
  std::vector<SolvedPoint> sps;
  SolField field;
  bool parallel_A = false;  // Lambda vanishes at every sampled point
  bool have_B = false;
  double B = 0.0;
  double B_spread = 0.0;
  double fit_residual = 0.0;
};

// System constant in the fitted convention when only the profile criterion is
// available (parallel solutions): the measured sign relation is
// fitted = -profile_criterion.
inline bool effective_B(const CheckState& st, double& B) {
  if (st.have_B) {
    B = st.B;
    return true;
  }
  const Flags f = st.inst->classify();
  if (f.ccb_B) {
    B = -*f.ccb_B;
    return true;
  }
  return false;
}

}  // namespace detail

inline RunResult run(const RunConfig& cfg) {
  RunResult out;
  out.report["engine_version"] = engine_version();
  out.report["config"] = cfg.raw;

  detail::CheckState st;
  st.inst = cfg.instance;
  st.field = instance_field(st.inst);
  st.pts = st.inst->sample(cfg.point_count, cfg.seed);
  st.sps.resize(st.pts.size());
  parallel_for(static_cast<int>(st.pts.size()),
               [&](int i) { st.sps[i] = st.field(st.pts[i]); });

  {
    json inst;
    inst["name"] = st.inst->name();
    inst["dim"] = st.inst->dim();
    const Flags f = st.inst->classify();
    json cls;
    cls["bochner_flat"] = f.bochner_flat;
    cls["weakly_bochner_flat"] = f.weakly_bochner_flat;
    cls["constant_holomorphic_sectional_curvature"] = f.chsc;
    cls["kahler_einstein"] = f.kahler_einstein;
    if (f.ccb_B)
      cls["profile_criterion_constant"] = *f.ccb_B;
    else
      cls["profile_criterion_constant"] = nullptr;
    inst["classification"] = cls;
    out.report["instance"] = inst;
  }

  double lam_norm = 0.0;
  for (const auto& sp : st.sps)
    lam_norm = std::max(lam_norm, values_of(sp.sol.lambda).norm());
  st.parallel_A = lam_norm < 1e-9;

  json checks = json::array();
  auto tol_of = [&](const std::string& c) {
    auto it = cfg.tolerances.find(c);
    return it != cfg.tolerances.end() ? it->second : detail::default_tolerance(c);
  };

  auto add_rows = [&](const std::string& check, const std::vector<double>& per_point,
                      double tol, const std::vector<Eigen::VectorXd>& pts) {
    for (size_t i = 0; i < per_point.size(); ++i) {
      CsvRow row;
      row.check = check;
      row.point_index = static_cast<int>(i);
      row.coords.assign(pts[i].data(), pts[i].data() + pts[i].size());
      row.residual = per_point[i];
      row.tolerance = tol;
      row.pass = per_point[i] <= tol;
      out.rows.push_back(row);
    }
  };

  for (const std::string& check : cfg.checks) {
    const double tol = tol_of(check);
    json rec;
    rec["name"] = check;
    rec["anchor"] = detail::anchor(check);
    rec["points"] = static_cast<int>(st.pts.size());
    rec["tolerance"] = tol;
    try {
      double residual = 0.0;
      json details;

      if (check == "kahler") {
        std::vector<double> per(st.sps.size(), 0.0);
        parallel_for(static_cast<int>(st.sps.size()), [&](int i) {
          const auto& ev = st.sps[i].ev;
          const int n = ev.frame.dim();
          const Eigen::MatrixXd Jv = ev.frame.J.values();
          double r = (Jv * Jv + Eigen::MatrixXd::Identity(n, n)).norm();
          r = std::max(r, frob(cov_endo(ev.chart.J, ev.frame.gamma)));
          r = std::max(r, frob(cov_bilinear(ev.chart.omega, ev.frame.gamma)));
          const Eigen::MatrixXd gv = ev.frame.g.values();
          r = std::max(r, (gv - gv.transpose()).norm());
          if (!ev.chart.tau.empty())
            for (int a = 0; a < n; ++a)
              for (int b = a + 1; b < n; ++b)
                r = std::max(r, std::abs(ev.chart.tau[b].g(a) - ev.chart.tau[a].g(b) -
                                         2.0 * ev.frame.omega(a, b)));
          per[i] = r;
        });
        for (double r : per) residual = std::max(residual, r);
        add_rows(check, per, tol, st.pts);
      }

      else if (check == "solution") {
        std::vector<double> per(st.sps.size(), 0.0);
        parallel_for(static_cast<int>(st.sps.size()), [&](int i) {
          const auto [sym, com] = hermitian_residual(st.sps[i].sol.A, st.sps[i].ev.frame);
          per[i] = std::max({main_equation_residual(st.sps[i]), sym, com});
        });
        for (double r : per) residual = std::max(residual, r);
        add_rows(check, per, tol, st.pts);
      }

      else if (check == "extended") {
        if (!st.parallel_A) {
          const BmuEstimate est = estimate_B_mu(st.sps);
          st.B = est.B;
          st.have_B = true;
          st.B_spread = est.B_spread;
          st.fit_residual = est.fit_residual;
          details["fitted_B"] = est.B;
          details["B_spread"] = est.B_spread;
          details["fit_residual"] = est.fit_residual;
          details["mu"] = detail::vec_json(est.mu);
        } else {
          details["fitted_B"] = nullptr;
          details["note"] = "Lambda vanishes at every sampled point";
        }
        const double B_used = st.have_B ? st.B : 0.0;
        std::vector<double> per(st.pts.size(), 0.0);
        ExtendedResiduals total;
        std::mutex mx;
        parallel_for(static_cast<int>(st.pts.size()), [&](int i) {
          const ExtendedResiduals r =
              extended_system_residual(st.field, B_used, {st.pts[i]});
          per[i] = std::max({r.res_main, r.res_lambda, r.res_mu});
          std::lock_guard<std::mutex> lk(mx);
          total.res_main = std::max(total.res_main, r.res_main);
          total.res_lambda = std::max(total.res_lambda, r.res_lambda);
          total.res_mu = std::max(total.res_mu, r.res_mu);
        });
        details["res_main"] = total.res_main;
        details["res_lambda"] = total.res_lambda;
        details["res_mu"] = total.res_mu;
        residual = std::max({total.res_main, total.res_lambda, total.res_mu});
        if (st.have_B) residual = std::max(residual, st.B_spread);
        add_rows(check, per, tol, st.pts);
      }

      else if (check == "nullity") {
        double B = 0.0;
        if (!detail::effective_B(st, B))
          throw DegenerateFit("nullity: no system constant available for this instance");
        details["B"] = B;
        std::vector<int> dims(st.sps.size(), 0);
        std::vector<double> per(st.sps.size(), 0.0);
        parallel_for(static_cast<int>(st.sps.size()), [&](int i) {
          const auto& sp = st.sps[i];
          NullityResult nr = nullity_space(sp.ev.frame, B);
          dims[i] = nr.dimension;
          double r = nr.j_invariance;
          // containment of grad xi and J grad xi in the nullity space
          if (nr.dimension > 0 && nr.dimension < sp.ev.frame.dim()) {
            const Eigen::MatrixXd ginv = sp.ev.frame.g_inv.values();
            const Eigen::MatrixXd Jv = sp.ev.frame.J.values();
            for (const auto& x : sp.ev.chart.xi) {
              Eigen::VectorXd v = ginv * x.g;
              for (int rep = 0; rep < 2; ++rep) {
                const double nv = v.norm();
                if (nv > 1e-12) {
                  const Eigen::VectorXd u = v / nv;
                  r = std::max(r, (u - nr.basis * (nr.basis.transpose() * u)).norm());
                }
                v = Jv * v;
              }
            }
          }
          r = std::max(r, integrability_residual(sp));
          per[i] = r;
        });
        for (double r : per) residual = std::max(residual, r);
        json jd = json::array();
        for (int d : dims) jd.push_back(d);
        details["dimensions"] = jd;
        out.report["nullity_dimensions"] = jd;
        // uniqueness scan around the constant on the first point
        const auto grid = b_grid(B, 1.0, 21);
        const auto scan = nullity_scan(st.sps[0].ev.frame, grid);
        json js = json::array();
        for (int d : scan) js.push_back(d);
        details["grid_dimensions"] = js;
        add_rows(check, per, tol, st.pts);
      }

      else if (check == "equivalence") {
        double B = 0.0;
        if (!detail::effective_B(st, B))
          B = 0.0;  // the commutator identities below hold for any constant
        details["B"] = B;
        const EquivalenceBattery eb = equivalence_battery(st.sps, B);
        details["bracket_ZA"] = eb.bracket_ZA;
        details["scalar_line"] = eb.scalar_line;
        details["Z_on_Jlambda"] = eb.Z_on_Jlambda;
        details["Z_on_gradxi"] = eb.Z_on_gradxi;
        std::vector<double> per(st.sps.size(), 0.0);
        parallel_for(static_cast<int>(st.sps.size()), [&](int i) {
          const double mu = st.have_B ? mu_from_trace(st.sps[i], B) : 0.0;
          per[i] = std::max(integrability_residual(st.sps[i]),
                            second_identity_residual(st.sps[i], B, mu));
        });
        for (double r : per) residual = std::max(residual, r);
        residual = std::max({residual, eb.bracket_ZA, eb.scalar_line, eb.Z_on_Jlambda,
                             eb.Z_on_gradxi});
        const Eigen::MatrixXd E = unitary_frame(st.sps[0].ev.frame);
        const KbracketCertificate kb =
            verify_Kbracket_kernel(st.sps[0].ev.frame, E.col(0));
        details["Kbracket_kernel_dim"] = kb.kernel_dim;
        details["Kbracket_identity_distance"] = kb.identity_distance;
        if (kb.kernel_dim != 1) residual = std::max(residual, 1.0);
        residual = std::max(residual, kb.identity_distance);
        add_rows(check, per, tol, st.pts);
      }

      else if (check == "mobility") {
        const MobilityCertificate cert =
            mobility_lower_bound(st.inst, cfg.point_count, cfg.seed);
        json labels = json::array();
        for (const auto& l : cert.labels) labels.push_back(l);
        details["labels"] = labels;
        details["rank"] = cert.rank;
        details["singular_values"] = detail::vec_json(cert.singular_values);
        details["fitted_B"] = cert.fitted_B;
        details["scaled"] = cert.scaled;
        out.report["certificates"]["mobility"] = details;
        residual = cert.max_main_eq_residual;
        if (cert.rank < 1) residual = std::max(residual, 1.0);
      }

      else if (check == "f_poly") {
        const double B_used = st.have_B ? st.B : 0.0;
        const FPolyResult fp = f_polynomial(st.sps, B_used);
        residual = fp.spread;
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(fp.coeffs[0].size());
        for (const auto& c : fp.coeffs) mean += c;
        mean /= static_cast<double>(fp.coeffs.size());
        details["coefficients"] = detail::vec_json(mean);
        details["spread"] = fp.spread;
        std::vector<double> per;
        for (const auto& c : fp.coeffs)
          per.push_back((c - mean).lpNorm<Eigen::Infinity>());
        add_rows(check, per, tol, st.pts);
      }

      else if (check == "cproj") {
        std::vector<double> per(st.sps.size(), 0.0);
        parallel_for(static_cast<int>(st.sps.size()), [&](int i) {
          CprojResult cr;
          try {
            cr = cproj_pair(st.sps[i]);
          } catch (const SingularA&) {
            cr = cproj_pair(st.sps[i], st.inst->spectrum_upper() + 1.0);
          }
          per[i] = std::max(cr.roundtrip, cr.pattern_residual);
        });
        for (double r : per) residual = std::max(residual, r);
        add_rows(check, per, tol, st.pts);
      }

      else if (check == "cone") {
        double B = 0.0;
        if (!detail::effective_B(st, B))
          throw WrongB("cone: no system constant available for this instance");
        if (B >= -1e-8)
          throw WrongB("cone: the system constant must be negative");
        InstancePtr base = st.inst;
        bool scaled = false;
        if (std::abs(B + 1.0) > 1e-6) {
          base = std::make_shared<ScaledInstance>(st.inst, -B);
          scaled = true;
        }
        details["scaled"] = scaled;
        details["scale_factor"] = scaled ? -B : 1.0;
        ConeInstance cone(base);
        const int ccount = std::min(cfg.point_count, 4);
        const auto cpts = cone.sample(ccount, cfg.seed);
        std::vector<double> per(cpts.size(), 0.0);
        std::vector<std::pair<ConeEval, JetMat>> hat;
        hat.reserve(cpts.size());
        for (const auto& p : cpts) {
          ConeEval ce = cone.eval(p);
          JetMat hatA = hatA_from_solution(ce, ce.base.chart.solution(), -1.0);
          hat.push_back({std::move(ce), std::move(hatA)});
        }
        parallel_for(static_cast<int>(hat.size()), [&](int i) {
          const auto& ce = hat[i].first;
          const int nh = ce.frame.dim();
          const Eigen::MatrixXd Jv = ce.frame.J.values();
          double r = (Jv * Jv + Eigen::MatrixXd::Identity(nh, nh)).norm();
          r = std::max(r, frob(cov_endo(ce.J, ce.frame.gamma)));
          r = std::max(r, cone_field_residual(ce));
          r = std::max(r, moment_killing_residual(ce));
          r = std::max(r, frob(cov_endo(hat[i].second, ce.frame.gamma)));
          per[i] = r;
        });
        const ParallelReport pr = parallel_residual(hat);
        details["eigenvalues"] = detail::vec_json(pr.eigenvalues);
        details["eigenvalue_spread"] = pr.eigenvalue_spread;
        details["nabla_residual"] = pr.nabla_residual;
        for (double r : per) residual = std::max(residual, r);
        residual = std::max(residual, pr.eigenvalue_spread);
        std::vector<Eigen::VectorXd> coords;
        for (const auto& h : hat) coords.push_back(h.first.point);
        add_rows(check, per, tol, coords);
      }

      rec["max_residual"] = residual;
      rec["pass"] = residual <= tol;
      if (!details.is_null()) rec["details"] = details;
      if (!(residual <= tol)) out.all_pass = false;
    } catch (const Error& e) {
      rec["max_residual"] = nullptr;
      rec["pass"] = false;
      rec["error"] = e.what();
      out.all_pass = false;
    }
    checks.push_back(rec);
  }
  out.report["checks"] = checks;

  // aggregated constant estimates with the measured sign relation
  {
    json b;
    if (st.have_B) {
      b["fitted"] = st.B;
      b["fitted_spread"] = st.B_spread;
    } else {
      b["fitted"] = nullptr;
      b["fitted_spread"] = nullptr;
    }
    const Flags f = st.inst->classify();
    if (f.ccb_B) {
      b["profile_criterion"] = *f.ccb_B;
      if (st.have_B)
        b["fitted_is_minus_profile"] = std::abs(st.B + *f.ccb_B) < 1e-6;
    } else {
      b["profile_criterion"] = nullptr;
    }
    if (st.inst->dim() == 4 && st.inst->n_nonconstant() == 2) {
      const auto th = st.inst->thetas();
      const BExplicit be =
          b_explicit_4d(th[0], th[1], st.pts[0](0), st.pts[0](1));
      b["explicit_4d"] = be.B;
      b["explicit_4d_residual"] = be.derivB_residual;
      if (st.have_B) b["explicit_matches_fitted"] = std::abs(be.B - st.B) < 1e-6;
    }
    out.report["b_estimates"] = b;
  }

  out.report["all_pass"] = out.all_pass;
  return out;
}

// --- output ----------------------------------------------------------------------

// shortest round-trip decimal form
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void emit_csv(const std::vector<CsvRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("emit_csv: cannot open " + path);
  size_t maxdim = 0;
  for (const auto& r : rows) maxdim = std::max(maxdim, r.coords.size());
  os << "check,point_index";
  for (size_t k = 0; k < maxdim; ++k) os << ",x" << k;
  os << ",residual,tolerance,pass\n";
  for (const auto& r : rows) {
    os << r.check << ',' << r.point_index;
    for (size_t k = 0; k < maxdim; ++k) {
      os << ',';
      if (k < r.coords.size()) os << format_double(r.coords[k]);
    }
    os << ',' << format_double(r.residual) << ',' << format_double(r.tolerance) << ','
       << (r.pass ? "1" : "0") << '\n';
  }
  if (!os) throw IoError("emit_csv: write failed for " + path);
}

inline void emit_report(const json& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("emit_report: cannot open " + path);
  os << report.dump(2) << '\n';
  if (!os) throw IoError("emit_report: write failed for " + path);
}

}  // namespace kmob
