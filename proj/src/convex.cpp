#include "starnoma/convex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace starnoma::convex {

double MatTerm::value(const Point& x) const {
  const MatC& X = x.mats[var];
  if (rank1) return scale * std::real(rank1->dot(X * (*rank1)));
  return scale * std::real((dense->conjugate().cwiseProduct(X)).sum());
}

void MatTerm::add_grad(std::vector<MatC>& g, double w) const {
  if (rank1)
    g[var].noalias() += (w * scale) * ((*rank1) * rank1->adjoint());
  else
    g[var] += (w * scale) * (*dense);
}

double AffineCon::value(const Point& x) const {
  double v = constant;
  for (const MatTerm& t : mats) v += t.value(x);
  for (const auto& [i, c] : scalars) v += c * x.scalars(i);
  return v;
}

void AffineCon::add_grad(const Point&, double w, std::vector<MatC>& gm,
                         Eigen::VectorXd& gs) const {
  for (const MatTerm& t : mats) t.add_grad(gm, w);
  for (const auto& [i, c] : scalars) gs(i) += w * c;
}

// The set {s >= 1/(p*T), T > 0} written in rotated-cone form
// sqrt(4 + (pT - s)^2) <= pT + s, which keeps gradients bounded near T = 0.
double ReciprocalCon::value(const Point& x) const {
  double t = p * term.value(x);
  double s = x.scalars(slack);
  return std::sqrt(4.0 + (t - s) * (t - s)) - (t + s);
}

void ReciprocalCon::add_grad(const Point& x, double w, std::vector<MatC>& gm,
                             Eigen::VectorXd& gs) const {
  double t = p * term.value(x);
  double s = x.scalars(slack);
  double a = (t - s) / std::sqrt(4.0 + (t - s) * (t - s));
  term.add_grad(gm, w * p * (a - 1.0));
  gs(slack) += w * (-a - 1.0);
}

double Objective::value(const Point& x) const {
  double v = 0.0;
  for (const MatTerm& t : mats) v += t.value(x);
  for (const auto& [i, c] : scalars) v += c * x.scalars(i);
  return v;
}

MatC psd_project(const MatC& m) {
  MatC h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<MatC> eig(h);
  Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().adjoint();
}

namespace {

struct Grad {
  std::vector<MatC> mats;
  Eigen::VectorXd scalars;
};

void zero_grad(const Problem& p, Grad& g) {
  if (g.mats.size() != p.mat_vars.size()) {
    g.mats.resize(p.mat_vars.size());
    for (size_t v = 0; v < p.mat_vars.size(); ++v)
      g.mats[v] = MatC::Zero(p.mat_vars[v].dim, p.mat_vars[v].dim);
    g.scalars = Eigen::VectorXd::Zero(p.scalar_vars.size());
    return;
  }
  for (MatC& m : g.mats) m.setZero();
  g.scalars.setZero();
}

double dot(const Grad& a, const Grad& b) {
  double s = a.scalars.dot(b.scalars);
  for (size_t v = 0; v < a.mats.size(); ++v)
    s += std::real((a.mats[v].conjugate().cwiseProduct(b.mats[v])).sum());
  return s;
}

struct AugLag {
  const Problem& prob;
  Eigen::VectorXd lambda;  // equality multipliers
  Eigen::VectorXd mu;      // inequality multipliers (affine ineq + recips)
  double rho = 1.0;

  std::vector<const AffineCon*> eqs;
  std::vector<const AffineCon*> ineqs;

  explicit AugLag(const Problem& p) : prob(p) {
    for (const AffineCon& c : p.affine)
      (c.equality ? eqs : ineqs).push_back(&c);
    lambda = Eigen::VectorXd::Zero(eqs.size());
    mu = Eigen::VectorXd::Zero(ineqs.size() + p.recips.size());
    rho = 10.0;
  }

  double ineq_value(size_t i, const Point& x) const {
    if (i < ineqs.size()) return ineqs[i]->value(x);
    return prob.recips[i - ineqs.size()].value(x);
  }

  double merit(const Point& x) const {
    double f = -prob.objective.value(x);
    for (size_t e = 0; e < eqs.size(); ++e) {
      double h = eqs[e]->value(x);
      f += lambda(e) * h + 0.5 * rho * h * h;
    }
    for (size_t i = 0; i < static_cast<size_t>(mu.size()); ++i) {
      double g = ineq_value(i, x);
      double t = std::max(0.0, mu(i) + rho * g);
      f += (t * t - mu(i) * mu(i)) / (2.0 * rho);
    }
    return f;
  }

  void gradient(const Point& x, Grad& g) const {
    zero_grad(prob, g);
    for (const MatTerm& t : prob.objective.mats) t.add_grad(g.mats, -1.0);
    for (const auto& [i, c] : prob.objective.scalars) g.scalars(i) -= c;
    for (size_t e = 0; e < eqs.size(); ++e) {
      double h = eqs[e]->value(x);
      eqs[e]->add_grad(x, lambda(e) + rho * h, g.mats, g.scalars);
    }
    for (size_t i = 0; i < ineqs.size(); ++i) {
      double w = std::max(0.0, mu(i) + rho * ineqs[i]->value(x));
      if (w > 0.0) ineqs[i]->add_grad(x, w, g.mats, g.scalars);
    }
    for (size_t r = 0; r < prob.recips.size(); ++r) {
      size_t i = ineqs.size() + r;
      double w = std::max(0.0, mu(i) + rho * prob.recips[r].value(x));
      if (w > 0.0) prob.recips[r].add_grad(x, w, g.mats, g.scalars);
    }
  }

  double max_residual(const Point& x) const {
    double r = 0.0;
    for (const AffineCon* c : eqs) r = std::max(r, std::abs(c->value(x)));
    for (size_t i = 0; i < static_cast<size_t>(mu.size()); ++i)
      r = std::max(r, std::max(0.0, ineq_value(i, x)));
    return r;
  }

  void update_multipliers(const Point& x) {
    for (size_t e = 0; e < eqs.size(); ++e)
      lambda(e) += rho * eqs[e]->value(x);
    for (size_t i = 0; i < static_cast<size_t>(mu.size()); ++i)
      mu(i) = std::max(0.0, mu(i) + rho * ineq_value(i, x));
  }
};

void project(const Problem& prob, Point& x) {
  for (size_t v = 0; v < prob.mat_vars.size(); ++v)
    x.mats[v] = psd_project(x.mats[v]);
  for (size_t s = 0; s < prob.scalar_vars.size(); ++s)
    x.scalars(s) = std::clamp(x.scalars(s), prob.scalar_vars[s].lb,
                              prob.scalar_vars[s].ub);
}

Point initial_point(const Problem& prob, const SolveOptions& opts) {
  if (opts.warm_start) {
    Point x = *opts.warm_start;
    project(prob, x);
    return x;
  }
  Point x;
  x.mats.resize(prob.mat_vars.size());
  for (size_t v = 0; v < prob.mat_vars.size(); ++v)
    x.mats[v] = MatC::Zero(prob.mat_vars[v].dim, prob.mat_vars[v].dim);
  x.scalars = Eigen::VectorXd::Zero(prob.scalar_vars.size());
  for (size_t s = 0; s < prob.scalar_vars.size(); ++s)
    x.scalars(s) = prob.scalar_vars[s].init;
  project(prob, x);
  return x;
}

}  // namespace

Solution solve(const Problem& prob, const SolveOptions& opts) {
  AugLag al(prob);
  Point x = initial_point(prob, opts);

  Solution sol;
  int total_inner = 0;
  double step = 1.0;
  double prev_resid = std::numeric_limits<double>::infinity();
  double best_resid = prev_resid;
  int stalled = 0;
  double prev_obj = prob.objective.value(x);
  bool inner_converged = false;

  const int max_outer = 200;
  Grad g, g_prev;
  Point cand, x_prev;
  for (int outer = 0; outer < max_outer && total_inner < opts.max_iter;
       ++outer) {
    // inner: monotone projected gradient with a Barzilai-Borwein step seed
    // and backtracking on the merit. Early rounds only need coarse inner
    // solutions, so the stationarity target tracks the residual.
    double phi = al.merit(x);
    inner_converged = false;
    int tiny_drops = 0;
    int inner_cap =
        std::min(std::min(100 + 60 * outer, 600), opts.max_iter - total_inner);
    double stat_tol = std::clamp(0.03 * prev_resid, 3e-7, 1e-3);
    bool have_prev = false;
    double plateau_ref = phi;
    int plateau_at = 0;
    for (int inner = 0; inner < inner_cap; ++inner) {
      // plateau watch: no meaningful merit progress over a 50-step window
      if (inner - plateau_at >= 50) {
        if (plateau_ref - phi <= 1e-12 * (1.0 + std::abs(phi))) {
          inner_converged = true;
          break;
        }
        plateau_ref = phi;
        plateau_at = inner;
      }
      al.gradient(x, g);
      double gnorm = std::sqrt(dot(g, g));
      if (opts.keep_merit_log) sol.merit_log.push_back({outer, inner, phi});
      ++total_inner;
      if (gnorm < 1e-14) {
        inner_converged = true;
        break;
      }
      if (have_prev) {
        double ss = (x.scalars - x_prev.scalars).squaredNorm();
        double sy = (x.scalars - x_prev.scalars)
                        .dot(g.scalars - g_prev.scalars);
        for (size_t v = 0; v < x.mats.size(); ++v) {
          ss += (x.mats[v] - x_prev.mats[v]).squaredNorm();
          sy += std::real(((x.mats[v] - x_prev.mats[v]).conjugate().cwiseProduct(
                               g.mats[v] - g_prev.mats[v]))
                              .sum());
        }
        if (sy > 1e-300 && ss > 0.0)
          step = std::clamp(ss / sy, 1e-12, 1e6);
      }
      x_prev = x;
      g_prev = g;
      have_prev = true;
      bool accepted = false;
      double t = step;
      for (int bt = 0; bt < 50; ++bt) {
        if (cand.mats.size() != x.mats.size()) cand = x;
        for (size_t v = 0; v < cand.mats.size(); ++v)
          cand.mats[v] = x.mats[v] - t * g.mats[v];
        cand.scalars = x.scalars - t * g.scalars;
        project(prob, cand);
        double dx2 = (cand.scalars - x.scalars).squaredNorm();
        for (size_t v = 0; v < cand.mats.size(); ++v)
          dx2 += (cand.mats[v] - x.mats[v]).squaredNorm();
        if (dx2 < 1e-28) break;  // projected step vanished: stationary
        double phi_cand = al.merit(cand);
        if (phi_cand <= phi - 1e-4 * dx2 / t) {
          double xnorm2 = x.scalars.squaredNorm();
          for (const MatC& m : x.mats) xnorm2 += m.squaredNorm();
          std::swap(x, cand);
          phi = phi_cand;
          if (t >= step) step = t * 1.6;
          accepted = true;
          // gradient-mapping stationarity, scale-relative
          double stat = std::sqrt(dx2) / t;
          bool tiny = stat <= stat_tol * (1.0 + std::sqrt(xnorm2));
          tiny_drops = tiny ? tiny_drops + 1 : 0;
          break;
        }
        t *= 0.3;
      }
      if (!accepted || tiny_drops >= 2) {
        inner_converged = true;
        break;
      }
    }

    double resid = al.max_residual(x);
    double obj = prob.objective.value(x);
    if (std::getenv("STARNOMA_SOLVER_DEBUG"))
      std::fprintf(stderr,
                   "outer=%d inner=%d phi=%.8g obj=%.8g resid=%.3g rho=%.3g "
                   "conv=%d\n",
                   outer, total_inner, al.merit(x), obj, resid, al.rho,
                   static_cast<int>(inner_converged));
    bool feasible = resid <= opts.tol_feas;
    bool settled =
        std::abs(obj - prev_obj) <= opts.tol_obj * (1.0 + std::abs(obj));
    if (outer > 0 && feasible && settled) {
      sol.status = SolveStatus::kOptimal;
      sol.x = x;
      sol.objective = obj;
      sol.max_residual = resid;
      sol.iterations = total_inner;
      return sol;
    }
    prev_obj = obj;

    // infeasibility watch: residual refuses to fall while rho saturates
    if (resid < best_resid * 0.99) {
      best_resid = resid;
      stalled = 0;
    } else {
      ++stalled;
    }
    if (al.rho >= 1e8 && stalled >= 8 &&
        resid > std::max(100.0 * opts.tol_feas, 1e-9)) {
      sol.status = SolveStatus::kInfeasible;
      sol.x = x;
      sol.objective = obj;
      sol.max_residual = resid;
      sol.iterations = total_inner;
      return sol;
    }

    al.update_multipliers(x);
    if (resid > 0.25 * prev_resid && resid > opts.tol_feas)
      al.rho = std::min(al.rho * (resid > 10.0 * opts.tol_feas ? 5.0 : 2.0),
                        1e9);
    prev_resid = resid;
  }

  sol.status = SolveStatus::kMaxIter;
  sol.x = x;
  sol.objective = prob.objective.value(x);
  sol.max_residual = al.max_residual(x);
  sol.iterations = total_inner;
  return sol;
}

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kMaxIter: return "max_iter";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "?";
}

}  // namespace starnoma::convex
