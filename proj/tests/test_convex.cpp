#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <starnoma/convex.hpp>
#include <starnoma/rng.hpp>

using namespace starnoma;
using namespace starnoma::convex;

namespace {

MatC random_hermitian(int n, RandomStream& rng) {
  MatC a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a(i, j) = std::complex<double>(rng.normal(), rng.normal());
  return 0.5 * (a + a.adjoint());
}

MatTerm trace_term(int var, int dim, double scale = 1.0) {
  MatTerm t;
  t.var = var;
  t.scale = scale;
  t.dense = MatC::Identity(dim, dim);
  return t;
}

}  // namespace

TEST_CASE("psd_project leaves PSD matrices unchanged") {
  RandomStream rng(7);
  MatC a = random_hermitian(4, rng);
  MatC psd = a * a.adjoint();
  MatC p = psd_project(psd);
  CHECK((p - psd).norm() < 1e-12 * psd.norm());
}

TEST_CASE("psd_project clips negative eigenvalues") {
  MatC m = MatC::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  MatC p = psd_project(m);
  CHECK(p(0, 0).real() == doctest::Approx(1.0));
  CHECK(std::abs(p(1, 1)) < 1e-14);
  CHECK(std::abs(p(0, 1)) < 1e-14);
}

TEST_CASE("psd_project is the Frobenius projection") {
  RandomStream rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    MatC m = random_hermitian(5, rng);
    MatC p = psd_project(m);
    // oracle: clip the spectrum with a fresh eigendecomposition
    Eigen::SelfAdjointEigenSolver<MatC> eig(m);
    MatC oracle = eig.eigenvectors() *
                  eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
                  eig.eigenvectors().adjoint();
    CHECK((p - oracle).norm() < 1e-10);
    Eigen::SelfAdjointEigenSolver<MatC> check(p);
    CHECK(check.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("solve: maximize -tr(W) subject to tr(W) >= 1") {
  Problem prob;
  prob.mat_vars.push_back({2});
  prob.objective.mats.push_back(trace_term(0, 2, -1.0));
  AffineCon c;  // 1 - tr(W) <= 0
  c.mats.push_back(trace_term(0, 2, -1.0));
  c.constant = 1.0;
  prob.affine.push_back(c);

  Solution sol = solve(prob);
  CHECK(sol.status == SolveStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(sol.x.mats[0].trace().real() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("solve: maximize tr(AW) subject to tr(W) <= P picks the top eigenpair") {
  RandomStream rng(3);
  const double p_budget = 2.5;
  MatC a = random_hermitian(3, rng);
  Eigen::SelfAdjointEigenSolver<MatC> eig(a);
  double lmax = eig.eigenvalues()(2);

  Problem prob;
  prob.mat_vars.push_back({3});
  MatTerm obj;
  obj.var = 0;
  obj.dense = a;
  prob.objective.mats.push_back(obj);
  AffineCon c;  // tr(W) - P <= 0
  c.mats.push_back(trace_term(0, 3));
  c.constant = -p_budget;
  prob.affine.push_back(c);

  Solution sol = solve(prob);
  CHECK(sol.status == SolveStatus::kOptimal);
  CHECK(sol.objective ==
        doctest::Approx(p_budget * lmax).epsilon(1e-4));
  // the maximizer concentrates on the top eigenvector
  VecC v = eig.eigenvectors().col(2);
  double aligned = std::real(v.dot(sol.x.mats[0] * v));
  CHECK(aligned == doctest::Approx(p_budget).epsilon(1e-3));
}

TEST_CASE("solve: contradictory trace bounds are reported infeasible") {
  Problem prob;
  prob.mat_vars.push_back({2});
  prob.objective.mats.push_back(trace_term(0, 2, -1.0));
  AffineCon hi;  // tr(W) - 1 <= 0
  hi.mats.push_back(trace_term(0, 2));
  hi.constant = -1.0;
  prob.affine.push_back(hi);
  AffineCon lo;  // 2 - tr(W) <= 0
  lo.mats.push_back(trace_term(0, 2, -1.0));
  lo.constant = 2.0;
  prob.affine.push_back(lo);

  Solution sol = solve(prob);
  CHECK(sol.status == SolveStatus::kInfeasible);
}

TEST_CASE("solve: feasible solutions respect declared constraints") {
  RandomStream rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    MatC a = random_hermitian(3, rng);
    Problem prob;
    prob.mat_vars.push_back({3});
    ScalarVar s;
    s.lb = 0.0;
    s.ub = 4.0;
    prob.scalar_vars.push_back(s);
    MatTerm obj;
    obj.var = 0;
    obj.dense = a;
    prob.objective.mats.push_back(obj);
    prob.objective.scalars.push_back({0, 1.0});
    AffineCon c;  // tr(W) + s <= 3
    c.mats.push_back(trace_term(0, 3));
    c.scalars.push_back({0, 1.0});
    c.constant = -3.0;
    prob.affine.push_back(c);

    Solution sol = solve(prob);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    double lhs = sol.x.mats[0].trace().real() + sol.x.scalars(0);
    CHECK(lhs <= 3.0 + 1e-6);
    Eigen::SelfAdjointEigenSolver<MatC> eig(sol.x.mats[0]);
    CHECK(eig.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("solve: reciprocal constraint 1/(p*T) <= s binds") {
  // maximize -s subject to s >= 1/tr(W), tr(W) <= 4: optimum s = 1/4
  Problem prob;
  prob.mat_vars.push_back({2});
  ScalarVar s;
  s.lb = 1e-9;
  s.init = 1.0;
  prob.scalar_vars.push_back(s);
  prob.objective.scalars.push_back({0, -1.0});
  ReciprocalCon rc;
  rc.term = trace_term(0, 2);
  rc.p = 1.0;
  rc.slack = 0;
  prob.recips.push_back(rc);
  AffineCon cap;
  cap.mats.push_back(trace_term(0, 2));
  cap.constant = -4.0;
  prob.affine.push_back(cap);

  Solution sol = solve(prob);
  CHECK(sol.status == SolveStatus::kOptimal);
  CHECK(sol.x.scalars(0) == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("merit log is non-increasing within each outer phase") {
  RandomStream rng(5);
  MatC a = random_hermitian(3, rng);
  Problem prob;
  prob.mat_vars.push_back({3});
  MatTerm obj;
  obj.var = 0;
  obj.dense = a;
  prob.objective.mats.push_back(obj);
  AffineCon c;
  c.mats.push_back(trace_term(0, 3));
  c.constant = -1.0;
  prob.affine.push_back(c);

  SolveOptions opts;
  opts.keep_merit_log = true;
  Solution sol = solve(prob, opts);
  REQUIRE(sol.merit_log.size() > 1);
  for (size_t i = 1; i < sol.merit_log.size(); ++i) {
    if (sol.merit_log[i].outer != sol.merit_log[i - 1].outer) continue;
    CHECK(sol.merit_log[i].merit <=
          sol.merit_log[i - 1].merit + 1e-9 * (1.0 + std::abs(sol.merit_log[i - 1].merit)));
  }
}
