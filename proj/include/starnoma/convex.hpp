#ifndef STARNOMA_CONVEX_HPP
#define STARNOMA_CONVEX_HPP

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace starnoma::convex {

using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

// Hermitian PSD matrix variable.
struct MatrixVar {
  int dim = 0;
};

struct ScalarVar {
  double lb = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  double init = 0.0;
};

struct Point {
  std::vector<MatC> mats;
  Eigen::VectorXd scalars;
};

// One matrix term of a linear expression: scale * q^H X q (rank-one
// coefficient) or Re tr(A X) (dense Hermitian coefficient).
struct MatTerm {
  int var = 0;
  double scale = 1.0;
  std::optional<VecC> rank1;
  std::optional<MatC> dense;

  double value(const Point& x) const;
  void add_grad(std::vector<MatC>& g, double w) const;
};

// sum of matrix terms + sum of scalar coefficients + constant,
// either == 0 or <= 0
struct AffineCon {
  std::vector<MatTerm> mats;
  std::vector<std::pair<int, double>> scalars;
  double constant = 0.0;
  bool equality = false;

  double value(const Point& x) const;
  void add_grad(const Point& x, double w, std::vector<MatC>& gm,
                Eigen::VectorXd& gs) const;
};

// s >= 1/(p * T(X)) with T a single linear matrix term, handled in the
// equivalent rotated-cone form so gradients stay bounded near T = 0.
struct ReciprocalCon {
  MatTerm term;
  double p = 1.0;
  int slack = 0;

  double value(const Point& x) const;
  void add_grad(const Point& x, double w, std::vector<MatC>& gm,
                Eigen::VectorXd& gs) const;
};

// Linear objective (maximized).
struct Objective {
  std::vector<MatTerm> mats;
  std::vector<std::pair<int, double>> scalars;

  double value(const Point& x) const;
};

struct Problem {
  std::vector<MatrixVar> mat_vars;
  std::vector<ScalarVar> scalar_vars;
  Objective objective;
  std::vector<AffineCon> affine;
  std::vector<ReciprocalCon> recips;
};

enum class SolveStatus { kOptimal, kMaxIter, kInfeasible };

struct MeritRow {
  int outer;
  int inner;
  double merit;
};

struct Solution {
  Point x;
  double objective = 0.0;
  SolveStatus status = SolveStatus::kMaxIter;
  double max_residual = 0.0;
  int iterations = 0;
  std::vector<MeritRow> merit_log;
};

struct SolveOptions {
  double tol_obj = 1e-5;
  double tol_feas = 1e-6;
  int max_iter = 5000;
  std::optional<Point> warm_start;
  bool keep_merit_log = false;
};

Solution solve(const Problem& prob, const SolveOptions& opts = {});

// Nearest Hermitian PSD matrix in Frobenius norm (eigenvalue clipping).
MatC psd_project(const MatC& m);

std::string status_name(SolveStatus s);

}  // namespace starnoma::convex

#endif  // STARNOMA_CONVEX_HPP
