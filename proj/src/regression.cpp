#include "salreg/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "salreg/error.hpp"

namespace salreg {

RegressionProblem::RegressionProblem(const SuperpixelGraph& graph, std::vector<int> labeled,
                                     Eigen::VectorXd y, RegressionParams params)
    : graph_(&graph), labeled_(std::move(labeled)), y_(std::move(y)), params_(params) {
  const int n = graph.n;
  if (y_.size() != n) throw ShapeError("seed vector length differs from graph size");
  std::sort(labeled_.begin(), labeled_.end());
  if (std::adjacent_find(labeled_.begin(), labeled_.end()) != labeled_.end())
    throw std::invalid_argument("duplicate labeled index");
  if (labeled_.empty()) throw std::invalid_argument("at least one node must be labeled");
  if (labeled_.front() < 0 || labeled_.back() >= n)
    throw std::invalid_argument("labeled index out of range");
  if (!(params_.gamma_a > 0)) throw std::invalid_argument("gamma_a must be > 0");
  if (!(params_.gamma_i >= 0)) throw std::invalid_argument("gamma_i must be >= 0");

  mask_ = Eigen::VectorXd::Zero(n);
  for (int i : labeled_) mask_[i] = 1.0;
  for (int i = 0; i < n; ++i) {
    if (!(std::abs(y_[i]) <= 1.0)) throw std::invalid_argument("seed value outside [-1,1]");
    if (mask_[i] == 0.0 && y_[i] != 0.0)
      throw std::invalid_argument("unlabeled seed entries must be exactly 0");
  }
  order_ = labeled_;
  for (int i = 0; i < n; ++i)
    if (mask_[i] == 0.0) order_.push_back(i);
}

RegressionSolution solve(const RegressionProblem& problem) {
  const SuperpixelGraph& g = problem.graph();
  const int n = problem.n();
  const int l = problem.l();
  const auto& order = problem.order();
  const RegressionParams& p = problem.params();

  Eigen::MatrixXd k(n, n), lap(n, n);
  Eigen::VectorXd y(n);
  for (int r = 0; r < n; ++r) {
    y[r] = problem.y()[order[r]];
    for (int c = 0; c < n; ++c) {
      k(r, c) = g.k(order[r], order[c]);
      lap(r, c) = g.l(order[r], order[c]);
    }
  }

  // J K keeps the first l rows of K.
  Eigen::MatrixXd a = (p.gamma_i * l / (static_cast<double>(n) * n)) * (lap * k);
  a.topRows(l) += k.topRows(l);
  a.diagonal().array() += p.gamma_a * l;

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rcond = lu.rcond();
  const double condition = rcond > 0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(condition <= p.max_condition))
    throw NumericalError("regression system is singular or ill-conditioned", condition);

  const Eigen::VectorXd alpha_perm = lu.solve(y);
  RegressionSolution s;
  s.alpha.resize(n);
  for (int r = 0; r < n; ++r) s.alpha[order[r]] = alpha_perm[r];
  if (!s.alpha.allFinite()) throw NumericalError("regression produced non-finite coefficients", condition);
  s.g = g.k * s.alpha;
  s.condition = condition;
  return s;
}

double objective(const RegressionProblem& problem, const Eigen::VectorXd& alpha) {
  const SuperpixelGraph& g = problem.graph();
  const double n = problem.n();
  const Eigen::VectorXd ka = g.k * alpha;
  const Eigen::VectorXd resid = problem.y() - problem.label_mask().cwiseProduct(ka);
  return resid.squaredNorm() / problem.l() + problem.params().gamma_a * alpha.dot(ka) +
         problem.params().gamma_i / (n * n) * ka.dot(g.l * ka);
}

Eigen::VectorXd objective_gradient(const RegressionProblem& problem, const Eigen::VectorXd& alpha) {
  const SuperpixelGraph& g = problem.graph();
  const double n = problem.n();
  const Eigen::VectorXd ka = g.k * alpha;
  const Eigen::VectorXd fit = problem.label_mask().cwiseProduct(
      problem.label_mask().cwiseProduct(ka) - problem.y());
  return g.k * ((2.0 / problem.l()) * fit + 2.0 * problem.params().gamma_a * alpha +
                (2.0 * problem.params().gamma_i / (n * n)) * (g.l * ka));
}

Eigen::VectorXd predict(const RegressionSolution& solution, const SuperpixelGraph& graph,
                        std::span<const LabColor> queries) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(queries.size()));
  for (std::size_t q = 0; q < queries.size(); ++q) {
    double s = 0;
    for (int i = 0; i < graph.n; ++i)
      s += solution.alpha[i] * rbf_kernel(queries[q], graph.features[i], graph.rho);
    out[static_cast<Eigen::Index>(q)] = s;
  }
  return out;
}

}  // namespace salreg
