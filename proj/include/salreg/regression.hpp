#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "salreg/graph.hpp"

namespace salreg {

struct RegressionParams {
  double gamma_a = 1e-6;  // ambient (RKHS norm) weight, must be > 0
  double gamma_i = 1.0;   // graph-smoothness weight, >= 0
  double max_condition = 1e12;
};

/// Laplacian-regularized kernel regression over a superpixel graph.
///
/// Any subset of nodes may be labeled; seeds are given in the graph's node
/// order with every unlabeled entry exactly zero. The problem references
/// the graph, which must outlive it.
class RegressionProblem {
 public:
  RegressionProblem(const SuperpixelGraph& graph, std::vector<int> labeled, Eigen::VectorXd y,
                    RegressionParams params = {});

  const SuperpixelGraph& graph() const noexcept { return *graph_; }
  const std::vector<int>& labeled() const noexcept { return labeled_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  const RegressionParams& params() const noexcept { return params_; }
  int n() const noexcept { return graph_->n; }
  int l() const noexcept { return static_cast<int>(labeled_.size()); }

  /// Node order with the labeled nodes first (ascending), then the rest.
  const std::vector<int>& order() const noexcept { return order_; }
  /// 1 for labeled nodes, 0 otherwise, in graph order.
  const Eigen::VectorXd& label_mask() const noexcept { return mask_; }

 private:
  const SuperpixelGraph* graph_;
  std::vector<int> labeled_;
  std::vector<int> order_;
  Eigen::VectorXd y_;
  Eigen::VectorXd mask_;
  RegressionParams params_;
};

struct RegressionSolution {
  Eigen::VectorXd alpha;  // expansion coefficients, graph order
  Eigen::VectorXd g;      // fitted scores K * alpha
  double condition = 0;   // 1-norm condition estimate of the system matrix
};

/// Closed-form minimizer: alpha = (J K + gamma_a l I + gamma_i l / n^2 L K)^-1 y,
/// assembled in labeled-first order and solved by partial-pivot LU.
/// Throws NumericalError when the condition estimate exceeds params.max_condition.
RegressionSolution solve(const RegressionProblem& problem);

/// (1/l)||y - J K a||^2 + gamma_a a'Ka + gamma_i / n^2 a'KLKa
double objective(const RegressionProblem& problem, const Eigen::VectorXd& alpha);

Eigen::VectorXd objective_gradient(const RegressionProblem& problem, const Eigen::VectorXd& alpha);

/// g(x) = sum_i alpha_i K(x, x_i) for every query feature.
Eigen::VectorXd predict(const RegressionSolution& solution, const SuperpixelGraph& graph,
                        std::span<const LabColor> queries);

}  // namespace salreg
