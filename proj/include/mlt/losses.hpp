#ifndef MLT_LOSSES_HPP_
#define MLT_LOSSES_HPP_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mlt/dataset.hpp"

namespace mlt {

// All losses consume RAW scores (one shared model head); BCE applies the
// sigmoid internally through softplus identities so values and gradients
// stay finite for score magnitudes far beyond the exp() overflow range.
enum class LossKind { kBce, kWarp, kLsep, kWlsep };

LossKind loss_kind_from_string(const std::string& name);
std::string to_string(LossKind kind);

struct LossResult {
  double value = 0.0;
  Eigen::VectorXd gradient;  // d value / d score, length C
};

// 1 + number of strictly greater scores; ties share the best rank.
int rank_of(const Eigen::VectorXd& scores, int index);

// Harmonic number H_r = sum_{k=1..r} 1/k.
double rank_weight(int rank);

// Mean over classes of -w_i [y_i log p_i + (1-y_i) log(1-p_i)], p = sigmoid(x).
LossResult bce_loss(const Eigen::VectorXd& scores, const std::vector<int>& labels,
                    const ClassWeights& weights);

// (1/|Y|) sum_{i in Y} w_i W(R(x_i)) sum_{j not in Y} max(0, 1 + x_j - x_i).
// The rank weight is a constant of the forward pass; the hinge subgradient
// at the kink is 0. Requires at least one negative class.
LossResult warp_loss(const Eigen::VectorXd& scores, const std::vector<int>& labels,
                     const ClassWeights& weights);

// log(1 + sum_{i in Y, j not in Y} e^{x_j - x_i}), shifted log-sum-exp.
LossResult lsep_loss(const Eigen::VectorXd& scores, const std::vector<int>& labels);

// (1/|Y|) sum_{i in Y} w_i log(1 + sum_{j not in Y} e^{x_j - x_i}).
// Reduces exactly to lsep_loss when |Y| = 1 and w = 1.
LossResult wlsep_loss(const Eigen::VectorXd& scores, const std::vector<int>& labels,
                      const ClassWeights& weights);

LossResult compute_loss(LossKind kind, const Eigen::VectorXd& scores,
                        const std::vector<int>& labels, const ClassWeights& weights);

}  // namespace mlt

#endif  // MLT_LOSSES_HPP_
