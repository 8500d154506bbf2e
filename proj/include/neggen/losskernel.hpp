#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "neggen/assembly.hpp"
#include "neggen/types.hpp"

namespace neggen {

struct Prediction {
    BoundingBox box;
    Eigen::VectorXd logits;  // length T
};

struct FocalParams {
    double alpha = 0.25;
    double gamma = 2.0;
};

struct FocalResult {
    double loss = 0;
    double dlogit = 0;
};

// Per-token focal loss with its analytic gradient, computed through
// softplus/sigmoid identities so saturated logits neither overflow nor lose
// precision.
FocalResult focal_loss(double logit, bool target, const FocalParams& params = {});

struct MatchWeights {
    double w_cls = 1.0;
    double w_box = 5.0;
    double box_normalizer = 1.0;  // typically the canvas diagonal
};

// w_cls * mean-token focal loss against the target row
// + w_box * normalized L1 box distance.
double matching_cost(const Prediction& pred, const BoundingBox& gt_box,
                     const Eigen::VectorXd& target_row, const FocalParams& params,
                     const MatchWeights& weights);

struct MatchResult {
    std::vector<int> pred_to_region;  // -1 when unmatched
    double total_cost = 0;
};

// Minimum-total-cost injective assignment over min(N, L) pairs, O(n^3)
// potentials method on the zero-padded square matrix.
MatchResult hungarian_match(const Eigen::MatrixXd& cost);

struct LossResult {
    double loss = 0;
    Eigen::MatrixXd gradients;  // N x T, d(loss)/d(logit)
    std::vector<int> assignment;
};

// Matches predictions to regions, assigns each matched prediction its row of
// the sample's assignment matrix (all-zero targets otherwise), and averages
// per-token focal losses over N*T.
LossResult grounding_loss(const std::vector<Prediction>& predictions,
                          const TrainingSample& sample,
                          const FocalParams& params = {},
                          MatchWeights weights = {});

// Toy descent harness: per-region predictions with frozen boxes and free
// logits, stepped against the grounding loss.
std::vector<double> gradient_step_demo(const TrainingSample& sample, int steps,
                                       double lr, uint64_t seed,
                                       const FocalParams& params = {});

struct ParamVector {
    std::vector<std::pair<std::string, std::vector<int>>> manifest;
    Eigen::VectorXd values;
};

// Element-wise mean of two parameter vectors with identical manifests.
ParamVector ensemble_average(const ParamVector& a, const ParamVector& b);

}  // namespace neggen
