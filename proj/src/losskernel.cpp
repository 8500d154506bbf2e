#include "neggen/losskernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "neggen/errors.hpp"
#include "neggen/rng.hpp"

namespace neggen {

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

}  // namespace

FocalResult focal_loss(double logit, bool target, const FocalParams& params) {
    const double alpha_t = target ? params.alpha : 1.0 - params.alpha;
    const double z = target ? logit : -logit;
    const double miss = sigmoid(-z);        // 1 - p_t
    const double nll = softplus(-z);        // -ln(p_t)
    const double weight = std::pow(miss, params.gamma);

    FocalResult out;
    out.loss = alpha_t * weight * nll;
    double dz = -alpha_t * weight * (params.gamma * sigmoid(z) * nll + miss);
    out.dlogit = target ? dz : -dz;
    return out;
}

double matching_cost(const Prediction& pred, const BoundingBox& gt_box,
                     const Eigen::VectorXd& target_row, const FocalParams& params,
                     const MatchWeights& weights) {
    const auto T = pred.logits.size();
    if (T != target_row.size()) {
        throw ValidationError("matching_cost: logit/target length mismatch");
    }
    double cls = 0;
    for (Eigen::Index j = 0; j < T; ++j) {
        cls += focal_loss(pred.logits[j], target_row[j] > 0.5, params).loss;
    }
    if (T > 0) cls /= static_cast<double>(T);
    double l1 = std::abs(pred.box.x1 - gt_box.x1) + std::abs(pred.box.y1 - gt_box.y1) +
                std::abs(pred.box.x2 - gt_box.x2) + std::abs(pred.box.y2 - gt_box.y2);
    double norm = weights.box_normalizer > 0 ? weights.box_normalizer : 1.0;
    return weights.w_cls * cls + weights.w_box * l1 / norm;
}

MatchResult hungarian_match(const Eigen::MatrixXd& cost) {
    const int n_rows = static_cast<int>(cost.rows());
    const int n_cols = static_cast<int>(cost.cols());
    MatchResult result;
    result.pred_to_region.assign(static_cast<size_t>(n_rows), -1);
    if (n_rows == 0 || n_cols == 0) return result;
    for (int i = 0; i < n_rows; ++i) {
        for (int j = 0; j < n_cols; ++j) {
            if (!std::isfinite(cost(i, j))) {
                throw ValidationError("hungarian_match: non-finite cost");
            }
        }
    }

    // zero-pad to square: every perfect matching uses the same number of
    // dummy cells, so padding shifts all totals by a constant
    const int n = std::max(n_rows, n_cols);
    auto at = [&](int i, int j) -> double {
        return (i < n_rows && j < n_cols) ? cost(i, j) : 0.0;
    };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<size_t>(n) + 1, 0);  // column -> row (1-based)
    std::vector<int> way(static_cast<size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
        std::vector<bool> used(static_cast<size_t>(n) + 1, false);
        do {
            used[static_cast<size_t>(j0)] = true;
            int i0 = match[static_cast<size_t>(j0)];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                double cur = at(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                             v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }

    for (int j = 1; j <= n_cols; ++j) {
        int i = match[static_cast<size_t>(j)];
        if (i >= 1 && i <= n_rows) {
            result.pred_to_region[static_cast<size_t>(i - 1)] = j - 1;
        }
    }
    // canonical total: sum real matched cells in row order
    result.total_cost = 0;
    for (int i = 0; i < n_rows; ++i) {
        int j = result.pred_to_region[static_cast<size_t>(i)];
        if (j >= 0) result.total_cost += cost(i, j);
    }
    return result;
}

LossResult grounding_loss(const std::vector<Prediction>& predictions,
                          const TrainingSample& sample, const FocalParams& params,
                          MatchWeights weights) {
    const int N = static_cast<int>(predictions.size());
    const int L = sample.matrix.rows;
    const int T = sample.matrix.cols;
    LossResult result;
    result.assignment.assign(static_cast<size_t>(N), -1);
    result.gradients = Eigen::MatrixXd::Zero(N, T);
    if (N == 0) return result;
    for (const auto& p : predictions) {
        if (p.logits.size() != T) {
            throw ValidationError("prediction logit length does not match sample T");
        }
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(L, T);
    for (const auto& [l, j] : sample.matrix.ones) A(l, j) = 1.0;

    if (weights.box_normalizer <= 0) {
        weights.box_normalizer =
            std::sqrt(sample.canvas_w * sample.canvas_w +
                      sample.canvas_h * sample.canvas_h);
        if (weights.box_normalizer <= 0) weights.box_normalizer = 1.0;
    }

    if (L > 0) {
        Eigen::MatrixXd cost(N, L);
        for (int i = 0; i < N; ++i) {
            for (int l = 0; l < L; ++l) {
                cost(i, l) =
                    matching_cost(predictions[static_cast<size_t>(i)],
                                  sample.regions[static_cast<size_t>(l)].box,
                                  A.row(l).transpose(), params, weights);
            }
        }
        result.assignment = hungarian_match(cost).pred_to_region;
    }

    const double scale = 1.0 / (static_cast<double>(N) * static_cast<double>(T));
    for (int i = 0; i < N; ++i) {
        int l = result.assignment[static_cast<size_t>(i)];
        for (int j = 0; j < T; ++j) {
            bool target = l >= 0 && A(l, j) > 0.5;
            FocalResult fl =
                focal_loss(predictions[static_cast<size_t>(i)].logits[j], target, params);
            result.loss += fl.loss * scale;
            result.gradients(i, j) = fl.dlogit * scale;
        }
    }
    return result;
}

std::vector<double> gradient_step_demo(const TrainingSample& sample, int steps,
                                       double lr, uint64_t seed,
                                       const FocalParams& params) {
    Rng rng(derive_seed(seed, "demo", sample.id));
    std::vector<Prediction> preds;
    for (const auto& r : sample.regions) {
        Prediction p;
        p.box = r.box;
        p.logits = Eigen::VectorXd::Zero(sample.matrix.cols);
        for (Eigen::Index j = 0; j < p.logits.size(); ++j) {
            p.logits[j] = rng.unit() - 0.5;
        }
        preds.push_back(std::move(p));
    }
    std::vector<double> trajectory;
    for (int step = 0; step <= steps; ++step) {
        LossResult res = grounding_loss(preds, sample, params);
        trajectory.push_back(res.loss);
        if (step == steps) break;
        for (size_t i = 0; i < preds.size(); ++i) {
            preds[i].logits -= lr * res.gradients.row(static_cast<Eigen::Index>(i)).transpose();
        }
    }
    return trajectory;
}

ParamVector ensemble_average(const ParamVector& a, const ParamVector& b) {
    if (a.manifest != b.manifest || a.values.size() != b.values.size()) {
        throw ValidationError("ensemble_average: parameter manifests differ");
    }
    ParamVector out;
    out.manifest = a.manifest;
    out.values = (a.values + b.values) / 2.0;
    return out;
}

}  // namespace neggen
