#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "neggen/losskernel.hpp"
#include "neggen/rng.hpp"

using namespace neggen;

namespace {

// exhaustive-permutation oracle for min-cost assignment of min(N, L) pairs
double brute_force_min_cost(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const int l = static_cast<int>(cost.cols());
    bool transpose = n > l;
    Eigen::MatrixXd m = cost;
    if (transpose) m = cost.transpose().eval();
    const int rows = static_cast<int>(m.rows());
    const int cols = static_cast<int>(m.cols());
    std::vector<int> perm(static_cast<size_t>(cols));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0;
        for (int i = 0; i < rows; ++i) total += m(i, perm[static_cast<size_t>(i)]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

TrainingSample two_region_sample() {
    TrainingSample s;
    s.id = "fixture";
    s.canvas_w = 100;
    s.canvas_h = 100;
    s.text = "a dog by a cat";
    s.regions = {{{10, 10, 30, 30}, {2, 5}, 0}, {{50, 50, 80, 80}, {11, 14}, 0}};
    s.matrix.rows = 2;
    s.matrix.cols = 5;  // a dog by a cat
    s.matrix.ones = {{0, 1}, {1, 4}};
    return s;
}

}  // namespace

TEST_CASE("focal loss closed forms") {
    FocalParams params{0.25, 2.0};
    // p_t = 0.5: loss = 0.25 * 0.25 * ln 2
    double expected = 0.25 * 0.25 * std::log(2.0);
    CHECK(std::abs(focal_loss(0.0, true, params).loss - expected) < 1e-12);

    // gamma = 0, alpha = 0.5 reduces to half the binary cross-entropy
    FocalParams bce_like{0.5, 0.0};
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        double logit = -6 + rng.unit() * 12;
        bool target = rng.below(2) == 1;
        double p = 1.0 / (1.0 + std::exp(-logit));
        double p_t = target ? p : 1.0 - p;
        double bce = -std::log(p_t);
        CHECK(focal_loss(logit, target, bce_like).loss ==
              doctest::Approx(0.5 * bce).epsilon(1e-9));
    }
}

TEST_CASE("focal loss gradient matches central finite differences") {
    Rng rng(99);
    FocalParams params{0.25, 2.0};
    int checked = 0;
    for (int i = 0; i < 120; ++i) {
        double logit = -8 + rng.unit() * 16;
        bool target = rng.below(2) == 1;
        const double h = 1e-6 * std::max(1.0, std::abs(logit));
        double up = focal_loss(logit + h, target, params).loss;
        double down = focal_loss(logit - h, target, params).loss;
        double fd = (up - down) / (2 * h);
        double analytic = focal_loss(logit, target, params).dlogit;
        double denom = std::max(std::abs(analytic), 1e-12);
        CHECK(std::abs(analytic - fd) / denom < 1e-6);
        ++checked;
    }
    CHECK(checked >= 100);
}

TEST_CASE("focal loss saturates to zero and stays finite") {
    FocalParams params{0.25, 2.0};
    CHECK(focal_loss(40.0, true, params).loss < 1e-12);
    CHECK(std::isfinite(focal_loss(-500.0, true, params).loss));
    CHECK(std::isfinite(focal_loss(500.0, false, params).loss));
}

TEST_CASE("monotone signal: gradient signs match the target") {
    Rng rng(7);
    FocalParams params{0.25, 2.0};
    for (int i = 0; i < 100; ++i) {
        double logit = -6 + rng.unit() * 12;
        CHECK(focal_loss(logit, true, params).dlogit < 0.0);
        CHECK(focal_loss(logit, false, params).dlogit > 0.0);
    }
}

TEST_CASE("matching_cost closed form at indifferent logits") {
    FocalParams params{0.25, 2.0};
    MatchWeights weights{1.0, 0.0, 1.0};
    const int T = 8;
    const int k = 3;  // ones in the target row
    Prediction pred;
    pred.box = {0, 0, 10, 10};
    pred.logits = Eigen::VectorXd::Zero(T);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(T);
    for (int j = 0; j < k; ++j) row[j] = 1.0;

    double fl_pos = 0.25 * 0.25 * std::log(2.0);
    double fl_neg = 0.75 * 0.25 * std::log(2.0);
    double expected = (k * fl_pos + (T - k) * fl_neg) / T;
    CHECK(matching_cost(pred, {0, 0, 10, 10}, row, params, weights) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("matching_cost is symmetric for identical regions") {
    FocalParams params;
    MatchWeights weights{1.0, 5.0, std::sqrt(2.0) * 100};
    Prediction pred;
    pred.box = {5, 5, 20, 20};
    pred.logits = Eigen::VectorXd::Constant(4, 0.3);
    Eigen::VectorXd row(4);
    row << 1, 0, 0, 1;
    double a = matching_cost(pred, {10, 10, 30, 30}, row, params, weights);
    double b = matching_cost(pred, {10, 10, 30, 30}, row, params, weights);
    CHECK(a == b);
}

TEST_CASE("matching cost approaches the floor for saturated perfect predictions") {
    FocalParams params;
    MatchWeights weights{1.0, 5.0, 100.0};
    Eigen::VectorXd row(4);
    row << 1, 0, 1, 0;
    Prediction pred;
    pred.box = {10, 10, 30, 30};
    pred.logits = Eigen::VectorXd(4);
    pred.logits << 40, -40, 40, -40;
    CHECK(matching_cost(pred, {10, 10, 30, 30}, row, params, weights) < 1e-12);
}

TEST_CASE("hungarian_match basics") {
    Eigen::MatrixXd cost(2, 2);
    cost << 1, 2, 2, 1;
    MatchResult r = hungarian_match(cost);
    CHECK(r.pred_to_region == std::vector<int>{0, 1});
    CHECK(r.total_cost == doctest::Approx(2.0));

    Eigen::MatrixXd single(1, 1);
    single << 5;
    MatchResult s = hungarian_match(single);
    CHECK(s.pred_to_region == std::vector<int>{0});
    CHECK(s.total_cost == doctest::Approx(5.0));
}

TEST_CASE("hungarian_match equals the brute-force oracle on 200 random matrices") {
    Rng rng(1234);
    for (int t = 0; t < 200; ++t) {
        int n = 1 + static_cast<int>(rng.below(6));
        int l = 1 + static_cast<int>(rng.below(6));
        Eigen::MatrixXd cost(n, l);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < l; ++j) {
                // dyadic grid keeps every sum exact, so totals compare with ==
                cost(i, j) = static_cast<double>(rng.below(256)) / 16.0;
            }
        }
        MatchResult r = hungarian_match(cost);
        int matched = 0;
        std::vector<bool> used(static_cast<size_t>(l), false);
        for (int i = 0; i < n; ++i) {
            int j = r.pred_to_region[static_cast<size_t>(i)];
            if (j >= 0) {
                ++matched;
                CHECK_FALSE(used[static_cast<size_t>(j)]);  // injective
                used[static_cast<size_t>(j)] = true;
            }
        }
        CHECK(matched == std::min(n, l));
        CHECK(r.total_cost == brute_force_min_cost(cost));
    }
}

TEST_CASE("grounding_loss basics and target contract") {
    TrainingSample sample = two_region_sample();
    FocalParams params;

    SUBCASE("zero predictions cost nothing") {
        LossResult r = grounding_loss({}, sample, params);
        CHECK(r.loss == 0.0);
        CHECK(r.assignment.empty());
    }
    SUBCASE("saturated perfect predictions reach the floor") {
        std::vector<Prediction> preds;
        for (int l = 0; l < 2; ++l) {
            Prediction p;
            p.box = sample.regions[static_cast<size_t>(l)].box;
            p.logits = Eigen::VectorXd::Constant(5, -40.0);
            for (auto [row, col] : sample.matrix.ones) {
                if (row == l) p.logits[col] = 40.0;
            }
            preds.push_back(std::move(p));
        }
        LossResult r = grounding_loss(preds, sample, params);
        CHECK(r.loss < 1e-12);
        CHECK(r.assignment == std::vector<int>{0, 1});
    }
    SUBCASE("exactly min(N, L) predictions carry a matrix row") {
        std::vector<Prediction> preds(4);
        Rng rng(5);
        for (auto& p : preds) {
            p.box = {rng.unit() * 50, rng.unit() * 50, 60 + rng.unit() * 30,
                     60 + rng.unit() * 30};
            p.logits = Eigen::VectorXd::Zero(5);
            for (int j = 0; j < 5; ++j) p.logits[j] = rng.unit() - 0.5;
        }
        LossResult r = grounding_loss(preds, sample, params);
        int matched = 0;
        for (int a : r.assignment) matched += (a >= 0);
        CHECK(matched == 2);
    }
    SUBCASE("dimension mismatch is an error") {
        Prediction p;
        p.box = {0, 0, 1, 1};
        p.logits = Eigen::VectorXd::Zero(3);
        CHECK_THROWS_AS(grounding_loss({p}, sample, params), ValidationError);
    }
}

TEST_CASE("loss is invariant to prediction and region order") {
    Rng rng(42);
    TrainingSample sample = two_region_sample();
    std::vector<Prediction> preds(3);
    for (auto& p : preds) {
        double x = rng.unit() * 40, y = rng.unit() * 40;
        p.box = {x, y, x + 10 + rng.unit() * 40, y + 10 + rng.unit() * 40};
        p.logits = Eigen::VectorXd::Zero(5);
        for (int j = 0; j < 5; ++j) p.logits[j] = -2 + 4 * rng.unit();
    }
    double base = grounding_loss(preds, sample).loss;

    std::vector<Prediction> reversed(preds.rbegin(), preds.rend());
    CHECK(grounding_loss(reversed, sample).loss == doctest::Approx(base).epsilon(1e-12));

    TrainingSample region_swapped = sample;
    std::swap(region_swapped.regions[0], region_swapped.regions[1]);
    region_swapped.matrix.ones = {{1, 1}, {0, 4}};
    CHECK(grounding_loss(preds, region_swapped).loss ==
          doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("appending pure-negative columns leaves the original signal intact") {
    FocalParams params;
    TrainingSample sample = two_region_sample();
    std::vector<Prediction> preds(2);
    Rng rng(8);
    for (size_t i = 0; i < preds.size(); ++i) {
        preds[i].box = sample.regions[i].box;
        preds[i].logits = Eigen::VectorXd::Zero(5);
        for (int j = 0; j < 5; ++j) preds[i].logits[j] = -1 + 2 * rng.unit();
    }
    double base_sum = grounding_loss(preds, sample, params).loss * 2 * 5;

    // widen T by three all-zero-target columns; keep new logits hard negative
    TrainingSample widened = sample;
    widened.matrix.cols = 8;
    widened.text += ". x y z";
    std::vector<Prediction> wide_preds = preds;
    for (auto& p : wide_preds) {
        Eigen::VectorXd logits = Eigen::VectorXd::Constant(8, -40.0);
        logits.head(5) = p.logits;
        p.logits = logits;
    }
    double widened_sum = grounding_loss(wide_preds, widened, params).loss * 2 * 8;
    CHECK(std::abs(widened_sum - base_sum) < 1e-9);
}

TEST_CASE("gradient sign flips with the assigned target bit") {
    TrainingSample sample = two_region_sample();
    std::vector<Prediction> preds(2);
    Rng rng(15);
    for (size_t i = 0; i < preds.size(); ++i) {
        preds[i].box = sample.regions[i].box;
        preds[i].logits = Eigen::VectorXd::Zero(5);
        for (int j = 0; j < 5; ++j) preds[i].logits[j] = -1 + 2 * rng.unit();
    }
    LossResult r = grounding_loss(preds, sample);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 5);
    for (auto [l, j] : sample.matrix.ones) A(l, j) = 1;
    for (int i = 0; i < 2; ++i) {
        int l = r.assignment[static_cast<size_t>(i)];
        REQUIRE(l >= 0);
        for (int j = 0; j < 5; ++j) {
            if (A(l, j) > 0.5) {
                CHECK(r.gradients(i, j) < 0.0);
            } else {
                CHECK(r.gradients(i, j) > 0.0);
            }
        }
    }
}

TEST_CASE("gradient_step_demo trajectories") {
    TrainingSample sample = two_region_sample();
    SUBCASE("steps=0 records only the initial loss") {
        auto trajectory = gradient_step_demo(sample, 0, 1.0, 1);
        CHECK(trajectory.size() == 1);
    }
    SUBCASE("lr=0 keeps the loss constant") {
        auto trajectory = gradient_step_demo(sample, 10, 0.0, 1);
        REQUIRE(trajectory.size() == 11);
        for (double v : trajectory) CHECK(v == doctest::Approx(trajectory[0]));
    }
    SUBCASE("50 steps decrease the smoothed loss") {
        auto trajectory = gradient_step_demo(sample, 50, 25.0, 7);
        REQUIRE(trajectory.size() == 51);
        auto window = [&](size_t at) {
            double sum = 0;
            for (size_t i = at; i < at + 5; ++i) sum += trajectory[i];
            return sum / 5;
        };
        double prev = window(0);
        for (size_t at = 5; at + 5 <= trajectory.size(); at += 5) {
            double cur = window(at);
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
        CHECK(trajectory.back() < trajectory.front());
    }
}

TEST_CASE("ensemble_average") {
    ParamVector a;
    a.manifest = {{"w", {2, 2}}, {"b", {2}}};
    a.values = Eigen::VectorXd(6);
    a.values << 1, 2, 3, 4, 5, 6;
    ParamVector b = a;
    b.values << 3, 2, 1, 0, -1, -2;

    SUBCASE("identity") {
        ParamVector avg = ensemble_average(a, a);
        CHECK((avg.values - a.values).norm() == 0.0);
    }
    SUBCASE("zero vector halves the other") {
        ParamVector zero = a;
        zero.values.setZero();
        ParamVector avg = ensemble_average(zero, b);
        CHECK((avg.values - b.values / 2).norm() == 0.0);
    }
    SUBCASE("commutative") {
        ParamVector ab = ensemble_average(a, b);
        ParamVector ba = ensemble_average(b, a);
        CHECK((ab.values - ba.values).norm() == 0.0);
    }
    SUBCASE("manifest mismatch rejected") {
        ParamVector other = b;
        other.manifest = {{"w", {4}}, {"b", {2}}};
        CHECK_THROWS_AS(ensemble_average(a, other), ValidationError);
    }
}
