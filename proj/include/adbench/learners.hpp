#pragma once

#include "adbench/features.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace adbench {

enum class LearnerKind : std::uint8_t { SVM, GBRT, Logistic };

constexpr std::array<LearnerKind, 3> kAllLearners{LearnerKind::SVM, LearnerKind::GBRT, LearnerKind::Logistic};

std::string_view learner_code(LearnerKind k);  // "svm" / "gbrt" / "logreg"
std::string_view learner_label(LearnerKind k);
std::optional<LearnerKind> learner_from_code(std::string_view code);

struct LearnerParams {
    // Linear SVM, hinge loss, unregularized bias.
    double svm_c = 1.0;
    double svm_tolerance = 1e-3;  // max KKT violation
    int svm_max_epochs = 1000;    // one epoch = ceil(rows / 2) pair updates

    // Boosted trees, binary logistic objective.
    double gbrt_lr = 0.1;
    int gbrt_max_depth = 3;
    int gbrt_n_estimators = 100;
    double gbrt_lambda = 1.0;
    double gbrt_min_child_weight = 1.0;

    // L2-penalized logistic regression, unpenalized bias, unit sample weights.
    double logreg_l2 = 1.0;
    double logreg_tolerance = 1e-8;  // gradient infinity norm
    int logreg_max_newton_steps = 100;

    bool operator==(const LearnerParams&) const = default;
};

/// Throws ValidationError when a parameter is out of range.
void validate_params(const LearnerParams& params);

enum class LinearKind : std::uint8_t { SVM, Logistic };

struct LinearModel {
    LinearKind kind = LinearKind::SVM;
    std::vector<double> weights;
    double bias = 0.0;

    double decision(std::span<const double> x) const;
    bool operator==(const LinearModel&) const = default;
};

/// Flat binary tree; node 0 is the root. A split sends x[feature] < threshold
/// to `left`.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;  // leaf value before learning-rate scaling

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

using Tree = std::vector<TreeNode>;

int tree_depth(const Tree& tree);

struct BoostedEnsemble {
    std::vector<Tree> trees;
    double learning_rate = 0.1;
    double base_score = 0.0;  // prior log-odds
    std::size_t dims = 0;

    /// base_score + learning_rate * sum of leaf weights.
    double margin(std::span<const double> x) const;
    bool operator==(const BoostedEnsemble&) const = default;
};

using Model = std::variant<LinearModel, BoostedEnsemble>;

/// Optional training diagnostics.
struct TrainingTrace {
    std::vector<double> objective;  // SVM: dual objective per epoch; GBRT: log-loss per round; logreg: per Newton step
    int iterations = 0;
    bool converged = false;
};

// All trainers reorder rows canonically before fitting, so permuting the
// training rows yields bit-identical models. Single-class labels give a
// constant predictor for that class.

LinearModel train_svm(const FeatureMatrix& x, std::span<const int> y, const LearnerParams& params,
                      TrainingTrace* trace = nullptr);
BoostedEnsemble train_gbrt(const FeatureMatrix& x, std::span<const int> y, const LearnerParams& params,
                           TrainingTrace* trace = nullptr);
LinearModel train_logreg(const FeatureMatrix& x, std::span<const int> y, const LearnerParams& params,
                         TrainingTrace* trace = nullptr);

Model train(LearnerKind kind, const FeatureMatrix& x, std::span<const int> y, const LearnerParams& params);

/// SVM: decision >= 0 -> 1. Logistic and GBRT: probability >= 0.5 -> 1.
std::vector<int> predict(const Model& model, const FeatureMatrix& x);
std::vector<int> predict(const LinearModel& model, const FeatureMatrix& x);
std::vector<int> predict(const BoostedEnsemble& model, const FeatureMatrix& x);
std::vector<double> predict_proba(const BoostedEnsemble& model, const FeatureMatrix& x);

// Objectives, used by tests and diagnostics.

/// 1/2 |w|^2 + C * sum max(0, 1 - s_i (w.x_i + b)), s_i = 2 y_i - 1.
double svm_primal_objective(const LinearModel& model, const FeatureMatrix& x, std::span<const int> y, double c);

/// Negative log-likelihood + l2/2 |w|^2 (bias unpenalized).
double logreg_objective(std::span<const double> weights, double bias, const FeatureMatrix& x, std::span<const int> y,
                        double l2);
/// Gradient of logreg_objective; last element is the bias component.
std::vector<double> logreg_gradient(std::span<const double> weights, double bias, const FeatureMatrix& x,
                                    std::span<const int> y, double l2);

/// Mean binary log-loss of the ensemble on (x, y).
double log_loss(const BoostedEnsemble& model, const FeatureMatrix& x, std::span<const int> y);

// Text form for debugging and golden tests. Doubles use shortest
// round-trip formatting.
std::string serialize_model(const Model& model);
Model parse_model(std::string_view text);

}  // namespace adbench
