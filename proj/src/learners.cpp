#include "learner_common.hpp"

#include <charconv>
#include <sstream>

namespace adbench {

std::string_view learner_code(LearnerKind k) {
    switch (k) {
        case LearnerKind::SVM: return "svm";
        case LearnerKind::GBRT: return "gbrt";
        case LearnerKind::Logistic: return "logreg";
    }
    return "?";
}

std::string_view learner_label(LearnerKind k) {
    switch (k) {
        case LearnerKind::SVM: return "SVM";
        case LearnerKind::GBRT: return "Gradient Boosted Trees";
        case LearnerKind::Logistic: return "Logistic Regression";
    }
    return "?";
}

std::optional<LearnerKind> learner_from_code(std::string_view code) {
    for (auto k : kAllLearners) {
        if (learner_code(k) == code) return k;
    }
    return std::nullopt;
}

void validate_params(const LearnerParams& p) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw ValidationError(std::string(name) + " must be positive");
    };
    positive(p.svm_c, "svm_c");
    positive(p.svm_tolerance, "svm_tolerance");
    positive(p.gbrt_lr, "gbrt_lr");
    positive(p.gbrt_lambda, "gbrt_lambda");
    positive(p.logreg_l2, "logreg_l2");
    positive(p.logreg_tolerance, "logreg_tolerance");
    if (p.gbrt_min_child_weight < 0.0) throw ValidationError("gbrt_min_child_weight must be non-negative");
    if (p.svm_max_epochs < 1) throw ValidationError("svm_max_epochs must be positive");
    if (p.gbrt_max_depth < 1) throw ValidationError("gbrt_max_depth must be positive");
    if (p.gbrt_n_estimators < 1) throw ValidationError("gbrt_n_estimators must be positive");
    if (p.logreg_max_newton_steps < 1) throw ValidationError("logreg_max_newton_steps must be positive");
}

double LinearModel::decision(std::span<const double> x) const {
    return detail::dot(weights.data(), x.data(), weights.size()) + bias;
}

Model train(LearnerKind kind, const FeatureMatrix& x, std::span<const int> y, const LearnerParams& params) {
    switch (kind) {
        case LearnerKind::SVM: return train_svm(x, y, params);
        case LearnerKind::GBRT: return train_gbrt(x, y, params);
        case LearnerKind::Logistic: return train_logreg(x, y, params);
    }
    throw ValidationError("unknown learner kind");
}

std::vector<int> predict(const LinearModel& model, const FeatureMatrix& x) {
    if (x.dims != model.weights.size()) throw ValidationError("feature dimension does not match model");
    std::vector<int> out(x.rows);
    // SVM: sign with 0 -> positive. Logistic: sigmoid(z) >= 0.5 <=> z >= 0.
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = model.decision(x.row(r)) >= 0.0 ? 1 : 0;
    return out;
}

std::vector<int> predict(const BoostedEnsemble& model, const FeatureMatrix& x) {
    if (x.dims != model.dims) throw ValidationError("feature dimension does not match model");
    std::vector<int> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = model.margin(x.row(r)) >= 0.0 ? 1 : 0;
    return out;
}

std::vector<int> predict(const Model& model, const FeatureMatrix& x) {
    return std::visit([&](const auto& m) { return predict(m, x); }, model);
}

std::vector<double> predict_proba(const BoostedEnsemble& model, const FeatureMatrix& x) {
    if (x.dims != model.dims) throw ValidationError("feature dimension does not match model");
    std::vector<double> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = detail::sigmoid(model.margin(x.row(r)));
    return out;
}

// ---------------------------------------------------------------------------
// Text form
//
//   linear <svm|logistic> <dims>
//   bias <b>
//   weights <w_0> ... <w_{dims-1}>
//
//   gbrt <dims> <n_trees> <learning_rate> <base_score>
//   tree <n_nodes>
//   split <feature> <threshold> <left> <right>
//   leaf <weight>
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

double read_double(std::istringstream& in) {
    std::string tok;
    if (!(in >> tok)) throw ValidationError("model text: unexpected end");
    double v = 0;
    auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) throw ValidationError("model text: bad number " + tok);
    return v;
}

long long read_int(std::istringstream& in) {
    std::string tok;
    if (!(in >> tok)) throw ValidationError("model text: unexpected end");
    long long v = 0;
    auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) throw ValidationError("model text: bad integer " + tok);
    return v;
}

void expect(std::istringstream& in, std::string_view word) {
    std::string tok;
    if (!(in >> tok) || tok != word) throw ValidationError("model text: expected '" + std::string(word) + "'");
}

}  // namespace

std::string serialize_model(const Model& model) {
    std::string out;
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        out += "linear ";
        out += lin->kind == LinearKind::SVM ? "svm " : "logistic ";
        out += std::to_string(lin->weights.size()) + "\n";
        out += "bias " + fmt(lin->bias) + "\n";
        out += "weights";
        for (double w : lin->weights) out += " " + fmt(w);
        out += "\n";
        return out;
    }
    const auto& ens = std::get<BoostedEnsemble>(model);
    out += "gbrt " + std::to_string(ens.dims) + " " + std::to_string(ens.trees.size()) + " " + fmt(ens.learning_rate) +
           " " + fmt(ens.base_score) + "\n";
    for (const auto& tree : ens.trees) {
        out += "tree " + std::to_string(tree.size()) + "\n";
        for (const auto& n : tree) {
            if (n.is_leaf()) {
                out += "leaf " + fmt(n.weight) + "\n";
            } else {
                out += "split " + std::to_string(n.feature) + " " + fmt(n.threshold) + " " + std::to_string(n.left) +
                       " " + std::to_string(n.right) + "\n";
            }
        }
    }
    return out;
}

Model parse_model(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string head;
    if (!(in >> head)) throw ValidationError("model text: empty");
    if (head == "linear") {
        std::string kind;
        in >> kind;
        LinearModel m;
        if (kind == "svm") m.kind = LinearKind::SVM;
        else if (kind == "logistic") m.kind = LinearKind::Logistic;
        else throw ValidationError("model text: unknown linear kind " + kind);
        const auto dims = read_int(in);
        if (dims < 0) throw ValidationError("model text: negative dims");
        expect(in, "bias");
        m.bias = read_double(in);
        expect(in, "weights");
        m.weights.resize(static_cast<std::size_t>(dims));
        for (auto& w : m.weights) w = read_double(in);
        return m;
    }
    if (head != "gbrt") throw ValidationError("model text: unknown model " + head);
    BoostedEnsemble e;
    e.dims = static_cast<std::size_t>(read_int(in));
    const auto n_trees = read_int(in);
    e.learning_rate = read_double(in);
    e.base_score = read_double(in);
    for (long long t = 0; t < n_trees; ++t) {
        expect(in, "tree");
        const auto n_nodes = read_int(in);
        Tree tree;
        for (long long k = 0; k < n_nodes; ++k) {
            std::string kind;
            in >> kind;
            TreeNode node;
            if (kind == "leaf") {
                node.weight = read_double(in);
            } else if (kind == "split") {
                node.feature = static_cast<int>(read_int(in));
                node.threshold = read_double(in);
                node.left = static_cast<int>(read_int(in));
                node.right = static_cast<int>(read_int(in));
                if (node.left <= k || node.right <= k || node.left >= n_nodes || node.right >= n_nodes) {
                    throw ValidationError("model text: child index out of range");
                }
            } else {
                throw ValidationError("model text: unknown node kind " + kind);
            }
            tree.push_back(node);
        }
        e.trees.push_back(std::move(tree));
    }
    return e;
}

}  // namespace adbench
