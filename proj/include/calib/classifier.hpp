#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "calib/dataset.hpp"
#include "calib/error.hpp"
#include "calib/naive_bayes.hpp"
#include "calib/random_forest.hpp"

namespace calib {

enum class ClassifierKind { naive_bayes, random_forest };

inline std::string to_string(ClassifierKind kind) {
    return kind == ClassifierKind::naive_bayes ? "nb" : "rf";
}

inline ClassifierKind classifier_kind_from_string(const std::string& s) {
    if (s == "nb" || s == "naive_bayes") return ClassifierKind::naive_bayes;
    if (s == "rf" || s == "random_forest") return ClassifierKind::random_forest;
    throw ConfigError("unknown classifier '" + s + "' (expected nb or rf)");
}

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::naive_bayes;
    std::size_t rf_ntree = 500;
    std::size_t rf_mtry = 0;  // 0 = auto (tuned by the harness)
    std::size_t rf_min_node = 1;
    std::uint64_t seed = 0;
};

struct TrainedClassifier {
    std::variant<NaiveBayesModel, ForestModel> model;

    std::size_t n_features() const {
        if (const auto* nb = std::get_if<NaiveBayesModel>(&model))
            return nb->n_features();
        return std::get<ForestModel>(model).n_features;
    }
};

inline ForestSpec forest_spec(const ClassifierSpec& spec) {
    return ForestSpec{spec.rf_ntree, spec.rf_mtry, spec.rf_min_node, spec.seed};
}

/// Fits the classifier named by the spec; OOB scores come along for free
/// with a random forest.
inline std::pair<TrainedClassifier, std::optional<OobScores>> fit_classifier(
    const Dataset& ds, const ClassifierSpec& spec) {
    if (spec.kind == ClassifierKind::naive_bayes)
        return {TrainedClassifier{fit_naive_bayes(ds)}, std::nullopt};
    auto [forest, oob] = fit_random_forest(ds, forest_spec(spec));
    return {TrainedClassifier{std::move(forest)}, std::move(oob)};
}

/// Positive-class score in [0,1]: NB posterior or RF vote fraction.
inline double predict_score(const TrainedClassifier& clf,
                            std::span<const double> x) {
    if (x.size() != clf.n_features())
        throw Error("predict_score: feature count mismatch");
    if (const auto* nb = std::get_if<NaiveBayesModel>(&clf.model))
        return nb->score(x);
    return std::get<ForestModel>(clf.model).score(x);
}

inline std::vector<double> predict_scores(const TrainedClassifier& clf,
                                          const Dataset& ds) {
    std::vector<double> s;
    s.reserve(ds.n_samples());
    for (std::size_t i = 0; i < ds.n_samples(); ++i)
        s.push_back(predict_score(clf, ds.row(i)));
    return s;
}

}  // namespace calib
