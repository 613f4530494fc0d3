#pragma once

#include "pcg/boosting.hpp"
#include "pcg/forest.hpp"
#include "pcg/svm.hpp"

#include <memory>
#include <string>

namespace pcg {

// Soft-voting ensemble over fitted members; probability = arithmetic mean,
// label = argmax with ties resolved to class 0 (reject on the fence).
class EnsembleModel {
public:
    void add_svm(SvmModel m) { svm_ = std::make_shared<SvmModel>(std::move(m)); }
    void add_rf(RandomForest m) { rf_ = std::make_shared<RandomForest>(std::move(m)); }
    void add_gb(GradientBoosting m) { gb_ = std::make_shared<GradientBoosting>(std::move(m)); }

    std::size_t member_count() const;
    std::pair<double, double> predict_proba(const std::vector<double>& row) const;
    int predict_label(const std::vector<double>& row) const;

    const SvmModel* svm() const { return svm_.get(); }
    const RandomForest* rf() const { return rf_.get(); }
    const GradientBoosting* gb() const { return gb_.get(); }

private:
    std::shared_ptr<SvmModel> svm_;
    std::shared_ptr<RandomForest> rf_;
    std::shared_ptr<GradientBoosting> gb_;
};

// JSON (de)serialization for the tabular models; schema_version mandatory.
std::string ensemble_to_json(const EnsembleModel& model);
EnsembleModel ensemble_from_json(const std::string& text);

} // namespace pcg
