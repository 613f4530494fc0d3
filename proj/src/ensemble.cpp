#include "pcg/ensemble.hpp"
#include "pcg/error.hpp"

#include <json.hpp>

namespace pcg {

using nlohmann::json;

std::size_t EnsembleModel::member_count() const {
    return (svm_ ? 1u : 0u) + (rf_ ? 1u : 0u) + (gb_ ? 1u : 0u);
}

std::pair<double, double> EnsembleModel::predict_proba(const std::vector<double>& row) const {
    if (member_count() == 0) throw PcgError("EmptyData", "ensemble has no members");
    double p0 = 0.0, p1 = 0.0;
    auto add = [&](std::pair<double, double> p) {
        p0 += p.first;
        p1 += p.second;
    };
    if (svm_) add(svm_->predict_proba(row));
    if (rf_) add(rf_->predict_proba(row));
    if (gb_) add(gb_->predict_proba(row));
    const double n = static_cast<double>(member_count());
    return {p0 / n, p1 / n};
}

int EnsembleModel::predict_label(const std::vector<double>& row) const {
    const auto [p0, p1] = predict_proba(row);
    return p1 > p0 ? 1 : 0; // tie -> class 0
}

namespace {

json tree_to_json(const DecisionTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes())
        nodes.push_back({{"f", n.feature},
                         {"t", n.threshold},
                         {"l", n.left},
                         {"r", n.right},
                         {"v0", n.value0},
                         {"v1", n.value1}});
    return nodes;
}

DecisionTree tree_from_json(const json& j) {
    DecisionTree tree;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at("f").get<int>();
        node.threshold = n.at("t").get<double>();
        node.left = n.at("l").get<int>();
        node.right = n.at("r").get<int>();
        node.value0 = n.at("v0").get<double>();
        node.value1 = n.at("v1").get<double>();
        tree.nodes().push_back(node);
    }
    return tree;
}

} // namespace

std::string ensemble_to_json(const EnsembleModel& model) {
    json j;
    j["schema_version"] = 1;
    j["voting"] = "soft";
    if (model.svm()) {
        const auto s = model.svm()->state();
        j["svm"] = {{"kernel", s.params.kernel == Kernel::rbf ? "rbf" : "linear"},
                    {"C", s.params.C},
                    {"gamma", s.gamma},
                    {"support_vectors", s.support_vectors},
                    {"alpha_y", s.alpha_y},
                    {"bias", s.bias},
                    {"platt_a", s.platt_a},
                    {"platt_b", s.platt_b},
                    {"col_mean", s.col_mean},
                    {"col_std", s.col_std},
                    {"converged", s.converged}};
    }
    if (model.rf()) {
        json trees = json::array();
        for (const auto& t : model.rf()->trees()) trees.push_back(tree_to_json(t));
        j["rf"] = {{"trees", std::move(trees)}};
    }
    if (model.gb()) {
        json trees = json::array();
        for (const auto& t : model.gb()->trees()) trees.push_back(tree_to_json(t));
        j["gb"] = {{"trees", std::move(trees)},
                   {"initial_score", model.gb()->initial_score()},
                   {"learning_rate", model.gb()->learning_rate()}};
    }
    return j.dump();
}

EnsembleModel ensemble_from_json(const std::string& text) {
    json j = json::parse(text);
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw PcgError("SchemaMismatch", "unsupported ensemble schema version");
    EnsembleModel model;
    if (j.contains("svm")) {
        const auto& s = j["svm"];
        SvmModel::State st;
        st.params.kernel = s.at("kernel").get<std::string>() == "rbf" ? Kernel::rbf : Kernel::linear;
        st.params.C = s.at("C").get<double>();
        st.gamma = s.at("gamma").get<double>();
        st.support_vectors = s.at("support_vectors").get<std::vector<std::vector<double>>>();
        st.alpha_y = s.at("alpha_y").get<std::vector<double>>();
        st.bias = s.at("bias").get<double>();
        st.platt_a = s.at("platt_a").get<double>();
        st.platt_b = s.at("platt_b").get<double>();
        st.col_mean = s.at("col_mean").get<std::vector<double>>();
        st.col_std = s.at("col_std").get<std::vector<double>>();
        st.converged = s.at("converged").get<bool>();
        SvmModel m;
        m.restore(st);
        model.add_svm(std::move(m));
    }
    if (j.contains("rf")) {
        RandomForest rf;
        for (const auto& t : j["rf"]["trees"]) rf.trees().push_back(tree_from_json(t));
        model.add_rf(std::move(rf));
    }
    if (j.contains("gb")) {
        GradientBoosting gb;
        for (const auto& t : j["gb"]["trees"]) gb.trees().push_back(tree_from_json(t));
        gb.set_initial_score(j["gb"].at("initial_score").get<double>());
        gb.set_learning_rate(j["gb"].at("learning_rate").get<double>());
        model.add_gb(std::move(gb));
    }
    return model;
}

} // namespace pcg
