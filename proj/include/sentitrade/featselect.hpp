#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sentitrade/ingest.hpp"

namespace sentitrade {

struct VifStep {
    std::string name;
    double vif = 0;
};

struct VifReport {
    std::vector<VifStep> trace;  // removal order
    std::vector<std::string> survivors;
    double cutoff = 0;

    std::string to_text() const;
    nlohmann::json to_json() const;
    static VifReport from_json(const nlohmann::json& j);
};

namespace featselect {

/// R^2 above this counts as perfect collinearity and reports +inf.
inline constexpr double kCollinearR2 = 1 - 1e-12;

/// VIF of each column regressed on all others plus an intercept.
std::vector<double> compute_vif(const std::vector<std::vector<double>>& columns);
/// Same, over the continuous columns of `matrix` only.
std::map<std::string, double> compute_vif(const FeatureMatrix& matrix);

/// Drops the highest-VIF continuous column until every survivor is at or
/// below `cutoff`. Equal maxima go to the earliest column.
VifReport eliminate_by_vif(const FeatureMatrix& matrix, double cutoff);

}  // namespace featselect
}  // namespace sentitrade
