#include "sentitrade/featselect.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "sentitrade/error.hpp"
#include "sentitrade/util.hpp"

namespace sentitrade {

std::string VifReport::to_text() const {
    std::ostringstream out;
    out << "cutoff," << format_double(cutoff) << "\n";
    out << "step,feature,vif\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << i + 1 << ',' << trace[i].name << ',' << (std::isinf(trace[i].vif) ? "inf" : format_double(trace[i].vif))
            << "\n";
    }
    out << "survivors";
    for (const auto& s : survivors) out << ',' << s;
    out << "\n";
    return out.str();
}

nlohmann::json VifReport::to_json() const {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : trace) {
        steps.push_back({{"feature", s.name}, {"vif", std::isinf(s.vif) ? "inf" : format_double(s.vif)}});
    }
    return {{"cutoff", format_double(cutoff)}, {"trace", steps}, {"survivors", survivors}};
}

VifReport VifReport::from_json(const nlohmann::json& j) {
    VifReport r;
    auto num = [](const std::string& s) {
        if (s == "inf") return kInf;
        double v;
        if (!parse_double(s, v)) fail(ErrorKind::Format, "bad number '" + s + "' in VIF report");
        return v;
    };
    try {
        r.cutoff = num(j.at("cutoff").get<std::string>());
        for (const auto& s : j.at("trace")) r.trace.push_back({s.at("feature"), num(s.at("vif").get<std::string>())});
        r.survivors = j.at("survivors").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("malformed VIF report: ") + e.what());
    }
    return r;
}

namespace featselect {

std::vector<double> compute_vif(const std::vector<std::vector<double>>& columns) {
    const std::size_t p = columns.size();
    if (p < 2) fail(ErrorKind::Argument, "VIF needs at least two columns");
    const std::size_t n = columns[0].size();
    for (const auto& c : columns) {
        if (c.size() != n) fail(ErrorKind::Argument, "VIF columns differ in length");
    }
    if (n < p + 1) {
        fail(ErrorKind::Rank, "VIF needs at least " + std::to_string(p + 1) + " rows for " + std::to_string(p) +
                                  " columns, got " + std::to_string(n));
    }

    // Regression on the others plus an intercept is regression of the
    // centred column on the other centred columns, so VIF_j is the j-th
    // diagonal entry of the inverse correlation matrix.
    Eigen::MatrixXd z(n, p);
    std::vector<bool> constant(p, false);
    for (std::size_t j = 0; j < p; ++j) {
        double mean = 0;
        for (double v : columns[j]) mean += v;
        mean /= static_cast<double>(n);
        double ss = 0;
        for (double v : columns[j]) ss += (v - mean) * (v - mean);
        if (!std::isfinite(ss)) fail(ErrorKind::Numerical, "non-finite value in VIF input");
        const double norm = std::sqrt(ss);
        constant[j] = !(norm > 0);
        for (std::size_t i = 0; i < n; ++i) z(i, j) = constant[j] ? 0.0 : (columns[j][i] - mean) / norm;
    }
    const Eigen::MatrixXd corr = z.transpose() * z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success) fail(ErrorKind::Numerical, "eigen decomposition failed in VIF");
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const Eigen::MatrixXd& vec = eig.eigenvectors();
    const double floor = std::max(lambda.maxCoeff(), 1.0) * 1e-13;

    const double inf_threshold = 1.0 / (1.0 - kCollinearR2);
    std::vector<double> vif(p);
    for (std::size_t j = 0; j < p; ++j) {
        if (constant[j]) {
            vif[j] = kInf;
            continue;
        }
        double acc = 0;
        bool singular = false;
        for (Eigen::Index k = 0; k < lambda.size(); ++k) {
            const double w = vec(static_cast<Eigen::Index>(j), k) * vec(static_cast<Eigen::Index>(j), k);
            if (lambda(k) <= floor) {
                if (w > 1e-10) singular = true;
                continue;
            }
            acc += w / lambda(k);
        }
        vif[j] = (singular || acc > inf_threshold) ? kInf : std::max(acc, 1.0);
    }
    return vif;
}

std::map<std::string, double> compute_vif(const FeatureMatrix& matrix) {
    std::vector<std::vector<double>> cols;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
        if (matrix.kinds[c] == ColumnKind::Continuous) {
            cols.push_back(matrix.columns[c]);
            names.push_back(matrix.names[c]);
        }
    }
    auto v = compute_vif(cols);
    std::map<std::string, double> out;
    for (std::size_t j = 0; j < names.size(); ++j) out[names[j]] = v[j];
    return out;
}

VifReport eliminate_by_vif(const FeatureMatrix& matrix, double cutoff) {
    if (!(cutoff > 1)) fail(ErrorKind::Argument, "VIF cutoff must exceed 1");
    VifReport report;
    report.cutoff = cutoff;
    std::vector<std::vector<double>> cols;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
        if (matrix.kinds[c] == ColumnKind::Continuous) {
            cols.push_back(matrix.columns[c]);
            names.push_back(matrix.names[c]);
        }
    }
    while (cols.size() >= 2) {
        const auto v = compute_vif(cols);
        std::size_t worst = 0;
        for (std::size_t j = 1; j < v.size(); ++j) {
            if (v[j] > v[worst]) worst = j;
        }
        if (v[worst] <= cutoff) break;
        report.trace.push_back({names[worst], v[worst]});
        cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(worst));
        names.erase(names.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    report.survivors = names;
    return report;
}

}  // namespace featselect
}  // namespace sentitrade
