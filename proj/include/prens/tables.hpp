#pragma once

#include <string>
#include <vector>

#include "prens/ensemble.hpp"
#include "prens/eval.hpp"
#include "prens/interpret.hpp"
#include "prens/penalized_glm.hpp"

namespace prens {

// Term table: intercept row plus one row per term, fit order.
// term,coefficient[...],description,sd,importance[...]
std::string terms_csv(const FittedEnsemble& ensemble);

std::string predictions_csv(const FittedEnsemble& ensemble, const Eigen::MatrixXd& predictions,
                            PredictScale scale);

// the three explanation panels as labelled CSV blocks
std::string explanation_text(const FittedEnsemble& ensemble, const Explanation& ex);

std::string importance_csv(const std::vector<ImportanceEntry>& entries,
                           const std::vector<std::string>& response_names, bool per_response,
                           const std::string& key_header);

std::string pd_csv(const PdResult& pd, const std::vector<std::string>& response_names);

std::string cv_records_csv(const RepeatedCvResult& result,
                           const std::vector<std::string>& response_names);
std::string cv_summary_text(const RepeatedCvResult& result);

std::string cv_curve_csv(const CvCurve& curve);
std::string path_csv(const LassoPath& path, const std::vector<std::string>& term_names);

} // namespace prens
