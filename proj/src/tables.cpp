#include "prens/tables.hpp"

#include <cmath>

#include "prens/strings.hpp"

namespace prens {

namespace {

// per-response header suffixes only when there are several responses
std::vector<std::string> spread(const std::string& base, const std::vector<std::string>& responses) {
    if (responses.size() <= 1) return {base};
    std::vector<std::string> out;
    out.reserve(responses.size());
    for (const auto& r : responses) out.push_back(base + "_" + r);
    return out;
}

} // namespace

std::string terms_csv(const FittedEnsemble& ensemble) {
    const auto& responses = ensemble.response_names;
    std::string out = "term";
    for (const auto& h : spread("coefficient", responses)) out += "," + h;
    out += ",description,sd";
    for (const auto& h : spread("importance", responses)) out += "," + h;
    out += '\n';

    out += "(Intercept)";
    for (Eigen::Index c = 0; c < ensemble.intercept.size(); ++c) {
        out += "," + format_double(ensemble.intercept(c));
    }
    out += ",1,";
    for (std::size_t c = 0; c < responses.size(); ++c) out += ",";
    out += '\n';

    for (const auto& term : ensemble.terms) {
        out += csv_field(term.name);
        for (Eigen::Index c = 0; c < term.coef.size(); ++c) {
            out += "," + format_double(term.coef(c));
        }
        out += "," + csv_field(term.description());
        out += "," + format_double(term.sd);
        for (Eigen::Index c = 0; c < term.coef.size(); ++c) {
            out += "," + format_double(std::abs(term.coef(c)) * term.sd);
        }
        out += '\n';
    }
    return out;
}

std::string predictions_csv(const FittedEnsemble& ensemble, const Eigen::MatrixXd& predictions,
                            PredictScale scale) {
    const std::string prefix = scale == PredictScale::link ? "link" : "pred";
    std::string out = "row";
    for (const auto& r : ensemble.response_names) out += "," + csv_field(prefix + "_" + r);
    out += '\n';
    for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
        out += std::to_string(i + 1);
        for (Eigen::Index c = 0; c < predictions.cols(); ++c) {
            out += "," + format_double(predictions(i, c));
        }
        out += '\n';
    }
    return out;
}

std::string explanation_text(const FittedEnsemble& ensemble, const Explanation& ex) {
    std::string out = "# (a) original variable values\nrow";
    for (const auto& v : ex.variables) out += "," + csv_field(v);
    out += '\n';
    for (std::size_t i = 0; i < ex.values.size(); ++i) {
        out += std::to_string(i + 1);
        for (const auto& v : ex.values[i]) out += "," + csv_field(v);
        out += '\n';
    }

    out += "\n# (b) rules\nrow";
    for (const auto& r : ex.rule_names) out += "," + csv_field(r);
    out += '\n';
    for (Eigen::Index i = 0; i < ex.rule_matrix.rows(); ++i) {
        out += std::to_string(i + 1);
        for (Eigen::Index c = 0; c < ex.rule_matrix.cols(); ++c) {
            out += "," + format_double(ex.rule_matrix(i, c), 6);
        }
        out += '\n';
    }

    for (std::size_t resp = 0; resp < ex.contributions.size(); ++resp) {
        out += "\n# (c) contributions";
        if (ex.contributions.size() > 1) out += " for " + ensemble.response_names[resp];
        out += "\nrow";
        for (const auto& t : ex.term_names) out += "," + csv_field(t);
        out += ",sum,prediction\n";
        const auto& contrib = ex.contributions[resp];
        for (Eigen::Index i = 0; i < contrib.rows(); ++i) {
            out += std::to_string(i + 1);
            for (Eigen::Index c = 0; c < contrib.cols(); ++c) {
                out += "," + format_double(contrib(i, c), 6);
            }
            out += "," + format_double(ex.link(i, static_cast<Eigen::Index>(resp)), 6);
            out += "," + format_double(ex.response(i, static_cast<Eigen::Index>(resp)), 6);
            out += '\n';
        }
    }
    return out;
}

std::string importance_csv(const std::vector<ImportanceEntry>& entries,
                           const std::vector<std::string>& response_names, bool per_response,
                           const std::string& key_header) {
    std::string out = key_header;
    if (per_response) {
        for (const auto& h : spread("importance", response_names)) out += "," + h;
    } else {
        out += ",importance";
    }
    out += '\n';
    for (const auto& e : entries) {
        out += csv_field(e.name);
        for (Eigen::Index c = 0; c < e.importance.size(); ++c) {
            out += "," + format_double(e.importance(c));
        }
        out += '\n';
    }
    return out;
}

std::string pd_csv(const PdResult& pd, const std::vector<std::string>& response_names) {
    std::string out;
    for (std::size_t a = 0; a < pd.axes.size(); ++a) {
        if (a) out += ",";
        out += csv_field(pd.axes[a].variable);
    }
    for (const auto& h : spread("pd", response_names)) out += "," + h;
    out += '\n';
    const std::size_t n1 = pd.axes.size() == 2 ? pd.axes[1].size() : 1;
    for (Eigen::Index row = 0; row < pd.pd.rows(); ++row) {
        const std::size_t i0 = static_cast<std::size_t>(row) / n1;
        const std::size_t i1 = static_cast<std::size_t>(row) % n1;
        const auto& a0 = pd.axes[0];
        out += a0.categorical ? csv_field(a0.labels[i0]) : format_double(a0.values[i0]);
        if (pd.axes.size() == 2) {
            const auto& a1 = pd.axes[1];
            out += ",";
            out += a1.categorical ? csv_field(a1.labels[i1]) : format_double(a1.values[i1]);
        }
        for (Eigen::Index c = 0; c < pd.pd.cols(); ++c) {
            out += "," + format_double(pd.pd(row, c));
        }
        out += '\n';
    }
    return out;
}

std::string cv_records_csv(const RepeatedCvResult& result,
                           const std::vector<std::string>& response_names) {
    std::string out = "repeat,fold,response,loss,effect\n";
    for (const auto& r : result.records) {
        out += std::to_string(r.repeat) + "," + std::to_string(r.fold) + "," +
               csv_field(response_names[static_cast<std::size_t>(r.response)]) + "," +
               format_double(r.loss) + "," +
               (std::isnan(r.effect) ? std::string("NA") : format_double(r.effect)) + '\n';
    }
    return out;
}

std::string cv_summary_text(const RepeatedCvResult& result) {
    std::string out;
    for (const auto& s : result.summary) {
        out += "response=" + s.response + " mean_" + result.loss_name + "=" +
               format_double(s.mean_loss, 6) + " se=" + format_double(s.se_loss, 6) + " " +
               result.effect_name + "=" + format_double(s.effect, 6) + '\n';
    }
    return out;
}

std::string cv_curve_csv(const CvCurve& curve) {
    std::string out = "lambda,mean_error,se\n";
    for (std::size_t i = 0; i < curve.lambda.size(); ++i) {
        out += format_double(curve.lambda[i]) + "," + format_double(curve.mean_error[i]) + "," +
               format_double(curve.se[i]) + '\n';
    }
    return out;
}

std::string path_csv(const LassoPath& path, const std::vector<std::string>& term_names) {
    const Eigen::Index q = path.intercept.cols();
    std::string out = "lambda,nonzero";
    for (Eigen::Index c = 0; c < q; ++c) {
        out += ",intercept";
        if (q > 1) out += "_" + std::to_string(c + 1);
    }
    for (const auto& t : term_names) {
        for (Eigen::Index c = 0; c < q; ++c) {
            out += "," + csv_field(q > 1 ? t + "_" + std::to_string(c + 1) : t);
        }
    }
    out += '\n';
    for (std::size_t i = 0; i < path.lambda.size(); ++i) {
        out += format_double(path.lambda[i]) + "," + std::to_string(path.nonzero[i]);
        for (Eigen::Index c = 0; c < q; ++c) {
            out += "," + format_double(path.intercept(static_cast<Eigen::Index>(i), c));
        }
        const auto& coef = path.coef[i];
        for (Eigen::Index j = 0; j < coef.rows(); ++j) {
            for (Eigen::Index c = 0; c < q; ++c) {
                out += "," + format_double(coef(j, c));
            }
        }
        out += '\n';
    }
    return out;
}

} // namespace prens
