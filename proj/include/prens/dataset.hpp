#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "prens/rng.hpp"

namespace prens {

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::vector<std::string> levels; // categorical only, first-appearance order
};

/// Immutable-after-construction columnar table. Numeric columns store doubles,
/// categorical columns store level codes into the spec's level list. No
/// missing values: loaders reject incomplete rows.
class DataSet {
public:
    DataSet() = default;

    // loaders; schema_json (optional) maps column name -> "numeric" or
    // {"kind": "categorical", "levels": [...]}
    static DataSet load_csv(const std::string& path, const std::string* schema_json = nullptr);
    static DataSet parse_csv(const std::string& text, const std::string* schema_json = nullptr,
                             const std::string& origin = "<memory>");

    // builders (used programmatically and by the loaders)
    void add_numeric(const std::string& name, std::vector<double> values);
    void add_categorical(const std::string& name, const std::vector<std::string>& values);
    void add_categorical(const std::string& name, std::vector<int> codes, std::vector<std::string> levels);
    void set_response_names(std::vector<std::string> names);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return columns_.size(); }
    const ColumnSpec& spec(std::size_t j) const { return columns_[j].spec; }
    const std::vector<std::string>& response_names() const { return response_names_; }

    int find_column(const std::string& name) const;                 // -1 if absent
    std::size_t column_index(const std::string& name) const;        // throws if absent
    const std::vector<double>& numeric(std::size_t j) const;
    const std::vector<int>& codes(std::size_t j) const;
    const std::string& level_label(std::size_t j, int code) const;

    bool is_response(std::size_t j) const;
    std::vector<int> predictor_columns() const; // all non-response columns in order

    // value formatted for display (numeric round-trip / level label)
    std::string display_value(std::size_t i, std::size_t j) const;

    DataSet subset(const std::vector<std::size_t>& rows) const;

    // columns matched by name and re-coded against `wanted`; errors name the
    // offending variable (missing column, kind mismatch, unseen level)
    DataSet select_columns(const std::vector<ColumnSpec>& wanted) const;

    std::string to_csv() const;
    std::string schema_to_json() const;

private:
    struct Column {
        ColumnSpec spec;
        std::vector<double> num;
        std::vector<int> cat;
    };
    void check_new_column(const std::string& name, std::size_t size) const;

    std::vector<Column> columns_;
    std::vector<std::string> response_names_;
    std::size_t n_rows_ = 0;
    bool empty_ = true;
};

struct WinsorCutpoints {
    std::string variable;
    double lower = 0.0;
    double upper = 0.0;
    double lower_pct = 0.05;
    double upper_pct = 0.95;
};

// type-7 quantile (linear interpolation of order statistics); values need not be sorted
double quantile_type7(std::vector<double> values, double p);

// clamp to empirical [lower_pct, upper_pct] quantiles
std::pair<std::vector<double>, WinsorCutpoints> winsorize(const std::vector<double>& values,
                                                          double lower_pct, double upper_pct,
                                                          const std::string& variable = "");

// floor(fraction*n) distinct indices, uniform without replacement, sorted
std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, Rng& rng);

} // namespace prens
