#include "prens/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "prens/strings.hpp"

namespace prens {

namespace {

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + s.size();
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA"; }

// one CSV record, handling quoted fields; returns false at end of input
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool quoted = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field += static_cast<char>(c);
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            fields.push_back(field);
            return true;
        } else {
            field += static_cast<char>(c);
        }
    }
    if (!any) return false;
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
    return true;
}

} // namespace

void DataSet::check_new_column(const std::string& name, std::size_t size) const {
    if (name.empty()) throw std::invalid_argument("column name must be non-empty");
    if (find_column(name) >= 0) throw std::invalid_argument("duplicate column name '" + name + "'");
    if (!empty_ && size != n_rows_) {
        throw std::invalid_argument("column '" + name + "' has " + std::to_string(size) +
                                    " rows, expected " + std::to_string(n_rows_));
    }
}

void DataSet::add_numeric(const std::string& name, std::vector<double> values) {
    check_new_column(name, values.size());
    Column col;
    col.spec.name = name;
    col.spec.kind = ColumnKind::numeric;
    col.num = std::move(values);
    n_rows_ = col.num.size();
    empty_ = false;
    columns_.push_back(std::move(col));
}

void DataSet::add_categorical(const std::string& name, const std::vector<std::string>& values) {
    std::vector<std::string> levels;
    std::unordered_map<std::string, int> index;
    std::vector<int> codes;
    codes.reserve(values.size());
    for (const auto& v : values) {
        auto it = index.find(v);
        if (it == index.end()) {
            it = index.emplace(v, static_cast<int>(levels.size())).first;
            levels.push_back(v);
        }
        codes.push_back(it->second);
    }
    add_categorical(name, std::move(codes), std::move(levels));
}

void DataSet::add_categorical(const std::string& name, std::vector<int> codes,
                              std::vector<std::string> levels) {
    check_new_column(name, codes.size());
    if (levels.empty()) throw std::invalid_argument("categorical column '" + name + "' has no levels");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        for (std::size_t k = i + 1; k < levels.size(); ++k) {
            if (levels[i] == levels[k]) {
                throw std::invalid_argument("duplicate level '" + levels[i] + "' in column '" + name + "'");
            }
        }
    }
    for (int c : codes) {
        if (c < 0 || c >= static_cast<int>(levels.size())) {
            throw std::invalid_argument("level code out of range in column '" + name + "'");
        }
    }
    Column col;
    col.spec.name = name;
    col.spec.kind = ColumnKind::categorical;
    col.spec.levels = std::move(levels);
    col.cat = std::move(codes);
    n_rows_ = col.cat.size();
    empty_ = false;
    columns_.push_back(std::move(col));
}

void DataSet::set_response_names(std::vector<std::string> names) {
    if (names.empty()) throw std::invalid_argument("need at least one response name");
    for (const auto& n : names) {
        if (find_column(n) < 0) throw std::invalid_argument("response column '" + n + "' not found");
    }
    response_names_ = std::move(names);
}

int DataSet::find_column(const std::string& name) const {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (columns_[j].spec.name == name) return static_cast<int>(j);
    }
    return -1;
}

std::size_t DataSet::column_index(const std::string& name) const {
    const int j = find_column(name);
    if (j < 0) throw std::invalid_argument("column '" + name + "' not found");
    return static_cast<std::size_t>(j);
}

const std::vector<double>& DataSet::numeric(std::size_t j) const {
    if (columns_[j].spec.kind != ColumnKind::numeric) {
        throw std::invalid_argument("column '" + columns_[j].spec.name + "' is not numeric");
    }
    return columns_[j].num;
}

const std::vector<int>& DataSet::codes(std::size_t j) const {
    if (columns_[j].spec.kind != ColumnKind::categorical) {
        throw std::invalid_argument("column '" + columns_[j].spec.name + "' is not categorical");
    }
    return columns_[j].cat;
}

const std::string& DataSet::level_label(std::size_t j, int code) const {
    return columns_[j].spec.levels.at(static_cast<std::size_t>(code));
}

bool DataSet::is_response(std::size_t j) const {
    const auto& name = columns_[j].spec.name;
    return std::find(response_names_.begin(), response_names_.end(), name) != response_names_.end();
}

std::vector<int> DataSet::predictor_columns() const {
    std::vector<int> out;
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (!is_response(j)) out.push_back(static_cast<int>(j));
    }
    return out;
}

std::string DataSet::display_value(std::size_t i, std::size_t j) const {
    const auto& col = columns_[j];
    if (col.spec.kind == ColumnKind::numeric) return format_double(col.num[i]);
    return col.spec.levels[static_cast<std::size_t>(col.cat[i])];
}

DataSet DataSet::subset(const std::vector<std::size_t>& rows) const {
    DataSet out;
    for (const auto& col : columns_) {
        if (col.spec.kind == ColumnKind::numeric) {
            std::vector<double> v;
            v.reserve(rows.size());
            for (std::size_t r : rows) v.push_back(col.num[r]);
            out.add_numeric(col.spec.name, std::move(v));
        } else {
            std::vector<int> v;
            v.reserve(rows.size());
            for (std::size_t r : rows) v.push_back(col.cat[r]);
            out.add_categorical(col.spec.name, std::move(v), col.spec.levels);
        }
    }
    out.response_names_ = response_names_;
    return out;
}

DataSet DataSet::select_columns(const std::vector<ColumnSpec>& wanted) const {
    DataSet out;
    for (const auto& spec : wanted) {
        const int j = find_column(spec.name);
        if (j < 0) throw std::invalid_argument("required column '" + spec.name + "' not found in data");
        const auto& col = columns_[static_cast<std::size_t>(j)];
        if (col.spec.kind != spec.kind) {
            throw std::invalid_argument("column '" + spec.name + "' has the wrong type");
        }
        if (spec.kind == ColumnKind::numeric) {
            out.add_numeric(spec.name, col.num);
        } else {
            std::unordered_map<std::string, int> want_index;
            for (std::size_t k = 0; k < spec.levels.size(); ++k) {
                want_index.emplace(spec.levels[k], static_cast<int>(k));
            }
            std::vector<int> recoded;
            recoded.reserve(col.cat.size());
            for (int c : col.cat) {
                const auto& label = col.spec.levels[static_cast<std::size_t>(c)];
                auto it = want_index.find(label);
                if (it == want_index.end()) {
                    throw std::invalid_argument("unseen level '" + label + "' in variable '" + spec.name + "'");
                }
                recoded.push_back(it->second);
            }
            out.add_categorical(spec.name, std::move(recoded), spec.levels);
        }
    }
    return out;
}

DataSet DataSet::load_csv(const std::string& path, const std::string* schema_json) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), schema_json, path);
}

DataSet DataSet::parse_csv(const std::string& text, const std::string* schema_json,
                           const std::string& origin) {
    std::istringstream in(text);
    std::vector<std::string> header;
    if (!read_record(in, header) || header.empty()) {
        throw std::runtime_error(origin + ": empty file");
    }
    const std::size_t ncol = header.size();

    // optional declared kinds
    enum class Declared { none, numeric, categorical };
    std::vector<Declared> declared(ncol, Declared::none);
    std::vector<std::vector<std::string>> declared_levels(ncol);
    if (schema_json) {
        nlohmann::json js;
        try {
            js = nlohmann::json::parse(*schema_json);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("invalid schema JSON: ") + e.what());
        }
        if (!js.is_object()) throw std::runtime_error("schema JSON must be an object");
        for (auto it = js.begin(); it != js.end(); ++it) {
            const auto found = std::find(header.begin(), header.end(), it.key());
            if (found == header.end()) {
                throw std::runtime_error("schema names column '" + it.key() + "' not present in " + origin);
            }
            const std::size_t j = static_cast<std::size_t>(found - header.begin());
            const auto& v = it.value();
            std::string kind;
            if (v.is_string()) {
                kind = v.get<std::string>();
            } else if (v.is_object() && v.contains("kind")) {
                kind = v["kind"].get<std::string>();
                if (v.contains("levels")) {
                    declared_levels[j] = v["levels"].get<std::vector<std::string>>();
                }
            } else {
                throw std::runtime_error("schema entry for '" + it.key() + "' must be a string or object");
            }
            if (kind == "numeric") {
                declared[j] = Declared::numeric;
            } else if (kind == "categorical") {
                declared[j] = Declared::categorical;
            } else {
                throw std::runtime_error("schema entry for '" + it.key() + "': unknown kind '" + kind + "'");
            }
        }
    }

    std::vector<std::vector<std::string>> cells(ncol);
    std::vector<std::string> record;
    std::size_t row = 0;
    while (read_record(in, record)) {
        ++row;
        if (record.size() == 1 && record[0].empty()) continue; // trailing blank line
        if (record.size() != ncol) {
            throw std::runtime_error(origin + ": row " + std::to_string(row) + " has " +
                                     std::to_string(record.size()) + " fields, expected " +
                                     std::to_string(ncol));
        }
        for (std::size_t j = 0; j < ncol; ++j) {
            if (is_missing(record[j])) {
                throw std::runtime_error(origin + ": missing value at row " + std::to_string(row) +
                                         ", column '" + header[j] + "'");
            }
            cells[j].push_back(record[j]);
        }
    }

    DataSet out;
    for (std::size_t j = 0; j < ncol; ++j) {
        bool numeric = false;
        std::vector<double> nums(cells[j].size());
        if (declared[j] != Declared::categorical) {
            numeric = true;
            for (std::size_t i = 0; i < cells[j].size(); ++i) {
                if (!parse_number(cells[j][i], nums[i])) {
                    numeric = false;
                    if (declared[j] == Declared::numeric) {
                        throw std::runtime_error(origin + ": column '" + header[j] +
                                                 "' declared numeric but row " + std::to_string(i + 1) +
                                                 " holds '" + cells[j][i] + "'");
                    }
                    break;
                }
            }
            if (declared[j] == Declared::none && cells[j].empty()) numeric = true;
        }
        if (numeric) {
            out.add_numeric(header[j], std::move(nums));
        } else if (!declared_levels[j].empty()) {
            std::unordered_map<std::string, int> index;
            for (std::size_t k = 0; k < declared_levels[j].size(); ++k) {
                index.emplace(declared_levels[j][k], static_cast<int>(k));
            }
            std::vector<int> codes;
            codes.reserve(cells[j].size());
            for (std::size_t i = 0; i < cells[j].size(); ++i) {
                auto it = index.find(cells[j][i]);
                if (it == index.end()) {
                    throw std::runtime_error(origin + ": unseen level '" + cells[j][i] +
                                             "' in variable '" + header[j] + "'");
                }
                codes.push_back(it->second);
            }
            out.add_categorical(header[j], std::move(codes), declared_levels[j]);
        } else {
            out.add_categorical(header[j], cells[j]);
        }
    }
    return out;
}

std::string DataSet::to_csv() const {
    std::string out;
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (j) out += ',';
        out += csv_field(columns_[j].spec.name);
    }
    out += '\n';
    for (std::size_t i = 0; i < n_rows_; ++i) {
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            if (j) out += ',';
            out += csv_field(display_value(i, j));
        }
        out += '\n';
    }
    return out;
}

std::string DataSet::schema_to_json() const {
    nlohmann::ordered_json js = nlohmann::ordered_json::object();
    for (const auto& col : columns_) {
        if (col.spec.kind == ColumnKind::numeric) {
            js[col.spec.name] = "numeric";
        } else {
            js[col.spec.name] = {{"kind", "categorical"}, {"levels", col.spec.levels}};
        }
    }
    return js.dump();
}

double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of empty vector");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile fraction out of [0,1]");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double h = (static_cast<double>(n) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return values[n - 1];
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::pair<std::vector<double>, WinsorCutpoints> winsorize(const std::vector<double>& values,
                                                          double lower_pct, double upper_pct,
                                                          const std::string& variable) {
    if (values.empty()) throw std::invalid_argument("winsorize: empty vector");
    if (!(lower_pct >= 0.0 && lower_pct < upper_pct && upper_pct <= 1.0)) {
        throw std::invalid_argument("winsorize: need 0 <= lower_pct < upper_pct <= 1");
    }
    WinsorCutpoints cut;
    cut.variable = variable;
    cut.lower_pct = lower_pct;
    cut.upper_pct = upper_pct;
    cut.lower = quantile_type7(values, lower_pct);
    cut.upper = quantile_type7(values, upper_pct);
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::clamp(values[i], cut.lower, cut.upper);
    }
    return {std::move(out), cut};
}

std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, Rng& rng) {
    if (n < 1) throw std::invalid_argument("subsample_indices: n must be >= 1");
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("subsample_indices: fraction must be in (0, 1]");
    }
    const std::size_t k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace prens
