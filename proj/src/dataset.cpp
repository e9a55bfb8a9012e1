#include "mirsel/dataset.hpp"

#include "mirsel/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string_view>

namespace mirsel {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_double(std::string_view cell, double& out) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return false;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc{} && ptr == cell.data() + cell.size();
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::string> labels)
    : x_(std::move(x)), y_(std::move(y)), labels_(std::move(labels)) {
    if (x_.rows() != y_.size()) {
        throw DataError("dataset has " + std::to_string(x_.rows()) + " input rows but " +
                        std::to_string(y_.size()) + " targets");
    }
    if (!labels_.empty() && labels_.size() != static_cast<std::size_t>(x_.cols())) {
        throw DataError("dataset has " + std::to_string(x_.cols()) + " variables but " +
                        std::to_string(labels_.size()) + " labels");
    }
    if (!x_.allFinite() || !y_.allFinite()) throw DataError("dataset contains NaN or infinite values");
}

std::string Dataset::label(std::size_t column) const {
    if (column < labels_.size()) return labels_[column];
    return "x" + std::to_string(column);
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), x_.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= this->rows()) throw DataError("row index " + std::to_string(rows[r]) + " out of range");
        x.row(static_cast<Eigen::Index>(r)) = x_.row(static_cast<Eigen::Index>(rows[r]));
        y(static_cast<Eigen::Index>(r)) = y_(static_cast<Eigen::Index>(rows[r]));
    }
    return Dataset(std::move(x), std::move(y), labels_);
}

Dataset Dataset::select_columns(std::span<const std::size_t> columns) const {
    Eigen::MatrixXd x(x_.rows(), static_cast<Eigen::Index>(columns.size()));
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] >= cols()) throw DataError("column index " + std::to_string(columns[c]) + " out of range");
        x.col(static_cast<Eigen::Index>(c)) = x_.col(static_cast<Eigen::Index>(columns[c]));
        if (!labels_.empty()) labels.push_back(labels_[columns[c]]);
    }
    return Dataset(std::move(x), y_, std::move(labels));
}

Dataset Dataset::with_x(Eigen::MatrixXd x, std::vector<std::string> labels) const {
    return Dataset(std::move(x), y_, std::move(labels));
}

Dataset Dataset::with_y(Eigen::VectorXd y) const { return Dataset(x_, std::move(y), labels_); }

void SplitSpec::validate(std::size_t n_rows) const {
    if (train.empty() || test.empty()) throw DataError("split must have non-empty train and test sets");
    std::vector<char> seen(n_rows, 0);
    for (const auto* part : {&train, &test}) {
        for (std::size_t idx : *part) {
            if (idx >= n_rows) throw DataError("split index " + std::to_string(idx) + " out of range");
            if (seen[idx]) throw DataError("split index " + std::to_string(idx) + " appears twice");
            seen[idx] = 1;
        }
    }
}

CsvTable read_csv_table(const std::filesystem::path& path, HeaderMode header) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_commas(line);
        if (first) {
            first = false;
            width = cells.size();
            bool looks_like_header = false;
            double dummy = 0.0;
            for (auto c : cells) looks_like_header |= !parse_double(c, dummy);
            bool is_header = header == HeaderMode::Present || (header == HeaderMode::Auto && looks_like_header);
            if (is_header) {
                for (auto c : cells) names.emplace_back(c);
                continue;
            }
        }
        if (cells.size() != width) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                            " columns, found " + std::to_string(cells.size()));
        }
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_double(cells[c], values[c])) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": column " +
                                std::to_string(c + 1) + ": cannot parse '" + std::string(cells[c]) + "'");
            }
            if (!std::isfinite(values[c])) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": column " +
                                std::to_string(c + 1) + ": non-finite value");
            }
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw DataError(path.string() + ": no data rows");
    CsvTable t;
    t.names = std::move(names);
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c) t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return t;
}


Dataset load_csv(const std::filesystem::path& path, const TargetColumn& target, HeaderMode header) {
    CsvTable table = read_csv_table(path, header);
    const std::vector<std::string>& names = table.names;
    const std::size_t width = static_cast<std::size_t>(table.values.cols());
    std::size_t target_col = 0;
    if (const auto* name = std::get_if<std::string>(&target)) {
        auto it = std::find(names.begin(), names.end(), *name);
        if (it == names.end()) throw DataError(path.string() + ": target column '" + *name + "' not found");
        target_col = static_cast<std::size_t>(it - names.begin());
    } else {
        long idx = std::get<long>(target);
        long w = static_cast<long>(width);
        if (idx < 0) idx += w;
        if (idx < 0 || idx >= w) throw DataError(path.string() + ": target column index out of range");
        target_col = static_cast<std::size_t>(idx);
    }
    if (width < 2) throw DataError(path.string() + ": need at least one input column besides the target");

    const Eigen::Index n = table.values.rows();
    const auto m = static_cast<Eigen::Index>(width - 1);
    Eigen::MatrixXd x(n, m);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        Eigen::Index out = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (c == target_col) {
                y(r) = table.values(r, static_cast<Eigen::Index>(c));
            } else {
                x(r, out++) = table.values(r, static_cast<Eigen::Index>(c));
            }
        }
    }
    std::vector<std::string> labels;
    if (!names.empty()) {
        for (std::size_t c = 0; c < width; ++c)
            if (c != target_col) labels.push_back(names[c]);
    }
    return Dataset(std::move(x), std::move(y), std::move(labels));
}

void save_csv(const std::filesystem::path& path, const Dataset& d, const std::string& target_name) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (std::size_t c = 0; c < d.cols(); ++c) out << d.label(c) << ',';
    out << target_name << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t r = 0; r < d.rows(); ++r) {
        for (std::size_t c = 0; c < d.cols(); ++c)
            out << d.x()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) << ',';
        out << d.y()(static_cast<Eigen::Index>(r)) << '\n';
    }
}

SplitSpec load_split_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
        SplitSpec split;
        split.train = doc.at("train").get<std::vector<std::size_t>>();
        split.test = doc.at("test").get<std::vector<std::size_t>>();
        return split;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": invalid split file: " + e.what());
    }
}

void save_split_json(const std::filesystem::path& path, const SplitSpec& split) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << nlohmann::json{{"train", split.train}, {"test", split.test}}.dump() << '\n';
}

std::pair<Dataset, Dataset> apply_split(const Dataset& d, const SplitSpec& split) {
    split.validate(d.rows());
    return {d.select_rows(split.train), d.select_rows(split.test)};
}

Dataset stack_rows(const Dataset& top, const Dataset& bottom) {
    if (top.cols() != bottom.cols()) throw DataError("cannot stack datasets with different variable counts");
    Eigen::MatrixXd x(top.x().rows() + bottom.x().rows(), top.x().cols());
    x << top.x(), bottom.x();
    Eigen::VectorXd y(top.y().size() + bottom.y().size());
    y << top.y(), bottom.y();
    return Dataset(std::move(x), std::move(y), top.labels());
}

double sample_variance(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() < 2) throw DataError("variance needs at least two values");
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

Dataset normalize_spectra(const Dataset& d) {
    if (d.cols() < 2) throw DataError("spectrum normalization needs at least two variables");
    const Eigen::Index n = d.x().rows();
    const Eigen::Index m = d.x().cols();
    Eigen::MatrixXd out(n, m + 2);
    for (Eigen::Index r = 0; r < n; ++r) {
        Eigen::VectorXd row = d.x().row(r).transpose();
        const double mean = row.mean();
        const double sd = std::sqrt(sample_variance(row));
        if (!(sd > 0.0)) throw DataError("row " + std::to_string(r) + " is a constant spectrum (zero standard deviation)");
        out.row(r).head(m) = ((row.array() - mean) / sd).matrix().transpose();
        out(r, m) = mean;
        out(r, m + 1) = sd;
    }
    std::vector<std::string> labels;
    if (!d.labels().empty()) {
        labels = d.labels();
        labels.emplace_back("row_mean");
        labels.emplace_back("row_std");
    }
    return d.with_x(std::move(out), std::move(labels));
}

ColumnScaler ColumnScaler::fit(const Eigen::MatrixXd& train, const std::vector<std::string>& labels) {
    ColumnScaler s;
    s.mean_ = train.colwise().mean().transpose();
    s.scale_.resize(train.cols());
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
        const double var = sample_variance(train.col(c));
        if (!(var > 0.0)) {
            std::string name = static_cast<std::size_t>(c) < labels.size() ? labels[static_cast<std::size_t>(c)]
                                                                            : "x" + std::to_string(c);
            throw DataError("column " + name + " has zero variance on the training rows");
        }
        s.scale_(c) = std::sqrt(var);
    }
    return s;
}

ColumnScaler ColumnScaler::from_parts(Eigen::VectorXd mean, Eigen::VectorXd scale) {
    if (mean.size() != scale.size()) throw DataError("scaler mean and scale differ in length");
    if (!mean.allFinite() || !scale.allFinite() || (scale.array() <= 0.0).any())
        throw DataError("scaler needs finite means and positive scales");
    ColumnScaler s;
    s.mean_ = std::move(mean);
    s.scale_ = std::move(scale);
    return s;
}

Eigen::MatrixXd ColumnScaler::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean_.size()) throw DataError("scaler dimension mismatch");
    return ((x.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array()).matrix();
}

Dataset ColumnScaler::apply(const Dataset& d) const { return d.with_x(apply(d.x()), d.labels()); }

std::pair<Dataset, Dataset> whiten_columns(const Dataset& train, const Dataset& test) {
    auto scaler = ColumnScaler::fit(train.x(), train.labels());
    return {scaler.apply(train), scaler.apply(test)};
}

Dataset whiten_columns(const Dataset& d) { return ColumnScaler::fit(d.x(), d.labels()).apply(d); }

}  // namespace mirsel
