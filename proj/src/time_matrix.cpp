#include "pmx/time_matrix.hpp"

#include <stdexcept>

namespace pmx {

TimeMatrix::TimeMatrix(int rows, int cols, std::vector<Expr> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows_ <= 0 || cols_ <= 0 ||
        entries_.size() != static_cast<std::size_t>(rows_) * cols_)
        throw std::invalid_argument("TimeMatrix: shape does not match entry count");
}

TimeMatrix TimeMatrix::parse(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty() || rows[0].empty())
        throw std::invalid_argument("TimeMatrix: empty entry grid");
    const std::size_t cols = rows[0].size();
    std::vector<Expr> entries;
    entries.reserve(rows.size() * cols);
    for (const auto& row : rows) {
        if (row.size() != cols)
            throw std::invalid_argument("TimeMatrix: ragged entry grid");
        for (const auto& text : row) entries.push_back(Expr::parse(text));
    }
    return TimeMatrix(static_cast<int>(rows.size()), static_cast<int>(cols), std::move(entries));
}

Mat TimeMatrix::operator()(double t) const {
    Mat out(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) out(i, j) = at(i, j)(t);
    return out;
}

TimeVector::TimeVector(std::vector<Expr> entries) : entries_(std::move(entries)) {}

TimeVector TimeVector::parse(const std::vector<std::string>& entries) {
    std::vector<Expr> parsed;
    parsed.reserve(entries.size());
    for (const auto& text : entries) parsed.push_back(Expr::parse(text));
    return TimeVector(std::move(parsed));
}

Vec TimeVector::operator()(double t) const {
    Vec out(size());
    for (int i = 0; i < size(); ++i) out(i) = entries_[static_cast<std::size_t>(i)](t);
    return out;
}

}  // namespace pmx
