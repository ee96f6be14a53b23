#pragma once

#include <string>
#include <vector>

#include "pmx/expr.hpp"
#include "pmx/linalg.hpp"

namespace pmx {

// Rectangular matrix of scalar expressions; evaluates to a numeric matrix at
// any t. Entries are stored row-major.
class TimeMatrix {
public:
    TimeMatrix() = default;
    TimeMatrix(int rows, int cols, std::vector<Expr> entries);

    // rows[i][j] is the expression text of entry (i, j); rows must be
    // rectangular and non-empty.
    static TimeMatrix parse(const std::vector<std::vector<std::string>>& rows);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    const Expr& at(int i, int j) const { return entries_[static_cast<std::size_t>(i) * cols_ + j]; }

    Mat operator()(double t) const;

private:
    int rows_ = 0, cols_ = 0;
    std::vector<Expr> entries_;
};

// Column vector of scalar expressions.
class TimeVector {
public:
    TimeVector() = default;
    explicit TimeVector(std::vector<Expr> entries);

    static TimeVector parse(const std::vector<std::string>& entries);

    int size() const noexcept { return static_cast<int>(entries_.size()); }
    const Expr& at(int i) const { return entries_[static_cast<std::size_t>(i)]; }

    Vec operator()(double t) const;

private:
    std::vector<Expr> entries_;
};

}  // namespace pmx
