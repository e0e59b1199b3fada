#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hrgrad {

struct InvalidInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Caller broke a documented precondition (orthogonality, ordering, range).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Input is structurally degenerate (all-zero matrix, collapsed cone).
struct DegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SizeLimitError : std::length_error {
    using std::length_error::length_error;
};

/// Numerical thresholds shared across the pipeline. All strictly positive.
struct NumericTolerances {
    double delta = 1e-12;          // normalization stabilizer in U(x) = x/(||x|| + delta)
    double cone_zero_tol = 1e-10;  // zero classification in the ray enumeration
    double conflict_tol = 1e-12;   // threshold for a negative alignment to count as conflict
    double svd_cutoff_rel = 1e-12; // singular values below cutoff * sigma_max are treated as 0

    void validate() const {
        if (!(delta > 0.0) || !(cone_zero_tol > 0.0) || !(conflict_tol > 0.0) ||
            !(svd_cutoff_rel > 0.0))
            throw InvalidInputError("NumericTolerances: all fields must be strictly positive");
    }
};

/// Dense column-major matrix; column j is a contiguous span of length rows.
class ColMatrix {
  public:
    ColMatrix() = default;
    ColMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double* col(std::size_t j) { return a_.data() + j * rows_; }
    const double* col(std::size_t j) const { return a_.data() + j * rows_; }
    std::span<double> col_span(std::size_t j) { return {col(j), rows_}; }
    std::span<const double> col_span(std::size_t j) const { return {col(j), rows_}; }

    double& operator()(std::size_t i, std::size_t j) { return a_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[j * rows_ + i]; }

    std::vector<double>& data() { return a_; }
    const std::vector<double>& data() const { return a_; }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

using Vec = std::vector<double>;

} // namespace hrgrad
