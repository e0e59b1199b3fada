#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hrgrad/types.hpp"

namespace hrgrad {

/// Safe normalization U(x) = x / (||x|| + delta). delta >= 0; delta = 0 gives
/// the exact unit vector for nonzero x, and the zero vector maps to itself.
Vec normalize(std::span<const double> v, double delta);

/// Bundle of m task gradients as columns of a D x m matrix, with cached
/// Euclidean norms and stabilized unit columns.
class GradientSet {
  public:
    /// `columns` is column-major D x m. Every entry must be finite.
    GradientSet(ColMatrix columns, double delta = 1e-12,
                std::vector<std::string> names = {});

    std::size_t dim() const { return g_.rows(); }
    std::size_t tasks() const { return g_.cols(); }

    const ColMatrix& matrix() const { return g_; }
    std::span<const double> column(std::size_t i) const { return g_.col_span(i); }
    double norm(std::size_t i) const { return norms_[i]; }
    const Vec& norms() const { return norms_; }
    /// Stabilized unit column g_i / (||g_i|| + delta).
    std::span<const double> unit(std::size_t i) const { return units_.col_span(i); }
    /// Exact unit column g_i / ||g_i||; the zero vector for a zero column.
    Vec unit_exact(std::size_t i) const;
    bool is_zero(std::size_t i) const { return norms_[i] == 0.0; }
    std::size_t nonzero_count() const { return nonzero_; }
    double max_norm() const { return max_norm_; }
    double delta() const { return delta_; }
    const std::vector<std::string>& names() const { return names_; }

    /// Sub-set restricted to the given column indices (shared delta/names).
    GradientSet select(const std::vector<std::size_t>& idx) const;

    /// Parse `{"dim": D, "tasks": m, "gradients": [[..D..] x m], "names": [...]}`.
    /// Rows are tasks. Throws InvalidInputError on any schema violation
    /// (ragged rows, size mismatch, non-finite entries).
    static GradientSet from_json(const std::string& text, double delta = 1e-12);
    std::string to_json() const;

  private:
    ColMatrix g_;
    ColMatrix units_;
    Vec norms_;
    double delta_;
    double max_norm_ = 0.0;
    std::size_t nonzero_ = 0;
    std::vector<std::string> names_;
};

} // namespace hrgrad
