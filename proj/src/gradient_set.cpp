#include "hrgrad/gradient_set.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "hrgrad/kernels.hpp"

namespace hrgrad {

Vec normalize(std::span<const double> v, double delta) {
    if (delta < 0.0) throw InvalidInputError("normalize: delta must be >= 0");
    for (double x : v)
        if (!std::isfinite(x)) throw InvalidInputError("normalize: non-finite input");
    const double n = kernels::nrm2(v.data(), v.size());
    Vec out(v.begin(), v.end());
    if (n == 0.0 && delta == 0.0) return out; // zero maps to zero
    kernels::scal(1.0 / (n + delta), out.data(), out.size());
    return out;
}

GradientSet::GradientSet(ColMatrix columns, double delta, std::vector<std::string> names)
    : g_(std::move(columns)), delta_(delta), names_(std::move(names)) {
    if (g_.rows() < 1 || g_.cols() < 1)
        throw InvalidInputError("GradientSet: need D >= 1 and m >= 1");
    if (!(delta_ > 0.0)) throw InvalidInputError("GradientSet: delta must be > 0");
    if (!names_.empty() && names_.size() != g_.cols())
        throw InvalidInputError("GradientSet: names length must equal task count");
    for (double x : g_.data())
        if (!std::isfinite(x)) throw InvalidInputError("GradientSet: non-finite entry");

    const std::size_t d = g_.rows(), m = g_.cols();
    norms_.resize(m);
    units_ = ColMatrix(d, m);
    for (std::size_t i = 0; i < m; ++i) {
        norms_[i] = kernels::nrm2(g_.col(i), d);
        max_norm_ = std::max(max_norm_, norms_[i]);
        if (norms_[i] > 0.0) ++nonzero_;
        const double s = 1.0 / (norms_[i] + delta_);
        kernels::combine(s, g_.col(i), 0.0, g_.col(i), units_.col(i), d);
    }
}

Vec GradientSet::unit_exact(std::size_t i) const {
    Vec u(g_.col(i), g_.col(i) + g_.rows());
    if (norms_[i] > 0.0) kernels::scal(1.0 / norms_[i], u.data(), u.size());
    return u;
}

GradientSet GradientSet::select(const std::vector<std::size_t>& idx) const {
    ColMatrix sub(dim(), idx.size());
    std::vector<std::string> names;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        std::copy(g_.col(idx[k]), g_.col(idx[k]) + dim(), sub.col(k));
        if (!names_.empty()) names.push_back(names_[idx[k]]);
    }
    return GradientSet(std::move(sub), delta_, std::move(names));
}

GradientSet GradientSet::from_json(const std::string& text, double delta) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError(std::string("GradientSet: bad JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("dim") || !j.contains("tasks") || !j.contains("gradients"))
        throw InvalidInputError("GradientSet: missing dim/tasks/gradients");
    if (!j["dim"].is_number_integer() || !j["tasks"].is_number_integer())
        throw InvalidInputError("GradientSet: dim/tasks must be integers");
    const auto d = j["dim"].get<long long>();
    const auto m = j["tasks"].get<long long>();
    if (d < 1 || m < 1) throw InvalidInputError("GradientSet: dim and tasks must be >= 1");
    const auto& rows = j["gradients"];
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(m))
        throw InvalidInputError("GradientSet: gradients must hold one row per task");
    ColMatrix g(static_cast<std::size_t>(d), static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(d))
            throw InvalidInputError("GradientSet: ragged gradient row");
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (!row[k].is_number()) throw InvalidInputError("GradientSet: non-numeric entry");
            g(k, i) = row[k].get<double>();
        }
    }
    std::vector<std::string> names;
    if (j.contains("names")) {
        const auto& jn = j["names"];
        if (!jn.is_array() || jn.size() != static_cast<std::size_t>(m))
            throw InvalidInputError("GradientSet: names length must equal tasks");
        for (const auto& s : jn) {
            if (!s.is_string()) throw InvalidInputError("GradientSet: names must be strings");
            names.push_back(s.get<std::string>());
        }
    }
    for (const auto& [key, val] : j.items()) {
        (void)val;
        if (key != "dim" && key != "tasks" && key != "gradients" && key != "names")
            throw InvalidInputError("GradientSet: unknown key '" + key + "'");
    }
    return GradientSet(std::move(g), delta, std::move(names));
}

std::string GradientSet::to_json() const {
    nlohmann::json j;
    j["dim"] = dim();
    j["tasks"] = tasks();
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < tasks(); ++i) {
        auto row = nlohmann::json::array();
        for (std::size_t k = 0; k < dim(); ++k) row.push_back(g_(k, i));
        rows.push_back(std::move(row));
    }
    j["gradients"] = std::move(rows);
    if (!names_.empty()) j["names"] = names_;
    return j.dump();
}

} // namespace hrgrad
