#pragma once

#include "stlcbf/error.hpp"
#include "stlcbf/layout.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <set>
#include <vector>

namespace stlcbf {

enum class PredicateForm { affine, quad_ball };

/// Concave predicate function over a stacked state.
///
///   affine:    h(x) = c.x + d
///   quad_ball: h(x) = e - |A x + b|^2
///
/// Both forms are concave with a continuous gradient, which is what the
/// barrier construction and its concavity argument rely on.
class Predicate {
public:
    static Predicate affine(Eigen::VectorXd coeffs, double offset) {
        Predicate p;
        p.form_ = PredicateForm::affine;
        p.coeffs_ = std::move(coeffs);
        p.offset_ = offset;
        return p;
    }

    static Predicate quad_ball(Eigen::MatrixXd center_map, Eigen::VectorXd shift, double level) {
        if (center_map.rows() != shift.size())
            throw std::invalid_argument("quad_ball: center map rows must match shift length");
        Predicate p;
        p.form_ = PredicateForm::quad_ball;
        p.center_map_ = std::move(center_map);
        p.shift_ = std::move(shift);
        p.offset_ = level;
        return p;
    }

    PredicateForm form() const noexcept { return form_; }
    bool is_affine() const noexcept { return form_ == PredicateForm::affine; }

    Eigen::Index dim() const noexcept {
        return is_affine() ? coeffs_.size() : center_map_.cols();
    }

    const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
    double offset() const noexcept { return offset_; }
    const Eigen::MatrixXd& center_map() const noexcept { return center_map_; }
    const Eigen::VectorXd& shift() const noexcept { return shift_; }
    double level() const noexcept { return offset_; }

    double value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        if (is_affine()) return coeffs_.dot(x) + offset_;
        return offset_ - (center_map_ * x + shift_).squaredNorm();
    }

    Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        if (is_affine()) return coeffs_;
        return -2.0 * center_map_.transpose() * (center_map_ * x + shift_);
    }

    /// Predicate of the negated literal. Negating a quad_ball would make it
    /// convex, so only affine predicates can be negated.
    Predicate negated() const {
        if (!is_affine()) throw SemanticError("negation of a ball predicate is not concave");
        return affine(-coeffs_, -offset_);
    }

    /// sup over x of h(x); +inf for a non-constant affine predicate.
    double sup() const {
        if (is_affine()) {
            return coeffs_.isZero(0.0) ? offset_ : std::numeric_limits<double>::infinity();
        }
        if (center_map_.rows() == 0) return offset_;
        const Eigen::VectorXd x = center_map_.completeOrthogonalDecomposition().solve(-shift_);
        return offset_ - (center_map_ * x + shift_).squaredNorm();
    }

    /// Agents whose state blocks carry a nonzero coefficient.
    std::set<std::size_t> agent_support(const StateLayout& layout) const {
        std::set<std::size_t> out;
        for (Eigen::Index k = 0; k < dim(); ++k) {
            const bool used = is_affine() ? coeffs_(k) != 0.0 : !center_map_.col(k).isZero(0.0);
            if (used) out.insert(layout.owner(static_cast<int>(k)));
        }
        return out;
    }

    /// Same predicate expressed over the sub-state made of `columns`.
    /// Throws if a dropped coordinate carries a nonzero coefficient.
    Predicate restricted(const std::vector<Eigen::Index>& columns) const {
        std::vector<bool> kept(static_cast<std::size_t>(dim()), false);
        for (auto c : columns) kept.at(static_cast<std::size_t>(c)) = true;
        for (Eigen::Index k = 0; k < dim(); ++k) {
            if (kept[static_cast<std::size_t>(k)]) continue;
            const bool used = is_affine() ? coeffs_(k) != 0.0 : !center_map_.col(k).isZero(0.0);
            if (used) throw SemanticError("predicate depends on a state outside its clique");
        }
        const auto n = static_cast<Eigen::Index>(columns.size());
        if (is_affine()) {
            Eigen::VectorXd c(n);
            for (Eigen::Index k = 0; k < n; ++k) c(k) = coeffs_(columns[static_cast<std::size_t>(k)]);
            return affine(std::move(c), offset_);
        }
        Eigen::MatrixXd a(center_map_.rows(), n);
        for (Eigen::Index k = 0; k < n; ++k) a.col(k) = center_map_.col(columns[static_cast<std::size_t>(k)]);
        return quad_ball(std::move(a), shift_, offset_);
    }

    bool operator==(const Predicate& o) const {
        if (form_ != o.form_ || offset_ != o.offset_) return false;
        if (is_affine()) return coeffs_.size() == o.coeffs_.size() && coeffs_ == o.coeffs_;
        return center_map_.rows() == o.center_map_.rows() && center_map_.cols() == o.center_map_.cols() &&
               center_map_ == o.center_map_ && shift_ == o.shift_;
    }

private:
    PredicateForm form_ = PredicateForm::affine;
    Eigen::VectorXd coeffs_;
    double offset_ = 0.0;
    Eigen::MatrixXd center_map_;
    Eigen::VectorXd shift_;
};

}  // namespace stlcbf
