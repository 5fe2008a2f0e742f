#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace stlcbf {

/// Block layout of a stacked state vector: agent i owns entries
/// [offset(i), offset(i) + dim(i)).
class StateLayout {
public:
    StateLayout() = default;
    explicit StateLayout(std::vector<int> dims) : dims_(std::move(dims)) {
        offsets_.resize(dims_.size());
        int acc = 0;
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (dims_[i] <= 0) throw std::invalid_argument("agent state dimension must be positive");
            offsets_[i] = acc;
            acc += dims_[i];
        }
        total_ = acc;
    }

    std::size_t agents() const noexcept { return dims_.size(); }
    int dim(std::size_t i) const { return dims_.at(i); }
    int offset(std::size_t i) const { return offsets_.at(i); }
    int total() const noexcept { return total_; }
    int max_dim() const noexcept { return dims_.empty() ? 0 : *std::max_element(dims_.begin(), dims_.end()); }
    const std::vector<int>& dims() const noexcept { return dims_; }

    /// Agent owning stacked coordinate `k`.
    std::size_t owner(int k) const {
        for (std::size_t i = 0; i < dims_.size(); ++i)
            if (k >= offsets_[i] && k < offsets_[i] + dims_[i]) return i;
        throw std::out_of_range("coordinate outside layout");
    }

    /// Layout of the sub-state formed by stacking `members` in the given order.
    StateLayout select(const std::vector<std::size_t>& members) const {
        std::vector<int> d;
        d.reserve(members.size());
        for (auto m : members) d.push_back(dim(m));
        return StateLayout(std::move(d));
    }

    /// Stacked-state indices of `members`, in order.
    std::vector<Eigen::Index> columns(const std::vector<std::size_t>& members) const {
        std::vector<Eigen::Index> cols;
        for (auto m : members)
            for (int c = 0; c < dim(m); ++c) cols.push_back(offset(m) + c);
        return cols;
    }

    Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<std::size_t>& members) const {
        const auto cols = columns(members);
        Eigen::VectorXd out(static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) out(static_cast<Eigen::Index>(k)) = x(cols[k]);
        return out;
    }

    bool operator==(const StateLayout& o) const { return dims_ == o.dims_; }

private:
    std::vector<int> dims_;
    std::vector<int> offsets_;
    int total_ = 0;
};

}  // namespace stlcbf
