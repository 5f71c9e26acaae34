#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmp/error.hpp"

namespace pmp {

using Counts = std::vector<std::size_t>;

/// Number of elements of a tensor with the given per-axis counts.
inline std::size_t element_count(std::span<const std::size_t> counts) {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{1},
                           std::multiplies<>{});
}

inline bool all_odd(std::span<const std::size_t> counts) {
    for (auto n : counts)
        if (n % 2 == 0) return false;
    return true;
}

inline std::string format_counts(std::span<const std::size_t> counts) {
    std::string out;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i) out += 'x';
        out += std::to_string(counts[i]);
    }
    return out;
}

// Row-major linearization: axis 0 varies slowest, the last axis fastest.

inline std::size_t linearize(std::span<const std::size_t> index,
                             std::span<const std::size_t> counts) {
    if (index.size() != counts.size())
        throw InvalidArgument("linearize: index rank does not match counts");
    std::size_t lin = 0;
    for (std::size_t a = 0; a < counts.size(); ++a) {
        if (index[a] >= counts[a]) throw InvalidArgument("linearize: index out of range");
        lin = lin * counts[a] + index[a];
    }
    return lin;
}

inline void delinearize(std::size_t lin, std::span<const std::size_t> counts,
                        std::span<std::size_t> index) {
    for (std::size_t a = counts.size(); a-- > 0;) {
        index[a] = lin % counts[a];
        lin /= counts[a];
    }
}

inline std::vector<std::size_t> delinearize(std::size_t lin,
                                            std::span<const std::size_t> counts) {
    if (lin >= element_count(counts)) throw InvalidArgument("delinearize: index out of range");
    std::vector<std::size_t> index(counts.size());
    delinearize(lin, counts, index);
    return index;
}

/// Advances a multi-index in linearization order. Returns false after the last element.
inline bool next_index(std::span<std::size_t> index, std::span<const std::size_t> counts) {
    for (std::size_t a = counts.size(); a-- > 0;) {
        if (++index[a] < counts[a]) return true;
        index[a] = 0;
    }
    return false;
}

/// Dense real tensor stored in the row-major linearization order.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Counts counts)
        : counts_(std::move(counts)), values_(element_count(counts_), 0.0) {}

    Tensor(Counts counts, std::vector<double> values)
        : counts_(std::move(counts)), values_(std::move(values)) {
        if (values_.size() != element_count(counts_))
            throw InvalidArgument("tensor: " + std::to_string(values_.size()) +
                                  " values do not match counts " + format_counts(counts_));
    }

    const Counts& counts() const noexcept { return counts_; }
    std::size_t rank() const noexcept { return counts_.size(); }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    double& at(std::span<const std::size_t> index) { return values_[linearize(index, counts_)]; }
    double at(std::span<const std::size_t> index) const {
        return values_[linearize(index, counts_)];
    }

    std::vector<double> release() && { return std::move(values_); }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Counts counts_;
    std::vector<double> values_;
};

/// psi: reinterprets a linear weight vector as a tensor over the physical grid axes.
inline Tensor reshape_to_physical(std::vector<double> v, Counts counts) {
    if (v.size() != element_count(counts))
        throw InvalidArgument("reshape_to_physical: vector length " + std::to_string(v.size()) +
                              " does not match counts " + format_counts(counts));
    return Tensor(std::move(counts), std::move(v));
}

/// psi^-1.
inline std::vector<double> reshape_to_linear(Tensor t) { return std::move(t).release(); }

}  // namespace pmp
