#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

namespace pwmc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Malformed or dimensionally inconsistent input (networks, data, files).
class InputError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not reach its tolerance.
class ConvergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A check was asked to run where its preconditions do not hold
/// (e.g. differentiating across a piece boundary).
class RefusalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Sorted list of parameter coordinates.
using IndexSet = std::vector<std::size_t>;

/// Collection of index sets covering every parameter coordinate.
struct IndexCover {
    std::vector<IndexSet> sets;

    [[nodiscard]] bool covers(std::size_t n) const {
        std::vector<bool> seen(n, false);
        for (const auto& s : sets) {
            for (auto i : s) {
                if (i >= n) {
                    return false;
                }
                seen[i] = true;
            }
        }
        for (bool b : seen) {
            if (!b) {
                return false;
            }
        }
        return true;
    }

    static IndexCover joint(std::size_t n) {
        IndexSet all(n);
        for (std::size_t i = 0; i < n; ++i) {
            all[i] = i;
        }
        return IndexCover{{all}};
    }

    static IndexCover singletons(std::size_t n) {
        IndexCover c;
        for (std::size_t i = 0; i < n; ++i) {
            c.sets.push_back({i});
        }
        return c;
    }
};

/// Compact text for a number in messages (six significant digits).
inline std::string format_number(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

inline Vec gather(const Vec& x, const IndexSet& idx) {
    Vec out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(idx[i])];
    }
    return out;
}

/// Copy of `base` with the coordinates in `idx` replaced by `values`.
inline Vec splice(const Vec& base, const IndexSet& idx, const Vec& values) {
    if (static_cast<std::size_t>(values.size()) != idx.size()) {
        throw InputError("splice: " + std::to_string(values.size()) + " values for " +
                         std::to_string(idx.size()) + " free coordinates");
    }
    Vec out = base;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out[static_cast<Eigen::Index>(idx[i])] = values[static_cast<Eigen::Index>(i)];
    }
    return out;
}

/// Indices of [0, n) not in `idx`, ascending.
inline IndexSet complement(const IndexSet& idx, std::size_t n) {
    std::vector<bool> taken(n, false);
    for (auto i : idx) {
        if (i < n) {
            taken[i] = true;
        }
    }
    IndexSet out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) {
            out.push_back(i);
        }
    }
    return out;
}

} // namespace pwmc
