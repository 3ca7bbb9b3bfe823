#pragma once

#include "pwmc/types.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace pwmc {

enum class LPStatus { optimal, infeasible, unbounded, iteration_limit };

struct LPResult {
    LPStatus status = LPStatus::infeasible;
    double objective = 0.0;
    Vec x;
};

namespace detail {

/// Dense two-phase tableau simplex for
///     maximize c^T x  subject to  A x <= b,  x >= 0
/// with Bland's rule on both the entering and leaving choice, so degenerate
/// vertices (many hyperplanes through one point) cannot cycle.
class TableauSimplex {
  public:
    TableauSimplex(const Mat& A, const Vec& b, const Vec& c)
        : m_(static_cast<int>(b.size())), n_(static_cast<int>(c.size())), basis_(m_), nonbasis_(n_ + 1),
          t_(m_ + 2, n_ + 2) {
        t_.setZero();
        for (int i = 0; i < m_; ++i) {
            for (int j = 0; j < n_; ++j) {
                t_(i, j) = A(i, j);
            }
            basis_[i] = n_ + i;
            t_(i, n_) = -1.0; // auxiliary column for phase one
            t_(i, n_ + 1) = b[i];
        }
        for (int j = 0; j < n_; ++j) {
            nonbasis_[j] = j;
            t_(m_, j) = -c[j];
        }
        nonbasis_[n_] = -1;
        t_(m_ + 1, n_) = 1.0;
    }

    LPResult solve(int max_pivots) {
        max_pivots_ = max_pivots;
        LPResult res;
        int r = 0;
        for (int i = 1; i < m_; ++i) {
            if (t_(i, n_ + 1) < t_(r, n_ + 1)) {
                r = i;
            }
        }
        if (m_ > 0 && t_(r, n_ + 1) < -kEps) {
            pivot(r, n_);
            const auto phase1 = run(true);
            if (phase1 == LPStatus::iteration_limit) {
                res.status = phase1;
                return res;
            }
            if (phase1 != LPStatus::optimal || t_(m_ + 1, n_ + 1) < -kEps) {
                res.status = LPStatus::infeasible;
                return res;
            }
            for (int i = 0; i < m_; ++i) {
                if (basis_[i] == -1) {
                    // auxiliary still basic at level zero: swap it out on the largest entry
                    int s = -1;
                    for (int j = 0; j <= n_; ++j) {
                        if (s == -1 || std::abs(t_(i, j)) > std::abs(t_(i, s))) {
                            s = j;
                        }
                    }
                    if (std::abs(t_(i, s)) > kEps) {
                        pivot(i, s);
                    }
                }
            }
        }
        const auto phase2 = run(false);
        if (phase2 != LPStatus::optimal) {
            res.status = phase2;
            return res;
        }
        res.status = LPStatus::optimal;
        res.x = Vec::Zero(n_);
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] >= 0 && basis_[i] < n_) {
                res.x[basis_[i]] = t_(i, n_ + 1);
            }
        }
        res.objective = t_(m_, n_ + 1);
        return res;
    }

  private:
    static constexpr double kEps = 1e-11;

    void pivot(int r, int s) {
        const double inv = 1.0 / t_(r, s);
        for (int i = 0; i < m_ + 2; ++i) {
            if (i == r || t_(i, s) == 0.0) {
                continue;
            }
            const double f = t_(i, s) * inv;
            for (int j = 0; j < n_ + 2; ++j) {
                if (j != s) {
                    t_(i, j) -= t_(r, j) * f;
                }
            }
            t_(i, s) = -f;
        }
        for (int j = 0; j < n_ + 2; ++j) {
            if (j != s) {
                t_(r, j) *= inv;
            }
        }
        t_(r, s) = inv;
        std::swap(basis_[r], nonbasis_[s]);
    }

    LPStatus run(bool phase_one) {
        const int row = phase_one ? m_ + 1 : m_;
        while (true) {
            if (pivots_++ > max_pivots_) {
                return LPStatus::iteration_limit;
            }
            // Bland: entering variable = smallest label with negative reduced cost.
            int s = -1;
            for (int j = 0; j <= n_; ++j) {
                if (!phase_one && nonbasis_[j] == -1) {
                    continue;
                }
                if (t_(row, j) < -kEps && (s == -1 || nonbasis_[j] < nonbasis_[s])) {
                    s = j;
                }
            }
            if (s == -1) {
                return LPStatus::optimal;
            }
            int r = -1;
            double best = 0.0;
            for (int i = 0; i < m_; ++i) {
                if (t_(i, s) <= kEps) {
                    continue;
                }
                const double ratio = t_(i, n_ + 1) / t_(i, s);
                if (r == -1 || ratio < best - kEps || (std::abs(ratio - best) <= kEps && basis_[i] < basis_[r])) {
                    r = i;
                    best = ratio;
                }
            }
            if (r == -1) {
                return LPStatus::unbounded;
            }
            pivot(r, s);
        }
    }

    int m_;
    int n_;
    std::vector<int> basis_;
    std::vector<int> nonbasis_;
    Mat t_;
    int max_pivots_ = 0;
    int pivots_ = 0;
};

} // namespace detail

/// maximize c^T x  s.t.  A x <= b,  x >= 0.
inline LPResult solve_lp(const Mat& A, const Vec& b, const Vec& c, int max_pivots = 100000) {
    if (A.rows() != b.size() || A.cols() != c.size()) {
        throw InputError("solve_lp: inconsistent dimensions");
    }
    detail::TableauSimplex lp(A, b, c);
    return lp.solve(max_pivots);
}

/// maximize c^T x  s.t.  A x <= b  with x free (split as x+ - x-).
inline LPResult solve_lp_free(const Mat& A, const Vec& b, const Vec& c, int max_pivots = 100000) {
    const auto n = A.cols();
    Mat split(A.rows(), 2 * n);
    split << A, -A;
    Vec c2(2 * n);
    c2 << c, -c;
    auto res = solve_lp(split, b, c2, max_pivots);
    if (res.status == LPStatus::optimal) {
        Vec x = res.x.head(n) - res.x.tail(n);
        res.x = std::move(x);
    }
    return res;
}

} // namespace pwmc
