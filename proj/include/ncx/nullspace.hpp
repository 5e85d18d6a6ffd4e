#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <vector>

#include "omp.hpp"

namespace ncx {

using QVec = std::vector<mpq_class>;
using QMat = std::vector<QVec>;  // row major

namespace detail {

using ZRow = std::vector<mpz_class>;

inline std::vector<ZRow> clear_denominators(const QMat& m) {
    std::vector<ZRow> z(m.size());
    for (size_t i = 0; i < m.size(); ++i) {
        mpz_class lcm = 1;
        for (const auto& q : m[i]) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), q.get_den().get_mpz_t());
        z[i].resize(m[i].size());
        for (size_t j = 0; j < m[i].size(); ++j) {
            mpz_class t = lcm / m[i][j].get_den();
            z[i][j] = m[i][j].get_num() * t;
        }
    }
    return z;
}

// One Bareiss update sweep below pivot row r at column c, dividing by the
// previous pivot. Exact divisions throughout, no rational arithmetic.
inline void bareiss_step(std::vector<ZRow>& a, size_t r, size_t c, const mpz_class& prev, bool parallel) {
    const long m = static_cast<long>(a.size());
    const size_t n = a[r].size();
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long i = static_cast<long>(r) + 1; i < m; ++i) {
        ZRow& row = a[i];
        if (row[c] == 0) {
            for (size_t j = c + 1; j < n; ++j) {
                if (row[j] == 0) continue;
                mpz_class t = a[r][c] * row[j];
                mpz_divexact(row[j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
            }
            continue;
        }
        for (size_t j = c + 1; j < n; ++j) {
            mpz_class t = a[r][c] * row[j] - row[c] * a[r][j];
            mpz_divexact(row[j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
        }
        row[c] = 0;
    }
}

}  // namespace detail

// Right kernel basis of M (vectors v with M v = 0), via fraction-free
// elimination over the integers and rational back substitution. The parallel
// flag only distributes independent row updates; results are identical.
inline std::vector<QVec> solve_nullspace(const QMat& m, size_t ncols, bool parallel = use_omp) {
    std::vector<detail::ZRow> a = detail::clear_denominators(m);
    const size_t nrows = a.size();
    std::vector<size_t> pivot_row, pivot_col;
    std::vector<bool> is_pivot_col(ncols, false);
    mpz_class prev = 1;
    size_t r = 0;
    for (size_t c = 0; c < ncols && r < nrows; ++c) {
        size_t sel = r;
        while (sel < nrows && a[sel][c] == 0) ++sel;
        if (sel == nrows) continue;
        std::swap(a[sel], a[r]);
        detail::bareiss_step(a, r, c, prev, parallel);
        prev = a[r][c];
        pivot_row.push_back(r);
        pivot_col.push_back(c);
        is_pivot_col[c] = true;
        ++r;
    }
    std::vector<QVec> basis;
    for (size_t f = 0; f < ncols; ++f) {
        if (is_pivot_col[f]) continue;
        QVec v(ncols, mpq_class(0));
        v[f] = 1;
        for (size_t k = pivot_row.size(); k-- > 0;) {
            const detail::ZRow& row = a[pivot_row[k]];
            const size_t c = pivot_col[k];
            mpq_class s = 0;
            for (size_t j = c + 1; j < ncols; ++j) {
                if (row[j] != 0 && v[j] != 0) s += mpq_class(row[j]) * v[j];
            }
            if (s != 0) {
                v[c] = -s / mpq_class(row[c]);
                v[c].canonicalize();
            }
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

// Growing reduced row echelon basis over the rationals. reduce() is canonical
// modulo the accumulated span, which makes it usable both as a membership test
// and as a normal form for quotient spaces.
struct IncrementalEchelon {
    size_t ncols;
    std::vector<QVec> rows;
    std::vector<size_t> pivots;

    explicit IncrementalEchelon(size_t n) : ncols(n) {}

    QVec reduce(QVec v) const {
        for (size_t i = 0; i < rows.size(); ++i) {
            mpq_class c = v[pivots[i]];
            if (c == 0) continue;
            for (size_t j = 0; j < ncols; ++j) {
                if (rows[i][j] != 0) v[j] -= c * rows[i][j];
            }
        }
        return v;
    }

    bool contains(const QVec& v) const {
        QVec r = reduce(v);
        for (const auto& q : r)
            if (q != 0) return false;
        return true;
    }

    // returns true when v was independent of the current span
    bool insert(QVec v) {
        v = reduce(std::move(v));
        size_t p = ncols;
        for (size_t j = 0; j < ncols; ++j) {
            if (v[j] != 0) {
                p = j;
                break;
            }
        }
        if (p == ncols) return false;
        mpq_class inv = 1 / v[p];
        for (auto& q : v) q *= inv;
        for (size_t i = 0; i < rows.size(); ++i) {
            mpq_class c = rows[i][p];
            if (c == 0) continue;
            for (size_t j = 0; j < ncols; ++j) {
                if (v[j] != 0) rows[i][j] -= c * v[j];
            }
        }
        rows.push_back(std::move(v));
        pivots.push_back(p);
        return true;
    }

    size_t rank() const { return rows.size(); }
};

}  // namespace ncx
