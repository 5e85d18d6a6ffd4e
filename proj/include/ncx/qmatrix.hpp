#pragma once

#include "nullspace.hpp"

namespace ncx {

inline QMat qmat_identity(size_t n) {
    QMat m(n, QVec(n, mpq_class(0)));
    for (size_t i = 0; i < n; ++i) m[i][i] = 1;
    return m;
}

inline QVec qmat_vec(const QMat& m, const QVec& v) {
    QVec r(m.size(), mpq_class(0));
    for (size_t i = 0; i < m.size(); ++i)
        for (size_t j = 0; j < v.size(); ++j)
            if (m[i][j] != 0 && v[j] != 0) r[i] += m[i][j] * v[j];
    return r;
}

inline QMat qmat_mul(const QMat& a, const QMat& b) {
    size_t n = a.size(), k = b.size(), p = b.empty() ? 0 : b[0].size();
    QMat r(n, QVec(p, mpq_class(0)));
    for (size_t i = 0; i < n; ++i)
        for (size_t t = 0; t < k; ++t) {
            if (a[i][t] == 0) continue;
            for (size_t j = 0; j < p; ++j)
                if (b[t][j] != 0) r[i][j] += a[i][t] * b[t][j];
        }
    return r;
}

inline QMat qmat_add(QMat a, const QMat& b) {
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
    return a;
}

inline QMat qmat_scale(QMat a, const mpq_class& s) {
    for (auto& row : a)
        for (auto& q : row) q *= s;
    return a;
}

inline bool qmat_is_zero(const QMat& a) {
    for (const auto& row : a)
        for (const auto& q : row)
            if (q != 0) return false;
    return true;
}

// Gauss-Jordan inverse; returns false when the matrix is singular.
inline bool qmat_invert(QMat a, QMat& out) {
    const size_t n = a.size();
    out = qmat_identity(n);
    for (size_t c = 0; c < n; ++c) {
        size_t p = c;
        while (p < n && a[p][c] == 0) ++p;
        if (p == n) return false;
        std::swap(a[p], a[c]);
        std::swap(out[p], out[c]);
        mpq_class inv = 1 / a[c][c];
        for (size_t j = 0; j < n; ++j) {
            a[c][j] *= inv;
            out[c][j] *= inv;
        }
        for (size_t i = 0; i < n; ++i) {
            if (i == c || a[i][c] == 0) continue;
            mpq_class f = a[i][c];
            for (size_t j = 0; j < n; ++j) {
                a[i][j] -= f * a[c][j];
                out[i][j] -= f * out[c][j];
            }
        }
    }
    return true;
}

}  // namespace ncx
