#pragma once

#include "bar.hpp"
#include "freeprod.hpp"
#include "xcomplex.hpp"

namespace ncx {

// exp(-x) for nilpotent x, any element type with a supplied product
template <class E, class Mul>
E nilpotent_exp_neg(const E& unit, const E& x, Mul mul, int max_iter = 64) {
    E acc = unit;
    E pw = unit;
    for (int k = 1;; ++k) {
        assert(k <= max_iter);
        pw = mul(pw, x);
        pw *= Scalar(mpq_class(-1, static_cast<unsigned long>(k)));
        if (pw.is_zero()) break;
        acc += pw;
    }
    return acc;
}

// (-1)^K / (K+2)!, the weight of a monomial of total degree K in the
// expansion of a two-simplex integral of exponentials
inline Scalar simplex_exp_coeff(long k_total) {
    mpz_class f = 1;
    for (long i = 2; i <= k_total + 2; ++i) f *= i;
    mpq_class q(k_total % 2 == 0 ? 1 : -1);
    q /= mpq_class(f);
    return Scalar(q);
}

// ---------------------------------------------------------------------------
// Chern character of a single algebra with odd connection A
// ---------------------------------------------------------------------------

inline AlgElement curvature(const XComplex& X, const AlgElement& A) {
    return X.alg_delta(A) + X.alg->multiply(A, A);
}

inline AlgElement exp_curvature(const XComplex& X, const AlgElement& F) {
    AlgElement unit(GenWord::one());
    return nilpotent_exp_neg(unit, F,
                             [&](const AlgElement& a, const AlgElement& b) { return X.alg->multiply(a, b); });
}

struct ChernSingle {
    AlgElement F;
    AlgElement ch0;
    Omega1Element ch1;
};

inline ChernSingle chern_single(const XComplex& X, const AlgElement& A) {
    AlgElement F = curvature(X, A);
    AlgElement e = exp_curvature(X, F);
    Omega1Element ch1 = -X.om_left(e, X.om_d(A));
    return {F, e, ch1};
}

// ---------------------------------------------------------------------------
// Homotopy layer: coefficients in the polynomial forms on [0,1].
// A term (tp, dt, w) stands for w * t^tp * dt^dt with t central even and
// dt central odd; the algebra leg stays on the left.
// ---------------------------------------------------------------------------

template <class W>
struct TWord {
    long tp = 0;
    int dt = 0;
    W w;

    friend bool operator==(const TWord& a, const TWord& b) {
        return a.tp == b.tp && a.dt == b.dt && a.w == b.w;
    }
    friend bool operator<(const TWord& a, const TWord& b) {
        if (a.tp != b.tp) return a.tp < b.tp;
        if (a.dt != b.dt) return a.dt < b.dt;
        return a.w < b.w;
    }
};

using TAlg = Element<TWord<GenWord>>;
using TOm = Element<TWord<Omega1Word>>;

inline TAlg t_mul(const XComplex& X, const TAlg& x, const TAlg& y) {
    TAlg out;
    for (const auto& [wx, cx] : x.terms)
        for (const auto& [wy, cy] : y.terms) {
            if (wx.dt && wy.dt) continue;
            Scalar s = cx * cy * Scalar(koszul_sign(wx.dt, X.alg->parity(wy.w)));
            AlgElement p = X.alg->multiply(AlgElement(wx.w), AlgElement(wy.w));
            for (const auto& [pw, pc] : p.terms)
                out.add_term(TWord<GenWord>{wx.tp + wy.tp, wx.dt + wy.dt, pw}, s * pc);
        }
    return out;
}

inline TOm t_mul_ao(const XComplex& X, const TAlg& z, const TOm& e) {
    TOm out;
    for (const auto& [wz, cz] : z.terms)
        for (const auto& [we, ce] : e.terms) {
            if (wz.dt && we.dt) continue;
            Scalar s = cz * ce * Scalar(koszul_sign(wz.dt, X.om_parity(we.w)));
            Omega1Element p = X.om_left(AlgElement(wz.w), Omega1Element(we.w));
            for (const auto& [pw, pc] : p.terms)
                out.add_term(TWord<Omega1Word>{wz.tp + we.tp, wz.dt + we.dt, pw}, s * pc);
        }
    return out;
}

inline TOm t_mul_oa(const XComplex& X, const TOm& e, const TAlg& z) {
    TOm out;
    for (const auto& [we, ce] : e.terms)
        for (const auto& [wz, cz] : z.terms) {
            if (we.dt && wz.dt) continue;
            Scalar s = ce * cz * Scalar(koszul_sign(we.dt, X.alg->parity(wz.w)));
            Omega1Element p = X.om_right(Omega1Element(we.w), AlgElement(wz.w));
            for (const auto& [pw, pc] : p.terms)
                out.add_term(TWord<Omega1Word>{we.tp + wz.tp, we.dt + wz.dt, pw}, s * pc);
        }
    return out;
}

inline TAlg t_delta(const XComplex& X, const TAlg& x) {
    TAlg out;
    for (const auto& [w, c] : x.terms) {
        AlgElement d = X.alg_delta(AlgElement(w.w));
        for (const auto& [dw, dc] : d.terms) out.add_term(TWord<GenWord>{w.tp, w.dt, dw}, c * dc);
    }
    return out;
}

inline TOm t_om_delta(const XComplex& X, const TOm& x) {
    TOm out;
    for (const auto& [w, c] : x.terms) {
        Omega1Element d = X.om_delta(Omega1Element(w.w));
        for (const auto& [dw, dc] : d.terms) out.add_term(TWord<Omega1Word>{w.tp, w.dt, dw}, c * dc);
    }
    return out;
}

inline TOm t_d(const XComplex& X, const TAlg& x) {
    TOm out;
    for (const auto& [w, c] : x.terms) {
        Omega1Element d = X.om_d(AlgElement(w.w));
        for (const auto& [dw, dc] : d.terms) out.add_term(TWord<Omega1Word>{w.tp, w.dt, dw}, c * dc);
    }
    return out;
}

inline TAlg t_bbar(const XComplex& X, const TOm& x) {
    TAlg out;
    for (const auto& [w, c] : x.terms) {
        AlgElement d = X.bbar(Omega1Element(w.w));
        for (const auto& [dw, dc] : d.terms) out.add_term(TWord<GenWord>{w.tp, w.dt, dw}, c * dc);
    }
    return out;
}

// dt d/dt; the dt crosses the algebra leg on its way in
inline TAlg t_dt_a(const XComplex& X, const TAlg& x) {
    TAlg out;
    for (const auto& [w, c] : x.terms) {
        if (w.tp == 0 || w.dt == 1) continue;
        Scalar s = c * Scalar(w.tp) * Scalar(koszul_sign(1, X.alg->parity(w.w)));
        out.add_term(TWord<GenWord>{w.tp - 1, 1, w.w}, s);
    }
    return out;
}

inline TOm t_dt_o(const XComplex& X, const TOm& x) {
    TOm out;
    for (const auto& [w, c] : x.terms) {
        if (w.tp == 0 || w.dt == 1) continue;
        Scalar s = c * Scalar(w.tp) * Scalar(koszul_sign(1, X.om_parity(w.w)));
        out.add_term(TWord<Omega1Word>{w.tp - 1, 1, w.w}, s);
    }
    return out;
}

inline TAlg t_project_a(const TAlg& x, int dt) {
    TAlg out;
    for (const auto& [w, c] : x.terms)
        if (w.dt == dt) out.add_term(w, c);
    return out;
}

inline TOm t_project_o(const TOm& x, int dt) {
    TOm out;
    for (const auto& [w, c] : x.terms)
        if (w.dt == dt) out.add_term(w, c);
    return out;
}

// value of the dt-free slice at t = 0 or t = 1
inline AlgElement t_eval_a(const TAlg& x, bool at_one) {
    AlgElement out;
    for (const auto& [w, c] : x.terms) {
        if (w.dt != 0) continue;
        if (!at_one && w.tp != 0) continue;
        out.add_term(w.w, c);
    }
    return out;
}

inline Omega1Element t_eval_o(const TOm& x, bool at_one) {
    Omega1Element out;
    for (const auto& [w, c] : x.terms) {
        if (w.dt != 0) continue;
        if (!at_one && w.tp != 0) continue;
        out.add_term(w.w, c);
    }
    return out;
}

// commutator quotient taken coefficientwise in t and dt
inline bool t_natural_is_zero(const XComplex& X, const TOm& e) {
    std::map<std::pair<long, int>, Omega1Element> slices;
    for (const auto& [w, c] : e.terms) slices[{w.tp, w.dt}].add_term(w.w, c);
    for (const auto& [k, v] : slices)
        if (!X.natural_is_zero(v)) return false;
    return true;
}

struct ChernHomotopy {
    TAlg F;
    TAlg ch0;
    TOm ch1;
};

inline ChernHomotopy chern_homotopy(const XComplex& X, const TAlg& A) {
    TAlg F = t_delta(X, A) + t_dt_a(X, A) + t_mul(X, A, A);
    TAlg unit(TWord<GenWord>{0, 0, GenWord::one()});
    TAlg ch0 = nilpotent_exp_neg(unit, F, [&](const TAlg& a, const TAlg& b) { return t_mul(X, a, b); });
    TOm ch1 = -t_mul_ao(X, ch0, t_d(X, A));
    return {F, ch0, ch1};
}

// straight-line path from A0 to A1
inline TAlg t_interpolate(const AlgElement& A0, const AlgElement& A1) {
    TAlg out;
    for (const auto& [w, c] : A0.terms) out.add_term(TWord<GenWord>{0, 0, w}, c);
    for (const auto& [w, c] : (A1 - A0).terms) out.add_term(TWord<GenWord>{1, 0, w}, c);
    return out;
}

// ---------------------------------------------------------------------------
// Two-algebra Chern character. Elements live in the four corners
//   R1 (x) R2,  O1 (x) R2,  R1 (x) O2,  O1 (x) O2
// where Oi is the one-form bimodule of factor i. Crossing moves always pay
// the Koszul sign of the two legs that swap.
// ---------------------------------------------------------------------------

struct C10Word {
    Omega1Word om;
    GenWord w2;
    friend bool operator==(const C10Word& a, const C10Word& b) { return a.om == b.om && a.w2 == b.w2; }
    friend bool operator<(const C10Word& a, const C10Word& b) {
        if (!(a.om == b.om)) return a.om < b.om;
        return a.w2 < b.w2;
    }
};

struct C01Word {
    GenWord w1;
    Omega1Word om;
    friend bool operator==(const C01Word& a, const C01Word& b) { return a.w1 == b.w1 && a.om == b.om; }
    friend bool operator<(const C01Word& a, const C01Word& b) {
        if (!(a.w1 == b.w1)) return a.w1 < b.w1;
        return a.om < b.om;
    }
};

struct C11Word {
    Omega1Word om1;
    Omega1Word om2;
    friend bool operator==(const C11Word& a, const C11Word& b) { return a.om1 == b.om1 && a.om2 == b.om2; }
    friend bool operator<(const C11Word& a, const C11Word& b) {
        if (!(a.om1 == b.om1)) return a.om1 < b.om1;
        return a.om2 < b.om2;
    }
};

using C10Element = Element<C10Word>;
using C01Element = Element<C01Word>;
using C11Element = Element<C11Word>;

struct ChernPairCtx {
    const XComplex* x1;
    const XComplex* x2;
    PairAlgebra pa;

    ChernPairCtx(const XComplex* a, const XComplex* b) : x1(a), x2(b), pa{a->alg, b->alg} {}

    int parity10(const C10Word& w) const { return (x1->om_parity(w.om) + x2->alg->parity(w.w2)) & 1; }
    int parity01(const C01Word& w) const { return (x1->alg->parity(w.w1) + x2->om_parity(w.om)) & 1; }
    int parity11(const C11Word& w) const { return (x1->om_parity(w.om1) + x2->om_parity(w.om2)) & 1; }

    C10Element mul_10_00(const C10Element& x, const PairElement& y) const {
        C10Element out;
        for (const auto& [wx, cx] : x.terms)
            for (const auto& [wy, cy] : y.terms) {
                Scalar s = cx * cy * Scalar(koszul_sign(x2->alg->parity(wx.w2), x1->alg->parity(wy.a)));
                Omega1Element l = x1->om_right(Omega1Element(wx.om), AlgElement(wy.a));
                AlgElement r = x2->alg->multiply(AlgElement(wx.w2), AlgElement(wy.b));
                for (const auto& [lw, lc] : l.terms)
                    for (const auto& [rw, rc] : r.terms) out.add_term(C10Word{lw, rw}, s * lc * rc);
            }
        return out;
    }

    C01Element mul_00_01(const PairElement& x, const C01Element& y) const {
        C01Element out;
        for (const auto& [wx, cx] : x.terms)
            for (const auto& [wy, cy] : y.terms) {
                Scalar s = cx * cy * Scalar(koszul_sign(x2->alg->parity(wx.b), x1->alg->parity(wy.w1)));
                AlgElement l = x1->alg->multiply(AlgElement(wx.a), AlgElement(wy.w1));
                Omega1Element r = x2->om_left(AlgElement(wx.b), Omega1Element(wy.om));
                for (const auto& [lw, lc] : l.terms)
                    for (const auto& [rw, rc] : r.terms) out.add_term(C01Word{lw, rw}, s * lc * rc);
            }
        return out;
    }

    C01Element mul_01_00(const C01Element& x, const PairElement& y) const {
        C01Element out;
        for (const auto& [wx, cx] : x.terms)
            for (const auto& [wy, cy] : y.terms) {
                Scalar s = cx * cy * Scalar(koszul_sign(x2->om_parity(wx.om), x1->alg->parity(wy.a)));
                AlgElement l = x1->alg->multiply(AlgElement(wx.w1), AlgElement(wy.a));
                Omega1Element r = x2->om_right(Omega1Element(wx.om), AlgElement(wy.b));
                for (const auto& [lw, lc] : l.terms)
                    for (const auto& [rw, rc] : r.terms) out.add_term(C01Word{lw, rw}, s * lc * rc);
            }
        return out;
    }

    C11Element mul_10_01(const C10Element& x, const C01Element& y) const {
        C11Element out;
        for (const auto& [wx, cx] : x.terms)
            for (const auto& [wy, cy] : y.terms) {
                Scalar s = cx * cy * Scalar(koszul_sign(x2->alg->parity(wx.w2), x1->alg->parity(wy.w1)));
                Omega1Element l = x1->om_right(Omega1Element(wx.om), AlgElement(wy.w1));
                Omega1Element r = x2->om_left(AlgElement(wx.w2), Omega1Element(wy.om));
                for (const auto& [lw, lc] : l.terms)
                    for (const auto& [rw, rc] : r.terms) out.add_term(C11Word{lw, rw}, s * lc * rc);
            }
        return out;
    }

    C11Element mul_01_10(const C01Element& x, const C10Element& y) const {
        C11Element out;
        for (const auto& [wx, cx] : x.terms)
            for (const auto& [wy, cy] : y.terms) {
                Scalar s = cx * cy * Scalar(koszul_sign(x2->om_parity(wx.om), x1->om_parity(wy.om)));
                Omega1Element l = x1->om_left(AlgElement(wx.w1), Omega1Element(wy.om));
                Omega1Element r = x2->om_right(Omega1Element(wx.om), AlgElement(wy.w2));
                for (const auto& [lw, lc] : l.terms)
                    for (const auto& [rw, rc] : r.terms) out.add_term(C11Word{lw, rw}, s * lc * rc);
            }
        return out;
    }

    C11Element mul_11_00(const C11Element& x, const PairElement& y) const {
        C11Element out;
        for (const auto& [wx, cx] : x.terms)
            for (const auto& [wy, cy] : y.terms) {
                Scalar s = cx * cy * Scalar(koszul_sign(x2->om_parity(wx.om2), x1->alg->parity(wy.a)));
                Omega1Element l = x1->om_right(Omega1Element(wx.om1), AlgElement(wy.a));
                Omega1Element r = x2->om_right(Omega1Element(wx.om2), AlgElement(wy.b));
                for (const auto& [lw, lc] : l.terms)
                    for (const auto& [rw, rc] : r.terms) out.add_term(C11Word{lw, rw}, s * lc * rc);
            }
        return out;
    }

    C11Element mul_00_11(const PairElement& x, const C11Element& y) const {
        C11Element out;
        for (const auto& [wx, cx] : x.terms)
            for (const auto& [wy, cy] : y.terms) {
                Scalar s = cx * cy * Scalar(koszul_sign(x2->alg->parity(wx.b), x1->om_parity(wy.om1)));
                Omega1Element l = x1->om_left(AlgElement(wx.a), Omega1Element(wy.om1));
                Omega1Element r = x2->om_left(AlgElement(wx.b), Omega1Element(wy.om2));
                for (const auto& [lw, lc] : l.terms)
                    for (const auto& [rw, rc] : r.terms) out.add_term(C11Word{lw, rw}, s * lc * rc);
            }
        return out;
    }

    C10Element d1_00(const PairElement& x) const {
        C10Element out;
        for (const auto& [w, c] : x.terms) {
            Omega1Element d = x1->om_d(AlgElement(w.a));
            for (const auto& [dw, dc] : d.terms) out.add_term(C10Word{dw, w.b}, c * dc);
        }
        return out;
    }

    C01Element d2_00(const PairElement& x) const {
        C01Element out;
        for (const auto& [w, c] : x.terms) {
            Scalar s = c * Scalar(koszul_sign(x1->alg->parity(w.a), 1));
            Omega1Element d = x2->om_d(AlgElement(w.b));
            for (const auto& [dw, dc] : d.terms) out.add_term(C01Word{w.a, dw}, s * dc);
        }
        return out;
    }

    C11Element d1_01(const C01Element& x) const {
        C11Element out;
        for (const auto& [w, c] : x.terms) {
            Omega1Element d = x1->om_d(AlgElement(w.w1));
            for (const auto& [dw, dc] : d.terms) out.add_term(C11Word{dw, w.om}, c * dc);
        }
        return out;
    }

    C11Element d2_10(const C10Element& x) const {
        C11Element out;
        for (const auto& [w, c] : x.terms) {
            Scalar s = c * Scalar(koszul_sign(x1->om_parity(w.om), 1));
            Omega1Element d = x2->om_d(AlgElement(w.w2));
            for (const auto& [dw, dc] : d.terms) out.add_term(C11Word{w.om, dw}, s * dc);
        }
        return out;
    }

    PairElement delta_00(const PairElement& x) const { return pa.delta(x, *x1->delta, *x2->delta); }

    C10Element delta_10(const C10Element& x) const {
        C10Element out;
        for (const auto& [w, c] : x.terms) {
            Omega1Element d1 = x1->om_delta(Omega1Element(w.om));
            for (const auto& [dw, dc] : d1.terms) out.add_term(C10Word{dw, w.w2}, c * dc);
            Scalar s = c * Scalar(koszul_sign(x1->om_parity(w.om), 1));
            AlgElement d2 = x2->alg_delta(AlgElement(w.w2));
            for (const auto& [dw, dc] : d2.terms) out.add_term(C10Word{w.om, dw}, s * dc);
        }
        return out;
    }

    C01Element delta_01(const C01Element& x) const {
        C01Element out;
        for (const auto& [w, c] : x.terms) {
            AlgElement d1 = x1->alg_delta(AlgElement(w.w1));
            for (const auto& [dw, dc] : d1.terms) out.add_term(C01Word{dw, w.om}, c * dc);
            Scalar s = c * Scalar(koszul_sign(x1->alg->parity(w.w1), 1));
            Omega1Element d2 = x2->om_delta(Omega1Element(w.om));
            for (const auto& [dw, dc] : d2.terms) out.add_term(C01Word{w.w1, dw}, s * dc);
        }
        return out;
    }

    C11Element delta_11(const C11Element& x) const {
        C11Element out;
        for (const auto& [w, c] : x.terms) {
            Omega1Element d1 = x1->om_delta(Omega1Element(w.om1));
            for (const auto& [dw, dc] : d1.terms) out.add_term(C11Word{dw, w.om2}, c * dc);
            Scalar s = c * Scalar(koszul_sign(x1->om_parity(w.om1), 1));
            Omega1Element d2 = x2->om_delta(Omega1Element(w.om2));
            for (const auto& [dw, dc] : d2.terms) out.add_term(C11Word{w.om1, dw}, s * dc);
        }
        return out;
    }

    PairElement bbar1_10(const C10Element& x) const {
        PairElement out;
        for (const auto& [w, c] : x.terms) {
            AlgElement b = x1->bbar(Omega1Element(w.om));
            out += pa.combine(b, AlgElement(w.w2), c);
        }
        return out;
    }

    PairElement bbar2_01(const C01Element& x) const {
        PairElement out;
        for (const auto& [w, c] : x.terms) {
            Scalar s = c * Scalar(koszul_sign(x1->alg->parity(w.w1), 1));
            AlgElement b = x2->bbar(Omega1Element(w.om));
            out += pa.combine(AlgElement(w.w1), b, s);
        }
        return out;
    }

    C01Element bbar1_11(const C11Element& x) const {
        C01Element out;
        for (const auto& [w, c] : x.terms) {
            AlgElement b = x1->bbar(Omega1Element(w.om1));
            for (const auto& [bw, bc] : b.terms) out.add_term(C01Word{bw, w.om2}, c * bc);
        }
        return out;
    }

    C10Element bbar2_11(const C11Element& x) const {
        C10Element out;
        for (const auto& [w, c] : x.terms) {
            Scalar s = c * Scalar(koszul_sign(x1->om_parity(w.om1), 1));
            AlgElement b = x2->bbar(Omega1Element(w.om2));
            for (const auto& [bw, bc] : b.terms) out.add_term(C10Word{w.om1, bw}, s * bc);
        }
        return out;
    }

    // membership in the commutator part of the factor-1 leg
    bool nat10_zero(const C10Element& e) const {
        std::map<GenWord, Omega1Element> legs;
        for (const auto& [w, c] : e.terms) legs[w.w2].add_term(w.om, c);
        for (const auto& [k, v] : legs)
            if (!x1->natural_is_zero(v)) return false;
        return true;
    }

    bool nat01_zero(const C01Element& e) const {
        std::map<GenWord, Omega1Element> legs;
        for (const auto& [w, c] : e.terms) legs[w.w1].add_term(w.om, c);
        for (const auto& [k, v] : legs)
            if (!x2->natural_is_zero(v)) return false;
        return true;
    }

    // membership in K1 (x) O2 + O1 (x) K2 with Ki the commutator subspaces:
    // reduce each column modulo K1, then the leftover rows must lie in K2
    bool nat11_zero_part(const C11Element& e, bool imag_part) const {
        std::map<size_t, QVec> cols;
        for (const auto& [w, c] : e.terms) {
            const mpq_class& v = imag_part ? c.im : c.re;
            if (v == 0) continue;
            auto i1 = x1->om_index.find(w.om1);
            auto i2 = x2->om_index.find(w.om2);
            assert(i1 != x1->om_index.end() && i2 != x2->om_index.end());
            QVec& col = cols[i2->second];
            if (col.empty()) col.assign(x1->om_basis.size(), mpq_class(0));
            col[i1->second] += v;
        }
        std::map<size_t, QVec> rows;
        for (auto& [j, col] : cols) {
            QVec red = x1->span.reduce(std::move(col));
            for (size_t i = 0; i < red.size(); ++i)
                if (red[i] != 0) {
                    QVec& row = rows[i];
                    if (row.empty()) row.assign(x2->om_basis.size(), mpq_class(0));
                    row[j] = red[i];
                }
        }
        for (const auto& [i, row] : rows)
            if (!x2->span.contains(row)) return false;
        return true;
    }

    bool nat11_zero(const C11Element& e) const {
        return nat11_zero_part(e, false) && nat11_zero_part(e, true);
    }
};

struct ChernPair {
    PairElement F;
    PairElement ch00;
    C10Element ch10;
    C01Element ch01;
    C11Element ch11;
};

inline ChernPair chern_pair(const ChernPairCtx& ctx, const PairElement& A) {
    const PairAlgebra& pa = ctx.pa;
    PairElement F = ctx.delta_00(A) + pa.multiply(A, A);
    PairElement unit(PairWord{GenWord::one(), GenWord::one()});
    PairElement e = nilpotent_exp_neg(
        unit, F, [&](const PairElement& a, const PairElement& b) { return pa.multiply(a, b); });

    C10Element d1A = ctx.d1_00(A);
    C01Element d2A = ctx.d2_00(A);
    C10Element ch10 = -ctx.mul_10_00(d1A, e);
    C01Element ch01 = -ctx.mul_00_01(e, d2A);
    C11Element ch11 = ctx.mul_10_01(ctx.mul_10_00(d1A, e), d2A);

    std::vector<PairElement> Fp{unit};
    while (!Fp.back().is_zero()) {
        assert(Fp.size() <= 64);
        Fp.push_back(pa.multiply(Fp.back(), F));
    }
    Fp.pop_back();
    C10Element d1F = ctx.d1_00(F);
    C01Element d2F = ctx.d2_00(F);
    for (size_t k0 = 0; k0 < Fp.size(); ++k0) {
        C01Element head = ctx.mul_00_01(Fp[k0], d2F);
        for (size_t k1 = 0; k1 < Fp.size(); ++k1) {
            C11Element mid = ctx.mul_01_10(ctx.mul_01_00(head, Fp[k1]), d1F);
            for (size_t k2 = 0; k2 < Fp.size(); ++k2)
                ch11 += ctx.mul_11_00(mid, Fp[k2]) *
                        simplex_exp_coeff(static_cast<long>(k0 + k1 + k2));
        }
    }
    return {F, e, ch10, ch01, ch11};
}

// ---------------------------------------------------------------------------
// Chern character over the free product, and its transport down to the
// two-algebra picture along the folding map and its curvature correction.
// ---------------------------------------------------------------------------

struct FpOm1Word {
    FreeWord u;
    FreeWord v;  // nonempty
    friend bool operator==(const FpOm1Word& a, const FpOm1Word& b) { return a.u == b.u && a.v == b.v; }
    friend bool operator<(const FpOm1Word& a, const FpOm1Word& b) {
        if (!(a.u == b.u)) return a.u < b.u;
        return a.v < b.v;
    }
};

using FpOm1Element = Element<FpOm1Word>;

struct ChernFree {
    FpElement F;
    FpElement ch0;
    FpOm1Element ch1;
};

inline ChernFree chern_free(const FreeProduct& fp, const Derivation& d1, const Derivation& d2,
                            const FpElement& A, long cap) {
    FpElement F = fp.delta(A, d1, d2, cap) + fp.multiply(A, A, cap);
    FpElement unit(FreeWord{});
    FpElement ch0 = nilpotent_exp_neg(
        unit, F, [&](const FpElement& a, const FpElement& b) { return fp.multiply(a, b, cap); });
    FpOm1Element ch1;
    for (const auto& [we, ce] : ch0.terms)
        for (const auto& [wa, ca] : A.terms) {
            if (wa.blocks.empty()) continue;
            ch1.add_term(FpOm1Word{we, wa}, -(ce * ca));
        }
    return {F, ch0, ch1};
}

struct PsiImage {
    PairElement p00;
    C10Element p10;
    C01Element p01;
    C11Element p11;
};

struct FreeChernCtx {
    const FreeProduct* fp;
    const ChernPairCtx* pc;
    long cap = -1;
    mutable std::map<FreeWord, C11Element> phi_memo;

    PairElement mu(const FpElement& x) const { return fp->folding_map_mu(x, pc->pa, cap); }

    // cocycle measuring the failure of the folding map to respect products;
    // vanishes on the unit and on single blocks
    const C11Element& phi_word(const FreeWord& w) const {
        auto it = phi_memo.find(w);
        if (it != phi_memo.end()) return it->second;
        C11Element out;
        if (w.blocks.size() >= 2) {
            FreeWord rest{std::vector<FpBlock>(w.blocks.begin() + 1, w.blocks.end())};
            PairElement mu_head = mu(FpElement(FreeWord{{w.blocks.front()}}));
            out = pc->mul_00_11(mu_head, phi_word(rest));
            int ph = fp->factor(w.blocks.front().factor).parity(w.blocks.front().w);
            out += pc->mul_01_10(pc->d2_00(mu_head), pc->d1_00(mu(FpElement(rest)))) *
                   Scalar(koszul_sign(ph, 1));
        }
        return phi_memo.emplace(w, std::move(out)).first->second;
    }

    C11Element phi(const FpElement& x) const {
        C11Element out;
        for (const auto& [w, c] : x.terms) out += phi_word(w) * c;
        return out;
    }

    PsiImage psi_even(const FpElement& x) const {
        PsiImage out;
        out.p00 = mu(x);
        out.p11 = phi(x);
        return out;
    }

    PsiImage psi_odd(const FpOm1Element& e) const {
        PsiImage out;
        for (const auto& [w, c] : e.terms) {
            FpElement X(w.u), Y(w.v);
            int px = fp->parity(w.u);
            int py = fp->parity(w.v);
            PairElement mx = mu(X);
            PairElement my = mu(Y);
            C11Element m = pc->mul_00_11(mx, phi(Y));
            Scalar s1(koszul_sign(px, (py + 1) & 1));
            Scalar s2(koszul_sign(px, 1));
            out.p10 += pc->mul_10_00(pc->d1_00(my), mx) * (c * s1);
            out.p10 += pc->bbar2_11(m) * (c * s2);
            out.p01 += pc->mul_00_01(mx, pc->d2_00(my)) * c;
            out.p01 += pc->bbar1_11(m) * (c * s2);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Hybrid picture: cochains on the bar coalgebra of a base algebra with
// values in a second algebra and its one-form bimodule. Everything is
// evaluated eagerly on the words of a fixed tensor-length window.
// ---------------------------------------------------------------------------

struct HybridCtx {
    const BarCoalgebra* bc;
    const XComplex* X;
    long win;
    std::vector<BarWord> bar_words;
    std::vector<CycWord> cyc_words;

    HybridCtx(const BarCoalgebra* b, const XComplex* x, long w) : bc(b), X(x), win(w) {
        std::vector<GenWord> letters;
        for (const auto& g : enumerate_basis(*bc->base))
            if (!g.empty()) letters.push_back(g);
        bar_words.push_back(BarWord{});
        size_t lo = 0, hi = 1;
        for (long len = 1; len <= win; ++len) {
            for (size_t i = lo; i < hi; ++i)
                for (const auto& g : letters) {
                    BarWord e = bar_words[i];
                    e.entries.push_back(g);
                    bar_words.push_back(std::move(e));
                }
            lo = hi;
            hi = bar_words.size();
        }
        for (const auto& a0 : letters)
            for (const auto& bw : bar_words)
                if (static_cast<long>(bw.entries.size()) + 1 <= win)
                    cyc_words.push_back(CycWord{a0, bw.entries});
    }

    template <class K, class V>
    V eval(const std::map<K, V>& f, const Element<K>& x) const {
        V out;
        for (const auto& [w, c] : x.terms) {
            auto it = f.find(w);
            if (it != f.end()) out += it->second * c;
        }
        return out;
    }

    // section of the cyclic quotient: one minus the cyclic permutation,
    // rewritten with a marked head entry
    CycElement beta(const BarElement& x) const {
        CycElement out;
        BarElement d = x - bc->lambda_cyclic(x);
        for (const auto& [w, c] : d.terms) {
            if (w.entries.empty()) continue;
            out.add_term(BarCoalgebra::unflatten(w), c);
        }
        return out;
    }
};

struct HybridChern {
    std::map<BarWord, AlgElement> F;
    std::map<BarWord, AlgElement> ch00;
    std::map<CycWord, AlgElement> ch10;
    std::map<BarWord, Omega1Element> ch01;
    std::map<CycWord, Omega1Element> ch11;
};

inline HybridChern chern_hybrid(const HybridCtx& H, const std::map<BarWord, AlgElement>& A) {
    const XComplex& X = *H.X;
    const AlgebraSpec& R = *X.alg;
    HybridChern out;

    auto aval = [](const std::map<BarWord, AlgElement>& f, const BarWord& w) -> AlgElement {
        auto it = f.find(w);
        return it == f.end() ? AlgElement{} : it->second;
    };
    auto split = [](const BarWord& x, size_t i) {
        return std::pair<BarWord, BarWord>{
            BarWord{std::vector<GenWord>(x.entries.begin(), x.entries.begin() + i)},
            BarWord{std::vector<GenWord>(x.entries.begin() + i, x.entries.end())}};
    };
    // one-form value of the outer coboundary on a marked word, for a cochain
    // of the stated parity
    auto d1_eval = [&](const std::map<BarWord, AlgElement>& f, bool f_odd, const BarWord& w1,
                       const GenWord& mid, const BarWord& w2) -> AlgElement {
        BarWord flat = w1;
        flat.entries.push_back(mid);
        flat.entries.insert(flat.entries.end(), w2.entries.begin(), w2.entries.end());
        AlgElement v = aval(f, flat);
        const bool neg = f_odd ? (w1.entries.size() % 2 == 0) : (w1.entries.size() % 2 == 1);
        return neg ? -v : v;
    };

    for (const auto& x : H.bar_words) {
        AlgElement v = H.eval(A, H.bc->bprime(BarElement(x))) - X.alg_delta(aval(A, x));
        for (size_t i = 0; i <= x.entries.size(); ++i) {
            auto [p, q] = split(x, i);
            AlgElement t = R.multiply(aval(A, p), aval(A, q));
            v += (i % 2 == 0) ? t : -t;
        }
        if (!v.is_zero()) out.F[x] = v;
    }

    auto conv_even = [&](const std::map<BarWord, AlgElement>& f,
                         const std::map<BarWord, AlgElement>& g) {
        std::map<BarWord, AlgElement> r;
        for (const auto& x : H.bar_words) {
            AlgElement acc;
            for (size_t i = 0; i <= x.entries.size(); ++i) {
                auto [p, q] = split(x, i);
                acc += R.multiply(aval(f, p), aval(g, q));
            }
            if (!acc.is_zero()) r[x] = acc;
        }
        return r;
    };

    std::vector<std::map<BarWord, AlgElement>> Fp;
    {
        std::map<BarWord, AlgElement> unit;
        unit[BarWord{}] = AlgElement(GenWord::one());
        Fp.push_back(std::move(unit));
    }
    while (!Fp.back().empty()) {
        assert(Fp.size() <= 64);
        Fp.push_back(conv_even(Fp.back(), out.F));
    }
    Fp.pop_back();

    for (const auto& x : H.bar_words) {
        AlgElement acc;
        mpq_class kf = 1;
        for (size_t k = 0; k < Fp.size(); ++k) {
            if (k > 0) kf *= static_cast<long>(k);
            auto it = Fp[k].find(x);
            if (it != Fp[k].end()) acc += it->second * Scalar(mpq_class(k % 2 == 0 ? 1 : -1) / kf);
        }
        if (!acc.is_zero()) out.ch00[x] = acc;
    }

    for (const auto& cw : H.cyc_words) {
        TriElement nat = H.bc->natural_inclusion(CycElement(cw));
        AlgElement acc;
        for (const auto& [t, tc] : nat.terms) {
            for (size_t i = 0; i <= t.w2.entries.size(); ++i) {
                auto [p, q] = split(t.w2, i);
                AlgElement da = d1_eval(A, true, t.w1, t.mid, p);
                if (da.is_zero()) continue;
                AlgElement cq = aval(out.ch00, q);
                if (cq.is_zero()) continue;
                acc += R.multiply(da, cq) * tc;
            }
        }
        acc = -acc;
        if (!acc.is_zero()) out.ch10[cw] = acc;
    }

    for (const auto& x : H.bar_words) {
        Omega1Element acc;
        for (size_t i = 0; i <= x.entries.size(); ++i) {
            auto [p, q] = split(x, i);
            AlgElement cp = aval(out.ch00, p);
            AlgElement aq = aval(A, q);
            if (cp.is_zero() || aq.is_zero()) continue;
            acc += X.om_left(cp, X.om_d(aq));
        }
        if (!acc.is_zero()) out.ch01[x] = acc;
    }

    std::vector<std::map<BarWord, Omega1Element>> G(Fp.size());
    for (size_t k0 = 0; k0 < Fp.size(); ++k0)
        for (const auto& x : H.bar_words) {
            Omega1Element acc;
            for (size_t i = 0; i <= x.entries.size(); ++i) {
                auto [p, q] = split(x, i);
                AlgElement ep = aval(Fp[k0], p);
                AlgElement fq = aval(out.F, q);
                if (ep.is_zero() || fq.is_zero()) continue;
                Omega1Element v = X.om_left(ep, X.om_d(fq));
                acc += (i % 2 == 0) ? v : -v;
            }
            if (!acc.is_zero()) G[k0][x] = acc;
        }
    std::vector<std::vector<std::map<BarWord, Omega1Element>>> L(
        Fp.size(), std::vector<std::map<BarWord, Omega1Element>>(Fp.size()));
    for (size_t k0 = 0; k0 < Fp.size(); ++k0)
        for (size_t k1 = 0; k1 < Fp.size(); ++k1)
            for (const auto& x : H.bar_words) {
                Omega1Element acc;
                for (size_t i = 0; i <= x.entries.size(); ++i) {
                    auto [p, q] = split(x, i);
                    auto g = G[k0].find(p);
                    if (g == G[k0].end()) continue;
                    AlgElement fq = aval(Fp[k1], q);
                    if (fq.is_zero()) continue;
                    acc += X.om_right(g->second, fq);
                }
                if (!acc.is_zero()) L[k0][k1][x] = acc;
            }

    for (const auto& cw : H.cyc_words) {
        TriElement nat = H.bc->natural_inclusion(CycElement(cw));
        Omega1Element acc;
        for (const auto& [t, tc] : nat.terms) {
            const auto& w2e = t.w2.entries;
            const auto& w1e = t.w1.entries;
            for (size_t i = 0; i <= w2e.size(); ++i)
                for (size_t j = i; j <= w2e.size(); ++j) {
                    BarWord p{std::vector<GenWord>(w2e.begin(), w2e.begin() + i)};
                    BarWord q{std::vector<GenWord>(w2e.begin() + i, w2e.begin() + j)};
                    BarWord r{std::vector<GenWord>(w2e.begin() + j, w2e.end())};
                    AlgElement da = d1_eval(A, true, t.w1, t.mid, p);
                    if (da.is_zero()) continue;
                    AlgElement cq = aval(out.ch00, q);
                    AlgElement ar = aval(A, r);
                    if (cq.is_zero() || ar.is_zero()) continue;
                    acc += X.om_left(R.multiply(da, cq), X.om_d(ar)) * tc;
                }
            for (size_t k0 = 0; k0 < Fp.size(); ++k0)
                for (size_t k1 = 0; k1 < Fp.size(); ++k1)
                    for (size_t k2 = 0; k2 < Fp.size(); ++k2) {
                        Scalar coeff = simplex_exp_coeff(static_cast<long>(k0 + k1 + k2)) * tc;
                        for (size_t a = 0; a <= w2e.size(); ++a) {
                            BarWord u{std::vector<GenWord>(w2e.begin(), w2e.begin() + a)};
                            BarWord r{std::vector<GenWord>(w2e.begin() + a, w2e.end())};
                            AlgElement fr = aval(Fp[k2], r);
                            if (fr.is_zero()) continue;
                            for (size_t bpos = 0; bpos <= w1e.size(); ++bpos) {
                                BarWord p{std::vector<GenWord>(w1e.begin(), w1e.begin() + bpos)};
                                BarWord q{std::vector<GenWord>(w1e.begin() + bpos, w1e.end())};
                                auto lit = L[k0][k1].find(p);
                                if (lit == L[k0][k1].end()) continue;
                                AlgElement df = d1_eval(out.F, false, q, t.mid, u);
                                if (df.is_zero()) continue;
                                Omega1Element v = X.om_right(X.om_right(lit->second, df), fr);
                                if (bpos % 2 == 1) v = -v;
                                acc += v * coeff;
                            }
                        }
                    }
        }
        acc = -acc;
        if (!acc.is_zero()) out.ch11[cw] = acc;
    }

    return out;
}

}  // namespace ncx
