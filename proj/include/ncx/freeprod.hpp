#pragma once

#include "algebra.hpp"

namespace ncx {

// Word in the unital free product of two algebras: alternating blocks of
// nonempty normal words, tagged by factor. The empty block list is the unit.
struct FpBlock {
    int factor;  // 1 or 2
    GenWord w;
    friend bool operator==(const FpBlock& a, const FpBlock& b) { return a.factor == b.factor && a.w == b.w; }
    friend bool operator<(const FpBlock& a, const FpBlock& b) {
        if (a.factor != b.factor) return a.factor < b.factor;
        return a.w < b.w;
    }
};

struct FreeWord {
    std::vector<FpBlock> blocks;
    size_t letters() const {
        size_t n = 0;
        for (const auto& b : blocks) n += b.w.size();
        return n;
    }
    friend bool operator==(const FreeWord& a, const FreeWord& b) { return a.blocks == b.blocks; }
    friend bool operator<(const FreeWord& a, const FreeWord& b) {
        if (a.letters() != b.letters()) return a.letters() < b.letters();
        return a.blocks < b.blocks;
    }
};

// Elementary tensor of normal words, the basis of the tensor product algebra.
struct PairWord {
    GenWord a, b;
    friend bool operator==(const PairWord& x, const PairWord& y) { return x.a == y.a && x.b == y.b; }
    friend bool operator<(const PairWord& x, const PairWord& y) {
        size_t lx = x.a.size() + x.b.size(), ly = y.a.size() + y.b.size();
        if (lx != ly) return lx < ly;
        if (!(x.a == y.a)) return x.a < y.a;
        return x.b < y.b;
    }
};

using FpElement = Element<FreeWord>;
using PairElement = Element<PairWord>;

// Tensor product of two algebras with the sign rule
// (a (x) b)(c (x) d) = (-1)^{|b||c|} ac (x) bd.
struct PairAlgebra {
    const AlgebraSpec* a1;
    const AlgebraSpec* a2;

    int parity(const PairWord& w) const { return (a1->parity(w.a) + a2->parity(w.b)) & 1; }
    long weight(const PairWord& w) const { return a1->weight(w.a) + a2->weight(w.b); }

    PairElement cap_filter(PairElement e, long cap) const {
        if (cap < 0) return e;
        PairElement out;
        out.truncated = e.truncated;
        for (auto& [w, c] : e.terms) {
            if (weight(w) <= cap)
                out.terms.emplace(w, std::move(c));
            else
                out.truncated = true;
        }
        return out;
    }

    PairElement combine(const AlgElement& x, const AlgElement& y, Scalar coeff) const {
        PairElement out;
        out.truncated = x.truncated || y.truncated;
        for (const auto& [wa, ca] : x.terms)
            for (const auto& [wb, cb] : y.terms) out.add_term(PairWord{wa, wb}, coeff * ca * cb);
        return out;
    }

    PairElement multiply(const PairElement& x, const PairElement& y, long cap = -1) const {
        PairElement out;
        out.truncated = x.truncated || y.truncated;
        for (const auto& [wx, cx] : x.terms) {
            for (const auto& [wy, cy] : y.terms) {
                Scalar s = cx * cy * Scalar(koszul_sign(a2->parity(wx.b), a1->parity(wy.a)));
                AlgElement p = a1->multiply(AlgElement(wx.a), AlgElement(wy.a), cap);
                AlgElement q = a2->multiply(AlgElement(wx.b), AlgElement(wy.b), cap);
                out += combine(p, q, s);
            }
        }
        return cap_filter(std::move(out), cap);
    }

    PairElement delta(const PairElement& x, const Derivation& d1, const Derivation& d2, long cap = -1) const {
        PairElement out;
        out.truncated = x.truncated;
        for (const auto& [w, c] : x.terms) {
            out += combine(d1.apply(AlgElement(w.a), cap), AlgElement(w.b), c);
            out += combine(AlgElement(w.a), d2.apply(AlgElement(w.b), cap), c * Scalar(koszul_sign(a1->parity(w.a), 1)));
        }
        return cap_filter(std::move(out), cap);
    }
};

struct FreeProduct {
    const AlgebraSpec* a1;
    const AlgebraSpec* a2;

    const AlgebraSpec& factor(int f) const { return f == 1 ? *a1 : *a2; }

    int parity(const FreeWord& w) const {
        int d = 0;
        for (const auto& b : w.blocks) d += factor(b.factor).parity(b.w);
        return d & 1;
    }
    long weight(const FreeWord& w) const {
        long n = 0;
        for (const auto& b : w.blocks) n += factor(b.factor).weight(b.w);
        return n;
    }

    FpElement cap_filter(FpElement e, long cap) const {
        if (cap < 0) return e;
        FpElement out;
        out.truncated = e.truncated;
        for (auto& [w, c] : e.terms) {
            if (weight(w) <= cap)
                out.terms.emplace(w, std::move(c));
            else
                out.truncated = true;
        }
        return out;
    }

    // substitute an element of one factor for block i of w; the surrounding
    // blocks have different factors, so no further merging is needed
    void splice(FpElement& out, const FreeWord& w, size_t i, const AlgElement& mid, Scalar coeff) const {
        for (const auto& [mw, mc] : mid.terms) {
            assert(!mw.empty());
            FreeWord r;
            r.blocks.assign(w.blocks.begin(), w.blocks.begin() + i);
            r.blocks.push_back({w.blocks[i].factor, mw});
            r.blocks.insert(r.blocks.end(), w.blocks.begin() + i + 1, w.blocks.end());
            out.add_term(r, coeff * mc);
        }
        out.truncated = out.truncated || mid.truncated;
    }

    FpElement multiply(const FpElement& x, const FpElement& y, long cap = -1) const {
        FpElement out;
        out.truncated = x.truncated || y.truncated;
        for (const auto& [wx, cx] : x.terms) {
            for (const auto& [wy, cy] : y.terms) {
                if (wx.blocks.empty() || wy.blocks.empty() ||
                    wx.blocks.back().factor != wy.blocks.front().factor) {
                    FreeWord r = wx;
                    r.blocks.insert(r.blocks.end(), wy.blocks.begin(), wy.blocks.end());
                    out.add_term(r, cx * cy);
                    continue;
                }
                const int f = wx.blocks.back().factor;
                AlgElement junction = factor(f).normalize(wx.blocks.back().w.concat(wy.blocks.front().w));
                FreeWord host = wx;
                host.blocks.insert(host.blocks.end(), wy.blocks.begin() + 1, wy.blocks.end());
                size_t slot = wx.blocks.size() - 1;
                if (junction.is_zero()) continue;
                // a junction term can itself be the unit only in algebras whose
                // rules erase letters entirely; none of the presentations here do
                splice(out, host, slot, junction, cx * cy);
            }
        }
        return cap_filter(std::move(out), cap);
    }

    FpElement delta(const FpElement& x, const Derivation& d1, const Derivation& d2, long cap = -1) const {
        FpElement out;
        out.truncated = x.truncated;
        for (const auto& [w, c] : x.terms) {
            int prefix = 0;
            for (size_t i = 0; i < w.blocks.size(); ++i) {
                const Derivation& d = w.blocks[i].factor == 1 ? d1 : d2;
                AlgElement db = d.apply(AlgElement(w.blocks[i].w), cap);
                if (!db.is_zero()) splice(out, w, i, db, c * Scalar(koszul_sign(prefix, 1)));
                prefix += factor(w.blocks[i].factor).parity(w.blocks[i].w);
            }
        }
        return cap_filter(std::move(out), cap);
    }

    // fold onto the tensor product: keep the relative order inside each
    // factor, pay the sign of moving every second-factor block past every
    // later first-factor block
    PairElement folding_map_mu(const FpElement& x, const PairAlgebra& pa, long cap = -1) const {
        PairElement out;
        out.truncated = x.truncated;
        for (const auto& [w, c] : x.terms) {
            int sign = 1;
            for (size_t i = 0; i < w.blocks.size(); ++i) {
                if (w.blocks[i].factor != 2) continue;
                for (size_t j = i + 1; j < w.blocks.size(); ++j) {
                    if (w.blocks[j].factor == 1)
                        sign *= koszul_sign(a2->parity(w.blocks[i].w), a1->parity(w.blocks[j].w));
                }
            }
            AlgElement p1(GenWord::one()), p2(GenWord::one());
            for (const auto& b : w.blocks) {
                if (b.factor == 1)
                    p1 = a1->multiply(p1, AlgElement(b.w), cap);
                else
                    p2 = a2->multiply(p2, AlgElement(b.w), cap);
            }
            out += pa.combine(p1, p2, c * Scalar(sign));
        }
        return pa.cap_filter(std::move(out), cap);
    }
};

// Linear inclusion of the tensor product into the free product, sending
// x (x) y to the two-block word x y. Folding recovers the identity.
inline FpElement free_product_lift(const PairElement& x) {
    FpElement out;
    out.truncated = x.truncated;
    for (const auto& [w, c] : x.terms) {
        FreeWord r;
        if (!w.a.empty()) r.blocks.push_back({1, w.a});
        if (!w.b.empty()) r.blocks.push_back({2, w.b});
        out.add_term(r, c);
    }
    return out;
}

}  // namespace ncx
