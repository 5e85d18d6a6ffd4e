#pragma once

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bar.hpp"
#include "chern.hpp"
#include "forms.hpp"

namespace ncx {

// ---------------------------------------------------------------------------
// Bivariant character of a Fredholm module between two algebras.
//
// Values of all cochains live in L (x) TB~, where L is a finite operator
// algebra and TB the tensor algebra on the basis of a coefficient algebra B.
// TB carries the trivial grading, so the value layer has exactly two Koszul
// signs: the one-form symbol is odd, hence the formal differential picks up
// the operator parity, and so does a value acting on a one-form from the
// right. Everything else multiplies without signs.
// ---------------------------------------------------------------------------

struct OpTensor {
    GenWord op;
    TensorWord ten;

    friend bool operator==(const OpTensor& a, const OpTensor& b) { return a.op == b.op && a.ten == b.ten; }
    friend bool operator<(const OpTensor& a, const OpTensor& b) {
        if (!(a.ten == b.ten)) return a.ten < b.ten;
        return a.op < b.op;
    }
};
using OpTensorElement = Element<OpTensor>;

// l (x) (left dT[mid] right): a one-form over the tensor algebra with an
// operator coefficient, kept unfolded so both module actions are plain
struct OpForm {
    GenWord op;
    TensorWord left;
    GenWord mid;
    TensorWord right;

    friend bool operator==(const OpForm& a, const OpForm& b) {
        return a.op == b.op && a.left == b.left && a.mid == b.mid && a.right == b.right;
    }
    friend bool operator<(const OpForm& a, const OpForm& b) {
        if (!(a.left == b.left)) return a.left < b.left;
        if (!(a.mid == b.mid)) return a.mid < b.mid;
        if (!(a.right == b.right)) return a.right < b.right;
        return a.op < b.op;
    }
};
using OpFormElement = Element<OpForm>;

struct OpCycForm {
    GenWord op;
    TensorWord ten;
    GenWord mid;

    friend bool operator==(const OpCycForm& a, const OpCycForm& b) {
        return a.op == b.op && a.ten == b.ten && a.mid == b.mid;
    }
    friend bool operator<(const OpCycForm& a, const OpCycForm& b) {
        if (!(a.ten == b.ten)) return a.ten < b.ten;
        if (!(a.mid == b.mid)) return a.mid < b.mid;
        return a.op < b.op;
    }
};
using OpCycFormElement = Element<OpCycForm>;

struct CycForm {
    TensorWord ten;
    GenWord mid;

    friend bool operator==(const CycForm& a, const CycForm& b) { return a.ten == b.ten && a.mid == b.mid; }
    friend bool operator<(const CycForm& a, const CycForm& b) {
        if (!(a.ten == b.ten)) return a.ten < b.ten;
        return a.mid < b.mid;
    }
};
using CycFormElement = Element<CycForm>;

inline TensorWord tensor_concat(const TensorWord& a, const TensorWord& b) {
    TensorWord t = a;
    t.factors.insert(t.factors.end(), b.factors.begin(), b.factors.end());
    return t;
}

// Fredholm module between a source algebra and the coefficient algebra:
// an operator algebra with a homogeneous graded trace, an even
// representation of the source with values linear in the coefficients, and
// an odd connection operator.
struct FredholmModule {
    const AlgebraSpec* ops = nullptr;
    const AlgebraSpec* coef = nullptr;
    std::function<Scalar(const GenWord&)> trace;
    int trace_parity = 0;
    std::map<uint8_t, OpTensorElement> rho;
    OpTensorElement dirac;

    Scalar trace_of(const AlgElement& e) const {
        Scalar out;
        for (const auto& [w, c] : e.terms) out = out + c * trace(w);
        return out;
    }

    void validate(size_t cap = 512) const {
        const std::vector<GenWord> basis = enumerate_basis(*ops, cap);
        for (const auto& w : basis)
            if (ops->parity(w) != trace_parity && !trace(w).is_zero())
                throw std::runtime_error("fredholm module: trace is not homogeneous of the declared parity");
        for (const auto& a : basis)
            for (const auto& b : basis) {
                Scalar lhs = trace_of(ops->multiply(AlgElement(a), AlgElement(b)));
                Scalar rhs = trace_of(ops->multiply(AlgElement(b), AlgElement(a)));
                if (ops->parity(a) && ops->parity(b)) rhs = -rhs;
                if (!(lhs - rhs).is_zero())
                    throw std::runtime_error("fredholm module: trace fails the graded trace property");
            }
        auto check_value = [&](const OpTensorElement& v, int want, const char* what) {
            for (const auto& [w, c] : v.terms) {
                (void)c;
                if (ops->parity(w.op) != want)
                    throw std::runtime_error(std::string("fredholm module: ") + what);
                if (w.ten.factors.size() > 1)
                    throw std::runtime_error("fredholm module: values must be linear in the coefficient algebra");
                for (const auto& f : w.ten.factors)
                    if (f.g.empty())
                        throw std::runtime_error("fredholm module: unit coefficients belong in the empty tensor factor");
            }
        };
        for (const auto& [g, v] : rho) {
            (void)g;
            check_value(v, 0, "representation values must be even");
        }
        check_value(dirac, 1, "connection operator must be odd");
    }
};

struct BivariantCtx {
    const FredholmModule* mod;
    const AlgebraSpec* source;
    long win;
    BarCoalgebra bc;
    std::vector<GenWord> letters;
    std::vector<BarWord> bar_words;
    std::vector<CycWord> cyc_words;
    // superconnection cochain: the connection operator on the empty word and
    // the multiplicative extension of the representation on single entries
    std::map<BarWord, OpTensorElement> conn;

    BivariantCtx(const FredholmModule* m, const AlgebraSpec* src, long w)
        : mod(m), source(src), win(w), bc(src) {
        mod->validate();
        for (const auto& g : enumerate_basis(*source))
            if (!g.g.empty()) letters.push_back(g);
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

        conn[BarWord{}] = mod->dirac;
        for (const auto& l : letters) conn[BarWord{{l}}] = rep(l);
        for (const auto& u : letters)
            for (const auto& v : letters) {
                AlgElement uv = source->multiply(AlgElement(u), AlgElement(v));
                OpTensorElement want;
                for (const auto& [t, c] : uv.terms) want += rep(t) * c;
                if (!(mul_in_coef(rep(u), rep(v)) == want))
                    throw std::runtime_error("fredholm module: representation is not multiplicative over the source");
            }
    }

    OpTensorElement rep(const GenWord& w) const {
        OpTensorElement acc(OpTensor{GenWord::one(), TensorWord{}});
        for (uint8_t g : w.g) {
            auto it = mod->rho.find(g);
            acc = mul_in_coef(acc, it == mod->rho.end() ? OpTensorElement() : it->second);
        }
        return acc;
    }

    // product taken in the coefficient algebra itself; defined on values with
    // at most one tensor factor and used for the representation only
    OpTensorElement mul_in_coef(const OpTensorElement& x, const OpTensorElement& y) const {
        OpTensorElement out;
        out.truncated = x.truncated || y.truncated;
        for (const auto& [a, ca] : x.terms)
            for (const auto& [b, cb] : y.terms) {
                AlgElement lw = mod->ops->multiply(AlgElement(a.op), AlgElement(b.op));
                GenWord fa = a.ten.factors.empty() ? GenWord::one() : a.ten.factors.front();
                GenWord fb = b.ten.factors.empty() ? GenWord::one() : b.ten.factors.front();
                AlgElement bw = mod->coef->multiply(AlgElement(fa), AlgElement(fb));
                for (const auto& [l, cl] : lw.terms)
                    for (const auto& [f, cf] : bw.terms) {
                        TensorWord t;
                        if (!f.g.empty()) t.factors.push_back(f);
                        out.add_term(OpTensor{l, t}, ca * cb * cl * cf);
                    }
            }
        return out;
    }

    OpTensorElement mul(const OpTensorElement& x, const OpTensorElement& y) const {
        OpTensorElement out;
        out.truncated = x.truncated || y.truncated;
        for (const auto& [a, ca] : x.terms)
            for (const auto& [b, cb] : y.terms) {
                AlgElement lw = mod->ops->multiply(AlgElement(a.op), AlgElement(b.op));
                for (const auto& [l, cl] : lw.terms)
                    out.add_term(OpTensor{l, tensor_concat(a.ten, b.ten)}, ca * cb * cl);
            }
        return out;
    }

    // formal differential of the tensor leg; the symbol is odd, so it picks
    // up the operator parity on the way in
    OpFormElement d_tensor(const OpTensorElement& x) const {
        OpFormElement out;
        out.truncated = x.truncated;
        for (const auto& [w, c] : x.terms) {
            Scalar s = mod->ops->parity(w.op) ? -c : c;
            for (size_t i = 0; i < w.ten.factors.size(); ++i) {
                OpForm f;
                f.op = w.op;
                f.left.factors.assign(w.ten.factors.begin(), w.ten.factors.begin() + i);
                f.mid = w.ten.factors[i];
                f.right.factors.assign(w.ten.factors.begin() + i + 1, w.ten.factors.end());
                out.add_term(f, s);
            }
        }
        return out;
    }

    OpFormElement act_left(const OpTensorElement& x, const OpFormElement& f) const {
        OpFormElement out;
        out.truncated = x.truncated || f.truncated;
        for (const auto& [a, ca] : x.terms)
            for (const auto& [b, cb] : f.terms) {
                AlgElement lw = mod->ops->multiply(AlgElement(a.op), AlgElement(b.op));
                for (const auto& [l, cl] : lw.terms)
                    out.add_term(OpForm{l, tensor_concat(a.ten, b.left), b.mid, b.right}, ca * cb * cl);
            }
        return out;
    }

    OpFormElement act_right(const OpFormElement& f, const OpTensorElement& x) const {
        OpFormElement out;
        out.truncated = x.truncated || f.truncated;
        for (const auto& [b, cb] : f.terms)
            for (const auto& [a, ca] : x.terms) {
                Scalar s = mod->ops->parity(a.op) ? -(ca * cb) : ca * cb;
                AlgElement lw = mod->ops->multiply(AlgElement(b.op), AlgElement(a.op));
                for (const auto& [l, cl] : lw.terms)
                    out.add_term(OpForm{l, b.left, b.mid, tensor_concat(b.right, a.ten)}, s * cl);
            }
        return out;
    }

    // cyclic quotient of one-forms: rotate the right leg around, no sign
    // because the tensor legs are even
    OpCycFormElement fold(const OpFormElement& f) const {
        OpCycFormElement out;
        out.truncated = f.truncated;
        for (const auto& [w, c] : f.terms)
            out.add_term(OpCycForm{w.op, tensor_concat(w.right, w.left), w.mid}, c);
        return out;
    }

    TensorElement tau_even(const OpTensorElement& x) const {
        TensorElement out;
        out.truncated = x.truncated;
        for (const auto& [w, c] : x.terms) {
            Scalar t = mod->trace(w.op);
            if (!t.is_zero()) out.add_term(w.ten, c * t);
        }
        return out;
    }

    CycFormElement tau_odd(const OpCycFormElement& x) const {
        CycFormElement out;
        out.truncated = x.truncated;
        for (const auto& [w, c] : x.terms) {
            Scalar t = mod->trace(w.op);
            if (!t.is_zero()) out.add_term(CycForm{w.ten, w.mid}, c * t);
        }
        return out;
    }

    // boundaries of the X complex of the tensor algebra, after the trace
    static TensorElement bbar_tensor(const CycFormElement& e) {
        TensorElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            TensorWord wm = w.ten;
            wm.factors.push_back(w.mid);
            TensorWord mw;
            mw.factors.push_back(w.mid);
            mw.factors.insert(mw.factors.end(), w.ten.factors.begin(), w.ten.factors.end());
            out.add_term(wm, c);
            out.add_term(mw, -c);
        }
        return out;
    }

    static CycFormElement natural_d_tensor(const TensorElement& e) {
        CycFormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            const size_t n = w.factors.size();
            for (size_t i = 0; i < n; ++i) {
                CycForm f;
                f.mid = w.factors[i];
                f.ten.factors.assign(w.factors.begin() + i + 1, w.factors.end());
                f.ten.factors.insert(f.ten.factors.end(), w.factors.begin(), w.factors.begin() + i);
                out.add_term(f, c);
            }
        }
        return out;
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

    CycElement beta(const BarElement& x) const {
        CycElement out;
        BarElement d = x - bc.lambda_cyclic(x);
        for (const auto& [w, c] : d.terms) {
            if (w.entries.empty()) continue;
            out.add_term(BarCoalgebra::unflatten(w), c);
        }
        return out;
    }

    std::string str(const OpTensorElement& e) const {
        return e.str([&](const OpTensor& w) {
            std::string s = mod->ops->word_str(w.op) + "(x)";
            if (w.ten.factors.empty()) return s + "1";
            for (size_t i = 0; i < w.ten.factors.size(); ++i)
                s += (i ? "|" : "") + mod->coef->word_str(w.ten.factors[i]);
            return s;
        });
    }

    std::string str(const TensorElement& e) const {
        return e.str([&](const TensorWord& w) {
            if (w.factors.empty()) return std::string("1");
            std::string s;
            for (size_t i = 0; i < w.factors.size(); ++i)
                s += (i ? "|" : "") + mod->coef->word_str(w.factors[i]);
            return s;
        });
    }

    std::string str(const CycFormElement& e) const {
        return e.str([&](const CycForm& w) {
            std::string s;
            for (size_t i = 0; i < w.ten.factors.size(); ++i)
                s += mod->coef->word_str(w.ten.factors[i]) + "|";
            return s + "d[" + mod->coef->word_str(w.mid) + "]";
        });
    }
};

struct BivariantChern {
    const BivariantCtx* ctx = nullptr;
    std::map<BarWord, OpTensorElement> F;
    std::vector<std::map<BarWord, OpTensorElement>> Fp;
    std::map<BarWord, OpTensorElement> ch00;
    std::vector<std::map<BarWord, OpFormElement>> G;
    std::vector<std::vector<std::map<BarWord, OpFormElement>>> L;
    std::map<BarWord, TensorElement> t00;
    std::map<CycWord, TensorElement> t10;
    std::map<BarWord, CycFormElement> t01;
    std::map<CycWord, CycFormElement> t11;

    static std::pair<BarWord, BarWord> split(const BarWord& x, size_t i) {
        return {BarWord{std::vector<GenWord>(x.entries.begin(), x.entries.begin() + i)},
                BarWord{std::vector<GenWord>(x.entries.begin() + i, x.entries.end())}};
    }

    OpTensorElement aval(const std::map<BarWord, OpTensorElement>& f, const BarWord& w) const {
        auto it = f.find(w);
        return it == f.end() ? OpTensorElement() : it->second;
    }

    OpTensorElement d1_eval(const std::map<BarWord, OpTensorElement>& f, bool f_odd, const BarWord& w1,
                            const GenWord& mid, const BarWord& w2) const {
        BarWord flat = w1;
        flat.entries.push_back(mid);
        flat.entries.insert(flat.entries.end(), w2.entries.begin(), w2.entries.end());
        OpTensorElement v = aval(f, flat);
        const bool neg = f_odd ? (w1.entries.size() % 2 == 0) : (w1.entries.size() % 2 == 1);
        return neg ? -v : v;
    }

    OpTensorElement raw10(const TriWord& t) const {
        OpTensorElement acc;
        for (size_t i = 0; i <= t.w2.entries.size(); ++i) {
            auto [p, q] = split(t.w2, i);
            OpTensorElement da = d1_eval(ctx->conn, true, t.w1, t.mid, p);
            if (da.is_zero()) continue;
            OpTensorElement cq = aval(ch00, q);
            if (cq.is_zero()) continue;
            acc += ctx->mul(da, cq);
        }
        return acc;
    }

    OpFormElement raw11(const TriWord& t) const {
        OpFormElement acc;
        const auto& w2e = t.w2.entries;
        const auto& w1e = t.w1.entries;
        for (size_t i = 0; i <= w2e.size(); ++i)
            for (size_t j = i; j <= w2e.size(); ++j) {
                BarWord p{std::vector<GenWord>(w2e.begin(), w2e.begin() + i)};
                BarWord q{std::vector<GenWord>(w2e.begin() + i, w2e.begin() + j)};
                BarWord r{std::vector<GenWord>(w2e.begin() + j, w2e.end())};
                OpTensorElement da = d1_eval(ctx->conn, true, t.w1, t.mid, p);
                if (da.is_zero()) continue;
                OpTensorElement cq = aval(ch00, q);
                OpTensorElement ar = aval(ctx->conn, r);
                if (cq.is_zero() || ar.is_zero()) continue;
                acc += ctx->act_left(ctx->mul(da, cq), ctx->d_tensor(ar));
            }
        for (size_t k0 = 0; k0 < Fp.size(); ++k0)
            for (size_t k1 = 0; k1 < Fp.size(); ++k1) {
                if (L[k0][k1].empty()) continue;
                for (size_t k2 = 0; k2 < Fp.size(); ++k2) {
                    Scalar coeff = simplex_exp_coeff(static_cast<long>(k0 + k1 + k2));
                    for (size_t a = 0; a <= w2e.size(); ++a) {
                        BarWord u{std::vector<GenWord>(w2e.begin(), w2e.begin() + a)};
                        BarWord r{std::vector<GenWord>(w2e.begin() + a, w2e.end())};
                        OpTensorElement fr = aval(Fp[k2], r);
                        if (fr.is_zero()) continue;
                        for (size_t bpos = 0; bpos <= w1e.size(); ++bpos) {
                            BarWord p{std::vector<GenWord>(w1e.begin(), w1e.begin() + bpos)};
                            BarWord q{std::vector<GenWord>(w1e.begin() + bpos, w1e.end())};
                            auto lit = L[k0][k1].find(p);
                            if (lit == L[k0][k1].end()) continue;
                            OpTensorElement df = d1_eval(F, false, q, t.mid, u);
                            if (df.is_zero()) continue;
                            OpFormElement v = ctx->act_right(ctx->act_right(lit->second, df), fr);
                            if (bpos % 2 == 1) v = -v;
                            acc += v * coeff;
                        }
                    }
                }
            }
        return acc;
    }

    TensorElement value10(const TriElement& rep) const {
        OpTensorElement acc;
        for (const auto& [t, tc] : rep.terms) acc += raw10(t) * tc;
        return ctx->tau_even(-acc);
    }

    CycFormElement value11(const TriElement& rep) const {
        OpFormElement acc;
        for (const auto& [t, tc] : rep.terms) acc += raw11(t) * tc;
        return ctx->tau_odd(ctx->fold(-acc));
    }

    // representative with the marked entry in front, matching the evaluation
    // of the folded cochains on plain tensors
    static TriElement plain_rep(const CycWord& cw) {
        return TriElement(TriWord{BarWord{}, cw.a0, BarWord{cw.entries}});
    }

    TensorElement t10_plain(const CycWord& cw) const { return value10(plain_rep(cw)); }
    CycFormElement t11_plain(const CycWord& cw) const { return value11(plain_rep(cw)); }
};

inline BivariantChern bivariant_chern(const BivariantCtx& X) {
    BivariantChern out;
    out.ctx = &X;

    for (const auto& x : X.bar_words) {
        OpTensorElement v = X.eval(X.conn, X.bc.bprime(BarElement(x)));
        for (size_t i = 0; i <= x.entries.size(); ++i) {
            auto [p, q] = BivariantChern::split(x, i);
            OpTensorElement t = X.mul(out.aval(X.conn, p), out.aval(X.conn, q));
            v += (i % 2 == 0) ? t : -t;
        }
        if (!v.is_zero()) out.F[x] = v;
    }

    auto conv_even = [&](const std::map<BarWord, OpTensorElement>& f,
                         const std::map<BarWord, OpTensorElement>& g) {
        std::map<BarWord, OpTensorElement> r;
        for (const auto& x : X.bar_words) {
            OpTensorElement acc;
            for (size_t i = 0; i <= x.entries.size(); ++i) {
                auto [p, q] = BivariantChern::split(x, i);
                acc += X.mul(out.aval(f, p), out.aval(g, q));
            }
            if (!acc.is_zero()) r[x] = acc;
        }
        return r;
    };

    {
        std::map<BarWord, OpTensorElement> unit;
        unit[BarWord{}] = OpTensorElement(OpTensor{GenWord::one(), TensorWord{}});
        out.Fp.push_back(std::move(unit));
    }
    while (!out.Fp.back().empty()) {
        if (out.Fp.size() > 64)
            throw std::runtime_error("curvature exponential: power " + std::to_string(out.Fp.size() - 1) +
                                     " of the curvature is still nonzero; refusing a non-nilpotent exponential");
        out.Fp.push_back(conv_even(out.Fp.back(), out.F));
    }
    out.Fp.pop_back();

    for (const auto& x : X.bar_words) {
        OpTensorElement acc;
        mpq_class kf = 1;
        for (size_t k = 0; k < out.Fp.size(); ++k) {
            if (k > 0) kf *= static_cast<long>(k);
            auto it = out.Fp[k].find(x);
            if (it != out.Fp[k].end()) acc += it->second * Scalar(mpq_class(k % 2 == 0 ? 1 : -1) / kf);
        }
        if (!acc.is_zero()) out.ch00[x] = acc;
        out.t00[x] = X.tau_even(acc);
    }

    out.G.resize(out.Fp.size());
    for (size_t k0 = 0; k0 < out.Fp.size(); ++k0)
        for (const auto& x : X.bar_words) {
            OpFormElement acc;
            for (size_t i = 0; i <= x.entries.size(); ++i) {
                auto [p, q] = BivariantChern::split(x, i);
                OpTensorElement ep = out.aval(out.Fp[k0], p);
                OpTensorElement fq = out.aval(out.F, q);
                if (ep.is_zero() || fq.is_zero()) continue;
                OpFormElement v = X.act_left(ep, X.d_tensor(fq));
                acc += (i % 2 == 0) ? v : -v;
            }
            if (!acc.is_zero()) out.G[k0][x] = acc;
        }
    out.L.assign(out.Fp.size(), std::vector<std::map<BarWord, OpFormElement>>(out.Fp.size()));
    for (size_t k0 = 0; k0 < out.Fp.size(); ++k0)
        for (size_t k1 = 0; k1 < out.Fp.size(); ++k1)
            for (const auto& x : X.bar_words) {
                OpFormElement acc;
                for (size_t i = 0; i <= x.entries.size(); ++i) {
                    auto [p, q] = BivariantChern::split(x, i);
                    auto g = out.G[k0].find(p);
                    if (g == out.G[k0].end()) continue;
                    OpTensorElement fq = out.aval(out.Fp[k1], q);
                    if (fq.is_zero()) continue;
                    acc += X.act_right(g->second, fq);
                }
                if (!acc.is_zero()) out.L[k0][k1][x] = acc;
            }

    for (const auto& x : X.bar_words) {
        OpFormElement acc;
        for (size_t i = 0; i <= x.entries.size(); ++i) {
            auto [p, q] = BivariantChern::split(x, i);
            OpTensorElement cp = out.aval(out.ch00, p);
            OpTensorElement aq = out.aval(X.conn, q);
            if (cp.is_zero() || aq.is_zero()) continue;
            acc += X.act_left(cp, X.d_tensor(aq));
        }
        out.t01[x] = X.tau_odd(X.fold(acc));
    }

    for (const auto& cw : X.cyc_words) {
        TriElement nat = X.bc.natural_inclusion(CycElement(cw));
        out.t10[cw] = out.value10(nat);
        out.t11[cw] = out.value11(nat);
    }

    return out;
}

// ---------------------------------------------------------------------------
// Translation to the form calculus of the coefficient algebra. Tensor words
// go to iterated Fedosov products of their factors, with the scalar part
// dropped; folded one-forms append the differential of the marked factor.
// ---------------------------------------------------------------------------

inline FormElement nilpotent_reduce(const FormElement& e, long maxlen) {
    FormElement out;
    out.truncated = e.truncated;
    for (const auto& [w, c] : e.terms) {
        if (static_cast<long>(w.a0.size()) > maxlen) continue;
        bool keep = true;
        for (const auto& s : w.slots)
            if (static_cast<long>(s.size()) > maxlen) keep = false;
        if (keep) out.add_term(w, c);
    }
    return out;
}

inline FormElement tensor_to_forms(const FormAlgebra& fa, const TensorElement& e, long cap = -1) {
    TensorElement kept;
    kept.truncated = e.truncated;
    for (const auto& [w, c] : e.terms)
        if (!w.factors.empty()) kept.add_term(w, c);
    return fa.from_tensor_algebra(kept, cap);
}

inline FormElement cyc_form_to_forms(const FormAlgebra& fa, const CycFormElement& e, long cap = -1) {
    FormElement out;
    out.truncated = e.truncated;
    for (const auto& [w, c] : e.terms) {
        FormElement even = fa.from_tensor_algebra(TensorElement(w.ten), cap);
        out += fa.multiply(even, FormElement(FormWord{GenWord::one(), {w.mid}}), cap) * c;
    }
    return out;
}

// Window of the form calculus of a nilpotent monomial quotient: all quotient
// basis words up to a degree cap. Operators act through the free calculus and
// drop words outside the quotient, which is exact for a monomial ideal.
struct ReducedFormWindow {
    const FormAlgebra* fa;
    long L;  // degree cap
    long maxlen;
    std::vector<std::vector<FormWord>> basis;
    std::vector<std::map<FormWord, size_t>> index;

    ReducedFormWindow(const FormAlgebra* f, long degrees, long ml) : fa(f), L(degrees), maxlen(ml) {
        basis.resize(L + 1);
        index.resize(L + 1);
        const size_t ng = fa->base->gens.size();
        std::vector<GenWord> comps;
        std::vector<GenWord> frontier{GenWord::one()};
        for (long len = 1; len <= maxlen; ++len) {
            std::vector<GenWord> next;
            for (const auto& w : frontier)
                for (size_t g = 0; g < ng; ++g) {
                    GenWord e = w;
                    e.g.push_back(static_cast<uint8_t>(g));
                    next.push_back(e);
                }
            comps.insert(comps.end(), next.begin(), next.end());
            frontier = std::move(next);
        }
        for (int n = 0; n <= L; ++n) {
            std::vector<FormWord> words{FormWord{GenWord::one(), {}}};
            for (int s = 0; s < n; ++s) {
                std::vector<FormWord> next;
                for (const auto& w : words)
                    for (const auto& c : comps) {
                        FormWord e = w;
                        e.slots.push_back(c);
                        next.push_back(e);
                    }
                words = std::move(next);
            }
            for (const auto& w : words) {
                basis[n].push_back(w);
                for (const auto& c : comps) {
                    FormWord e = w;
                    e.a0 = c;
                    basis[n].push_back(e);
                }
            }
            std::sort(basis[n].begin(), basis[n].end());
            for (size_t i = 0; i < basis[n].size(); ++i) index[n][basis[n][i]] = i;
        }
    }

    size_t dim(int n) const { return n >= 0 && n <= L ? basis[n].size() : 0; }

    bool killed(const FormWord& w) const {
        if (static_cast<long>(w.a0.size()) > maxlen) return true;
        for (const auto& s : w.slots)
            if (static_cast<long>(s.size()) > maxlen) return true;
        return false;
    }

    QVec coords(const FormElement& e, int n) const {
        QVec v(dim(n), mpq_class(0));
        for (const auto& [w, c] : e.terms) {
            if (w.degree() != n) continue;
            auto it = index[n].find(w);
            if (it == index[n].end()) {
                assert(killed(w));
                continue;
            }
            assert(c.is_real());
            v[it->second] += c.re;
        }
        return v;
    }

    FormElement from_coords(const QVec& v, int n) const {
        FormElement e;
        for (size_t i = 0; i < v.size(); ++i)
            if (v[i] != 0) e.add_term(basis[n][i], Scalar(v[i]));
        return e;
    }

    QMat op_matrix(const FormOp& op, int n_from, int n_to, bool parallel = false) const {
        (void)parallel;
        const size_t cols = dim(n_from), rows = dim(n_to);
        QMat m(rows, QVec(cols, mpq_class(0)));
        for (size_t j = 0; j < cols; ++j) {
            QVec col = coords(op(FormElement(basis[n_from][j])), n_to);
            for (size_t i = 0; i < rows; ++i) m[i][j] = col[i];
        }
        return m;
    }
};

}  // namespace ncx
