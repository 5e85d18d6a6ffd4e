#pragma once

#include <cassert>
#include <map>
#include <set>
#include <vector>

#include "algebra.hpp"
#include "nullspace.hpp"

namespace ncx {

// All normal words of a presentation, found by closing the generators under
// right multiplication. Only usable when the quotient is finite dimensional;
// the cap is a safety net against runaway presentations.
inline std::vector<GenWord> enumerate_basis(const AlgebraSpec& a, size_t max_words = 4096) {
    std::set<GenWord> seen;
    std::vector<GenWord> queue{GenWord::one()};
    seen.insert(GenWord::one());
    for (size_t head = 0; head < queue.size(); ++head) {
        GenWord w = queue[head];
        for (uint8_t g = 0; g < a.gens.size(); ++g) {
            for (const auto& [nw, nc] : a.normalize(w.concat(GenWord::single(g))).terms) {
                if (seen.insert(nw).second) {
                    queue.push_back(nw);
                    assert(queue.size() <= max_words);
                }
            }
        }
    }
    return std::vector<GenWord>(seen.begin(), seen.end());
}

// One-form u d[v] over the unital span of an algebra: u may be the unit, v
// never is. Linear combinations of these represent classes of the universal
// bimodule of one-forms before passing to the commutator quotient.
struct Omega1Word {
    GenWord u, v;

    friend bool operator==(const Omega1Word& a, const Omega1Word& b) { return a.u == b.u && a.v == b.v; }
    friend bool operator<(const Omega1Word& a, const Omega1Word& b) {
        if (!(a.u == b.u)) return a.u < b.u;
        return a.v < b.v;
    }
};

using Omega1Element = Element<Omega1Word>;

// X-complex scaffolding for a finite dimensional DG algebra: the two columns
// are the unital span and the one-forms, connected by d and bbar. Quotient
// comparisons in the second column run against the echelonized span of all
// commutators [r, omega].
struct XComplex {
    const AlgebraSpec* alg;
    const Derivation* delta;
    std::vector<GenWord> basis;
    std::vector<Omega1Word> om_basis;
    std::map<Omega1Word, size_t> om_index;
    IncrementalEchelon span;

    XComplex(const AlgebraSpec* a, const Derivation* d) : alg(a), delta(d), span(0) {
        basis = enumerate_basis(*a);
        for (const auto& u : basis)
            for (const auto& v : basis) {
                if (v.empty()) continue;
                om_index.emplace(Omega1Word{u, v}, om_basis.size());
                om_basis.push_back(Omega1Word{u, v});
            }
        span = IncrementalEchelon(om_basis.size());
        for (const auto& r : basis) {
            if (r.empty()) continue;
            for (const auto& om : om_basis) {
                Omega1Element c = commutator(r, om);
                if (c.is_zero()) continue;
                span.insert(coords(c, false));
            }
        }
    }

    int om_parity(const Omega1Word& w) const { return (alg->parity(w.u) + alg->parity(w.v) + 1) & 1; }

    int parity(const Omega1Element& e) const {
        int p = -1;
        for (const auto& [w, c] : e.terms) {
            if (p < 0) p = om_parity(w);
            assert(p == om_parity(w));
        }
        return p < 0 ? 0 : p;
    }

    // z (u d[v]) = (z u) d[v]
    Omega1Element om_left(const AlgElement& z, const Omega1Element& e) const {
        Omega1Element out;
        out.truncated = z.truncated || e.truncated;
        for (const auto& [zw, zc] : z.terms)
            for (const auto& [w, c] : e.terms)
                for (const auto& [pw, pc] : alg->normalize(zw.concat(w.u)).terms)
                    out.add_term(Omega1Word{pw, w.v}, zc * c * pc);
        return out;
    }

    // (u d[v]) z = u d[v z] - (-)^{|v|} (u v) d[z]
    Omega1Element om_right(const Omega1Element& e, const AlgElement& z) const {
        Omega1Element out;
        out.truncated = z.truncated || e.truncated;
        for (const auto& [w, c] : e.terms) {
            const int sv = koszul_sign(alg->parity(w.v), 1);
            for (const auto& [zw, zc] : z.terms) {
                for (const auto& [pw, pc] : alg->normalize(w.v.concat(zw)).terms) {
                    if (pw.empty()) continue;
                    out.add_term(Omega1Word{w.u, pw}, c * zc * pc);
                }
                if (zw.empty()) continue;
                for (const auto& [pw, pc] : alg->normalize(w.u.concat(w.v)).terms)
                    out.add_term(Omega1Word{pw, zw}, -Scalar(sv) * c * zc * pc);
            }
        }
        return out;
    }

    // universal derivation; the unit component of the argument drops out
    Omega1Element om_d(const AlgElement& x) const {
        Omega1Element out;
        out.truncated = x.truncated;
        for (const auto& [w, c] : x.terms) {
            if (w.empty()) continue;
            out.add_term(Omega1Word{GenWord::one(), w}, c);
        }
        return out;
    }

    // delta(u d[v]) = delta(u) d[v] + (-)^{|u|+1} u d[delta(v)]
    Omega1Element om_delta(const Omega1Element& e) const {
        Omega1Element out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            for (const auto& [pw, pc] : delta->apply(AlgElement(w.u)).terms)
                out.add_term(Omega1Word{pw, w.v}, c * pc);
            const Scalar s(koszul_sign(alg->parity(w.u) + 1, 1));
            for (const auto& [pw, pc] : delta->apply(AlgElement(w.v)).terms) {
                assert(!pw.empty());
                out.add_term(Omega1Word{w.u, pw}, s * c * pc);
            }
        }
        return out;
    }

    AlgElement alg_delta(const AlgElement& x) const { return delta->apply(x); }

    // bbar(u d[v]) = (-)^{|u|} (u v - (-)^{|u||v|} v u)
    AlgElement bbar(const Omega1Element& e) const {
        AlgElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            const Scalar su(koszul_sign(alg->parity(w.u), 1));
            const Scalar sc(koszul_sign(alg->parity(w.u), alg->parity(w.v)));
            for (const auto& [pw, pc] : alg->normalize(w.u.concat(w.v)).terms) out.add_term(pw, su * c * pc);
            for (const auto& [pw, pc] : alg->normalize(w.v.concat(w.u)).terms) out.add_term(pw, -su * sc * c * pc);
        }
        return out;
    }

    Omega1Element commutator(const GenWord& r, const Omega1Word& om) const {
        Omega1Element e(om);
        AlgElement z(r);
        const Scalar s(koszul_sign(alg->parity(r), om_parity(om)));
        return om_left(z, e) - om_right(e, z) * s;
    }

    QVec coords(const Omega1Element& e, bool imag_part) const {
        QVec v(om_basis.size(), mpq_class(0));
        for (const auto& [w, c] : e.terms) {
            auto it = om_index.find(w);
            assert(it != om_index.end());
            v[it->second] = imag_part ? c.im : c.re;
        }
        return v;
    }

    // zero test in the commutator quotient of one-forms
    bool natural_is_zero(const Omega1Element& e) const {
        return span.contains(coords(e, false)) && span.contains(coords(e, true));
    }

    bool natural_equal(const Omega1Element& a, const Omega1Element& b) const { return natural_is_zero(a - b); }

    std::string om_str(const Omega1Word& w) const { return alg->word_str(w.u) + " d[" + alg->word_str(w.v) + "]"; }
    std::string str(const Omega1Element& e) const {
        return e.str([this](const Omega1Word& w) { return om_str(w); });
    }
};

}  // namespace ncx
