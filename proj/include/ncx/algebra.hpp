#pragma once

#include <cassert>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "element.hpp"

namespace ncx {

struct Generator {
    std::string name;
    int degree = 0;
    bool central = false;  // central letters do not count toward the word cap
};

// Unital associative algebra presented by generators and rewrite rules.
// Every rule maps a subword to a combination of words that are shorter, or of
// equal length and lexicographically smaller, so normalization terminates.
// The empty word is the adjoined unit.
struct AlgebraSpec {
    std::vector<Generator> gens;
    std::map<std::vector<uint8_t>, AlgElement> rules;
    std::set<size_t> rule_lengths;
    mutable std::map<GenWord, AlgElement> memo;

    void add_rule(std::vector<uint8_t> lhs, AlgElement rhs) {
        rule_lengths.insert(lhs.size());
        rules.emplace(std::move(lhs), std::move(rhs));
    }

    int degree(const GenWord& w) const {
        int d = 0;
        for (uint8_t g : w.g) d += gens[g].degree;
        return d;
    }
    int parity(const GenWord& w) const { return degree(w) & 1; }
    long weight(const GenWord& w) const {
        long n = 0;
        for (uint8_t g : w.g) n += gens[g].central ? 0 : 1;
        return n;
    }

    const AlgElement& normalize(const GenWord& w) const {
        auto it = memo.find(w);
        if (it != memo.end()) return it->second;
        AlgElement out;
        bool reduced = false;
        for (size_t pos = 0; pos < w.g.size() && !reduced; ++pos) {
            for (size_t len : rule_lengths) {
                if (pos + len > w.g.size()) break;
                auto rule = rules.find(std::vector<uint8_t>(w.g.begin() + pos, w.g.begin() + pos + len));
                if (rule == rules.end()) continue;
                for (const auto& [rw, rc] : rule->second.terms) {
                    GenWord sub;
                    sub.g.assign(w.g.begin(), w.g.begin() + pos);
                    sub.g.insert(sub.g.end(), rw.g.begin(), rw.g.end());
                    sub.g.insert(sub.g.end(), w.g.begin() + pos + len, w.g.end());
                    AlgElement n = normalize(sub);
                    n *= rc;
                    out += n;
                }
                reduced = true;
                break;
            }
        }
        if (!reduced) out = AlgElement(w);
        return memo.emplace(w, std::move(out)).first->second;
    }

    AlgElement cap_filter(AlgElement e, long cap) const {
        if (cap < 0) return e;
        AlgElement out;
        out.truncated = e.truncated;
        for (auto& [w, c] : e.terms) {
            if (weight(w) <= cap)
                out.terms.emplace(w, std::move(c));
            else
                out.truncated = true;
        }
        return out;
    }

    AlgElement multiply(const AlgElement& a, const AlgElement& b, long cap = -1) const {
        AlgElement out;
        out.truncated = a.truncated || b.truncated;
        for (const auto& [wa, ca] : a.terms) {
            for (const auto& [wb, cb] : b.terms) {
                AlgElement n = normalize(wa.concat(wb));
                n *= ca * cb;
                out += n;
            }
        }
        return cap_filter(std::move(out), cap);
    }

    std::string word_str(const GenWord& w) const {
        if (w.empty()) return "1";
        std::string s;
        for (uint8_t g : w.g) {
            if (!s.empty()) s += ".";
            s += gens[g].name;
        }
        return s;
    }

    // presentations used throughout

    static AlgebraSpec free_algebra(std::vector<std::string> names) {
        AlgebraSpec a;
        for (auto& n : names) a.gens.push_back({std::move(n), 0, false});
        return a;
    }

    static AlgebraSpec exterior(std::vector<std::string> names) {
        AlgebraSpec a;
        for (auto& n : names) a.gens.push_back({std::move(n), 1, false});
        const uint8_t k = static_cast<uint8_t>(a.gens.size());
        for (uint8_t i = 0; i < k; ++i) {
            a.add_rule({i, i}, AlgElement{});
            for (uint8_t j = 0; j < i; ++j)
                a.add_rule({i, j}, AlgElement(GenWord({j, i}), Scalar(-1)));
        }
        return a;
    }

    static AlgebraSpec poly_trunc(std::string name, size_t power) {
        AlgebraSpec a;
        a.gens.push_back({std::move(name), 0, false});
        a.add_rule(std::vector<uint8_t>(power, 0), AlgElement{});
        return a;
    }

    // free algebra with every word of the given length set to zero
    static AlgebraSpec nilpotent_free(std::vector<std::string> names, size_t power) {
        AlgebraSpec a;
        for (auto& n : names) a.gens.push_back({std::move(n), 0, false});
        const size_t k = a.gens.size();
        std::vector<size_t> idx(power, 0);
        while (true) {
            std::vector<uint8_t> lhs(power);
            for (size_t i = 0; i < power; ++i) lhs[i] = static_cast<uint8_t>(idx[i]);
            a.add_rule(std::move(lhs), AlgElement{});
            size_t pos = 0;
            while (pos < power && ++idx[pos] == k) {
                idx[pos] = 0;
                ++pos;
            }
            if (pos == power) break;
        }
        return a;
    }

    // matrix units e(i,j); with super grading the parity of e(i,j) is i+j mod 2
    static AlgebraSpec matrix_units(size_t n, bool super) {
        AlgebraSpec a;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                a.gens.push_back({"e" + std::to_string(i) + std::to_string(j), super ? int((i + j) % 2) : 0, false});
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                for (size_t k = 0; k < n; ++k)
                    for (size_t l = 0; l < n; ++l) {
                        std::vector<uint8_t> lhs = {static_cast<uint8_t>(i * n + j), static_cast<uint8_t>(k * n + l)};
                        a.add_rule(std::move(lhs),
                                   j == k ? AlgElement(GenWord::single(static_cast<uint8_t>(i * n + l))) : AlgElement{});
                    }
        return a;
    }

    // graded tensor product; letters of a come first, cross moves carry the
    // sign of swapping homogeneous elements
    static AlgebraSpec tensor(const AlgebraSpec& a, const AlgebraSpec& b) {
        AlgebraSpec t;
        t.gens = a.gens;
        const uint8_t off = static_cast<uint8_t>(a.gens.size());
        for (const auto& g : b.gens) t.gens.push_back(g);
        for (const auto& [lhs, rhs] : a.rules) t.add_rule(lhs, rhs);
        for (const auto& [lhs, rhs] : b.rules) {
            std::vector<uint8_t> l2 = lhs;
            for (auto& g : l2) g = static_cast<uint8_t>(g + off);
            AlgElement r2;
            for (const auto& [w, c] : rhs.terms) {
                GenWord w2 = w;
                for (auto& g : w2.g) g = static_cast<uint8_t>(g + off);
                r2.add_term(w2, c);
            }
            t.add_rule(std::move(l2), std::move(r2));
        }
        for (uint8_t j = 0; j < b.gens.size(); ++j)
            for (uint8_t i = 0; i < off; ++i)
                t.add_rule({static_cast<uint8_t>(off + j), i},
                           AlgElement(GenWord({i, static_cast<uint8_t>(off + j)}),
                                      Scalar(koszul_sign(b.gens[j].degree, a.gens[i].degree))));
        return t;
    }

    // central polynomial parameter t with its odd square-zero companion dt,
    // meant to sit in front of another algebra via tensor()
    static AlgebraSpec t_dt() {
        AlgebraSpec a;
        a.gens.push_back({"t", 0, true});
        a.gens.push_back({"dt", 1, true});
        a.add_rule({1, 0}, AlgElement(GenWord({0, 1})));
        a.add_rule({1, 1}, AlgElement{});
        return a;
    }
};

// Derivation of the given parity, extended from generators by the Leibniz rule.
struct Derivation {
    const AlgebraSpec* alg = nullptr;
    int degree = 1;
    std::vector<AlgElement> on_gen;

    AlgElement apply(const AlgElement& e, long cap = -1) const {
        AlgElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            int prefix_deg = 0;
            for (size_t i = 0; i < w.g.size(); ++i) {
                const AlgElement& dg = on_gen[w.g[i]];
                if (!dg.is_zero()) {
                    GenWord pre, post;
                    pre.g.assign(w.g.begin(), w.g.begin() + i);
                    post.g.assign(w.g.begin() + i + 1, w.g.end());
                    AlgElement term = alg->multiply(AlgElement(pre), dg, cap);
                    term = alg->multiply(term, AlgElement(post), cap);
                    term *= c * Scalar(koszul_sign(degree, prefix_deg));
                    out += term;
                }
                prefix_deg += alg->gens[w.g[i]].degree;
            }
        }
        return alg->cap_filter(std::move(out), cap);
    }
};

// Supercommutator with a fixed odd element, d(g) = x g - (-1)^{|g|} g x.
// Squares to zero whenever x^2 is central.
inline Derivation commutator_derivation(const AlgebraSpec& a, const AlgElement& x) {
    Derivation d;
    d.alg = &a;
    d.degree = 1;
    for (size_t i = 0; i < a.gens.size(); ++i) {
        AlgElement g(GenWord::single(static_cast<uint8_t>(i)));
        d.on_gen.push_back(a.multiply(x, g) -
                           a.multiply(g, x) * Scalar(koszul_sign(a.gens[i].degree & 1, 1)));
    }
    return d;
}

}  // namespace ncx
