#pragma once

#include <map>
#include <string>
#include <vector>

#include "scalar.hpp"

namespace ncx {

// Sparse linear combination of basis words. W must provide a strict weak
// order giving the canonical term order (length-then-lex for plain words).
// The truncated flag is sticky: it survives every arithmetic operation so a
// verification can refuse inputs that lost terms to a cap.
template <class W>
struct Element {
    std::map<W, Scalar> terms;
    bool truncated = false;

    Element() = default;
    explicit Element(const W& w, Scalar c = Scalar(1)) {
        if (!c.is_zero()) terms.emplace(w, std::move(c));
    }

    bool is_zero() const { return terms.empty(); }
    size_t size() const { return terms.size(); }

    void add_term(const W& w, const Scalar& c) {
        if (c.is_zero()) return;
        auto [it, fresh] = terms.try_emplace(w, c);
        if (!fresh) {
            it->second += c;
            if (it->second.is_zero()) terms.erase(it);
        }
    }

    Element& operator+=(const Element& o) {
        truncated = truncated || o.truncated;
        for (const auto& [w, c] : o.terms) add_term(w, c);
        return *this;
    }
    Element& operator-=(const Element& o) {
        truncated = truncated || o.truncated;
        for (const auto& [w, c] : o.terms) add_term(w, -c);
        return *this;
    }
    Element& operator*=(const Scalar& s) {
        if (s.is_zero()) {
            terms.clear();
            return *this;
        }
        for (auto& [w, c] : terms) c *= s;
        return *this;
    }
    friend Element operator+(Element a, const Element& b) { return a += b; }
    friend Element operator-(Element a, const Element& b) { return a -= b; }
    friend Element operator*(Element a, const Scalar& s) { return a *= s; }
    friend Element operator*(const Scalar& s, Element a) { return a *= s; }
    Element operator-() const {
        Element r = *this;
        for (auto& [w, c] : r.terms) c = -c;
        return r;
    }

    friend bool operator==(const Element& a, const Element& b) { return a.terms == b.terms; }
    friend bool operator!=(const Element& a, const Element& b) { return !(a.terms == b.terms); }

    Scalar coeff(const W& w) const {
        auto it = terms.find(w);
        return it == terms.end() ? Scalar(0) : it->second;
    }

    template <class F>
    std::string str(F&& word_name) const {
        if (terms.empty()) return "0";
        std::string out;
        for (const auto& [w, c] : terms) {
            if (!out.empty()) out += " + ";
            out += c.str() + "*" + word_name(w);
        }
        return out;
    }
};

// Plain generator word; canonical order is length then lexicographic.
struct GenWord {
    std::vector<uint8_t> g;

    GenWord() = default;
    explicit GenWord(std::vector<uint8_t> v) : g(std::move(v)) {}
    static GenWord one() { return GenWord{}; }
    static GenWord single(uint8_t i) { return GenWord(std::vector<uint8_t>{i}); }

    size_t size() const { return g.size(); }
    bool empty() const { return g.empty(); }

    friend bool operator==(const GenWord& a, const GenWord& b) { return a.g == b.g; }
    friend bool operator<(const GenWord& a, const GenWord& b) {
        if (a.g.size() != b.g.size()) return a.g.size() < b.g.size();
        return a.g < b.g;
    }
    GenWord concat(const GenWord& o) const {
        GenWord r = *this;
        r.g.insert(r.g.end(), o.g.begin(), o.g.end());
        return r;
    }
};

using AlgElement = Element<GenWord>;

}  // namespace ncx
