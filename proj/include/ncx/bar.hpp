#pragma once

#include "forms.hpp"

namespace ncx {

namespace detail {
inline bool flat_less(const std::vector<GenWord>& a, const std::vector<GenWord>& b) {
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
        if (a[i].size() != b[i].size()) return a[i].size() < b[i].size();
        if (!(a[i] == b[i])) return a[i] < b[i];
    }
    return a.size() < b.size();
}
inline long flat_letters(const std::vector<GenWord>& a) {
    long n = 0;
    for (const auto& e : a) n += static_cast<long>(e.size());
    return n;
}
}  // namespace detail

// Word of the bar construction: a list of nonempty tensor entries. The same
// shape serves as the flat tensor power that the cyclic permutation acts on.
struct BarWord {
    std::vector<GenWord> entries;

    size_t size() const { return entries.size(); }
    long letters() const { return detail::flat_letters(entries); }
    friend bool operator==(const BarWord& a, const BarWord& b) { return a.entries == b.entries; }
    friend bool operator<(const BarWord& a, const BarWord& b) {
        if (a.letters() != b.letters()) return a.letters() < b.letters();
        if (a.size() != b.size()) return a.size() < b.size();
        return detail::flat_less(a.entries, b.entries);
    }
};

struct CycWord {
    GenWord a0;  // nonempty
    std::vector<GenWord> entries;

    long letters() const { return static_cast<long>(a0.size()) + detail::flat_letters(entries); }
    friend bool operator==(const CycWord& a, const CycWord& b) { return a.a0 == b.a0 && a.entries == b.entries; }
    friend bool operator<(const CycWord& a, const CycWord& b) {
        if (a.letters() != b.letters()) return a.letters() < b.letters();
        if (a.entries.size() != b.entries.size()) return a.entries.size() < b.entries.size();
        if (a.a0.size() != b.a0.size()) return a.a0.size() < b.a0.size();
        if (!(a.a0 == b.a0)) return a.a0 < b.a0;
        return detail::flat_less(a.entries, b.entries);
    }
};

struct TriWord {
    BarWord w1;
    GenWord mid;  // nonempty
    BarWord w2;

    friend bool operator==(const TriWord& a, const TriWord& b) {
        return a.w1 == b.w1 && a.mid == b.mid && a.w2 == b.w2;
    }
    friend bool operator<(const TriWord& a, const TriWord& b) {
        long la = a.w1.letters() + static_cast<long>(a.mid.size()) + a.w2.letters();
        long lb = b.w1.letters() + static_cast<long>(b.mid.size()) + b.w2.letters();
        if (la != lb) return la < lb;
        if (a.w1.size() != b.w1.size()) return a.w1.size() < b.w1.size();
        if (a.w2.size() != b.w2.size()) return a.w2.size() < b.w2.size();
        if (!(a.w1 == b.w1)) return a.w1 < b.w1;
        if (a.mid.size() != b.mid.size()) return a.mid.size() < b.mid.size();
        if (!(a.mid == b.mid)) return a.mid < b.mid;
        return a.w2 < b.w2;
    }
};

struct BarSplit {
    BarWord l, r;
    friend bool operator==(const BarSplit& a, const BarSplit& b) { return a.l == b.l && a.r == b.r; }
    friend bool operator<(const BarSplit& a, const BarSplit& b) {
        if (!(a.l == b.l)) return a.l < b.l;
        return a.r < b.r;
    }
};

using BarElement = Element<BarWord>;
using CycElement = Element<CycWord>;
using TriElement = Element<TriWord>;

// The two columns of the bar X-complex.
struct BarChain {
    BarElement bar;
    CycElement cyc;

    BarChain operator+(const BarChain& o) const { return {bar + o.bar, cyc + o.cyc}; }
    BarChain operator-(const BarChain& o) const { return {bar - o.bar, cyc - o.cyc}; }
    bool is_zero() const { return bar.is_zero() && cyc.is_zero(); }
    friend bool operator==(const BarChain& a, const BarChain& b) { return a.bar == b.bar && a.cyc == b.cyc; }
};

struct BarCoalgebra {
    const AlgebraSpec* base;

    explicit BarCoalgebra(const AlgebraSpec* b) : base(b) {}

    Element<BarSplit> coproduct(const BarElement& e) const {
        Element<BarSplit> out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms)
            for (size_t i = 0; i <= w.size(); ++i) {
                BarSplit s;
                s.l.entries.assign(w.entries.begin(), w.entries.begin() + i);
                s.r.entries.assign(w.entries.begin() + i, w.entries.end());
                out.add_term(s, c);
            }
        return out;
    }

    BarElement bprime(const BarElement& e) const {
        BarElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms)
            for (size_t j = 0; j + 1 < w.size(); ++j) {
                AlgElement prod = base->multiply(AlgElement(w.entries[j]), AlgElement(w.entries[j + 1]));
                for (const auto& [pw, pc] : prod.terms) {
                    assert(!pw.empty());
                    BarWord m = w;
                    m.entries[j] = pw;
                    m.entries.erase(m.entries.begin() + j + 1);
                    out.add_term(m, (j % 2 == 0 ? c : -c) * pc);
                }
            }
        return out;
    }

    BarElement delta(const BarElement& e) const { return -bprime(e); }

    BarElement lambda_cyclic(const BarElement& e) const {
        BarElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            if (w.size() == 0) {
                out.add_term(w, c);
                continue;
            }
            BarWord m;
            m.entries.push_back(w.entries.back());
            m.entries.insert(m.entries.end(), w.entries.begin(), w.entries.end() - 1);
            out.add_term(m, w.size() % 2 == 1 ? c : -c);
        }
        return out;
    }

    BarElement norm_N(const BarElement& e) const {
        BarElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            BarElement cur(w, c);
            for (size_t i = 0; i < std::max<size_t>(w.size(), 1); ++i) {
                out += cur;
                cur = lambda_cyclic(cur);
            }
        }
        return out;
    }

    TriElement natural_inclusion(const CycElement& e) const {
        TriElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            const size_t n = w.entries.size();
            for (size_t i = 0; i <= n; ++i) {
                TriWord t;
                t.w1.entries.assign(w.entries.begin() + i, w.entries.end());
                t.mid = w.a0;
                t.w2.entries.assign(w.entries.begin(), w.entries.begin() + i);
                long s = static_cast<long>(i) * (static_cast<long>(n) - 1);
                out.add_term(t, s % 2 == 0 ? c : -c);
            }
        }
        return out;
    }

    BarElement coderivation(const TriElement& e) const {
        BarElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            BarWord m = w.w1;
            m.entries.push_back(w.mid);
            m.entries.insert(m.entries.end(), w.w2.entries.begin(), w.w2.entries.end());
            out.add_term(m, w.w1.size() % 2 == 0 ? c : -c);
        }
        return out;
    }

    CycElement hochschild_b(const CycElement& e) const {
        CycElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            const size_t n = w.entries.size();
            if (n == 0) continue;
            std::vector<GenWord> tail(w.entries.begin() + 1, w.entries.end());
            for (const auto& [pw, pc] : base->multiply(AlgElement(w.a0), AlgElement(w.entries.front())).terms) {
                assert(!pw.empty());
                out.add_term(CycWord{pw, tail}, c * pc);
            }
            for (size_t i = 1; i < n; ++i) {
                AlgElement prod = base->multiply(AlgElement(w.entries[i - 1]), AlgElement(w.entries[i]));
                for (const auto& [pw, pc] : prod.terms) {
                    assert(!pw.empty());
                    CycWord m = w;
                    m.entries[i - 1] = pw;
                    m.entries.erase(m.entries.begin() + i);
                    out.add_term(m, (i % 2 == 0 ? c : -c) * pc);
                }
            }
            std::vector<GenWord> head(w.entries.begin(), w.entries.end() - 1);
            for (const auto& [pw, pc] : base->multiply(AlgElement(w.entries.back()), AlgElement(w.a0)).terms) {
                assert(!pw.empty());
                out.add_term(CycWord{pw, head}, (n % 2 == 0 ? c : -c) * pc);
            }
        }
        return out;
    }

    static BarWord flatten(const CycWord& w) {
        BarWord f;
        f.entries.push_back(w.a0);
        f.entries.insert(f.entries.end(), w.entries.begin(), w.entries.end());
        return f;
    }
    static CycWord unflatten(const BarWord& w) {
        assert(w.size() >= 1);
        return CycWord{w.entries.front(), std::vector<GenWord>(w.entries.begin() + 1, w.entries.end())};
    }

    BarChain x_boundary(const BarChain& x) const {
        BarChain out;
        out.bar = delta(x.bar);
        out.bar.truncated = out.bar.truncated || x.cyc.truncated;
        out.cyc.truncated = x.bar.truncated || x.cyc.truncated;
        for (const auto& [w, c] : x.bar.terms) {
            if (w.size() == 0) continue;
            BarElement lw = BarElement(w, c) - lambda_cyclic(BarElement(w, c));
            for (const auto& [v, cv] : lw.terms) out.cyc.add_term(unflatten(v), cv);
        }
        for (const auto& [w, c] : x.cyc.terms) {
            out.cyc += hochschild_b(CycElement(w, c));
            out.bar += norm_N(BarElement(flatten(w), c));
        }
        return out;
    }

    FormElement bar_to_forms(const BarChain& x) const {
        FormElement out;
        out.truncated = x.bar.truncated || x.cyc.truncated;
        for (const auto& [w, c] : x.bar.terms) out.add_term(FormWord{GenWord::one(), w.entries}, c);
        for (const auto& [w, c] : x.cyc.terms) out.add_term(FormWord{w.a0, w.entries}, c);
        return out;
    }

    BarChain forms_to_bar(const FormElement& e) const {
        BarChain out;
        out.bar.truncated = out.cyc.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            if (w.a0.empty())
                out.bar.add_term(BarWord{w.slots}, c);
            else
                out.cyc.add_term(CycWord{w.a0, w.slots}, c);
        }
        return out;
    }

    std::string bar_str(const BarWord& w) const {
        std::string s = "(";
        for (size_t i = 0; i < w.size(); ++i) {
            if (i) s += "|";
            s += base->word_str(w.entries[i]);
        }
        return s + ")";
    }
    std::string cyc_str(const CycWord& w) const { return base->word_str(w.a0) + "@" + bar_str(BarWord{w.entries}); }
    std::string tri_str(const TriWord& w) const {
        return bar_str(w.w1) + "@" + base->word_str(w.mid) + "@" + bar_str(w.w2);
    }
    std::string str(const BarElement& e) const {
        return e.str([&](const BarWord& w) { return bar_str(w); });
    }
    std::string str(const CycElement& e) const {
        return e.str([&](const CycWord& w) { return cyc_str(w); });
    }
    std::string str(const TriElement& e) const {
        return e.str([&](const TriWord& w) { return tri_str(w); });
    }
};

}  // namespace ncx
