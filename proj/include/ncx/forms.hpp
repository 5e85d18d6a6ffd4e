#pragma once

#include <cassert>
#include <functional>

#include "algebra.hpp"
#include "omp.hpp"
#include "qmatrix.hpp"

namespace ncx {

// Noncommutative differential form a0 d[s1] ... d[sn] over a free algebra.
// a0 may be the unit (empty word), the slots never are. The term order is
// degree, then total letter count, then a flattened per-slot comparison.
struct FormWord {
    GenWord a0;
    std::vector<GenWord> slots;

    int degree() const { return static_cast<int>(slots.size()); }
    long letters() const {
        long n = static_cast<long>(a0.size());
        for (const auto& s : slots) n += static_cast<long>(s.size());
        return n;
    }
    friend bool operator==(const FormWord& x, const FormWord& y) { return x.a0 == y.a0 && x.slots == y.slots; }
    friend bool operator<(const FormWord& x, const FormWord& y) {
        if (x.degree() != y.degree()) return x.degree() < y.degree();
        if (x.letters() != y.letters()) return x.letters() < y.letters();
        if (x.a0.size() != y.a0.size()) return x.a0.size() < y.a0.size();
        if (!(x.a0 == y.a0)) return x.a0 < y.a0;
        for (size_t i = 0; i < x.slots.size(); ++i) {
            if (x.slots[i].size() != y.slots[i].size()) return x.slots[i].size() < y.slots[i].size();
            if (!(x.slots[i] == y.slots[i])) return x.slots[i] < y.slots[i];
        }
        return false;
    }
};

struct TensorWord {
    std::vector<GenWord> factors;  // all nonempty; empty list is the unit

    long letters() const {
        long n = 0;
        for (const auto& f : factors) n += static_cast<long>(f.size());
        return n;
    }
    friend bool operator==(const TensorWord& x, const TensorWord& y) { return x.factors == y.factors; }
    friend bool operator<(const TensorWord& x, const TensorWord& y) {
        if (x.letters() != y.letters()) return x.letters() < y.letters();
        if (x.factors.size() != y.factors.size()) return x.factors.size() < y.factors.size();
        for (size_t i = 0; i < x.factors.size(); ++i) {
            if (x.factors[i].size() != y.factors[i].size()) return x.factors[i].size() < y.factors[i].size();
            if (!(x.factors[i] == y.factors[i])) return x.factors[i] < y.factors[i];
        }
        return false;
    }
};

using FormElement = Element<FormWord>;
using TensorElement = Element<TensorWord>;

struct FormAlgebra {
    const AlgebraSpec* base;  // must be free: slot contents multiply by concatenation

    explicit FormAlgebra(const AlgebraSpec* b) : base(b) { assert(b->rules.empty()); }

    FormElement cap_filter(FormElement e, long cap) const {
        if (cap < 0) return e;
        FormElement out;
        out.truncated = e.truncated;
        for (auto& [w, c] : e.terms) {
            if (w.letters() <= cap)
                out.terms.emplace(w, std::move(c));
            else
                out.truncated = true;
        }
        return out;
    }

    // (omega d[s]) * b = omega d[s b] - (omega * s) d[b]
    FormElement right_mult(const FormWord& u, const GenWord& bw) const {
        if (bw.empty()) return FormElement(u);
        if (u.slots.empty()) return FormElement(FormWord{u.a0.concat(bw), {}});
        FormWord merged = u;
        merged.slots.back() = merged.slots.back().concat(bw);
        FormElement out(merged);
        FormWord head{u.a0, std::vector<GenWord>(u.slots.begin(), u.slots.end() - 1)};
        FormElement tail = right_mult(head, u.slots.back());
        for (const auto& [w, c] : tail.terms) {
            FormWord t = w;
            t.slots.push_back(bw);
            out.add_term(t, -c);
        }
        return out;
    }

    FormElement mul_words(const FormWord& u, const FormWord& v) const {
        FormElement r = right_mult(u, v.a0);
        if (v.slots.empty()) return r;
        FormElement out;
        for (const auto& [w, c] : r.terms) {
            FormWord t = w;
            t.slots.insert(t.slots.end(), v.slots.begin(), v.slots.end());
            out.add_term(t, c);
        }
        return out;
    }

    FormElement multiply(const FormElement& x, const FormElement& y, long cap = -1) const {
        FormElement out;
        out.truncated = x.truncated || y.truncated;
        for (const auto& [wx, cx] : x.terms)
            for (const auto& [wy, cy] : y.terms) {
                FormElement t = mul_words(wx, wy);
                t *= cx * cy;
                out += t;
            }
        return cap_filter(std::move(out), cap);
    }

    FormElement d(const FormElement& e) const {
        FormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            if (w.a0.empty()) continue;
            FormWord t;
            t.slots.push_back(w.a0);
            t.slots.insert(t.slots.end(), w.slots.begin(), w.slots.end());
            out.add_term(t, c);
        }
        return out;
    }

    FormElement left_mult_word(const GenWord& a, const FormElement& e) const {
        FormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            FormWord t = w;
            t.a0 = a.concat(t.a0);
            out.add_term(t, c);
        }
        return out;
    }

    FormElement hochschild_b(const FormElement& e) const {
        FormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            const int n = w.degree();
            if (n == 0) continue;
            FormWord head{w.a0, std::vector<GenWord>(w.slots.begin(), w.slots.end() - 1)};
            const GenWord& s = w.slots.back();
            Scalar sgn = c * Scalar(n % 2 == 1 ? 1 : -1);
            FormElement comm = right_mult(head, s);
            FormWord left = head;
            left.a0 = s.concat(left.a0);
            comm.add_term(left, Scalar(-1));
            comm *= sgn;
            out += comm;
        }
        return out;
    }

    FormElement karoubi_kappa(const FormElement& e) const {
        FormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            const int n = w.degree();
            if (n == 0) {
                out.add_term(w, c);
                continue;
            }
            FormWord head{w.a0, std::vector<GenWord>(w.slots.begin(), w.slots.end() - 1)};
            FormWord ds{GenWord::one(), {w.slots.back()}};
            FormElement t = mul_words(ds, head);
            t *= c * Scalar(n % 2 == 1 ? 1 : -1);
            out += t;
        }
        return out;
    }

    FormElement connes_B(const FormElement& e) const {
        FormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            FormElement acc = d(FormElement(w, c));
            FormElement step = acc;
            for (int i = 1; i <= w.degree(); ++i) {
                step = karoubi_kappa(step);
                acc += step;
            }
            out += acc;
        }
        return out;
    }

    // boundaries of the two-term complex carried by even/odd forms: the odd
    // side maps into both neighboring even degrees
    FormElement cq_bbar(const FormElement& e) const {
        FormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            assert(w.degree() % 2 == 1);
            FormElement t(w, c);
            FormElement dt = d(t);
            out += hochschild_b(t) - dt - karoubi_kappa(dt);
        }
        return out;
    }

    FormElement cq_natural_d(const FormElement& e) const {
        FormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            const int n = w.degree();
            assert(n % 2 == 0);
            FormElement t(w, c);
            FormElement step = d(t);
            FormElement acc = step;
            for (int i = 1; i <= n; ++i) {
                step = karoubi_kappa(step);
                acc += step;
            }
            FormElement bt = hochschild_b(t);
            FormElement bstep = bt;
            for (int i = 0; i < n / 2; ++i) {
                if (i > 0) {
                    bstep = karoubi_kappa(karoubi_kappa(bstep));
                }
                acc -= bstep;
            }
            out += acc;
        }
        return out;
    }

    FormElement x_boundary(const FormElement& e) const {
        FormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            FormElement t(w, c);
            out += (w.degree() % 2 == 0) ? cq_natural_d(t) : cq_bbar(t);
        }
        return out;
    }

    FormElement b_plus_B(const FormElement& e) const { return hochschild_b(e) + connes_B(e); }

    FormElement fedosov_product(const FormElement& x, const FormElement& y, long cap = -1) const {
        return cap_filter(multiply(x, y, cap) - multiply(d(x), d(y), cap), cap);
    }

    // degree-n forms scale by (-1)^[n/2] [n/2]!
    static Scalar degree_scale(int n) {
        long m = n / 2;
        mpq_class f = 1;
        for (long k = 2; k <= m; ++k) f *= k;
        if (m % 2 == 1) f = -f;
        return Scalar(f);
    }

    FormElement rescale_c(const FormElement& e, bool inverse = false) const {
        FormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            Scalar s = degree_scale(w.degree());
            out.add_term(w, inverse ? c / s : c * s);
        }
        return out;
    }

    TensorElement to_tensor_algebra(const FormElement& e) const {
        TensorElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            assert(w.degree() % 2 == 0);
            const size_t pairs = w.slots.size() / 2;
            for (uint32_t mask = 0; mask < (1u << pairs); ++mask) {
                TensorWord t;
                if (!w.a0.empty()) t.factors.push_back(w.a0);
                int splits = 0;
                for (size_t p = 0; p < pairs; ++p) {
                    if (mask & (1u << p)) {
                        t.factors.push_back(w.slots[2 * p]);
                        t.factors.push_back(w.slots[2 * p + 1]);
                        ++splits;
                    } else {
                        t.factors.push_back(w.slots[2 * p].concat(w.slots[2 * p + 1]));
                    }
                }
                out.add_term(t, splits % 2 == 0 ? c : -c);
            }
        }
        return out;
    }

    FormElement from_tensor_algebra(const TensorElement& e, long cap = -1) const {
        FormElement out;
        out.truncated = e.truncated;
        for (const auto& [w, c] : e.terms) {
            FormElement acc(FormWord{}, c);
            for (const auto& f : w.factors) acc = fedosov_product(acc, FormElement(FormWord{f, {}}), cap);
            out += acc;
        }
        return cap_filter(std::move(out), cap);
    }

    std::string form_str(const FormWord& w) const {
        std::string s = base->word_str(w.a0);
        for (const auto& sl : w.slots) s += " d[" + base->word_str(sl) + "]";
        return s;
    }
    std::string str(const FormElement& e) const {
        return e.str([&](const FormWord& w) { return form_str(w); });
    }
    std::string tensor_str(const TensorWord& w) const {
        if (w.factors.empty()) return "1";
        std::string s = "(";
        for (size_t i = 0; i < w.factors.size(); ++i) {
            if (i) s += "|";
            s += base->word_str(w.factors[i]);
        }
        return s + ")";
    }
    std::string str(const TensorElement& e) const {
        return e.str([&](const TensorWord& w) { return tensor_str(w); });
    }
};

using FormOp = std::function<FormElement(const FormElement&)>;

// All forms with an exact total letter count: every operator above except the
// products preserves it, so these spaces carry faithful finite matrices.
struct FormWindow {
    const FormAlgebra* fa;
    long L;
    std::vector<std::vector<FormWord>> basis;           // by degree 0..L
    std::vector<std::map<FormWord, size_t>> index;

    FormWindow(const FormAlgebra* f, long letters) : fa(f), L(letters) {
        basis.resize(L + 1);
        index.resize(L + 1);
        const size_t k = fa->base->gens.size();
        for (int n = 0; n <= L; ++n) {
            std::vector<long> lens(n + 1, 0);
            enumerate_lengths(n, L, 0, lens, k, basis[n]);
            for (size_t i = 0; i < basis[n].size(); ++i) index[n].emplace(basis[n][i], i);
        }
    }

    static void fill_letters(const std::vector<long>& lens, size_t k, std::vector<FormWord>& out) {
        long total = 0;
        for (long l : lens) total += l;
        std::vector<uint8_t> flat(total, 0);
        while (true) {
            FormWord w;
            size_t p = 0;
            w.a0.g.assign(flat.begin(), flat.begin() + lens[0]);
            p = lens[0];
            for (size_t i = 1; i < lens.size(); ++i) {
                GenWord s;
                s.g.assign(flat.begin() + p, flat.begin() + p + lens[i]);
                p += lens[i];
                w.slots.push_back(std::move(s));
            }
            out.push_back(std::move(w));
            long i = total - 1;
            while (i >= 0 && flat[i] == k - 1) flat[i--] = 0;
            if (i < 0) break;
            ++flat[i];
        }
    }

    static void enumerate_lengths(int n, long remaining, int slot, std::vector<long>& lens, size_t k,
                                  std::vector<FormWord>& out) {
        if (slot == n + 1) {
            if (remaining == 0) fill_letters(lens, k, out);
            return;
        }
        long lo = slot == 0 ? 0 : 1;
        for (long l = lo; l <= remaining; ++l) {
            lens[slot] = l;
            enumerate_lengths(n, remaining - l, slot + 1, lens, k, out);
        }
        lens[slot] = 0;
    }

    size_t dim(int n) const { return n >= 0 && n <= L ? basis[n].size() : 0; }

    QVec coords(const FormElement& e, int n) const {
        QVec v(dim(n), mpq_class(0));
        for (const auto& [w, c] : e.terms) {
            if (w.degree() != n) continue;
            assert(c.is_real());
            auto it = index[n].find(w);
            assert(it != index[n].end());
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

    QMat op_matrix(const FormOp& op, int n_from, int n_to, bool parallel = use_omp) const {
        const size_t cols = dim(n_from), rows = dim(n_to);
        std::vector<QVec> col(cols);
#pragma omp parallel for schedule(dynamic) if (parallel)
        for (long j = 0; j < static_cast<long>(cols); ++j)
            col[j] = coords(op(FormElement(basis[n_from][j])), n_to);
        QMat m(rows, QVec(cols, mpq_class(0)));
        for (size_t j = 0; j < cols; ++j)
            for (size_t i = 0; i < rows; ++i) m[i][j] = col[j][i];
        return m;
    }
};

// Projection onto the stabilized kernel of (kappa^2 - 1) along its stabilized
// image, one block per form degree of a letter window.
struct SpectralP1 {
    std::vector<QMat> proj;

    template <class Window>
    static SpectralP1 build(const Window& win, bool parallel = use_omp) {
        SpectralP1 p;
        p.proj.resize(win.L + 1);
        for (int n = 0; n <= win.L; ++n) {
            const size_t dim = win.dim(n);
            QMat kap = win.op_matrix([&](const FormElement& e) { return win.fa->karoubi_kappa(e); }, n, n, parallel);
            QMat m = qmat_add(qmat_mul(kap, kap), qmat_scale(qmat_identity(dim), mpq_class(-1)));
            QMat power = m;
            std::vector<QVec> kernel = solve_nullspace(power, dim, parallel);
            while (true) {
                QMat next = qmat_mul(power, m);
                std::vector<QVec> k2 = solve_nullspace(next, dim, parallel);
                if (k2.size() == kernel.size()) break;
                power = std::move(next);
                kernel = std::move(k2);
            }
            IncrementalEchelon ech(dim);
            std::vector<size_t> img_cols;
            for (size_t j = 0; j < dim; ++j) {
                QVec c(dim);
                for (size_t i = 0; i < dim; ++i) c[i] = power[i][j];
                if (ech.insert(c)) img_cols.push_back(j);
            }
            assert(kernel.size() + img_cols.size() == dim);
            QMat change(dim, QVec(dim, mpq_class(0)));
            for (size_t j = 0; j < kernel.size(); ++j)
                for (size_t i = 0; i < dim; ++i) change[i][j] = kernel[j][i];
            for (size_t j = 0; j < img_cols.size(); ++j)
                for (size_t i = 0; i < dim; ++i) change[i][kernel.size() + j] = power[i][img_cols[j]];
            QMat inv;
            bool ok = qmat_invert(change, inv);
            assert(ok);
            (void)ok;
            QMat kmat(dim, QVec(kernel.size(), mpq_class(0)));
            for (size_t j = 0; j < kernel.size(); ++j)
                for (size_t i = 0; i < dim; ++i) kmat[i][j] = kernel[j][i];
            QMat top(kernel.size(), QVec(dim, mpq_class(0)));
            for (size_t i = 0; i < kernel.size(); ++i) top[i] = inv[i];
            p.proj[n] = qmat_mul(kmat, top);
        }
        return p;
    }

    template <class Window>
    FormElement apply(const Window& win, const FormElement& e) const {
        FormElement out;
        out.truncated = e.truncated;
        for (int n = 0; n <= win.L; ++n) {
            QVec v = win.coords(e, n);
            bool any = false;
            for (const auto& q : v) any = any || q != 0;
            if (any) out += win.from_coords(qmat_vec(proj[n], v), n);
        }
        return out;
    }

    size_t rank(int n) const {
        IncrementalEchelon ech(proj[n].size());
        size_t r = 0;
        for (size_t j = 0; j < proj[n].size(); ++j) {
            QVec c(proj[n].size());
            for (size_t i = 0; i < proj[n].size(); ++i) c[i] = proj[n][i][j];
            if (ech.insert(c)) ++r;
        }
        return r;
    }
};

// Reduce against b-images above the cutoff and drop higher degrees: the
// degrees below n survive, the degree-n part modulo b of degree n+1. The
// boundary preserves letter counts, so the reduction runs per letter count.
inline FormElement hodge_project(const FormAlgebra& fa, const FormElement& e, int n) {
    FormElement out;
    out.truncated = e.truncated;
    std::map<long, FormElement> top;
    for (const auto& [w, c] : e.terms) {
        if (w.degree() < n)
            out.add_term(w, c);
        else if (w.degree() == n)
            top[w.letters()].add_term(w, c);
    }
    for (const auto& [l, part] : top) {
        if (n + 1 > l) {
            out += part;
            continue;
        }
        FormWindow win(&fa, l);
        IncrementalEchelon ech(win.dim(n));
        for (const auto& w : win.basis[n + 1]) ech.insert(win.coords(fa.hochschild_b(FormElement(w)), n));
        out += win.from_coords(ech.reduce(win.coords(part, n)), n);
    }
    return out;
}

}  // namespace ncx
