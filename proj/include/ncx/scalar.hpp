#pragma once

#include <gmpxx.h>
#include <stdexcept>
#include <string>
#include <utility>

namespace ncx {

// Gaussian rational a + b*i, exact arithmetic throughout. mpq_class keeps
// components in lowest terms with positive denominator, so equality is
// structural.
struct Scalar {
    mpq_class re, im;

    Scalar() : re(0), im(0) {}
    Scalar(long n) : re(n), im(0) {}
    Scalar(long num, long den) : re(mpq_class(num, den)), im(0) { re.canonicalize(); }
    Scalar(mpq_class r) : re(std::move(r)), im(0) {}
    Scalar(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {}

    static Scalar imag_unit() { return Scalar(mpq_class(0), mpq_class(1)); }

    bool is_zero() const { return re == 0 && im == 0; }
    bool is_real() const { return im == 0; }

    Scalar operator-() const { return Scalar(-re, -im); }
    Scalar& operator+=(const Scalar& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    Scalar& operator-=(const Scalar& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    Scalar& operator*=(const Scalar& o) {
        mpq_class r = re * o.re - im * o.im;
        mpq_class i = re * o.im + im * o.re;
        re = std::move(r);
        im = std::move(i);
        return *this;
    }
    Scalar& operator/=(const Scalar& o) {
        mpq_class n = o.re * o.re + o.im * o.im;
        if (n == 0) throw std::domain_error("Scalar: division by zero");
        mpq_class r = (re * o.re + im * o.im) / n;
        mpq_class i = (im * o.re - re * o.im) / n;
        re = std::move(r);
        im = std::move(i);
        return *this;
    }

    friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
    friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
    friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
    friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }
    friend bool operator==(const Scalar& a, const Scalar& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

    std::string str() const {
        if (im == 0) return re.get_str();
        std::string i_part = im.get_str() + "*i";
        if (re == 0) return i_part;
        if (im > 0) return re.get_str() + "+" + i_part;
        return re.get_str() + i_part;  // im's own minus sign separates
    }
};

inline int koszul_sign(long a_degree, long b_degree) {
    return ((a_degree & 1) && (b_degree & 1)) ? -1 : 1;
}

// Parses "3/7", "-2", "i", "-i", "1/2*i", "3+1/2*i", "3-2*i". Used by the
// JSON loaders; plain rationals are the common case.
inline Scalar parse_scalar(const std::string& s) {
    auto parse_rat = [](std::string t) -> mpq_class {
        if (!t.empty() && t.front() == '+') t.erase(t.begin());
        if (t.empty()) throw std::invalid_argument("empty rational literal");
        mpq_class q;
        if (q.set_str(t, 10) != 0) throw std::invalid_argument("bad rational literal: " + t);
        q.canonicalize();
        return q;
    };
    auto parse_part = [&](const std::string& t, mpq_class& re, mpq_class& im) {
        if (!t.empty() && t.back() == 'i') {
            std::string c = t.substr(0, t.size() - 1);
            if (!c.empty() && c.back() == '*') c.pop_back();
            if (c.empty() || c == "+") im += 1;
            else if (c == "-") im -= 1;
            else im += parse_rat(c);
        } else {
            re += parse_rat(t);
        }
    };
    mpq_class re = 0, im = 0;
    size_t start = 0;
    for (size_t p = 1; p <= s.size(); ++p) {
        if (p == s.size() || ((s[p] == '+' || s[p] == '-') && s[p - 1] != '/' && s[p - 1] != '*')) {
            parse_part(s.substr(start, p - start), re, im);
            start = p;
        }
    }
    return Scalar(std::move(re), std::move(im));
}

}  // namespace ncx
