#include "fkexp/combinatorics.hpp"

#include "fkexp/caps.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace fkexp {

MultiIndex::MultiIndex(std::vector<int> entries) : e_(std::move(entries)) {
    for (int v : e_)
        if (v < 0) throw std::invalid_argument("MultiIndex entries must be >= 0");
}

MultiIndex::MultiIndex(std::initializer_list<int> entries)
    : MultiIndex(std::vector<int>(entries)) {}

MultiIndex MultiIndex::constant(std::size_t length, int value) {
    return MultiIndex(std::vector<int>(length, value));
}

MultiIndex MultiIndex::unit(std::size_t length, std::size_t k) {
    if (k >= length) throw std::out_of_range("MultiIndex::unit index");
    std::vector<int> e(length, 0);
    e[k] = 1;
    return MultiIndex(std::move(e));
}

int MultiIndex::at(std::size_t k) const {
    if (k >= e_.size()) throw std::out_of_range("MultiIndex index");
    return e_[k];
}

void MultiIndex::set(std::size_t k, int value) {
    if (k >= e_.size()) throw std::out_of_range("MultiIndex index");
    if (value < 0) throw std::invalid_argument("MultiIndex entries must be >= 0");
    e_[k] = value;
}

long MultiIndex::norm() const {
    return std::accumulate(e_.begin(), e_.end(), 0L);
}

bool MultiIndex::is_zero() const {
    return std::all_of(e_.begin(), e_.end(), [](int v) { return v == 0; });
}

BigInt MultiIndex::factorial() const {
    BigInt r = 1;
    for (int v : e_) r *= fkexp::factorial(v);
    return r;
}

static void require_same_length(const MultiIndex& a, const MultiIndex& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("MultiIndex length mismatch: " + a.to_string() + " vs " +
                                    b.to_string());
}

bool MultiIndex::leq(const MultiIndex& other) const {
    require_same_length(*this, other);
    for (std::size_t k = 0; k < e_.size(); ++k)
        if (e_[k] > other.e_[k]) return false;
    return true;
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
    require_same_length(*this, other);
    std::vector<int> r(e_);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += other.e_[k];
    return MultiIndex(std::move(r));
}

MultiIndex MultiIndex::operator-(const MultiIndex& other) const {
    if (!other.leq(*this))
        throw std::invalid_argument("MultiIndex subtraction needs other <= this");
    std::vector<int> r(e_);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= other.e_[k];
    return MultiIndex(std::move(r));
}

MultiIndex MultiIndex::shift() const {
    if (e_.empty()) return {};
    return MultiIndex(std::vector<int>(e_.begin() + 1, e_.end()));
}

MultiIndex MultiIndex::unshift(int head) const {
    std::vector<int> r;
    r.reserve(e_.size() + 1);
    r.push_back(head);
    r.insert(r.end(), e_.begin(), e_.end());
    return MultiIndex(std::move(r));
}

std::string MultiIndex::to_string() const {
    std::string s = "(";
    for (std::size_t k = 0; k < e_.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(e_[k]);
    }
    return s + ")";
}

BigInt factorial(long n) {
    if (n < 0) throw std::invalid_argument("factorial of a negative number");
    BigInt r;
    mpz_fac_ui(r.get_mpz_t(), static_cast<unsigned long>(n));
    return r;
}

BigInt binomial(long n, long k) {
    if (k < 0 || n < 0 || k > n) return 0;
    BigInt r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return r;
}

// ---- Stirling tables -------------------------------------------------------

namespace {

struct StirlingTables {
    std::mutex mu;
    int cap = 64;
    std::vector<std::vector<BigInt>> first{{BigInt(1)}};   // row p, columns 0..p
    std::vector<std::vector<BigInt>> second{{BigInt(1)}};

    void grow(int p) {
        while (static_cast<int>(first.size()) <= p) {
            const int m = static_cast<int>(first.size());  // new row index
            const auto& f = first.back();
            const auto& s = second.back();
            std::vector<BigInt> fr(m + 1, 0), sr(m + 1, 0);
            for (int k = 1; k <= m; ++k) {
                // s(m,k) = s(m-1,k-1) - (m-1) s(m-1,k)
                BigInt a = f[k - 1];
                if (k <= m - 1) a -= BigInt(m - 1) * f[k];
                fr[k] = a;
                // S(m,k) = S(m-1,k-1) + k S(m-1,k)
                BigInt b = s[k - 1];
                if (k <= m - 1) b += BigInt(k) * s[k];
                sr[k] = b;
            }
            first.push_back(std::move(fr));
            second.push_back(std::move(sr));
        }
    }
};

StirlingTables& tables() {
    static StirlingTables t;
    return t;
}

}  // namespace

void set_stirling_cap(int cap) {
    if (cap < 0) throw std::invalid_argument("negative Stirling cap");
    auto& t = tables();
    std::lock_guard<std::mutex> lock(t.mu);
    t.cap = cap;
}

int stirling_cap() {
    auto& t = tables();
    std::lock_guard<std::mutex> lock(t.mu);
    return t.cap;
}

BigInt stirling_first(int p, int k) {
    if (p < 0 || k < 0) throw std::invalid_argument("Stirling arguments must be >= 0");
    if (k > p) return 0;
    auto& t = tables();
    std::lock_guard<std::mutex> lock(t.mu);
    if (p > t.cap) throw CapExceeded("stirling table size", std::to_string(p), t.cap);
    t.grow(p);
    return t.first[p][k];
}

BigInt stirling_second(int q, int p) {
    if (p < 0 || q < 0) throw std::invalid_argument("Stirling arguments must be >= 0");
    if (p > q) return 0;
    auto& t = tables();
    std::lock_guard<std::mutex> lock(t.mu);
    if (q > t.cap) throw CapExceeded("stirling table size", std::to_string(q), t.cap);
    t.grow(q);
    return t.second[q][p];
}

BigInt falling_factorial(const BigInt& N, long m) {
    if (m < 0) throw std::invalid_argument("falling factorial with negative length");
    BigInt r = 1;
    for (long i = 0; i < m; ++i) r *= N - i;
    return r;
}

BigInt falling_factorial(const BigInt& N, const MultiIndex& p) {
    BigInt r = 1;
    for (int v : p.entries()) r *= falling_factorial(N, v);
    return r;
}

BigInt falling_factorial(const MultiIndex& l, const MultiIndex& p) {
    require_same_length(l, p);
    BigInt r = 1;
    for (std::size_t k = 0; k < l.size(); ++k) r *= falling_factorial(BigInt(l[k]), p[k]);
    return r;
}

BigInt stirling_first(const MultiIndex& l, const MultiIndex& p) {
    require_same_length(l, p);
    BigInt r = 1;
    for (std::size_t k = 0; k < l.size() && r != 0; ++k) r *= stirling_first(l[k], p[k]);
    return r;
}

std::vector<MultiIndex> bounded_compositions(const MultiIndex& bound, long total) {
    std::vector<MultiIndex> out;
    const std::size_t L = bound.size();
    if (total < 0) return out;
    std::vector<int> cur(L, 0);
    // suffix capacity for pruning
    std::vector<long> cap(L + 1, 0);
    for (std::size_t k = L; k-- > 0;) cap[k] = cap[k + 1] + bound[k];
    auto rec = [&](auto&& self, std::size_t k, long left) -> void {
        if (k == L) {
            if (left == 0) out.emplace_back(cur);
            return;
        }
        if (left > cap[k]) return;
        const int hi = static_cast<int>(std::min<long>(bound[k], left));
        for (int v = 0; v <= hi; ++v) {
            cur[k] = v;
            self(self, k + 1, left - v);
        }
        cur[k] = 0;
    };
    rec(rec, 0, total);
    return out;
}

std::string to_string(const Rational& x) {
    Rational c(x);
    c.canonicalize();
    return c.get_num().get_str() + "/" + c.get_den().get_str();
}

Rational parse_rational(const std::string& raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    auto bad = [&] { return std::invalid_argument("malformed rational literal '" + raw + "'"); };

    if (auto slash = s.find('/'); slash != std::string::npos) {
        std::string a = s.substr(0, slash), b = s.substr(slash + 1);
        BigInt num, den;
        if (a.empty() || b.empty() || num.set_str(a, 10) != 0 || den.set_str(b, 10) != 0)
            throw bad();
        if (den == 0) throw std::invalid_argument("zero denominator in '" + raw + "'");
        Rational r(num, den);
        r.canonicalize();
        return r;
    }
    // decimal with optional exponent, converted exactly
    std::size_t i = 0;
    bool neg = false;
    if (s[i] == '+' || s[i] == '-') neg = s[i++] == '-';
    std::string digits;
    long scale = 0;
    bool seen_dot = false, any = false;
    for (; i < s.size() && s[i] != 'e' && s[i] != 'E'; ++i) {
        if (s[i] == '.') {
            if (seen_dot) throw bad();
            seen_dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(s[i]))) {
            digits += s[i];
            any = true;
            if (seen_dot) --scale;
        } else {
            throw bad();
        }
    }
    if (!any) throw bad();
    if (i < s.size()) {
        std::string ex = s.substr(i + 1);
        if (ex.empty()) throw bad();
        try {
            std::size_t used = 0;
            scale += std::stol(ex, &used);
            if (used != ex.size()) throw bad();
        } catch (const std::logic_error&) {
            throw bad();
        }
    }
    BigInt num(digits, 10);
    BigInt pow10;
    mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
    Rational r = scale >= 0 ? Rational(num * pow10) : Rational(num, pow10);
    r.canonicalize();
    return neg ? Rational(-r) : r;
}

}  // namespace fkexp
