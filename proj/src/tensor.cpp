#include "fkexp/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace fkexp {

// ---- Domain -------------------------------------------------------------------

std::size_t Domain::volume() const {
    std::size_t v = 1;
    for (int s : sizes) v *= static_cast<std::size_t>(s);
    return v;
}

std::size_t Domain::index(const std::vector<int>& t) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) idx = idx * sizes[i] + t[i];
    return idx;
}

void Domain::decode(std::size_t idx, std::vector<int>& t) const {
    t.resize(sizes.size());
    for (std::size_t i = sizes.size(); i-- > 0;) {
        t[i] = static_cast<int>(idx % sizes[i]);
        idx /= sizes[i];
    }
}

std::vector<std::pair<std::size_t, std::size_t>> Domain::blocks() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < levels.size();) {
        std::size_t j = i;
        while (j < levels.size() && levels[j] == levels[i]) ++j;
        out.emplace_back(i, j - i);
        i = j;
    }
    return out;
}

Domain single_time_domain(int level, int size, int q) {
    return Domain{std::vector<int>(q, level), std::vector<int>(q, size)};
}

void check_volume(const Domain& d, const Caps& caps) {
    // overflow-safe product against the cap
    BigInt v = 1;
    for (int s : d.sizes) v *= s;
    if (v > caps.tensor) throw CapExceeded("tensor entries", v.get_str(), caps.tensor);
}

static std::vector<std::size_t> strides(const Domain& d) {
    std::vector<std::size_t> s(d.sizes.size(), 1);
    for (std::size_t i = d.sizes.size(); i-- > 1;) s[i - 1] = s[i] * d.sizes[i];
    return s;
}

// ---- Matrix -------------------------------------------------------------------

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

Matrix Matrix::operator*(const Matrix& o) const {
    if (cols != o.rows) throw std::invalid_argument("matrix shape mismatch");
    Matrix r(rows, o.cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < cols; ++k) {
            if ((*this)(i, k) == 0) continue;
            for (std::size_t j = 0; j < o.cols; ++j) r(i, j) += (*this)(i, k) * o(k, j);
        }
    return r;
}

std::vector<Rational> Matrix::apply(const std::vector<Rational>& f) const {
    if (f.size() != cols) throw std::invalid_argument("function size mismatch");
    std::vector<Rational> r(rows);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) r[i] += (*this)(i, j) * f[j];
    return r;
}

std::vector<Rational> Matrix::apply_left(const std::vector<Rational>& mu) const {
    if (mu.size() != rows) throw std::invalid_argument("measure size mismatch");
    std::vector<Rational> r(cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) r[j] += mu[i] * (*this)(i, j);
    return r;
}

// ---- shared helpers -----------------------------------------------------------------

namespace {

std::vector<Rational> substitute_push(const Domain& from, const std::vector<Rational>& w,
                                      const std::vector<int>& src, const Domain& to) {
    // measure: y_i = x_{src[i]}
    if (src.size() != to.arity()) throw std::invalid_argument("substitution arity mismatch");
    for (std::size_t i = 0; i < src.size(); ++i)
        if (src[i] < 0 || static_cast<std::size_t>(src[i]) >= from.arity() ||
            to.sizes[i] != from.sizes[src[i]])
            throw std::invalid_argument("substitution index/size mismatch");
    std::vector<Rational> out(to.volume());
    std::vector<int> x, y(to.arity());
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
        if (w[idx] == 0) continue;
        from.decode(idx, x);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[src[i]];
        out[to.index(y)] += w[idx];
    }
    return out;
}

std::vector<Rational> block_average(const Domain& d, const std::vector<Rational>& w) {
    const auto blocks = d.blocks();
    std::unordered_map<std::size_t, std::pair<Rational, long>> acc;
    std::vector<std::size_t> key(w.size());
    std::vector<int> t;
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
        d.decode(idx, t);
        for (auto [s, len] : blocks) std::sort(t.begin() + s, t.begin() + s + len);
        key[idx] = d.index(t);
        auto& slot = acc[key[idx]];
        slot.first += w[idx];
        slot.second += 1;
    }
    std::vector<Rational> out(w.size());
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
        const auto& slot = acc[key[idx]];
        out[idx] = slot.first / slot.second;
    }
    return out;
}

void same_domain(const Domain& a, const Domain& b) {
    if (!(a == b)) throw std::invalid_argument("domain mismatch");
}

}  // namespace

// ---- SignedMeasure ---------------------------------------------------------------------

SignedMeasure::SignedMeasure(Domain d) : d_(std::move(d)), w_(d_.volume()) {}

SignedMeasure::SignedMeasure(Domain d, std::vector<Rational> w) : d_(std::move(d)), w_(std::move(w)) {
    if (w_.size() != d_.volume()) throw std::invalid_argument("weight table does not match domain");
}

SignedMeasure SignedMeasure::scalar(const Rational& mass) { return SignedMeasure(Domain{}, {mass}); }

SignedMeasure SignedMeasure::on_level(int level, std::vector<Rational> w) {
    const int n = static_cast<int>(w.size());
    return SignedMeasure(Domain{{level}, {n}}, std::move(w));
}

Rational SignedMeasure::total_mass() const {
    Rational s = 0;
    for (auto& x : w_) s += x;
    return s;
}

Rational SignedMeasure::tv_norm() const {
    Rational s = 0;
    for (auto& x : w_) s += abs(x);
    return s;
}

Rational SignedMeasure::pair(const TensorFunction& F) const {
    same_domain(d_, F.domain());
    Rational s = 0;
    for (std::size_t i = 0; i < w_.size(); ++i)
        if (w_[i] != 0) s += w_[i] * F.values()[i];
    return s;
}

bool SignedMeasure::is_zero() const {
    return std::all_of(w_.begin(), w_.end(), [](const Rational& x) { return x == 0; });
}

SignedMeasure SignedMeasure::tensor(const SignedMeasure& o, const Caps& caps) const {
    Domain d = d_;
    d.levels.insert(d.levels.end(), o.d_.levels.begin(), o.d_.levels.end());
    d.sizes.insert(d.sizes.end(), o.d_.sizes.begin(), o.d_.sizes.end());
    check_volume(d, caps);
    std::vector<Rational> w(d.volume());
    const std::size_t m = o.w_.size();
    for (std::size_t i = 0; i < w_.size(); ++i) {
        if (w_[i] == 0) continue;
        for (std::size_t j = 0; j < m; ++j) w[i * m + j] = w_[i] * o.w_[j];
    }
    return SignedMeasure(std::move(d), std::move(w));
}

SignedMeasure SignedMeasure::substitute(const std::vector<int>& src, const Domain& d) const {
    return SignedMeasure(d, substitute_push(d_, w_, src, d));
}

SignedMeasure SignedMeasure::apply_kernel(std::size_t coord, const Matrix& K, int new_level) const {
    if (coord >= arity()) throw std::invalid_argument("kernel coordinate out of range");
    if (K.rows != static_cast<std::size_t>(d_.sizes[coord]))
        throw std::invalid_argument("kernel rows do not match coordinate size");
    Domain d = d_;
    d.levels[coord] = new_level;
    d.sizes[coord] = static_cast<int>(K.cols);
    const auto so = strides(d_), sn = strides(d);
    std::vector<Rational> w(d.volume());
    std::vector<int> x;
    for (std::size_t idx = 0; idx < w_.size(); ++idx) {
        if (w_[idx] == 0) continue;
        d_.decode(idx, x);
        std::size_t base = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (i != coord) base += sn[i] * x[i];
        for (std::size_t y = 0; y < K.cols; ++y) {
            const Rational& k = K(x[coord], y);
            if (k != 0) w[base + sn[coord] * y] += w_[idx] * k;
        }
    }
    (void)so;
    return SignedMeasure(std::move(d), std::move(w));
}

SignedMeasure SignedMeasure::contract(std::size_t coord, const std::vector<Rational>& g) const {
    if (coord >= arity()) throw std::invalid_argument("contract coordinate out of range");
    if (g.size() != static_cast<std::size_t>(d_.sizes[coord]))
        throw std::invalid_argument("contract function size mismatch");
    Domain d = d_;
    d.levels.erase(d.levels.begin() + coord);
    d.sizes.erase(d.sizes.begin() + coord);
    std::vector<Rational> w(d.volume());
    std::vector<int> x, y;
    for (std::size_t idx = 0; idx < w_.size(); ++idx) {
        if (w_[idx] == 0) continue;
        d_.decode(idx, x);
        y = x;
        y.erase(y.begin() + coord);
        w[d.index(y)] += w_[idx] * g[x[coord]];
    }
    return SignedMeasure(std::move(d), std::move(w));
}

SignedMeasure SignedMeasure::symmetrize() const { return SignedMeasure(d_, block_average(d_, w_)); }

SignedMeasure SignedMeasure::operator+(const SignedMeasure& o) const {
    SignedMeasure r = *this;
    r += o;
    return r;
}

SignedMeasure& SignedMeasure::operator+=(const SignedMeasure& o) {
    same_domain(d_, o.d_);
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] += o.w_[i];
    return *this;
}

SignedMeasure SignedMeasure::operator-(const SignedMeasure& o) const {
    same_domain(d_, o.d_);
    SignedMeasure r = *this;
    for (std::size_t i = 0; i < w_.size(); ++i) r.w_[i] -= o.w_[i];
    return r;
}

SignedMeasure SignedMeasure::operator*(const Rational& c) const {
    SignedMeasure r = *this;
    for (auto& x : r.w_) x *= c;
    return r;
}

// ---- TensorFunction -----------------------------------------------------------------------

TensorFunction::TensorFunction(Domain d) : d_(std::move(d)), v_(d_.volume()) {}

TensorFunction::TensorFunction(Domain d, std::vector<Rational> v) : d_(std::move(d)), v_(std::move(v)) {
    if (v_.size() != d_.volume()) throw std::invalid_argument("value table does not match domain");
}

TensorFunction TensorFunction::constant(Domain d, const Rational& c) {
    TensorFunction f(std::move(d));
    std::fill(f.v_.begin(), f.v_.end(), c);
    return f;
}

TensorFunction TensorFunction::product(const std::vector<int>& levels,
                                       const std::vector<std::vector<Rational>>& factors) {
    if (levels.size() != factors.size()) throw std::invalid_argument("one level per factor");
    Domain d{levels, {}};
    for (auto& f : factors) d.sizes.push_back(static_cast<int>(f.size()));
    return from(d, [&](const std::vector<int>& x) {
        Rational r = 1;
        for (std::size_t i = 0; i < x.size(); ++i) r *= factors[i][x[i]];
        return r;
    });
}

TensorFunction TensorFunction::from(Domain d, const std::function<Rational(const std::vector<int>&)>& fn) {
    TensorFunction f(std::move(d));
    std::vector<int> x;
    for (std::size_t idx = 0; idx < f.v_.size(); ++idx) {
        f.d_.decode(idx, x);
        f.v_[idx] = fn(x);
    }
    return f;
}

TensorFunction TensorFunction::tensor(const TensorFunction& o, const Caps& caps) const {
    Domain d = d_;
    d.levels.insert(d.levels.end(), o.d_.levels.begin(), o.d_.levels.end());
    d.sizes.insert(d.sizes.end(), o.d_.sizes.begin(), o.d_.sizes.end());
    check_volume(d, caps);
    std::vector<Rational> v(d.volume());
    const std::size_t m = o.v_.size();
    for (std::size_t i = 0; i < v_.size(); ++i)
        for (std::size_t j = 0; j < m; ++j) v[i * m + j] = v_[i] * o.v_[j];
    return TensorFunction(std::move(d), std::move(v));
}

TensorFunction TensorFunction::substitute(const std::vector<int>& src, const Domain& d) const {
    if (src.size() != arity()) throw std::invalid_argument("substitution arity mismatch");
    for (std::size_t i = 0; i < src.size(); ++i)
        if (src[i] < 0 || static_cast<std::size_t>(src[i]) >= d.arity() || d.sizes[src[i]] != d_.sizes[i])
            throw std::invalid_argument("substitution index/size mismatch");
    return from(d, [&](const std::vector<int>& x) {
        std::vector<int> y(src.size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[src[i]];
        return v_[d_.index(y)];
    });
}

TensorFunction TensorFunction::apply_kernel(std::size_t coord, const Matrix& K, int new_level) const {
    if (coord >= arity()) throw std::invalid_argument("kernel coordinate out of range");
    if (K.cols != static_cast<std::size_t>(d_.sizes[coord]))
        throw std::invalid_argument("kernel columns do not match coordinate size");
    Domain d = d_;
    d.levels[coord] = new_level;
    d.sizes[coord] = static_cast<int>(K.rows);
    const auto so = strides(d_);
    return from(d, [&](const std::vector<int>& x) {
        std::size_t base = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (i != coord) base += so[i] * x[i];
        Rational s = 0;
        for (std::size_t y = 0; y < K.cols; ++y) {
            const Rational& k = K(x[coord], y);
            if (k != 0) s += k * v_[base + so[coord] * y];
        }
        return s;
    });
}

TensorFunction TensorFunction::symmetrize() const { return TensorFunction(d_, block_average(d_, v_)); }

bool TensorFunction::is_symmetric() const { return symmetrize().v_ == v_; }

Rational TensorFunction::sup_norm() const {
    Rational m = 0;
    for (auto& x : v_) m = std::max(m, Rational(abs(x)));
    return m;
}

TensorFunction TensorFunction::operator+(const TensorFunction& o) const {
    same_domain(d_, o.d_);
    TensorFunction r = *this;
    for (std::size_t i = 0; i < v_.size(); ++i) r.v_[i] += o.v_[i];
    return r;
}

TensorFunction TensorFunction::operator-(const TensorFunction& o) const {
    same_domain(d_, o.d_);
    TensorFunction r = *this;
    for (std::size_t i = 0; i < v_.size(); ++i) r.v_[i] -= o.v_[i];
    return r;
}

TensorFunction TensorFunction::operator*(const Rational& c) const {
    TensorFunction r = *this;
    for (auto& x : r.v_) x *= c;
    return r;
}

}  // namespace fkexp
