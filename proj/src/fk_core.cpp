#include "fkexp/fk_core.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace fkexp {

Flow flow(const FKModel& m) {
    Flow fl;
    fl.gamma.push_back(m.eta0());
    for (int k = 1; k <= m.horizon(); ++k) fl.gamma.push_back(m.Q(k).apply_left(fl.gamma.back()));
    for (auto& g : fl.gamma) {
        Rational s = 0;
        for (auto& x : g) s += x;
        fl.mass.push_back(s);
        std::vector<Rational> e;
        for (auto& x : g) e.push_back(x / s);
        fl.eta.push_back(std::move(e));
    }
    return fl;
}

Matrix q_operator(const FKModel& m, int k) { return m.Q(k); }

Matrix semigroup(const FKModel& m, int k, int n) {
    if (k < 0 || k > n || n > m.horizon()) throw std::out_of_range("semigroup needs 0 <= k <= n <= horizon");
    Matrix r = Matrix::identity(static_cast<std::size_t>(m.size(k)));
    for (int p = k + 1; p <= n; ++p) r = r * m.Q(p);
    return r;
}

// ---- maps ------------------------------------------------------------------------------

Map compose(const Map& a, const Map& b) {
    Map r(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) r[i] = a.at(b[i] - 1);
    return r;
}

std::vector<Map> all_maps(int q) {
    std::vector<Map> out;
    Map a(q, 1);
    while (true) {
        out.push_back(a);
        int i = 0;
        while (i < q && a[i] == q) a[i++] = 1;
        if (i == q) break;
        ++a[i];
    }
    return out;
}

int image_size(const Map& a) { return static_cast<int>(std::set<int>(a.begin(), a.end()).size()); }

namespace {

std::vector<int> sources(const Map& b, std::size_t arity) {
    if (b.size() != arity) throw std::invalid_argument("map arity does not match tensor arity");
    std::vector<int> src;
    for (int v : b) {
        if (v < 1 || static_cast<std::size_t>(v) > arity) throw std::invalid_argument("map value out of range");
        src.push_back(v - 1);
    }
    return src;
}

}  // namespace

TensorFunction d_map(const Map& b, const TensorFunction& F) {
    return F.substitute(sources(b, F.arity()), F.domain());
}

TensorFunction d_map(const WeightedMaps& L, const TensorFunction& F) {
    TensorFunction r(F.domain());
    for (auto& [a, w] : L.terms) r = r + d_map(a, F) * w;
    return r;
}

SignedMeasure d_map(const SignedMeasure& mu, const Map& b) {
    return mu.substitute(sources(b, mu.arity()), mu.domain());
}

SignedMeasure d_map(const SignedMeasure& mu, const WeightedMaps& L) {
    SignedMeasure r(mu.domain());
    for (auto& [a, w] : L.terms) r += d_map(mu, a) * w;
    return r;
}

WeightedMaps lq_operator(int q, const BigInt& N) {
    if (q < 1 || N < q) throw std::invalid_argument("L_q^N needs 1 <= q <= N");
    WeightedMaps L{q, {}};
    BigInt Nq = 1;
    for (int i = 0; i < q; ++i) Nq *= N;
    for (auto& a : all_maps(q)) {
        const int p = image_size(a);
        Rational w(falling_factorial(N, p), falling_factorial(BigInt(q), p) * Nq);
        w.canonicalize();
        L.terms.emplace_back(a, w);
    }
    return L;
}

WeightedMaps lq_derivative(int q, int k) {
    if (q < 1 || k < 0 || k >= q) throw std::invalid_argument("d^k L_q needs 0 <= k < q");
    WeightedMaps L{q, {}};
    for (auto& a : all_maps(q)) {
        const int p = image_size(a);
        const BigInt s = stirling_first(p, q - k);
        if (s == 0) continue;
        Rational w(s, falling_factorial(BigInt(q), p));
        w.canonicalize();
        L.terms.emplace_back(a, w);
    }
    return L;
}

// ---- forest measures ---------------------------------------------------------------------

SignedMeasure gamma_tensor(const FKModel& m, int n, int q) {
    const auto g = flow(m).gamma.at(n);
    SignedMeasure r = SignedMeasure::scalar(1);
    for (int i = 0; i < q; ++i) r = r.tensor(SignedMeasure::on_level(n, g));
    return r;
}

SignedMeasure eta_tensor(const FKModel& m, int n, int q) {
    const auto e = flow(m).eta.at(n);
    SignedMeasure r = SignedMeasure::scalar(1);
    for (int i = 0; i < q; ++i) r = r.tensor(SignedMeasure::on_level(n, e));
    return r;
}

namespace {

SignedMeasure initial(const FKModel& m, int count, const Caps& caps) {
    SignedMeasure r = SignedMeasure::scalar(1);
    for (int i = 0; i < count; ++i) r = r.tensor(SignedMeasure::on_level(0, m.eta0()), caps);
    return r;
}

}  // namespace

SignedMeasure delta_mapseq(const FKModel& m, const MapSeq& a, const Caps& caps) {
    const int n = static_cast<int>(a.num_maps()) - 1;
    if (n < 0) throw std::invalid_argument("delta needs at least one map");
    if (n > m.horizon()) throw std::invalid_argument("map sequence longer than the model horizon");
    const auto& p = a.profile();
    SignedMeasure mu = initial(m, p[0], caps);
    for (int k = 0; k <= n; ++k) {
        Domain d = single_time_domain(k, m.size(k), p[k + 1]);
        check_volume(d, caps);
        std::vector<int> src;
        for (int v : a.maps()[k]) src.push_back(v - 1);
        mu = mu.substitute(src, d);
        if (k < n) {
            const Matrix Q = m.Q(k + 1);
            for (std::size_t i = 0; i < mu.arity(); ++i) mu = mu.apply_kernel(i, Q, k + 1);
        }
    }
    return mu;
}

SignedMeasure delta_forest(const FKModel& m, const Forest& f, int n, int q, const Caps& caps) {
    if (f.profile() != MultiIndex::constant(static_cast<std::size_t>(n + 2), q))
        throw std::invalid_argument("forest " + f.code() + " does not have profile (q,...,q) over n+2 levels");
    return delta_mapseq(m, planar_mapseq(f), caps).symmetrize();
}

// ---- path space -----------------------------------------------------------------------------

namespace {

int horizon_of(const MultiIndex& q) {
    if (q.empty()) throw std::invalid_argument("path profile must be nonempty");
    return static_cast<int>(q.size()) - 1;
}

int frozen_before(const MultiIndex& q, int p) {
    int s = 0;
    for (int k = 0; k < p; ++k) s += q[k];
    return s;
}

}  // namespace

Domain path_domain(const FKModel& m, const MultiIndex& q, int p) {
    const int n = horizon_of(q);
    if (p < 0 || p > n || n > m.horizon()) throw std::out_of_range("path level out of range");
    const auto tail = path_tail(q);
    Domain d;
    for (int k = 0; k <= p; ++k) {
        const int cnt = k < p ? q[k] : q[k] + tail[k + 1];
        for (int i = 0; i < cnt; ++i) {
            d.levels.push_back(k);
            d.sizes.push_back(m.size(k));
        }
    }
    return d;
}

Domain path_domain(const FKModel& m, const MultiIndex& q) { return path_domain(m, q, horizon_of(q)); }

SignedMeasure path_gamma(const FKModel& m, const MultiIndex& q, int p, const Caps& caps) {
    const Domain d = path_domain(m, q, p);
    check_volume(d, caps);
    const auto fl = flow(m);
    SignedMeasure r = SignedMeasure::scalar(1);
    for (std::size_t i = 0; i < d.arity(); ++i)
        r = r.tensor(SignedMeasure::on_level(d.levels[i], fl.gamma[d.levels[i]]), caps);
    return r;
}

SignedMeasure path_gamma(const FKModel& m, const MultiIndex& q, const Caps& caps) {
    return path_gamma(m, q, horizon_of(q), caps);
}

SignedMeasure path_step(const FKModel& m, const MultiIndex& q, int p, const SignedMeasure& mu) {
    if (!(mu.domain() == path_domain(m, q, p - 1))) throw std::invalid_argument("measure is not on E_{p-1}^q");
    const auto tail = path_tail(q);
    const int start = frozen_before(q, p);  // frozen coordinates through level p-1
    const Matrix Q = m.Q(p);
    SignedMeasure r = mu;
    for (int i = 0; i < tail[p]; ++i) r = r.apply_kernel(static_cast<std::size_t>(start + i), Q, p);
    return r;
}

SignedMeasure path_semigroup(const FKModel& m, const MultiIndex& q, int p1, int p2, SignedMeasure mu) {
    if (p1 > p2) throw std::invalid_argument("path semigroup needs p1 <= p2");
    for (int p = p1 + 1; p <= p2; ++p) mu = path_step(m, q, p, mu);
    return mu;
}

TensorFunction path_semigroup(const FKModel& m, const MultiIndex& q, int p1, int p2, TensorFunction F) {
    if (p1 > p2) throw std::invalid_argument("path semigroup needs p1 <= p2");
    if (!(F.domain() == path_domain(m, q, p2))) throw std::invalid_argument("function is not on E_{p2}^q");
    const auto tail = path_tail(q);
    for (int p = p2; p > p1; --p) {
        const int start = frozen_before(q, p);
        const Matrix Q = m.Q(p);
        for (int i = 0; i < tail[p]; ++i) F = F.apply_kernel(static_cast<std::size_t>(start + i), Q, p - 1);
    }
    return F;
}

SignedMeasure delta_colored(const FKModel& m, const ColoredMapSeq& a, const MultiIndex& q, const Caps& caps) {
    const int n = horizon_of(q);
    if (n > m.horizon()) throw std::invalid_argument("path profile longer than the model horizon");
    if (a.profile() != path_profile(q))
        throw std::invalid_argument("colored map sequence profile " + to_string(a.profile()) +
                                    " does not match " + to_string(path_profile(q)));
    const auto tail = path_tail(q);
    SignedMeasure mu = initial(m, tail[0], caps);
    int frozen = 0;
    for (int k = 0; k <= n; ++k) {
        // live coordinates [frozen, frozen + q'_{k-1}) sit at level k
        Domain d;
        d.levels.assign(mu.domain().levels.begin(), mu.domain().levels.begin() + frozen);
        d.sizes.assign(mu.domain().sizes.begin(), mu.domain().sizes.begin() + frozen);
        std::vector<int> src(static_cast<std::size_t>(frozen));
        std::iota(src.begin(), src.end(), 0);
        for (int v : a.maps()[k]) {
            src.push_back(frozen + v - 1);
            d.levels.push_back(k);
            d.sizes.push_back(m.size(k));
        }
        check_volume(d, caps);
        mu = mu.substitute(src, d);
        frozen += q[k];
        if (k < n) {
            const Matrix Q = m.Q(k + 1);
            for (int i = 0; i < tail[k + 1]; ++i) mu = mu.apply_kernel(static_cast<std::size_t>(frozen + i), Q, k + 1);
        }
    }
    return mu;
}

SignedMeasure delta_colored(const FKModel& m, const ColoredForest& f, const MultiIndex& q, const Caps& caps) {
    return delta_colored(m, planar_colored_mapseq(f, path_profile(q)), q, caps).symmetrize();
}

// ---- centering -----------------------------------------------------------------------------

namespace {

// (E_i F)(x) = sum_y eta(y) F(x with x_i = y)
std::vector<Rational> marginal(const TensorFunction& F, std::size_t i, const std::vector<Rational>& eta) {
    const Domain& d = F.domain();
    std::size_t stride = 1;
    for (std::size_t j = i + 1; j < d.arity(); ++j) stride *= static_cast<std::size_t>(d.sizes[j]);
    const std::size_t size = static_cast<std::size_t>(d.sizes[i]);
    const auto& v = F.values();
    std::vector<Rational> out(v.size());
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
        const std::size_t xi = (idx / stride) % size;
        if (xi != 0) {
            out[idx] = out[idx - xi * stride];
            continue;
        }
        Rational s = 0;
        for (std::size_t y = 0; y < size; ++y) s += eta[y] * v[idx + y * stride];
        out[idx] = s;
    }
    return out;
}

}  // namespace

TensorFunction center_function(const FKModel& m, const TensorFunction& F) {
    const auto fl = flow(m);
    TensorFunction r = F.symmetrize();
    for (std::size_t i = 0; i < r.arity(); ++i) {
        const auto mar = marginal(r, i, fl.eta.at(r.domain().levels[i]));
        for (std::size_t idx = 0; idx < mar.size(); ++idx) r.values()[idx] -= mar[idx];
    }
    return r;
}

std::vector<Rational> centering_residuals(const FKModel& m, const TensorFunction& F) {
    const auto fl = flow(m);
    std::vector<Rational> out;
    for (std::size_t i = 0; i < F.arity(); ++i) {
        Rational worst = 0;
        for (auto& x : marginal(F, i, fl.eta.at(F.domain().levels[i]))) worst = std::max(worst, Rational(abs(x)));
        out.push_back(worst);
    }
    return out;
}

bool is_centered(const FKModel& m, const TensorFunction& F) {
    auto r = centering_residuals(m, F);
    return std::all_of(r.begin(), r.end(), [](const Rational& x) { return x == 0; });
}

}  // namespace fkexp
