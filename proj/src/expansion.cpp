#include "fkexp/expansion.hpp"

#include "fkexp/fk_core.hpp"
#include "fkexp/particle.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

namespace fkexp {

namespace {

Rational pow_int(const Rational& x, long e) {
    Rational r = 1;
    for (long i = 0; i < e; ++i) r *= x;
    return r;
}

Rational falling_q(long N, long m) { return Rational(falling_factorial(BigInt(N), m)); }

SignedMeasure zero_like(const Domain& d) { return SignedMeasure(d); }

void add_scaled(SignedMeasure& acc, const SignedMeasure& mu, const Rational& c) {
    if (c == 0) return;
    auto& w = acc.weights();
    const auto& v = mu.weights();
    for (std::size_t i = 0; i < w.size(); ++i)
        if (v[i] != 0) w[i] += c * v[i];
}

// polynomial in x = 1/N of (N)_p / N^{q'} = sum_l s(p,l) N^{l-q'}
std::vector<Rational> falling_poly(int qprime, int p, int K) {
    std::vector<Rational> out(static_cast<std::size_t>(K + 1));
    if (qprime == 0) {
        out[0] = 1;
        return out;
    }
    for (int l = 1; l <= p; ++l) {
        const int deg = qprime - l;
        if (deg <= K) out[deg] += Rational(stirling_first(p, l));
    }
    return out;
}

std::vector<Rational> poly_mul(const std::vector<Rational>& a, const std::vector<Rational>& b) {
    std::vector<Rational> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; i + j < out.size(); ++j)
            if (b[j] != 0) out[i + j] += a[i] * b[j];
    }
    return out;
}

Rational inverse_power(long N, long e) { return Rational(1) / pow_int(Rational(N), e); }

TensorFunction require_domain(const TensorFunction& F, const Domain& d, const char* what) {
    if (F.domain() != d) throw ExpansionError(std::string(what) + ": F does not live on the expected domain");
    return F.symmetrize();
}

}  // namespace

// ---- engine --------------------------------------------------------------------------------

ForestExpansion ForestExpansion::single(const FKModel& m, int n, int q, int max_order, const Caps& caps) {
    if (q < 1) throw ExpansionError("q must be >= 1");
    if (n < 0 || n > m.horizon()) throw ExpansionError("time horizon n outside the model");
    ForestExpansion e;
    e.top_ = top_order_Q(n, q);
    e.max_order_ = max_order < 0 ? e.top_ : std::min(max_order, e.top_);
    e.domain_ = single_time_domain(n, m.size(n), q);
    check_volume(e.domain_, caps);
    e.qprime_ = MultiIndex::constant(static_cast<std::size_t>(n + 1), q);
    e.particles_ = q;
    const auto orbits =
        enumerate_orbits(n, q, MultiIndex::constant(static_cast<std::size_t>(n + 1), std::min(q - 1, e.max_order_)), caps);
    for (const auto& o : orbits) {
        if (o.forest.coalescence_degree() > e.max_order_) continue;
        e.terms_.push_back({o.forest.code(), o.forest.image_sizes(), o.count, delta_forest(m, o.forest, n, q, caps)});
    }
    for (const auto& t : e.terms_) {
        std::vector<Rational> poly(static_cast<std::size_t>(e.max_order_ + 1));
        poly[0] = 1;
        Rational base = Rational(t.count);
        for (std::size_t k = 0; k < e.qprime_.size(); ++k) {
            poly = poly_mul(poly, falling_poly(e.qprime_[k], t.image[k], e.max_order_));
            base /= falling_q(e.qprime_[k], t.image[k]);
        }
        for (auto& c : poly) c *= base;
        e.coeffs_.push_back(std::move(poly));
    }
    return e;
}

ForestExpansion ForestExpansion::path(const FKModel& m, const MultiIndex& q, int max_order, const Caps& caps) {
    if (q.empty()) throw ExpansionError("empty path profile");
    const int n = static_cast<int>(q.size()) - 1;
    if (n > m.horizon()) throw ExpansionError("path profile longer than the model horizon");
    if (q.norm() < 1) throw ExpansionError("path profile must hold at least one particle");
    ForestExpansion e;
    const auto tail = path_tail(q);
    std::vector<int> qp(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) qp[k] = tail[k];
    e.qprime_ = MultiIndex(qp);
    e.top_ = top_order_path(q);
    e.max_order_ = max_order < 0 ? e.top_ : std::min(max_order, e.top_);
    e.domain_ = path_domain(m, q);
    check_volume(e.domain_, caps);
    e.particles_ = q.norm();
    const ColoredProfile prof = path_profile(q);
    std::vector<int> mc(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) mc[k] = std::min(std::max(qp[k] - 1, 0), e.max_order_);
    const auto orbits = enumerate_colored_orbits(prof, MultiIndex(mc), caps);
    for (const auto& o : orbits) {
        const auto coal = o.forest.coalescence(prof.size());
        if (coal.norm() > e.max_order_) continue;
        e.terms_.push_back({o.forest.code(), o.forest.image_sizes(prof.size()), o.count,
                            delta_colored(m, o.forest, q, caps)});
    }
    for (const auto& t : e.terms_) {
        std::vector<Rational> poly(static_cast<std::size_t>(e.max_order_ + 1));
        poly[0] = 1;
        Rational base = Rational(t.count);
        for (std::size_t k = 0; k < e.qprime_.size(); ++k) {
            poly = poly_mul(poly, falling_poly(e.qprime_[k], t.image[k], e.max_order_));
            base /= falling_q(e.qprime_[k], t.image[k]);
        }
        for (auto& c : poly) c *= base;
        e.coeffs_.push_back(std::move(poly));
    }
    return e;
}

SignedMeasure ForestExpansion::derivative(int k) const {
    if (k < 0 || k > top_) throw ExpansionError("order " + std::to_string(k) + " outside 0.." + std::to_string(top_));
    if (k > max_order_) throw ExpansionError("order " + std::to_string(k) + " was not expanded");
    SignedMeasure out = zero_like(domain_);
    for (std::size_t i = 0; i < terms_.size(); ++i) add_scaled(out, terms_[i].delta, coeffs_[i][k]);
    return out;
}

SignedMeasure ForestExpansion::exact(long N) const {
    if (max_order_ < top_) throw ExpansionError("exact evaluation needs the complete forest sum");
    if (N < 1) throw ExpansionError("N must be >= 1");
    SignedMeasure out = zero_like(domain_);
    for (const auto& t : terms_) {
        Rational w = Rational(t.count);
        for (std::size_t k = 0; k < qprime_.size(); ++k)
            w *= falling_q(N, t.image[k]) * inverse_power(N, qprime_[k]) / falling_q(qprime_[k], t.image[k]);
        add_scaled(out, t.delta, w);
    }
    return out;
}

SignedMeasure ForestExpansion::polynomial(long N) const {
    SignedMeasure out = zero_like(domain_);
    for (int k = 0; k <= max_order_; ++k) add_scaled(out, derivative(k), inverse_power(N, k));
    return out;
}

// ---- single time ------------------------------------------------------------------------------

int top_order_Q(int n, int q) { return (q - 1) * (n + 1); }

SignedMeasure exact_QN_measure(const FKModel& m, int n, int q, long N, const Caps& caps) {
    return ForestExpansion::single(m, n, q, -1, caps).exact(N);
}

Rational exact_QN(const FKModel& m, int n, int q, long N, const TensorFunction& F, const Caps& caps) {
    const auto e = ForestExpansion::single(m, n, q, -1, caps);
    return e.exact(N).pair(require_domain(F, e.domain(), "exact_QN"));
}

SignedMeasure derivative_Q(const FKModel& m, int n, int q, int k, const Caps& caps) {
    if (k < 0 || k > top_order_Q(n, q))
        throw ExpansionError("order k must lie in 0.." + std::to_string(top_order_Q(n, q)));
    return ForestExpansion::single(m, n, q, k, caps).derivative(k);
}

namespace {

Tree lift(Tree t, int times) {
    for (int i = 0; i < times; ++i) t = Tree::from_children({t});
    return t;
}
Tree fork(int n, int k) { return lift(Tree::from_children({Tree::chain(n - k), Tree::chain(n - k)}), k); }
void pad(std::vector<Tree>& trees, int n, int count) {
    for (int i = 0; i < count; ++i) trees.push_back(Tree::chain(n + 1));
}
void check_levels(int n, int k) {
    if (k < 0 || k > n) throw ExpansionError("coalescence level outside 0..n");
}

}  // namespace

Forest forest_f1(int n, int q, int k) {
    check_levels(n, k);
    if (q < 2) throw ExpansionError("f_1 needs q >= 2");
    std::vector<Tree> t{fork(n, k), Tree::chain(k)};
    pad(t, n, q - 2);
    return Forest(t);
}

Forest forest_f2(int n, int q, int k, int variant) {
    check_levels(n, k);
    std::vector<Tree> t;
    if (variant == 1) {
        if (q < 3) throw ExpansionError("f^1_2 needs q >= 3");
        t = {lift(Tree::from_children({Tree::chain(n - k), Tree::chain(n - k), Tree::chain(n - k)}), k),
             Tree::chain(k), Tree::chain(k)};
        pad(t, n, q - 3);
    } else if (variant == 2) {
        if (q < 4) throw ExpansionError("f^2_2 needs q >= 4");
        t = {fork(n, k), fork(n, k), Tree::chain(k), Tree::chain(k)};
        pad(t, n, q - 4);
    } else {
        throw ExpansionError("single-level variant must be 1 or 2");
    }
    return Forest(t);
}

Forest forest_f2(int n, int q, int k, int l, int variant) {
    check_levels(n, k);
    check_levels(n, l);
    if (k >= l) throw ExpansionError("two-level forests need k < l");
    const Tree inner = lift(Tree::from_children({Tree::chain(n - l), Tree::chain(n - l)}), l - k - 1);
    std::vector<Tree> t;
    switch (variant) {
        case 1:
            if (q < 3) throw ExpansionError("f^1_2 needs q >= 3");
            t = {lift(Tree::from_children({Tree::chain(n - k), inner}), k), Tree::chain(k), Tree::chain(l)};
            pad(t, n, q - 3);
            break;
        case 2:
            if (q < 2) throw ExpansionError("f^2_2 needs q >= 2");
            t = {lift(Tree::from_children({Tree::chain(l - k - 1), inner}), k), Tree::chain(k)};
            pad(t, n, q - 2);
            break;
        case 3:
            if (q < 4) throw ExpansionError("f^3_2 needs q >= 4");
            t = {fork(n, k), fork(n, l), Tree::chain(k), Tree::chain(l)};
            pad(t, n, q - 4);
            break;
        case 4:
            if (q < 3) throw ExpansionError("f^4_2 needs q >= 3");
            t = {lift(Tree::from_children({Tree::chain(l - k - 1), Tree::chain(n - k)}), k), fork(n, l),
                 Tree::chain(k)};
            pad(t, n, q - 3);
            break;
        default:
            throw ExpansionError("two-level variant must be 1..4");
    }
    return Forest(t);
}

LowOrders closed_form_low_orders(const FKModel& m, int n, int q, const Caps& caps) {
    if (q < 4)
        throw ExpansionError("closed forms are stated for q >= 4 (below that the forests f^2_2 and f^3_2 do not exist); "
                             "use derivative_Q");
    if (n < 0 || n > m.horizon()) throw ExpansionError("time horizon n outside the model");
    const SignedMeasure g = gamma_tensor(m, n, q);
    auto D = [&](const Forest& f) { return delta_forest(m, f, n, q, caps); };
    const Rational Q(q), c2 = Rational(binomial(q, 2)), c3 = Rational(binomial(q, 3));
    LowOrders out{g, zero_like(g.domain()), zero_like(g.domain())};
    for (int k = 0; k <= n; ++k) {
        const SignedMeasure f1 = D(forest_f1(n, q, k));
        add_scaled(out.d1, f1 - g, c2);
        SignedMeasure s = D(forest_f2(n, q, k, 1));
        add_scaled(s, D(forest_f2(n, q, k, 2)), Rational(3, 4) * (Q - 3));
        add_scaled(s, f1, Rational(-3, 2) * (Q - 1));
        add_scaled(s, g, (3 * Q - 1) / 4);
        add_scaled(out.d2, s, c3);
    }
    for (int k = 0; k <= n; ++k)
        for (int l = k + 1; l <= n; ++l) {
            add_scaled(out.d2, g - D(forest_f1(n, q, l)) - D(forest_f1(n, q, k)), c2 * c2);
            SignedMeasure s = D(forest_f2(n, q, k, l, 2));
            add_scaled(s, D(forest_f2(n, q, k, l, 1)) + D(forest_f2(n, q, k, l, 4)), Q - 2);
            add_scaled(s, D(forest_f2(n, q, k, l, 3)), (Q - 2) * (Q - 3) / 2);
            add_scaled(out.d2, s, c2);
        }
    return out;
}

std::vector<std::pair<Forest, Rational>> wick_forests(int n, int q, const Caps& caps) {
    std::vector<std::pair<Forest, Rational>> out;
    if (q % 2) return out;
    const int h = q / 2;
    const Tree trivial = Tree::chain(n + 1);
    for (const auto& o : enumerate_orbits(n, q, MultiIndex::constant(static_cast<std::size_t>(n + 1), h), caps)) {
        if (o.forest.coalescence_degree() != h) continue;
        const auto& tr = o.forest.trees();
        if (std::find(tr.begin(), tr.end(), trivial) != tr.end()) continue;
        const MultiIndex r = o.forest.coalescence();
        Rational c = Rational(factorial(q)) / Rational(r.factorial());
        c /= pow_int(Rational(2), h);
        out.push_back({o.forest, c});
    }
    return out;
}

namespace {

void check_centered(const FKModel& m, const TensorFunction& F) {
    if (!F.is_symmetric() && F.symmetrize() != F) throw ExpansionError("F must be symmetric");
    if (!is_centered(m, F)) throw ExpansionError("F is not centered: every one-coordinate marginal against eta must vanish");
}

// symmetric within level blocks
bool block_symmetric(const TensorFunction& F) { return F.symmetrize() == F; }

}  // namespace

WickReport wick_Q(const FKModel& m, int n, int q, const TensorFunction& F, const Caps& caps) {
    if (F.domain() != single_time_domain(n, m.size(n), q)) throw ExpansionError("wick_Q: F must live on E_n^q");
    check_centered(m, F);
    const int half = q / 2;
    const auto e = ForestExpansion::single(m, n, q, half, caps);
    WickReport r;
    const int last_vanishing = (q % 2) ? half : half - 1;
    r.vanishing = true;
    for (int k = 0; k <= std::min(last_vanishing, e.max_order()); ++k) {
        const Rational v = e.derivative(k).pair(F);
        r.low_orders.push_back({k, v});
        r.vanishing = r.vanishing && v == 0;
    }
    if (q % 2 == 0) {
        r.leading = e.derivative(half).pair(F);
        Rational s = 0;
        for (const auto& [f, c] : wick_forests(n, q, caps)) s += c * delta_forest(m, f, n, q, caps).pair(F);
        r.wick_sum = s;
        r.matches = r.vanishing && *r.leading == s;
    } else {
        r.matches = r.vanishing;
    }
    return r;
}

// ---- path space ---------------------------------------------------------------------------------

int top_order_path(const MultiIndex& q) {
    const auto tail = path_tail(q);
    int s = 0;
    for (std::size_t k = 0; k + 1 < tail.size(); ++k) s += std::max(tail[k] - 1, 0);
    return s;
}

Rational path_exact_QN(const FKModel& m, const MultiIndex& q, long N, const TensorFunction& F, const Caps& caps) {
    const auto e = ForestExpansion::path(m, q, -1, caps);
    return e.exact(N).pair(require_domain(F, e.domain(), "path_exact_QN"));
}

SignedMeasure path_derivative_Q(const FKModel& m, const MultiIndex& q, int k, const Caps& caps) {
    if (k < 0 || k > top_order_path(q)) throw ExpansionError("order k must lie in 0.." + std::to_string(top_order_path(q)));
    return ForestExpansion::path(m, q, k, caps).derivative(k);
}

WickReport path_wick_Q(const FKModel& m, const MultiIndex& q, const TensorFunction& F, const Caps& caps) {
    if (F.domain() != path_domain(m, q)) throw ExpansionError("path_wick_Q: F must live on the path domain");
    if (!block_symmetric(F)) throw ExpansionError("F must be symmetric within level blocks");
    if (!is_centered(m, F)) throw ExpansionError("F is not centered");
    const long Q = q.norm();
    const int half = static_cast<int>(Q / 2);
    const auto e = ForestExpansion::path(m, q, half, caps);
    WickReport r;
    const int last_vanishing = (Q % 2) ? half : half - 1;
    r.vanishing = true;
    for (int k = 0; k <= std::min(last_vanishing, e.max_order()); ++k) {
        const Rational v = e.derivative(k).pair(F);
        r.low_orders.push_back({k, v});
        r.vanishing = r.vanishing && v == 0;
    }
    if (Q % 2 == 0) {
        r.leading = half <= e.max_order() ? e.derivative(half).pair(F) : Rational(0);
        Rational s = 0;
        const int n = static_cast<int>(q.size()) - 1;
        for (const auto& t : wick_families(q)) {
            Rational c = Rational(q.factorial());
            long diag = 0;
            for (const auto& [klm, cnt] : t) {
                c /= Rational(factorial(cnt));
                if (std::get<1>(klm) == std::get<2>(klm)) diag += cnt;
            }
            c /= pow_int(Rational(2), diag);
            s += c * delta_colored(m, build_wick_forest(t, n), q, caps).pair(F);
        }
        r.wick_sum = s;
        r.matches = r.vanishing && *r.leading == s;
    } else {
        r.matches = r.vanishing;
    }
    return r;
}

// ---- reports ----------------------------------------------------------------------------------------

bool ExpansionReport::exact_ok() const {
    for (auto& [N, v] : residual)
        if (v != 0) return false;
    for (auto& [N, v] : oracle_delta)
        if (v != 0) return false;
    return true;
}

namespace {

// the oracle's law of the tensor measure, entry by entry
SignedMeasure oracle_measure(const ConfigOracle& cfg, const MultiIndex& q, const Domain& d) {
    SignedMeasure out(d);
    for (std::size_t i = 0; i < d.volume(); ++i) {
        TensorFunction ind(d);
        ind.values()[i] = 1;
        out.weights()[i] = cfg.gamma_moment(q, ind);
    }
    return out;
}

ExpansionReport report_from(const ForestExpansion& e, const FKModel& m, const MultiIndex& qpath,
                            const std::vector<long>& Ns, const std::optional<TensorFunction>& F, bool with_oracle,
                            const Caps& caps, std::string family) {
    ExpansionReport r;
    r.family = std::move(family);
    r.base = e.derivative(0);
    for (int k = 1; k <= e.top_order(); ++k) r.orders[k] = e.derivative(k);
    std::optional<TensorFunction> Fs;
    if (F) {
        Fs = require_domain(*F, e.domain(), "expand");
        r.pairings[0] = r.base.pair(*Fs);
        for (auto& [k, mu] : r.orders) r.pairings[k] = mu.pair(*Fs);
    }
    for (long N : Ns) {
        const SignedMeasure ex = e.exact(N);
        const SignedMeasure diff = ex - e.polynomial(N);
        if (Fs) {
            r.exact[N] = ex.pair(*Fs);
            r.residual[N] = diff.pair(*Fs);
        } else {
            r.exact[N] = ex.total_mass();
            r.residual[N] = diff.tv_norm();
        }
        if (with_oracle) {
            ConfigOracle cfg(m, static_cast<int>(N), static_cast<int>(qpath.size()) - 1, caps);
            if (Fs) r.oracle_delta[N] = r.exact[N] - cfg.gamma_moment(qpath, *Fs);
            else r.oracle_delta[N] = (ex - oracle_measure(cfg, qpath, e.domain())).tv_norm();
        }
    }
    return r;
}

}  // namespace

ExpansionReport expand_Q(const FKModel& m, int n, int q, const std::vector<long>& Ns,
                         const std::optional<TensorFunction>& F, bool with_oracle, const Caps& caps) {
    const auto e = ForestExpansion::single(m, n, q, -1, caps);
    MultiIndex qp = MultiIndex::zeros(static_cast<std::size_t>(n + 1));
    qp.set(n, q);
    return report_from(e, m, qp, Ns, F, with_oracle, caps, "Q");
}

ExpansionReport expand_path_Q(const FKModel& m, const MultiIndex& q, const std::vector<long>& Ns,
                              const std::optional<TensorFunction>& F, bool with_oracle, const Caps& caps) {
    const auto e = ForestExpansion::path(m, q, -1, caps);
    return report_from(e, m, q, Ns, F, with_oracle, caps, "Qbar");
}

std::vector<Rational> centered_potential(const FKModel& m, int k) {
    const Flow fl = flow(m);
    Rational eG = 0, gG = 0;
    for (int x = 0; x < m.size(k); ++x) {
        eG += fl.eta[k][x] * m.G(k)[x];
        gG += fl.gamma[k][x] * m.G(k)[x];
    }
    std::vector<Rational> out(static_cast<std::size_t>(m.size(k)));
    for (int x = 0; x < m.size(k); ++x) out[x] = (eG - m.G(k)[x]) / gG;
    return out;
}

namespace {

TensorFunction gbar_tensor(const FKModel& m, const MultiIndex& p) {
    std::vector<int> levels;
    std::vector<std::vector<Rational>> factors;
    for (std::size_t k = 0; k < p.size(); ++k)
        for (int i = 0; i < p[k]; ++i) {
            levels.push_back(static_cast<int>(k));
            factors.push_back(centered_potential(m, static_cast<int>(k)));
        }
    return TensorFunction::product(levels, factors);
}

}  // namespace

ExpansionReport centered_moment_expansion(const FKModel& m, int n, int q, const std::vector<long>& grid,
                                          bool with_oracle, const Caps& caps) {
    const std::set<long> Ns(grid.begin(), grid.end());
    if (q < 2) throw ExpansionError("centered moments need q >= 2");
    if (n < 0 || n > m.horizon()) throw ExpansionError("time horizon n outside the model");
    const int top = (n + 1) * (q - 1);
    std::vector<Rational> coef(static_cast<std::size_t>(top + 1));
    std::map<long, Rational> exact;
    for (const auto& p : bounded_compositions(MultiIndex::constant(static_cast<std::size_t>(n + 1), q), q)) {
        const Rational mult = Rational(factorial(q)) / Rational(p.factorial());
        const auto e = ForestExpansion::path(m, p, -1, caps);
        const TensorFunction G = gbar_tensor(m, p);
        for (int k = 0; k <= e.top_order(); ++k) coef[k] += mult * e.derivative(k).pair(G);
        for (long N : Ns) exact[N] += mult * e.exact(N).pair(G);
    }
    ExpansionReport r;
    r.family = "E";
    r.base = SignedMeasure::scalar(coef[0]);
    r.pairings[0] = coef[0];
    for (int k = 1; k <= top; ++k) {
        r.orders[k] = SignedMeasure::scalar(coef[k]);
        r.pairings[k] = coef[k];
    }
    for (long N : Ns) {
        Rational poly = 0;
        for (int k = 0; k <= top; ++k) poly += coef[k] * inverse_power(N, k);
        r.exact[N] = exact[N];
        r.residual[N] = exact[N] - poly;
        if (with_oracle) r.oracle_delta[N] = exact[N] - ConfigOracle(m, static_cast<int>(N), n, caps).centered_moment(n, q);
    }
    return r;
}

// ---- propagation of chaos ------------------------------------------------------------------------------

namespace {

// mu(F) -> mu(F-bar), F-bar = (F - eta^{(x)q}(F)) / gamma(1)^q
SignedMeasure fbar_transform(const FKModel& m, int level, int q, const SignedMeasure& raw) {
    const Flow fl = flow(m);
    SignedMeasure out = raw - eta_tensor(m, level, q) * raw.total_mass();
    return out * (Rational(1) / pow_int(fl.mass[level], q));
}

void check_P_args(const FKModel& m, int n_plus_1, int q, int k) {
    if (n_plus_1 < 1 || n_plus_1 > m.horizon()) throw ExpansionError("n+1 must lie in 1..horizon");
    if (q < 1) throw ExpansionError("q must be >= 1");
    if (k < 0) throw ExpansionError("order k must be >= 0");
}

// contract the first `drop[k]` coordinates of every level block k
SignedMeasure contract_blocks(SignedMeasure mu, const std::vector<std::vector<Rational>>& g,
                              const std::vector<int>& drop) {
    const auto blocks = mu.domain().blocks();
    std::vector<std::size_t> coords;
    std::vector<int> lev;
    for (auto [start, len] : blocks) {
        const int level = mu.domain().levels[start];
        const int d = level < static_cast<int>(drop.size()) ? drop[level] : 0;
        for (int i = 0; i < d; ++i) {
            coords.push_back(start + static_cast<std::size_t>(i));
            lev.push_back(level);
        }
        (void)len;
    }
    for (std::size_t i = coords.size(); i-- > 0;) mu = mu.contract(coords[i], g[lev[i]]);
    return mu;
}

}  // namespace

SignedMeasure derivative_P(const FKModel& m, int n_plus_1, int q, int k, const Caps& caps) {
    check_P_args(m, n_plus_1, q, k);
    if (k == 0) return eta_tensor(m, n_plus_1, q);
    const int n = n_plus_1 - 1;
    std::vector<std::vector<Rational>> gbar;
    for (int j = 0; j <= n; ++j) gbar.push_back(centered_potential(m, j));
    const Matrix Qn = q_operator(m, n_plus_1);
    SignedMeasure raw(single_time_domain(n_plus_1, m.size(n_plus_1), q));
    for (int l = 0; l < 2 * k; ++l)
        for (const auto& p : bounded_compositions(MultiIndex::constant(static_cast<std::size_t>(n + 1), l), l)) {
            MultiIndex pq = p;
            pq.set(n, p[n] + q);
            if (top_order_path(pq) < k) continue;
            const Rational c = Rational(factorial(q - 1 + l)) / Rational(factorial(q - 1)) / Rational(p.factorial());
            SignedMeasure nu = ForestExpansion::path(m, pq, k, caps).derivative(k);
            nu = contract_blocks(nu, gbar, p.entries());
            for (int i = 0; i < q; ++i) nu = nu.apply_kernel(static_cast<std::size_t>(i), Qn, n_plus_1);
            add_scaled(raw, nu, c);
        }
    return fbar_transform(m, n_plus_1, q, raw);
}

SignedMeasure derivative_P_tilde(const FKModel& m, int n_plus_1, int q, int k, const Caps& caps) {
    check_P_args(m, n_plus_1, q, k);
    if (k == 0) return eta_tensor(m, n_plus_1, q);
    const int n = n_plus_1 - 1;
    std::vector<std::vector<Rational>> gbar;
    for (int j = 0; j <= n; ++j) gbar.push_back(centered_potential(m, j));
    SignedMeasure raw(single_time_domain(n_plus_1, m.size(n_plus_1), q));
    for (int l = 0; l < 2 * k; ++l)
        for (const auto& p : bounded_compositions(MultiIndex::constant(static_cast<std::size_t>(n + 1), l), l)) {
            std::vector<int> e = p.entries();
            e.push_back(q);
            const MultiIndex pq(e);
            if (top_order_path(pq) < k) continue;
            const Rational c = Rational(factorial(q - 1 + l)) / Rational(factorial(q - 1)) / Rational(p.factorial());
            SignedMeasure nu = ForestExpansion::path(m, pq, k, caps).derivative(k);
            nu = contract_blocks(nu, gbar, p.entries());
            add_scaled(raw, nu, c);
        }
    return fbar_transform(m, n_plus_1, q, raw);
}

FirstOrderP first_order_P(const FKModel& m, int n_plus_1, int q, const Caps& caps) {
    check_P_args(m, n_plus_1, q, 1);
    const int n = n_plus_1 - 1;
    const Flow fl = flow(m);
    FirstOrderP out;
    out.generic = derivative_P(m, n_plus_1, q, 1, caps);
    const Domain target = single_time_domain(n_plus_1, m.size(n_plus_1), q);
    SignedMeasure A(target), B(target);
    auto push = [&](SignedMeasure mu, int k) {
        const Matrix S = semigroup(m, k, n_plus_1);
        for (int i = 0; i < q; ++i) mu = mu.apply_kernel(static_cast<std::size_t>(i), S, n_plus_1);
        return mu;
    };
    auto power_of = [&](const SignedMeasure& g, int times) {
        SignedMeasure t = SignedMeasure::scalar(1);
        for (int i = 0; i < times; ++i) t = t.tensor(g, caps);
        return t;
    };
    const Rational c2 = Rational(binomial(q, 2));
    for (int k = 0; k <= n && q >= 2; ++k) {
        const SignedMeasure g = SignedMeasure::on_level(k, fl.gamma[k]);
        // gamma_k(1) gamma_k^{(x)(q-1)} on the diagonal x^1 = x^2
        std::vector<int> src{0};
        for (int i = 0; i < q - 1; ++i) src.push_back(i);
        SignedMeasure dup = power_of(g, q - 1).substitute(src, single_time_domain(k, m.size(k), q));
        add_scaled(A, push(dup, k), c2 * fl.mass[k]);
    }
    for (int mm = 0; mm <= n; ++mm) {
        const auto gb = centered_potential(m, mm);
        for (int k = 0; k <= mm; ++k) {
            const auto h = semigroup(m, k, mm).apply(gb);
            std::vector<Rational> weighted(fl.gamma[k]);
            for (std::size_t x = 0; x < weighted.size(); ++x) weighted[x] *= h[x];
            SignedMeasure mu = SignedMeasure::on_level(k, weighted).tensor(power_of(SignedMeasure::on_level(k, fl.gamma[k]), q - 1), caps);
            add_scaled(B, push(mu, k), Rational(q * q) * fl.mass[k]);
        }
    }
    out.coalescence = fbar_transform(m, n_plus_1, q, A.symmetrize());
    out.closed = fbar_transform(m, n_plus_1, q, (A + B).symmetrize());
    // the -gamma^{(x)q} counterterm of the first coefficient, paired through Q^{(x)q} with F-bar
    SignedMeasure ct = gamma_tensor(m, n, q);
    const Matrix Qn = q_operator(m, n_plus_1);
    for (int i = 0; i < q; ++i) ct = ct.apply_kernel(static_cast<std::size_t>(i), Qn, n_plus_1);
    out.counterterm_vanishes = fbar_transform(m, n_plus_1, q, ct).is_zero();
    out.matches = out.closed == out.generic;
    return out;
}

SeminormInterval seminorm_interval(const FKModel& m, const SignedMeasure& mu) {
    const Domain& d = mu.domain();
    SeminormInterval r;
    r.upper = mu.tv_norm();
    r.lower = 0;
    auto consider = [&](const TensorFunction& G) {
        const TensorFunction F = center_function(m, G);
        const Rational s = F.sup_norm();
        if (s == 0) return;
        Rational v = mu.pair(F) / s;
        if (v < 0) v = -v;
        if (v > r.lower) r.lower = v;
    };
    TensorFunction sign(d);
    for (std::size_t i = 0; i < d.volume(); ++i) sign.values()[i] = mu.weights()[i] > 0 ? 1 : (mu.weights()[i] < 0 ? -1 : 0);
    consider(sign);
    // sign of mu composed with the centering projection
    SignedMeasure proj(d);
    for (std::size_t i = 0; i < d.volume(); ++i) {
        TensorFunction ind(d);
        ind.values()[i] = 1;
        proj.weights()[i] = mu.pair(center_function(m, ind));
    }
    TensorFunction sign2(d);
    for (std::size_t i = 0; i < d.volume(); ++i) sign2.values()[i] = proj.weights()[i] > 0 ? 1 : (proj.weights()[i] < 0 ? -1 : 0);
    consider(sign2);
    // products f^{(x)q} with f in {-1, 1}^E on a single level
    if (d.blocks().size() == 1 && d.arity() > 0 && d.sizes[0] <= 16) {
        const int E = d.sizes[0];
        for (int mask = 0; mask < (1 << E); ++mask) {
            std::vector<Rational> f(static_cast<std::size_t>(E));
            for (int x = 0; x < E; ++x) f[x] = (mask >> x) & 1 ? 1 : -1;
            std::vector<std::vector<Rational>> fs(d.arity(), f);
            consider(TensorFunction::product(d.levels, fs));
        }
    }
    return r;
}

UstatReport ustat_decay_check(const FKModel& m, int n, int q, const TensorFunction& F, const std::vector<long>& Ns,
                              const Caps& caps) {
    if (q < 2) throw ExpansionError("U-statistics need q >= 2");
    if (n < 1 || n > m.horizon()) throw ExpansionError("n must lie in 1..horizon");
    const Domain d = single_time_domain(n, m.size(n), q);
    const TensorFunction Fs = require_domain(F, d, "ustat_decay_check");
    UstatReport r;
    r.centered = is_centered(m, Fs);
    r.limit = eta_tensor(m, n, q).pair(Fs);
    if (!r.centered) {
        r.order = 1;
        r.constant = derivative_P(m, n, q, 1, caps).pair(Fs);
    } else if (q % 2 == 0) {
        // leading order q/2 with the Wick constant gamma_n(1)^{-q} d^{q/2}Q_{n-1,q}(Q_n^{(x)q} F)
        r.order = q / 2;
        TensorFunction QF = Fs;
        for (int i = 0; i < q; ++i) QF = QF.apply_kernel(static_cast<std::size_t>(i), q_operator(m, n), n - 1);
        r.constant = derivative_Q(m, n - 1, q, q / 2, caps).pair(QF) / pow_int(flow(m).mass[n], q);
    } else {
        r.order = (q + 1) / 2;
        r.constant = derivative_P(m, n, q, r.order, caps).pair(Fs);
    }
    Rational prev = -1;
    r.decay_ok = true;
    for (long N : Ns) {
        if (N < q) throw ExpansionError("grid values must satisfy N >= q");
        UstatPoint pt;
        pt.N = N;
        pt.value = ConfigOracle(m, static_cast<int>(N), n, caps).eta_dot_moment(n, Fs);
        pt.scaled = (pt.value - r.limit) * pow_int(Rational(N), r.order);
        Rational gap = pt.scaled - r.constant;
        if (gap < 0) gap = -gap;
        if (prev >= 0 && gap > prev) r.decay_ok = false;
        prev = gap;
        r.grid.push_back(pt);
    }
    return r;
}

}  // namespace fkexp
