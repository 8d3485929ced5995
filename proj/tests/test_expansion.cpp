#include <doctest.h>

#include "fkexp/expansion.hpp"
#include "fkexp/particle.hpp"
#include "oracles/oracles.hpp"
#include "test_util.hpp"

using namespace fkexp;
using namespace testutil;

namespace {

Rational rpow(const Rational& x, int e) {
    Rational r = 1;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

TensorFunction random_symmetric(const Domain& d, std::mt19937_64& rng) { return random_function(d, rng).symmetrize(); }

// f^{(x)q} with f centered against eta_n
TensorFunction centered_power(const FKModel& m, int n, int q, std::mt19937_64& rng) {
    auto f = random_vector(m.size(n), rng);
    const auto fl = flow(m);
    Rational mean = 0;
    for (int x = 0; x < m.size(n); ++x) mean += fl.eta[n][x] * f[x];
    for (auto& v : f) v -= mean;
    std::vector<int> lv(static_cast<std::size_t>(q), n);
    return TensorFunction::product(lv, std::vector<std::vector<Rational>>(static_cast<std::size_t>(q), f));
}

std::vector<Rational> centered_vector(const FKModel& m, int n, std::mt19937_64& rng) {
    auto f = random_vector(m.size(n), rng);
    const auto fl = flow(m);
    Rational mean = 0;
    for (int x = 0; x < m.size(n); ++x) mean += fl.eta[n][x] * f[x];
    for (auto& v : f) v -= mean;
    return f;
}

}  // namespace

TEST_CASE("one particle is gamma_n") {
    auto m = random_model(3, {2, 3, 2});
    for (int n = 0; n <= 2; ++n) {
        auto e = ForestExpansion::single(m, n, 1);
        CHECK(e.top_order() == 0);
        CHECK(e.derivative(0) == gamma_tensor(m, n, 1));
        CHECK(e.exact(5) == gamma_tensor(m, n, 1));
    }
}

TEST_CASE("two particles at time zero") {
    auto m = random_model(5, {3, 2});
    std::mt19937_64 rng(1);
    auto F = random_symmetric(single_time_domain(0, 3, 2), rng);
    const auto fl = flow(m);
    // E(eta_0^N (x) eta_0^N)(F) = (1 - 1/N) eta^2(F) + 1/N eta(F(x,x))
    Rational diag = 0;
    for (int x = 0; x < 3; ++x) diag += fl.eta[0][x] * F.values()[F.domain().index({x, x})];
    const Rational prod = eta_tensor(m, 0, 2).pair(F);
    for (long N : {2L, 3L, 7L}) {
        CHECK(exact_QN(m, 0, 2, N, F) == prod + (diag - prod) / N);
        CHECK(exact_QN(m, 0, 2, N, F) == oracle::iid_tensor_moment(m, N, F));
    }
    CHECK(derivative_Q(m, 0, 2, 1).pair(F) == diag - prod);
}

TEST_CASE("zeroth order is the tensor power and the sum is a polynomial") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto m = random_model(seed, {2, 2, 3});
        for (int n = 0; n <= 2; ++n)
            for (int q = 1; q <= 3; ++q) {
                auto e = ForestExpansion::single(m, n, q);
                CHECK(e.derivative(0) == gamma_tensor(m, n, q));
                for (long N : {static_cast<long>(q), q + 1L, q + 2L, 17L}) CHECK(e.exact(N) == e.polynomial(N));
                CHECK_THROWS_AS(e.exact(0), ExpansionError);
            }
    }
}

TEST_CASE("exact moments against the configuration oracle") {
    auto m = random_model(11, {2, 3, 2});
    std::mt19937_64 rng(7);
    for (int n = 0; n <= 2; ++n)
        for (int q = 1; q <= 3; ++q) {
            auto F = random_symmetric(single_time_domain(n, m.size(n), q), rng);
            MultiIndex qp = MultiIndex::zeros(static_cast<std::size_t>(n + 1));
            qp.set(n, q);
            // fewer particles than coordinates is fine: the falling factorials vanish
            for (int N = 1; N <= 4; ++N) {
                ConfigOracle cfg(m, N, n);
                CHECK(exact_QN(m, n, q, N, F) == cfg.gamma_moment(qp, F));
            }
        }
    auto r = expand_Q(m, 1, 2, {2, 3, 4}, std::nullopt, true);
    CHECK(r.exact_ok());
}

TEST_CASE("total variation of the coefficients is bounded") {
    // truncation error is controlled by the tv norms of the dropped coefficients
    auto m = random_model(4, {2, 2, 2});
    const int n = 2, q = 3;
    auto e = ForestExpansion::single(m, n, q);
    for (long N : {3L, 5L, 9L}) {
        SignedMeasure partial(e.domain());
        for (int k = 0; k <= e.top_order(); ++k) {
            partial = partial + e.derivative(k) * (Rational(1) / rpow(Rational(N), k));
            Rational tail = 0;
            for (int j = k + 1; j <= e.top_order(); ++j) tail += e.derivative(j).tv_norm() / rpow(Rational(N), j);
            CHECK((e.exact(N) - partial).tv_norm() <= tail);
        }
    }
}

TEST_CASE("closed forms of the first two coefficients") {
    for (std::uint64_t seed : {2u, 9u}) {
        auto m = random_model(seed, {2, 2, 2});
        for (int n = 0; n <= 2; ++n)
            for (int q = 4; q <= 5; ++q) {
                auto lo = closed_form_low_orders(m, n, q);
                CHECK(lo.d0 == derivative_Q(m, n, q, 0));
                CHECK(lo.d1 == derivative_Q(m, n, q, 1));
                CHECK(lo.d2 == derivative_Q(m, n, q, 2));
            }
    }
    auto m = random_model(1, {2, 2});
    CHECK_THROWS_AS(closed_form_low_orders(m, 1, 3), ExpansionError);
}

TEST_CASE("named forests have the advertised shape") {
    const int n = 3, q = 5;
    for (int k = 0; k <= n; ++k) {
        auto f = forest_f1(n, q, k);
        CHECK(f.coalescence_degree() == 1);
        CHECK(f.coalescence()[k] == 1);
        CHECK(forest_f2(n, q, k, 1).coalescence()[k] == 2);
        CHECK(forest_f2(n, q, k, 2).coalescence()[k] == 2);
        for (int l = k + 1; l <= n; ++l)
            for (int v = 1; v <= 4; ++v) {
                auto g = forest_f2(n, q, k, l, v);
                CHECK(g.coalescence_degree() == 2);
                CHECK(g.coalescence()[k] == 1);
                CHECK(g.coalescence()[l] == 1);
                CHECK(g.profile() == MultiIndex::constant(static_cast<std::size_t>(n + 2), q));
            }
    }
    // degree <= 2 orbits are exactly the trivial forest, f_1 and the six families
    const int n2 = 2, q2 = 4;
    auto orbits = enumerate_orbits(n2, q2, MultiIndex::constant(n2 + 1, 2));
    std::size_t low = 0;
    for (auto& o : orbits) low += o.forest.coalescence_degree() <= 2;
    CHECK(low == 1 + (n2 + 1) + 2 * (n2 + 1) + 4 * (n2 + 1) * n2 / 2);
}

TEST_CASE("Wick formula at one time") {
    std::mt19937_64 rng(5);
    for (std::uint64_t seed : {3u, 8u}) {
        auto m = random_model(seed, {2, 3});
        for (int n = 0; n <= 1; ++n)
            for (int q = 1; q <= 4; ++q) {
                auto F = centered_power(m, n, q, rng);
                auto r = wick_Q(m, n, q, F);
                CHECK(r.vanishing);
                CHECK(r.matches);
            }
    }
    auto m = random_model(3, {2, 3});
    TensorFunction bad = TensorFunction::constant(single_time_domain(1, 3, 2), 1);
    CHECK_THROWS_AS(wick_Q(m, 1, 2, bad), ExpansionError);
}

TEST_CASE("Wick leading term against Gaussian pairings") {
    std::mt19937_64 rng(17);
    for (std::uint64_t seed : {4u, 6u}) {
        auto m = random_model(seed, {2, 3, 2});
        for (int n = 0; n <= 2; ++n)
            for (int q : {2, 4}) {
                std::vector<std::vector<Rational>> fs;
                for (int i = 0; i < q; ++i) fs.push_back(centered_vector(m, n, rng));
                std::vector<int> lv(static_cast<std::size_t>(q), n);
                auto F = TensorFunction::product(lv, fs).symmetrize();
                // fluctuation fields of the unnormalized measures
                const Rational g = oracle::gaussian_moment(m, lv, fs);
                CHECK(derivative_Q(m, n, q, q / 2).pair(F) == g);
            }
    }
}

TEST_CASE("path expansion reproduces the single time expansion") {
    auto m = random_model(12, {2, 2, 3});
    for (int n = 0; n <= 2; ++n)
        for (int q = 1; q <= 3; ++q) {
            MultiIndex qp = MultiIndex::zeros(static_cast<std::size_t>(n + 1));
            qp.set(n, q);
            auto a = ForestExpansion::single(m, n, q);
            auto b = ForestExpansion::path(m, qp);
            REQUIRE(a.top_order() == b.top_order());
            for (int k = 0; k <= a.top_order(); ++k) CHECK(a.derivative(k) == b.derivative(k));
        }
}

TEST_CASE("path moments against the oracles") {
    auto m = random_model(21, {2, 3, 2});
    std::mt19937_64 rng(3);
    const std::vector<std::vector<int>> profiles{{1, 1}, {2, 1}, {1, 0, 1}, {1, 1, 1}, {0, 2, 1}, {2, 0}};
    for (const auto& pv : profiles) {
        MultiIndex q(pv);
        auto e = ForestExpansion::path(m, q);
        auto F = random_symmetric(e.domain(), rng);
        for (long N : {static_cast<long>(q.norm()), q.norm() + 1L, 12L}) CHECK(e.exact(N) == e.polynomial(N));
        for (int N = 1; N <= 4; ++N) {
            const Rational v = e.exact(N).pair(F);
            CHECK(v == ConfigOracle(m, N, static_cast<int>(pv.size()) - 1).gamma_moment(q, F));
            if (N <= 3) CHECK(v == oracle::OrderedSystem(m, N, static_cast<int>(pv.size()) - 1).tensor_moment(pv, F));
        }
    }
    auto r = expand_path_Q(m, MultiIndex({1, 1}), {2, 3}, std::nullopt, true);
    CHECK(r.exact_ok());
}

TEST_CASE("path Wick formula") {
    std::mt19937_64 rng(23);
    auto m = random_model(14, {2, 3, 2});
    const std::vector<std::vector<int>> profiles{{1, 1}, {2, 0}, {0, 2}, {1, 0, 1}, {2, 2}, {1, 1, 2}, {1, 2}};
    for (const auto& pv : profiles) {
        MultiIndex q(pv);
        std::vector<int> lv;
        std::vector<std::vector<Rational>> fs;
        for (int k = 0; k < static_cast<int>(pv.size()); ++k)
            for (int i = 0; i < pv[k]; ++i) {
                lv.push_back(k);
                fs.push_back(centered_vector(m, k, rng));
            }
        auto F = TensorFunction::product(lv, fs).symmetrize();
        auto r = path_wick_Q(m, q, F);
        CHECK(r.vanishing);
        CHECK(r.matches);
        if (q.norm() % 2 == 0) CHECK(*r.leading == oracle::gaussian_moment(m, lv, fs));
    }
}

TEST_CASE("centered moments of the normalizing constants") {
    auto m = random_model(31, {2, 2, 2});
    for (int n = 0; n <= 2; ++n)
        for (int q = 2; q <= 3; ++q) {
            auto r = centered_moment_expansion(m, n, q, {1, 2, 3, 4}, true);
            CHECK(r.exact_ok());
            CHECK(r.pairings.at(0) == 0);
        }
    // the first coefficient is the variance of the Gaussian limit when q = 2
    auto r = centered_moment_expansion(m, 2, 2, {}, false);
    // 1 - gamma^N/gamma = sum_p gamma_p^N(Gbar_p), so the variance coefficient is the covariance sum of V_p(Gbar_p)
    Rational var = 0;
    for (int j = 0; j <= 2; ++j)
        for (int l = 0; l <= 2; ++l) {
            auto gj = centered_potential(m, j), gl = centered_potential(m, l);
            var += j <= l ? oracle::gaussian_cov(m, j, gj, l, gl) : oracle::gaussian_cov(m, l, gl, j, gj);
        }
    CHECK(r.pairings.at(1) == var);
}

TEST_CASE("zeroth and first order of the propagation of chaos") {
    for (std::uint64_t seed : {2u, 5u}) {
        auto m = random_model(seed, {2, 3, 2});
        for (int n1 = 1; n1 <= 2; ++n1)
            for (int q = 1; q <= 3; ++q) {
                CHECK(derivative_P(m, n1, q, 0) == eta_tensor(m, n1, q));
                auto fo = first_order_P(m, n1, q);
                CHECK(fo.matches);
                CHECK(fo.counterterm_vanishes);
            }
    }
}

TEST_CASE("propagation of chaos against the exact law") {
    // P^N(F) = E(eta^N (x) ... ) is a rational function of N; compare its large N behaviour through exact values
    auto m = random_model(8, {2, 2});
    std::mt19937_64 rng(9);
    const int n1 = 1, q = 2;
    auto F = random_symmetric(single_time_domain(n1, 2, q), rng);
    const Rational d0 = derivative_P(m, n1, q, 0).pair(F);
    const Rational d1 = derivative_P(m, n1, q, 1).pair(F);
    const Rational d2 = derivative_P(m, n1, q, 2).pair(F);
    std::vector<Rational> gaps;
    for (int N = 5; N <= 9; ++N) {
        const Rational v = exact_PN_oracle(m, N, n1, q, F);
        Rational g = (v - d0 - d1 / N) * N * N - d2;
        if (g < 0) g = -g;
        gaps.push_back(g);
    }
    for (std::size_t i = 1; i < gaps.size(); ++i) CHECK(gaps[i] <= gaps[i - 1]);
}

TEST_CASE("Wick order of the propagation of chaos") {
    std::mt19937_64 rng(41);
    auto m = random_model(10, {2, 3, 2});
    const auto fl = flow(m);
    for (int n1 = 1; n1 <= 2; ++n1)
        for (int q : {2, 4}) {
            if (q == 4 && n1 == 2) continue;
            auto F = centered_power(m, n1, q, rng);
            // lower orders vanish
            for (int k = 1; k < q / 2; ++k) CHECK(derivative_P(m, n1, q, k).pair(F) == 0);
            TensorFunction QF = F;
            for (int i = 0; i < q; ++i) QF = QF.apply_kernel(i, q_operator(m, n1), n1 - 1);
            const Rational lhs = derivative_P(m, n1, q, q / 2).pair(F);
            CHECK(lhs == derivative_Q(m, n1 - 1, q, q / 2).pair(QF) / rpow(fl.mass[n1], q));
            const Rational lt = derivative_P_tilde(m, n1, q, q / 2).pair(F);
            CHECK(lt == derivative_Q(m, n1, q, q / 2).pair(F) / rpow(fl.mass[n1], q));
        }
}

TEST_CASE("P-tilde with one particle and centered product functions") {
    auto m = random_model(13, {2, 2, 2});
    std::mt19937_64 rng(2);
    for (int k = 0; k <= 2; ++k)
        CHECK(derivative_P_tilde(m, 2, 1, k) == derivative_P(m, 2, 1, k));
    // every coefficient vanishes on f^{(x)q} with eta-centered f below order ceil(q/2)
    for (int q = 2; q <= 3; ++q) {
        auto F = centered_power(m, 2, q, rng);
        for (int k = 1; k < (q + 1) / 2; ++k) CHECK(derivative_P_tilde(m, 2, q, k).pair(F) == 0);
    }
}

TEST_CASE("P-tilde against the normalized empirical measure") {
    auto m = random_model(18, {2, 3});
    std::mt19937_64 rng(12);
    auto f = centered_vector(m, 1, rng);
    auto F = TensorFunction::product({1, 1}, {f, f});
    const Rational d1 = derivative_P_tilde(m, 1, 2, 1).pair(F);
    const Rational d2 = derivative_P_tilde(m, 1, 2, 2).pair(F);
    CHECK(derivative_P_tilde(m, 1, 2, 0).pair(F) == 0);
    std::vector<Rational> gaps;
    for (int N = 2; N <= 8; ++N) {
        // E((eta^N f - eta f)^2) straight from the configuration law
        const auto dist = ConfigOracle(m, N, 1).distributions()[1];
        Rational direct = 0;
        for (const auto& [c, pr] : dist.probs) {
            Rational mean = 0;
            for (int x = 0; x < 3; ++x) mean += Rational(c[x], N) * f[x];
            direct += pr * mean * mean;
        }
        CHECK(direct == ConfigOracle(m, N, 1).eta_moment(MultiIndex({0, 2}), F));
        if (N >= 5) {
            Rational g = (direct - d1 / N) * N * N - d2;
            gaps.push_back(g < 0 ? -g : g);
        }
    }
    for (std::size_t i = 1; i < gaps.size(); ++i) CHECK(gaps[i] <= gaps[i - 1]);
}

TEST_CASE("seminorm interval") {
    auto m = random_model(15, {2, 3});
    auto mu = derivative_P(m, 1, 2, 1);
    auto iv = seminorm_interval(m, mu);
    CHECK(iv.lower <= iv.upper);
    CHECK(iv.upper == mu.tv_norm());
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
        auto F = center_function(m, random_function(mu.domain(), rng));
        if (F.sup_norm() == 0) continue;
        Rational v = mu.pair(F) / F.sup_norm();
        if (v < 0) v = -v;
        CHECK(v <= iv.upper);
    }
}

TEST_CASE("U-statistic decay") {
    auto m = random_model(16, {2, 2});
    std::mt19937_64 rng(6);
    auto F = centered_power(m, 1, 2, rng);
    auto r = ustat_decay_check(m, 1, 2, F, {4, 6, 8, 10});
    CHECK(r.centered);
    CHECK(r.order == 1);
    CHECK(r.limit == 0);
    CHECK(r.decay_ok);
    auto G = random_symmetric(single_time_domain(1, 2, 2), rng);
    auto r2 = ustat_decay_check(m, 1, 2, G, {4, 6, 8, 10});
    CHECK(r2.order == 1);
    CHECK(r2.decay_ok);
}

TEST_CASE("centered moments start at order q/2") {
    auto m = random_model(33, {2, 3, 2});
    for (int n = 0; n <= 2; ++n)
        for (int q = 2; q <= 4; ++q) {
            if (q == 4 && n == 2) continue;
            auto r = centered_moment_expansion(m, n, q, {}, false);
            for (int k = 0; 2 * k < q; ++k) CHECK_MESSAGE(r.pairings.at(k) == 0, "n=" << n << " q=" << q << " k=" << k);
        }
}
