#include <doctest.h>

#include "fkexp/fk_core.hpp"
#include "fkexp/particle.hpp"
#include "oracles/oracles.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace fkexp;
using namespace testutil;

namespace {

FKModel markov_model() {
    std::vector<std::vector<std::string>> st{{"a", "b"}, {"a", "b"}, {"a", "b"}};
    Matrix M(2, 2);
    M(0, 0) = Rational(1, 3);
    M(0, 1) = Rational(2, 3);
    M(1, 0) = Rational(3, 4);
    M(1, 1) = Rational(1, 4);
    return FKModel(st, {Rational(1, 5), Rational(4, 5)}, {M, M}, {{1, 1}, {1, 1}, {1, 1}});
}

FKModel sticky_model() {
    std::vector<std::vector<std::string>> st{{"a", "b"}, {"a", "b"}, {"a", "b"}};
    Matrix M(2, 2);
    M(0, 0) = Rational(3, 4);
    M(0, 1) = Rational(1, 4);
    M(1, 0) = Rational(1, 4);
    M(1, 1) = Rational(3, 4);
    return FKModel(st, {Rational(1, 2), Rational(1, 2)}, {M, M}, {{1, 2}, {1, 2}, {1, 2}});
}

}  // namespace

TEST_CASE("configurations") {
    CHECK(all_configs(3, 2).size() == 4);
    CHECK(all_configs(4, 3).size() == 15);
    Caps tiny;
    tiny.configs = 10;
    CHECK_THROWS_AS(all_configs(4, 3, tiny), CapExceeded);
}

TEST_CASE("config distributions are normalized") {
    for (int N = 1; N <= 4; ++N) {
        auto m = random_model(static_cast<std::uint64_t>(N), {3, 2, 3});
        for (auto& d : exact_config_distribution(m, N, 2)) CHECK(d.total() == 1);
    }
}

TEST_CASE("without potentials") {
    auto m = markov_model();
    auto fl = flow(m);
    const int N = 4;
    auto dist = exact_config_distribution(m, N, 2);
    auto multinomial_of = [&](const std::vector<int>& c, int k) {
        Rational p = Rational(factorial(N));
        for (std::size_t j = 0; j < c.size(); ++j) {
            p /= Rational(factorial(c[j]));
            for (int i = 0; i < c[j]; ++i) p *= fl.eta[k][j];
        }
        return p;
    };
    for (auto& [c, p] : dist[0].probs) CHECK(p == multinomial_of(c, 0));
    for (int k = 1; k <= 2; ++k) {
        // one particle follows the Markov marginal exactly
        Rational first = 0;
        for (auto& [c, p] : dist[k].probs) first += p * Rational(c[0], N);
        CHECK(first == fl.eta[k][0]);
        // but siblings sharing a parent make the population law differ from the multinomial
        bool differs = false;
        for (auto& [c, p] : dist[k].probs) differs = differs || p != multinomial_of(c, k);
        CHECK(differs);
    }
}

TEST_CASE("unbiasedness of the unnormalized measures") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto m = random_model(seed, {2, 3, 2});
        auto fl = flow(m);
        std::mt19937_64 rng(seed);
        for (int n = 0; n <= 2; ++n) {
            auto f = random_vector(m.size(n), rng);
            Rational expect = 0;
            for (int x = 0; x < m.size(n); ++x) expect += fl.gamma[n][x] * f[x];
            for (int N = 1; N <= 6; ++N) {
                MultiIndex q = MultiIndex::zeros(n + 1);
                q.set(n, 1);
                CHECK(ConfigOracle(m, N, n).gamma_moment(q, TensorFunction::product({n}, {f})) == expect);
            }
        }
    }
}

TEST_CASE("the normalized particle measures are biased") {
    auto m = sticky_model();
    auto fl = flow(m);
    std::vector<Rational> f{1, 0};
    MultiIndex q{0, 1};
    const Rational est = ConfigOracle(m, 2, 1).eta_moment(q, TensorFunction::product({1}, {f}));
    CHECK(est != fl.eta[1][0]);
}

TEST_CASE("config oracle agrees with the ordered particle system") {
    auto m = random_model(41, {2, 3, 2});
    std::mt19937_64 rng(8);
    for (int N = 1; N <= 3; ++N) {
        oracle::OrderedSystem ord(m, N, 2);
        ConfigOracle cfg(m, N, 2);
        for (auto q : {MultiIndex{2}, MultiIndex{1, 1}, MultiIndex{0, 2}, MultiIndex{2, 1}, MultiIndex{1, 0, 1},
                       MultiIndex{0, 1, 2}}) {
            auto F = random_function(path_domain(m, q), rng);
            CHECK(cfg.gamma_moment(q, F) == ord.tensor_moment(q.entries(), F));
            CHECK(cfg.eta_moment(q, F) == ord.eta_tensor_moment(q.entries(), F));
        }
        for (int n = 0; n <= 2; ++n)
            for (int q = 1; q <= N; ++q) {
                auto F = random_function(single_time_domain(n, m.size(n), q), rng);
                CHECK(cfg.eta_dot_moment(n, F) == ord.first_particles(n, F));
                CHECK(cfg.gamma_dot_moment(n, F) == ord.gamma_dot_moment(n, F));
            }
    }
}

TEST_CASE("two particles at time zero") {
    auto m = random_model(2, {3, 2});
    std::mt19937_64 rng(4);
    auto F = random_function(single_time_domain(0, 3, 2), rng).symmetrize();
    Rational prod = 0, diag = 0;
    for (int x = 0; x < 3; ++x) {
        diag += m.eta0()[x] * F.values()[x * 3 + x];
        for (int y = 0; y < 3; ++y) prod += m.eta0()[x] * m.eta0()[y] * F.values()[x * 3 + y];
    }
    for (int N = 2; N <= 5; ++N) {
        const Rational expect = (1 - Rational(1, N)) * prod + diag / N;
        CHECK(exact_QN_oracle(m, N, 0, 2, F) == expect);
        CHECK(oracle::iid_tensor_moment(m, N, F) == expect);
    }
}

TEST_CASE("restricted products and one selection-mutation step") {
    auto m = random_model(13, {2, 2, 3});
    std::mt19937_64 rng(6);
    for (int N = 2; N <= 4; ++N)
        for (int q = 1; q <= std::min(N, 3); ++q)
            for (int n = 1; n <= 2; ++n) {
                auto F = random_function(single_time_domain(n, m.size(n), q), rng);
                TensorFunction QF = F;
                for (int i = 0; i < q; ++i) QF = QF.apply_kernel(i, q_operator(m, n), n - 1);
                ConfigOracle cfg(m, N, n);
                MultiIndex p = MultiIndex::zeros(n);
                p.set(n - 1, q);
                CHECK(cfg.gamma_dot_moment(n, F) == cfg.gamma_moment(p, QF));
            }
}

TEST_CASE("block laws are exchangeable") {
    auto m = random_model(3, {3, 2});
    std::mt19937_64 rng(1);
    auto F = random_function(single_time_domain(1, 2, 3), rng);
    ConfigOracle cfg(m, 4, 1);
    const Rational base = cfg.eta_dot_moment(1, F);
    for (auto& s : all_maps(3))
        if (image_size(s) == 3) CHECK(cfg.eta_dot_moment(1, d_map(s, F)) == base);
}

TEST_CASE("estimators on one sample") {
    auto m = random_model(19, {3, 2, 3});
    std::mt19937_64 rng(2);
    for (int N = 1; N <= 5; ++N) {
        auto t = simulate(m, N, 77, 3, 2);
        for (int n = 0; n <= 2; ++n) {
            auto F1 = random_function(single_time_domain(n, m.size(n), 1), rng);
            CHECK(Estimators<Rational>::eta_tensor(t, n, F1) == Estimators<Rational>::eta_dot(t, n, F1));
            for (int q = 2; q <= std::min(N, 3); ++q) {
                auto F = random_function(single_time_domain(n, m.size(n), q), rng);
                CHECK(Estimators<Rational>::eta_tensor(t, n, F) ==
                      Estimators<Rational>::eta_dot(t, n, d_map(lq_operator(q, N), F)));
            }
        }
        // literal index-tuple definition of the restricted product
        auto F = random_function(single_time_domain(2, 3, 2), rng);
        if (N >= 2) {
            Rational s = 0;
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j)
                    if (i != j) s += F.values()[t.particles[2][i] * 3 + t.particles[2][j]];
            CHECK(Estimators<Rational>::eta_dot(t, 2, F) == s / (N * (N - 1)));
        } else {
            CHECK_THROWS(Estimators<Rational>::eta_dot(t, 2, F));
        }
    }
}

TEST_CASE("telescoping decomposition of the normalizing constant") {
    auto m = random_model(23, {2, 3, 2});
    auto fl = flow(m);
    for (std::uint64_t r = 0; r < 20; ++r) {
        auto t = simulate(m, 3 + static_cast<int>(r % 3), 5, r, 2);
        for (int n = 0; n <= 2; ++n) {
            Rational gG = 0;
            for (int x = 0; x < m.size(n); ++x) gG += fl.gamma[n][x] * m.G(n)[x];
            const Rational lhs = 1 - Estimators<Rational>::gamma(m, t, n, m.G(n)) / gG;
            Rational rhs = 0;
            for (int p = 0; p <= n; ++p) {
                Rational eG = 0, gGp = 0;
                for (int x = 0; x < m.size(p); ++x) {
                    eG += fl.eta[p][x] * m.G(p)[x];
                    gGp += fl.gamma[p][x] * m.G(p)[x];
                }
                std::vector<Rational> bar(m.size(p));
                for (int x = 0; x < m.size(p); ++x) bar[x] = (eG - m.G(p)[x]) / gGp;
                rhs += Estimators<Rational>::gamma(m, t, p, bar);
            }
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("centered moments of the normalizing constant") {
    auto m = random_model(29, {2, 2, 2});
    auto fl = flow(m);
    for (int N = 1; N <= 3; ++N) {
        ConfigOracle cfg(m, N, 2);
        oracle::OrderedSystem ord(m, N, 2);
        for (int n = 0; n <= 2; ++n) {
            CHECK(cfg.centered_moment(n, 0) == 1);
            CHECK(cfg.centered_moment(n, 1) == 0);
            // E((1 - X)^2) via E(X^2) from the ordered system
            Rational gG = 0;
            for (int x = 0; x < 2; ++x) gG += fl.gamma[n][x] * m.G(n)[x];
            MultiIndex p = MultiIndex::zeros(n + 1);
            p.set(n, 2);
            auto GG = TensorFunction::product({n, n}, {m.G(n), m.G(n)});
            CHECK(cfg.centered_moment(n, 2) == ord.tensor_moment(p.entries(), GG) / (gG * gG) - 1);
        }
    }
}

TEST_CASE("simulator") {
    // one state everywhere: nothing random
    Matrix one = Matrix::identity(1);
    FKModel single({{"x"}, {"x"}, {"x"}}, {1}, {one, one}, {{2}, {3}, {1}});
    auto t = simulate(single, 5, 1, 0, 2);
    for (auto& level : t.particles)
        for (int x : level) CHECK(x == 0);
    CHECK(Estimators<Rational>::mass(single, t, 2) == 6);

    auto m = random_model(7, {3, 2, 3});
    auto a = simulate(m, 6, 123, 9, 2), b = simulate(m, 6, 123, 9, 2), c = simulate(m, 6, 124, 9, 2);
    CHECK(a.particles == b.particles);
    CHECK(a.particles != c.particles);

    // G = 1: xi_n^1 has the Markov marginal
    auto mk = markov_model();
    auto fl = flow(mk);
    EstimatorSpec e;
    e.kind = EstimatorKind::Eta;
    e.level = 2;
    e.f = {1, 0};
    const long R = 100000;
    // a single particle per replica isolates xi^1
    auto s = summarize(replica_values(mk, 1, 2024, 2, R, e));
    const double p = fl.eta[2][0].get_d();
    CHECK(std::fabs(s.mean - p) <= 4 * std::sqrt(p * (1 - p) / R));
}

TEST_CASE("compensated summation") {
    CompensatedSum s;
    s.add(1e16);
    for (int i = 0; i < 10; ++i) s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 10.0);
}
