#include "fkexp/particle.hpp"

#include "fkexp/fk_core.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

namespace fkexp {

Rational ConfigDistribution::total() const {
    Rational s = 0;
    for (auto& [c, p] : probs) s += p;
    return s;
}

std::vector<std::vector<int>> all_configs(int N, int states, const Caps& caps) {
    const BigInt predicted = binomial(N + states - 1, N);
    if (predicted > BigInt(static_cast<unsigned long>(caps.configs)))
        throw CapExceeded("particle configurations", predicted.get_str(), caps.configs);
    std::vector<std::vector<int>> out;
    std::vector<int> c(static_cast<std::size_t>(states), 0);
    std::function<void(int, int)> go = [&](int i, int left) {
        if (i == states - 1) {
            c[i] = left;
            out.push_back(c);
            return;
        }
        for (int v = left; v >= 0; --v) {
            c[i] = v;
            go(i + 1, left - v);
        }
    };
    go(0, N);
    return out;
}

namespace {

Rational power(const Rational& x, long e) {
    Rational r = 1;
    for (long i = 0; i < e; ++i) r *= x;
    return r;
}

// probability of counts y under multinomial(N, pi)
Rational multinomial(const std::vector<int>& y, const std::vector<Rational>& pi, int N) {
    BigInt coef = factorial(N);
    Rational p = 1;
    for (std::size_t j = 0; j < y.size(); ++j) {
        coef /= factorial(y[j]);
        if (y[j] > 0) p *= power(pi[j], y[j]);
    }
    return p * Rational(coef);
}

// eta^N(g) for counts c
Rational occupation(const std::vector<int>& c, const std::vector<Rational>& g, int N) {
    Rational s = 0;
    for (std::size_t j = 0; j < c.size(); ++j) s += g[j] * c[j];
    s /= N;
    return s;
}

// Phi_k(m(x)) for counts x at level k-1
std::vector<Rational> selection_mutation(const FKModel& m, int k, const std::vector<int>& x) {
    const auto& G = m.G(k - 1);
    const Matrix& M = m.M(k);
    std::vector<Rational> w(x.size());
    Rational z = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        w[i] = G[i] * x[i];
        z += w[i];
    }
    for (auto& v : w) v /= z;
    return M.apply_left(w);
}

// weights over y in E^q of a block evaluated on counts c: prod c_{y_i}/N,
// or prod_j (c_j)_{mult_j(y)} / (N)_q for injective tuples
std::vector<Rational> block_weights(const std::vector<int>& c, int N, const Domain& d, bool dot) {
    std::vector<Rational> out(d.volume());
    std::vector<int> y;
    const Rational denom = dot ? Rational(falling_factorial(BigInt(N), static_cast<long>(d.arity())))
                               : Rational(1);
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        d.decode(idx, y);
        if (dot) {
            std::vector<int> mult(c.size(), 0);
            for (int v : y) ++mult[v];
            BigInt w = 1;
            for (std::size_t j = 0; j < c.size(); ++j) w *= falling_factorial(BigInt(c[j]), mult[j]);
            out[idx] = Rational(w) / denom;
        } else {
            Rational w = 1;
            for (int v : y) w *= Rational(c[v], N);
            w.canonicalize();
            out[idx] = w;
        }
    }
    return out;
}

}  // namespace

ConfigOracle::ConfigOracle(const FKModel& m, int N, int horizon, const Caps& caps)
    : m_(&m), N_(N), horizon_(horizon), caps_(caps) {
    if (N < 1) throw std::invalid_argument("particle oracle needs N >= 1");
    if (horizon < 0 || horizon > m.horizon()) throw std::invalid_argument("horizon outside the model");
    for (int k = 0; k <= horizon; ++k) configs_.push_back(all_configs(N, m.size(k), caps));
    trans_.resize(static_cast<std::size_t>(horizon + 1));
    for (int k = 1; k <= horizon; ++k) {
        auto& tk = trans_[k];
        tk.resize(configs_[k - 1].size());
        for (std::size_t i = 0; i < configs_[k - 1].size(); ++i) {
            const auto pi = selection_mutation(m, k, configs_[k - 1][i]);
            for (std::size_t j = 0; j < configs_[k].size(); ++j) {
                Rational p = multinomial(configs_[k][j], pi, N);
                if (p != 0) tk[i].push_back({j, p});
            }
        }
    }
    std::vector<Rational> law(configs_[0].size());
    for (std::size_t j = 0; j < law.size(); ++j) law[j] = multinomial(configs_[0][j], m.eta0(), N);
    for (int k = 0; k <= horizon; ++k) {
        if (k > 0) {
            std::vector<Rational> next(configs_[k].size());
            for (std::size_t i = 0; i < law.size(); ++i)
                for (auto& [j, p] : trans_[k][i]) next[j] += law[i] * p;
            law = std::move(next);
        }
        ConfigDistribution cd;
        cd.level = k;
        for (std::size_t j = 0; j < law.size(); ++j)
            if (law[j] != 0) cd.probs[configs_[k][j]] = law[j];
        dist_.push_back(std::move(cd));
    }
}

Rational ConfigOracle::moment(const MultiIndex& q, const TensorFunction& F, bool with_mass, Kind last) const {
    const int n = static_cast<int>(q.size()) - 1;
    if (n < 0 || n > horizon_) throw std::invalid_argument("moment: profile outside the oracle horizon");
    if (F.domain() != path_domain(*m_, q)) throw std::invalid_argument("moment: F does not live on the path domain");
    if (last == Kind::Dot && q[n] > N_) throw std::invalid_argument("moment: q > N for the restricted product");
    const auto tail = path_tail(q);  // tail[k+1] = q'_k

    // W[config][prefix tuple index]
    std::vector<std::vector<Rational>> W(configs_[0].size(), std::vector<Rational>(1));
    for (std::size_t j = 0; j < configs_[0].size(); ++j) W[j][0] = multinomial(configs_[0][j], m_->eta0(), N_);
    std::size_t prefix = 1;
    Rational result = 0;
    for (int k = 0; k <= n; ++k) {
        if (k > 0) {
            std::vector<std::vector<Rational>> next(configs_[k].size(), std::vector<Rational>(prefix));
            for (std::size_t i = 0; i < W.size(); ++i)
                for (auto& [j, p] : trans_[k][i])
                    for (std::size_t t = 0; t < prefix; ++t)
                        if (W[i][t] != 0) next[j][t] += W[i][t] * p;
            W = std::move(next);
        }
        const Domain block = single_time_domain(k, m_->size(k), q[k]);
        const std::size_t bv = block.volume();
        if (static_cast<std::uint64_t>(prefix) * bv * W.size() > caps_.tensor)
            throw CapExceeded("oracle accumulator entries", std::to_string(prefix * bv * W.size()), caps_.tensor);
        std::vector<std::vector<Rational>> grown(W.size(), std::vector<Rational>(prefix * bv));
        for (std::size_t i = 0; i < W.size(); ++i) {
            const auto& c = configs_[k][i];
            auto bw = block_weights(c, N_, block, k == n && last == Kind::Dot);
            if (with_mass && k < n) {
                const Rational g = power(occupation(c, m_->G(k), N_), tail[k + 1]);
                for (auto& v : bw) v *= g;
            }
            for (std::size_t t = 0; t < prefix; ++t) {
                if (W[i][t] == 0) continue;
                for (std::size_t y = 0; y < bv; ++y)
                    if (bw[y] != 0) grown[i][t * bv + y] = W[i][t] * bw[y];
            }
        }
        W = std::move(grown);
        prefix *= bv;
    }
    for (auto& row : W)
        for (std::size_t t = 0; t < prefix; ++t)
            if (row[t] != 0) result += row[t] * F.values()[t];
    return result;
}

Rational ConfigOracle::gamma_moment(const MultiIndex& q, const TensorFunction& F) const {
    return moment(q, F, true, Kind::Tensor);
}
Rational ConfigOracle::eta_moment(const MultiIndex& q, const TensorFunction& F) const {
    return moment(q, F, false, Kind::Tensor);
}
Rational ConfigOracle::eta_dot_moment(int n, const TensorFunction& F) const {
    MultiIndex q = MultiIndex::zeros(static_cast<std::size_t>(n + 1));
    q.set(n, static_cast<int>(F.arity()));
    return moment(q, F, false, Kind::Dot);
}
Rational ConfigOracle::gamma_dot_moment(int n, const TensorFunction& F) const {
    MultiIndex q = MultiIndex::zeros(static_cast<std::size_t>(n + 1));
    q.set(n, static_cast<int>(F.arity()));
    return moment(q, F, true, Kind::Dot);
}

Rational ConfigOracle::centered_moment(int n, int q) const {
    const Flow fl = flow(*m_);
    Rational gG = 0;  // gamma_n(G_n)
    for (int x = 0; x < m_->size(n); ++x) gG += fl.gamma[n][x] * m_->G(n)[x];
    Rational out = 0;
    for (int j = 0; j <= q; ++j) {
        MultiIndex p = MultiIndex::zeros(static_cast<std::size_t>(n + 1));
        p.set(n, j);
        std::vector<std::vector<Rational>> factors(static_cast<std::size_t>(j), m_->G(n));
        std::vector<int> levels(static_cast<std::size_t>(j), n);
        const TensorFunction Gj = j ? TensorFunction::product(levels, factors)
                                    : TensorFunction::constant(path_domain(*m_, p), 1);
        Rational term = gamma_moment(p, Gj) / power(gG, j) * Rational(binomial(q, j));
        out += (j % 2) ? Rational(-term) : term;
    }
    return out;
}

std::vector<ConfigDistribution> exact_config_distribution(const FKModel& m, int N, int horizon,
                                                          const Caps& caps) {
    return ConfigOracle(m, N, horizon, caps).distributions();
}

Rational exact_QN_oracle(const FKModel& m, int N, int n, int q, const TensorFunction& F, const Caps& caps) {
    MultiIndex p = MultiIndex::zeros(static_cast<std::size_t>(n + 1));
    p.set(n, q);
    return ConfigOracle(m, N, n, caps).gamma_moment(p, F);
}
Rational exact_path_QN_oracle(const FKModel& m, int N, const MultiIndex& q, const TensorFunction& F,
                              const Caps& caps) {
    return ConfigOracle(m, N, static_cast<int>(q.size()) - 1, caps).gamma_moment(q, F);
}
Rational exact_PN_oracle(const FKModel& m, int N, int n, int q, const TensorFunction& F, const Caps& caps) {
    if (static_cast<int>(F.arity()) != q) throw std::invalid_argument("exact_PN_oracle: F arity differs from q");
    return ConfigOracle(m, N, n, caps).eta_dot_moment(n, F);
}

// ---- simulator --------------------------------------------------------------------------

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t draw(const std::vector<double>& cumulative, std::mt19937_64& rng) {
    const double u = uniform01(rng) * cumulative.back();
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (u < cumulative[mid]) hi = mid;
        else lo = mid + 1;
    }
    return lo;
}

std::vector<double> cumulate(const std::vector<Rational>& w) {
    std::vector<double> c(w.size());
    double s = 0;
    for (std::size_t i = 0; i < w.size(); ++i) c[i] = (s += w[i].get_d());
    return c;
}

}  // namespace

Trajectory simulate(const FKModel& m, int N, std::uint64_t seed, std::uint64_t replica, int horizon) {
    if (N < 1) throw std::invalid_argument("simulate needs N >= 1");
    if (horizon < 0 || horizon > m.horizon()) throw std::invalid_argument("horizon outside the model");
    std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32)};
    std::mt19937_64 rng(ss);
    Trajectory t;
    t.N = N;
    const auto init = cumulate(m.eta0());
    std::vector<int> cur(static_cast<std::size_t>(N));
    for (auto& x : cur) x = static_cast<int>(draw(init, rng));
    t.particles.push_back(cur);
    for (int k = 1; k <= horizon; ++k) {
        std::vector<std::vector<double>> rows;
        const Matrix& M = m.M(k);
        for (std::size_t i = 0; i < M.rows; ++i)
            rows.push_back(cumulate(std::vector<Rational>(M.a.begin() + i * M.cols, M.a.begin() + (i + 1) * M.cols)));
        std::vector<Rational> gw(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) gw[i] = m.G(k - 1)[cur[i]];
        const auto sel = cumulate(gw);
        std::vector<int> next(static_cast<std::size_t>(N));
        for (auto& y : next) {
            const std::size_t parent = draw(sel, rng);
            y = static_cast<int>(draw(rows[cur[parent]], rng));
        }
        cur = std::move(next);
        t.particles.push_back(cur);
    }
    return t;
}

// ---- estimators ---------------------------------------------------------------------------

namespace {

template <class T>
T conv(const Rational& x) {
    if constexpr (std::is_same_v<T, double>) return x.get_d();
    else return x;
}

template <class T>
std::vector<int> counts_of(const Trajectory& t, int n, int states) {
    std::vector<int> c(static_cast<std::size_t>(states), 0);
    for (int x : t.particles.at(n)) ++c.at(x);
    return c;
}

template <class T>
T block_pair(const Trajectory& t, int n, const TensorFunction& F, bool dot) {
    const Domain& d = F.domain();
    if (d.arity() == 0) return conv<T>(F.values().at(0));
    if (d.blocks().size() > 1 || (d.arity() && d.levels[0] != n))
        throw std::invalid_argument("estimator: F must live on E_n^q");
    if (dot && static_cast<int>(d.arity()) > t.N) throw std::invalid_argument("estimator: q > N for the restricted product");
    const int states = d.arity() ? d.sizes[0] : 1;
    const auto c = counts_of<T>(t, n, states);
    const auto w = block_weights(c, t.N, d, dot);
    T s = T(0);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] != 0) s += conv<T>(w[i]) * conv<T>(F.values()[i]);
    return s;
}

}  // namespace

template <class T>
T Estimators<T>::mass(const FKModel& m, const Trajectory& t, int n) {
    T p = T(1);
    for (int k = 0; k < n; ++k) p *= eta(m, t, k, m.G(k));
    return p;
}
template <class T>
T Estimators<T>::eta(const FKModel&, const Trajectory& t, int n, const std::vector<Rational>& f) {
    T s = T(0);
    for (int x : t.particles.at(n)) s += conv<T>(f.at(x));
    return s / T(t.N);
}
template <class T>
T Estimators<T>::gamma(const FKModel& m, const Trajectory& t, int n, const std::vector<Rational>& f) {
    return eta(m, t, n, f) * mass(m, t, n);
}
template <class T>
T Estimators<T>::eta_tensor(const Trajectory& t, int n, const TensorFunction& F) {
    return block_pair<T>(t, n, F, false);
}
template <class T>
T Estimators<T>::eta_dot(const Trajectory& t, int n, const TensorFunction& F) {
    return block_pair<T>(t, n, F, true);
}
template <class T>
T Estimators<T>::gamma_tensor(const FKModel& m, const Trajectory& t, int n, const TensorFunction& F) {
    T g = mass(m, t, n), p = T(1);
    for (std::size_t i = 0; i < F.arity(); ++i) p *= g;
    return p * eta_tensor(t, n, F);
}
template <class T>
T Estimators<T>::gamma_dot(const FKModel& m, const Trajectory& t, int n, const TensorFunction& F) {
    T g = mass(m, t, n), p = T(1);
    for (std::size_t i = 0; i < F.arity(); ++i) p *= g;
    return p * eta_dot(t, n, F);
}

template struct Estimators<Rational>;
template struct Estimators<double>;

EstimatorKind parse_estimator(const std::string& s) {
    if (s == "gamma") return EstimatorKind::Gamma;
    if (s == "eta") return EstimatorKind::Eta;
    if (s == "tensor-q" || s == "tensor") return EstimatorKind::Tensor;
    if (s == "dot-q" || s == "dot") return EstimatorKind::Dot;
    throw std::invalid_argument("unknown estimator '" + s + "' (gamma|eta|tensor-q|dot-q)");
}

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Gamma: return "gamma";
        case EstimatorKind::Eta: return "eta";
        case EstimatorKind::Tensor: return "tensor-q";
        case EstimatorKind::Dot: return "dot-q";
    }
    return "?";
}

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
}

double evaluate(const FKModel& m, const Trajectory& t, const EstimatorSpec& e) {
    using E = Estimators<double>;
    switch (e.kind) {
        case EstimatorKind::Gamma: return E::gamma(m, t, e.level, e.f);
        case EstimatorKind::Eta: return E::eta(m, t, e.level, e.f);
        case EstimatorKind::Tensor:
            return e.unnormalized ? E::gamma_tensor(m, t, e.level, e.F) : E::eta_tensor(t, e.level, e.F);
        case EstimatorKind::Dot:
            return e.unnormalized ? E::gamma_dot(m, t, e.level, e.F) : E::eta_dot(t, e.level, e.F);
    }
    return 0;
}

std::vector<double> replica_values(const FKModel& m, int N, std::uint64_t seed, int horizon, long replicas,
                                   const EstimatorSpec& e) {
    std::vector<double> out(static_cast<std::size_t>(replicas));
    for (long r = 0; r < replicas; ++r)
        out[r] = evaluate(m, simulate(m, N, seed, static_cast<std::uint64_t>(r), horizon), e);
    return out;
}

MonteCarloSummary summarize(const std::vector<double>& values) {
    MonteCarloSummary s;
    s.replicas = static_cast<long>(values.size());
    if (values.empty()) return s;
    CompensatedSum sum;
    for (double v : values) sum.add(v);
    s.mean = sum.value() / static_cast<double>(values.size());
    CompensatedSum sq;
    for (double v : values) sq.add((v - s.mean) * (v - s.mean));
    s.variance = values.size() > 1 ? sq.value() / static_cast<double>(values.size() - 1) : 0.0;
    s.std_error = std::sqrt(s.variance / static_cast<double>(values.size()));
    return s;
}

}  // namespace fkexp
