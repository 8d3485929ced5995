#pragma once

#include "fkexp/caps.hpp"
#include "fkexp/combinatorics.hpp"
#include "fkexp/model.hpp"
#include "fkexp/tensor.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fkexp {

// occupation counts of an unordered particle population at one level
struct ParticleConfig {
    std::vector<int> counts;
    int N = 0;
    auto operator<=>(const ParticleConfig&) const = default;
};

struct ConfigDistribution {
    int level = 0;
    std::map<std::vector<int>, Rational> probs;
    Rational total() const;
};

// all configurations of N particles over `states` states, lexicographic
std::vector<std::vector<int>> all_configs(int N, int states, const Caps& caps = {});

// multinomial(N, eta_0) at level 0, then for each level the mixture over x of
// multinomial(N, Phi_{k+1}(m(x)))
std::vector<ConfigDistribution> exact_config_distribution(const FKModel& m, int N, int horizon,
                                                          const Caps& caps = {});

// Expectations of occupation-measure functionals under the exact particle law.
class ConfigOracle {
public:
    ConfigOracle(const FKModel& m, int N, int horizon, const Caps& caps = {});

    int N() const { return N_; }
    const std::vector<ConfigDistribution>& distributions() const { return dist_; }

    // E( (x)_k (gamma_k^N)^{(x) q_k} (F) ), F on the path domain of q
    Rational gamma_moment(const MultiIndex& q, const TensorFunction& F) const;
    // same with eta_k^N
    Rational eta_moment(const MultiIndex& q, const TensorFunction& F) const;
    // E((eta_n^N)^{(.)q}(F)) = law of the first q particles
    Rational eta_dot_moment(int n, const TensorFunction& F) const;
    // E((gamma_n^N)^{(.)q}(F))
    Rational gamma_dot_moment(int n, const TensorFunction& F) const;
    // E((1 - gamma_n^N(G_n)/gamma_n(G_n))^q)
    Rational centered_moment(int n, int q) const;

private:
    enum class Kind { Tensor, Dot };
    Rational moment(const MultiIndex& q, const TensorFunction& F, bool with_mass, Kind last) const;

    const FKModel* m_;
    int N_;
    int horizon_;
    Caps caps_;
    std::vector<std::vector<std::vector<int>>> configs_;  // per level
    std::vector<ConfigDistribution> dist_;
    // trans_[k][i] : configs at level k-1 -> (config index at level k, probability)
    std::vector<std::vector<std::vector<std::pair<std::size_t, Rational>>>> trans_;
};

Rational exact_QN_oracle(const FKModel& m, int N, int n, int q, const TensorFunction& F,
                         const Caps& caps = {});
Rational exact_path_QN_oracle(const FKModel& m, int N, const MultiIndex& q, const TensorFunction& F,
                              const Caps& caps = {});
Rational exact_PN_oracle(const FKModel& m, int N, int n, int q, const TensorFunction& F,
                         const Caps& caps = {});

// ---- samples and estimators --------------------------------------------------------------

// particles[k][i] = state index of particle i at level k
struct Trajectory {
    int N = 0;
    std::vector<std::vector<int>> particles;
};

// Replica r of the seeded simulator.  The stream for (seed, r) is
// mt19937_64 seeded through seed_seq{lo(seed), hi(seed), lo(r), hi(r)}.
Trajectory simulate(const FKModel& m, int N, std::uint64_t seed, std::uint64_t replica, int horizon);

template <class T>
struct Estimators {
    static T gamma(const FKModel& m, const Trajectory& t, int n, const std::vector<Rational>& f);
    static T eta(const FKModel& m, const Trajectory& t, int n, const std::vector<Rational>& f);
    static T mass(const FKModel& m, const Trajectory& t, int n);  // gamma_n^N(1)
    // (eta_n^N)^{(x)q}(F), (eta_n^N)^{(.)q}(F) and the gamma versions
    static T eta_tensor(const Trajectory& t, int n, const TensorFunction& F);
    static T eta_dot(const Trajectory& t, int n, const TensorFunction& F);
    static T gamma_tensor(const FKModel& m, const Trajectory& t, int n, const TensorFunction& F);
    static T gamma_dot(const FKModel& m, const Trajectory& t, int n, const TensorFunction& F);
};
extern template struct Estimators<Rational>;
extern template struct Estimators<double>;

enum class EstimatorKind { Gamma, Eta, Tensor, Dot };
EstimatorKind parse_estimator(const std::string& s);
std::string to_string(EstimatorKind k);

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::Gamma;
    int level = 0;
    std::vector<Rational> f;  // Gamma, Eta
    TensorFunction F;         // Tensor, Dot (unnormalized gamma version when `unnormalized`)
    bool unnormalized = false;
};

struct MonteCarloSummary {
    long replicas = 0;
    double mean = 0;
    double variance = 0;  // sample variance
    double std_error = 0;
};

// Neumaier-compensated running sums
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0, comp_ = 0;
};

double evaluate(const FKModel& m, const Trajectory& t, const EstimatorSpec& e);
std::vector<double> replica_values(const FKModel& m, int N, std::uint64_t seed, int horizon,
                                   long replicas, const EstimatorSpec& e);
MonteCarloSummary summarize(const std::vector<double>& values);

}  // namespace fkexp
