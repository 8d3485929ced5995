#pragma once

// Independent reference computations used only by the test suites and the
// acceptance checks.  Nothing here shares code paths with the expansion
// engine beyond the model and tensor containers.

#include "fkexp/model.hpp"
#include "fkexp/tensor.hpp"

#include <utility>
#include <vector>

namespace fkexp::oracle {

// gamma_n by summing over every path x_0..x_n
std::vector<Rational> path_sum_gamma(const FKModel& m, int n);

// set partitions of [q] as block labels (restricted growth strings)
std::vector<std::vector<int>> set_partitions(int q);
// partitions of [q] into pairs (0-based)
std::vector<std::vector<std::pair<int, int>>> pair_partitions(int q);

// Cov(V_n(phi), V_m(psi)) = sum_{k <= min(n,m)} gamma_k(1) gamma_k(Q_{k,n}phi Q_{k,m}psi)
Rational gaussian_cov(const FKModel& m, int n, const std::vector<Rational>& phi, int l,
                      const std::vector<Rational>& psi);
// E(prod_i V_{levels[i]}(phi_i)) by the Wick pairing sum
Rational gaussian_moment(const FKModel& m, const std::vector<int>& levels,
                         const std::vector<std::vector<Rational>>& phis);

// E((gamma_0^N)^{(x)q}(F)) for i.i.d. eta_0 particles, by set partitions of the index tuple
Rational iid_tensor_moment(const FKModel& m, long N, const TensorFunction& F);

// Exact law of the ordered particle system (every particle labelled), run
// forward over E_k^N.  Supports product-over-levels occupation moments for
// any F on a path domain.
class OrderedSystem {
public:
    OrderedSystem(const FKModel& m, int N, int horizon, std::size_t cap = 200000);

    // E( (x)_k (gamma_k^N)^{(x) q_k} (F) ) where F lives on the path domain of q
    Rational tensor_moment(const std::vector<int>& q, const TensorFunction& F) const;
    // same with eta_k^N in place of gamma_k^N
    Rational eta_tensor_moment(const std::vector<int>& q, const TensorFunction& F) const;
    // E(F(xi_n^1, ..., xi_n^q)) for F on E_n^q
    Rational first_particles(int n, const TensorFunction& F) const;
    // E((gamma_n^N)^{(.)q}(F)) with injective index tuples
    Rational gamma_dot_moment(int n, const TensorFunction& F) const;

private:
    Rational moment(const std::vector<int>& q, const TensorFunction& F, bool with_mass) const;

    const FKModel* m_;
    int N_;
    int horizon_;
    // law_[k][tuple index] for ordered tuples at level k
    std::vector<std::vector<Rational>> law_;
    // transition weights between ordered tuples, trans_[k] : level k-1 -> k
    std::vector<std::vector<std::vector<std::pair<std::size_t, Rational>>>> trans_;
};

}  // namespace fkexp::oracle
