#pragma once

#include "fkexp/caps.hpp"
#include "fkexp/colored_forest.hpp"
#include "fkexp/forest.hpp"
#include "fkexp/model.hpp"
#include "fkexp/tensor.hpp"

#include <utility>
#include <vector>

namespace fkexp {

struct Flow {
    std::vector<std::vector<Rational>> gamma;  // gamma_k on E_k
    std::vector<std::vector<Rational>> eta;    // eta_k = gamma_k / gamma_k(1)
    std::vector<Rational> mass;                // gamma_k(1)
};

Flow flow(const FKModel& m);
Matrix q_operator(const FKModel& m, int k);      // Q_k, 1 <= k <= horizon
Matrix semigroup(const FKModel& m, int k, int n);  // Q_{k,n} = Q_{k+1} ... Q_n

// ---- selection maps --------------------------------------------------------------

using Map = std::vector<int>;  // b : [q] -> [q], 1-based values

// (ab)(i) = a(b(i)), so that D_a D_b = D_{ab}
Map compose(const Map& a, const Map& b);
std::vector<Map> all_maps(int q);
int image_size(const Map& a);

struct WeightedMaps {
    int q = 0;
    std::vector<std::pair<Map, Rational>> terms;
};

// (D_b F)(x^1..x^q) = F(x^{b(1)}, ..., x^{b(q)}) on a single-time domain
TensorFunction d_map(const Map& b, const TensorFunction& F);
TensorFunction d_map(const WeightedMaps& L, const TensorFunction& F);
// mu D_b, the adjoint pushforward
SignedMeasure d_map(const SignedMeasure& mu, const Map& b);
SignedMeasure d_map(const SignedMeasure& mu, const WeightedMaps& L);

// L_q^N = N^{-q} sum_a (N)_{|a|}/(q)_{|a|} a
WeightedMaps lq_operator(int q, const BigInt& N);
// d^k L_q = sum_a s(|a|, q-k)/(q)_{|a|} a
WeightedMaps lq_derivative(int q, int k);

// ---- forest measures --------------------------------------------------------------

// eta_0^{(x)p_0} D_{a_0} Q_1 D_{a_1} ... Q_n D_{a_n}, unsymmetrized, for any profile p
SignedMeasure delta_mapseq(const FKModel& m, const MapSeq& a, const Caps& caps = {});
// the planar representative's measure, symmetrized; f must have profile (q,...,q) over n+2 levels
SignedMeasure delta_forest(const FKModel& m, const Forest& f, int n, int q, const Caps& caps = {});

SignedMeasure gamma_tensor(const FKModel& m, int n, int q);
SignedMeasure eta_tensor(const FKModel& m, int n, int q);

// ---- path space ---------------------------------------------------------------------

// E_p^q = E_0^{q_0} x ... x E_{p-1}^{q_{p-1}} x E_p^{q_p + q'_p}; p = horizon of q gives E_n^q
Domain path_domain(const FKModel& m, const MultiIndex& q, int p);
Domain path_domain(const FKModel& m, const MultiIndex& q);
// gamma_p^q on E_p^q
SignedMeasure path_gamma(const FKModel& m, const MultiIndex& q, int p, const Caps& caps = {});
SignedMeasure path_gamma(const FKModel& m, const MultiIndex& q, const Caps& caps = {});
// mu Q^q_p : E_{p-1}^q -> E_p^q
SignedMeasure path_step(const FKModel& m, const MultiIndex& q, int p, const SignedMeasure& mu);
// mu Q^q_{p1,p2}
SignedMeasure path_semigroup(const FKModel& m, const MultiIndex& q, int p1, int p2, SignedMeasure mu);
// Q^q_{p1,p2} F for F on E_{p2}^q
TensorFunction path_semigroup(const FKModel& m, const MultiIndex& q, int p1, int p2, TensorFunction F);

// eta_0^{(x)|q|} D_0 Q_1 D_1 ... Q_n D_n, unsymmetrized; profile must be path_profile(q)
SignedMeasure delta_colored(const FKModel& m, const ColoredMapSeq& a, const MultiIndex& q,
                            const Caps& caps = {});
// planar representative, symmetrized within level blocks
SignedMeasure delta_colored(const FKModel& m, const ColoredForest& f, const MultiIndex& q,
                            const Caps& caps = {});

// ---- centering --------------------------------------------------------------------------

// symmetrize within level blocks, then project every coordinate onto the
// eta-centered functions of its level
TensorFunction center_function(const FKModel& m, const TensorFunction& F);
// per coordinate: max_x |int F(x) eta_{level}(dx_i)|
std::vector<Rational> centering_residuals(const FKModel& m, const TensorFunction& F);
bool is_centered(const FKModel& m, const TensorFunction& F);

}  // namespace fkexp
