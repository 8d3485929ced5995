#pragma once

#include "fkexp/fk_core.hpp"
#include "fkexp/model.hpp"

#include <random>

namespace testutil {

using namespace fkexp;

inline Rational small_rational(std::mt19937_64& rng) {
    Rational r(static_cast<long>(rng() % 9) - 4, 1 + static_cast<long>(rng() % 3));
    r.canonicalize();
    return r;
}

inline TensorFunction random_function(const Domain& d, std::mt19937_64& rng) {
    TensorFunction F(d);
    for (auto& v : F.values()) v = small_rational(rng);
    return F;
}

inline std::vector<Rational> random_vector(int size, std::mt19937_64& rng) {
    std::vector<Rational> v;
    for (int i = 0; i < size; ++i) v.push_back(small_rational(rng));
    return v;
}

inline std::vector<int> random_perm(int q, std::mt19937_64& rng) {
    std::vector<int> p(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) p[i] = i + 1;
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

}  // namespace testutil
