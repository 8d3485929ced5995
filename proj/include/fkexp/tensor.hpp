#pragma once

#include "fkexp/caps.hpp"
#include "fkexp/combinatorics.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace fkexp {

// Product of level state spaces.  Coordinate i lives in E_{levels[i]} of
// size sizes[i].  Coordinates are kept sorted by level; the flat index is
// row-major (first coordinate slowest).
struct Domain {
    std::vector<int> levels;
    std::vector<int> sizes;

    std::size_t arity() const { return levels.size(); }
    std::size_t volume() const;
    std::size_t index(const std::vector<int>& tuple) const;
    void decode(std::size_t idx, std::vector<int>& tuple) const;
    // maximal runs of equal level: (start, length)
    std::vector<std::pair<std::size_t, std::size_t>> blocks() const;

    bool operator==(const Domain&) const = default;
};

Domain single_time_domain(int level, int size, int q);
void check_volume(const Domain& d, const Caps& caps);

// dense rational matrix
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<Rational> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}
    static Matrix identity(std::size_t n);
    Rational& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const Rational& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    Matrix operator*(const Matrix& o) const;
    std::vector<Rational> apply(const std::vector<Rational>& f) const;      // K f
    std::vector<Rational> apply_left(const std::vector<Rational>& mu) const;  // mu K
    bool operator==(const Matrix&) const = default;
};

class TensorFunction;

class SignedMeasure {
public:
    SignedMeasure() = default;
    explicit SignedMeasure(Domain d);
    SignedMeasure(Domain d, std::vector<Rational> w);
    static SignedMeasure scalar(const Rational& mass);  // arity 0
    static SignedMeasure on_level(int level, std::vector<Rational> w);

    const Domain& domain() const { return d_; }
    const std::vector<Rational>& weights() const { return w_; }
    std::vector<Rational>& weights() { return w_; }
    std::size_t arity() const { return d_.arity(); }

    Rational total_mass() const;
    Rational tv_norm() const;
    Rational pair(const TensorFunction& F) const;
    bool is_zero() const;

    SignedMeasure tensor(const SignedMeasure& o, const Caps& caps = {}) const;
    // (mu D_b): new coordinate i takes old coordinate src[i]; `d` is the new domain
    SignedMeasure substitute(const std::vector<int>& src, const Domain& d) const;
    // apply kernel K (rows: old state, cols: new state) to coordinate i
    SignedMeasure apply_kernel(std::size_t coord, const Matrix& K, int new_level) const;
    // integrate coordinate i against g, removing it
    SignedMeasure contract(std::size_t coord, const std::vector<Rational>& g) const;
    // average over permutations inside each equal-level block
    SignedMeasure symmetrize() const;

    SignedMeasure operator+(const SignedMeasure& o) const;
    SignedMeasure operator-(const SignedMeasure& o) const;
    SignedMeasure operator*(const Rational& c) const;
    SignedMeasure& operator+=(const SignedMeasure& o);
    bool operator==(const SignedMeasure&) const = default;

private:
    Domain d_;
    std::vector<Rational> w_;
};

class TensorFunction {
public:
    TensorFunction() = default;
    explicit TensorFunction(Domain d);
    TensorFunction(Domain d, std::vector<Rational> v);
    static TensorFunction constant(Domain d, const Rational& c);
    // f_1 (x) ... (x) f_q, factor i on levels[i]
    static TensorFunction product(const std::vector<int>& levels,
                                  const std::vector<std::vector<Rational>>& factors);
    static TensorFunction from(Domain d, const std::function<Rational(const std::vector<int>&)>& fn);

    const Domain& domain() const { return d_; }
    const std::vector<Rational>& values() const { return v_; }
    std::vector<Rational>& values() { return v_; }
    std::size_t arity() const { return d_.arity(); }

    TensorFunction tensor(const TensorFunction& o, const Caps& caps = {}) const;
    // (D_b F)(x) = F(x_{b(1)}, ...): coordinate i of F is fed x[src[i]]; `d` is the new domain
    TensorFunction substitute(const std::vector<int>& src, const Domain& d) const;
    // (K F) on coordinate i: sum_y K(x_i, y) F(.., y, ..)
    TensorFunction apply_kernel(std::size_t coord, const Matrix& K, int new_level) const;
    TensorFunction symmetrize() const;
    bool is_symmetric() const;
    Rational sup_norm() const;

    TensorFunction operator+(const TensorFunction& o) const;
    TensorFunction operator-(const TensorFunction& o) const;
    TensorFunction operator*(const Rational& c) const;
    bool operator==(const TensorFunction&) const = default;

private:
    Domain d_;
    std::vector<Rational> v_;
};

}  // namespace fkexp
