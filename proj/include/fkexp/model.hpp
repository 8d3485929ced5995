#pragma once

#include "fkexp/combinatorics.hpp"
#include "fkexp/tensor.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fkexp {

enum class Field { Rational, Float };

std::string to_string(Field f);
Field parse_field(const std::string& s);

// Finite-state Feynman-Kac model on levels 0..horizon.  M[k] is the
// transition E_{k-1} -> E_k for k = 1..horizon (M[0] is unused), G[k] the
// potential on E_k for k = 0..horizon.  Tables are exact rationals in both
// field modes; the float mode only relaxes validation and is meant for the
// simulator.
class FKModel {
public:
    FKModel() = default;
    FKModel(std::vector<std::vector<std::string>> states, std::vector<Rational> eta0,
            std::vector<Matrix> M, std::vector<std::vector<Rational>> G,
            Field field = Field::Rational);

    int horizon() const { return static_cast<int>(states_.size()) - 1; }
    int size(int k) const { return static_cast<int>(states_.at(k).size()); }
    const std::vector<std::vector<std::string>>& states() const { return states_; }
    const std::vector<Rational>& eta0() const { return eta0_; }
    const Matrix& M(int k) const;
    const std::vector<Rational>& G(int k) const;
    Field field() const { return field_; }

    // Q_k(x, y) = G_{k-1}(x) M_k(x, y), k = 1..horizon
    Matrix Q(int k) const;

    // same model, levels 0..n only
    FKModel truncated(int n) const;

    std::string to_json() const;
    static FKModel from_json(const std::string& text);
    static FKModel load(const std::string& path);

private:
    void validate() const;

    std::vector<std::vector<std::string>> states_;
    std::vector<Rational> eta0_;
    std::vector<Matrix> M_;  // index 1..horizon
    std::vector<std::vector<Rational>> G_;
    Field field_ = Field::Rational;
};

// Random rational model with the given state-space sizes per level.
// Entries have small denominators so exact arithmetic stays cheap.
FKModel random_model(std::uint64_t seed, const std::vector<int>& sizes);

// Validation failures in a model file.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace fkexp
