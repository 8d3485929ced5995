#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fkexp {

// Size limits.  Every enumeration or dense table checks its predicted
// size against these before allocating anything.
struct Caps {
    std::uint64_t forests = 100000;    // forests per enumeration
    std::uint64_t tensor = 1000000;    // entries of a dense table
    std::uint64_t group = 1000000;     // elements of a brute-force group
    std::uint64_t configs = 100000;    // particle configurations per level
};

// Structured refusal: carries the quantity, the predicted size (as a
// decimal string, it can be huge) and the limit in force.
class CapExceeded : public std::runtime_error {
public:
    CapExceeded(std::string quantity, std::string predicted, std::uint64_t limit)
        : std::runtime_error("cap exceeded: " + quantity + " predicted " + predicted +
                             " > limit " + std::to_string(limit)),
          quantity_(std::move(quantity)),
          predicted_(std::move(predicted)),
          limit_(limit) {}

    const std::string& quantity() const { return quantity_; }
    const std::string& predicted() const { return predicted_; }
    std::uint64_t limit() const { return limit_; }

private:
    std::string quantity_;
    std::string predicted_;
    std::uint64_t limit_;
};

}  // namespace fkexp
