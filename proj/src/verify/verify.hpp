#pragma once

#include "fkexp/caps.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fkexp::verify {

struct CheckResult {
    int id = 0;
    std::string name;
    std::string title;
    bool identities_ok = false;
    double seconds = 0;
    double budget = 0;  // seconds
    long checks = 0;    // individual comparisons made
    std::string expected;
    std::string actual;
    std::string first_failure;  // minimal reproducer description, empty when fine
    bool pass() const { return identities_ok && seconds <= budget; }
};

struct Criterion {
    int id;
    std::string name;
    std::vector<std::string> tags;
    std::string title;
    double budget;
};

const std::vector<Criterion>& criteria();

// names, ids ("4") or tags ("combinatorics", "stirling"); empty selects all
std::vector<Criterion> select(const std::vector<std::string>& only);

CheckResult run(const Criterion& c, const Caps& caps = {});

// runs the selection, calling `progress` after each criterion
std::vector<CheckResult> run_all(const std::vector<Criterion>& sel, const Caps& caps = {},
                                 const std::function<void(const CheckResult&)>& progress = {});

}  // namespace fkexp::verify
