#pragma once

#include "fkexp/model.hpp"

#include <string>
#include <vector>

namespace fkexp {

struct BundledModel {
    std::string name;
    std::string json;
};

// models/*.json, embedded at configure time, sorted by name
const std::vector<BundledModel>& bundled_models();
// throws ModelError for unknown names
FKModel bundled_model(const std::string& name);

}  // namespace fkexp
