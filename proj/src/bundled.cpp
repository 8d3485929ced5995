#include "fkexp/bundled.hpp"

namespace fkexp {

FKModel bundled_model(const std::string& name) {
    for (const auto& b : bundled_models())
        if (b.name == name) return FKModel::from_json(b.json);
    std::string known;
    for (const auto& b : bundled_models()) known += (known.empty() ? "" : ", ") + b.name;
    throw ModelError("unknown bundled model '" + name + "' (known: " + known + ")");
}

}  // namespace fkexp
