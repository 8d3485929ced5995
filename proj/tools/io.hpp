#pragma once

#include "fkexp/caps.hpp"
#include "fkexp/combinatorics.hpp"
#include "fkexp/model.hpp"
#include "fkexp/tensor.hpp"

#include <json.hpp>

#include <map>
#include <string>

namespace fkcli {

using nlohmann::ordered_json;
using fkexp::Rational;

constexpr const char* kVersion = "0.1.0";

struct Globals {
    std::string field;  // empty: keep the model's own field
    fkexp::Caps caps;
    std::uint64_t seed = 1;
    std::string out;  // empty: stdout
    std::string format;  // empty: per-command default
};

// rational mode: "num/den" strings; float mode: JSON numbers
struct NumberWriter {
    fkexp::Field field = fkexp::Field::Rational;
    ordered_json operator()(const Rational& x) const;
};

struct LoadedModel {
    fkexp::FKModel model;
    std::string source;  // path or bundled:<name>
    std::string hash;    // FNV-1a 64 of the canonical model JSON, hex
};

// a path to a model file, or the name of a bundled model (optionally "bundled:name")
LoadedModel load_model(const std::string& spec, const std::string& field_override);

std::string fnv1a_hex(const std::string& text);

ordered_json manifest(const std::string& command, const std::map<std::string, std::string>& params,
                      const Globals& g, const LoadedModel* model, fkexp::Field field);

ordered_json domain_json(const fkexp::Domain& d);
fkexp::Domain domain_from(const ordered_json& j);
ordered_json measure_json(const fkexp::SignedMeasure& mu, const NumberWriter& num);

// {"domain": {...}, "values": [...]} or {"levels": [...], "factors": [[...], ...]};
// optional "symmetrize": true and "center": true (needs the model)
fkexp::TensorFunction function_from(const ordered_json& j, const fkexp::FKModel* m);
fkexp::TensorFunction load_function(const std::string& path, const fkexp::FKModel* m);

// "1,2,3" -> {1,2,3}
std::vector<int> parse_int_list(const std::string& s);
std::vector<long> parse_long_list(const std::string& s);
std::vector<Rational> parse_rational_list(const std::string& s);

// writes to g.out or stdout
void emit(const Globals& g, const std::string& text);

}  // namespace fkcli
