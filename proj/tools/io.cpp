#include "io.hpp"

#include "fkexp/bundled.hpp"
#include "fkexp/fk_core.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fkcli {

ordered_json NumberWriter::operator()(const Rational& x) const {
    if (field == fkexp::Field::Float) return x.get_d();
    return fkexp::to_string(x);
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

LoadedModel load_model(const std::string& spec, const std::string& field_override) {
    std::string text, source;
    const std::string prefix = "bundled:";
    std::ifstream probe(spec);
    if (spec.rfind(prefix, 0) != 0 && probe) {
        text = read_file(spec);
        source = spec;
    } else {
        const std::string name = spec.rfind(prefix, 0) == 0 ? spec.substr(prefix.size()) : spec;
        bool found = false;
        for (const auto& b : fkexp::bundled_models())
            if (b.name == name) {
                text = b.json;
                found = true;
            }
        if (!found) fkexp::bundled_model(name);  // throws with the list of known names
        source = prefix + name;
    }
    if (!field_override.empty()) {
        ordered_json j;
        try {
            j = ordered_json::parse(text);
        } catch (const std::exception& e) {
            throw fkexp::ModelError(std::string("model is not valid JSON: ") + e.what());
        }
        j["field"] = fkexp::to_string(fkexp::parse_field(field_override));
        text = j.dump();
    }
    LoadedModel lm{fkexp::FKModel::from_json(text), source, ""};
    lm.hash = fnv1a_hex(lm.model.to_json());
    return lm;
}

ordered_json manifest(const std::string& command, const std::map<std::string, std::string>& params,
                      const Globals& g, const LoadedModel* model, fkexp::Field field) {
    ordered_json m;
    m["command"] = command;
    ordered_json p = ordered_json::object();
    for (const auto& [k, v] : params) p[k] = v;
    m["parameters"] = p;
    m["model"] = model ? ordered_json(model->source) : ordered_json(nullptr);
    m["model_hash"] = model ? ordered_json(model->hash) : ordered_json(nullptr);
    m["seed"] = g.seed;
    m["version"] = kVersion;
    m["field"] = fkexp::to_string(field);
    m["caps"] = {{"forests", g.caps.forests}, {"tensor", g.caps.tensor}, {"group", g.caps.group}, {"configs", g.caps.configs}};
    return m;
}

ordered_json domain_json(const fkexp::Domain& d) { return {{"levels", d.levels}, {"sizes", d.sizes}}; }

fkexp::Domain domain_from(const ordered_json& j) {
    fkexp::Domain d;
    d.levels = j.at("levels").get<std::vector<int>>();
    d.sizes = j.at("sizes").get<std::vector<int>>();
    if (d.levels.size() != d.sizes.size()) throw std::invalid_argument("domain: levels and sizes differ in length");
    return d;
}

ordered_json measure_json(const fkexp::SignedMeasure& mu, const NumberWriter& num) {
    ordered_json w = ordered_json::array();
    for (const auto& x : mu.weights()) w.push_back(num(x));
    return {{"domain", domain_json(mu.domain())}, {"weights", w}};
}

namespace {

Rational rational_of(const ordered_json& v) {
    if (v.is_string()) return fkexp::parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long>());
    if (v.is_number()) return fkexp::parse_rational(v.dump());
    throw std::invalid_argument("expected a rational (string \"p/q\" or number), got " + v.dump());
}

}  // namespace

fkexp::TensorFunction function_from(const ordered_json& j, const fkexp::FKModel* m) {
    fkexp::TensorFunction F;
    if (j.contains("factors")) {
        const auto levels = j.at("levels").get<std::vector<int>>();
        std::vector<std::vector<Rational>> factors;
        for (const auto& f : j.at("factors")) {
            std::vector<Rational> v;
            for (const auto& x : f) v.push_back(rational_of(x));
            factors.push_back(std::move(v));
        }
        if (factors.size() != levels.size()) throw std::invalid_argument("function: one factor per level entry");
        F = fkexp::TensorFunction::product(levels, factors);
    } else {
        const fkexp::Domain d = domain_from(j.at("domain"));
        F = fkexp::TensorFunction(d);
        const auto& vals = j.at("values");
        if (vals.size() != d.volume())
            throw std::invalid_argument("function: expected " + std::to_string(d.volume()) + " values, got " +
                                        std::to_string(vals.size()));
        for (std::size_t i = 0; i < d.volume(); ++i) F.values()[i] = rational_of(vals[i]);
    }
    if (m)
        for (std::size_t i = 0; i < F.domain().arity(); ++i) {
            const int lv = F.domain().levels[i];
            if (lv < 0 || lv > m->horizon() || F.domain().sizes[i] != m->size(lv))
                throw std::invalid_argument("function: coordinate " + std::to_string(i) + " does not match the model");
        }
    if (j.value("symmetrize", false)) F = F.symmetrize();
    if (j.value("center", false)) {
        if (!m) throw std::invalid_argument("function: centering needs a model");
        F = fkexp::center_function(*m, F);
    }
    return F;
}

fkexp::TensorFunction load_function(const std::string& path, const fkexp::FKModel* m) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_file(path));
    } catch (const ordered_json::exception& e) {
        throw std::invalid_argument("function file " + path + ": " + e.what());
    }
    return function_from(j, m);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("not an integer: " + tok);
        out.push_back(v);
    }
    return out;
}

std::vector<long> parse_long_list(const std::string& s) {
    std::vector<long> out;
    for (int v : parse_int_list(s)) out.push_back(v);
    return out;
}

std::vector<Rational> parse_rational_list(const std::string& s) {
    std::vector<Rational> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(fkexp::parse_rational(tok));
    return out;
}

void emit(const Globals& g, const std::string& text) {
    if (g.out.empty() || g.out == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(g.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + g.out);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

}  // namespace fkcli
