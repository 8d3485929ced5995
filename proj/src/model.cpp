#include "fkexp/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace fkexp {

using nlohmann::json;

std::string to_string(Field f) { return f == Field::Rational ? "rational" : "float"; }

Field parse_field(const std::string& s) {
    if (s == "rational") return Field::Rational;
    if (s == "float") return Field::Float;
    throw std::invalid_argument("field must be 'rational' or 'float', got '" + s + "'");
}

FKModel::FKModel(std::vector<std::vector<std::string>> states, std::vector<Rational> eta0,
                 std::vector<Matrix> M, std::vector<std::vector<Rational>> G, Field field)
    : states_(std::move(states)), eta0_(std::move(eta0)), G_(std::move(G)), field_(field) {
    // accept M either as [M_1..M_n] or [unused, M_1..M_n]
    if (!states_.empty() && M.size() + 1 == states_.size()) M.insert(M.begin(), Matrix());
    M_ = std::move(M);
    validate();
}

const Matrix& FKModel::M(int k) const {
    if (k < 1 || k > horizon()) throw std::out_of_range("M_k needs 1 <= k <= horizon");
    return M_[k];
}

const std::vector<Rational>& FKModel::G(int k) const {
    if (k < 0 || k > horizon()) throw std::out_of_range("G_k needs 0 <= k <= horizon");
    return G_[k];
}

Matrix FKModel::Q(int k) const {
    Matrix q = M(k);
    const auto& g = G(k - 1);
    for (std::size_t i = 0; i < q.rows; ++i)
        for (std::size_t j = 0; j < q.cols; ++j) q(i, j) *= g[i];
    return q;
}

FKModel FKModel::truncated(int n) const {
    if (n < 0 || n > horizon()) throw std::out_of_range("truncation beyond horizon");
    FKModel m;
    m.states_.assign(states_.begin(), states_.begin() + n + 1);
    m.eta0_ = eta0_;
    m.M_.assign(M_.begin(), M_.begin() + n + 1);
    m.G_.assign(G_.begin(), G_.begin() + n + 1);
    m.field_ = field_;
    return m;
}

void FKModel::validate() const {
    if (states_.empty()) throw ModelError("model needs at least one level");
    const int n = horizon();
    if (static_cast<int>(M_.size()) != n + 1) throw ModelError("model needs one transition per level after 0");
    if (static_cast<int>(G_.size()) != n + 1) throw ModelError("model needs one potential per level");
    for (int k = 0; k <= n; ++k)
        if (states_[k].empty()) throw ModelError("level " + std::to_string(k) + " has no states");
    const double tol = field_ == Field::Float ? 1e-12 : 0.0;
    auto near_one = [&](const Rational& s) {
        if (tol == 0.0) return s == 1;
        return std::fabs(Rational(s - 1).get_d()) <= tol;
    };
    if (static_cast<int>(eta0_.size()) != size(0)) throw ModelError("eta0 has wrong length");
    Rational total = 0;
    for (auto& x : eta0_) {
        if (x < 0) throw ModelError("eta0 has a negative entry");
        total += x;
    }
    if (!near_one(total)) throw ModelError("eta0 does not sum to 1 (sum " + fkexp::to_string(total) + ")");
    for (int k = 1; k <= n; ++k) {
        const Matrix& m = M_[k];
        if (m.rows != static_cast<std::size_t>(size(k - 1)) || m.cols != static_cast<std::size_t>(size(k)))
            throw ModelError("M_" + std::to_string(k) + " has wrong shape");
        for (std::size_t i = 0; i < m.rows; ++i) {
            Rational s = 0;
            for (std::size_t j = 0; j < m.cols; ++j) {
                if (m(i, j) < 0) throw ModelError("M_" + std::to_string(k) + " has a negative entry");
                s += m(i, j);
            }
            if (!near_one(s))
                throw ModelError("row " + std::to_string(i) + " of M_" + std::to_string(k) +
                                 " sums to " + fkexp::to_string(s) + ", not 1");
        }
    }
    for (int k = 0; k <= n; ++k) {
        if (static_cast<int>(G_[k].size()) != size(k))
            throw ModelError("G_" + std::to_string(k) + " has wrong length");
        for (auto& g : G_[k])
            if (g <= 0) throw ModelError("G_" + std::to_string(k) + " must be strictly positive");
    }
}

// ---- JSON ---------------------------------------------------------------------------

namespace {

Rational rat(const json& v) {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long>());
    if (v.is_number()) return parse_rational(v.dump());
    throw ModelError("expected a rational, got " + v.dump());
}

}  // namespace

std::string FKModel::to_json() const {
    json j;
    j["states"] = states_;
    json e = json::array();
    for (auto& x : eta0_) e.push_back(fkexp::to_string(x));
    j["eta0"] = e;
    json ms = json::array();
    for (int k = 1; k <= horizon(); ++k) {
        json rows = json::array();
        for (std::size_t i = 0; i < M_[k].rows; ++i) {
            json row = json::array();
            for (std::size_t c = 0; c < M_[k].cols; ++c) row.push_back(fkexp::to_string(M_[k](i, c)));
            rows.push_back(row);
        }
        ms.push_back(rows);
    }
    j["M"] = ms;
    json gs = json::array();
    for (auto& g : G_) {
        json row = json::array();
        for (auto& x : g) row.push_back(fkexp::to_string(x));
        gs.push_back(row);
    }
    j["G"] = gs;
    j["field"] = fkexp::to_string(field_);
    return j.dump();
}

FKModel FKModel::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelError(std::string("model is not valid JSON: ") + e.what());
    }
    try {
        std::vector<std::vector<std::string>> states;
        for (auto& lvl : j.at("states")) {
            std::vector<std::string> s;
            for (auto& x : lvl) s.push_back(x.is_string() ? x.get<std::string>() : x.dump());
            states.push_back(std::move(s));
        }
        std::vector<Rational> eta0;
        for (auto& x : j.at("eta0")) eta0.push_back(rat(x));
        std::vector<Matrix> M{Matrix()};
        for (auto& mk : j.at("M")) {
            const std::size_t r = mk.size(), c = r ? mk[0].size() : 0;
            Matrix m(r, c);
            for (std::size_t i = 0; i < r; ++i) {
                if (mk[i].size() != c) throw ModelError("ragged transition matrix");
                for (std::size_t t = 0; t < c; ++t) m(i, t) = rat(mk[i][t]);
            }
            M.push_back(std::move(m));
        }
        std::vector<std::vector<Rational>> G;
        for (auto& gk : j.at("G")) {
            std::vector<Rational> g;
            for (auto& x : gk) g.push_back(rat(x));
            G.push_back(std::move(g));
        }
        Field field = j.contains("field") ? parse_field(j["field"].get<std::string>()) : Field::Rational;
        return FKModel(std::move(states), std::move(eta0), std::move(M), std::move(G), field);
    } catch (const json::exception& e) {
        throw ModelError(std::string("model JSON has the wrong shape: ") + e.what());
    }
}

FKModel FKModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

FKModel random_model(std::uint64_t seed, const std::vector<int>& sizes) {
    if (sizes.empty()) throw std::invalid_argument("random_model needs at least one level");
    std::mt19937_64 rng(seed);
    auto draw = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
    auto prob = [&](int size) {
        std::vector<long> w(size);
        long tot = 0;
        for (auto& x : w) tot += (x = draw(1, 4));
        std::vector<Rational> r;
        for (long x : w) {
            Rational v(x, tot);
            v.canonicalize();
            r.push_back(v);
        }
        return r;
    };
    std::vector<std::vector<std::string>> states;
    for (int s : sizes) {
        std::vector<std::string> lab;
        for (int i = 0; i < s; ++i) lab.push_back("s" + std::to_string(i));
        states.push_back(lab);
    }
    std::vector<Matrix> M{Matrix()};
    for (std::size_t k = 1; k < sizes.size(); ++k) {
        Matrix m(sizes[k - 1], sizes[k]);
        for (int i = 0; i < sizes[k - 1]; ++i) {
            auto row = prob(sizes[k]);
            for (int j = 0; j < sizes[k]; ++j) m(i, j) = row[j];
        }
        M.push_back(std::move(m));
    }
    std::vector<std::vector<Rational>> G;
    for (int s : sizes) {
        std::vector<Rational> g;
        for (int i = 0; i < s; ++i) {
            Rational v(draw(1, 6), 2);
            v.canonicalize();
            g.push_back(v);
        }
        G.push_back(g);
    }
    return FKModel(states, prob(sizes[0]), M, G);
}

}  // namespace fkexp
