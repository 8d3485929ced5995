#include "io.hpp"

#include "fkexp/colored_forest.hpp"
#include "fkexp/expansion.hpp"
#include "fkexp/fk_core.hpp"
#include "fkexp/forest.hpp"
#include "fkexp/genfunc.hpp"
#include "fkexp/particle.hpp"
#include "verify/verify.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

using namespace fkcli;
using fkexp::BigInt;
using fkexp::MultiIndex;

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_manifest(const ordered_json& m) { return "# manifest: " + m.dump() + "\n"; }

std::string join(const std::vector<int>& v, char sep = ' ') {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
    return out;
}

std::string dump(const ordered_json& j) { return j.dump(2); }

std::string format_or(const Globals& g, const char* fallback) { return g.format.empty() ? fallback : g.format; }

void check_format(const std::string& f) {
    if (f != "json" && f != "csv") throw std::invalid_argument("--format must be json or csv");
}

// ---- enumerate ------------------------------------------------------------------------

struct EnumerateArgs {
    int n = -1, q = -1, max_coal = -1;
    std::string q_seq, max_coal_seq;
};

void cmd_enumerate(const Globals& g, const EnumerateArgs& a) {
    const std::string fmt = format_or(g, "csv");
    check_format(fmt);
    std::map<std::string, std::string> params{{"n", std::to_string(a.n)}, {"q", std::to_string(a.q)},
                                              {"q_seq", a.q_seq}, {"max_coal", std::to_string(a.max_coal)},
                                              {"max_coal_seq", a.max_coal_seq}};
    const ordered_json man = manifest("enumerate", params, g, nullptr, fkexp::Field::Rational);
    ordered_json rows = ordered_json::array();
    BigInt total = 0;
    std::ostringstream csv;
    csv << csv_manifest(man);
    if (!a.q_seq.empty()) {
        const MultiIndex q(parse_int_list(a.q_seq));
        const auto prof = fkexp::path_profile(q);
        std::optional<MultiIndex> mc;
        if (!a.max_coal_seq.empty()) mc = MultiIndex(parse_int_list(a.max_coal_seq));
        else if (a.max_coal >= 0) mc = MultiIndex::constant(prof.size() - 1, a.max_coal);
        csv << "code,profile,coalescence,count\n";
        for (const auto& o : fkexp::enumerate_colored_orbits(prof, mc, g.caps)) {
            const auto c = o.forest.coalescence(prof.size());
            total += o.count;
            rows.push_back({{"code", o.forest.code()},
                            {"coalescence", c.entries()},
                            {"count", o.count.get_str()},
                            {"planar", ordered_json::parse(fkexp::planar_colored_mapseq(o.forest, prof).to_json())}});
            csv << csv_field(o.forest.code()) << "," << csv_field(fkexp::to_string(prof)) << "," << join(c.entries()) << ","
                << o.count.get_str() << "\n";
        }
        if (fmt == "json") {
            ordered_json j{{"manifest", man}, {"profile", fkexp::to_string(prof)}, {"rows", rows}, {"total", total.get_str()}};
            emit(g, dump(j));
        } else {
            emit(g, csv.str());
        }
        return;
    }
    if (a.n < 0 || a.q < 1) throw std::invalid_argument("enumerate needs --n >= 0 and --q >= 1 (or --q-seq)");
    std::optional<MultiIndex> mc;
    if (!a.max_coal_seq.empty()) mc = MultiIndex(parse_int_list(a.max_coal_seq));
    else if (a.max_coal >= 0) mc = MultiIndex::constant(static_cast<std::size_t>(a.n + 1), a.max_coal);
    csv << "code,profile,coalescence,count\n";
    for (const auto& o : fkexp::enumerate_orbits(a.n, a.q, mc, g.caps)) {
        total += o.count;
        const auto c = o.forest.coalescence();
        rows.push_back({{"code", o.forest.code()},
                        {"profile", o.forest.profile().entries()},
                        {"coalescence", c.entries()},
                        {"count", o.count.get_str()},
                        {"planar", ordered_json::parse(fkexp::planar_mapseq(o.forest).to_json())}});
        csv << csv_field(o.forest.code()) << "," << join(o.forest.profile().entries()) << "," << join(c.entries()) << ","
            << o.count.get_str() << "\n";
    }
    if (fmt == "json") emit(g, dump({{"manifest", man}, {"rows", rows}, {"total", total.get_str()}}));
    else emit(g, csv.str());
}

// ---- count ------------------------------------------------------------------------------

struct CountArgs {
    std::string profile, forest, colored;
    bool brute = false;
};

void cmd_count(const Globals& g, const CountArgs& a) {
    check_format(format_or(g, "json"));
    const ordered_json man = manifest("count",
                                      {{"profile", a.profile}, {"forest", a.forest}, {"colored", a.colored},
                                       {"brute", a.brute ? "true" : "false"}},
                                      g, nullptr, fkexp::Field::Rational);
    ordered_json j{{"manifest", man}};
    if (!a.profile.empty()) {
        const MultiIndex p(parse_int_list(a.profile));
        j["profile"] = p.entries();
        j["forests"] = fkexp::count_forests(p).get_str();
        if (a.brute) j["forests_enumerated"] = std::to_string(fkexp::enumerate_forests(p, g.caps).size());
    }
    if (!a.forest.empty()) {
        const auto f = fkexp::Forest::parse(a.forest);
        j["forest"] = f.code();
        j["forest_profile"] = f.profile().entries();
        j["coalescence"] = f.coalescence().entries();
        j["jungles"] = fkexp::count_jungles(f).get_str();
        if (a.brute) j["jungles_brute_force"] = fkexp::brute_force_orbit_count(fkexp::planar_mapseq(f), g.caps).get_str();
    }
    if (!a.colored.empty()) {
        const auto f = fkexp::ColoredForest::parse(a.colored);
        j["colored_forest"] = f.code();
        j["colored_profile"] = fkexp::to_string(f.profile());
        j["colored_jungles"] = fkexp::count_colored_jungles(f).get_str();
        if (a.brute)
            j["colored_jungles_brute_force"] =
                fkexp::brute_force_colored_orbit_count(fkexp::planar_colored_mapseq(f, f.profile()), g.caps).get_str();
    }
    if (a.profile.empty() && a.forest.empty() && a.colored.empty())
        throw std::invalid_argument("count needs --profile, --forest or --colored");
    emit(g, dump(j));
}

// ---- hilbert ------------------------------------------------------------------------------

struct HilbertArgs {
    int n = 0;
    std::string trunc, y_bound;
    long max_vertices = -1;
    bool coalescence = false;
};

void cmd_hilbert(const Globals& g, const HilbertArgs& a) {
    const std::string fmt = format_or(g, "csv");
    check_format(fmt);
    if (a.n < 0) throw std::invalid_argument("--n must be >= 0");
    const MultiIndex xb = a.trunc.empty() ? MultiIndex::constant(static_cast<std::size_t>(a.n + 1), 4)
                                          : MultiIndex(parse_int_list(a.trunc));
    if (static_cast<int>(xb.size()) != a.n + 1) throw std::invalid_argument("--trunc needs n+1 entries");
    const ordered_json man = manifest("hilbert",
                                      {{"n", std::to_string(a.n)}, {"trunc", xb.to_string()},
                                       {"max_vertices", std::to_string(a.max_vertices)},
                                       {"coalescence", a.coalescence ? "true" : "false"}, {"y_bound", a.y_bound}},
                                      g, nullptr, fkexp::Field::Rational);
    fkexp::SparseSeries s;
    std::size_t ylen = 0;
    if (a.coalescence) {
        if (a.n < 1) throw std::invalid_argument("coalescence series need --n >= 1");
        ylen = static_cast<std::size_t>(a.n);
        const MultiIndex yb = a.y_bound.empty() ? MultiIndex::constant(ylen, xb.norm()) : MultiIndex(parse_int_list(a.y_bound));
        if (yb.size() != ylen) throw std::invalid_argument("--y-bound needs n entries");
        s = fkexp::coalescence_series(a.n, xb, yb, a.max_vertices);
    } else {
        s = fkexp::hilbert_series(a.n, xb, a.max_vertices);
    }
    std::ostringstream csv;
    csv << csv_manifest(man);
    for (int k = 0; k <= a.n; ++k) csv << "x" << k << ",";
    for (std::size_t k = 0; k < ylen; ++k) csv << "y" << k << ",";
    csv << "count\n";
    ordered_json rows = ordered_json::array();
    for (const auto& [e, c] : s.terms()) {
        if (c == 0) continue;
        for (int v : e.entries()) csv << v << ",";
        csv << c.get_str() << "\n";
        std::vector<int> x(e.entries().begin(), e.entries().begin() + a.n + 1);
        ordered_json row{{"x", x}};
        if (ylen) row["y"] = std::vector<int>(e.entries().begin() + a.n + 1, e.entries().end());
        row["count"] = c.get_str();
        rows.push_back(row);
    }
    if (fmt == "json") emit(g, dump({{"manifest", man}, {"rows", rows}}));
    else emit(g, csv.str());
}

// ---- expand --------------------------------------------------------------------------------

struct ExpandArgs {
    std::string model, q_seq, Ns, function, family = "Q";
    int n = -1, q = -1, order = -1;
    bool oracle = false, wick = false, closed = false;
};

ordered_json report_json(const fkexp::ExpansionReport& r, const NumberWriter& num, bool measures) {
    ordered_json j;
    j["family"] = r.family;
    ordered_json orders = ordered_json::array();
    auto add = [&](int k, const fkexp::SignedMeasure& mu) {
        ordered_json o{{"k", k}};
        if (r.pairings.count(k)) o["pairing"] = num(r.pairings.at(k));
        if (measures) o["measure"] = measure_json(mu, num);
        orders.push_back(o);
    };
    add(0, r.base);
    for (const auto& [k, mu] : r.orders) add(k, mu);
    j["orders"] = orders;
    ordered_json ex = ordered_json::array();
    for (const auto& [N, v] : r.exact) {
        ordered_json e{{"N", N}, {"exact", num(v)}, {"residual", num(r.residual.at(N))}};
        if (r.oracle_delta.count(N)) e["oracle_delta"] = num(r.oracle_delta.at(N));
        ex.push_back(e);
    }
    j["evaluations"] = ex;
    j["exact_ok"] = r.exact_ok();
    return j;
}

ordered_json wick_json(const fkexp::WickReport& r, const NumberWriter& num) {
    ordered_json low = ordered_json::array();
    for (const auto& [k, v] : r.low_orders) low.push_back({{"k", k}, {"value", num(v)}});
    ordered_json j{{"vanishing_orders", low}, {"vanishing", r.vanishing}};
    if (r.leading) j["leading"] = num(*r.leading);
    if (r.wick_sum) j["wick_sum"] = num(*r.wick_sum);
    j["matches"] = r.matches;
    return j;
}

void cmd_expand(const Globals& g, const ExpandArgs& a) {
    check_format(format_or(g, "json"));
    const LoadedModel lm = load_model(a.model, g.field);
    const fkexp::FKModel& m = lm.model;
    const NumberWriter num{m.field()};
    std::map<std::string, std::string> params{{"n", std::to_string(a.n)},     {"q", std::to_string(a.q)},
                                              {"q_seq", a.q_seq},             {"N", a.Ns},
                                              {"function", a.function},       {"family", a.family},
                                              {"order", std::to_string(a.order)}, {"oracle", a.oracle ? "true" : "false"},
                                              {"wick", a.wick ? "true" : "false"}, {"closed_forms", a.closed ? "true" : "false"}};
    ordered_json j{{"manifest", manifest("expand", params, g, &lm, m.field())}};
    std::optional<fkexp::TensorFunction> F;
    if (!a.function.empty()) F = load_function(a.function, &m);
    std::vector<long> Ns;
    if (!a.Ns.empty()) Ns = parse_long_list(a.Ns);

    if (a.family == "Q" && !a.q_seq.empty()) {
        const MultiIndex q(parse_int_list(a.q_seq));
        if (Ns.empty())
            for (long N = std::max(1L, static_cast<long>(q.norm())); N <= q.norm() + 3; ++N) Ns.push_back(N);
        const auto r = fkexp::expand_path_Q(m, q, Ns, F, a.oracle, g.caps);
        j["q_seq"] = q.entries();
        j["top_order"] = fkexp::top_order_path(q);
        j["report"] = report_json(r, num, !F);
        if (a.wick) {
            if (!F) throw std::invalid_argument("--wick needs --function");
            j["wick"] = wick_json(fkexp::path_wick_Q(m, q, *F, g.caps), num);
        }
    } else if (a.family == "Q") {
        if (a.n < 0 || a.q < 1) throw std::invalid_argument("expand needs --n and --q (or --q-seq)");
        if (Ns.empty()) {
            for (long N = a.q; N <= a.q + 3; ++N) Ns.push_back(N);
            Ns.push_back(17);
        }
        const auto r = fkexp::expand_Q(m, a.n, a.q, Ns, F, a.oracle, g.caps);
        j["n"] = a.n;
        j["q"] = a.q;
        j["top_order"] = fkexp::top_order_Q(a.n, a.q);
        j["report"] = report_json(r, num, !F);
        if (a.wick) {
            if (!F) throw std::invalid_argument("--wick needs --function");
            j["wick"] = wick_json(fkexp::wick_Q(m, a.n, a.q, *F, g.caps), num);
        }
        if (a.closed) {
            const auto lo = fkexp::closed_form_low_orders(m, a.n, a.q, g.caps);
            const auto e = fkexp::ForestExpansion::single(m, a.n, a.q, 2, g.caps);
            j["closed_forms"] = {{"d0_matches", lo.d0 == e.derivative(0)},
                                 {"d1_matches", lo.d1 == e.derivative(1)},
                                 {"d2_matches", lo.d2 == e.derivative(2)}};
        }
    } else if (a.family == "E") {
        if (a.n < 0 || a.q < 2) throw std::invalid_argument("family E needs --n and --q >= 2");
        if (Ns.empty()) Ns = {2, 3, 4};
        j["n"] = a.n;
        j["q"] = a.q;
        j["report"] = report_json(fkexp::centered_moment_expansion(m, a.n, a.q, Ns, a.oracle, g.caps), num, false);
    } else if (a.family == "P" || a.family == "Ptilde") {
        if (a.n < 1 || a.q < 1) throw std::invalid_argument("family " + a.family + " needs --n >= 1 (the time n+1) and --q");
        const int K = a.order < 0 ? 1 : a.order;
        ordered_json orders = ordered_json::array();
        std::vector<Rational> paired;
        for (int k = 0; k <= K; ++k) {
            const auto mu = a.family == "P" ? fkexp::derivative_P(m, a.n, a.q, k, g.caps)
                                            : fkexp::derivative_P_tilde(m, a.n, a.q, k, g.caps);
            ordered_json o{{"k", k}};
            if (F) {
                paired.push_back(mu.pair(F->symmetrize()));
                o["pairing"] = num(paired.back());
            }
            else o["measure"] = measure_json(mu, num);
            if (k >= 1) {
                const auto iv = fkexp::seminorm_interval(m, mu);
                o["seminorm"] = {{"lower", num(iv.lower)}, {"upper", num(iv.upper)}};
            }
            orders.push_back(o);
        }
        j["n_plus_1"] = a.n;
        j["q"] = a.q;
        j["orders"] = orders;
        if (a.family == "P") {
            const auto fo = fkexp::first_order_P(m, a.n, a.q, g.caps);
            j["first_order"] = {{"closed_matches_generic", fo.matches}, {"counterterm_vanishes", fo.counterterm_vanishes}};
            if (a.oracle) {
                if (!F) throw std::invalid_argument("--oracle for family P needs --function");
                ordered_json ex = ordered_json::array();
                for (long N : Ns.empty() ? std::vector<long>{5, 6, 7, 8, 9} : Ns) {
                    if (N < 1) throw std::invalid_argument("--N entries must be >= 1");
                    const Rational exact = fkexp::exact_PN_oracle(m, static_cast<int>(N), a.n, a.q, *F, g.caps);
                    // sum_k d_k N^-k up to --order
                    Rational trunc = 0, scale = 1;
                    for (const auto& d : paired) {
                        trunc += d * scale;
                        scale /= N;
                    }
                    ex.push_back({{"N", N}, {"exact", num(exact)}, {"truncated", num(trunc)}, {"remainder", num(exact - trunc)}});
                }
                j["oracle"] = ex;
            }
        }
    } else {
        throw std::invalid_argument("--family must be Q, E, P or Ptilde");
    }
    emit(g, dump(j));
}

// ---- oracle ----------------------------------------------------------------------------------

struct OracleArgs {
    std::string model, q_seq, function, kind = "gamma";
    int N = -1, n = -1, q = -1;
};

void cmd_oracle(const Globals& g, const OracleArgs& a) {
    check_format(format_or(g, "json"));
    const LoadedModel lm = load_model(a.model, g.field);
    const fkexp::FKModel& m = lm.model;
    const NumberWriter num{m.field()};
    if (a.N < 1) throw std::invalid_argument("--N must be >= 1");
    ordered_json j{{"manifest", manifest("oracle",
                                         {{"N", std::to_string(a.N)}, {"n", std::to_string(a.n)}, {"q", std::to_string(a.q)},
                                          {"q_seq", a.q_seq}, {"function", a.function}, {"kind", a.kind}},
                                         g, &lm, m.field())}};
    MultiIndex q;
    if (!a.q_seq.empty()) {
        q = MultiIndex(parse_int_list(a.q_seq));
    } else {
        if (a.n < 0 || a.q < 1) throw std::invalid_argument("oracle needs --n and --q (or --q-seq)");
        q = MultiIndex::zeros(static_cast<std::size_t>(a.n + 1));
        q.set(a.n, a.q);
    }
    const int level = static_cast<int>(q.size()) - 1;
    fkexp::ConfigOracle cfg(m, a.N, level, g.caps);
    Rational v;
    if (a.kind == "centered") {
        v = cfg.centered_moment(level, static_cast<int>(q.norm()));
    } else {
        if (a.function.empty()) throw std::invalid_argument("--function is required for kind " + a.kind);
        const auto F = load_function(a.function, &m);
        if (a.kind == "gamma") v = cfg.gamma_moment(q, F);
        else if (a.kind == "eta") v = cfg.eta_moment(q, F);
        else if (a.kind == "dot" || a.kind == "P") v = cfg.eta_dot_moment(level, F);
        else if (a.kind == "gamma-dot") v = cfg.gamma_dot_moment(level, F);
        else throw std::invalid_argument("--kind must be gamma, eta, dot, P, gamma-dot or centered");
    }
    j["q_seq"] = q.entries();
    j["value"] = num(v);
    emit(g, dump(j));
}

// ---- simulate --------------------------------------------------------------------------------

struct SimulateArgs {
    std::string model, estimator = "gamma", f, function;
    int N = -1, horizon = -1, level = -1;
    long replicas = 1000;
    bool unnormalized = false;
};

void cmd_simulate(const Globals& g, const SimulateArgs& a) {
    const std::string fmt = format_or(g, "csv");
    check_format(fmt);
    const LoadedModel lm = load_model(a.model, g.field);
    const fkexp::FKModel& m = lm.model;
    if (a.N < 1) throw std::invalid_argument("--N must be >= 1");
    if (a.replicas < 1) throw std::invalid_argument("--replicas must be >= 1");
    const int horizon = a.horizon < 0 ? m.horizon() : a.horizon;
    if (horizon > m.horizon()) throw std::invalid_argument("--horizon exceeds the model");
    // tensor-3 / dot-3 pin the arity; tensor-q / dot-q take it from the function
    std::string kind = a.estimator;
    int want_q = -1;
    if (const auto dash = kind.find('-'); dash != std::string::npos && kind.substr(dash + 1) != "q") {
        const std::string tail = kind.substr(dash + 1);
        if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos)
            throw std::invalid_argument("unknown estimator '" + a.estimator + "'");
        want_q = std::stoi(tail);
        kind = kind.substr(0, dash);
    }
    fkexp::EstimatorSpec spec;
    spec.kind = fkexp::parse_estimator(kind);
    spec.level = a.level < 0 ? horizon : a.level;
    if (spec.level > horizon) throw std::invalid_argument("--level exceeds --horizon");
    spec.unnormalized = a.unnormalized;
    if (spec.kind == fkexp::EstimatorKind::Gamma || spec.kind == fkexp::EstimatorKind::Eta) {
        if (want_q >= 0) throw std::invalid_argument("unknown estimator '" + a.estimator + "'");
        spec.f = a.f.empty() ? std::vector<Rational>(static_cast<std::size_t>(m.size(spec.level)), Rational(1))
                             : parse_rational_list(a.f);
        if (static_cast<int>(spec.f.size()) != m.size(spec.level))
            throw std::invalid_argument("--f needs one value per state at the level");
    } else {
        if (a.function.empty()) throw std::invalid_argument("--function is required for " + a.estimator);
        spec.F = load_function(a.function, &m);
        const int q = static_cast<int>(spec.F.domain().arity());
        if (want_q >= 0 && want_q != q)
            throw std::invalid_argument("--function has " + std::to_string(q) + " coordinates, estimator wants " +
                                        std::to_string(want_q));
        if (spec.F.domain() != fkexp::single_time_domain(spec.level, m.size(spec.level), q))
            throw std::invalid_argument("--function must live on E_level^q at the estimator level");
    }
    const ordered_json man = manifest("simulate",
                                      {{"N", std::to_string(a.N)}, {"horizon", std::to_string(horizon)},
                                       {"replicas", std::to_string(a.replicas)}, {"estimator", a.estimator},
                                       {"level", std::to_string(spec.level)}, {"f", a.f}, {"function", a.function},
                                       {"unnormalized", a.unnormalized ? "true" : "false"}},
                                      g, &lm, fkexp::Field::Float);
    const auto values = fkexp::replica_values(m, a.N, g.seed, horizon, a.replicas, spec);
    const auto s = fkexp::summarize(values);
    auto num = [](double x) {
        std::ostringstream o;
        o.precision(17);
        o << x;
        return o.str();
    };
    if (fmt == "csv") {
        std::ostringstream csv;
        csv << csv_manifest(man);
        csv << "# mean " << num(s.mean) << " variance " << num(s.variance) << " std_error " << num(s.std_error) << "\n";
        csv << "replica,value\n";
        for (std::size_t i = 0; i < values.size(); ++i) csv << i << "," << num(values[i]) << "\n";
        emit(g, csv.str());
    } else {
        emit(g, dump({{"manifest", man},
                      {"summary", {{"replicas", s.replicas}, {"mean", s.mean}, {"variance", s.variance}, {"std_error", s.std_error}}},
                      {"values", values}}));
    }
}

// ---- verify ----------------------------------------------------------------------------------------

struct VerifyArgs {
    std::vector<std::string> only;
    std::string model;
    bool timings = false, quiet = false;
};

int cmd_verify(const Globals& g, const VerifyArgs& a) {
    check_format(format_or(g, "json"));
    std::optional<LoadedModel> lm;
    if (!a.model.empty()) lm = load_model(a.model, g.field);  // validation only
    std::string only;
    for (const auto& s : a.only) only += (only.empty() ? "" : ",") + s;
    const auto sel = fkexp::verify::select(a.only);
    const ordered_json man =
        manifest("verify", {{"only", only}}, g, lm ? &*lm : nullptr, fkexp::Field::Rational);
    const auto results = fkexp::verify::run_all(sel, g.caps, [&](const fkexp::verify::CheckResult& r) {
        if (a.quiet) return;
        std::cerr << (r.pass() ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << " (" << r.seconds << " s) " << r.actual
                  << "\n";
    });
    ordered_json arr = ordered_json::array();
    int failed = 0;
    for (const auto& r : results) {
        ordered_json e{{"id", r.id},         {"name", r.name},         {"title", r.title}, {"pass", r.pass()},
                       {"checks", r.checks}, {"expected", r.expected}, {"actual", r.actual}, {"budget_seconds", r.budget}};
        if (a.timings) e["seconds"] = r.seconds;
        if (!r.pass()) {
            ++failed;
            e["first_failure"] = r.first_failure;
            e["reproducer"] = manifest("verify", {{"only", r.name}}, g, nullptr, fkexp::Field::Rational);
        }
        arr.push_back(e);
    }
    emit(g, dump({{"manifest", man}, {"results", arr}, {"passed", static_cast<int>(results.size()) - failed}, {"failed", failed}}));
    return failed ? 1 : 0;
}

ordered_json error_json(const std::string& kind, const std::string& message) {
    return {{"error", kind}, {"message", message}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact finite expansions of Feynman-Kac particle moments"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kVersion);
    Globals g;
    app.add_option("--field", g.field, "override the model field: rational|float")
        ->check(CLI::IsMember({"rational", "float"}));
    app.add_option("--cap-forests", g.caps.forests, "refuse enumerations predicted above this many forests");
    app.add_option("--cap-tensor", g.caps.tensor, "refuse dense tables above this many entries");
    app.add_option("--cap-group", g.caps.group, "refuse brute-force groups above this size");
    app.add_option("--cap-configs", g.caps.configs, "refuse oracle levels above this many configurations");
    app.add_option("--seed", g.seed, "simulator seed");
    app.add_option("--out", g.out, "output file (default stdout)");
    app.add_option("--format", g.format, "json|csv (default depends on the command)");

    EnumerateArgs ea;
    auto* en = app.add_subcommand("enumerate", "list forests (or colored forests) with their orbit counts");
    en->add_option("--n", ea.n, "height minus one: maps 0..n");
    en->add_option("--q", ea.q, "particles per level");
    en->add_option("--q-seq", ea.q_seq, "colored path profile q_0,...,q_n");
    en->add_option("--max-coal", ea.max_coal, "bound on every coalescence entry");
    en->add_option("--max-coal-seq", ea.max_coal_seq, "per-map coalescence bounds");

    CountArgs ca;
    auto* co = app.add_subcommand("count", "count forests of a profile or jungles over a forest");
    co->add_option("--profile", ca.profile, "vertex profile, e.g. 1,2,2");
    co->add_option("--forest", ca.forest, "forest code, e.g. \"(()())()\"");
    co->add_option("--colored", ca.colored, "colored forest code");
    co->add_flag("--brute", ca.brute, "also count by brute force");

    HilbertArgs ha;
    auto* hi = app.add_subcommand("hilbert", "coefficients of the forest Hilbert series");
    hi->add_option("--n", ha.n, "height minus one")->required();
    hi->add_option("--trunc", ha.trunc, "per-level truncation (n+1 entries, default 4 each)");
    hi->add_option("--max-vertices", ha.max_vertices, "total vertex bound");
    hi->add_flag("--coalescence", ha.coalescence, "refine by coalescence sequence");
    hi->add_option("--y-bound", ha.y_bound, "coalescence truncation (n entries)");

    ExpandArgs xa;
    auto* ex = app.add_subcommand("expand", "1/N expansion of particle moments");
    ex->add_option("--model", xa.model, "model file or bundled model name")->required();
    ex->add_option("--n", xa.n, "time index (n+1 for families P and Ptilde)");
    ex->add_option("--q", xa.q, "number of coordinates");
    ex->add_option("--q-seq", xa.q_seq, "path profile q_0,...,q_n");
    ex->add_option("--N", xa.Ns, "comma-separated N grid");
    ex->add_option("--function", xa.function, "function file to pair with");
    ex->add_option("--family", xa.family, "Q (default), E, P or Ptilde")->check(CLI::IsMember({"Q", "E", "P", "Ptilde"}));
    ex->add_option("--order", xa.order, "highest order for P and Ptilde (default 1)");
    ex->add_flag("--oracle", xa.oracle, "compare with the configuration oracle");
    ex->add_flag("--wick", xa.wick, "Wick report for a centered function");
    ex->add_flag("--closed-forms", xa.closed, "compare closed-form low orders (q >= 4)");

    OracleArgs oa;
    auto* orc = app.add_subcommand("oracle", "exact particle expectations from the configuration law");
    orc->add_option("--model", oa.model, "model file or bundled model name")->required();
    orc->add_option("--N", oa.N, "number of particles")->required();
    orc->add_option("--n", oa.n, "time index");
    orc->add_option("--q", oa.q, "number of coordinates");
    orc->add_option("--q-seq", oa.q_seq, "path profile q_0,...,q_n");
    orc->add_option("--function", oa.function, "function file");
    orc->add_option("--kind", oa.kind, "gamma (default), eta, dot, P, gamma-dot, centered");

    SimulateArgs sa;
    auto* si = app.add_subcommand("simulate", "seeded Monte Carlo runs of the particle system");
    si->add_option("--model", sa.model, "model file or bundled model name")->required();
    si->add_option("--N", sa.N, "number of particles")->required();
    si->add_option("--horizon", sa.horizon, "last time index (default: model horizon)");
    si->add_option("--replicas", sa.replicas, "independent replicas (default 1000)");
    si->add_option("--estimator", sa.estimator, "gamma|eta|tensor-q|dot-q");
    si->add_option("--level", sa.level, "time index of the estimator (default: horizon)");
    si->add_option("--f", sa.f, "test function values for gamma/eta, comma-separated");
    si->add_option("--function", sa.function, "function file for tensor-q/dot-q");
    si->add_flag("--unnormalized", sa.unnormalized, "gamma versions of tensor-q/dot-q");

    VerifyArgs va;
    auto* ve = app.add_subcommand("verify", "run the acceptance suite");
    ve->add_option("--only", va.only, "criteria names, ids or tags")->delimiter(',');
    ve->add_option("--model", va.model, "validate this model before running");
    ve->add_flag("--timings", va.timings, "include wall-clock seconds in the report");
    ve->add_flag("--quiet", va.quiet, "no progress lines on stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!g.format.empty()) check_format(g.format);
        if (*en) cmd_enumerate(g, ea);
        else if (*co) cmd_count(g, ca);
        else if (*hi) cmd_hilbert(g, ha);
        else if (*ex) cmd_expand(g, xa);
        else if (*orc) cmd_oracle(g, oa);
        else if (*si) cmd_simulate(g, sa);
        else if (*ve) return cmd_verify(g, va);
        return 0;
    } catch (const fkexp::CapExceeded& e) {
        ordered_json j = error_json("cap_exceeded", e.what());
        j["quantity"] = e.quantity();
        j["predicted"] = e.predicted();
        j["limit"] = e.limit();
        std::cerr << j.dump() << "\n";
        return 3;
    } catch (const fkexp::ModelError& e) {
        std::cerr << error_json("invalid_model", e.what()).dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << error_json("invalid_request", e.what()).dump() << "\n";
        return 2;
    }
}
