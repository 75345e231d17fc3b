#include "crnlab/network.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace crnlab {

Network::Network(std::vector<std::string> species, std::vector<Reaction> reactions)
    : species_(std::move(species)), reactions_(std::move(reactions)) {
    if (species_.empty()) throw NetworkError("network needs at least one species");
    const std::size_t d = species_.size();
    for (std::size_t r = 0; r < reactions_.size(); ++r) {
        auto& rx = reactions_[r];
        if (rx.c_in.size() != d || rx.c_out.size() != d)
            throw NetworkError("reaction " + std::to_string(r + 1) + ": complex length differs from species count");
        if (!(rx.kappa > 0.0) || !std::isfinite(rx.kappa))
            throw NetworkError("reaction " + std::to_string(r + 1) + ": nonpositive rate constant");
        std::vector<std::int64_t> v(d);
        bool nonzero = false;
        for (std::size_t i = 0; i < d; ++i) {
            if (rx.c_in[i] < 0 || rx.c_out[i] < 0)
                throw NetworkError("reaction " + std::to_string(r + 1) + ": negative stoichiometry");
            v[i] = rx.c_out[i] - rx.c_in[i];
            nonzero = nonzero || v[i] != 0;
        }
        if (!nonzero) throw NetworkError("reaction " + std::to_string(r + 1) + ": zero reaction vector");
        vecs_.push_back(std::move(v));
        std::vector<std::pair<int, int>> in;
        for (std::size_t i = 0; i < d; ++i)
            if (rx.c_in[i] > 0) in.push_back({static_cast<int>(i), rx.c_in[i]});
        inputs_.push_back(std::move(in));
    }
}

int Network::c_star() const {
    int best = 0;
    for (const auto& rx : reactions_) {
        int a = 0, b = 0;
        for (int i = 0; i < d(); ++i) { a += rx.c_in[i]; b += rx.c_out[i]; }
        best = std::max({best, a, b});
    }
    return best;
}

bool Network::operator==(const Network& o) const {
    if (species_ != o.species_ || reactions_.size() != o.reactions_.size()) return false;
    for (std::size_t r = 0; r < reactions_.size(); ++r) {
        const auto& a = reactions_[r];
        const auto& b = o.reactions_[r];
        if (a.c_in != b.c_in || a.c_out != b.c_out || a.kappa != b.kappa) return false;
    }
    return true;
}

Network builtin_network(const std::string& name) {
    std::vector<int> r2in;
    if (name == "crn0") r2in = {0, 1};
    else if (name == "crn1") r2in = {1, 1};
    else if (name == "crn2") r2in = {2, 1};
    else throw NetworkError("unknown builtin network '" + name + "'");
    std::vector<int> r2out = {r2in[0], 0};
    return Network({"A", "B"}, {
        {{0, 0}, {1, 1}, 1.0},
        {r2in, r2out, 1.0},
        {{5, 2}, {0, 3}, 1.0},
        {{0, 3}, {2, 0}, 1.0},
    });
}

namespace {

int line_of(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

std::vector<int> complex_of(const nlohmann::json& j, const std::map<std::string, int>& index,
                            std::size_t d, const std::string& where) {
    std::vector<int> c(d, 0);
    if (j.is_null()) return c;
    if (!j.is_object()) throw NetworkError(where + ": complex must be an object {species: count}");
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto f = index.find(it.key());
        if (f == index.end()) throw NetworkError(where + ": unknown species '" + it.key() + "'");
        if (!it.value().is_number_integer())
            throw NetworkError(where + ": count for '" + it.key() + "' is not an integer");
        auto n = it.value().get<long long>();
        if (n < 0) throw NetworkError(where + ": negative stoichiometry");
        c[f->second] += static_cast<int>(n);
    }
    return c;
}

}  // namespace

Network parse_network(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw NetworkError("syntax error at line " + std::to_string(line_of(text, e.byte ? e.byte - 1 : 0)) +
                           ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("species") || !doc.contains("reactions"))
        throw NetworkError("document needs 'species' and 'reactions'");
    std::vector<std::string> species;
    std::map<std::string, int> index;
    for (const auto& s : doc["species"]) {
        if (!s.is_string()) throw NetworkError("species names must be strings");
        auto name = s.get<std::string>();
        if (index.count(name)) throw NetworkError("duplicate species '" + name + "'");
        index[name] = static_cast<int>(species.size());
        species.push_back(name);
    }
    std::vector<Reaction> rxs;
    int k = 0;
    for (const auto& rj : doc["reactions"]) {
        ++k;
        std::string where = "reaction " + std::to_string(k);
        if (!rj.is_object()) throw NetworkError(where + ": must be an object");
        Reaction rx;
        rx.c_in = complex_of(rj.value("input", nlohmann::json()), index, species.size(), where);
        rx.c_out = complex_of(rj.value("output", nlohmann::json()), index, species.size(), where);
        if (!rj.contains("kappa") || !rj["kappa"].is_number()) throw NetworkError(where + ": missing numeric kappa");
        rx.kappa = rj["kappa"].get<double>();
        rxs.push_back(rx);
    }
    return Network(std::move(species), std::move(rxs));
}

Network load_network(const std::string& name_or_path) {
    if (name_or_path == "crn0" || name_or_path == "crn1" || name_or_path == "crn2")
        return builtin_network(name_or_path);
    std::ifstream in(name_or_path);
    if (!in) throw NetworkError("cannot read network file '" + name_or_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str());
}

std::string format_network(const Network& net) {
    nlohmann::ordered_json doc;
    doc["species"] = net.species();
    doc["reactions"] = nlohmann::ordered_json::array();
    for (const auto& rx : net.reactions()) {
        nlohmann::ordered_json in = nlohmann::ordered_json::object(), out = nlohmann::ordered_json::object();
        for (int i = 0; i < net.d(); ++i) {
            if (rx.c_in[i]) in[net.species()[i]] = rx.c_in[i];
            if (rx.c_out[i]) out[net.species()[i]] = rx.c_out[i];
        }
        doc["reactions"].push_back({{"input", in}, {"output", out}, {"kappa", rx.kappa}});
    }
    return doc.dump(2) + "\n";
}

__int128 falling(std::int64_t a, int k) {
    if (a < k) return 0;
    __int128 p = 1;
    for (int j = 0; j < k; ++j) p *= (a - j);
    return p;
}

double propensity(const Network& net, int r, const State& x) {
    const auto& in = net.inputs(r);
    bool small = true;
    int order = 0;
    for (auto [i, c] : in) {
        if (x[i] < c) return 0.0;
        small = small && x[i] < 4096;
        order += c;
    }
    if (small && order <= 5) {
        // each factor below 2^12, the product below 2^60
        std::int64_t p = 1;
        for (auto [i, c] : in)
            for (int j = 0; j < c; ++j) p *= x[i] - j;
        return net.reaction(r).kappa * static_cast<double>(p);
    }
    __int128 p = 1;
    if (small && order <= 10) {
        // each factor below 2^60, the product below 2^120
        for (auto [i, c] : in) {
            std::int64_t f = 1;
            for (int j = 0; j < c; ++j) f *= x[i] - j;
            p *= f;
        }
    } else {
        // may exceed 2^127 (order 7 at 10^6); extended precision keeps ~1e-18 relative error
        long double q = 1;
        for (auto [i, c] : in)
            for (int j = 0; j < c; ++j) q *= static_cast<long double>(x[i] - j);
        return net.reaction(r).kappa * static_cast<double>(q);
    }
    return net.reaction(r).kappa * static_cast<double>(p);
}

double mass_action_rate(const Network& net, int r, const Concentration& x) {
    const auto& rx = net.reaction(r);
    double p = rx.kappa;
    for (int i = 0; i < net.d(); ++i)
        if (rx.c_in[i] != 0) p *= std::pow(x[i], rx.c_in[i]);
    return p;
}

std::vector<std::int64_t> reaction_vector(const Network& net, int r) { return net.vec(r); }

double total_propensity(const Network& net, const State& x) {
    double s = 0.0;
    for (int r = 0; r < net.size(); ++r) s += propensity(net, r, x);
    return s;
}

double apply_generator(const Network& net, const StateFn& f, const State& x) {
    const double fx = f(x);
    double acc = 0.0;
    State y(x.size());
    for (int r = 0; r < net.size(); ++r) {
        double a = propensity(net, r, x);
        if (a == 0.0) continue;
        const auto& v = net.vec(r);
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + v[i];
        acc += a * (f(y) - fx);
    }
    return acc;
}

}  // namespace crnlab
