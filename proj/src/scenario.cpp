#include "tobsim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tobsim {

using nlohmann::json;

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::Ga2: return "ga2";
        case Protocol::Ga3: return "ga3";
        case Protocol::Tob1: return "tob1";
        case Protocol::Tob2: return "tob2";
        case Protocol::Tob1Lmd: return "tob1_lmd";
    }
    return "?";
}

std::optional<Protocol> protocol_from_name(const std::string& s) {
    std::string l = s;
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
    if (l == "ga2") return Protocol::Ga2;
    if (l == "ga3") return Protocol::Ga3;
    if (l == "tob1") return Protocol::Tob1;
    if (l == "tob2") return Protocol::Tob2;
    if (l == "tob1_lmd") return Protocol::Tob1Lmd;
    return std::nullopt;
}

bool is_tob(Protocol p) { return p != Protocol::Ga2 && p != Protocol::Ga3; }

int view_delta_span(Protocol p) {
    switch (p) {
        case Protocol::Tob1:
        case Protocol::Tob1Lmd: return 4;
        case Protocol::Tob2: return 5;
        default: return 0;
    }
}

bool Scenario::awake_at(ValidatorId v, Tick t) const {
    auto it = awake.find(v);
    if (it == awake.end()) return true;
    for (const auto& iv : it->second) {
        if (t >= iv.from && t < iv.to) return true;
    }
    return false;
}

std::optional<Tick> Scenario::corrupted_from(ValidatorId v) const {
    std::optional<Tick> best;
    for (const auto& c : corruptions) {
        if (c.validator != v) continue;
        Tick eff = c.scheduled_at + delta;
        if (!best || eff < *best) best = eff;
    }
    return best;
}

bool Scenario::corrupted_by(ValidatorId v, Tick t) const {
    auto from = corrupted_from(v);
    return from && *from <= t;
}

Tick Scenario::async_start_tick() const {
    return (asynchrony->last_sync_view + 1) * view_delta_span(protocol) * delta;
}

Tick Scenario::async_end_tick() const {
    return (asynchrony->last_sync_view + asynchrony->pi + 1) * view_delta_span(protocol) * delta;
}

void validate(const Scenario& sc) {
    if (sc.n < 1) throw SemanticError("n must be positive");
    if (sc.n > 64) throw SemanticError("at most 64 validators are supported");
    if (sc.delta < 1) throw SemanticError("delta must be at least 1 tick");
    if (sc.horizon < 1) throw SemanticError("horizon must be positive");
    if (sc.rho.num < sc.rho.den || sc.rho.den < 1) throw SemanticError("rho must be a rational >= 1");
    if (sc.eta && sc.protocol != Protocol::Tob1Lmd)
        throw SemanticError("eta is only valid for protocol tob1_lmd");
    if (sc.asynchrony) {
        if (sc.protocol != Protocol::Tob1Lmd)
            throw SemanticError("an asynchrony window requires protocol tob1_lmd");
        if (!sc.eta) throw SemanticError("an asynchrony window requires eta");
        if (sc.asynchrony->pi < 1) throw SemanticError("pi must be positive");
        if (sc.asynchrony->last_sync_view < 0) throw SemanticError("last synchronous view must be >= 0");
        if (*sc.eta != kEtaInfinite && sc.asynchrony->pi >= *sc.eta)
            throw SemanticError("PI_GE_ETA: asynchrony length pi must be smaller than eta");
        if (sc.async_end_tick() >= sc.horizon)
            throw SemanticError("asynchrony window must end before the horizon");
    }
    if (sc.eta && *sc.eta < 0 && *sc.eta != kEtaInfinite)
        throw SemanticError("eta must be >= 0 or 'inf'");
    for (const auto& [v, ivs] : sc.awake) {
        if (v < 0 || v >= sc.n) throw SemanticError("awake entry for unknown validator " + std::to_string(v));
        for (const auto& iv : ivs) {
            if (iv.from < 0 || iv.to > sc.horizon || iv.from >= iv.to)
                throw SemanticError("awake interval out of range for validator " + std::to_string(v));
        }
    }
    for (const auto& c : sc.corruptions) {
        if (c.validator < 0 || c.validator >= sc.n)
            throw SemanticError("corruption of unknown validator " + std::to_string(c.validator));
        // scheduled_at = -delta makes a validator adversarial from tick 0
        if (c.scheduled_at < -sc.delta || c.scheduled_at >= sc.horizon)
            throw SemanticError("corruption schedule tick out of range");
    }
    for (const auto& [v, tags] : sc.inputs) {
        if (v < 0 || v >= sc.n) throw SemanticError("input for unknown validator " + std::to_string(v));
        if (is_tob(sc.protocol)) throw SemanticError("inputs are only valid for ga2/ga3 runs");
        if (tags.empty()) throw SemanticError("empty input chain for validator " + std::to_string(v));
    }
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

std::int64_t to_int(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw ParseError(line, "trailing characters in number '" + s + "'");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (...) {
        throw ParseError(line, "expected an integer, got '" + s + "'");
    }
}

std::uint64_t to_uint(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(s, &pos);
        if (pos != s.size()) throw ParseError(line, "trailing characters in number '" + s + "'");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (...) {
        throw ParseError(line, "expected an unsigned integer, got '" + s + "'");
    }
}

Rational parse_rho(const std::string& s, int line) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rational{to_int(s, line), 1};
    return Rational{to_int(s.substr(0, slash), line), to_int(s.substr(slash + 1), line)};
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
    {
        auto first = text.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && text[first] == '{') return scenario_from_json(text);
    }
    Scenario sc;
    sc.horizon = 0;
    bool have_horizon = false;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        auto words = split_ws(raw);
        if (words.empty()) continue;
        const std::string& key = words[0];
        auto need = [&](std::size_t k) {
            if (words.size() != k + 1)
                throw ParseError(lineno, "'" + key + "' expects " + std::to_string(k) + " argument(s)");
        };
        if (key == "n") {
            need(1);
            sc.n = static_cast<int>(to_int(words[1], lineno));
        } else if (key == "delta") {
            need(1);
            sc.delta = to_int(words[1], lineno);
        } else if (key == "protocol") {
            need(1);
            auto p = protocol_from_name(words[1]);
            if (!p) throw ParseError(lineno, "unknown protocol '" + words[1] + "'");
            sc.protocol = *p;
        } else if (key == "horizon") {
            need(1);
            sc.horizon = to_int(words[1], lineno);
            have_horizon = true;
        } else if (key == "seed") {
            need(1);
            sc.seed = to_uint(words[1], lineno);
        } else if (key == "rho") {
            need(1);
            sc.rho = parse_rho(words[1], lineno);
        } else if (key == "eta") {
            need(1);
            sc.eta = (words[1] == "inf") ? kEtaInfinite : to_int(words[1], lineno);
        } else if (key == "awake") {
            need(3);
            auto v = static_cast<ValidatorId>(to_int(words[1], lineno));
            sc.awake[v].push_back(Interval{to_int(words[2], lineno), to_int(words[3], lineno)});
        } else if (key == "corrupt") {
            need(2);
            sc.corruptions.push_back(CorruptionEntry{
                static_cast<ValidatorId>(to_int(words[1], lineno)), to_int(words[2], lineno)});
        } else if (key == "async") {
            need(2);
            sc.asynchrony = AsynchronyWindow{to_int(words[1], lineno), to_int(words[2], lineno)};
        } else if (key == "adversary") {
            if (words.size() < 2) throw ParseError(lineno, "'adversary' expects a strategy name");
            sc.adversary.name = words[1];
            for (std::size_t i = 2; i + 1 < words.size(); i += 2)
                sc.adversary.params[words[i]] = to_int(words[i + 1], lineno);
            if ((words.size() - 2) % 2 != 0)
                throw ParseError(lineno, "adversary parameters must be key/value pairs");
        } else if (key == "input") {
            if (words.size() < 3) throw ParseError(lineno, "'input' expects a validator and a tag chain");
            auto v = static_cast<ValidatorId>(to_int(words[1], lineno));
            sc.inputs[v] = std::vector<std::string>(words.begin() + 2, words.end());
        } else {
            throw ParseError(lineno, "unknown key '" + key + "'");
        }
    }
    if (!have_horizon) throw ParseError("scenario is missing 'horizon'");
    validate(sc);
    return sc;
}

Scenario parse_scenario_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario_text(ss.str());
}

std::string serialize_scenario(const Scenario& sc) {
    std::ostringstream os;
    os << "n " << sc.n << "\n";
    os << "delta " << sc.delta << "\n";
    os << "protocol " << protocol_name(sc.protocol) << "\n";
    os << "horizon " << sc.horizon << "\n";
    os << "seed " << sc.seed << "\n";
    if (!(sc.rho == Rational{1, 1})) os << "rho " << sc.rho.num << "/" << sc.rho.den << "\n";
    if (sc.eta) {
        os << "eta ";
        if (*sc.eta == kEtaInfinite)
            os << "inf\n";
        else
            os << *sc.eta << "\n";
    }
    if (sc.asynchrony)
        os << "async " << sc.asynchrony->last_sync_view << " " << sc.asynchrony->pi << "\n";
    os << "adversary " << sc.adversary.name;
    for (const auto& [k, v] : sc.adversary.params) os << " " << k << " " << v;
    os << "\n";
    for (const auto& [v, ivs] : sc.awake)
        for (const auto& iv : ivs) os << "awake " << v << " " << iv.from << " " << iv.to << "\n";
    for (const auto& c : sc.corruptions)
        os << "corrupt " << c.validator << " " << c.scheduled_at << "\n";
    for (const auto& [v, tags] : sc.inputs) {
        os << "input " << v;
        for (const auto& t : tags) os << " " << t;
        os << "\n";
    }
    return os.str();
}

std::string scenario_to_json(const Scenario& sc) {
    json j;
    j["n"] = sc.n;
    j["delta"] = sc.delta;
    j["protocol"] = protocol_name(sc.protocol);
    j["horizon"] = sc.horizon;
    j["seed"] = sc.seed;
    j["rho"] = {sc.rho.num, sc.rho.den};
    if (sc.eta) j["eta"] = *sc.eta;
    if (sc.asynchrony) j["async"] = {sc.asynchrony->last_sync_view, sc.asynchrony->pi};
    j["adversary"] = {{"name", sc.adversary.name}, {"params", sc.adversary.params}};
    json awake = json::object();
    for (const auto& [v, ivs] : sc.awake) {
        json arr = json::array();
        for (const auto& iv : ivs) arr.push_back({iv.from, iv.to});
        awake[std::to_string(v)] = arr;
    }
    j["awake"] = awake;
    json cor = json::array();
    for (const auto& c : sc.corruptions) cor.push_back({c.validator, c.scheduled_at});
    j["corrupt"] = cor;
    json inputs = json::object();
    for (const auto& [v, tags] : sc.inputs) inputs[std::to_string(v)] = tags;
    j["inputs"] = inputs;
    return j.dump();
}

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    Scenario sc;
    try {
        sc.n = j.at("n").get<int>();
        sc.delta = j.at("delta").get<Tick>();
        auto p = protocol_from_name(j.at("protocol").get<std::string>());
        if (!p) throw ParseError("unknown protocol in JSON scenario");
        sc.protocol = *p;
        sc.horizon = j.at("horizon").get<Tick>();
        sc.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("rho")) sc.rho = Rational{j["rho"][0].get<std::int64_t>(), j["rho"][1].get<std::int64_t>()};
        if (j.contains("eta")) sc.eta = j["eta"].get<View>();
        if (j.contains("async"))
            sc.asynchrony = AsynchronyWindow{j["async"][0].get<View>(), j["async"][1].get<View>()};
        if (j.contains("adversary")) {
            sc.adversary.name = j["adversary"].value("name", std::string("random_delay"));
            if (j["adversary"].contains("params"))
                for (auto& [k, v] : j["adversary"]["params"].items())
                    sc.adversary.params[k] = v.get<std::int64_t>();
        }
        if (j.contains("awake"))
            for (auto& [k, arr] : j["awake"].items()) {
                auto v = static_cast<ValidatorId>(std::stoi(k));
                for (auto& iv : arr) sc.awake[v].push_back(Interval{iv[0].get<Tick>(), iv[1].get<Tick>()});
            }
        if (j.contains("corrupt"))
            for (auto& c : j["corrupt"])
                sc.corruptions.push_back(CorruptionEntry{c[0].get<ValidatorId>(), c[1].get<Tick>()});
        if (j.contains("inputs"))
            for (auto& [k, tags] : j["inputs"].items())
                sc.inputs[static_cast<ValidatorId>(std::stoi(k))] = tags.get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad JSON scenario: ") + e.what());
    }
    validate(sc);
    return sc;
}

}  // namespace tobsim
