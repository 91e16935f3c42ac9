#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tobsim/core.hpp"

namespace tobsim {

struct ParseError : std::runtime_error {
    int line = 0;
    ParseError(int line_, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what), line(line_) {}
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct SemanticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Protocol { Ga2, Ga3, Tob1, Tob2, Tob1Lmd };

const char* protocol_name(Protocol p);
std::optional<Protocol> protocol_from_name(const std::string& s);

bool is_tob(Protocol p);
/// View length in delta units: 4 for the single-vote protocol, 5 for the
/// two-vote protocol; 0 for standalone GA runs.
int view_delta_span(Protocol p);

struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;
    friend bool operator==(const Rational&, const Rational&) = default;
};

struct Interval {
    Tick from = 0;  // inclusive
    Tick to = 0;    // exclusive
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct CorruptionEntry {
    ValidatorId validator = 0;
    Tick scheduled_at = 0;  // effective at scheduled_at + delta
    friend bool operator==(const CorruptionEntry&, const CorruptionEntry&) = default;
};

struct AsynchronyWindow {
    View last_sync_view = 0;  // v_a
    View pi = 0;              // asynchronous views v_a+1 .. v_a+pi
    friend bool operator==(const AsynchronyWindow&, const AsynchronyWindow&) = default;
};

struct AdversaryConfig {
    std::string name = "random_delay";
    std::map<std::string, std::int64_t> params;
    friend bool operator==(const AdversaryConfig&, const AdversaryConfig&) = default;
};

struct Scenario {
    int n = 4;
    Tick delta = 1;
    Protocol protocol = Protocol::Tob1;
    Tick horizon = 0;
    std::uint64_t seed = 0;
    Rational rho{1, 1};
    std::optional<View> eta;  // Tob1Lmd only; kEtaInfinite means never expire
    std::map<ValidatorId, std::vector<Interval>> awake;  // absent validator: always awake
    std::vector<CorruptionEntry> corruptions;
    std::optional<AsynchronyWindow> asynchrony;
    AdversaryConfig adversary;
    std::map<ValidatorId, std::vector<std::string>> inputs;  // GA modes: tag chains from genesis

    bool awake_at(ValidatorId v, Tick t) const;
    /// Corruption-effective tick, if any (scheduled_at + delta, earliest entry).
    std::optional<Tick> corrupted_from(ValidatorId v) const;
    bool corrupted_by(ValidatorId v, Tick t) const;
    bool honest_awake_at(ValidatorId v, Tick t) const {
        return awake_at(v, t) && !corrupted_by(v, t);
    }
    View eta_or_zero() const { return eta.value_or(0); }
    Tick async_start_tick() const;  // first tick of view v_a + 1
    Tick async_end_tick() const;    // first tick of view v_a + pi + 1

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Throws SemanticError on inconsistent configurations.
void validate(const Scenario& sc);

/// Parses the flat key/value text format, or JSON when the content starts
/// with '{'. Throws ParseError / SemanticError.
Scenario parse_scenario_text(const std::string& text);
Scenario parse_scenario_file(const std::string& path);
std::string serialize_scenario(const Scenario& sc);

std::string scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const std::string& json_text);

}  // namespace tobsim
