#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tobsim/scenario.hpp"
#include "tobsim/sim.hpp"
#include "tobsim/trace.hpp"
#include "tobsim/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tobsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNonCompliant = 3;
constexpr int kExitViolation = 4;

struct SeedRange {
    std::uint64_t first = 0;
    std::uint64_t last = 0;  // inclusive
};

SeedRange parse_seed_range(const std::string& s) {
    auto dots = s.find("..");
    if (dots == std::string::npos) {
        auto v = std::stoull(s);
        return {v, v};
    }
    SeedRange r{std::stoull(s.substr(0, dots)), std::stoull(s.substr(dots + 2))};
    if (r.last < r.first) throw SemanticError("empty seed range " + s);
    return r;
}

std::string default_out_dir() {
    if (const char* env = std::getenv("TOBSIM_OUT_DIR")) return env;
    return "out";
}

json compliance_to_json(const ComplianceReport& rep) {
    json j;
    j["overall"] = rep.overall;
    j["evaluated_until"] = rep.evaluated_until;
    if (rep.first_failure) {
        j["first_failure"] = *rep.first_failure;
        j["h_witness"] = rep.h_witness;
        j["f_witness"] = rep.f_witness;
    }
    json recs = json::array();
    for (const auto& r : rep.records) recs.push_back({{"t", r.t}, {"h", r.h}, {"f", r.f}, {"ok", r.ok}});
    j["records"] = recs;
    return j;
}

json async_to_json(const AsyncReport& rep) {
    json j;
    j["overall"] = rep.overall;
    j["wake_assumption_ok"] = rep.wake_assumption_ok;
    if (!rep.wake_assumption_ok) j["not_awake"] = rep.not_awake;
    j["sync"] = compliance_to_json(rep.sync);
    json views = json::array();
    for (const auto& r : rep.views)
        views.push_back({{"view", r.v},
                         {"lhs", r.lhs},
                         {"rhs", r.rhs},
                         {"ok", r.ok},
                         {"lhs_witness", r.lhs_witness},
                         {"rhs_witness", r.rhs_witness}});
    j["views"] = views;
    return j;
}

json violations_to_json(const std::vector<Violation>& vs) {
    json arr = json::array();
    for (const auto& v : vs) arr.push_back({{"kind", v.kind}, {"tick", v.tick}, {"detail", v.detail}});
    return arr;
}

json compliance_for(const Scenario& sc) {
    if (sc.protocol == Protocol::Tob1Lmd) {
        if (sc.asynchrony) return async_to_json(check_async(sc));
        return compliance_to_json(check_lmd_sync(sc));
    }
    return compliance_to_json(check_sleepy(sc, declared_params(sc.protocol, sc.delta)));
}

json metrics_to_json(const Metrics& m, Tick delta) {
    return json{{"best_case_latency_ticks", m.best_case_latency},
                {"avg_case_latency_ticks", m.avg_case_latency},
                {"block_time_ticks", m.block_time},
                {"votes_per_decision", m.votes_per_decision},
                {"good_leader_rate", m.good_leader_rate},
                {"decided_proposals", m.decided_proposals},
                {"best_case_latency_delta", m.best_case_latency / double(delta)},
                {"avg_case_latency_delta", m.avg_case_latency / double(delta)},
                {"block_time_delta", m.block_time / double(delta)}};
}

std::string metrics_csv_row(const std::string& protocol, std::uint64_t seed, const Metrics& m,
                            Tick delta) {
    std::ostringstream os;
    os << protocol << "," << seed << "," << m.best_case_latency / double(delta) << ","
       << m.avg_case_latency / double(delta) << "," << m.block_time / double(delta) << ","
       << m.votes_per_decision << "," << m.good_leader_rate;
    return os.str();
}

constexpr const char* kMetricsCsvHeader = "protocol,seed,best,avg,block_time,votes,good_leader_rate";

int run_command(const std::string& scenario_path, const std::string& seed_spec,
                const std::string& out_dir) {
    Scenario base = parse_scenario_file(scenario_path);
    SeedRange seeds = parse_seed_range(seed_spec);
    fs::create_directories(out_dir);

    bool compliant = true;
    {
        Scenario probe = base;
        probe.seed = seeds.first;
        json creport = compliance_for(probe);
        compliant = creport["overall"].get<bool>();
        std::ofstream f(fs::path(out_dir) / "compliance.json");
        f << creport.dump(2) << "\n";
    }

    fs::path csv_path = fs::path(out_dir) / "metrics.csv";
    bool fresh_csv = !fs::exists(csv_path);
    std::ofstream csv(csv_path, std::ios::app);
    if (fresh_csv) csv << kMetricsCsvHeader << "\n";

    std::size_t total_violations = 0;
    for (std::uint64_t s = seeds.first; s <= seeds.last; ++s) {
        Scenario sc = base;
        sc.seed = s;
        Trace trace = run_scenario(sc);
        std::string stem = std::string(protocol_name(sc.protocol)) + "_seed" + std::to_string(s);
        write_trace_file(trace, (fs::path(out_dir) / (stem + ".trace.jsonl")).string());
        auto violations = verify_trace(trace);
        total_violations += violations.size();
        {
            std::ofstream f(fs::path(out_dir) / (stem + ".violations.json"));
            f << violations_to_json(violations).dump(2) << "\n";
        }
        try {
            Metrics m = compute_metrics(trace);
            csv << metrics_csv_row(protocol_name(sc.protocol), s, m, sc.delta) << "\n";
        } catch (const InsufficientTrace&) {
            // short or non-deciding runs simply produce no metrics row
        }
        std::cout << stem << ": " << trace.events.size() << " events, " << violations.size()
                  << " violation(s)\n";
    }
    if (compliant && total_violations > 0) return kExitViolation;
    if (!compliant) {
        std::cout << "schedule is NOT compliant with the declared model; violations (if any) are "
                     "informational\n";
        return kExitNonCompliant;
    }
    return kExitOk;
}

int verify_command(const std::string& trace_path) {
    Trace trace = read_trace_file(trace_path);
    json creport = compliance_for(trace.scenario);
    bool compliant = creport["overall"].get<bool>();
    auto violations = verify_trace(trace);
    std::cout << violations_to_json(violations).dump(2) << "\n";
    std::cout << (compliant ? "schedule compliant" : "schedule NOT compliant") << ", "
              << violations.size() << " violation(s)\n";
    if (compliant && !violations.empty()) return kExitViolation;
    if (!compliant) return kExitNonCompliant;
    return kExitOk;
}

int metrics_command(const std::string& trace_path, const std::string& format) {
    Trace trace = read_trace_file(trace_path);
    Metrics m = compute_metrics(trace);
    if (format == "json") {
        std::cout << metrics_to_json(m, trace.scenario.delta).dump(2) << "\n";
    } else {
        std::cout << kMetricsCsvHeader << "\n"
                  << metrics_csv_row(protocol_name(trace.scenario.protocol), trace.seed, m,
                                     trace.scenario.delta)
                  << "\n";
    }
    return kExitOk;
}

int table_command(const std::string& dir) {
    fs::path csv_path = fs::path(dir) / "metrics.csv";
    std::ifstream f(csv_path);
    if (!f) throw InsufficientTrace("no metrics.csv under " + dir);
    std::string line;
    std::getline(f, line);  // header
    struct Acc {
        double best = 0, avg = 0, block = 0, votes = 0;
        int count = 0;
    };
    std::map<std::string, Acc> acc;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string proto, field;
        std::getline(is, proto, ',');
        std::vector<double> vals;
        while (std::getline(is, field, ',')) vals.push_back(std::stod(field));
        if (vals.size() < 6) continue;
        auto& a = acc[proto];
        a.best += vals[1];
        a.avg += vals[2];
        a.block += vals[3];
        a.votes += vals[4];
        a.count += 1;
    }
    if (acc.empty()) throw InsufficientTrace("metrics.csv has no completed runs");
    std::cout << "protocol  resilience  best-case  avg-case  block-time  votes/block\n";
    for (const auto& [proto, a] : acc) {
        auto d = [&](double x) {
            std::ostringstream os;
            os.precision(3);
            os << x / a.count << "d";
            return os.str();
        };
        std::ostringstream votes;
        votes.precision(3);
        votes << a.votes / a.count;
        std::cout << proto << "  1/2  " << d(a.best) << "  " << d(a.avg) << "  " << d(a.block)
                  << "  " << votes.str() << "\n";
    }
    return kExitOk;
}

int sweep_command(const std::string& scenario_path, const std::string& axis,
                  const std::vector<double>& values, const std::string& seed_spec,
                  const std::string& out_dir) {
    Scenario base = parse_scenario_file(scenario_path);
    SeedRange seeds = parse_seed_range(seed_spec);
    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "sweep.csv");
    csv << "axis,value,seed,compliant,violations\n";
    bool violation_on_compliant = false;
    for (double value : values) {
        for (std::uint64_t s = seeds.first; s <= seeds.last; ++s) {
            Scenario sc = base;
            sc.seed = s;
            if (axis == "corruption") {
                int k = static_cast<int>(value * sc.n);
                sc.corruptions.clear();
                for (int i = 0; i < k; ++i)
                    sc.corruptions.push_back(CorruptionEntry{sc.n - 1 - i, 0});
            } else if (axis == "participation") {
                int awake = std::max(1, static_cast<int>(value * sc.n));
                sc.awake.clear();
                for (ValidatorId v = awake; v < sc.n; ++v) sc.awake[v] = {};  // never awake
            } else if (axis == "eta") {
                sc.eta = static_cast<View>(value);
            } else if (axis == "pi") {
                if (!sc.asynchrony) throw SemanticError("pi sweep needs an asynchrony window");
                sc.asynchrony->pi = static_cast<View>(value);
            } else {
                throw SemanticError("unknown sweep axis: " + axis);
            }
            bool compliant = false;
            std::size_t nviol = 0;
            try {
                validate(sc);
                compliant = schedule_compliant(sc);
                Trace trace = run_scenario(sc);
                nviol = verify_trace(trace).size();
            } catch (const SemanticError& e) {
                csv << axis << "," << value << "," << s << ",rejected:" << e.what() << ",\n";
                continue;
            } catch (const AsyncConfigError& e) {
                csv << axis << "," << value << "," << s << ",rejected:" << e.what() << ",\n";
                continue;
            }
            csv << axis << "," << value << "," << s << "," << (compliant ? "yes" : "no") << ","
                << nviol << "\n";
            if (compliant && nviol > 0) violation_on_compliant = true;
        }
    }
    return violation_on_compliant ? kExitViolation : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic simulator for dynamically available total-order broadcast"};
    app.require_subcommand(1);

    std::string scenario_path, trace_path, seed_spec = "0", out_dir = default_out_dir();
    std::string format = "csv", axis;
    std::vector<double> values;

    auto* run = app.add_subcommand("run", "simulate a scenario over a seed range and verify it");
    run->add_option("--scenario", scenario_path, "scenario file (text or JSON)")->required();
    run->add_option("--seed", seed_spec, "seed or inclusive range a..b");
    run->add_option("--out", out_dir, "output directory");

    auto* verify = app.add_subcommand("verify", "re-check a recorded trace");
    verify->add_option("--trace", trace_path, "trace file (JSONL)")->required();

    auto* metrics = app.add_subcommand("metrics", "latency/throughput metrics of a trace");
    metrics->add_option("--trace", trace_path, "trace file (JSONL)")->required();
    metrics->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto* table = app.add_subcommand("table", "aggregate metrics rows into the comparison table");
    table->add_option("--dir", out_dir, "directory holding metrics.csv")->required();

    auto* sweep = app.add_subcommand("sweep", "batch runs along one scenario axis");
    sweep->add_option("--scenario", scenario_path, "base scenario")->required();
    sweep->add_option("--axis", axis, "corruption | participation | eta | pi")->required();
    sweep->add_option("--values", values, "axis values")->required();
    sweep->add_option("--seed", seed_spec, "seed or inclusive range a..b");
    sweep->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(scenario_path, seed_spec, out_dir);
        if (verify->parsed()) return verify_command(trace_path);
        if (metrics->parsed()) return metrics_command(trace_path, format);
        if (table->parsed()) return table_command(out_dir);
        if (sweep->parsed()) return sweep_command(scenario_path, axis, values, seed_spec, out_dir);
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SemanticError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const AsyncConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InsufficientTrace& e) {
        std::cerr << "insufficient trace: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
