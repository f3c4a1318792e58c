#include "catqkd/experiment.h"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "catqkd/certify.h"
#include "catqkd/dense_oracle.h"
#include "catqkd/transcript_io.h"
#include "json.hpp"

namespace catqkd {

using nlohmann::json;

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::Honest:
            return "honest";
        case Mode::Attack:
            return "attack";
        case Mode::Table3:
            return "table3";
        case Mode::Figures:
            return "figures";
        case Mode::Thresholds:
            return "thresholds";
        case Mode::OracleCheck:
            return "oracle-check";
    }
    return "?";
}

Mode parse_mode(std::string_view text) {
    for (Mode m : {Mode::Honest, Mode::Attack, Mode::Table3, Mode::Figures, Mode::Thresholds, Mode::OracleCheck}) {
        if (to_string(m) == text) {
            return m;
        }
    }
    if (text == "oracle_check") {
        return Mode::OracleCheck;
    }
    throw std::invalid_argument(
        "unknown mode '" + std::string(text) + "' (expected honest|attack|table3|figures|thresholds|oracle-check)");
}

namespace {

std::string_view to_string_knowledge(SourceKnowledge k) {
    return k == SourceKnowledge::CollectorOnly ? "collector_only" : "shared_in_a";
}

SourceKnowledge parse_knowledge(std::string_view text) {
    if (text == "collector_only") {
        return SourceKnowledge::CollectorOnly;
    }
    if (text == "shared_in_a") {
        return SourceKnowledge::SharedInA;
    }
    throw std::invalid_argument("unknown knowledge '" + std::string(text) + "' (expected collector_only|shared_in_a)");
}

bool uses_randomness(const ExperimentConfig& c) {
    switch (c.mode) {
        case Mode::Honest:
        case Mode::Attack:
        case Mode::OracleCheck:
            return true;
        case Mode::Figures:
            return c.figures_monte_carlo;
        case Mode::Table3:
        case Mode::Thresholds:
            return false;
    }
    return true;
}

}  // namespace

std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> out;
    if (c.mode == Mode::Honest || c.mode == Mode::Attack) {
        out = c.scenario.violations();
        // Attack mode treats n_rounds = 0 as "every round is a test round".
        const bool all_tests = c.mode == Mode::Attack && c.n_rounds == 0;
        if (!all_tests && c.n_rounds < c.scenario.t) {
            out.push_back(
                "n_rounds=" + std::to_string(c.n_rounds) + " is smaller than the test count t=" +
                std::to_string(c.scenario.t));
        }
        if (c.n_sessions == 0) {
            out.push_back("n_sessions must be at least 1");
        }
    }
    if (c.mode == Mode::Figures && c.figures_monte_carlo && c.n_sessions == 0) {
        out.push_back("n_sessions must be at least 1");
    }
    if (uses_randomness(c) && !c.seed) {
        out.push_back("seed is required for mode " + std::string(to_string(c.mode)) + " (set \"seed\" or --seed)");
    }
    if (c.mode == Mode::OracleCheck) {
        if (c.oracle_max_arity == 0 || c.oracle_max_arity > kDenseOracleMaxArity) {
            out.push_back(
                "oracle_max_arity must lie in [1, " + std::to_string(kDenseOracleMaxArity) + "] (got " +
                std::to_string(c.oracle_max_arity) + ")");
        }
        if (c.oracle_bases == 0) {
            out.push_back("oracle_bases must be at least 1");
        }
    }
    return out;
}

namespace {

// nlohmann's get<size_t>() wraps negative numbers silently.
std::uint64_t as_count(const json& v) {
    if (!v.is_number_unsigned()) {
        throw std::invalid_argument("expected a non-negative integer, got " + v.dump());
    }
    return v.get<std::uint64_t>();
}

}  // namespace

void apply_config_json(ExperimentConfig& c, std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw std::invalid_argument("config must be a flat JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        const json& v = it.value();
        try {
            if (key == "mode") {
                c.mode = parse_mode(v.get<std::string>());
            } else if (key == "protocol") {
                c.scenario.protocol = parse_protocol_variant(v.get<std::string>());
            } else if (key == "strategy") {
                c.scenario.strategy = parse_strategy(v.get<std::string>());
            } else if (key == "model") {
                c.model = parse_conspirator_model(v.get<std::string>());
            } else if (key == "exposure") {
                c.exposure = parse_exposure_model(v.get<std::string>());
            } else if (key == "knowledge") {
                c.knowledge = parse_knowledge(v.get<std::string>());
            } else if (key == "k") {
                c.scenario.k = as_count(v);
            } else if (key == "l") {
                c.scenario.l = as_count(v);
            } else if (key == "r_a") {
                c.scenario.r_a = as_count(v);
            } else if (key == "r_b") {
                c.scenario.r_b = as_count(v);
            } else if (key == "lambda") {
                c.scenario.lambda = v.get<double>();
            } else if (key == "t") {
                c.scenario.t = as_count(v);
            } else if (key == "n_prime") {
                c.scenario.n_prime = as_count(v);
            } else if (key == "n_rounds") {
                c.n_rounds = as_count(v);
            } else if (key == "n_sessions") {
                c.n_sessions = as_count(v);
            } else if (key == "seed") {
                if (v.is_null()) {
                    c.seed.reset();
                } else {
                    c.seed = as_count(v);
                }
            } else if (key == "out") {
                c.out = v.get<std::string>();
            } else if (key == "workers") {
                c.workers = as_count(v);
            } else if (key == "oracle_max_arity") {
                c.oracle_max_arity = as_count(v);
            } else if (key == "oracle_bases") {
                c.oracle_bases = as_count(v);
            } else if (key == "figures_monte_carlo") {
                c.figures_monte_carlo = v.get<bool>();
            } else if (key == "write_transcripts") {
                c.write_transcripts = v.get<bool>();
            } else {
                throw std::invalid_argument("unknown key");
            }
        } catch (const json::exception& e) {
            throw std::invalid_argument("config key '" + key + "': " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config key '" + key + "': " + e.what());
        }
    }
}

std::string config_to_json(const ExperimentConfig& c) {
    const ScenarioParams& s = c.scenario;
    json j = {
        {"mode", to_string(c.mode)},
        {"protocol", to_string(s.protocol)},
        {"strategy", to_string(s.strategy)},
        {"model", to_string(c.model)},
        {"exposure", to_string(c.exposure)},
        {"knowledge", to_string_knowledge(c.knowledge)},
        {"k", s.k},
        {"l", s.l},
        {"r_a", s.r_a},
        {"r_b", s.r_b},
        {"lambda", s.lambda},
        {"t", s.t},
        {"n_prime", s.n_prime},
        {"n_rounds", c.n_rounds},
        {"n_sessions", c.n_sessions},
        {"seed", c.seed ? json(*c.seed) : json(nullptr)},
        {"out", c.out},
        {"workers", c.workers},
        {"oracle_max_arity", c.oracle_max_arity},
        {"oracle_bases", c.oracle_bases},
        {"figures_monte_carlo", c.figures_monte_carlo},
        {"write_transcripts", c.write_transcripts},
    };
    return j.dump(2);
}

namespace {

struct Artifacts {
    std::filesystem::path dir;

    bool enabled() const {
        return !dir.empty();
    }
    void write(const std::string& name, const std::string& content) const {
        if (!enabled()) {
            return;
        }
        const auto path = dir / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw std::runtime_error("cannot open " + path.string() + " for writing");
        }
        f << content;
        if (!f) {
            throw std::runtime_error("failed writing " + path.string());
        }
    }
};

std::string scenario_line(const ScenarioParams& s) {
    std::ostringstream os;
    os << "protocol=" << to_string(s.protocol) << " strategy=" << to_string(s.strategy) << " k=" << s.k
       << " l=" << s.l << " r_a=" << s.r_a << " r_b=" << s.r_b << " lambda=" << format_number(s.lambda)
       << " t=" << s.t;
    return os.str();
}

ExitStatus run_honest(const ExperimentConfig& c, std::ostream& summary, const Artifacts& art) {
    SessionConfig cfg;
    cfg.spec = c.scenario.spec();
    cfg.variant = c.scenario.protocol;
    cfg.n_rounds = c.n_rounds;
    cfg.test_count = c.scenario.t;
    cfg.knowledge = c.knowledge;

    std::ostringstream csv;
    csv << "session,n_rounds,kept,sift_rate,tests,errors,key_length,keys_match\n";
    std::size_t total_rounds = 0, total_kept = 0, total_errors = 0, total_key = 0, mismatched = 0;
    for (std::size_t s = 0; s < c.n_sessions; ++s) {
        Rng rng(derive_seed(*c.seed, s));
        cfg.keep_transcripts = c.write_transcripts && s == 0;
        const SessionResult r = run_session(cfg, honest_hooks(), rng);
        const bool match = r.key_a == r.key_b;
        total_rounds += r.n_rounds;
        total_kept += r.kept_rounds;
        total_errors += r.errors_found;
        total_key += r.key_a.size();
        mismatched += match ? 0 : 1;
        csv << s << ',' << r.n_rounds << ',' << r.kept_rounds << ',' << format_number(r.sift_rate()) << ','
            << r.test_indices.size() << ',' << r.errors_found << ',' << r.key_a.size() << ',' << (match ? 1 : 0)
            << '\n';
        if (cfg.keep_transcripts) {
            std::ostringstream jl;
            write_jsonl(jl, r.rounds);
            art.write("transcripts.jsonl", jl.str());
        }
    }
    art.write("honest.csv", csv.str());
    const double sift = static_cast<double>(total_kept) / static_cast<double>(total_rounds);
    summary << "honest sessions: " << c.n_sessions << " x " << c.n_rounds << " rounds, "
            << scenario_line(c.scenario) << '\n'
            << "sift rate: " << format_number(sift) << '\n'
            << "mean key length: " << format_number(static_cast<double>(total_key) / c.n_sessions) << '\n'
            << "test errors: " << total_errors << '\n'
            << "sessions with mismatched keys: " << mismatched << '\n';
    const bool ok = total_errors == 0 && mismatched == 0;
    summary << (ok ? "PASS" : "FAIL") << ": honest key agreement\n";
    return ok ? ExitStatus::Ok : ExitStatus::CheckFailed;
}

ExitStatus run_attack(const ExperimentConfig& c, std::ostream& summary, const Artifacts& art) {
    MonteCarloOptions o;
    o.n_sessions = c.n_sessions;
    o.master_seed = *c.seed;
    o.workers = c.workers;
    o.exposure = c.exposure;
    o.model = c.model;
    o.knowledge = c.knowledge;
    o.n_rounds = c.n_rounds;
    const SweepPoint point{"attack", c.scenario};
    const auto rows = sweep(std::span<const SweepPoint>(&point, 1), o);
    // sweep() derives the row seed from the master seed.
    const SweepRow& row = rows.front();
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    art.write("attack.csv", csv.str());
    const auto& mc = *row.monte_carlo;
    summary << "attack: " << scenario_line(c.scenario) << " model=" << to_string(c.model)
            << " exposure=" << to_string(c.exposure) << '\n'
            << "analytic detection: " << format_number(row.analytic) << '\n'
            << "monte carlo detection: " << format_number(mc.value) << " (95% CI " << format_number(mc.ci_low)
            << " .. " << format_number(mc.ci_high) << ", " << mc.n_trials << " sessions)\n"
            << "analytic inside CI: " << (mc.contains(row.analytic) ? "yes" : "no") << '\n';
    if (protection_factor(c.scenario) == 0.0 && c.scenario.strategy != Strategy::None) {
        summary << "protection factor is 0: this configuration is insecure\n";
    }
    return ExitStatus::Ok;
}

ExitStatus run_table3(std::ostream& summary, const Artifacts& art) {
    const auto cells = reproduce_table3();
    std::ostringstream csv;
    csv << "r_b,t,computed,printed,abs_diff,match\n";
    std::size_t matched = 0;
    summary << "k=6 l=6 r_a=3, protocol 1 intercept/resend\n";
    summary << "r_b\\t";
    for (std::size_t i = 0; i < 7; ++i) {
        summary << '\t' << cells[i].t;
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& cell = cells[i];
        const bool ok = cell.matches();
        matched += ok;
        csv << cell.r_b << ',' << cell.t << ',' << format_number(cell.computed) << ',' << format_number(cell.printed)
            << ',' << format_number(std::abs(cell.computed - cell.printed)) << ',' << (ok ? 1 : 0) << '\n';
        if (i % 7 == 0) {
            summary << '\n' << cell.r_b;
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f%s", cell.computed, ok ? "" : "*");
        summary << '\t' << buf;
    }
    summary << '\n' << matched << "/" << cells.size() << " cells match the printed table to 5e-5\n";
    art.write("table3.csv", csv.str());
    return matched == cells.size() ? ExitStatus::Ok : ExitStatus::CheckFailed;
}

ExitStatus run_figures(const ExperimentConfig& c, std::ostream& summary, const Artifacts& art) {
    const auto grid = figures_grid();
    std::optional<MonteCarloOptions> o;
    if (c.figures_monte_carlo) {
        o.emplace();
        o->n_sessions = c.n_sessions;
        o->master_seed = *c.seed;
        o->workers = c.workers;
        o->exposure = c.exposure;
    }
    const auto rows = sweep(grid, o);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    art.write("figures.csv", csv.str());
    if (!art.enabled()) {
        summary << csv.str();
    }
    summary << rows.size() << " rows: protocol 1 intercept/resend over t for (k,l,r_a) = (6,4,3), (4,6,2), (6,6,3)\n";
    return ExitStatus::Ok;
}

ExitStatus run_thresholds(std::ostream& summary, const Artifacts& art) {
    const double x78 = exponent_requirement(0.95, 7.0 / 8.0);
    const double x34 = exponent_requirement(0.95, 3.0 / 4.0);
    summary << "exponent for detection >= 0.95, base 7/8: " << format_number(x78) << '\n'
            << "exponent for detection >= 0.95, base 3/4: " << format_number(x34) << '\n';

    std::ostringstream req;
    req << "protocol,strategy,k,l,r_a,r_b,lambda,f,exponent,lambda_t,min_t,insecure\n";
    const struct {
        ProtocolVariant protocol;
        std::size_t k, l, r_a, r_b;
    } cases[] = {
        {ProtocolVariant::Original, 6, 6, 3, 1}, {ProtocolVariant::Original, 6, 6, 3, 3},
        {ProtocolVariant::Original, 6, 6, 5, 4}, {ProtocolVariant::Original, 6, 6, 3, 5},
        {ProtocolVariant::Modified, 6, 6, 3, 3}, {ProtocolVariant::Modified, 6, 6, 3, 5},
    };
    summary << "required test bits (lambda = 1, target 0.95):\n";
    for (const auto& cs : cases) {
        ScenarioParams p;
        p.k = cs.k;
        p.l = cs.l;
        p.r_a = cs.r_a;
        p.r_b = cs.r_b;
        p.protocol = cs.protocol;
        const double f = protection_factor(p);
        const double base = 1.0 - per_bit_error_rate(p.protocol, p.strategy);
        const TestRequirement r = required_tests(0.95, base, f, 1.0);
        req << to_string(p.protocol) << ',' << to_string(p.strategy) << ',' << p.k << ',' << p.l << ',' << p.r_a
            << ',' << p.r_b << ",1," << format_number(f) << ',' << format_number(r.exponent) << ','
            << format_number(r.lambda_t) << ',' << (r.min_t ? std::to_string(*r.min_t) : "") << ','
            << (r.insecure ? 1 : 0) << '\n';
        summary << "  " << to_string(p.protocol) << " k=" << p.k << " l=" << p.l << " r_a=" << p.r_a
                << " r_b=" << p.r_b << ": f=" << format_number(f) << ", ";
        if (r.insecure) {
            summary << "insecure (no number of test bits detects the attack)\n";
        } else {
            summary << "t >= " << *r.min_t << '\n';
        }
    }

    std::ostringstream disc;
    disc << "statement,quantity,printed,derived,consistent,note\n";
    summary << "printed thresholds vs formula:\n";
    for (const auto& d : threshold_discrepancies()) {
        disc << '"' << d.statement << "\"," << '"' << d.quantity << "\"," << format_number(d.printed) << ','
             << format_number(d.derived) << ',' << (d.consistent ? 1 : 0) << ",\"" << d.note << "\"\n";
        summary << "  " << d.statement << "\n    " << d.quantity << ": printed " << format_number(d.printed)
                << ", derived " << format_number(d.derived) << (d.consistent ? " (consistent)" : " (differs)")
                << "; " << d.note << '\n';
    }
    art.write("required_tests.csv", req.str());
    art.write("thresholds.csv", disc.str());
    return ExitStatus::Ok;
}

ExitStatus run_oracle_check(const ExperimentConfig& c, std::ostream& summary, const Artifacts& art) {
    Rng rng(*c.seed);
    const auto eq = check_oracle_equivalence(c.oracle_max_arity, c.oracle_bases, rng);
    const auto laws = check_parity_laws(c.oracle_max_arity);
    const auto dec = check_decompositions(c.oracle_max_arity);
    const bool eq_ok = eq.max_total_variation < 1e-12;
    const bool laws_ok = laws.deterministic_violations == 0 && laws.uniform_violations == 0;
    const bool dec_ok = dec.failures.empty();
    summary << "oracle equivalence, arities 1.." << eq.max_arity << ": " << eq.cases
            << " cases, max total variation " << format_number(eq.max_total_variation);
    if (!eq.worst_case.empty()) {
        summary << " (worst: " << eq.worst_case << ")";
    }
    summary << (eq_ok ? " PASS" : " FAIL") << '\n'
            << "parity laws: " << laws.basis_vectors << " basis vectors, " << laws.support_points
            << " support points, " << laws.deterministic_violations << " deterministic and "
            << laws.uniform_violations << " uniform violations" << (laws_ok ? " PASS" : " FAIL") << '\n'
            << "decompositions: " << dec.cases << " cases, " << dec.failures.size() << " failures"
            << (dec_ok ? " PASS" : " FAIL") << '\n';
    for (const auto& f : dec.failures) {
        summary << "  " << f << '\n';
    }
    std::ostringstream csv;
    csv << "check,cases,metric,pass\n"
        << "oracle_equivalence," << eq.cases << ',' << format_number(eq.max_total_variation) << ',' << eq_ok << '\n'
        << "parity_laws," << laws.basis_vectors << ',' << laws.deterministic_violations + laws.uniform_violations
        << ',' << laws_ok << '\n'
        << "decompositions," << dec.cases << ',' << dec.failures.size() << ',' << dec_ok << '\n';
    art.write("oracle_check.csv", csv.str());
    return eq_ok && laws_ok && dec_ok ? ExitStatus::Ok : ExitStatus::CheckFailed;
}

}  // namespace

ExitStatus run(const ExperimentConfig& config, std::ostream& summary, std::ostream& errors) {
    const auto problems = validate(config);
    if (!problems.empty()) {
        errors << "invalid configuration:\n";
        for (const auto& p : problems) {
            errors << "  - " << p << '\n';
        }
        return ExitStatus::InvalidConfig;
    }
    Artifacts art{config.out};
    try {
        if (art.enabled()) {
            std::error_code ec;
            std::filesystem::create_directories(art.dir, ec);
            if (ec) {
                throw std::runtime_error("cannot create output directory " + art.dir.string() + ": " + ec.message());
            }
        }
        std::ostringstream text;
        ExitStatus status = ExitStatus::Ok;
        switch (config.mode) {
            case Mode::Honest:
                status = run_honest(config, text, art);
                break;
            case Mode::Attack:
                status = run_attack(config, text, art);
                break;
            case Mode::Table3:
                status = run_table3(text, art);
                break;
            case Mode::Figures:
                status = run_figures(config, text, art);
                break;
            case Mode::Thresholds:
                status = run_thresholds(text, art);
                break;
            case Mode::OracleCheck:
                status = run_oracle_check(config, text, art);
                break;
        }
        art.write("summary_" + std::string(to_string(config.mode)) + ".txt", text.str());
        summary << text.str();
        return status;
    } catch (const std::invalid_argument& e) {
        errors << "invalid configuration: " << e.what() << '\n';
        return ExitStatus::InvalidConfig;
    } catch (const std::exception& e) {
        errors << "error: " << e.what() << '\n';
        return ExitStatus::RuntimeError;
    }
}

}  // namespace catqkd
