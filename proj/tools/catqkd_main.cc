#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "catqkd/experiment.h"

namespace {

using catqkd::ExitStatus;
using catqkd::ExperimentConfig;
using catqkd::Mode;

// Flag values; unset ones leave the file/default value alone.
struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> k, l, r_a, r_b, t, n_prime, n_rounds, n_sessions, oracle_max_arity, oracle_bases;
    std::optional<double> lambda;
    std::optional<std::string> protocol, strategy, model, exposure, knowledge;
    bool figures_mc = false;
    bool transcripts = false;
    bool print_config = false;
};

void add_options(CLI::App& app, Overrides& o) {
    app.add_option("--config", o.config_path, "Flat JSON config file (flags override it)");
    app.add_option("--seed", o.seed, "Master seed");
    app.add_option("--out", o.out, "Output directory for CSV/JSONL artifacts");
    app.add_option("--workers", o.workers, "Monte Carlo worker threads (0 = all cores)");
    app.add_option("--k", o.k, "Members in group A");
    app.add_option("--l", o.l, "Members in group B");
    app.add_option("--r-a", o.r_a, "Conspirators in A");
    app.add_option("--r-b", o.r_b, "Conspirators in B");
    app.add_option("--lambda", o.lambda, "Eavesdropping rate");
    app.add_option("--t", o.t, "Test bits per session");
    app.add_option("--n-prime", o.n_prime, "Size of Eve's cat state (entangled resend)");
    app.add_option("--n-rounds", o.n_rounds, "Rounds per session");
    app.add_option("--n-sessions", o.n_sessions, "Sessions");
    app.add_option("--protocol", o.protocol, "original|modified");
    app.add_option("--strategy", o.strategy, "none|intercept_resend|entangled_resend");
    app.add_option("--model", o.model, "ratio|mechanistic");
    app.add_option("--exposure", o.exposure, "pinned_exponent|independent_rounds");
    app.add_option("--knowledge", o.knowledge, "collector_only|shared_in_a");
    app.add_option("--oracle-max-arity", o.oracle_max_arity, "Largest arity for oracle-check");
    app.add_option("--oracle-bases", o.oracle_bases, "Random basis vectors per state and arity");
    app.add_flag("--figures-mc", o.figures_mc, "Add Monte Carlo columns to figures output");
    app.add_flag("--transcripts", o.transcripts, "Write the first session's rounds as JSONL");
    app.add_flag("--print-config", o.print_config, "Print the resolved config as JSON");
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot read config file " + path);
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

template <typename T, typename Fn>
void set_if(const std::optional<T>& v, Fn&& fn) {
    if (v) {
        fn(*v);
    }
}

void apply_overrides(ExperimentConfig& c, const Overrides& o) {
    set_if(o.seed, [&](auto v) { c.seed = v; });
    set_if(o.out, [&](const auto& v) { c.out = v; });
    set_if(o.workers, [&](auto v) { c.workers = v; });
    set_if(o.k, [&](auto v) { c.scenario.k = v; });
    set_if(o.l, [&](auto v) { c.scenario.l = v; });
    set_if(o.r_a, [&](auto v) { c.scenario.r_a = v; });
    set_if(o.r_b, [&](auto v) { c.scenario.r_b = v; });
    set_if(o.lambda, [&](auto v) { c.scenario.lambda = v; });
    set_if(o.t, [&](auto v) { c.scenario.t = v; });
    set_if(o.n_prime, [&](auto v) { c.scenario.n_prime = v; });
    set_if(o.n_rounds, [&](auto v) { c.n_rounds = v; });
    set_if(o.n_sessions, [&](auto v) { c.n_sessions = v; });
    set_if(o.oracle_max_arity, [&](auto v) { c.oracle_max_arity = v; });
    set_if(o.oracle_bases, [&](auto v) { c.oracle_bases = v; });
    set_if(o.protocol, [&](const auto& v) { c.scenario.protocol = catqkd::parse_protocol_variant(v); });
    set_if(o.strategy, [&](const auto& v) { c.scenario.strategy = catqkd::parse_strategy(v); });
    set_if(o.model, [&](const auto& v) { c.model = catqkd::parse_conspirator_model(v); });
    set_if(o.exposure, [&](const auto& v) { c.exposure = catqkd::parse_exposure_model(v); });
    set_if(o.knowledge, [&](const auto& v) {
        // Reuse the JSON reader so both paths accept the same spellings.
        catqkd::apply_config_json(c, "{\"knowledge\": \"" + v + "\"}");
    });
    if (o.figures_mc) {
        c.figures_monte_carlo = true;
    }
    if (o.transcripts) {
        c.write_transcripts = true;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiparty cat-state key distribution simulator"};
    app.require_subcommand(1);
    Overrides o;

    struct Sub {
        const char* name;
        const char* help;
        std::optional<Mode> mode;
    };
    const Sub subs[] = {
        {"honest", "Honest sessions: key agreement and sift rate", Mode::Honest},
        {"attack", "Analytic and Monte Carlo detection for one scenario", Mode::Attack},
        {"table3", "Detection table for k=6, l=6, r_a=3 against the printed values", Mode::Table3},
        {"figures", "CSV curves of detection versus t", Mode::Figures},
        {"thresholds", "Test-bit thresholds and printed-vs-derived comparison", Mode::Thresholds},
        {"oracle-check", "Closed-form sampler against the dense statevector oracle", Mode::OracleCheck},
        {"validate", "Validate a config without running it", std::nullopt},
    };
    std::optional<Mode> chosen;
    bool validate_only = false;
    for (const auto& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        add_options(*sub, o);
        sub->callback([&, s] {
            chosen = s.mode;
            validate_only = !s.mode.has_value();
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitStatus::InvalidConfig);
    }

    ExperimentConfig config;
    if (chosen) {
        config.mode = *chosen;
    }
    try {
        if (!o.config_path.empty()) {
            const Mode subcommand_mode = config.mode;
            catqkd::apply_config_json(config, read_file(o.config_path));
            if (chosen) {
                config.mode = subcommand_mode;
            }
        }
        apply_overrides(config, o);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return static_cast<int>(ExitStatus::InvalidConfig);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitStatus::RuntimeError);
    }

    if (o.print_config) {
        std::cout << catqkd::config_to_json(config) << '\n';
    }
    if (validate_only) {
        const auto problems = catqkd::validate(config);
        if (problems.empty()) {
            std::cout << "config is valid (mode " << catqkd::to_string(config.mode) << ")\n";
            return 0;
        }
        for (const auto& p : problems) {
            std::cerr << "  - " << p << '\n';
        }
        return static_cast<int>(ExitStatus::InvalidConfig);
    }
    return static_cast<int>(catqkd::run(config, std::cout, std::cerr));
}
