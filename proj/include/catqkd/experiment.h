#ifndef CATQKD_EXPERIMENT_H
#define CATQKD_EXPERIMENT_H

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "catqkd/analysis.h"

namespace catqkd {

enum class Mode : std::uint8_t { Honest, Attack, Table3, Figures, Thresholds, OracleCheck };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// Flat experiment description. Every field has a JSON key of the same
/// name; see README.md.
struct ExperimentConfig {
    Mode mode = Mode::Honest;
    ScenarioParams scenario{3, 3, 0, 0, 1.0, 20, ProtocolVariant::Original, Strategy::None, 0};
    ConspiratorModel model = ConspiratorModel::Ratio;
    ExposureModel exposure = ExposureModel::PinnedExponent;
    SourceKnowledge knowledge = SourceKnowledge::SharedInA;
    std::size_t n_rounds = 1000;
    std::size_t n_sessions = 1000;
    /// Required by every mode that samples.
    std::optional<std::uint64_t> seed;
    /// Output directory; empty writes nothing to disk.
    std::string out;
    std::size_t workers = 1;
    /// OracleCheck mode.
    std::size_t oracle_max_arity = 10;
    std::size_t oracle_bases = 200;
    /// Figures mode: add Monte Carlo columns.
    bool figures_monte_carlo = false;
    /// Honest / Attack mode: dump the first session's rounds as JSONL.
    bool write_transcripts = false;
};

/// Actionable messages; empty iff the config can be run.
std::vector<std::string> validate(const ExperimentConfig& config);

/// Overlays the keys present in a flat JSON object onto `config`. Throws
/// std::invalid_argument on malformed JSON, unknown keys or bad values.
void apply_config_json(ExperimentConfig& config, std::string_view json_text);

/// The config as a flat JSON object (all keys).
std::string config_to_json(const ExperimentConfig& config);

enum class ExitStatus : int { Ok = 0, CheckFailed = 1, InvalidConfig = 2, RuntimeError = 3 };

/// Runs one mode. The summary goes to `summary`; CSV and JSONL artifacts go
/// to config.out when set. Never throws: failures map to an ExitStatus with
/// the message on `errors`.
ExitStatus run(const ExperimentConfig& config, std::ostream& summary, std::ostream& errors);

}  // namespace catqkd

#endif
