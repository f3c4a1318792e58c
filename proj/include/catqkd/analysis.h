#ifndef CATQKD_ANALYSIS_H
#define CATQKD_ANALYSIS_H

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catqkd/adversary.h"
#include "catqkd/protocol.h"

namespace catqkd {

enum class EstimateKind : std::uint8_t { Analytic, MonteCarlo };

struct DetectionEstimate {
    double value = 0.0;
    EstimateKind kind = EstimateKind::Analytic;
    /// 95% Wilson score interval; equal to value for analytic estimates.
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_trials = 0;
    std::size_t successes = 0;

    bool contains(double x) const {
        return ci_low <= x && x <= ci_high;
    }
};

/// 95% Wilson score interval for `successes` out of `trials`.
DetectionEstimate wilson_estimate(std::size_t successes, std::size_t trials);

struct ScenarioParams {
    std::size_t k = 0;
    std::size_t l = 0;
    std::size_t r_a = 0;
    std::size_t r_b = 0;
    double lambda = 1.0;
    std::size_t t = 0;
    ProtocolVariant protocol = ProtocolVariant::Original;
    Strategy strategy = Strategy::InterceptResend;
    /// Entangled resend only; 0 picks l + 1.
    std::size_t n_prime = 0;

    GroupSpec spec() const {
        return GroupSpec{k, l};
    }
    std::size_t effective_n_prime() const {
        return n_prime == 0 ? l + 1 : n_prime;
    }
    AdversaryConfig adversary(ConspiratorModel model = ConspiratorModel::Ratio) const;
    std::vector<std::string> violations() const;
    void validate() const;
};

/// Probability that one intercepted, unshielded test round shows an error.
/// Discarded test rounds count as passes.
double per_bit_error_rate(ProtocolVariant protocol, Strategy strategy);

/// Factor f in 1 - (1 - e)^(lambda t f); zero means the attack is invisible.
double protection_factor(const ScenarioParams& p);

/// Protocol 1 intercept/resend. Throws std::invalid_argument on a mismatched
/// protocol or strategy and on parameter-bound violations.
double detect_prob_original_ir(const ScenarioParams& p);
/// Modified protocol intercept/resend.
double detect_prob_modified_ir(const ScenarioParams& p);
/// Entangled resend, either protocol.
double detect_prob_entangled(const ScenarioParams& p);
/// Dispatches on protocol and strategy; Strategy::None gives 0.
double detect_prob(const ScenarioParams& p);

/// Exponent x such that 1 - base^x >= target iff lambda t f >= x.
double exponent_requirement(double target, double base);

struct TestRequirement {
    /// f = 0: no number of test bits reveals the attack.
    bool insecure = false;
    double exponent = 0.0;
    /// exponent / f.
    double lambda_t = 0.0;
    /// Smallest integer t with 1 - base^(lambda t f) >= target.
    std::optional<std::size_t> min_t;
};

/// Throws std::invalid_argument unless 0 < target < 1, 0 < base < 1,
/// 0 <= f <= 1 and 0 < lambda <= 1.
TestRequirement required_tests(double target, double base, double f, double lambda = 1.0);

/// A published threshold next to the value derived from the
/// detection formula at the same parameters.
struct ThresholdComparison {
    std::string statement;
    std::string quantity;
    double printed = 0.0;
    double derived = 0.0;
    /// Printed value agrees with the derived one after rounding to its
    /// printed precision (or, for bounds, the printed bound is the derived
    /// bound rounded up).
    bool consistent = false;
    std::string note;
};

std::vector<ThresholdComparison> threshold_discrepancies();

struct Table3Cell {
    std::size_t r_b = 0;
    std::size_t t = 0;
    double computed = 0.0;
    double printed = 0.0;

    bool matches(double tolerance = 5e-5) const;
};

/// k = 6, l = 6, r_a = 3, r_b in {1, 2, 3}, t in {20, ..., 140}; row-major.
std::vector<Table3Cell> reproduce_table3();

/// How the Monte Carlo harness draws which test rounds are exposed.
enum class ExposureModel : std::uint8_t {
    /// The number of intercepted, unshielded test rounds is pinned to
    /// floor(x) + Bernoulli(p) with x = lambda t f, p chosen so that the
    /// detection probability is exactly 1 - (1 - e)^x.
    PinnedExponent,
    /// Every round is intercepted and shielded independently; detection is
    /// then 1 - (1 - lambda f e)^t.
    IndependentRounds,
};

std::string_view to_string(ExposureModel model);
ExposureModel parse_exposure_model(std::string_view text);

/// Closed form matching ExposureModel::IndependentRounds.
double detect_prob_independent_rounds(const ScenarioParams& p);

struct MonteCarloOptions {
    std::size_t n_sessions = 10000;
    std::uint64_t master_seed = 1;
    /// 0 uses std::thread::hardware_concurrency().
    std::size_t workers = 1;
    ExposureModel exposure = ExposureModel::PinnedExponent;
    ConspiratorModel model = ConspiratorModel::Ratio;
    SourceKnowledge knowledge = SourceKnowledge::SharedInA;
    LastMemberPolicy last_member_policy = LastMemberPolicy::HighestNonCollector;
    /// Rounds per session; 0 uses t (every round is a test round).
    std::size_t n_rounds = 0;
};

/// Fraction of sessions whose test step finds an error. Session i uses
/// derive_seed(master_seed, i), so the result does not depend on `workers`.
DetectionEstimate monte_carlo_detection(const ScenarioParams& p, const MonteCarloOptions& options);

struct ErrorRateEstimate {
    std::size_t test_rounds = 0;
    std::size_t errors = 0;
    std::size_t kept = 0;
    DetectionEstimate rate;
};

/// Every round is a test round; returns errors per test round, intercepting
/// each round with probability lambda and no shielding unless conspirators
/// are configured.
ErrorRateEstimate monte_carlo_error_rate(
    const ScenarioParams& p, std::size_t total_rounds, const MonteCarloOptions& options);

struct SweepRow {
    std::string scenario;
    ScenarioParams params;
    double analytic = 0.0;
    std::optional<DetectionEstimate> monte_carlo;
};

struct SweepPoint {
    std::string scenario;
    ScenarioParams params;
};

/// Analytic value for every point, plus a Monte Carlo estimate when
/// `options` is given. Throws std::invalid_argument on an empty grid.
std::vector<SweepRow> sweep(std::span<const SweepPoint> grid, const std::optional<MonteCarloOptions>& options);

/// Protocol 1 intercept/resend curves over t for r_b = 1 .. l - 1.
std::vector<SweepPoint> figure_grid(
    std::string_view name, std::size_t k, std::size_t l, std::size_t r_a, std::span<const std::size_t> t_values);

/// The three figure configurations (k, l, r_a) = (6, 4, 3), (4, 6, 2),
/// (6, 6, 3) over t = 10, 20, ..., 200.
std::vector<SweepPoint> figures_grid();

inline constexpr std::string_view kCsvSchema = "catqkd.csv/1";

/// Header plus one row per SweepRow; format documented in README.md.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

std::string format_number(double x);

}  // namespace catqkd

#endif
