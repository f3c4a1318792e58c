#ifndef CATQKD_ADVERSARY_H
#define CATQKD_ADVERSARY_H

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "catqkd/cat_state.h"
#include "catqkd/channel.h"
#include "catqkd/protocol.h"
#include "catqkd/rng.h"

namespace catqkd {

enum class Strategy : std::uint8_t {
    None,
    /// Measure B's block in transit and forward the observed block state.
    InterceptResend,
    /// Keep B's block and forward l particles of a fresh n'-particle cat state.
    EntangledResend,
};

enum class ConspiratorModel : std::uint8_t {
    /// Rounds are shielded at the fixed per-case rates of the closed forms.
    Ratio,
    /// Shielding happens only when conspirators actually hold the roles that
    /// let them rewrite announcements, under collector rotation.
    Mechanistic,
};

std::string_view to_string(Strategy strategy);
std::string_view to_string(ConspiratorModel model);
Strategy parse_strategy(std::string_view text);
ConspiratorModel parse_conspirator_model(std::string_view text);

struct AdversaryConfig {
    Strategy strategy = Strategy::None;
    /// Per-round interception probability.
    double lambda = 0.0;
    /// Conspirators are members 0..r_a-1 of A and 0..r_b-1 of B.
    std::size_t r_a = 0;
    std::size_t r_b = 0;
    /// Size of Eve's own cat state for EntangledResend; must exceed l.
    std::size_t n_prime = 0;
    ConspiratorModel model = ConspiratorModel::Ratio;
    /// Basis family Eve measures the intercepted block in.
    BlockFamily eve_family = BlockFamily::Phi;
    /// Mechanistic model: a conspirator who is not the collector takes the
    /// last-announcer slot whenever one is available.
    bool seize_last_slot = true;

    std::vector<std::string> violations(const GroupSpec& spec) const;
    void validate(const GroupSpec& spec) const;
};

struct InterceptResult {
    CatState block_a;
    CatState block_b;
    EveRoundState eve;
};

/// Eve measures the last l particles in the two-outcome cat basis of
/// `family` and forwards the observed l-particle state unchanged; A's block
/// collapses accordingly.
InterceptResult eve_intercept_resend(
    const CatState& source, std::size_t l, Rng& rng, BlockFamily family = BlockFamily::Phi);

/// Eve keeps B's l particles and forwards l particles of a fresh, uniformly
/// chosen n'-particle cat state. A's block and B's block are returned as
/// pure cat states drawn from their (equal-weight two-state) mixtures; the
/// record holds the matching states of the intercepted and remainder blocks.
InterceptResult eve_entangled_resend(const CatState& source, std::size_t l, std::size_t n_prime, Rng& rng);

/// Probability that an intercepted round is shielded under the ratio
/// model: one minus the factor multiplying lambda*t in the detection
/// exponent, clamped to [0, 1].
double ratio_protection_probability(
    ProtocolVariant variant, Strategy strategy, const GroupSpec& spec, std::size_t r_a, std::size_t r_b);

/// Kind of shielding drawn for a round already known to be shielded under
/// the ratio model.
Protection ratio_protection_kind(
    ProtocolVariant variant, Strategy strategy, const GroupSpec& spec, std::size_t r_a, std::size_t r_b, Rng& rng);

struct ProtectionContext {
    ProtocolVariant variant;
    GroupSpec spec;
    RoleAssignment roles;
    SourceKnowledge knowledge = SourceKnowledge::SharedInA;
};

/// Ratio model: draws SuppressError / ForceDiscard / Unprotected at the
/// per-case rates. Mechanistic model: the protection the conspirators'
/// current roles allow (no randomness). Throws std::invalid_argument for an
/// inconsistent configuration.
Protection conspirator_protection(const ProtectionContext& ctx, const AdversaryConfig& config, Rng& rng);

/// Pre-decided action for one round, used to pin the number of exposed
/// test rounds.
struct RoundPlan {
    bool intercept = false;
    Protection protection = Protection::Unprotected;
};

/// Per-session eavesdropper plus conspirators.
class Adversary : public RoundHooks {
  public:
    Adversary(AdversaryConfig config, GroupSpec spec, ProtocolVariant variant,
              SourceKnowledge knowledge = SourceKnowledge::SharedInA);

    /// Per-round plans indexed by round number; rounds beyond the plan are
    /// drawn independently.
    void set_plan(std::vector<RoundPlan> plan) {
        plan_ = std::move(plan);
    }
    const AdversaryConfig& config() const {
        return config_;
    }
    bool is_conspirator(Group group, MemberId member) const;

    RoleAssignment assign_roles(std::size_t round, const RoleAssignment& scheduled) override;
    Delivery transmit(const RoundContext& ctx, const CatState& source, Rng& rng, EveRoundState& record) override;
    Basis announce_basis(
        const RoundContext& ctx, const RoundTranscript& draft, Group group, MemberId member, Basis measured,
        Rng& rng) override;
    Bit settle_parity(const RoundContext& ctx, const RoundTranscript& draft, Group group, Bit chain_parity) override;
    Bit reveal_parity(const RoundContext& ctx, const RoundTranscript& draft, Group group, Bit held_parity) override;
    Protection protection_applied(const RoundContext& ctx) override;

  private:
    // How the conspirators act in the current round (mechanistic model).
    enum class Tactic : std::uint8_t {
        None,
        FixB,           // last + collector of B pin B's bit to Eve's forwarded state
        FixA,           // last + collector of A pin A's bit to its collapsed state
        RevealFixB,     // B's collector lies in the test reveal, after A
        DiscardByLastB, // B's last member spoils the sift on risky rounds
        RevealFixA,     // A's collector lies in the test reveal using Eve's data
        RatioSettleA,   // ratio model: A's collector corrects its parity
        RatioSettleB,   // ratio model: B's collector corrects its parity
        RatioDiscard,   // ratio model: B's last member spoils the sift
    };

    bool knows_source(const RoleAssignment& roles) const;
    Tactic choose_tactic(const RoleAssignment& roles, Protection protection) const;
    Tactic ratio_tactic(Protection protection) const;

    AdversaryConfig config_;
    GroupSpec spec_;
    ProtocolVariant variant_;
    SourceKnowledge knowledge_;
    std::vector<RoundPlan> plan_;

    Protection protection_ = Protection::Unprotected;
    Tactic tactic_ = Tactic::None;
    std::optional<CatState> block_a_;
    std::optional<CatState> block_b_;
};

enum class Misbehavior : std::uint8_t {
    /// Flip the reported outcome every round.
    FlipOutcome,
    /// Announce the basis not used.
    FalseBasis,
    /// Flip the reported outcome with probability 1/2.
    RandomFlip,
};

std::string_view to_string(Misbehavior misbehavior);

struct MemberContext {
    Group group;
    MemberId member;
    bool is_collector;
    Basis measured_basis;
    Bit measured_outcome;
};

struct MemberReport {
    Basis announced_basis;
    Bit reported_outcome;
};

/// What a faulty, non-collector member announces and reports. Throws
/// std::invalid_argument when the member is the collector.
MemberReport misbehaving_member(const MemberContext& ctx, Misbehavior misbehavior, Rng& rng);

/// Hooks for one faulty member. In rounds where the member is collector it
/// behaves honestly.
class MisbehavingMember : public RoundHooks {
  public:
    MisbehavingMember(Group group, MemberId member, Misbehavior misbehavior)
        : group_(group), member_(member), misbehavior_(misbehavior) {
    }

    Basis announce_basis(
        const RoundContext& ctx, const RoundTranscript& draft, Group group, MemberId member, Basis measured,
        Rng& rng) override;
    Bit report_outcome(
        const RoundContext& ctx, const RoundTranscript& draft, Group group, MemberId member, Bit measured,
        Rng& rng) override;

  private:
    bool active(const RoundContext& ctx, Group group, MemberId member) const;

    Group group_;
    MemberId member_;
    Misbehavior misbehavior_;
};

}  // namespace catqkd

#endif
