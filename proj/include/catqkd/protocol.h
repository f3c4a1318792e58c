#ifndef CATQKD_PROTOCOL_H
#define CATQKD_PROTOCOL_H

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "catqkd/cat_state.h"
#include "catqkd/channel.h"
#include "catqkd/rng.h"

namespace catqkd {

enum class ProtocolVariant : std::uint8_t {
    /// Every member measures independently; half the rounds are sifted away.
    Original,
    /// A's collector acts as chairperson and picks its basis last so that
    /// every round is kept.
    Modified,
};

enum class Group : std::uint8_t { A, B };

using MemberId = std::size_t;

std::string_view to_string(ProtocolVariant variant);
std::string_view to_string(Group group);
ProtocolVariant parse_protocol_variant(std::string_view text);

struct GroupSpec {
    std::size_t k = 0;
    std::size_t l = 0;

    std::size_t n() const {
        return k + l;
    }
    std::size_t size(Group g) const {
        return g == Group::A ? k : l;
    }
    /// Human-readable size-bound violations; empty when the spec is usable.
    std::vector<std::string> violations(ProtocolVariant variant) const;
    /// Throws std::invalid_argument listing every violation.
    void validate(ProtocolVariant variant) const;
};

/// Who holds the source-state label before it is announced.
enum class SourceKnowledge : std::uint8_t { CollectorOnly, SharedInA };

struct RoleAssignment {
    MemberId collector_a = 0;
    MemberId collector_b = 0;
    MemberId last_a = 0;
    MemberId last_b = 0;
    /// Modified protocol only.
    std::optional<MemberId> chairperson;

    MemberId collector(Group g) const {
        return g == Group::A ? collector_a : collector_b;
    }
    MemberId last(Group g) const {
        return g == Group::A ? last_a : last_b;
    }

    std::vector<std::string> violations(
        const GroupSpec& spec, ProtocolVariant variant,
        SourceKnowledge knowledge = SourceKnowledge::CollectorOnly) const;
    void validate(
        const GroupSpec& spec, ProtocolVariant variant,
        SourceKnowledge knowledge = SourceKnowledge::CollectorOnly) const;

    friend bool operator==(const RoleAssignment&, const RoleAssignment&) = default;
};

enum class LastMemberPolicy : std::uint8_t {
    /// Highest-numbered member that is not the collector.
    HighestNonCollector,
    /// The member after the collector in ring order.
    SuccessorOfCollector,
};

/// Round-robin collector rotation in both groups.
class RoleSchedule {
  public:
    RoleSchedule(GroupSpec spec, ProtocolVariant variant, LastMemberPolicy policy = LastMemberPolicy::HighestNonCollector);

    RoleAssignment roles_for(std::size_t round) const;

  private:
    GroupSpec spec_;
    ProtocolVariant variant_;
    LastMemberPolicy policy_;
};

enum class EventKind : std::uint8_t { BasisAnnouncement, ParityReveal, SourceAnnouncement };

struct AnnouncementEvent {
    EventKind kind;
    /// Unused for SourceAnnouncement.
    Group group = Group::A;
    /// BasisAnnouncement only.
    MemberId member = 0;

    friend bool operator==(const AnnouncementEvent&, const AnnouncementEvent&) = default;
};

/// Public-channel log of one round. Every append checks the round's ordering
/// rules and throws std::logic_error instead of recording an illegal event:
///  - each member announces a basis once; a group's last member announces
///    after the rest of its group, and B's last member after all of A
///    (the chairperson excepted);
///  - the chairperson announces after everybody else;
///  - parity reveals follow the basis announcements, A before B;
///  - the source is announced once, after all bases and after any reveal
///    has been completed by both groups; nothing follows it.
class AnnouncementLog {
  public:
    AnnouncementLog(const GroupSpec& spec, ProtocolVariant variant, const RoleAssignment& roles);

    void announce_basis(Group group, MemberId member);
    void reveal_parity(Group group);
    void announce_source();

    const std::vector<AnnouncementEvent>& events() const {
        return events_;
    }
    bool bases_complete() const {
        return announced_a_ + announced_b_ == spec_.n();
    }
    std::size_t announced(Group g) const {
        return g == Group::A ? announced_a_ : announced_b_;
    }
    bool source_announced() const {
        return source_announced_;
    }

  private:
    bool is_chairperson(Group group, MemberId member) const;

    GroupSpec spec_;
    ProtocolVariant variant_;
    RoleAssignment roles_;
    std::vector<bool> done_a_;
    std::vector<bool> done_b_;
    std::size_t announced_a_ = 0;
    std::size_t announced_b_ = 0;
    bool revealed_a_ = false;
    bool revealed_b_ = false;
    bool source_announced_ = false;
    std::vector<AnnouncementEvent> events_;
};

struct ParityChainResult {
    Bit parity = 0;
    /// hops[i] is the running value sent by the i-th member in ring order
    /// starting at the collector; the last hop returns to the collector.
    std::vector<Bit> hops;
};

/// Masked ring collection of a group's outcome parity. The collector adds
/// the mask to its own outcome and every member adds its outcome before
/// passing the value on, so hop i carries mask xor (partial sum).
ParityChainResult collect_parity_chain(std::span<const Bit> outcomes, MemberId collector, Bit mask);

/// Uniform over the four n-particle cat states.
CatState choose_source(std::size_t n, Rng& rng);

/// Step-6 sift: Phi sources keep even total Y counts, Lambda sources odd.
bool sift(const CatState& source, std::size_t n_y_a, std::size_t n_y_b);

/// A's shared bit is canonical; B flips when the expected relation is Anti.
/// Throws std::logic_error for a discarded round.
std::pair<Bit, Bit> reconcile(
    const CatState& source, const GroupStats& stats_a, const GroupStats& stats_b, Bit bit_a, Bit bit_b);

/// Basis that makes the sift keep the round given the Y count announced by
/// the other n - 1 members.
Basis chairperson_basis(const CatState& source, std::size_t n_y_others_total);

/// Everything one round produces. Bases are as announced and outcomes as fed
/// into the parity chain; the measured_* fields hold what the members
/// actually did, which differs only when somebody cheats.
struct RoundTranscript {
    std::size_t round_index = 0;
    ProtocolVariant variant = ProtocolVariant::Original;
    RoleAssignment roles;
    CatState source = CatState::phi_plus(1);

    BasisVector bases_a;
    BasisVector bases_b;
    BasisVector measured_bases_a;
    BasisVector measured_bases_b;
    Outcome outcomes_a;
    Outcome outcomes_b;
    Outcome measured_outcomes_a;
    Outcome measured_outcomes_b;

    /// Y counts from the announced bases, parity as settled by the collector.
    GroupStats stats_a;
    GroupStats stats_b;
    Bit mask_r_a = 0;
    Bit mask_r_b = 0;
    std::vector<Bit> hops_a;
    std::vector<Bit> hops_b;
    Bit shared_bit_a = 0;
    Bit shared_bit_b = 0;

    bool kept = false;
    bool selected_for_test = false;
    std::optional<Bit> revealed_parity_a;
    std::optional<Bit> revealed_parity_b;
    /// Kept test round whose revealed parities break the expected relation.
    bool test_error = false;

    EveRoundState eve;
    Protection protection = Protection::Unprotected;

    std::vector<AnnouncementEvent> announcement_order;

    const BasisVector& bases(Group g) const {
        return g == Group::A ? bases_a : bases_b;
    }
    const GroupStats& stats(Group g) const {
        return g == Group::A ? stats_a : stats_b;
    }
};

struct RoundContext {
    std::size_t round_index;
    ProtocolVariant variant;
    const GroupSpec& spec;
    const RoleAssignment& roles;
};

/// Interference points for adversaries and faulty members. The defaults
/// describe an honest round over an untouched channel. `draft` is the round
/// as far as it has progressed when the hook is called.
class RoundHooks {
  public:
    virtual ~RoundHooks() = default;

    /// Chance to override the scheduled roles; the result is validated.
    virtual RoleAssignment assign_roles(std::size_t /*round*/, const RoleAssignment& scheduled) {
        return scheduled;
    }
    /// Step 1 transmission. Fill `record` when the particles are touched.
    virtual Delivery transmit(const RoundContext& ctx, const CatState& source, Rng& rng, EveRoundState& record);
    /// Basis the member announces, given the one it measured in.
    virtual Basis announce_basis(
        const RoundContext& /*ctx*/, const RoundTranscript& /*draft*/, Group /*group*/, MemberId /*member*/,
        Basis measured, Rng& /*rng*/) {
        return measured;
    }
    /// Outcome the member feeds into its group's parity chain.
    virtual Bit report_outcome(
        const RoundContext& /*ctx*/, const RoundTranscript& /*draft*/, Group /*group*/, MemberId /*member*/,
        Bit measured, Rng& /*rng*/) {
        return measured;
    }
    /// Parity the collector keeps after unmasking the chain. Groups settle in
    /// order A then B.
    virtual Bit settle_parity(
        const RoundContext& /*ctx*/, const RoundTranscript& /*draft*/, Group /*group*/, Bit chain_parity) {
        return chain_parity;
    }
    /// Reported into the transcript once the round is complete.
    virtual Protection protection_applied(const RoundContext& /*ctx*/) {
        return Protection::Unprotected;
    }
    /// Parity the collector publishes for a test round. A reveals before B.
    virtual Bit reveal_parity(
        const RoundContext& /*ctx*/, const RoundTranscript& /*draft*/, Group /*group*/, Bit held_parity) {
        return held_parity;
    }
};

/// Hooks that change nothing.
RoundHooks& honest_hooks();

struct RoundOptions {
    std::size_t round_index = 0;
    bool selected_for_test = false;
    /// Overrides the random source choice (exhaustive enumeration in tests).
    std::optional<CatState> source;
    /// Overrides the random basis choice, indexed A then B. For the modified
    /// protocol the chairperson's entry is ignored.
    std::optional<BasisVector> measured_bases;
    /// Decides who may act as chairperson.
    SourceKnowledge knowledge = SourceKnowledge::CollectorOnly;
};

RoundTranscript run_round_protocol1(
    const GroupSpec& spec, const RoleAssignment& roles, RoundHooks& hooks, Rng& rng, const RoundOptions& options = {});
RoundTranscript run_round_modified(
    const GroupSpec& spec, const RoleAssignment& roles, RoundHooks& hooks, Rng& rng, const RoundOptions& options = {});
RoundTranscript run_round(
    ProtocolVariant variant, const GroupSpec& spec, const RoleAssignment& roles, RoundHooks& hooks, Rng& rng,
    const RoundOptions& options = {});

struct SessionConfig {
    GroupSpec spec;
    ProtocolVariant variant = ProtocolVariant::Original;
    std::size_t n_rounds = 0;
    std::size_t test_count = 0;
    LastMemberPolicy last_member_policy = LastMemberPolicy::HighestNonCollector;
    SourceKnowledge knowledge = SourceKnowledge::CollectorOnly;
    /// Drop per-round transcripts from the result (Monte Carlo).
    bool keep_transcripts = true;
};

struct SessionResult {
    std::vector<RoundTranscript> rounds;
    std::vector<std::size_t> test_indices;
    std::size_t kept_rounds = 0;
    std::size_t errors_found = 0;
    bool detection = false;
    /// Kept, untested, reconciled bits. Emptied when the test finds an error.
    Outcome key_a;
    Outcome key_b;
    std::size_t n_rounds = 0;

    double sift_rate() const {
        return n_rounds == 0 ? 0.0 : static_cast<double>(kept_rounds) / static_cast<double>(n_rounds);
    }
};

/// t distinct indices from [0, n_rounds), uniformly, sorted.
std::vector<std::size_t> select_test_indices(std::size_t n_rounds, std::size_t t, Rng& rng);

/// Runs n_rounds rounds with rotating roles. Test positions are fixed before
/// any source is announced; a test round that the sift later discards counts
/// as a pass. `test_indices` overrides the random selection.
SessionResult run_session(
    const SessionConfig& config, RoundHooks& hooks, Rng& rng,
    std::optional<std::vector<std::size_t>> test_indices = std::nullopt);

}  // namespace catqkd

#endif
