#include "catqkd/protocol.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace catqkd {

std::string_view to_string(ProtocolVariant variant) {
    return variant == ProtocolVariant::Original ? "original" : "modified";
}

std::string_view to_string(Group group) {
    return group == Group::A ? "A" : "B";
}

ProtocolVariant parse_protocol_variant(std::string_view text) {
    if (text == "original" || text == "protocol1") {
        return ProtocolVariant::Original;
    }
    if (text == "modified" || text == "chairperson") {
        return ProtocolVariant::Modified;
    }
    throw std::invalid_argument("unknown protocol '" + std::string(text) + "' (expected original|modified)");
}

std::string_view to_string(Protection protection) {
    switch (protection) {
        case Protection::Unprotected:
            return "unprotected";
        case Protection::SuppressError:
            return "suppress_error";
        case Protection::ForceDiscard:
            return "force_discard";
    }
    return "?";
}

namespace {

std::string join(const std::vector<std::string>& items) {
    std::ostringstream os;
    for (std::size_t i = 0; i < items.size(); ++i) {
        os << (i ? "; " : "") << items[i];
    }
    return os.str();
}

}  // namespace

std::vector<std::string> GroupSpec::violations(ProtocolVariant variant) const {
    std::vector<std::string> out;
    if (k <= 1) {
        out.push_back("group A needs more than 1 member (k=" + std::to_string(k) + ")");
    }
    const std::size_t min_l = variant == ProtocolVariant::Original ? 3 : 2;
    if (l < min_l) {
        out.push_back(
            "group B needs more than " + std::to_string(min_l - 1) + " members for the " +
            std::string(to_string(variant)) + " protocol (l=" + std::to_string(l) + ")");
    }
    return out;
}

void GroupSpec::validate(ProtocolVariant variant) const {
    const auto v = violations(variant);
    if (!v.empty()) {
        throw std::invalid_argument(join(v));
    }
}

std::vector<std::string> RoleAssignment::violations(
    const GroupSpec& spec, ProtocolVariant variant, SourceKnowledge knowledge) const {
    std::vector<std::string> out;
    if (collector_a >= spec.k || last_a >= spec.k) {
        out.push_back("group A role id out of range");
    }
    if (collector_b >= spec.l || last_b >= spec.l) {
        out.push_back("group B role id out of range");
    }
    if (last_a == collector_a) {
        out.push_back("last member of A is also its collector");
    }
    if (last_b == collector_b) {
        out.push_back("last member of B is also its collector");
    }
    if (variant == ProtocolVariant::Original) {
        if (chairperson) {
            out.push_back("the original protocol has no chairperson");
        }
        return out;
    }
    if (!chairperson) {
        out.push_back("the modified protocol needs a chairperson");
        return out;
    }
    if (*chairperson >= spec.k) {
        out.push_back("chairperson id out of range");
    }
    if (knowledge == SourceKnowledge::CollectorOnly && *chairperson != collector_a) {
        out.push_back("only A's collector knows the source, so it must be the chairperson");
    }
    if (*chairperson == last_a) {
        out.push_back("chairperson cannot also be A's last announcing member");
    }
    return out;
}

void RoleAssignment::validate(const GroupSpec& spec, ProtocolVariant variant, SourceKnowledge knowledge) const {
    const auto v = violations(spec, variant, knowledge);
    if (!v.empty()) {
        throw std::invalid_argument(join(v));
    }
}

RoleSchedule::RoleSchedule(GroupSpec spec, ProtocolVariant variant, LastMemberPolicy policy)
    : spec_(spec), variant_(variant), policy_(policy) {
    spec_.validate(variant_);
}

RoleAssignment RoleSchedule::roles_for(std::size_t round) const {
    const auto last_for = [this](MemberId collector, std::size_t size) -> MemberId {
        if (policy_ == LastMemberPolicy::SuccessorOfCollector) {
            return (collector + 1) % size;
        }
        return collector == size - 1 ? size - 2 : size - 1;
    };
    RoleAssignment roles;
    roles.collector_a = round % spec_.k;
    roles.collector_b = round % spec_.l;
    roles.last_a = last_for(roles.collector_a, spec_.k);
    roles.last_b = last_for(roles.collector_b, spec_.l);
    if (variant_ == ProtocolVariant::Modified) {
        roles.chairperson = roles.collector_a;
    }
    return roles;
}

AnnouncementLog::AnnouncementLog(const GroupSpec& spec, ProtocolVariant variant, const RoleAssignment& roles)
    : spec_(spec), variant_(variant), roles_(roles), done_a_(spec.k, false), done_b_(spec.l, false) {
    events_.reserve(spec.n() + 3);
}

bool AnnouncementLog::is_chairperson(Group group, MemberId member) const {
    return variant_ == ProtocolVariant::Modified && group == Group::A && roles_.chairperson &&
           *roles_.chairperson == member;
}

void AnnouncementLog::announce_basis(Group group, MemberId member) {
    if (source_announced_ || revealed_a_) {
        throw std::logic_error("basis announcement after the test or source announcement");
    }
    auto& done = group == Group::A ? done_a_ : done_b_;
    if (member >= done.size()) {
        throw std::logic_error("basis announcement by an unknown member");
    }
    if (done[member]) {
        throw std::logic_error("member announced a basis twice");
    }
    const bool has_chair = variant_ == ProtocolVariant::Modified && roles_.chairperson.has_value();
    const std::size_t a_without_chair = spec_.k - (has_chair ? 1 : 0);
    if (is_chairperson(group, member)) {
        if (announced_a_ + announced_b_ != spec_.n() - 1) {
            throw std::logic_error("chairperson must announce after every other member");
        }
    } else if (group == Group::A && member == roles_.last_a) {
        if (announced_a_ != a_without_chair - 1) {
            throw std::logic_error("A's last member must follow the rest of A");
        }
    } else if (group == Group::B && member == roles_.last_b) {
        if (announced_b_ != spec_.l - 1) {
            throw std::logic_error("B's last member must follow the rest of B");
        }
        if (announced_a_ != a_without_chair) {
            throw std::logic_error("B's last announcement must follow all of A's");
        }
    } else if (group == Group::A && announced_a_ >= a_without_chair - 1 && !done[roles_.last_a]) {
        throw std::logic_error("only A's last member may complete A's announcements");
    }
    done[member] = true;
    (group == Group::A ? announced_a_ : announced_b_) += 1;
    events_.push_back({EventKind::BasisAnnouncement, group, member});
}

void AnnouncementLog::reveal_parity(Group group) {
    if (!bases_complete()) {
        throw std::logic_error("parity reveal before all bases are announced");
    }
    if (source_announced_) {
        throw std::logic_error("parity reveal after the source announcement");
    }
    if (group == Group::A) {
        if (revealed_a_) {
            throw std::logic_error("A revealed its parity twice");
        }
        revealed_a_ = true;
    } else {
        if (!revealed_a_) {
            throw std::logic_error("B must reveal its parity after A");
        }
        if (revealed_b_) {
            throw std::logic_error("B revealed its parity twice");
        }
        revealed_b_ = true;
    }
    events_.push_back({EventKind::ParityReveal, group, 0});
}

void AnnouncementLog::announce_source() {
    if (!bases_complete()) {
        throw std::logic_error("source announced before all bases");
    }
    if (revealed_a_ != revealed_b_) {
        throw std::logic_error("source announced in the middle of a parity reveal");
    }
    if (source_announced_) {
        throw std::logic_error("source announced twice");
    }
    source_announced_ = true;
    events_.push_back({EventKind::SourceAnnouncement, Group::A, 0});
}

ParityChainResult collect_parity_chain(std::span<const Bit> outcomes, MemberId collector, Bit mask) {
    const std::size_t m = outcomes.size();
    if (collector >= m) {
        throw std::invalid_argument("collect_parity_chain: collector index out of range");
    }
    ParityChainResult result;
    result.hops.reserve(m);
    Bit value = mask & 1;
    for (std::size_t i = 0; i < m; ++i) {
        value ^= outcomes[(collector + i) % m] & 1;
        result.hops.push_back(value);
    }
    result.parity = value ^ (mask & 1);
    return result;
}

CatState choose_source(std::size_t n, Rng& rng) {
    return CatState::from_phase(Phase4(static_cast<unsigned>(rng.below(4))), n);
}

bool sift(const CatState& source, std::size_t n_y_a, std::size_t n_y_b) {
    const bool even = (n_y_a + n_y_b) % 2 == 0;
    return source.kind() == CatKind::Phi ? even : !even;
}

std::pair<Bit, Bit> reconcile(
    const CatState& source, const GroupStats& stats_a, const GroupStats& stats_b, Bit bit_a, Bit bit_b) {
    const Relation rel = expected_relation(source, y_parity(stats_a.n_y_raw), y_parity(stats_b.n_y_raw));
    if (rel == Relation::Discard) {
        throw std::logic_error("reconcile called on a discarded round");
    }
    return {bit_a, static_cast<Bit>(rel == Relation::Anti ? bit_b ^ 1 : bit_b)};
}

Basis chairperson_basis(const CatState& source, std::size_t n_y_others_total) {
    const bool want_odd = source.kind() == CatKind::Lambda;
    const bool others_odd = n_y_others_total % 2 == 1;
    return want_odd != others_odd ? Basis::Y : Basis::X;
}

Delivery RoundHooks::transmit(const RoundContext&, const CatState& source, Rng&, EveRoundState&) {
    return Delivery::untouched(source);
}

RoundHooks& honest_hooks() {
    static RoundHooks hooks;
    return hooks;
}

namespace {

Basis random_basis(Rng& rng) {
    return rng.bit() ? Basis::Y : Basis::X;
}

RoundTranscript run_round_impl(
    ProtocolVariant variant, const GroupSpec& spec, const RoleAssignment& roles, RoundHooks& hooks, Rng& rng,
    const RoundOptions& options) {
    spec.validate(variant);
    roles.validate(spec, variant, options.knowledge);
    const bool modified = variant == ProtocolVariant::Modified;
    const MemberId chair = modified ? *roles.chairperson : spec.k;  // k = none

    RoundTranscript tx;
    tx.round_index = options.round_index;
    tx.variant = variant;
    tx.roles = roles;
    tx.source = options.source ? *options.source : choose_source(spec.n(), rng);
    if (tx.source.arity() != spec.n()) {
        throw std::invalid_argument("source arity must equal k + l");
    }
    const RoundContext ctx{options.round_index, variant, spec, roles};
    const Delivery delivery = hooks.transmit(ctx, tx.source, rng, tx.eve);

    // Step 2 (3' for the modified protocol): everybody but the chairperson
    // picks a basis.
    tx.measured_bases_a.resize(spec.k);
    tx.measured_bases_b.resize(spec.l);
    if (options.measured_bases) {
        if (options.measured_bases->size() != spec.n()) {
            throw std::invalid_argument("measured_bases override must have k + l entries");
        }
        std::copy_n(options.measured_bases->begin(), spec.k, tx.measured_bases_a.begin());
        std::copy_n(options.measured_bases->begin() + static_cast<std::ptrdiff_t>(spec.k), spec.l,
                    tx.measured_bases_b.begin());
    } else {
        for (auto& b : tx.measured_bases_a) {
            b = random_basis(rng);
        }
        for (auto& b : tx.measured_bases_b) {
            b = random_basis(rng);
        }
    }

    // Step 3 / 4'(a): announcements, A then B, each group's last member last.
    AnnouncementLog log(spec, variant, roles);
    tx.bases_a = tx.measured_bases_a;
    tx.bases_b = tx.measured_bases_b;
    const auto announce = [&](Group g, MemberId m) {
        auto& announced = g == Group::A ? tx.bases_a : tx.bases_b;
        const auto& measured = g == Group::A ? tx.measured_bases_a : tx.measured_bases_b;
        announced[m] = hooks.announce_basis(ctx, tx, g, m, measured[m], rng);
        log.announce_basis(g, m);
    };
    for (MemberId m = 0; m < spec.k; ++m) {
        if (m != roles.last_a && m != chair) {
            announce(Group::A, m);
        }
    }
    announce(Group::A, roles.last_a);
    for (MemberId m = 0; m < spec.l; ++m) {
        if (m != roles.last_b) {
            announce(Group::B, m);
        }
    }
    announce(Group::B, roles.last_b);
    if (modified) {
        // 4'(b): the chairperson measures last, in the basis that keeps the round.
        std::size_t others = count_y(tx.bases_b);
        for (MemberId m = 0; m < spec.k; ++m) {
            others += m != chair && tx.bases_a[m] == Basis::Y;
        }
        tx.measured_bases_a[chair] = chairperson_basis(tx.source, others);
        announce(Group::A, chair);
    }

    // Measurement outcomes for the bases actually used.
    if (delivery.is_joint()) {
        BasisVector all(tx.measured_bases_a);
        all.insert(all.end(), tx.measured_bases_b.begin(), tx.measured_bases_b.end());
        const Outcome joint = sample_outcome(delivery.joint(), all, rng);
        tx.measured_outcomes_a.assign(joint.begin(), joint.begin() + static_cast<std::ptrdiff_t>(spec.k));
        tx.measured_outcomes_b.assign(joint.begin() + static_cast<std::ptrdiff_t>(spec.k), joint.end());
    } else {
        if (delivery.block_a().arity() != spec.k || delivery.block_b().arity() != spec.l) {
            throw std::logic_error("delivered blocks do not match the group sizes");
        }
        tx.measured_outcomes_a = sample_outcome(delivery.block_a(), tx.measured_bases_a, rng);
        tx.measured_outcomes_b = sample_outcome(delivery.block_b(), tx.measured_bases_b, rng);
    }

    // Step 4: masked parity chains, then the collectors settle P.
    tx.outcomes_a = tx.measured_outcomes_a;
    tx.outcomes_b = tx.measured_outcomes_b;
    for (MemberId m = 0; m < spec.k; ++m) {
        tx.outcomes_a[m] = hooks.report_outcome(ctx, tx, Group::A, m, tx.measured_outcomes_a[m], rng);
    }
    for (MemberId m = 0; m < spec.l; ++m) {
        tx.outcomes_b[m] = hooks.report_outcome(ctx, tx, Group::B, m, tx.measured_outcomes_b[m], rng);
    }
    tx.stats_a.n_y_raw = count_y(tx.bases_a);
    tx.stats_b.n_y_raw = count_y(tx.bases_b);

    tx.mask_r_a = rng.bit();
    auto chain_a = collect_parity_chain(tx.outcomes_a, roles.collector_a, tx.mask_r_a);
    tx.hops_a = std::move(chain_a.hops);
    tx.stats_a.parity = hooks.settle_parity(ctx, tx, Group::A, chain_a.parity) & 1;
    tx.shared_bit_a = tx.stats_a.shared_bit();

    tx.mask_r_b = rng.bit();
    auto chain_b = collect_parity_chain(tx.outcomes_b, roles.collector_b, tx.mask_r_b);
    tx.hops_b = std::move(chain_b.hops);
    tx.stats_b.parity = hooks.settle_parity(ctx, tx, Group::B, chain_b.parity) & 1;
    tx.shared_bit_b = tx.stats_b.shared_bit();

    // Step 5: test rounds reveal P, A first. Step 6: source announcement.
    tx.kept = sift(tx.source, tx.stats_a.n_y_raw, tx.stats_b.n_y_raw);
    if (options.selected_for_test) {
        tx.selected_for_test = true;
        tx.revealed_parity_a = hooks.reveal_parity(ctx, tx, Group::A, tx.stats_a.parity) & 1;
        log.reveal_parity(Group::A);
        tx.revealed_parity_b = hooks.reveal_parity(ctx, tx, Group::B, tx.stats_b.parity) & 1;
        log.reveal_parity(Group::B);
        if (tx.kept) {
            const Relation rel =
                expected_relation(tx.source, y_parity(tx.stats_a.n_y_raw), y_parity(tx.stats_b.n_y_raw));
            const Bit bit_a = tx.stats_a.m_y() ^ *tx.revealed_parity_a;
            const Bit bit_b = tx.stats_b.m_y() ^ *tx.revealed_parity_b;
            tx.test_error = !relation_holds(rel, bit_a, bit_b);
        }
    }
    log.announce_source();
    tx.protection = hooks.protection_applied(ctx);
    tx.announcement_order = log.events();
    return tx;
}

}  // namespace

RoundTranscript run_round_protocol1(
    const GroupSpec& spec, const RoleAssignment& roles, RoundHooks& hooks, Rng& rng, const RoundOptions& options) {
    return run_round_impl(ProtocolVariant::Original, spec, roles, hooks, rng, options);
}

RoundTranscript run_round_modified(
    const GroupSpec& spec, const RoleAssignment& roles, RoundHooks& hooks, Rng& rng, const RoundOptions& options) {
    return run_round_impl(ProtocolVariant::Modified, spec, roles, hooks, rng, options);
}

RoundTranscript run_round(
    ProtocolVariant variant, const GroupSpec& spec, const RoleAssignment& roles, RoundHooks& hooks, Rng& rng,
    const RoundOptions& options) {
    return run_round_impl(variant, spec, roles, hooks, rng, options);
}

std::vector<std::size_t> select_test_indices(std::size_t n_rounds, std::size_t t, Rng& rng) {
    if (t > n_rounds) {
        throw std::invalid_argument(
            "test count " + std::to_string(t) + " exceeds the number of rounds " + std::to_string(n_rounds));
    }
    std::vector<std::size_t> idx(n_rounds);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < t; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n_rounds - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(t);
    std::sort(idx.begin(), idx.end());
    return idx;
}

SessionResult run_session(
    const SessionConfig& config, RoundHooks& hooks, Rng& rng, std::optional<std::vector<std::size_t>> test_indices) {
    config.spec.validate(config.variant);
    if (config.test_count > config.n_rounds) {
        throw std::invalid_argument(
            "test count " + std::to_string(config.test_count) + " exceeds the number of rounds " +
            std::to_string(config.n_rounds));
    }
    SessionResult result;
    result.n_rounds = config.n_rounds;
    if (test_indices) {
        auto& idx = *test_indices;
        std::sort(idx.begin(), idx.end());
        if (idx.size() != config.test_count || std::adjacent_find(idx.begin(), idx.end()) != idx.end() ||
            (!idx.empty() && idx.back() >= config.n_rounds)) {
            throw std::invalid_argument("test indices must be test_count distinct round numbers");
        }
        result.test_indices = std::move(idx);
    } else {
        result.test_indices = select_test_indices(config.n_rounds, config.test_count, rng);
    }
    std::vector<bool> is_test(config.n_rounds, false);
    for (std::size_t i : result.test_indices) {
        is_test[i] = true;
    }

    const RoleSchedule schedule(config.spec, config.variant, config.last_member_policy);
    if (config.keep_transcripts) {
        result.rounds.reserve(config.n_rounds);
    }
    for (std::size_t r = 0; r < config.n_rounds; ++r) {
        const RoleAssignment roles = hooks.assign_roles(r, schedule.roles_for(r));
        RoundOptions options;
        options.round_index = r;
        options.selected_for_test = is_test[r];
        options.knowledge = config.knowledge;
        RoundTranscript tx = run_round(config.variant, config.spec, roles, hooks, rng, options);
        result.kept_rounds += tx.kept;
        result.errors_found += tx.test_error;
        if (tx.kept && !tx.selected_for_test) {
            const auto [ka, kb] = reconcile(tx.source, tx.stats_a, tx.stats_b, tx.shared_bit_a, tx.shared_bit_b);
            result.key_a.push_back(ka);
            result.key_b.push_back(kb);
        }
        if (config.keep_transcripts) {
            result.rounds.push_back(std::move(tx));
        }
    }
    result.detection = result.errors_found > 0;
    if (result.detection) {
        result.key_a.clear();
        result.key_b.clear();
    }
    return result;
}

}  // namespace catqkd
