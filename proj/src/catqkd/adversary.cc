#include "catqkd/adversary.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace catqkd {

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::None:
            return "none";
        case Strategy::InterceptResend:
            return "intercept_resend";
        case Strategy::EntangledResend:
            return "entangled_resend";
    }
    return "?";
}

std::string_view to_string(ConspiratorModel model) {
    return model == ConspiratorModel::Ratio ? "ratio" : "mechanistic";
}

std::string_view to_string(Misbehavior misbehavior) {
    switch (misbehavior) {
        case Misbehavior::FlipOutcome:
            return "flip_outcome";
        case Misbehavior::FalseBasis:
            return "false_basis";
        case Misbehavior::RandomFlip:
            return "random_flip";
    }
    return "?";
}

Strategy parse_strategy(std::string_view text) {
    if (text == "none" || text == "honest") {
        return Strategy::None;
    }
    if (text == "intercept_resend" || text == "ir") {
        return Strategy::InterceptResend;
    }
    if (text == "entangled_resend" || text == "er") {
        return Strategy::EntangledResend;
    }
    throw std::invalid_argument(
        "unknown strategy '" + std::string(text) + "' (expected none|intercept_resend|entangled_resend)");
}

ConspiratorModel parse_conspirator_model(std::string_view text) {
    if (text == "ratio") {
        return ConspiratorModel::Ratio;
    }
    if (text == "mechanistic") {
        return ConspiratorModel::Mechanistic;
    }
    throw std::invalid_argument("unknown conspirator model '" + std::string(text) + "' (expected ratio|mechanistic)");
}

std::vector<std::string> AdversaryConfig::violations(const GroupSpec& spec) const {
    std::vector<std::string> out;
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        std::ostringstream os;
        os << "eavesdropping rate lambda=" << lambda << " must lie in [0, 1]";
        out.push_back(os.str());
    }
    if (r_a > spec.k) {
        out.push_back("r_a=" + std::to_string(r_a) + " exceeds the size of A (k=" + std::to_string(spec.k) + ")");
    }
    if (r_b > spec.l) {
        out.push_back("r_b=" + std::to_string(r_b) + " exceeds the size of B (l=" + std::to_string(spec.l) + ")");
    }
    if (strategy == Strategy::EntangledResend && n_prime <= spec.l) {
        out.push_back(
            "entangled resend needs n' > l (n'=" + std::to_string(n_prime) + ", l=" + std::to_string(spec.l) + ")");
    }
    return out;
}

void AdversaryConfig::validate(const GroupSpec& spec) const {
    const auto v = violations(spec);
    if (!v.empty()) {
        std::ostringstream os;
        for (std::size_t i = 0; i < v.size(); ++i) {
            os << (i ? "; " : "") << v[i];
        }
        throw std::invalid_argument(os.str());
    }
}

InterceptResult eve_intercept_resend(const CatState& source, std::size_t l, Rng& rng, BlockFamily family) {
    const BlockCollapse c = collapse_after_block_measurement(source, l, family, rng);
    EveRoundState eve;
    eve.intercepted = true;
    eve.measured_family = family;
    eve.measured_outcome = c.measured;
    eve.fake_sent = c.measured;
    return InterceptResult{c.remaining, c.measured, eve};
}

InterceptResult eve_entangled_resend(const CatState& source, std::size_t l, std::size_t n_prime, Rng& rng) {
    if (n_prime <= l) {
        throw std::invalid_argument("eve_entangled_resend: n' must exceed l");
    }
    // Drawing the collapse now is equivalent, for the statistics of A and B,
    // to Eve measuring her blocks after the announcements.
    const BlockCollapse intercepted = collapse_after_block_measurement(source, l, BlockFamily::Phi, rng);
    const CatState own = choose_source(n_prime, rng);
    const BlockCollapse resent = collapse_after_block_measurement(own, n_prime - l, BlockFamily::Phi, rng);
    EveRoundState eve;
    eve.intercepted = true;
    eve.measured_family = BlockFamily::Phi;
    eve.measured_outcome = intercepted.measured;
    eve.fake_sent = resent.remaining;
    eve.remainder = resent.measured;
    return InterceptResult{intercepted.remaining, resent.remaining, eve};
}

namespace {

double clamp01(double x) {
    return std::clamp(x, 0.0, 1.0);
}

double ratio_a_side(const GroupSpec& spec, std::size_t r_a) {
    return clamp01((static_cast<double>(r_a) - 1.0) / static_cast<double>(spec.k));
}

struct RatioSplit {
    double total;
    // Probability the protection is a forced discard, given protection.
    double discard_share;
};

RatioSplit ratio_split(
    ProtocolVariant variant, Strategy strategy, const GroupSpec& spec, std::size_t r_a, std::size_t r_b) {
    const double k = static_cast<double>(spec.k);
    const double l = static_cast<double>(spec.l);
    const double ra = static_cast<double>(r_a);
    const double rb = static_cast<double>(r_b);
    switch (strategy) {
        case Strategy::None:
            return {0.0, 0.0};
        case Strategy::EntangledResend:
            if (r_a == 0) {
                return {0.0, 0.0};
            }
            return {clamp01(1.0 - (1.0 - ra / k) * (1.0 - rb / l)), 0.0};
        case Strategy::InterceptResend:
            break;
    }
    if (variant == ProtocolVariant::Modified) {
        if (r_a == 0) {
            return {r_b == 0 ? 0.0 : clamp01((rb - 1.0) / l), 0.0};
        }
        return {clamp01(rb / l), 0.0};
    }
    if (r_a == 0 && r_b == 0) {
        return {0.0, 0.0};
    }
    if (r_a == 0) {
        return {clamp01((rb - 1.0) / l), 0.0};
    }
    if (r_b == 0) {
        return {ratio_a_side(spec, r_a), 0.0};
    }
    // A-side shielding at (r_a-1)/k, otherwise B's collector or last member
    // at (r_b+1)/l; half of the B-side cases spoil the sift instead.
    const double pa = ratio_a_side(spec, r_a);
    const double pb = clamp01((rb + 1.0) / l);
    const double total = 1.0 - (1.0 - pa) * (1.0 - pb);
    const double discard = total > 0.0 ? 0.5 * (1.0 - pa) * pb / total : 0.0;
    return {total, discard};
}

void require_consistent(const GroupSpec& spec, std::size_t r_a, std::size_t r_b) {
    if (r_a > spec.k || r_b > spec.l) {
        throw std::invalid_argument("conspirator counts exceed the group sizes");
    }
}

}  // namespace

double ratio_protection_probability(
    ProtocolVariant variant, Strategy strategy, const GroupSpec& spec, std::size_t r_a, std::size_t r_b) {
    require_consistent(spec, r_a, r_b);
    return ratio_split(variant, strategy, spec, r_a, r_b).total;
}

Protection ratio_protection_kind(
    ProtocolVariant variant, Strategy strategy, const GroupSpec& spec, std::size_t r_a, std::size_t r_b, Rng& rng) {
    require_consistent(spec, r_a, r_b);
    const RatioSplit split = ratio_split(variant, strategy, spec, r_a, r_b);
    return rng.bernoulli(split.discard_share) ? Protection::ForceDiscard : Protection::SuppressError;
}

Protection conspirator_protection(const ProtectionContext& ctx, const AdversaryConfig& config, Rng& rng) {
    config.validate(ctx.spec);
    if (config.strategy == Strategy::None) {
        throw std::invalid_argument("conspirator_protection: no eavesdropping strategy configured");
    }
    if (config.model == ConspiratorModel::Ratio) {
        const RatioSplit split = ratio_split(ctx.variant, config.strategy, ctx.spec, config.r_a, config.r_b);
        if (!rng.bernoulli(split.total)) {
            return Protection::Unprotected;
        }
        return rng.bernoulli(split.discard_share) ? Protection::ForceDiscard : Protection::SuppressError;
    }

    const auto in_a = [&](MemberId m) { return m < config.r_a; };
    const auto in_b = [&](MemberId m) { return m < config.r_b; };
    const bool source_known = ctx.knowledge == SourceKnowledge::SharedInA ? config.r_a >= 1 : in_a(ctx.roles.collector_a);
    const RoleAssignment& roles = ctx.roles;
    if (config.strategy == Strategy::EntangledResend) {
        return source_known && (in_a(roles.collector_a) || in_b(roles.collector_b)) ? Protection::SuppressError
                                                                                   : Protection::Unprotected;
    }
    if (in_b(roles.collector_b) && in_b(roles.last_b)) {
        return Protection::SuppressError;
    }
    if (ctx.variant == ProtocolVariant::Original && source_known && in_a(roles.collector_a) &&
        in_a(roles.last_a)) {
        return Protection::SuppressError;
    }
    if (source_known && in_b(roles.collector_b)) {
        return Protection::SuppressError;
    }
    if (ctx.variant == ProtocolVariant::Original && source_known && in_b(roles.last_b)) {
        return Protection::ForceDiscard;
    }
    return Protection::Unprotected;
}

Adversary::Adversary(AdversaryConfig config, GroupSpec spec, ProtocolVariant variant, SourceKnowledge knowledge)
    : config_(config), spec_(spec), variant_(variant), knowledge_(knowledge) {
    spec_.validate(variant_);
    config_.validate(spec_);
}

bool Adversary::is_conspirator(Group group, MemberId member) const {
    return member < (group == Group::A ? config_.r_a : config_.r_b);
}

bool Adversary::knows_source(const RoleAssignment& roles) const {
    if (knowledge_ == SourceKnowledge::SharedInA) {
        return config_.r_a >= 1;
    }
    return is_conspirator(Group::A, roles.collector_a);
}

RoleAssignment Adversary::assign_roles(std::size_t, const RoleAssignment& scheduled) {
    if (config_.model != ConspiratorModel::Mechanistic || !config_.seize_last_slot ||
        config_.strategy == Strategy::None) {
        return scheduled;
    }
    RoleAssignment roles = scheduled;
    const auto seize = [&](Group g, MemberId& last) {
        const std::size_t r = g == Group::A ? config_.r_a : config_.r_b;
        for (MemberId m = r; m-- > 0;) {
            const bool excluded = m == roles.collector(g) || (g == Group::A && roles.chairperson == m);
            if (!excluded) {
                last = m;
                return;
            }
        }
    };
    seize(Group::A, roles.last_a);
    seize(Group::B, roles.last_b);
    return roles;
}

Adversary::Tactic Adversary::ratio_tactic(Protection protection) const {
    switch (protection) {
        case Protection::Unprotected:
            return Tactic::None;
        case Protection::ForceDiscard:
            return Tactic::RatioDiscard;
        case Protection::SuppressError:
            return config_.r_b >= 1 ? Tactic::RatioSettleB : Tactic::RatioSettleA;
    }
    return Tactic::None;
}

Adversary::Tactic Adversary::choose_tactic(const RoleAssignment& roles, Protection protection) const {
    if (config_.model == ConspiratorModel::Ratio) {
        return ratio_tactic(protection);
    }
    if (protection == Protection::Unprotected) {
        return Tactic::None;
    }
    // Mirrors the precedence in conspirator_protection.
    const bool known = knows_source(roles);
    if (config_.strategy == Strategy::EntangledResend) {
        return is_conspirator(Group::A, roles.collector_a) ? Tactic::RevealFixA : Tactic::RevealFixB;
    }
    if (is_conspirator(Group::B, roles.collector_b) && is_conspirator(Group::B, roles.last_b)) {
        return Tactic::FixB;
    }
    if (variant_ == ProtocolVariant::Original && known && is_conspirator(Group::A, roles.collector_a) &&
        is_conspirator(Group::A, roles.last_a)) {
        return Tactic::FixA;
    }
    if (protection == Protection::ForceDiscard) {
        return Tactic::DiscardByLastB;
    }
    return Tactic::RevealFixB;
}

Delivery Adversary::transmit(const RoundContext& ctx, const CatState& source, Rng& rng, EveRoundState& record) {
    protection_ = Protection::Unprotected;
    tactic_ = Tactic::None;
    block_a_.reset();
    block_b_.reset();
    if (config_.strategy == Strategy::None) {
        return Delivery::untouched(source);
    }
    RoundPlan plan;
    if (ctx.round_index < plan_.size()) {
        plan = plan_[ctx.round_index];
    } else {
        plan.intercept = rng.bernoulli(config_.lambda);
        if (plan.intercept) {
            plan.protection = conspirator_protection(
                ProtectionContext{ctx.variant, ctx.spec, ctx.roles, knowledge_}, config_, rng);
        }
    }
    if (!plan.intercept) {
        return Delivery::untouched(source);
    }
    InterceptResult r = config_.strategy == Strategy::InterceptResend
                            ? eve_intercept_resend(source, ctx.spec.l, rng, config_.eve_family)
                            : eve_entangled_resend(source, ctx.spec.l, config_.n_prime, rng);
    record = r.eve;
    block_a_ = r.block_a;
    block_b_ = r.block_b;
    protection_ = plan.protection;
    tactic_ = choose_tactic(ctx.roles, protection_);
    return Delivery::split(r.block_a, r.block_b);
}

namespace {

std::size_t y_count_excluding(const BasisVector& bases, MemberId skip, std::optional<MemberId> skip2 = std::nullopt) {
    std::size_t n = 0;
    for (MemberId m = 0; m < bases.size(); ++m) {
        if (m != skip && (!skip2 || m != *skip2)) {
            n += bases[m] == Basis::Y;
        }
    }
    return n;
}

Basis basis_for_parity(std::size_t others, bool want_odd) {
    return (others % 2 == 1) == want_odd ? Basis::X : Basis::Y;
}

bool fixed_when_odd(const CatState& s) {
    return s.kind() == CatKind::Lambda;
}

// Parity P that makes `group`'s shared bit satisfy the relation with the
// other group's bit.
Bit parity_matching(const CatState& source, std::size_t n_y_a, std::size_t n_y_b, Group group, Bit other_bit) {
    const Relation rel = expected_relation(source, y_parity(n_y_a), y_parity(n_y_b));
    const Bit wanted = rel == Relation::Anti ? other_bit ^ 1 : other_bit;
    const std::size_t own = group == Group::A ? n_y_a : n_y_b;
    return static_cast<Bit>(wanted ^ ((own % 4) / 2));
}

}  // namespace

Basis Adversary::announce_basis(
    const RoundContext& ctx, const RoundTranscript& draft, Group group, MemberId member, Basis measured, Rng&) {
    if (tactic_ == Tactic::None) {
        return measured;
    }
    const RoleAssignment& roles = ctx.roles;
    if (group == Group::A && member == roles.last_a && tactic_ == Tactic::FixA) {
        const std::size_t others = y_count_excluding(draft.bases_a, member, roles.chairperson);
        return basis_for_parity(others, fixed_when_odd(*block_a_));
    }
    if (group != Group::B || member != roles.last_b) {
        return measured;
    }
    const std::size_t others_b = y_count_excluding(draft.bases_b, member);
    if (tactic_ == Tactic::FixB) {
        return basis_for_parity(others_b, fixed_when_odd(*block_b_));
    }
    if (tactic_ == Tactic::RatioDiscard || tactic_ == Tactic::DiscardByLastB) {
        const std::size_t n_y_a = count_y(draft.bases_a);
        const std::size_t honest_b = others_b + (measured == Basis::Y);
        if (!sift(draft.source, n_y_a, honest_b)) {
            return measured;
        }
        if (tactic_ == Tactic::DiscardByLastB) {
            const bool safe = parity_rule(*block_a_, n_y_a).is_deterministic() &&
                              parity_rule(*block_b_, honest_b).is_deterministic();
            if (safe) {
                return measured;
            }
        }
        return measured == Basis::X ? Basis::Y : Basis::X;
    }
    return measured;
}

Bit Adversary::settle_parity(const RoundContext&, const RoundTranscript& draft, Group group, Bit chain_parity) {
    const std::size_t n_y_a = draft.stats_a.n_y_raw;
    const std::size_t n_y_b = draft.stats_b.n_y_raw;
    const bool kept = sift(draft.source, n_y_a, n_y_b);
    switch (tactic_) {
        case Tactic::FixA:
            if (group == Group::A) {
                return static_cast<Bit>(block_a_->sign_bit() ^ draft.stats_a.m_y());
            }
            break;
        case Tactic::FixB:
            if (group == Group::B) {
                return static_cast<Bit>(block_b_->sign_bit() ^ draft.stats_b.m_y());
            }
            break;
        case Tactic::RatioSettleA:
            if (group == Group::A && kept) {
                // Relay of B's (still unsettled) outcome parity.
                const Bit bit_b = static_cast<Bit>(draft.stats_b.m_y() ^ parity_of(draft.outcomes_b));
                return parity_matching(draft.source, n_y_a, n_y_b, Group::A, bit_b);
            }
            break;
        case Tactic::RatioSettleB:
            if (group == Group::B && kept) {
                return parity_matching(draft.source, n_y_a, n_y_b, Group::B, draft.shared_bit_a);
            }
            break;
        default:
            break;
    }
    return chain_parity;
}

Bit Adversary::reveal_parity(const RoundContext&, const RoundTranscript& draft, Group group, Bit held_parity) {
    const std::size_t n_y_a = draft.stats_a.n_y_raw;
    const std::size_t n_y_b = draft.stats_b.n_y_raw;
    if (!sift(draft.source, n_y_a, n_y_b)) {
        return held_parity;
    }
    if (tactic_ == Tactic::RevealFixA && group == Group::A) {
        // Eve learns B's parity by measuring her remainder block once B's
        // bases are public.
        return parity_matching(draft.source, n_y_a, n_y_b, Group::A, draft.stats_b.shared_bit());
    }
    if (tactic_ == Tactic::RevealFixB && group == Group::B) {
        const Bit bit_a = static_cast<Bit>(draft.stats_a.m_y() ^ *draft.revealed_parity_a);
        return parity_matching(draft.source, n_y_a, n_y_b, Group::B, bit_a);
    }
    return held_parity;
}

Protection Adversary::protection_applied(const RoundContext&) {
    return protection_;
}

namespace {

Basis flip(Basis b) {
    return b == Basis::X ? Basis::Y : Basis::X;
}

Basis misreport_basis(Misbehavior m, Basis measured) {
    return m == Misbehavior::FalseBasis ? flip(measured) : measured;
}

Bit misreport_outcome(Misbehavior m, Bit measured, Rng& rng) {
    switch (m) {
        case Misbehavior::FlipOutcome:
            return measured ^ 1;
        case Misbehavior::RandomFlip:
            return measured ^ rng.bit();
        case Misbehavior::FalseBasis:
            break;
    }
    return measured;
}

}  // namespace

MemberReport misbehaving_member(const MemberContext& ctx, Misbehavior misbehavior, Rng& rng) {
    if (ctx.is_collector) {
        throw std::invalid_argument("misbehaving_member: the collector controls P and is modelled separately");
    }
    return MemberReport{
        misreport_basis(misbehavior, ctx.measured_basis),
        misreport_outcome(misbehavior, ctx.measured_outcome, rng),
    };
}

bool MisbehavingMember::active(const RoundContext& ctx, Group group, MemberId member) const {
    return group == group_ && member == member_ && ctx.roles.collector(group) != member &&
           !(group == Group::A && ctx.roles.chairperson == member);
}

Basis MisbehavingMember::announce_basis(
    const RoundContext& ctx, const RoundTranscript&, Group group, MemberId member, Basis measured, Rng&) {
    return active(ctx, group, member) ? misreport_basis(misbehavior_, measured) : measured;
}

Bit MisbehavingMember::report_outcome(
    const RoundContext& ctx, const RoundTranscript&, Group group, MemberId member, Bit measured, Rng& rng) {
    return active(ctx, group, member) ? misreport_outcome(misbehavior_, measured, rng) : measured;
}

}  // namespace catqkd
