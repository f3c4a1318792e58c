#include "catqkd/cat_state.h"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace catqkd {

namespace {

Phase4 family_phase(BlockFamily family) {
    return Phase4(family == BlockFamily::Phi ? 0 : 1);
}

void require_matching_length(const CatState& state, std::size_t n_bases) {
    if (n_bases != state.arity()) {
        throw std::invalid_argument(
            "basis vector length " + std::to_string(n_bases) + " does not match state arity " +
            std::to_string(state.arity()));
    }
}

}  // namespace

CatState::CatState(CatKind kind, CatSign sign, std::size_t arity) : kind_(kind), sign_(sign), arity_(arity) {
    if (arity == 0) {
        throw std::invalid_argument("cat state arity must be at least 1");
    }
}

CatState CatState::from_phase(Phase4 phase, std::size_t arity) {
    switch (phase.exponent()) {
        case 0:
            return phi_plus(arity);
        case 1:
            return lambda_plus(arity);
        case 2:
            return phi_minus(arity);
        default:
            return lambda_minus(arity);
    }
}

std::array<CatState, 4> CatState::all(std::size_t arity) {
    return {phi_plus(arity), phi_minus(arity), lambda_plus(arity), lambda_minus(arity)};
}

Phase4 CatState::phase() const {
    unsigned e = kind_ == CatKind::Phi ? 0 : 1;
    if (sign_ == CatSign::Minus) {
        e += 2;
    }
    return Phase4(e);
}

std::string CatState::label() const {
    std::string s = kind_ == CatKind::Phi ? "Phi" : "Lambda";
    s += sign_ == CatSign::Plus ? '+' : '-';
    return s;
}

CatState CatState::from_label(std::string_view label, std::size_t arity) {
    for (const auto& s : all(arity)) {
        if (s.label() == label) {
            return s;
        }
    }
    throw std::invalid_argument("unknown cat state label '" + std::string(label) + "'");
}

std::size_t count_y(std::span<const Basis> bases) {
    std::size_t n = 0;
    for (Basis b : bases) {
        n += b == Basis::Y;
    }
    return n;
}

Bit parity_of(std::span<const Bit> bits) {
    Bit p = 0;
    for (Bit b : bits) {
        p ^= b & 1;
    }
    return p;
}

GroupStats GroupStats::from(std::span<const Basis> bases, std::span<const Bit> outcomes) {
    if (bases.size() != outcomes.size()) {
        throw std::invalid_argument("GroupStats: bases and outcomes differ in length");
    }
    return GroupStats{count_y(bases), parity_of(outcomes)};
}

ParityPrediction parity_rule(const CatState& state, std::size_t n_y_raw) {
    const bool even = n_y_raw % 2 == 0;
    const bool fixed = state.kind() == CatKind::Phi ? even : !even;
    return fixed ? ParityPrediction::deterministic(state.sign_bit()) : ParityPrediction::uniform();
}

double Dyadic::to_double() const {
    return std::ldexp(static_cast<double>(numerator), -static_cast<int>(log2_denominator));
}

Dyadic Dyadic::normalized() const {
    Dyadic d = *this;
    if (d.numerator == 0) {
        d.log2_denominator = 0;
        return d;
    }
    while (d.log2_denominator > 0 && (d.numerator & 1) == 0) {
        d.numerator >>= 1;
        --d.log2_denominator;
    }
    return d;
}

bool operator==(const Dyadic& a, const Dyadic& b) {
    const Dyadic x = a.normalized();
    const Dyadic y = b.normalized();
    return x.numerator == y.numerator && x.log2_denominator == y.log2_denominator;
}

OutcomeDistribution::OutcomeDistribution(std::size_t arity, std::optional<Bit> required_parity)
    : arity_(arity), required_parity_(required_parity) {
    if (arity == 0 || arity > 63) {
        throw std::invalid_argument("OutcomeDistribution: arity must be in [1, 63]");
    }
}

Dyadic OutcomeDistribution::probability(std::span<const Bit> outcome) const {
    if (outcome.size() != arity_) {
        throw std::invalid_argument("OutcomeDistribution: outcome length mismatch");
    }
    if (!required_parity_) {
        return Dyadic{1, static_cast<unsigned>(arity_)};
    }
    if (parity_of(outcome) != *required_parity_) {
        return Dyadic{0, 0};
    }
    return Dyadic{1, static_cast<unsigned>(arity_ - 1)};
}

Dyadic OutcomeDistribution::probability(std::uint64_t index) const {
    if (!required_parity_) {
        return Dyadic{1, static_cast<unsigned>(arity_)};
    }
    if (static_cast<Bit>(std::popcount(index) & 1) != *required_parity_) {
        return Dyadic{0, 0};
    }
    return Dyadic{1, static_cast<unsigned>(arity_ - 1)};
}

std::uint64_t OutcomeDistribution::support_size() const {
    return std::uint64_t{1} << (required_parity_ ? arity_ - 1 : arity_);
}

std::vector<double> OutcomeDistribution::dense() const {
    if (arity_ > 24) {
        throw std::invalid_argument("OutcomeDistribution::dense: arity too large");
    }
    const std::uint64_t size = std::uint64_t{1} << arity_;
    std::vector<double> p(size);
    for (std::uint64_t i = 0; i < size; ++i) {
        p[i] = probability(i).to_double();
    }
    return p;
}

// <b|(|0..0> + phase |1..1>) is proportional to 1 + phase (-1)^P (-i)^{N_y},
// so the outcome weight depends only on w = phase * (-i)^{N_y} * (-1)^P:
// w = 1 doubles, w = -1 cancels and w = +-i gives the flat value.
OutcomeDistribution outcome_distribution(const CatState& state, std::span<const Basis> bases) {
    require_matching_length(state, bases.size());
    const Phase4 w = state.phase() + Phase4(3 * static_cast<unsigned>(count_y(bases) % 4));
    if (!w.is_real()) {
        return OutcomeDistribution(state.arity(), std::nullopt);
    }
    return OutcomeDistribution(state.arity(), static_cast<Bit>(w.exponent() / 2));
}

Outcome sample_outcome(const CatState& state, std::span<const Basis> bases, Rng& rng) {
    const OutcomeDistribution dist = outcome_distribution(state, bases);
    Outcome bits(state.arity());
    Bit parity = 0;
    for (auto& b : bits) {
        b = rng.bit();
        parity ^= b;
    }
    if (dist.required_parity() && parity != *dist.required_parity()) {
        bits.back() ^= 1;
    }
    return bits;
}

// (|0> + i^a |1>)_A (|0> + i^b |1>)_B + (|0> - i^a |1>)_A (|0> - i^b |1>)_B
//   = 2 (|00> + i^{a+b} |11>),
// so the parent phase is the sum of the factor phases in both terms.
std::array<DecompositionTerm, 2> decompose(const CatState& state, std::size_t k, BlockFamily family_on_a) {
    const std::size_t n = state.arity();
    if (k < 1 || k + 1 > n) {
        throw std::invalid_argument(
            "decompose: split k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "-1]");
    }
    const Phase4 a_plus = family_phase(family_on_a);
    const Phase4 a_minus = a_plus + Phase4(2);
    return {
        DecompositionTerm{
            CatState::from_phase(a_plus, k), CatState::from_phase(state.phase() - a_plus, n - k), kInvSqrt2},
        DecompositionTerm{
            CatState::from_phase(a_minus, k), CatState::from_phase(state.phase() - a_minus, n - k), kInvSqrt2},
    };
}

BlockCollapse collapse_after_block_measurement(
    const CatState& state, std::size_t block_size, BlockFamily family, Rng& rng) {
    const std::size_t n = state.arity();
    if (block_size < 1 || block_size + 1 > n) {
        throw std::invalid_argument(
            "collapse_after_block_measurement: block size " + std::to_string(block_size) + " must lie in [1, " +
            std::to_string(n) + "-1]");
    }
    Phase4 measured = family_phase(family);
    if (rng.bit()) {
        measured = measured + Phase4(2);
    }
    return BlockCollapse{
        CatState::from_phase(measured, block_size),
        CatState::from_phase(state.phase() - measured, n - block_size),
    };
}

Relation expected_relation(const CatState& state, YParity a, YParity b) {
    const bool same = a == b;
    if (state.kind() == CatKind::Phi) {
        if (!same) {
            return Relation::Discard;
        }
        // Even/even reproduces the sign bit in both groups; odd/odd flips it.
        const bool equal = (a == YParity::Even) == (state.sign() == CatSign::Plus);
        return equal ? Relation::Equal : Relation::Anti;
    }
    if (same) {
        return Relation::Discard;
    }
    return state.sign() == CatSign::Plus ? Relation::Equal : Relation::Anti;
}

bool relation_holds(Relation relation, Bit a, Bit b) {
    switch (relation) {
        case Relation::Equal:
            return a == b;
        case Relation::Anti:
            return a != b;
        case Relation::Discard:
            return false;
    }
    return false;
}

std::string_view to_string(Basis basis) {
    return basis == Basis::X ? "X" : "Y";
}

std::string_view to_string(Relation relation) {
    switch (relation) {
        case Relation::Equal:
            return "equal";
        case Relation::Anti:
            return "anti";
        case Relation::Discard:
            return "discard";
    }
    return "?";
}

std::string_view to_string(BlockFamily family) {
    return family == BlockFamily::Phi ? "Phi" : "Lambda";
}

}  // namespace catqkd
