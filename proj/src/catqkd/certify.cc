#include "catqkd/certify.h"

#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "catqkd/dense_oracle.h"

namespace catqkd {

namespace {

GaussianInt i_power(unsigned e) {
    switch (e % 4) {
        case 0:
            return {1, 0};
        case 1:
            return {0, 1};
        case 2:
            return {-1, 0};
        default:
            return {0, -1};
    }
}

std::uint64_t all_ones(std::size_t n) {
    return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
}

void accumulate(ExactAmplitudes& amps, std::uint64_t index, GaussianInt v) {
    auto [it, inserted] = amps.try_emplace(index, v);
    if (!inserted) {
        it->second = it->second + v;
    }
    if (it->second == GaussianInt{}) {
        amps.erase(it);
    }
}

BasisVector basis_from_mask(std::uint64_t mask, std::size_t t) {
    BasisVector b(t);
    for (std::size_t j = 0; j < t; ++j) {
        b[j] = (mask >> j) & 1 ? Basis::Y : Basis::X;
    }
    return b;
}

}  // namespace

ExactAmplitudes exact_amplitudes(const CatState& state) {
    // 1/sqrt2 = 2 * 2^(-3/2)
    ExactAmplitudes amps;
    accumulate(amps, 0, {2, 0});
    accumulate(amps, all_ones(state.arity()), GaussianInt{2, 0} * i_power(state.phase().exponent()));
    return amps;
}

ExactAmplitudes expand_terms(std::span<const DecompositionTerm> terms) {
    ExactAmplitudes amps;
    for (const auto& term : terms) {
        if (std::abs(term.amplitude - kInvSqrt2) > 1e-15) {
            throw std::invalid_argument("expand_terms: only 1/sqrt2 term amplitudes are supported");
        }
        // (1/sqrt2)^3 per term: the term weight and the two factor normalizations.
        const std::size_t ka = term.block_a.arity();
        const std::uint64_t ones_a = all_ones(ka);
        const std::uint64_t ones_b = all_ones(term.block_b.arity()) << ka;
        for (int ua = 0; ua < 2; ++ua) {
            for (int ub = 0; ub < 2; ++ub) {
                GaussianInt c{1, 0};
                if (ua) {
                    c = c * i_power(term.block_a.phase().exponent());
                }
                if (ub) {
                    c = c * i_power(term.block_b.phase().exponent());
                }
                accumulate(amps, (ua ? ones_a : 0) | (ub ? ones_b : 0), c);
            }
        }
    }
    return amps;
}

OracleEquivalenceReport check_oracle_equivalence(std::size_t max_arity, std::size_t bases_per_state, Rng& rng) {
    OracleEquivalenceReport report;
    report.max_arity = max_arity;
    for (std::size_t t = 1; t <= max_arity; ++t) {
        const std::uint64_t n_masks = std::uint64_t{1} << t;
        const bool exhaustive = n_masks <= bases_per_state;
        for (const auto& state : CatState::all(t)) {
            const std::uint64_t n_cases = exhaustive ? n_masks : bases_per_state;
            for (std::uint64_t c = 0; c < n_cases; ++c) {
                const std::uint64_t mask = exhaustive ? c : rng.below(n_masks);
                const BasisVector bases = basis_from_mask(mask, t);
                const auto closed = outcome_distribution(state, bases).dense();
                const auto dense = dense_oracle_distribution(state, bases);
                const double tv = total_variation(closed, dense);
                ++report.cases;
                if (tv > report.max_total_variation || report.worst_case.empty()) {
                    report.max_total_variation = std::max(tv, report.max_total_variation);
                    std::ostringstream os;
                    os << state.label() << "_" << t << " bases=";
                    for (Basis b : bases) {
                        os << to_string(b);
                    }
                    report.worst_case = os.str();
                }
            }
        }
    }
    return report;
}

ParityLawReport check_parity_laws(std::size_t max_arity) {
    ParityLawReport report;
    report.max_arity = max_arity;
    for (std::size_t t = 1; t <= max_arity; ++t) {
        const std::uint64_t n = std::uint64_t{1} << t;
        for (const auto& state : CatState::all(t)) {
            for (std::uint64_t mask = 0; mask < n; ++mask) {
                const BasisVector bases = basis_from_mask(mask, t);
                const std::size_t n_y = static_cast<std::size_t>(std::popcount(mask));
                const Bit m_y = static_cast<Bit>((n_y % 4) / 2);
                const ParityPrediction rule = parity_rule(state, n_y);
                const OutcomeDistribution dist = outcome_distribution(state, bases);
                ++report.basis_vectors;
                const Dyadic flat{1, static_cast<unsigned>(t)};
                for (std::uint64_t out = 0; out < n; ++out) {
                    const Dyadic p = dist.probability(out);
                    if (rule.is_deterministic()) {
                        if (p.numerator == 0) {
                            continue;
                        }
                        ++report.support_points;
                        const Bit parity = static_cast<Bit>(std::popcount(out) & 1);
                        if ((parity ^ m_y) != rule.value()) {
                            ++report.deterministic_violations;
                        }
                    } else {
                        ++report.support_points;
                        if (!(p == flat)) {
                            ++report.uniform_violations;
                        }
                    }
                }
                // The deterministic support must also be flat over exactly half
                // of the strings.
                if (rule.is_deterministic() && dist.support_size() != n / 2) {
                    ++report.deterministic_violations;
                }
            }
        }
    }
    return report;
}

DecompositionReport check_decompositions(std::size_t max_arity) {
    DecompositionReport report;
    report.max_arity = max_arity;
    for (std::size_t n = 2; n <= max_arity; ++n) {
        for (const auto& state : CatState::all(n)) {
            const ExactAmplitudes parent = exact_amplitudes(state);
            for (std::size_t k = 1; k < n; ++k) {
                for (BlockFamily family : {BlockFamily::Phi, BlockFamily::Lambda}) {
                    const auto terms = decompose(state, k, family);
                    ++report.cases;
                    if (expand_terms(terms) != parent) {
                        std::ostringstream os;
                        os << state.label() << "_" << n << " k=" << k << " family=" << to_string(family);
                        report.failures.push_back(os.str());
                    }
                }
            }
        }
    }
    return report;
}

}  // namespace catqkd
