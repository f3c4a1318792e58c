#ifndef CATQKD_CERTIFY_H
#define CATQKD_CERTIFY_H

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "catqkd/cat_state.h"
#include "catqkd/rng.h"

namespace catqkd {

// Exhaustive checks of the closed-form cat-state algebra against independent
// computations. Shared by the test suites and the oracle-check CLI mode.

/// Gaussian integer re + i*im.
struct GaussianInt {
    std::int64_t re = 0;
    std::int64_t im = 0;

    friend GaussianInt operator+(GaussianInt a, GaussianInt b) {
        return {a.re + b.re, a.im + b.im};
    }
    friend GaussianInt operator*(GaussianInt a, GaussianInt b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend bool operator==(const GaussianInt&, const GaussianInt&) = default;
};

/// Sparse computational-basis amplitudes in units of 2^(-3/2); zero entries
/// are dropped. Index bit j is particle j.
using ExactAmplitudes = std::map<std::uint64_t, GaussianInt>;

ExactAmplitudes exact_amplitudes(const CatState& state);

/// Expands sum_terms (1/sqrt2) |a>_A |b>_B with A on the low block_a.arity()
/// particles. Every term must carry amplitude 1/sqrt2.
ExactAmplitudes expand_terms(std::span<const DecompositionTerm> terms);

struct OracleEquivalenceReport {
    std::size_t max_arity = 0;
    std::size_t cases = 0;
    double max_total_variation = 0.0;
    std::string worst_case;
};

/// Compares outcome_distribution with dense_oracle_distribution for all four
/// states at arities 1..max_arity on `bases_per_state` random basis vectors
/// (every basis vector when there are fewer than that).
OracleEquivalenceReport check_oracle_equivalence(std::size_t max_arity, std::size_t bases_per_state, Rng& rng);

struct ParityLawReport {
    std::size_t max_arity = 0;
    std::uint64_t basis_vectors = 0;
    std::uint64_t support_points = 0;
    std::uint64_t deterministic_violations = 0;
    std::uint64_t uniform_violations = 0;
};

/// Walks every basis vector and every outcome string for arities
/// 1..max_arity and checks the parity rule on the exact support.
ParityLawReport check_parity_laws(std::size_t max_arity);

struct DecompositionReport {
    std::size_t max_arity = 0;
    std::size_t cases = 0;
    std::vector<std::string> failures;
};

/// Round-trips decompose() for all four states, n = 2..max_arity, every split
/// and both block families.
DecompositionReport check_decompositions(std::size_t max_arity);

}  // namespace catqkd

#endif
