#ifndef CATQKD_DENSE_ORACLE_H
#define CATQKD_DENSE_ORACLE_H

#include <complex>
#include <span>
#include <vector>

#include "catqkd/cat_state.h"

namespace catqkd {

// Brute-force statevector reference for the closed-form outcome statistics.
// Amplitude index bit j is particle j.

inline constexpr std::size_t kDenseOracleMaxArity = 12;

using Amplitudes = std::vector<std::complex<double>>;

/// Explicit 2^t amplitude vector of the cat state.
Amplitudes dense_state_vector(const CatState& state);

/// Rotates particle `qubit` so that a computational-basis measurement of it
/// is a measurement in `basis` (|0>_x, |1>_x or |0>_y, |1>_y map to |0>, |1>).
void apply_measurement_rotation(Amplitudes& amps, std::size_t qubit, Basis basis);

/// Born-rule probabilities of every outcome string for per-particle bases.
/// Throws std::invalid_argument above kDenseOracleMaxArity particles or on a
/// length mismatch.
std::vector<double> dense_oracle_distribution(const CatState& state, std::span<const Basis> bases);

double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace catqkd

#endif
