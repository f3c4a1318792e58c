#include "catqkd/dense_oracle.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace catqkd {

Amplitudes dense_state_vector(const CatState& state) {
    const std::size_t t = state.arity();
    if (t > kDenseOracleMaxArity) {
        throw std::invalid_argument(
            "dense oracle supports at most " + std::to_string(kDenseOracleMaxArity) + " particles, got " +
            std::to_string(t));
    }
    const std::size_t size = std::size_t{1} << t;
    Amplitudes amps(size, {0.0, 0.0});
    const double r = 1.0 / std::sqrt(2.0);
    std::complex<double> phase;
    switch (state.phase().exponent()) {
        case 0:
            phase = {1.0, 0.0};
            break;
        case 1:
            phase = {0.0, 1.0};
            break;
        case 2:
            phase = {-1.0, 0.0};
            break;
        default:
            phase = {0.0, -1.0};
            break;
    }
    amps[0] = r;
    amps[size - 1] += r * phase;
    return amps;
}

void apply_measurement_rotation(Amplitudes& amps, std::size_t qubit, Basis basis) {
    const std::size_t stride = std::size_t{1} << qubit;
    const double r = 1.0 / std::sqrt(2.0);
    const std::complex<double> minus_i{0.0, -1.0};
    for (std::size_t base = 0; base < amps.size(); base += 2 * stride) {
        for (std::size_t off = 0; off < stride; ++off) {
            auto& a0 = amps[base + off];
            auto& a1 = amps[base + off + stride];
            std::complex<double> v1 = a1;
            if (basis == Basis::Y) {
                v1 *= minus_i;  // S^dagger
            }
            const std::complex<double> v0 = a0;
            a0 = r * (v0 + v1);
            a1 = r * (v0 - v1);
        }
    }
}

std::vector<double> dense_oracle_distribution(const CatState& state, std::span<const Basis> bases) {
    if (bases.size() != state.arity()) {
        throw std::invalid_argument("dense oracle: basis vector length does not match arity");
    }
    Amplitudes amps = dense_state_vector(state);
    for (std::size_t q = 0; q < bases.size(); ++q) {
        apply_measurement_rotation(amps, q, bases[q]);
    }
    std::vector<double> probs(amps.size());
    for (std::size_t i = 0; i < amps.size(); ++i) {
        probs[i] = std::norm(amps[i]);
    }
    return probs;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("total_variation: size mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        s += std::abs(p[i] - q[i]);
    }
    return 0.5 * s;
}

}  // namespace catqkd
