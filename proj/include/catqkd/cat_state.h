#ifndef CATQKD_CAT_STATE_H
#define CATQKD_CAT_STATE_H

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catqkd/rng.h"

namespace catqkd {

using Bit = std::uint8_t;

enum class CatKind : std::uint8_t { Phi, Lambda };
enum class CatSign : std::uint8_t { Plus, Minus };
enum class Basis : std::uint8_t { X, Y };

/// Which family of cat states a block of particles is expanded in (or
/// measured in). Phi-family states have real relative phase, Lambda-family
/// states imaginary.
enum class BlockFamily : std::uint8_t { Phi, Lambda };

using BasisVector = std::vector<Basis>;
using Outcome = std::vector<Bit>;

/// An element of {1, i, -1, -i}, stored as the exponent of i modulo 4.
class Phase4 {
  public:
    constexpr Phase4() = default;
    constexpr explicit Phase4(unsigned exponent) : exponent_(static_cast<std::uint8_t>(exponent % 4)) {
    }
    constexpr unsigned exponent() const {
        return exponent_;
    }
    constexpr bool is_real() const {
        return exponent_ % 2 == 0;
    }
    friend constexpr Phase4 operator+(Phase4 a, Phase4 b) {
        return Phase4(a.exponent_ + b.exponent_);
    }
    friend constexpr Phase4 operator-(Phase4 a, Phase4 b) {
        return Phase4(a.exponent_ + 4 - b.exponent_);
    }
    friend constexpr bool operator==(Phase4, Phase4) = default;

  private:
    std::uint8_t exponent_ = 0;
};

/// One of |Phi_t^+>, |Phi_t^->, |Lambda_t^+>, |Lambda_t^-> on t particles:
/// (|0...0> + phase |1...1>) / sqrt(2) with phase 1, -1, i, -i respectively.
class CatState {
  public:
    CatState(CatKind kind, CatSign sign, std::size_t arity);
    /// Builds the state whose |1...1> coefficient is `phase` relative to |0...0>.
    static CatState from_phase(Phase4 phase, std::size_t arity);

    static CatState phi_plus(std::size_t arity) {
        return {CatKind::Phi, CatSign::Plus, arity};
    }
    static CatState phi_minus(std::size_t arity) {
        return {CatKind::Phi, CatSign::Minus, arity};
    }
    static CatState lambda_plus(std::size_t arity) {
        return {CatKind::Lambda, CatSign::Plus, arity};
    }
    static CatState lambda_minus(std::size_t arity) {
        return {CatKind::Lambda, CatSign::Minus, arity};
    }
    /// All four states of the given arity, ordered Phi+, Phi-, Lambda+, Lambda-.
    static std::array<CatState, 4> all(std::size_t arity);

    CatKind kind() const {
        return kind_;
    }
    CatSign sign() const {
        return sign_;
    }
    std::size_t arity() const {
        return arity_;
    }
    Phase4 phase() const;
    /// 0 for Plus, 1 for Minus: the value of P xor M_y whenever it is fixed.
    Bit sign_bit() const {
        return sign_ == CatSign::Minus ? 1 : 0;
    }
    CatState with_arity(std::size_t arity) const {
        return {kind_, sign_, arity};
    }

    /// "Phi+", "Lambda-", ... (arity not included).
    std::string label() const;
    /// Inverse of label(); throws std::invalid_argument on unknown text.
    static CatState from_label(std::string_view label, std::size_t arity);

    friend bool operator==(const CatState&, const CatState&) = default;

  private:
    CatKind kind_;
    CatSign sign_;
    std::size_t arity_;
};

/// Per-group basis and parity summary. The raw Y count is stored; the mod-4
/// and mod-2 values are derived on demand.
struct GroupStats {
    std::size_t n_y_raw = 0;
    Bit parity = 0;

    std::size_t n_y_mod4() const {
        return n_y_raw % 4;
    }
    bool n_y_odd() const {
        return n_y_raw % 2 == 1;
    }
    Bit m_y() const {
        return static_cast<Bit>(n_y_mod4() / 2);
    }
    /// The group's shared bit M_y xor P.
    Bit shared_bit() const {
        return static_cast<Bit>(m_y() ^ parity);
    }

    static GroupStats from(std::span<const Basis> bases, std::span<const Bit> outcomes);

    friend bool operator==(const GroupStats&, const GroupStats&) = default;
};

std::size_t count_y(std::span<const Basis> bases);
Bit parity_of(std::span<const Bit> bits);

/// Either a fixed value of P xor M_y, or no rule (the value is a fair coin).
class ParityPrediction {
  public:
    static ParityPrediction deterministic(Bit value) {
        return ParityPrediction(true, value);
    }
    static ParityPrediction uniform() {
        return ParityPrediction(false, 0);
    }
    bool is_deterministic() const {
        return deterministic_;
    }
    /// Only meaningful when is_deterministic().
    Bit value() const {
        return value_;
    }
    friend bool operator==(const ParityPrediction&, const ParityPrediction&) = default;

  private:
    ParityPrediction(bool d, Bit v) : deterministic_(d), value_(v) {
    }
    bool deterministic_;
    Bit value_;
};

/// Phi states fix P xor M_y when N_y is even, Lambda states when N_y is odd;
/// the fixed value is the state's sign bit.
ParityPrediction parity_rule(const CatState& state, std::size_t n_y_raw);

/// Exact probability numerator / 2^log2_denominator.
struct Dyadic {
    std::uint64_t numerator = 0;
    unsigned log2_denominator = 0;

    double to_double() const;
    Dyadic normalized() const;
    friend bool operator==(const Dyadic& a, const Dyadic& b);
};

/// Joint distribution of the t outcome bits. Always either uniform over all
/// 2^t strings or uniform over the 2^(t-1) strings of one parity.
class OutcomeDistribution {
  public:
    OutcomeDistribution(std::size_t arity, std::optional<Bit> required_parity);

    std::size_t arity() const {
        return arity_;
    }
    /// nullopt when every bit string is equally likely.
    std::optional<Bit> required_parity() const {
        return required_parity_;
    }
    Dyadic probability(std::span<const Bit> outcome) const;
    /// Probability of the outcome whose bit j is bit j of `index`.
    Dyadic probability(std::uint64_t index) const;
    std::uint64_t support_size() const;
    /// Dense probability vector indexed like probability(index). arity <= 24.
    std::vector<double> dense() const;

  private:
    std::size_t arity_;
    std::optional<Bit> required_parity_;
};

OutcomeDistribution outcome_distribution(const CatState& state, std::span<const Basis> bases);
Outcome sample_outcome(const CatState& state, std::span<const Basis> bases, Rng& rng);

struct DecompositionTerm {
    CatState block_a;
    CatState block_b;
    double amplitude;
};

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

/// Writes the n-particle state as a sum of two products over the first k
/// particles (A) and the remaining n-k (B), with the A factors taken from
/// `family_on_a`. The first term carries the Plus A factor.
std::array<DecompositionTerm, 2> decompose(const CatState& state, std::size_t k, BlockFamily family_on_a);

struct BlockCollapse {
    CatState measured;
    CatState remaining;
};

/// Measures the last `block_size` particles in the two-outcome cat basis of
/// `family` and returns the observed block state together with the state the
/// first n - block_size particles are left in. Each outcome has probability 1/2.
BlockCollapse collapse_after_block_measurement(
    const CatState& state, std::size_t block_size, BlockFamily family, Rng& rng);

enum class YParity : std::uint8_t { Even, Odd };
enum class Relation : std::uint8_t { Equal, Anti, Discard };

inline YParity y_parity(std::size_t n_y_raw) {
    return n_y_raw % 2 == 0 ? YParity::Even : YParity::Odd;
}

/// Correlation between the two groups' shared bits for source `state` given
/// each group's Y-count parity.
Relation expected_relation(const CatState& state, YParity a, YParity b);

/// True when `relation` holds between bits a and b. Discard never holds.
bool relation_holds(Relation relation, Bit a, Bit b);

std::string_view to_string(Basis basis);
std::string_view to_string(Relation relation);
std::string_view to_string(BlockFamily family);

}  // namespace catqkd

#endif
