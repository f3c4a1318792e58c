#ifndef CATQKD_CHANNEL_H
#define CATQKD_CHANNEL_H

#include <cstdint>
#include <optional>
#include <string_view>

#include "catqkd/cat_state.h"

namespace catqkd {

/// How a round was shielded from test errors by conspirators.
enum class Protection : std::uint8_t { Unprotected, SuppressError, ForceDiscard };

std::string_view to_string(Protection protection);

/// Eavesdropper's record for one round.
struct EveRoundState {
    bool intercepted = false;
    BlockFamily measured_family = BlockFamily::Phi;
    /// State the intercepted block was found in.
    std::optional<CatState> measured_outcome;
    /// l-particle state forwarded to group B (a block of Eve's own cat state
    /// when she resends entangled particles).
    std::optional<CatState> fake_sent;
    /// Eve's retained (n' - l)-particle block. Present only for entangled resend.
    std::optional<CatState> remainder;
};

/// Particles as they reach the members: either the untouched n-particle
/// source or independent k- and l-particle blocks after interference.
class Delivery {
  public:
    static Delivery untouched(const CatState& source) {
        return Delivery(source, std::nullopt, std::nullopt);
    }
    static Delivery split(const CatState& block_a, const CatState& block_b) {
        return Delivery(std::nullopt, block_a, block_b);
    }

    bool is_joint() const {
        return joint_.has_value();
    }
    const CatState& joint() const {
        return *joint_;
    }
    const CatState& block_a() const {
        return *block_a_;
    }
    const CatState& block_b() const {
        return *block_b_;
    }

  private:
    Delivery(std::optional<CatState> j, std::optional<CatState> a, std::optional<CatState> b)
        : joint_(j), block_a_(a), block_b_(b) {
    }
    std::optional<CatState> joint_;
    std::optional<CatState> block_a_;
    std::optional<CatState> block_b_;
};

}  // namespace catqkd

#endif
