#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "catqkd/adversary.h"
#include "catqkd/analysis.h"
#include "catqkd/dense_oracle.h"

using namespace catqkd;

namespace {

BasisVector bases_from_index(std::uint64_t mask, std::size_t n) {
    BasisVector b(n);
    for (std::size_t j = 0; j < n; ++j) {
        b[j] = (mask >> j) & 1 ? Basis::Y : Basis::X;
    }
    return b;
}

// Probability that a block's parity P is 1.
double prob_parity_one(const CatState& block, std::span<const Basis> bases) {
    const auto d = outcome_distribution(block, bases);
    if (!d.required_parity()) {
        return 0.5;
    }
    return *d.required_parity() == 1 ? 1.0 : 0.0;
}

// Error probability of one honest test round with independent blocks, or 0
// when the round is discarded.
double round_error(const CatState& source, const CatState& a, const CatState& b, const BasisVector& ba,
                   const BasisVector& bb) {
    const std::size_t ny_a = count_y(ba), ny_b = count_y(bb);
    if (!sift(source, ny_a, ny_b)) {
        return 0.0;
    }
    const Relation rel = expected_relation(source, y_parity(ny_a), y_parity(ny_b));
    const Bit flip = rel == Relation::Anti ? 1 : 0;
    // b_A xor b_B has to equal `flip`; M_y shifts each parity.
    const double pa = prob_parity_one(a, ba), pb = prob_parity_one(b, bb);
    const double qa = (ny_a % 4) / 2 ? 1 - pa : pa;
    const double qb = (ny_b % 4) / 2 ? 1 - pb : pb;
    const double xor_one = qa * (1 - qb) + (1 - qa) * qb;
    return flip ? 1 - xor_one : xor_one;
}

CatState remaining_after(const CatState& parent, Bit measured_sign, std::size_t arity) {
    return CatState::from_phase(parent.phase() - Phase4(measured_sign ? 2u : 0u), arity);
}

// Exact per-test-bit error with Eve always intercepting, averaged over
// every basis pattern and Eve outcome, for one source state.
double exact_error_rate(ProtocolVariant variant, Strategy strategy, const CatState& source, std::size_t k,
                        std::size_t l, std::size_t n_prime) {
    const std::size_t n = k + l;
    const bool modified = variant == ProtocolVariant::Modified;
    double total = 0.0, weight = 0.0;
    struct Branch {
        CatState a, b;
        double w;
    };
    std::vector<Branch> branches;
    for (Bit s : {Bit{0}, Bit{1}}) {
        const CatState a = remaining_after(source, s, k);
        if (strategy == Strategy::InterceptResend) {
            branches.push_back({a, CatState(CatKind::Phi, s ? CatSign::Minus : CatSign::Plus, l), 0.5});
        } else {
            for (const auto& e : CatState::all(n_prime)) {
                for (Bit s2 : {Bit{0}, Bit{1}}) {
                    branches.push_back({a, remaining_after(e, s2, l), 0.5 / 8});
                }
            }
        }
    }
    const std::size_t free_bits = modified ? n - 1 : n;
    for (const auto& br : branches) {
        for (std::uint64_t mask = 0; mask < (1u << free_bits); ++mask) {
            BasisVector all = bases_from_index(mask, free_bits);
            if (modified) {
                // Member 0 of A is the chairperson.
                all.insert(all.begin(), chairperson_basis(source, count_y(all)));
            }
            const BasisVector ba(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
            const BasisVector bb(all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
            total += br.w * round_error(source, br.a, br.b, ba, bb);
            weight += br.w;
        }
    }
    return total / weight;
}

struct RoundTally {
    std::size_t protected_tests = 0;
    std::size_t protected_errors = 0;
    std::size_t exposed_tests = 0;
    std::size_t exposed_errors = 0;
};

RoundTally tally_rounds(
    ProtocolVariant variant, const GroupSpec& spec, const AdversaryConfig& adv, SourceKnowledge knowledge,
    std::size_t n_rounds, std::uint64_t seed, LastMemberPolicy policy = LastMemberPolicy::HighestNonCollector) {
    SessionConfig cfg;
    cfg.spec = spec;
    cfg.variant = variant;
    cfg.n_rounds = n_rounds;
    cfg.test_count = n_rounds;
    cfg.knowledge = knowledge;
    cfg.last_member_policy = policy;
    Adversary adversary(adv, spec, variant, knowledge);
    Rng rng(seed);
    const auto r = run_session(cfg, adversary, rng);
    RoundTally t;
    for (const auto& tx : r.rounds) {
        if (!tx.eve.intercepted) {
            EXPECT_FALSE(tx.test_error);
            continue;
        }
        if (tx.protection == Protection::Unprotected) {
            t.exposed_tests++;
            t.exposed_errors += tx.test_error;
        } else {
            t.protected_tests++;
            t.protected_errors += tx.test_error;
        }
    }
    return t;
}

}  // namespace

TEST(AdversaryConfig, Validation) {
    const GroupSpec spec{4, 4};
    AdversaryConfig c;
    c.strategy = Strategy::InterceptResend;
    c.lambda = 1.5;
    EXPECT_FALSE(c.violations(spec).empty());
    c.lambda = 0.5;
    EXPECT_TRUE(c.violations(spec).empty());
    c.r_b = 5;
    EXPECT_FALSE(c.violations(spec).empty());
    c.r_b = 0;
    c.strategy = Strategy::EntangledResend;
    c.n_prime = 4;
    EXPECT_FALSE(c.violations(spec).empty());
    c.n_prime = 5;
    EXPECT_NO_THROW(c.validate(spec));
    EXPECT_EQ(parse_strategy("entangled_resend"), Strategy::EntangledResend);
    EXPECT_THROW(parse_strategy("cloning"), std::invalid_argument);
}

TEST(EveInterceptResend, Examples) {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto r = eve_intercept_resend(CatState::phi_plus(7), 3, rng);
        EXPECT_EQ(r.block_b.arity(), 3u);
        EXPECT_EQ(r.block_a, CatState(CatKind::Phi, r.block_b.sign(), 4));
        EXPECT_EQ(r.block_b.kind(), CatKind::Phi);
        EXPECT_TRUE(r.eve.intercepted);
        EXPECT_EQ(r.eve.fake_sent, r.block_b);
        EXPECT_FALSE(r.eve.remainder.has_value());

        const auto u = eve_intercept_resend(CatState::lambda_plus(7), 3, rng);
        EXPECT_EQ(u.block_a, CatState(CatKind::Lambda, u.block_b.sign(), 4));
        EXPECT_EQ(u.block_b.kind(), CatKind::Phi);
    }
}

TEST(EveEntangledResend, RecordsRemainder) {
    Rng rng(2);
    std::array<int, 4> fake{};
    for (int i = 0; i < 4000; ++i) {
        const auto r = eve_entangled_resend(CatState::phi_minus(6), 3, 5, rng);
        ASSERT_TRUE(r.eve.remainder.has_value());
        EXPECT_EQ(r.eve.remainder->arity(), 2u);
        EXPECT_EQ(r.block_b.arity(), 3u);
        EXPECT_EQ(r.block_a.arity(), 3u);
        EXPECT_EQ(r.block_a.kind(), CatKind::Phi);
        fake[r.block_b.phase().exponent()]++;
    }
    // B's block is uniform over the four 3-particle cat states.
    for (int c : fake) {
        EXPECT_NEAR(c / 4000.0, 0.25, 0.03);
    }
    EXPECT_THROW(eve_entangled_resend(CatState::phi_minus(6), 3, 3, rng), std::invalid_argument);
}

// Exact enumeration: 1/8 and 1/4 for intercept/resend, 1/4 and 1/2 for
// entangled resend, separately for every source state.
TEST(BaseRates, ExactEnumeration) {
    for (const auto& s : CatState::all(5)) {
        EXPECT_NEAR(exact_error_rate(ProtocolVariant::Original, Strategy::InterceptResend, s, 2, 3, 0), 0.125, 1e-12);
        EXPECT_NEAR(exact_error_rate(ProtocolVariant::Modified, Strategy::InterceptResend, s, 2, 3, 0), 0.25, 1e-12);
        EXPECT_NEAR(exact_error_rate(ProtocolVariant::Original, Strategy::EntangledResend, s, 2, 3, 4), 0.25, 1e-12);
        EXPECT_NEAR(exact_error_rate(ProtocolVariant::Modified, Strategy::EntangledResend, s, 2, 3, 4), 0.5, 1e-12);
    }
    for (const auto& s : CatState::all(7)) {
        EXPECT_NEAR(exact_error_rate(ProtocolVariant::Original, Strategy::InterceptResend, s, 3, 4, 0), 0.125, 1e-12);
        EXPECT_NEAR(exact_error_rate(ProtocolVariant::Modified, Strategy::InterceptResend, s, 4, 3, 0), 0.25, 1e-12);
    }
}

TEST(BaseRates, SimulatedQuick) {
    struct Case {
        ProtocolVariant v;
        Strategy s;
        double e;
    } cases[] = {
        {ProtocolVariant::Original, Strategy::InterceptResend, 0.125},
        {ProtocolVariant::Modified, Strategy::InterceptResend, 0.25},
        {ProtocolVariant::Original, Strategy::EntangledResend, 0.25},
        {ProtocolVariant::Modified, Strategy::EntangledResend, 0.5},
    };
    for (const auto& c : cases) {
        ScenarioParams p;
        p.k = 3;
        p.l = 3;
        p.protocol = c.v;
        p.strategy = c.s;
        MonteCarloOptions o;
        o.master_seed = 99;
        const auto r = monte_carlo_error_rate(p, 40000, o);
        EXPECT_NEAR(r.rate.value, c.e, 0.012) << to_string(c.s) << " " << to_string(c.v);
    }
}

TEST(BaseRates, ZeroLambdaZeroErrors) {
    ScenarioParams p;
    p.k = 3;
    p.l = 3;
    p.lambda = 0.0;
    p.strategy = Strategy::EntangledResend;
    MonteCarloOptions o;
    EXPECT_EQ(monte_carlo_error_rate(p, 5000, o).errors, 0u);
}

TEST(RatioModel, ProtectionProbabilities) {
    const GroupSpec s{6, 6};
    const auto P = [&](ProtocolVariant v, Strategy st, std::size_t ra, std::size_t rb) {
        return ratio_protection_probability(v, st, s, ra, rb);
    };
    const auto O = ProtocolVariant::Original;
    const auto M = ProtocolVariant::Modified;
    const auto IR = Strategy::InterceptResend;
    const auto ER = Strategy::EntangledResend;
    EXPECT_DOUBLE_EQ(P(O, IR, 0, 1), 0.0);
    EXPECT_DOUBLE_EQ(P(O, IR, 0, 3), 2.0 / 6);
    EXPECT_DOUBLE_EQ(P(O, IR, 3, 0), 2.0 / 6);
    EXPECT_DOUBLE_EQ(P(O, IR, 3, 1), 1.0 - (4.0 / 6) * (4.0 / 6));
    EXPECT_DOUBLE_EQ(P(O, IR, 1, 5), 1.0);
    EXPECT_DOUBLE_EQ(P(O, IR, 1, 6), 1.0);
    EXPECT_DOUBLE_EQ(P(O, IR, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(P(M, IR, 0, 3), 2.0 / 6);
    EXPECT_DOUBLE_EQ(P(M, IR, 2, 3), 0.5);
    EXPECT_DOUBLE_EQ(P(M, IR, 2, 0), 0.0);
    EXPECT_DOUBLE_EQ(P(O, ER, 0, 4), 0.0);
    EXPECT_DOUBLE_EQ(P(O, ER, 3, 3), 0.75);
    EXPECT_DOUBLE_EQ(P(M, ER, 6, 6), 1.0);
    EXPECT_THROW(P(O, IR, 0, 7), std::invalid_argument);
}

TEST(RatioModel, DrawsMatchProbabilities) {
    const GroupSpec spec{6, 6};
    AdversaryConfig c;
    c.strategy = Strategy::InterceptResend;
    c.lambda = 1.0;
    c.r_a = 3;
    c.r_b = 2;
    const ProtectionContext ctx{ProtocolVariant::Original, spec, RoleSchedule(spec, ProtocolVariant::Original).roles_for(0),
                                SourceKnowledge::SharedInA};
    Rng rng(4);
    int protected_rounds = 0, discards = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto p = conspirator_protection(ctx, c, rng);
        protected_rounds += p != Protection::Unprotected;
        discards += p == Protection::ForceDiscard;
    }
    const double q = 1.0 - (4.0 / 6) * (3.0 / 6);
    EXPECT_NEAR(protected_rounds / double(n), q, 5 * std::sqrt(q * (1 - q) / n));
    EXPECT_GT(discards, 0);
    c.r_b = 7;
    EXPECT_THROW(conspirator_protection(ctx, c, rng), std::invalid_argument);
    c.r_b = 1;
    c.strategy = Strategy::None;
    EXPECT_THROW(conspirator_protection(ctx, c, rng), std::invalid_argument);
}

// Shielded rounds never show an error and exposed ones show the base rate,
// for every tactic the adversary uses.
TEST(Tactics, ShieldedRoundsAreClean) {
    struct Case {
        ProtocolVariant v;
        Strategy s;
        ConspiratorModel m;
        SourceKnowledge knowledge;
        std::size_t k, l, r_a, r_b;
    } cases[] = {
        {ProtocolVariant::Original, Strategy::InterceptResend, ConspiratorModel::Ratio, SourceKnowledge::SharedInA, 4, 4, 0, 3},
        {ProtocolVariant::Original, Strategy::InterceptResend, ConspiratorModel::Ratio, SourceKnowledge::SharedInA, 4, 4, 3, 0},
        {ProtocolVariant::Original, Strategy::InterceptResend, ConspiratorModel::Ratio, SourceKnowledge::SharedInA, 4, 4, 2, 2},
        {ProtocolVariant::Modified, Strategy::InterceptResend, ConspiratorModel::Ratio, SourceKnowledge::SharedInA, 4, 4, 2, 2},
        {ProtocolVariant::Original, Strategy::EntangledResend, ConspiratorModel::Ratio, SourceKnowledge::SharedInA, 4, 4, 2, 0},
        {ProtocolVariant::Modified, Strategy::EntangledResend, ConspiratorModel::Ratio, SourceKnowledge::SharedInA, 4, 4, 2, 2},
        {ProtocolVariant::Original, Strategy::InterceptResend, ConspiratorModel::Mechanistic, SourceKnowledge::SharedInA, 4, 4, 2, 0},
        {ProtocolVariant::Original, Strategy::InterceptResend, ConspiratorModel::Mechanistic, SourceKnowledge::CollectorOnly, 4, 5, 3, 2},
        {ProtocolVariant::Original, Strategy::InterceptResend, ConspiratorModel::Mechanistic, SourceKnowledge::SharedInA, 4, 4, 0, 3},
        {ProtocolVariant::Modified, Strategy::InterceptResend, ConspiratorModel::Mechanistic, SourceKnowledge::SharedInA, 4, 4, 2, 2},
        {ProtocolVariant::Original, Strategy::EntangledResend, ConspiratorModel::Mechanistic, SourceKnowledge::SharedInA, 3, 4, 1, 2},
        {ProtocolVariant::Modified, Strategy::EntangledResend, ConspiratorModel::Mechanistic, SourceKnowledge::CollectorOnly, 3, 4, 1, 2},
    };
    std::uint64_t seed = 1000;
    for (const auto& c : cases) {
        AdversaryConfig adv;
        adv.strategy = c.s;
        adv.lambda = 1.0;
        adv.r_a = c.r_a;
        adv.r_b = c.r_b;
        adv.n_prime = c.l + 2;
        adv.model = c.m;
        const auto t = tally_rounds(c.v, GroupSpec{c.k, c.l}, adv, c.knowledge, 20000, ++seed);
        const std::string label = std::string(to_string(c.v)) + "/" + std::string(to_string(c.s)) + "/" +
                                  std::string(to_string(c.m)) + " r_a=" + std::to_string(c.r_a) +
                                  " r_b=" + std::to_string(c.r_b);
        EXPECT_GT(t.protected_tests, 1000u) << label;
        EXPECT_EQ(t.protected_errors, 0u) << label;
        ASSERT_GT(t.exposed_tests, 1000u) << label;
        const double e = per_bit_error_rate(c.v, c.s);
        const double rate = double(t.exposed_errors) / double(t.exposed_tests);
        EXPECT_NEAR(rate, e, 5 * std::sqrt(e * (1 - e) / t.exposed_tests)) << label;
    }
}

namespace {

double mechanistic_fraction(ProtocolVariant v, Strategy s, const GroupSpec& spec, std::size_t r_a, std::size_t r_b,
                            LastMemberPolicy policy, bool seize, SourceKnowledge knowledge) {
    AdversaryConfig c;
    c.strategy = s;
    c.lambda = 1.0;
    c.r_a = r_a;
    c.r_b = r_b;
    c.n_prime = spec.l + 1;
    c.model = ConspiratorModel::Mechanistic;
    c.seize_last_slot = seize;
    Adversary adv(c, spec, v, knowledge);
    const RoleSchedule schedule(spec, v, policy);
    const std::size_t period = std::lcm(spec.k, spec.l);
    Rng rng(0);
    std::size_t hit = 0;
    for (std::size_t r = 0; r < period; ++r) {
        const RoleAssignment roles = adv.assign_roles(r, schedule.roles_for(r));
        hit += conspirator_protection(ProtectionContext{v, spec, roles, knowledge}, c, rng) != Protection::Unprotected;
    }
    return double(hit) / double(period);
}

}  // namespace

// With no slot grabbing, the successor-of-collector schedule and contiguous
// conspirator ids realize (r_b - 1)/l exactly for r_b < l.
TEST(MechanisticModel, SuccessorScheduleRealizesRatio) {
    for (std::size_t l = 3; l <= 8; ++l) {
        const GroupSpec spec{4, l};
        for (std::size_t r_b = 1; r_b < l; ++r_b) {
            const double f = mechanistic_fraction(ProtocolVariant::Original, Strategy::InterceptResend, spec, 0, r_b,
                                                  LastMemberPolicy::SuccessorOfCollector, false,
                                                  SourceKnowledge::SharedInA);
            EXPECT_DOUBLE_EQ(f, (double(r_b) - 1) / double(l)) << "l=" << l << " r_b=" << r_b;
        }
        // All of B conspiring covers every round, not (l-1)/l.
        EXPECT_DOUBLE_EQ(mechanistic_fraction(ProtocolVariant::Original, Strategy::InterceptResend, spec, 0, l,
                                              LastMemberPolicy::SuccessorOfCollector, false,
                                              SourceKnowledge::SharedInA),
                         1.0);
    }
}

TEST(MechanisticModel, SlotGrabbingBeatsTheRatio) {
    const GroupSpec spec{4, 6};
    const double seized = mechanistic_fraction(ProtocolVariant::Original, Strategy::InterceptResend, spec, 0, 3,
                                               LastMemberPolicy::HighestNonCollector, true, SourceKnowledge::SharedInA);
    EXPECT_DOUBLE_EQ(seized, 3.0 / 6);
    EXPECT_GT(seized, 2.0 / 6);
}

// For co-prime group sizes the two collectors cover every pair, and the
// entangled-resend shielding equals 1 - (1 - r_a/k)(1 - r_b/l).
TEST(MechanisticModel, EntangledResendMatchesClosedForm) {
    for (auto v : {ProtocolVariant::Original, ProtocolVariant::Modified}) {
        const GroupSpec spec{3, 4};
        for (std::size_t r_a = 1; r_a <= 3; ++r_a) {
            for (std::size_t r_b = 0; r_b <= 4; ++r_b) {
                const double f = mechanistic_fraction(v, Strategy::EntangledResend, spec, r_a, r_b,
                                                      LastMemberPolicy::HighestNonCollector, true,
                                                      SourceKnowledge::SharedInA);
                EXPECT_NEAR(f, ratio_protection_probability(v, Strategy::EntangledResend, spec, r_a, r_b), 1e-12);
            }
        }
    }
}

// Eve's measurement of the intercepted block, made before any announcement,
// is independent of A's parity once the source is averaged over.
TEST(EveInformation, InterceptedParityIndependentOfPA) {
    for (std::size_t k = 1; k <= 3; ++k) {
        for (std::size_t l = 1; l <= 3; ++l) {
            const std::size_t n = k + l;
            for (std::uint64_t mask = 0; mask < (1u << n); ++mask) {
                const auto bases = bases_from_index(mask, n);
                double joint[2][2] = {{0, 0}, {0, 0}};
                for (const auto& s : CatState::all(n)) {
                    const auto p = dense_oracle_distribution(s, bases);
                    for (std::uint64_t idx = 0; idx < p.size(); ++idx) {
                        Bit pa = 0, pe = 0;
                        for (std::size_t j = 0; j < n; ++j) {
                            (j < k ? pa : pe) ^= (idx >> j) & 1;
                        }
                        joint[pa][pe] += 0.25 * p[idx];
                    }
                }
                double mi = 0;
                for (int a = 0; a < 2; ++a) {
                    for (int e = 0; e < 2; ++e) {
                        const double pa = joint[a][0] + joint[a][1];
                        const double pe = joint[0][e] + joint[1][e];
                        if (joint[a][e] > 0) {
                            mi += joint[a][e] * std::log2(joint[a][e] / (pa * pe));
                        }
                    }
                }
                EXPECT_NEAR(mi, 0.0, 1e-12) << "k=" << k << " l=" << l << " mask=" << mask;
            }
        }
    }
}

TEST(Misbehavior, MemberFunction) {
    Rng rng(1);
    MemberContext ctx{Group::A, 1, false, Basis::X, 0};
    EXPECT_EQ(misbehaving_member(ctx, Misbehavior::FlipOutcome, rng).reported_outcome, 1);
    EXPECT_EQ(misbehaving_member(ctx, Misbehavior::FlipOutcome, rng).announced_basis, Basis::X);
    EXPECT_EQ(misbehaving_member(ctx, Misbehavior::FalseBasis, rng).announced_basis, Basis::Y);
    EXPECT_EQ(misbehaving_member(ctx, Misbehavior::FalseBasis, rng).reported_outcome, 0);
    ctx.is_collector = true;
    EXPECT_THROW(misbehaving_member(ctx, Misbehavior::FlipOutcome, rng), std::invalid_argument);
}

TEST(Misbehavior, SurfacesAsTestErrors) {
    struct Case {
        Misbehavior m;
        double rate;
    } cases[] = {{Misbehavior::FlipOutcome, 1.0}, {Misbehavior::RandomFlip, 0.5}, {Misbehavior::FalseBasis, 0.5}};
    for (auto variant : {ProtocolVariant::Original, ProtocolVariant::Modified}) {
        for (const auto& c : cases) {
            const GroupSpec spec{3, 4};
            SessionConfig cfg;
            cfg.spec = spec;
            cfg.variant = variant;
            cfg.n_rounds = 20000;
            cfg.test_count = cfg.n_rounds;
            MisbehavingMember member(Group::B, 1, c.m);
            Rng rng(31);
            const auto r = run_session(cfg, member, rng);
            std::size_t kept_tests = 0, errs = 0, collector_rounds = 0;
            for (const auto& tx : r.rounds) {
                if (tx.roles.collector_b == 1) {
                    collector_rounds++;
                    EXPECT_FALSE(tx.test_error);
                    continue;
                }
                kept_tests += tx.kept;
                errs += tx.test_error;
            }
            EXPECT_GT(collector_rounds, 0u);
            const double rate = double(errs) / double(kept_tests);
            if (c.rate == 1.0) {
                EXPECT_EQ(errs, kept_tests);
            } else {
                EXPECT_NEAR(rate, c.rate, 5 * std::sqrt(0.25 / kept_tests)) << to_string(c.m);
            }
        }
    }
}

namespace {

// Collector flips its own reported outcome and compensates in P.
class CompensatingCollector : public RoundHooks {
  public:
    Bit report_outcome(const RoundContext& ctx, const RoundTranscript&, Group g, MemberId m, Bit measured,
                       Rng&) override {
        return g == Group::A && m == ctx.roles.collector_a ? measured ^ 1 : measured;
    }
    Bit settle_parity(const RoundContext&, const RoundTranscript&, Group g, Bit chain) override {
        return g == Group::A ? chain ^ 1 : chain;
    }
};

}  // namespace

TEST(Misbehavior, CollectorControlsParity) {
    SessionConfig cfg;
    cfg.spec = GroupSpec{3, 3};
    cfg.n_rounds = 3000;
    cfg.test_count = 1000;
    CompensatingCollector hooks;
    Rng rng(3);
    const auto r = run_session(cfg, hooks, rng);
    EXPECT_EQ(r.errors_found, 0u);
    EXPECT_EQ(r.key_a, r.key_b);
}

TEST(Adversary, PlanOverridesRandomDraws) {
    const GroupSpec spec{3, 3};
    AdversaryConfig c;
    c.strategy = Strategy::InterceptResend;
    c.lambda = 0.0;
    Adversary adv(c, spec, ProtocolVariant::Original);
    adv.set_plan(std::vector<RoundPlan>(50, RoundPlan{true, Protection::Unprotected}));
    SessionConfig cfg;
    cfg.spec = spec;
    cfg.n_rounds = 60;
    cfg.test_count = 0;
    Rng rng(1);
    const auto r = run_session(cfg, adv, rng);
    for (const auto& tx : r.rounds) {
        EXPECT_EQ(tx.eve.intercepted, tx.round_index < 50);
    }
}

namespace {

// I(P_B; remainder parity) for B on the first l particles of `states`
// (mixed uniformly), B's bases uniform and the remainder measured all in X.
double remainder_information(std::span<const CatState> states, std::size_t l) {
    const std::size_t n = states.front().arity();
    double joint[2][2] = {{0, 0}, {0, 0}};
    const double w = 1.0 / double(states.size()) / double(1u << l);
    for (const auto& s : states) {
        for (std::uint64_t mask = 0; mask < (1u << l); ++mask) {
            const auto bases = bases_from_index(mask, n);
            const auto p = dense_oracle_distribution(s, bases);
            for (std::uint64_t idx = 0; idx < p.size(); ++idx) {
                Bit pb = 0, pe = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    (j < l ? pb : pe) ^= (idx >> j) & 1;
                }
                joint[pb][pe] += w * p[idx];
            }
        }
    }
    double mi = 0;
    for (int b = 0; b < 2; ++b) {
        for (int e = 0; e < 2; ++e) {
            const double pb = joint[b][0] + joint[b][1];
            const double pe = joint[0][e] + joint[1][e];
            if (joint[b][e] > 1e-15) {
                mi += joint[b][e] * std::log2(joint[b][e] / (pb * pe));
            }
        }
    }
    return mi;
}

}  // namespace

// Eve picked her own state, so the remainder is not independent of P_B
// before announcements; only a forgotten (uniform) choice decouples them.
TEST(EveInformation, RemainderParityAndPB) {
    const std::size_t l = 3, n_prime = 5;
    const auto all = CatState::all(n_prime);
    EXPECT_NEAR(remainder_information(all, l), 0.0, 1e-12);
    for (const auto& e : all) {
        const std::array<CatState, 1> known{e};
        EXPECT_NEAR(remainder_information(known, l), 0.045566, 1e-5) << e.label();
    }
}
