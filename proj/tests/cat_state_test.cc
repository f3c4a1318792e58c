#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "catqkd/cat_state.h"
#include "catqkd/certify.h"
#include "catqkd/dense_oracle.h"

using namespace catqkd;

namespace {

BasisVector bases_from(std::string_view s) {
    BasisVector b;
    for (char c : s) {
        b.push_back(c == 'Y' ? Basis::Y : Basis::X);
    }
    return b;
}

BasisVector bases_from_index(std::uint64_t mask, std::size_t n) {
    BasisVector b(n);
    for (std::size_t j = 0; j < n; ++j) {
        b[j] = (mask >> j) & 1 ? Basis::Y : Basis::X;
    }
    return b;
}

Outcome bits_of(std::uint64_t index, std::size_t n) {
    Outcome o(n);
    for (std::size_t j = 0; j < n; ++j) {
        o[j] = static_cast<Bit>((index >> j) & 1);
    }
    return o;
}

// Support of the dense oracle, outcome strings written particle 0 first.
std::set<std::string> oracle_support(const CatState& s, std::string_view bases) {
    const auto b = bases_from(bases);
    const auto p = dense_oracle_distribution(s, b);
    std::set<std::string> out;
    for (std::uint64_t i = 0; i < p.size(); ++i) {
        if (p[i] > 1e-12) {
            std::string str;
            for (std::size_t j = 0; j < b.size(); ++j) {
                str.push_back((i >> j) & 1 ? '1' : '0');
            }
            out.insert(str);
        }
    }
    return out;
}

}  // namespace

TEST(CatState, RejectsZeroArity) {
    EXPECT_THROW(CatState::phi_plus(0), std::invalid_argument);
}

TEST(CatState, PhaseExponents) {
    EXPECT_EQ(CatState::phi_plus(3).phase().exponent(), 0u);
    EXPECT_EQ(CatState::lambda_plus(3).phase().exponent(), 1u);
    EXPECT_EQ(CatState::phi_minus(3).phase().exponent(), 2u);
    EXPECT_EQ(CatState::lambda_minus(3).phase().exponent(), 3u);
    for (const auto& s : CatState::all(4)) {
        EXPECT_EQ(CatState::from_phase(s.phase(), 4), s);
        EXPECT_EQ(CatState::from_label(s.label(), 4), s);
    }
    EXPECT_THROW(CatState::from_label("Psi+", 2), std::invalid_argument);
}

TEST(GroupStats, DerivedViews) {
    for (std::size_t n = 0; n < 12; ++n) {
        GroupStats g{n, 1};
        EXPECT_EQ(g.n_y_mod4(), n % 4);
        EXPECT_EQ(g.m_y(), (n % 4) / 2);
        EXPECT_EQ(g.shared_bit(), static_cast<Bit>(((n % 4) / 2) ^ 1));
    }
    const auto b = bases_from("YXYY");
    const Outcome o{1, 0, 1, 1};
    const auto g = GroupStats::from(b, o);
    EXPECT_EQ(g.n_y_raw, 3u);
    EXPECT_EQ(g.parity, 1);
    EXPECT_EQ(g.m_y(), 1);
}

TEST(ParityRule, Examples) {
    EXPECT_EQ(parity_rule(CatState::phi_plus(5), 0), ParityPrediction::deterministic(0));
    EXPECT_EQ(parity_rule(CatState::phi_plus(5), 1), ParityPrediction::uniform());
    EXPECT_EQ(parity_rule(CatState::lambda_minus(5), 3), ParityPrediction::deterministic(1));
    EXPECT_EQ(parity_rule(CatState::phi_minus(5), 2), ParityPrediction::deterministic(1));
    EXPECT_EQ(parity_rule(CatState::lambda_plus(5), 2), ParityPrediction::uniform());
    EXPECT_EQ(parity_rule(CatState::lambda_plus(5), 1), ParityPrediction::deterministic(0));
}

TEST(OutcomeDistribution, SpecExamplesAgainstOracle) {
    EXPECT_EQ(oracle_support(CatState::phi_plus(2), "XX"), (std::set<std::string>{"00", "11"}));
    EXPECT_EQ(oracle_support(CatState::phi_plus(2), "XY").size(), 4u);
    EXPECT_EQ(oracle_support(CatState::lambda_plus(3), "YXX"), (std::set<std::string>{"000", "011", "101", "110"}));
    EXPECT_EQ(oracle_support(CatState::phi_plus(3), "YYX"), (std::set<std::string>{"001", "010", "100", "111"}));
    const auto one = dense_oracle_distribution(CatState::phi_plus(1), bases_from("X"));
    EXPECT_NEAR(one[0], 1.0, 1e-15);
    EXPECT_NEAR(one[1], 0.0, 1e-15);

    const auto d = outcome_distribution(CatState::phi_plus(2), bases_from("XX"));
    ASSERT_TRUE(d.required_parity().has_value());
    EXPECT_EQ(*d.required_parity(), 0);
    EXPECT_EQ(d.support_size(), 2u);
    const auto u = outcome_distribution(CatState::phi_plus(2), bases_from("XY"));
    EXPECT_FALSE(u.required_parity().has_value());
    EXPECT_EQ(u.support_size(), 4u);
    const auto l3 = outcome_distribution(CatState::lambda_plus(3), bases_from("YXX"));
    EXPECT_EQ(l3.required_parity(), std::optional<Bit>(0));
    EXPECT_EQ(l3.probability(Outcome{0, 1, 1}), (Dyadic{1, 2}));
    EXPECT_EQ(l3.probability(Outcome{1, 0, 0}).numerator, 0u);
}

TEST(OutcomeDistribution, LengthMismatchThrows) {
    EXPECT_THROW(outcome_distribution(CatState::phi_plus(3), bases_from("XX")), std::invalid_argument);
    Rng rng(1);
    EXPECT_THROW(sample_outcome(CatState::phi_plus(3), bases_from("XXXX"), rng), std::invalid_argument);
    EXPECT_THROW(dense_oracle_distribution(CatState::phi_plus(3), bases_from("XX")), std::invalid_argument);
    EXPECT_THROW(dense_oracle_distribution(CatState::phi_plus(13), BasisVector(13, Basis::X)),
                 std::invalid_argument);
}

TEST(SampleOutcome, Examples) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        EXPECT_EQ(sample_outcome(CatState::phi_plus(1), bases_from("X"), rng), Outcome{0});
        EXPECT_EQ(sample_outcome(CatState::lambda_minus(1), bases_from("Y"), rng), Outcome{1});
        const auto o = sample_outcome(CatState::phi_plus(2), bases_from("XX"), rng);
        EXPECT_EQ(o[0], o[1]);
    }
    Rng a(99), b(99);
    const auto bases = bases_from("XYXYY");
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(sample_outcome(CatState::lambda_plus(5), bases, a), sample_outcome(CatState::lambda_plus(5), bases, b));
    }
}

TEST(SampleOutcome, MatchesDistribution) {
    // Chi-square-free check: each support string of a 3-particle parity-fixed
    // distribution appears at 1/4 within 5 sigma, off-support never.
    Rng rng(5);
    const auto bases = bases_from("YYX");
    std::array<int, 8> counts{};
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const auto o = sample_outcome(CatState::phi_plus(3), bases, rng);
        counts[o[0] | (o[1] << 1) | (o[2] << 2)]++;
    }
    const auto p = dense_oracle_distribution(CatState::phi_plus(3), bases);
    for (int i = 0; i < 8; ++i) {
        if (p[i] < 1e-12) {
            EXPECT_EQ(counts[i], 0);
        } else {
            const double sigma = std::sqrt(n * p[i] * (1 - p[i]));
            EXPECT_NEAR(counts[i], n * p[i], 5 * sigma);
        }
    }
}

TEST(OracleEquivalence, SmallArities) {
    Rng rng(2024);
    const auto r = check_oracle_equivalence(6, 64, rng);
    EXPECT_EQ(r.cases, 4u * (2 + 4 + 8 + 16 + 32 + 64));
    EXPECT_LT(r.max_total_variation, 1e-12) << r.worst_case;
}

TEST(ParityLaws, ExhaustiveSmall) {
    const auto r = check_parity_laws(8);
    EXPECT_GT(r.support_points, 0u);
    EXPECT_EQ(r.deterministic_violations, 0u);
    EXPECT_EQ(r.uniform_violations, 0u);
}

TEST(Decompose, PhiPlusAndLambdaPlusExamples) {
    const auto t = decompose(CatState::phi_plus(5), 2, BlockFamily::Phi);
    EXPECT_EQ(t[0].block_a, CatState::phi_plus(2));
    EXPECT_EQ(t[0].block_b, CatState::phi_plus(3));
    EXPECT_EQ(t[1].block_a, CatState::phi_minus(2));
    EXPECT_EQ(t[1].block_b, CatState::phi_minus(3));
    EXPECT_DOUBLE_EQ(t[0].amplitude, kInvSqrt2);

    const auto u = decompose(CatState::lambda_plus(5), 3, BlockFamily::Lambda);
    EXPECT_EQ(u[0].block_a, CatState::lambda_plus(3));
    EXPECT_EQ(u[0].block_b, CatState::phi_plus(2));
    EXPECT_EQ(u[1].block_a, CatState::lambda_minus(3));
    EXPECT_EQ(u[1].block_b, CatState::phi_minus(2));
}

TEST(Decompose, LambdaMinusSignPatternRegression) {
    const auto parent = CatState::lambda_minus(5);
    const auto t = decompose(parent, 2, BlockFamily::Phi);
    EXPECT_EQ(t[0].block_a, CatState::phi_plus(2));
    EXPECT_EQ(t[0].block_b, CatState::lambda_minus(3));
    EXPECT_EQ(t[1].block_a, CatState::phi_minus(2));
    EXPECT_EQ(t[1].block_b, CatState::lambda_plus(3));
    EXPECT_EQ(expand_terms(t), exact_amplitudes(parent));

    // The form with Lambda- in both terms does not reproduce the parent.
    const std::array<DecompositionTerm, 2> misprint{{
        {CatState::phi_plus(2), CatState::lambda_minus(3), kInvSqrt2},
        {CatState::phi_minus(2), CatState::lambda_minus(3), kInvSqrt2},
    }};
    EXPECT_NE(expand_terms(misprint), exact_amplitudes(parent));
}

TEST(Decompose, RoundTripsUpToTen) {
    const auto r = check_decompositions(10);
    EXPECT_EQ(r.cases, 4u * 2u * 45u);
    EXPECT_TRUE(r.failures.empty()) << r.failures.front();
}

TEST(Decompose, RoundTripAgainstDenseAmplitudes) {
    // Independent of the Gaussian-integer expansion: rebuild with complex
    // Kronecker products.
    for (std::size_t n = 2; n <= 7; ++n) {
        for (const auto& s : CatState::all(n)) {
            for (std::size_t k = 1; k < n; ++k) {
                for (BlockFamily f : {BlockFamily::Phi, BlockFamily::Lambda}) {
                    const auto terms = decompose(s, k, f);
                    Amplitudes sum(std::size_t{1} << n);
                    for (const auto& term : terms) {
                        const auto a = dense_state_vector(term.block_a);
                        const auto b = dense_state_vector(term.block_b);
                        for (std::size_t i = 0; i < a.size(); ++i) {
                            for (std::size_t j = 0; j < b.size(); ++j) {
                                sum[i | (j << k)] += term.amplitude * a[i] * b[j];
                            }
                        }
                    }
                    const auto parent = dense_state_vector(s);
                    for (std::size_t i = 0; i < sum.size(); ++i) {
                        EXPECT_LT(std::abs(sum[i] - parent[i]), 1e-12) << s.label() << " n=" << n << " k=" << k;
                    }
                }
            }
        }
    }
}

TEST(Decompose, RangeChecked) {
    EXPECT_THROW(decompose(CatState::phi_plus(4), 0, BlockFamily::Phi), std::invalid_argument);
    EXPECT_THROW(decompose(CatState::phi_plus(4), 4, BlockFamily::Phi), std::invalid_argument);
}

TEST(Collapse, Examples) {
    Rng rng(3);
    std::array<int, 2> seen{};
    for (int i = 0; i < 400; ++i) {
        const auto c = collapse_after_block_measurement(CatState::phi_plus(6), 2, BlockFamily::Phi, rng);
        EXPECT_EQ(c.measured.kind(), CatKind::Phi);
        EXPECT_EQ(c.remaining, CatState(CatKind::Phi, c.measured.sign(), 4));
        seen[c.measured.sign_bit()]++;

        const auto d = collapse_after_block_measurement(CatState::lambda_plus(6), 2, BlockFamily::Phi, rng);
        EXPECT_EQ(d.measured.kind(), CatKind::Phi);
        EXPECT_EQ(d.remaining, CatState(CatKind::Lambda, d.measured.sign(), 4));

        const auto bell = collapse_after_block_measurement(CatState::phi_plus(2), 1, BlockFamily::Phi, rng);
        EXPECT_EQ(bell.measured, bell.remaining);
    }
    EXPECT_GT(seen[0], 150);
    EXPECT_GT(seen[1], 150);
    EXPECT_THROW(collapse_after_block_measurement(CatState::phi_plus(3), 3, BlockFamily::Phi, rng),
                 std::invalid_argument);
}

TEST(Collapse, PhaseRuleOverAllCases) {
    // Measured phase plus remaining phase equals the parent phase.
    Rng rng(11);
    for (const auto& s : CatState::all(5)) {
        for (BlockFamily f : {BlockFamily::Phi, BlockFamily::Lambda}) {
            for (int i = 0; i < 20; ++i) {
                const auto c = collapse_after_block_measurement(s, 2, f, rng);
                EXPECT_EQ(c.measured.phase() + c.remaining.phase(), s.phase());
                EXPECT_EQ(c.measured.kind() == CatKind::Phi, f == BlockFamily::Phi);
            }
        }
    }
}

TEST(ExpectedRelation, SpecExamples) {
    const auto n = 5;
    EXPECT_EQ(expected_relation(CatState::phi_plus(n), YParity::Even, YParity::Even), Relation::Equal);
    EXPECT_EQ(expected_relation(CatState::phi_plus(n), YParity::Odd, YParity::Odd), Relation::Anti);
    EXPECT_EQ(expected_relation(CatState::lambda_minus(n), YParity::Even, YParity::Odd), Relation::Anti);
    EXPECT_EQ(expected_relation(CatState::phi_minus(n), YParity::Odd, YParity::Odd), Relation::Equal);
    EXPECT_EQ(expected_relation(CatState::phi_plus(n), YParity::Odd, YParity::Even), Relation::Discard);
    EXPECT_EQ(expected_relation(CatState::lambda_plus(n), YParity::Odd, YParity::Even), Relation::Equal);
    EXPECT_EQ(expected_relation(CatState::lambda_plus(n), YParity::Odd, YParity::Odd), Relation::Discard);
    EXPECT_TRUE(relation_holds(Relation::Equal, 1, 1));
    EXPECT_TRUE(relation_holds(Relation::Anti, 0, 1));
    EXPECT_FALSE(relation_holds(Relation::Discard, 0, 0));
}

// For every state and basis split over k + l particles, every outcome in the
// exact support honours the expected relation of the two groups' bits.
TEST(ExpectedRelation, HoldsOnExactSupport) {
    for (std::size_t n = 2; n <= 7; ++n) {
        for (std::size_t k = 1; k < n; ++k) {
            for (const auto& s : CatState::all(n)) {
                for (std::uint64_t mask = 0; mask < (1u << n); ++mask) {
                    const auto bases = bases_from_index(mask, n);
                    const std::span<const Basis> ba(bases.data(), k), bb(bases.data() + k, n - k);
                    const Relation rel = expected_relation(s, y_parity(count_y(ba)), y_parity(count_y(bb)));
                    const auto dist = outcome_distribution(s, bases);
                    if (rel == Relation::Discard) {
                        EXPECT_FALSE(dist.required_parity().has_value());
                        continue;
                    }
                    for (std::uint64_t idx = 0; idx < (1u << n); ++idx) {
                        if (dist.probability(idx).numerator == 0) {
                            continue;
                        }
                        const auto o = bits_of(idx, n);
                        const auto ga = GroupStats::from(ba, std::span<const Bit>(o.data(), k));
                        const auto gb = GroupStats::from(bb, std::span<const Bit>(o.data() + k, n - k));
                        ASSERT_TRUE(relation_holds(rel, ga.shared_bit(), gb.shared_bit()))
                            << s.label() << " n=" << n << " k=" << k << " mask=" << mask << " idx=" << idx;
                    }
                }
            }
        }
    }
}

// Either group's parity on its own is an unbiased coin for every basis choice.
TEST(ExpectedRelation, GroupParityMarginalIsUniform) {
    for (std::size_t n = 2; n <= 6; ++n) {
        for (std::size_t k = 1; k < n; ++k) {
            for (const auto& s : CatState::all(n)) {
                for (std::uint64_t mask = 0; mask < (1u << n); ++mask) {
                    const auto bases = bases_from_index(mask, n);
                    const auto p = dense_oracle_distribution(s, bases);
                    double pa1 = 0, pb1 = 0;
                    for (std::uint64_t idx = 0; idx < p.size(); ++idx) {
                        const auto o = bits_of(idx, n);
                        pa1 += parity_of(std::span<const Bit>(o.data(), k)) ? p[idx] : 0.0;
                        pb1 += parity_of(std::span<const Bit>(o.data() + k, n - k)) ? p[idx] : 0.0;
                    }
                    EXPECT_NEAR(pa1, 0.5, 1e-12);
                    EXPECT_NEAR(pb1, 0.5, 1e-12);
                }
            }
        }
    }
}

TEST(DenseOracle, NormalizedAndTotalVariation) {
    const auto p = dense_oracle_distribution(CatState::lambda_minus(4), bases_from("XYYX"));
    double sum = 0;
    for (double x : p) {
        sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    const std::vector<double> a{0.5, 0.5}, b{1.0, 0.0};
    EXPECT_DOUBLE_EQ(total_variation(a, b), 0.5);
}
