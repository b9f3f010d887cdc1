#include <gtest/gtest.h>

#include <random>

#include "density_sieve.hpp"
#include "oracles.hpp"

using namespace density_sieve;

namespace {

const std::vector<Natural> kN{0, 1, 3, 9};

}  // namespace

TEST(Membership, APSelectionExamples) {
    auto z = IndexSet::ap_selection(kN, {0, 1, 2});
    EXPECT_TRUE(membership(z, 0));
    EXPECT_FALSE(membership(z, 1));
    EXPECT_TRUE(membership(z, 2));
    EXPECT_EQ(enumerate(z, 0, 9), (std::vector<Natural>{0, 2, 5, 8}));
    EXPECT_FALSE(membership(IndexSet::finite({4, 7}), 5));
}

TEST(PrefixCount, Examples) {
    for (Natural c2 = 0; c2 < 2; ++c2) {
        for (Natural c3 = 0; c3 < 3; ++c3) {
            EXPECT_EQ(prefix_count(IndexSet::ap_selection(kN, {0, c2, c3}), 9), 4u);
        }
    }
    EXPECT_EQ(prefix_count(IndexSet::squares(), 0), 0u);
    EXPECT_EQ(prefix_count(IndexSet::finite({4, 7}), 8), 2u);
}

TEST(DensityAt, Examples) {
    EXPECT_EQ(density_at(IndexSet::ap_selection(kN, {0, 1, 2}), 9), Rational(4, 9));
    std::vector<Natural> all(50);
    for (Natural i = 0; i < 50; ++i) all[i] = i;
    EXPECT_EQ(density_at(IndexSet::finite(all), 50), Rational(1));
    EXPECT_EQ(density_at(IndexSet::empty(), 17), Rational(0));
    EXPECT_THROW(density_at(IndexSet::empty(), 0), SpecError);
}

TEST(APSelection, RejectsBadPresentations) {
    EXPECT_THROW(IndexSet::ap_selection({0, 1, 4}, {0, 0}), SpecError);   // 2 does not divide 3
    EXPECT_THROW(IndexSet::ap_selection({0, 1, 3}, {0, 2}), SpecError);   // residue out of range
    EXPECT_THROW(IndexSet::ap_selection({1, 2}, {0}), SpecError);         // must start at 0
}

TEST(APSelection, CountsMatchEnumerationOracle) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Natural> b{0};
        std::vector<Natural> choices;
        for (Natural k = 1; k <= 12; ++k) {
            b.push_back(b.back() + k * (1 + rng() % 7));
            choices.push_back(rng() % k);
        }
        auto z = IndexSet::ap_selection(b, choices);
        auto members = oracle::ap_members(b, choices);
        for (Natural n = 0; n <= b.back() + 3; ++n) {
            ASSERT_EQ(prefix_count(z, n), oracle::count_below(members, n));
            ASSERT_EQ(membership(z, n), std::binary_search(members.begin(), members.end(), n));
        }
        // every residue class of a block has the same size
        for (std::size_t k = 1; k < b.size(); ++k) {
            for (Natural i = 0; i < k; ++i) {
                Natural size = 0;
                for (Natural n = b[k - 1] + i; n < b[k]; n += k) ++size;
                ASSERT_EQ(size, (b[k] - b[k - 1]) / k);
            }
        }
    }
}

TEST(SparseSets, SquaresAndPowers) {
    auto sq = IndexSet::squares();
    EXPECT_EQ(enumerate(sq, 0, 50), (std::vector<Natural>{0, 1, 4, 9, 16, 25, 36, 49}));
    EXPECT_EQ(prefix_count(sq, 1'000'000), 1000u);
    EXPECT_EQ(enumerate(IndexSet::squares(3), 0, 20), (std::vector<Natural>{3, 4, 7, 12, 19}));
    EXPECT_EQ(enumerate(IndexSet::powers_of_two(), 0, 40), (std::vector<Natural>{1, 2, 4, 8, 16, 32}));
    EXPECT_EQ(prefix_count(IndexSet::powers_of_two(), Natural{1} << 40), 40u);
}

TEST(TailUnion, Examples) {
    auto z = IndexSet::squares();
    auto single = IndexSet::tail_union({{z, 0}});
    for (Natural n = 0; n < 2000; ++n) ASSERT_EQ(membership(single, n), membership(z, n));

    std::vector<Natural> evens, odds;
    for (Natural n = 0; n < 100; ++n) (n % 2 ? odds : evens).push_back(n);
    auto t = IndexSet::tail_union({{IndexSet::finite(evens), 0}, {IndexSet::finite(odds), 50}});
    EXPECT_FALSE(membership(t, 3));
    EXPECT_TRUE(membership(t, 51));
    EXPECT_THROW(IndexSet::tail_union({{z, 5}, {z, 5}}), SpecError);
}

TEST(TailUnion, PrefixCountAgreesWithMembershipScan) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::pair<IndexSet, Natural>> parts;
        Natural cutoff = rng() % 50;
        int count = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < count; ++i) {
            IndexSet part;
            switch (rng() % 4) {
                case 0: {
                    std::vector<Natural> b{0}, c;
                    for (Natural k = 1; k <= 9; ++k) {
                        b.push_back(b.back() + k * (1 + rng() % 40));
                        c.push_back(rng() % k);
                    }
                    part = IndexSet::ap_selection(b, c);
                    break;
                }
                case 1: part = IndexSet::squares(rng() % 10); break;
                case 2: part = IndexSet::powers_of_two(); break;
                default: {
                    std::vector<Natural> m;
                    for (int j = 0; j < 40; ++j) m.push_back(rng() % 10'000);
                    part = IndexSet::finite(m);
                }
            }
            parts.emplace_back(part, cutoff);
            cutoff += 1 + rng() % 300;
        }
        // independent membership: some part contains n at or past its cutoff
        auto oracle_member = [&](Natural n) {
            for (const auto& [p, c] : parts) {
                if (n >= c && membership(p, n)) return true;
            }
            return false;
        };
        auto z = IndexSet::tail_union(parts);
        Natural running = 0;
        for (Natural n = 0; n < 10'000; ++n) {
            ASSERT_EQ(prefix_count(z, n), running) << "trial " << trial << " n " << n;
            if (oracle_member(n)) ++running;
        }
    }
}

TEST(TailUnion, NestedTailsFlatten) {
    auto inner = IndexSet::tail_union({{IndexSet::squares(), 10}, {IndexSet::powers_of_two(), 100}});
    auto outer = IndexSet::tail_union({{inner, 50}, {IndexSet::squares(1), 60}});
    for (Natural n = 0; n < 5000; ++n) {
        bool expect = (n >= 50 && membership(inner, n)) || (n >= 60 && membership(IndexSet::squares(1), n));
        ASSERT_EQ(membership(outer, n), expect);
        ASSERT_EQ(next_member(outer, n) == n, expect);
    }
}

TEST(DensityThreshold, PassesScan) {
    Rational tenth(1, 10);
    EXPECT_EQ(density_threshold(IndexSet::empty(), tenth), 1u);
    auto sq = IndexSet::squares();
    Natural t = density_threshold(sq, tenth);
    for (Natural n = t; n <= 10 * t; ++n) {
        Natural count = 0;
        while (count * count < n) ++count;  // squares below n: 0, 1, ..., count-1
        ASSERT_LE(Rational(BigInt(count), BigInt(n)), tenth) << n;
    }
}

TEST(DensityThreshold, IsMinimal) {
    auto sq = IndexSet::squares();
    Natural t = density_threshold(sq, Rational(1, 2));
    EXPECT_EQ(t, 6u);
    EXPECT_GT(density_at(sq, t - 1), Rational(1, 2));
}

TEST(DensityThreshold, APSelectionWithGrowingBlocks) {
    // block lengths k 2^k
    std::vector<Natural> b{0};
    std::vector<Natural> c;
    for (Natural k = 1; k <= 20; ++k) {
        b.push_back(b.back() + k * (Natural{1} << k));
        c.push_back(k / 2);
    }
    auto z = IndexSet::ap_selection(b, c);
    Rational quarter(1, 4);
    Natural t = density_threshold(z, quarter);
    auto members = oracle::ap_members(b, c);
    for (Natural n = t; n <= 10 * t && n <= b.back(); ++n) {
        ASSERT_LE(Rational(BigInt(oracle::count_below(members, n)), BigInt(n)), quarter) << n;
    }
}

TEST(DensityEnvelope, SoundOnEveryVariant) {
    std::vector<IndexSet> sets{IndexSet::squares(), IndexSet::squares(7), IndexSet::powers_of_two(),
                               IndexSet::finite({3, 9, 200}),
                               IndexSet::tail_union({{IndexSet::squares(), 4}, {IndexSet::powers_of_two(), 9}})};
    for (const auto& z : sets) {
        for (auto delta : {Rational(1, 2), Rational(1, 5), Rational(1, 11)}) {
            Natural t = density_envelope(z, delta);
            EXPECT_TRUE(density_scan_passes(z, t, 20 * t, delta));
        }
    }
}

TEST(Json, RoundTripsEveryVariant) {
    std::vector<IndexSet> sets{IndexSet::ap_selection(kN, {0, 1, 2}), IndexSet::finite({1, 5}), IndexSet::squares(2),
                               IndexSet::powers_of_two(),
                               IndexSet::tail_union({{IndexSet::squares(), 4}, {IndexSet::finite({8, 90}), 9}})};
    for (const auto& z : sets) {
        auto back = index_set_from_json(to_json(z));
        EXPECT_EQ(to_json(back), to_json(z));
        for (Natural n = 0; n < 500; ++n) ASSERT_EQ(membership(back, n), membership(z, n));
    }
    EXPECT_THROW(index_set_from_json(nlohmann::json{{"bogus", 1}}), SpecError);
}
