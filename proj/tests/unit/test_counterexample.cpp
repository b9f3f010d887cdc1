#include <gtest/gtest.h>

#include "density_sieve.hpp"

using namespace density_sieve;

namespace {

bool all_pass(const std::vector<PropertyResult>& props) {
    for (const auto& p : props) {
        if (!p.passed) return false;
    }
    return true;
}

}  // namespace

TEST(BuildCantor, DepthOne) {
    auto s = build_cantor_system(1);
    EXPECT_EQ(s.boundaries, (std::vector<Natural>{0, 1}));
    ASSERT_EQ(s.sets.size(), 1u);
    EXPECT_EQ(s.sets[0].prefix, "");
}

TEST(BuildCantor, DepthTwoFollowsChildRule) {
    // t = 1 needs a power of two >= 2 children: U_1 = "0", U_2 = "1", s = 2 = 2t.
    auto s = build_cantor_system(2);
    EXPECT_EQ(s.boundaries, (std::vector<Natural>{0, 1, 3}));
    EXPECT_EQ(s.sets[1].prefix, "0");
    EXPECT_EQ(s.sets[2].prefix, "1");
    ASSERT_EQ(s.child_ranges.size(), 1u);
    EXPECT_EQ(s.child_ranges[0][0], (std::pair<Natural, Natural>{1, 2}));
}

TEST(BuildCantor, EveryDepthValidates) {
    for (std::size_t k = 1; k <= 4; ++k) {
        auto s = build_cantor_system(k);
        EXPECT_TRUE(all_pass(validate_system(s))) << k;
    }
    EXPECT_EQ(build_cantor_system(4).boundaries, (std::vector<Natural>{0, 1, 3, 15, 65535}));
}

TEST(BuildCantor, CapsAreEnforced) {
    EXPECT_THROW(build_cantor_system(0), SpecError);
    EXPECT_THROW(build_cantor_system(7), SpecError);
    EXPECT_THROW(build_cantor_system(5), BudgetError);
    EXPECT_THROW(build_cantor_system(4, 6, 1000), BudgetError);
}

TEST(ValidateSystem, DetectsInjectedFaults) {
    auto good = build_cantor_system(3);

    auto growth = good;
    growth.child_ranges[1][0].second = growth.child_ranges[1][0].first + 1;  // s < 2t
    auto p = validate_system(growth);
    EXPECT_FALSE(p[2].passed);
    EXPECT_NE(p[2].witness.find("(3, 4)"), std::string::npos) << p[2].witness;

    auto missing = good;
    missing.sets[2].prefix = "10";  // block 2 no longer covers "11..."
    p = validate_system(missing);
    EXPECT_FALSE(p[0].passed);
    EXPECT_TRUE(p[2].passed);

    auto overlap = good;
    overlap.sets[4].prefix = overlap.sets[3].prefix + "0";
    EXPECT_FALSE(validate_system(overlap)[0].passed);

    auto stray = good;
    stray.sets[10].prefix = "0" + stray.sets[10].prefix.substr(1);  // child of U_2 moved under U_1
    p = validate_system(stray);
    EXPECT_FALSE(p[1].passed);
}

TEST(Defeat, EmptySet) {
    auto s = build_cantor_system(4);
    auto d = defeat(s, IndexSet::empty());
    EXPECT_EQ(coverage_count(s, d.point, IndexSet::empty()), 0u);
    EXPECT_FALSE(d.chain.empty());
}

TEST(Defeat, Squares) {
    auto s = build_cantor_system(4);
    auto z = IndexSet::squares();
    auto d = defeat(s, z);
    EXPECT_EQ(d.n0, 6u);
    EXPECT_EQ(d.start_block, 4u);
    for (auto n : d.chain) EXPECT_FALSE(membership(z, n)) << n;
    std::size_t n0_block = s.block_of(d.n0);
    EXPECT_LE(d.coverage, n0_block);
    EXPECT_EQ(d.hits_from_start, 0u);
    // the chain is nested
    for (std::size_t i = 1; i < d.chain.size(); ++i) EXPECT_TRUE(s.sets[d.chain[i]].extends(s.sets[d.chain[i - 1]]));
    EXPECT_TRUE(s.sets[d.chain.back()].contains(d.point.bits));
}

TEST(Defeat, ExtractorStyleSelection) {
    // An AP selection over the Cantor block boundaries, as the extractor would
    // draw it for a matching block structure.
    auto s = build_cantor_system(4);
    auto z = IndexSet::ap_selection(s.boundaries, draw_choices(4, 77));
    auto d = defeat(s, z);
    EXPECT_EQ(d.hits_from_start, 0u);
    EXPECT_LE(d.coverage, d.start_block - 1);
    for (auto n : d.chain) EXPECT_FALSE(membership(z, n));
}

TEST(Defeat, TooShallowSystem) {
    EXPECT_THROW(defeat(build_cantor_system(2), IndexSet::squares()), MathError);
}

TEST(CoverageCount, Examples) {
    auto s = build_cantor_system(4);
    std::vector<Natural> all;
    for (Natural n = 0; n < s.boundaries.back(); ++n) all.push_back(n);
    auto everything = IndexSet::finite(all);
    for (std::string bits : {"0", "1011", "111111111111111111"}) {
        EXPECT_EQ(coverage_count(s, {bits}, everything), 4u);
    }
    auto d = defeat(s, IndexSet::empty());
    EXPECT_EQ(coverage_count(s, d.point, IndexSet::empty()), 0u);
    // everything except the point's cylinder in the last block
    std::vector<Natural> skip;
    for (auto n : all) {
        if (n != d.chain.back()) skip.push_back(n);
    }
    EXPECT_EQ(coverage_count(s, d.point, IndexSet::finite(skip)), 3u);
}

TEST(CantorJson, RoundTrip) {
    auto s = build_cantor_system(3);
    auto back = cantor_system_from_json(to_json(s));
    EXPECT_EQ(to_json(back), to_json(s));
    EXPECT_TRUE(all_pass(validate_system(back)));
    EXPECT_THROW(cantor_system_from_json(nlohmann::json{{"boundaries", {0, 1}}}), SpecError);
}
