#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "robustqm/stern_gerlach.hpp"

using namespace robustqm;
using namespace robustqm::stern_gerlach;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(SgTable, AlignedAndPerpendicular) {
    const auto up = sg_table(MagnetSetting::at_angle(0.0, 1));
    EXPECT_EQ(up["+1"], 1.0);
    EXPECT_EQ(up["-1"], 0.0);
    const auto flipped = sg_table(MagnetSetting::at_angle(0.0, -1));
    EXPECT_EQ(flipped["+1"], 0.0);
    const MagnetSetting perp{{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, 1};
    const auto half = sg_table(perp);
    EXPECT_EQ(half["+1"], 0.5);
    EXPECT_EQ(half["-1"], 0.5);
}

TEST(SgTable, SumsToOneAndDependsOnDotOnly) {
    for (int k = 0; k <= 100; ++k) {
        const double th = pi * k / 100.0;
        const auto t = sg_table(MagnetSetting::at_angle(th));
        EXPECT_EQ(t.prob[0] + t.prob[1], 1.0);
        // same angle, rotated about z
        const MagnetSetting rotated{{0.0, 0.0, 1.0}, {0.0, std::sin(th), std::cos(th)}, 1};
        const auto r = sg_table(rotated);
        EXPECT_NEAR(r.prob[0], t.prob[0], 1e-12);
    }
}

TEST(SgFamily, FisherIsOneForBothBranches) {
    for (int branch : {1, -1})
        for (int k = 1; k < 40; ++k) {
            const double th = pi * k / 40.0;
            const double t[1] = {th};
            EXPECT_NEAR(inference::fisher_discrete(sg_family(branch, th), t).matrix(0, 0), 1.0, 1e-6);
        }
}

TEST(SimulateSg, CertaintyAndConcentration) {
    const auto c = simulate_sg(MagnetSetting::at_angle(0.0), 1234, 3);
    EXPECT_EQ(c.counts[0], 1234u);
    EXPECT_EQ(c.counts[1], 0u);
    const std::uint64_t n = 1'000'000;
    const auto h = simulate_sg(MagnetSetting::at_angle(pi / 2), n, 99);
    EXPECT_LE(std::abs(double(h["+1"]) / n - 0.5), 2.0 / std::sqrt(double(n)));
    EXPECT_EQ(h.total(), n);
}

TEST(SimulateSg, SameSeedSameCounts) {
    const auto s = MagnetSetting::at_angle(1.1, -1);
    EXPECT_EQ(simulate_sg(s, 5000, 17).counts, simulate_sg(s, 5000, 17).counts);
}
