#include <gtest/gtest.h>

#include "evq/metrics.hpp"
#include "evq/rng.hpp"

using namespace evq;

namespace {

using V = std::vector<double>;

TariffSchedule flat(double price) { return TariffSchedule({{0, 96, price, TouPeriod::off_peak}}); }

V random_series(Rng& rng, double lo, double hi) {
    V v(kSlotsPerDay);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

} // namespace

TEST(Sci, HandExamples) {
    EXPECT_EQ(sci(V{3.3, 1.5, 0}, V{4, 2, 9}), 1.0);
    EXPECT_EQ(sci(V{3.3, 1.5}, V{0, 0}), 0.0);
    EXPECT_NEAR(sci(V{0, 3.3, 3.3, 0}, V{7, 2.0, 5.0, 0}), 5.3 / 6.6, 1e-15);
    EXPECT_NEAR(sci(V{0, 3.3, 3.3, 0}, V{7, 2.0, 5.0, 0}), 0.803030303030303, 1e-12);
    EXPECT_THROW(sci(V{0, 0}, V{1, 1}), MetricError);
    EXPECT_THROW(sci(V{1}, V{1, 1}), ShapeError);
}

TEST(Tec, HandExamples) {
    const TariffSchedule t;
    EXPECT_EQ(tec(V(96, 0.0), V(96, 0.0), V(96, 0.0), t), 0.0);
    V res(96, 0.0), ev(96, 0.0), pv(96, 0.0);
    res[60] = 1.0;
    ev[60] = 3.3;
    EXPECT_NEAR(tec(res, ev, pv, t), 0.11828225, 1e-15);
}

TEST(Tec, SlotSumMatchesStepCost) {
    Rng rng(3);
    const TariffSchedule t;
    for (int trial = 0; trial < 50; ++trial) {
        const auto res = random_series(rng, 0, 3), pv = random_series(rng, 0, 5);
        V ev(kSlotsPerDay);
        double by_step = 0.0;
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
            const Action a = rng.bernoulli(0.3) ? Action::charge : Action::idle;
            ev[s] = charging(a) ? (rng.bernoulli(0.5) ? 3.3 : 1.5) : 0.0;
            by_step += step_cost(t.price_at(s), a, ev[s], res[s], pv[s]);
        }
        EXPECT_NEAR(tec(res, ev, pv, t), by_step, 1e-12);
        // linearity
        V r2(res), e2(ev), p2(pv);
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) r2[s] *= 2, e2[s] *= 2, p2[s] *= 2;
        EXPECT_NEAR(tec(r2, e2, p2, t), 2 * tec(res, ev, pv, t), 1e-12);
    }
}

TEST(Par, HandExamples) {
    EXPECT_EQ(par(V{1, 1, 1}, V{0.5, 0.5, 0.5}, V{0, 0, 0}), 1.0);
    EXPECT_EQ(par(V{4, 0, 0, 0}, V{0, 0, 0, 0}, V{0, 0, 0, 0}), 4.0);
    EXPECT_EQ(par(V{0, 2}, V{0, 0}, V{2, 0}), 1.0);
    EXPECT_THROW(par(V{1, 0}, V{0, 0}, V{1, 0}), MetricError);
    EXPECT_THROW(par_of_flow(V{}), MetricError);
}

TEST(Metrics, RandomInvariants) {
    Rng rng(9);
    for (int trial = 0; trial < 500; ++trial) {
        const auto res = random_series(rng, 0, 3), pv = random_series(rng, 0, 6);
        auto ev = random_series(rng, 0, 3.3);
        ev[rng.index(kSlotsPerDay)] = 3.3;
        const double s = sci(ev, pv);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
        EXPECT_GE(par(res, ev, pv), 1.0);
    }
}

TEST(SciComm, Examples) {
    V a(4, 0.0), b(4, 0.0), pv{0, 4.0, 0, 0};
    a[1] = 3.3;
    b[1] = 3.3;
    EXPECT_NEAR(sci_comm({a, b}, pv), 4.0 / 6.6, 1e-15);
    EXPECT_EQ(sci_comm({a, b}, V{0, 7, 0, 0}), 1.0);
    EXPECT_THROW(sci_comm({V(4, 0.0)}, pv), MetricError);
    EXPECT_THROW(sci_comm({V(3, 1.0)}, pv), ShapeError);
}

TEST(SciInd, Examples) {
    // house a: 3.3 at slot 1 with own PV 2; house b: 1.5 at slot 2 with own PV 5
    const V a{0, 3.3, 0}, b{0, 0, 1.5}, pa{0, 2.0, 0}, pb{0, 0, 5.0};
    EXPECT_NEAR(sci_ind({a, b}, {pa, pb}), (2.0 + 1.5) / (3.3 + 1.5), 1e-15);
    EXPECT_EQ(sci_ind({a, b}, {V(3, 0.0), V(3, 0.0)}), 0.0);
    EXPECT_THROW(sci_ind({a}, {pa, pb}), ShapeError);
}

TEST(CommunityMetrics, PoolingNeverLowersSciExactly) {
    Rng rng(21);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + rng.index(4);
        SeriesList ev, pv;
        V shared(kSlotsPerDay, 0.0);
        for (std::size_t h = 0; h < n; ++h) {
            ev.push_back(random_series(rng, 0, 3.3));
            // half the trials keep every house within its own PV: no pooling gain
            pv.push_back(trial % 2 ? random_series(rng, 0, 6) : random_series(rng, 3.3, 6));
            for (std::size_t t = 0; t < kSlotsPerDay; ++t) shared[t] += pv.back()[t];
        }
        EXPECT_GE(sci_comm(ev, shared), sci_ind(ev, pv)) << trial;
    }
}

TEST(CommunityMetrics, SingleHouseReducesToSingles) {
    Rng rng(12);
    const TariffSchedule t;
    for (int trial = 0; trial < 50; ++trial) {
        const auto res = random_series(rng, 0, 3), pv = random_series(rng, 0, 6);
        auto ev = random_series(rng, 0, 3.3);
        EXPECT_NEAR(sci_comm({ev}, pv), sci(ev, pv), 1e-15);
        EXPECT_NEAR(sci_ind({ev}, {pv}), sci(ev, pv), 1e-15);
        EXPECT_NEAR(tec_comm({res}, {ev}, pv, t), tec(res, ev, pv, t), 1e-12);
        EXPECT_NEAR(par_comm({res}, {ev}, pv), par(res, ev, pv), 1e-12);
        EXPECT_NEAR(par_comm({res}, {ev}, pv, CommunityParMode::per_house), par(res, ev, pv), 1e-12);
    }
}

TEST(CommunityMetrics, IdenticalHousesScaleTecLinearly) {
    Rng rng(14);
    const TariffSchedule t;
    const auto res = random_series(rng, 0, 3), ev = random_series(rng, 0, 3.3);
    const V zero(kSlotsPerDay, 0.0);
    const double one = tec(res, ev, zero, t);
    for (std::size_t n = 1; n <= 5; ++n)
        EXPECT_NEAR(tec_comm(SeriesList(n, res), SeriesList(n, ev), zero, t), static_cast<double>(n) * one, 1e-12);
}

TEST(CommunityMetrics, TwoHouseTwoSlotHandFixture) {
    // flows: slot 0 = (1+3) + (2+0) - 4 = 2; slot 1 = (1+0) + (2+1.5) - 0 = 4.5
    const SeriesList res{{1, 1}, {2, 2}}, ev{{3, 0}, {0, 1.5}};
    const V pv{4, 0};
    EXPECT_NEAR(tec_comm(res, ev, pv, flat(0.1)), 0.1 * (2 + 4.5) / 4, 1e-15);
    EXPECT_NEAR(par_comm(res, ev, pv), 4.5 / 3.25, 1e-15);
    // per house, PV split 2/2: |1+3-2| + |2+0-2| = 2 ; |1| + |3.5| = 4.5
    EXPECT_NEAR(par_comm(res, ev, pv, CommunityParMode::per_house), 4.5 / 3.25, 1e-15);
    const SeriesList ev2{{0, 0}, {3, 0}};
    // aggregated: (1+0)+(2+3)-4 = 2, (1)+(2) = 3 -> 3/2.5; per house: |1-2|+|5-2| = 4, 3 -> 4/3.5
    EXPECT_NEAR(par_comm(res, ev2, pv), 3.0 / 2.5, 1e-15);
    EXPECT_NEAR(par_comm(res, ev2, pv, CommunityParMode::per_house), 4.0 / 3.5, 1e-15);
}

TEST(Savings, Examples) {
    EXPECT_NEAR(savings(10.0, 8.85), 0.115, 1e-12);
    EXPECT_EQ(savings(3.0, 3.0), 0.0);
    EXPECT_NEAR(savings(5.21, 5.10), 0.0211132, 1e-7);
    EXPECT_THROW(savings(0.0, 1.0), MetricError);
}
