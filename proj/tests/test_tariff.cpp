#include <gtest/gtest.h>

#include "evq/tariff.hpp"

using namespace evq;

TEST(Tariff, DefaultPricesBySlot) {
    const TariffSchedule t;
    EXPECT_EQ(t.price_at(0), 0.01188);
    EXPECT_EQ(t.price_at(40), 0.06218);
    EXPECT_EQ(t.price_at(60), 0.11003);
    EXPECT_EQ(t.price_at(95), 0.06218);
    EXPECT_EQ(t.period_at(0), TouPeriod::off_peak);
    EXPECT_EQ(t.period_at(60), TouPeriod::on_peak);
    EXPECT_EQ(t.period_at(90), TouPeriod::mid_peak);
    EXPECT_EQ(t.max_price(), 0.11003);
}

TEST(Tariff, BandEdges) {
    const TariffSchedule t;
    EXPECT_EQ(t.price_at(23), 0.01188);
    EXPECT_EQ(t.price_at(24), 0.06218);
    EXPECT_EQ(t.price_at(55), 0.06218);
    EXPECT_EQ(t.price_at(56), 0.11003);
    EXPECT_EQ(t.price_at(87), 0.11003);
    EXPECT_EQ(t.price_at(88), 0.06218);
    EXPECT_THROW((void)t.price_at(96), std::out_of_range);
}

TEST(Tariff, LateOffPeakLayout) {
    const TariffSchedule t(TariffSchedule::austin_2018_late_off_peak());
    EXPECT_EQ(t.price_at(90), 0.01188);
    EXPECT_EQ(t.period_at(90), TouPeriod::off_peak);
    EXPECT_EQ(t.price_at(60), 0.11003);
}

TEST(Tariff, RejectsGapsOverlapsAndBadPrices) {
    EXPECT_THROW(TariffSchedule({{0, 50, 0.1, TouPeriod::off_peak}}), ConfigError);
    EXPECT_THROW(TariffSchedule({{0, 50, 0.1, TouPeriod::off_peak}, {40, 96, 0.1, TouPeriod::on_peak}}),
                 ConfigError);
    EXPECT_THROW(TariffSchedule({{0, 50, 0.1, TouPeriod::off_peak}, {50, 96, 0.0, TouPeriod::on_peak}}),
                 ConfigError);
    EXPECT_THROW(TariffSchedule({{0, 0, 0.1, TouPeriod::off_peak}, {0, 96, 0.1, TouPeriod::on_peak}}), ConfigError);
    EXPECT_NO_THROW(TariffSchedule({{50, 96, 0.2, TouPeriod::on_peak}, {0, 50, 0.1, TouPeriod::off_peak}}));
}

TEST(Tariff, PeriodNamesRoundTrip) {
    for (auto p : {TouPeriod::off_peak, TouPeriod::mid_peak, TouPeriod::on_peak})
        EXPECT_EQ(parse_tou_period(to_string(p)), p);
    EXPECT_THROW(parse_tou_period("peak"), ConfigError);
}

TEST(StepCost, HandExamples) {
    EXPECT_NEAR(step_cost(0.11003, Action::charge, 3.3, 1.0, 0.0), 0.11828225, 1e-15);
    EXPECT_EQ(step_cost(0.05, Action::idle, 3.3, 2.0, 2.0), 0.0);
    EXPECT_NEAR(step_cost(0.06218, Action::idle, 0.0, 1.0, 3.0), -0.03109, 1e-15);
}

TEST(StepCost, IdleIgnoresEvPower) {
    EXPECT_EQ(step_cost(0.1, Action::idle, 3.3, 1.0, 0.5), step_cost(0.1, Action::idle, 0.0, 1.0, 0.5));
}

TEST(StepCost, LinearAndOddInNetFlow) {
    for (double res : {0.0, 0.7, 2.5})
        for (double pv : {0.0, 1.1, 4.0}) {
            const double c = step_cost(0.06218, Action::idle, 0.0, res, pv);
            EXPECT_NEAR(step_cost(0.06218, Action::idle, 0.0, pv, res), -c, 1e-15);
            EXPECT_NEAR(step_cost(0.06218, Action::idle, 0.0, 2 * res, 2 * pv), 2 * c, 1e-15);
        }
    const double a = step_cost(0.11003, Action::charge, 1.5, 0.0, 0.0);
    const double b = step_cost(0.11003, Action::charge, 3.0, 0.0, 0.0);
    EXPECT_NEAR(b, 2 * a, 1e-15);
}
