#include "oracles.hpp"
#include "trr/analytics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace trr;
using namespace trr::analytics;

TEST(Srtr, MatchesIndependentValues)
{
    // 1 − (1 − (1−d)^h)^r evaluated independently in Python.
    const double r2[] = {0.9639, 0.926559, 0.88173279, 0.8323020};
    const double r3[] = {0.993141, 0.98009700, 0.9593276, 0.9313256};
    for (unsigned h = 2; h <= 5; ++h) {
        EXPECT_NEAR(srtr_closed_form(RouteParams{0.1, 0, h, 2}), r2[h - 2], 1e-6);
        EXPECT_NEAR(srtr_closed_form(RouteParams{0.1, 0, h, 3}), r3[h - 2], 1e-6);
    }
    EXPECT_NEAR(srtr_closed_form(RouteParams{0.3, 0, 4, 3}), 0.561197, 1e-6);
    EXPECT_NEAR(srtr_closed_form(RouteParams{0.3, 0, 5, 3}), 0.424215, 1e-6);
}

TEST(Srtr, Trivial)
{
    for (double d : {0.0, 0.25, 0.9}) {
        EXPECT_DOUBLE_EQ(srtr_closed_form(RouteParams{d, 0, 1, 1}), 1 - d);
        EXPECT_DOUBLE_EQ(srtr_closed_form(RouteParams{0, 0, 7, 2}), 1.0);
    }
}

TEST(Srtr, ExactRational)
{
    mpq_class d(1, 10);
    mpq_class v = srtr_closed_form<mpq_class>(d, 3, 3);
    // 1 − (1 − 729/1000)^3 = 1 − 271^3/10^9
    EXPECT_EQ(v, mpq_class(1000000000 - 271 * 271 * 271, 1000000000));
}

TEST(Srtr, Monotone)
{
    for (unsigned r = 1; r <= 4; ++r)
        for (unsigned h = 1; h <= 10; ++h)
            for (int i = 0; i < 20; ++i) {
                double d = i / 20.0;
                double v = srtr_closed_form(RouteParams{d, 0, h, r});
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
                EXPECT_GE(v, srtr_closed_form(RouteParams{d + 0.05, 0, h, r}));
                EXPECT_GE(v, srtr_closed_form(RouteParams{d, 0, h + 1, r}));
                EXPECT_LE(v, srtr_closed_form(RouteParams{d, 0, h, r + 1}));
            }
}

TEST(Srtr, FinitePopulationApproachesClosedForm)
{
    EXPECT_NEAR(srtr_finite_population(6000, 600, 5, 2), 0.83221, 1e-5);
    EXPECT_NEAR(srtr_finite_population(6000, 600, 2, 2), 0.963894, 1e-5);
    EXPECT_NEAR(srtr_finite_population(60000000, 6000000, 5, 2), srtr_closed_form(0.1, 5, 2), 1e-7);
    EXPECT_EQ(srtr_finite_population(10, 9, 2, 3), 0.0);
    EXPECT_THROW(srtr_finite_population(10, 11, 2, 3), Error);
}

TEST(Srd, PaperAndDerivedValues)
{
    EXPECT_NEAR(srd_closed_form(RouteParams{0, 0.1, 2, 3}), 0.029701, 1e-9);
    EXPECT_NEAR(srd_closed_form(RouteParams{0, 0.1, 3, 3}), 0.029701, 1e-9);
    EXPECT_NEAR(srd_closed_form(RouteParams{0, 0.1, 4, 3}), 0.005689176859, 1e-12);
    EXPECT_NEAR(srd_closed_form(RouteParams{0, 0.3, 3, 3}), 0.246429, 1e-9);
    EXPECT_NEAR(srd_closed_form(RouteParams{0, 0.3, 4, 3}), 0.131476272579, 1e-12);
    EXPECT_NEAR(srd_closed_form(RouteParams{0, 0.3, 5, 3}), 0.094842882935163, 1e-12);
    EXPECT_DOUBLE_EQ(srd_closed_form(RouteParams{0, 1.0, 6, 2}), 1.0);
    EXPECT_DOUBLE_EQ(srd_closed_form(RouteParams{0, 0.0, 6, 2}), 0.0);
}

TEST(Srd, ExactAgreementWithEnumeration)
{
    for (int k = 1; k <= 19; ++k) {
        mpq_class f(k, 20);
        f.canonicalize();
        for (unsigned h = 1; h <= 12; ++h)
            for (unsigned r = 1; r <= 3; ++r) {
                ASSERT_EQ(srd_closed_form<mpq_class>(f, h, r), oracle::srd_by_enumeration(f, h, r))
                    << "f=" << k << "/20 h=" << h << " r=" << r;
            }
    }
    EXPECT_EQ(oracle::srd_by_enumeration(mpq_class(1, 2), 7, 2), mpq_class(3159, 16384));
}

TEST(Srd, AdjacencyRecurrenceBounds)
{
    for (int k = 1; k < 20; ++k) {
        double f = k / 20.0;
        double prev = 1.0;
        for (unsigned m = 0; m <= 15; ++m) {
            double a = no_adjacent_honest(f, m);
            EXPECT_LE(a, 1.0);
            EXPECT_GE(a, std::pow(f, m) - 1e-15);
            EXPECT_LE(a, prev + 1e-15);
            prev = a;
        }
    }
}

TEST(Params, Validation)
{
    EXPECT_THROW(srtr_closed_form(RouteParams{0.6, 0.6, 2, 2}), Error);
    EXPECT_THROW(srtr_closed_form(RouteParams{-0.1, 0, 2, 2}), Error);
    EXPECT_THROW(srd_closed_form(RouteParams{0, 0.1, 0, 2}), Error);
    EXPECT_THROW(srd_closed_form(RouteParams{0, 0.1, 2, 0}), Error);
}

TEST(Sweep, RowCountsAndOrder)
{
    auto fig4a = sweep({{0.1}, {0.0}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {1, 2, 3}});
    EXPECT_EQ(fig4a.size(), 30u);
    EXPECT_EQ(fig4a[0].params.r, 1u);
    EXPECT_EQ(fig4a[1].params.r, 2u);
    EXPECT_EQ(fig4a[3].params.h, 2u);

    auto fig6b = sweep({{0.0}, {0.1, 0.2, 0.3}, {2, 3, 4, 5}, {3}});
    EXPECT_EQ(fig6b.size(), 12u);

    EXPECT_TRUE(sweep({{}, {0.0}, {1}, {1}}).empty());
    EXPECT_EQ(sweep({{0.6}, {0.6}, {1}, {1}}).size(), 0u);
}

TEST(Sweep, Csv)
{
    EXPECT_EQ(to_csv({}, false), "d,f,h,r,srtr_cf,srd_cf\n");
    EXPECT_EQ(to_csv({}, true), "d,f,h,r,srtr_cf,srd_cf,srtr_mc,srtr_se,srd_mc,srd_se\n");

    auto rows = sweep({{0.1}, {0.3}, {2}, {3}});
    std::string csv = to_csv(rows, false);
    EXPECT_EQ(csv, "d,f,h,r,srtr_cf,srd_cf\n0.1,0.3,2,3,0.993141,0.246429\n");

    rows[0].srtr_mc = Estimate::from_counts(99314, 100000);
    csv = to_csv(rows, true);
    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    EXPECT_EQ(line, "0.1,0.3,2,3,0.993141,0.246429,0.99314,0.000261016,,");
}

TEST(Estimate, StandardError)
{
    auto e = Estimate::from_counts(50, 100);
    EXPECT_DOUBLE_EQ(e.rate, 0.5);
    EXPECT_DOUBLE_EQ(e.se, 0.05);
    EXPECT_DOUBLE_EQ(e.z_score(0.6), 2.0);
    EXPECT_EQ(Estimate::from_counts(10, 10).z_score(1.0), 0.0);
}

TEST(Mixing, BlocksTimesRate)
{
    EXPECT_EQ(mixing_stats(1, kTransactionsPerBlock), 945u);
    EXPECT_EQ(mixing_stats(2, kTransactionsPerBlock), 1890u);
    EXPECT_EQ(mixing_stats(5, kTransactionsPerBlock), 4725u);
    for (std::uint64_t bad : {0ull, 6ull, 100ull}) {
        try {
            mixing_stats(bad, 945);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::DelayOutOfRange);
        }
    }
}
