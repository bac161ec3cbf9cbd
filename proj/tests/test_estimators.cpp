#include <catch_amalgamated.hpp>

#include <random>

#include "mdivw/estimators.hpp"
#include "test_util.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

mdivw::SelectionMask all_of(const mdivw::SummaryDataset& ds) {
    return mdivw::SelectionMask::all(ds.size());
}

}  // namespace

TEST_CASE("ivw on the worked example and a single SNP") {
    oracle::Data d = test_util::worked_example();
    mdivw::SummaryDataset ds = test_util::from_oracle(d);
    mdivw::Estimate e = mdivw::ivw(ds, all_of(ds));
    CHECK_THAT(e.beta, WithinRel(0.5, 1e-12));

    mdivw::SummaryDataset single = test_util::make_dataset({2.0}, {0.1}, {1.0}, {0.1});
    CHECK_THAT(mdivw::ivw(single, all_of(single)).beta, WithinRel(0.5, 1e-12));
}

TEST_CASE("divw on the worked example") {
    oracle::Data d = test_util::worked_example();
    mdivw::SummaryDataset ds = test_util::from_oracle(d);
    mdivw::Estimate e = mdivw::divw(ds, all_of(ds));
    CHECK_THAT(e.beta, WithinRel(0.07 / 0.1325, 1e-12));
    CHECK_THAT(e.beta, WithinAbs(0.52830, 1e-5));
    CHECK_THAT(e.se, WithinRel(std::sqrt(oracle::variance_lead(d, e.beta)), 1e-12));
}

TEST_CASE("mdivw factor form on the worked example") {
    oracle::Data d = test_util::worked_example();
    mdivw::SummaryDataset ds = test_util::from_oracle(d);
    mdivw::Estimate e = mdivw::mdivw(ds, all_of(ds));
    double factor = 1.0 - 13.625 / (13.25 * 13.25) + 3.5 / (7.0 * 13.25);
    CHECK_THAT(factor, WithinAbs(0.96013, 1e-5));
    CHECK_THAT(e.beta, WithinRel(factor * 7.0 / 13.25, 1e-12));
    CHECK_THAT(e.beta, WithinAbs(0.50724, 1e-5));
}

TEST_CASE("factor form equals subtraction form") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        oracle::Data d = test_util::random_data(rng, 2 + trial % 30);
        if (oracle::theta2(d) <= 0.0 || oracle::theta1(d) == 0.0) continue;
        mdivw::SummaryDataset ds = test_util::from_oracle(d);
        mdivw::Estimate e = mdivw::mdivw(ds, all_of(ds));
        CHECK_THAT(e.beta, WithinRel(oracle::beta_mdivw_subtraction(d), 1e-12));
    }
}

TEST_CASE("all estimators collapse when se_gamma = 0") {
    mdivw::SummaryDataset ds = test_util::make_dataset({0.2, 0.1, 0.3}, {0.0, 0.0, 0.0},
                                                       {0.11, 0.04, 0.16}, {0.1, 0.2, 0.15});
    mdivw::SelectionMask mask = all_of(ds);
    double b_ivw = mdivw::ivw(ds, mask).beta;
    double b_divw = mdivw::divw(ds, mask).beta;
    double b_mdivw = mdivw::mdivw(ds, mask).beta;
    CHECK(b_ivw == b_divw);
    CHECK(b_divw == b_mdivw);
}

TEST_CASE("scale equivariance in the outcome units") {
    std::mt19937_64 rng(555);
    oracle::Data d = test_util::random_data(rng, 40);
    mdivw::SummaryDataset ds = test_util::from_oracle(d);
    mdivw::Estimate base_d = mdivw::divw(ds, all_of(ds));
    mdivw::Estimate base_m = mdivw::mdivw(ds, all_of(ds));
    for (double c : {0.5, 2.0, 10.0}) {
        mdivw::SummaryDataset scaled = ds;
        for (mdivw::SnpRecord& r : scaled.records) {
            r.Gamma_hat *= c;
            r.se_Gamma *= c;
        }
        mdivw::Estimate ed = mdivw::divw(scaled, all_of(scaled));
        mdivw::Estimate em = mdivw::mdivw(scaled, all_of(scaled));
        CHECK_THAT(ed.beta, WithinRel(c * base_d.beta, 1e-10));
        CHECK_THAT(ed.se, WithinRel(c * base_d.se, 1e-10));
        CHECK_THAT(em.beta, WithinRel(c * base_m.beta, 1e-10));
        CHECK_THAT(em.se, WithinRel(c * base_m.se, 1e-10));
    }
}

TEST_CASE("estimators match the oracle on random data") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 100; ++trial) {
        oracle::Data d = test_util::random_data(rng, 3 + trial % 20);
        if (oracle::theta2(d) <= 0.0 || oracle::theta1(d) == 0.0) continue;
        mdivw::SummaryDataset ds = test_util::from_oracle(d);
        mdivw::SelectionMask mask = all_of(ds);
        CHECK_THAT(mdivw::ivw(ds, mask).beta, WithinRel(oracle::beta_ivw(d), 1e-12));
        CHECK_THAT(mdivw::divw(ds, mask).beta, WithinRel(oracle::beta_divw(d), 1e-12));
        mdivw::Estimate e = mdivw::mdivw(ds, mask);
        CHECK_THAT(e.beta, WithinRel(oracle::beta_mdivw(d), 1e-12));
        CHECK_THAT(e.se * e.se, WithinRel(oracle::variance_mdivw(d, e.beta), 1e-12));
    }
}

TEST_CASE("tau_squared hand examples") {
    SECTION("residual exactly absorbed") {
        // beta = 0.5, gamma_hat = 1, so r^2 must equal sG^2 + 0.25 sg^2
        double r = std::sqrt(1.0 + 0.25 * 0.04);
        mdivw::SummaryDataset ds = test_util::make_dataset({1.0}, {0.2}, {0.5 + r}, {1.0});
        CHECK_THAT(mdivw::tau_squared(ds, mdivw::SelectionMask::all(1), 0.5),
                   WithinAbs(0.0, 1e-12));
    }
    SECTION("zero residual minus unit variance") {
        mdivw::SummaryDataset ds = test_util::make_dataset({1.0}, {0.0}, {0.5}, {1.0});
        CHECK_THAT(mdivw::tau_squared(ds, mdivw::SelectionMask::all(1), 0.5),
                   WithinRel(-1.0, 1e-12));
    }
    SECTION("weighted mean of excess squared residuals") {
        mdivw::SummaryDataset ds = test_util::make_dataset({0.3, 0.7}, {1e-300, 1e-300},
                                                           {3.0, 1.0}, {1.0, 1.0});
        CHECK_THAT(mdivw::tau_squared(ds, mdivw::SelectionMask::all(2), 0.0),
                   WithinRel(4.0, 1e-12));
    }
}

TEST_CASE("pleiotropy-adjusted mdivw reduces exactly at tau2 = 0") {
    // A dataset engineered so the raw tau2 estimate is negative: the clamp
    // makes the adjusted variance identical to the unadjusted one.
    mdivw::SummaryDataset ds = test_util::make_dataset(
        {0.2, 0.1, 0.3, 0.25}, {0.01, 0.01, 0.01, 0.01},
        {0.1, 0.05, 0.15, 0.125}, {0.5, 0.5, 0.5, 0.5});
    mdivw::SelectionMask mask = mdivw::SelectionMask::all(4);
    mdivw::Estimate plain = mdivw::mdivw(ds, mask, false);
    mdivw::Estimate adj = mdivw::mdivw(ds, mask, true);
    REQUIRE(adj.tau2.has_value());
    CHECK(*adj.tau2 < 0.0);
    CHECK(adj.beta == plain.beta);
    CHECK(adj.se == plain.se);
    CHECK_FALSE(plain.tau2.has_value());
}

TEST_CASE("pleiotropy-adjusted variance matches the oracle") {
    std::mt19937_64 rng(777);
    std::normal_distribution<double> alpha(0.0, 0.05);
    for (int trial = 0; trial < 50; ++trial) {
        oracle::Data d = test_util::random_data(rng, 20);
        for (double& G : d.G) G += alpha(rng);
        if (oracle::theta2(d) <= 0.0 || oracle::theta1(d) == 0.0) continue;
        mdivw::SummaryDataset ds = test_util::from_oracle(d);
        mdivw::Estimate e = mdivw::mdivw(ds, mdivw::SelectionMask::all(20), true);
        REQUIRE(e.tau2.has_value());
        CHECK_THAT(*e.tau2, WithinRel(oracle::tau_squared(d, e.beta), 1e-12));
        double tau2 = std::max(0.0, *e.tau2);
        CHECK_THAT(e.se * e.se, WithinRel(oracle::variance_mdivw(d, e.beta, tau2), 1e-12));
    }
}

TEST_CASE("degenerate inputs raise typed errors") {
    // gamma_hat too small: theta2 < 0
    mdivw::SummaryDataset weak = test_util::make_dataset({0.001, -0.001}, {0.1, 0.1},
                                                         {0.0, 0.0}, {0.1, 0.1});
    mdivw::SelectionMask mask = mdivw::SelectionMask::all(2);
    CHECK_THROWS_AS(mdivw::divw(weak, mask), mdivw::weak_instrument_error);
    CHECK_THROWS_AS(mdivw::mdivw(weak, mask), mdivw::weak_instrument_error);
    try {
        mdivw::divw(weak, mask);
    } catch (const mdivw::weak_instrument_error& e) {
        CHECK(e.theta2 < 0.0);
    }

    // theta1 = 0 with theta2 > 0
    mdivw::SummaryDataset zero_num = test_util::make_dataset({1.0, -1.0}, {0.1, 0.1},
                                                             {0.5, 0.5}, {0.1, 0.1});
    CHECK_THROWS_AS(mdivw::mdivw(zero_num, mask), mdivw::zero_numerator_error);
}
