#include <catch_amalgamated.hpp>

#include <random>

#include "mdivw/diagnostics.hpp"
#include "test_util.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("standardized residual hand example") {
    mdivw::SummaryDataset ds = test_util::make_dataset({1.0}, {1.0}, {1.0}, {1.0});
    mdivw::ResidualSet set =
        mdivw::standardized_residuals(ds, mdivw::SelectionMask::all(1), 0.5);
    REQUIRE(set.entries.size() == 1);
    CHECK_THAT(set.entries[0].residual, WithinAbs(0.5 / std::sqrt(1.25), 1e-12));
    CHECK_THAT(set.entries[0].residual, WithinAbs(0.44721, 1e-5));
}

TEST_CASE("exact fit gives all-zero residuals") {
    mdivw::SummaryDataset ds = test_util::make_dataset(
        {0.1, 0.2, 0.3}, {0.01, 0.01, 0.01}, {0.05, 0.1, 0.15}, {0.01, 0.01, 0.01});
    mdivw::ResidualSet set =
        mdivw::standardized_residuals(ds, mdivw::SelectionMask::all(3), 0.5);
    for (const mdivw::ResidualEntry& e : set.entries) CHECK(e.residual == 0.0);
}

TEST_CASE("residuals invariant to consistent rescaling") {
    std::mt19937_64 rng(8);
    oracle::Data d = test_util::random_data(rng, 20);
    mdivw::SummaryDataset ds = test_util::from_oracle(d);
    mdivw::ResidualSet base =
        mdivw::standardized_residuals(ds, mdivw::SelectionMask::all(20), 0.5);
    double c = 3.0;
    mdivw::SummaryDataset scaled = ds;
    for (mdivw::SnpRecord& r : scaled.records) {
        r.Gamma_hat *= c;
        r.se_Gamma *= c;
        r.gamma_hat *= c;
        r.se_gamma *= c;
    }
    mdivw::ResidualSet other =
        mdivw::standardized_residuals(scaled, mdivw::SelectionMask::all(20), 0.5);
    for (std::size_t j = 0; j < base.entries.size(); ++j) {
        CHECK_THAT(other.entries[j].residual, WithinRel(base.entries[j].residual, 1e-12));
    }
}

TEST_CASE("residuals match the oracle and are sorted") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        oracle::Data d = test_util::random_data(rng, 15);
        mdivw::SummaryDataset ds = test_util::from_oracle(d);
        mdivw::ResidualSet set =
            mdivw::standardized_residuals(ds, mdivw::SelectionMask::all(15), 0.4);
        std::vector<double> ref = oracle::residuals(d, 0.4);
        REQUIRE(set.entries.size() == ref.size());
        for (std::size_t j = 0; j < ref.size(); ++j) {
            CHECK_THAT(set.entries[j].residual, WithinRel(ref[j], 1e-12));
            if (j > 0) CHECK(set.entries[j].residual >= set.entries[j - 1].residual);
        }
    }
}

TEST_CASE("theoretical quantiles are symmetric plotting positions") {
    mdivw::SummaryDataset ds = test_util::make_dataset(
        {0.1, 0.2, 0.3, 0.4}, {0.01, 0.01, 0.01, 0.01},
        {0.08, 0.09, 0.14, 0.21}, {0.01, 0.01, 0.01, 0.01});
    mdivw::ResidualSet set =
        mdivw::standardized_residuals(ds, mdivw::SelectionMask::all(4), 0.5);
    REQUIRE(set.entries.size() == 4);
    CHECK_THAT(set.entries[0].theoretical_quantile,
               WithinAbs(-set.entries[3].theoretical_quantile, 1e-12));
    CHECK_THAT(set.entries[1].theoretical_quantile,
               WithinAbs(-set.entries[2].theoretical_quantile, 1e-12));
    CHECK(set.entries[0].theoretical_quantile < set.entries[1].theoretical_quantile);
}

TEST_CASE("residual normality sanity under a correct model") {
    std::size_t p = 1000;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> noise;
    std::vector<double> g(p), sg(p, 0.02), G(p), sG(p, 0.03);
    for (std::size_t j = 0; j < p; ++j) {
        double truth = 0.1 + 0.001 * static_cast<double>(j);
        g[j] = truth + 0.02 * noise(rng);
        G[j] = 0.5 * truth + 0.03 * noise(rng);
    }
    mdivw::SummaryDataset ds = test_util::make_dataset(g, sg, G, sG);
    mdivw::ResidualSet set =
        mdivw::standardized_residuals(ds, mdivw::SelectionMask::all(p), 0.5);
    double mean = 0.0, var = 0.0;
    for (const mdivw::ResidualEntry& e : set.entries) mean += e.residual;
    mean /= static_cast<double>(p);
    for (const mdivw::ResidualEntry& e : set.entries) {
        var += (e.residual - mean) * (e.residual - mean);
    }
    var /= static_cast<double>(p - 1);
    double root_p = std::sqrt(static_cast<double>(p));
    CHECK(std::abs(mean) < 4.0 / root_p);
    CHECK(std::abs(var - 1.0) < 6.0 / root_p);
}

TEST_CASE("normal_quantile round-trips with normal_cdf") {
    for (double p : {1e-6, 0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999, 1.0 - 1e-6}) {
        double x = mdivw::normal_quantile(p);
        CHECK_THAT(mdivw::normal_cdf(x), WithinAbs(p, 1e-12));
    }
    CHECK_THAT(mdivw::normal_quantile(0.975), WithinAbs(1.959964, 1e-6));
}
