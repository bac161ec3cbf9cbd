#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mdivw/summary_data.hpp"
#include "test_util.hpp"

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) {
        path = (std::filesystem::temp_directory_path() / name).string();
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load joins on snp_id and reports drops") {
    TempFile exposure("md_exp1.csv",
                      "snp_id,beta,se\n"
                      "a,0.02,0.005\n"
                      "b,0.03,0.004\n"
                      "c,0.01,0.006\n");
    TempFile outcome("md_out1.csv",
                     "snp_id,beta,se\n"
                     "b,0.01,0.004\n"
                     "c,0.02,0.003\n"
                     "d,0.05,0.002\n");
    mdivw::LoadSummary summary;
    mdivw::SummaryDataset ds = mdivw::load_dataset(exposure.path, outcome.path, std::nullopt,
                                                   mdivw::ColumnSchema{}, &summary);
    REQUIRE(ds.size() == 2);
    CHECK(ds.records[0].snp_id == "b");
    CHECK(ds.records[1].snp_id == "c");
    CHECK(ds.records[0].gamma_hat == 0.03);
    CHECK(ds.records[0].Gamma_hat == 0.01);
    REQUIRE(summary.dropped.size() == 2);
    CHECK(summary.n_joined == 2);
    bool saw_a = false, saw_d = false;
    for (const auto& d : summary.dropped) {
        if (d.snp_id == "a") saw_a = true;
        if (d.snp_id == "d") saw_d = true;
        CHECK_FALSE(d.reason.empty());
    }
    CHECK(saw_a);
    CHECK(saw_d);
}

TEST_CASE("load maps fields per row") {
    TempFile exposure("md_exp2.csv", "snp_id,beta,se\nrs1,0.02,0.005\n");
    TempFile outcome("md_out2.csv", "snp_id,beta,se\nrs1,0.01,0.004\n");
    mdivw::SummaryDataset ds =
        mdivw::load_dataset(exposure.path, outcome.path, std::nullopt, mdivw::ColumnSchema{});
    REQUIRE(ds.size() == 1);
    CHECK(ds.records[0].gamma_hat == 0.02);
    CHECK(ds.records[0].se_gamma == 0.005);
    CHECK(ds.records[0].Gamma_hat == 0.01);
    CHECK(ds.records[0].se_Gamma == 0.004);
    CHECK_FALSE(ds.has_selection);
}

TEST_CASE("negative se is a parse error naming the SNP and column") {
    TempFile exposure("md_exp3.csv", "snp_id,beta,se\nrs7,0.02,0.005\n");
    TempFile outcome("md_out3.csv", "snp_id,beta,se\nrs7,0.01,-0.01\n");
    try {
        mdivw::load_dataset(exposure.path, outcome.path, std::nullopt, mdivw::ColumnSchema{});
        FAIL("expected parse_error");
    } catch (const mdivw::parse_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("rs7") != std::string::npos);
        CHECK(msg.find("se") != std::string::npos);
    }
}

TEST_CASE("non-numeric cell is a parse error") {
    TempFile exposure("md_exp4.csv", "snp_id,beta,se\nrs1,abc,0.005\n");
    TempFile outcome("md_out4.csv", "snp_id,beta,se\nrs1,0.01,0.004\n");
    CHECK_THROWS_AS(
        mdivw::load_dataset(exposure.path, outcome.path, std::nullopt, mdivw::ColumnSchema{}),
        mdivw::parse_error);
}

TEST_CASE("duplicate snp_id in one file is rejected") {
    TempFile exposure("md_exp5.csv", "snp_id,beta,se\nrs1,0.02,0.005\nrs1,0.03,0.004\n");
    TempFile outcome("md_out5.csv", "snp_id,beta,se\nrs1,0.01,0.004\n");
    CHECK_THROWS_AS(
        mdivw::load_dataset(exposure.path, outcome.path, std::nullopt, mdivw::ColumnSchema{}),
        mdivw::parse_error);
}

TEST_CASE("schema remaps column names; missing column is a schema error") {
    TempFile exposure("md_exp6.tsv", "rsid\tb\tstderr\nrs1\t0.02\t0.005\n");
    TempFile outcome("md_out6.tsv", "rsid\tb\tstderr\nrs1\t0.01\t0.004\n");
    mdivw::ColumnSchema schema{"rsid", "b", "stderr"};
    mdivw::SummaryDataset ds =
        mdivw::load_dataset(exposure.path, outcome.path, std::nullopt, schema);
    CHECK(ds.records[0].gamma_hat == 0.02);
    CHECK_THROWS_AS(
        mdivw::load_dataset(exposure.path, outcome.path, std::nullopt, mdivw::ColumnSchema{}),
        mdivw::schema_error);
}

TEST_CASE("empty join throws") {
    TempFile exposure("md_exp7.csv", "snp_id,beta,se\na,0.02,0.005\n");
    TempFile outcome("md_out7.csv", "snp_id,beta,se\nb,0.01,0.004\n");
    CHECK_THROWS_AS(
        mdivw::load_dataset(exposure.path, outcome.path, std::nullopt, mdivw::ColumnSchema{}),
        mdivw::empty_join_error);
}

TEST_CASE("selection file populates gamma_star") {
    TempFile exposure("md_exp8.csv", "snp_id,beta,se\nrs1,0.02,0.005\nrs2,0.04,0.005\n");
    TempFile outcome("md_out8.csv", "snp_id,beta,se\nrs1,0.01,0.004\nrs2,0.02,0.004\n");
    TempFile selection("md_sel8.csv", "snp_id,beta,se\nrs1,0.025,0.007\nrs2,0.035,0.007\n");
    mdivw::SummaryDataset ds = mdivw::load_dataset(exposure.path, outcome.path, selection.path,
                                                   mdivw::ColumnSchema{});
    REQUIRE(ds.has_selection);
    REQUIRE(ds.records[0].gamma_star.has_value());
    CHECK(*ds.records[0].gamma_star == 0.025);
    CHECK(*ds.records[1].se_gamma_star == 0.007);
}

TEST_CASE("join order is exposure order regardless of outcome order") {
    TempFile exposure("md_exp9.csv", "snp_id,beta,se\nx,0.1,0.01\ny,0.2,0.01\nz,0.3,0.01\n");
    TempFile outcome_a("md_out9a.csv", "snp_id,beta,se\nx,0.1,0.01\ny,0.2,0.01\nz,0.3,0.01\n");
    TempFile outcome_b("md_out9b.csv", "snp_id,beta,se\nz,0.3,0.01\nx,0.1,0.01\ny,0.2,0.01\n");
    mdivw::SummaryDataset a =
        mdivw::load_dataset(exposure.path, outcome_a.path, std::nullopt, mdivw::ColumnSchema{});
    mdivw::SummaryDataset b =
        mdivw::load_dataset(exposure.path, outcome_b.path, std::nullopt, mdivw::ColumnSchema{});
    REQUIRE(a.size() == b.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(a.records[j].snp_id == b.records[j].snp_id);
        CHECK(a.records[j].Gamma_hat == b.records[j].Gamma_hat);
    }
}

TEST_CASE("validate flags violations and variance-ratio warnings") {
    mdivw::SummaryDataset ds = test_util::make_dataset({0.1, 0.2}, {0.01, 1000.0},
                                                       {0.05, 0.1}, {0.01, 0.01});
    ds.records[0].Gamma_hat = std::nan("");
    mdivw::ValidationReport report = mdivw::validate(ds);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations.size() == 1);
    CHECK(report.violations[0].snp_id == "rs1");
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].snp_id == "rs2");

    mdivw::SummaryDataset good = test_util::make_dataset({0.1}, {0.01}, {0.05}, {0.01});
    CHECK(mdivw::validate(good).ok());
}

TEST_CASE("canonical round-trip is bit exact") {
    std::mt19937_64 rng(42);
    oracle::Data d = test_util::random_data(rng, 50);
    mdivw::SummaryDataset ds = test_util::from_oracle(d);
    ds.records[0].gamma_hat = 0.1 + 1e-17;
    std::string path = (std::filesystem::temp_directory_path() / "md_roundtrip.tsv").string();
    mdivw::write_dataset(ds, path);
    mdivw::SummaryDataset back = mdivw::read_dataset(path);
    std::remove(path.c_str());
    REQUIRE(back.size() == ds.size());
    for (std::size_t j = 0; j < ds.size(); ++j) {
        CHECK(back.records[j].snp_id == ds.records[j].snp_id);
        CHECK(back.records[j].gamma_hat == ds.records[j].gamma_hat);
        CHECK(back.records[j].se_gamma == ds.records[j].se_gamma);
        CHECK(back.records[j].Gamma_hat == ds.records[j].Gamma_hat);
        CHECK(back.records[j].se_Gamma == ds.records[j].se_Gamma);
    }
}
