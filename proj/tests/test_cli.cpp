// Copyright 2026 The MDITE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
   protected:
    void SetUp() override {
        const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("mdite_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string &name, const std::string &text) const {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    static std::string slurp(const fs::path &p) {
        std::ifstream in(p);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    // Runs the CLI with stderr captured; returns the exit status.
    int run(const std::string &args) {
        const std::string cmd =
            std::string(MDITE_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
            (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        stderr_ = slurp(dir_ / "stderr.txt");
        stdout_ = slurp(dir_ / "stdout.txt");
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    fs::path dir_;
    std::string stderr_, stdout_;
};

const char *kSmallRun = R"([model]
kind = "tfim"
L = 4
h = 1.8

[protocol]
tau = 1.0
p = 0.66
n_d = 4

[sampler]
sweeps = 3000
equilibration = 300
chains = 2
seed = 11
)";

}  // namespace

TEST_F(Cli, RateOutOfRangeNamesLine) {
    const fs::path cfg = write("bad.toml", "[model]\nkind = \"tfim\"\nL = 4\nh = 1.0\n\n[protocol]\ntau = 1.0\np = 1.5\n");
    EXPECT_EQ(run("run --config " + cfg.string()), 2);
    EXPECT_NE(stderr_.find(":8:"), std::string::npos) << stderr_;
}

TEST_F(Cli, UnknownKeyRejected) {
    const fs::path cfg = write("bad.toml", std::string(kSmallRun) + "colour = 3\n");
    EXPECT_EQ(run("run --config " + cfg.string()), 2);
    EXPECT_NE(stderr_.find("colour"), std::string::npos) << stderr_;
}

TEST_F(Cli, SinglePointScanRejected) {
    const fs::path cfg = write("bad.toml", std::string(kSmallRun) + "\n[scan]\naxis = \"p\"\nvalues = [0.5]\n");
    EXPECT_EQ(run("scan --config " + cfg.string()), 2);
}

TEST_F(Cli, MissingConfigIsUsageError) { EXPECT_EQ(run("run --config " + (dir_ / "none.toml").string()), 2); }

TEST_F(Cli, SameSeedSameEstimates) {
    const fs::path cfg = write("run.toml", kSmallRun);
    ASSERT_EQ(run("run --config " + cfg.string() + " --threads 1 --out " + (dir_ / "a").string()), 0) << stderr_;
    ASSERT_EQ(run("run --config " + cfg.string() + " --threads 1 --out " + (dir_ / "b").string()), 0) << stderr_;
    const std::string a = slurp(dir_ / "a" / "estimates.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir_ / "b" / "estimates.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "a" / "manifest.json"));
    EXPECT_TRUE(fs::exists(dir_ / "a" / "samples-0.csv"));
}

TEST_F(Cli, ThreadCountDoesNotChangeResults) {
    const fs::path cfg = write("run.toml", kSmallRun);
    ASSERT_EQ(run("run --config " + cfg.string() + " --threads 1 --out " + (dir_ / "a").string()), 0) << stderr_;
    ASSERT_EQ(run("run --config " + cfg.string() + " --threads 2 --out " + (dir_ / "b").string()), 0) << stderr_;
    EXPECT_EQ(slurp(dir_ / "a" / "estimates.csv"), slurp(dir_ / "b" / "estimates.csv"));
}

TEST_F(Cli, SeedOverrideChangesStream) {
    const fs::path cfg = write("run.toml", kSmallRun);
    ASSERT_EQ(run("run --config " + cfg.string() + " --out " + (dir_ / "a").string()), 0);
    ASSERT_EQ(run("run --config " + cfg.string() + " --seed 12 --out " + (dir_ / "b").string()), 0);
    EXPECT_NE(slurp(dir_ / "a" / "estimates.csv"), slurp(dir_ / "b" / "estimates.csv"));
    const auto manifest = nlohmann::json::parse(slurp(dir_ / "b" / "manifest.json"));
    EXPECT_EQ(manifest.at("seed").get<int>(), 12);
}

TEST_F(Cli, EstimatesHeader) {
    const fs::path cfg = write("run.toml", kSmallRun);
    ASSERT_EQ(run("run --config " + cfg.string() + " --out " + (dir_ / "a").string()), 0);
    std::istringstream in(slurp(dir_ / "a" / "estimates.csv"));
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header,
              "model,L,tau,h_or_g,p,n_d,sweeps,m_abs,m_abs_err,m2,m2_err,m4,m4_err,R2,R2_err,tau_int,flag_frac,"
              "cluster_mean");
}

TEST_F(Cli, OracleSingleSpinFullMeasurement) {
    const fs::path cfg = write("o.toml",
                               "[model]\nkind = \"tfim\"\nlattice = \"explicit\"\nsites = 1\nbonds = []\nh = 1.0\n"
                               "[protocol]\ntau = 1.0\np = 1.0\nn_d = 3\n");
    ASSERT_EQ(run("oracle --config " + cfg.string() + " --out " + dir_.string() + " --quiet"), 0) << stderr_;
    const auto j = nlohmann::json::parse(slurp(dir_ / "oracle.json"));
    EXPECT_NEAR(j["observables"]["m2"].get<double>(), 1.0, 1e-12);
    EXPECT_NEAR(j["observables"]["R2"].get<double>(), 1.0, 1e-12);
}

TEST_F(Cli, OracleCapacity) {
    const fs::path cfg = write("o.toml", "[model]\nkind = \"tfim\"\nL = 16\nh = 1.0\n[protocol]\ntau = 1.0\np = 0.5\n");
    EXPECT_EQ(run("oracle --config " + cfg.string()), 2);
    EXPECT_NE(stderr_.find("capacity"), std::string::npos) << stderr_;
}

TEST_F(Cli, EmptyInputCsv) {
    write("scan.csv", "");
    const fs::path cfg = write("a.toml", std::string(kSmallRun) + "\n[analysis]\ninput = \"scan.csv\"\n");
    EXPECT_EQ(run("crossing --config " + cfg.string() + " --out " + dir_.string()), 2);
}

TEST_F(Cli, MissingColumnsListed) {
    write("scan.csv", "model,L,tau,h_or_g,p\ntfim,8,1,1.8,0.5\n");
    const fs::path cfg = write("a.toml", std::string(kSmallRun) + "\n[analysis]\ninput = \"scan.csv\"\n");
    EXPECT_EQ(run("crossing --config " + cfg.string() + " --out " + dir_.string()), 2);
    EXPECT_NE(stderr_.find("R2"), std::string::npos) << stderr_;
    EXPECT_NE(stderr_.find("m_abs"), std::string::npos) << stderr_;
}

TEST_F(Cli, CollapseRecoversPlantedExponents) {
    // m_abs = L^{-b} F((p - p_c) / p_c L^{1/nu}), R2 = G(same scaling variable)
    const double p_c = 0.667, nu = 1.08, b = 0.4;
    std::ostringstream csv;
    csv << "model,L,tau,h_or_g,p,n_d,sweeps,m_abs,m_abs_err,m2,m2_err,m4,m4_err,R2,R2_err,tau_int,flag_frac,"
           "cluster_mean\n";
    for (int L : {16, 24, 32, 48}) {
        for (int i = 0; i <= 10; ++i) {
            const double p = 0.58 + 0.02 * i;
            const double u = (p - p_c) / p_c * std::pow(L, 1.0 / nu);
            const double y = std::pow(L, -b) * (2.0 - 0.12 * u + 0.0015 * u * u * u);
            const double r2 = 1.8 + 0.15 * u;
            csv << "tfim," << L << ",1,1.8," << p << "," << 2 * L << ",100000," << y << "," << 1e-3 * y << ","
                << y * y << "," << 1e-3 << "," << y * y * y * y << "," << 1e-3 << "," << r2 << ",0.01,5,0.5,0.3\n";
        }
    }
    write("scan.csv", csv.str());
    const fs::path cfg = write("a.toml", std::string(kSmallRun) +
                                             "\n[analysis]\ninput = \"scan.csv\"\nbootstrap = 20\nx_c = 0.66\n");
    ASSERT_EQ(run("crossing --config " + cfg.string() + " --out " + dir_.string()), 0) << stderr_;
    EXPECT_TRUE(fs::exists(dir_ / "crossings.csv"));
    ASSERT_EQ(run("collapse --config " + cfg.string() + " --out " + dir_.string()), 0) << stderr_;
    const auto j = nlohmann::json::parse(slurp(dir_ / "collapse.json"));
    EXPECT_NEAR(j.at("x_c").get<double>(), p_c, 0.05 * p_c);
    EXPECT_NEAR(j.at("nu").get<double>(), nu, 0.05 * nu);
    EXPECT_NEAR(j.at("beta_over_nu").get<double>(), b, 0.05 * b);
}
