// Runs the gexlab executable on small configurations.
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("gexlab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p.string();
    }

    std::string read(const std::string& name) {
        std::ifstream in(dir_ / name);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    static Outcome run(const std::string& args) {
        Outcome r;
        const std::string cmd = std::string(GEXLAB_CLI) + " " + args + " 2>&1";
        FILE* pipe = popen(cmd.c_str(), "r");
        if (!pipe) return r;
        char buf[4096];
        std::size_t n;
        while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
        const int status = pclose(pipe);
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        return r;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, PriceEntropic) {
    const std::string cfg = write("c.json", R"({"driver": "entropic:1", "grid": {"steps": 2048},
        "claim": {"payoff": "bt"}, "reference": -0.5})");
    const Outcome r = run("price --config " + cfg + " --out " + path("r.csv"));
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("u_0 (backward scheme) = -0.5"), std::string::npos) << r.out;
    const std::string csv = read("r.csv");
    EXPECT_EQ(csv.rfind("check,fixture,value,reference,tolerance,pass\nenvironment,", 0), 0u) << csv;
    EXPECT_NE(csv.find("duality_gap,"), std::string::npos);
}

TEST_F(Cli, PriceZeroDriverIsMean) {
    const std::string cfg = write("c.json", R"({"driver": "zero", "grid": {"steps": 4},
        "claim": {"payoff": "square"}, "reference": 1.0, "tolerances": {"converge": 1e-12}})");
    const Outcome r = run("price --config " + cfg);
    EXPECT_EQ(r.code, 0) << r.out;
}

TEST_F(Cli, PriceAbs) {
    const std::string cfg = write("c.json", R"({"driver": "abs:0.5", "grid": {"steps": 512},
        "claim": {"payoff": "bt"}, "reference": -0.5})");
    EXPECT_EQ(run("price --config " + cfg).code, 0);
}

TEST_F(Cli, PenaltyDeskScale) {
    const std::string cfg = write("c.json", R"({"driver": "entropic:1",
        "grid": {"steps": 3, "topology": "full_binary"},
        "control": {"type": "constant", "q": 0.4}, "reference": 0.08})");
    const Outcome r = run("penalty --config " + cfg + " --out " + path("r.csv"));
    EXPECT_EQ(r.code, 0) << r.out;
    const std::string csv = read("r.csv");
    EXPECT_NE(csv.find("primal_oracle,"), std::string::npos);
    EXPECT_NE(csv.find("cocycle_identity,"), std::string::npos);
    EXPECT_NE(csv.find("doob_identity,"), std::string::npos);
}

TEST_F(Cli, PenaltyZeroControl) {
    const std::string cfg = write("c.json", R"({"driver": "abs:1", "grid": {"steps": 16},
        "control": {"type": "constant", "q": 0}, "reference": 0})");
    const Outcome r = run("penalty --config " + cfg);
    EXPECT_EQ(r.code, 0) << r.out;
}

TEST_F(Cli, InfiniteSerialisation) {
    const std::string cfg = write("c.json", R"({"driver": "abs:1", "grid": {"steps": 3, "topology": "full_binary"},
        "control": {"type": "constant", "q": 1.5}})");
    ASSERT_EQ(run("penalty --config " + cfg + " --out " + path("r.csv")).code, 0);
    EXPECT_NE(read("r.csv").find("penalty_formula,abs:1 q=1.5 N=3 T=1 full_binary,inf,"), std::string::npos);
    ASSERT_EQ(run("penalty --config " + cfg + " --out " + path("r.json")).code, 0);
    EXPECT_NE(read("r.json").find("\"value\": \"inf\""), std::string::npos);
}

TEST_F(Cli, Converge) {
    const std::string cfg = write("c.json", R"({"driver": "entropic:1", "claim": {"payoff": "bt"},
        "steps_list": [64, 128, 256, 512, 1024, 2048], "reference": -0.5})");
    const Outcome r = run("converge --config " + cfg + " --out " + path("r.csv"));
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(read("r.csv").find("converge_monotone,"), std::string::npos);
    const std::string zero = write("z.json", R"({"driver": "zero", "claim": {"payoff": "call:0"},
        "steps_list": [4, 8], "reference": 0.1, "tolerances": {"converge": 1e-3}})");
    EXPECT_EQ(run("converge --config " + zero).code, 1);
}

TEST_F(Cli, PropsDefaultSetPasses) {
    const std::string cfg = write("c.json", R"({"driver": "entropic:1,2", "trials": 200,
        "control": {"type": "feedback", "levels": [-1, 1], "values": [-0.5, 0.5]}})");
    const Outcome r = run("props --config " + cfg);
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("OVERALL PASS"), std::string::npos);
}

TEST_F(Cli, PropsNonconvexFails) {
    const std::string cfg = write("c.json", R"({"driver": "nonconvex:1,2", "suites": ["axioms"], "trials": 100})");
    const Outcome r = run("props --config " + cfg);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("FAIL concavity"), std::string::npos) << r.out;
}

TEST_F(Cli, ByteIdenticalReports) {
    const std::string cfg = write("c.json", R"({"driver": "abs:0.5", "trials": 100,
        "suites": ["axioms", "cocycle", "pasting", "supermartingale"]})");
    ASSERT_EQ(run("props --config " + cfg + " --out " + path("a.csv")).code, 0);
    ASSERT_EQ(run("props --config " + cfg + " --threads 3 --out " + path("b.csv")).code, 0);
    EXPECT_EQ(read("a.csv"), read("b.csv"));
}

TEST_F(Cli, SeedChangesValuesNotVerdicts) {
    const std::string cfg = write("c.json", R"({"driver": "entropic:1,2", "trials": 100, "suites": ["axioms"]})");
    ASSERT_EQ(run("props --config " + cfg + " --seed 1 --out " + path("a.csv")).code, 0);
    ASSERT_EQ(run("props --config " + cfg + " --seed 2 --out " + path("b.csv")).code, 0);
    const std::string a = read("a.csv"), b = read("b.csv");
    EXPECT_NE(a, b);
    EXPECT_EQ(a.find("false"), std::string::npos);
    EXPECT_EQ(b.find("false"), std::string::npos);
}

TEST_F(Cli, Conjugate) {
    const std::string cfg = write("c.json", R"({"driver": "abs:0.5", "conjugate": {"q": [-1, -0.5, 0, 0.25, 0.75]}})");
    const Outcome r = run("conjugate --config " + cfg + " --out " + path("r.csv"));
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(read("r.csv").find("conjugate_value,abs:0.5 q=0.75,inf,inf,"), std::string::npos);
}

TEST_F(Cli, ConfigErrors) {
    const std::string unknown = write("u.json", "{\"driver\": \"zero\",\n \"grid\": {\"stepz\": 3}}");
    Outcome r = run("price --config " + unknown);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("grid.stepz"), std::string::npos) << r.out;

    const std::string syntax = write("s.json", "{\"driver\": \"zero\",\n\n \"grid\": {\"steps\": 3,}\n}");
    r = run("price --config " + syntax);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("line 3"), std::string::npos) << r.out;

    const std::string type = write("t.json", R"({"driver": "zero", "grid": {"steps": "many"}})");
    r = run("price --config " + type);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("grid.steps"), std::string::npos) << r.out;

    const std::string driver = write("d.json", R"({"driver": "cubic:1"})");
    EXPECT_EQ(run("price --config " + driver).code, 2);

    EXPECT_EQ(run("price --config " + path("missing.json")).code, 2);
    EXPECT_EQ(run("price").code, 2);
    EXPECT_EQ(run("frobnicate --config " + driver).code, 2);
    const std::string no_control = write("n.json", R"({"driver": "zero"})");
    EXPECT_EQ(run("penalty --config " + no_control).code, 2);
}

TEST_F(Cli, ComputationErrorsExitOne) {
    const std::string cfg = write("c.json", R"({"driver": "entropic:1,2", "grid": {"steps": 4},
        "claim": {"payoff": "linear:0,6"}})");
    const Outcome r = run("price --config " + cfg);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("domain error"), std::string::npos) << r.out;
}
