#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "catqkd/experiment.h"

using namespace catqkd;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("catqkd_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST(ExperimentValidate, Examples) {
    ExperimentConfig c;
    c.seed = 1;
    EXPECT_TRUE(validate(c).empty());

    c.scenario.l = 2;
    EXPECT_FALSE(validate(c).empty());
    c.scenario.protocol = ProtocolVariant::Modified;
    EXPECT_TRUE(validate(c).empty());

    c = ExperimentConfig{};
    c.seed = 1;
    c.mode = Mode::Attack;
    c.scenario.strategy = Strategy::InterceptResend;
    c.scenario.lambda = 1.5;
    EXPECT_FALSE(validate(c).empty());

    c = ExperimentConfig{};
    EXPECT_FALSE(validate(c).empty()) << "sampling mode without a seed";
    c.mode = Mode::Table3;
    EXPECT_TRUE(validate(c).empty());

    c = ExperimentConfig{};
    c.seed = 1;
    c.n_rounds = 5;
    c.scenario.t = 20;
    EXPECT_FALSE(validate(c).empty());
    c.n_sessions = 0;
    EXPECT_GE(validate(c).size(), 2u);
}

TEST(ExperimentConfigJson, OverlayAndRoundTrip) {
    ExperimentConfig c;
    apply_config_json(c, R"({"mode": "attack", "protocol": "modified", "strategy": "entangled_resend",
                             "k": 5, "l": 4, "r_a": 1, "r_b": 2, "lambda": 0.5, "t": 30, "seed": 7})");
    EXPECT_EQ(c.mode, Mode::Attack);
    EXPECT_EQ(c.scenario.protocol, ProtocolVariant::Modified);
    EXPECT_EQ(c.scenario.strategy, Strategy::EntangledResend);
    EXPECT_EQ(c.scenario.k, 5u);
    EXPECT_EQ(c.scenario.r_b, 2u);
    EXPECT_DOUBLE_EQ(c.scenario.lambda, 0.5);
    ASSERT_TRUE(c.seed.has_value());
    EXPECT_EQ(*c.seed, 7u);

    ExperimentConfig d;
    apply_config_json(d, config_to_json(c));
    EXPECT_EQ(config_to_json(d), config_to_json(c));

    EXPECT_THROW(apply_config_json(c, R"({"colour": 1})"), std::invalid_argument);
    EXPECT_THROW(apply_config_json(c, R"({"k": -1})"), std::invalid_argument);
    EXPECT_THROW(apply_config_json(c, R"({"protocol": "third"})"), std::invalid_argument);
    EXPECT_THROW(apply_config_json(c, "{not json"), std::invalid_argument);
}

TEST(ExperimentRun, ExitCodes) {
    std::ostringstream out, err;
    ExperimentConfig c;
    EXPECT_EQ(run(c, out, err), ExitStatus::InvalidConfig);
    EXPECT_NE(err.str().find("seed"), std::string::npos) << err.str();

    c.mode = Mode::Table3;
    EXPECT_EQ(run(c, out, err), ExitStatus::Ok);
    EXPECT_NE(out.str().find("21/21"), std::string::npos) << out.str();

    c.mode = Mode::Thresholds;
    EXPECT_EQ(run(c, out, err), ExitStatus::Ok);
}

TEST(ExperimentRun, HonestWritesArtifacts) {
    const auto dir = scratch_dir("honest");
    ExperimentConfig c;
    c.seed = 3;
    c.n_sessions = 5;
    c.n_rounds = 200;
    c.out = dir.string();
    c.write_transcripts = true;
    std::ostringstream out, err;
    ASSERT_EQ(run(c, out, err), ExitStatus::Ok) << err.str();
    EXPECT_TRUE(std::filesystem::exists(dir / "honest.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "summary_honest.txt"));
    const std::string jsonl = slurp(dir / "transcripts.jsonl");
    EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 200);
    EXPECT_NE(out.str().find("PASS"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(ExperimentRun, AttackCsvIsReproducible) {
    const auto a = scratch_dir("attack_a");
    const auto b = scratch_dir("attack_b");
    ExperimentConfig c;
    c.mode = Mode::Attack;
    c.scenario = ScenarioParams{6, 6, 3, 1, 1.0, 20, ProtocolVariant::Original, Strategy::InterceptResend, 0};
    c.n_sessions = 500;
    c.n_rounds = 0;
    c.seed = 11;
    std::ostringstream out, err;
    c.out = a.string();
    ASSERT_EQ(run(c, out, err), ExitStatus::Ok) << err.str();
    c.out = b.string();
    c.workers = 2;
    ASSERT_EQ(run(c, out, err), ExitStatus::Ok) << err.str();
    const std::string first = slurp(a / "attack.csv");
    EXPECT_FALSE(first.empty());
    EXPECT_EQ(first, slurp(b / "attack.csv"));
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}
