#include "mirsel/serialize.hpp"

#include "test_util.hpp"
#include "toy_dataset.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace {

struct Run {
    int code = -1;
    std::string out;
};

/// Runs the CLI with `args`; stdout is captured, stderr discarded.
Run cli(const std::string& args) {
    const auto capture = testutil::temp_dir("cli_capture") / "stdout.txt";
    const std::string cmd = std::string(MIRSEL_CLI) + " " + args + " > " + capture.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(capture);
    std::stringstream s;
    s << in.rdbuf();
    r.out = s.str();
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(cli("").code == 2);
    CHECK(cli("frobnicate").code == 2);
    CHECK(cli("estimate --k").code == 2);
    CHECK(cli("run-method --dataset tecator").code == 2);  // --method is required
    const auto manifest = testutil::write_toy_dataset("cli_config");
    CHECK(cli("select --p 21 --dataset " + manifest.string()).code == 2);
    CHECK(cli("run-method --method 14 --dataset " + manifest.string()).code == 2);

    const auto cfg = testutil::temp_file("cli_bad_config.json", R"({"unknown_key": 1})");
    CHECK(cli("estimate --config " + cfg.string() + " --dataset " + manifest.string()).code == 2);
}

TEST_CASE("data errors exit with code 3") {
    const auto dir = testutil::temp_dir("cli_data");
    CHECK(cli("estimate --dataset missing --data-dir " + dir.string()).code == 3);
    const auto constant = testutil::write_toy_dataset("cli_constant", true);
    CHECK(cli("estimate --quiet --dataset " + constant.string() + " --out " + dir.string()).code == 3);
}

TEST_CASE("estimate output is byte-identical across runs and worker counts") {
    const auto manifest = testutil::write_toy_dataset("cli_estimate");
    const auto a = testutil::temp_dir("cli_estimate_a");
    const auto b = testutil::temp_dir("cli_estimate_b");
    REQUIRE(cli("estimate --quiet --workers 1 --dataset " + manifest.string() + " --out " + a.string()).code == 0);
    REQUIRE(cli("estimate --quiet --workers 3 --dataset " + manifest.string() + " --out " + b.string()).code == 0);
    const std::string first = slurp(a / "toy" / "mi-k6.csv");
    CHECK(first.rfind("rank,column,label,mi\n", 0) == 0);
    CHECK(first == slurp(b / "toy" / "mi-k6.csv"));
}

TEST_CASE("config file values are overridden by explicit flags") {
    const auto manifest = testutil::write_toy_dataset("cli_precedence");
    const auto out = testutil::temp_dir("cli_precedence_out");
    const auto cfg = testutil::temp_file("cli_precedence.json",
                                         R"({"k": 3, "dataset": ")" + manifest.string() + R"(", "out": ")" +
                                             out.string() + R"("})");
    REQUIRE(cli("estimate --quiet --config " + cfg.string()).code == 0);
    CHECK(std::filesystem::exists(out / "toy" / "mi-k3.csv"));
    REQUIRE(cli("estimate --quiet --config " + cfg.string() + " --k 5").code == 0);
    CHECK(std::filesystem::exists(out / "toy" / "mi-k5.csv"));
}

TEST_CASE("train then predict reproduces the saved model") {
    const auto manifest = testutil::write_toy_dataset("cli_train");
    const auto out = testutil::temp_dir("cli_train_out");
    const Run t = cli("train --quiet --method 13 --p 4 --dataset " + manifest.string() + " --out " + out.string());
    REQUIRE(t.code == 0);
    const auto model = out / "toy" / "method-13" / "seed-0" / "model.json";
    REQUIRE(std::filesystem::exists(model));
    CHECK(std::filesystem::exists(model.parent_path() / "grid.csv"));
    CHECK(std::filesystem::exists(model.parent_path() / "train.json"));

    const auto preds = out / "pred.csv";
    REQUIRE(cli("predict --model " + model.string() + " --input " + (manifest.parent_path() / "toy.csv").string() +
                " --out " + preds.string())
                .code == 0);

    const mirsel::ModelDocument doc = mirsel::load_model(model);
    const mirsel::Dataset data = mirsel::load_csv(manifest.parent_path() / "toy.csv", "t");
    const Eigen::VectorXd expect = doc.predict(data.x());
    const mirsel::CsvTable got = mirsel::read_csv_table(preds, mirsel::HeaderMode::Present);
    REQUIRE(got.names == std::vector<std::string>{"prediction", "t"});
    REQUIRE(got.values.rows() == 60);
    CHECK(got.values.col(0) == expect);
    CHECK(got.values.col(1) == data.y());
}

TEST_CASE("dry run on the Tecator manifest reports the exhaustive subset count") {
    const Run r = cli("run-method --method 12 --dry-run --dataset data/tecator.json");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("2^16 = 65536 subsets (65535 non-empty)") != std::string::npos);
    CHECK(r.out.find("172 training rows, 43 test rows, 102 variables") != std::string::npos);
}
