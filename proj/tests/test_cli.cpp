#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef HRGRAD_CLI_PATH
#error "HRGRAD_CLI_PATH must point at the command-line binary"
#endif

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
};

CmdResult run(const std::string& args) {
    const std::string cmd = std::string(HRGRAD_CLI_PATH) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buf{};
    CmdResult res;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) res.out.append(buf.data(), n);
    const int st = pclose(p);
    res.exit_code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return res;
}

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream f(path);
    f << text;
    return path;
}

} // namespace

TEST_CASE("aggregate emits the stable JSON schema") {
    const std::string path = write_temp(
        "cli_pair.json", R"({"dim":2,"tasks":2,"gradients":[[1.0,0.0],[0.0,1.0]]})");
    const CmdResult r = run("aggregate " + path);
    CHECK(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.contains("update"));
    CHECK(j.contains("s_c"));
    CHECK(j.contains("angles"));
    CHECK(j.contains("conflicts"));
    CHECK(j.contains("degenerate"));
    CHECK(j["degenerate"] == false);
    CHECK(j["update"].size() == 2);
    // Orthogonal pair: the equal-cosine factor is 1/sqrt(2).
    CHECK(std::abs(j["s_c"].get<double>() - 1.0 / std::sqrt(2.0)) < 1e-9);
}

TEST_CASE("aggregate rejects ragged rows with exit 2") {
    const std::string path = write_temp(
        "cli_ragged.json", R"({"dim":2,"tasks":2,"gradients":[[1.0,0.0],[1.0]]})");
    const CmdResult r = run("aggregate " + path);
    CHECK(r.exit_code == 2);
}

TEST_CASE("aggregate on an unreadable file exits 2") {
    const CmdResult r = run("aggregate /nonexistent/gradients.json");
    CHECK(r.exit_code == 2);
}

TEST_CASE("strict degeneracy exits 3") {
    const std::string path = write_temp(
        "cli_anti.json", R"({"dim":2,"tasks":2,"gradients":[[1.0,0.0],[-1.0,0.0]]})");
    const CmdResult strict = run("aggregate " + path + " --method config --strict");
    CHECK(strict.exit_code == 3);
    const CmdResult loose = run("aggregate " + path + " --method config");
    CHECK(loose.exit_code == 0);
    const auto j = nlohmann::json::parse(loose.out);
    CHECK(j["degenerate"] == true);
}

TEST_CASE("aggregate output is deterministic under a fixed seed") {
    const std::string path = write_temp(
        "cli_seeded.json",
        R"({"dim":3,"tasks":3,"gradients":[[1.0,0.2,0.0],[-0.5,0.8,0.1],[0.3,-0.9,0.4]]})");
    const CmdResult a = run("aggregate " + path + " --method pcgrad --seed 11");
    const CmdResult b = run("aggregate " + path + " --method pcgrad --seed 11");
    CHECK(a.out == b.out);
}

TEST_CASE("bench writes one csv per method and a summary") {
    const std::string out_dir =
        (std::filesystem::temp_directory_path() / "cli_bench_out").string();
    std::filesystem::remove_all(out_dir);
    const std::string cfg = write_temp("cli_bench.json", R"({
        "methods": ["hrgrad", "config", "ls"],
        "family": {"dim": 8, "tasks": 3, "eps": [1.0, 0.1, 0.01], "kind": "stiff", "seed": 3},
        "steps": 12,
        "mode": "direct",
        "out_dir": ")" + out_dir + R"(",
        "seed": 3
    })");
    const CmdResult r = run("bench --config " + cfg);
    CHECK(r.exit_code == 0);
    CHECK(std::filesystem::exists(out_dir + "/hrgrad.csv"));
    CHECK(std::filesystem::exists(out_dir + "/config.csv"));
    CHECK(std::filesystem::exists(out_dir + "/ls.csv"));
    CHECK(std::filesystem::exists(out_dir + "/summary.json"));
    std::ifstream csv(out_dir + "/hrgrad.csv");
    std::string header;
    std::getline(csv, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    CHECK(header ==
          "step,total_loss,grad_sum_norm,update_norm,s_c,conflicts,alpha_max,rho_min,kappa");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 12);
}

TEST_CASE("bench rejects unknown config keys") {
    const std::string cfg = write_temp("cli_badcfg.json", R"({"stepz": 10})");
    const CmdResult r = run("bench --config " + cfg);
    CHECK(r.exit_code == 2);
}

TEST_CASE("print-config echoes a round-trippable document") {
    const std::string out_dir =
        (std::filesystem::temp_directory_path() / "cli_bench_out2").string();
    const std::string cfg = write_temp("cli_print.json", R"({
        "method": "hrgrad",
        "family": {"dim": 6, "tasks": 2, "eps": [1.0, 0.5], "kind": "stiff", "seed": 5},
        "steps": 4, "out_dir": ")" + out_dir + R"(", "seed": 5
    })");
    const CmdResult r = run("bench --config " + cfg + " --print-config");
    CHECK(r.exit_code == 0);
    // Everything before the trailing status line is the config document.
    const auto pos = r.out.rfind("wrote ");
    REQUIRE(pos != std::string::npos);
    const auto j = nlohmann::json::parse(r.out.substr(0, pos));
    CHECK(j["steps"] == 4);
    CHECK(j["methods"][0] == "hrgrad");
    CHECK(j["mer"]["lambda"] == 0.1);
}

TEST_CASE("divergent campaigns exit 4 but still write the report") {
    const std::string out_dir =
        (std::filesystem::temp_directory_path() / "cli_bench_div").string();
    std::filesystem::remove_all(out_dir);
    const std::string cfg = write_temp("cli_div.json", R"({
        "method": "ls",
        "family": {"dim": 6, "tasks": 2, "eps": [0.01, 1.0], "kind": "stiff", "seed": 9},
        "optimizer": {"gamma": 1000.0},
        "steps": 300, "mode": "direct", "out_dir": ")" + out_dir + R"(", "seed": 9
    })");
    const CmdResult r = run("bench --config " + cfg);
    CHECK(r.exit_code == 4);
    CHECK(std::filesystem::exists(out_dir + "/summary.json"));
    std::ifstream js(out_dir + "/summary.json");
    const auto j = nlohmann::json::parse(js);
    CHECK(j["runs"][0]["aborted"] == true);
}

TEST_CASE("fuzz runs clean on the default invariants") {
    const CmdResult r = run("fuzz --iterations 300 --seed 12");
    CHECK(r.exit_code == 0);
    CHECK(r.out.empty()); // violations would print reproducer JSON
}

TEST_CASE("fuzz with zero iterations is a usage error") {
    const CmdResult r = run("fuzz --iterations 0");
    CHECK(r.exit_code == 2);
}

TEST_CASE("sampler diagnostic prints the histogram and the statistic") {
    const CmdResult r = run("sample-eps --eps-min 1e-6 --n 5000 --seed 2");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("bin_lo,bin_hi,count") != std::string::npos);
    CHECK(r.out.find("ks_statistic=") != std::string::npos);
    std::size_t lines = 0;
    for (char c : r.out)
        if (c == '\n') ++lines;
    CHECK(lines == 8); // header + six decades + statistic line
}

TEST_CASE("sampler with one decade and usage errors") {
    const CmdResult one = run("sample-eps --eps-min 0.1 --n 100 --seed 2");
    CHECK(one.exit_code == 0);
    std::size_t lines = 0;
    for (char c : one.out)
        if (c == '\n') ++lines;
    CHECK(lines == 3);
    CHECK(run("sample-eps --eps-min 1.5 --n 10").exit_code == 2);
    CHECK(run("sample-eps --eps-min 1e-3 --n 10 --bins 0").exit_code == 2);
}

TEST_CASE("decade counts stay inside the multinomial band") {
    // Six decades at eps_min = 1e-6; each bin expects n/6 within 3 sigma.
    const long n = 1000000;
    const CmdResult r = run("sample-eps --eps-min 1e-6 --n 1000000 --seed 99");
    REQUIRE(r.exit_code == 0);
    std::istringstream is(r.out);
    std::string line;
    std::getline(is, line); // header
    const double p = 1.0 / 6.0;
    const double sigma = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
    int bins = 0;
    while (std::getline(is, line)) {
        if (line.rfind("ks_statistic", 0) == 0) break;
        const auto comma = line.rfind(',');
        const double count = std::stod(line.substr(comma + 1));
        CHECK(std::abs(count - static_cast<double>(n) * p) <= 3.0 * sigma);
        ++bins;
    }
    CHECK(bins == 6);
}

TEST_CASE("scalar and vector backends agree through the whole pipeline") {
    const std::string path = write_temp(
        "cli_backend.json",
        R"({"dim":5,"tasks":3,"gradients":[[1.0,0.2,0.0,0.4,-1.1],)"
        R"([-0.5,0.8,0.1,0.0,0.6],[0.3,-0.9,0.4,2.0,0.05]]})");
    const std::string base = std::string(HRGRAD_CLI_PATH) + " aggregate " + path;
    auto run_backend = [&](const std::string& backend) {
        const std::string cmd = "HRGRAD_KERNEL=" + backend + " " + base + " 2>/dev/null";
        std::array<char, 4096> buf{};
        std::string out;
        FILE* p = popen(cmd.c_str(), "r");
        REQUIRE(p != nullptr);
        std::size_t got;
        while ((got = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), got);
        REQUIRE(pclose(p) == 0);
        return nlohmann::json::parse(out);
    };
    const auto scalar = run_backend("scalar");
    const auto vector = run_backend("avx2"); // falls back to scalar off x86
    REQUIRE(scalar["update"].size() == 5);
    CHECK(std::abs(scalar["s_c"].get<double>() - vector["s_c"].get<double>()) <= 1e-12);
    for (std::size_t i = 0; i < 5; ++i) {
        const double a = scalar["update"][i].get<double>();
        const double b = vector["update"][i].get<double>();
        CHECK(std::abs(a - b) <= 1e-11 * (1.0 + std::abs(a)));
    }
    CHECK(scalar["conflicts"] == vector["conflicts"]);
}
