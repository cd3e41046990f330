#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs{NTFFORGE_CONFIG_DIR};

fs::path work_dir() {
    const fs::path dir{NTFFORGE_WORK_DIR};
    fs::create_directories(dir);
    return dir;
}

// Runs the CLI with stderr discarded and returns its exit status.
int run(const std::string& args) {
    const std::string cmd = std::string("\"") + NTFFORGE_CLI + "\" " + args + " 2>/dev/null >/dev/null";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

} // namespace

TEST_CASE("design writes a deterministic NTF file") {
    const auto a = work_dir() / "lp_a.json";
    const auto b = work_dir() / "lp_b.json";
    REQUIRE(run("design --config " + q(kConfigs / "lowpass_p12.json") + " --out " + q(a)) == 0);
    REQUIRE(run("design --config " + q(kConfigs / "lowpass_p12.json") + " --out " + q(b)) == 0);
    CHECK(slurp(a) == slurp(b));
    const auto j = nlohmann::json::parse(slurp(a));
    CHECK(j.at("a").size() == 13);
    CHECK(j.at("a")[0].get<double>() == 1.0);
}

TEST_CASE("verify accepts the design and rejects a tighter bound") {
    const auto ntf = work_dir() / "lp_verify.json";
    REQUIRE(run("design --config " + q(kConfigs / "lowpass_p12.json") + " --out " + q(ntf)) == 0);
    CHECK(run("verify --ntf " + q(ntf)) == 0);
    CHECK(run("verify --ntf " + q(ntf) + " --gamma 1.2") == 4);
}

TEST_CASE("evaluate reports and writes the integrand") {
    const auto ntf = work_dir() / "lp_eval_ntf.json";
    const auto rep = work_dir() / "lp_eval.json";
    REQUIRE(run("design --config " + q(kConfigs / "lowpass_p12.json") + " --out " + q(ntf)) == 0);
    REQUIRE(run("evaluate --config " + q(kConfigs / "lowpass_p12.json") + " --ntf " + q(ntf) + " --out " + q(rep)) ==
            0);
    const auto j = nlohmann::json::parse(slurp(rep));
    CHECK(j.contains("expected_snr_db"));
    CHECK(j.contains("simulated_snr_db"));
    CHECK(j.at("pass").get<bool>());
    const auto integrand = slurp(fs::path(rep.string() + ".integrand.csv"));
    CHECK(integrand.rfind("omega", 0) == 0);
}

TEST_CASE("strict evaluation fails for an NTF above the bound") {
    const auto ntf = work_dir() / "wild.json";
    write(ntf, R"({"a": [1, -2, 1]})");
    CHECK(run("evaluate --config " + q(kConfigs / "lowpass_p12.json") + " --ntf " + q(ntf)) == 0);
    CHECK(run("evaluate --strict --config " + q(kConfigs / "lowpass_p12.json") + " --ntf " + q(ntf)) == 4);
}

TEST_CASE("validation problems exit with 2") {
    CHECK(run("") == 2);
    CHECK(run("design") == 2);
    CHECK(run("design --config " + q(work_dir() / "missing.json")) == 2);
    const auto bad = work_dir() / "bad_gamma.json";
    auto j = nlohmann::json::parse(slurp(kConfigs / "lowpass_p12.json"));
    j["gamma"] = 0.5;
    write(bad, j.dump());
    CHECK(run("design --config " + q(bad)) == 2);
    const auto broken = work_dir() / "broken.json";
    write(broken, "{");
    CHECK(run("design --config " + q(broken)) == 2);
    CHECK(run("curves --what phase --config " + q(kConfigs / "lowpass_p12.json")) == 2);
}

TEST_CASE("solver failures exit with 3") {
    const auto cfg = work_dir() / "starved.json";
    auto j = nlohmann::json::parse(slurp(kConfigs / "lowpass_p12.json"));
    j["solver"]["max_iter"] = 2;
    write(cfg, j.dump());
    CHECK(run("design --config " + q(cfg)) == 3);
    CHECK(run("sweep --config " + q(cfg) + " --orders 4,6") == 3);
}

TEST_CASE("sweep writes one row per order") {
    const auto out = work_dir() / "sweep.csv";
    REQUIRE(run("sweep --config " + q(kConfigs / "lowpass_p12.json") + " --orders 5,6,9 --out " + q(out)) == 0);
    const auto text = slurp(out);
    CHECK(text.rfind("P,sigma_h,runtime_s,status\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : text) {
        lines += c == '\n' ? 1 : 0;
    }
    CHECK(lines == 4);
}

TEST_CASE("curves produce CSV") {
    const auto out = work_dir() / "filter.csv";
    REQUIRE(run("curves --what filter --config " + q(kConfigs / "lowpass_p12.json") + " --grid 33 --out " + q(out)) ==
            0);
    CHECK(slurp(out).rfind("omega_rad,magnitude_db\n", 0) == 0);
}
