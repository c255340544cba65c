// Exercises the shared library through icma.h only, and the CLI binary.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

#include "icma/icma.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("icma_capi_" + std::to_string(::getpid())) / name;
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ICMA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

icma_config* small_config(const char* workers) {
  icma_config* c = nullptr;
  REQUIRE(icma_config_new(&c) == ICMA_OK);
  REQUIRE(icma_config_set(c, "bootstrap", "12") == ICMA_OK);
  REQUIRE(icma_config_set(c, "intercepts", "off") == ICMA_OK);
  REQUIRE(icma_config_set(c, "workers", workers) == ICMA_OK);
  REQUIRE(icma_config_set(c, "seed", "8") == ICMA_OK);
  return c;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(icma_version()) == "1.0.0");
  CHECK(std::string(icma_status_name(ICMA_ERR_DATA)) == "data");
  CHECK(std::string(icma_status_name(ICMA_OK)) == "ok");
}

TEST_CASE("simulate, analyze and read results") {
  icma_dataset* d = nullptr;
  REQUIRE(icma_dataset_simulate(5, 60, 3, 0, &d) == ICMA_OK);
  size_t units = 0, dims[3] = {0, 0, 0}, covariates = 9;
  REQUIRE(icma_dataset_shape(d, &units, dims, &covariates) == ICMA_OK);
  CHECK(units == 60);
  CHECK(dims[0] == 8);
  CHECK(dims[2] == 8);
  CHECK(covariates == 1);

  icma_config* c = small_config("1");
  icma_analysis* a = nullptr;
  REQUIRE(icma_analyze(d, c, &a) == ICMA_OK);
  icma_effects e;
  REQUIRE(icma_analysis_effects(a, &e) == ICMA_OK);
  CHECK(e.replicates + e.failed == 12);
  CHECK(e.direct.lower <= e.direct.estimate);
  CHECK(e.direct.estimate <= e.direct.upper);
  CHECK(e.ranks[0] >= 1);

  icma_locus l;
  REQUIRE(icma_analysis_locus(a, 7, 7, 7, &l) == ICMA_OK);
  CHECK(l.p_adjusted >= l.p_raw);
  CHECK(l.alpha_beta == doctest::Approx(l.alpha * l.beta));
  CHECK(icma_analysis_locus(a, 8, 0, 0, &l) == ICMA_ERR_DATA);
  CHECK(std::string(icma_last_error()).size() > 0);

  const fs::path out1 = scratch("w1");
  REQUIRE(icma_analysis_write(a, out1.c_str()) == ICMA_OK);
  CHECK(fs::exists(out1 / "report.jsonl"));
  CHECK(fs::exists(out1 / "loci.csv"));

  // Same seed with four workers writes a byte-identical table.
  icma_config* c4 = small_config("4");
  icma_analysis* a4 = nullptr;
  REQUIRE(icma_analyze(d, c4, &a4) == ICMA_OK);
  const fs::path out4 = scratch("w4");
  REQUIRE(icma_analysis_write(a4, out4.c_str()) == ICMA_OK);
  CHECK(slurp(out1 / "loci.csv") == slurp(out4 / "loci.csv"));

  // Save and reload.
  const fs::path dir = scratch("data");
  REQUIRE(icma_dataset_save(d, (dir / "s.csv").c_str(), (dir / "t.icma").c_str()) == ICMA_OK);
  icma_dataset* back = nullptr;
  REQUIRE(icma_dataset_load((dir / "s.csv").c_str(), (dir / "t.icma").c_str(), &back) == ICMA_OK);
  size_t units2 = 0;
  REQUIRE(icma_dataset_shape(back, &units2, nullptr, nullptr) == ICMA_OK);
  CHECK(units2 == 60);

  icma_analysis_free(a4);
  icma_config_free(c4);
  icma_analysis_free(a);
  icma_config_free(c);
  icma_dataset_free(back);
  icma_dataset_free(d);
  fs::remove_all(fs::temp_directory_path() / ("icma_capi_" + std::to_string(::getpid())));
}

TEST_CASE("error statuses") {
  icma_config* c = nullptr;
  REQUIRE(icma_config_new(&c) == ICMA_OK);
  CHECK(icma_config_set(c, "colour", "red") == ICMA_ERR_CONFIG);
  CHECK(std::string(icma_last_error()).find("colour") != std::string::npos);
  CHECK(icma_config_set(c, "bootstrap", "many") == ICMA_ERR_CONFIG);
  CHECK(icma_config_load(c, "/nonexistent/config.json") == ICMA_ERR_CONFIG);
  CHECK(icma_run(c) == ICMA_ERR_CONFIG);  // no mode
  CHECK(icma_config_set(c, nullptr, "x") == ICMA_ERR_CONFIG);

  icma_dataset* d = nullptr;
  CHECK(icma_dataset_load("/nonexistent/s.csv", "/nonexistent/t.icma", &d) == ICMA_ERR_DATA);
  CHECK(d == nullptr);
  CHECK(icma_dataset_simulate(7, 60, 1, 0, &d) == ICMA_ERR_CONFIG);

  REQUIRE(icma_dataset_simulate(1, 40, 1, 0, &d) == ICMA_OK);
  REQUIRE(icma_config_set(c, "q", "1.5") == ICMA_OK);
  icma_analysis* a = nullptr;
  CHECK(icma_analyze(d, c, &a) == ICMA_ERR_CONFIG);
  CHECK(a == nullptr);
  CHECK(icma_analyze(nullptr, c, &a) == ICMA_ERR_CONFIG);
  icma_dataset_free(d);
  icma_config_free(c);
}

TEST_CASE("CLI exit codes") {
  const fs::path dir = scratch("cli");
  const std::string out = "--out " + (dir / "gen").string();
  CHECK(cli("--version") == 0);
  CHECK(cli("--mode generate --scenario 5 --n 30 " + out) == 0);
  const std::string data =
      " --scalars " + (dir / "gen" / "scalars.csv").string() + " --tensors " + (dir / "gen" / "tensors.icma").string();
  CHECK(fs::exists(dir / "gen" / "provenance.json"));
  CHECK(cli("--mode analyze --q 2" + data + " --out " + (dir / "a").string()) == ICMA_ERR_CONFIG);
  CHECK(cli("--mode dance") == ICMA_ERR_CONFIG);
  CHECK(cli("--no-such-flag") == ICMA_ERR_CONFIG);
  CHECK(cli("--mode analyze --scalars " + (dir / "gen" / "scalars.csv").string() + " --tensors " +
            (dir / "missing.icma").string() + " --out " + (dir / "b").string()) == ICMA_ERR_DATA);
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "id,X,Y\na,3,1\n";
  }
  CHECK(cli("--mode analyze --scalars " + (dir / "bad.csv").string() + " --tensors " +
            (dir / "gen" / "tensors.icma").string() + " --out " + (dir / "c").string()) == ICMA_ERR_DATA);
  CHECK(cli("--mode analyze --bootstrap 10 --workers 2" + data + " --out " + (dir / "d").string()) == 0);
  CHECK(fs::exists(dir / "d" / "loci.csv"));
  fs::remove_all(fs::temp_directory_path() / ("icma_capi_" + std::to_string(::getpid())));
}
