// Command-line front end. Talks to the library only through icma.h.
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "icma/icma.h"

namespace {

int report(icma_status status) {
  std::fprintf(stderr, "error: %s: %s\n", icma_status_name(status), icma_last_error());
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal mediation analysis with a 3-D image mediator"};
  app.set_version_flag("--version", std::string(icma_version()));

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  // Flags are forwarded to the library as key/value pairs in command-line order.
  std::vector<std::pair<std::string, std::string>> settings;
  const std::vector<std::pair<std::string, std::string>> single = {
      {"mode", "analyze | simulate | pool-select | diagnose | generate"},
      {"scalars", "scalar table (id,X,Y,Z_1..Z_J)"},
      {"tensors", "tensor stack file"},
      {"out", "output directory"},
      {"seed", "random seed"},
      {"bootstrap", "bootstrap replicates"},
      {"replications", "simulation replications"},
      {"q", "FDR level"},
      {"ranks", "Tucker rank candidates, e.g. 1x1x1,2x2x1"},
      {"screen-p", "first-step screening threshold"},
      {"region-frac", "fraction of significant loci for a region to pass"},
      {"intercepts", "on | off"},
      {"workers", "worker threads (0: all cores)"},
      {"scenario", "1-5 or appendix-c"},
      {"n", "simulated sample size"},
      {"permutations", "independence-test permutations"},
      {"sign-coupling", "independent | shared"},
  };
  std::vector<std::string> values(single.size());
  std::vector<CLI::Option*> options;
  for (std::size_t k = 0; k < single.size(); ++k) {
    options.push_back(app.add_option("--" + single[k].first, values[k], single[k].second));
  }
  std::vector<std::string> pools;
  app.add_option("--pool", pools, "METHOD:D1xD2xD3, repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error: config: %s\n", e.what());
    return ICMA_ERR_CONFIG;
  }

  for (std::size_t k = 0; k < single.size(); ++k) {
    if (options[k]->count() > 0) settings.emplace_back(single[k].first, values[k]);
  }
  for (const std::string& p : pools) settings.emplace_back("pool", p);

  icma_config* config = nullptr;
  icma_status status = icma_config_new(&config);
  if (status != ICMA_OK) return report(status);
  if (!config_path.empty()) status = icma_config_load(config, config_path.c_str());
  for (const auto& [key, value] : settings) {
    if (status != ICMA_OK) break;
    status = icma_config_set(config, key.c_str(), value.c_str());
  }
  if (status == ICMA_OK) status = icma_run(config);
  icma_config_free(config);
  if (status != ICMA_OK) return report(status);
  return 0;
}
