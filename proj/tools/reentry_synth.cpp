// Writes a synthetic corpus bundle (dump, lexicons, config) for demos and tests.
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "reentry/reentry.h"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic hate/counterspeech corpus bundle"};
  std::string dir;
  std::size_t pairs = 2000;
  std::uint64_t seed = 20240611;
  double signal = 0.8;
  app.add_option("-o,--out", dir, "Bundle directory")->required();
  app.add_option("-n,--pairs", pairs, "Number of qualifying pairs")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--signal", signal, "Chance a counterspeech carries its outcome marker")->check(CLI::Range(0.0, 1.0));
  CLI11_PARSE(app, argc, argv);

  const reentry_status status = reentry_synth_write(dir.c_str(), pairs, seed, signal);
  if (status != REENTRY_OK) {
    std::cerr << "reentry_synth: error: " << reentry_last_error() << '\n';
    return reentry_exit_code(status);
  }
  std::cout << dir << "/config.json\n";
  return 0;
}
