// Writes the generatable benchmark datasets as CSV files that load with the
// schemas under data/schemas/.

#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "punn/builtin_data.hpp"
#include "punn/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"benchmark dataset generator"};
  app.require_subcommand(1);

  std::string balance_out = "balance.csv";
  CLI::App* balance = app.add_subcommand("balance", "exact 625-row balance-scale file");
  balance->add_option("out", balance_out, "output CSV path")->capture_default_str();

  std::string waveform_out = "waveform.csv";
  int waveform_n = 5000;
  std::uint64_t waveform_seed = 1;
  CLI::App* waveform =
      app.add_subcommand("waveform", "generated 40-attribute waveform file (statistical clone)");
  waveform->add_option("out", waveform_out, "output CSV path")->capture_default_str();
  waveform->add_option("--n", waveform_n, "pattern count")->capture_default_str();
  waveform->add_option("--seed", waveform_seed, "generator seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (balance->parsed()) {
      punn::write_balance_csv(balance_out);
      std::printf("wrote %s (625 rows)\n", balance_out.c_str());
    } else if (waveform->parsed()) {
      punn::write_waveform_csv(waveform_out, waveform_n, waveform_seed);
      std::printf("wrote %s (%d rows, seed %llu)\n", waveform_out.c_str(), waveform_n,
                  static_cast<unsigned long long>(waveform_seed));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
