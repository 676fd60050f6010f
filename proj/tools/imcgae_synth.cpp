// imcgae-synth: seeded latent-factor rating generator in MovieLens form.
// Handy for smoke-testing the pipeline without a real dataset.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "imcgae/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic MovieLens-format rating generator"};
  imcgae::SynthConfig cfg;
  std::string out_path = "synth.tsv";
  double holdout = 0.0;
  std::string test_path = "synth_test.tsv";

  app.add_option("--users", cfg.n_users, "Number of users");
  app.add_option("--items", cfg.n_items, "Number of items");
  app.add_option("--density", cfg.density, "Fraction of observed cells");
  app.add_option("--levels", cfg.n_levels, "Rating levels (1..N)");
  app.add_option("--noise", cfg.noise, "Gaussian noise on the latent score");
  app.add_option("--seed", cfg.seed, "Random seed");
  app.add_option("--out", out_path, "Output ratings file (tab-separated)");
  app.add_option("--holdout", holdout, "Fraction of ratings moved to a test file")
      ->check(CLI::Range(0.0, 0.9));
  app.add_option("--test-out", test_path, "Test output path when --holdout > 0");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto rows = imcgae::synth_ratings(cfg);
    const std::size_t test_every =
        holdout > 0.0 ? static_cast<std::size_t>(1.0 / holdout) : rows.size() + 1;

    std::ofstream train_out(out_path);
    std::ofstream test_out;
    if (holdout > 0.0) test_out.open(test_path);
    std::size_t n_test = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto& sink = (holdout > 0.0 && k % test_every == test_every - 1) ? test_out : train_out;
      sink << rows[k].user << '\t' << rows[k].item << '\t' << rows[k].rating << '\n';
      if (&sink == &test_out) ++n_test;
    }
    std::cout << "synth: wrote " << rows.size() - n_test << " train ratings to " << out_path;
    if (holdout > 0.0) std::cout << " and " << n_test << " test ratings to " << test_path;
    std::cout << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
