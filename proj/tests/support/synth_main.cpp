// Writes a synthetic pack, for trying the command-line tool without a model.

#include <iostream>

#include "CLI11.hpp"
#include "synthetic.hpp"
#include "triad/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic embedding pack", "triad-synth"};
  triad::testing::SynthOptions o;
  std::string out;
  app.add_option("--out", out, "Pack directory")->required();
  app.add_option("--seed", o.seed, "Generator seed");
  app.add_option("--dim", o.dim, "Hidden size")->check(CLI::PositiveNumber);
  app.add_option("--layers", o.layers, "Number of layers")->check(CLI::PositiveNumber);
  app.add_option("--per-split", o.per_split, "Records in each of ID_DEV, ID_TEST, OOD, ADV");
  app.add_option("--train-per-class", o.train_per_class, "ID_TRAIN records per class");
  CLI11_PARSE(app, argc, argv);
  try {
    triad::write_pack(triad::testing::make_synthetic_pack(o), out);
  } catch (const triad::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return triad::exit_code_for(e.kind());
  }
  return 0;
}
