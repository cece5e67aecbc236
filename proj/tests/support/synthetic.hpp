#pragma once

// Synthetic embedding packs with controllable separation between ID, OOD and
// adversarial records, used by the tests and the acceptance run.

#include <cstddef>
#include <cstdint>
#include <string>

#include "triad/pack.hpp"

namespace triad::testing {

struct SynthOptions {
  std::size_t dim = 32;
  std::size_t layers = 12;
  std::size_t classes = 2;
  std::size_t per_split = 500;        // ID_DEV, ID_TEST, OOD and ADV records each
  std::size_t train_per_class = 4000;
  std::uint64_t seed = 1;
  std::string model_name = "synthetic-encoder";

  double class_separation = 3.0;  // distance of class means from the origin
  double ood_shift = 2.5;         // per-coordinate shift on the first 16 coordinates
  double adv_shift = 2.5;         // same, applied only from adv_first_layer on
  std::size_t adv_first_layer = 10;

  // ID logits put a margin in [id_margin_lo, id_margin_hi] on the gold class;
  // adversarial margins are drawn from [0, adv_margin_hi].
  double id_margin_lo = 3.0;
  double id_margin_hi = 6.0;
  double adv_margin_hi = 1.0;

  bool with_tokens = true;
  std::size_t vocab_size = 200;
  bool with_avg = true;
};

EmbeddingPack make_synthetic_pack(const SynthOptions& options);

// A small valid pack with arbitrary finite contents, for round-trip tests.
EmbeddingPack make_random_pack(std::uint64_t seed);

}  // namespace triad::testing
