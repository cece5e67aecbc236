#pragma once

// Binary sidecar files for fitted models. Layouts are in docs/model-format.md.

#include <filesystem>
#include <string>

#include "triad/bow.hpp"
#include "triad/gauss.hpp"

namespace triad {

inline constexpr char kGaussMagic[8] = {'T', 'R', 'D', 'G', 'A', 'U', 'S', '1'};
inline constexpr char kBowMagic[8] = {'T', 'R', 'D', 'B', 'O', 'W', '0', '1'};

std::string encode_gaussian(const LayerGaussian& g);
LayerGaussian decode_gaussian(std::string_view bytes, const std::string& origin = "<memory>");

void write_gaussian(const LayerGaussian& g, const std::filesystem::path& path);
// Throws MissingSidecar or CorruptSidecar.
LayerGaussian read_gaussian(const std::filesystem::path& path);

// Conventional file name inside a model directory, e.g. "gauss_cls_L02.bin".
std::string gaussian_file_name(Aggregation agg, int layer);

struct BowModel {
  bow::IdfTable idf;
  bow::BowCentroid centroid;
};

std::string encode_bow(const BowModel& model);
BowModel decode_bow(std::string_view bytes, const std::string& origin = "<memory>");

void write_bow(const BowModel& model, const std::filesystem::path& path);
BowModel read_bow(const std::filesystem::path& path);

inline constexpr char kBowFileName[] = "bow.bin";

}  // namespace triad
