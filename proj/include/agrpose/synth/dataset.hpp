#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "agrpose/synth/agr.hpp"
#include "agrpose/synth/scene.hpp"
#include "agrpose/synth/skeleton.hpp"
#include "json.hpp"

namespace agrpose::synth {

struct PoseFamily {
  double angle_jitter = 0.25;    // radians, per joint
  double sitting_fraction = 0;   // probability a person uses the sitting template
  friend bool operator==(const PoseFamily&, const PoseFamily&) = default;
};

/// Everything needed to generate a dataset; scene i depends only on (seed, i).
struct SynthConfig {
  int count = 200;
  std::uint64_t seed = 1;
  int min_people = 1;
  int max_people = 3;
  Bounds bounds{{-2500, -2500, 0}, {2500, 2500, 0}};  // root x/y; z is the feet band when ground_snap
  bool ground_snap = true;
  double min_sep = 600;
  int max_retries = 1000;
  CameraRanges camera;
  PoseFamily poses;
  double sigma2d = 1.5;
  BoxOptions box;
  NoiseConfig noise;
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

void validate_synth(const SynthConfig& cfg);

/// Scene `index` of the dataset described by `cfg`: random camera, people placed
/// so every root projects into the image, clean AGR rendered and then corrupted.
AgrSample generate_scene(const SynthConfig& cfg, const SkeletonSpec& skel, std::uint64_t index);

/// Scenes [first, first + count), generated in parallel. Output is independent
/// of the thread count.
std::vector<AgrSample> generate_scenes(const SynthConfig& cfg, const SkeletonSpec& skel, std::uint64_t first,
                                       int count);

struct Dataset {
  nlohmann::json manifest;
  std::vector<AgrSample> samples;
};

/// Writes manifest.json, cameras.json and one AGRT file per tensor under `dir`.
/// `meta` is stored verbatim in the manifest.
void write_dataset(const std::filesystem::path& dir, const std::vector<AgrSample>& samples,
                   const nlohmann::json& meta = nlohmann::json::object());

Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace agrpose::synth
