#pragma once

#include "ava/reconstruct.hpp"
#include "ava/trainer.hpp"

namespace ava {

// Scaled-down form of the paper's test protocol: per test subject, draw
// views_per_sample random frames, reconstruct, and score against the
// ground-truth canonical mesh; repeated `repeats` times per subject.
struct EvalProtocolOptions {
  int views_per_sample = 4;
  int repeats = 2;
  int grid_res = 48;
  bool hierarchical = true;
  uint64_t seed = 101;
  int metric_samples = kMetricSamples;
  int normal_resolution = 512;
};

// Produces the frames an evaluation sample consumes; the default reads the
// dataset from disk, the distance sweep re-renders at other resolutions.
using FrameProvider = std::function<ViewSample(int subject, int pose, int view)>;

MetricReport evaluate_subjects(const TrainingData& data, const Networks& nets,
                               ParamStore& store, const std::vector<int>& subject_ids,
                               const EvalProtocolOptions& opts,
                               const FrameProvider& frames = nullptr);

// Checkpoint = parameter container + pipeline flags + canonical box.
void save_checkpoint(const ParamStore& store, const PipelineConfig& config,
                     const CanonicalBox& box, const std::filesystem::path& path);
PipelineConfig load_checkpoint(const std::filesystem::path& path, ParamStore* store,
                               CanonicalBox* box);

struct ExperimentConfig {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  DatasetParams dataset;  // used when the dataset does not exist yet
  Schedule schedule = Schedule::desk();
  PipelineConfig pipeline;
  EvalProtocolOptions eval;
  uint64_t seed = 1;
  bool dry_run = false;

  uint64_t config_hash() const;
};

struct RunManifest {
  uint64_t config_hash = 0;
  uint64_t seed = 0;
  std::filesystem::path dataset_manifest;
  std::filesystem::path checkpoint;
  std::filesystem::path sknet_checkpoint;  // empty when the phase was skipped
  std::filesystem::path metrics;
  std::vector<std::filesystem::path> loss_curves;
  MetricReport report;
  bool skipped_existing = false;

  std::string to_json() const;
};

// Orchestrates dataset generation (if absent), SKNet training, SRNet
// initialization and joint training, and test-split evaluation. Rerunning
// over a completed manifest with the same config is a no-op.
RunManifest run_experiment(const ExperimentConfig& config);

}  // namespace ava
