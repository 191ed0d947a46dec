#pragma once

#include "ava/dataset.hpp"
#include "ava/field.hpp"

namespace ava {

// Optimizer schedule. The desk profile drives the acceptance-scale runs;
// the paper profile keeps the published 800-epoch settings available.
struct Schedule {
  double lr = 1e-3;
  double decay_factor = 0.1;
  int decay_epoch = 30;
  int epochs = 50;
  int steps_per_epoch = 3;
  int batch_subjects = 4;    // one batch = 4 subjects x 4 views = 16 images
  int views_per_sample = 4;
  int points_per_step = 2000;

  static Schedule desk() { return {}; }
  static Schedule paper() {
    Schedule s;
    s.decay_epoch = 500;
    s.epochs = 800;
    s.steps_per_epoch = 60;
    s.points_per_step = 20000;
    return s;
  }

  bool valid() const {
    return lr > 0 && decay_factor > 0 && epochs > 0 && decay_epoch < epochs &&
           steps_per_epoch > 0 && batch_subjects > 0 && views_per_sample > 0 &&
           points_per_step > 0;
  }
  double lr_at(int epoch) const {
    return epoch < decay_epoch ? lr : lr * decay_factor;
  }
  int total_steps() const { return epochs * steps_per_epoch; }
};

// Preloaded per-subject ground truth used for supervision: the analytic
// field (occupancy + skinning labels anywhere in space) plus the canonical
// mesh for near-surface sampling.
struct SubjectData {
  int id = 0;
  Subject subject;
  std::shared_ptr<BodyField> field;
};

struct TrainingData {
  DatasetManifest manifest;
  TemplateModel tmpl;
  std::vector<SubjectData> subjects;  // indexed by subject id
  CanonicalBox box;

  static TrainingData load(const DatasetManifest& manifest);
  const SubjectData& by_id(int id) const { return subjects.at(size_t(id)); }
};

// Sampled supervision for one subject in one step.
struct PointBatch {
  std::vector<Vec3> points;
  Tensor sknet_labels;      // [N, 25]: (w*, 0) inside, (0..0, 1) outside
  Tensor occupancy_labels;  // [N, 1]
  int inside_count = 0;
};

// Near-surface (sigma = 0.02 m) and uniform-in-box candidates, stratified
// into an exact 50/50 inside/outside split. `uniform_mix` is the share of
// uniform candidates in the stream (SKNet supervision uses 1:1, SRNet mixes
// 1 uniform per 16 near-surface so far-field emptiness is supervised).
PointBatch sample_points(const SubjectData& subject, const CanonicalBox& box, int count,
                         double uniform_mix, uint64_t seed);

struct TrainSample {
  int subject_id;
  EvalContext ctx;
  PointBatch points;
};

struct StepBatch {
  std::vector<TrainSample> samples;
};

enum class Phase { kSknet, kJoint };

// Deterministic in (seed, step): draws schedule.batch_subjects subjects from
// the train split, 4 random frames each, and the supervision points.
StepBatch make_batch(const TrainingData& data, const Schedule& schedule,
                     Phase phase, uint64_t seed, int step);

struct TrainResult {
  std::vector<double> loss_curve;  // one entry per step
  int steps = 0;
};

struct TrainCallbacks {
  std::function<void(int step, double loss)> on_step;
};

// Phase 1: SKNet (+ encoder) on the 25-channel L2 objective.
TrainResult train_sknet(const TrainingData& data, const Networks& nets,
                        ParamStore& store, const Schedule& schedule, uint64_t seed,
                        const TrainCallbacks& callbacks = {});

// Phase 2: joint training; SRNet occupancy L2 plus (when the skinning field
// is enabled) the SKNet objective at equal weight, on shared points.
TrainResult train_joint(const TrainingData& data, const Networks& nets,
                        ParamStore& store, const Schedule& schedule, uint64_t seed,
                        const TrainCallbacks& callbacks = {});

void save_loss_curve(const std::vector<double>& curve,
                     const std::filesystem::path& path);

}  // namespace ava
