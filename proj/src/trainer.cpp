#include "ava/trainer.hpp"

#include "ava/adam.hpp"

#include <fstream>

namespace ava {

TrainingData TrainingData::load(const DatasetManifest& manifest) {
  TrainingData data;
  data.manifest = manifest;
  data.tmpl = load_template(manifest);
  data.box = manifest.box;
  for (int s = 0; s < manifest.params.n_subjects; ++s) {
    SubjectData sd;
    sd.id = s;
    sd.subject = load_subject(manifest.subject_path(s));
    sd.field = std::make_shared<BodyField>(sd.subject.spec);
    data.subjects.push_back(std::move(sd));
  }
  return data;
}

PointBatch sample_points(const SubjectData& subject, const CanonicalBox& box, int count,
                         double uniform_mix, uint64_t seed) {
  constexpr double kSurfaceSigma = 0.02;
  RngStream rng = derive_stream(seed, "points");
  const BodyField& field = *subject.field;

  // Area-weighted surface CDF for near-surface candidates.
  const TriMesh& mesh = subject.subject.canonical;
  std::vector<double> cum(mesh.faces.size());
  double total = 0.0;
  for (size_t i = 0; i < mesh.faces.size(); ++i) {
    const auto& f = mesh.faces[i];
    total += 0.5 * (mesh.vertices[f[1]] - mesh.vertices[f[0]])
                       .cross(mesh.vertices[f[2]] - mesh.vertices[f[0]])
                       .norm();
    cum[i] = total;
  }

  auto near_surface = [&]() {
    const double target = rng.uniform() * total;
    const size_t face =
        std::min(size_t(std::lower_bound(cum.begin(), cum.end(), target) - cum.begin()),
                 mesh.faces.size() - 1);
    const auto& f = mesh.faces[face];
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3 base = (1.0 - u - v) * mesh.vertices[f[0]] + u * mesh.vertices[f[1]] +
                      v * mesh.vertices[f[2]];
    return Vec3(base + kSurfaceSigma * rng.normal_vec3());
  };
  auto uniform_in_box = [&]() {
    return Vec3(box.from_unit(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                   rng.uniform(-1, 1))));
  };

  // Stratified fill: exactly half inside, half outside.
  PointBatch batch;
  batch.points.reserve(size_t(count));
  const int want_inside = count / 2;
  const int want_outside = count - want_inside;
  std::vector<Vec3> inside, outside;
  int guard = 0;
  while ((int(inside.size()) < want_inside || int(outside.size()) < want_outside) &&
         ++guard < count * 400) {
    const Vec3 p = rng.uniform() < uniform_mix ? uniform_in_box() : near_surface();
    if (field.inside(p)) {
      if (int(inside.size()) < want_inside) inside.push_back(p);
    } else {
      if (int(outside.size()) < want_outside) outside.push_back(p);
    }
  }
  if (int(inside.size()) < want_inside || int(outside.size()) < want_outside)
    throw Error("sample_points: sampler starved");

  batch.points.insert(batch.points.end(), inside.begin(), inside.end());
  batch.points.insert(batch.points.end(), outside.begin(), outside.end());
  batch.inside_count = int(inside.size());

  const int n = int(batch.points.size());
  batch.sknet_labels = Tensor({n, kSknetOutputDim});
  batch.occupancy_labels = Tensor({n, 1});
  for (int i = 0; i < n; ++i) {
    const bool is_inside = i < batch.inside_count;
    batch.occupancy_labels.at2(i, 0) = is_inside ? 1.0 : 0.0;
    if (is_inside) {
      const SkinWeights w = field.weights(batch.points[size_t(i)]);
      for (int k = 0; k < kJoints; ++k) batch.sknet_labels.at2(i, k) = w.w[k];
    } else {
      batch.sknet_labels.at2(i, kJoints) = 1.0;
    }
  }
  return batch;
}

StepBatch make_batch(const TrainingData& data, const Schedule& schedule,
                     Phase phase, uint64_t seed, int step) {
  const auto& train_ids = data.manifest.train_ids;
  if (train_ids.empty()) throw Error("make_batch: empty train split");
  RngStream rng = derive_stream(seed, phase == Phase::kSknet ? "batch-sknet" : "batch-joint",
                                {uint64_t(step)});
  StepBatch batch;
  const int per_subject =
      std::max(1, schedule.points_per_step / schedule.batch_subjects);
  for (int b = 0; b < schedule.batch_subjects; ++b) {
    const int subject_id = train_ids[size_t(rng.uniform_int(int(train_ids.size())))];
    const SubjectData& sd = data.by_id(subject_id);

    // 4 distinct frames of this subject.
    const int n_frames = data.manifest.params.n_poses * data.manifest.params.n_views;
    std::vector<int> frames;
    while (int(frames.size()) < schedule.views_per_sample) {
      const int f = rng.uniform_int(n_frames);
      if (std::find(frames.begin(), frames.end(), f) == frames.end())
        frames.push_back(f);
    }
    std::vector<ViewSample> views;
    for (int f : frames)
      views.push_back(load_view(data.manifest, subject_id,
                                f / data.manifest.params.n_views,
                                f % data.manifest.params.n_views));
    attach_template(views, data.tmpl);

    TrainSample sample{subject_id,
                       EvalContext::make(std::move(views), data.tmpl,
                                         sd.subject.skeleton, data.box),
                       {}};
    const double uniform_mix = phase == Phase::kSknet ? 0.5 : 1.0 / 17.0;
    sample.points = sample_points(sd, data.box, per_subject, uniform_mix,
                                  rng.next_u64());
    batch.samples.push_back(std::move(sample));
  }
  return batch;
}

namespace {

TrainResult run_phase(const TrainingData& data, const Networks& nets,
                      ParamStore& store, const Schedule& schedule, uint64_t seed,
                      Phase phase, const TrainCallbacks& callbacks) {
  if (!schedule.valid()) throw Error("invalid schedule");
  TrainResult result;
  AdamState adam;
  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    const double lr = schedule.lr_at(epoch);
    for (int s = 0; s < schedule.steps_per_epoch; ++s) {
      const int step = epoch * schedule.steps_per_epoch + s;
      const StepBatch batch = make_batch(data, schedule, phase, seed, step);

      Graph g;
      Var loss;
      bool first = true;
      const double sample_weight = 1.0 / double(batch.samples.size());
      for (const auto& sample : batch.samples) {
        std::vector<Var> maps;
        for (const auto& view : sample.ctx.views)
          maps.push_back(nets.encoder.forward(g, store, view.image));
        Var sample_loss;
        if (phase == Phase::kSknet) {
          const SknetBatch sk =
              sknet_graph(g, store, nets, sample.ctx, sample.points.points, maps);
          sample_loss = mean_sq_err(sk.softmax25, sample.points.sknet_labels);
        } else {
          const SrnetBatch sr =
              srnet_graph(g, store, nets, sample.ctx, sample.points.points, maps);
          sample_loss = mean_sq_err(sr.occupancy, sample.points.occupancy_labels);
          if (nets.config.use_sknet) {
            // Equal-weight joint objective on the shared point set.
            const Var sknet_loss =
                mean_sq_err(sr.sknet.softmax25, sample.points.sknet_labels);
            sample_loss = add_scaled(sample_loss, sknet_loss, 1.0, 1.0);
          }
        }
        loss = first ? scale(sample_loss, sample_weight)
                     : add_scaled(loss, sample_loss, 1.0, sample_weight);
        first = false;
      }

      const double loss_value = loss.val().data[0];
      if (!std::isfinite(loss_value))
        throw DivergenceError("training loss became non-finite at step " +
                              std::to_string(step));
      store.zero_grads();
      g.backward(loss.id);
      adam_step(store, adam, lr);
      result.loss_curve.push_back(loss_value);
      ++result.steps;
      if (callbacks.on_step) callbacks.on_step(step, loss_value);
    }
  }
  return result;
}

}  // namespace

TrainResult train_sknet(const TrainingData& data, const Networks& nets,
                        ParamStore& store, const Schedule& schedule, uint64_t seed,
                        const TrainCallbacks& callbacks) {
  if (!nets.config.use_sknet)
    throw Error("train_sknet: skinning field disabled in this configuration");
  return run_phase(data, nets, store, schedule, seed, Phase::kSknet, callbacks);
}

TrainResult train_joint(const TrainingData& data, const Networks& nets,
                        ParamStore& store, const Schedule& schedule, uint64_t seed,
                        const TrainCallbacks& callbacks) {
  return run_phase(data, nets, store, schedule, seed, Phase::kJoint, callbacks);
}

void save_loss_curve(const std::vector<double>& curve,
                     const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << "step,loss\n";
  f.precision(12);
  for (size_t i = 0; i < curve.size(); ++i) f << i << ',' << curve[i] << '\n';
}

}  // namespace ava
