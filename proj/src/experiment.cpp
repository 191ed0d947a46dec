#include "ava/experiment.hpp"

#include "ava/tensor_store.hpp"

#include <json.hpp>

#include <fstream>

namespace ava {

using nlohmann::json;

MetricReport evaluate_subjects(const TrainingData& data, const Networks& nets,
                               ParamStore& store, const std::vector<int>& subject_ids,
                               const EvalProtocolOptions& opts,
                               const FrameProvider& frames) {
  const auto load_frame = [&](int s, int p, int v) {
    return frames ? frames(s, p, v) : load_view(data.manifest, s, p, v);
  };
  std::vector<SampleMetrics> samples;
  for (int subject_id : subject_ids) {
    const SubjectData& sd = data.by_id(subject_id);
    for (int repeat = 0; repeat < opts.repeats; ++repeat) {
      RngStream rng = derive_stream(opts.seed, "eval-sample",
                                    {uint64_t(subject_id), uint64_t(repeat)});
      const int n_frames = data.manifest.params.n_poses * data.manifest.params.n_views;
      std::vector<int> picked;
      while (int(picked.size()) < opts.views_per_sample) {
        const int f = rng.uniform_int(n_frames);
        if (std::find(picked.begin(), picked.end(), f) == picked.end())
          picked.push_back(f);
      }
      std::vector<ViewSample> views;
      for (int f : picked)
        views.push_back(load_frame(subject_id, f / data.manifest.params.n_views,
                                   f % data.manifest.params.n_views));
      attach_template(views, data.tmpl);
      FieldEvaluator field(EvalContext::make(std::move(views), data.tmpl,
                                             sd.subject.skeleton, data.box),
                           store, nets);
      ReconstructOptions ropts;
      ropts.grid_res = opts.grid_res;
      ropts.hierarchical = opts.hierarchical;
      const ReconstructResult recon = reconstruct(field, ropts);

      SampleMetrics m;
      m.id = "subject_" + std::to_string(subject_id) + "/repeat_" +
             std::to_string(repeat);
      m.chamfer_cm = chamfer_cm(recon.mesh, sd.subject.canonical, opts.metric_samples,
                                kMetricSeed);
      m.p2s_cm =
          p2s_cm(recon.mesh, sd.subject.canonical, opts.metric_samples, kMetricSeed);
      m.normal = normal_error(recon.mesh, sd.subject.canonical, opts.normal_resolution);
      samples.push_back(std::move(m));
    }
  }
  return MetricReport::from_samples(std::move(samples), kMetricSeed);
}

void save_checkpoint(const ParamStore& store, const PipelineConfig& config,
                     const CanonicalBox& box, const std::filesystem::path& path) {
  TensorStoreMeta meta;
  meta.entries["kind"] = "checkpoint";
  meta.entries["use_sknet"] = config.use_sknet ? "1" : "0";
  meta.entries["use_spatial"] = config.use_spatial ? "1" : "0";
  meta.entries["use_fusion"] = config.use_fusion ? "1" : "0";
  meta.entries["max_views"] = std::to_string(config.max_views);
  meta.entries["box_center"] = std::to_string(box.center.x()) + " " +
                               std::to_string(box.center.y()) + " " +
                               std::to_string(box.center.z());
  meta.entries["box_half_extent"] = std::to_string(box.half_extent);
  save_tensors(store.values, path, meta);
}

PipelineConfig load_checkpoint(const std::filesystem::path& path, ParamStore* store,
                               CanonicalBox* box) {
  TensorStoreMeta meta;
  auto tensors = load_tensors(path, &meta);
  if (meta.entries["kind"] != "checkpoint")
    throw IoError("not a checkpoint container: " + path.string());
  PipelineConfig config;
  config.use_sknet = meta.entries.at("use_sknet") == "1";
  config.use_spatial = meta.entries.at("use_spatial") == "1";
  config.use_fusion = meta.entries.at("use_fusion") == "1";
  config.max_views = std::stoi(meta.entries.at("max_views"));
  if (box) {
    std::istringstream ss(meta.entries.at("box_center"));
    ss >> box->center.x() >> box->center.y() >> box->center.z();
    box->half_extent = std::stod(meta.entries.at("box_half_extent"));
  }
  if (store) {
    store->values = std::move(tensors);
    store->grads.clear();
  }
  return config;
}

namespace {

json schedule_json(const Schedule& s) {
  return json{{"lr", s.lr},
              {"decay_factor", s.decay_factor},
              {"decay_epoch", s.decay_epoch},
              {"epochs", s.epochs},
              {"steps_per_epoch", s.steps_per_epoch},
              {"batch_subjects", s.batch_subjects},
              {"views_per_sample", s.views_per_sample},
              {"points_per_step", s.points_per_step}};
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["data_dir"] = c.data_dir.string();
  j["dataset"] = json{{"n_subjects", c.dataset.n_subjects},
                      {"n_poses", c.dataset.n_poses},
                      {"n_views", c.dataset.n_views},
                      {"split_ratio", c.dataset.split_ratio},
                      {"seed", c.dataset.seed},
                      {"base_resolution", c.dataset.base_resolution},
                      {"bump_amplitude", c.dataset.bump_amplitude},
                      {"pose_noise_deg", c.dataset.pose_noise_deg},
                      {"subject_mc_res", c.dataset.subject_mc_res},
                      {"template_mc_res", c.dataset.template_mc_res}};
  j["schedule"] = schedule_json(c.schedule);
  j["pipeline"] = json{{"use_sknet", c.pipeline.use_sknet},
                       {"use_spatial", c.pipeline.use_spatial},
                       {"use_fusion", c.pipeline.use_fusion},
                       {"max_views", c.pipeline.max_views}};
  j["eval"] = json{{"views_per_sample", c.eval.views_per_sample},
                   {"repeats", c.eval.repeats},
                   {"grid_res", c.eval.grid_res},
                   {"hierarchical", c.eval.hierarchical},
                   {"seed", c.eval.seed},
                   {"metric_samples", c.eval.metric_samples},
                   {"normal_resolution", c.eval.normal_resolution}};
  j["seed"] = c.seed;
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

}  // namespace

uint64_t ExperimentConfig::config_hash() const {
  return fnv1a(config_json(*this).dump());
}

std::string RunManifest::to_json() const {
  json j;
  j["schema"] = 1;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["dataset_manifest"] = dataset_manifest.string();
  j["checkpoint"] = checkpoint.string();
  j["sknet_checkpoint"] = sknet_checkpoint.string();
  j["metrics"] = metrics.string();
  json curves = json::array();
  for (const auto& c : loss_curves) curves.push_back(c.string());
  j["loss_curves"] = curves;
  j["summary"] = {{"normal", report.normal},
                  {"p2s_cm", report.p2s_cm},
                  {"chamfer_cm", report.chamfer_cm}};
  return j.dump(2) + "\n";
}

RunManifest run_experiment(const ExperimentConfig& config) {
  RunManifest manifest;
  manifest.config_hash = config.config_hash();
  manifest.seed = config.seed;
  manifest.dataset_manifest = config.data_dir / "manifest.json";
  manifest.checkpoint = config.out_dir / "final.ckpt";
  manifest.sknet_checkpoint =
      config.pipeline.use_sknet ? config.out_dir / "sknet_phase.ckpt" : "";
  manifest.metrics = config.out_dir / "metrics.json";
  manifest.loss_curves = {config.out_dir / "loss_sknet.csv",
                          config.out_dir / "loss_joint.csv"};
  if (!config.pipeline.use_sknet)
    manifest.loss_curves.erase(manifest.loss_curves.begin());

  if (config.dry_run) {
    if (!config.schedule.valid()) throw UsageError("dry run: invalid schedule");
    return manifest;
  }

  // Idempotent rerun: completed manifest with the same config hash.
  const auto manifest_path = config.out_dir / "run_manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    std::ifstream f(manifest_path);
    const json j = json::parse(std::string((std::istreambuf_iterator<char>(f)),
                                           std::istreambuf_iterator<char>()));
    if (j["config_hash"].get<uint64_t>() == manifest.config_hash &&
        std::filesystem::exists(manifest.checkpoint) &&
        std::filesystem::exists(manifest.metrics)) {
      std::ifstream mf(manifest.metrics);
      manifest.report = MetricReport::parse(std::string(
          (std::istreambuf_iterator<char>(mf)), std::istreambuf_iterator<char>()));
      manifest.skipped_existing = true;
      return manifest;
    }
  }
  std::filesystem::create_directories(config.out_dir);

  // Stage 1: dataset.
  DatasetManifest dataset;
  if (std::filesystem::exists(manifest.dataset_manifest)) {
    dataset = load_manifest(manifest.dataset_manifest);
  } else {
    dataset = build_manifest(config.data_dir, config.dataset);
  }
  const TrainingData data = TrainingData::load(dataset);

  // Stage 2: training.
  Networks nets(config.pipeline);
  ParamStore store;
  nets.init(store, config.seed);
  if (config.pipeline.use_sknet) {
    const TrainResult r =
        train_sknet(data, nets, store, config.schedule, config.seed);
    save_loss_curve(r.loss_curve, config.out_dir / "loss_sknet.csv");
    save_checkpoint(store, config.pipeline, data.box, manifest.sknet_checkpoint);
    nets.init_srnet_from_sknet(store);
  }
  const TrainResult joint = train_joint(data, nets, store, config.schedule, config.seed);
  save_loss_curve(joint.loss_curve, config.out_dir / "loss_joint.csv");
  save_checkpoint(store, config.pipeline, data.box, manifest.checkpoint);

  // Stage 3: evaluation over the test split.
  manifest.report =
      evaluate_subjects(data, nets, store, dataset.test_ids, config.eval);
  write_text_file(manifest.metrics, manifest.report.to_json());
  write_text_file(manifest_path, manifest.to_json());
  return manifest;
}

}  // namespace ava
