#include "ava/commands.hpp"

#include "ava/mesh_io.hpp"
#include "ava/svg.hpp"
#include "ava/tensor_store.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

namespace ava::cmd {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

void print_metric_header() {
  std::printf("%-28s %10s %10s %12s\n", "configuration", "Normal", "P2S(cm)",
              "Chamfer(cm)");
}

void print_metric_row(const std::string& name, const MetricReport& r) {
  std::printf("%-28s %10.4f %10.4f %12.4f\n", name.c_str(), r.normal, r.p2s_cm,
              r.chamfer_cm);
}

struct LoadedModel {
  Networks nets{PipelineConfig{}};
  ParamStore store;
  CanonicalBox box;
};

LoadedModel load_model(const std::filesystem::path& ckpt) {
  if (!std::filesystem::exists(ckpt))
    throw UsageError("checkpoint not found: " + ckpt.string());
  LoadedModel model;
  const PipelineConfig cfg = load_checkpoint(ckpt, &model.store, &model.box);
  model.nets = Networks(cfg);
  return model;
}

}  // namespace

int gen_data(const GenDataArgs& args) {
  const DatasetManifest manifest = build_manifest(args.out, args.params);
  std::printf("dataset at %s: %d subjects (%zu train / %zu test), %d poses, %d views\n",
              manifest.root.string().c_str(), manifest.params.n_subjects,
              manifest.train_ids.size(), manifest.test_ids.size(),
              manifest.params.n_poses, manifest.params.n_views);
  std::printf("manifest: %s\n", (manifest.root / "manifest.json").string().c_str());
  return kOk;
}

ExperimentConfig experiment_from_config(const TrainArgs& args) {
  Config cfg;
  if (!args.config_file.empty()) cfg = Config::from_file(args.config_file);
  for (const auto& kv : args.overrides) cfg.apply_override(kv);

  ExperimentConfig ex;
  ex.data_dir = args.data;
  ex.out_dir = args.out;
  ex.seed = cfg.get("seed", args.seed);
  ex.dry_run = args.dry_run;

  ex.schedule = args.profile == "paper" ? Schedule::paper() : Schedule::desk();
  ex.schedule.lr = cfg.get("schedule.lr", ex.schedule.lr);
  ex.schedule.decay_factor = cfg.get("schedule.decay_factor", ex.schedule.decay_factor);
  ex.schedule.decay_epoch = cfg.get("schedule.decay_epoch", ex.schedule.decay_epoch);
  ex.schedule.epochs = cfg.get("schedule.epochs", ex.schedule.epochs);
  ex.schedule.steps_per_epoch =
      cfg.get("schedule.steps_per_epoch", ex.schedule.steps_per_epoch);
  ex.schedule.batch_subjects =
      cfg.get("schedule.batch_subjects", ex.schedule.batch_subjects);
  ex.schedule.views_per_sample =
      cfg.get("schedule.views_per_sample", ex.schedule.views_per_sample);
  ex.schedule.points_per_step =
      cfg.get("schedule.points_per_step", ex.schedule.points_per_step);

  ex.pipeline.use_sknet = cfg.get("pipeline.use_sknet", true);
  ex.pipeline.use_spatial = cfg.get("pipeline.use_spatial", true);
  ex.pipeline.use_fusion = cfg.get("pipeline.use_fusion", true);
  ex.pipeline.max_views = cfg.get("pipeline.max_views", 8);

  ex.dataset.n_subjects = cfg.get("dataset.n_subjects", 10);
  ex.dataset.n_poses = cfg.get("dataset.n_poses", kPoseCount);
  ex.dataset.n_views = cfg.get("dataset.n_views", 8);
  ex.dataset.split_ratio = cfg.get("dataset.split_ratio", 0.8);
  ex.dataset.seed = cfg.get("dataset.seed", uint64_t(1));
  ex.dataset.base_resolution = cfg.get("dataset.base_resolution", 128);
  ex.dataset.bump_amplitude = cfg.get("dataset.bump_amplitude", 0.02);
  ex.dataset.pose_noise_deg = cfg.get("dataset.pose_noise_deg", 3.0);
  ex.dataset.subject_mc_res = cfg.get("dataset.subject_mc_res", 160);
  ex.dataset.template_mc_res = cfg.get("dataset.template_mc_res", 128);

  ex.eval.views_per_sample = cfg.get("eval.views_per_sample", 4);
  ex.eval.repeats = cfg.get("eval.repeats", 2);
  ex.eval.grid_res = cfg.get("eval.grid_res", 48);
  ex.eval.hierarchical = cfg.get("eval.hierarchical", true);
  ex.eval.seed = cfg.get("eval.seed", uint64_t(101));
  ex.eval.metric_samples = cfg.get("eval.metric_samples", kMetricSamples);
  ex.eval.normal_resolution = cfg.get("eval.normal_resolution", 512);
  return ex;
}

int train(const TrainArgs& args) {
  const ExperimentConfig ex = experiment_from_config(args);
  if (ex.dry_run) {
    run_experiment(ex);
    std::printf("dry run ok: config hash %016llx\n",
                (unsigned long long)ex.config_hash());
    return kOk;
  }
  const RunManifest manifest = run_experiment(ex);
  if (manifest.skipped_existing)
    std::printf("existing run reused (config hash matches)\n");
  std::printf("checkpoint: %s\n", manifest.checkpoint.string().c_str());
  print_metric_header();
  print_metric_row("test split", manifest.report);
  return kOk;
}

int reconstruct_cmd(const ReconstructArgs& args) {
  if (args.views.empty()) throw UsageError("reconstruct: no view files");
  for (const auto& v : args.views)
    if (!std::filesystem::exists(v))
      throw UsageError("view file not found: " + v.string());

  LoadedModel model = load_model(args.ckpt);

  // Dataset layout: <root>/subject_XXX/pose_YY/view_ZZ.zip
  const auto pose_dir = args.views.front().parent_path();
  const auto subject_dir = pose_dir.parent_path();
  const auto root = subject_dir.parent_path();
  const Subject subject = load_subject(subject_dir);
  const TemplateModel tmpl = TemplateModel::from_subject(load_subject(root / "template"));

  std::vector<ViewSample> views;
  for (const auto& path : args.views) views.push_back(load_view_file(path));
  attach_template(views, tmpl);

  FieldEvaluator field(
      EvalContext::make(std::move(views), tmpl, subject.skeleton, model.box),
      model.store, model.nets);
  ReconstructOptions opts;
  opts.grid_res = args.grid;
  opts.hierarchical = !args.exact_grid;
  const ReconstructResult recon = reconstruct(field, opts);

  std::filesystem::create_directories(args.out);
  save_ply(recon.mesh, args.out / "avatar.ply");
  if (args.skin_grid > 0)
    export_skin_field(field, args.skin_grid, args.out / "skin_field.vox");

  json meta;
  meta["schema"] = 1;
  meta["grid_res"] = args.grid;
  meta["threshold"] = 0.5;
  meta["hierarchical"] = opts.hierarchical;
  meta["band"] = {opts.band_lo, opts.band_hi};
  meta["field_evaluations"] = recon.field_evals;
  meta["checkpoint"] = {{"path", args.ckpt.string()},
                        {"hash", file_hash_hex(args.ckpt)}};
  json view_ids = json::array();
  for (const auto& view : field.context().views) {
    char key[32];
    std::snprintf(key, sizeof key, "%016llx", (unsigned long long)view.content_key());
    view_ids.push_back(key);
  }
  meta["view_keys"] = view_ids;  // canonical (sorted) order
  meta["box"] = {{"center",
                  {model.box.center.x(), model.box.center.y(), model.box.center.z()}},
                 {"half_extent", model.box.half_extent}};
  meta["metrics_protocol"] = {
      {"chamfer", "symmetric mean point-to-surface distance, cm"},
      {"p2s", "one-directional mean point-to-surface distance, cm"},
      {"normal",
       "mean per-pixel L2 of world normals over 4 orthographic views "
       "(front/back/left/right), pixels covered by both meshes"},
      {"sample_seed", kMetricSeed}};
  write_file(args.out / "recon_meta.json", meta.dump(2) + "\n");

  std::printf("avatar: %s (%zu vertices, %zu faces, %lld field evals)\n",
              (args.out / "avatar.ply").string().c_str(), recon.mesh.vertices.size(),
              recon.mesh.faces.size(), (long long)recon.field_evals);
  return kOk;
}

int animate(const AnimateArgs& args) {
  for (const auto& p : {args.avatar, args.skin, args.pose})
    if (!std::filesystem::exists(p))
      throw UsageError("animate: missing input " + p.string());
  TriMesh mesh = load_mesh(args.avatar);
  const SkinFieldGrid grid = load_skin_field(args.skin);
  const Pose pose = pose_from_json(read_file(args.pose));

  mesh.skin.clear();
  mesh.skin.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) mesh.skin.push_back(grid.sample(v));
  const TriMesh posed = args.inverse ? unpose(mesh, pose, grid.skeleton)
                                     : repose(mesh, pose, grid.skeleton);
  save_mesh(posed, args.out);
  std::printf("posed mesh: %s\n", args.out.string().c_str());
  return kOk;
}

int evaluate(const EvaluateArgs& args) {
  if (!std::filesystem::exists(args.data / "manifest.json"))
    throw UsageError("dataset manifest not found under " + args.data.string());
  LoadedModel model = load_model(args.ckpt);
  const TrainingData data = TrainingData::load(load_manifest(args.data / "manifest.json"));
  const MetricReport report = evaluate_subjects(
      data, model.nets, model.store, data.manifest.test_ids, args.protocol);
  if (!args.out.empty()) {
    std::filesystem::create_directories(args.out.parent_path());
    write_file(args.out, report.to_json());
  }
  print_metric_header();
  print_metric_row("test split", report);
  return kOk;
}

std::vector<PipelineConfig> ablation_rows() {
  // Table order: baseline, +SKNet, +Spatial, +FA (full model).
  PipelineConfig none{false, false, false, 8};
  PipelineConfig sknet{true, false, false, 8};
  PipelineConfig spatial{true, true, false, 8};
  PipelineConfig full{true, true, true, 8};
  return {none, sknet, spatial, full};
}

int ablate(const AblateArgs& args) {
  const char* names[4] = {"baseline", "+SKNet", "+SKNet+Spatial",
                          "+SKNet+Spatial+FA"};
  std::filesystem::create_directories(args.out);
  std::vector<MetricReport> reports;
  const auto rows = ablation_rows();
  for (size_t row = 0; row < rows.size(); ++row) {
    ExperimentConfig ex;
    ex.data_dir = args.data;
    ex.out_dir = args.out / ("row" + std::to_string(row));
    ex.schedule = args.schedule;
    ex.pipeline = rows[row];
    ex.eval = args.protocol;
    ex.seed = args.seed;
    reports.push_back(run_experiment(ex).report);
  }

  std::string csv = "configuration,normal,p2s_cm,chamfer_cm\n";
  print_metric_header();
  for (size_t row = 0; row < rows.size(); ++row) {
    print_metric_row(names[row], reports[row]);
    char line[160];
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f\n", names[row],
                  reports[row].normal, reports[row].p2s_cm, reports[row].chamfer_cm);
    csv += line;
  }
  write_file(args.out / "ablation.csv", csv);
  return kOk;
}

int sweep_views(const SweepViewsArgs& args) {
  LoadedModel model = load_model(args.ckpt);
  const TrainingData data = TrainingData::load(load_manifest(args.data / "manifest.json"));
  std::filesystem::create_directories(args.out);

  std::string csv = "views,normal,p2s_cm,chamfer_cm\n";
  std::vector<double> xs, chamfers;
  print_metric_header();
  for (int count : args.counts) {
    EvalProtocolOptions protocol = args.protocol;
    protocol.views_per_sample = count;
    const MetricReport report = evaluate_subjects(data, model.nets, model.store,
                                                  data.manifest.test_ids, protocol);
    print_metric_row(std::to_string(count) + " views", report);
    char line[120];
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f\n", count, report.normal,
                  report.p2s_cm, report.chamfer_cm);
    csv += line;
    xs.push_back(count);
    chamfers.push_back(report.chamfer_cm);
  }
  write_file(args.out / "views_sweep.csv", csv);
  write_svg_chart(args.out / "views_sweep.svg", "Chamfer error vs input count",
                  "input views", "chamfer (cm)", xs, {{"chamfer", chamfers}});
  return kOk;
}

int sweep_distance(const SweepDistanceArgs& args) {
  LoadedModel model = load_model(args.ckpt);
  const TrainingData data = TrainingData::load(load_manifest(args.data / "manifest.json"));
  std::filesystem::create_directories(args.out);

  std::string csv = "distance_scale,normal,p2s_cm,chamfer_cm\n";
  std::vector<double> xs, chamfers;
  print_metric_header();
  for (double scale : args.scales) {
    // Re-render the test frames at this resolution scale from the stored
    // ground-truth poses; the fitted pose travels along unchanged.
    std::map<std::pair<int, int>, std::vector<ViewSample>> cache;
    FrameProvider provider = [&](int s, int p, int v) -> ViewSample {
      const auto key = std::make_pair(s, p);
      auto it = cache.find(key);
      if (it == cache.end()) {
        const std::string pose_text =
            read_file(data.manifest.pose_dir(s, p) / "pose.json");
        const Pose truth = true_pose_from_json(pose_text);
        const Pose fitted = pose_from_json(pose_text);
        RenderOptions opts;
        opts.base_resolution = data.manifest.params.base_resolution;
        auto views = render_views(data.by_id(s).subject, truth,
                                  data.manifest.params.n_views, scale,
                                  derive_stream(data.manifest.params.seed, "render",
                                                {uint64_t(s), uint64_t(p)})
                                      .next_u64(),
                                  opts);
        for (auto& view : views) view.pose = fitted;
        it = cache.emplace(key, std::move(views)).first;
      }
      return it->second.at(size_t(v));
    };
    const MetricReport report =
        evaluate_subjects(data, model.nets, model.store, data.manifest.test_ids,
                          args.protocol, provider);
    char label[32];
    std::snprintf(label, sizeof label, "%.1fx", scale);
    print_metric_row(label, report);
    char line[120];
    std::snprintf(line, sizeof line, "%.3f,%.6f,%.6f,%.6f\n", scale, report.normal,
                  report.p2s_cm, report.chamfer_cm);
    csv += line;
    xs.push_back(scale);
    chamfers.push_back(report.chamfer_cm);
  }
  write_file(args.out / "distance_sweep.csv", csv);
  write_svg_chart(args.out / "distance_sweep.svg", "Chamfer error vs capture distance",
                  "resolution scale", "chamfer (cm)", xs, {{"chamfer", chamfers}});
  return kOk;
}

}  // namespace ava::cmd
