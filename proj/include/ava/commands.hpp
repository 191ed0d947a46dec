#pragma once

#include "ava/config.hpp"
#include "ava/experiment.hpp"

namespace ava::cmd {

// Exit codes shared by every subcommand.
constexpr int kOk = 0;
constexpr int kUsage = 2;        // bad flags / missing input
constexpr int kEmptyResult = 3;  // no isosurface
constexpr int kDivergence = 4;   // non-finite numerics

struct GenDataArgs {
  std::filesystem::path out;
  DatasetParams params;
};
int gen_data(const GenDataArgs& args);

struct TrainArgs {
  std::filesystem::path data;
  std::filesystem::path out;
  std::filesystem::path config_file;  // optional
  std::vector<std::string> overrides;
  std::string profile = "desk";  // desk | paper
  bool dry_run = false;
  uint64_t seed = 1;
};
int train(const TrainArgs& args);
ExperimentConfig experiment_from_config(const TrainArgs& args);

struct ReconstructArgs {
  std::vector<std::filesystem::path> views;
  std::filesystem::path ckpt;
  std::filesystem::path out;
  int grid = 64;
  int skin_grid = 64;  // 0 disables the skinning-field export
  bool exact_grid = false;
};
int reconstruct_cmd(const ReconstructArgs& args);

struct AnimateArgs {
  std::filesystem::path avatar;
  std::filesystem::path skin;
  std::filesystem::path pose;
  std::filesystem::path out;
  bool inverse = false;  // un-pose instead of pose
};
int animate(const AnimateArgs& args);

struct EvaluateArgs {
  std::filesystem::path data;
  std::filesystem::path ckpt;
  std::filesystem::path out;  // report json
  EvalProtocolOptions protocol;
};
int evaluate(const EvaluateArgs& args);

struct AblateArgs {
  std::filesystem::path data;
  std::filesystem::path out;
  Schedule schedule = Schedule::desk();
  EvalProtocolOptions protocol;
  uint64_t seed = 1;
};
int ablate(const AblateArgs& args);
// The Table-III configuration grid, in row order.
std::vector<PipelineConfig> ablation_rows();

struct SweepViewsArgs {
  std::filesystem::path data;
  std::filesystem::path ckpt;
  std::filesystem::path out;
  std::vector<int> counts = {1, 2, 4, 8};
  EvalProtocolOptions protocol;
};
int sweep_views(const SweepViewsArgs& args);

struct SweepDistanceArgs {
  std::filesystem::path data;
  std::filesystem::path ckpt;
  std::filesystem::path out;
  std::vector<double> scales = {0.6, 1.0, 1.2};
  EvalProtocolOptions protocol;
};
int sweep_distance(const SweepDistanceArgs& args);

}  // namespace ava::cmd
