#pragma once

#include "ava/body.hpp"

namespace ava {

// A posed scan with its fitted pose and labeled landmark positions.
struct Scan {
  TriMesh mesh;
  Pose pose;
  std::vector<Landmark> landmarks;
};

struct CanonicalOptOptions {
  double lambda_landmark = 1.0;
  double lambda_reg = 0.1;
  int chamfer_samples = 3000;
  uint64_t sample_seed = 17;
  double initial_step = 0.25;
  int stall_limit = 50;
  double converged_chamfer_m = 1e-3;
};

struct CanonicalOptResult {
  TriMesh canonical;  // optimized vertices, weights in .skin
  std::vector<double> objective_curve;
  std::vector<double> chamfer_curve;  // mean point-to-surface distance (m)
  int iterations = 0;
};

// Gradient descent over per-vertex canonical offsets and skinning logits
// (softmax-parameterized so the weights stay on the simplex), minimizing
// summed per-pose chamfer error between the reposed shape and each scan,
// plus landmark L2 and Laplacian smoothness of offsets and weights.
// Correspondences are refreshed each iteration; a step is accepted only if
// the freshly evaluated objective does not increase, so the objective curve
// is monotone nonincreasing. Throws NonConvergentError when the chamfer
// term stalls for stall_limit iterations before reaching the convergence
// threshold, and Error for fewer than two scans.
CanonicalOptResult optimize_canonical_skinning(const std::vector<Scan>& scans,
                                               const TemplateModel& init, int iters,
                                               const CanonicalOptOptions& opts = {});

// Hook for scan cleanup (self-intersection edge cutting and hole filling).
// The synthetic scans are watertight, so this is the identity; kept as the
// seam where a real-capture pipeline would plug in.
TriMesh cleanup_scan(const TriMesh& scan);

}  // namespace ava
