#include "ava/reconstruct.hpp"

#include "ava/dataset.hpp"
#include "ava/tensor_store.hpp"

namespace ava {

namespace {

// Batched exact evaluation of the listed lattice indices.
void evaluate_at(const FieldEvaluator& field, VoxelGrid& grid,
                 const std::vector<int64_t>& indices) {
  std::vector<Vec3> points;
  points.reserve(indices.size());
  const int nx = grid.nx, ny = grid.ny;
  for (int64_t idx : indices) {
    const int x = int(idx % nx);
    const int y = int((idx / nx) % ny);
    const int z = int(idx / (int64_t(nx) * ny));
    points.push_back(grid.point(x, y, z));
  }
  std::vector<double> values;
  field.eval_occupancy(points, &values);
  for (size_t i = 0; i < indices.size(); ++i) grid.values[size_t(indices[i])] = values[i];
}

}  // namespace

ReconstructResult reconstruct(const FieldEvaluator& field,
                              const ReconstructOptions& opts) {
  const int res = opts.grid_res;
  ReconstructResult out;
  out.grid = VoxelGrid::over_box(field.context().box, res);

  if (!opts.hierarchical) {
    std::vector<int64_t> all(size_t(res) * res * res);
    for (int64_t i = 0; i < int64_t(all.size()); ++i) all[size_t(i)] = i;
    evaluate_at(field, out.grid, all);
    out.field_evals = int64_t(all.size());
  } else {
    // Pass 1: every even index (plus the final odd boundary index).
    auto snap = [&](int i) { return i % 2 == 0 || i == res - 1; };
    std::vector<int8_t> state(size_t(res) * res * res, 0);  // 0 unknown, 1 exact, 2 fill
    std::vector<int64_t> coarse;
    for (int z = 0; z < res; ++z)
      for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x)
          if (snap(x) && snap(y) && snap(z)) {
            const int64_t idx = (int64_t(z) * res + y) * res + x;
            state[size_t(idx)] = 1;
            coarse.push_back(idx);
          }
    evaluate_at(field, out.grid, coarse);
    out.field_evals += int64_t(coarse.size());

    // Pass 2: classify coarse cells, refine the unsaturated ones.
    auto next_snap = [&](int i) { return std::min(i + 2, res - 1); };
    std::vector<int64_t> refine;
    for (int z = 0; z < res - 1; z = z % 2 == 0 ? z + 2 : z + 1)
      for (int y = 0; y < res - 1; y = y % 2 == 0 ? y + 2 : y + 1)
        for (int x = 0; x < res - 1; x = x % 2 == 0 ? x + 2 : x + 1) {
          const int x1 = next_snap(x), y1 = next_snap(y), z1 = next_snap(z);
          double lo = 1.0, hi = 0.0;
          for (int cz : {z, z1})
            for (int cy : {y, y1})
              for (int cx : {x, x1}) {
                const double v = out.grid.at(cx, cy, cz);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
              }
          const bool saturated = hi < opts.band_lo || lo > opts.band_hi;
          for (int cz = z; cz <= z1; ++cz)
            for (int cy = y; cy <= y1; ++cy)
              for (int cx = x; cx <= x1; ++cx) {
                const int64_t idx = (int64_t(cz) * res + cy) * res + cx;
                if (state[size_t(idx)] != 0) continue;
                if (saturated) {
                  // Trilinear fill from the coarse corners.
                  const double fx = x1 > x ? double(cx - x) / double(x1 - x) : 0.0;
                  const double fy = y1 > y ? double(cy - y) / double(y1 - y) : 0.0;
                  const double fz = z1 > z ? double(cz - z) / double(z1 - z) : 0.0;
                  double v = 0.0;
                  for (int dz = 0; dz < 2; ++dz)
                    for (int dy = 0; dy < 2; ++dy)
                      for (int dx = 0; dx < 2; ++dx)
                        v += (dz ? fz : 1 - fz) * (dy ? fy : 1 - fy) *
                             (dx ? fx : 1 - fx) *
                             out.grid.at(dx ? x1 : x, dy ? y1 : y, dz ? z1 : z);
                  out.grid.values[size_t(idx)] = v;
                  state[size_t(idx)] = 2;
                } else {
                  state[size_t(idx)] = 1;
                  refine.push_back(idx);
                }
              }
        }
    evaluate_at(field, out.grid, refine);
    out.field_evals += int64_t(refine.size());
  }

  out.mesh = marching_cubes(out.grid, 0.5);
  return out;
}

namespace {

void write_skin_grid(const std::vector<SkinWeights>& weights, int res,
                     const CanonicalBox& box, const Skeleton& skeleton,
                     const std::filesystem::path& path) {
  Tensor grid({res, res, res, kJoints});
  for (size_t i = 0; i < weights.size(); ++i)
    for (int k = 0; k < kJoints; ++k)
      grid.data[i * kJoints + size_t(k)] = weights[i].w[k];
  TensorStoreMeta meta;
  meta.entries["kind"] = "skin_field";
  meta.entries["box_center"] = std::to_string(box.center.x()) + " " +
                               std::to_string(box.center.y()) + " " +
                               std::to_string(box.center.z());
  meta.entries["box_half_extent"] = std::to_string(box.half_extent);
  meta.entries["skeleton"] = skeleton_to_json(skeleton);
  save_tensors({{"weights", grid}}, path, meta);
}

std::vector<Vec3> lattice_points(const CanonicalBox& box, int res) {
  const VoxelGrid g = VoxelGrid::over_box(box, res);
  std::vector<Vec3> points;
  points.reserve(size_t(res) * res * res);
  for (int z = 0; z < res; ++z)
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) points.push_back(g.point(x, y, z));
  return points;
}

}  // namespace

void export_skin_field(const FieldEvaluator& field, int res,
                       const std::filesystem::path& path) {
  std::vector<SkinWeights> weights;
  field.eval_skin(lattice_points(field.context().box, res), &weights);
  write_skin_grid(weights, res, field.context().box, field.context().skeleton, path);
}

void export_nn_skin_field(const TemplateModel& tmpl, const CanonicalBox& box,
                          const Skeleton& skeleton, int res,
                          const std::filesystem::path& path) {
  const auto points = lattice_points(box, res);
  std::vector<SkinWeights> weights(points.size());
  for (size_t i = 0; i < points.size(); ++i) weights[i] = nn_skin(points[i], tmpl);
  write_skin_grid(weights, res, box, skeleton, path);
}

SkinFieldGrid load_skin_field(const std::filesystem::path& path) {
  TensorStoreMeta meta;
  auto tensors = load_tensors(path, &meta);
  const auto it = tensors.find("weights");
  if (it == tensors.end() || it->second.shape.size() != 4)
    throw IoError("not a skin field container: " + path.string());
  SkinFieldGrid grid;
  grid.res = it->second.shape[0];
  {
    std::istringstream ss(meta.entries.at("box_center"));
    ss >> grid.box.center.x() >> grid.box.center.y() >> grid.box.center.z();
    grid.box.half_extent = std::stod(meta.entries.at("box_half_extent"));
  }
  grid.skeleton = skeleton_from_json(meta.entries.at("skeleton"));
  grid.weights.assign(it->second.data.begin(), it->second.data.end());
  return grid;
}

SkinWeights SkinFieldGrid::sample(const Vec3& x) const {
  const double spacing = box.side() / double(res - 1);
  const Vec3 g = (x - box.lo()) / spacing;
  Eigen::Matrix<double, kJoints, 1> acc = Eigen::Matrix<double, kJoints, 1>::Zero();
  const int x0 = std::clamp(int(std::floor(g.x())), 0, res - 1);
  const int y0 = std::clamp(int(std::floor(g.y())), 0, res - 1);
  const int z0 = std::clamp(int(std::floor(g.z())), 0, res - 1);
  const double fx = std::clamp(g.x() - x0, 0.0, 1.0);
  const double fy = std::clamp(g.y() - y0, 0.0, 1.0);
  const double fz = std::clamp(g.z() - z0, 0.0, 1.0);
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const int xi = std::min(x0 + dx, res - 1);
        const int yi = std::min(y0 + dy, res - 1);
        const int zi = std::min(z0 + dz, res - 1);
        const double w = (dz ? fz : 1 - fz) * (dy ? fy : 1 - fy) * (dx ? fx : 1 - fx);
        const size_t base =
            ((size_t(zi) * size_t(res) + size_t(yi)) * size_t(res) + size_t(xi)) *
            kJoints;
        for (int k = 0; k < kJoints; ++k) acc[k] += w * double(weights[base + size_t(k)]);
      }
  return SkinWeights::normalized(acc.cwiseMax(1e-12));
}

}  // namespace ava
