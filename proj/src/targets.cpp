#include "tcal/targets.hpp"

#include <algorithm>
#include <map>

namespace tcal {

std::vector<Point3> object_grid(const BoardSpec& spec) {
  spec.validate();
  std::vector<Point3> pts;
  pts.reserve(static_cast<size_t>(spec.corner_rows()) * spec.corner_cols());
  for (int r = 0; r < spec.corner_rows(); ++r)
    for (int c = 0; c < spec.corner_cols(); ++c) pts.push_back(object_point(spec, r, c));
  return pts;
}

Point3 object_point(const BoardSpec& spec, int r, int c) {
  return {c * spec.square_size, r * spec.square_size, 0.0};
}

CornerGrid subsample_rgb(const RGBCornerSet& set, const BoardSpec& spec) {
  spec.validate();
  CornerGrid grid(spec.corner_rows(), spec.corner_cols());
  grid.frame_id = set.frame_id;
  for (const auto& corner : set.corners) {
    // Only odd dense indices coincide with thermal lattice nodes.
    if (corner.x_idx % 2 != 1 || corner.y_idx % 2 != 1) continue;
    const int c = (corner.x_idx - 1) / 2;
    const int r = (corner.y_idx - 1) / 2;
    if (c < 0 || c >= grid.cols || r < 0 || r >= grid.rows) continue;
    grid.at(r, c) = corner.point;
  }
  return grid;
}

std::vector<MatchedView> pair_frames(const std::vector<RGBCornerSet>& rgb_sets,
                                     const std::vector<CornerGrid>& tir_grids,
                                     const std::vector<bool>& tir_accepted,
                                     const BoardSpec& spec, int min_pairs) {
  spec.validate();
  if (tir_grids.size() != tir_accepted.size())
    throw ValidationError("pair_frames: accepted flags must parallel the grids");
  if (min_pairs < 4) throw ValidationError("pair_frames: min_pairs must be >= 4");

  std::map<std::string, const RGBCornerSet*> rgb_by_frame;
  for (const auto& s : rgb_sets) rgb_by_frame[s.frame_id] = &s;

  std::map<std::string, const CornerGrid*> tir_by_frame;
  for (size_t i = 0; i < tir_grids.size(); ++i) {
    if (!tir_accepted[i]) continue;
    tir_by_frame[tir_grids[i].frame_id] = &tir_grids[i];
  }

  std::vector<MatchedView> views;
  for (const auto& [frame_id, tir] : tir_by_frame) {
    const auto it = rgb_by_frame.find(frame_id);
    if (it == rgb_by_frame.end()) continue;
    const CornerGrid rgb = subsample_rgb(*it->second, spec);

    MatchedView view;
    view.frame_id = frame_id;
    for (int r = 0; r < spec.corner_rows(); ++r) {
      for (int c = 0; c < spec.corner_cols(); ++c) {
        const auto& pr = rgb.at(r, c);
        const auto& pt = tir->at(r, c);
        if (!pr || !pt) continue;
        view.node_r.push_back(r);
        view.node_c.push_back(c);
        view.rgb_points.push_back(*pr);
        view.tir_points.push_back(*pt);
        view.object_points.push_back(object_point(spec, r, c));
      }
    }
    if (static_cast<int>(view.size()) >= min_pairs) views.push_back(std::move(view));
  }

  std::sort(views.begin(), views.end(),
            [](const MatchedView& a, const MatchedView& b) { return a.frame_id < b.frame_id; });
  if (views.empty()) throw NoViews("no frame pair survived matching");
  return views;
}

}  // namespace tcal
