#include "lungsim/morphology.hpp"

#include <algorithm>

namespace lungsim {
namespace {

std::vector<std::pair<int, int>> disk_offsets(int radius) {
  std::vector<std::pair<int, int>> off;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) off.emplace_back(dy, dx);
  return off;
}

BinarySlice erode(const BinarySlice& m, const std::vector<std::pair<int, int>>& off) {
  BinarySlice out = BinarySlice::Zero(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!m(r, c)) continue;
      bool keep = true;
      for (auto [dy, dx] : off) {
        const Eigen::Index rr = r + dy, cc = c + dx;
        if (rr < 0 || cc < 0 || rr >= m.rows() || cc >= m.cols() || !m(rr, cc)) {
          keep = false;
          break;
        }
      }
      out(r, c) = keep;
    }
  return out;
}

BinarySlice dilate(const BinarySlice& m, const std::vector<std::pair<int, int>>& off) {
  BinarySlice out = BinarySlice::Zero(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!m(r, c)) continue;
      for (auto [dy, dx] : off) {
        const Eigen::Index rr = r + dy, cc = c + dx;
        if (rr >= 0 && cc >= 0 && rr < m.rows() && cc < m.cols()) out(rr, cc) = 1;
      }
    }
  return out;
}

}  // namespace

Labeling label_components(const BinarySlice& mask, Connectivity conn) {
  const int rows = int(mask.rows()), cols = int(mask.cols());
  Labeling out{RowArray<std::int32_t>::Zero(rows, cols), {0}};
  static constexpr int kDr[8] = {-1, 1, 0, 0, -1, -1, 1, 1};
  static constexpr int kDc[8] = {0, 0, -1, 1, -1, 1, -1, 1};
  const int nbrs = conn == Connectivity::four ? 4 : 8;
  std::vector<std::pair<int, int>> stack;
  for (int r0 = 0; r0 < rows; ++r0)
    for (int c0 = 0; c0 < cols; ++c0) {
      if (!mask(r0, c0) || out.labels(r0, c0)) continue;
      const auto label = std::int32_t(out.sizes.size());
      std::int64_t size = 0;
      out.labels(r0, c0) = label;
      stack.assign(1, {r0, c0});
      while (!stack.empty()) {
        auto [r, c] = stack.back();
        stack.pop_back();
        ++size;
        for (int k = 0; k < nbrs; ++k) {
          const int rr = r + kDr[k], cc = c + kDc[k];
          if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
          if (!mask(rr, cc) || out.labels(rr, cc)) continue;
          out.labels(rr, cc) = label;
          stack.emplace_back(rr, cc);
        }
      }
      out.sizes.push_back(size);
    }
  return out;
}

BinarySlice largest_component(const BinarySlice& mask, Connectivity conn) {
  const Labeling lab = label_components(mask, conn);
  if (lab.count() == 0) return BinarySlice::Zero(mask.rows(), mask.cols());
  const auto best = std::int32_t(std::max_element(lab.sizes.begin() + 1, lab.sizes.end()) - lab.sizes.begin());
  return (lab.labels == best).cast<std::uint8_t>();
}

BinarySlice fill_holes(const BinarySlice& mask) {
  const BinarySlice background = (mask == 0).cast<std::uint8_t>();
  const Labeling lab = label_components(background, Connectivity::four);
  std::vector<bool> touches_border(lab.sizes.size(), false);
  const auto rows = mask.rows(), cols = mask.cols();
  for (Eigen::Index c = 0; c < cols; ++c) {
    touches_border[lab.labels(0, c)] = true;
    touches_border[lab.labels(rows - 1, c)] = true;
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    touches_border[lab.labels(r, 0)] = true;
    touches_border[lab.labels(r, cols - 1)] = true;
  }
  BinarySlice out = mask;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (lab.labels(r, c) && !touches_border[lab.labels(r, c)]) out(r, c) = 1;
  return out;
}

BinarySlice open_disk(const BinarySlice& mask, int radius) {
  if (radius <= 0) return mask;
  const auto off = disk_offsets(radius);
  return dilate(erode(mask, off), off);
}

VolumeLabeling label_components_3d(const VoxelMask& mask) {
  const int nx = mask.nx(), ny = mask.ny(), nz = mask.nz();
  VolumeLabeling out{std::vector<std::int32_t>(std::size_t(mask.size()), 0), {0}};
  std::vector<Eigen::Index> stack;
  for (Eigen::Index start = 0; start < mask.size(); ++start) {
    if (!mask.values[start] || out.labels[start]) continue;
    const auto label = std::int32_t(out.sizes.size());
    std::int64_t size = 0;
    out.labels[start] = label;
    stack.assign(1, start);
    while (!stack.empty()) {
      const Eigen::Index idx = stack.back();
      stack.pop_back();
      ++size;
      const int x = int(idx % nx), y = int((idx / nx) % ny), z = int(idx / (Eigen::Index(nx) * ny));
      auto visit = [&](int xx, int yy, int zz) {
        if (xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny || zz >= nz) return;
        const Eigen::Index j = mask.index(xx, yy, zz);
        if (!mask.values[j] || out.labels[j]) return;
        out.labels[j] = label;
        stack.push_back(j);
      };
      visit(x - 1, y, z);
      visit(x + 1, y, z);
      visit(x, y - 1, z);
      visit(x, y + 1, z);
      visit(x, y, z - 1);
      visit(x, y, z + 1);
    }
    out.sizes.push_back(size);
  }
  return out;
}

}  // namespace lungsim
