#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "lungsim/types.hpp"

namespace testutil {

/// Scratch directory removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lungsim_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

template <typename Scalar = float>
lungsim::Volume<Scalar> random_volume(const lungsim::Vec3i& dims, const lungsim::Vec3d& spacing, std::uint64_t seed,
                                      double lo = 0.0, double hi = 1.0) {
  lungsim::Volume<Scalar> v(dims, spacing, lungsim::Vec3d::Zero());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& x : v.values) x = Scalar(u(rng));
  return v;
}

inline lungsim::RowArray<double> random_map(int rows, int cols, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  lungsim::RowArray<double> m(rows, cols);
  for (auto& x : m.reshaped()) x = u(rng);
  return m;
}

}  // namespace testutil
