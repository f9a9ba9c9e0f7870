#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "patchselect/gpr_core.hpp"
#include "patchselect/rng.hpp"

namespace testsupport {

inline patchselect::BScan random_bscan(int t, int x, std::uint64_t seed, patchselect::LaneId lane = 0,
                                       patchselect::RunId run = 0) {
  patchselect::Rng rng(seed);
  patchselect::BScan b(t, x, 0.05, lane, run);
  for (double& v : b.samples()) v = rng.normal();
  return b;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  patchselect::Rng rng(seed);
  std::vector<double> v(n);
  for (double& e : v) e = rng.uniform(lo, hi);
  return v;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("patchselect_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
