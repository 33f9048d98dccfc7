#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "vtab/core.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vtab-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
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
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline vtab::Series ramp_series(std::int64_t length, std::size_t variates = 1) {
  vtab::Series s;
  s.kind = variates == 1 ? vtab::SeriesKind::Univariate : vtab::SeriesKind::Multivariate;
  s.length = length;
  s.timestamps = vtab::regular_timestamps(length);
  s.values.assign(variates, std::vector<double>(static_cast<std::size_t>(length)));
  for (std::size_t m = 0; m < variates; ++m) {
    for (std::int64_t t = 0; t < length; ++t) s.values[m][static_cast<std::size_t>(t)] = 0.5 * t + 0.25 * m;
  }
  return s;
}

}  // namespace testutil
