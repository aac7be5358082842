#pragma once

#include <unistd.h>

#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "neuroflow/error.hpp"
#include "neuroflow/image.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("nf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline neuroflow::LumaFrame random_frame(int w, int h, std::mt19937& rng) {
  neuroflow::LumaFrame f(w, h);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& p : f.data) p = static_cast<std::uint8_t>(d(rng));
  return f;
}

/// Error code thrown by f, or nullopt when it returns normally.
template <class F>
std::optional<neuroflow::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const neuroflow::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing
