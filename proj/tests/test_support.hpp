#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

#include "relforge/mix.hpp"
#include "relforge/tsv.hpp"

namespace testsup {

// Unique scratch directory under the system temp dir; removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("relforge-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path write_temp(const TempDir& dir, const std::string& name,
                                        const std::string& content) {
  auto p = dir.file(name);
  relforge::tsv::write_file(p, content);
  return p;
}

inline std::string random_lower_word(relforge::MixRng& rng, std::size_t min_len,
                                     std::size_t max_len) {
  const std::size_t len = min_len + rng.next_below(max_len - min_len + 1);
  std::string w;
  for (std::size_t i = 0; i < len; ++i)
    w.push_back(static_cast<char>('a' + rng.next_below(26)));
  return w;
}

}  // namespace testsup
