#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "uxfb/corpus.hpp"
#include "uxfb/rng.hpp"

namespace testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("uxfb-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
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

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline uxfb::Comment comment(std::string id, std::string text, uxfb::LabelSet labels = {},
                             std::optional<uxfb::Sentiment> sentiment = std::nullopt,
                             std::string product = "p1") {
  uxfb::Comment c;
  c.id = std::move(id);
  c.product_id = std::move(product);
  c.timestamp = *uxfb::parse_rfc3339("2024-03-01T12:00:00Z");
  c.text = std::move(text);
  c.language = "en";
  c.sentiment = sentiment;
  c.labels = std::move(labels);
  c.label_source = c.labels.empty() ? uxfb::LabelSource::Unlabeled : uxfb::LabelSource::Human;
  return c;
}

}  // namespace testing
