#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace traitlex {

// Every CLI command records its fully resolved configuration, input digests
// and outputs next to its primary output; `rerun` replays a manifest and must
// reproduce the output bytes exactly.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> params;  // resolved flags
  struct FileRef {
    std::string role;
    std::string path;
    std::string digest;  // fnv1a64 of the file bytes
  };
  std::vector<FileRef> inputs;
  std::vector<FileRef> outputs;

  void set_param(const std::string& key, const std::string& value);
  const std::string* param(const std::string& key) const;
  void add_input(const std::string& role, const std::string& path);
  void add_output(const std::string& role, const std::string& path);

  std::string serialize() const;
  static RunManifest parse(std::string_view json, std::string_view origin);
  static RunManifest load(const std::string& path);
  void save(const std::string& path) const;
};

inline std::string manifest_path_for(const std::string& output_path) {
  return output_path + ".manifest.json";
}

}  // namespace traitlex
