#include "traitlex/manifest.hpp"

#include <nlohmann/json.hpp>

#include "traitlex/json_util.hpp"
#include "traitlex/types.hpp"

namespace traitlex {

void RunManifest::set_param(const std::string& key, const std::string& value) {
  for (auto& [k, v] : params) {
    if (k == key) {
      v = value;
      return;
    }
  }
  params.emplace_back(key, value);
}

const std::string* RunManifest::param(const std::string& key) const {
  for (const auto& [k, v] : params)
    if (k == key) return &v;
  return nullptr;
}

void RunManifest::add_input(const std::string& role, const std::string& path) {
  inputs.push_back({role, path, file_digest(path)});
}

void RunManifest::add_output(const std::string& role, const std::string& path) {
  outputs.push_back({role, path, file_digest(path)});
}

std::string RunManifest::serialize() const {
  JsonWriter w;
  w.begin_object();
  w.key("version").value(std::int64_t{1});
  w.key("command").value(command);
  w.key("params").begin_object();
  for (const auto& [k, v] : params) w.key(k).value(v);
  w.end_object();
  auto files = [&](const char* key, const std::vector<FileRef>& refs) {
    w.key(key).begin_array();
    for (const auto& f : refs) {
      w.begin_object()
          .key("role").value(f.role)
          .key("path").value(f.path)
          .key("digest").value(f.digest)
          .end_object();
    }
    w.end_array();
  };
  files("inputs", inputs);
  files("outputs", outputs);
  w.end_object();
  std::string out = w.take();
  out += '\n';
  return out;
}

RunManifest RunManifest::parse(std::string_view json_text, std::string_view origin) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(std::string(origin) + ": not a JSON manifest");
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw Error(std::string(origin) + ": unsupported manifest version");
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  for (const auto& [k, v] : j.at("params").items())
    m.params.emplace_back(k, v.get<std::string>());
  auto files = [&](const char* key, std::vector<FileRef>& refs) {
    for (const auto& f : j.at(key)) {
      refs.push_back({f.at("role").get<std::string>(),
                      f.at("path").get<std::string>(),
                      f.at("digest").get<std::string>()});
    }
  };
  files("inputs", m.inputs);
  files("outputs", m.outputs);
  return m;
}

RunManifest RunManifest::load(const std::string& path) {
  return parse(read_text_file(path), path);
}

void RunManifest::save(const std::string& path) const {
  write_text_file(path, serialize());
}

}  // namespace traitlex
