#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace traitlex {

// 64-bit FNV-1a. Good enough to bind lexicons and models to a vocabulary;
// not a cryptographic digest.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

// Shortest decimal form that round-trips through a double. "-0" is
// normalized to "0" and integral values drop the trailing ".0", so the
// output is always a valid JSON number.
std::string format_double(double v);

std::string json_escape(std::string_view s);

// Append-only writer for canonical single-line JSON. All serialization in
// this project goes through it so that save -> load -> save is byte-stable.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view k);
  JsonWriter& value(std::string_view v);
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }
  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::uint64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& raw(std::string_view text);

  const std::string& str() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  void element_prefix();

  std::string out_;
  std::vector<bool> has_element_;
  bool pending_key_ = false;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);
std::string file_digest(const std::string& path);

// Splits on ',' and parses each field as double; throws on bad tokens.
std::vector<double> parse_double_list(std::string_view csv);

}  // namespace traitlex
