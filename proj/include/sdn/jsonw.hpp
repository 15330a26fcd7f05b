// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace sdn {

// Minimal JSON emitter with caller-fixed key order and fixed number formatting
// (%.17g for reals), so emitted documents are byte-stable across runs.
class JsonWriter {
 public:
  JsonWriter& begin_obj() {
    comma();
    buf_ += '{';
    need_comma_ = false;
    return *this;
  }
  JsonWriter& end_obj() {
    buf_ += '}';
    need_comma_ = true;
    return *this;
  }
  JsonWriter& begin_arr() {
    comma();
    buf_ += '[';
    need_comma_ = false;
    return *this;
  }
  JsonWriter& end_arr() {
    buf_ += ']';
    need_comma_ = true;
    return *this;
  }
  JsonWriter& key(const std::string& k) {
    comma();
    append_string(k);
    buf_ += ':';
    need_comma_ = false;
    return *this;
  }
  JsonWriter& str(const std::string& v) {
    comma();
    append_string(v);
    need_comma_ = true;
    return *this;
  }
  JsonWriter& num(double v) {
    comma();
    char tmp[40];
    std::snprintf(tmp, sizeof(tmp), "%.17g", v);
    buf_ += tmp;
    need_comma_ = true;
    return *this;
  }
  JsonWriter& num(int64_t v) {
    comma();
    buf_ += std::to_string(v);
    need_comma_ = true;
    return *this;
  }
  JsonWriter& num(int v) { return num(static_cast<int64_t>(v)); }
  JsonWriter& num(uint64_t v) {
    comma();
    buf_ += std::to_string(v);
    need_comma_ = true;
    return *this;
  }
  JsonWriter& num(uint32_t v) { return num(static_cast<uint64_t>(v)); }
  JsonWriter& boolean(bool v) {
    comma();
    buf_ += v ? "true" : "false";
    need_comma_ = true;
    return *this;
  }

  template <typename T>
  JsonWriter& num_array(const std::vector<T>& vs) {
    begin_arr();
    for (const T& v : vs) num(v);
    return end_arr();
  }
  JsonWriter& real_array(const double* vs, int n) {
    begin_arr();
    for (int i = 0; i < n; ++i) num(vs[i]);
    return end_arr();
  }

  const std::string& text() const { return buf_; }

 private:
  void comma() {
    if (need_comma_) buf_ += ',';
  }
  void append_string(const std::string& s) {
    buf_ += '"';
    for (char c : s) {
      switch (c) {
        case '"': buf_ += "\\\""; break;
        case '\\': buf_ += "\\\\"; break;
        case '\n': buf_ += "\\n"; break;
        case '\t': buf_ += "\\t"; break;
        case '\r': buf_ += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char tmp[8];
            std::snprintf(tmp, sizeof(tmp), "\\u%04x", c);
            buf_ += tmp;
          } else {
            buf_ += c;
          }
      }
    }
    buf_ += '"';
  }

  std::string buf_;
  bool need_comma_ = false;
};

}  // namespace sdn
