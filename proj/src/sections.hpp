#pragma once

// Sectioned key = value text shared by certificate and problem files.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "barrier/parser.hpp"

namespace barrier::detail {

std::string trim(const std::string& s);

std::vector<std::string> split_list(const std::string& s);

struct Entry {
  std::string key, value;
  std::size_t key_pos = 0, value_pos = 0;
  // Continuation lines: (offset in value, offset in text) per segment.
  std::vector<std::pair<std::size_t, std::size_t>> segs;

  std::size_t at(std::size_t off) const {
    std::size_t pos = value_pos + off;
    for (const auto& [vo, to] : segs)
      if (off >= vo) pos = to + (off - vo);
    return pos;
  }
};

struct Section {
  std::string name;
  int index = -1;  // [kernel 2] -> 2
  std::size_t pos = 0;
  std::vector<Entry> entries;
};

// Plain numbers or constant expressions such as 1.19*pi^2.
double to_number(const Entry& e, const Constants& constants = {});

int to_int(const Entry& e);

// '#' comments; indented lines without '=' continue the previous value.
std::vector<Section> read_sections(const std::string& text);

}  // namespace barrier::detail
