#include "sections.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace barrier::detail {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double to_number(const Entry& e, const Constants& constants) {
  try {
    std::size_t used = 0;
    double v = std::stod(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    // Allow constant expressions such as 1.19*pi^2.
    try {
      return eval_expr(parse_expr(e.value), constants);
    } catch (const ParseError& pe) {
      throw ParseError("bad number for '" + e.key + "'", e.at(pe.position()));
    } catch (const std::exception&) {
      throw ParseError("bad number for '" + e.key + "'", e.value_pos);
    }
  }
}

int to_int(const Entry& e) {
  double v = to_number(e);
  if (v != std::floor(v) || v < 0 || v > 64) throw ParseError("'" + e.key + "' must be a small nonnegative integer", e.value_pos);
  return static_cast<int>(v);
}

std::vector<Section> read_sections(const std::string& text) {
  std::vector<Section> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t lead = line.find_first_not_of(" \t\r");
    std::string t = trim(line);
    if (!t.empty()) {
      const std::size_t at = pos + lead;
      const bool indented = lead > 0;
      if (indented && !out.empty() && !out.back().entries.empty() && line.find('=') == std::string::npos) {
        Entry& prev = out.back().entries.back();
        prev.value += ' ';
        prev.segs.emplace_back(prev.value.size(), at);
        prev.value += t;
      } else if (t.front() == '[') {
        if (t.back() != ']') throw ParseError("unterminated section header", at);
        std::stringstream ss(t.substr(1, t.size() - 2));
        Section s;
        s.pos = at;
        ss >> s.name;
        std::string idx;
        if (ss >> idx) {
          try {
            s.index = std::stoi(idx);
          } catch (const std::exception&) {
            throw ParseError("bad section index", at);
          }
          if (s.index < 0) throw ParseError("bad section index", at);
        }
        out.push_back(std::move(s));
      } else {
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", at);
        if (out.empty()) throw ParseError("entry before any section", at);
        Entry e;
        e.key = trim(line.substr(0, eq));
        e.key_pos = at;
        std::string rest = line.substr(eq + 1);
        std::size_t vlead = rest.find_first_not_of(" \t\r");
        e.value = trim(rest);
        e.value_pos = pos + eq + 1 + (vlead == std::string::npos ? 0 : vlead);
        if (e.key.empty()) throw ParseError("empty key", at);
        if (e.value.empty()) throw ParseError("empty value for '" + e.key + "'", e.value_pos);
        out.back().entries.push_back(std::move(e));
      }
    }
    pos = end + 1;
  }
  return out;
}

}  // namespace barrier::detail
