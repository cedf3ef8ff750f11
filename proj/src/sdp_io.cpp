#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "barrier/sdp.hpp"

// Plain-text block format (0-based indices):
//
//   sdp
//   blocks <count>
//   <psd|nonneg|free> <size>          one line per block
//   constraints <m>
//   rhs <b_1> ... <b_m>
//   matrix <k> <nnz>                  k = 0 is C, k = i is A_i
//   <block> <row> <col> <value>       nnz lines, row <= col
//
// Lines starting with '#' are comments.

namespace barrier {

namespace {

const char* kind_name(BlockKind k) {
  switch (k) {
    case BlockKind::Psd:
      return "psd";
    case BlockKind::Nonneg:
      return "nonneg";
    case BlockKind::Free:
      return "free";
  }
  return "?";
}

void write_matrix(std::ostream& os, int k, const std::vector<SdpEntry<double>>& m) {
  os << "matrix " << k << " " << m.size() << "\n";
  for (const auto& e : m) os << e.block << " " << e.row << " " << e.col << " " << e.value << "\n";
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::istringstream line() {
    std::string s;
    while (std::getline(is_, s)) {
      ++lineno_;
      auto p = s.find_first_not_of(" \t\r");
      if (p == std::string::npos || s[p] == '#') continue;
      return std::istringstream(s);
    }
    fail("unexpected end of input");
    return {};
  }
  void expect(std::istringstream& ss, const std::string& word) {
    std::string w;
    ss >> w;
    if (w != word) fail("expected '" + word + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error("sdp file line " + std::to_string(lineno_) + ": " + msg);
  }

 private:
  std::istream& is_;
  int lineno_ = 0;
};

}  // namespace

void write_sdp(std::ostream& os, const SdpProblem<double>& p) {
  os << std::setprecision(17);
  os << "sdp\nblocks " << p.blocks.size() << "\n";
  for (const auto& b : p.blocks) os << kind_name(b.kind) << " " << b.size << "\n";
  os << "constraints " << p.num_constraints() << "\nrhs";
  for (double v : p.b) os << " " << v;
  os << "\n";
  write_matrix(os, 0, p.C);
  for (int i = 0; i < p.num_constraints(); ++i) write_matrix(os, i + 1, p.A[i]);
}

SdpProblem<double> read_sdp(std::istream& is) {
  Reader r(is);
  SdpProblem<double> p;
  {
    auto ss = r.line();
    r.expect(ss, "sdp");
  }
  int nb = 0;
  {
    auto ss = r.line();
    r.expect(ss, "blocks");
    if (!(ss >> nb) || nb <= 0) r.fail("bad block count");
  }
  for (int k = 0; k < nb; ++k) {
    auto ss = r.line();
    std::string kind;
    int size = 0;
    if (!(ss >> kind >> size) || size <= 0) r.fail("bad block line");
    if (kind == "psd")
      p.add_block(size, BlockKind::Psd);
    else if (kind == "nonneg")
      p.add_block(size, BlockKind::Nonneg);
    else if (kind == "free")
      p.add_block(size, BlockKind::Free);
    else
      r.fail("unknown block kind '" + kind + "'");
  }
  int m = 0;
  {
    auto ss = r.line();
    r.expect(ss, "constraints");
    if (!(ss >> m) || m < 0) r.fail("bad constraint count");
  }
  {
    auto ss = r.line();
    r.expect(ss, "rhs");
    for (int i = 0; i < m; ++i) {
      double v;
      if (!(ss >> v)) r.fail("rhs too short");
      p.add_constraint(v);
    }
  }
  for (int k = 0; k <= m; ++k) {
    auto ss = r.line();
    r.expect(ss, "matrix");
    int idx = -1;
    std::size_t nnz = 0;
    if (!(ss >> idx >> nnz) || idx < 0 || idx > m) r.fail("bad matrix header");
    auto& dest = idx == 0 ? p.C : p.A[idx - 1];
    for (std::size_t j = 0; j < nnz; ++j) {
      auto es = r.line();
      SdpEntry<double> e;
      if (!(es >> e.block >> e.row >> e.col >> e.value)) r.fail("bad entry");
      dest.push_back(e);
    }
  }
  p.validate();
  return p;
}

}  // namespace barrier
