#include "barrier/problem_file.hpp"

#include <cmath>
#include <map>
#include <set>

#include "barrier/parser.hpp"
#include "sections.hpp"

namespace barrier {

using namespace detail;

namespace {

const std::map<std::string, std::set<std::string>> kKeys = {
    {"problem", {"orientation", "space", "domain", "horizon", "t0", "breaks"}},
    {"parameters", {}},
    {"dynamics", {"a", "b", "c", "h", "rhs"}},
    {"boundary", {"left", "right"}},
    {"terminal", {"f"}},
    {"initial_set", {"g"}},
    {"target", {"kind", "at", "unsafe"}},
    {"solver",
     {"degree", "jet_order", "zeta", "multiplier_degree", "slack_degree", "eps", "gamma_bracket", "bisect_tol", "param",
      "param_range", "param_tol"}},
    {"oracle", {"paths", "dt", "seed", "bridge", "grid", "x", "payoff", "initial", "t_end", "out_dt"}},
};

class Reader {
 public:
  explicit Reader(const std::string& text) : secs_(read_sections(text)) {
    std::set<std::string> seen;
    for (const auto& s : secs_) {
      auto it = kKeys.find(s.name);
      if (it == kKeys.end() || s.index >= 0) throw ParseError("unknown section [" + s.name + "]", s.pos);
      if (!seen.insert(s.name).second) throw ParseError("duplicate section [" + s.name + "]", s.pos);
      std::set<std::string> keys;
      for (const auto& e : s.entries) {
        if (s.name != "parameters" && !it->second.count(e.key))
          throw ParseError("unknown key '" + e.key + "' in [" + s.name + "]", e.key_pos);
        if (e.key != "initial" && !keys.insert(e.key).second) throw ParseError("duplicate key '" + e.key + "'", e.key_pos);
      }
    }
  }

  const Section* section(const std::string& name) const {
    for (const auto& s : secs_)
      if (s.name == name) return &s;
    return nullptr;
  }

  const Section& require(const std::string& name, const std::string& why) const {
    if (const Section* s = section(name)) return *s;
    throw ParseError("missing [" + name + "] section (" + why + ")", end_pos());
  }

  const Entry* get(const std::string& sec, const std::string& key) const {
    if (const Section* s = section(sec))
      for (const auto& e : s->entries)
        if (e.key == key) return &e;
    return nullptr;
  }

  const Entry& need(const std::string& sec, const std::string& key) const {
    if (const Entry* e = get(sec, key)) return *e;
    const Section* s = section(sec);
    throw ParseError("missing key '" + key + "' in [" + sec + "]", s ? s->pos : end_pos());
  }

  std::vector<const Entry*> all(const std::string& sec, const std::string& key) const {
    std::vector<const Entry*> out;
    if (const Section* s = section(sec))
      for (const auto& e : s->entries)
        if (e.key == key) out.push_back(&e);
    return out;
  }

  std::size_t end_pos() const { return secs_.empty() ? 0 : secs_.back().pos; }

 private:
  std::vector<Section> secs_;
};

std::pair<double, double> number_pair(const Entry& e, const Constants& c) {
  auto v = split_list(e.value);
  if (v.size() != 2) throw ParseError("'" + e.key + "' needs two comma-separated values", e.value_pos);
  auto item = [&](const std::string& s) {
    return to_number(Entry{e.key, s, e.key_pos, e.value_pos + e.value.find(s), {}}, c);
  };
  return {item(v[0]), item(v[1])};
}

// Literal must expand to a polynomial over t, the space variable and jets.
void check_poly(const Entry& e, const RingPtr& ring, const Constants& c) {
  try {
    parse_poly(e.value, ring, c);
  } catch (const ParseError& pe) {
    throw ParseError(std::string(pe.what()).substr(0, std::string(pe.what()).rfind(" at position")) + " in '" + e.key +
                         "'",
                     e.at(pe.position()));
  } catch (const std::exception& ex) {
    throw ParseError(std::string(ex.what()) + " in '" + e.key + "'", e.value_pos);
  }
}

void check_numeric(const Entry& e, const std::string& var, const Constants& c) {
  Constants probe = c;
  probe[var] = 0.5;
  probe["t"] = 0.5;
  try {
    eval_expr(parse_expr(e.value), probe);
  } catch (const ParseError& pe) {
    throw ParseError("bad expression in '" + e.key + "'", e.at(pe.position()));
  } catch (const std::exception&) {
    throw ParseError("bad expression in '" + e.key + "'", e.value_pos);
  }
}

}  // namespace

ProblemFile parse_problem_file(const std::string& text) {
  if (trim(text).empty()) throw ParseError("empty problem file", 0);
  Reader r(text);
  ProblemFile pf;
  ProblemSpec& p = pf.spec;

  r.require("problem", "orientation and domain");
  if (const Section* s = r.section("parameters")) {
    for (const auto& e : s->entries) {
      if (e.key == "t" || e.key == "pi" || e.key == "e") throw ParseError("reserved parameter name '" + e.key + "'", e.key_pos);
      p.constants[e.key] = to_number(e, p.constants);
    }
  }
  const Constants& C = p.constants;

  const Entry& orient = r.need("problem", "orientation");
  if (orient.value == "backward")
    p.orientation = TimeKind::Backward;
  else if (orient.value == "forward")
    p.orientation = TimeKind::Forward;
  else
    throw ParseError("orientation must be backward or forward", orient.value_pos);
  const bool backward = p.orientation == TimeKind::Backward;

  if (const Entry* e = r.get("problem", "space")) {
    if (e->value == "t" || C.count(e->value) || e->value.find_first_of(" \t,*+-/^()") != std::string::npos)
      throw ParseError("bad space variable name", e->value_pos);
    p.space = e->value;
  }
  {
    const Entry& e = r.need("problem", "domain");
    auto [lo, hi] = number_pair(e, C);
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      throw ParseError("domain endpoints must be finite with left < right", e.value_pos);
    p.lo = lo;
    p.hi = hi;
  }
  if (const Entry* e = r.get("problem", "horizon")) {
    p.horizon = to_number(*e, C);
    if (!(p.horizon > 0)) throw ParseError("horizon must be positive", e->value_pos);
  } else if (backward) {
    r.need("problem", "horizon");
  }
  if (const Entry* e = r.get("problem", "t0")) {
    p.t0 = to_number(*e, C);
    if (!(*p.t0 >= 0) || (backward && *p.t0 > p.horizon)) throw ParseError("t0 out of range", e->value_pos);
  }
  if (const Entry* e = r.get("problem", "breaks")) {
    for (const auto& b : split_list(e->value)) {
      double v = to_number(Entry{e->key, b, e->key_pos, e->value_pos + e->value.find(b), {}}, C);
      if (!(v > p.lo && v < p.hi)) throw ParseError("breakpoint outside the domain", e->value_pos);
      p.breaks.push_back(v);
    }
  }

  std::vector<std::string> names{"t", p.space, "u0", "u1", "u2", "u3", "u4"};
  RingPtr ring = make_ring(names);
  RingPtr txr = make_ring({"t", p.space});

  if (backward) {
    r.require("terminal", "backward problems need terminal data f");
    r.require("dynamics", "diffusion a and optional b, c, h");
    const Entry& a = r.need("dynamics", "a");
    check_poly(a, txr, C);
    p.a = a.value;
    for (auto [key, dst] : {std::pair{"b", &p.b}, {"c", &p.c}, {"h", &p.h}})
      if (const Entry* e = r.get("dynamics", key)) {
        check_poly(*e, txr, C);
        *dst = e->value;
      }
    if (r.get("dynamics", "rhs")) throw ParseError("rhs belongs to forward problems", r.get("dynamics", "rhs")->key_pos);
    const Entry& f = r.need("terminal", "f");
    check_poly(f, txr, C);
    p.f = f.value;
    if (const Entry* k = r.get("target", "kind")) {
      if (k->value == "average") {
        p.target = Target::Average;
      } else if (k->value == "point") {
        p.target = Target::Point;
        const Entry& at = r.need("target", "at");
        p.point = to_number(at, C);
        if (!(p.point > p.lo && p.point < p.hi)) throw ParseError("point target must lie inside the domain", at.value_pos);
      } else {
        throw ParseError("target kind must be average or point", k->value_pos);
      }
    }
    if (r.get("target", "unsafe")) throw ParseError("unsafe sets belong to forward problems", r.get("target", "unsafe")->key_pos);
  } else {
    r.require("dynamics", "forward problems need rhs");
    r.require("initial_set", "forward problems need the initial set g");
    r.require("target", "forward problems need the unsafe set");
    const Entry& rhs = r.need("dynamics", "rhs");
    check_poly(rhs, ring, C);
    p.rhs = rhs.value;
    const Entry& g = r.need("initial_set", "g");
    check_poly(g, ring, C);
    p.initial_set = g.value;
    const Entry& y = r.need("target", "unsafe");
    check_poly(y, ring, C);
    p.unsafe_set = y.value;
    for (const char* k : {"a", "b", "c", "h"})
      if (const Entry* e = r.get("dynamics", k)) throw ParseError("forward problems take rhs only", e->key_pos);
  }
  RingPtr tr = make_ring({"t"});
  if (const Entry* e = r.get("boundary", "left")) {
    check_poly(*e, tr, C);
    p.left = e->value;
  }
  if (const Entry* e = r.get("boundary", "right")) {
    check_poly(*e, tr, C);
    p.right = e->value;
  }

  auto int_key = [&](const char* key, int& dst) {
    if (const Entry* e = r.get("solver", key)) dst = to_int(*e);
  };
  int_key("degree", pf.degrees.kernel);
  int_key("jet_order", pf.degrees.jet_order);
  int_key("zeta", pf.degrees.zeta);
  int_key("multiplier_degree", pf.degrees.multiplier);
  int_key("slack_degree", pf.degrees.slack);
  if (pf.degrees.kernel < 1) throw ParseError("degree must be positive", r.need("solver", "degree").value_pos);
  if (pf.degrees.jet_order > 2) throw ParseError("jet_order above 2 is not supported", r.need("solver", "jet_order").value_pos);
  if (const Entry* e = r.get("solver", "eps")) pf.eps = to_number(*e, C);
  if (const Entry* e = r.get("solver", "gamma_bracket")) {
    pf.gamma_bracket = number_pair(*e, C);
    if (!(pf.gamma_bracket->first < pf.gamma_bracket->second)) throw ParseError("gamma_bracket needs lo < hi", e->value_pos);
  }
  if (const Entry* e = r.get("solver", "bisect_tol")) {
    pf.bisect_tol = to_number(*e, C);
    if (!(pf.bisect_tol > 0)) throw ParseError("bisect_tol must be positive", e->value_pos);
  }
  if (const Entry* e = r.get("solver", "param")) {
    if (!C.count(e->value)) throw ParseError("param must name an entry of [parameters]", e->value_pos);
    pf.param = e->value;
  }
  if (const Entry* e = r.get("solver", "param_range")) {
    pf.param_range = number_pair(*e, C);
    if (!(pf.param_range->first < pf.param_range->second)) throw ParseError("param_range needs lo < hi", e->value_pos);
  }
  if (const Entry* e = r.get("solver", "param_tol")) pf.param_tol = to_number(*e, C);

  if (const Entry* e = r.get("oracle", "paths")) {
    double v = to_number(*e, C);
    if (!(v >= 1) || v != std::floor(v)) throw ParseError("paths must be a positive integer", e->value_pos);
    pf.paths = static_cast<long>(v);
  }
  if (const Entry* e = r.get("oracle", "dt")) {
    pf.dt = to_number(*e, C);
    if (!(pf.dt > 0)) throw ParseError("dt must be positive", e->value_pos);
  }
  if (const Entry* e = r.get("oracle", "seed")) {
    double v = to_number(*e, C);
    if (!(v >= 0) || v != std::floor(v)) throw ParseError("seed must be a nonnegative integer", e->value_pos);
    pf.seed = static_cast<std::uint64_t>(v);
  }
  if (const Entry* e = r.get("oracle", "bridge")) {
    if (e->value != "true" && e->value != "false") throw ParseError("bridge must be true or false", e->value_pos);
    pf.bridge = e->value == "true";
  }
  if (const Entry* e = r.get("oracle", "grid")) {
    auto [nx, nt] = number_pair(*e, C);
    if (!(nx >= 8 && nt >= 8) || nx != std::floor(nx) || nt != std::floor(nt))
      throw ParseError("grid needs integers nx, nt >= 8", e->value_pos);
    pf.nx = static_cast<int>(nx);
    pf.nt = static_cast<int>(nt);
  }
  if (const Entry* e = r.get("oracle", "x")) {
    pf.mc_x = to_number(*e, C);
    if (!(*pf.mc_x >= p.lo && *pf.mc_x <= p.hi)) throw ParseError("x must lie in the domain", e->value_pos);
  }
  if (const Entry* e = r.get("oracle", "payoff")) {
    check_numeric(*e, p.space, C);
    pf.payoff = e->value;
  }
  for (const Entry* e : r.all("oracle", "initial")) {
    check_numeric(*e, p.space, C);
    pf.initial.push_back(e->value);
  }
  if (const Entry* e = r.get("oracle", "t_end")) {
    pf.t_end = to_number(*e, C);
    if (!(pf.t_end > 0)) throw ParseError("t_end must be positive", e->value_pos);
  }
  if (const Entry* e = r.get("oracle", "out_dt")) {
    pf.out_dt = to_number(*e, C);
    if (!(pf.out_dt > 0)) throw ParseError("out_dt must be positive", e->value_pos);
  }
  return pf;
}

ProblemSpec with_parameter(const ProblemSpec& spec, const std::string& name, double value) {
  ProblemSpec p = spec;
  p.constants[name] = value;
  return p;
}

}  // namespace barrier
