#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "barrier/affine.hpp"
#include "barrier/polynomial.hpp"

namespace barrier {

// A function of x carried through its jet: value, first derivative, ...
// State fields are named u0,u1,..; auxiliary fields v1 (value) and dv1 (slope).
struct Field {
  std::string name;
  std::vector<std::string> jets;
};

Field state_field(const std::string& prefix, int max_order);
Field aux_field(int index);

// Variable layout shared by all forms of one problem: t, x, every jet of
// every field, and the boundary value of every jet at every breakpoint.
class JetSpace {
 public:
  JetSpace(std::vector<Field> fields, std::vector<double> interior_breaks = {});

  const RingPtr& ring() const { return ring_; }
  int t() const { return 0; }
  int x() const { return 1; }
  const std::vector<Field>& fields() const { return fields_; }
  int field(const std::string& name) const;
  int max_order(int field) const { return static_cast<int>(fields_[field].jets.size()) - 1; }

  int jet(int field, int order) const;
  int jet(const std::string& field, int order) const { return jet(this->field(field), order); }
  // (field, order) when var is a jet variable.
  std::optional<std::pair<int, int>> jet_of(int var) const;

  // All breakpoints including 0 and 1.
  const std::vector<double>& points() const { return points_; }
  int point_index(double x) const;  // throws when x is not a breakpoint
  static std::string tag(std::size_t index, std::size_t npoints);
  int boundary(int field, int order, double x) const;
  std::optional<std::pair<int, int>> boundary_of(int var) const;  // (field, order)
  bool is_boundary(int var) const { return boundary_of(var).has_value(); }
  double boundary_point(int var) const;

  // Masks over ring variables.
  std::vector<bool> tx_mask() const;
  std::vector<bool> jet_mask() const;
  std::vector<bool> boundary_mask() const;

 private:
  std::vector<Field> fields_;
  std::vector<double> points_;
  RingPtr ring_;
  std::vector<std::vector<int>> jet_ids_;
  std::vector<std::vector<std::vector<int>>> bnd_ids_;  // [field][order][point]
  std::vector<std::pair<int, int>> jet_rev_, bnd_rev_;
  std::vector<int> bnd_point_;
};

enum class TimeKind { Forward, Backward };

// Sum_j coeffs[j] * boundary_var_j = value(t)
struct BoundaryRelation {
  std::vector<std::pair<int, double>> coeffs;
  Poly value;
};

struct Dynamics {
  TimeKind kind = TimeKind::Forward;
  int field = 0;  // the evolving state field
  Poly rhs;       // d/dt u (forward) or -d/dt u (backward)
  std::vector<BoundaryRelation> bcs;

  // d/dt u irrespective of orientation.
  Poly time_derivative() const { return kind == TimeKind::Forward ? rhs : -rhs; }
};

// Dirichlet pin u_order(t, x) = value(t).
BoundaryRelation pin(const JetSpace& js, int field, int order, double x, const Poly& value);

// Integral functional: sum over pieces of int_{a_i}^{b_i} bulk_i dx + boundary + scalar.
template <typename C>
struct IntegralForm {
  std::vector<double> breaks{0.0, 1.0};
  std::vector<Polynomial<C>> bulk;
  Polynomial<C> boundary;
  Polynomial<C> scalar;

  explicit IntegralForm(const RingPtr& ring) : bulk(1, Polynomial<C>(ring)), boundary(ring), scalar(ring) {}
  IntegralForm(const RingPtr& ring, std::vector<double> br)
      : breaks(std::move(br)), bulk(breaks.size() - 1, Polynomial<C>(ring)), boundary(ring), scalar(ring) {}

  int pieces() const { return static_cast<int>(bulk.size()); }
};

using Form = IntegralForm<double>;
using AffineForm = IntegralForm<AffineExpr>;

// Total x-derivative: d/dx acting on x and shifting every jet by one order.
template <typename C>
Polynomial<C> total_derivative(const Polynomial<C>& p, const JetSpace& js);

// p(x = a, jets -> boundary values at a).
template <typename C>
Polynomial<C> at_boundary(const Polynomial<C>& p, const JetSpace& js, double a);

template <typename C>
IntegralForm<C> lie_derivative(const IntegralForm<C>& form, const Dynamics& dyn, const JetSpace& js);

struct IbpReport {
  bool reached = true;
  std::vector<int> remaining_order;  // per field
};

template <typename C>
IntegralForm<C> integrate_by_parts(const IntegralForm<C>& form, int target_order, const JetSpace& js,
                                   IbpReport* report = nullptr);

template <typename C>
IntegralForm<C> apply_bcs(const IntegralForm<C>& form, const std::vector<BoundaryRelation>& bcs, const JetSpace& js);

// Relations implied by differentiating pinned values in time:
// if u(t, x_b) = psi(t) then (d/dt u)(t, x_b) = psi'(t), solved where linear.
std::vector<BoundaryRelation> derived_relations(const Dynamics& dyn, const JetSpace& js);

// u(t, x0) written as the anchored integral u(t, 0) + int_0^x0 u_x (or the
// mirror image when only the right end is pinned).
Form point_eval_functional(double x0, const Dynamics& dyn, const JetSpace& js);

// Evaluates a form on concrete states: functions[field] is a polynomial in
// (t, x) over the space's ring.
double evaluate(const Form& form, const JetSpace& js, const std::map<int, Poly>& functions, double t);

// Adds two forms with compatible pieces (the result uses the union of breaks).
template <typename C>
IntegralForm<C> operator+(const IntegralForm<C>& a, const IntegralForm<C>& b);

template <typename C>
IntegralForm<C> refine(const IntegralForm<C>& f, const std::vector<double>& breaks);

AffineForm lift(const Form& f);
Form evaluate_decisions(const AffineForm& f, const std::vector<double>& z);

}  // namespace barrier
