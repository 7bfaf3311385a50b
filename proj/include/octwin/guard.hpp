#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "octwin/ocpn.hpp"
#include "octwin/value.hpp"

namespace octwin::guard {

struct SyntaxError : std::runtime_error {
  SyntaxError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)), position(position) {}
  std::size_t position;
};

struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RelOp { lt, le, eq, ne, ge, gt };
enum class AggregateFn { count, sum, min, max, avg };

std::string_view to_string(RelOp op);
std::string_view to_string(AggregateFn fn);

struct ValveRef {
  std::string name;
  bool operator==(const ValveRef&) const = default;
};
struct AttrRef {
  ObjectType object_type;
  std::string attribute;
  bool operator==(const AttrRef&) const = default;
};
struct Aggregate {
  AggregateFn fn;
  ObjectType object_type;
  std::string attribute;
  bool operator==(const Aggregate&) const = default;
};
struct NumberLiteral {
  double value;
  bool operator==(const NumberLiteral&) const = default;
};
struct StringLiteral {
  std::string value;
  bool operator==(const StringLiteral&) const = default;
};

using Term = std::variant<ValveRef, AttrRef, Aggregate, NumberLiteral, StringLiteral>;

class Formula;

struct TrueLiteral {
  bool operator==(const TrueLiteral&) const = default;
};
struct Comparison;
struct Not;
struct And;
struct Or;

// Immutable guard formula. Copies share structure.
class Formula {
 public:
  using Node = std::variant<TrueLiteral, Comparison, Not, And, Or>;

  Formula();  // TrueLiteral

  static Formula truth();
  static Formula compare(Term lhs, RelOp op, Term rhs);
  static Formula negate(Formula operand);
  static Formula conjoin(Formula lhs, Formula rhs);
  static Formula disjoin(Formula lhs, Formula rhs);

  const Node& node() const;
  bool is_true_literal() const;

  bool operator==(const Formula& other) const;

 private:
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Comparison {
  Term lhs;
  RelOp op;
  Term rhs;
  bool operator==(const Comparison&) const = default;
};
struct Not {
  Formula operand;
  bool operator==(const Not&) const = default;
};
struct And {
  Formula lhs, rhs;
  bool operator==(const And&) const = default;
};
struct Or {
  Formula lhs, rhs;
  bool operator==(const Or&) const = default;
};

/// Grammar:
///   formula := or_expr
///   or_expr := and_expr ("or" and_expr)*
///   and_expr := unary ("and" unary)*
///   unary := "not" unary | atom
///   atom := "true" | "(" formula ")" | term relop term
///   term := IDENT | IDENT "." IDENT | FN "(" IDENT "." IDENT ")" | NUMBER | STRING
/// A bare IDENT is a valve, a dotted one an object attribute. Identifiers may
/// contain hyphens.
Formula parse(std::string_view text);

/// Canonical text; parse(to_string(f)) == f.
std::string to_string(const Formula& f);
std::string to_string(const Term& t);

struct BoundObject {
  ObjectId id;
  AttributeMap attributes;
};

struct EvaluationContext {
  std::map<std::string, Value> valves;
  std::map<ObjectType, std::vector<BoundObject>> bound_objects;
};

/// Throws EvaluationError on a missing valve, a type mismatch, or a plain
/// attribute reference to a type with several bound objects. A missing
/// attribute makes its comparison false. The attribute "id" always resolves
/// to the object identifier.
bool evaluate(const Formula& f, const EvaluationContext& ctx);

std::set<std::string> referenced_valves(const Formula& f);
/// (object type, attribute) pairs from attribute references and aggregates.
std::set<std::pair<ObjectType, std::string>> referenced_attributes(const Formula& f);

}  // namespace octwin::guard
