#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace octwin {

using PlaceId = std::string;
using TransitionId = std::string;
using ObjectId = std::string;
using ObjectType = std::string;

struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnablementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Place {
  PlaceId id;
  ObjectType object_type;
};

struct Transition {
  TransitionId id;
  std::optional<std::string> label;  // nullopt for silent transitions

  bool silent() const { return !label.has_value(); }
};

struct Arc {
  std::string source;
  std::string target;
  bool variable = false;
};

// Object-centric Petri net. Immutable once constructed; the constructor
// rejects duplicate ids, dangling arcs and non-bipartite arcs.
class Net {
 public:
  Net() = default;
  Net(std::vector<Place> places, std::vector<Transition> transitions, std::vector<Arc> arcs);

  const std::vector<Place>& places() const { return places_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<Arc>& arcs() const { return arcs_; }

  bool has_place(const PlaceId& id) const { return place_index_.count(id) != 0; }
  bool has_transition(const TransitionId& id) const { return transition_index_.count(id) != 0; }
  const Place& place(const PlaceId& id) const;
  const Transition& transition(const TransitionId& id) const;
  const ObjectType& type_of(const PlaceId& id) const { return place(id).object_type; }

  const std::vector<PlaceId>& inputs(const TransitionId& t) const;
  const std::vector<PlaceId>& outputs(const TransitionId& t) const;
  const std::vector<TransitionId>& producers(const PlaceId& p) const;
  const std::vector<TransitionId>& consumers(const PlaceId& p) const;

  bool is_variable(const std::string& source, const std::string& target) const;
  bool is_sink(const PlaceId& p) const { return consumers(p).empty(); }

  std::set<ObjectType> object_types() const;
  /// Object types of the input and output places of `t`.
  std::set<ObjectType> surrounding_types(const TransitionId& t) const;
  /// First transition carrying `label`, or nullptr.
  const Transition* find_by_label(const std::string& label) const;

 private:
  std::vector<Place> places_;
  std::vector<Transition> transitions_;
  std::vector<Arc> arcs_;
  std::unordered_map<std::string, std::size_t> place_index_;
  std::unordered_map<std::string, std::size_t> transition_index_;
  std::unordered_map<std::string, std::vector<PlaceId>> inputs_, outputs_;
  std::unordered_map<std::string, std::vector<TransitionId>> producers_, consumers_;
  std::set<std::pair<std::string, std::string>> variable_arcs_;
};

struct Token {
  PlaceId place;
  ObjectId object;

  auto operator<=>(const Token&) const = default;
};

// Multiset of tokens with explicit multiplicities.
class Marking {
 public:
  Marking() = default;
  Marking(std::initializer_list<Token> tokens);

  void add(const Token& t, std::size_t n = 1);
  /// Removes `n` copies; returns false (and changes nothing) if fewer exist.
  bool remove(const Token& t, std::size_t n = 1);
  std::size_t count(const Token& t) const;
  bool contains(const Token& t) const { return count(t) > 0; }
  std::size_t size() const;
  bool empty() const { return counts_.empty(); }

  const std::map<Token, std::size_t>& counts() const { return counts_; }
  std::set<ObjectId> objects() const;
  std::vector<Token> tokens_of(const ObjectId& object) const;
  std::map<PlaceId, std::size_t> per_place() const;

  bool operator==(const Marking&) const = default;

 private:
  std::map<Token, std::size_t> counts_;
};

using ObjectMap = std::map<ObjectType, std::set<ObjectId>>;

struct Binding {
  TransitionId transition;
  ObjectMap objects;

  const std::set<ObjectId>& objects_of(const ObjectType& type) const;
  bool operator==(const Binding&) const = default;
};

/// Throws StructuralError unless `b` is well formed for `net`: the transition
/// exists, the object map covers exactly its surrounding types, fixed arcs get
/// exactly one object, variable arcs at least one, and no object is bound
/// under two types.
void check_binding(const Net& net, const Binding& b);

bool is_binding_enabled(const Net& net, const Marking& m, const Binding& b);

/// Throws EnablementError if `b` is not enabled; `m` is never modified.
Marking fire(const Net& net, const Marking& m, const Binding& b);

/// Places upstream of `t`: its input places plus rel of every transition that
/// feeds them. Computed as a backward fixpoint so cyclic nets terminate.
std::set<PlaceId> rel(const Net& net, const TransitionId& t);

/// Throws StructuralError if some token sits in a place whose type differs
/// from the object's type in `types`.
void check_typed(const Net& net, const Marking& m, const std::map<ObjectId, ObjectType>& types);

}  // namespace octwin
