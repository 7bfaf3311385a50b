#include "octwin/ocpn.hpp"

#include <deque>

namespace octwin {

namespace {
const std::vector<std::string> kNone;
const std::set<ObjectId> kNoObjects;
}  // namespace

Net::Net(std::vector<Place> places, std::vector<Transition> transitions, std::vector<Arc> arcs)
    : places_(std::move(places)), transitions_(std::move(transitions)), arcs_(std::move(arcs)) {
  for (std::size_t i = 0; i < places_.size(); ++i) {
    const auto& p = places_[i];
    if (p.id.empty()) throw StructuralError("place with empty id");
    if (p.object_type.empty()) throw StructuralError("place " + p.id + " has no object type");
    if (!place_index_.emplace(p.id, i).second) throw StructuralError("duplicate place id " + p.id);
  }
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    const auto& t = transitions_[i];
    if (t.id.empty()) throw StructuralError("transition with empty id");
    if (place_index_.count(t.id)) throw StructuralError("id " + t.id + " used for a place and a transition");
    if (!transition_index_.emplace(t.id, i).second) throw StructuralError("duplicate transition id " + t.id);
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& a : arcs_) {
    bool src_place = has_place(a.source), src_trans = has_transition(a.source);
    bool dst_place = has_place(a.target), dst_trans = has_transition(a.target);
    if (!(src_place || src_trans)) throw StructuralError("arc source " + a.source + " does not exist");
    if (!(dst_place || dst_trans)) throw StructuralError("arc target " + a.target + " does not exist");
    if (src_place == dst_place)
      throw StructuralError("arc " + a.source + " -> " + a.target + " must connect a place and a transition");
    if (!seen.emplace(a.source, a.target).second)
      throw StructuralError("duplicate arc " + a.source + " -> " + a.target);
    if (src_place) {
      inputs_[a.target].push_back(a.source);
      consumers_[a.source].push_back(a.target);
    } else {
      outputs_[a.source].push_back(a.target);
      producers_[a.target].push_back(a.source);
    }
    if (a.variable) variable_arcs_.emplace(a.source, a.target);
  }
}

const Place& Net::place(const PlaceId& id) const {
  auto it = place_index_.find(id);
  if (it == place_index_.end()) throw StructuralError("unknown place " + id);
  return places_[it->second];
}

const Transition& Net::transition(const TransitionId& id) const {
  auto it = transition_index_.find(id);
  if (it == transition_index_.end()) throw StructuralError("unknown transition " + id);
  return transitions_[it->second];
}

const std::vector<PlaceId>& Net::inputs(const TransitionId& t) const {
  auto it = inputs_.find(t);
  return it == inputs_.end() ? kNone : it->second;
}
const std::vector<PlaceId>& Net::outputs(const TransitionId& t) const {
  auto it = outputs_.find(t);
  return it == outputs_.end() ? kNone : it->second;
}
const std::vector<TransitionId>& Net::producers(const PlaceId& p) const {
  auto it = producers_.find(p);
  return it == producers_.end() ? kNone : it->second;
}
const std::vector<TransitionId>& Net::consumers(const PlaceId& p) const {
  auto it = consumers_.find(p);
  return it == consumers_.end() ? kNone : it->second;
}

bool Net::is_variable(const std::string& source, const std::string& target) const {
  return variable_arcs_.count({source, target}) != 0;
}

std::set<ObjectType> Net::object_types() const {
  std::set<ObjectType> out;
  for (const auto& p : places_) out.insert(p.object_type);
  return out;
}

std::set<ObjectType> Net::surrounding_types(const TransitionId& t) const {
  std::set<ObjectType> out;
  for (const auto& p : inputs(t)) out.insert(type_of(p));
  for (const auto& p : outputs(t)) out.insert(type_of(p));
  return out;
}

const Transition* Net::find_by_label(const std::string& label) const {
  for (const auto& t : transitions_)
    if (t.label && *t.label == label) return &t;
  return nullptr;
}

Marking::Marking(std::initializer_list<Token> tokens) {
  for (const auto& t : tokens) add(t);
}

void Marking::add(const Token& t, std::size_t n) {
  if (n) counts_[t] += n;
}

bool Marking::remove(const Token& t, std::size_t n) {
  auto it = counts_.find(t);
  if (it == counts_.end() || it->second < n) return false;
  it->second -= n;
  if (it->second == 0) counts_.erase(it);
  return true;
}

std::size_t Marking::count(const Token& t) const {
  auto it = counts_.find(t);
  return it == counts_.end() ? 0 : it->second;
}

std::size_t Marking::size() const {
  std::size_t n = 0;
  for (const auto& [_, c] : counts_) n += c;
  return n;
}

std::set<ObjectId> Marking::objects() const {
  std::set<ObjectId> out;
  for (const auto& [t, _] : counts_) out.insert(t.object);
  return out;
}

std::vector<Token> Marking::tokens_of(const ObjectId& object) const {
  std::vector<Token> out;
  for (const auto& [t, c] : counts_)
    if (t.object == object) out.insert(out.end(), c, t);
  return out;
}

std::map<PlaceId, std::size_t> Marking::per_place() const {
  std::map<PlaceId, std::size_t> out;
  for (const auto& [t, c] : counts_) out[t.place] += c;
  return out;
}

const std::set<ObjectId>& Binding::objects_of(const ObjectType& type) const {
  auto it = objects.find(type);
  return it == objects.end() ? kNoObjects : it->second;
}

void check_binding(const Net& net, const Binding& b) {
  if (!net.has_transition(b.transition)) throw StructuralError("unknown transition " + b.transition);
  const auto types = net.surrounding_types(b.transition);
  for (const auto& type : types)
    if (!b.objects.count(type))
      throw StructuralError("binding of " + b.transition + " lacks object type " + type);
  std::map<ObjectId, ObjectType> owner;
  for (const auto& [type, ids] : b.objects) {
    if (!types.count(type))
      throw StructuralError("binding of " + b.transition + " names unrelated object type " + type);
    for (const auto& id : ids) {
      auto [it, fresh] = owner.emplace(id, type);
      if (!fresh) throw StructuralError("object " + id + " bound under two types");
    }
  }
  auto check_arc = [&](const PlaceId& p, bool variable) {
    const auto n = b.objects_of(net.type_of(p)).size();
    if (variable && n < 1)
      throw StructuralError("variable arc at " + p + " of " + b.transition + " needs at least one object");
    if (!variable && n != 1)
      throw StructuralError("arc at " + p + " of " + b.transition + " needs exactly one object, got " +
                            std::to_string(n));
  };
  for (const auto& p : net.inputs(b.transition)) check_arc(p, net.is_variable(p, b.transition));
  for (const auto& p : net.outputs(b.transition)) check_arc(p, net.is_variable(b.transition, p));
}

bool is_binding_enabled(const Net& net, const Marking& m, const Binding& b) {
  check_binding(net, b);
  for (const auto& p : net.inputs(b.transition))
    for (const auto& oi : b.objects_of(net.type_of(p)))
      if (!m.contains({p, oi})) return false;
  return true;
}

Marking fire(const Net& net, const Marking& m, const Binding& b) {
  if (!is_binding_enabled(net, m, b)) throw EnablementError("binding of " + b.transition + " is not enabled");
  Marking out = m;
  for (const auto& p : net.inputs(b.transition))
    for (const auto& oi : b.objects_of(net.type_of(p))) out.remove({p, oi});
  for (const auto& p : net.outputs(b.transition))
    for (const auto& oi : b.objects_of(net.type_of(p))) out.add({p, oi});
  return out;
}

std::set<PlaceId> rel(const Net& net, const TransitionId& t) {
  net.transition(t);  // throws on unknown ids
  std::set<PlaceId> places;
  std::set<TransitionId> visited{t};
  std::deque<TransitionId> work{t};
  while (!work.empty()) {
    auto cur = work.front();
    work.pop_front();
    for (const auto& p : net.inputs(cur)) {
      places.insert(p);
      for (const auto& feeder : net.producers(p))
        if (visited.insert(feeder).second) work.push_back(feeder);
    }
  }
  return places;
}

void check_typed(const Net& net, const Marking& m, const std::map<ObjectId, ObjectType>& types) {
  for (const auto& [tok, _] : m.counts()) {
    auto it = types.find(tok.object);
    if (it == types.end()) continue;
    if (net.type_of(tok.place) != it->second)
      throw StructuralError("object " + tok.object + " of type " + it->second + " sits in place " + tok.place);
  }
}

}  // namespace octwin
