#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "octwin/bundled.hpp"
#include "octwin/dtim.hpp"

namespace testing {

using namespace octwin;

inline json bundled_json(const std::string& name) { return json::parse(bundled_document(name)); }

inline std::shared_ptr<const Dtim> bundled_dtim(const std::string& name) {
  return std::make_shared<const Dtim>(dtim_from_json(bundled_json(name)));
}

inline Configuration bundled_configuration(const std::string& name) {
  return *default_configuration(bundled_json(name));
}

inline Instant at(const char* text) { return parse_rfc3339(text); }

// Random object-centric net. Nodes get a rank and arcs only go upward when
// `acyclic` is set.
struct RandomNet {
  Net net;
  std::vector<ObjectType> types;
};

inline RandomNet random_net(std::mt19937& rng, bool acyclic, int max_places = 10, int max_transitions = 6) {
  std::uniform_int_distribution<int> n_types(1, 3), n_places(2, max_places), n_trans(1, max_transitions);
  std::bernoulli_distribution coin(0.5), rare(0.25);
  RandomNet out;
  const int nt = n_types(rng);
  for (int i = 0; i < nt; ++i) out.types.push_back("ot" + std::to_string(i));
  std::vector<Place> places;
  std::vector<Transition> transitions;
  const int np = n_places(rng), ntr = n_trans(rng);
  // rank 0..np+ntr-1 shuffled over all nodes
  std::vector<int> rank(np + ntr);
  for (int i = 0; i < np + ntr; ++i) rank[i] = i;
  std::shuffle(rank.begin(), rank.end(), rng);
  for (int i = 0; i < np; ++i)
    places.push_back({"p" + std::to_string(i), out.types[std::uniform_int_distribution<int>(0, nt - 1)(rng)]});
  for (int i = 0; i < ntr; ++i) transitions.push_back({"t" + std::to_string(i), "a" + std::to_string(i)});
  std::vector<Arc> arcs;
  for (int p = 0; p < np; ++p)
    for (int t = 0; t < ntr; ++t) {
      const int rp = rank[p], rt = rank[np + t];
      if (rare(rng) && (!acyclic || rp < rt)) arcs.push_back({places[p].id, transitions[t].id, coin(rng)});
      else if (rare(rng) && (!acyclic || rt < rp)) arcs.push_back({transitions[t].id, places[p].id, coin(rng)});
    }
  out.net = Net(places, transitions, arcs);
  return out;
}

// Random marking over the net's places; object ids are prefixed by type so
// tokens stay well typed.
inline Marking random_marking(std::mt19937& rng, const Net& net, int max_tokens = 20, int objects_per_type = 5) {
  Marking m;
  std::uniform_int_distribution<int> n(0, max_tokens), pick_place(0, static_cast<int>(net.places().size()) - 1),
      pick_obj(0, objects_per_type - 1);
  const int k = n(rng);
  for (int i = 0; i < k; ++i) {
    const auto& p = net.places()[pick_place(rng)];
    m.add({p.id, p.object_type + "-" + std::to_string(pick_obj(rng))});
  }
  return m;
}

}  // namespace testing
