#include "fwchoice/exposure.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "fwchoice/errors.hpp"

namespace fwc {

std::vector<ExposureRecord> compute_exposures(const FollowGraph& g, const Cascade& c) {
  std::unordered_map<UserId, const ForwardEvent*> own_post;
  own_post.reserve(c.events.size());
  for (const auto& e : c.events) own_post.emplace(e.user, &e);

  std::map<UserId, ExposureRecord> records;
  for (const auto& e : c.events) {
    for (UserId follower : g.followers(e.user)) {
      auto own = own_post.find(follower);
      // truncation: nothing at or after the follower's own post counts
      if (own != own_post.end() && e.time >= own->second->time) continue;
      auto [it, inserted] = records.try_emplace(follower);
      if (inserted) {
        it->second.user = follower;
        it->second.message_id = c.message_id;
        if (own != own_post.end()) it->second.forwarded_at = *own->second;
      }
      it->second.exposures.push_back(e);
    }
  }

  std::vector<ExposureRecord> out;
  out.reserve(records.size());
  for (auto& [_, rec] : records) out.push_back(std::move(rec));
  return out;
}

ExposureDistribution exposure_distribution(std::span<const ExposureRecord> records) {
  ExposureDistribution dist;
  for (const auto& r : records) {
    if (!r.exposures.empty()) ++dist[r.exposures.size()];
  }
  return dist;
}

ExposureDistribution exposure_distribution(const FollowGraph& g, std::span<const Cascade> cascades) {
  ExposureDistribution dist;
  for (const auto& c : cascades) {
    for (const auto& [k, n] : exposure_distribution(compute_exposures(g, c))) dist[k] += n;
  }
  return dist;
}

void write_exposure_distribution(const ExposureDistribution& dist, std::ostream& out) {
  out << "k\tW(k)\n";
  for (const auto& [k, n] : dist) out << k << '\t' << n << '\n';
}

ExtractionResult extract_instances(const FollowGraph& g, const Cascade& c) {
  ExtractionResult result;
  for (auto& rec : compute_exposures(g, c)) {
    if (!rec.forwarded_at) continue;
    if (rec.exposures.size() > 2) {
      ++result.skipped_many_exposures;
      continue;
    }
    if (rec.exposures.size() != 2) continue;

    const ForwardEvent& own = *rec.forwarded_at;
    ChoiceInstance inst;
    inst.message_id = c.message_id;
    inst.root_time = c.root_time();
    inst.allen = rec.user;
    inst.bob_event = rec.exposures[0];
    inst.jim_event = rec.exposures[1];
    inst.allen_event = own;
    inst.tied_times = inst.bob_event.time == inst.jim_event.time;
    if (own.parent == inst.jim_event.event_id) {
      inst.label = 1;
    } else if (own.parent == inst.bob_event.event_id) {
      inst.label = 0;
    } else {
      ++result.dropped_foreign_parent;
      continue;
    }
    result.instances.push_back(inst);
  }
  return result;
}

ExtractionResult extract_instances(const FollowGraph& g, std::span<const Cascade> cascades) {
  std::vector<const Cascade*> order;
  order.reserve(cascades.size());
  for (const auto& c : cascades) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(),
                   [](const Cascade* a, const Cascade* b) { return a->message_id < b->message_id; });

  ExtractionResult all;
  for (const Cascade* c : order) {
    auto part = extract_instances(g, *c);
    all.dropped_foreign_parent += part.dropped_foreign_parent;
    all.skipped_many_exposures += part.skipped_many_exposures;
    all.instances.insert(all.instances.end(), part.instances.begin(), part.instances.end());
  }
  return all;
}

void write_instances(std::span<const ChoiceInstance> instances, std::ostream& out) {
  out << "message_id\tallen\tbob_event_id\tjim_event_id\tallen_event_id\tlabel\n";
  for (const auto& i : instances) {
    out << i.message_id << '\t' << i.allen << '\t' << i.bob_event.event_id << '\t'
        << i.jim_event.event_id << '\t' << i.allen_event.event_id << '\t' << i.label << '\n';
  }
}

std::vector<ChoiceInstance> read_instances(std::istream& in, const std::string& source_name,
                                           std::span<const Cascade> cascades) {
  std::unordered_map<MessageId, const Cascade*> by_id;
  for (const auto& c : cascades) by_id.emplace(c.message_id, &c);

  std::vector<ChoiceInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.rfind("message_id", 0) == 0) continue;
    std::istringstream fields(line);
    MessageId message_id = 0;
    UserId allen = 0;
    EventId bob = 0, jim = 0, own = 0;
    int label = -1;
    if (!(fields >> message_id >> allen >> bob >> jim >> own >> label) || (label != 0 && label != 1)) {
      throw ParseError(source_name, lineno, "expected 6 columns with label 0 or 1");
    }
    auto it = by_id.find(message_id);
    if (it == by_id.end()) {
      throw IntegrityError("instance on line " + std::to_string(lineno) + " cites unknown message " +
                           std::to_string(message_id));
    }
    const Cascade& c = *it->second;
    const ForwardEvent* b = c.find_event(bob);
    const ForwardEvent* j = c.find_event(jim);
    const ForwardEvent* a = c.find_event(own);
    if (!b || !j || !a || a->user != allen) {
      throw IntegrityError("instance on line " + std::to_string(lineno) +
                           " cites events missing from message " + std::to_string(message_id));
    }
    if (a->parent != (label == 1 ? j->event_id : b->event_id)) {
      throw IntegrityError("instance on line " + std::to_string(lineno) +
                           ": label disagrees with the forward's parent");
    }
    ChoiceInstance inst;
    inst.message_id = message_id;
    inst.root_time = c.root_time();
    inst.allen = allen;
    inst.bob_event = *b;
    inst.jim_event = *j;
    inst.allen_event = *a;
    inst.label = label;
    inst.tied_times = b->time == j->time;
    out.push_back(inst);
  }
  return out;
}

}  // namespace fwc
