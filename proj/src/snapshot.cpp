#include <string>

#include "telekinesis/engine.hpp"
#include "telekinesis/json_util.hpp"

namespace tk {

using jsonu::num;
using jsonu::ojson;
using jsonu::vec;

namespace {

ojson opt_num(const std::optional<double>& v) { return v ? ojson(num(*v)) : ojson(nullptr); }

ojson opt_str(const std::optional<std::string>& v) { return v ? ojson(*v) : ojson(nullptr); }

double ratio(std::uint64_t n, std::uint64_t d) { return d == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(d); }

}  // namespace

std::string condition_label(const FactorCondition& c) {
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  return std::string("c=") + yn(c.concentration) + ",s=" + yn(c.strain) + ",e=" + yn(c.energy);
}

std::string condition_slug(const FactorCondition& c) {
  return std::string("c") + (c.concentration ? "1" : "0") + "_s" + (c.strain ? "1" : "0") + "_e" + (c.energy ? "1" : "0");
}

ojson to_json(const FactorCondition& c) {
  return {{"concentration", c.concentration}, {"strain", c.strain}, {"energy", c.energy}};
}

ojson to_json(const EngineSnapshot& s) {
  ojson objects = ojson::array();
  for (const auto& o : s.objects)
    objects.push_back({{"id", o.id}, {"pos", vec(o.position)}, {"selected", o.selected}});
  ojson thermal;
  for (Site site : kAllSites) {
    const auto& th = s.thermal[static_cast<std::size_t>(site)];
    thermal[std::string(site_name(site))] = {
        {"temp", num(th.temp)}, {"setpoint", num(th.setpoint)}, {"heater", th.heater_on}};
  }
  ojson events = ojson::array();
  for (const auto& e : s.events) events.push_back({{"snap", e.id}, {"level", e.level}});
  return {
      {"tick", s.tick},
      {"t", num(s.t)},
      {"gate",
       {{"gaze", s.gate.gaze_ok},
        {"palm", s.gate.palm_ok},
        {"open", s.gate.open_ok},
        {"concentration", s.gate.conc_ok},
        {"strain", s.gate.strain_ok},
        {"active", s.gate.active}}},
      {"selected", opt_str(s.selected_object)},
      {"objects", objects},
      {"detectors",
       {{"f", num(s.detectors.f)},
        {"f_prime", num(s.detectors.f_prime)},
        {"strained", s.detectors.strained},
        {"blink_mean", opt_num(s.detectors.blink_mean)},
        {"blink_count", s.detectors.blink_count},
        {"concentrated", s.detectors.concentrated}}},
      {"thermal", thermal},
      {"stimulating", s.stimulating},
      {"task", {{"stacked", s.stacked}, {"complete", s.complete}, {"elapsed", num(s.elapsed)}}},
      {"events", events},
  };
}

std::string snapshot_line(const EngineSnapshot& s) { return to_json(s).dump(); }

ojson to_json(const RunReport& r) {
  const auto& st = r.stats;
  ojson snaps = ojson::array();
  for (const auto& e : st.snaps) snaps.push_back({{"id", e.id}, {"level", e.level}, {"t", num(e.t)}});
  ojson heaters;
  for (Site site : kAllSites)
    heaters[std::string(site_name(site))] = num(ratio(st.heater_on[static_cast<std::size_t>(site)], st.ticks));
  return {
      {"version", 1},
      {"condition", to_json(r.condition)},
      {"condition_label", condition_label(r.condition)},
      {"complete", r.complete},
      {"completion_time", opt_num(r.completion_time)},
      {"duration", num(r.duration)},
      {"ticks", st.ticks},
      {"stacked", r.stacked},
      {"snaps", snaps},
      {"activation",
       {{"gaze", num(ratio(st.gaze_ok, st.ticks))},
        {"palm", num(ratio(st.palm_ok, st.ticks))},
        {"open", num(ratio(st.open_ok, st.ticks))},
        {"concentrated", num(ratio(st.concentrated, st.ticks))},
        {"strained", num(ratio(st.strained, st.ticks))},
        {"active", num(ratio(st.active, st.ticks))},
        {"stimulating", num(ratio(st.stimulating, st.ticks))}}},
      {"heater_duty", heaters},
      {"questionnaire",
       {{"agency", {{"items", {"A1", "A2", "A3", "A4", "A5", "A6", "A7"}}, {"scale", "likert-7"}}},
        {"telekinesis", {{"items", {"T1", "T2", "T3", "T4", "T5", "T6", "T7"}}, {"scale", "vas"}}}}},
  };
}

}  // namespace tk
