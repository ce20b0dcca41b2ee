#include <fstream>
#include <set>
#include <sstream>

#include "factcheck/pipeline.hpp"
#include "json.hpp"

namespace factcheck::sim {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownFields = {"t",          "kind",        "actor",  "recipient",
                                            "group",      "image_path",  "bundle_path",
                                            "policy",     "telemetry"};

std::string require_string(const json& obj, const char* name, std::size_t line) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw ScriptError(line, std::string("missing field '") + name + "'");
  if (!it->is_string() || it->get<std::string>().empty()) {
    throw ScriptError(line, std::string("field '") + name + "' must be a non-empty string");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* name, std::size_t line) {
  if (!obj.contains(name)) return std::nullopt;
  return require_string(obj, name, line);
}

UnixSeconds parse_time(const json& v, std::size_t line) {
  if (v.is_number_integer()) return v.get<UnixSeconds>();
  if (v.is_string()) {
    try {
      return parse_timestamp(v.get<std::string>());
    } catch (const std::exception& e) {
      throw ScriptError(line, std::string("bad timestamp: ") + e.what());
    }
  }
  throw ScriptError(line, "field 't' must be an integer or an ISO-8601 string");
}

ScenarioEvent parse_event(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw ScriptError(line, "event must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!kKnownFields.contains(key)) throw ScriptError(line, "unknown field '" + key + "'");
  }
  if (!obj.contains("t")) throw ScriptError(line, "missing field 't'");

  ScenarioEvent ev;
  ev.line = line;
  ev.t = parse_time(obj.at("t"), line);
  ev.actor = require_string(obj, "actor", line);
  ev.recipient = optional_string(obj, "recipient", line);
  ev.group = optional_string(obj, "group", line);
  ev.image_path = optional_string(obj, "image_path", line);
  ev.bundle_path = optional_string(obj, "bundle_path", line);
  if (obj.contains("policy")) {
    try {
      ev.policy = parse_policy(require_string(obj, "policy", line));
    } catch (const std::invalid_argument& e) {
      throw ScriptError(line, e.what());
    }
  }
  if (obj.contains("telemetry")) {
    if (!obj.at("telemetry").is_boolean()) throw ScriptError(line, "'telemetry' must be a boolean");
    ev.telemetry = obj.at("telemetry").get<bool>();
  }

  const auto kind = require_string(obj, "kind", line);
  const bool wildcard = ev.actor == "*";
  if (kind == "apply_bundle") {
    ev.kind = EventKind::kApplyBundle;
    if (!ev.bundle_path) throw ScriptError(line, "apply_bundle needs 'bundle_path'");
  } else if (kind == "send") {
    ev.kind = EventKind::kSend;
    if (wildcard) throw ScriptError(line, "send needs a concrete actor");
    if (!ev.image_path) throw ScriptError(line, "send needs 'image_path'");
    if (ev.recipient.has_value() == ev.group.has_value()) {
      throw ScriptError(line, "send needs exactly one of 'recipient' or 'group'");
    }
    if (ev.recipient == "*") throw ScriptError(line, "'*' is not a valid recipient");
    if (ev.recipient == ev.actor) throw ScriptError(line, "a client cannot send to itself");
  } else if (kind == "join") {
    ev.kind = EventKind::kJoin;
    if (wildcard) throw ScriptError(line, "join needs a concrete actor");
    if (!ev.group) throw ScriptError(line, "join needs 'group'");
  } else if (kind == "configure") {
    ev.kind = EventKind::kConfigure;
    if (!ev.policy && !ev.telemetry) {
      throw ScriptError(line, "configure needs 'policy' and/or 'telemetry'");
    }
  } else {
    throw ScriptError(line, "unknown kind '" + kind + "'");
  }
  return ev;
}

json decision_to_json(const DecisionRecord& d) {
  json j{{"event", d.event},
         {"t", d.t},
         {"actor", d.actor},
         {"peer", d.peer},
         {"stage", std::string(to_string(d.decision.stage))},
         {"outcome", std::string(to_string(d.decision.outcome))}};
  if (d.decision.record_id) j["record_id"] = *d.decision.record_id;
  if (d.decision.distance) j["distance"] = *d.decision.distance;
  if (d.decision.url) j["url"] = *d.decision.url;
  if (d.decision.agency) j["agency"] = *d.decision.agency;
  return j;
}

DecisionRecord decision_from_json(const json& j) {
  DecisionRecord d;
  d.event = j.at("event").get<std::size_t>();
  d.t = j.at("t").get<UnixSeconds>();
  d.actor = j.at("actor").get<std::string>();
  d.peer = j.at("peer").get<std::string>();
  d.decision.stage = parse_stage(j.at("stage").get<std::string>());
  d.decision.outcome = parse_outcome(j.at("outcome").get<std::string>());
  if (j.contains("record_id")) d.decision.record_id = j.at("record_id").get<std::uint64_t>();
  if (j.contains("distance")) d.decision.distance = j.at("distance").get<int>();
  if (j.contains("url")) d.decision.url = j.at("url").get<std::string>();
  if (j.contains("agency")) d.decision.agency = j.at("agency").get<std::string>();
  return d;
}

json trace_to_json(const std::vector<TraceRow>& trace) {
  json arr = json::array();
  for (const auto& r : trace) {
    arr.push_back({{"sender", r.sender},
                   {"recipient", r.recipient},
                   {"sequence", r.sequence},
                   {"ciphertext_length", r.ciphertext_length},
                   {"timestamp", r.timestamp}});
  }
  return arr;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Mutable simulation state behind run_scenario.
class World {
 public:
  World(ScenarioAssets& assets, const SimConfig& config) : assets_(assets), config_(config) {
    baseline_config_.policy = config.default_policy;
    baseline_config_.telemetry = config.telemetry;
    baseline_config_.radius = config.radius;
    report_.seed = config.seed;
  }

  void run(const SimScript& script) {
    report_.event_count = script.events.size();
    for (std::size_t i = 0; i < script.events.size(); ++i) {
      const auto& ev = script.events[i];
      try {
        switch (ev.kind) {
          case EventKind::kApplyBundle: apply_bundle(i, ev); break;
          case EventKind::kSend: send(i, ev); break;
          case EventKind::kJoin:
            client(ev.actor);
            groups_[*ev.group].insert(ev.actor);
            break;
          case EventKind::kConfigure: configure(ev); break;
        }
      } catch (const ScriptError&) {
        throw;
      } catch (const store::BundleError& e) {
        throw ScriptError(ev.line, e.what());
      } catch (const MalformedImage& e) {
        throw ScriptError(ev.line, e.what());
      } catch (const std::out_of_range& e) {
        throw ScriptError(ev.line, e.what());
      }
    }
    report_.server_trace = relay_.trace();
    report_.counters = counter_.counts();
    auto failures = relay_.delivery_failures();
    failures.insert(failures.end(), receive_failures_.begin(), receive_failures_.end());
    report_.delivery_failures = std::move(failures);
  }

  SimReport take_report() { return std::move(report_); }

 private:
  Client& client(const std::string& id) {
    if (auto it = clients_.find(id); it != clients_.end()) return it->second;
    Client c(id, baseline_config_);
    c.install(baseline_);
    for (auto& [peer_id, peer] : clients_) {
      const auto key = session_key(config_.seed, id, peer_id);
      c.establish_session(peer_id, key);
      peer.establish_session(id, key);
    }
    relay_.register_client(id);
    return clients_.emplace(id, std::move(c)).first->second;
  }

  void record_application(std::size_t index, const ScenarioEvent& ev, const std::string& actor,
                          std::uint64_t version, std::string status) {
    report_.bundle_applications.push_back({index, ev.t, actor, version, std::move(status)});
  }

  void apply_to(std::size_t index, const ScenarioEvent& ev, const store::UpdateBundle& bundle,
                const std::string& actor, store::DeviceFingerprintSet& target,
                Client* owner) {
    if (!config_.bundle_key) {
      record_application(index, ev, actor, bundle.version, "no bundle key configured");
      return;
    }
    try {
      auto next = target.apply(bundle, *config_.bundle_key);
      if (owner != nullptr) {
        owner->install(next);
      }
      target = std::move(next);
      record_application(index, ev, actor, bundle.version, "applied");
    } catch (const store::BundleRejected& e) {
      record_application(index, ev, actor, bundle.version, std::string(to_string(e.status())));
    }
  }

  void apply_bundle(std::size_t index, const ScenarioEvent& ev) {
    const auto& bundle = assets_.bundle(*ev.bundle_path);
    if (ev.actor == "*") {
      for (auto& [id, c] : clients_) {
        auto current = c.snapshot();
        apply_to(index, ev, bundle, id, current, &c);
      }
      apply_to(index, ev, bundle, "*", baseline_, nullptr);
      return;
    }
    auto& c = client(ev.actor);
    auto current = c.snapshot();
    apply_to(index, ev, bundle, ev.actor, current, &c);
  }

  void configure(const ScenarioEvent& ev) {
    const auto update = [&](ClientConfig cfg) {
      if (ev.policy) cfg.policy = *ev.policy;
      if (ev.telemetry) cfg.telemetry = *ev.telemetry;
      return cfg;
    };
    if (ev.actor == "*") {
      baseline_config_ = update(baseline_config_);
      for (auto& [id, c] : clients_) c.set_config(update(c.config()));
      return;
    }
    auto& c = client(ev.actor);
    c.set_config(update(c.config()));
  }

  void send(std::size_t index, const ScenarioEvent& ev) {
    auto& sender = client(ev.actor);
    std::vector<std::string> recipients;
    std::string peer;
    if (ev.recipient) {
      client(*ev.recipient);
      recipients.push_back(*ev.recipient);
      peer = *ev.recipient;
    } else {
      for (const auto& member : groups_[*ev.group]) {
        if (member != ev.actor) recipients.push_back(member);
      }
      peer = "group:" + *ev.group;
    }

    const auto& img = assets_.image(*ev.image_path);
    auto outcome = sender.send_image(recipients, img, &counter_);
    report_.decisions.push_back({index, ev.t, ev.actor, peer, outcome.decision});
    if (outcome.decision.outcome == Outcome::kBlocked) ++report_.prevented_total;

    for (auto& envelope : outcome.envelopes) {
      const auto to = envelope.recipient;
      if (!relay_.relay(std::move(envelope), ev.t)) continue;
      while (auto delivered = relay_.pop(to)) {
        try {
          auto received = clients_.at(to).receive_image(*delivered);
          report_.decisions.push_back({index, ev.t, to, delivered->sender, received.decision});
        } catch (const std::runtime_error& e) {
          receive_failures_.push_back(format_iso8601(ev.t) + " " + to + ": " + e.what());
        }
      }
    }
  }

  ScenarioAssets& assets_;
  const SimConfig& config_;
  ClientConfig baseline_config_;
  store::DeviceFingerprintSet baseline_;
  std::map<std::string, Client> clients_;
  std::map<std::string, std::set<std::string>> groups_;
  Relay relay_;
  MatchCounter counter_;
  std::vector<std::string> receive_failures_;
  SimReport report_;
};

}  // namespace

SimScript SimScript::parse(std::string_view text) {
  SimScript script;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  UnixSeconds last_t = 0;
  bool have_last = false;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    auto line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ScriptError(line_no, std::string("invalid JSON: ") + e.what());
    }
    auto ev = parse_event(obj, line_no);
    if (have_last && ev.t < last_t) {
      throw ScriptError(line_no, "timestamp " + std::to_string(ev.t) +
                                     " precedes the previous event (" + std::to_string(last_t) +
                                     ")");
    }
    last_t = ev.t;
    have_last = true;
    script.events.push_back(std::move(ev));
    if (end == text.size()) break;
  }
  return script;
}

std::filesystem::path FileAssets::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_relative() ? base_ / p : p;
}

const RasterImage& FileAssets::image(const std::string& path) {
  if (auto it = images_.find(path); it != images_.end()) return it->second;
  return images_.emplace(path, read_image(resolve(path))).first->second;
}

const store::UpdateBundle& FileAssets::bundle(const std::string& path) {
  if (auto it = bundles_.find(path); it != bundles_.end()) return it->second;
  const auto p = resolve(path);
  if (!std::filesystem::exists(p)) throw std::out_of_range("bundle not found: " + p.string());
  return bundles_.emplace(path, store::parse_bundle(read_file(p))).first->second;
}

const RasterImage& MemoryAssets::image(const std::string& path) {
  const auto it = images_.find(path);
  if (it == images_.end()) throw std::out_of_range("no image registered for '" + path + "'");
  return it->second;
}

const store::UpdateBundle& MemoryAssets::bundle(const std::string& path) {
  const auto it = bundles_.find(path);
  if (it == bundles_.end()) throw std::out_of_range("no bundle registered for '" + path + "'");
  return it->second;
}

SimReport run_scenario(const SimScript& script, ScenarioAssets& assets, const SimConfig& config) {
  World world(assets, config);
  world.run(script);
  return world.take_report();
}

std::string SimReport::to_json() const {
  json decisions_json = json::array();
  for (const auto& d : decisions) decisions_json.push_back(decision_to_json(d));
  json counters_json = json::object();
  for (const auto& [id, n] : counters) counters_json[std::to_string(id)] = n;
  json applications = json::array();
  for (const auto& a : bundle_applications) {
    applications.push_back({{"event", a.event},
                            {"t", a.t},
                            {"actor", a.actor},
                            {"version", a.version},
                            {"status", a.status}});
  }
  const json doc{{"seed", seed},
                 {"event_count", event_count},
                 {"decisions", decisions_json},
                 {"server_trace", trace_to_json(server_trace)},
                 {"counters", counters_json},
                 {"prevented_total", prevented_total},
                 {"bundle_applications", applications},
                 {"delivery_failures", delivery_failures}};
  return doc.dump(2) + "\n";
}

std::string SimReport::server_trace_json() const { return trace_to_json(server_trace).dump(); }

SimReport SimReport::from_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    SimReport r;
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.event_count = doc.at("event_count").get<std::size_t>();
    for (const auto& d : doc.at("decisions")) r.decisions.push_back(decision_from_json(d));
    for (const auto& t : doc.at("server_trace")) {
      r.server_trace.push_back({t.at("sender").get<std::string>(),
                                t.at("recipient").get<std::string>(),
                                t.at("sequence").get<std::uint64_t>(),
                                t.at("ciphertext_length").get<std::size_t>(),
                                t.at("timestamp").get<UnixSeconds>()});
    }
    for (const auto& [key, value] : doc.at("counters").items()) {
      r.counters[std::stoull(key)] = value.get<std::uint64_t>();
    }
    r.prevented_total = doc.at("prevented_total").get<std::uint64_t>();
    for (const auto& a : doc.at("bundle_applications")) {
      r.bundle_applications.push_back({a.at("event").get<std::size_t>(),
                                       a.at("t").get<UnixSeconds>(),
                                       a.at("actor").get<std::string>(),
                                       a.at("version").get<std::uint64_t>(),
                                       a.at("status").get<std::string>()});
    }
    r.delivery_failures = doc.at("delivery_failures").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed simulation report: ") + e.what());
  }
}

}  // namespace factcheck::sim
