#include <charconv>
#include <chrono>
#include <fstream>

#include "copref/pipeline.hpp"
#include "copref/service.hpp"

namespace copref {

namespace {

struct CodeState {
  std::string pair_id;
  TimestampMs created_at = 0;
  DurationMs ttl = 0;
  bool used = false;
};

struct PairState {
  std::string pair_id;
  std::string code;
  TimestampMs created_at = 0;
  std::optional<std::string> parent_account;
  std::optional<std::string> youth_account;
  std::map<Role, PreferencePanel> panels;
  std::optional<PreferencePanel> co_panel;
  std::optional<std::string> active_session;
  std::vector<std::string> sessions;
  std::vector<std::string> videos;
  std::uint64_t next_seq = 0;

  bool complete() const { return parent_account && youth_account; }
  PreferencePanel panel(Role role) const {
    const auto it = panels.find(role);
    return it == panels.end() ? PreferencePanel(role) : it->second;
  }
};

struct VideoState {
  std::string video_id;
  std::string pair_id;
  std::string frames;
  std::string subtitles;
  Role submitted_by = Role::Parent;
  TimestampMs registered_at = 0;
  std::optional<CensorshipResult> result;
  std::optional<InTimeFeedback> feedback;
};

struct SessionState {
  std::string pair_id;
  ConsensusSession session;
};

struct TokenOwner {
  std::string pair_id;
  Role role = Role::Parent;
};

json panel_doc(const PreferencePanel& p) {
  json doc = panel_to_json(p);
  doc["updated_at"] = p.updated_at();
  return doc;
}

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::string role_name(Role r) { return std::string(to_string(r)); }

Role party_role(std::string_view text) {
  const Role r = parse_role(text);
  if (r == Role::Co) fail(ErrorCode::InvalidRole, "role must be parent or youth");
  return r;
}

std::string require_string(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string() || body[key].get<std::string>().empty()) {
    fail(ErrorCode::InvalidArgument, std::string(key) + ": expected non-empty string");
  }
  return body[key].get<std::string>();
}

TimestampMs query_int(const ApiRequest& req, const std::string& key, std::optional<TimestampMs> def) {
  const auto it = req.query.find(key);
  if (it == req.query.end()) {
    if (def) return *def;
    fail(ErrorCode::InvalidArgument, key + ": required query parameter");
  }
  TimestampMs v = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorCode::InvalidArgument, key + ": expected integer milliseconds");
  }
  return v;
}

/// Bundle references are relative paths that stay under the bundle root.
std::filesystem::path bundle_file(const std::filesystem::path& root, const std::string& ref,
                                  const char* what) {
  const std::filesystem::path p(ref);
  if (p.is_absolute()) fail(ErrorCode::InvalidArgument, std::string(what) + ": must be relative");
  for (const auto& part : p) {
    if (part == "..") fail(ErrorCode::InvalidArgument, std::string(what) + ": must not contain ..");
  }
  return root / p;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    const auto j = path.find('/', i);
    out.push_back(path.substr(i, j == std::string::npos ? std::string::npos : j - i));
    if (j == std::string::npos) break;
    i = j;
  }
  return out;
}

}  // namespace

struct Engine::State {
  std::map<std::string, CodeState> codes;
  std::map<std::string, PairState> pairs;
  std::map<std::string, VideoState> videos;
  std::map<std::string, SessionState> sessions;
  std::map<std::string, TokenOwner> tokens;  // sha256(token) -> owner
  std::filesystem::path log_path;
  std::ofstream log;
  std::size_t events = 0;

  PairState& pair(const std::string& id) {
    const auto it = pairs.find(id);
    if (it == pairs.end()) fail(ErrorCode::NotFound, "unknown pair '" + id + "'");
    return it->second;
  }
  VideoState& video(const std::string& id) {
    const auto it = videos.find(id);
    if (it == videos.end()) fail(ErrorCode::NotFound, "unknown video '" + id + "'");
    return it->second;
  }
  SessionState& session(const std::string& id) {
    const auto it = sessions.find(id);
    if (it == sessions.end()) fail(ErrorCode::NotFound, "unknown session '" + id + "'");
    return it->second;
  }

  /// Applies one record to the in-memory state. Used both for live commits
  /// and for replay at startup.
  void apply(const EventRecord& r) {
    const json& p = r.payload;
    if (r.kind == "pair.created") {
      if (r.seq != 0 || pairs.contains(r.pair_id)) {
        fail(ErrorCode::SchemaError, "pair.created: duplicate pair " + r.pair_id);
      }
      const std::string code = p.at("code").get<std::string>();
      if (codes.contains(code)) fail(ErrorCode::SchemaError, "pair.created: duplicate code");
      PairState ps;
      ps.pair_id = r.pair_id;
      ps.code = code;
      ps.created_at = r.at;
      ps.next_seq = 1;
      pairs.emplace(r.pair_id, std::move(ps));
      codes.emplace(code, CodeState{r.pair_id, r.at, p.at("ttl_ms").get<DurationMs>(), false});
      ++events;
      return;
    }

    PairState& ps = pair(r.pair_id);
    if (r.seq != ps.next_seq) {
      fail(ErrorCode::SchemaError, "pair " + r.pair_id + ": expected seq " +
                                       std::to_string(ps.next_seq) + ", got " +
                                       std::to_string(r.seq));
    }

    if (r.kind == "pair.joined") {
      const Role role = party_role(p.at("role").get<std::string>());
      auto& slot = role == Role::Parent ? ps.parent_account : ps.youth_account;
      if (slot) fail(ErrorCode::RoleTaken, role_name(role) + " already joined");
      slot = p.at("account").get<std::string>();
      tokens[p.at("token_hash").get<std::string>()] = {r.pair_id, role};
    } else if (r.kind == "pair.completed") {
      codes.at(ps.code).used = true;
    } else if (r.kind == "panel.set") {
      const PreferencePanel panel = panel_from_json(p.at("panel"));
      if (panel.role() == Role::Co) fail(ErrorCode::SchemaError, "panel.set: co panel");
      ps.panels.insert_or_assign(panel.role(), panel);
    } else if (r.kind.starts_with("consensus.")) {
      const std::string sid = p.at("session_id").get<std::string>();
      const ConsensusEvent e = event_from_json(p.at("event"));
      if (e.kind == "start") {
        if (sessions.contains(sid)) fail(ErrorCode::SchemaError, "duplicate session " + sid);
        sessions[sid] = {r.pair_id, apply_event({}, e)};
        ps.sessions.push_back(sid);
        ps.active_session = sid;
      } else {
        SessionState& ss = session(sid);
        if (ss.pair_id != r.pair_id) fail(ErrorCode::SchemaError, "session of another pair");
        ss.session = apply_event(ss.session, e);
      }
      const ConsensusSession& s = sessions[sid].session;
      if (s.stage == Stage::Finalized) {
        ps.active_session.reset();
        if (s.co_panel) ps.co_panel = s.co_panel;
      }
    } else if (r.kind == "video.registered") {
      const std::string vid = p.at("video_id").get<std::string>();
      if (videos.contains(vid)) fail(ErrorCode::InvalidArgument, "video '" + vid + "' exists");
      videos[vid] = {vid, r.pair_id, p.at("frames").get<std::string>(),
                     p.at("subtitles").get<std::string>(), party_role(r.actor), r.at,
                     std::nullopt, std::nullopt};
      ps.videos.push_back(vid);
    } else if (r.kind == "video.censored") {
      VideoState& v = video(p.at("video_id").get<std::string>());
      if (v.pair_id != r.pair_id) fail(ErrorCode::SchemaError, "video of another pair");
      v.result = result_from_json(p.at("result"));
      v.feedback = feedback_from_json(p.at("feedback"));
    } else {
      fail(ErrorCode::SchemaError, "unknown event kind '" + r.kind + "'");
    }
    ++ps.next_seq;
    ++events;
  }
};

namespace {

json pair_json(const PairState& ps) {
  return {{"pair_id", ps.pair_id},
          {"created_at", ps.created_at},
          {"complete", ps.complete()},
          {"parent_account", optional_string(ps.parent_account)},
          {"youth_account", optional_string(ps.youth_account)},
          {"co_panel", ps.co_panel ? panel_doc(*ps.co_panel) : json(nullptr)},
          {"active_session", optional_string(ps.active_session)},
          {"sessions", ps.sessions},
          {"videos", ps.videos}};
}

json video_json(const VideoState& v) {
  return {{"video_id", v.video_id},
          {"pair_id", v.pair_id},
          {"frames", v.frames},
          {"subtitles", v.subtitles},
          {"submitted_by", to_string(v.submitted_by)},
          {"registered_at", v.registered_at},
          {"latest_result", v.result ? result_to_json(*v.result) : json(nullptr)}};
}

}  // namespace

Engine::Engine(Options options) : opts_(std::move(options)), state_(std::make_unique<State>()) {
  if (!opts_.clock) {
    opts_.clock = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  if (!opts_.provider && opts_.config.provider) {
    opts_.provider = std::shared_ptr<AnalysisProvider>(make_provider(*opts_.config.provider));
  }
  std::error_code ec;
  std::filesystem::create_directories(opts_.config.data_dir, ec);
  if (ec) fail(ErrorCode::IoError, "data_dir: " + ec.message());
  state_->log_path = opts_.config.data_dir / "events.jsonl";
  if (std::filesystem::exists(state_->log_path)) {
    const auto records = read_event_log(state_->log_path);
    for (std::size_t i = 0; i < records.size(); ++i) {
      try {
        state_->apply(records[i]);
      } catch (const Error& e) {
        fail(e.code(), "events.jsonl line " + std::to_string(i + 1) + ": " + e.what());
      } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, "events.jsonl line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
  }
  state_->log.open(state_->log_path, std::ios::app);
  if (!state_->log) fail(ErrorCode::IoError, "cannot open " + state_->log_path.string());
}

Engine::~Engine() = default;

std::size_t Engine::event_count() const {
  std::lock_guard lock(mu_);
  return state_->events;
}

Engine::Options engine_options(const AppConfig& config) {
  Engine::Options o;
  o.config = config;
  if (config.guidelines_path.empty()) {
    fail(ErrorCode::InvalidArgument, "config: guidelines_path is required");
  }
  o.common = load_common(read_text_file(config.guidelines_path, "guidelines"));
  return o;
}

ApiResponse Engine::handle(const ApiRequest& req) {
  State& st = *state_;

  // Applies and persists one record for the pair. Callers hold the lock.
  auto commit = [&](const std::string& pair_id, std::string actor, std::string kind, json payload,
                    TimestampMs at) {
    EventRecord r;
    r.pair_id = pair_id;
    r.seq = st.pairs.contains(pair_id) ? st.pairs.at(pair_id).next_seq : 0;
    r.actor = std::move(actor);
    r.kind = std::move(kind);
    r.payload = std::move(payload);
    r.at = at;
    st.apply(r);
    st.log << record_to_json(r).dump() << '\n';
    st.log.flush();
    if (!st.log) fail(ErrorCode::IoError, "event log write failed");
  };

  auto authenticate = [&](const std::string& pair_id) -> Role {
    static constexpr std::string_view kBearer = "Bearer ";
    if (!req.authorization.starts_with(kBearer)) {
      fail(ErrorCode::Unauthorized, "missing bearer token");
    }
    const auto it = st.tokens.find(sha256_hex(req.authorization.substr(kBearer.size())));
    if (it == st.tokens.end()) fail(ErrorCode::Unauthorized, "unknown token");
    if (it->second.pair_id != pair_id) fail(ErrorCode::Forbidden, "token belongs to another pair");
    return it->second.role;
  };

  auto body = [&]() -> json {
    if (req.body.empty()) return json::object();
    json doc;
    try {
      doc = json::parse(req.body);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::SchemaError, std::string("body: ") + e.what());
    }
    if (!doc.is_object()) fail(ErrorCode::SchemaError, "body: expected object");
    return doc;
  };

  auto own_panel_role = [&](const std::string& pair_id, const std::string& role_text) {
    const Role caller = authenticate(pair_id);
    const Role role = parse_role(role_text);
    if (role != caller) fail(ErrorCode::Forbidden, "a party may only edit its own panel");
    return role;
  };

  auto session_op = [&](const std::string& sid, const std::string& op) -> json {
    std::lock_guard lock(mu_);
    SessionState& ss = st.session(sid);
    const Role actor = authenticate(ss.pair_id);
    const json b = body();
    const TimestampMs now = opts_.clock();
    ConsensusSession next;
    if (op == "respond") {
      const std::string decision = require_string(b, "decision");
      if (decision == "accept") {
        next = reviewer_respond(ss.session, actor, Accept{}, now);
      } else if (decision == "modify") {
        if (!b.contains("changes") || !b["changes"].is_array()) {
          fail(ErrorCode::SchemaError, "changes: expected array");
        }
        Modify m;
        for (const auto& c : b["changes"]) {
          if (!c.is_object()) fail(ErrorCode::SchemaError, "changes[]: expected object");
          m.changes.emplace_back(Keyword::normalize(require_string(c, "keyword")),
                                 position_from_json(c.value("position", json())));
        }
        next = reviewer_respond(ss.session, actor, m, now);
      } else {
        fail(ErrorCode::InvalidArgument, "decision: expected accept or modify");
      }
    } else if (op == "reasons") {
      if (!b.contains("reason") || !b["reason"].is_string()) {
        fail(ErrorCode::SchemaError, "reason: expected string");
      }
      next = submit_reason(ss.session, actor, Keyword::normalize(require_string(b, "keyword")),
                           b["reason"].get<std::string>(), now);
    } else if (op == "positions") {
      next = submit_position(ss.session, actor, Keyword::normalize(require_string(b, "keyword")),
                             position_from_json(b.value("position", json())), now);
    } else if (op == "advance") {
      next = advance(ss.session, now);
    } else {
      fail(ErrorCode::NotFound, "unknown consensus operation '" + op + "'");
    }
    const ConsensusEvent& e = next.events.back();
    const std::string pair_id = ss.pair_id;
    commit(pair_id, e.actor, "consensus." + e.kind,
           {{"session_id", sid}, {"event", event_to_json(e)}}, now);
    return session_to_json(st.session(sid).session);
  };

  try {
    const auto seg = split_path(req.path);
    const std::string& m = req.method;
    const std::size_t n = seg.size();

    if (n >= 1 && seg[0] == "pairs") {
      if (n == 1 && m == "POST") {
        std::lock_guard lock(mu_);
        std::string code;
        do {
          code = random_pairing_code();
        } while (st.codes.contains(code));
        std::string pair_id;
        do {
          pair_id = "p-" + random_hex(8);
        } while (st.pairs.contains(pair_id));
        const TimestampMs now = opts_.clock();
        commit(pair_id, "system", "pair.created",
               {{"code", code}, {"ttl_ms", opts_.config.pairing_ttl_ms}}, now);
        return {201,
                {{"code", code},
                 {"pair_id", pair_id},
                 {"created_at", now},
                 {"ttl_ms", opts_.config.pairing_ttl_ms},
                 {"used", false}}};
      }
      if (n == 3 && seg[2] == "join" && m == "POST") {
        std::lock_guard lock(mu_);
        const json b = body();
        const auto it = st.codes.find(seg[1]);
        if (it == st.codes.end()) fail(ErrorCode::UnknownCode, "unknown pairing code");
        CodeState& code = it->second;
        if (code.used) fail(ErrorCode::CodeUsed, "pairing code already used");
        const TimestampMs now = opts_.clock();
        if (now > code.created_at + code.ttl) fail(ErrorCode::CodeExpired, "pairing code expired");
        const Role role = party_role(require_string(b, "role"));
        const std::string account = require_string(b, "account");
        PairState& ps = st.pair(code.pair_id);
        if ((role == Role::Parent ? ps.parent_account : ps.youth_account).has_value()) {
          fail(ErrorCode::RoleTaken, role_name(role) + " already joined");
        }
        std::string token;
        do {
          token = random_hex(32);
        } while (st.tokens.contains(sha256_hex(token)));
        const std::string pair_id = code.pair_id;
        commit(pair_id, role_name(role), "pair.joined",
               {{"role", role_name(role)}, {"account", account}, {"token_hash", sha256_hex(token)}},
               now);
        if (st.pair(pair_id).complete()) {
          commit(pair_id, "system", "pair.completed",
                 {{"message", "Welcome! Parent and youth are now paired."}}, now);
        }
        return {200,
                {{"pair_id", pair_id},
                 {"role", role_name(role)},
                 {"token", token},
                 {"pair", pair_json(st.pair(pair_id))}}};
      }
      if (n >= 2) {
        const std::string& pid = seg[1];
        if (n == 2 && m == "GET") {
          std::lock_guard lock(mu_);
          PairState& ps = st.pair(pid);
          authenticate(pid);
          return {200, pair_json(ps)};
        }
        if (n == 4 && seg[2] == "panels" && m == "GET") {
          std::lock_guard lock(mu_);
          PairState& ps = st.pair(pid);
          authenticate(pid);
          const Role role = parse_role(seg[3]);
          if (role == Role::Co) {
            if (!ps.co_panel) fail(ErrorCode::NotFound, "no co-preference panel yet");
            return {200, panel_doc(*ps.co_panel)};
          }
          return {200, panel_doc(ps.panel(role))};
        }
        if (n == 4 && seg[2] == "panels" && m == "PUT") {
          std::lock_guard lock(mu_);
          PairState& ps = st.pair(pid);
          const Role role = own_panel_role(pid, seg[3]);
          const json b = body();
          const TimestampMs now = opts_.clock();
          const PreferencePanel current = ps.panel(role);
          PreferencePanel next;
          if (b.contains("entries")) {
            if (b.contains("set") || b.contains("remove")) {
              fail(ErrorCode::InvalidArgument, "use either entries or set/remove");
            }
            const PreferencePanel parsed =
                panel_from_json({{"role", role_name(role)}, {"entries", b["entries"]}});
            next = PreferencePanel(role, parsed.entries(), current.revision() + 1, now);
          } else {
            PreferencePanel work = current;
            if (b.contains("set")) {
              const PreferencePanel parsed =
                  panel_from_json({{"role", role_name(role)}, {"entries", b["set"]}});
              work = merge_entries(work, parsed.entries(), now);
            }
            if (b.contains("remove")) {
              if (!b["remove"].is_array()) fail(ErrorCode::SchemaError, "remove: expected array");
              for (const auto& k : b["remove"]) {
                if (!k.is_string()) fail(ErrorCode::SchemaError, "remove[]: expected string");
                work = remove_preference(work, Keyword::normalize(k.get<std::string>()), now);
              }
            }
            next = PreferencePanel(role, work.entries(), current.revision() + 1, now);
          }
          commit(pid, role_name(role), "panel.set", {{"panel", panel_doc(next)}, {"source", "direct"}},
                 now);
          return {200, panel_doc(st.pair(pid).panel(role))};
        }
        if (n == 5 && seg[2] == "panels" && seg[4] == "from-videos" && m == "POST") {
          struct Pending {
            LabeledVideoRef ref;
            std::optional<VideoFeatures> features;
            BundlePaths paths;
          };
          std::vector<Pending> work;
          Role role;
          {
            std::lock_guard lock(mu_);
            st.pair(pid);
            role = own_panel_role(pid, seg[3]);
            const json b = body();
            if (!b.contains("videos") || !b["videos"].is_array()) {
              fail(ErrorCode::SchemaError, "videos: expected array");
            }
            for (const auto& v : b["videos"]) {
              if (!v.is_object()) fail(ErrorCode::SchemaError, "videos[]: expected object");
              Pending p;
              p.ref.video_id = require_string(v, "video_id");
              const std::string label = require_string(v, "label");
              if (label == "suitable") {
                p.ref.label = VideoLabel::Suitable;
              } else if (label == "unsuitable") {
                p.ref.label = VideoLabel::Unsuitable;
              } else {
                fail(ErrorCode::InvalidArgument, "label: expected suitable or unsuitable");
              }
              const VideoState& vs = st.video(p.ref.video_id);
              if (vs.pair_id != pid) fail(ErrorCode::Forbidden, "video belongs to another pair");
              if (vs.result) {
                p.features = vs.result->features;
              } else {
                p.paths = bundle_paths(bundle_file(opts_.config.bundle_root, vs.frames, "frames"),
                                       bundle_file(opts_.config.bundle_root, vs.subtitles, "subtitles"));
              }
              work.push_back(std::move(p));
            }
          }
          std::vector<std::pair<LabeledVideoRef, VideoFeatures>> labeled;
          for (auto& p : work) {
            if (!p.features) {
              if (!opts_.provider) fail(ErrorCode::ProviderUnavailable, "no provider configured");
              const LoadedBundle bundle = load_bundle(p.paths);
              const IngestResult in = ingest(bundle.frames, bundle.cues, opts_.config.ingest);
              p.features = opts_.provider->extract_features(in.chunks);
            }
            labeled.emplace_back(p.ref, *p.features);
          }
          std::lock_guard lock(mu_);
          const TimestampMs now = opts_.clock();
          const PreferencePanel current = st.pair(pid).panel(role);
          const PreferencePanel inferred = infer_from_videos(current, labeled, now);
          const PreferencePanel next(role, inferred.entries(), current.revision() + 1, now);
          commit(pid, role_name(role), "panel.set", {{"panel", panel_doc(next)}, {"source", "videos"}},
                 now);
          return {200, panel_doc(st.pair(pid).panel(role))};
        }
        if (n == 3 && seg[2] == "consensus" && m == "POST") {
          std::lock_guard lock(mu_);
          PairState& ps = st.pair(pid);
          const Role initiator = authenticate(pid);
          if (!ps.complete()) fail(ErrorCode::WrongStage, "both parties must join first");
          if (ps.active_session) {
            fail(ErrorCode::WrongStage, "session " + *ps.active_session + " is still active");
          }
          std::string sid;
          do {
            sid = "s-" + random_hex(8);
          } while (st.sessions.contains(sid));
          const TimestampMs now = opts_.clock();
          const ConsensusSession s =
              start_session(sid, initiator, ps.panel(initiator), opts_.config.consensus, now);
          commit(pid, role_name(initiator), "consensus.start",
                 {{"session_id", sid}, {"event", event_to_json(s.events.back())}}, now);
          return {201, session_to_json(st.session(sid).session)};
        }
        if (n == 3 && seg[2] == "videos" && m == "POST") {
          std::lock_guard lock(mu_);
          st.pair(pid);
          const Role role = authenticate(pid);
          const json b = body();
          const std::string frames = require_string(b, "frames");
          const std::string subtitles = require_string(b, "subtitles");
          const BundlePaths paths =
              bundle_paths(bundle_file(opts_.config.bundle_root, frames, "frames"),
                           bundle_file(opts_.config.bundle_root, subtitles, "subtitles"));
          if (!std::filesystem::exists(paths.frames_manifest)) {
            fail(ErrorCode::InvalidArgument, "frames: not found");
          }
          if (!std::filesystem::exists(paths.subtitles)) {
            fail(ErrorCode::InvalidArgument, "subtitles: not found");
          }
          std::string vid;
          if (b.contains("video_id")) {
            vid = require_string(b, "video_id");
          } else {
            do {
              vid = "v-" + random_hex(8);
            } while (st.videos.contains(vid));
          }
          commit(pid, role_name(role), "video.registered",
                 {{"video_id", vid}, {"frames", frames}, {"subtitles", subtitles}}, opts_.clock());
          return {201, video_json(st.video(vid))};
        }
        if (n == 3 && seg[2] == "videos" && m == "GET") {
          std::lock_guard lock(mu_);
          PairState& ps = st.pair(pid);
          authenticate(pid);
          json list = json::array();
          for (const auto& vid : ps.videos) list.push_back(video_json(st.video(vid)));
          return {200, {{"videos", std::move(list)}}};
        }
        if (n == 3 && seg[2] == "reports" && m == "GET") {
          std::lock_guard lock(mu_);
          PairState& ps = st.pair(pid);
          authenticate(pid);
          Period period;
          period.from = query_int(req, "from", std::nullopt);
          period.to = query_int(req, "to", std::nullopt);
          period.bucket = query_int(req, "bucket_ms", kMillisPerDay);
          std::vector<InTimeFeedback> records;
          for (const auto& vid : ps.videos) {
            const VideoState& v = st.video(vid);
            if (v.feedback) records.push_back(*v.feedback);
          }
          return {200, report_to_json(aggregate(records, period))};
        }
        if (n == 3 && seg[2] == "events" && m == "GET") {
          std::lock_guard lock(mu_);
          st.pair(pid);
          authenticate(pid);
          json list = json::array();
          for (const auto& r : read_event_log(st.log_path)) {
            if (r.pair_id == pid) list.push_back(event_summary(r));
          }
          return {200, {{"pair_id", pid}, {"events", std::move(list)}}};
        }
      }
    }

    if (n >= 2 && seg[0] == "consensus") {
      if (n == 2 && m == "GET") {
        std::lock_guard lock(mu_);
        SessionState& ss = st.session(seg[1]);
        authenticate(ss.pair_id);
        return {200, session_to_json(ss.session)};
      }
      if (n == 3 && m == "POST") return {200, session_op(seg[1], seg[2])};
    }

    if (n >= 2 && seg[0] == "videos") {
      const std::string& vid = seg[1];
      if (n == 2 && m == "GET") {
        std::lock_guard lock(mu_);
        VideoState& v = st.video(vid);
        authenticate(v.pair_id);
        return {200, video_json(v)};
      }
      if (n == 3 && seg[2] == "feedback" && m == "GET") {
        std::lock_guard lock(mu_);
        VideoState& v = st.video(vid);
        authenticate(v.pair_id);
        if (!v.feedback) fail(ErrorCode::NotFound, "video '" + vid + "' has not been censored");
        return {200, feedback_to_json(*v.feedback)};
      }
      if (n == 3 && seg[2] == "censor" && m == "POST") {
        BundlePaths paths;
        PreferencePanel co_pref(Role::Co);
        std::string pair_id;
        {
          std::lock_guard lock(mu_);
          VideoState& v = st.video(vid);
          authenticate(v.pair_id);
          pair_id = v.pair_id;
          paths = bundle_paths(bundle_file(opts_.config.bundle_root, v.frames, "frames"),
                               bundle_file(opts_.config.bundle_root, v.subtitles, "subtitles"));
          const PairState& ps = st.pair(pair_id);
          if (ps.co_panel) co_pref = *ps.co_panel;
        }
        if (!opts_.provider) fail(ErrorCode::ProviderUnavailable, "no provider configured");
        // The pipeline runs without the lock so consensus traffic is not held up.
        const TimestampMs produced_at = opts_.clock();
        const PipelineOutput out = run_censor(*opts_.provider, load_bundle(paths), co_pref,
                                              opts_.common, opts_.config.ingest, vid, produced_at);
        std::lock_guard lock(mu_);
        commit(pair_id, "system", "video.censored",
               {{"video_id", vid},
                {"result", result_to_json(out.result)},
                {"feedback", feedback_to_json(out.feedback)}},
               produced_at);
        return {200, pipeline_to_json(out)};
      }
    }

    fail(ErrorCode::NotFound, "no route for " + m + " " + req.path);
  } catch (const Error& e) {
    return {http_status(e.code()), error_body(e)};
  } catch (const json::exception& e) {
    return {422, {{"error", "SchemaError"}, {"message", e.what()}}};
  } catch (const std::exception& e) {
    return {500, {{"error", "InternalError"}, {"message", e.what()}}};
  }
}

}  // namespace copref
