#include "gamefeat/session_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>

#include "gamefeat/checksum.hpp"
#include "gamefeat/error.hpp"

namespace gamefeat {

using nlohmann::json;

std::string_view to_string(Verdict v) { return v == Verdict::Accepted ? "accepted" : "rejected"; }

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "accepted" || text == "accept") return Verdict::Accepted;
  if (text == "rejected" || text == "reject") return Verdict::Rejected;
  return std::nullopt;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Tally Session::tally() const {
  Tally t;
  for (const auto& d : decisions) t.live[d.feature.value("text", std::string{})] = d.verdict;
  for (const auto& [text, v] : t.live) (v == Verdict::Accepted ? t.accepted : t.rejected)++;
  return t;
}

json to_json(const Tally& t) {
  json live = json::object();
  for (const auto& [text, v] : t.live) live[text] = std::string(to_string(v));
  return {{"accepted", t.accepted}, {"rejected", t.rejected}, {"live", live}};
}

json Session::to_json() const {
  json log = json::array();
  for (const auto& d : decisions) {
    json entry = {{"feature", d.feature},
                  {"verdict", std::string(to_string(d.verdict))},
                  {"decided_at", d.decided_at}};
    if (!d.note.empty()) entry["note"] = d.note;
    log.push_back(std::move(entry));
  }
  return {{"id", id},
          {"prompt", prompt},
          {"created_at", created_at},
          {"decisions", log},
          {"tally", gamefeat::to_json(tally())}};
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".log") replay(entry.path());
  }
}

void SessionStore::replay(const std::filesystem::path& log) {
  std::string text;
  {
    std::ifstream in(log, std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::optional<Session> s;
  std::size_t good = 0;  // end of the last intact event, newline included
  while (good < text.size()) {
    const auto nl = text.find('\n', good);
    if (nl == std::string::npos) break;  // unterminated: never acknowledged
    json ev;
    try {
      ev = json::parse(std::string_view(text).substr(good, nl - good));
    } catch (const json::parse_error&) {
      break;
    }
    good = nl + 1;
    const auto type = ev.value("type", std::string{});
    if (type == "created") {
      s = Session{ev.value("id", std::string{}), ev.value("prompt", std::string{}),
                  ev.value("created_at", std::string{}), {}};
    } else if (type == "decision" && s) {
      const auto v = parse_verdict(ev.value("verdict", std::string{}));
      if (!v) continue;
      s->decisions.push_back(Decision{ev.value("feature", json::object()), *v,
                                      ev.value("decided_at", std::string{}),
                                      ev.value("note", std::string{})});
    }
  }
  // Cut the torn tail so later appends start on a fresh line.
  if (good < text.size()) std::filesystem::resize_file(log, good);
  if (s && !s->id.empty()) sessions_[s->id] = std::move(*s);
}

void SessionStore::append(const std::string& id, const json& event) {
  const auto path = dir_ / (id + ".log");
  const auto line = event.dump() + "\n";
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot open session log " + path.string() + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < line.size()) {
    const auto r = ::write(fd, line.data() + written, line.size() - written);
    if (r < 0) {
      if (errno == EINTR) continue;
      const auto err = errno;
      ::close(fd);
      throw Error("write to session log failed: " + std::string(std::strerror(err)));
    }
    written += static_cast<std::size_t>(r);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error("fsync of session log failed: " + path.string());
}

Session SessionStore::create(std::string prompt) {
  std::lock_guard lock(mutex_);
  std::random_device rd;
  std::string id;
  do {
    const auto hi = static_cast<std::uint64_t>(rd()) << 32 | rd();
    id = to_hex(hi);
  } while (sessions_.contains(id));
  Session s{id, std::move(prompt), utc_timestamp(), {}};
  append(id, {{"type", "created"}, {"id", s.id}, {"prompt", s.prompt}, {"created_at", s.created_at}});
  sessions_[id] = s;
  return s;
}

std::optional<Session> SessionStore::get(std::string_view id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(std::string(id));
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

Session SessionStore::decide(std::string_view id, json feature, Verdict verdict, std::string note) {
  if (!feature.is_object() || !feature.contains("text") || !feature["text"].is_string() ||
      feature["text"].get<std::string>().empty())
    throw std::invalid_argument("feature needs a nonempty 'text'");
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(std::string(id));
  if (it == sessions_.end()) throw NotFound("unknown session '" + std::string(id) + "'");
  Decision d{std::move(feature), verdict, utc_timestamp(), std::move(note)};
  json ev = {{"type", "decision"},
             {"feature", d.feature},
             {"verdict", std::string(to_string(verdict))},
             {"decided_at", d.decided_at}};
  if (!d.note.empty()) ev["note"] = d.note;
  append(it->first, ev);
  it->second.decisions.push_back(std::move(d));
  return it->second;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace gamefeat
