#include "chainaudit/probe_cache.hpp"

#include <fstream>

#include "chainaudit/error.hpp"

namespace chainaudit {

using nlohmann::json;

ProbeCache::ProbeCache(std::chrono::seconds ttl, Clock clock) : ttl_(ttl), clock_(std::move(clock)) {}

ProbeCache::ProbeCache(const std::filesystem::path& file, std::chrono::seconds ttl, Clock clock)
    : ProbeCache(ttl, std::move(clock)) {
  file_ = file;
  std::ifstream in(file);
  if (!in) {
    std::ofstream create(file, std::ios::app);
    if (!create) throw Error(ErrorCode::IoError, "cannot create cache file " + file.string());
    return;
  }
  std::string line;
  while (std::getline(in, line)) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    try {
      Timestamp at;
      if (!parse_timestamp(j.at("stored_at").get<std::string>(), at)) continue;
      entries_[{j.at("kind").get<std::string>(), j.at("subject").get<std::string>()}] = Entry{at, j.at("value")};
    } catch (const json::exception&) {
      continue;
    }
  }
}

std::optional<json> ProbeCache::get(const std::string& kind, const std::string& subject) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find({kind, subject});
  if (it == entries_.end()) return std::nullopt;
  if (clock_() >= it->second.stored_at + ttl_) return std::nullopt;
  return it->second.value;
}

void ProbeCache::put(const std::string& kind, const std::string& subject, const json& value) {
  const Timestamp now = clock_();
  std::lock_guard lock(mu_);
  entries_[{kind, subject}] = Entry{now, value};
  if (!file_) return;
  json line{{"kind", kind}, {"subject", subject}, {"stored_at", format_timestamp(now)}, {"value", value}};
  std::ofstream out(*file_, std::ios::app);
  if (!out) throw Error(ErrorCode::IoError, "cannot append to cache file " + file_->string());
  out << line.dump() << '\n';
}

std::size_t ProbeCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

}  // namespace chainaudit
