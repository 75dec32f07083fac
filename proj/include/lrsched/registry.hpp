#pragma once

// Layer metadata from a Docker Registry HTTP API v2 endpoint, and the
// cache.json file that stores it keyed by "name:tag".

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lrsched/model.hpp"

namespace lrsched {

struct LayerMetadata {
  std::int64_t size = 0;
  std::string layer;

  bool operator==(const LayerMetadata&) const = default;
};

struct ImageMetadata {
  std::string id;
  std::string name;
  std::string name_without_repo;
  std::string tag;
  std::int64_t total_size = 0;
  std::vector<LayerMetadata> l_meta;

  std::string key() const { return name + ":" + tag; }
  bool operator==(const ImageMetadata&) const = default;
};

struct ImageMetadataLists {
  std::string catch_file;  // runtime only, never serialized
  std::map<std::string, ImageMetadata> lists;

  bool operator==(const ImageMetadataLists& o) const { return lists == o.lists; }
};

inline void to_json(nlohmann::json& j, const LayerMetadata& m) { j = {{"size", m.size}, {"layer", m.layer}}; }

inline void from_json(const nlohmann::json& j, LayerMetadata& m) {
  j.at("size").get_to(m.size);
  j.at("layer").get_to(m.layer);
}

inline void to_json(nlohmann::json& j, const ImageMetadata& m) {
  j = {{"id", m.id},     {"name", m.name},             {"name_without_repo", m.name_without_repo},
       {"tag", m.tag},   {"total_size", m.total_size}, {"l_meta", m.l_meta}};
}

inline void from_json(const nlohmann::json& j, ImageMetadata& m) {
  j.at("id").get_to(m.id);
  j.at("name").get_to(m.name);
  j.at("name_without_repo").get_to(m.name_without_repo);
  j.at("tag").get_to(m.tag);
  j.at("total_size").get_to(m.total_size);
  j.at("l_meta").get_to(m.l_meta);
}

/// Strips a leading registry host ("myhost:5000/", "registry.local/",
/// "localhost/") from a repository name.
inline std::string strip_registry_host(const std::string& name) {
  auto slash = name.find('/');
  if (slash == std::string::npos) return name;
  auto first = std::string_view(name).substr(0, slash);
  if (first.find('.') != std::string_view::npos || first.find(':') != std::string_view::npos ||
      first == "localhost") {
    return name.substr(slash + 1);
  }
  return name;
}

inline ImageMetadata make_image_metadata(std::string id, std::string name, std::string tag,
                                         std::vector<LayerMetadata> layers) {
  ImageMetadata m;
  m.id = std::move(id);
  m.name_without_repo = strip_registry_host(name);
  m.name = std::move(name);
  m.tag = std::move(tag);
  m.l_meta = std::move(layers);
  for (const auto& l : m.l_meta) m.total_size += l.size;
  return m;
}

// ---------------------------------------------------------------------------
// cache.json

inline std::string cache_to_string(const ImageMetadataLists& lists) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, meta] : lists.lists) j[key] = meta;
  return j.dump(2) + "\n";
}

inline ImageMetadataLists cache_from_string(const std::string& text, std::string catch_file = {}) {
  ImageMetadataLists out;
  out.catch_file = std::move(catch_file);
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw CacheCorrupt("cache root must be an object");
    for (const auto& [key, value] : j.items()) {
      auto meta = value.get<ImageMetadata>();
      if (meta.key() != key) throw CacheCorrupt("entry '" + key + "' holds image " + meta.key());
      std::int64_t sum = 0;
      for (const auto& l : meta.l_meta) {
        if (l.size < 0 || l.layer.empty()) throw CacheCorrupt("entry '" + key + "' has an invalid layer");
        sum += l.size;
      }
      if (sum != meta.total_size) throw CacheCorrupt("entry '" + key + "' total_size does not match its layers");
      out.lists.emplace(key, std::move(meta));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CacheCorrupt(std::string("malformed cache: ") + e.what());
  }
  return out;
}

inline ImageMetadataLists load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheCorrupt("cannot open cache " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return cache_from_string(buf.str(), path.string());
}

namespace detail {
inline std::mutex& cache_write_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// observe a truncated cache.
inline void save_cache(const ImageMetadataLists& lists, const std::filesystem::path& path) {
  std::lock_guard lock(detail::cache_write_mutex());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << cache_to_string(lists);
    out.flush();
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Exact "name:tag" lookup; a name carrying a registry host also matches the
/// bare repository name.
inline const ImageMetadata& lookup(const ImageMetadataLists& lists, const std::string& name, const std::string& tag) {
  if (auto it = lists.lists.find(name + ":" + tag); it != lists.lists.end()) return it->second;
  if (auto bare = strip_registry_host(name); bare != name) {
    if (auto it = lists.lists.find(bare + ":" + tag); it != lists.lists.end()) return it->second;
  }
  throw UnknownImage(name + ":" + tag);
}

/// Builds the scheduling catalog. Layers with the same digest in different
/// images collapse into one catalog layer.
inline LayerCatalog catalog_from_cache(const ImageMetadataLists& lists) {
  LayerCatalog catalog;
  std::map<std::string, std::int64_t> sizes;
  for (const auto& [key, meta] : lists.lists) {
    for (const auto& l : meta.l_meta) {
      auto [it, inserted] = sizes.emplace(l.layer, l.size);
      if (!inserted && it->second != l.size) {
        throw DigestSizeConflict("layer " + l.layer + " is " + std::to_string(it->second) + " bytes in one image and " +
                                 std::to_string(l.size) + " in " + key);
      }
    }
  }
  for (const auto& [digest, size] : sizes) catalog.add_layer(LayerId(digest), size);
  for (const auto& [key, meta] : lists.lists) {
    std::vector<LayerId> layers;
    for (const auto& l : meta.l_meta) {
      LayerId id(l.layer);
      // A manifest may repeat a layer (e.g. identical empty layers); keep the first.
      if (std::find(layers.begin(), layers.end(), id) == layers.end()) layers.push_back(std::move(id));
    }
    catalog.add_image(ImageRef{meta.name, meta.tag}, std::move(layers));
  }
  return catalog;
}

// ---------------------------------------------------------------------------
// HTTP

struct HttpResponse {
  int status = 0;
  std::string body;
  std::multimap<std::string, std::string> headers;

  std::optional<std::string> header(const std::string& name) const {
    for (const auto& [k, v] : headers) {
      if (k.size() == name.size() &&
          std::equal(k.begin(), k.end(), name.begin(), [](char a, char b) { return std::tolower(a) == std::tolower(b); })) {
        return v;
      }
    }
    return std::nullopt;
  }
};

using HttpHeaders = std::multimap<std::string, std::string>;

/// GET-only transport. Implementations throw RegistryUnavailable when the
/// endpoint cannot be reached.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse get(const std::string& target, const HttpHeaders& headers) = 0;
};

struct RegistryAuth {
  std::string bearer_token;
  std::string username;
  std::string password;
};

struct RegistryConfig {
  std::string base_url;
  std::chrono::seconds poll_interval{10};
  std::filesystem::path cache_path = "cache.json";
  std::optional<RegistryAuth> auth;
  std::chrono::seconds timeout{5};

  void validate() const {
    if (poll_interval.count() <= 0) throw InvalidModel("poll_interval must be positive");
  }
};

class HttpTransport : public Transport {
 public:
  explicit HttpTransport(const RegistryConfig& cfg) : client_(cfg.base_url) {
    if (!client_.is_valid()) throw RegistryUnavailable("invalid registry URL '" + cfg.base_url + "'");
    client_.set_connection_timeout(cfg.timeout);
    client_.set_read_timeout(cfg.timeout);
    if (cfg.auth) {
      if (!cfg.auth->bearer_token.empty()) {
        client_.set_bearer_token_auth(cfg.auth->bearer_token);
      } else if (!cfg.auth->username.empty()) {
        client_.set_basic_auth(cfg.auth->username, cfg.auth->password);
      }
    }
  }

  HttpResponse get(const std::string& target, const HttpHeaders& headers) override {
    httplib::Headers h(headers.begin(), headers.end());
    auto res = client_.Get(target, h);
    if (!res) throw RegistryUnavailable("GET " + target + ": " + httplib::to_string(res.error()));
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    out.headers.insert(res->headers.begin(), res->headers.end());
    return out;
  }

 private:
  httplib::Client client_;
};

inline constexpr const char* kManifestV2 = "application/vnd.docker.distribution.manifest.v2+json";
inline constexpr const char* kManifestListV2 = "application/vnd.docker.distribution.manifest.list.v2+json";
inline constexpr const char* kOciManifest = "application/vnd.oci.image.manifest.v1+json";
inline constexpr const char* kOciIndex = "application/vnd.oci.image.index.v1+json";

namespace detail {

// Extracts the target of a `Link: <...>; rel="next"` header as a path+query.
inline std::optional<std::string> next_link(const HttpResponse& res) {
  auto link = res.header("Link");
  if (!link || link->find("rel=\"next\"") == std::string::npos) return std::nullopt;
  auto open = link->find('<');
  auto close = link->find('>', open);
  if (open == std::string::npos || close == std::string::npos) return std::nullopt;
  std::string target = link->substr(open + 1, close - open - 1);
  if (auto scheme = target.find("://"); scheme != std::string::npos) {
    auto path = target.find('/', scheme + 3);
    target = path == std::string::npos ? "/" : target.substr(path);
  }
  return target;
}

inline nlohmann::json parse_body(const HttpResponse& res, const std::string& what) {
  try {
    return nlohmann::json::parse(res.body);
  } catch (const nlohmann::json::exception& e) {
    throw RegistryProtocolError(res.status, what + ": malformed JSON body");
  }
}

inline void expect_ok(const HttpResponse& res, const std::string& what) {
  if (res.status < 200 || res.status >= 300) throw RegistryProtocolError(res.status, what);
}

}  // namespace detail

class RegistryClient {
 public:
  explicit RegistryClient(Transport& transport) : transport_(transport) {}

  /// Repository names from /v2/_catalog, following Link pagination.
  std::vector<std::string> fetch_catalog() { return paged("/v2/_catalog", "repositories"); }

  std::vector<std::string> fetch_tags(const std::string& name) {
    return paged("/v2/" + name + "/tags/list", "tags", name);
  }

  ImageMetadata fetch_image_metadata(const std::string& name, const std::string& tag) {
    auto manifest = fetch_manifest(name, tag, name + ":" + tag);
    if (manifest.contains("manifests")) {
      const auto& entries = manifest.at("manifests");
      if (!entries.is_array() || entries.empty()) throw UnsupportedManifest(name + ":" + tag + ": empty manifest list");
      // Multi-arch: the first platform entry wins.
      manifest = fetch_manifest(name, entries.at(0).at("digest").get<std::string>(), name + ":" + tag);
    }
    if (manifest.value("schemaVersion", 0) != 2 || !manifest.contains("layers")) {
      throw UnsupportedManifest(name + ":" + tag + ": not a schema 2 image manifest");
    }
    std::vector<LayerMetadata> layers;
    try {
      for (const auto& l : manifest.at("layers")) {
        layers.push_back({l.at("size").get<std::int64_t>(), l.at("digest").get<std::string>()});
      }
      std::string id;
      if (manifest.contains("config")) id = manifest.at("config").value("digest", "");
      return make_image_metadata(std::move(id), name, tag, std::move(layers));
    } catch (const nlohmann::json::exception& e) {
      throw UnsupportedManifest(name + ":" + tag + ": " + e.what());
    }
  }

 private:
  nlohmann::json fetch_manifest(const std::string& name, const std::string& reference, const std::string& image) {
    HttpHeaders h{{"Accept", std::string(kManifestV2) + ", " + kManifestListV2 + ", " + kOciManifest + ", " + kOciIndex}};
    auto res = transport_.get("/v2/" + name + "/manifests/" + reference, h);
    if (res.status == 404) throw UnknownImage(image);
    detail::expect_ok(res, "manifest " + image);
    return detail::parse_body(res, "manifest " + image);
  }

  std::vector<std::string> paged(std::string target, const char* field, const std::string& not_found = {}) {
    std::vector<std::string> out;
    for (int page = 0; page < 10000; ++page) {
      auto res = transport_.get(target, {});
      if (res.status == 404 && !not_found.empty()) throw UnknownImage(not_found);
      detail::expect_ok(res, "GET " + target);
      auto body = detail::parse_body(res, "GET " + target);
      if (body.contains(field) && body.at(field).is_array()) {
        for (const auto& v : body.at(field)) out.push_back(v.get<std::string>());
      }
      auto next = detail::next_link(res);
      if (!next) return out;
      target = *next;
    }
    throw RegistryProtocolError(200, "pagination did not terminate");
  }

  Transport& transport_;
};

struct RefreshResult {
  ImageMetadataLists lists;
  bool stale = false;
  std::vector<std::string> warnings;
};

/// Walks catalog -> tags -> manifests and rewrites the cache file. Images
/// that fail with a transient error keep their previous cache entry; images
/// the registry reports as gone are dropped. When the catalog itself cannot
/// be read the previous cache is returned flagged stale.
inline RefreshResult refresh_cache(const RegistryConfig& cfg, Transport& transport) {
  cfg.validate();
  RefreshResult result;
  std::optional<ImageMetadataLists> previous;
  if (!cfg.cache_path.empty() && std::filesystem::exists(cfg.cache_path)) {
    try {
      previous = load_cache(cfg.cache_path);
    } catch (const CacheCorrupt& e) {
      result.warnings.push_back(std::string("ignoring previous cache: ") + e.what());
    }
  }

  RegistryClient client(transport);
  std::vector<std::string> repos;
  try {
    repos = client.fetch_catalog();
  } catch (const Error& e) {
    if (!previous) throw RegistryUnavailable(std::string("registry unavailable and no cache: ") + e.what());
    result.lists = std::move(*previous);
    result.stale = true;
    result.warnings.push_back(std::string("registry unavailable, serving stale cache: ") + e.what());
    return result;
  }

  auto keep_previous = [&](const std::string& key) {
    if (!previous) return;
    if (auto it = previous->lists.find(key); it != previous->lists.end()) result.lists.lists.insert(*it);
  };
  auto keep_previous_repo = [&](const std::string& repo) {
    if (!previous) return;
    for (const auto& [key, meta] : previous->lists) {
      if (meta.name == repo) result.lists.lists.insert({key, meta});
    }
  };

  for (const auto& repo : repos) {
    std::vector<std::string> tags;
    try {
      tags = client.fetch_tags(repo);
    } catch (const UnknownImage& e) {
      result.warnings.push_back(std::string("skipping repository: ") + e.what());
      continue;
    } catch (const Error& e) {
      result.warnings.push_back(std::string("tags for ") + repo + ": " + e.what());
      keep_previous_repo(repo);
      continue;
    }
    for (const auto& tag : tags) {
      try {
        auto meta = client.fetch_image_metadata(repo, tag);
        result.lists.lists[meta.key()] = std::move(meta);
      } catch (const UnknownImage& e) {
        result.warnings.push_back(std::string("skipping image: ") + e.what());
      } catch (const Error& e) {
        result.warnings.push_back(std::string("image ") + repo + ":" + tag + ": " + e.what());
        keep_previous(repo + ":" + tag);
      }
    }
  }

  result.lists.catch_file = cfg.cache_path.string();
  if (!cfg.cache_path.empty()) save_cache(result.lists, cfg.cache_path);
  return result;
}

inline RefreshResult refresh_cache(const RegistryConfig& cfg) {
  HttpTransport transport(cfg);
  return refresh_cache(cfg, transport);
}

/// Background refresher. Readers get immutable snapshots that are swapped
/// whole after every successful refresh.
class RegistryWatcher {
 public:
  using Listener = std::function<void(const RefreshResult&)>;
  using ErrorListener = std::function<void(const std::exception&)>;

  RegistryWatcher(RegistryConfig cfg, std::shared_ptr<Transport> transport)
      : cfg_(std::move(cfg)), transport_(std::move(transport)) {
    cfg_.validate();
  }

  ~RegistryWatcher() { stop(); }
  RegistryWatcher(const RegistryWatcher&) = delete;
  RegistryWatcher& operator=(const RegistryWatcher&) = delete;

  void on_refresh(Listener l) { listener_ = std::move(l); }
  void on_error(ErrorListener l) { error_listener_ = std::move(l); }

  RefreshResult refresh_now() {
    auto result = refresh_cache(cfg_, *transport_);
    {
      std::lock_guard lock(mu_);
      snapshot_ = std::make_shared<const ImageMetadataLists>(result.lists);
      ++refreshes_;
    }
    cv_.notify_all();
    return result;
  }

  void start() {
    if (thread_.joinable()) return;
    thread_ = std::jthread([this](std::stop_token stop) { loop(stop); });
  }

  void stop() {
    if (!thread_.joinable()) return;
    thread_.request_stop();
    thread_.join();
  }

  std::shared_ptr<const ImageMetadataLists> snapshot() const {
    std::lock_guard lock(mu_);
    return snapshot_;
  }

  std::size_t refresh_count() const {
    std::lock_guard lock(mu_);
    return refreshes_;
  }

  /// Blocks until at least `n` refreshes completed or `timeout` elapsed.
  bool wait_for_refreshes(std::size_t n, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return refreshes_ >= n; });
  }

 private:
  void loop(std::stop_token stop) {
    while (!stop.stop_requested()) {
      try {
        auto result = refresh_now();
        if (listener_) listener_(result);
      } catch (const std::exception& e) {
        if (error_listener_) error_listener_(e);
      }
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, stop, cfg_.poll_interval, [] { return false; });
    }
  }

  RegistryConfig cfg_;
  std::shared_ptr<Transport> transport_;
  Listener listener_;
  ErrorListener error_listener_;
  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  std::shared_ptr<const ImageMetadataLists> snapshot_;
  std::size_t refreshes_ = 0;
  std::jthread thread_;
};

}  // namespace lrsched
