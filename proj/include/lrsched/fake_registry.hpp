#pragma once

// In-memory Docker Registry v2 stand-in used by tests, the simulator's
// bundled fixtures, and CLI integration tests (served over HTTP).

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lrsched/registry.hpp"

namespace lrsched {

struct FakeImage {
  std::string name;
  std::string tag;
  std::string config_digest;
  std::vector<LayerMetadata> layers;
  bool as_manifest_list = false;  // serve a one-entry manifest list for the tag
  bool schema1 = false;           // serve a legacy schema 1 manifest
};

class FakeRegistry {
 public:
  void add_image(FakeImage image) {
    std::lock_guard lock(mu_);
    images_[image.name + ":" + image.tag] = std::move(image);
  }

  /// Catalog page size when the client does not pass `n`; 0 disables paging.
  void set_page_size(std::size_t n) {
    std::lock_guard lock(mu_);
    page_size_ = n;
  }

  /// Every request for `path` (no query string) answers with `status`.
  void fail_path(const std::string& path, int status) {
    std::lock_guard lock(mu_);
    failures_[path] = status;
  }

  void set_down(bool down) { down_ = down; }
  bool down() const { return down_; }
  std::size_t request_count() const { return requests_; }

  HttpResponse handle(const std::string& target, const HttpHeaders& /*headers*/) const {
    ++requests_;
    std::lock_guard lock(mu_);
    auto qpos = target.find('?');
    const std::string path = target.substr(0, qpos);
    const auto query = parse_query(qpos == std::string::npos ? "" : target.substr(qpos + 1));

    if (auto it = failures_.find(path); it != failures_.end()) return error(it->second, "INJECTED", "injected failure");
    if (path == "/v2/" || path == "/v2") return json_response(nlohmann::json::object());
    if (path == "/v2/_catalog") return catalog(query);

    const std::string kTags = "/tags/list";
    const std::string kManifests = "/manifests/";
    if (path.rfind("/v2/", 0) != 0) return error(404, "NOT_FOUND", "unknown path");
    if (path.size() > kTags.size() && path.compare(path.size() - kTags.size(), kTags.size(), kTags) == 0) {
      return tags(path.substr(4, path.size() - 4 - kTags.size()));
    }
    if (auto m = path.rfind(kManifests); m != std::string::npos && m > 4) {
      return manifest(path.substr(4, m - 4), path.substr(m + kManifests.size()));
    }
    return error(404, "NOT_FOUND", "unknown path");
  }

 private:
  static std::map<std::string, std::string> parse_query(const std::string& q) {
    std::map<std::string, std::string> out;
    std::size_t start = 0;
    while (start < q.size()) {
      auto amp = q.find('&', start);
      auto part = q.substr(start, amp == std::string::npos ? std::string::npos : amp - start);
      auto eq = part.find('=');
      if (eq != std::string::npos) out[part.substr(0, eq)] = part.substr(eq + 1);
      if (amp == std::string::npos) break;
      start = amp + 1;
    }
    return out;
  }

  static HttpResponse json_response(const nlohmann::json& body, const std::string& content_type = "application/json") {
    HttpResponse r;
    r.status = 200;
    r.body = body.dump();
    r.headers.emplace("Content-Type", content_type);
    return r;
  }

  static HttpResponse error(int status, const std::string& code, const std::string& message) {
    HttpResponse r;
    r.status = status;
    r.body = nlohmann::json{{"errors", {{{"code", code}, {"message", message}}}}}.dump();
    r.headers.emplace("Content-Type", "application/json");
    return r;
  }

  std::vector<std::string> repositories() const {
    std::set<std::string> names;
    for (const auto& [_, img] : images_) names.insert(img.name);
    return {names.begin(), names.end()};
  }

  HttpResponse catalog(const std::map<std::string, std::string>& query) const {
    auto repos = repositories();
    std::size_t n = page_size_;
    if (auto it = query.find("n"); it != query.end()) n = std::stoul(it->second);
    auto begin = repos.begin();
    if (auto it = query.find("last"); it != query.end()) begin = std::upper_bound(repos.begin(), repos.end(), it->second);
    auto end = (n == 0 || std::size_t(repos.end() - begin) <= n) ? repos.end() : begin + std::ptrdiff_t(n);
    auto r = json_response({{"repositories", std::vector<std::string>(begin, end)}});
    if (end != repos.end()) {
      r.headers.emplace("Link", "</v2/_catalog?last=" + *(end - 1) + "&n=" + std::to_string(n) + ">; rel=\"next\"");
    }
    return r;
  }

  HttpResponse tags(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& [_, img] : images_) {
      if (img.name == name) out.push_back(img.tag);
    }
    if (out.empty()) return error(404, "NAME_UNKNOWN", "repository name not known to registry");
    return json_response({{"name", name}, {"tags", out}});
  }

  static nlohmann::json image_manifest(const FakeImage& img) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : img.layers) {
      layers.push_back({{"mediaType", "application/vnd.docker.image.rootfs.diff.tar.gzip"},
                        {"size", l.size},
                        {"digest", l.layer}});
    }
    return {{"schemaVersion", 2},
            {"mediaType", kManifestV2},
            {"config", {{"mediaType", "application/vnd.docker.container.image.v1+json"},
                        {"size", 1024},
                        {"digest", img.config_digest}}},
            {"layers", layers}};
  }

  static std::string platform_digest(const FakeImage& img) { return "sha256:platform-" + img.name + "-" + img.tag; }

  HttpResponse manifest(const std::string& name, const std::string& reference) const {
    if (reference.rfind("sha256:", 0) == 0) {
      for (const auto& [_, img] : images_) {
        if (img.name == name && img.as_manifest_list && platform_digest(img) == reference) {
          return json_response(image_manifest(img), kManifestV2);
        }
      }
      return error(404, "MANIFEST_UNKNOWN", "manifest unknown");
    }
    auto it = images_.find(name + ":" + reference);
    if (it == images_.end()) return error(404, "MANIFEST_UNKNOWN", "manifest unknown");
    const auto& img = it->second;
    if (img.schema1) {
      return json_response({{"schemaVersion", 1}, {"name", name}, {"tag", reference}, {"fsLayers", nlohmann::json::array()}},
                           "application/vnd.docker.distribution.manifest.v1+prettyjws");
    }
    if (img.as_manifest_list) {
      return json_response({{"schemaVersion", 2},
                            {"mediaType", kManifestListV2},
                            {"manifests",
                             {{{"mediaType", kManifestV2},
                               {"digest", platform_digest(img)},
                               {"size", 1000},
                               {"platform", {{"architecture", "amd64"}, {"os", "linux"}}}}}}},
                           kManifestListV2);
    }
    return json_response(image_manifest(img), kManifestV2);
  }

  mutable std::mutex mu_;
  std::map<std::string, FakeImage> images_;
  std::map<std::string, int> failures_;
  std::size_t page_size_ = 0;
  std::atomic<bool> down_{false};
  mutable std::atomic<std::size_t> requests_{0};
};

/// Calls the fake directly, no sockets.
class InMemoryTransport : public Transport {
 public:
  explicit InMemoryTransport(const FakeRegistry& registry) : registry_(registry) {}

  HttpResponse get(const std::string& target, const HttpHeaders& headers) override {
    if (registry_.down()) throw RegistryUnavailable("GET " + target + ": connection refused");
    return registry_.handle(target, headers);
  }

 private:
  const FakeRegistry& registry_;
};

/// Serves a FakeRegistry over HTTP on 127.0.0.1 and an ephemeral port.
class FakeRegistryServer {
 public:
  explicit FakeRegistryServer(const FakeRegistry& registry) : registry_(registry) {
    server_.Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
      std::string target = req.path;
      if (!req.params.empty()) {
        target += '?';
        bool first = true;
        for (const auto& [k, v] : req.params) {
          if (!first) target += '&';
          target += k + "=" + v;
          first = false;
        }
      }
      HttpHeaders headers(req.headers.begin(), req.headers.end());
      auto out = registry_.handle(target, headers);
      res.status = out.status;
      std::string content_type = "application/json";
      for (const auto& [k, v] : out.headers) {
        if (k == "Content-Type") {
          content_type = v;
        } else {
          res.set_header(k, v);
        }
      }
      res.set_content(out.body, content_type);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw Error("fake registry: cannot bind a local port");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeRegistryServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  FakeRegistryServer(const FakeRegistryServer&) = delete;
  FakeRegistryServer& operator=(const FakeRegistryServer&) = delete;

  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  const FakeRegistry& registry_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace lrsched
