#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "treetune/dataset.hpp"

namespace treetune {

// Splits "https://host[:port]" into a client base and keeps any path prefix.
namespace detail {
struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};
inline UrlParts split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}
}  // namespace detail

// Download client for the public dataset ARFF endpoint, keyed by dataset id.
// Downloads are cached at <cache_dir>/<id>.arff; a cache hit skips the network
// entirely. `base_url` exists so tests can point at a local server.
inline Dataset fetch_openml(long dataset_id, const std::string& cache_dir,
                            std::string base_url = "") {
  if (base_url.empty()) {
    const char* env = std::getenv("TREETUNE_OPENML_URL");
    base_url = env ? env : "https://www.openml.org";
  }
  if (dataset_id <= 0)
    throw DataError("openml: id " + std::to_string(dataset_id) + " not found");

  namespace fs = std::filesystem;
  fs::create_directories(cache_dir);
  const fs::path cached = fs::path(cache_dir) / (std::to_string(dataset_id) + ".arff");
  if (!fs::exists(cached)) {
    auto base = detail::split_url(base_url);
    httplib::Client api(base.origin);
    api.set_follow_location(true);
    api.set_connection_timeout(20);
    api.set_read_timeout(60);

    std::string describe = base.path == "/" ? "" : base.path;
    describe += "/api/v1/json/data/" + std::to_string(dataset_id);
    auto res = api.Get(describe);
    if (!res)
      throw DataError("openml: request failed: " + httplib::to_string(res.error()));
    if (res->status == 404 || res->status == 412)
      throw DataError("openml: id " + std::to_string(dataset_id) + " not found");
    if (res->status != 200)
      throw DataError("openml: HTTP " + std::to_string(res->status));

    std::string arff_url;
    try {
      auto doc = nlohmann::json::parse(res->body);
      arff_url = doc.at("data_set_description").at("url").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("openml: bad description document: ") + e.what());
    }

    auto file = detail::split_url(arff_url);
    httplib::Client dl(file.origin);
    dl.set_follow_location(true);
    dl.set_connection_timeout(20);
    dl.set_read_timeout(120);
    auto body = dl.Get(file.path);
    if (!body)
      throw DataError("openml: download failed: " + httplib::to_string(body.error()));
    if (body->status != 200)
      throw DataError("openml: download HTTP " + std::to_string(body->status));

    const fs::path tmp = cached.string() + ".part";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw DataError("openml: cannot write cache at " + tmp.string());
      out << body->body;
    }
    fs::rename(tmp, cached);
  }

  Dataset ds = load_arff(cached.string());
  ds.external_id = dataset_id;
  return ds;
}

}  // namespace treetune
