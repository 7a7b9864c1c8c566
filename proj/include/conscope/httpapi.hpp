#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conscope/conscore.hpp"
#include "conscope/dataio.hpp"
#include "conscope/reduce.hpp"

namespace conscope {

struct ApiResponse {
  int status = 200;
  std::string body;  // always JSON
};

using QueryParams = std::multimap<std::string, std::string>;

/// Read-only JSON API over a fixed set of runs. Projections and Con-score
/// reports are memoised; a cached value is always identical to a fresh
/// computation, so concurrent callers may race on insertion harmlessly.
///
///   GET /api/runs
///   GET /api/meta?run=ID
///   GET /api/runs/{id}/points?checkpoint=L&dims=2|3
///   GET /api/runs/{id}/covariates/{name}?checkpoint=L
///   GET /api/runs/{id}/conscores?checkpoint=L&permutations=N&seed=S
class ApiService {
 public:
  /// Throws Error when `runs` is empty or two runs share a run_id.
  explicit ApiService(std::vector<LoadedRun> runs);

  ApiResponse handle(std::string_view path, const QueryParams& query) const;

  ApiResponse list_runs() const;
  ApiResponse meta(const QueryParams& query) const;
  ApiResponse points(const std::string& run_id, const QueryParams& query) const;
  ApiResponse covariate(const std::string& run_id, const std::string& name, const QueryParams& query) const;
  ApiResponse conscores(const std::string& run_id, const QueryParams& query) const;

  std::size_t cached_projections() const;
  std::size_t cached_reports() const;

 private:
  const LoadedRun* find(const std::string& run_id) const;
  std::shared_ptr<const Projection> projection(const LoadedRun& run, const std::string& checkpoint, long dims) const;

  std::vector<std::shared_ptr<const LoadedRun>> runs_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const Projection>> projections_;
  mutable std::map<std::string, std::shared_ptr<const std::string>> reports_;
};

/// Socket front end for ApiService (cpp-httplib). Every response carries
/// `Access-Control-Allow-Origin: *`.
class HttpServer {
 public:
  explicit HttpServer(const ApiService& service, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the bound
  /// port. Throws IoError when binding fails (port in use, no privilege).
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace conscope
