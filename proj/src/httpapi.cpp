#include "conscope/httpapi.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "conscope/csv.hpp"
#include "conscope/errors.hpp"

namespace conscope {

using nlohmann::ordered_json;

namespace {

ApiResponse ok(const ordered_json& body) { return {200, body.dump() + "\n"}; }

ApiResponse fail(int status, const std::string& message) {
  ordered_json body;
  body["error"] = message;
  return {status, body.dump() + "\n"};
}

std::optional<std::string> param(const QueryParams& query, const std::string& key) {
  auto it = query.find(key);
  if (it == query.end()) return std::nullopt;
  return it->second;
}

template <class Int>
std::optional<Int> parse_int(const std::string& text) {
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<double> parse_double(const std::string& text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(sep, start);
    const auto end = pos == std::string_view::npos ? text.size() : pos;
    parts.emplace_back(text.substr(start, end - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <class Vec>
ordered_json to_array(const Vec& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ordered_json meta_json(const RunMeta& meta) {
  ordered_json j;
  j["schema_version"] = meta.schema_version;
  j["run_id"] = meta.run_id;
  j["task"] = to_string(meta.task);
  j["n"] = meta.n;
  j["d"] = meta.d;
  j["checkpoints"] = meta.checkpoints;
  j["covariates"] = ordered_json::array();
  for (const auto& c : meta.covariates) {
    ordered_json cj;
    cj["name"] = c.name;
    cj["kind"] = to_string(c.kind);
    if (c.kind == CovariateKind::Categorical) cj["categories"] = c.categories;
    j["covariates"].push_back(std::move(cj));
  }
  return j;
}

// Resolves ?checkpoint=, defaulting to the last checkpoint.
const CheckpointData* resolve_checkpoint(const LoadedRun& run, const QueryParams& query) {
  const auto label = param(query, "checkpoint");
  if (!label || label->empty()) return &run.last_checkpoint();
  for (const auto& c : run.checkpoints)
    if (c.representation.checkpoint == *label) return &c;
  return nullptr;
}

}  // namespace

ApiService::ApiService(std::vector<LoadedRun> runs) {
  if (runs.empty()) throw Error("no runs to serve");
  std::set<std::string> ids;
  for (auto& run : runs) {
    if (!ids.insert(run.meta.run_id).second) throw Error("duplicate run_id '" + run.meta.run_id + "'");
    runs_.push_back(std::make_shared<const LoadedRun>(std::move(run)));
  }
}

const LoadedRun* ApiService::find(const std::string& run_id) const {
  for (const auto& run : runs_)
    if (run->meta.run_id == run_id) return run.get();
  return nullptr;
}

std::size_t ApiService::cached_projections() const {
  std::lock_guard lock(cache_mutex_);
  return projections_.size();
}

std::size_t ApiService::cached_reports() const {
  std::lock_guard lock(cache_mutex_);
  return reports_.size();
}

ApiResponse ApiService::handle(std::string_view path, const QueryParams& query) const {
  try {
    const auto parts = split(path, '/');
    // "/api/runs/x" -> {"", "api", "runs", "x"}
    if (parts.size() < 3 || !parts[0].empty() || parts[1] != "api") return fail(404, "unknown endpoint");
    if (parts.size() == 3 && parts[2] == "runs") return list_runs();
    if (parts.size() == 3 && parts[2] == "meta") return meta(query);
    if (parts[2] == "runs" && parts.size() >= 4) {
      const std::string& id = parts[3];
      if (parts.size() == 4) {
        QueryParams q = query;
        q.emplace("run", id);
        return meta(q);
      }
      if (parts.size() == 5 && parts[4] == "points") return points(id, query);
      if (parts.size() == 5 && parts[4] == "conscores") return conscores(id, query);
      if (parts.size() == 6 && parts[4] == "covariates") return covariate(id, parts[5], query);
    }
    return fail(404, "unknown endpoint");
  } catch (const NotFoundError& e) {
    return fail(404, e.what());
  } catch (const DomainError& e) {
    return fail(400, e.what());
  } catch (const std::exception& e) {
    return fail(500, e.what());
  }
}

ApiResponse ApiService::list_runs() const {
  ordered_json out = ordered_json::array();
  for (const auto& run : runs_) {
    ordered_json r;
    r["run_id"] = run->meta.run_id;
    r["task"] = to_string(run->meta.task);
    r["n"] = run->meta.n;
    r["d"] = run->meta.d;
    r["checkpoints"] = run->meta.checkpoints;
    ordered_json names = ordered_json::array();
    for (const auto& c : run->meta.covariates) names.push_back(c.name);
    r["covariates"] = std::move(names);
    out.push_back(std::move(r));
  }
  return ok(out);
}

ApiResponse ApiService::meta(const QueryParams& query) const {
  const auto id = param(query, "run");
  const LoadedRun* run = id ? find(*id) : runs_.front().get();
  if (!run) return fail(404, "unknown run '" + *id + "'");
  return ok(meta_json(run->meta));
}

std::shared_ptr<const Projection> ApiService::projection(const LoadedRun& run, const std::string& checkpoint,
                                                         long dims) const {
  const std::string key = run.meta.run_id + '\x1f' + checkpoint + '\x1f' + std::to_string(dims);
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = projections_.find(key); it != projections_.end()) return it->second;
  }
  auto fresh = std::make_shared<const Projection>(pca_fit(run.checkpoint(checkpoint).representation.values, dims));
  std::lock_guard lock(cache_mutex_);
  return projections_.emplace(key, std::move(fresh)).first->second;
}

ApiResponse ApiService::points(const std::string& run_id, const QueryParams& query) const {
  const LoadedRun* run = find(run_id);
  if (!run) return fail(404, "unknown run '" + run_id + "'");
  const CheckpointData* ckpt = resolve_checkpoint(*run, query);
  if (!ckpt) return fail(404, "unknown checkpoint '" + *param(query, "checkpoint") + "'");

  long dims = 2;
  if (auto text = param(query, "dims")) {
    const auto parsed = parse_int<long>(*text);
    if (!parsed || (*parsed != 2 && *parsed != 3)) return fail(400, "dims must be 2 or 3");
    dims = *parsed;
  }
  if (static_cast<std::size_t>(dims) > run->meta.d)
    return fail(400, "dims=" + std::to_string(dims) + " exceeds representation dimension d=" + std::to_string(run->meta.d));

  const std::string& label = ckpt->representation.checkpoint;
  const auto proj = projection(*run, label, dims);
  const Eigen::MatrixXd coords = project_points(*proj, ckpt->representation.values);
  const auto normal = project_direction(*proj, ckpt->final_layer.weights);

  ordered_json out;
  out["run_id"] = run->meta.run_id;
  out["checkpoint"] = label;
  out["dims"] = dims;
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < coords.rows(); ++i) rows.push_back(to_array(coords.row(i)));
  out["coords"] = std::move(rows);
  out["sample_ids"] = run->sample_ids;
  out["y_true"] = to_array(run->labels.y_true);
  ordered_json y_pred = ordered_json::array();
  for (Eigen::Index i = 0; i < run->labels.y_score.size(); ++i) {
    const double s = run->labels.y_score(i);
    if (run->meta.task == Task::BinaryClassification) y_pred.push_back(s >= 0.5 ? 1 : 0);
    else y_pred.push_back(s);
  }
  out["y_pred"] = std::move(y_pred);
  out["boundary_normal"] = to_array(normal.direction);
  out["boundary_approximate"] = normal.approximate;
  out["explained_ratio"] = to_array(proj->explained_ratio);
  return ok(out);
}

ApiResponse ApiService::covariate(const std::string& run_id, const std::string& name, const QueryParams& query) const {
  const LoadedRun* run = find(run_id);
  if (!run) return fail(404, "unknown run '" + run_id + "'");
  if (!resolve_checkpoint(*run, query)) return fail(404, "unknown checkpoint '" + *param(query, "checkpoint") + "'");
  const auto& desc = run->descriptor(name);
  const auto& column = run->covariate(name);
  ordered_json out;
  out["run_id"] = run->meta.run_id;
  out["name"] = desc.name;
  out["kind"] = to_string(desc.kind);
  if (desc.kind == CovariateKind::Categorical) out["categories"] = desc.categories;
  ordered_json values = ordered_json::array();
  for (const auto& cell : column) {
    if (!cell) values.push_back(nullptr);
    else if (desc.kind == CovariateKind::Categorical) values.push_back(desc.categories.at(static_cast<std::size_t>(*cell)));
    else values.push_back(*cell);
  }
  out["values"] = std::move(values);
  return ok(out);
}

ApiResponse ApiService::conscores(const std::string& run_id, const QueryParams& query) const {
  const LoadedRun* run = find(run_id);
  if (!run) return fail(404, "unknown run '" + run_id + "'");
  const CheckpointData* ckpt = resolve_checkpoint(*run, query);
  if (!ckpt) return fail(404, "unknown checkpoint '" + *param(query, "checkpoint") + "'");

  ConScoreOptions options;
  if (auto text = param(query, "permutations")) {
    const auto parsed = parse_int<long long>(*text);
    if (!parsed || *parsed < 0 || *parsed > 100000) return fail(400, "permutations must be an integer in 0..100000");
    options.permutations = static_cast<std::size_t>(*parsed);
  }
  if (auto text = param(query, "seed")) {
    const auto parsed = parse_int<std::uint64_t>(*text);
    if (!parsed) return fail(400, "seed must be a non-negative integer");
    options.seed = *parsed;
  }
  if (auto text = param(query, "ridge_ols")) {
    const auto parsed = parse_double(*text);
    if (!parsed || *parsed < 0.0) return fail(400, "ridge_ols must be a finite number >= 0");
    options.ridge_ols = *parsed;
  }
  if (auto text = param(query, "ridge_logistic")) {
    const auto parsed = parse_double(*text);
    if (!parsed || *parsed <= 0.0) return fail(400, "ridge_logistic must be a finite number > 0");
    options.ridge_logistic = *parsed;
  }
  std::vector<std::string> selection;
  if (auto text = param(query, "covariates"); text && !text->empty() && *text != "all") selection = split(*text, ',');

  const std::string& label = ckpt->representation.checkpoint;
  std::ostringstream key;
  key << run->meta.run_id << '\x1f' << label << '\x1f' << options.permutations << '\x1f' << options.seed << '\x1f'
      << (options.ridge_ols ? csv::format_real(*options.ridge_ols) : "auto") << '\x1f'
      << csv::format_real(options.ridge_logistic);
  for (const auto& s : selection) key << '\x1f' << s;
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = reports_.find(key.str()); it != reports_.end()) return {200, *it->second};
  }
  auto body = std::make_shared<const std::string>(report_to_json(compute_report(*run, label, selection, options)));
  std::lock_guard lock(cache_mutex_);
  return {200, *reports_.emplace(key.str(), std::move(body)).first->second};
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  const ApiService& service;
  httplib::Server server;
  explicit Impl(const ApiService& s) : service(s) {}
};

HttpServer::HttpServer(const ApiService& service, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& server = impl_->server;
  // httplib's default sets SO_REUSEPORT, which lets a second server share a
  // busy port silently.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  if (static_dir && !server.set_mount_point("/", static_dir->string()))
    throw IoError(static_dir->string() + ": static directory not found");
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  server.Get(R"(.*)", [this](const httplib::Request& req, httplib::Response& res) {
    QueryParams query(req.params.begin(), req.params.end());
    const ApiResponse response = impl_->service.handle(req.path, query);
    res.status = response.status;
    res.set_content(response.body, "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& server = impl_->server;
  if (port == 0) {
    const int bound = server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host + " on any port");
    return bound;
  }
  if (!server.bind_to_port(host, port))
    throw IoError("cannot bind " + host + ":" + std::to_string(port) + " (in use or insufficient privilege)");
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace conscope
