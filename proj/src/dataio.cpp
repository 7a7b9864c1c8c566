#include "conscope/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <unordered_set>

#include <json.hpp>

#include "conscope/csv.hpp"
#include "conscope/errors.hpp"

namespace conscope {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Task task) {
  return task == Task::BinaryClassification ? "binary-classification" : "regression";
}

std::string_view to_string(CovariateKind kind) {
  return kind == CovariateKind::Continuous ? "continuous" : "categorical";
}

std::string_view to_string(Link link) { return link == Link::Sigmoid ? "sigmoid" : "identity"; }

std::optional<Task> parse_task(std::string_view text) {
  if (text == "binary-classification") return Task::BinaryClassification;
  if (text == "regression") return Task::Regression;
  return std::nullopt;
}

std::optional<CovariateKind> parse_covariate_kind(std::string_view text) {
  if (text == "continuous") return CovariateKind::Continuous;
  if (text == "categorical") return CovariateKind::Categorical;
  return std::nullopt;
}

std::optional<Link> parse_link(std::string_view text) {
  if (text == "sigmoid") return Link::Sigmoid;
  if (text == "identity") return Link::Identity;
  return std::nullopt;
}

fs::path checkpoint_dir(const fs::path& run_dir, std::string_view label) {
  return run_dir / ("ckpt_" + std::string(label));
}

// ---------------------------------------------------------------------------
// LoadedRun accessors

const CheckpointData& LoadedRun::checkpoint(std::string_view label) const {
  for (const auto& ckpt : checkpoints)
    if (ckpt.representation.checkpoint == label) return ckpt;
  throw NotFoundError("unknown checkpoint '" + std::string(label) + "'");
}

const CheckpointData& LoadedRun::last_checkpoint() const {
  if (checkpoints.empty()) throw NotFoundError("run has no checkpoints");
  return checkpoints.back();
}

std::size_t LoadedRun::covariate_index(std::string_view name) const {
  for (std::size_t i = 0; i < meta.covariates.size(); ++i)
    if (meta.covariates[i].name == name) return i;
  throw NotFoundError("unknown covariate '" + std::string(name) + "'");
}

const CovariateDescriptor& LoadedRun::descriptor(std::string_view name) const {
  return meta.covariates[covariate_index(name)];
}

const CovariateColumn& LoadedRun::covariate(std::string_view name) const {
  return covariates.at(covariate_index(name));
}

bool operator==(const LoadedRun& a, const LoadedRun& b) {
  if (!(a.meta == b.meta) || a.sample_ids != b.sample_ids || a.covariates != b.covariates) return false;
  if (a.labels.y_true != b.labels.y_true || a.labels.y_score != b.labels.y_score) return false;
  if (a.checkpoints.size() != b.checkpoints.size()) return false;
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
    const auto& x = a.checkpoints[i];
    const auto& y = b.checkpoints[i];
    if (x.representation.checkpoint != y.representation.checkpoint) return false;
    if (x.representation.values.rows() != y.representation.values.rows() ||
        x.representation.values.cols() != y.representation.values.cols() ||
        x.representation.values != y.representation.values)
      return false;
    if (x.final_layer.checkpoint != y.final_layer.checkpoint || x.final_layer.weights != y.final_layer.weights ||
        x.final_layer.bias != y.final_layer.bias || x.final_layer.link != y.final_layer.link)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Validation

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  for (const auto& v : violations) out << v.location << ": " << v.message << '\n';
  return out.str();
}

namespace {

bool safe_label(const std::string& label) {
  return !label.empty() && label != "." && label != ".." && label.find_first_of("/\\") == std::string::npos;
}

std::string repr_file(const std::string& label) { return "ckpt_" + label + "/representations.csv"; }
std::string layer_file(const std::string& label) { return "ckpt_" + label + "/final_layer.json"; }

}  // namespace

ValidationReport validate_run(const LoadedRun& run) {
  ValidationReport report;
  auto add = [&](std::string location, std::string message) {
    report.violations.push_back({std::move(location), std::move(message)});
  };
  const auto& meta = run.meta;
  const std::size_t n = meta.n;
  const std::size_t d = meta.d;

  if (meta.schema_version != kSchemaVersion)
    add("meta.json", "unsupported schema_version " + std::to_string(meta.schema_version));
  if (n < 2) add("meta.json", "n must be at least 2");
  if (d < 1) add("meta.json", "d must be at least 1");
  if (meta.checkpoints.empty()) add("meta.json", "no checkpoints listed");

  std::set<std::string> seen;
  for (const auto& label : meta.checkpoints) {
    if (!seen.insert(label).second) add("meta.json", "duplicate checkpoint label '" + label + "'");
    if (!safe_label(label)) add("meta.json", "checkpoint label '" + label + "' is not usable as a directory name");
  }
  seen.clear();
  for (const auto& cov : meta.covariates) {
    if (cov.name.empty()) add("meta.json", "covariate with empty name");
    if (!seen.insert(cov.name).second) add("meta.json", "duplicate covariate name '" + cov.name + "'");
    if (cov.name == "sample_id") add("meta.json", "covariate name 'sample_id' is reserved");
    if (cov.kind == CovariateKind::Categorical) {
      if (cov.categories.size() < 2) add("meta.json", "categorical covariate '" + cov.name + "' declares fewer than 2 categories");
      std::set<std::string> cats(cov.categories.begin(), cov.categories.end());
      if (cats.size() != cov.categories.size()) add("meta.json", "categorical covariate '" + cov.name + "' repeats a category");
    } else if (!cov.categories.empty()) {
      add("meta.json", "continuous covariate '" + cov.name + "' must not list categories");
    }
  }

  if (run.sample_ids.size() != n)
    add("labels.csv", std::to_string(run.sample_ids.size()) + " rows, expected n=" + std::to_string(n) + " (row-count mismatch)");
  {
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < run.sample_ids.size(); ++i)
      if (!ids.insert(run.sample_ids[i]).second)
        add("labels.csv row " + std::to_string(i + 1), "duplicate sample_id '" + run.sample_ids[i] + "'");
  }

  // Labels
  const auto& labels = run.labels;
  if (static_cast<std::size_t>(labels.y_true.size()) != n || static_cast<std::size_t>(labels.y_score.size()) != n)
    add("labels.csv", "label columns hold " + std::to_string(labels.y_true.size()) + " rows, expected n=" +
                          std::to_string(n) + " (row-count mismatch)");
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < labels.y_true.size(); ++i) {
    const double v = labels.y_true(i);
    const std::string where = "labels.csv row " + std::to_string(i + 1);
    if (!std::isfinite(v)) {
      add(where + " column y_true", "non-finite value");
    } else if (meta.task == Task::BinaryClassification) {
      if (v == 0.0) has0 = true;
      else if (v == 1.0) has1 = true;
      else add(where + " column y_true", "classification label must be 0 or 1");
    }
  }
  for (Eigen::Index i = 0; i < labels.y_score.size(); ++i)
    if (!std::isfinite(labels.y_score(i)))
      add("labels.csv row " + std::to_string(i + 1) + " column y_score", "non-finite value");
  if (meta.task == Task::BinaryClassification && labels.y_true.size() > 0 && !(has0 && has1))
    add("labels.csv", "classification y_true must contain both classes");

  // Checkpoints
  if (run.checkpoints.size() != meta.checkpoints.size())
    add("meta.json", "meta lists " + std::to_string(meta.checkpoints.size()) + " checkpoints but run holds " +
                         std::to_string(run.checkpoints.size()));
  for (std::size_t c = 0; c < run.checkpoints.size(); ++c) {
    const auto& ckpt = run.checkpoints[c];
    const std::string& label = ckpt.representation.checkpoint;
    if (c < meta.checkpoints.size() && meta.checkpoints[c] != label)
      add("meta.json", "checkpoint " + std::to_string(c) + " is '" + label + "', meta expects '" + meta.checkpoints[c] + "'");
    if (ckpt.final_layer.checkpoint != label)
      add(layer_file(label), "final layer belongs to checkpoint '" + ckpt.final_layer.checkpoint + "'");

    const auto& values = ckpt.representation.values;
    if (static_cast<std::size_t>(values.rows()) != n)
      add(repr_file(label), std::to_string(values.rows()) + " rows, expected n=" + std::to_string(n) + " (row-count mismatch)");
    if (static_cast<std::size_t>(values.cols()) != d)
      add(repr_file(label), std::to_string(values.cols()) + " columns, expected d=" + std::to_string(d));
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      for (Eigen::Index j = 0; j < values.cols(); ++j)
        if (!std::isfinite(values(i, j)))
          add(repr_file(label) + " row " + std::to_string(i + 1) + " column h_" + std::to_string(j + 1), "non-finite value");

    const auto& layer = ckpt.final_layer;
    if (static_cast<std::size_t>(layer.weights.size()) != d)
      add(layer_file(label), std::to_string(layer.weights.size()) + " weights, expected d=" + std::to_string(d));
    if (!layer.weights.allFinite()) add(layer_file(label), "non-finite weight");
    if (!std::isfinite(layer.bias)) add(layer_file(label), "non-finite bias");
    const Link expected = meta.task == Task::BinaryClassification ? Link::Sigmoid : Link::Identity;
    if (layer.link != expected)
      add(layer_file(label), "link '" + std::string(to_string(layer.link)) + "' does not match task '" +
                                 std::string(to_string(meta.task)) + "'");
  }

  // Covariates
  if (run.covariates.size() != meta.covariates.size())
    add("covariates.csv", std::to_string(run.covariates.size()) + " columns, meta declares " +
                              std::to_string(meta.covariates.size()));
  for (std::size_t k = 0; k < std::min(run.covariates.size(), meta.covariates.size()); ++k) {
    const auto& desc = meta.covariates[k];
    const auto& column = run.covariates[k];
    const std::string where = "covariates.csv column " + desc.name;
    if (column.size() != n)
      add(where, std::to_string(column.size()) + " rows, expected n=" + std::to_string(n) + " (row-count mismatch)");
    std::set<double> distinct;
    for (std::size_t i = 0; i < column.size(); ++i) {
      if (!column[i]) continue;
      const double v = *column[i];
      if (!std::isfinite(v)) {
        add(where + " row " + std::to_string(i + 1), "non-finite value");
        continue;
      }
      if (desc.kind == CovariateKind::Categorical &&
          (v < 0 || v != std::floor(v) || v >= static_cast<double>(desc.categories.size()))) {
        add(where + " row " + std::to_string(i + 1), "value outside declared categories");
        continue;
      }
      distinct.insert(v);
    }
    if (distinct.size() < 2) add(where, "fewer than 2 distinct values");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.string(), "missing or unreadable file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError(path.string(), std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T require(const json& obj, const char* key, const fs::path& file) {
  if (!obj.is_object() || !obj.contains(key)) throw LoadError(file.string(), std::string("missing key '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw LoadError(file.string(), std::string("key '") + key + "' has the wrong type");
  }
}

double json_real(const json& value, const fs::path& file, const std::string& what) {
  if (!value.is_number()) throw LoadError(file.string(), what + " is not a number");
  return value.get<double>();
}

RunMeta parse_meta(const fs::path& file) {
  const json j = read_json(file);
  RunMeta meta;
  meta.schema_version = require<int>(j, "schema_version", file);
  if (meta.schema_version != kSchemaVersion)
    throw LoadError(file.string(), "unsupported schema_version " + std::to_string(meta.schema_version));
  meta.run_id = require<std::string>(j, "run_id", file);
  const auto task_text = require<std::string>(j, "task", file);
  const auto task = parse_task(task_text);
  if (!task) throw LoadError(file.string(), "unknown task '" + task_text + "'");
  meta.task = *task;
  const auto n = require<long long>(j, "n", file);
  const auto d = require<long long>(j, "d", file);
  if (n < 0 || d < 0) throw LoadError(file.string(), "n and d must be non-negative");
  meta.n = static_cast<std::size_t>(n);
  meta.d = static_cast<std::size_t>(d);
  meta.checkpoints = require<std::vector<std::string>>(j, "checkpoints", file);
  if (!j.contains("covariates") || !j["covariates"].is_array())
    throw LoadError(file.string(), "missing key 'covariates'");
  for (const auto& c : j["covariates"]) {
    CovariateDescriptor desc;
    desc.name = require<std::string>(c, "name", file);
    const auto kind_text = require<std::string>(c, "kind", file);
    const auto kind = parse_covariate_kind(kind_text);
    if (!kind) throw LoadError(file.string(), "covariate '" + desc.name + "': unknown covariate kind '" + kind_text + "'");
    desc.kind = *kind;
    if (c.contains("categories")) desc.categories = require<std::vector<std::string>>(c, "categories", file);
    if (desc.kind == CovariateKind::Categorical && !c.contains("categories"))
      throw LoadError(file.string(), "categorical covariate '" + desc.name + "' has no categories list");
    meta.covariates.push_back(std::move(desc));
  }
  return meta;
}

std::string row_context(std::size_t data_row) { return "row " + std::to_string(data_row); }

void check_header(const std::vector<csv::Row>& rows, const csv::Row& expected, const fs::path& file) {
  if (rows.empty()) throw LoadError(file.string(), "empty file (header expected)");
  if (rows.front() != expected) throw LoadError(file.string(), "header must be '" + csv::join_row(expected) + "'");
}

void check_width(const csv::Row& row, std::size_t width, std::size_t data_row, const fs::path& file) {
  if (row.size() != width)
    throw LoadError(file.string(), row_context(data_row) + ": " + std::to_string(row.size()) + " fields, expected " +
                                       std::to_string(width));
}

double parse_cell(const std::string& text, std::size_t data_row, const std::string& column, const fs::path& file) {
  const auto value = csv::parse_real(text);
  if (!value) throw LoadError(file.string(), row_context(data_row) + " column " + column + ": not a number: '" + text + "'");
  return *value;
}

// Ids are compared over the common prefix; a length difference surfaces as a
// row-count violation during validation.
void check_ids(const std::vector<std::string>& expected, const std::string& id, std::size_t data_row,
               const fs::path& file) {
  const std::size_t i = data_row - 1;
  if (i < expected.size() && expected[i] != id)
    throw LoadError(file.string(), row_context(data_row) + ": sample_id '" + id + "' does not match labels.csv ('" +
                                       expected[i] + "')");
}

}  // namespace

LoadedRun parse_run(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw LoadError(dir.string(), "not a directory");
  LoadedRun run;
  run.meta = parse_meta(dir / "meta.json");
  const auto& meta = run.meta;

  {
    const fs::path file = dir / "labels.csv";
    const auto rows = csv::read_file(file);
    check_header(rows, {"sample_id", "y_true", "y_score"}, file);
    const std::size_t m = rows.size() - 1;
    run.labels.y_true.resize(static_cast<Eigen::Index>(m));
    run.labels.y_score.resize(static_cast<Eigen::Index>(m));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      check_width(rows[r], 3, r, file);
      run.sample_ids.push_back(rows[r][0]);
      run.labels.y_true(static_cast<Eigen::Index>(r - 1)) = parse_cell(rows[r][1], r, "y_true", file);
      run.labels.y_score(static_cast<Eigen::Index>(r - 1)) = parse_cell(rows[r][2], r, "y_score", file);
    }
  }

  {
    const fs::path file = dir / "covariates.csv";
    const auto rows = csv::read_file(file);
    if (rows.empty()) throw LoadError(file.string(), "empty file (header expected)");
    const auto& header = rows.front();
    if (header.empty() || header[0] != "sample_id") throw LoadError(file.string(), "first header field must be 'sample_id'");
    std::vector<std::size_t> column_of(meta.covariates.size(), 0);
    for (std::size_t k = 0; k < meta.covariates.size(); ++k) {
      auto it = std::find(header.begin() + 1, header.end(), meta.covariates[k].name);
      if (it == header.end()) throw LoadError(file.string(), "missing column for covariate '" + meta.covariates[k].name + "'");
      column_of[k] = static_cast<std::size_t>(it - header.begin());
    }
    if (header.size() != meta.covariates.size() + 1)
      throw LoadError(file.string(), "header has columns not declared in meta.json");
    run.covariates.assign(meta.covariates.size(), {});
    for (std::size_t r = 1; r < rows.size(); ++r) {
      check_width(rows[r], header.size(), r, file);
      check_ids(run.sample_ids, rows[r][0], r, file);
      for (std::size_t k = 0; k < meta.covariates.size(); ++k) {
        const auto& desc = meta.covariates[k];
        const std::string& text = rows[r][column_of[k]];
        if (text.empty()) {
          run.covariates[k].push_back(std::nullopt);
        } else if (desc.kind == CovariateKind::Continuous) {
          run.covariates[k].push_back(parse_cell(text, r, desc.name, file));
        } else {
          auto it = std::find(desc.categories.begin(), desc.categories.end(), text);
          if (it == desc.categories.end())
            throw LoadError(file.string(), row_context(r) + " column " + desc.name + ": value '" + text +
                                               "' is not one of the declared categories");
          run.covariates[k].push_back(static_cast<double>(it - desc.categories.begin()));
        }
      }
    }
  }

  for (const auto& label : meta.checkpoints) {
    const fs::path ckdir = checkpoint_dir(dir, label);
    CheckpointData ckpt;
    ckpt.representation.checkpoint = label;
    ckpt.final_layer.checkpoint = label;
    {
      const fs::path file = ckdir / "representations.csv";
      const auto rows = csv::read_file(file);
      csv::Row expected{"sample_id"};
      for (std::size_t j = 1; j <= meta.d; ++j) expected.push_back("h_" + std::to_string(j));
      check_header(rows, expected, file);
      auto& values = ckpt.representation.values;
      values.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(meta.d));
      for (std::size_t r = 1; r < rows.size(); ++r) {
        check_width(rows[r], meta.d + 1, r, file);
        check_ids(run.sample_ids, rows[r][0], r, file);
        for (std::size_t j = 0; j < meta.d; ++j)
          values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) =
              parse_cell(rows[r][j + 1], r, expected[j + 1], file);
      }
    }
    {
      const fs::path file = ckdir / "final_layer.json";
      const json j = read_json(file);
      if (!j.contains("weights") || !j["weights"].is_array()) throw LoadError(file.string(), "missing key 'weights'");
      const auto& w = j["weights"];
      ckpt.final_layer.weights.resize(static_cast<Eigen::Index>(w.size()));
      for (std::size_t i = 0; i < w.size(); ++i)
        ckpt.final_layer.weights(static_cast<Eigen::Index>(i)) = json_real(w[i], file, "weights[" + std::to_string(i) + "]");
      if (!j.contains("bias")) throw LoadError(file.string(), "missing key 'bias'");
      ckpt.final_layer.bias = json_real(j["bias"], file, "bias");
      const auto link_text = require<std::string>(j, "link", file);
      const auto link = parse_link(link_text);
      if (!link) throw LoadError(file.string(), "unknown link '" + link_text + "'");
      ckpt.final_layer.link = *link;
    }
    run.checkpoints.push_back(std::move(ckpt));
  }
  return run;
}

LoadedRun load_run(const fs::path& dir) {
  LoadedRun run = parse_run(dir);
  const auto report = validate_run(run);
  if (!report.ok()) {
    std::string detail = "invalid run:";
    for (const auto& v : report.violations) detail += "\n  " + v.location + ": " + v.message;
    throw LoadError(dir.string(), detail);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Writing

namespace {

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(file.string() + ": cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(file.string() + ": write failed");
}

}  // namespace

void write_run(const LoadedRun& run, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir.string() + ": cannot create directory" + (ec ? ": " + ec.message() : ""));

  const auto& meta = run.meta;
  ordered_json mj;
  mj["schema_version"] = meta.schema_version;
  mj["run_id"] = meta.run_id;
  mj["task"] = to_string(meta.task);
  mj["n"] = meta.n;
  mj["d"] = meta.d;
  mj["checkpoints"] = meta.checkpoints;
  mj["covariates"] = ordered_json::array();
  for (const auto& cov : meta.covariates) {
    ordered_json c;
    c["name"] = cov.name;
    c["kind"] = to_string(cov.kind);
    if (cov.kind == CovariateKind::Categorical) c["categories"] = cov.categories;
    mj["covariates"].push_back(std::move(c));
  }
  write_text(dir / "meta.json", mj.dump(2) + "\n");

  {
    std::string text = "sample_id,y_true,y_score\n";
    for (std::size_t i = 0; i < run.sample_ids.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      text += csv::escape_field(run.sample_ids[i]) + "," + csv::format_real(run.labels.y_true(r)) + "," +
              csv::format_real(run.labels.y_score(r)) + "\n";
    }
    write_text(dir / "labels.csv", text);
  }

  {
    csv::Row header{"sample_id"};
    for (const auto& cov : meta.covariates) header.push_back(cov.name);
    std::string text = csv::join_row(header) + "\n";
    for (std::size_t i = 0; i < run.sample_ids.size(); ++i) {
      csv::Row row{run.sample_ids[i]};
      for (std::size_t k = 0; k < meta.covariates.size(); ++k) {
        const auto& cell = run.covariates[k][i];
        if (!cell) row.emplace_back();
        else if (meta.covariates[k].kind == CovariateKind::Continuous) row.push_back(csv::format_real(*cell));
        else row.push_back(meta.covariates[k].categories.at(static_cast<std::size_t>(*cell)));
      }
      text += csv::join_row(row) + "\n";
    }
    write_text(dir / "covariates.csv", text);
  }

  for (const auto& ckpt : run.checkpoints) {
    const fs::path ckdir = checkpoint_dir(dir, ckpt.representation.checkpoint);
    fs::create_directories(ckdir, ec);
    if (ec) throw IoError(ckdir.string() + ": cannot create directory: " + ec.message());
    const auto& values = ckpt.representation.values;
    std::string text = "sample_id";
    for (Eigen::Index j = 0; j < values.cols(); ++j) text += ",h_" + std::to_string(j + 1);
    text += "\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      text += csv::escape_field(run.sample_ids.at(static_cast<std::size_t>(i)));
      for (Eigen::Index j = 0; j < values.cols(); ++j) text += "," + csv::format_real(values(i, j));
      text += "\n";
    }
    write_text(ckdir / "representations.csv", text);

    ordered_json lj;
    lj["weights"] = std::vector<double>(ckpt.final_layer.weights.data(),
                                        ckpt.final_layer.weights.data() + ckpt.final_layer.weights.size());
    lj["bias"] = ckpt.final_layer.bias;
    lj["link"] = to_string(ckpt.final_layer.link);
    write_text(ckdir / "final_layer.json", lj.dump(2) + "\n");
  }
}

LoadedRun subset_rows(const LoadedRun& run, std::span<const std::size_t> rows) {
  LoadedRun out;
  out.meta = run.meta;
  out.meta.n = rows.size();
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.labels.y_true.resize(m);
  out.labels.y_score.resize(m);
  out.covariates.assign(run.covariates.size(), {});
  for (Eigen::Index r = 0; r < m; ++r) {
    const std::size_t src = rows[static_cast<std::size_t>(r)];
    out.sample_ids.push_back(run.sample_ids.at(src));
    out.labels.y_true(r) = run.labels.y_true(static_cast<Eigen::Index>(src));
    out.labels.y_score(r) = run.labels.y_score(static_cast<Eigen::Index>(src));
    for (std::size_t k = 0; k < run.covariates.size(); ++k) out.covariates[k].push_back(run.covariates[k].at(src));
  }
  for (const auto& ckpt : run.checkpoints) {
    CheckpointData copy;
    copy.final_layer = ckpt.final_layer;
    copy.representation.checkpoint = ckpt.representation.checkpoint;
    copy.representation.values.resize(m, ckpt.representation.values.cols());
    for (Eigen::Index r = 0; r < m; ++r)
      copy.representation.values.row(r) = ckpt.representation.values.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]));
    out.checkpoints.push_back(std::move(copy));
  }
  return out;
}

}  // namespace conscope
