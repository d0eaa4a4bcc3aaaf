#include "ceqln/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ceqln/error.hpp"

namespace ceqln {

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  Error err(ErrorKind::kInput, "field '" + field + "': " + what);
  err.field = field;
  throw err;
}

const Json& require(const Json& doc, const char* key, const std::string& context) {
  const std::string field = context.empty() ? key : context + "." + key;
  if (!doc.is_object()) field_error(context.empty() ? "<root>" : context, "expected an object");
  auto it = doc.find(key);
  if (it == doc.end()) field_error(field, "missing");
  return *it;
}

std::string join(const std::string& context, const std::string& key) {
  return context.empty() ? key : context + "." + key;
}

std::optional<double> parse_decimal(std::string_view text) {
  if (text == "inf" || text == "+inf" || text == "Infinity") return std::numeric_limits<double>::infinity();
  if (text == "-inf" || text == "-Infinity") return -std::numeric_limits<double>::infinity();
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

Json number_json(double value) { return format_double(value); }

Json matrix_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(number_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const VectorXd& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number_json(v(i)));
  return out;
}

VectorXd vector_from(const Json& doc, const std::string& field) {
  if (!doc.is_array()) field_error(field, "expected an array");
  VectorXd v(static_cast<Index>(doc.size()));
  for (std::size_t i = 0; i < doc.size(); ++i) {
    v(static_cast<Index>(i)) = json_number(doc[i], field + "[" + std::to_string(i) + "]");
  }
  return v;
}

MatrixXd matrix_from(const Json& doc, const std::string& field, Index expected_cols) {
  if (!doc.is_array()) field_error(field, "expected an array of rows");
  const Index rows = static_cast<Index>(doc.size());
  Index cols = expected_cols;
  if (rows > 0) {
    if (!doc[0].is_array()) field_error(field, "expected an array of rows");
    cols = static_cast<Index>(doc[0].size());
  }
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const std::string row_field = field + "[" + std::to_string(i) + "]";
    const VectorXd row = vector_from(doc[static_cast<std::size_t>(i)], row_field);
    if (row.size() != cols) field_error(row_field, "ragged matrix row");
    m.row(i) = row.transpose();
  }
  return m;
}

int int_from(const Json& doc, const std::string& field) {
  const double v = json_number(doc, field);
  if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 2e9) field_error(field, "expected an integer");
  return static_cast<int>(v);
}

std::uint64_t u64_from(const Json& doc, const std::string& field) {
  if (doc.is_number_unsigned()) return doc.get<std::uint64_t>();
  if (doc.is_number_integer() && doc.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(doc.get<std::int64_t>());
  if (doc.is_string()) {
    const std::string s = doc.get<std::string>();
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  }
  field_error(field, "expected a nonnegative integer");
}

Json range_json(const UniformRange& r) { return Json::array({r.lo, r.hi}); }

UniformRange range_from(const Json& doc, const std::string& field) {
  const VectorXd v = vector_from(doc, field);
  if (v.size() != 2) field_error(field, "expected [lo, hi]");
  return {v(0), v(1)};
}

LayerSpec layer_spec_from(const Json& doc, const std::string& field) {
  if (doc.is_object() && doc.contains("repeat")) {
    const int copies = int_from(doc["repeat"], field + ".repeat");
    const Json& kinds = require(doc, "kinds", field);
    std::vector<Activation> list;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (!kinds[i].is_string()) field_error(field + ".kinds", "expected activation names");
      list.push_back(activation_from_string(kinds[i].get<std::string>()));
    }
    if (copies < 1) field_error(field + ".repeat", "must be at least 1");
    return repeat_layer(copies, list);
  }
  const Json& acts = doc.is_array() ? doc : require(doc, "activations", field);
  LayerSpec layer;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    if (!acts[i].is_string()) field_error(field + ".activations", "expected activation names");
    try {
      layer.activations.push_back(activation_from_string(acts[i].get<std::string>()));
    } catch (const Error& e) {
      field_error(field + ".activations[" + std::to_string(i) + "]", e.what());
    }
  }
  return layer;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double json_number(const Json& value, const std::string& field) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    if (auto v = parse_decimal(value.get<std::string>())) return *v;
    field_error(field, "'" + value.get<std::string>() + "' is not a number");
  }
  field_error(field, "expected a number");
}

Json network_to_json(const NetworkSpec& spec, const NetworkParams& params) {
  validate(params, spec);
  Json doc;
  doc["layers"] = Json::array();
  for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
    Json layer;
    Json acts = Json::array();
    for (Activation a : spec.hidden[l].activations) acts.push_back(std::string(to_string(a)));
    layer["activations"] = std::move(acts);
    layer["W"] = matrix_json(params.hidden[l].W);
    layer["b"] = vector_json(params.hidden[l].b);
    doc["layers"].push_back(std::move(layer));
  }
  doc["final"] = {{"W", matrix_json(params.output.W)}, {"b", vector_json(params.output.b)}};
  return doc;
}

std::pair<NetworkSpec, NetworkParams> network_from_json(const Json& doc) {
  const Json& layers = require(doc, "layers", "network");
  if (!layers.is_array()) field_error("network.layers", "expected an array");
  NetworkSpec spec;
  NetworkParams params;
  Index width = 1;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string field = "network.layers[" + std::to_string(l) + "]";
    spec.hidden.push_back(layer_spec_from(layers[l], field));
    DenseLayer layer;
    layer.W = matrix_from(require(layers[l], "W", field), field + ".W", width);
    layer.b = vector_from(require(layers[l], "b", field), field + ".b");
    params.hidden.push_back(std::move(layer));
    width = spec.hidden.back().output_width();
  }
  const Json& final_layer = require(doc, "final", "network");
  params.output.W = matrix_from(require(final_layer, "W", "network.final"), "network.final.W", width);
  params.output.b = vector_from(require(final_layer, "b", "network.final"), "network.final.b");
  spec.basis_count = params.output.W.rows();
  validate(params, spec);
  return {std::move(spec), std::move(params)};
}

Json constraint_set_to_json(const ConstraintSet& cs) {
  Json doc;
  doc["r"] = cs.r;
  doc["equalities"] = Json::array();
  for (const EqualityRow& row : cs.equalities) {
    doc["equalities"].push_back({{"t", number_json(row.t)}, {"dim", row.dim}, {"value", number_json(row.value)}});
  }
  doc["inequalities"] = Json::array();
  for (const InequalityRow& row : cs.inequalities) {
    doc["inequalities"].push_back({{"t", number_json(row.t)},
                                   {"dim", row.dim},
                                   {"lower", number_json(row.lower)},
                                   {"upper", number_json(row.upper)}});
  }
  return doc;
}

ConstraintSet constraint_set_from_json(const Json& doc) {
  ConstraintSet cs;
  if (!doc.is_object()) field_error("constraints", "expected an object");
  cs.r = doc.contains("r") ? int_from(doc["r"], "r") : 1;
  const std::string ctx = "constraints[r=" + std::to_string(cs.r) + "]";
  if (doc.contains("equalities")) {
    const Json& rows = doc["equalities"];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string f = ctx + ".equalities[" + std::to_string(i) + "]";
      EqualityRow row;
      row.t = json_number(require(rows[i], "t", f), join(f, "t"));
      row.dim = int_from(require(rows[i], "dim", f), join(f, "dim"));
      if (row.dim < 0) field_error(join(f, "dim"), "must be nonnegative");
      row.value = json_number(require(rows[i], "value", f), join(f, "value"));
      cs.equalities.push_back(row);
    }
  }
  if (doc.contains("inequalities")) {
    const Json& rows = doc["inequalities"];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string f = ctx + ".inequalities[" + std::to_string(i) + "]";
      InequalityRow row;
      row.t = json_number(require(rows[i], "t", f), join(f, "t"));
      row.dim = int_from(require(rows[i], "dim", f), join(f, "dim"));
      if (row.dim < 0) field_error(join(f, "dim"), "must be nonnegative");
      row.lower = rows[i].contains("lower") ? json_number(rows[i]["lower"], join(f, "lower")) : -kInf;
      row.upper = rows[i].contains("upper") ? json_number(rows[i]["upper"], join(f, "upper")) : kInf;
      if (!(row.lower <= row.upper)) field_error(f, "lower exceeds upper");
      cs.inequalities.push_back(row);
    }
  }
  return cs;
}

std::vector<ConstraintSet> constraint_sets_from_json(const Json& doc) {
  std::vector<ConstraintSet> sets;
  const Json* list = &doc;
  if (doc.is_object() && doc.contains("sets")) list = &doc["sets"];
  if (list->is_array()) {
    for (const Json& item : *list) sets.push_back(constraint_set_from_json(item));
  } else {
    sets.push_back(constraint_set_from_json(*list));
  }
  return sets;
}

Json constraint_sets_to_json(const std::vector<ConstraintSet>& sets) {
  Json doc;
  doc["sets"] = Json::array();
  for (const ConstraintSet& cs : sets) doc["sets"].push_back(constraint_set_to_json(cs));
  return doc;
}

NetworkSpec network_spec_from_json(const Json& doc) {
  NetworkSpec spec;
  const Json& layers = require(doc, "layers", "network");
  if (!layers.is_array()) field_error("network.layers", "expected an array");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    spec.hidden.push_back(layer_spec_from(layers[l], "network.layers[" + std::to_string(l) + "]"));
  }
  spec.basis_count = int_from(require(doc, "basis_count", "network"), "network.basis_count");
  return spec;
}

Json network_spec_to_json(const NetworkSpec& spec) {
  Json doc;
  doc["layers"] = Json::array();
  for (const LayerSpec& layer : spec.hidden) {
    Json acts = Json::array();
    for (Activation a : layer.activations) acts.push_back(std::string(to_string(a)));
    doc["layers"].push_back({{"activations", std::move(acts)}});
  }
  doc["basis_count"] = spec.basis_count;
  return doc;
}

TrainingConfig training_config_from_json(const Json& doc) {
  if (!doc.is_object()) field_error("<root>", "expected an object");
  TrainingConfig config;
  config.network = network_spec_from_json(require(doc, "network", ""));
  if (doc.contains("beta")) config.beta = int_from(doc["beta"], "beta");
  if (doc.contains("epochs")) config.epochs = int_from(doc["epochs"], "epochs");
  if (doc.contains("learning_rate")) config.learning_rate = json_number(doc["learning_rate"], "learning_rate");
  if (doc.contains("lambda_w")) config.lambda = json_number(doc["lambda_w"], "lambda_w");
  if (doc.contains("seed")) config.seed = u64_from(doc["seed"], "seed");
  if (doc.contains("cost_mode")) {
    if (!doc["cost_mode"].is_string()) field_error("cost_mode", "expected a string");
    try {
      config.cost_mode = cost_mode_from_string(doc["cost_mode"].get<std::string>());
    } catch (const Error& e) {
      field_error("cost_mode", e.what());
    }
  }
  if (doc.contains("fd_fallback")) {
    if (!doc["fd_fallback"].is_boolean()) field_error("fd_fallback", "expected a boolean");
    config.fd_fallback = doc["fd_fallback"].get<bool>();
  }
  if (doc.contains("init_ranges")) {
    const Json& ranges = doc["init_ranges"];
    if (!ranges.is_array() || ranges.empty()) field_error("init_ranges", "expected a nonempty array");
    config.init_ranges.clear();
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      const std::string f = "init_ranges[" + std::to_string(i) + "]";
      InitRange r;
      r.weight = range_from(require(ranges[i], "weight", f), f + ".weight");
      r.bias = range_from(require(ranges[i], "bias", f), f + ".bias");
      config.init_ranges.push_back(r);
    }
  }
  if (doc.contains("qp")) {
    const Json& qp = doc["qp"];
    if (qp.contains("eq_tol")) config.qp.eq_tol = json_number(qp["eq_tol"], "qp.eq_tol");
    if (qp.contains("ineq_tol")) config.qp.ineq_tol = json_number(qp["ineq_tol"], "qp.ineq_tol");
    if (qp.contains("multiplier_tol")) config.qp.multiplier_tol = json_number(qp["multiplier_tol"], "qp.multiplier_tol");
    if (qp.contains("max_iterations")) config.qp.max_iterations = int_from(qp["max_iterations"], "qp.max_iterations");
  }
  try {
    validate(config);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, std::string("training config: ") + e.what());
  }
  return config;
}

Json training_config_to_json(const TrainingConfig& config) {
  Json doc;
  doc["network"] = network_spec_to_json(config.network);
  doc["beta"] = config.beta;
  doc["epochs"] = config.epochs;
  doc["learning_rate"] = config.learning_rate;
  doc["lambda_w"] = config.lambda;
  doc["seed"] = config.seed;
  doc["cost_mode"] = std::string(to_string(config.cost_mode));
  doc["fd_fallback"] = config.fd_fallback;
  doc["init_ranges"] = Json::array();
  for (const InitRange& r : config.init_ranges) {
    doc["init_ranges"].push_back({{"weight", range_json(r.weight)}, {"bias", range_json(r.bias)}});
  }
  doc["qp"] = {{"eq_tol", config.qp.eq_tol},
               {"ineq_tol", config.qp.ineq_tol},
               {"multiplier_tol", config.qp.multiplier_tol},
               {"max_iterations", config.qp.max_iterations}};
  return doc;
}

Json model_to_json(const Model& model) {
  Json doc;
  doc["format"] = "ceqln-model";
  doc["lambda_w"] = number_json(model.lambda);
  doc["cost_mode"] = std::string(to_string(model.cost_mode));
  doc["network"] = network_to_json(model.spec, model.params);
  return doc;
}

Model model_from_json(const Json& doc) {
  Model model;
  model.lambda = json_number(require(doc, "lambda_w", "model"), "model.lambda_w");
  const Json& mode = require(doc, "cost_mode", "model");
  if (!mode.is_string()) field_error("model.cost_mode", "expected a string");
  model.cost_mode = cost_mode_from_string(mode.get<std::string>());
  auto [spec, params] = network_from_json(require(doc, "network", "model"));
  model.spec = std::move(spec);
  model.params = std::move(params);
  return model;
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    Error err(ErrorKind::kInput, source + ": malformed JSON at byte " + std::to_string(e.byte));
    err.file = source;
    err.byte_offset = e.byte;
    throw err;
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    Error err(ErrorKind::kInput, "cannot open '" + path + "'");
    err.file = path;
    throw err;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_json(text, path);
  } catch (Error& e) {
    e.file = path;
    throw;
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    Error err(ErrorKind::kInput, "cannot write '" + path + "'");
    err.file = path;
    throw err;
  }
  out << content;
  if (!out) throw Error(ErrorKind::kInput, "write failed for '" + path + "'");
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

TrajectoryDataset parse_dataset_csv(const std::string& text, const std::string& source) {
  std::vector<std::string_view> lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  auto fail = [&](std::size_t line, const std::string& what) {
    Error err(ErrorKind::kInput, source + ":" + std::to_string(line) + ": " + what);
    err.file = source;
    throw err;
  };
  if (lines.empty()) fail(1, "empty file, expected header t,y0,...");
  const auto header = split(lines[0], ',');
  if (header.size() < 2 || trim(header[0]) != "t") fail(1, "header must start with t and name at least one column");
  const Index dims = static_cast<Index>(header.size()) - 1;
  TrajectoryDataset data;
  const Index n = static_cast<Index>(lines.size()) - 1;
  data.times.resize(n);
  data.targets.resize(dims, n);
  for (Index i = 0; i < n; ++i) {
    const auto cells = split(lines[static_cast<std::size_t>(i + 1)], ',');
    if (static_cast<Index>(cells.size()) != dims + 1) fail(static_cast<std::size_t>(i + 2), "wrong column count");
    for (Index c = 0; c <= dims; ++c) {
      const auto v = parse_decimal(trim(cells[static_cast<std::size_t>(c)]));
      if (!v || !std::isfinite(*v)) fail(static_cast<std::size_t>(i + 2), "invalid number in column " + std::to_string(c));
      if (c == 0) {
        data.times(i) = *v;
      } else {
        data.targets(c - 1, i) = *v;
      }
    }
  }
  try {
    validate(data);
  } catch (const Error& e) {
    Error err(ErrorKind::kInput, source + ": " + e.what());
    err.file = source;
    throw err;
  }
  return data;
}

TrajectoryDataset read_dataset_csv(const std::string& path) { return parse_dataset_csv(read_text_file(path), path); }

std::string trajectory_to_csv(const VectorXd& times, const MatrixXd& values) {
  std::string out = "t";
  for (Index d = 0; d < values.rows(); ++d) out += ",y" + std::to_string(d);
  out += '\n';
  for (Index n = 0; n < times.size(); ++n) {
    out += format_double(times(n));
    for (Index d = 0; d < values.rows(); ++d) {
      out += ',';
      out += format_double(values(d, n));
    }
    out += '\n';
  }
  return out;
}

}  // namespace ceqln
