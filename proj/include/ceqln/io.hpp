#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "ceqln/design.hpp"
#include "ceqln/network.hpp"
#include "ceqln/training.hpp"

namespace ceqln {

using Json = nlohmann::ordered_json;

// 17 significant digits: parses back to the same double.
std::string format_double(double value);
// Accepts a JSON number or a decimal string, including "inf" / "-inf".
double json_number(const Json& value, const std::string& field);

Json network_to_json(const NetworkSpec& spec, const NetworkParams& params);
std::pair<NetworkSpec, NetworkParams> network_from_json(const Json& doc);

Json constraint_set_to_json(const ConstraintSet& cs);
ConstraintSet constraint_set_from_json(const Json& doc);
// A single set, an array of sets, or {"sets": [...]}.
std::vector<ConstraintSet> constraint_sets_from_json(const Json& doc);
Json constraint_sets_to_json(const std::vector<ConstraintSet>& sets);

// Layers may list activations explicitly or as {"repeat": k, "kinds": [...]}.
NetworkSpec network_spec_from_json(const Json& doc);
Json network_spec_to_json(const NetworkSpec& spec);

TrainingConfig training_config_from_json(const Json& doc);
Json training_config_to_json(const TrainingConfig& config);

// A trained model: network plus the options needed to re-solve the QP.
struct Model {
  NetworkSpec spec;
  NetworkParams params;
  double lambda = 0.0;
  CostMode cost_mode = CostMode::kPaper;
};

Json model_to_json(const Model& model);
Model model_from_json(const Json& doc);

// Parse errors raise kInput with the file name and byte offset.
Json parse_json(const std::string& text, const std::string& source);
Json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// CSV with header t,y0,...,y{D-1}; one row per sample.
TrajectoryDataset parse_dataset_csv(const std::string& text, const std::string& source);
TrajectoryDataset read_dataset_csv(const std::string& path);
std::string trajectory_to_csv(const VectorXd& times, const MatrixXd& values);

}  // namespace ceqln
