#include "ceqln/symbolic.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "ceqln/error.hpp"
#include "ceqln/io.hpp"

namespace ceqln {

std::string format_coefficient(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", std::max(0, digits), value);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

namespace {

const char* kTimes = "\xC3\x97";  // U+00D7 multiplication sign

// "(a x + b y - c)" style weighted sum; zero-rounded terms are dropped.
std::string weighted_sum(const Eigen::RowVectorXd& weights, double bias, const std::vector<std::string>& inputs,
                         int digits) {
  std::string out;
  // A unit coefficient on a name is left implicit: "f0 - t".
  auto append = [&](double c, const std::string& name) {
    const std::string mag = format_coefficient(std::abs(c), digits);
    if (mag == "0") return;
    const std::string term = name.empty() ? mag : mag == "1" ? name : mag + " " + name;
    if (out.empty()) {
      out = c < 0.0 ? "-" + term : term;
    } else {
      out += (c < 0.0 ? " - " : " + ") + term;
    }
  };
  for (Index j = 0; j < weights.size(); ++j) append(weights(j), inputs[static_cast<std::size_t>(j)]);
  append(bias, "");
  return out.empty() ? "0" : out;
}

std::string unit_name(std::size_t layer, Index unit) {
  return layer == 0 ? "f" + std::to_string(unit) : "f" + std::to_string(layer + 1) + "_" + std::to_string(unit);
}

}  // namespace

std::vector<std::string> export_expressions(const NetworkParams& params, const NetworkSpec& spec, int digits) {
  validate(params, spec);
  std::vector<std::string> lines;
  std::vector<std::string> inputs{"t"};
  for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
    const DenseLayer& layer = params.hidden[l];
    const LayerSpec& kinds = spec.hidden[l];
    std::vector<std::string> names;
    Index slot = 0;
    for (Index k = 0; k < kinds.output_width(); ++k) {
      const Activation a = kinds.activations[static_cast<std::size_t>(k)];
      const std::string arg = weighted_sum(layer.W.row(slot), layer.b(slot), inputs, digits);
      std::string body;
      switch (a) {
        case Activation::kIdentity:
          body = "(" + arg + ")";
          break;
        case Activation::kSine:
          body = "sin(" + arg + ")";
          break;
        case Activation::kCosine:
          body = "cos(" + arg + ")";
          break;
        case Activation::kSigmoid:
          body = "sigma(" + arg + ")";
          break;
        case Activation::kSech:
          body = "sech(" + arg + ")";
          break;
        case Activation::kProduct: {
          const std::string second = weighted_sum(layer.W.row(slot + 1), layer.b(slot + 1), inputs, digits);
          body = "(" + arg + ")" + kTimes + "(" + second + ")";
          ++slot;
          break;
        }
      }
      ++slot;
      names.push_back(unit_name(l, k));
      lines.push_back(names.back() + " = " + body);
    }
    inputs = std::move(names);
  }
  for (Index m = 0; m < params.output.W.rows(); ++m) {
    lines.push_back("phi" + std::to_string(m + 1) + " = " +
                    weighted_sum(params.output.W.row(m), params.output.b(m), inputs, digits));
  }
  return lines;
}

struct ExpressionProgram::Node {
  enum class Kind { kNumber, kVariable, kNegate, kAdd, kSubtract, kMultiply, kSine, kCosine, kSigmoid, kSech };
  Kind kind = Kind::kNumber;
  double value = 0.0;
  std::size_t slot = 0;  // variable: 0 is t, k > 0 is line k - 1
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using Node = ExpressionProgram::Node;
using NodePtr = std::shared_ptr<const Node>;

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& known, std::string_view context)
      : text_(text), known_(known), context_(context) {}

  NodePtr parse_all() {
    NodePtr node = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::kInput, std::string(context_) + ": " + what + " at column " + std::to_string(pos_ + 1));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool match(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  bool starts_primary() {
    skip_space();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    return c == '(' || std::isalpha(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
           c == '.';
  }

  static NodePtr make(Node::Kind kind, NodePtr lhs, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
  }

  NodePtr expr() {
    NodePtr node = term();
    for (;;) {
      if (match("+")) {
        node = make(Node::Kind::kAdd, node, term());
      } else if (match("-")) {
        node = make(Node::Kind::kSubtract, node, term());
      } else {
        return node;
      }
    }
  }

  NodePtr term() {
    NodePtr node = unary();
    for (;;) {
      if (match(kTimes) || match("*")) {
        node = make(Node::Kind::kMultiply, node, unary());
      } else if (starts_primary()) {
        node = make(Node::Kind::kMultiply, node, primary());
      } else {
        return node;
      }
    }
  }

  NodePtr unary() {
    if (match("-")) return make(Node::Kind::kNegate, unary());
    return primary();
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr();
      if (!match(")")) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
        ++pos_;
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        std::size_t p = pos_ + 1;
        if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
        if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
          pos_ = p;
          while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
      }
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::kNumber;
      n->value = std::stod(std::string(text_.substr(start, pos_ - start)));
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name(text_.substr(start, pos_ - start));
      static const std::pair<const char*, Node::Kind> functions[] = {
          {"sin", Node::Kind::kSine},
          {"cos", Node::Kind::kCosine},
          {"sigma", Node::Kind::kSigmoid},
          {"sech", Node::Kind::kSech},
      };
      for (const auto& [fname, kind] : functions) {
        if (name == fname) {
          if (!match("(")) fail("expected '(' after " + name);
          NodePtr arg = expr();
          if (!match(")")) fail("expected ')'");
          return make(kind, arg);
        }
      }
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::kVariable;
      if (name == "t") {
        n->slot = 0;
        return n;
      }
      for (std::size_t k = 0; k < known_.size(); ++k) {
        if (known_[k] == name) {
          n->slot = k + 1;
          return n;
        }
      }
      fail("unknown name '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  const std::vector<std::string>& known_;
  std::string_view context_;
  std::size_t pos_ = 0;
};

double eval(const Node& n, const std::vector<double>& env) {
  switch (n.kind) {
    case Node::Kind::kNumber:
      return n.value;
    case Node::Kind::kVariable:
      return env[n.slot];
    case Node::Kind::kNegate:
      return -eval(*n.lhs, env);
    case Node::Kind::kAdd:
      return eval(*n.lhs, env) + eval(*n.rhs, env);
    case Node::Kind::kSubtract:
      return eval(*n.lhs, env) - eval(*n.rhs, env);
    case Node::Kind::kMultiply:
      return eval(*n.lhs, env) * eval(*n.rhs, env);
    case Node::Kind::kSine:
      return std::sin(eval(*n.lhs, env));
    case Node::Kind::kCosine:
      return std::cos(eval(*n.lhs, env));
    case Node::Kind::kSigmoid:
      return sigmoid(eval(*n.lhs, env));
    case Node::Kind::kSech:
      return sech(eval(*n.lhs, env));
  }
  return 0.0;
}

}  // namespace

ExpressionProgram ExpressionProgram::parse(const std::vector<std::string>& lines) {
  ExpressionProgram program;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string context = "expression line " + std::to_string(i + 1);
    const std::size_t eq = lines[i].find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::kInput, context + ": expected 'name = expression'");
    std::string name = lines[i].substr(0, eq);
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front()))) name.erase(name.begin());
    if (name.empty() || name == "t") throw Error(ErrorKind::kInput, context + ": invalid name");
    Parser parser(std::string_view(lines[i]).substr(eq + 1), program.names_, context);
    program.roots_.push_back(parser.parse_all());
    program.names_.push_back(std::move(name));
  }
  return program;
}

std::map<std::string, double> ExpressionProgram::evaluate(double t) const {
  std::vector<double> env{t};
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < roots_.size(); ++i) {
    env.push_back(eval(*roots_[i], env));
    out[names_[i]] = env.back();
  }
  return out;
}

VectorXd ExpressionProgram::basis(double t) const {
  std::vector<double> env{t};
  std::vector<double> phi;
  for (std::size_t i = 0; i < roots_.size(); ++i) {
    env.push_back(eval(*roots_[i], env));
    if (names_[i].rfind("phi", 0) == 0) phi.push_back(env.back());
  }
  return Eigen::Map<const VectorXd>(phi.data(), static_cast<Index>(phi.size()));
}

ConstraintReport verify_constraints(const NetworkParams& params, const NetworkSpec& spec, const VectorXd& w,
                                    const ConstraintSet& cs, Index dims, double tolerance) {
  return constraint_report(network_design_rows(params, spec), spec.basis_count + 1, w, cs, dims, tolerance);
}

namespace {

AppendixFixture fixture_from_json(const Json& doc) {
  AppendixFixture fx;
  const Json& units = doc.at("hidden_units");
  LayerSpec layer;
  std::vector<std::pair<double, double>> slots;
  for (const Json& unit : units) {
    const Activation a = activation_from_string(unit.at("activation").get<std::string>());
    layer.activations.push_back(a);
    if (a == Activation::kProduct) {
      for (const Json& f : unit.at("factors")) {
        slots.emplace_back(json_number(f.at(0), "factors"), json_number(f.at(1), "factors"));
      }
    } else {
      slots.emplace_back(json_number(unit.at("affine").at(0), "affine"), json_number(unit.at("affine").at(1), "affine"));
    }
  }
  DenseLayer hidden;
  hidden.W.resize(static_cast<Index>(slots.size()), 1);
  hidden.b.resize(static_cast<Index>(slots.size()));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    hidden.W(static_cast<Index>(i), 0) = slots[i].first;
    hidden.b(static_cast<Index>(i)) = slots[i].second;
  }
  // Rows of output_weights_by_unit are units, columns are basis functions.
  const Json& by_unit = doc.at("output_weights_by_unit");
  const Json& bias = doc.at("output_bias");
  const Index basis = static_cast<Index>(bias.size());
  DenseLayer output;
  output.W.resize(basis, layer.output_width());
  output.b.resize(basis);
  for (Index k = 0; k < layer.output_width(); ++k) {
    for (Index m = 0; m < basis; ++m) {
      output.W(m, k) = json_number(by_unit.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(m)), "W");
    }
  }
  for (Index m = 0; m < basis; ++m) output.b(m) = json_number(bias.at(static_cast<std::size_t>(m)), "bias");
  // The fixture values are consistent with sech(z) = 1 / (e^z + e^-z), half the
  // library's sech; the factor is folded into the outgoing weights.
  if (doc.value("sech_convention", std::string("standard")) == "reciprocal_sum") {
    for (Index k = 0; k < layer.output_width(); ++k) {
      if (layer.activations[static_cast<std::size_t>(k)] == Activation::kSech) output.W.col(k) *= 0.5;
    }
  }
  fx.spec.hidden.push_back(layer);
  fx.spec.basis_count = basis;
  fx.params.hidden.push_back(std::move(hidden));
  fx.params.output = std::move(output);
  validate(fx.params, fx.spec);

  const Json& weights = doc.at("optimal_weights");
  fx.dims = static_cast<Index>(weights.size());
  fx.w.resize(fx.dims * (basis + 1));
  for (Index d = 0; d < fx.dims; ++d) {
    for (Index m = 0; m <= basis; ++m) {
      fx.w(d * (basis + 1) + m) =
          json_number(weights.at(static_cast<std::size_t>(d)).at(static_cast<std::size_t>(m)), "optimal_weights");
    }
  }
  fx.constraints = constraint_set_from_json(doc.at("constraints"));
  return fx;
}

}  // namespace

AppendixFixture load_appendix_fixture(const std::string& json_text) {
  const Json doc = parse_json(json_text, "appendix fixture");
  try {
    return fixture_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("appendix fixture: ") + e.what());
  }
}

AppendixFixture appendix_fixture() { return load_appendix_fixture(appendix_fixture_json()); }

}  // namespace ceqln
