#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ceqln/adaptation.hpp"
#include "ceqln/network.hpp"

namespace ceqln {

// Fixed-point decimal with `digits` places, trailing zeros removed ("2.5", "-0.762", "3").
std::string format_coefficient(double value, int digits);

// One line per hidden unit ("f2 = sin(-2.426 t + 1.163)") followed by one line
// per basis function ("phi1 = 2.909 f0 + ... - 0.762"). Units of hidden layer 1
// are f0, f1, ...; deeper layers use f<layer>_<unit>.
std::vector<std::string> export_expressions(const NetworkParams& params, const NetworkSpec& spec, int digits);

// Parser for the exported grammar:
//   line    = name "=" expr
//   expr    = term { ("+" | "-") term }
//   term    = unary { ("×" | "*") unary | primary }     (juxtaposition multiplies)
//   unary   = "-" unary | primary
//   primary = number | name | func "(" expr ")" | "(" expr ")"
//   func    = "sin" | "cos" | "sigma" | "sech"
// Names resolve to t or to earlier lines.
class ExpressionProgram {
 public:
  static ExpressionProgram parse(const std::vector<std::string>& lines);

  std::map<std::string, double> evaluate(double t) const;
  // Values of the lines whose names start with "phi", in definition order.
  VectorXd basis(double t) const;

  struct Node;

 private:
  std::vector<std::string> names_;
  std::vector<std::shared_ptr<const Node>> roots_;
};

// Residuals of Phi(t) w against every row of `cs` for a network-defined basis.
ConstraintReport verify_constraints(const NetworkParams& params, const NetworkSpec& spec, const VectorXd& w,
                                    const ConstraintSet& cs, Index dims, double tolerance);

// Reference letter network with its weights and constraints.
struct AppendixFixture {
  NetworkSpec spec;
  NetworkParams params;
  VectorXd w;  // stacked [w_x; w_y]
  ConstraintSet constraints;
  Index dims = 2;
};

AppendixFixture load_appendix_fixture(const std::string& json_text);
// The fixture shipped with the library.
const std::string& appendix_fixture_json();
AppendixFixture appendix_fixture();

}  // namespace ceqln
