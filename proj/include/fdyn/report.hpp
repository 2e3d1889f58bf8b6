#pragma once
// Command orchestration and JSON reports for the command-line tool.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fdyn/parabolic.hpp"
#include "fdyn/parser.hpp"

namespace fdyn {

using Json = nlohmann::ordered_json;

// Pretty print with floats at 17 significant digits; arrays of scalars stay
// on one line.
std::string dump_json(const Json& j);

struct CommandOptions {
  double tol = 1e-8;
  std::optional<int> m;
  std::optional<double> eta, delta, tau;
  unsigned long long seed = 1;
  std::vector<std::string> center;  // blowup: variable names, chart variable first
  int q = 0;                        // ramify
  std::string var;                  // ramify
  int seeds = 100;                  // verify_stability seeds
  int grid = 16;                    // construct: nodes per direction
  std::string name;                 // object to use when the document has several
  std::optional<Json> prior;        // verify: a saved report
};

const std::vector<std::string>& command_names();

// Throws fdyn::Error subclasses; the tool maps them to exit codes.
Json run_command(const std::string& cmd, const InputDocument& doc, const CommandOptions& opt = {});

// Serialization used by the certificates.
Json jet_to_json(const JetQ& j, const std::vector<std::string>& vars);
JetQ jet_from_json(const Json& j, const std::vector<std::string>& vars);
Json step_to_json(const TransformStep& s, const std::vector<std::string>& vars);
TransformStep step_from_json(const Json& j, const std::vector<std::string>& vars);
Json tstep_to_json(const TTransformation& t);
TTransformation tstep_from_json(const Json& j);
Json matq_to_json(const MatQ& m);
MatQ matq_from_json(const Json& j);
Json rs_to_json(const RSDiffeoData& rs, const std::vector<std::string>& vars);

}  // namespace fdyn
