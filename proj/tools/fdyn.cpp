// fdyn: command-line front end.
//
//   fdyn COMMAND DOCUMENT [options]
//
// Exit codes: 0 success, 2 parse error, 3 precondition error, 4 budget or
// precision error, 5 construction failed, 1 internal error.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fdyn/errors.hpp"
#include "fdyn/report.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fdyn::PreconditionError("cli", "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Formal reduction and parabolic curves of tangent-to-identity diffeomorphisms"};
  std::string cmd, path, out, backend, report, center;
  int order = 0;
  fdyn::CommandOptions opt;
  std::optional<int> m;
  std::optional<double> eta, delta, tau;

  std::string cmds;
  for (const auto& c : fdyn::command_names()) cmds += (cmds.empty() ? "" : ", ") + c;
  app.add_option("command", cmd, "one of: " + cmds)->required()->check(CLI::IsMember(fdyn::command_names()));
  app.add_option("document", path, "input document")->required();
  app.add_option("--order", order, "truncation order (overrides the document header)")->check(CLI::Range(1, 250));
  app.add_option("--backend", backend, "exact or float")->check(CLI::IsMember({"exact", "float"}));
  app.add_option("--tol", opt.tol, "absolute tolerance of the construction")->check(CLI::PositiveNumber);
  app.add_option("--m", m, "weight m of the function space");
  app.add_option("--eta", eta, "sector opening");
  app.add_option("--delta", delta, "sector radius");
  app.add_option("--tau", tau, "sector bisector");
  app.add_option("--out", out, "write the report here instead of stdout");
  app.add_option("--seed", opt.seed, "seed for randomized checks");
  app.add_option("--seeds", opt.seeds, "number of stability seeds")->check(CLI::Range(1, 100000));
  app.add_option("--grid", opt.grid, "construct: nodes per direction")->check(CLI::Range(2, 256));
  app.add_option("--center", center, "blowup: comma-separated variables, chart variable first");
  app.add_option("--q", opt.q, "ramify: index");
  app.add_option("--var", opt.var, "ramify: variable");
  app.add_option("--name", opt.name, "object to use when the document has several");
  app.add_option("--report", report, "verify: saved report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "fdyn: " << e.what() << "\n";
    return 2;
  }
  opt.m = m;
  opt.eta = eta;
  opt.delta = delta;
  opt.tau = tau;
  if (!center.empty()) {
    std::stringstream ss(center);
    std::string v;
    while (std::getline(ss, v, ',')) opt.center.push_back(v);
  }

  try {
    auto t0 = std::chrono::steady_clock::now();
    fdyn::InputDocument doc = fdyn::parse_document(read_file(path), order);
    if (!backend.empty()) doc.backend = backend;
    if (!report.empty()) {
      try {
        opt.prior = fdyn::Json::parse(read_file(report));
      } catch (const fdyn::Json::parse_error& e) {
        throw fdyn::ParseError(0, 0, std::string("report is not valid JSON: ") + e.what());
      }
    }
    fdyn::Json r = fdyn::run_command(cmd, doc, opt);
    std::string text = fdyn::dump_json(r);
    if (out.empty()) {
      std::cout << text;
    } else {
      std::ofstream f(out, std::ios::binary);
      if (!f) throw fdyn::PreconditionError("cli", "cannot write " + out);
      f << text;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "fdyn: " << cmd << " finished in " << secs << " s\n";
    if (r.contains("pass") && r["pass"].is_boolean() && !r["pass"].get<bool>()) return 5;
    return 0;
  } catch (const fdyn::Error& e) {
    std::cerr << "fdyn: error [" << e.module() << "]: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fdyn::Json::exception& e) {
    std::cerr << "fdyn: error [cli]: malformed report: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fdyn: internal error: " << e.what() << "\n";
    return 1;
  }
}
