#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fdyn/report.hpp"
#include "generators.hpp"

using namespace fdyn;
using namespace fdyn::testing;

namespace {

const std::vector<std::string> kXY = {"x", "y"};

std::string data(const std::string& f) { return std::string(FDYN_DATA_DIR) + "/" + f; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

InputDocument load(const std::string& f) { return parse_document(slurp(data(f))); }

int run_cli(const std::string& args) {
  std::string cmd = std::string(FDYN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

GaussQ q(long long a, long long b = 1) { return GaussQ(Rational(a, b)); }

}  // namespace

TEST_CASE("expression examples") {
  JetQ a = parse_expression("x + x^3", kXY, 6);
  CHECK(a.terms().size() == 2);
  CHECK(a.coeff(mono_from({1, 0})) == q(1));
  CHECK(a.coeff(mono_from({3, 0})) == q(1));

  JetQ b = parse_expression("(1/2)*x*y^2 - i*x", kXY, 6);
  CHECK(b.coeff(mono_from({1, 2})) == q(1, 2));
  CHECK(b.coeff(mono_from({1, 0})) == GaussQ(Rational(0), Rational(-1)));

  // precedence and right-associative powers
  CHECK(parse_expression("1 + 2*x^2", kXY, 6) == parse_expression("1 + (2*(x^2))", kXY, 6));
  CHECK(parse_expression("x^2^2", kXY, 12) == parse_expression("x^4", kXY, 12));
  CHECK(parse_expression("-x^2", kXY, 6) == parse_expression("-(x^2)", kXY, 6));
  CHECK(parse_expression("x/4 - 0.25*x", kXY, 6).is_zero());
  CHECK(parse_expression("1.5e1*y", kXY, 6) == parse_expression("15*y", kXY, 6));
  // silent truncation above the order
  CHECK(parse_expression("x + x^9", kXY, 4) == parse_expression("x", kXY, 4));
}

TEST_CASE("expression errors carry a position") {
  try {
    parse_expression("x*(1 - x)^-1", kXY, 6, 3);
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
    CHECK(e.column >= 10);
    CHECK(std::string(e.what()).find("negative exponents") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_expression("x + ", kXY, 6), ParseError);
  CHECK_THROWS_AS(parse_expression("x/y", kXY, 6), ParseError);
  CHECK_THROWS_AS(parse_expression("x/0", kXY, 6), ParseError);
  CHECK_THROWS_AS(parse_expression("z", kXY, 6), ParseError);
  CHECK_THROWS_AS(parse_expression("(x", kXY, 6), ParseError);
  CHECK_THROWS_AS(parse_expression("x^y", kXY, 6), ParseError);
  CHECK_THROWS_AS(parse_expression("x $ y", kXY, 6), ParseError);
}

TEST_CASE("printed expressions reparse identically") {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> xyz = {"x", "y", "z"};
  for (int it = 0; it < 200; ++it) {
    std::string t = random_expression(rng, xyz, 4);
    JetQ j = parse_expression(t, xyz, 8);
    std::string p1 = print_expression(j, xyz);
    JetQ j2 = parse_expression(p1, xyz, 8);
    CHECK_MESSAGE(j2 == j, t);
    CHECK(print_expression(j2, xyz) == p1);
  }
  for (int it = 0; it < 50; ++it) {
    JetQ j = random_jet(rng, 2, 9, 0, 9, 6);
    CHECK(parse_expression(print_expression(j, kXY), kXY, 9) == j);
  }
}

TEST_CASE("documents") {
  auto doc = load("euler.doc");
  CHECK(doc.dim == 2);
  CHECK(doc.order == 12);
  REQUIRE(doc.field());
  REQUIRE(doc.curve());
  CHECK(doc.field()->comp[0] == parse_expression("x^3", kXY, 12));
  // print and parse again
  auto again = parse_document(print_document(doc));
  CHECK(print_document(again) == print_document(doc));
  CHECK(again.curve()->gamma[1] == doc.curve()->gamma[1]);
  CHECK(parse_document(slurp(data("euler.doc")), 5).order == 5);

  auto sys = load("nilpotent_system.doc");
  REQUIRE(sys.system());
  CHECK(sys.system()->q == 1);
  CHECK(sys.system()->dim() == 2);

  auto bad = [](const std::string& text, int line) {
    try {
      parse_document(text);
    } catch (const ParseError& e) {
      CHECK_MESSAGE(e.line == line, std::string(e.what()));
      return;
    }
    FAIL("accepted: " << text);
  };
  bad("dim 2\nvars x y\norder 4\nfield X:\n  x\n", 4);
  bad("dim 2\nvars x y\norder 4\nfield X:\n  x\n  y\nfield X:\n  y\n  x\n", 7);
  bad("dim 3\nvars x y\norder 4\n", 1);
  bad("vars x s\norder 4\n", 1);
  bad("vars x y\norder 400\n", 3);
  bad("vars x y\norder 4\nbogus 1\n", 3);
  bad("vars x y\norder 4\nfield X:\n  x + \n  y\n", 4);
  bad("vars x y\norder 4\nfield X:\n  x\n  y\norder 5\n", 6);
  bad("vars x\norder 4\nsystem A:\n  q 1\n  1, 0\n  0\n", 6);
}

TEST_CASE("log of the identity is the zero field") {
  auto r = run_command("log", load("identity.doc"));
  CHECK(r["roundtrip_exact"].get<bool>());
  for (const auto& c : r["field"]) CHECK(c["expr"] == "0");
}

TEST_CASE("reduce refuses a curve of fixed points") {
  try {
    run_command("reduce", load("fixed_curve.doc"));
    FAIL("no error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("Fix(F)") != std::string::npos);
  }
}

TEST_CASE("reduce certificates replay exactly after a save") {
  for (const char* f : {"euler_map.doc", "euler.doc", "nilpotent.doc"}) {
    auto doc = load(f);
    auto r = run_command("reduce", doc);
    CommandOptions o;
    o.prior = Json::parse(dump_json(r));
    auto v = run_command("verify", doc, o);
    CHECK_MESSAGE(v["pass"].get<bool>(), f);
  }
  auto doc = load("nilpotent.doc");
  auto r = run_command("reduce", doc);
  CHECK(r["certificate"]["steps"].size() > 3);
  CHECK(r["field_rs"]["k"] == 3);
  CHECK(r["field_rs"]["p"] == 1);

  // a tampered certificate is caught
  Json bad = Json::parse(dump_json(r));
  bad["result"]["curve"][1]["expr"] = "s^7";
  CommandOptions o;
  o.prior = bad;
  CHECK_FALSE(run_command("verify", doc, o)["pass"].get<bool>());
}

TEST_CASE("turrittin certificates replay and steps serialize") {
  auto doc = load("nilpotent_system.doc");
  auto r = run_command("turrittin", doc);
  CHECK(r["replay_exact"].get<bool>());
  CHECK(r["shape_ok"].get<bool>());
  CommandOptions o;
  o.prior = Json::parse(dump_json(r));
  CHECK(run_command("verify", doc, o)["pass"].get<bool>());
  for (const auto& s : r["certificate"]["steps"]) CHECK(tstep_to_json(tstep_from_json(s)) == s);

  auto red = run_command("reduce", load("nilpotent.doc"));
  for (const auto& s : red["certificate"]["steps"]) CHECK(step_to_json(step_from_json(s, {"x", "y", "z"}), {"x", "y", "z"}) == s);
}

TEST_CASE("analyze on the Euler map") {
  auto r = run_command("analyze", load("euler.doc"));
  CHECK(r["verdict"] == "well-placed-for-inverse");
  CHECK(r["F"]["k"] == 1);
  CHECK(r["F"]["p"] == 1);
}

TEST_CASE("float backend and transforms through the command layer") {
  auto doc = load("euler.doc");
  doc.backend = "float";
  auto r = run_command("exp", doc);
  CHECK(r["roundtrip_max_error"].get<double>() < 1e-10);

  CommandOptions o;
  o.center = {"x", "y", "z"};
  auto b = run_command("blowup", load("nilpotent.doc"), o);
  CHECK(b["pushforward"]["X"]["ok"].get<bool>());
  auto bd = parse_document(b["result"].get<std::string>());
  CHECK(bd.field());
  CHECK(bd.curve());
  // the curve is not transversal to {y = z = 0}
  o.center = {"y", "z"};
  CHECK_THROWS_AS(run_command("blowup", load("nilpotent.doc"), o), PreconditionError);
  CHECK_THROWS_AS(run_command("nonsense", load("euler.doc")), PreconditionError);
}

TEST_CASE("exit codes of the tool") {
  CHECK(run_cli("log " + data("identity.doc")) == 0);
  CHECK(run_cli("reduce " + data("fixed_curve.doc")) == 3);
  CHECK(run_cli("log /nonexistent.doc") == 3);
  CHECK(run_cli("frobnicate " + data("identity.doc")) == 2);
  std::string tmp = "/tmp/fdyn_test_bad.doc";
  std::ofstream(tmp) << "vars x\norder 3\nfield X:\n  x^-2\n";
  CHECK(run_cli("log " + tmp) == 2);
  // order too small for the reduction budget
  CHECK(run_cli("reduce " + data("nilpotent.doc") + " --order 4") == 4);
}

TEST_CASE("construct reports are byte-identical across runs") {
  std::string a = "/tmp/fdyn_test_bb_a.json", b = "/tmp/fdyn_test_bb_b.json";
  REQUIRE(run_cli("construct " + data("briot_bouquet.doc") + " --out " + a) == 0);
  REQUIRE(run_cli("construct " + data("briot_bouquet.doc") + " --out " + b) == 0);
  std::string ta = slurp(a);
  CHECK(!ta.empty());
  CHECK(ta == slurp(b));
  CHECK(run_cli("verify " + data("briot_bouquet.doc") + " --report " + a) == 0);
}
