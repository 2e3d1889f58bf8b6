#include "fdyn/report.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "fdyn/errors.hpp"

namespace fdyn {

// ---------------------------------------------------------------- json output

namespace {

std::string fmt17(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool scalar(const Json& j) { return !j.is_object() && !j.is_array(); }

void dump_rec(const Json& j, std::string& out, int ind) {
  std::string pad(ind + 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad + Json(it.key()).dump() + ": ";
      dump_rec(it.value(), out, ind + 2);
    }
    out += "\n" + std::string(ind, ' ') + "}";
    return;
  }
  if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) {
      return scalar(e) || (e.is_array() && std::all_of(e.begin(), e.end(), scalar) && e.size() <= 4);
    });
    if (flat) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        dump_rec(j[i], out, ind);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += pad;
      dump_rec(j[i], out, ind + 2);
    }
    out += "\n" + std::string(ind, ' ') + "]";
    return;
  }
  if (j.is_number_float()) {
    out += fmt17(j.get<double>());
    return;
  }
  out += j.dump();
}

Json cplx(const Cplx& z) { return Json::array({z.real(), z.imag()}); }

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  dump_rec(j, out, 0);
  out += "\n";
  return out;
}

// ---------------------------------------------------------------- serializers

Json jet_to_json(const JetQ& j, const std::vector<std::string>& vars) {
  return Json{{"order", j.trunc()}, {"expr", print_expression(j, vars)}};
}

JetQ jet_from_json(const Json& j, const std::vector<std::string>& vars) {
  return parse_expression(j.at("expr").get<std::string>(), vars, j.at("order").get<int>());
}

namespace {

Json tuple_to_json(const JetTuple<GaussQ>& t, const std::vector<std::string>& vars) {
  Json a = Json::array();
  for (const auto& j : t) a.push_back(jet_to_json(j, vars));
  return a;
}

JetTuple<GaussQ> tuple_from_json(const Json& a, const std::vector<std::string>& vars) {
  JetTuple<GaussQ> t;
  for (const auto& j : a) t.push_back(jet_from_json(j, vars));
  return t;
}

Json jetf_to_json(const JetF& j, const std::vector<std::string>& vars) {
  return Json{{"order", j.trunc()}, {"expr", j.to_string(vars)}};
}

Json matseries_to_json(const MatSeries& s) {
  Json c = Json::array();
  int last = -1;
  for (int k = 0; k <= s.N && k < static_cast<int>(s.c.size()); ++k)
    if (!s.coeff(k).is_zero()) last = k;
  for (int k = 0; k <= last; ++k) c.push_back(matq_to_json(s.coeff(k)));
  return Json{{"rows", s.rows}, {"cols", s.cols}, {"order", s.N}, {"coeffs", c}};
}

MatSeries matseries_from_json(const Json& j) {
  MatSeries s(j.at("rows").get<int>(), j.at("cols").get<int>(), j.at("order").get<int>());
  int k = 0;
  for (const auto& m : j.at("coeffs")) s.set(k++, matq_from_json(m));
  s.trim();
  return s;
}

const std::vector<std::string>& xvar(const std::vector<std::string>& vars) {
  static thread_local std::vector<std::string> v;
  v = {vars.empty() ? std::string("x") : vars[0]};
  return v;
}

}  // namespace

Json matq_to_json(const MatQ& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows; ++i) {
    Json r = Json::array();
    for (int j = 0; j < m.cols; ++j) r.push_back(print_coeff(m(i, j)));
    rows.push_back(r);
  }
  return rows;
}

MatQ matq_from_json(const Json& j) {
  int r = static_cast<int>(j.size());
  int c = r ? static_cast<int>(j[0].size()) : 0;
  MatQ m(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) m(i, k) = parse_coeff(j[i][k].get<std::string>());
  return m;
}

Json step_to_json(const TransformStep& s, const std::vector<std::string>& vars) {
  Json j;
  switch (s.kind) {
    case StepKind::Coord:
      j["kind"] = "coord";
      j["label"] = s.change.label;
      j["psi"] = tuple_to_json(s.change.psi, vars);
      j["psi_inv"] = tuple_to_json(s.change.psi_inv, vars);
      break;
    case StepKind::BlowUp:
      j["kind"] = "blowup";
      j["center"] = s.center.vars;
      break;
    case StepKind::Ramify:
      j["kind"] = "ramify";
      j["q"] = s.q;
      j["var"] = s.var;
      break;
  }
  j["divisor"] = s.divisor ? Json(*s.divisor) : Json(nullptr);
  j["permissibility_checked"] = s.permissibility_checked;
  j["note"] = s.note;
  j["describe"] = s.describe();
  return j;
}

TransformStep step_from_json(const Json& j, const std::vector<std::string>& vars) {
  std::string kind = j.at("kind").get<std::string>();
  std::string note = j.value("note", std::string());
  TransformStep s;
  if (kind == "coord") {
    CoordChange c;
    c.psi = tuple_from_json(j.at("psi"), vars);
    c.psi_inv = tuple_from_json(j.at("psi_inv"), vars);
    c.label = j.value("label", std::string());
    s = TransformStep::coord(std::move(c), note);
  } else if (kind == "blowup") {
    Center z;
    z.vars = j.at("center").get<std::vector<int>>();
    s = TransformStep::blowup(std::move(z), note);
  } else if (kind == "ramify") {
    s = TransformStep::ramify(j.at("q").get<int>(), j.at("var").get<int>(), note);
  } else {
    throw ParseError(0, 0, "unknown step kind '" + kind + "'");
  }
  if (j.contains("divisor")) {
    if (j["divisor"].is_null()) s.divisor.reset();
    else s.divisor = j["divisor"].get<int>();
  }
  s.permissibility_checked = j.value("permissibility_checked", false);
  return s;
}

Json tstep_to_json(const TTransformation& t) {
  switch (t.kind) {
    case TKind::PolyLinear: return Json{{"kind", "poly"}, {"P", matseries_to_json(t.P)}};
    case TKind::Shearing: return Json{{"kind", "shearing"}, {"k", t.k}};
    case TKind::Ramify: return Json{{"kind", "ramify"}, {"alpha", t.alpha}};
  }
  return {};
}

TTransformation tstep_from_json(const Json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "poly") return TTransformation::poly(matseries_from_json(j.at("P")));
  if (kind == "shearing") return TTransformation::shearing(j.at("k").get<std::vector<int>>());
  if (kind == "ramify") return TTransformation::ramify(j.at("alpha").get<int>());
  throw ParseError(0, 0, "unknown Turrittin step kind '" + kind + "'");
}

Json rs_to_json(const RSDiffeoData& rs, const std::vector<std::string>& vars) {
  Json D = Json::array();
  for (const auto& d : rs.D) D.push_back(matq_to_json(d));
  return Json{{"k", rs.k},
              {"p", rs.p},
              {"lambda", print_coeff(rs.lambda)},
              {"D", D},
              {"C", matq_to_json(rs.C)},
              {"b", tuple_to_json(rs.b, xvar(vars))}};
}

// ---------------------------------------------------------------- commands

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<std::string> kCommands = {"log",    "exp",    "invert",  "invariance", "blowup",   "ramify",
                                            "turrittin", "reduce", "analyze", "construct",  "verify"};

JetF as_float(const JetQ& j) {
  std::vector<JetF::Term> t;
  for (const auto& [m, c] : j.terms()) t.push_back({m, c.to_complex()});
  return JetF::from_terms(j.nvars(), j.trunc(), std::move(t));
}

FormalMap<Cplx> map_float(const MapQ& F) {
  FormalMap<Cplx> r;
  for (const auto& c : F.comp) r.comp.push_back(as_float(c));
  return r;
}
FormalField<Cplx> field_float(const FieldQ& X) {
  FormalField<Cplx> r;
  for (const auto& c : X.comp) r.comp.push_back(as_float(c));
  return r;
}

template <class T>
double max_diff(const T& a, const T& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.comp.size(); ++i) {
    auto e = sub_min(a.comp[i], b.comp[i]);
    for (const auto& t : e.terms()) d = std::max(d, std::abs(CoeffTraits<Cplx>::to_complex(t.second)));
  }
  return d;
}

Json header(const std::string& cmd, const InputDocument& doc) {
  return Json{{"command", cmd}, {"dim", doc.dim}, {"vars", doc.vars}, {"order", doc.order}, {"backend", doc.backend}};
}

const MapQ& need_diffeo(const InputDocument& doc, const CommandOptions& opt) {
  const MapQ* F = doc.diffeo(opt.name);
  if (!F) throw PreconditionError("cli", "document has no diffeo block" + (opt.name.empty() ? "" : " named " + opt.name));
  return *F;
}
const FieldQ& need_field(const InputDocument& doc, const CommandOptions& opt) {
  const FieldQ* X = doc.field(opt.name);
  if (!X) throw PreconditionError("cli", "document has no field block" + (opt.name.empty() ? "" : " named " + opt.name));
  return *X;
}
const CurveParam& need_curve(const InputDocument& doc) {
  const CurveParam* c = doc.curve();
  if (!c) throw PreconditionError("cli", "document has no curve block");
  return *c;
}

void need_exact(const InputDocument& doc, const std::string& cmd) {
  if (doc.backend != "exact")
    throw PreconditionError("cli", cmd + " needs the exact backend: transformation pipelines divide by coordinates");
}

// The diffeomorphism of the document: the diffeo block, else Exp of the field.
MapQ document_map(const InputDocument& doc, const CommandOptions& opt, std::string* source) {
  if (const MapQ* F = doc.diffeo(opt.name)) {
    if (source) *source = "diffeo";
    return *F;
  }
  if (const FieldQ* X = doc.field(opt.name)) {
    if (source) *source = "exp(field)";
    return exp_field(*X);
  }
  throw PreconditionError("cli", "document has neither a diffeo nor a field block");
}

void check_not_fixed(const FieldQ& X, const CurveParam& c) {
  auto a = field_along(X, c);
  bool zero = std::all_of(a.begin(), a.end(), [](const JetQ& j) { return j.is_zero(); });
  if (zero)
    throw PreconditionError("rs", "the curve lies in Fix(F): the generator vanishes along it to the available order, "
                                  "but the reduction needs a curve not contained in the fixed-point set");
}

Json well_placed_json(const WellPlacedReport& w) {
  Json dirs = Json::array();
  for (std::size_t i = 0; i < w.directions.size(); ++i) {
    Json d{{"theta", w.directions[i].theta}, {"verdict", to_string(w.verdicts[i])}};
    d["eta_sup"] = w.eta_sup[i] ? Json(*w.eta_sup[i]) : Json(nullptr);
    dirs.push_back(d);
  }
  Json arcs = Json::array();
  for (const auto& [a, b] : w.V.arcs) arcs.push_back(Json::array({a, b}));
  Json j{{"k", w.k},
         {"p", w.p},
         {"lambda", print_coeff(w.lambda)},
         {"V", Json{{"full", w.V.full}, {"arcs", arcs}, {"text", w.V.to_string()}}},
         {"directions", dirs},
         {"well_placed", w.overall},
         {"indeterminate", w.indeterminate}};
  if (w.dim2) {
    const auto& d = *w.dim2;
    j["dim2"] = Json{{"case", std::string(1, d.tag)},
                     {"attracting_F", d.attracting_F},
                     {"attracting_Finv", d.attracting_Finv},
                     {"arcs", d.arcs},
                     {"guaranteed_attracting", d.guaranteed_attracting},
                     {"guaranteed_repelling", d.guaranteed_repelling},
                     {"guarantee", d.guarantee},
                     {"chosen", d.chosen}};
  }
  return j;
}

Json field_rs_json(const RSFieldData& f) {
  Json D = Json::array();
  for (const auto& d : f.Dcal) D.push_back(matq_to_json(d));
  return Json{{"k", f.k}, {"p", f.p}, {"Dcal", D}, {"Ccal", matq_to_json(f.Ccal)}};
}

Json certificate_json(const DiffeoReduction& dr, const std::vector<std::string>& vars) {
  Json steps = Json::array();
  for (const auto& s : dr.field.seq.steps) steps.push_back(step_to_json(s, vars));
  Json ts = Json::array();
  for (const auto& t : dr.field.tsteps) ts.push_back(tstep_to_json(t));
  return Json{{"steps", steps}, {"turrittin", ts}, {"beta", dr.field.beta}, {"m", dr.field.m}, {"M", dr.field.M}};
}

// ---- exp-log

Json cmd_log(const InputDocument& doc, const CommandOptions& opt) {
  Json r = header("log", doc);
  const MapQ& F = need_diffeo(doc, opt);
  if (doc.backend == "float") {
    auto Ff = map_float(F);
    auto X = log_map(Ff);
    Json c = Json::array();
    for (const auto& j : X.comp) c.push_back(jetf_to_json(j, doc.vars));
    r["field"] = c;
    r["roundtrip_max_error"] = max_diff(exp_field(X), Ff);
    return r;
  }
  FieldQ X = log_map(F);
  r["field"] = tuple_to_json(X.comp, doc.vars);
  r["roundtrip_exact"] = exp_field(X) == F.truncated(exp_field(X).trunc());
  return r;
}

Json cmd_exp(const InputDocument& doc, const CommandOptions& opt) {
  Json r = header("exp", doc);
  const FieldQ& X = need_field(doc, opt);
  if (doc.backend == "float") {
    auto Xf = field_float(X);
    auto F = exp_field(Xf);
    Json c = Json::array();
    for (const auto& j : F.comp) c.push_back(jetf_to_json(j, doc.vars));
    r["map"] = c;
    r["roundtrip_max_error"] = max_diff(log_map(F), Xf);
    return r;
  }
  MapQ F = exp_field(X);
  r["map"] = tuple_to_json(F.comp, doc.vars);
  FieldQ back = log_map(F);
  r["roundtrip_exact"] = back == X.truncated(back.trunc());
  return r;
}

Json cmd_invert(const InputDocument& doc, const CommandOptions& opt) {
  Json r = header("invert", doc);
  const MapQ& F = need_diffeo(doc, opt);
  if (doc.backend == "float") {
    auto Ff = map_float(F);
    auto G = inverse_map(Ff);
    Json c = Json::array();
    for (const auto& j : G.comp) c.push_back(jetf_to_json(j, doc.vars));
    r["map"] = c;
    auto id = FormalMap<Cplx>::identity(F.nvars(), G.trunc());
    r["composition_max_error"] = max_diff(compose_maps(Ff, G), id);
    return r;
  }
  MapQ G = inverse_map(F);
  r["map"] = tuple_to_json(G.comp, doc.vars);
  MapQ FG = compose_maps(F, G);
  r["composition_exact"] = FG == MapQ::identity(F.nvars(), FG.trunc());
  return r;
}

// ---- formal-curves

Json cmd_invariance(const InputDocument& doc, const CommandOptions& opt) {
  need_exact(doc, "invariance");
  Json r = header("invariance", doc);
  const CurveParam& c = need_curve(doc);
  InvarianceResult ir;
  if (const FieldQ* X = doc.field(opt.name)) {
    r["object"] = "field";
    ir = try_invariance_h(*X, c);
  } else {
    r["object"] = "diffeo";
    ir = invariance_map(need_diffeo(doc, opt), c);
  }
  r["invariant"] = ir.invariant;
  r["budget"] = ir.budget;
  r["note"] = "no obstruction through the budget order; formal invariance is not claimed";
  if (ir.invariant) r["h"] = jet_to_json(ir.h, {doc.curve_var});
  else r["first_failure"] = Json{{"order", ir.fail_order}, {"component", ir.fail_component}};
  return r;
}

// ---- permissible-transforms

InputDocument transformed_document(const InputDocument& doc, const TransformStep& s, Json& r) {
  InputDocument out = doc;
  out.diffeos.clear();
  out.fields.clear();
  out.curves.clear();
  for (const auto& f : doc.fields) {
    FieldQ Xt = transform_field(f.value, s);
    out.fields.push_back({f.name, Xt});
    auto pc = pushforward_check(f.value, Xt, s);
    r["pushforward"][f.name] = Json{{"ok", pc.ok}, {"budget", pc.budget}};
  }
  for (const auto& d : doc.diffeos) out.diffeos.push_back({d.name, transform_map(d.value, s)});
  for (const auto& c : doc.curves) out.curves.push_back({c.name, transform_curve(c.value, s)});
  int N = kMaxDegree;
  for (const auto& f : out.fields) N = std::min(N, f.value.trunc());
  for (const auto& d : out.diffeos) N = std::min(N, d.value.trunc());
  for (const auto& c : out.curves) N = std::min(N, c.value.trunc());
  if (N < kMaxDegree) out.order = N;
  for (auto& f : out.fields) f.value = f.value.truncated(out.order);
  for (auto& d : out.diffeos) d.value = d.value.truncated(out.order);
  return out;
}

int var_index(const InputDocument& doc, const std::string& name) {
  for (int i = 0; i < doc.dim; ++i)
    if (doc.vars[i] == name) return i;
  throw PreconditionError("cli", "unknown variable '" + name + "'");
}

Json cmd_blowup(const InputDocument& doc, const CommandOptions& opt) {
  need_exact(doc, "blowup");
  Json r = header("blowup", doc);
  if (opt.center.size() < 2) throw PreconditionError("cli", "blowup needs --center with at least two variables");
  Center Z;
  for (const auto& v : opt.center) Z.vars.push_back(var_index(doc, v));
  TransformStep s = TransformStep::blowup(Z);
  if (!doc.fields.empty() && !doc.curves.empty()) {
    auto chk = is_permissible(doc.fields.front().value, doc.curves.front().value, Z);
    r["permissible"] = Json{{"ok", chk.ok}, {"budget", chk.budget}, {"clause", chk.clause}};
    if (!chk.ok) throw PreconditionError("transforms", "center " + Z.to_string() + " is not permissible: " + chk.clause);
    s.permissibility_checked = true;
  }
  InputDocument out = transformed_document(doc, s, r);
  r["step"] = step_to_json(s, doc.vars);
  r["result"] = print_document(out);
  return r;
}

Json cmd_ramify(const InputDocument& doc, const CommandOptions& opt) {
  need_exact(doc, "ramify");
  Json r = header("ramify", doc);
  if (opt.q < 1) throw PreconditionError("cli", "ramify needs --q >= 1");
  int v = opt.var.empty() ? 0 : var_index(doc, opt.var);
  TransformStep s = TransformStep::ramify(opt.q, v);
  InputDocument out = transformed_document(doc, s, r);
  r["step"] = step_to_json(s, doc.vars);
  r["result"] = print_document(out);
  return r;
}

// ---- turrittin

Json cmd_turrittin(const InputDocument& doc, const CommandOptions& opt) {
  need_exact(doc, "turrittin");
  Json r = header("turrittin", doc);
  const LinearSystem* sys = doc.system(opt.name);
  if (!sys) throw PreconditionError("cli", "document has no system block");
  auto res = turrittin_reduce(*sys);
  Json steps = Json::array();
  for (const auto& t : res.steps) steps.push_back(tstep_to_json(t));
  Json D = Json::array();
  for (const auto& d : res.form.D) D.push_back(matq_to_json(d));
  r["certificate"] = Json{{"steps", steps}};
  r["form"] = Json{{"p", res.form.p}, {"D", D}, {"C", matq_to_json(res.form.C)}};
  r["system"] = Json{{"q", res.form.system.q}, {"B", matseries_to_json(res.form.system.B)}};
  r["replay_exact"] = replay(*sys, res.steps) == res.form.system;
  r["shape_ok"] = is_rs_linear_form(res.form.system);
  return r;
}

// ---- rs-reduction

Json cmd_reduce(const InputDocument& doc, const CommandOptions& opt) {
  need_exact(doc, "reduce");
  Json r = header("reduce", doc);
  const CurveParam& c = need_curve(doc);
  if (const MapQ* F = doc.diffeo(opt.name)) {
    FieldQ X = log_map(*F);
    check_not_fixed(X, c);
    r["object"] = "diffeo";
    r["budget"] = Json{{"order", doc.order}, {"required", required_truncation(X, c)}};
    auto dr = reduce_diffeo(*F, c);
    r["rs"] = rs_to_json(dr.rs, doc.vars);
    r["field_rs"] = field_rs_json(dr.field.rs);
    r["checks"] = Json{{"exp_relation", dr.relation_ok}, {"fix", dr.fix_ok}};
    r["certificate"] = certificate_json(dr, doc.vars);
    r["result"] = Json{{"map", tuple_to_json(dr.map.comp, doc.vars)},
                       {"field", tuple_to_json(dr.field.field.comp, doc.vars)},
                       {"curve", tuple_to_json(dr.field.curve.gamma, {doc.curve_var})}};
    return r;
  }
  const FieldQ& X = need_field(doc, opt);
  check_not_fixed(X, c);
  r["object"] = "field";
  r["budget"] = Json{{"order", doc.order}, {"required", required_truncation(X, c)}};
  auto fr = reduce_field(X, c);
  r["field_rs"] = field_rs_json(fr.rs);
  DiffeoReduction tmp;
  tmp.field = fr;
  r["certificate"] = certificate_json(tmp, doc.vars);
  r["result"] = Json{{"field", tuple_to_json(fr.field.comp, doc.vars)},
                     {"curve", tuple_to_json(fr.curve.gamma, {doc.curve_var})}};
  return r;
}

// ---- sector-analysis

struct Analysis {
  MapQ F, Finv;
  DiffeoReduction drF, drI;
  WellPlacedReport wF, wI;
  std::string verdict;
};

Analysis analyze(const InputDocument& doc, const CommandOptions& opt, std::string* source) {
  need_exact(doc, "analyze");
  Analysis a;
  a.F = document_map(doc, opt, source);
  const CurveParam& c = need_curve(doc);
  check_not_fixed(log_map(a.F), c);
  a.drF = reduce_diffeo(a.F, c);
  a.wF = well_placed(a.drF.rs);
  a.Finv = inverse_map(a.F);
  a.drI = reduce_diffeo(a.Finv, c);
  a.wI = well_placed(a.drI.rs);
  if (a.wF.overall) a.verdict = "well-placed";
  else if (a.wI.overall) a.verdict = "well-placed-for-inverse";
  else if (a.wF.indeterminate || a.wI.indeterminate) a.verdict = "indeterminate";
  else a.verdict = "neither";
  return a;
}

Json cmd_analyze(const InputDocument& doc, const CommandOptions& opt) {
  Json r = header("analyze", doc);
  std::string src;
  Analysis a = analyze(doc, opt, &src);
  r["source"] = src;
  r["F"] = well_placed_json(a.wF);
  r["F^-1"] = well_placed_json(a.wI);
  r["verdict"] = a.verdict;
  return r;
}

// ---- parabolic-constructor

Json attempt_json(const Attempt& at) {
  return Json{{"delta", at.delta},
              {"outcome", at.outcome},
              {"iterations", at.iterations},
              {"last_change", at.last_change},
              {"contraction", at.contraction}};
}

Json asymptotic_json(const AsymptoticReport& ar) {
  Json e = Json::array();
  for (const auto& x : ar.entries)
    e.push_back(Json{{"order", x.order}, {"slope", std::isfinite(x.slope) ? Json(x.slope) : Json("inf")},
                     {"c", x.c}, {"pass", x.pass}});
  return Json{{"entries", e}, {"failing", ar.failing}, {"pass", ar.pass}};
}

Json stability_json(const StabilityReport& s) {
  return Json{{"seeds", s.seeds},         {"converged", s.converged},   {"exited", s.exited},
              {"max_deviation", s.max_deviation}, {"threshold", s.threshold}, {"worst_law", s.worst_law},
              {"violations", s.violations}, {"pass", s.pass}};
}

Json orbit_json(const OrbitLawReport& o) {
  return Json{{"j", o.j}, {"worst", o.worst}, {"s", o.s}, {"K_spread", o.K_spread}, {"pass", o.worst <= 0.05}};
}

Json verification(const ParabolicCurveNumeric& pc, const NormalizedRS& nr, const CommandOptions& opt) {
  JetTuple<GaussQ> gb(nr.graph.gamma.begin() + 1, nr.graph.gamma.end());
  int Nv = std::min(6, nr.graph.trunc());
  auto ar = verify_asymptotic(pc, nr, gb, Nv);
  auto sr = verify_stability(pc, nr, opt.seeds, opt.seed);
  auto ol = orbit_law(pc, nr, 10000);
  return Json{{"asymptotic", asymptotic_json(ar)},
              {"stability", stability_json(sr)},
              {"orbit_law", orbit_json(ol)},
              {"pass", ar.pass && sr.pass && ol.worst <= 0.05}};
}

struct Target {
  const DiffeoReduction* dr;
  const WellPlacedReport* w;
  std::string name;
};

NormalizedRS normalize_with_default_m(const DiffeoReduction& dr, const CommandOptions& opt) {
  if (opt.m) return normalize_rs(dr.map, dr.field.curve, *opt.m);
  int m = std::max(6, dr.rs.p + 2);
  NormalizedRS nr = normalize_rs(dr.map, dr.field.curve, m, false);
  if (m < nr.m0) nr = normalize_rs(dr.map, dr.field.curve, nr.m0);
  return nr;
}

Json grid_json(const ParabolicCurveNumeric& pc, const NormalizedRS& nr, const DiffeoReduction& dr) {
  const auto& g = pc.grid;
  Json nodes = Json::array(), vals = Json::array(), orig = Json::array();
  for (int idx = 0; idx < g.nodes(); ++idx) {
    Cplx xs = g.node(idx);
    nodes.push_back(cplx(xs));
    Json v = Json::array();
    VecC u = g.u_node(idx);
    for (int l = 0; l < g.n1; ++l) v.push_back(cplx(u(l)));
    vals.push_back(v);
    auto pt = pull_back(dr.field.seq, nr.n, curve_point(pc, nr, xs));
    Json o = Json::array();
    for (const auto& z : pt) o.push_back(cplx(z));
    orig.push_back(o);
  }
  return Json{{"ns", g.ns},          {"nth", g.nth},   {"s0", g.s0},       {"s1", g.s1},
              {"t0", g.t0},          {"t1", g.t1},     {"nodes", nodes},   {"values", vals},
              {"original", orig}};
}

Json cmd_construct(const InputDocument& doc, const CommandOptions& opt) {
  Json r = header("construct", doc);
  std::string src;
  Analysis a = analyze(doc, opt, &src);
  Target t;
  if (a.wF.overall) t = {&a.drF, &a.wF, "F"};
  else if (a.wI.overall) t = {&a.drI, &a.wI, "F^-1"};
  else
    throw PreconditionError("sector", a.verdict == "indeterminate"
                                          ? "well-placedness is indeterminate for F and F^-1 at the float guard"
                                          : "neither F nor F^-1 is well placed");
  const DiffeoReduction& dr = *t.dr;
  double tau = 0, eta_sup = 0;
  bool found = false;
  for (std::size_t i = 0; i < t.w->directions.size(); ++i) {
    if (t.w->verdicts[i] != Membership::Inside || !t.w->eta_sup[i]) continue;
    double th = t.w->directions[i].theta;
    if (opt.tau && std::abs(std::remainder(th - *opt.tau, 2 * kPi)) > 1e-9) continue;
    tau = th;
    eta_sup = *t.w->eta_sup[i];
    found = true;
    break;
  }
  if (!found) {
    if (opt.tau) throw PreconditionError("sector", "tau is not a well-placed attracting direction of " + t.name);
    throw PreconditionError("sector", "no well-placed direction with a sector opening");
  }
  double eta = opt.eta ? *opt.eta : std::min(kPi / 2, 0.5 * eta_sup);
  NormalizedRS nr = normalize_with_default_m(dr, opt);
  double delta = opt.delta ? *opt.delta : std::min(0.05, 0.5 * nr.delta_trust * std::abs(nr.alpha));

  ConstructOptions co;
  co.tol = opt.tol;
  co.ns = co.nth = opt.grid;
  ParabolicCurveNumeric pc = construct(nr, tau, eta, delta, co);

  r["source"] = src;
  r["parameters"] = Json{{"tol", opt.tol}, {"m", nr.m}, {"tau", tau}, {"eta", eta}, {"delta", delta},
                         {"seed", opt.seed}, {"seeds", opt.seeds}, {"grid", opt.grid},
                         {"inner_ratio", co.inner_ratio}, {"angular_fill", co.angular_fill}};
  r["analysis"] = Json{{"F", well_placed_json(a.wF)}, {"F^-1", well_placed_json(a.wI)}, {"verdict", a.verdict},
                       {"target", t.name}};
  r["reduction"] = Json{{"rs", rs_to_json(dr.rs, doc.vars)}, {"steps", dr.field.seq.size()}};
  Json D = Json::array();
  for (const auto& d : nr.Dcal) D.push_back(matq_to_json(d));
  Json P = Json::array();
  for (const auto& c : nr.P_coeffs) P.push_back(print_coeff(c));
  r["normalization"] = Json{{"k", nr.k},
                            {"p", nr.p},
                            {"m0", nr.m0},
                            {"alpha", cplx(nr.alpha)},
                            {"alpha_exact", nr.alpha_exact},
                            {"P", P},
                            {"Dcal", D},
                            {"Ccal", matq_to_json(nr.Ccal)},
                            {"min_re_spec", nr.min_re_spec},
                            {"delta_trust", nr.delta_trust}};
  Json at = Json::array();
  for (const auto& x : pc.attempts) at.push_back(attempt_json(x));
  r["construction"] = Json{{"delta", pc.delta},
                           {"tau_scaled", pc.tau_scaled},
                           {"iterations", pc.iterations},
                           {"changes", pc.changes},
                           {"contraction", pc.contraction},
                           {"residual_sup", pc.residual.sup},
                           {"residual_scaled", pc.residual.scaled},
                           {"norms", Json{{"n", pc.norms.n}, {"dnorm", pc.norms.dnorm}, {"sup", pc.norms.sup}}},
                           {"in_ball", pc.in_ball},
                           {"orbit_steps", pc.tstats.steps},
                           {"longest_orbit", pc.tstats.longest},
                           {"tail_estimate", pc.tstats.tail_est},
                           {"attempts", at},
                           {"converged", pc.residual.sup <= opt.tol}};
  r["verification"] = verification(pc, nr, opt);
  r["curve"] = grid_json(pc, nr, dr);
  return r;
}

// ---- verify

Json verify_reduce(const InputDocument& doc, const Json& prior, const CommandOptions& opt) {
  Json r = header("verify", doc);
  r["report"] = "reduce";
  TransformSequence seq;
  for (const auto& s : prior.at("certificate").at("steps")) seq.append(step_from_json(s, doc.vars));
  const CurveParam& c = need_curve(doc);
  const Json& res = prior.at("result");
  bool ok = true;
  if (prior.at("object") == "diffeo") {
    const MapQ& F = need_diffeo(doc, opt);
    MapQ Ft = transform_map(F, seq);
    MapQ stored{tuple_from_json(res.at("map"), doc.vars)};
    bool m_ok = Ft == stored;
    FieldQ Xt = transform_field(log_map(F), seq);
    FieldQ Xs{tuple_from_json(res.at("field"), doc.vars)};
    bool f_ok = Xt.truncated(Xs.trunc()) == Xs;
    r["map_exact"] = m_ok;
    r["field_exact"] = f_ok;
    ok = m_ok && f_ok;
  } else {
    const FieldQ& X = need_field(doc, opt);
    FieldQ Xs{tuple_from_json(res.at("field"), doc.vars)};
    bool f_ok = transform_field(X, seq).truncated(Xs.trunc()) == Xs;
    r["field_exact"] = f_ok;
    ok = f_ok;
  }
  CurveParam ct = transform_curve(c, seq);
  JetTuple<GaussQ> cs = tuple_from_json(res.at("curve"), {doc.curve_var});
  CurveParam gs = graph_form(ct);
  bool c_ok = gs.gamma.size() == cs.size();
  for (std::size_t i = 0; c_ok && i < cs.size(); ++i) c_ok = lowered(gs.gamma[i], cs[i].trunc()) == cs[i];
  r["curve_exact"] = c_ok;
  r["steps"] = seq.size();
  r["pass"] = ok && c_ok;
  return r;
}

Json verify_turrittin(const InputDocument& doc, const Json& prior, const CommandOptions& opt) {
  Json r = header("verify", doc);
  r["report"] = "turrittin";
  const LinearSystem* sys = doc.system(opt.name);
  if (!sys) throw PreconditionError("cli", "document has no system block");
  std::vector<TTransformation> steps;
  for (const auto& s : prior.at("certificate").at("steps")) steps.push_back(tstep_from_json(s));
  LinearSystem stored;
  stored.q = prior.at("system").at("q").get<int>();
  stored.B = matseries_from_json(prior.at("system").at("B"));
  bool ok = replay(*sys, steps) == stored;
  r["replay_exact"] = ok;
  r["pass"] = ok;
  return r;
}

Json verify_construct(const InputDocument& doc, const Json& prior, const CommandOptions& opt) {
  Json r = header("verify", doc);
  r["report"] = "construct";
  std::string src;
  CommandOptions o = opt;
  const Json& par = prior.at("parameters");
  o.m = par.at("m").get<int>();
  Analysis a = analyze(doc, o, &src);
  std::string target = prior.at("analysis").at("target").get<std::string>();
  const DiffeoReduction& dr = target == "F" ? a.drF : a.drI;
  NormalizedRS nr = normalize_rs(dr.map, dr.field.curve, *o.m);
  const Json& cj = prior.at("construction");
  const Json& gj = prior.at("curve");
  ParabolicCurveNumeric pc;
  pc.m = nr.m;
  pc.tau = par.at("tau").get<double>();
  pc.eta = par.at("eta").get<double>();
  pc.delta = cj.at("delta").get<double>();
  pc.tau_scaled = cj.at("tau_scaled").get<double>();
  SectorSpec sec{pc.tau_scaled, pc.eta, pc.delta / std::abs(nr.alpha)};
  pc.grid = SectorGrid::make(sec, nr.m, nr.p, nr.n1(), gj.at("ns").get<int>(), gj.at("nth").get<int>(),
                             par.at("inner_ratio").get<double>(), par.at("angular_fill").get<double>());
  double node_err = 0;
  for (int idx = 0; idx < pc.grid.nodes(); ++idx) {
    const Json& nj = gj.at("nodes").at(idx);
    Cplx stored(nj[0].get<double>(), nj[1].get<double>());
    node_err = std::max(node_err, std::abs(stored - pc.grid.node(idx)));
    VecC u(nr.n1());
    for (int l = 0; l < nr.n1(); ++l) {
      const Json& v = gj.at("values").at(idx).at(l);
      u(l) = Cplx(v[0].get<double>(), v[1].get<double>());
    }
    pc.grid.set_u(idx, u);
  }
  if (node_err > 1e-14) throw PreconditionError("cli", "saved grid nodes do not match the document's normalization");
  pc.residual = invariance_residual(nr, pc.grid);
  pc.residual_sup = pc.residual.sup;
  double defect = fixed_point_defect(nr, pc.grid);
  double stored_res = cj.at("residual_sup").get<double>();
  r["residual_sup"] = pc.residual.sup;
  r["residual_scaled"] = pc.residual.scaled;
  r["residual_matches"] = std::abs(pc.residual.sup - stored_res) <= 1e-12 * std::max(1.0, stored_res) + 1e-30;
  r["fixed_point_defect"] = defect;
  Json v = verification(pc, nr, opt);
  r["verification"] = v;
  r["pass"] = pc.residual.sup <= opt.tol && pc.residual.scaled <= opt.tol && defect <= opt.tol &&
              v.at("pass").get<bool>();
  return r;
}

Json cmd_verify(const InputDocument& doc, const CommandOptions& opt) {
  if (!opt.prior) throw PreconditionError("cli", "verify needs a saved report (--report FILE)");
  const Json& prior = *opt.prior;
  std::string kind = prior.value("command", std::string());
  if (kind == "reduce") return verify_reduce(doc, prior, opt);
  if (kind == "turrittin") return verify_turrittin(doc, prior, opt);
  if (kind == "construct") return verify_construct(doc, prior, opt);
  throw PreconditionError("cli", "verify does not know reports of kind '" + kind + "'");
}

}  // namespace

const std::vector<std::string>& command_names() { return kCommands; }

Json run_command(const std::string& cmd, const InputDocument& doc, const CommandOptions& opt) {
  if (cmd == "log") return cmd_log(doc, opt);
  if (cmd == "exp") return cmd_exp(doc, opt);
  if (cmd == "invert") return cmd_invert(doc, opt);
  if (cmd == "invariance") return cmd_invariance(doc, opt);
  if (cmd == "blowup") return cmd_blowup(doc, opt);
  if (cmd == "ramify") return cmd_ramify(doc, opt);
  if (cmd == "turrittin") return cmd_turrittin(doc, opt);
  if (cmd == "reduce") return cmd_reduce(doc, opt);
  if (cmd == "analyze") return cmd_analyze(doc, opt);
  if (cmd == "construct") return cmd_construct(doc, opt);
  if (cmd == "verify") return cmd_verify(doc, opt);
  throw PreconditionError("cli", "unknown command '" + cmd + "'");
}

}  // namespace fdyn
