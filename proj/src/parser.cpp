#include "fdyn/parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "fdyn/errors.hpp"

namespace fdyn {

namespace {

constexpr int kMaxExponent = 10000;

enum class Tok { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string text;
  int col;  // 0-based within the expression
};

std::vector<Token> lex(const std::string& s, int line, int col0) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    int col = static_cast<int>(i);
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(s[i + 1]))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        }
      }
      out.push_back({Tok::Num, s.substr(i, j - i), col});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::Ident, s.substr(i, j - i), col});
      i = j;
      continue;
    }
    Tok k;
    switch (c) {
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '/': k = Tok::Slash; break;
      case '^': k = Tok::Caret; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      default: throw ParseError(line, col0 + col, std::string("unexpected character '") + c + "'");
    }
    out.push_back({k, std::string(1, c), col});
    ++i;
  }
  out.push_back({Tok::End, "", static_cast<int>(s.size())});
  return out;
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars, int N, int line, int col0)
      : vars_(vars), n_(static_cast<int>(vars.size())), N_(N), line_(line), col0_(col0),
        toks_(lex(text, line, col0)) {}

  JetQ run() {
    if (peek().kind == Tok::End) fail(peek(), "empty expression");
    JetQ r = expr();
    if (peek().kind != Tok::End) fail(peek(), "unexpected '" + peek().text + "'");
    return r;
  }

 private:
  const std::vector<std::string>& vars_;
  int n_, N_, line_, col0_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(line_, col0_ + t.col, msg);
  }

  JetQ constant(const GaussQ& c) const { return JetQ::constant(n_, N_, c); }

  JetQ expr() {
    JetQ a = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      bool minus = next().kind == Tok::Minus;
      JetQ b = term();
      a = minus ? a - b : a + b;
    }
    return a;
  }

  JetQ term() {
    JetQ a = unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Token& op = next();
      JetQ b = unary();
      if (op.kind == Tok::Star) {
        a = a * b;
        continue;
      }
      if (b.is_zero()) fail(op, "division by zero");
      if (b.size() != 1 || b.terms().front().first != 0) fail(op, "division by a non-constant");
      a = a.scale(b.terms().front().second.inverse());
    }
    return a;
  }

  JetQ unary() {
    if (peek().kind == Tok::Minus) {
      next();
      return -unary();
    }
    if (peek().kind == Tok::Plus) {
      next();
      return unary();
    }
    return power();
  }

  JetQ power() {
    JetQ base = atom();
    if (peek().kind != Tok::Caret) return base;
    const Token& caret = next();
    if (peek().kind == Tok::Minus) fail(peek(), "negative exponents are not allowed");
    JetQ e = power();
    if (e.is_zero()) return constant(GaussQ(1));
    if (e.size() != 1 || e.terms().front().first != 0) fail(caret, "exponent must be a constant");
    const GaussQ& c = e.terms().front().second;
    if (!c.is_real() || !c.re.is_integer()) fail(caret, "exponent must be an integer");
    if (c.re.sign() < 0) fail(caret, "negative exponents are not allowed");
    if (c.re > Rational(kMaxExponent)) {
      // only a base without constant term can be raised this far: it vanishes to the order
      if (base.order() >= 1) return JetQ(n_, N_);
      fail(caret, "exponent too large");
    }
    return ipow(base, static_cast<int>(c.re.to_double()));
  }

  JetQ ipow(JetQ b, int e) const {
    JetQ r = constant(GaussQ(1));
    while (e > 0) {
      if (e & 1) r = r * b;
      e >>= 1;
      if (e) b = b * b;
    }
    return r;
  }

  JetQ atom() {
    const Token& t = next();
    switch (t.kind) {
      case Tok::Num: {
        Rational q;
        try {
          q = Rational::parse(t.text);
        } catch (const std::exception&) {
          fail(t, "bad number '" + t.text + "'");
        }
        return constant(GaussQ(q));
      }
      case Tok::Ident: {
        for (int i = 0; i < n_; ++i)
          if (vars_[i] == t.text) return JetQ::var(n_, N_, i);
        if (t.text == "i") return constant(GaussQ(Rational(0), Rational(1)));
        fail(t, "unknown variable '" + t.text + "'");
      }
      case Tok::LParen: {
        if (peek().kind == Tok::RParen) fail(peek(), "empty parentheses");
        JetQ r = expr();
        if (peek().kind != Tok::RParen) fail(peek(), "expected ')'");
        next();
        return r;
      }
      case Tok::End: fail(t, "unexpected end of expression");
      default: fail(t, "unexpected '" + t.text + "'");
    }
  }
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

bool valid_ident(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

struct RawLine {
  int line;
  int col;  // 1-based column where the content starts
  std::string text;
};

struct RawBlock {
  std::string kind, name;
  int line;
  std::vector<RawLine> body;
};

template <class T>
const T* find_named(const std::vector<Named<T>>& v, const std::string& name) {
  if (v.empty()) return nullptr;
  if (name.empty()) return &v.front().value;
  for (const auto& e : v)
    if (e.name == name) return &e.value;
  return nullptr;
}

int parse_int(const std::string& w, int line, int col, const std::string& what) {
  try {
    std::size_t used = 0;
    int v = std::stoi(w, &used);
    if (used != w.size()) throw std::invalid_argument(w);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, col, "bad " + what + " '" + w + "'");
  }
}

}  // namespace

JetQ parse_expression(const std::string& text, const std::vector<std::string>& vars, int N, int line, int col0) {
  return Parser(text, vars, N, line, col0).run();
}

std::string print_expression(const JetQ& j, const std::vector<std::string>& vars) { return j.to_string(vars); }

GaussQ parse_coeff(const std::string& text) {
  JetQ j = parse_expression(text, {}, 0);
  return j.constant_term();
}

std::string print_coeff(const GaussQ& c) { return c.to_string(); }

const MapQ* InputDocument::diffeo(const std::string& name) const { return find_named(diffeos, name); }
const FieldQ* InputDocument::field(const std::string& name) const { return find_named(fields, name); }
const CurveParam* InputDocument::curve(const std::string& name) const { return find_named(curves, name); }
const LinearSystem* InputDocument::system(const std::string& name) const { return find_named(systems, name); }

InputDocument parse_document(const std::string& text, int order_override) {
  InputDocument doc;
  std::vector<RawBlock> blocks;
  std::istringstream is(text);
  std::string raw;
  int ln = 0;
  bool have_order = false;
  int dim_line = 0, vars_line = 0;
  while (std::getline(is, raw)) {
    ++ln;
    auto hash = raw.find('#');
    std::string s = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::string t = trim(s);
    if (t.empty()) continue;
    int col = static_cast<int>(s.find_first_not_of(" \t\r")) + 1;
    auto words = split_ws(t);
    const std::string& w0 = words[0];
    if (t.back() == ':' && (w0 == "diffeo" || w0 == "field" || w0 == "curve" || w0 == "system")) {
      std::string name = trim(t.substr(w0.size(), t.size() - w0.size() - 1));
      if (!valid_ident(name)) throw ParseError(ln, col, "bad block name '" + name + "'");
      blocks.push_back({w0, name, ln, {}});
      continue;
    }
    if (blocks.empty() || w0 == "dim" || w0 == "vars" || w0 == "order" || w0 == "backend") {
      if (!blocks.empty()) throw ParseError(ln, col, "header '" + w0 + "' after the first block");
      if (w0 == "dim") {
        if (words.size() != 2) throw ParseError(ln, col, "dim takes one value");
        doc.dim = parse_int(words[1], ln, col, "dimension");
        dim_line = ln;
      } else if (w0 == "vars") {
        doc.vars.assign(words.begin() + 1, words.end());
        vars_line = ln;
        for (const auto& v : doc.vars)
          if (!valid_ident(v) || v == "i") throw ParseError(ln, col, "bad variable name '" + v + "'");
        std::set<std::string> u(doc.vars.begin(), doc.vars.end());
        if (u.size() != doc.vars.size()) throw ParseError(ln, col, "repeated variable name");
      } else if (w0 == "order") {
        if (words.size() != 2) throw ParseError(ln, col, "order takes one value");
        doc.order = parse_int(words[1], ln, col, "order");
        have_order = true;
      } else if (w0 == "backend") {
        if (words.size() != 2 || (words[1] != "exact" && words[1] != "float"))
          throw ParseError(ln, col, "backend must be exact or float");
        doc.backend = words[1];
      } else {
        throw ParseError(ln, col, "unknown header '" + w0 + "'");
      }
      continue;
    }
    blocks.back().body.push_back({ln, col, t});
  }
  if (order_override > 0) {
    doc.order = order_override;
    have_order = true;
  }
  if (!have_order) throw ParseError(ln + 1, 1, "missing order header");
  if (doc.order < 1 || doc.order > kMaxDegree) throw ParseError(ln + 1, 1, "order outside [1, 250]");
  if (doc.vars.empty()) {
    if (doc.dim <= 0) throw ParseError(ln + 1, 1, "missing vars and dim headers");
    doc.vars = default_var_names(doc.dim);
  }
  if (doc.dim == 0) doc.dim = static_cast<int>(doc.vars.size());
  if (doc.dim != static_cast<int>(doc.vars.size()))
    throw ParseError(dim_line, 1, "dim does not match the number of variables");
  if (doc.dim > kMaxVars) throw ParseError(vars_line ? vars_line : dim_line, 1, "too many variables");
  if (std::find(doc.vars.begin(), doc.vars.end(), doc.curve_var) != doc.vars.end())
    throw ParseError(vars_line, 1, "'s' is reserved for curve parameters");

  std::set<std::string> names;
  const int n = doc.dim, N = doc.order;
  for (const auto& b : blocks) {
    if (!names.insert(b.name).second) throw ParseError(b.line, 1, "duplicate name '" + b.name + "'");
    if (b.kind == "system") {
      if (b.body.empty()) throw ParseError(b.line, 1, "empty system block");
      auto w = split_ws(b.body[0].text);
      if (w.size() != 2 || w[0] != "q") throw ParseError(b.body[0].line, b.body[0].col, "system block starts with 'q Q'");
      LinearSystem sys;
      sys.q = parse_int(w[1], b.body[0].line, b.body[0].col, "Poincare rank");
      int r = static_cast<int>(b.body.size()) - 1;
      if (r < 1) throw ParseError(b.line, 1, "system without rows");
      sys.B = MatSeries(r, r, N);
      std::vector<std::string> xv{doc.vars[0]};
      for (int i = 0; i < r; ++i) {
        const auto& rl = b.body[i + 1];
        std::vector<std::pair<std::string, int>> cells;
        std::size_t start = 0;
        while (true) {
          auto comma = rl.text.find(',', start);
          cells.push_back({rl.text.substr(start, comma == std::string::npos ? std::string::npos : comma - start),
                           static_cast<int>(start)});
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
        if (static_cast<int>(cells.size()) != r)
          throw ParseError(rl.line, rl.col, "row has " + std::to_string(cells.size()) + " entries, expected " +
                                                std::to_string(r));
        for (int j = 0; j < r; ++j) {
          JetQ e = parse_expression(cells[j].first, xv, N, rl.line, rl.col + cells[j].second);
          for (const auto& [m, c] : e.terms()) {
            MatQ M = sys.B.coeff(mono_exp(m, 0));
            M(i, j) = c;
            sys.B.set(mono_exp(m, 0), M);
          }
        }
      }
      sys.B.trim();
      doc.systems.push_back({b.name, sys});
      continue;
    }
    if (static_cast<int>(b.body.size()) != n)
      throw ParseError(b.line, 1, b.kind + " " + b.name + " has " + std::to_string(b.body.size()) +
                                      " components, expected " + std::to_string(n));
    if (b.kind == "curve") {
      CurveParam c;
      std::vector<std::string> sv{doc.curve_var};
      for (const auto& rl : b.body) c.gamma.push_back(parse_expression(rl.text, sv, N, rl.line, rl.col));
      doc.curves.push_back({b.name, c});
      continue;
    }
    JetTuple<GaussQ> comps;
    for (const auto& rl : b.body) comps.push_back(parse_expression(rl.text, doc.vars, N, rl.line, rl.col));
    if (b.kind == "diffeo") doc.diffeos.push_back({b.name, MapQ{comps}});
    else doc.fields.push_back({b.name, FieldQ{comps}});
  }
  return doc;
}

std::string print_document(const InputDocument& doc) {
  std::ostringstream os;
  os << "dim " << doc.dim << "\nvars";
  for (const auto& v : doc.vars) os << ' ' << v;
  os << "\norder " << doc.order << "\nbackend " << doc.backend << "\n";
  for (const auto& d : doc.diffeos) {
    os << "\ndiffeo " << d.name << ":\n";
    for (const auto& c : d.value.comp) os << "  " << print_expression(c, doc.vars) << "\n";
  }
  for (const auto& f : doc.fields) {
    os << "\nfield " << f.name << ":\n";
    for (const auto& c : f.value.comp) os << "  " << print_expression(c, doc.vars) << "\n";
  }
  for (const auto& c : doc.curves) {
    os << "\ncurve " << c.name << ":\n";
    for (const auto& g : c.value.gamma) os << "  " << print_expression(g, {doc.curve_var}) << "\n";
  }
  for (const auto& s : doc.systems) {
    os << "\nsystem " << s.name << ":\n  q " << s.value.q << "\n";
    int r = s.value.B.rows;
    for (int i = 0; i < r; ++i) {
      os << "  ";
      for (int j = 0; j < r; ++j) {
        JetQ e(1, s.value.B.N);
        for (int k = 0; k <= s.value.B.N; ++k) {
          GaussQ c = s.value.B.coeff(k)(i, j);
          if (!c.is_zero()) e = e + JetQ::monomial(1, s.value.B.N, mono_unit(0, k), c);
        }
        os << (j ? ", " : "") << print_expression(e, {doc.vars[0]});
      }
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace fdyn
