#include "uarmpe/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "uarmpe/errors.hpp"

namespace uarmpe {

namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Lexer

struct Token {
  enum class Kind { Ident, Number, Punct, Newline, End };
  Kind kind;
  std::string text;
  std::size_t line;
  std::size_t col;
};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return ident_start(c) || std::isdigit(c) || c == '\''; }

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n) {
    i += n;
    col += n;
  };
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c == '\n') {
      out.push_back({Token::Kind::Newline, "\n", line, col});
      ++i;
      ++line;
      col = 1;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      advance(1);
    } else if (c == '#') {
      while (i < s.size() && s[i] != '\n') advance(1);
    } else if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({Token::Kind::Ident, std::string(s.substr(i, j - i)), line, col});
      advance(j - i);
    } else if (std::isdigit(c) || c == '.' || c == '-' || c == '+') {
      std::size_t j = i;
      if (s[j] == '-' || s[j] == '+') ++j;
      const std::size_t digits_from = j;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j == digits_from || (j == digits_from + 1 && s[digits_from] == '.'))
        throw ParseError("malformed number", line, col);
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '-' || s[k] == '+')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        } else {
          throw ParseError("malformed exponent", line, col + (j - i));
        }
      }
      out.push_back({Token::Kind::Number, std::string(s.substr(i, j - i)), line, col});
      advance(j - i);
    } else if (c == '!' && i + 1 < s.size() && s[i + 1] == '=') {
      out.push_back({Token::Kind::Punct, "!=", line, col});
      advance(2);
    } else if (std::string_view("{}()[],:=*").find(static_cast<char>(c)) != std::string_view::npos) {
      out.push_back({Token::Kind::Punct, std::string(1, static_cast<char>(c)), line, col});
      advance(1);
    } else {
      throw ParseError(std::string("unexpected character '") + static_cast<char>(c) + "'", line, col);
    }
  }
  out.push_back({Token::Kind::End, "", line, col});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

struct RawTerm {
  std::string name;
  std::size_t line, col;
};

struct RawAtom {
  std::string predicate;
  std::vector<RawTerm> args;
  std::size_t line, col;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(lex(text)) {}

  Model run() {
    for (;;) {
      skip_newlines();
      const Token& t = peek();
      if (t.kind == Token::Kind::End) break;
      if (t.kind != Token::Kind::Ident) fail(t, "expected 'domain', 'predicate' or 'parfactor'");
      if (t.text == "domain")
        domain();
      else if (t.text == "predicate")
        predicate();
      else if (t.text == "parfactor")
        parfactor();
      else
        fail(t, "expected 'domain', 'predicate' or 'parfactor', found '" + t.text + "'");
    }
    return std::move(m_);
  }

 private:
  [[noreturn]] static void fail(const Token& t, const std::string& msg) { throw ParseError(msg, t.line, t.col); }

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }
  bool at_punct(std::string_view p) const { return peek().kind == Token::Kind::Punct && peek().text == p; }
  bool at_line_end() const { return peek().kind == Token::Kind::Newline || peek().kind == Token::Kind::End; }
  void skip_newlines() {
    while (peek().kind == Token::Kind::Newline) ++pos_;
  }
  const Token& expect_punct(std::string_view p) {
    if (!at_punct(p)) fail(peek(), "expected '" + std::string(p) + "'" + found());
    return next();
  }
  const Token& expect_ident(const char* what) {
    if (peek().kind != Token::Kind::Ident) fail(peek(), std::string("expected ") + what + found());
    return next();
  }
  void expect_keyword(std::string_view kw) {
    if (peek().kind != Token::Kind::Ident || peek().text != kw) fail(peek(), "expected '" + std::string(kw) + "'" + found());
    next();
  }
  void expect_line_end() {
    if (!at_line_end()) fail(peek(), "expected end of line" + found());
    if (peek().kind == Token::Kind::Newline) next();
  }
  std::string found() const {
    const Token& t = peek();
    if (t.kind == Token::Kind::End) return ", found end of input";
    if (t.kind == Token::Kind::Newline) return ", found end of line";
    return ", found '" + t.text + "'";
  }
  std::size_t expect_count(const char* what) {
    const Token& t = peek();
    if (t.kind != Token::Kind::Number || t.text.find_first_not_of("0123456789") != std::string::npos)
      fail(t, std::string("expected ") + what + found());
    next();
    try {
      return static_cast<std::size_t>(std::stoull(t.text));
    } catch (const std::exception&) {
      fail(t, std::string(what) + " out of range");
    }
  }

  void domain() {
    next();
    const Token& name = expect_ident("domain name");
    if (m_.find_domain(name.text)) fail(name, "domain '" + name.text + "' declared twice");
    expect_punct("=");
    Domain d{name.text, 0, {}};
    if (at_punct("{")) {
      next();
      for (;;) {
        skip_newlines();
        const Token& c = expect_ident("constant name");
        if (std::find(d.names.begin(), d.names.end(), c.text) != d.names.end())
          fail(c, "constant '" + c.text + "' listed twice in domain '" + d.name + "'");
        d.names.push_back(c.text);
        skip_newlines();
        if (at_punct(",")) {
          next();
          continue;
        }
        expect_punct("}");
        break;
      }
      d.size = d.names.size();
    } else {
      const Token& t = peek();
      d.size = expect_count("domain size or '{'");
      if (d.size == 0) fail(t, "domain '" + d.name + "' must not be empty");
    }
    expect_line_end();
    m_.add_domain(std::move(d));
  }

  void predicate() {
    next();
    const Token& name = expect_ident("predicate name");
    if (m_.find_predicate(name.text)) fail(name, "predicate '" + name.text + "' declared twice");
    Predicate p{name.text, {}, 2};
    if (at_punct("(")) {
      next();
      if (!at_punct(")")) {
        for (;;) {
          const Token& d = expect_ident("domain name");
          auto id = m_.find_domain(d.text);
          if (!id) fail(d, "unknown domain '" + d.text + "'");
          p.args.push_back(*id);
          if (at_punct(",")) {
            next();
            continue;
          }
          break;
        }
      }
      expect_punct(")");
    }
    expect_keyword("range");
    const Token& r = peek();
    const std::size_t range = expect_count("range size");
    if (range < 2) fail(r, "range of '" + p.name + "' must be at least 2");
    if (range > std::numeric_limits<std::uint32_t>::max()) fail(r, "range too large");
    p.range = static_cast<std::uint32_t>(range);
    expect_line_end();
    m_.add_predicate(std::move(p));
  }

  RawTerm raw_term() {
    const Token& t = expect_ident("variable or constant");
    return {t.text, t.line, t.col};
  }

  void parfactor() {
    const Token& head = next();
    expect_punct("{");
    expect_line_end();

    Parfactor g;
    std::optional<std::vector<std::pair<RawTerm, RawTerm>>> constraint;
    std::optional<std::vector<RawAtom>> atoms;
    std::optional<std::vector<double>> table;
    std::optional<Token> table_tok;
    bool vars_seen = false;

    for (;;) {
      skip_newlines();
      if (at_punct("}")) {
        next();
        break;
      }
      const Token& field = expect_ident("'vars', 'constraint', 'atoms', 'table' or '}'");
      expect_punct(":");
      if (field.text == "vars") {
        if (vars_seen) fail(field, "duplicate 'vars' line");
        vars_seen = true;
        while (!at_line_end()) {
          const Token& v = expect_ident("variable name");
          expect_punct(":");
          const Token& d = expect_ident("domain name");
          auto dom = m_.find_domain(d.text);
          if (!dom) fail(d, "unknown domain '" + d.text + "'");
          if (g.find_var(v.text)) fail(v, "variable '" + v.text + "' declared twice");
          g.vars.push_back({v.text, *dom});
          if (!at_line_end()) expect_punct(",");
        }
      } else if (field.text == "constraint") {
        if (constraint) fail(field, "duplicate 'constraint' line");
        constraint.emplace();
        while (!at_line_end()) {
          RawTerm a = raw_term();
          expect_punct("!=");
          RawTerm b = raw_term();
          constraint->emplace_back(std::move(a), std::move(b));
          if (!at_line_end()) expect_punct(",");
        }
      } else if (field.text == "atoms") {
        if (atoms) fail(field, "duplicate 'atoms' line");
        atoms.emplace();
        while (!at_line_end()) {
          const Token& p = expect_ident("predicate name");
          RawAtom a{p.text, {}, p.line, p.col};
          if (at_punct("(")) {
            next();
            if (!at_punct(")")) {
              for (;;) {
                a.args.push_back(raw_term());
                if (at_punct(",")) {
                  next();
                  continue;
                }
                break;
              }
            }
            expect_punct(")");
          }
          atoms->push_back(std::move(a));
          if (!at_line_end()) expect_punct(",");
        }
      } else if (field.text == "table") {
        if (table) fail(field, "duplicate 'table' line");
        table_tok = field;
        table.emplace();
        expect_punct("[");
        skip_newlines();
        if (!at_punct("]")) {
          for (;;) {
            skip_newlines();
            table->push_back(weight());
            skip_newlines();
            if (at_punct(",")) {
              next();
              continue;
            }
            break;
          }
        }
        expect_punct("]");
      } else {
        fail(field, "unknown parfactor field '" + field.text + "'");
      }
      expect_line_end();
    }
    if (!atoms) fail(head, "parfactor has no 'atoms' line");
    if (!table) fail(head, "parfactor has no 'table' line");

    auto resolve = [&](const RawTerm& t, DomainId domain) -> Term {
      if (auto v = g.find_var(t.name)) return Term::var(*v);
      if (auto c = m_.domains[domain].find_constant(t.name)) return Term::constant(*c);
      throw ParseError("'" + t.name + "' is neither a variable of this parfactor nor a constant of domain '" +
                           m_.domains[domain].name + "'",
                       t.line, t.col);
    };
    std::vector<std::uint32_t> axes;
    for (const auto& ra : *atoms) {
      auto pid = m_.find_predicate(ra.predicate);
      if (!pid) throw ParseError("unknown predicate '" + ra.predicate + "'", ra.line, ra.col);
      const Predicate& p = m_.predicates[*pid];
      if (ra.args.size() != p.arity())
        throw ParseError("predicate '" + p.name + "' takes " + std::to_string(p.arity()) + " arguments, got " +
                             std::to_string(ra.args.size()),
                         ra.line, ra.col);
      Atom a{*pid, {}};
      for (std::size_t i = 0; i < ra.args.size(); ++i) a.args.push_back(resolve(ra.args[i], p.args[i]));
      g.atoms.push_back(std::move(a));
      axes.push_back(p.range);
    }
    if (constraint) {
      for (const auto& [x, y] : *constraint) {
        const auto vx = g.find_var(x.name);
        const auto vy = g.find_var(y.name);
        if (!vx && !vy)
          throw ParseError("disequality '" + x.name + " != " + y.name + "' needs a variable", x.line, x.col);
        const RawTerm& var_side = vx ? x : y;
        const RawTerm& other = vx ? y : x;
        const VarId v = *g.find_var(var_side.name);
        g.constraint.add(Term::var(v), resolve(other, g.vars[v].domain));
      }
    }
    std::size_t expected = 1;
    for (auto a : axes) expected *= a;
    if (table->size() != expected)
      fail(*table_tok, "table needs " + std::to_string(expected) + " entries (product of atom ranges), got " +
                           std::to_string(table->size()));
    g.table = std::make_shared<PotentialTable>(std::move(axes), std::move(*table));
    m_.parfactors.push_back(std::move(g));
  }

  double number_value(const Token& t) {
    try {
      std::size_t used = 0;
      const double v = std::stod(t.text, &used);
      if (used != t.text.size()) fail(t, "malformed number '" + t.text + "'");
      return v;
    } catch (const std::out_of_range&) {
      fail(t, "number '" + t.text + "' is out of double range; use exp(x)");
    } catch (const std::invalid_argument&) {
      fail(t, "malformed number '" + t.text + "'");
    }
  }

  // Returns a log weight.
  double weight() {
    const Token& t = peek();
    if (t.kind == Token::Kind::Ident && t.text == "exp") {
      next();
      expect_punct("(");
      const Token& x = peek();
      if (x.kind != Token::Kind::Number) fail(x, "expected a number inside exp()" + found());
      next();
      const double v = number_value(x);
      expect_punct(")");
      return v;
    }
    if (t.kind != Token::Kind::Number) fail(t, "expected a weight" + found());
    next();
    const double v = number_value(t);
    if (v < 0.0) fail(t, "weights must be non-negative");
    return to_log_weight(v);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Model m_;
};

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Model parse_model(std::string_view text) { return Parser(text).run(); }

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string format_weight(double log_weight) {
  if (std::isinf(log_weight) && log_weight < 0) return "0";
  static const double lo = std::log(1e-300), hi = std::log(1e300);
  if (log_weight < lo || log_weight > hi) return "exp(" + fmt17(log_weight) + ")";
  return fmt17(std::exp(log_weight));
}

std::string serialize_model(const Model& m) {
  std::string out = "# uarmpe model format 1\n";
  std::vector<const Domain*> doms;
  for (const auto& d : m.domains) doms.push_back(&d);
  std::sort(doms.begin(), doms.end(), [](auto* a, auto* b) { return a->name < b->name; });
  for (const auto* d : doms) {
    out += "domain " + d->name + " = ";
    if (d->auto_named()) {
      out += std::to_string(d->size);
    } else {
      out += "{";
      for (std::size_t i = 0; i < d->names.size(); ++i) out += (i ? ", " : "") + d->names[i];
      out += "}";
    }
    out += "\n";
  }
  std::vector<const Predicate*> preds;
  for (const auto& p : m.predicates) preds.push_back(&p);
  std::sort(preds.begin(), preds.end(), [](auto* a, auto* b) { return a->name < b->name; });
  for (const auto* p : preds) {
    out += "predicate " + p->name;
    if (!p->args.empty()) {
      out += "(";
      for (std::size_t i = 0; i < p->args.size(); ++i) out += (i ? ", " : "") + m.domains[p->args[i]].name;
      out += ")";
    }
    out += " range " + std::to_string(p->range) + "\n";
  }
  for (const auto& g : m.parfactors) {
    out += "parfactor {\n  vars:";
    for (std::size_t i = 0; i < g.vars.size(); ++i)
      out += (i ? ", " : " ") + g.vars[i].name + ":" + m.domains[g.vars[i].domain].name;
    out += "\n";
    if (!g.constraint.pairs().empty() || (g.constraint.contradictory() && !g.vars.empty())) {
      out += "  constraint:";
      bool first = true;
      if (g.constraint.contradictory()) {
        out += " " + g.vars[0].name + " != " + g.vars[0].name;
        first = false;
      }
      for (const auto& d : g.constraint.pairs()) {
        out += first ? " " : ", ";
        first = false;
        out += g.vars[d.lhs.id].name + " != ";
        out += d.rhs.is_var() ? g.vars[d.rhs.id].name : m.domains[g.vars[d.lhs.id].domain].constant_name(d.rhs.id);
      }
      out += "\n";
    }
    out += "  atoms:";
    for (std::size_t i = 0; i < g.atoms.size(); ++i) out += (i ? ", " : " ") + format_atom(m, g, g.atoms[i]);
    out += "\n  table: [";
    for (std::size_t i = 0; i < g.table->log_weights.size(); ++i)
      out += (i ? ", " : "") + format_weight(g.table->log_weights[i]);
    out += "]\n}\n";
  }
  return out;
}

GroundAtom parse_ground_atom(const Model& m, std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  const auto open = text.find('(');
  const std::string name(trim(text.substr(0, open)));
  auto pid = m.find_predicate(name);
  if (!pid) throw ValidationError("unknown predicate in ground atom '" + std::string(text) + "'");
  const Predicate& p = m.predicates[*pid];
  GroundAtom out{name, {}};
  if (open != std::string_view::npos) {
    if (text.back() != ')') throw ValidationError("malformed ground atom '" + std::string(text) + "'");
    std::string_view inner = text.substr(open + 1, text.size() - open - 2);
    std::size_t i = 0;
    while (!trim(inner).empty() || i < p.arity()) {
      const auto comma = inner.find(',');
      const auto piece = trim(inner.substr(0, comma));
      if (i >= p.arity()) throw ValidationError("too many arguments in '" + std::string(text) + "'");
      auto c = m.domains[p.args[i]].find_constant(piece);
      if (!c) throw ValidationError("unknown constant '" + std::string(piece) + "' in '" + std::string(text) + "'");
      out.args.push_back(*c);
      ++i;
      if (comma == std::string_view::npos) break;
      inner.remove_prefix(comma + 1);
    }
  }
  if (out.args.size() != p.arity()) throw ValidationError("wrong argument count in '" + std::string(text) + "'");
  return out;
}

namespace {

json weight_json(double w) {
  if (std::isfinite(w)) return w;
  return nullptr;
}

json assignment_object(const Model& m, const Assignment& v) {
  json a = json::object();
  for (const auto& [atom, value] : v) a[format_ground_atom(m, atom)] = value;
  return a;
}

}  // namespace

std::string solve_result_json(const Model& m, const SolveResult& r, int indent) {
  json j;
  j["log_weight"] = weight_json(r.log_weight);
  j["engine"] = r.engine;
  j["assignment"] = assignment_object(m, r.assignment);
  json lifted = json::array();
  for (const auto& b : r.lifted) {
    json e;
    e["pred"] = b.predicate;
    e["kept_positions"] = b.kept_positions;
    json blocks = json::object();
    for (const auto& [args, value] : b.blocks) {
      std::string key = "(";
      for (std::size_t i = 0; i < args.size(); ++i) key += (i ? "," : "") + args[i];
      blocks[key + ")"] = value;
    }
    e["blocks"] = std::move(blocks);
    lifted.push_back(std::move(e));
  }
  j["lifted"] = std::move(lifted);
  json s;
  s["detect_ms"] = r.stats.detect_ms;
  s["reduce_ms"] = r.stats.reduce_ms;
  s["solve_ms"] = r.stats.solve_ms;
  s["total_ms"] = r.stats.total_ms;
  s["eliminated"] = r.stats.eliminated;
  s["random_variables"] = r.stats.random_variables;
  s["sub_solves"] = r.stats.sub_solves;
  if (!r.stats.conditioned_on.empty()) s["conditioned_on"] = r.stats.conditioned_on;
  j["stats"] = std::move(s);
  return j.dump(indent);
}

std::string reduction_map_json(const ReductionMap& rm, int indent) {
  json j;
  j["predicates"] = json::array();
  for (const auto& p : rm.predicates)
    j["predicates"].push_back(
        {{"original", p.original}, {"reduced", p.reduced}, {"kept_positions", p.kept}, {"removed_positions", p.removed}});
  j["parfactors"] = json::array();
  for (const auto& p : rm.parfactors)
    j["parfactors"].push_back({{"index", p.index},
                               {"exponent", p.exponent},
                               {"exponent_expr", p.exponent_expr},
                               {"removed_vars", p.removed_vars}});
  return j.dump(indent);
}

ReductionMap reduction_map_from_json(std::string_view text) {
  ReductionMap rm;
  try {
    const auto j = json::parse(text);
    for (const auto& p : j.at("predicates"))
      rm.predicates.push_back({p.at("original").get<std::string>(), p.at("reduced").get<std::string>(),
                               p.at("kept_positions").get<std::vector<std::size_t>>(),
                               p.at("removed_positions").get<std::vector<std::size_t>>()});
    for (const auto& p : j.at("parfactors"))
      rm.parfactors.push_back({p.at("index").get<std::size_t>(), p.at("exponent").get<double>(),
                               p.at("exponent_expr").get<std::string>(),
                               p.at("removed_vars").get<std::vector<std::string>>()});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed reduction map: ") + e.what());
  }
  return rm;
}

std::string assignment_json(const Model& m, const Assignment& v, int indent) {
  json j;
  j["log_weight"] = weight_json(model_weight(m, v));
  j["assignment"] = assignment_object(m, v);
  return j.dump(indent);
}

Assignment assignment_from_json(const Model& m, std::string_view text) {
  Assignment out;
  try {
    const auto j = json::parse(text);
    const json& a = j.contains("assignment") ? j.at("assignment") : j;
    for (const auto& [key, value] : a.items()) out[parse_ground_atom(m, key)] = value.get<std::uint32_t>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed assignment: ") + e.what());
  }
  return out;
}

}  // namespace uarmpe
