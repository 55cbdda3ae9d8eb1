#include "scenfuzz/dsl/parser.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include <fmt/core.h>

#include "scenfuzz/dsl/catalog.hpp"

namespace scenfuzz::dsl {

std::string_view to_string(Diagnostic::Kind kind) {
  switch (kind) {
    case Diagnostic::Kind::Syntax: return "SyntaxError";
    case Diagnostic::Kind::Name: return "NameError";
    case Diagnostic::Kind::Type: return "TypeError";
    case Diagnostic::Kind::Value: return "ValueError";
  }
  return "Error";
}

std::string Diagnostic::format() const {
  return fmt::format("{}:{}: {}: {}", loc.line, loc.column, to_string(kind), message);
}

bool ParseResult::has(Diagnostic::Kind kind) const {
  for (const auto& d : diagnostics) {
    if (d.kind == kind) return true;
  }
  return false;
}

Expr Expr::make_number(double v, SourceLoc loc) {
  Expr e;
  e.kind = Kind::Number;
  e.number = v;
  e.loc = loc;
  return e;
}

Expr Expr::make_string(std::string v, SourceLoc loc) {
  Expr e;
  e.kind = Kind::String;
  e.text = std::move(v);
  e.loc = loc;
  return e;
}

Expr Expr::make_name(std::string v, SourceLoc loc) {
  Expr e;
  e.kind = Kind::Name;
  e.text = std::move(v);
  e.loc = loc;
  return e;
}

Expr Expr::make_unary(std::string op, Expr operand, SourceLoc loc) {
  Expr e;
  e.kind = Kind::Unary;
  e.text = std::move(op);
  e.args.push_back(std::move(operand));
  e.loc = loc;
  return e;
}

Expr Expr::make_binary(std::string op, Expr lhs, Expr rhs, SourceLoc loc) {
  Expr e;
  e.kind = Kind::Binary;
  e.text = std::move(op);
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  e.loc = loc;
  return e;
}

Expr Expr::make_call(std::string callee, std::vector<Expr> args, SourceLoc loc) {
  Expr e;
  e.kind = Kind::Call;
  e.text = std::move(callee);
  e.args = std::move(args);
  e.loc = loc;
  return e;
}

const AgentDecl* ScenarioProgram::ego() const {
  for (const auto& a : agents) {
    if (a.ego) return &a;
  }
  return nullptr;
}

const ScenarioProgram* ScenarioProgram::find_subscenario(const std::string& sub) const {
  for (const auto& s : subscenarios) {
    if (s.name == sub) return &s;
  }
  return nullptr;
}

std::string_view to_string(CompositionMode mode) {
  switch (mode) {
    case CompositionMode::Parallel: return "parallel";
    case CompositionMode::Sequential: return "sequential";
    case CompositionMode::Opportunistic: return "opportunistic";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Ident, Number, String, Punct, Newline, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  SourceLoc loc;
};

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

std::vector<Token> lex(std::string_view src, std::vector<Diagnostic>& diags) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto push = [&](Tok k, std::string text, SourceLoc loc, double num = 0.0) {
    out.push_back(Token{k, std::move(text), num, loc});
  };
  while (i < src.size()) {
    const char c = src[i];
    const SourceLoc loc{line, col};
    if (c == '\n') {
      push(Tok::Newline, "\n", loc);
      ++i;
      ++line;
      col = 1;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      ++col;
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') {
        ++i;
        ++col;
      }
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && is_ident_char(src[j])) ++j;
      push(Tok::Ident, std::string(src.substr(i, j - i)), loc);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1]))) {
      std::size_t j = i;
      while (j < src.size() && (is_digit(src[j]) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && is_digit(src[k])) {
          j = k;
          while (j < src.size() && is_digit(src[j])) ++j;
        }
      }
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(src.data() + i, src.data() + j, value);
      if (ec != std::errc() || ptr != src.data() + j || !std::isfinite(value)) {
        diags.push_back({Diagnostic::Kind::Syntax, loc, fmt::format("malformed number '{}'", src.substr(i, j - i))});
      } else {
        push(Tok::Number, std::string(src.substr(i, j - i)), loc, value);
      }
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (c == '"') {
      std::string value;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < src.size() && src[j] != '\n') {
        if (src[j] == '\\' && j + 1 < src.size() && (src[j + 1] == '"' || src[j + 1] == '\\')) {
          value.push_back(src[j + 1]);
          j += 2;
          continue;
        }
        if (src[j] == '"') {
          closed = true;
          ++j;
          break;
        }
        value.push_back(src[j]);
        ++j;
      }
      if (!closed) {
        diags.push_back({Diagnostic::Kind::Syntax, loc, "unterminated string literal"});
      } else {
        push(Tok::String, std::move(value), loc);
      }
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    static constexpr std::string_view kTwoChar[] = {"<=", ">=", "==", "!="};
    bool matched = false;
    for (auto op : kTwoChar) {
      if (src.substr(i, 2) == op) {
        push(Tok::Punct, std::string(op), loc);
        i += 2;
        col += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    static constexpr std::string_view kSingle = "()[],=:+-*/<>";
    if (kSingle.find(c) != std::string_view::npos) {
      push(Tok::Punct, std::string(1, c), loc);
      ++i;
      ++col;
      continue;
    }
    diags.push_back({Diagnostic::Kind::Syntax, loc,
                     fmt::format("unexpected character '\\x{:02x}'", static_cast<unsigned char>(c))});
    ++i;
    ++col;
  }
  if (out.empty() || out.back().kind != Tok::Newline) push(Tok::Newline, "\n", SourceLoc{line, col});
  push(Tok::End, "", SourceLoc{line, col});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

struct SyntaxFail {
  SourceLoc loc;
  std::string message;
};

const std::set<std::string, std::less<>> kReserved = {
    "map",   "scenario", "param", "weather", "ego",  "agent", "require", "terminate", "compose", "end",
    "on",    "at",       "offset", "heading", "and", "or",    "not",     "when",      "enters",  "from",
    "to",    "after",    "time",   "pi"};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diags) : toks_(std::move(tokens)), diags_(diags) {}

  ScenarioProgram parse_program() {
    ScenarioProgram prog;
    bool have_name = false;
    while (!at_end()) {
      if (peek().kind == Tok::Newline) {
        advance();
        continue;
      }
      const std::size_t start = pos_;
      try {
        parse_top_statement(prog, have_name);
      } catch (const SyntaxFail& f) {
        diags_.push_back({Diagnostic::Kind::Syntax, f.loc, f.message});
        // A failed block header would otherwise leave its body to be read as top-level lines.
        const bool block_header = toks_[start].kind == Tok::Ident &&
                                  (toks_[start].text == "scenario" || toks_[start].text == "compose") &&
                                  line_has_colon(start);
        skip_line();
        if (block_header) skip_block();
      }
    }
    return prog;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Tok::End; }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw SyntaxFail{t.loc, msg};
  }

  std::string describe(const Token& t) const {
    switch (t.kind) {
      case Tok::Newline: return "end of line";
      case Tok::End: return "end of input";
      case Tok::String: return fmt::format("string \"{}\"", t.text);
      default: return fmt::format("'{}'", t.text);
    }
  }

  bool is_punct(std::string_view p, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Punct && t.text == p;
  }
  bool is_keyword(std::string_view k, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Ident && t.text == k;
  }

  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail(peek(), fmt::format("expected '{}' but found {}", p, describe(peek())));
    advance();
  }
  void expect_keyword(std::string_view k) {
    if (!is_keyword(k)) fail(peek(), fmt::format("expected '{}' but found {}", k, describe(peek())));
    advance();
  }
  void expect_newline() {
    if (peek().kind != Tok::Newline) fail(peek(), fmt::format("expected end of line but found {}", describe(peek())));
    advance();
  }
  std::string expect_ident(std::string_view what) {
    const Token& t = peek();
    if (t.kind != Tok::Ident) fail(t, fmt::format("expected {} but found {}", what, describe(t)));
    if (kReserved.count(t.text)) fail(t, fmt::format("'{}' is a reserved word and cannot name a {}", t.text, what));
    advance();
    return t.text;
  }
  std::string expect_string(std::string_view what) {
    const Token& t = peek();
    if (t.kind != Tok::String) fail(t, fmt::format("expected {} string but found {}", what, describe(t)));
    advance();
    return t.text;
  }

  bool line_has_colon(std::size_t from) const {
    for (std::size_t i = from; i < toks_.size() && toks_[i].kind != Tok::Newline && toks_[i].kind != Tok::End; ++i) {
      if (toks_[i].kind == Tok::Punct && toks_[i].text == ":") return true;
    }
    return false;
  }

  void skip_line() {
    while (peek().kind != Tok::Newline && peek().kind != Tok::End) advance();
    if (peek().kind == Tok::Newline) advance();
  }

  void skip_block() {
    while (!at_end()) {
      if (is_keyword("end") && peek(1).kind == Tok::Newline) {
        advance();
        advance();
        return;
      }
      skip_line();
    }
  }

  void parse_top_statement(ScenarioProgram& prog, bool& have_name) {
    const Token& t = peek();
    if (t.kind != Tok::Ident) fail(t, fmt::format("expected a declaration but found {}", describe(t)));
    const std::string kw = t.text;
    if (kw == "map") {
      advance();
      if (prog.map_path) fail(t, "duplicate 'map' header");
      prog.map_path = expect_string("map path");
      expect_newline();
    } else if (kw == "scenario") {
      if (is_punct(":", 2)) {
        parse_subscenario(prog);
      } else {
        advance();
        if (have_name) fail(t, "duplicate scenario name header");
        prog.name = expect_ident("scenario name");
        have_name = true;
        expect_newline();
      }
    } else if (kw == "compose") {
      if (prog.composition) fail(t, "only one compose block is allowed");
      prog.composition = parse_compose();
    } else if (kw == "weather") {
      advance();
      if (prog.weather) fail(t, "duplicate 'weather' declaration");
      prog.weather = parse_expr();
      expect_newline();
    } else if (kw == "ego") {
      advance();
      expect_punct("=");
      AgentDecl a = parse_agent_body("ego", t.loc);
      a.ego = true;
      prog.agents.push_back(std::move(a));
      expect_newline();
    } else {
      parse_common_statement(prog, false);
    }
  }

  // Statements allowed both at top level and inside a scenario block.
  void parse_common_statement(ScenarioProgram& prog, bool in_block) {
    const Token& t = peek();
    const std::string kw = t.text;
    if (kw == "param") {
      advance();
      ParamDecl p;
      p.loc = t.loc;
      p.name = expect_ident("parameter name");
      expect_punct("=");
      p.dist = parse_distribution();
      prog.params.push_back(std::move(p));
      expect_newline();
    } else if (kw == "agent") {
      advance();
      const std::string name = expect_ident("agent name");
      expect_punct("=");
      prog.agents.push_back(parse_agent_body(name, t.loc));
      expect_newline();
    } else if (kw == "require") {
      advance();
      prog.requirements.push_back(parse_expr());
      expect_newline();
    } else if (kw == "terminate") {
      advance();
      if (is_keyword("after")) {
        advance();
        if (prog.termination.max_time) fail(t, "duplicate 'terminate after'");
        prog.termination.max_time_loc = peek().loc;
        prog.termination.max_time = parse_signed_number();
      } else if (is_keyword("when")) {
        advance();
        if (in_block) fail(t, "'terminate when' is only allowed at top level");
        if (prog.termination.predicate) fail(t, "duplicate 'terminate when'");
        prog.termination.predicate = parse_expr();
      } else {
        fail(peek(), fmt::format("expected 'after' or 'when' but found {}", describe(peek())));
      }
      expect_newline();
    } else if (in_block && (kw == "ego" || kw == "scenario" || kw == "compose" || kw == "map" || kw == "weather")) {
      fail(t, fmt::format("'{}' is not allowed inside a scenario block", kw));
    } else {
      fail(t, fmt::format("unknown declaration '{}'", kw));
    }
  }

  void parse_subscenario(ScenarioProgram& prog) {
    ScenarioProgram sub;
    sub.loc = advance().loc;
    sub.name = expect_ident("scenario name");
    expect_punct(":");
    expect_newline();
    while (true) {
      if (at_end()) fail(peek(), fmt::format("scenario block '{}' is missing 'end'", sub.name));
      if (peek().kind == Tok::Newline) {
        advance();
        continue;
      }
      if (is_keyword("end")) {
        advance();
        expect_newline();
        break;
      }
      try {
        if (peek().kind != Tok::Ident) fail(peek(), fmt::format("expected a declaration but found {}", describe(peek())));
        parse_common_statement(sub, true);
      } catch (const SyntaxFail& f) {
        diags_.push_back({Diagnostic::Kind::Syntax, f.loc, f.message});
        skip_line();
      }
    }
    prog.subscenarios.push_back(std::move(sub));
  }

  CompositionSpec parse_compose() {
    advance();  // compose
    CompositionSpec spec;
    const Token& mode = peek();
    if (is_keyword("parallel")) {
      spec.mode = CompositionMode::Parallel;
    } else if (is_keyword("sequential")) {
      spec.mode = CompositionMode::Sequential;
    } else if (is_keyword("opportunistic")) {
      spec.mode = CompositionMode::Opportunistic;
    } else {
      fail(mode, fmt::format("expected composition mode parallel|sequential|opportunistic but found {}", describe(mode)));
    }
    advance();
    expect_punct(":");
    expect_newline();
    while (true) {
      if (at_end()) fail(peek(), "compose block is missing 'end'");
      if (peek().kind == Tok::Newline) {
        advance();
        continue;
      }
      if (is_keyword("end")) {
        advance();
        expect_newline();
        break;
      }
      try {
        CompositionEntry e;
        e.loc = peek().loc;
        e.scenario = expect_ident("scenario name");
        if (is_keyword("when")) {
          advance();
          TriggerSpec trig;
          trig.agent = is_keyword("ego") ? (advance(), std::string("ego")) : expect_ident("agent name");
          expect_keyword("enters");
          trig.region = parse_region();
          e.trigger = std::move(trig);
        }
        expect_newline();
        spec.entries.push_back(std::move(e));
      } catch (const SyntaxFail& f) {
        diags_.push_back({Diagnostic::Kind::Syntax, f.loc, f.message});
        skip_line();
      }
    }
    return spec;
  }

  RegionRef parse_region() {
    RegionRef r;
    r.loc = peek().loc;
    if (is_keyword("intersection")) {
      advance();
      r.kind = RegionRef::Kind::Intersection;
      r.id = expect_string("intersection id");
    } else if (is_keyword("region")) {
      advance();
      r.kind = RegionRef::Kind::Named;
      r.id = expect_string("region id");
    } else if (is_keyword("lane")) {
      advance();
      r.kind = RegionRef::Kind::LaneSegment;
      r.id = expect_string("lane id");
      expect_keyword("from");
      r.args.push_back(parse_expr());
      expect_keyword("to");
      r.args.push_back(parse_expr());
    } else if (is_keyword("circle")) {
      advance();
      r.kind = RegionRef::Kind::Circle;
      expect_punct("(");
      r.args.push_back(parse_expr());
      expect_punct(",");
      r.args.push_back(parse_expr());
      expect_punct(",");
      r.args.push_back(parse_expr());
      expect_punct(")");
    } else {
      fail(peek(), fmt::format("expected region (intersection|region|lane|circle) but found {}", describe(peek())));
    }
    return r;
  }

  double parse_signed_number() {
    bool neg = false;
    if (is_punct("-")) {
      neg = true;
      advance();
    }
    const Token& t = peek();
    if (t.kind != Tok::Number) fail(t, fmt::format("expected a number but found {}", describe(t)));
    advance();
    return neg ? -t.number : t.number;
  }

  Scalar parse_literal() {
    if (peek().kind == Tok::String) return advance().text;
    return parse_signed_number();
  }

  Distribution parse_distribution() {
    if (is_keyword("uniform") && is_punct("(", 1)) {
      advance();
      advance();
      Uniform u;
      u.lo = parse_signed_number();
      expect_punct(",");
      u.hi = parse_signed_number();
      expect_punct(")");
      return u;
    }
    if (is_keyword("choice") && is_punct("(", 1)) {
      advance();
      advance();
      Choice c;
      if (!is_punct(")")) {
        c.values.push_back(parse_literal());
        while (is_punct(",")) {
          advance();
          c.values.push_back(parse_literal());
        }
      }
      expect_punct(")");
      return c;
    }
    const Token& t = peek();
    if (t.kind != Tok::String && t.kind != Tok::Number && !is_punct("-")) {
      fail(t, fmt::format("expected uniform(...), choice(...) or a literal but found {}", describe(t)));
    }
    return Constant{parse_literal()};
  }

  AgentDecl parse_agent_body(std::string name, SourceLoc loc) {
    AgentDecl a;
    a.name = std::move(name);
    a.loc = loc;
    const Token& kind_tok = peek();
    if (kind_tok.kind != Tok::Ident) fail(kind_tok, fmt::format("expected agent kind but found {}", describe(kind_tok)));
    const auto kind = agent_kind_from_string(kind_tok.text);
    if (!kind) fail(kind_tok, fmt::format("unknown agent kind '{}' (expected car, bus or pedestrian)", kind_tok.text));
    a.kind = *kind;
    advance();

    if (is_keyword("on")) {
      advance();
      expect_keyword("lane");
      LanePlacement lp;
      lp.lane = parse_expr();
      expect_keyword("at");
      lp.offset = parse_expr();
      if (is_keyword("offset")) {
        advance();
        if (is_keyword("left")) {
          lp.side = Side::Left;
        } else if (is_keyword("right")) {
          lp.side = Side::Right;
        } else {
          fail(peek(), fmt::format("expected 'left' or 'right' but found {}", describe(peek())));
        }
        advance();
        lp.lateral = parse_expr();
      }
      a.placement = std::move(lp);
    } else if (is_keyword("at")) {
      advance();
      PosePlacement pp;
      expect_punct("(");
      pp.x = parse_expr();
      expect_punct(",");
      pp.y = parse_expr();
      expect_punct(")");
      expect_keyword("heading");
      pp.heading = parse_expr();
      a.placement = std::move(pp);
    } else {
      fail(peek(), fmt::format("expected placement 'on lane ...' or 'at (x, y) ...' but found {}", describe(peek())));
    }

    while (is_punct(",")) {
      advance();
      const Token& clause = peek();
      if (is_keyword("speed")) {
        advance();
        if (a.speed) fail(clause, "duplicate 'speed' clause");
        a.speed = parse_expr();
      } else if (is_keyword("behavior")) {
        advance();
        if (a.behavior) fail(clause, "duplicate 'behavior' clause");
        a.behavior = parse_behavior();
      } else if (is_keyword("route")) {
        advance();
        if (!a.route.empty()) fail(clause, "duplicate 'route' clause");
        expect_punct("[");
        a.route.push_back(parse_expr());
        while (is_punct(",")) {
          advance();
          a.route.push_back(parse_expr());
        }
        expect_punct("]");
      } else {
        fail(clause, fmt::format("expected 'speed', 'behavior' or 'route' clause but found {}", describe(clause)));
      }
    }
    return a;
  }

  BehaviorCall parse_behavior() {
    BehaviorCall b;
    b.loc = peek().loc;
    if (peek().kind != Tok::Ident) fail(peek(), fmt::format("expected behavior name but found {}", describe(peek())));
    b.name = advance().text;
    expect_punct("(");
    if (!is_punct(")")) {
      while (true) {
        BehaviorArg arg;
        if (peek().kind != Tok::Ident) fail(peek(), fmt::format("expected argument name but found {}", describe(peek())));
        arg.name = advance().text;
        expect_punct("=");
        arg.value = parse_expr();
        b.args.push_back(std::move(arg));
        if (!is_punct(",")) break;
        advance();
      }
    }
    expect_punct(")");
    return b;
  }

  // Precedence climbing: or < and < not < comparison < additive < multiplicative < unary.
  Expr parse_expr() {
    if (++depth_ > kMaxDepth) {
      --depth_;
      fail(peek(), "expression nested too deeply");
    }
    struct Leave {
      int& d;
      ~Leave() { --d; }
    } leave{depth_};
    return parse_or();
  }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (is_keyword("or")) {
      const SourceLoc loc = advance().loc;
      lhs = Expr::make_binary("or", std::move(lhs), parse_and(), loc);
    }
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_not();
    while (is_keyword("and")) {
      const SourceLoc loc = advance().loc;
      lhs = Expr::make_binary("and", std::move(lhs), parse_not(), loc);
    }
    return lhs;
  }

  Expr parse_not() {
    if (is_keyword("not")) {
      const SourceLoc loc = advance().loc;
      return Expr::make_unary("not", parse_expr_unary_guarded([this] { return parse_not(); }), loc);
    }
    return parse_comparison();
  }

  Expr parse_comparison() {
    Expr lhs = parse_additive();
    static constexpr std::string_view kOps[] = {"<", "<=", ">", ">=", "==", "!="};
    for (auto op : kOps) {
      if (is_punct(op)) {
        const SourceLoc loc = advance().loc;
        Expr rhs = parse_additive();
        for (auto op2 : kOps) {
          if (is_punct(op2)) fail(peek(), "comparison operators cannot be chained");
        }
        return Expr::make_binary(std::string(op), std::move(lhs), std::move(rhs), loc);
      }
    }
    return lhs;
  }

  Expr parse_additive() {
    Expr lhs = parse_multiplicative();
    while (is_punct("+") || is_punct("-")) {
      const Token& op = advance();
      lhs = Expr::make_binary(op.text, std::move(lhs), parse_multiplicative(), op.loc);
    }
    return lhs;
  }

  Expr parse_multiplicative() {
    Expr lhs = parse_unary();
    while (is_punct("*") || is_punct("/")) {
      const Token& op = advance();
      lhs = Expr::make_binary(op.text, std::move(lhs), parse_unary(), op.loc);
    }
    return lhs;
  }

  Expr parse_unary() {
    if (is_punct("-")) {
      const SourceLoc loc = advance().loc;
      Expr operand = parse_expr_unary_guarded([this] { return parse_unary(); });
      // Negative literals are folded so that printing and reparsing is stable.
      if (operand.kind == Expr::Kind::Number) {
        operand.number = -operand.number;
        operand.loc = loc;
        return operand;
      }
      return Expr::make_unary("-", std::move(operand), loc);
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        advance();
        return Expr::make_number(t.number, t.loc);
      case Tok::String:
        advance();
        return Expr::make_string(t.text, t.loc);
      case Tok::Ident: {
        advance();
        if (is_punct("(")) {
          advance();
          std::vector<Expr> args;
          if (!is_punct(")")) {
            args.push_back(parse_expr());
            while (is_punct(",")) {
              advance();
              args.push_back(parse_expr());
            }
          }
          expect_punct(")");
          return Expr::make_call(t.text, std::move(args), t.loc);
        }
        if (kReserved.count(t.text) && t.text != "ego" && t.text != "time" && t.text != "pi") {
          fail(t, fmt::format("unexpected keyword '{}' in expression", t.text));
        }
        return Expr::make_name(t.text, t.loc);
      }
      case Tok::Punct:
        if (t.text == "(") {
          advance();
          Expr inner = parse_expr();
          expect_punct(")");
          return inner;
        }
        break;
      default:
        break;
    }
    fail(t, fmt::format("expected an expression but found {}", describe(t)));
  }

  template <typename F>
  Expr parse_expr_unary_guarded(F&& f) {
    if (++depth_ > kMaxDepth) {
      --depth_;
      fail(peek(), "expression nested too deeply");
    }
    Expr e = [&] {
      try {
        return f();
      } catch (...) {
        --depth_;
        throw;
      }
    }();
    --depth_;
    return e;
  }

  static constexpr int kMaxDepth = 256;

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  std::vector<Diagnostic>& diags_;
};

// ---------------------------------------------------------------------------
// Semantic checks

struct Scope {
  std::map<std::string, ValueType, std::less<>> params;
  std::set<std::string, std::less<>> agents;
};

ValueType literal_type(const Scalar& v) {
  return std::holds_alternative<double>(v) ? ValueType::Number : ValueType::String;
}

class Checker {
 public:
  explicit Checker(std::vector<Diagnostic>& diags) : diags_(diags) {}

  void check_program(const ScenarioProgram& prog) {
    Scope main_scope;
    declare_params(prog.params, main_scope);
    declare_agents(prog, main_scope);

    std::set<std::string> sub_names;
    for (const auto& sub : prog.subscenarios) {
      if (!sub_names.insert(sub.name).second) {
        error(Diagnostic::Kind::Name, sub.loc, fmt::format("scenario '{}' declared twice", sub.name));
      }
    }

    check_body(prog, main_scope);
    if (prog.weather) expect_type(*prog.weather, main_scope, ValueType::String, "weather");
    if (prog.termination.predicate) {
      expect_type(*prog.termination.predicate, main_scope, ValueType::Bool, "termination condition");
    }

    for (const auto& sub : prog.subscenarios) {
      Scope sub_scope = main_scope;
      // Parameters of the subscenario shadow those of the parent.
      Scope own;
      declare_params(sub.params, own);
      for (const auto& [n, t] : own.params) sub_scope.params[n] = t;
      declare_agents(sub, own);
      for (const auto& a : own.agents) {
        if (main_scope.agents.count(a)) {
          error(Diagnostic::Kind::Name, sub.loc, fmt::format("agent '{}' in scenario '{}' shadows a top-level agent", a, sub.name));
        }
        sub_scope.agents.insert(a);
      }
      check_body(sub, sub_scope);
    }

    if (prog.composition) {
      for (const auto& e : prog.composition->entries) {
        if (prog.find_subscenario(e.scenario) == nullptr) {
          error(Diagnostic::Kind::Name, e.loc, fmt::format("compose references undeclared scenario '{}'", e.scenario));
        }
        const bool opportunistic = prog.composition->mode == CompositionMode::Opportunistic;
        if (opportunistic && !e.trigger) {
          error(Diagnostic::Kind::Value, e.loc, fmt::format("opportunistic entry '{}' needs a 'when ... enters ...' trigger", e.scenario));
        }
        if (!opportunistic && e.trigger) {
          error(Diagnostic::Kind::Value, e.loc,
                fmt::format("{} entry '{}' must not carry a trigger", to_string(prog.composition->mode), e.scenario));
        }
        if (e.trigger) {
          if (!main_scope.agents.count(e.trigger->agent)) {
            error(Diagnostic::Kind::Name, e.loc, fmt::format("trigger agent '{}' is not a top-level agent", e.trigger->agent));
          }
          for (const auto& arg : e.trigger->region.args) expect_type(arg, main_scope, ValueType::Number, "region bound");
          if (e.trigger->region.kind == RegionRef::Kind::Circle && e.trigger->region.args.size() == 3) {
            const Expr& r = e.trigger->region.args[2];
            if (r.kind == Expr::Kind::Number && !(r.number > 0.0)) {
              error(Diagnostic::Kind::Value, r.loc, "circle radius must be positive");
            }
          }
        }
      }
    }
  }

 private:
  void error(Diagnostic::Kind kind, SourceLoc loc, std::string msg) { diags_.push_back({kind, loc, std::move(msg)}); }

  void declare_params(const std::vector<ParamDecl>& params, Scope& scope) {
    for (const auto& p : params) {
      if (scope.params.count(p.name)) {
        error(Diagnostic::Kind::Name, p.loc, fmt::format("parameter '{}' declared twice", p.name));
        continue;
      }
      ValueType type = ValueType::Number;
      if (const auto* u = std::get_if<Uniform>(&p.dist)) {
        if (!std::isfinite(u->lo) || !std::isfinite(u->hi) || !(u->lo < u->hi)) {
          error(Diagnostic::Kind::Value, p.loc,
                fmt::format("uniform bounds for '{}' need lo < hi (got {}, {})", p.name, u->lo, u->hi));
        }
      } else if (const auto* c = std::get_if<Choice>(&p.dist)) {
        if (c->values.empty()) {
          error(Diagnostic::Kind::Value, p.loc, fmt::format("choice for '{}' is empty", p.name));
        } else {
          type = literal_type(c->values.front());
          for (std::size_t i = 0; i < c->values.size(); ++i) {
            if (literal_type(c->values[i]) != type) {
              error(Diagnostic::Kind::Type, p.loc, fmt::format("choice for '{}' mixes strings and numbers", p.name));
              break;
            }
            for (std::size_t j = 0; j < i; ++j) {
              if (c->values[i] == c->values[j]) {
                error(Diagnostic::Kind::Value, p.loc,
                      fmt::format("choice for '{}' repeats value {}", p.name, scalar_label(c->values[i])));
              }
            }
          }
        }
      } else {
        type = literal_type(std::get<Constant>(p.dist).value);
      }
      scope.params[p.name] = type;
    }
  }

  void declare_agents(const ScenarioProgram& prog, Scope& scope) {
    int egos = 0;
    for (const auto& a : prog.agents) {
      if (a.ego) ++egos;
      if (a.ego && egos > 1) {
        error(Diagnostic::Kind::Name, a.loc, "more than one ego agent declared");
        continue;
      }
      if (scope.params.count(a.name)) {
        error(Diagnostic::Kind::Name, a.loc, fmt::format("agent '{}' collides with a parameter", a.name));
      }
      if (!scope.agents.insert(a.name).second) {
        error(Diagnostic::Kind::Name, a.loc, fmt::format("agent '{}' declared twice", a.name));
      }
    }
    if (prog.termination.max_time && !(*prog.termination.max_time > 0.0)) {
      error(Diagnostic::Kind::Value, prog.termination.max_time_loc, fmt::format("maximum simulation time must be positive (got {})", *prog.termination.max_time));
    }
  }

  void check_body(const ScenarioProgram& prog, const Scope& scope) {
    for (const auto& a : prog.agents) {
      if (const auto* lp = std::get_if<LanePlacement>(&a.placement)) {
        expect_type(lp->lane, scope, ValueType::String, "lane id");
        expect_type(lp->offset, scope, ValueType::Number, "lane offset");
        if (lp->lateral) expect_type(*lp->lateral, scope, ValueType::Number, "lateral offset");
        if (lp->offset.kind == Expr::Kind::Number && lp->offset.number < 0.0) {
          error(Diagnostic::Kind::Value, lp->offset.loc, "lane offset must be non-negative");
        }
      } else {
        const auto& pp = std::get<PosePlacement>(a.placement);
        expect_type(pp.x, scope, ValueType::Number, "x coordinate");
        expect_type(pp.y, scope, ValueType::Number, "y coordinate");
        expect_type(pp.heading, scope, ValueType::Number, "heading");
      }
      if (a.speed) {
        expect_type(*a.speed, scope, ValueType::Number, "initial speed");
        if (a.speed->kind == Expr::Kind::Number && a.speed->number < 0.0) {
          error(Diagnostic::Kind::Value, a.speed->loc, "initial speed must be non-negative");
        }
      }
      for (const auto& r : a.route) expect_type(r, scope, ValueType::String, "route lane id");
      if (a.behavior) check_behavior(*a.behavior, scope);
    }
    for (const auto& r : prog.requirements) expect_type(r, scope, ValueType::Bool, "requirement");
  }

  void check_behavior(const BehaviorCall& b, const Scope& scope) {
    const auto kind = behavior_kind_from_string(b.name);
    if (!kind) {
      error(Diagnostic::Kind::Name, b.loc, fmt::format("unknown behavior '{}'", b.name));
      return;
    }
    const auto sig = behavior_signature(*kind);
    std::set<std::string> seen;
    for (const auto& arg : b.args) {
      const ArgSpec* spec = nullptr;
      for (const auto& s : sig) {
        if (s.name == arg.name) spec = &s;
      }
      if (spec == nullptr) {
        error(Diagnostic::Kind::Name, arg.value.loc, fmt::format("behavior {} has no argument '{}'", b.name, arg.name));
        continue;
      }
      if (!seen.insert(arg.name).second) {
        error(Diagnostic::Kind::Value, arg.value.loc, fmt::format("argument '{}' given twice", arg.name));
      }
      expect_type(arg.value, scope, spec->type, fmt::format("argument '{}' of {}", arg.name, b.name));
      if (spec->non_negative && arg.value.kind == Expr::Kind::Number && arg.value.number < 0.0) {
        error(Diagnostic::Kind::Value, arg.value.loc, fmt::format("argument '{}' of {} must be non-negative", arg.name, b.name));
      }
    }
    for (const auto& s : sig) {
      if (!s.default_number && s.type != ValueType::Bool && !seen.count(std::string(s.name))) {
        error(Diagnostic::Kind::Type, b.loc, fmt::format("behavior {} is missing required argument '{}'", b.name, s.name));
      }
    }
  }

  void expect_type(const Expr& e, const Scope& scope, ValueType want, const std::string& what) {
    const auto got = type_of(e, scope);
    if (got && *got != want) {
      error(Diagnostic::Kind::Type, e.loc, fmt::format("{} must be a {}, not a {}", what, to_string(want), to_string(*got)));
    }
  }

  // nullopt means an error was already reported for this expression.
  std::optional<ValueType> type_of(const Expr& e, const Scope& scope) {
    switch (e.kind) {
      case Expr::Kind::Number: return ValueType::Number;
      case Expr::Kind::String: return ValueType::String;
      case Expr::Kind::Name: {
        if (e.text == "time" || e.text == "pi") return ValueType::Number;
        if (auto it = scope.params.find(e.text); it != scope.params.end()) return it->second;
        if (scope.agents.count(e.text)) return ValueType::Agent;
        error(Diagnostic::Kind::Name, e.loc, fmt::format("undeclared identifier '{}'", e.text));
        return std::nullopt;
      }
      case Expr::Kind::Unary: {
        const auto t = type_of(e.args[0], scope);
        const ValueType want = e.text == "not" ? ValueType::Bool : ValueType::Number;
        if (t && *t != want) {
          error(Diagnostic::Kind::Type, e.loc, fmt::format("operator '{}' needs a {} operand", e.text, to_string(want)));
          return std::nullopt;
        }
        return t ? std::optional(want) : std::nullopt;
      }
      case Expr::Kind::Binary: {
        const auto l = type_of(e.args[0], scope);
        const auto r = type_of(e.args[1], scope);
        if (!l || !r) return std::nullopt;
        const std::string& op = e.text;
        if (op == "and" || op == "or") {
          if (*l != ValueType::Bool || *r != ValueType::Bool) {
            error(Diagnostic::Kind::Type, e.loc, fmt::format("operator '{}' needs boolean operands", op));
            return std::nullopt;
          }
          return ValueType::Bool;
        }
        if (op == "==" || op == "!=") {
          if (*l != *r || *l == ValueType::Agent) {
            error(Diagnostic::Kind::Type, e.loc, fmt::format("cannot compare {} with {}", to_string(*l), to_string(*r)));
            return std::nullopt;
          }
          return ValueType::Bool;
        }
        if (*l != ValueType::Number || *r != ValueType::Number) {
          error(Diagnostic::Kind::Type, e.loc,
                fmt::format("operator '{}' needs numeric operands, got {} and {}", op, to_string(*l), to_string(*r)));
          return std::nullopt;
        }
        if (op == "<" || op == "<=" || op == ">" || op == ">=") return ValueType::Bool;
        return ValueType::Number;
      }
      case Expr::Kind::Call: {
        const FunctionSpec* f = find_function(e.text);
        if (f == nullptr) {
          error(Diagnostic::Kind::Name, e.loc, fmt::format("unknown function '{}'", e.text));
          return std::nullopt;
        }
        if (e.args.size() != f->params.size()) {
          error(Diagnostic::Kind::Type, e.loc,
                fmt::format("function '{}' takes {} argument(s), got {}", e.text, f->params.size(), e.args.size()));
          return std::nullopt;
        }
        bool ok = true;
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          const auto t = type_of(e.args[i], scope);
          if (!t) {
            ok = false;
          } else if (*t != f->params[i]) {
            error(Diagnostic::Kind::Type, e.args[i].loc,
                  fmt::format("argument {} of '{}' must be a {}, not a {}", i + 1, e.text, to_string(f->params[i]), to_string(*t)));
            ok = false;
          }
        }
        return ok ? std::optional(f->result) : std::nullopt;
      }
    }
    return std::nullopt;
  }

  std::vector<Diagnostic>& diags_;
};

}  // namespace

ParseResult parse(std::string_view source) {
  ParseResult result;
  try {
    std::vector<Token> tokens = lex(source, result.diagnostics);
    Parser parser(std::move(tokens), result.diagnostics);
    ScenarioProgram prog = parser.parse_program();
    if (!result.diagnostics.empty()) return result;
    Checker checker(result.diagnostics);
    checker.check_program(prog);
    if (result.diagnostics.empty()) result.program = std::move(prog);
  } catch (const std::exception& e) {
    result.program.reset();
    result.diagnostics.push_back({Diagnostic::Kind::Syntax, SourceLoc{1, 1}, fmt::format("internal parser failure: {}", e.what())});
  }
  return result;
}

}  // namespace scenfuzz::dsl
