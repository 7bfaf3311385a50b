#include "octwin/guard.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

namespace octwin::guard {

std::string_view to_string(RelOp op) {
  switch (op) {
    case RelOp::lt: return "<";
    case RelOp::le: return "<=";
    case RelOp::eq: return "=";
    case RelOp::ne: return "!=";
    case RelOp::ge: return ">=";
    case RelOp::gt: return ">";
  }
  return "?";
}

std::string_view to_string(AggregateFn fn) {
  switch (fn) {
    case AggregateFn::count: return "count";
    case AggregateFn::sum: return "sum";
    case AggregateFn::min: return "min";
    case AggregateFn::max: return "max";
    case AggregateFn::avg: return "avg";
  }
  return "?";
}

// MARK: - formula

Formula::Formula() : node_(std::make_shared<const Node>(TrueLiteral{})) {}

Formula Formula::truth() { return Formula{}; }
Formula Formula::compare(Term lhs, RelOp op, Term rhs) {
  return Formula{std::make_shared<const Node>(Comparison{std::move(lhs), op, std::move(rhs)})};
}
Formula Formula::negate(Formula operand) {
  return Formula{std::make_shared<const Node>(Not{std::move(operand)})};
}
Formula Formula::conjoin(Formula lhs, Formula rhs) {
  return Formula{std::make_shared<const Node>(And{std::move(lhs), std::move(rhs)})};
}
Formula Formula::disjoin(Formula lhs, Formula rhs) {
  return Formula{std::make_shared<const Node>(Or{std::move(lhs), std::move(rhs)})};
}

const Formula::Node& Formula::node() const { return *node_; }

bool Formula::is_true_literal() const { return std::holds_alternative<TrueLiteral>(*node_); }

bool Formula::operator==(const Formula& other) const {
  return node_ == other.node_ || *node_ == *other.node_;
}

// MARK: - lexer

namespace {

enum class Tok { ident, number, string, lparen, rparen, dot, relop, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
  double number = 0;
  RelOp op = RelOp::eq;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (ident_start(c)) {
      while (i < s.size() && ident_char(s[i])) ++i;
      // A trailing hyphen belongs to whatever follows, e.g. "a-" never names a valve.
      while (i > start + 1 && s[i - 1] == '-') --i;
      out.push_back({Tok::ident, std::string(s.substr(start, i - start)), start});
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               ((c == '-' || c == '.') && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      if (s[i] == '-') ++i;
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
          i = j;
          while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        }
      }
      std::string text(s.substr(start, i - start));
      double v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || ptr != text.data() + text.size()) throw SyntaxError("malformed number '" + text + "'", start);
      Token t{Tok::number, text, start};
      t.number = v;
      out.push_back(t);
    } else if (c == '"' || c == '\'') {
      char quote = c;
      std::string text;
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          text.push_back(s[i + 1]);
          i += 2;
        } else if (s[i] == quote) {
          ++i;
          closed = true;
          break;
        } else {
          text.push_back(s[i++]);
        }
      }
      if (!closed) throw SyntaxError("unterminated string", start);
      out.push_back({Tok::string, text, start});
    } else if (c == '(') {
      out.push_back({Tok::lparen, "(", i++});
    } else if (c == ')') {
      out.push_back({Tok::rparen, ")", i++});
    } else if (c == '.') {
      out.push_back({Tok::dot, ".", i++});
    } else if (c == '<' || c == '>' || c == '=' || c == '!') {
      Token t{Tok::relop, "", start};
      bool eq_next = i + 1 < s.size() && s[i + 1] == '=';
      if (c == '<') t.op = eq_next ? RelOp::le : RelOp::lt;
      else if (c == '>') t.op = eq_next ? RelOp::ge : RelOp::gt;
      else if (c == '=') t.op = RelOp::eq;
      else if (eq_next) t.op = RelOp::ne;
      else throw SyntaxError("unexpected '!'", start);
      i += (eq_next && c != '=') ? 2 : 1;
      t.text = std::string(to_string(t.op));
      out.push_back(t);
    } else {
      throw SyntaxError(std::string("unexpected character '") + c + "'", start);
    }
  }
  out.push_back({Tok::end, "", s.size()});
  return out;
}

bool is_keyword(const std::string& s) { return s == "and" || s == "or" || s == "not" || s == "true"; }

std::optional<AggregateFn> aggregate_named(const std::string& s) {
  if (s == "count") return AggregateFn::count;
  if (s == "sum") return AggregateFn::sum;
  if (s == "min") return AggregateFn::min;
  if (s == "max") return AggregateFn::max;
  if (s == "avg") return AggregateFn::avg;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Formula parse_all() {
    auto f = formula();
    if (peek().kind != Tok::end) throw SyntaxError("unexpected '" + peek().text + "'", peek().pos);
    return f;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
  bool at_keyword(const char* kw) const { return peek().kind == Tok::ident && peek().text == kw; }

  Formula formula() { return or_expr(); }

  Formula or_expr() {
    auto f = and_expr();
    while (at_keyword("or")) {
      next();
      f = Formula::disjoin(std::move(f), and_expr());
    }
    return f;
  }

  Formula and_expr() {
    auto f = unary();
    while (at_keyword("and")) {
      next();
      f = Formula::conjoin(std::move(f), unary());
    }
    return f;
  }

  Formula unary() {
    if (at_keyword("not")) {
      next();
      return Formula::negate(unary());
    }
    return atom();
  }

  Formula atom() {
    if (at_keyword("true")) {
      next();
      return Formula::truth();
    }
    if (peek().kind == Tok::lparen) {
      next();
      auto f = formula();
      if (peek().kind != Tok::rparen) throw SyntaxError("expected ')'", peek().pos);
      next();
      return f;
    }
    auto lhs = term();
    if (peek().kind != Tok::relop) throw SyntaxError("expected relational operator", peek().pos);
    auto op = next().op;
    auto rhs = term();
    return Formula::compare(std::move(lhs), op, std::move(rhs));
  }

  std::string ident(const char* what) {
    if (peek().kind != Tok::ident || is_keyword(peek().text))
      throw SyntaxError(std::string("expected ") + what, peek().pos);
    return next().text;
  }

  Term term() {
    const auto& t = peek();
    if (t.kind == Tok::number) return NumberLiteral{next().number};
    if (t.kind == Tok::string) return StringLiteral{next().text};
    if (t.kind != Tok::ident || is_keyword(t.text)) throw SyntaxError("expected term", t.pos);
    auto name = next();
    if (peek().kind == Tok::lparen) {
      auto fn = aggregate_named(name.text);
      if (!fn) throw SyntaxError("unknown aggregate function '" + name.text + "'", name.pos);
      next();
      auto type = ident("object type");
      if (peek().kind != Tok::dot) throw SyntaxError("expected '.'", peek().pos);
      next();
      auto attr = ident("attribute name");
      if (peek().kind != Tok::rparen) throw SyntaxError("expected ')'", peek().pos);
      next();
      return Aggregate{*fn, type, attr};
    }
    if (peek().kind == Tok::dot) {
      next();
      return AttrRef{name.text, ident("attribute name")};
    }
    return ValveRef{name.text};
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

}  // namespace

Formula parse(std::string_view text) { return Parser(lex(text)).parse_all(); }

// MARK: - printing

std::string to_string(const Term& t) {
  struct V {
    std::string operator()(const ValveRef& v) const { return v.name; }
    std::string operator()(const AttrRef& a) const { return a.object_type + "." + a.attribute; }
    std::string operator()(const Aggregate& a) const {
      return std::string(to_string(a.fn)) + "(" + a.object_type + "." + a.attribute + ")";
    }
    std::string operator()(const NumberLiteral& n) const {
      std::ostringstream os;
      os.precision(17);
      os << n.value;
      return os.str();
    }
    std::string operator()(const StringLiteral& s) const {
      std::string out = "\"";
      for (char c : s.value) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      return out + "\"";
    }
  };
  return std::visit(V{}, t);
}

namespace {

// 0 = or, 1 = and, 2 = unary/atom
int precedence(const Formula& f) {
  if (std::holds_alternative<Or>(f.node())) return 0;
  if (std::holds_alternative<And>(f.node())) return 1;
  return 2;
}

std::string print(const Formula& f);

std::string wrap_if(const Formula& f, bool parens) { return parens ? "(" + print(f) + ")" : print(f); }

std::string print(const Formula& f) {
  struct V {
    std::string operator()(const TrueLiteral&) const { return "true"; }
    std::string operator()(const Comparison& c) const {
      return to_string(c.lhs) + " " + std::string(to_string(c.op)) + " " + to_string(c.rhs);
    }
    std::string operator()(const Not& n) const { return "not " + wrap_if(n.operand, precedence(n.operand) < 2); }
    std::string operator()(const And& a) const {
      return wrap_if(a.lhs, precedence(a.lhs) < 1) + " and " + wrap_if(a.rhs, precedence(a.rhs) < 2);
    }
    std::string operator()(const Or& o) const {
      return wrap_if(o.lhs, false) + " or " + wrap_if(o.rhs, precedence(o.rhs) < 1);
    }
  };
  return std::visit(V{}, f.node());
}

}  // namespace

std::string to_string(const Formula& f) { return print(f); }

// MARK: - evaluation

namespace {

// Resolved term: a value, or nothing when an attribute is absent.
using Resolved = std::optional<Value>;

const Value* attribute_of(const BoundObject& o, const std::string& attr, Value& scratch) {
  if (attr == "id") {
    scratch = o.id;
    return &scratch;
  }
  auto it = o.attributes.find(attr);
  return it == o.attributes.end() ? nullptr : &it->second;
}

const std::vector<BoundObject>& bound_of(const EvaluationContext& ctx, const ObjectType& type) {
  static const std::vector<BoundObject> none;
  auto it = ctx.bound_objects.find(type);
  return it == ctx.bound_objects.end() ? none : it->second;
}

Resolved resolve(const Term& term, const EvaluationContext& ctx) {
  if (const auto* v = std::get_if<ValveRef>(&term)) {
    auto it = ctx.valves.find(v->name);
    if (it == ctx.valves.end()) throw EvaluationError("valve " + v->name + " has no value");
    return it->second;
  }
  if (const auto* n = std::get_if<NumberLiteral>(&term)) return Value{n->value};
  if (const auto* s = std::get_if<StringLiteral>(&term)) return Value{s->value};
  if (const auto* a = std::get_if<AttrRef>(&term)) {
    const auto& objs = bound_of(ctx, a->object_type);
    if (objs.size() > 1)
      throw EvaluationError(a->object_type + "." + a->attribute +
                            " refers to several bound objects; use an aggregate");
    if (objs.empty()) return std::nullopt;
    Value scratch;
    const Value* v = attribute_of(objs.front(), a->attribute, scratch);
    if (!v) return std::nullopt;
    return *v;
  }
  const auto& agg = std::get<Aggregate>(term);
  const auto& objs = bound_of(ctx, agg.object_type);
  double count = 0, sum = 0, lo = 0, hi = 0;
  for (const auto& o : objs) {
    Value scratch;
    const Value* v = attribute_of(o, agg.attribute, scratch);
    if (!v) continue;
    if (agg.fn != AggregateFn::count) {
      if (!is_number(*v))
        throw EvaluationError(std::string(to_string(agg.fn)) + " over non-numeric " + agg.object_type + "." +
                              agg.attribute);
      double x = std::get<double>(*v);
      lo = count == 0 ? x : std::min(lo, x);
      hi = count == 0 ? x : std::max(hi, x);
      sum += x;
    }
    count += 1;
  }
  switch (agg.fn) {
    case AggregateFn::count: return Value{count};
    case AggregateFn::sum: return Value{sum};
    case AggregateFn::min: return count == 0 ? Resolved{} : Value{lo};
    case AggregateFn::max: return count == 0 ? Resolved{} : Value{hi};
    case AggregateFn::avg: return count == 0 ? Resolved{} : Value{sum / count};
  }
  return std::nullopt;
}

bool compare(const Comparison& c, const EvaluationContext& ctx) {
  auto lhs = resolve(c.lhs, ctx);
  auto rhs = resolve(c.rhs, ctx);
  if (!lhs || !rhs) return false;
  if (lhs->index() != rhs->index())
    throw EvaluationError("type mismatch in " + to_string(c.lhs) + " " + std::string(to_string(c.op)) + " " +
                          to_string(c.rhs));
  if (const auto* ls = std::get_if<std::string>(&*lhs)) {
    const auto& rs = std::get<std::string>(*rhs);
    if (c.op == RelOp::eq) return *ls == rs;
    if (c.op == RelOp::ne) return *ls != rs;
    throw EvaluationError("strings only support = and !=");
  }
  double l = std::get<double>(*lhs), r = std::get<double>(*rhs);
  switch (c.op) {
    case RelOp::lt: return l < r;
    case RelOp::le: return l <= r;
    case RelOp::eq: return l == r;
    case RelOp::ne: return l != r;
    case RelOp::ge: return l >= r;
    case RelOp::gt: return l > r;
  }
  return false;
}

}  // namespace

bool evaluate(const Formula& f, const EvaluationContext& ctx) {
  struct V {
    const EvaluationContext& ctx;
    bool operator()(const TrueLiteral&) const { return true; }
    bool operator()(const Comparison& c) const { return compare(c, ctx); }
    bool operator()(const Not& n) const { return !evaluate(n.operand, ctx); }
    bool operator()(const And& a) const { return evaluate(a.lhs, ctx) && evaluate(a.rhs, ctx); }
    bool operator()(const Or& o) const { return evaluate(o.lhs, ctx) || evaluate(o.rhs, ctx); }
  };
  return std::visit(V{ctx}, f.node());
}

namespace {

template <class Fn>
void walk_terms(const Formula& f, Fn&& fn) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Comparison>) {
          fn(n.lhs);
          fn(n.rhs);
        } else if constexpr (std::is_same_v<N, Not>) {
          walk_terms(n.operand, fn);
        } else if constexpr (std::is_same_v<N, And> || std::is_same_v<N, Or>) {
          walk_terms(n.lhs, fn);
          walk_terms(n.rhs, fn);
        }
      },
      f.node());
}

}  // namespace

std::set<std::string> referenced_valves(const Formula& f) {
  std::set<std::string> out;
  walk_terms(f, [&](const Term& t) {
    if (const auto* v = std::get_if<ValveRef>(&t)) out.insert(v->name);
  });
  return out;
}

std::set<std::pair<ObjectType, std::string>> referenced_attributes(const Formula& f) {
  std::set<std::pair<ObjectType, std::string>> out;
  walk_terms(f, [&](const Term& t) {
    if (const auto* a = std::get_if<AttrRef>(&t)) out.emplace(a->object_type, a->attribute);
    if (const auto* a = std::get_if<Aggregate>(&t)) out.emplace(a->object_type, a->attribute);
  });
  return out;
}

}  // namespace octwin::guard
