#include "fluxlab/fieldexpr.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "fluxlab/bump.hpp"

namespace fluxlab {

namespace {

constexpr double kPiValue = 3.14159265358979323846;

NodePtr make_const(double v, std::string text = {}) {
  auto n = std::make_shared<Node>();
  n->op = Op::constant;
  n->value = v;
  n->text = std::move(text);
  return n;
}

NodePtr make_var(Var v) {
  auto n = std::make_shared<Node>();
  n->op = Op::variable;
  n->var = v;
  return n;
}

NodePtr make_node(Op op, NodePtr a, NodePtr b = nullptr, int order = 0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->order = order;
  return n;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += v[i];
  }
  return out;
}

}  // namespace

const char* var_name(Var v) {
  switch (v) {
    case Var::x: return "x";
    case Var::y: return "y";
    case Var::t: return "t";
    case Var::theta: return "theta";
    case Var::s: return "s";
  }
  return "?";
}

VarSet VarSet::standard() { return of({Var::x, Var::y, Var::t, Var::theta}); }
VarSet VarSet::collar() { return of({Var::s, Var::theta}); }
VarSet VarSet::of(std::initializer_list<Var> vars) {
  VarSet s;
  for (Var v : vars) s.mask |= 1u << static_cast<unsigned>(v);
  return s;
}

ParseError::ParseError(const std::string& what, size_t offset, std::vector<std::string> expected)
    : std::runtime_error(what), offset_(offset), expected_(std::move(expected)) {}

UnknownIdentifierError::UnknownIdentifierError(const std::string& name, size_t offset)
    : std::runtime_error("unknown identifier '" + name + "' at offset " + std::to_string(offset)),
      name_(name),
      offset_(offset) {}

// ---------------------------------------------------------------------------
// construction

Expr::Expr() : node_(make_const(0.0)) {}
Expr Expr::constant(double v) { return Expr(make_const(v)); }
Expr Expr::variable(Var v) { return Expr(make_var(v)); }
Expr Expr::pi() { return Expr(make_const(kPiValue, "pi")); }

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.node().value + b.node().value);
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expr(make_node(Op::add, a.ptr(), b.ptr()));
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.node().value - b.node().value);
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  return Expr(make_node(Op::sub, a.ptr(), b.ptr()));
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.node().value * b.node().value);
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  return Expr(make_node(Op::mul, a.ptr(), b.ptr()));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && b.node().value != 0.0)
    return Expr::constant(a.node().value / b.node().value);
  if (a.is_constant(0.0)) return Expr::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return Expr(make_node(Op::div, a.ptr(), b.ptr()));
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.node().value);
  if (a.node().op == Op::neg) return Expr(a.node().a);
  return Expr(make_node(Op::neg, a.ptr()));
}

Expr pow(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant())
    return Expr::constant(std::pow(a.node().value, b.node().value));
  if (b.is_constant(0.0)) return Expr::constant(1.0);
  if (b.is_constant(1.0)) return a;
  return Expr(make_node(Op::pow, a.ptr(), b.ptr()));
}

namespace {
Expr unary(Op op, const Expr& a, double (*f)(double)) {
  if (a.is_constant()) return Expr::constant(f(a.node().value));
  return Expr(make_node(op, a.ptr()));
}
double sin_(double v) { return std::sin(v); }
double cos_(double v) { return std::cos(v); }
double exp_(double v) { return std::exp(v); }
double log_(double v) { return std::log(v); }
}  // namespace

Expr sin(const Expr& a) { return unary(Op::sin, a, sin_); }
Expr cos(const Expr& a) { return unary(Op::cos, a, cos_); }
Expr exp(const Expr& a) { return unary(Op::exp, a, exp_); }
Expr log(const Expr& a) { return unary(Op::log, a, log_); }

Expr bump(const Expr& a, int order) {
  if (order > kMaxBumpOrder) throw DomainError("bump derivative order too high");
  if (a.is_constant()) return Expr::constant(bump_derivative(a.node().value, order));
  return Expr(make_node(Op::bump, a.ptr(), nullptr, order));
}

Expr atan2(const Expr& y, const Expr& x) {
  if (y.is_constant() && x.is_constant())
    return Expr::constant(std::atan2(y.node().value, x.node().value));
  return Expr(make_node(Op::atan2, y.ptr(), x.ptr()));
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

double eval_node(const Node& n, const VarValues& v) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return v[static_cast<int>(n.var)];
    case Op::neg: return -eval_node(*n.a, v);
    case Op::add: return eval_node(*n.a, v) + eval_node(*n.b, v);
    case Op::sub: return eval_node(*n.a, v) - eval_node(*n.b, v);
    case Op::mul: return eval_node(*n.a, v) * eval_node(*n.b, v);
    case Op::div: return eval_node(*n.a, v) / eval_node(*n.b, v);
    case Op::pow: return std::pow(eval_node(*n.a, v), eval_node(*n.b, v));
    case Op::sin: return std::sin(eval_node(*n.a, v));
    case Op::cos: return std::cos(eval_node(*n.a, v));
    case Op::exp: return std::exp(eval_node(*n.a, v));
    case Op::log: return std::log(eval_node(*n.a, v));
    case Op::bump: return bump_derivative(eval_node(*n.a, v), n.order);
    case Op::atan2: return std::atan2(eval_node(*n.a, v), eval_node(*n.b, v));
  }
  return 0.0;
}

}  // namespace

double Expr::eval(const VarValues& v) const {
  double r = eval_node(*node_, v);
  if (!std::isfinite(r)) {
    std::ostringstream os;
    os.precision(17);
    os << "expression '" << to_string(*this) << "' is not finite at (x=" << v[0] << ", y=" << v[1]
       << ", t=" << v[2] << ", theta=" << v[3] << ", s=" << v[4] << ")";
    throw DomainError(os.str());
  }
  return r;
}

double Expr::operator()(double x, double y, double t, double theta) const {
  return eval({x, y, t, theta, 0.0});
}

// ---------------------------------------------------------------------------
// parsing

namespace {

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };

struct Token {
  Tok kind;
  size_t offset;
  std::string text;
};

const char* tok_spelling(Tok k) {
  switch (k) {
    case Tok::number: return "number";
    case Tok::ident: return "identifier";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
    case Tok::caret: return "'^'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::end: return "end of input";
  }
  return "?";
}

class Parser {
 public:
  Parser(std::string_view src, VarSet allowed) : src_(src), allowed_(allowed) { advance(); }

  Expr parse_all() {
    Expr e = parse_sum();
    if (tok_.kind != Tok::end) fail({"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"});
    return e;
  }

 private:
  std::string_view src_;
  VarSet allowed_;
  size_t pos_ = 0;
  Token tok_{Tok::end, 0, {}};
  int depth_ = 0;

  [[noreturn]] void fail(std::vector<std::string> expected) {
    std::string got = tok_.kind == Tok::end ? "end of input" : "'" + tok_.text + "'";
    throw ParseError("syntax error at offset " + std::to_string(tok_.offset) + ": unexpected " +
                         got + ", expected " + join(expected),
                     tok_.offset, std::move(expected));
  }

  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    size_t start = pos_;
    if (pos_ >= src_.size()) {
      tok_ = {Tok::end, start, {}};
      return;
    }
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t p = pos_;
      while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
      if (p < src_.size() && src_[p] == '.') {
        ++p;
        while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
      }
      if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
        size_t q = p + 1;
        if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
        if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
          while (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) ++q;
          p = q;
        }
      }
      tok_ = {Tok::number, start, std::string(src_.substr(start, p - start))};
      pos_ = p;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t p = pos_;
      while (p < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[p])) || src_[p] == '_'))
        ++p;
      tok_ = {Tok::ident, start, std::string(src_.substr(start, p - start))};
      pos_ = p;
      return;
    }
    Tok k;
    switch (c) {
      case '+': k = Tok::plus; break;
      case '-': k = Tok::minus; break;
      case '*': k = Tok::star; break;
      case '/': k = Tok::slash; break;
      case '^': k = Tok::caret; break;
      case '(': k = Tok::lparen; break;
      case ')': k = Tok::rparen; break;
      case ',': k = Tok::comma; break;
      default:
        tok_ = {Tok::end, start, std::string(1, c)};
        throw ParseError("syntax error at offset " + std::to_string(start) +
                             ": unexpected character '" + std::string(1, c) + "'",
                         start, {"number", "identifier", "operator", "'('", "')'"});
    }
    tok_ = {k, start, std::string(1, c)};
    ++pos_;
  }

  void expect(Tok k) {
    if (tok_.kind != k) fail({tok_spelling(k)});
    advance();
  }

  Expr parse_sum() {
    Expr e = parse_product();
    while (tok_.kind == Tok::plus || tok_.kind == Tok::minus) {
      Op op = tok_.kind == Tok::plus ? Op::add : Op::sub;
      advance();
      Expr r = parse_product();
      e = Expr(make_node(op, e.ptr(), r.ptr()));
    }
    return e;
  }

  Expr parse_product() {
    Expr e = parse_unary();
    while (tok_.kind == Tok::star || tok_.kind == Tok::slash) {
      Op op = tok_.kind == Tok::star ? Op::mul : Op::div;
      advance();
      Expr r = parse_unary();
      e = Expr(make_node(op, e.ptr(), r.ptr()));
    }
    return e;
  }

  Expr parse_unary() {
    if (tok_.kind == Tok::minus) {
      advance();
      Expr a = parse_unary();
      return Expr(make_node(Op::neg, a.ptr()));
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (tok_.kind == Tok::caret) {
      advance();
      Expr ex = parse_unary();
      return Expr(make_node(Op::pow, base.ptr(), ex.ptr()));
    }
    return base;
  }

  static int bump_order(const std::string& name) {
    if (name == "bump") return 0;
    if (name == "dbump") return 1;
    if (name.size() > 5 && name[0] == 'd' && name.compare(name.size() - 4, 4, "bump") == 0) {
      std::string digits = name.substr(1, name.size() - 5);
      if (digits.empty() || digits[0] == '0') return -1;
      for (char ch : digits)
        if (!std::isdigit(static_cast<unsigned char>(ch))) return -1;
      int k = std::stoi(digits);
      if (k >= 2 && k <= kMaxBumpOrder) return k;
    }
    return -1;
  }

  Expr parse_call(const Token& name_tok) {
    const std::string& name = name_tok.text;
    expect(Tok::lparen);
    if (++depth_ > 512) throw ParseError("expression nested too deeply", name_tok.offset, {});
    Expr a = parse_sum();
    Expr out;
    if (name == "atan2") {
      if (tok_.kind != Tok::comma) fail({"','"});
      advance();
      Expr b = parse_sum();
      out = Expr(make_node(Op::atan2, a.ptr(), b.ptr()));
    } else if (name == "sin") {
      out = Expr(make_node(Op::sin, a.ptr()));
    } else if (name == "cos") {
      out = Expr(make_node(Op::cos, a.ptr()));
    } else if (name == "exp") {
      out = Expr(make_node(Op::exp, a.ptr()));
    } else if (name == "log") {
      out = Expr(make_node(Op::log, a.ptr()));
    } else {
      out = Expr(make_node(Op::bump, a.ptr(), nullptr, bump_order(name)));
    }
    if (tok_.kind != Tok::rparen) fail({"'+'", "'-'", "'*'", "'/'", "'^'", "')'"});
    advance();
    --depth_;
    return out;
  }

  bool is_function(const std::string& n) const {
    return n == "sin" || n == "cos" || n == "exp" || n == "log" || n == "atan2" ||
           bump_order(n) >= 0;
  }

  Expr parse_primary() {
    Token t = tok_;
    switch (t.kind) {
      case Tok::number: {
        double v = 0.0;
        auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
          throw ParseError("malformed number '" + t.text + "' at offset " +
                               std::to_string(t.offset),
                           t.offset, {"number"});
        advance();
        return Expr(make_const(v, t.text));
      }
      case Tok::ident: {
        advance();
        if (is_function(t.text)) return parse_call(t);
        if (t.text == "pi") return Expr::pi();
        static const std::pair<const char*, Var> vars[] = {
            {"x", Var::x}, {"y", Var::y}, {"t", Var::t}, {"theta", Var::theta}, {"s", Var::s}};
        for (auto& [nm, v] : vars)
          if (t.text == nm) {
            if (!allowed_.has(v)) throw UnknownIdentifierError(t.text, t.offset);
            return Expr::variable(v);
          }
        throw UnknownIdentifierError(t.text, t.offset);
      }
      case Tok::lparen: {
        advance();
        if (++depth_ > 512) throw ParseError("expression nested too deeply", t.offset, {});
        Expr e = parse_sum();
        if (tok_.kind != Tok::rparen) fail({"'+'", "'-'", "'*'", "'/'", "'^'", "')'"});
        advance();
        --depth_;
        return e;
      }
      default:
        fail({"number", "identifier", "'('", "'-'"});
    }
  }
};

}  // namespace

Expr parse(std::string_view src, VarSet allowed) { return Parser(src, allowed).parse_all(); }

// ---------------------------------------------------------------------------
// printing

namespace {

int precedence(const Node& n) {
  switch (n.op) {
    case Op::add:
    case Op::sub: return 1;
    case Op::mul:
    case Op::div: return 2;
    case Op::neg: return 3;
    case Op::pow: return 4;
    case Op::constant: return (n.value < 0 || std::signbit(n.value)) && n.text.empty() ? 3 : 5;
    default: return 5;
  }
}

std::string number_text(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void print(const Node& n, std::string& out);

void print_child(const Node& c, bool parens, std::string& out) {
  if (parens) out += '(';
  print(c, out);
  if (parens) out += ')';
}

std::string bump_name(int order) {
  if (order == 0) return "bump";
  if (order == 1) return "dbump";
  return "d" + std::to_string(order) + "bump";
}

void print(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::constant:
      out += n.text.empty() ? number_text(n.value) : n.text;
      return;
    case Op::variable: out += var_name(n.var); return;
    case Op::neg:
      out += '-';
      print_child(*n.a, precedence(*n.a) < 3, out);
      return;
    case Op::add:
    case Op::sub:
      print_child(*n.a, false, out);
      out += n.op == Op::add ? " + " : " - ";
      print_child(*n.b, precedence(*n.b) <= 1, out);
      return;
    case Op::mul:
    case Op::div:
      print_child(*n.a, precedence(*n.a) < 2, out);
      out += n.op == Op::mul ? "*" : "/";
      print_child(*n.b, precedence(*n.b) <= 2, out);
      return;
    case Op::pow:
      print_child(*n.a, precedence(*n.a) <= 4, out);
      out += '^';
      print_child(*n.b, precedence(*n.b) < 3, out);
      return;
    case Op::sin:
    case Op::cos:
    case Op::exp:
    case Op::log:
    case Op::bump: {
      const char* nm = n.op == Op::sin ? "sin" : n.op == Op::cos ? "cos" : n.op == Op::exp ? "exp"
                                                : n.op == Op::log ? "log" : nullptr;
      out += nm ? std::string(nm) : bump_name(n.order);
      out += '(';
      print(*n.a, out);
      out += ')';
      return;
    }
    case Op::atan2:
      out += "atan2(";
      print(*n.a, out);
      out += ", ";
      print(*n.b, out);
      out += ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e.node(), out);
  return out;
}

// ---------------------------------------------------------------------------
// calculus

bool depends_on(const Expr& e, Var v) {
  const Node& n = e.node();
  switch (n.op) {
    case Op::constant: return false;
    case Op::variable: return n.var == v;
    default:
      return (n.a && depends_on(Expr(n.a), v)) || (n.b && depends_on(Expr(n.b), v));
  }
}

namespace {

Expr diff(const NodePtr& p, Var v, std::unordered_map<const Node*, Expr>& memo) {
  auto it = memo.find(p.get());
  if (it != memo.end()) return it->second;
  const Node& n = *p;
  Expr a = n.a ? Expr(n.a) : Expr();
  Expr b = n.b ? Expr(n.b) : Expr();
  Expr r;
  switch (n.op) {
    case Op::constant: r = Expr::constant(0.0); break;
    case Op::variable: r = Expr::constant(n.var == v ? 1.0 : 0.0); break;
    case Op::neg: r = -diff(n.a, v, memo); break;
    case Op::add: r = diff(n.a, v, memo) + diff(n.b, v, memo); break;
    case Op::sub: r = diff(n.a, v, memo) - diff(n.b, v, memo); break;
    case Op::mul: r = diff(n.a, v, memo) * b + a * diff(n.b, v, memo); break;
    case Op::div: {
      Expr da = diff(n.a, v, memo), db = diff(n.b, v, memo);
      r = da / b - a * db / (b * b);
      break;
    }
    case Op::pow: {
      Expr da = diff(n.a, v, memo);
      if (!depends_on(b, v)) {
        r = b * pow(a, b - 1.0) * da;
      } else {
        Expr db = diff(n.b, v, memo);
        r = Expr(p) * (db * log(a) + b * da / a);
      }
      break;
    }
    case Op::sin: r = cos(a) * diff(n.a, v, memo); break;
    case Op::cos: r = -(sin(a) * diff(n.a, v, memo)); break;
    case Op::exp: r = Expr(p) * diff(n.a, v, memo); break;
    case Op::log: r = diff(n.a, v, memo) / a; break;
    case Op::bump: r = bump(a, n.order + 1) * diff(n.a, v, memo); break;
    case Op::atan2: {
      Expr da = diff(n.a, v, memo), db = diff(n.b, v, memo);
      r = (b * da - a * db) / (a * a + b * b);
      break;
    }
  }
  memo.emplace(p.get(), r);
  return r;
}

Expr subst(const NodePtr& p, Var v, const Expr& rep, std::unordered_map<const Node*, Expr>& memo) {
  auto it = memo.find(p.get());
  if (it != memo.end()) return it->second;
  const Node& n = *p;
  Expr r;
  switch (n.op) {
    case Op::constant: r = Expr(p); break;
    case Op::variable: r = n.var == v ? rep : Expr(p); break;
    case Op::neg: r = -subst(n.a, v, rep, memo); break;
    case Op::add: r = subst(n.a, v, rep, memo) + subst(n.b, v, rep, memo); break;
    case Op::sub: r = subst(n.a, v, rep, memo) - subst(n.b, v, rep, memo); break;
    case Op::mul: r = subst(n.a, v, rep, memo) * subst(n.b, v, rep, memo); break;
    case Op::div: r = subst(n.a, v, rep, memo) / subst(n.b, v, rep, memo); break;
    case Op::pow: r = pow(subst(n.a, v, rep, memo), subst(n.b, v, rep, memo)); break;
    case Op::sin: r = sin(subst(n.a, v, rep, memo)); break;
    case Op::cos: r = cos(subst(n.a, v, rep, memo)); break;
    case Op::exp: r = exp(subst(n.a, v, rep, memo)); break;
    case Op::log: r = log(subst(n.a, v, rep, memo)); break;
    case Op::bump: r = bump(subst(n.a, v, rep, memo), n.order); break;
    case Op::atan2: r = atan2(subst(n.a, v, rep, memo), subst(n.b, v, rep, memo)); break;
  }
  memo.emplace(p.get(), r);
  return r;
}

}  // namespace

Expr differentiate(const Expr& e, Var v) {
  std::unordered_map<const Node*, Expr> memo;
  return diff(e.ptr(), v, memo);
}

Expr substitute(const Expr& e, Var v, const Expr& replacement) {
  std::unordered_map<const Node*, Expr> memo;
  return subst(e.ptr(), v, replacement, memo);
}

// ---------------------------------------------------------------------------
// compilation

namespace {

struct Compiler {
  using Key = std::tuple<int, int, int, uint64_t, int, int>;
  std::map<Key, int> canon;
  std::unordered_map<const Node*, int> seen;
  std::vector<std::tuple<Op, int, int, int, double>> code;  // op, order, a, b, c

  int emit(Op op, int order, int a, int b, double c, uint64_t bits, int var) {
    Key k{static_cast<int>(op), order, var, bits, a, b};
    auto it = canon.find(k);
    if (it != canon.end()) return it->second;
    int r = static_cast<int>(code.size());
    code.emplace_back(op, order, a, b, c);
    canon.emplace(k, r);
    return r;
  }

  int constant(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return emit(Op::constant, 0, -1, -1, v, bits, 0);
  }

  int integer_power(int base, long n) {
    if (n == 0) return constant(1.0);
    if (n < 0) return emit(Op::div, 0, constant(1.0), integer_power(base, -n), 0, 0, 0);
    int result = -1, sq = base;
    while (n) {
      if (n & 1) result = result < 0 ? sq : emit(Op::mul, 0, result, sq, 0, 0, 0);
      n >>= 1;
      if (n) sq = emit(Op::mul, 0, sq, sq, 0, 0, 0);
    }
    return result;
  }

  int compile(const NodePtr& p) {
    auto it = seen.find(p.get());
    if (it != seen.end()) return it->second;
    const Node& n = *p;
    int r;
    switch (n.op) {
      case Op::constant: r = constant(n.value); break;
      case Op::variable:
        r = emit(Op::variable, 0, static_cast<int>(n.var), -1, 0, 0, static_cast<int>(n.var));
        break;
      case Op::pow: {
        int a = compile(n.a);
        if (n.b->op == Op::constant && std::nearbyint(n.b->value) == n.b->value &&
            std::fabs(n.b->value) <= 16) {
          r = integer_power(a, static_cast<long>(n.b->value));
        } else {
          r = emit(Op::pow, 0, a, compile(n.b), 0, 0, 0);
        }
        break;
      }
      default: {
        int a = n.a ? compile(n.a) : -1;
        int b = n.b ? compile(n.b) : -1;
        r = emit(n.op, n.order, a, b, 0, 0, 0);
      }
    }
    seen.emplace(p.get(), r);
    return r;
  }
};

}  // namespace

Program::Program(const std::vector<Expr>& outputs) {
  Compiler c;
  for (const Expr& e : outputs) outputs_.push_back(c.compile(e.ptr()));
  code_.reserve(c.code.size());
  for (auto& [op, order, a, b, cval] : c.code) code_.push_back({op, order, a, b, cval});
}

void Program::run(const VarValues& vars, double* out) const {
  thread_local std::vector<double> regs;
  if (regs.size() < code_.size()) regs.resize(code_.size());
  double* r = regs.data();
  const size_t n = code_.size();
  for (size_t i = 0; i < n; ++i) {
    const Instr& in = code_[i];
    switch (in.op) {
      case Op::constant: r[i] = in.c; break;
      case Op::variable: r[i] = vars[in.a]; break;
      case Op::neg: r[i] = -r[in.a]; break;
      case Op::add: r[i] = r[in.a] + r[in.b]; break;
      case Op::sub: r[i] = r[in.a] - r[in.b]; break;
      case Op::mul: r[i] = r[in.a] * r[in.b]; break;
      case Op::div: r[i] = r[in.a] / r[in.b]; break;
      case Op::pow: r[i] = std::pow(r[in.a], r[in.b]); break;
      case Op::sin: r[i] = std::sin(r[in.a]); break;
      case Op::cos: r[i] = std::cos(r[in.a]); break;
      case Op::exp: r[i] = std::exp(r[in.a]); break;
      case Op::log: r[i] = std::log(r[in.a]); break;
      case Op::bump: r[i] = bump_derivative(r[in.a], in.order); break;
      case Op::atan2: r[i] = std::atan2(r[in.a], r[in.b]); break;
    }
  }
  for (size_t k = 0; k < outputs_.size(); ++k) out[k] = r[outputs_[k]];
}

}  // namespace fluxlab
