#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fluxlab {

enum class Var : uint8_t { x = 0, y = 1, t = 2, theta = 3, s = 4 };
inline constexpr int kNumVars = 5;
using VarValues = std::array<double, kNumVars>;

const char* var_name(Var v);

struct VarSet {
  unsigned mask = 0;

  static VarSet standard();  // x, y, t, theta
  static VarSet collar();    // s, theta
  static VarSet of(std::initializer_list<Var> vars);
  bool has(Var v) const { return (mask >> static_cast<unsigned>(v)) & 1u; }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, size_t offset, std::vector<std::string> expected);
  size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  size_t offset_;
  std::vector<std::string> expected_;
};

class UnknownIdentifierError : public std::runtime_error {
 public:
  UnknownIdentifierError(const std::string& name, size_t offset);
  const std::string& name() const { return name_; }
  size_t offset() const { return offset_; }

 private:
  std::string name_;
  size_t offset_;
};

class DomainError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Op : uint8_t {
  constant,
  variable,
  neg,
  add,
  sub,
  mul,
  div,
  pow,
  sin,
  cos,
  exp,
  log,
  bump,  // order k: k-th derivative of the plateau
  atan2,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::constant;
  double value = 0.0;  // constant
  Var var = Var::x;    // variable
  int order = 0;       // bump derivative order
  std::string text;    // source spelling of a constant, if any
  NodePtr a, b;
};

// Immutable expression tree. The default value is the constant 0.
class Expr {
 public:
  Expr();
  explicit Expr(NodePtr n) : node_(std::move(n)) {}

  static Expr constant(double v);
  static Expr variable(Var v);
  static Expr pi();

  const Node& node() const { return *node_; }
  const NodePtr& ptr() const { return node_; }

  bool is_constant() const { return node_->op == Op::constant; }
  bool is_constant(double v) const { return is_constant() && node_->value == v; }

  // Tree-walking evaluation; throws DomainError on a non-finite result.
  double eval(const VarValues& v) const;
  double operator()(double x, double y, double t = 0.0, double theta = 0.0) const;

 private:
  NodePtr node_;
};

// Smart constructors fold constants and drop 0/1 identities.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, const Expr& b);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr bump(const Expr& a, int order = 0);
Expr atan2(const Expr& y, const Expr& x);

inline Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
inline Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
inline Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
inline Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
inline Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }

Expr parse(std::string_view src, VarSet allowed = VarSet::standard());

Expr differentiate(const Expr& e, Var v);
Expr substitute(const Expr& e, Var v, const Expr& replacement);
bool depends_on(const Expr& e, Var v);
std::string to_string(const Expr& e);

// Straight-line register code for a batch of expressions with shared
// subexpressions evaluated once.
class Program {
 public:
  Program() = default;
  explicit Program(const std::vector<Expr>& outputs);

  size_t outputs() const { return outputs_.size(); }
  size_t instructions() const { return code_.size(); }
  // out must hold outputs() values; no finiteness check.
  void run(const VarValues& vars, double* out) const;

 private:
  struct Instr {
    Op op;
    int order;
    int a, b;
    double c;
  };
  std::vector<Instr> code_;
  std::vector<int> outputs_;
};

}  // namespace fluxlab
