#include "conekit/expr.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace conekit {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Abs, Min, Max };

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;  // Const
  int var = -1;        // Var
  int expo = 0;        // Pow
  NodeRef a, b;
};

namespace {

using Node = Expr::Node;
using NodeRef = Expr::NodeRef;

NodeRef mkConst(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

NodeRef mkVar(int i) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = i;
  return n;
}

bool isConstNode(const NodeRef& n, double* v = nullptr) {
  if (n->op != Op::Const) return false;
  if (v) *v = n->value;
  return true;
}

NodeRef mk(Op op, NodeRef a, NodeRef b = nullptr, int expo = 0) {
  double ca, cb;
  bool constA = a && isConstNode(a, &ca);
  bool constB = b && isConstNode(b, &cb);
  switch (op) {
    case Op::Add:
      if (constA && constB) return mkConst(ca + cb);
      if (constA && ca == 0.0) return b;
      if (constB && cb == 0.0) return a;
      break;
    case Op::Sub:
      if (constA && constB) return mkConst(ca - cb);
      if (constB && cb == 0.0) return a;
      break;
    case Op::Mul:
      if (constA && constB) return mkConst(ca * cb);
      if (constA && ca == 0.0) return mkConst(0.0);
      if (constB && cb == 0.0) return mkConst(0.0);
      if (constA && ca == 1.0) return b;
      if (constB && cb == 1.0) return a;
      break;
    case Op::Div:
      if (constA && constB && cb != 0.0) return mkConst(ca / cb);
      if (constA && ca == 0.0) return mkConst(0.0);
      if (constB && cb == 1.0) return a;
      break;
    case Op::Neg:
      if (constA) return mkConst(-ca);
      break;
    case Op::Pow:
      if (expo == 0) return mkConst(1.0);
      if (expo == 1) return a;
      if (constA) return mkConst(std::pow(ca, expo));
      break;
    case Op::Abs:
      if (constA) return mkConst(std::fabs(ca));
      break;
    case Op::Min:
      if (constA && constB) return mkConst(std::min(ca, cb));
      break;
    case Op::Max:
      if (constA && constB) return mkConst(std::max(ca, cb));
      break;
    default:
      break;
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->expo = expo;
  return n;
}

// --- parser ---------------------------------------------------------------

struct Parser {
  const std::string& s;
  size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  char peek() {
    skip();
    return pos < s.size() ? s[pos] : '\0';
  }

  NodeRef parseExpr() {
    NodeRef acc = parseTerm();
    while (true) {
      char c = peek();
      if (c == '+') {
        ++pos;
        acc = mk(Op::Add, acc, parseTerm());
      } else if (c == '-') {
        ++pos;
        acc = mk(Op::Sub, acc, parseTerm());
      } else {
        return acc;
      }
    }
  }

  NodeRef parseTerm() {
    NodeRef acc = parseUnary();
    while (true) {
      char c = peek();
      if (c == '*') {
        ++pos;
        acc = mk(Op::Mul, acc, parseUnary());
      } else if (c == '/') {
        ++pos;
        acc = mk(Op::Div, acc, parseUnary());
      } else {
        return acc;
      }
    }
  }

  NodeRef parseUnary() {
    char c = peek();
    if (c == '-') {
      ++pos;
      return mk(Op::Neg, parseUnary());
    }
    if (c == '+') {
      ++pos;
      return parseUnary();
    }
    return parsePower();
  }

  NodeRef parsePower() {
    NodeRef base = parsePrimary();
    if (peek() == '^') {
      ++pos;
      skip();
      bool neg = eat('-');
      NodeRef e = parsePrimary();
      double ev;
      if (!isConstNode(e, &ev)) throw std::invalid_argument("exponent must be a constant");
      if (neg) ev = -ev;
      double ri = std::round(ev);
      if (std::fabs(ev - ri) > 1e-12)
        throw std::invalid_argument("only integer exponents are supported");
      int k = static_cast<int>(ri);
      if (k < 0) return mk(Op::Div, mkConst(1.0), mk(Op::Pow, base, nullptr, -k));
      return mk(Op::Pow, base, nullptr, k);
    }
    return base;
  }

  NodeRef parsePrimary() {
    skip();
    if (pos >= s.size()) throw std::invalid_argument("unexpected end of expression");
    char c = s[pos];
    if (c == '(') {
      ++pos;
      NodeRef e = parseExpr();
      if (!eat(')')) throw std::invalid_argument("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t end;
      double v = std::stod(s.substr(pos), &end);
      pos += end;
      return mkConst(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos;
      while (pos < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
        ++pos;
      std::string name = s.substr(start, pos - start);
      if (peek() == '(') {
        ++pos;
        std::vector<NodeRef> args;
        if (peek() != ')') {
          args.push_back(parseExpr());
          while (eat(',')) args.push_back(parseExpr());
        }
        if (!eat(')')) throw std::invalid_argument("missing ')' in call");
        return makeCall(name, args);
      }
      return makeIdent(name);
    }
    throw std::invalid_argument(std::string("unexpected character '") + c + "'");
  }

  static NodeRef makeCall(const std::string& name, std::vector<NodeRef> args) {
    if (name == "abs") {
      if (args.size() != 1) throw std::invalid_argument("abs takes one argument");
      return mk(Op::Abs, args[0]);
    }
    if (name == "min" || name == "max") {
      if (args.size() < 2) throw std::invalid_argument(name + " takes >= 2 arguments");
      Op op = name == "min" ? Op::Min : Op::Max;
      NodeRef acc = args[0];
      for (size_t i = 1; i < args.size(); ++i) acc = mk(op, acc, args[i]);
      return acc;
    }
    throw std::invalid_argument("unknown function: " + name);
  }

  static NodeRef makeIdent(const std::string& name) {
    if (name == "t" || name == "x") return mkVar(0);
    if (name == "y") return mkVar(1);
    if (name == "z") return mkVar(2);
    if (name == "w") return mkVar(3);
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) return mkVar(std::stoi(name.substr(1)));
    }
    if (name == "pi") return mkConst(M_PI);
    throw std::invalid_argument("unknown identifier: " + name);
  }
};

double evalNode(const Node& n, const Vec& x) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var:
      if (n.var >= x.size()) throw std::invalid_argument("expression variable out of range");
      return x[n.var];
    case Op::Add: return evalNode(*n.a, x) + evalNode(*n.b, x);
    case Op::Sub: return evalNode(*n.a, x) - evalNode(*n.b, x);
    case Op::Mul: return evalNode(*n.a, x) * evalNode(*n.b, x);
    case Op::Div: return evalNode(*n.a, x) / evalNode(*n.b, x);
    case Op::Neg: return -evalNode(*n.a, x);
    case Op::Pow: {
      double b = evalNode(*n.a, x);
      double r = 1.0;
      for (int i = 0; i < n.expo; ++i) r *= b;
      return r;
    }
    case Op::Abs: return std::fabs(evalNode(*n.a, x));
    case Op::Min: return std::min(evalNode(*n.a, x), evalNode(*n.b, x));
    case Op::Max: return std::max(evalNode(*n.a, x), evalNode(*n.b, x));
  }
  return 0.0;
}

NodeRef diffNode(const NodeRef& n, int var) {
  switch (n->op) {
    case Op::Const: return mkConst(0.0);
    case Op::Var: return mkConst(n->var == var ? 1.0 : 0.0);
    case Op::Add: return mk(Op::Add, diffNode(n->a, var), diffNode(n->b, var));
    case Op::Sub: return mk(Op::Sub, diffNode(n->a, var), diffNode(n->b, var));
    case Op::Mul:
      return mk(Op::Add, mk(Op::Mul, diffNode(n->a, var), n->b),
                mk(Op::Mul, n->a, diffNode(n->b, var)));
    case Op::Div:
      return mk(Op::Div,
                mk(Op::Sub, mk(Op::Mul, diffNode(n->a, var), n->b),
                   mk(Op::Mul, n->a, diffNode(n->b, var))),
                mk(Op::Pow, n->b, nullptr, 2));
    case Op::Neg: return mk(Op::Neg, diffNode(n->a, var));
    case Op::Pow:
      return mk(Op::Mul, mkConst(n->expo),
                mk(Op::Mul, mk(Op::Pow, n->a, nullptr, n->expo - 1), diffNode(n->a, var)));
    default:
      throw std::domain_error("cannot differentiate a nonsmooth expression");
  }
}

bool smoothNode(const Node& n) {
  switch (n.op) {
    case Op::Abs:
    case Op::Min:
    case Op::Max:
      return false;
    case Op::Const:
    case Op::Var:
      return true;
    case Op::Pow:
    case Op::Neg:
      return smoothNode(*n.a);
    default:
      return smoothNode(*n.a) && smoothNode(*n.b);
  }
}

int maxVarNode(const Node& n) {
  switch (n.op) {
    case Op::Const: return -1;
    case Op::Var: return n.var;
    case Op::Pow:
    case Op::Neg:
    case Op::Abs:
      return maxVarNode(*n.a);
    default:
      return std::max(maxVarNode(*n.a), maxVarNode(*n.b));
  }
}

NodeRef substNode(const NodeRef& n, const std::vector<std::optional<Expr>>& rep) {
  switch (n->op) {
    case Op::Const: return n;
    case Op::Var:
      if (n->var < static_cast<int>(rep.size()) && rep[n->var]) return rep[n->var]->ref();
      return n;
    case Op::Pow: return mk(Op::Pow, substNode(n->a, rep), nullptr, n->expo);
    case Op::Neg: return mk(Op::Neg, substNode(n->a, rep));
    case Op::Abs: return mk(Op::Abs, substNode(n->a, rep));
    default:
      return mk(n->op, substNode(n->a, rep), substNode(n->b, rep), n->expo);
  }
}

std::string strNode(const Node& n) {
  switch (n.op) {
    case Op::Const: return fmt(n.value);
    case Op::Var: return "x" + std::to_string(n.var);
    case Op::Add: return "(" + strNode(*n.a) + "+" + strNode(*n.b) + ")";
    case Op::Sub: return "(" + strNode(*n.a) + "-" + strNode(*n.b) + ")";
    case Op::Mul: return "(" + strNode(*n.a) + "*" + strNode(*n.b) + ")";
    case Op::Div: return "(" + strNode(*n.a) + "/" + strNode(*n.b) + ")";
    case Op::Neg: return "(-" + strNode(*n.a) + ")";
    case Op::Pow: return strNode(*n.a) + "^" + std::to_string(n.expo);
    case Op::Abs: return "abs(" + strNode(*n.a) + ")";
    case Op::Min: return "min(" + strNode(*n.a) + "," + strNode(*n.b) + ")";
    case Op::Max: return "max(" + strNode(*n.a) + "," + strNode(*n.b) + ")";
  }
  return "?";
}

}  // namespace

Expr::Expr() : node_(mkConst(0.0)) {}

Expr Expr::constant(double c) { return Expr(mkConst(c)); }
Expr Expr::variable(int index) { return Expr(mkVar(index)); }

Expr Expr::parse(const std::string& text) {
  Parser p(text);
  NodeRef n = p.parseExpr();
  p.skip();
  if (p.pos != text.size())
    throw std::invalid_argument("trailing characters in expression: " + text);
  return Expr(n);
}

double Expr::eval(const Vec& x) const { return evalNode(*node_, x); }

Expr Expr::derivative(int var) const { return Expr(diffNode(node_, var)); }

bool Expr::isSmooth() const { return smoothNode(*node_); }

bool Expr::isConstant(double* value) const {
  return isConstNode(node_, value);
}

int Expr::maxVarIndex() const { return maxVarNode(*node_); }

bool Expr::isAffine() const {
  if (!isSmooth()) return false;
  int mv = maxVarIndex();
  for (int i = 0; i <= mv; ++i) {
    Expr d = derivative(i);
    if (!d.isConstant()) return false;
  }
  return true;
}

Expr Expr::substitute(const std::vector<std::optional<Expr>>& replacement) const {
  return Expr(substNode(node_, replacement));
}

Expr Expr::shiftedVars(const Vec& delta) const {
  std::vector<std::optional<Expr>> rep(delta.size());
  for (Eigen::Index i = 0; i < delta.size(); ++i)
    rep[i] = Expr::variable(static_cast<int>(i)) + Expr::constant(delta[i]);
  return substitute(rep);
}

Expr Expr::remappedVars(const std::vector<int>& newIndex) const {
  std::vector<std::optional<Expr>> rep(newIndex.size());
  for (size_t i = 0; i < newIndex.size(); ++i) rep[i] = Expr::variable(newIndex[i]);
  return substitute(rep);
}

Expr Expr::operator+(const Expr& o) const { return Expr(mk(Op::Add, node_, o.node_)); }
Expr Expr::operator-(const Expr& o) const { return Expr(mk(Op::Sub, node_, o.node_)); }
Expr Expr::operator*(const Expr& o) const { return Expr(mk(Op::Mul, node_, o.node_)); }
Expr Expr::operator-() const { return Expr(mk(Op::Neg, node_)); }

std::string Expr::str() const { return strNode(*node_); }

// --- piecewise lowering -------------------------------------------------------

namespace {

// Rewrites so that Min/Max appear only as the outermost combinators.
NodeRef pushDown(const NodeRef& n);

NodeRef distribute(Op op, const NodeRef& a, const NodeRef& b) {
  // a or b may be Min/Max at top after pushing.
  if (a->op == Op::Min || a->op == Op::Max) {
    Op top = a->op;
    if (op == Op::Sub) {
      // (min/max(u,v)) - b
      return mk(top, distribute(Op::Sub, a->a, b), distribute(Op::Sub, a->b, b));
    }
    return mk(top, distribute(op, a->a, b), distribute(op, a->b, b));
  }
  if (b->op == Op::Min || b->op == Op::Max) {
    Op top = b->op;
    if (op == Op::Sub) {
      // a - min(u,v) = max(a-u, a-v)
      Op flipped = top == Op::Min ? Op::Max : Op::Min;
      return mk(flipped, distribute(Op::Sub, a, b->a), distribute(Op::Sub, a, b->b));
    }
    return mk(top, distribute(op, a, b->a), distribute(op, a, b->b));
  }
  return mk(op, a, b);
}

NodeRef scaleNode(const NodeRef& n, double c) {
  if (n->op == Op::Min || n->op == Op::Max) {
    Op top = n->op;
    if (c < 0) top = top == Op::Min ? Op::Max : Op::Min;
    return mk(top, scaleNode(n->a, c), scaleNode(n->b, c));
  }
  return mk(Op::Mul, mkConst(c), n);
}

NodeRef pushDown(const NodeRef& n) {
  switch (n->op) {
    case Op::Const:
    case Op::Var:
      return n;
    case Op::Abs: {
      NodeRef a = pushDown(n->a);
      if (a->op == Op::Min || a->op == Op::Max)
        throw std::domain_error("abs of a piecewise expression is not supported");
      return mk(Op::Max, a, mk(Op::Neg, a));
    }
    case Op::Neg: {
      NodeRef a = pushDown(n->a);
      if (a->op == Op::Min || a->op == Op::Max) return scaleNode(a, -1.0);
      return mk(Op::Neg, a);
    }
    case Op::Add:
    case Op::Sub:
      return distribute(n->op, pushDown(n->a), pushDown(n->b));
    case Op::Mul: {
      NodeRef a = pushDown(n->a);
      NodeRef b = pushDown(n->b);
      double c;
      bool pwA = a->op == Op::Min || a->op == Op::Max;
      bool pwB = b->op == Op::Min || b->op == Op::Max;
      if (!pwA && !pwB) return mk(Op::Mul, a, b);
      if (pwA && isConstNode(b, &c)) return scaleNode(a, c);
      if (pwB && isConstNode(a, &c)) return scaleNode(b, c);
      throw std::domain_error("piecewise factor inside a product is not supported");
    }
    case Op::Div: {
      NodeRef a = pushDown(n->a);
      NodeRef b = pushDown(n->b);
      double c;
      bool pwA = a->op == Op::Min || a->op == Op::Max;
      bool pwB = b->op == Op::Min || b->op == Op::Max;
      if (pwB) throw std::domain_error("piecewise denominator is not supported");
      if (pwA) {
        if (!isConstNode(b, &c) || c == 0.0)
          throw std::domain_error("piecewise numerator over non-constant is not supported");
        return scaleNode(a, 1.0 / c);
      }
      return mk(Op::Div, a, b);
    }
    case Op::Pow: {
      NodeRef a = pushDown(n->a);
      if (a->op == Op::Min || a->op == Op::Max)
        throw std::domain_error("piecewise base of a power is not supported");
      return mk(Op::Pow, a, nullptr, n->expo);
    }
    case Op::Min:
    case Op::Max:
      return mk(n->op, pushDown(n->a), pushDown(n->b));
  }
  return n;
}

using Branch = std::vector<PieceConstraint>;

std::vector<Branch> crossJoin(const std::vector<Branch>& lhs, const std::vector<Branch>& rhs) {
  std::vector<Branch> out;
  for (const auto& a : lhs)
    for (const auto& b : rhs) {
      Branch c = a;
      c.insert(c.end(), b.begin(), b.end());
      out.push_back(std::move(c));
    }
  return out;
}

std::vector<Branch> lowerLe(const NodeRef& n);
std::vector<Branch> lowerEq(const NodeRef& n);

std::vector<Branch> lowerLe(const NodeRef& n) {
  if (n->op == Op::Max) return crossJoin(lowerLe(n->a), lowerLe(n->b));
  if (n->op == Op::Min) {
    auto a = lowerLe(n->a);
    auto b = lowerLe(n->b);
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }
  return {{PieceConstraint{Expr(n), false}}};
}

std::vector<Branch> lowerEq(const NodeRef& n) {
  if (n->op == Op::Max) {
    // max(a,b)=0  <=>  (a=0 and b<=0) or (b=0 and a<=0)
    auto left = crossJoin(lowerEq(n->a), lowerLe(n->b));
    auto right = crossJoin(lowerEq(n->b), lowerLe(n->a));
    left.insert(left.end(), right.begin(), right.end());
    return left;
  }
  if (n->op == Op::Min) {
    // min(a,b)=0  <=>  (a=0 and -b<=0) or (b=0 and -a<=0)
    auto negLe = [](const NodeRef& m) { return lowerLe(scaleNode(m, -1.0)); };
    auto left = crossJoin(lowerEq(n->a), negLe(n->b));
    auto right = crossJoin(lowerEq(n->b), negLe(n->a));
    left.insert(left.end(), right.begin(), right.end());
    return left;
  }
  return {{PieceConstraint{Expr(n), true}}};
}

}  // namespace

std::vector<std::vector<PieceConstraint>> lowerPiecewise(const Expr& g, bool eq) {
  NodeRef pushed = pushDown(g.ref());
  return eq ? lowerEq(pushed) : lowerLe(pushed);
}

// --- ExprVec ----------------------------------------------------------------

Vec ExprVec::eval(const Vec& x) const {
  Vec y(outDim());
  for (int c = 0; c < outDim(); ++c) y[c] = comps[c].eval(x);
  return y;
}

Mat ExprVec::jacobian(const Vec& x) const {
  Mat J(outDim(), inDim);
  for (int c = 0; c < outDim(); ++c)
    for (int i = 0; i < inDim; ++i) J(c, i) = comps[c].derivative(i).eval(x);
  return J;
}

Mat ExprVec::hessian(int c, const Vec& x) const {
  Mat H(inDim, inDim);
  for (int i = 0; i < inDim; ++i) {
    Expr di = comps[c].derivative(i);
    for (int j = 0; j < inDim; ++j) H(i, j) = di.derivative(j).eval(x);
  }
  return H;
}

Vec ExprVec::hessianForm(const Vec& x, const Vec& d1, const Vec& d2) const {
  Vec out(outDim());
  for (int c = 0; c < outDim(); ++c) out[c] = d1.dot(hessian(c, x) * d2);
  return out;
}

bool ExprVec::isSmooth() const {
  for (const auto& c : comps)
    if (!c.isSmooth()) return false;
  return true;
}

bool ExprVec::isAffine() const {
  for (const auto& c : comps)
    if (!c.isAffine()) return false;
  return true;
}

void ExprVec::affineParts(Mat* A, Vec* b) const {
  if (!isAffine()) throw std::domain_error("affineParts on a nonlinear map");
  Vec zero = Vec::Zero(inDim);
  *b = eval(zero);
  *A = jacobian(zero);
}

ExprVec ExprVec::compose(const ExprVec& g) const {
  if (g.outDim() != inDim) throw std::invalid_argument("compose: dimension mismatch");
  std::vector<std::optional<Expr>> rep(inDim);
  for (int i = 0; i < inDim; ++i) rep[i] = g.comps[i];
  ExprVec out;
  out.inDim = g.inDim;
  for (const auto& c : comps) out.comps.push_back(c.substitute(rep));
  return out;
}

ExprVec ExprVec::shiftedVars(const Vec& delta) const {
  ExprVec out;
  out.inDim = inDim;
  for (const auto& c : comps) out.comps.push_back(c.shiftedVars(delta));
  return out;
}

std::string ExprVec::str() const {
  std::string s;
  for (size_t i = 0; i < comps.size(); ++i) {
    if (i) s += ", ";
    s += comps[i].str();
  }
  return s;
}

ExprVec ExprVec::parse(const std::string& text, int inDim) {
  ExprVec out;
  out.inDim = inDim;
  // split on top-level commas
  int depth = 0;
  std::string cur;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.comps.push_back(Expr::parse(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.comps.push_back(Expr::parse(cur));
  if (out.comps.empty()) throw std::invalid_argument("empty expression list");
  for (const auto& c : out.comps)
    if (c.maxVarIndex() >= inDim)
      throw std::invalid_argument("expression uses variable beyond declared dimension: " + text);
  return out;
}

ExprVec ExprVec::identity(int n) {
  ExprVec out;
  out.inDim = n;
  for (int i = 0; i < n; ++i) out.comps.push_back(Expr::variable(i));
  return out;
}

}  // namespace conekit
