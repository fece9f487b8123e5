/*
 * Copyright 2026 The CDP Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cdp/expr.h"

#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <utility>

namespace cdp {
namespace expr {
namespace {

constexpr std::array<std::pair<std::string_view, Function>, 9> kFunctions = {{
    {"sin", Function::kSin},
    {"cos", Function::kCos},
    {"exp", Function::kExp},
    {"log", Function::kLog},
    {"abs", Function::kAbs},
    {"sqrt", Function::kSqrt},
    {"min", Function::kMin},
    {"max", Function::kMax},
    {"pow", Function::kPow},
}};

double Checked(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw EvalError(std::string("non-finite result in ") + what);
  }
  return value;
}

double ApplyBinary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::kAdd:
      return Checked(a + b, "addition");
    case BinaryOp::kSub:
      return Checked(a - b, "subtraction");
    case BinaryOp::kMul:
      return Checked(a * b, "multiplication");
    case BinaryOp::kDiv:
      if (b == 0.0) throw EvalError("division by zero");
      return Checked(a / b, "division");
    case BinaryOp::kPow:
      return Checked(std::pow(a, b), "power");
  }
  return 0.0;
}

double ApplyUnary(Function function, double x) {
  switch (function) {
    case Function::kSin:
      return Checked(std::sin(x), "sin");
    case Function::kCos:
      return Checked(std::cos(x), "cos");
    case Function::kExp:
      return Checked(std::exp(x), "exp");
    case Function::kLog:
      if (x <= 0.0) throw EvalError("log of nonpositive value");
      return Checked(std::log(x), "log");
    case Function::kAbs:
      return std::fabs(x);
    case Function::kSqrt:
      if (x < 0.0) throw EvalError("sqrt of negative value");
      return std::sqrt(x);
    default:
      break;
  }
  return 0.0;
}

double ApplyCall(Function function, double a, double b) {
  switch (function) {
    case Function::kMin:
      return std::fmin(a, b);
    case Function::kMax:
      return std::fmax(a, b);
    case Function::kPow:
      return ApplyBinary(BinaryOp::kPow, a, b);
    default:
      return ApplyUnary(function, a);
  }
}

bool IsIdentStart(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
bool IsIdentChar(char c) { return IsIdentStart(c) || (c >= '0' && c <= '9'); }
bool IsDigit(char c) { return c >= '0' && c <= '9'; }

class Parser {
 public:
  explicit Parser(std::string_view source) : src_(source) {}

  Expression ParseAll() {
    SkipSpace();
    if (pos_ >= src_.size()) Fail("empty expression");
    Expression e = ParseExpr();
    SkipSpace();
    if (pos_ < src_.size()) {
      Fail(std::string("unexpected '") + src_[pos_] + "'");
    }
    return e;
  }

 private:
  [[noreturn]] void Fail(const std::string& message) const {
    throw ParseError(message, pos_);
  }

  void SkipSpace() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
            src_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool Accept(char c) {
    SkipSpace();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expression ParseExpr() {
    Expression lhs = ParseTerm();
    while (true) {
      if (Accept('+')) {
        lhs = Expression::Binary(BinaryOp::kAdd, lhs, ParseTerm());
      } else if (Accept('-')) {
        lhs = Expression::Binary(BinaryOp::kSub, lhs, ParseTerm());
      } else {
        return lhs;
      }
    }
  }

  Expression ParseTerm() {
    Expression lhs = ParseUnary();
    while (true) {
      if (Accept('*')) {
        lhs = Expression::Binary(BinaryOp::kMul, lhs, ParseUnary());
      } else if (Accept('/')) {
        lhs = Expression::Binary(BinaryOp::kDiv, lhs, ParseUnary());
      } else {
        return lhs;
      }
    }
  }

  Expression ParseUnary() {
    if (Accept('-')) {
      SkipSpace();
      // Only a bare literal folds into a negative constant; "-(2)" stays a
      // negation so printed trees re-parse unchanged.
      const bool literal =
          pos_ < src_.size() &&
          (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
           src_[pos_] == '.');
      Expression operand = ParseUnary();
      const auto* c = std::get_if<ConstantNode>(&operand.node().value);
      if (literal && c != nullptr) {
        return Expression::Constant(-c->value);
      }
      return Expression::Negate(operand);
    }
    return ParsePower();
  }

  Expression ParsePower() {
    Expression base = ParsePrimary();
    if (Accept('^')) {
      return Expression::Binary(BinaryOp::kPow, base, ParseUnary());
    }
    return base;
  }

  Expression ParsePrimary() {
    SkipSpace();
    if (pos_ >= src_.size()) Fail("unexpected end of expression");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expression inner = ParseExpr();
      if (!Accept(')')) Fail("expected ')'");
      return inner;
    }
    if (IsDigit(c) || c == '.') return ParseNumber();
    if (IsIdentStart(c)) return ParseIdentifier();
    Fail(std::string("unexpected '") + c + "'");
  }

  Expression ParseNumber() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && IsDigit(src_[pos_])) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && IsDigit(src_[pos_])) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && IsDigit(src_[p])) {
        while (p < src_.size() && IsDigit(src_[p])) ++p;
        pos_ = p;
      }
    }
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_ ||
        !std::isfinite(value)) {
      pos_ = start;
      Fail("malformed number");
    }
    return Expression::Constant(value);
  }

  Expression ParseIdentifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && IsIdentChar(src_[pos_])) ++pos_;
    std::string name(src_.substr(start, pos_ - start));
    SkipSpace();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      const std::optional<Function> function = FunctionFromName(name);
      if (!function) {
        pos_ = start;
        Fail("unknown function '" + name + "'");
      }
      ++pos_;
      std::vector<Expression> args;
      if (!Accept(')')) {
        do {
          args.push_back(ParseExpr());
        } while (Accept(','));
        if (!Accept(')')) Fail("expected ')' or ','");
      }
      const int arity = FunctionArity(*function);
      if (static_cast<int>(args.size()) != arity) {
        pos_ = start;
        Fail("function '" + name + "' takes " + std::to_string(arity) +
             " argument(s), got " + std::to_string(args.size()));
      }
      return Expression::Call(*function, std::move(args));
    }
    return Expression::Variable(std::move(name));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

// Printing precedence levels.
constexpr int kPrecAdd = 1;
constexpr int kPrecMul = 2;
constexpr int kPrecUnary = 3;
constexpr int kPrecAtom = 5;

int Precedence(const Expression& e) {
  const Node& n = e.node();
  if (const auto* c = std::get_if<ConstantNode>(&n.value)) {
    return std::signbit(c->value) ? kPrecUnary : kPrecAtom;
  }
  if (std::holds_alternative<NegateNode>(n.value)) return kPrecUnary;
  if (const auto* b = std::get_if<BinaryNode>(&n.value)) {
    switch (b->op) {
      case BinaryOp::kAdd:
      case BinaryOp::kSub:
        return kPrecAdd;
      case BinaryOp::kMul:
      case BinaryOp::kDiv:
        return kPrecMul;
      case BinaryOp::kPow:
        return 4;
    }
  }
  return kPrecAtom;
}

void AppendNumber(double value, std::string& out) {
  std::array<char, 64> buf;
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  out.append(buf.data(), result.ptr);
}

void Print(const Expression& e, std::string& out);

void PrintAtLeast(const Expression& e, int min_prec, std::string& out) {
  if (Precedence(e) < min_prec) {
    out += '(';
    Print(e, out);
    out += ')';
  } else {
    Print(e, out);
  }
}

void Print(const Expression& e, std::string& out) {
  const Node& n = e.node();
  if (const auto* c = std::get_if<ConstantNode>(&n.value)) {
    AppendNumber(c->value, out);
  } else if (const auto* v = std::get_if<VariableNode>(&n.value)) {
    out += v->name;
  } else if (const auto* neg = std::get_if<NegateNode>(&n.value)) {
    out += '-';
    // Printing -c for a constant operand would re-parse as one constant.
    if (std::holds_alternative<ConstantNode>(neg->operand.node().value)) {
      out += '(';
      Print(neg->operand, out);
      out += ')';
    } else {
      PrintAtLeast(neg->operand, kPrecUnary, out);
    }
  } else if (const auto* b = std::get_if<BinaryNode>(&n.value)) {
    switch (b->op) {
      case BinaryOp::kAdd:
      case BinaryOp::kSub:
        PrintAtLeast(b->lhs, kPrecAdd, out);
        out += b->op == BinaryOp::kAdd ? " + " : " - ";
        PrintAtLeast(b->rhs, kPrecMul, out);
        break;
      case BinaryOp::kMul:
      case BinaryOp::kDiv:
        PrintAtLeast(b->lhs, kPrecMul, out);
        out += b->op == BinaryOp::kMul ? "*" : "/";
        PrintAtLeast(b->rhs, kPrecUnary, out);
        break;
      case BinaryOp::kPow:
        PrintAtLeast(b->lhs, kPrecAtom, out);
        out += '^';
        PrintAtLeast(b->rhs, kPrecUnary, out);
        break;
    }
  } else if (const auto* call = std::get_if<CallNode>(&n.value)) {
    out += FunctionName(call->function);
    out += '(';
    for (std::size_t i = 0; i < call->args.size(); ++i) {
      if (i > 0) out += ", ";
      Print(call->args[i], out);
    }
    out += ')';
  }
}

void CollectVariables(const Expression& e, std::set<std::string>& out) {
  const Node& n = e.node();
  if (const auto* v = std::get_if<VariableNode>(&n.value)) {
    out.insert(v->name);
  } else if (const auto* neg = std::get_if<NegateNode>(&n.value)) {
    CollectVariables(neg->operand, out);
  } else if (const auto* b = std::get_if<BinaryNode>(&n.value)) {
    CollectVariables(b->lhs, out);
    CollectVariables(b->rhs, out);
  } else if (const auto* call = std::get_if<CallNode>(&n.value)) {
    for (const Expression& arg : call->args) CollectVariables(arg, out);
  }
}

double Walk(const Expression& e,
            const std::map<std::string, double, std::less<>>& env) {
  const Node& n = e.node();
  if (const auto* c = std::get_if<ConstantNode>(&n.value)) return c->value;
  if (const auto* v = std::get_if<VariableNode>(&n.value)) {
    const auto it = env.find(v->name);
    if (it == env.end()) throw EvalError("unbound variable '" + v->name + "'");
    return it->second;
  }
  if (const auto* neg = std::get_if<NegateNode>(&n.value)) {
    return -Walk(neg->operand, env);
  }
  if (const auto* b = std::get_if<BinaryNode>(&n.value)) {
    const double lhs = Walk(b->lhs, env);
    return ApplyBinary(b->op, lhs, Walk(b->rhs, env));
  }
  const auto& call = std::get<CallNode>(n.value);
  const double a = Walk(call.args[0], env);
  const double b = call.args.size() > 1 ? Walk(call.args[1], env) : 0.0;
  return ApplyCall(call.function, a, b);
}

}  // namespace

std::string_view FunctionName(Function function) {
  for (const auto& [name, f] : kFunctions) {
    if (f == function) return name;
  }
  return "?";
}

int FunctionArity(Function function) {
  switch (function) {
    case Function::kMin:
    case Function::kMax:
    case Function::kPow:
      return 2;
    default:
      return 1;
  }
}

std::optional<Function> FunctionFromName(std::string_view name) {
  for (const auto& [n, f] : kFunctions) {
    if (n == name) return f;
  }
  return std::nullopt;
}

Expression::Expression() : Expression(Constant(0.0)) {}

Expression Expression::Constant(double value) {
  return Expression(std::make_shared<const Node>(Node{ConstantNode{value}}));
}

Expression Expression::Variable(std::string name) {
  return Expression(
      std::make_shared<const Node>(Node{VariableNode{std::move(name)}}));
}

Expression Expression::Negate(Expression operand) {
  return Expression(
      std::make_shared<const Node>(Node{NegateNode{std::move(operand)}}));
}

Expression Expression::Binary(BinaryOp op, Expression lhs, Expression rhs) {
  return Expression(std::make_shared<const Node>(
      Node{BinaryNode{op, std::move(lhs), std::move(rhs)}}));
}

Expression Expression::Call(Function function, std::vector<Expression> args) {
  return Expression(std::make_shared<const Node>(
      Node{CallNode{function, std::move(args)}}));
}

bool operator==(const Expression& a, const Expression& b) {
  if (a.node_ == b.node_) return true;
  const Node& x = a.node();
  const Node& y = b.node();
  if (x.value.index() != y.value.index()) return false;
  if (const auto* c = std::get_if<ConstantNode>(&x.value)) {
    const double other = std::get<ConstantNode>(y.value).value;
    // Bitwise comparison so that -0.0 and 0.0 are distinct trees.
    return c->value == other && std::signbit(c->value) == std::signbit(other);
  }
  if (const auto* v = std::get_if<VariableNode>(&x.value)) {
    return v->name == std::get<VariableNode>(y.value).name;
  }
  if (const auto* neg = std::get_if<NegateNode>(&x.value)) {
    return neg->operand == std::get<NegateNode>(y.value).operand;
  }
  if (const auto* bx = std::get_if<BinaryNode>(&x.value)) {
    const auto& by = std::get<BinaryNode>(y.value);
    return bx->op == by.op && bx->lhs == by.lhs && bx->rhs == by.rhs;
  }
  const auto& cx = std::get<CallNode>(x.value);
  const auto& cy = std::get<CallNode>(y.value);
  return cx.function == cy.function && cx.args == cy.args;
}

Expression Parse(std::string_view source) {
  return Parser(source).ParseAll();
}

std::string ToString(const Expression& expression) {
  std::string out;
  Print(expression, out);
  return out;
}

double Evaluate(const Expression& expression,
                const std::map<std::string, double, std::less<>>& env) {
  return Walk(expression, env);
}

std::set<std::string> FreeVariables(const Expression& expression) {
  std::set<std::string> out;
  CollectVariables(expression, out);
  return out;
}

Expression Substitute(
    const Expression& expression,
    const std::map<std::string, Expression, std::less<>>& replacements) {
  const Node& n = expression.node();
  if (const auto* v = std::get_if<VariableNode>(&n.value)) {
    const auto it = replacements.find(v->name);
    return it == replacements.end() ? expression : it->second;
  }
  if (const auto* neg = std::get_if<NegateNode>(&n.value)) {
    return Expression::Negate(Substitute(neg->operand, replacements));
  }
  if (const auto* b = std::get_if<BinaryNode>(&n.value)) {
    return Expression::Binary(b->op, Substitute(b->lhs, replacements),
                              Substitute(b->rhs, replacements));
  }
  if (const auto* call = std::get_if<CallNode>(&n.value)) {
    std::vector<Expression> args;
    args.reserve(call->args.size());
    for (const Expression& arg : call->args) {
      args.push_back(Substitute(arg, replacements));
    }
    return Expression::Call(call->function, std::move(args));
  }
  return expression;
}

Program Program::Compile(const Expression& expression,
                         const Resolver& resolve) {
  Program program;
  program.Emit(expression, resolve, 0);
  return program;
}

void Program::Emit(const Expression& e, const Resolver& resolve, int depth) {
  // `depth` is the number of values already on the stack when `e` starts.
  const auto push = [&](Instr instr, std::size_t height) {
    code_.push_back(instr);
    max_stack_ = std::max(max_stack_, height);
  };
  const std::size_t base = static_cast<std::size_t>(depth);
  const Node& n = e.node();
  if (const auto* c = std::get_if<ConstantNode>(&n.value)) {
    push({Op::kConst, {}, c->value}, base + 1);
  } else if (const auto* v = std::get_if<VariableNode>(&n.value)) {
    const std::optional<Slot> slot = resolve(v->name);
    if (!slot) throw EvalError("unbound variable '" + v->name + "'");
    push({Op::kLoad, *slot, 0.0}, base + 1);
  } else if (const auto* neg = std::get_if<NegateNode>(&n.value)) {
    Emit(neg->operand, resolve, depth);
    push({Op::kNeg, {}, 0.0}, base + 1);
  } else if (const auto* b = std::get_if<BinaryNode>(&n.value)) {
    Emit(b->lhs, resolve, depth);
    Emit(b->rhs, resolve, depth + 1);
    static constexpr std::array<Op, 5> kOps = {Op::kAdd, Op::kSub, Op::kMul,
                                               Op::kDiv, Op::kPow};
    push({kOps[static_cast<int>(b->op)], {}, 0.0}, base + 1);
  } else {
    const auto& call = std::get<CallNode>(n.value);
    for (std::size_t i = 0; i < call.args.size(); ++i) {
      Emit(call.args[i], resolve, depth + static_cast<int>(i));
    }
    static constexpr std::array<Op, 9> kCalls = {
        Op::kSin, Op::kCos, Op::kExp, Op::kLog, Op::kAbs,
        Op::kSqrt, Op::kMin, Op::kMax, Op::kPow};
    push({kCalls[static_cast<int>(call.function)], {}, 0.0}, base + 1);
  }
}

double Program::Run(std::span<const double> bank0,
                    std::span<const double> bank1) const {
  constexpr std::size_t kInline = 32;
  std::array<double, kInline> inline_stack;
  std::vector<double> heap_stack;
  double* stack = inline_stack.data();
  if (max_stack_ > kInline) {
    heap_stack.resize(max_stack_);
    stack = heap_stack.data();
  }
  std::size_t top = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::kConst:
        stack[top++] = in.value;
        break;
      case Op::kLoad:
        stack[top++] = in.slot.bank == 0 ? bank0[in.slot.index]
                                         : bank1[in.slot.index];
        break;
      case Op::kNeg:
        stack[top - 1] = -stack[top - 1];
        break;
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul:
      case Op::kDiv:
      case Op::kPow: {
        const double rhs = stack[--top];
        const auto op = static_cast<BinaryOp>(static_cast<int>(in.op) -
                                              static_cast<int>(Op::kAdd));
        stack[top - 1] = ApplyBinary(op, stack[top - 1], rhs);
        break;
      }
      case Op::kMin:
      case Op::kMax: {
        const double rhs = stack[--top];
        stack[top - 1] =
            ApplyCall(in.op == Op::kMin ? Function::kMin : Function::kMax,
                      stack[top - 1], rhs);
        break;
      }
      default: {
        const auto function = static_cast<Function>(
            static_cast<int>(in.op) - static_cast<int>(Op::kSin));
        stack[top - 1] = ApplyUnary(function, stack[top - 1]);
        break;
      }
    }
  }
  return top == 0 ? 0.0 : stack[0];
}

}  // namespace expr
}  // namespace cdp
