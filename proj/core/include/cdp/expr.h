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

// Arithmetic expression language used for the deterministic part of
// structural equations.
//
// Grammar (precedence from loosest to tightest):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | identifier | identifier '(' args ')' | '(' expr ')'
//
// so "-X^2" is -(X^2) and "2^3^2" is 2^(3^2). A unary minus applied directly
// to a numeric literal is folded into a negative constant, which keeps the
// printed form of every parsed tree re-parseable to the same tree.
//
// Expressions are immutable and share structure; evaluating one expression
// from many threads at once is safe.

#ifndef CDP_EXPR_H_
#define CDP_EXPR_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cdp/error.h"

namespace cdp::expr {

enum class BinaryOp { kAdd, kSub, kMul, kDiv, kPow };

enum class Function { kSin, kCos, kExp, kLog, kAbs, kSqrt, kMin, kMax, kPow };

std::string_view FunctionName(Function function);
int FunctionArity(Function function);
std::optional<Function> FunctionFromName(std::string_view name);

// Raised for unbound variables and domain violations (log of a nonpositive
// value, division by zero, any non-finite intermediate result).
class EvalError : public ComputeError {
 public:
  explicit EvalError(const std::string& message) : ComputeError(message) {}
};

struct Node;

class Expression {
 public:
  // The constant 0.
  Expression();

  static Expression Constant(double value);
  static Expression Variable(std::string name);
  static Expression Negate(Expression operand);
  static Expression Binary(BinaryOp op, Expression lhs, Expression rhs);
  static Expression Call(Function function, std::vector<Expression> args);

  const Node& node() const { return *node_; }

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  explicit Expression(std::shared_ptr<const Node> node)
      : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

struct ConstantNode {
  double value;
};
struct VariableNode {
  std::string name;
};
struct NegateNode {
  Expression operand;
};
struct BinaryNode {
  BinaryOp op;
  Expression lhs;
  Expression rhs;
};
struct CallNode {
  Function function;
  std::vector<Expression> args;
};

struct Node {
  std::variant<ConstantNode, VariableNode, NegateNode, BinaryNode, CallNode>
      value;
};

// Throws ParseError (with the byte offset of the problem) on syntax errors,
// unknown function names and wrong arity.
Expression Parse(std::string_view source);

// Canonical text with minimal parentheses. Parse(ToString(e)) == e for every
// tree Parse can produce. Constants print in shortest round-trip form.
std::string ToString(const Expression& expression);

double Evaluate(const Expression& expression,
                const std::map<std::string, double, std::less<>>& env);

std::set<std::string> FreeVariables(const Expression& expression);

// Returns `expression` with every variable named in `replacements` swapped
// for the mapped expression.
Expression Substitute(const Expression& expression,
                      const std::map<std::string, Expression, std::less<>>&
                          replacements);

// Where a compiled variable reads its value from: `bank` selects one of the
// spans passed to Program::Run, `index` the position within it.
struct Slot {
  std::uint32_t bank = 0;
  std::uint32_t index = 0;
};

// Postfix form of an Expression with variables resolved to slots. Used on hot
// paths (sampling, counterfactual propagation, closed-form prediction).
class Program {
 public:
  using Resolver = std::function<std::optional<Slot>(std::string_view)>;

  Program() = default;

  // Throws EvalError if `resolve` returns nullopt for a free variable.
  static Program Compile(const Expression& expression,
                         const Resolver& resolve);

  double Run(std::span<const double> bank0,
             std::span<const double> bank1 = {}) const;

  bool empty() const { return code_.empty(); }

 private:
  enum class Op : std::uint8_t {
    kConst,
    kLoad,
    kNeg,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kPow,
    kSin,
    kCos,
    kExp,
    kLog,
    kAbs,
    kSqrt,
    kMin,
    kMax,
  };
  struct Instr {
    Op op;
    Slot slot;
    double value = 0.0;
  };

  void Emit(const Expression& expression, const Resolver& resolve, int depth);

  std::vector<Instr> code_;
  std::size_t max_stack_ = 0;
};

}  // namespace cdp::expr

#endif  // CDP_EXPR_H_
