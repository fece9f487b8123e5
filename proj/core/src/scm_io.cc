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


#include "cdp/scm_io.h"

#include <cctype>
#include <set>
#include <vector>

#include "cdp/dataset.h"
#include "cdp/error.h"
#include "cdp/expr.h"

namespace cdp {
namespace {

struct Token {
  enum class Kind { kIdent, kNumber, kString, kPunct, kEnd };
  Kind kind;
  std::string text;
  std::size_t line;
  std::size_t offset;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> Run() {
    std::vector<Token> tokens;
    while (true) {
      SkipSpace();
      if (pos_ >= text_.size()) {
        tokens.push_back({Token::Kind::kEnd, "", line_, pos_});
        return tokens;
      }
      const char c = text_[pos_];
      const std::size_t start = pos_;
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_')) {
          ++pos_;
        }
        tokens.push_back({Token::Kind::kIdent,
                          std::string(text_.substr(start, pos_ - start)), line_,
                          start});
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' ||
                 c == '+' || c == '.') {
        ++pos_;
        while (pos_ < text_.size()) {
          const char d = text_[pos_];
          const bool exponent_sign =
              (d == '-' || d == '+') &&
              (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E');
          if (std::isalnum(static_cast<unsigned char>(d)) || d == '.' ||
              exponent_sign) {
            ++pos_;
          } else {
            break;
          }
        }
        tokens.push_back({Token::Kind::kNumber,
                          std::string(text_.substr(start, pos_ - start)), line_,
                          start});
      } else if (c == '"') {
        ++pos_;
        while (pos_ < text_.size() && text_[pos_] != '"' &&
               text_[pos_] != '\n') {
          ++pos_;
        }
        if (pos_ >= text_.size() || text_[pos_] != '"') {
          throw ParseError("unterminated string", start, line_);
        }
        tokens.push_back({Token::Kind::kString,
                          std::string(text_.substr(start + 1, pos_ - start - 1)),
                          line_, start + 1});
        ++pos_;
      } else if (std::string_view("{}[]();=,").find(c) !=
                 std::string_view::npos) {
        ++pos_;
        tokens.push_back({Token::Kind::kPunct, std::string(1, c), line_, start});
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", start,
                         line_);
      }
    }
  }

 private:
  void SkipSpace() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

class SpecParser {
 public:
  explicit SpecParser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  ScmSpec Parse() {
    ScmSpec spec;
    ExpectWord("scm");
    spec.name = ExpectIdent("model name");
    std::set<std::string> seen;
    while (Peek().kind != Token::Kind::kEnd) {
      ExpectWord("var");
      VariableSpec var;
      const Token& name_token = Peek();
      var.name = ExpectIdent("variable name");
      if (!seen.insert(var.name).second) {
        Fail(name_token, "duplicate variable '" + var.name + "'");
      }
      ParseBlock(var.mechanism);
      spec.variables.push_back(std::move(var));
    }
    return spec;
  }

 private:
  const Token& Peek() const { return tokens_[pos_]; }
  const Token& Next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void Fail(const Token& at, const std::string& message) {
    throw ParseError(message, at.offset, at.line);
  }

  std::string Describe(const Token& t) {
    return t.kind == Token::Kind::kEnd ? "end of file" : "'" + t.text + "'";
  }

  void ExpectWord(std::string_view word) {
    const Token& t = Next();
    if (t.kind != Token::Kind::kIdent || t.text != word) {
      Fail(t, "expected '" + std::string(word) + "', got " + Describe(t));
    }
  }

  void ExpectPunct(char c) {
    const Token& t = Next();
    if (t.kind != Token::Kind::kPunct || t.text[0] != c) {
      Fail(t, std::string("expected '") + c + "', got " + Describe(t));
    }
  }

  bool AcceptPunct(char c) {
    if (Peek().kind == Token::Kind::kPunct && Peek().text[0] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string ExpectIdent(std::string_view what) {
    const Token& t = Next();
    if (t.kind != Token::Kind::kIdent) {
      Fail(t, "expected " + std::string(what) + ", got " + Describe(t));
    }
    return t.text;
  }

  double ExpectNumber() {
    const Token& t = Next();
    const auto v = t.kind == Token::Kind::kNumber ? ParseDouble(t.text)
                                                  : std::nullopt;
    if (!v) Fail(t, "expected a number, got " + Describe(t));
    return *v;
  }

  std::vector<std::string> NameList() {
    std::vector<std::string> names;
    ExpectPunct('[');
    if (AcceptPunct(']')) return names;
    do {
      names.push_back(ExpectIdent("variable name"));
    } while (AcceptPunct(','));
    ExpectPunct(']');
    return names;
  }

  NoiseSpec Noise() {
    const Token& kind_token = Peek();
    const std::string kind = ExpectIdent("noise kind");
    ExpectPunct('(');
    const double a = ExpectNumber();
    NoiseSpec noise;
    if (kind == "point") {
      noise = NoiseSpec::PointMass(a);
    } else if (kind == "normal" || kind == "uniform") {
      ExpectPunct(',');
      const double b = ExpectNumber();
      noise = kind == "normal" ? NoiseSpec::Normal(a, b)
                               : NoiseSpec::Uniform(a, b);
    } else {
      Fail(kind_token, "unknown noise kind '" + kind +
                           "' (expected normal, uniform or point)");
    }
    ExpectPunct(')');
    return noise;
  }

  void ParseBlock(Mechanism& m) {
    ExpectPunct('{');
    std::set<std::string> fields;
    while (!AcceptPunct('}')) {
      const Token& field_token = Peek();
      const std::string field = ExpectIdent("field name");
      if (!fields.insert(field).second) {
        Fail(field_token, "duplicate field '" + field + "'");
      }
      ExpectPunct('=');
      if (field == "parents") {
        m.parents = NameList();
      } else if (field == "eq") {
        const Token& t = Next();
        if (t.kind != Token::Kind::kString) {
          Fail(t, "expected a quoted expression, got " + Describe(t));
        }
        try {
          m.equation = expr::Parse(t.text);
        } catch (const ParseError& e) {
          throw ParseError(e.what(), t.offset + e.offset(), t.line);
        }
      } else if (field == "noise") {
        m.noise = Noise();
      } else {
        Fail(field_token, "unknown field '" + field +
                              "' (expected parents, eq or noise)");
      }
      if (!AcceptPunct(';')) {
        ExpectPunct('}');
        break;
      }
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

ScmSpec ParseScmSpec(std::string_view text) {
  return SpecParser(Lexer(text).Run()).Parse();
}

std::string FormatScmSpec(const ScmSpec& spec) {
  std::string out = "scm " + spec.name + "\n";
  for (const VariableSpec& v : spec.variables) {
    const Mechanism& m = v.mechanism;
    if (m.IsAssigned() || !m.frozen.empty()) {
      throw ValidationError("variable '" + v.name +
                            "' has an intervened mechanism the text format "
                            "cannot express");
    }
    std::vector<std::string> fields;
    if (!m.parents.empty()) {
      std::string list = "parents = [";
      for (std::size_t i = 0; i < m.parents.size(); ++i) {
        if (i > 0) list += ", ";
        list += m.parents[i];
      }
      fields.push_back(list + "]");
    }
    if (m.equation) fields.push_back("eq = \"" + expr::ToString(*m.equation) + "\"");
    fields.push_back("noise = " + m.noise.ToString());
    out += "var " + v.name + " { ";
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out += "; ";
      out += fields[i];
    }
    out += " }\n";
  }
  return out;
}

std::string FormatScm(const Scm& scm) { return FormatScmSpec(scm.ToSpec()); }

Scm LoadScm(const std::string& path) {
  return Scm::Validate(ParseScmSpec(ReadFile(path)));
}

void SaveScm(const std::string& path, const Scm& scm) {
  WriteFile(path, FormatScm(scm));
}

}  // namespace cdp
