#include "ddsde/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>

#include "ddsde/errors.hpp"

namespace ddsde {

class ExprParser {
public:
  explicit ExprParser(const std::string& text) : text_(text) {}

  std::vector<Expr::Step> run() {
    std::vector<Expr::Step> code;
    parse_expr(code);
    skip_ws();
    require(pos_ == text_.size(), errc::config_error,
            "expression: unexpected input at position " + std::to_string(pos_) +
                " in '" + text_ + "'");
    return code;
  }

private:
  using Op = Expr::Op;

  void parse_expr(std::vector<Expr::Step>& code) {
    parse_term(code);
    while (true) {
      skip_ws();
      if (accept('+')) {
        parse_term(code);
        code.push_back({Op::add, 0, 0});
      } else if (accept('-')) {
        parse_term(code);
        code.push_back({Op::sub, 0, 0});
      } else {
        return;
      }
    }
  }

  void parse_term(std::vector<Expr::Step>& code) {
    parse_factor(code);
    while (true) {
      skip_ws();
      if (accept('*')) {
        parse_factor(code);
        code.push_back({Op::mul, 0, 0});
      } else if (accept('/')) {
        parse_factor(code);
        code.push_back({Op::div, 0, 0});
      } else {
        return;
      }
    }
  }

  // unary minus binds looser than ^, so -2^2 = -(2^2)
  void parse_factor(std::vector<Expr::Step>& code) {
    skip_ws();
    if (accept('-')) {
      parse_factor(code);
      code.push_back({Op::neg, 0, 0});
      return;
    }
    accept('+');
    parse_power(code);
  }

  void parse_power(std::vector<Expr::Step>& code) {
    parse_primary(code);
    skip_ws();
    if (accept('^')) {
      parse_factor(code);  // right associative; exponent may be signed
      code.push_back({Op::pow_, 0, 0});
    }
  }

  void parse_primary(std::vector<Expr::Step>& code) {
    skip_ws();
    require(pos_ < text_.size(), errc::config_error,
            "expression: unexpected end at position " + std::to_string(pos_) +
                " of '" + text_ + "'");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* start = text_.c_str() + pos_;
      char* end = nullptr;
      double v = std::strtod(start, &end);
      require(end != start, errc::config_error,
              "expression: bad number at position " + std::to_string(pos_));
      pos_ += static_cast<std::size_t>(end - start);
      code.push_back({Op::push_const, v, 0});
      return;
    }
    if (c == '(') {
      ++pos_;
      parse_expr(code);
      expect(')');
      return;
    }
    require(std::isalpha(static_cast<unsigned char>(c)) || c == '_',
            errc::config_error,
            "expression: unexpected character '" + std::string(1, c) +
                "' at position " + std::to_string(pos_));
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);

    static const std::map<std::string, int> vars = {
        {"t", 0}, {"x1", 1}, {"x2", 2}, {"x3", 3}, {"u", 4}};
    static const std::map<std::string, Op> fn1 = {
        {"sin", Op::fn_sin},   {"cos", Op::fn_cos},   {"tan", Op::fn_tan},
        {"tanh", Op::fn_tanh}, {"sinh", Op::fn_sinh}, {"cosh", Op::fn_cosh},
        {"exp", Op::fn_exp},   {"log", Op::fn_log},   {"sqrt", Op::fn_sqrt},
        {"abs", Op::fn_abs},   {"sign", Op::fn_sign}, {"step", Op::fn_step}};
    static const std::map<std::string, Op> fn2 = {
        {"min", Op::fn_min}, {"max", Op::fn_max}, {"pow", Op::pow_}};

    if (auto it = vars.find(name); it != vars.end()) {
      code.push_back({Op::push_var, 0, it->second});
      return;
    }
    if (name == "pi") {
      code.push_back({Op::push_const, std::numbers::pi, 0});
      return;
    }
    if (name == "e") {
      code.push_back({Op::push_const, std::numbers::e, 0});
      return;
    }
    if (auto it = fn1.find(name); it != fn1.end()) {
      expect('(');
      parse_expr(code);
      expect(')');
      code.push_back({it->second, 0, 0});
      return;
    }
    if (auto it = fn2.find(name); it != fn2.end()) {
      expect('(');
      parse_expr(code);
      expect(',');
      parse_expr(code);
      expect(')');
      code.push_back({it->second, 0, 0});
      return;
    }
    fail(errc::config_error, "expression: unknown identifier '" + name + "'");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }
  bool accept(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    skip_ws();
    require(accept(c), errc::config_error,
            "expression: expected '" + std::string(1, c) + "' at position " +
                std::to_string(pos_) + " in '" + text_ + "'");
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

Expr Expr::parse(const std::string& text) {
  Expr e;
  e.text_ = text;
  e.code_ = ExprParser(text).run();
  return e;
}

double Expr::eval(const double vars[5]) const {
  double stack[64];
  int sp = 0;
  auto push = [&](double v) {
    require(sp < 64, errc::internal_error, "expression stack overflow");
    stack[sp++] = v;
  };
  auto pop = [&]() { return stack[--sp]; };
  for (const Step& s : code_) {
    switch (s.op) {
      case Op::push_const: push(s.value); break;
      case Op::push_var: push(vars[s.var]); break;
      case Op::add: { double b = pop(), a = pop(); push(a + b); break; }
      case Op::sub: { double b = pop(), a = pop(); push(a - b); break; }
      case Op::mul: { double b = pop(), a = pop(); push(a * b); break; }
      case Op::div: { double b = pop(), a = pop(); push(a / b); break; }
      case Op::pow_: { double b = pop(), a = pop(); push(std::pow(a, b)); break; }
      case Op::neg: push(-pop()); break;
      case Op::fn_sin: push(std::sin(pop())); break;
      case Op::fn_cos: push(std::cos(pop())); break;
      case Op::fn_tan: push(std::tan(pop())); break;
      case Op::fn_tanh: push(std::tanh(pop())); break;
      case Op::fn_sinh: push(std::sinh(pop())); break;
      case Op::fn_cosh: push(std::cosh(pop())); break;
      case Op::fn_exp: push(std::exp(pop())); break;
      case Op::fn_log: push(std::log(pop())); break;
      case Op::fn_sqrt: push(std::sqrt(pop())); break;
      case Op::fn_abs: push(std::abs(pop())); break;
      case Op::fn_sign: { double v = pop(); push(v > 0 ? 1.0 : v < 0 ? -1.0 : 0.0); break; }
      case Op::fn_step: push(pop() > 0 ? 1.0 : 0.0); break;
      case Op::fn_min: { double b = pop(), a = pop(); push(std::min(a, b)); break; }
      case Op::fn_max: { double b = pop(), a = pop(); push(std::max(a, b)); break; }
    }
  }
  require(sp == 1, errc::internal_error, "expression stack imbalance");
  return stack[0];
}

}  // namespace ddsde
