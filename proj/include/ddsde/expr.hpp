#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ddsde {

// Small arithmetic expression language over the drift arguments
// (t, x1, x2, x3, u). Operators + - * / ^ (right assoc), unary minus,
// functions sin cos tan tanh sinh cosh exp log sqrt abs sign step,
// min/max/pow with two arguments, constants pi and e.
class Expr {
public:
  static Expr parse(const std::string& text);
  // vars = {t, x1, x2, x3, u}
  double eval(const double vars[5]) const;
  const std::string& text() const { return text_; }

private:
  enum class Op : std::uint8_t {
    push_const, push_var, add, sub, mul, div, pow_, neg,
    fn_sin, fn_cos, fn_tan, fn_tanh, fn_sinh, fn_cosh, fn_exp, fn_log,
    fn_sqrt, fn_abs, fn_sign, fn_step, fn_min, fn_max,
  };
  struct Step {
    Op op;
    double value = 0.0;
    int var = 0;
  };
  std::string text_;
  std::vector<Step> code_;
  friend class ExprParser;
};

}  // namespace ddsde
