#include "labvar/parse.hpp"

#include <cctype>

namespace labvar {

namespace {

class Parser {
 public:
  Parser(const std::string& text, const JetSpace& space) : text_(text), space_(space) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("parse error at offset " + std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Expr parse_sum() {
    std::vector<Expr> terms;
    terms.push_back(parse_term());
    while (true) {
      if (eat('+')) terms.push_back(parse_term());
      else if (eat('-')) terms.push_back(-parse_term());
      else break;
    }
    return make_sum(std::move(terms));
  }

  Expr parse_term() {
    Expr e = parse_unary();
    while (true) {
      if (eat('*')) e = e * parse_unary();
      else if (eat('/')) e = e / parse_unary();
      else break;
    }
    return e;
  }

  Expr parse_unary() {
    if (eat('-')) return -parse_unary();
    if (eat('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (eat('^')) return make_power(base, parse_rational_exponent());
    return base;
  }

  Rational parse_rational_exponent() {
    skip_ws();
    if (eat('(')) {
      Rational r = parse_signed_rational();
      if (!eat(')')) fail("expected ')' after exponent");
      return r;
    }
    return parse_signed_rational();
  }

  Rational parse_signed_rational() {
    bool neg = false;
    while (true) {
      if (eat('-')) neg = !neg;
      else if (eat('+')) continue;
      else break;
    }
    skip_ws();
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      fail("exponent must be a rational literal");
    Rational r = parse_number_literal();
    if (eat('/')) {
      Rational d = parse_number_literal();
      r /= d;
    }
    return neg ? -r : r;
  }

  Rational parse_number_literal() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (start == pos_) fail("expected a number");
    std::int64_t whole = 0;
    for (std::size_t i = start; i < pos_; ++i) {
      whole = whole * 10 + (text_[i] - '0');
      if (whole < 0) fail("numeric literal too large");
    }
    Rational r(whole);
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      std::size_t fstart = pos_;
      std::int64_t frac = 0, den = 1;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        frac = frac * 10 + (text_[pos_] - '0');
        den *= 10;
        if (frac < 0 || den < 0) fail("numeric literal too precise");
        ++pos_;
      }
      if (pos_ == fstart) fail("expected digits after decimal point");
      r += Rational(frac, den);
    }
    return r;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) return constant(parse_number_literal());
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    if (auto args = space_.function_args(name)) {
      if (!eat('(')) fail("function '" + name + "' must be applied to its arguments");
      for (std::size_t i = 0; i < args->size(); ++i) {
        skip_ws();
        std::size_t astart = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
          ++pos_;
        std::string got = text_.substr(astart, pos_ - astart);
        if (got != (*args)[i])
          fail("function '" + name + "' expects argument '" + (*args)[i] +
               "' in position " + std::to_string(i + 1));
        if (i + 1 < args->size() && !eat(',')) fail("expected ','");
      }
      if (!eat(')')) fail("expected ')'");
      return func_symbol(name, *args, std::vector<int>(args->size(), 0));
    }
    if (auto sym = space_.lookup(name)) return *sym;
    fail("unknown identifier '" + name + "'");
  }

  const std::string& text_;
  const JetSpace& space_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(const std::string& text, const JetSpace& space) {
  Parser p(text, space);
  return p.parse();
}

}  // namespace labvar
