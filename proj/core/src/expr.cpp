#include "labvar/expr.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace labvar {

namespace {

std::size_t hash_combine(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t compute_hash(const ExprNode& n) {
  std::size_t h = static_cast<std::size_t>(n.kind) * 0x9e3779b97f4a7c15ULL;
  switch (n.kind) {
    case ExprKind::Constant:
      h = hash_combine(h, std::hash<std::int64_t>{}(n.value.num()));
      h = hash_combine(h, std::hash<std::int64_t>{}(n.value.den()));
      break;
    case ExprKind::Symbol:
      h = hash_combine(h, std::hash<std::string>{}(n.name));
      h = hash_combine(h, static_cast<std::size_t>(n.role));
      break;
    case ExprKind::FuncSym:
      h = hash_combine(h, std::hash<std::string>{}(n.display()));
      break;
    case ExprKind::Sum:
    case ExprKind::Product:
      for (const auto& c : n.children) h = hash_combine(h, c->hash());
      break;
    case ExprKind::Power:
      h = hash_combine(h, n.pbase->hash());
      h = hash_combine(h, std::hash<std::int64_t>{}(n.exponent.num()));
      h = hash_combine(h, std::hash<std::int64_t>{}(n.exponent.den()));
      break;
  }
  return h;
}

std::shared_ptr<ExprNode> make_node(ExprKind k) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  return n;
}

Expr seal(std::shared_ptr<ExprNode> n) {
  n->set_hash(compute_hash(*n));
  return n;
}

int cmp_rational(const Rational& a, const Rational& b) {
  if (a == b) return 0;
  return a < b ? -1 : 1;
}

template <typename T>
int cmp_scalar(const T& a, const T& b) {
  if (a == b) return 0;
  return a < b ? -1 : 1;
}

}  // namespace

std::string ExprNode::display() const {
  if (kind == ExprKind::Symbol) return name;
  // FuncSym: "P" bare, "P_xy" once derivatives are attached.
  std::string s = name;
  bool any = false;
  for (std::size_t i = 0; i < args.size(); ++i) any = any || dcount[i] > 0;
  if (any) {
    s += "_";
    for (std::size_t i = 0; i < args.size(); ++i)
      for (int k = 0; k < dcount[i]; ++k) s += args[i];
  }
  return s;
}

int compare(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind)
    return static_cast<int>(a->kind) < static_cast<int>(b->kind) ? -1 : 1;
  switch (a->kind) {
    case ExprKind::Constant:
      return cmp_rational(a->value, b->value);
    case ExprKind::Symbol: {
      if (int c = cmp_scalar(static_cast<int>(a->role), static_cast<int>(b->role))) return c;
      return a->name.compare(b->name);
    }
    case ExprKind::FuncSym: {
      if (int c = a->name.compare(b->name)) return c;
      if (int c = cmp_scalar(a->args.size(), b->args.size())) return c;
      for (std::size_t i = 0; i < a->args.size(); ++i) {
        if (int c = a->args[i].compare(b->args[i])) return c;
        if (int c = cmp_scalar(a->dcount[i], b->dcount[i])) return c;
      }
      return 0;
    }
    case ExprKind::Sum:
    case ExprKind::Product: {
      if (int c = cmp_scalar(a->children.size(), b->children.size())) return c;
      for (std::size_t i = 0; i < a->children.size(); ++i)
        if (int c = compare(a->children[i], b->children[i])) return c;
      return 0;
    }
    case ExprKind::Power: {
      if (int c = compare(a->pbase, b->pbase)) return c;
      return cmp_rational(a->exponent, b->exponent);
    }
  }
  return 0;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a->hash() != b->hash()) return false;
  return compare(a, b) == 0;
}

Expr constant(const Rational& v) {
  auto n = make_node(ExprKind::Constant);
  n->value = v;
  return seal(std::move(n));
}

Expr constant(std::int64_t v) { return constant(Rational(v)); }

Expr symbol(const std::string& name, SymbolRole role) {
  auto n = make_node(ExprKind::Symbol);
  n->name = name;
  n->role = role;
  return seal(std::move(n));
}

Expr jet_symbol(const std::string& base, const std::vector<std::string>& index) {
  auto n = make_node(ExprKind::Symbol);
  n->role = SymbolRole::JetCoordinate;
  n->base = base;
  n->index = index;
  std::sort(n->index.begin(), n->index.end());
  n->name = base;
  if (!n->index.empty()) {
    n->name += "_";
    for (const auto& i : n->index) n->name += i;
  }
  return seal(std::move(n));
}

Expr func_symbol(const std::string& name, const std::vector<std::string>& args,
                 const std::vector<int>& dcount) {
  if (args.size() != dcount.size())
    throw std::invalid_argument("func_symbol: args/dcount size mismatch");
  auto n = make_node(ExprKind::FuncSym);
  n->name = name;
  n->args = args;
  n->dcount = dcount;
  return seal(std::move(n));
}

bool is_zero(const Expr& e) {
  return e->kind == ExprKind::Constant && e->value.is_zero();
}

bool is_one(const Expr& e) {
  return e->kind == ExprKind::Constant && e->value.is_one();
}

Expr make_sum(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  Rational c(0);
  std::function<void(const Expr&)> absorb = [&](const Expr& t) {
    if (t->kind == ExprKind::Sum) {
      for (const auto& ch : t->children) absorb(ch);
    } else if (t->kind == ExprKind::Constant) {
      c += t->value;
    } else {
      flat.push_back(t);
    }
  };
  for (const auto& t : terms) absorb(t);
  if (!c.is_zero() || flat.empty()) flat.insert(flat.begin(), constant(c));
  if (flat.size() == 1) return flat[0];
  auto n = make_node(ExprKind::Sum);
  n->children = std::move(flat);
  return seal(std::move(n));
}

Expr make_product(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  Rational c(1);
  std::function<void(const Expr&)> absorb = [&](const Expr& t) {
    if (t->kind == ExprKind::Product) {
      for (const auto& ch : t->children) absorb(ch);
    } else if (t->kind == ExprKind::Constant) {
      c *= t->value;
    } else {
      flat.push_back(t);
    }
  };
  for (const auto& t : factors) absorb(t);
  if (c.is_zero()) return constant(0);
  if (!c.is_one() || flat.empty()) flat.insert(flat.begin(), constant(c));
  if (flat.size() == 1) return flat[0];
  auto n = make_node(ExprKind::Product);
  n->children = std::move(flat);
  return seal(std::move(n));
}

Expr make_power(const Expr& base, const Rational& e) {
  if (e.is_zero()) return constant(1);
  if (e.is_one()) return base;
  if (base->kind == ExprKind::Constant) {
    if (e.is_integer()) return constant(Rational::int_pow(base->value, e.num()));
    if (base->value.is_one()) return constant(1);
    if (base->value.is_zero() && e.sign() > 0) return constant(0);
  }
  // (b^p)^q -> b^(p*q) is unconditionally valid only for integer q.
  if (base->kind == ExprKind::Power && e.is_integer())
    return make_power(base->pbase, base->exponent * e);
  auto n = make_node(ExprKind::Power);
  n->pbase = base;
  n->exponent = e;
  return seal(std::move(n));
}

Expr operator-(const Expr& a) { return make_product({constant(-1), a}); }

Expr operator/(const Expr& a, const Expr& b) {
  return make_product({a, make_power(b, Rational(-1))});
}

namespace {

void collect(const Expr& e, std::vector<Expr>& syms, std::vector<Expr>& funcs) {
  switch (e->kind) {
    case ExprKind::Symbol:
      if (std::none_of(syms.begin(), syms.end(),
                       [&](const Expr& s) { return structurally_equal(s, e); }))
        syms.push_back(e);
      break;
    case ExprKind::FuncSym:
      if (std::none_of(funcs.begin(), funcs.end(),
                       [&](const Expr& s) { return structurally_equal(s, e); }))
        funcs.push_back(e);
      break;
    case ExprKind::Sum:
    case ExprKind::Product:
      for (const auto& c : e->children) collect(c, syms, funcs);
      break;
    case ExprKind::Power:
      collect(e->pbase, syms, funcs);
      break;
    case ExprKind::Constant:
      break;
  }
}

}  // namespace

std::vector<Expr> free_symbols(const Expr& e) {
  std::vector<Expr> syms, funcs;
  collect(e, syms, funcs);
  std::sort(syms.begin(), syms.end(),
            [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
  return syms;
}

std::vector<Expr> func_nodes(const Expr& e) {
  std::vector<Expr> syms, funcs;
  collect(e, syms, funcs);
  std::sort(funcs.begin(), funcs.end(),
            [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
  return funcs;
}

namespace {

void render(const Expr& e, std::ostringstream& out, int parent_prec) {
  // Precedence levels: sum 1, product 2, unary-ish 3, power 4, atom 5.
  switch (e->kind) {
    case ExprKind::Constant: {
      const bool neg = e->value.sign() < 0;
      const bool frac = !e->value.is_integer();
      const int prec = (neg || frac) ? 2 : 5;
      if (prec < parent_prec) out << "(" << e->value.str() << ")";
      else out << e->value.str();
      break;
    }
    case ExprKind::Symbol:
    case ExprKind::FuncSym:
      out << e->display();
      break;
    case ExprKind::Sum: {
      if (1 < parent_prec) out << "(";
      for (std::size_t i = 0; i < e->children.size(); ++i) {
        Expr term = e->children[i];
        bool neg = false;
        if (term->kind == ExprKind::Constant && term->value.sign() < 0) {
          neg = true;
          term = constant(-term->value);
        } else if (term->kind == ExprKind::Product &&
                   term->children[0]->kind == ExprKind::Constant &&
                   term->children[0]->value.sign() < 0) {
          neg = true;
          std::vector<Expr> rest(term->children.begin() + 1, term->children.end());
          rest.insert(rest.begin(), constant(-term->children[0]->value));
          term = make_product(std::move(rest));
        }
        if (i == 0) {
          if (neg) out << "-";
        } else {
          out << (neg ? " - " : " + ");
        }
        render(term, out, neg && term->kind == ExprKind::Sum ? 2 : 1);
      }
      if (1 < parent_prec) out << ")";
      break;
    }
    case ExprKind::Product: {
      if (2 < parent_prec) out << "(";
      for (std::size_t i = 0; i < e->children.size(); ++i) {
        if (i) out << "*";
        // A leading rational coefficient reads fine unparenthesized.
        const int prec = (i == 0 && e->children[i]->kind == ExprKind::Constant) ? 2 : 3;
        render(e->children[i], out, prec);
      }
      if (2 < parent_prec) out << ")";
      break;
    }
    case ExprKind::Power: {
      if (4 < parent_prec) out << "(";
      render(e->pbase, out, 5);
      out << "^";
      const bool simple = e->exponent.is_integer() && e->exponent.sign() >= 0;
      if (simple) out << e->exponent.str();
      else out << "(" << e->exponent.str() << ")";
      if (4 < parent_prec) out << ")";
      break;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream out;
  render(e, out, 0);
  return out.str();
}

}  // namespace labvar
