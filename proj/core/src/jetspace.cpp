#include "labvar/jetspace.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace labvar {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

JetSpace::JetSpace(std::vector<std::string> independents,
                   std::vector<std::string> dependents,
                   std::vector<std::string> parameters, int max_order)
    : indep_(std::move(independents)),
      dep_(std::move(dependents)),
      param_(std::move(parameters)),
      max_order_(max_order) {
  if (indep_.empty() || indep_.size() > 3)
    throw JetSpaceError("jet space needs between 1 and 3 independent variables");
  if (dep_.empty()) throw JetSpaceError("jet space needs at least one dependent variable");
  if (max_order_ < 1 || max_order_ > kHardOrderCap)
    throw JetSpaceError("jet space order must be between 1 and 4");
  for (const auto& n : indep_)
    if (n.size() != 1 || !std::isalpha(static_cast<unsigned char>(n[0])))
      throw JetSpaceError("independent variable names must be single letters: '" + n + "'");
  std::set<std::string> seen;
  for (const auto* group : {&indep_, &dep_, &param_})
    for (const auto& n : *group) {
      if (n.empty()) throw JetSpaceError("empty variable name");
      if (!seen.insert(n).second)
        throw JetSpaceError("duplicate variable name '" + n + "'");
    }
}

bool JetSpace::has_independent(const std::string& n) const { return contains(indep_, n); }
bool JetSpace::has_dependent(const std::string& n) const { return contains(dep_, n); }
bool JetSpace::has_parameter(const std::string& n) const { return contains(param_, n); }

Expr JetSpace::independent(const std::string& name) const {
  if (!has_independent(name))
    throw JetSpaceError("unknown independent variable '" + name + "'");
  return symbol(name, SymbolRole::Independent);
}

Expr JetSpace::parameter(const std::string& name) const {
  if (!has_parameter(name)) throw JetSpaceError("unknown parameter '" + name + "'");
  return symbol(name, SymbolRole::Parameter);
}

Expr JetSpace::coordinate(const std::string& dep,
                          const std::vector<std::string>& index) const {
  if (!has_dependent(dep)) throw JetSpaceError("unknown dependent variable '" + dep + "'");
  if (static_cast<int>(index.size()) > kHardOrderCap)
    throw JetSpaceError("derivative order " + std::to_string(index.size()) +
                        " of '" + dep + "' exceeds the supported maximum of " +
                        std::to_string(kHardOrderCap));
  for (const auto& i : index)
    if (!has_independent(i))
      throw JetSpaceError("derivative index '" + i + "' is not an independent variable");
  return jet_symbol(dep, index);
}

Expr JetSpace::coordinate(const std::string& dep, const std::string& index) const {
  std::vector<std::string> idx;
  for (char c : index) idx.emplace_back(1, c);
  return coordinate(dep, idx);
}

Expr JetSpace::declare_function(const std::string& name,
                                const std::vector<std::string>& args) {
  if (name.empty()) throw JetSpaceError("empty function name");
  if (has_independent(name) || has_dependent(name) || has_parameter(name))
    throw JetSpaceError("function name '" + name + "' clashes with a variable");
  if (args.empty()) throw JetSpaceError("function '" + name + "' needs arguments");
  for (const auto& a : args)
    if (!has_independent(a) && !has_dependent(a))
      throw JetSpaceError("function argument '" + a + "' is not a coordinate");
  auto it = funcs_.find(name);
  if (it != funcs_.end() && it->second != args)
    throw JetSpaceError("function '" + name + "' redeclared with different arguments");
  funcs_[name] = args;
  return func_symbol(name, args, std::vector<int>(args.size(), 0));
}

std::optional<std::vector<std::string>> JetSpace::function_args(
    const std::string& name) const {
  auto it = funcs_.find(name);
  if (it == funcs_.end()) return std::nullopt;
  return it->second;
}

std::optional<Expr> JetSpace::lookup(const std::string& name) const {
  if (has_independent(name)) return independent(name);
  if (has_parameter(name)) return parameter(name);
  if (has_dependent(name)) return coordinate(name, std::vector<std::string>{});
  // Derivative coordinate "dep_idx": split at the last underscore whose tail
  // consists only of independent-variable letters.
  auto pos = name.rfind('_');
  while (pos != std::string::npos && pos > 0) {
    const std::string head = name.substr(0, pos);
    const std::string tail = name.substr(pos + 1);
    bool tail_ok = !tail.empty();
    for (char c : tail) tail_ok = tail_ok && has_independent(std::string(1, c));
    if (tail_ok && has_dependent(head) &&
        static_cast<int>(tail.size()) <= kHardOrderCap) {
      return coordinate(head, tail);
    }
    pos = pos == 0 ? std::string::npos : name.rfind('_', pos - 1);
  }
  return std::nullopt;
}

std::vector<std::vector<std::string>> JetSpace::indices_of_order(int order) const {
  std::vector<std::vector<std::string>> out;
  if (order == 0) {
    out.push_back({});
    return out;
  }
  // Multisets of size `order` over indep_, generated in nondecreasing order.
  std::vector<int> pick(order, 0);
  const int n = static_cast<int>(indep_.size());
  while (true) {
    std::vector<std::string> idx;
    for (int p : pick) idx.push_back(indep_[p]);
    std::sort(idx.begin(), idx.end());
    out.push_back(idx);
    int i = order - 1;
    while (i >= 0 && pick[i] == n - 1) --i;
    if (i < 0) break;
    int v = pick[i] + 1;
    for (int j = i; j < order; ++j) pick[j] = v;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Expr> JetSpace::all_coordinates(int up_to_order) const {
  std::vector<Expr> out;
  for (const auto& d : dep_)
    for (int k = 0; k <= std::min(up_to_order, kHardOrderCap); ++k)
      for (const auto& idx : indices_of_order(k)) out.push_back(coordinate(d, idx));
  return out;
}

}  // namespace labvar
