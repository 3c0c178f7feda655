#include "mcv/solver.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace mcv {

namespace {

using boost::multiprecision::cpp_int;

bool is_bool_atom(const TermStore &s, TermId t) {
  TermKind k = s.node(t).kind;
  return k == TermKind::Symbol || k == TermKind::BoolConst;
}

TermId nnf(TermStore &s, TermId t, bool pos) {
  const TermNode n = s.node(t);
  switch (n.kind) {
    case TermKind::BoolConst: return pos ? t : s.not_(t);
    case TermKind::Not: return nnf(s, n.kids[0], !pos);
    case TermKind::And: {
      TermId a = nnf(s, n.kids[0], pos), b = nnf(s, n.kids[1], pos);
      return pos ? s.and_(a, b) : s.or_(a, b);
    }
    case TermKind::Or: {
      TermId a = nnf(s, n.kids[0], pos), b = nnf(s, n.kids[1], pos);
      return pos ? s.or_(a, b) : s.and_(a, b);
    }
    case TermKind::Eq: {
      TermId a = n.kids[0], b = n.kids[1];
      if (s.sort(a) == Sort::Bool && !(is_bool_atom(s, a) && is_bool_atom(s, b))) {
        TermId pa = nnf(s, a, true), na = nnf(s, a, false);
        TermId pb = nnf(s, b, true), nb = nnf(s, b, false);
        return pos ? s.or_(s.and_(pa, pb), s.and_(na, nb)) : s.or_(s.and_(pa, nb), s.and_(na, pb));
      }
      return pos ? t : s.not_(t);
    }
    case TermKind::Lt: return pos ? t : s.le(n.kids[1], n.kids[0]);
    case TermKind::Le: return pos ? t : s.lt(n.kids[1], n.kids[0]);
    case TermKind::Symbol:
      if (n.sort == Sort::Bool) return s.eq(t, s.boolean(pos));
      return s.boolean(true);
    default:
      // Not a formula: dropping it only weakens the facts.
      return s.boolean(true);
  }
}

struct Lit {
  enum Kind { Eq, Ne, Lt, Le } kind;
  TermId a, b;
};

struct LinExpr {
  std::map<int, Rational> coeffs;
  Rational c;

  void add(const LinExpr &o, const Rational &k) {
    for (const auto &[v, a] : o.coeffs) {
      Rational &slot = coeffs[v];
      slot += a * k;
      if (slot == 0) coeffs.erase(v);
    }
    c += o.c * k;
  }
  std::string key() const {
    std::string s = rational_str(c);
    for (const auto &[v, a] : coeffs) s += "|" + std::to_string(v) + ":" + rational_str(a);
    return s;
  }
};

struct Ineq {
  LinExpr e;  // e (<|<=) 0
  bool strict = false;
};

cpp_int floor_div(const cpp_int &a, const cpp_int &b) {
  cpp_int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

class Theory {
 public:
  Theory(TermStore &s, const SolverLimits &limits) : s_(s), limits_(limits) {}

  SatResult check(const std::vector<Lit> &lits) {
    reg(s_.null());
    reg(s_.boolean(true));
    reg(s_.boolean(false));
    for (const Lit &l : lits) {
      reg(l.a);
      reg(l.b);
    }
    for (const Lit &l : lits)
      if (l.kind == Lit::Eq) merge(l.a, l.b);
    for (int round = 0; round < 64; ++round) {
      if (!close()) return SatResult::Unsat;
      for (const Lit &l : lits)
        if (l.kind == Lit::Ne && find(l.a) == find(l.b)) return SatResult::Unsat;
      bool changed = false;
      if (!arithmetic(lits, changed)) return SatResult::Unsat;
      if (!changed) return SatResult::Open;
    }
    return SatResult::Open;
  }

 private:
  void reg(TermId t) {
    if (parent_.count(t)) return;
    const TermNode &n = s_.node(t);
    switch (n.kind) {
      case TermKind::FieldPtr:
      case TermKind::FieldAddr:
      case TermKind::Add:
      case TermKind::Sub:
      case TermKind::Mul:
      case TermKind::Neg:
        for (TermId k : n.kids) reg(k);
        break;
      default: break;
    }
    parent_[t] = t;
    terms_.push_back(t);
  }

  TermId find(TermId t) {
    TermId r = t;
    while (parent_.at(r) != r) r = parent_.at(r);
    while (parent_.at(t) != r) {
      TermId next = parent_.at(t);
      parent_[t] = r;
      t = next;
    }
    return r;
  }

  bool merge(TermId a, TermId b) {
    reg(a);
    reg(b);
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (a < b) std::swap(a, b);
    parent_[a] = b;  // smaller id is the representative
    return true;
  }

  static bool is_compound(TermKind k) {
    return k == TermKind::FieldPtr || k == TermKind::FieldAddr || k == TermKind::Add || k == TermKind::Sub ||
           k == TermKind::Mul || k == TermKind::Neg;
  }

  // Congruence closure plus constructor axioms; false on conflict.
  bool close() {
    bool changed = true;
    while (changed) {
      changed = false;
      std::unordered_map<std::string, TermId> sigs;
      for (std::size_t i = 0; i < terms_.size(); ++i) {
        TermId t = terms_[i];
        const TermNode &n = s_.node(t);
        if (!is_compound(n.kind)) continue;
        std::string sig = std::to_string(static_cast<int>(n.kind)) + "|" + n.text + "|" + n.aux;
        for (TermId k : n.kids) sig += "|" + std::to_string(find(k));
        auto [it, inserted] = sigs.emplace(sig, t);
        if (!inserted && merge(t, it->second)) changed = true;
      }
      std::map<TermId, std::vector<TermId>> classes;
      for (TermId t : terms_) classes[find(t)].push_back(t);
      TermId zero = s_.null();
      for (auto &[rep, members] : classes) {
        int numbers = 0, infos = 0, bools = 0;
        for (TermId t : members) {
          TermKind k = s_.node(t).kind;
          numbers += k == TermKind::Number;
          infos += k == TermKind::TypeInfo;
          bools += k == TermKind::BoolConst;
        }
        if (numbers > 1 || infos > 1 || bools > 1) return false;
        if (infos && find(zero) == rep) return false;
        for (std::size_t i = 0; i < members.size(); ++i) {
          const TermNode &x = s_.node(members[i]);
          if (x.kind != TermKind::FieldPtr && x.kind != TermKind::FieldAddr) continue;
          for (std::size_t j = i + 1; j < members.size(); ++j) {
            const TermNode &y = s_.node(members[j]);
            if (y.kind != x.kind || y.text != x.text) continue;
            if (y.aux == x.aux) {
              if (merge(x.kids[0], y.kids[0])) changed = true;
            } else if (find(x.kids[0]) == find(y.kids[0]) && find(x.kids[0]) != find(zero)) {
              // distinct offsets only coincide at null
              merge(x.kids[0], zero);
              changed = true;
            }
          }
        }
      }
      for (std::size_t i = 0; i < terms_.size(); ++i) {
        TermId t = terms_[i];
        const TermNode &n = s_.node(t);
        if (n.kind != TermKind::FieldPtr && n.kind != TermKind::FieldAddr) continue;
        bool t_null = find(t) == find(zero), base_null = find(n.kids[0]) == find(zero);
        if (t_null != base_null) {
          merge(t, zero);
          merge(n.kids[0], zero);
          changed = true;
        }
      }
    }
    return true;
  }

  bool constant_of(TermId rep, Rational &out) {
    for (TermId t : class_members_[rep]) {
      if (s_.node(t).kind == TermKind::Number) {
        out = s_.node(t).value;
        return true;
      }
    }
    return false;
  }

  LinExpr lin(TermId t) {
    LinExpr e;
    TermId r = find(t);
    Rational c;
    if (constant_of(r, c)) {
      e.c = c;
      return e;
    }
    auto it = var_of_.find(r);
    int v;
    if (it == var_of_.end()) {
      v = static_cast<int>(var_terms_.size());
      var_of_[r] = v;
      var_terms_.push_back(r);
      bool integral = true;
      for (TermId m : class_members_[r]) integral = integral && s_.sort(m) != Sort::Real;
      var_int_.push_back(integral);
    } else {
      v = it->second;
    }
    e.coeffs[v] = 1;
    return e;
  }

  bool all_int(const LinExpr &e) const {
    for (const auto &[v, a] : e.coeffs)
      if (!var_int_[static_cast<std::size_t>(v)]) return false;
    return true;
  }

  LinExpr subst(const LinExpr &e) const {
    LinExpr out;
    out.c = e.c;
    for (const auto &[v, a] : e.coeffs) {
      auto it = defs_.find(v);
      if (it == defs_.end()) {
        LinExpr one;
        one.coeffs[v] = 1;
        out.add(one, a);
      } else {
        out.add(it->second, a);
      }
    }
    return out;
  }

  // Normalizes `in` (dividing integer constraints by the gcd and rounding the
  // constant); returns false if it is a trivially false constant constraint.
  void tighten(Ineq &in) const {
    if (in.e.coeffs.empty() || !all_int(in.e)) return;
    cpp_int l = 1;
    auto lcm_with = [&](const Rational &r) { l = boost::multiprecision::lcm(l, denominator(r)); };
    for (const auto &[v, a] : in.e.coeffs) lcm_with(a);
    lcm_with(in.e.c);
    cpp_int g = 0;
    std::map<int, cpp_int> ints;
    for (const auto &[v, a] : in.e.coeffs) {
      cpp_int x = numerator(Rational(a * l));
      ints[v] = x;
      g = boost::multiprecision::gcd(g, x < 0 ? cpp_int(-x) : x);
    }
    cpp_int c = numerator(Rational(in.e.c * l));
    if (in.strict) {
      c += 1;
      in.strict = false;
    }
    in.e.coeffs.clear();
    for (const auto &[v, x] : ints) in.e.coeffs[v] = Rational(x / g);
    in.e.c = Rational(-floor_div(-c, g));
  }

  static bool constant_false(const Ineq &in) {
    return in.e.coeffs.empty() && (in.strict ? in.e.c >= 0 : in.e.c > 0);
  }

  // True if the constraints are proven infeasible.
  bool fm_infeasible(std::vector<Ineq> cs) const {
    while (true) {
      std::vector<Ineq> live;
      std::map<std::string, bool> seen;
      for (Ineq &in : cs) {
        tighten(in);
        if (in.e.coeffs.empty()) {
          if (constant_false(in)) return true;
          continue;
        }
        std::string k = in.e.key() + (in.strict ? "<" : "<=");
        if (seen.emplace(k, true).second) live.push_back(std::move(in));
      }
      if (live.empty() || live.size() > limits_.max_fm_constraints) return false;
      std::map<int, std::pair<long, long>> counts;
      for (const Ineq &in : live)
        for (const auto &[v, a] : in.e.coeffs) (a > 0 ? counts[v].first : counts[v].second)++;
      int best = -1;
      long best_cost = 0;
      for (const auto &[v, pn] : counts) {
        long cost = pn.first * pn.second - pn.first - pn.second;
        if (best < 0 || cost < best_cost) {
          best = v;
          best_cost = cost;
        }
      }
      std::vector<Ineq> next, pos, neg;
      for (Ineq &in : live) {
        auto it = in.e.coeffs.find(best);
        if (it == in.e.coeffs.end())
          next.push_back(std::move(in));
        else if (it->second > 0)
          pos.push_back(std::move(in));
        else
          neg.push_back(std::move(in));
      }
      for (const Ineq &p : pos) {
        for (const Ineq &n : neg) {
          Rational a = p.e.coeffs.at(best), b = -n.e.coeffs.at(best);
          Ineq r;
          r.e.add(p.e, b);
          r.e.add(n.e, a);
          r.e.coeffs.erase(best);
          r.strict = p.strict || n.strict;
          next.push_back(std::move(r));
        }
      }
      cs = std::move(next);
    }
  }

  bool arithmetic(const std::vector<Lit> &lits, bool &changed) {
    class_members_.clear();
    for (TermId t : terms_) class_members_[find(t)].push_back(t);
    var_of_.clear();
    var_terms_.clear();
    var_int_.clear();
    defs_.clear();

    std::vector<LinExpr> eqs;
    std::vector<Ineq> ineqs;
    std::vector<LinExpr> diseqs;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      TermId t = terms_[i];
      const TermNode &n = s_.node(t);
      if (s_.sort(t) == Sort::Bool) continue;
      LinExpr rhs;
      switch (n.kind) {
        case TermKind::Add:
          rhs = lin(n.kids[0]);
          rhs.add(lin(n.kids[1]), 1);
          break;
        case TermKind::Sub:
          rhs = lin(n.kids[0]);
          rhs.add(lin(n.kids[1]), -1);
          break;
        case TermKind::Neg: rhs.add(lin(n.kids[0]), -1); break;
        case TermKind::Mul: {
          LinExpr a = lin(n.kids[0]), b = lin(n.kids[1]);
          if (a.coeffs.empty())
            rhs.add(b, a.c);
          else if (b.coeffs.empty())
            rhs.add(a, b.c);
          else
            continue;
          break;
        }
        default: continue;
      }
      LinExpr e = lin(t);
      e.add(rhs, -1);
      eqs.push_back(std::move(e));
    }
    for (const Lit &l : lits) {
      if (s_.sort(l.a) == Sort::Bool) continue;
      LinExpr e = lin(l.a);
      e.add(lin(l.b), -1);
      switch (l.kind) {
        case Lit::Eq: break;  // already merged
        case Lit::Ne: diseqs.push_back(std::move(e)); break;
        case Lit::Lt: ineqs.push_back(Ineq{std::move(e), true}); break;
        case Lit::Le: ineqs.push_back(Ineq{std::move(e), false}); break;
      }
    }

    // Gaussian elimination.
    for (const LinExpr &raw : eqs) {
      LinExpr e = subst(raw);
      if (e.coeffs.empty()) {
        if (e.c != 0) return false;
        continue;
      }
      int p = e.coeffs.rbegin()->first;
      Rational a = e.coeffs.at(p);
      e.coeffs.erase(p);
      LinExpr def;
      def.add(e, Rational(-1) / a);
      for (auto &[v, d] : defs_) {
        auto it = d.coeffs.find(p);
        if (it == d.coeffs.end()) continue;
        Rational k = it->second;
        d.coeffs.erase(it);
        d.add(def, k);
      }
      defs_[p] = std::move(def);
    }

    // Equalities implied by the linear part flow back into the congruence.
    std::map<std::string, TermId> by_value;
    for (std::size_t v = 0; v < var_terms_.size(); ++v) {
      LinExpr e;
      e.coeffs[static_cast<int>(v)] = 1;
      e = subst(e);
      TermId rep = var_terms_[v];
      if (e.coeffs.empty()) {
        if (merge(rep, s_.number(e.c))) changed = true;
        continue;
      }
      auto [it, inserted] = by_value.emplace(e.key(), rep);
      if (!inserted && merge(rep, it->second)) changed = true;
    }
    if (changed) return true;

    for (Ineq &in : ineqs) in.e = subst(in.e);
    if (!ineqs.empty() && fm_infeasible(ineqs)) return false;
    for (const LinExpr &raw : diseqs) {
      LinExpr e = subst(raw);
      if (e.coeffs.empty()) {
        if (e.c == 0) return false;
        continue;
      }
      if (ineqs.empty()) continue;
      std::vector<Ineq> below = ineqs, above = ineqs;
      below.push_back(Ineq{e, true});
      LinExpr m;
      m.add(e, -1);
      above.push_back(Ineq{m, true});
      if (fm_infeasible(below) && fm_infeasible(above)) return false;
    }
    return true;
  }

  TermStore &s_;
  const SolverLimits &limits_;
  std::unordered_map<TermId, TermId> parent_;
  std::vector<TermId> terms_;
  std::map<TermId, std::vector<TermId>> class_members_;
  std::map<TermId, int> var_of_;
  std::vector<TermId> var_terms_;
  std::vector<bool> var_int_;
  std::map<int, LinExpr> defs_;
};

class Search {
 public:
  Search(TermStore &s, const SolverLimits &limits) : s_(s), limits_(limits) {}

  SatResult run(std::vector<TermId> todo, std::vector<Lit> lits, std::vector<TermId> ors) {
    while (!todo.empty()) {
      TermId f = todo.back();
      todo.pop_back();
      const TermNode &n = s_.node(f);
      switch (n.kind) {
        case TermKind::BoolConst:
          if (!n.bool_value) return SatResult::Unsat;
          break;
        case TermKind::And:
          todo.push_back(n.kids[1]);
          todo.push_back(n.kids[0]);
          break;
        case TermKind::Or: ors.push_back(f); break;
        case TermKind::Eq: lits.push_back({Lit::Eq, n.kids[0], n.kids[1]}); break;
        case TermKind::Lt: lits.push_back({Lit::Lt, n.kids[0], n.kids[1]}); break;
        case TermKind::Le: lits.push_back({Lit::Le, n.kids[0], n.kids[1]}); break;
        case TermKind::Not: {
          const TermNode &k = s_.node(n.kids[0]);
          if (k.kind == TermKind::Eq) lits.push_back({Lit::Ne, k.kids[0], k.kids[1]});
          break;
        }
        default: break;
      }
    }
    if (Theory(s_, limits_).check(lits) == SatResult::Unsat) return SatResult::Unsat;
    if (ors.empty() || leaves_ >= limits_.max_leaves) {
      ++leaves_;
      return SatResult::Open;
    }
    TermId f = ors.back();
    ors.pop_back();
    std::vector<TermId> disjuncts, stack{f};
    while (!stack.empty()) {
      TermId g = stack.back();
      stack.pop_back();
      if (s_.node(g).kind == TermKind::Or) {
        stack.push_back(s_.node(g).kids[1]);
        stack.push_back(s_.node(g).kids[0]);
      } else {
        disjuncts.push_back(g);
      }
    }
    for (TermId d : disjuncts)
      if (run({d}, lits, ors) == SatResult::Open) return SatResult::Open;
    return SatResult::Unsat;
  }

 private:
  TermStore &s_;
  const SolverLimits &limits_;
  int leaves_ = 0;
};

}  // namespace

SatResult check_sat(TermStore &store, const std::vector<TermId> &facts, const SolverLimits &limits) {
  std::vector<TermId> todo;
  for (TermId f : facts) todo.push_back(nnf(store, f, true));
  std::reverse(todo.begin(), todo.end());
  return Search(store, limits).run(std::move(todo), {}, {});
}

bool entails(TermStore &store, const std::vector<TermId> &facts, TermId goal, const SolverLimits &limits) {
  if (store.is_true(goal)) return true;
  if (std::find(facts.begin(), facts.end(), goal) != facts.end()) return true;
  std::vector<TermId> all = facts;
  all.push_back(store.not_(goal));
  return check_sat(store, all, limits) == SatResult::Unsat;
}

}  // namespace mcv
