#include "properties.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "mcv/assertions.hpp"
#include "mcv/class_table.hpp"
#include "mcv/parser.hpp"
#include "mcv/printer.hpp"
#include "mcv/solver.hpp"
#include "mcv/symstate.hpp"

namespace mcv::props {

std::string Outcome::summary() const {
  std::ostringstream os;
  os << cases << " cases, " << interesting << " non-vacuous, " << failures << " failures";
  if (!first_failure.empty()) os << "; first: " << first_failure;
  return os.str();
}

namespace {

using Rng = std::mt19937_64;

int pick(Rng &rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool coin(Rng &rng, int percent = 50) { return pick(rng, 1, 100) <= percent; }

void record(Outcome &o, const std::string &what) {
  ++o.failures;
  if (o.first_failure.empty()) o.first_failure = what;
}

// Finite model of the solver theory. field_ptr(a, o_k) = a == 0 ? 0 : 10a + k
// with k fixed per offset; TypeInfo(C) = 100 + index of C.
class Model {
 public:
  explicit Model(const TermStore &s) : s_(s) {}

  std::map<TermId, long long> symbols;

  long long offset_index(const TermNode &n) {
    auto key = std::to_string(static_cast<int>(n.kind)) + n.text + "|" + n.aux;
    auto [it, inserted] = offsets_.emplace(key, static_cast<long long>(offsets_.size()) + 1);
    return it->second;
  }

  long long type_index(const std::string &cls) {
    auto [it, inserted] = infos_.emplace(cls, static_cast<long long>(infos_.size()));
    return 100 + it->second;
  }

  // Integer value of an arithmetic term.
  long long num(TermId t) {
    const TermNode &n = s_.node(t);
    switch (n.kind) {
      case TermKind::Symbol: return symbols.at(t);
      case TermKind::Number: return static_cast<long long>(numerator(n.value));
      case TermKind::TypeInfo: return type_index(n.text);
      case TermKind::FieldPtr:
      case TermKind::FieldAddr: {
        long long a = num(n.kids[0]);
        return a == 0 ? 0 : 10 * a + offset_index(n);
      }
      case TermKind::Add: return num(n.kids[0]) + num(n.kids[1]);
      case TermKind::Sub: return num(n.kids[0]) - num(n.kids[1]);
      case TermKind::Mul: return num(n.kids[0]) * num(n.kids[1]);
      case TermKind::Neg: return -num(n.kids[0]);
      default: return truth(t) ? 1 : 0;
    }
  }

  bool truth(TermId t) {
    const TermNode &n = s_.node(t);
    switch (n.kind) {
      case TermKind::BoolConst: return n.bool_value;
      case TermKind::Eq: return num(n.kids[0]) == num(n.kids[1]);
      case TermKind::Lt: return num(n.kids[0]) < num(n.kids[1]);
      case TermKind::Le: return num(n.kids[0]) <= num(n.kids[1]);
      case TermKind::Not: return !truth(n.kids[0]);
      case TermKind::And: return truth(n.kids[0]) && truth(n.kids[1]);
      case TermKind::Or: return truth(n.kids[0]) || truth(n.kids[1]);
      case TermKind::Symbol: return symbols.at(t) != 0;
      default: return num(t) != 0;
    }
  }

 private:
  const TermStore &s_;
  std::map<std::string, long long> offsets_;
  std::map<std::string, long long> infos_;
};

// Calls `f` for every assignment of `syms` over {-2..2}; stops when f
// returns false.
void for_each_assignment(Model &m, const std::vector<TermId> &syms, const std::function<bool()> &f) {
  std::vector<long long> vals(syms.size(), -2);
  while (true) {
    for (std::size_t i = 0; i < syms.size(); ++i) m.symbols[syms[i]] = vals[i];
    if (!f()) return;
    std::size_t i = 0;
    while (i < vals.size() && vals[i] == 2) vals[i++] = -2;
    if (i == vals.size()) return;
    ++vals[i];
  }
}

class FormulaGen {
 public:
  FormulaGen(TermStore &s, Rng &rng, int nsyms) : s_(s), rng_(rng) {
    for (int i = 0; i < nsyms; ++i) syms.push_back(s_.fresh("s"));
  }

  std::vector<TermId> syms;

  TermId term(int depth) {
    int r = pick(rng_, 0, depth > 0 ? 9 : 3);
    switch (r) {
      case 0:
      case 1:
      case 2: return syms[static_cast<std::size_t>(pick(rng_, 0, static_cast<int>(syms.size()) - 1))];
      case 3: return s_.integer(pick(rng_, -2, 2));
      case 4: return s_.add(term(depth - 1), term(depth - 1));
      case 5: return s_.sub(term(depth - 1), term(depth - 1));
      case 6: return s_.mul(s_.integer(pick(rng_, -2, 3)), term(depth - 1));
      case 7:
      case 8: {
        static const OffsetSymbol offs[] = {{"D", "B"}, {"D", "C"}, {"E", "B"}};
        return s_.field_ptr(term(depth - 1), offs[pick(rng_, 0, 2)]);
      }
      default: return s_.type_info(pick(rng_, 0, 1) ? "A" : "B");
    }
  }

  TermId atom() {
    TermId a = term(2), b = term(2);
    switch (pick(rng_, 0, 4)) {
      case 0: return s_.eq(a, b);
      case 1: return s_.ne(a, b);
      case 2: return s_.lt(a, b);
      case 3: return s_.le(a, b);
      default: return s_.eq(a, s_.integer(0));
    }
  }

  TermId formula(int depth) {
    if (depth == 0 || coin(rng_, 60)) return atom();
    switch (pick(rng_, 0, 2)) {
      case 0: return s_.and_(formula(depth - 1), formula(depth - 1));
      case 1: return s_.or_(formula(depth - 1), formula(depth - 1));
      default: return s_.not_(formula(depth - 1));
    }
  }

  // A goal likely to follow from `facts`, so that Valid verdicts are common.
  TermId goal(const std::vector<TermId> &facts) {
    int r = pick(rng_, 0, 5);
    TermId f = facts[static_cast<std::size_t>(pick(rng_, 0, static_cast<int>(facts.size()) - 1))];
    const TermNode &n = s_.node(f);
    switch (r) {
      case 0: return s_.or_(f, atom());
      case 1:
        if (n.kind == TermKind::Lt) return s_.le(n.kids[0], n.kids[1]);
        if (n.kind == TermKind::Eq) return s_.le(n.kids[1], n.kids[0]);
        return f;
      case 2:
        if (n.kind == TermKind::Eq) return s_.eq(s_.field_ptr(n.kids[0], {"D", "B"}), s_.field_ptr(n.kids[1], {"D", "B"}));
        return s_.implies(atom(), f);
      case 3: return s_.and_(f, facts[0]);
      default: return formula(1);
    }
  }

 private:
  TermStore &s_;
  Rng &rng_;
};

}  // namespace

Outcome entailment_soundness(int cases, std::uint64_t seed) {
  Outcome o;
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    TermStore s;
    FormulaGen g(s, rng, pick(rng, 1, 4));
    std::vector<TermId> facts;
    int nf = pick(rng, 1, 4);
    for (int i = 0; i < nf; ++i) facts.push_back(g.formula(2));
    // chains such as s0 < s1, s1 < s2 give transitive goals
    if (coin(rng, 30) && g.syms.size() >= 3) {
      facts.push_back(s.lt(g.syms[0], g.syms[1]));
      facts.push_back(s.le(g.syms[1], g.syms[2]));
    }
    TermId goal = coin(rng, 20) && g.syms.size() >= 3 ? s.lt(g.syms[0], g.syms[2]) : g.goal(facts);
    ++o.cases;
    bool unsat = check_sat(s, facts) == SatResult::Unsat;
    bool valid = entails(s, facts, goal);
    if (!unsat && !valid) continue;
    ++o.interesting;
    Model m(s);
    for_each_assignment(m, g.syms, [&] {
      bool holds = true;
      for (TermId f : facts) holds = holds && m.truth(f);
      if (!holds) return true;
      std::string fs;
      for (TermId f : facts) fs += s.str(f) + "; ";
      if (unsat) {
        record(o, "Unsat with model: " + fs);
        return false;
      }
      if (!m.truth(goal)) {
        record(o, "Valid with countermodel: " + fs + "|= " + s.str(goal));
        return false;
      }
      return true;
    });
  }
  return o;
}

namespace {

const char *kRoundtripProgram = R"(
class S {
public:
  int f;
  int g;
};
//@ predicate p(int a, int b);
)";

class AssertionGen {
 public:
  explicit AssertionGen(Rng &rng) : rng_(rng) {}

  // Assertion text for produce and for the matching consume, where each
  // `?vN` of the former becomes `vN` in the latter.
  std::pair<std::string, std::string> conjunct(bool concrete) {
    int r = pick(rng_, 0, concrete ? 6 : 8);
    if (r <= 1) return pure();
    std::string coef = coef_text();
    std::string addr = std::string(1, "xyz"[pick(rng_, 0, 2)]);
    auto [vp, vc] = value(concrete);
    if (r <= 3) {
      std::string fld = coin(rng_) ? "f" : "g";
      std::string p = coef + "S_" + fld + "(" + addr + ", " + vp + ")";
      std::string q = coef + "S_" + fld + "(" + addr + ", " + vc + ")";
      return {p, q};
    }
    if (r == 4) return {coef + addr + "->f |-> " + vp, coef + addr + "->f |-> " + vc};
    auto [wp, wc] = value(concrete);
    if (r <= 6) return {coef + "p(" + vp + ", " + wp + ")", coef + "p(" + vc + ", " + wc + ")"};
    auto [a1, b1] = assertion(concrete, 1);
    auto [a2, b2] = assertion(concrete, 1);
    std::string cond = coin(rng_) ? "i < j" : "i != 1";
    return {"(" + cond + " ? " + a1 + " : " + a2 + ")", "(" + cond + " ? " + b1 + " : " + b2 + ")"};
  }

  std::pair<std::string, std::string> assertion(bool concrete, int max_len) {
    int n = pick(rng_, 1, max_len);
    std::string p, q;
    for (int i = 0; i < n; ++i) {
      auto [a, b] = conjunct(concrete);
      p += (i ? " &*& " : "") + a;
      q += (i ? " &*& " : "") + b;
    }
    return {p, q};
  }

 private:
  std::string coef_text() {
    static const char *coefs[] = {"", "", "[1/2]", "[1/4]", "[3/4]", "[1/3]"};
    return coefs[pick(rng_, 0, 5)];
  }

  std::pair<std::string, std::string> value(bool concrete) {
    int r = pick(rng_, 0, concrete ? 2 : 3);
    if (r == 0) return {"i", "i"};
    if (r == 1) return {"j", "j"};
    if (r == 2) {
      std::string n = std::to_string(pick(rng_, 0, 3));
      return {n, n};
    }
    std::string v = "v" + std::to_string(next_++);
    return {"?" + v, v};
  }

  std::pair<std::string, std::string> pure() {
    static const char *facts[] = {"i != j", "i < j", "j != 2", "i != 0", "j > i"};
    std::string f = facts[pick(rng_, 0, 4)];
    return {f, f};
  }

  Rng &rng_;
  int next_ = 0;
};

// Equal up to the path condition: every resource carries the same total
// coefficient in both heaps.
bool same_heap(const SymState &st, const std::vector<Chunk> &before) {
  auto same = [&](const Chunk &a, const Chunk &b) {
    if (!(a.family == b.family) || a.args.size() != b.args.size()) return false;
    for (std::size_t k = 0; k < a.args.size(); ++k)
      if (a.args[k] != b.args[k] && !st.entails(st.terms().eq(a.args[k], b.args[k]))) return false;
    return true;
  };
  auto total = [&](const std::vector<Chunk> &heap, const Chunk &c) {
    Rational t = 0;
    for (const Chunk &h : heap)
      if (same(h, c)) t += h.coef;
    return t;
  };
  for (const std::vector<Chunk> *heap : {&before, &st.heap()})
    for (const Chunk &c : *heap)
      if (total(before, c) != total(st.heap(), c)) return false;
  return true;
}

}  // namespace

Outcome produce_consume_roundtrip(int cases, std::uint64_t seed) {
  Outcome o;
  Rng rng(seed);
  ParseResult pr = parse_program(kRoundtripProgram, "roundtrip.mcpp");
  BuildResult br = ClassTable::build(std::move(*pr.program));
  EvalContext ctx;
  ctx.table = br.table.get();
  TypeRef sp = TypeRef::class_type("S").pointer_to();
  TypeRef it = TypeRef::make(TypeRef::Base::Int);
  for (int c = 0; c < cases; ++c) {
    AssertionGen g(rng);
    std::string base = g.assertion(true, 3).first;
    auto [pre, post] = g.assertion(false, 4);
    ++o.cases;
    std::string what = "H0 = " + base + "; A = " + pre;
    try {
      AssertionPtr h0 = parse_assertion(base);
      AssertionPtr a = parse_assertion(pre);
      AssertionPtr back = parse_assertion(post);
      SymState st(std::make_shared<TermStore>(), nullptr);
      for (const char *n : {"x", "y", "z"}) st.bind(n, st.terms().fresh(n), sp);
      for (const char *n : {"i", "j"}) st.bind(n, st.terms().fresh(n), it);
      bool counted = false;
      produce(st, *h0, ctx, [&](SymState s0) {
        produce(s0, *a, ctx, [&](SymState s1) {
          consume(s1, *back, ctx, [&](SymState s2) {
            if (!counted) ++o.interesting;
            counted = true;
            if (!same_heap(s2, s0.heap())) {
              std::string got;
              for (const std::string &h : s2.heap_strings()) got += h + " ";
              record(o, what + ": heap became " + got);
            }
          });
        });
      });
    } catch (const DiagnosticError &e) {
      record(o, what + ": " + e.diagnostic().str());
    }
  }
  return o;
}

namespace {

struct Dag {
  int n = 0;
  std::vector<std::vector<int>> bases;  // bases[i] ⊆ {0..i-1}, derivation order

  std::string program() const {
    std::string out;
    for (int i = 0; i < n; ++i) {
      out += "class C" + std::to_string(i);
      for (std::size_t k = 0; k < bases[static_cast<std::size_t>(i)].size(); ++k)
        out += std::string(k ? ", " : " : ") + "public C" + std::to_string(bases[static_cast<std::size_t>(i)][k]);
      out += " {};\n";
    }
    return out;
  }

  // All base paths from `d` to `b` as offset lists.
  void paths(int d, int b, UpcastPath &cur, std::vector<UpcastPath> &out) const {
    if (d == b) {
      out.push_back(cur);
      return;
    }
    for (int x : bases[static_cast<std::size_t>(d)]) {
      cur.push_back({"C" + std::to_string(d), "C" + std::to_string(x)});
      paths(x, b, cur, out);
      cur.pop_back();
    }
  }
};

Dag random_dag(Rng &rng) {
  Dag d;
  d.n = pick(rng, 2, 8);
  d.bases.resize(static_cast<std::size_t>(d.n));
  for (int i = 1; i < d.n; ++i) {
    int want = pick(rng, 0, std::min(i, 3));
    std::vector<int> pool;
    for (int j = 0; j < i; ++j) pool.push_back(j);
    std::shuffle(pool.begin(), pool.end(), rng);
    for (int k = 0; k < want; ++k) d.bases[static_cast<std::size_t>(i)].push_back(pool[static_cast<std::size_t>(k)]);
  }
  return d;
}

}  // namespace

Outcome upcast_agreement(int cases, std::uint64_t seed) {
  Outcome o;
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    Dag dag = random_dag(rng);
    ++o.cases;
    ParseResult pr = parse_program(dag.program(), "dag.mcpp");
    if (!pr.ok()) {
      record(o, "parse failed: " + dag.program());
      continue;
    }
    BuildResult br = ClassTable::build(std::move(*pr.program));
    if (!br.ok()) {
      record(o, "resolution failed: " + dag.program());
      continue;
    }
    bool ambiguous_seen = false;
    for (int d = 0; d < dag.n; ++d) {
      for (int b = 0; b < dag.n; ++b) {
        std::vector<UpcastPath> all;
        UpcastPath cur;
        dag.paths(d, b, cur, all);
        UpcastResult r = br.table->upcast_path("C" + std::to_string(d), "C" + std::to_string(b));
        UpcastResult::Status want = all.empty()       ? UpcastResult::Status::NotABase
                                    : all.size() == 1 ? UpcastResult::Status::Ok
                                                      : UpcastResult::Status::Ambiguous;
        ambiguous_seen = ambiguous_seen || want == UpcastResult::Status::Ambiguous;
        bool ok = r.status == want && (want != UpcastResult::Status::Ok || r.path == all[0]);
        bool derives = br.table->derives_from("C" + std::to_string(d), "C" + std::to_string(b));
        if (!ok || derives == all.empty())
          record(o, "C" + std::to_string(d) + " -> C" + std::to_string(b) + " with " +
                        std::to_string(all.size()) + " paths in\n" + dag.program());
      }
    }
    o.interesting += ambiguous_seen;
  }
  return o;
}

Outcome coefficient_accounting(int cases, std::uint64_t seed) {
  Outcome o;
  Rng rng(seed);
  static const Rational coefs[] = {Rational(1, 4), Rational(1, 3), Rational(1, 2), Rational(2, 3),
                                   Rational(3, 4), Rational(1)};
  static const ChunkFamily families[] = {ChunkFamily::field("S", "f"), ChunkFamily::new_block("S"),
                                         ChunkFamily::integer(), ChunkFamily::predicate("p")};
  for (int c = 0; c < cases; ++c) {
    ++o.cases;
    SymState st(std::make_shared<TermStore>(), nullptr);
    TermStore &s = st.terms();
    std::vector<TermId> addrs;
    for (int i = 0; i < 3; ++i) addrs.push_back(s.fresh("a"));
    std::vector<TermId> pool = addrs;
    pool.push_back(s.integer(1));
    pool.push_back(s.integer(2));
    auto any = [&](const std::vector<TermId> &v) { return v[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(v.size()) - 1))]; };
    std::string log;
    int steps = pick(rng, 3, 12);
    for (int k = 0; k < steps && !st.inconsistent(); ++k) {
      const ChunkFamily &fam = families[pick(rng, 0, 3)];
      TermId at = any(pool);
      int r = pick(rng, 0, 9);
      if (r <= 5) {
        Chunk ch;
        ch.family = fam;
        ch.coef = coefs[pick(rng, 0, 5)];
        ch.args = {at};
        if (fam.kind == ChunkFamily::Kind::Field || fam.kind == ChunkFamily::Kind::Integer)
          ch.args.push_back(s.integer(pick(rng, 0, 1)));
        log += "add " + chunk_str(s, ch) + "; ";
        st.add_chunk(ch);
      } else if (r <= 7) {
        std::vector<Pattern> args{Pattern::fixed(at)};
        if (fam.kind == ChunkFamily::Kind::Field || fam.kind == ChunkFamily::Kind::Integer)
          args.push_back(Pattern::any());
        Rational want = coefs[pick(rng, 0, 5)];
        log += "take " + rational_str(want) + " of " + fam.str() + "(" + s.str(at) + "); ";
        auto sum = [&] {
          Rational t = 0;
          for (const Chunk &ch : st.heap()) t += ch.coef;
          return t;
        };
        Rational before = sum();
        auto m = st.match_chunk(fam, std::nullopt, CoefPattern::fixed(want), args);
        if (sum() != before - (m ? m->taken : Rational(0))) record(o, log + "match changed the wrong amount");
      } else {
        TermId a = any(addrs), b = any(addrs);
        TermId f = r == 8 ? s.eq(a, b) : s.ne(a, b);
        log += "assume " + s.str(f) + "; ";
        st.assume(f);
      }
    }
    if (st.inconsistent()) continue;
    ++o.interesting;
    for (const Chunk &ch : st.heap())
      if (ch.coef <= 0 || (ch.family.kind != ChunkFamily::Kind::Predicate && ch.coef > 1))
        record(o, log + "bad coefficient in " + chunk_str(s, ch));
    Model m(s);
    for_each_assignment(m, addrs, [&] {
      for (TermId f : st.path())
        if (!m.truth(f)) return true;
      std::map<std::pair<std::string, long long>, Rational> total;
      for (const Chunk &ch : st.heap()) {
        if (ch.family.kind == ChunkFamily::Kind::Predicate) continue;
        Rational &t = total[{ch.family.str(), m.num(ch.args[0])}];
        t += ch.coef;
        if (t > 1) {
          record(o, log + "total above 1 for " + ch.family.str() + " at " + std::to_string(m.num(ch.args[0])));
          return false;
        }
      }
      return true;
    });
  }
  return o;
}

namespace {

class ExprGen {
 public:
  explicit ExprGen(Rng &rng) : rng_(rng) {}

  std::string expr(int depth) {
    if (depth == 0) return leaf();
    switch (pick(rng_, 0, 9)) {
      case 0:
      case 1: {
        static const char *ops[] = {"+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "&&", "||"};
        return expr(depth - 1) + " " + ops[pick(rng_, 0, 12)] + " " + expr(depth - 1);
      }
      case 2: return "(" + expr(depth - 1) + ")";
      case 3: return std::string(coin(rng_) ? "-" : "!") + operand(depth - 1);
      case 4: return operand(depth - 1) + "->" + ident();
      case 5: return "f(" + expr(depth - 1) + ", " + leaf() + ")";
      case 6: return operand(depth - 1) + "->m(" + expr(depth - 1) + ")";
      case 7: return expr(depth - 1) + " ? " + expr(depth - 1) + " : " + expr(depth - 1);
      case 8: return "(B *)" + operand(depth - 1);
      default: return leaf();
    }
  }

  std::string assertion(int depth) {
    if (depth == 0) return chunk();
    switch (pick(rng_, 0, 4)) {
      case 0: return assertion(depth - 1) + " &*& " + assertion(depth - 1);
      case 1: return "(" + expr(1) + " ? " + assertion(depth - 1) + " : " + assertion(depth - 1) + ")";
      case 2: return expr(2);
      default: return chunk();
    }
  }

 private:
  std::string ident() {
    static const char *names[] = {"a", "b", "x", "val"};
    return names[pick(rng_, 0, 3)];
  }
  std::string leaf() {
    switch (pick(rng_, 0, 4)) {
      case 0: return std::to_string(pick(rng_, 0, 99));
      case 1: return "this";
      case 2: return coin(rng_) ? "true" : "false";
      default: return ident();
    }
  }
  std::string operand(int depth) { return depth > 0 && coin(rng_) ? "(" + expr(depth) + ")" : leaf(); }
  std::string chunk() {
    static const char *coefs[] = {"", "[1/2]", "[?q]", "[_]"};
    std::string coef = coefs[pick(rng_, 0, 3)];
    switch (pick(rng_, 0, 3)) {
      case 0: return coef + "S_f(" + leaf() + ", ?v)";
      case 1: return coef + leaf() + "->x |-> " + operand(1);
      case 2: return coef + "x->inv(&typeid(A))(" + leaf() + ")";
      default: return coef + "p(" + expr(1) + ", _)";
    }
  }

  Rng &rng_;
};

}  // namespace

Outcome print_roundtrip(int cases, std::uint64_t seed) {
  Outcome o;
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    ExprGen g(rng);
    ++o.cases;
    bool as_assertion = coin(rng);
    std::string text = as_assertion ? g.assertion(2) : g.expr(3);
    try {
      std::string dump1, dump2, printed;
      if (as_assertion) {
        AssertionPtr a = parse_assertion(text);
        printed = to_source(*a);
        dump1 = structural_dump(*a);
        dump2 = structural_dump(*parse_assertion(printed));
      } else {
        ExprPtr e = parse_expression(text);
        printed = to_source(*e);
        dump1 = structural_dump(*e);
        dump2 = structural_dump(*parse_expression(printed));
      }
      ++o.interesting;
      if (dump1 != dump2) record(o, text + " printed as " + printed);
    } catch (const DiagnosticError &e) {
      record(o, text + ": " + e.diagnostic().str());
    }
  }
  return o;
}

}  // namespace mcv::props
