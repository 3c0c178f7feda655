#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcv/class_table.hpp"

namespace mcv {

using Rational = boost::multiprecision::cpp_rational;
using TermId = int;

std::string rational_str(const Rational &r);

enum class Sort { Int, Real, Bool };

enum class TermKind {
  Symbol,
  Number,
  BoolConst,
  TypeInfo,   // text = class
  FieldPtr,   // kids[0] = base address; text = derived, aux = base class
  FieldAddr,  // kids[0] = object address; text = class, aux = field
  Add,
  Sub,
  Mul,
  Neg,
  Eq,
  Lt,
  Le,
  Not,
  And,
  Or,
};

struct TermNode {
  TermKind kind = TermKind::Symbol;
  Sort sort = Sort::Int;
  std::string text;
  std::string aux;
  Rational value;
  bool bool_value = false;
  std::vector<TermId> kids;
};

// Hash-consed term DAG for one verification obligation. Terms are immutable;
// identical constructions return the same id. Light constant folding is done
// at construction time.
class TermStore {
 public:
  TermStore();

  TermId fresh(const std::string &hint, Sort sort = Sort::Int);
  TermId number(const Rational &v);
  TermId integer(long long v) { return number(Rational(v)); }
  TermId null() { return zero_; }
  TermId boolean(bool b) { return b ? true_ : false_; }
  TermId type_info(const std::string &cls);
  TermId field_ptr(TermId base, const OffsetSymbol &off);
  TermId field_addr(TermId object, const std::string &cls, const std::string &field);
  TermId upcast(TermId addr, const UpcastPath &path);

  TermId add(TermId a, TermId b);
  TermId sub(TermId a, TermId b);
  TermId mul(TermId a, TermId b);
  TermId neg(TermId a);
  TermId eq(TermId a, TermId b);
  TermId ne(TermId a, TermId b) { return not_(eq(a, b)); }
  TermId lt(TermId a, TermId b);
  TermId le(TermId a, TermId b);
  TermId gt(TermId a, TermId b) { return lt(b, a); }
  TermId ge(TermId a, TermId b) { return le(b, a); }
  TermId not_(TermId a);
  TermId and_(TermId a, TermId b);
  TermId or_(TermId a, TermId b);
  TermId implies(TermId a, TermId b) { return or_(not_(a), b); }

  const TermNode &node(TermId t) const { return nodes_.at(static_cast<std::size_t>(t)); }
  Sort sort(TermId t) const { return node(t).sort; }
  bool is_number(TermId t) const { return node(t).kind == TermKind::Number; }
  bool is_true(TermId t) const { return t == true_; }
  bool is_false(TermId t) const { return t == false_; }
  std::size_t size() const { return nodes_.size(); }

  std::string str(TermId t) const;

 private:
  TermId intern(TermNode n);

  std::vector<TermNode> nodes_;
  std::unordered_map<std::string, TermId> index_;
  std::map<std::string, int> fresh_counts_;
  TermId zero_ = 0, true_ = 0, false_ = 0;
};

}  // namespace mcv
