#include "mcv/term.hpp"

#include <sstream>

namespace mcv {

std::string rational_str(const Rational &r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

TermStore::TermStore() {
  zero_ = number(0);
  TermNode t;
  t.kind = TermKind::BoolConst;
  t.sort = Sort::Bool;
  t.bool_value = true;
  true_ = intern(t);
  t.bool_value = false;
  false_ = intern(t);
}

TermId TermStore::intern(TermNode n) {
  std::string key = std::to_string(static_cast<int>(n.kind)) + "|" + n.text + "|" + n.aux + "|";
  if (n.kind == TermKind::Number) key += rational_str(n.value);
  if (n.kind == TermKind::BoolConst) key += n.bool_value ? "T" : "F";
  for (TermId k : n.kids) key += "," + std::to_string(k);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  TermId id = static_cast<TermId>(nodes_.size());
  nodes_.push_back(std::move(n));
  index_.emplace(std::move(key), id);
  return id;
}

TermId TermStore::fresh(const std::string &hint, Sort sort) {
  int n = fresh_counts_[hint]++;
  TermNode t;
  t.kind = TermKind::Symbol;
  t.sort = sort;
  t.text = hint + "_" + std::to_string(n);
  return intern(std::move(t));
}

TermId TermStore::number(const Rational &v) {
  TermNode t;
  t.kind = TermKind::Number;
  t.sort = denominator(v) == 1 ? Sort::Int : Sort::Real;
  t.value = v;
  return intern(std::move(t));
}

TermId TermStore::type_info(const std::string &cls) {
  TermNode t;
  t.kind = TermKind::TypeInfo;
  t.text = cls;
  return intern(std::move(t));
}

TermId TermStore::field_ptr(TermId base, const OffsetSymbol &off) {
  TermNode t;
  t.kind = TermKind::FieldPtr;
  t.text = off.derived;
  t.aux = off.base;
  t.kids = {base};
  return intern(std::move(t));
}

TermId TermStore::field_addr(TermId object, const std::string &cls, const std::string &field) {
  TermNode t;
  t.kind = TermKind::FieldAddr;
  t.text = cls;
  t.aux = field;
  t.kids = {object};
  return intern(std::move(t));
}

TermId TermStore::upcast(TermId addr, const UpcastPath &path) {
  for (const OffsetSymbol &o : path) addr = field_ptr(addr, o);
  return addr;
}

namespace {
Sort arith_sort(Sort a, Sort b) { return (a == Sort::Real || b == Sort::Real) ? Sort::Real : Sort::Int; }
}  // namespace

TermId TermStore::add(TermId a, TermId b) {
  if (is_number(a) && is_number(b)) return number(node(a).value + node(b).value);
  if (a == zero_) return b;
  if (b == zero_) return a;
  if (a > b) std::swap(a, b);
  TermNode t;
  t.kind = TermKind::Add;
  t.sort = arith_sort(sort(a), sort(b));
  t.kids = {a, b};
  return intern(std::move(t));
}

TermId TermStore::sub(TermId a, TermId b) {
  if (is_number(a) && is_number(b)) return number(node(a).value - node(b).value);
  if (b == zero_) return a;
  if (a == b) return zero_;
  TermNode t;
  t.kind = TermKind::Sub;
  t.sort = arith_sort(sort(a), sort(b));
  t.kids = {a, b};
  return intern(std::move(t));
}

TermId TermStore::mul(TermId a, TermId b) {
  if (is_number(a) && is_number(b)) return number(node(a).value * node(b).value);
  if (a == zero_ || b == zero_) return zero_;
  if (is_number(a) && node(a).value == 1) return b;
  if (is_number(b) && node(b).value == 1) return a;
  if (a > b) std::swap(a, b);
  TermNode t;
  t.kind = TermKind::Mul;
  t.sort = arith_sort(sort(a), sort(b));
  t.kids = {a, b};
  return intern(std::move(t));
}

TermId TermStore::neg(TermId a) {
  if (is_number(a)) return number(-node(a).value);
  if (node(a).kind == TermKind::Neg) return node(a).kids[0];
  TermNode t;
  t.kind = TermKind::Neg;
  t.sort = sort(a);
  t.kids = {a};
  return intern(std::move(t));
}

TermId TermStore::eq(TermId a, TermId b) {
  if (a == b) return true_;
  const TermNode &x = node(a), &y = node(b);
  if (x.kind == y.kind &&
      (x.kind == TermKind::Number || x.kind == TermKind::TypeInfo || x.kind == TermKind::BoolConst))
    return false_;  // distinct interned constants
  if ((x.kind == TermKind::TypeInfo && b == zero_) || (y.kind == TermKind::TypeInfo && a == zero_))
    return false_;
  if (a > b) std::swap(a, b);
  TermNode t;
  t.kind = TermKind::Eq;
  t.sort = Sort::Bool;
  t.kids = {a, b};
  return intern(std::move(t));
}

TermId TermStore::lt(TermId a, TermId b) {
  if (is_number(a) && is_number(b)) return boolean(node(a).value < node(b).value);
  if (a == b) return false_;
  TermNode t;
  t.kind = TermKind::Lt;
  t.sort = Sort::Bool;
  t.kids = {a, b};
  return intern(std::move(t));
}

TermId TermStore::le(TermId a, TermId b) {
  if (is_number(a) && is_number(b)) return boolean(node(a).value <= node(b).value);
  if (a == b) return true_;
  TermNode t;
  t.kind = TermKind::Le;
  t.sort = Sort::Bool;
  t.kids = {a, b};
  return intern(std::move(t));
}

TermId TermStore::not_(TermId a) {
  if (a == true_) return false_;
  if (a == false_) return true_;
  if (node(a).kind == TermKind::Not) return node(a).kids[0];
  TermNode t;
  t.kind = TermKind::Not;
  t.sort = Sort::Bool;
  t.kids = {a};
  return intern(std::move(t));
}

TermId TermStore::and_(TermId a, TermId b) {
  if (a == true_) return b;
  if (b == true_) return a;
  if (a == false_ || b == false_) return false_;
  if (a == b) return a;
  TermNode t;
  t.kind = TermKind::And;
  t.sort = Sort::Bool;
  t.kids = {a, b};
  return intern(std::move(t));
}

TermId TermStore::or_(TermId a, TermId b) {
  if (a == false_) return b;
  if (b == false_) return a;
  if (a == true_ || b == true_) return true_;
  if (a == b) return a;
  TermNode t;
  t.kind = TermKind::Or;
  t.sort = Sort::Bool;
  t.kids = {a, b};
  return intern(std::move(t));
}

std::string TermStore::str(TermId id) const {
  const TermNode &t = node(id);
  auto bin = [&](const char *op) { return "(" + str(t.kids[0]) + " " + op + " " + str(t.kids[1]) + ")"; };
  switch (t.kind) {
    case TermKind::Symbol: return t.text;
    case TermKind::Number: return rational_str(t.value);
    case TermKind::BoolConst: return t.bool_value ? "true" : "false";
    case TermKind::TypeInfo: return t.text + "_type_info";
    case TermKind::FieldPtr:
      return "field_ptr(" + str(t.kids[0]) + ", " + t.text + "_" + t.aux + "_offset)";
    case TermKind::FieldAddr: return "field_addr(" + str(t.kids[0]) + ", " + t.text + "::" + t.aux + ")";
    case TermKind::Add: return bin("+");
    case TermKind::Sub: return bin("-");
    case TermKind::Mul: return bin("*");
    case TermKind::Neg: return "-" + str(t.kids[0]);
    case TermKind::Eq: return bin("==");
    case TermKind::Lt: return bin("<");
    case TermKind::Le: return bin("<=");
    case TermKind::Not:
      if (node(t.kids[0]).kind == TermKind::Eq) {
        const TermNode &e = node(t.kids[0]);
        return "(" + str(e.kids[0]) + " != " + str(e.kids[1]) + ")";
      }
      return "!" + str(t.kids[0]);
    case TermKind::And: return bin("&&");
    case TermKind::Or: return bin("||");
  }
  return "?";
}

}  // namespace mcv
