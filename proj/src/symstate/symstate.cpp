#include "mcv/symstate.hpp"

#include <algorithm>

namespace mcv {

std::string ChunkFamily::str() const {
  switch (kind) {
    case Kind::Field: return cls + "_" + name;
    case Kind::Integer: return "integer";
    case Kind::NewBlock: return "new_block_" + cls;
    case Kind::BasesConstructed: return cls + "_bases_constructed";
    case Kind::VType: return cls + "_vtype";
    case Kind::Predicate: return name;
    case Kind::InstancePredicate: return cls + "#" + name;
  }
  return "?";
}

std::string chunk_str(const TermStore &store, const Chunk &c) {
  std::string s;
  if (c.coef != 1) s += "[" + rational_str(c.coef) + "]";
  s += c.family.str() + "(";
  bool first = true;
  auto put = [&](TermId t) {
    if (!first) s += ", ";
    first = false;
    s += store.str(t);
  };
  if (c.family.kind == ChunkFamily::Kind::InstancePredicate && !c.args.empty()) {
    put(c.args[0]);
    if (c.index) put(*c.index);
    for (std::size_t i = 1; i < c.args.size(); ++i) put(c.args[i]);
  } else {
    if (c.index) put(*c.index);
    for (TermId a : c.args) put(a);
  }
  return s + ")";
}

std::string_view trace_kind_name(TraceEvent::Kind k) {
  switch (k) {
    case TraceEvent::Kind::Produce: return "produce";
    case TraceEvent::Kind::Consume: return "consume";
    case TraceEvent::Kind::Assume: return "assume";
    case TraceEvent::Kind::Branch: return "branch";
    case TraceEvent::Kind::Call: return "call";
    case TraceEvent::Kind::Note: return "note";
    case TraceEvent::Kind::Unreachable: return "unreachable";
  }
  return "?";
}

SymState::SymState(std::shared_ptr<TermStore> store, std::shared_ptr<Trace> trace, SolverLimits limits)
    : store_(std::move(store)), trace_(std::move(trace)), limits_(limits) {}

void SymState::assume(TermId f, SourceLoc loc) {
  if (inconsistent_ || store_->is_true(f)) return;
  path_.push_back(f);
  event(TraceEvent::Kind::Assume, loc, store_->str(f));
  if (check_sat(*store_, path_, limits_) == SatResult::Unsat) {
    inconsistent_ = true;
    event(TraceEvent::Kind::Unreachable, loc, "path condition is inconsistent");
  }
}

bool SymState::entails(TermId f) const {
  if (inconsistent_) return true;
  return mcv::entails(*store_, path_, f, limits_);
}

std::optional<bool> SymState::decide(TermId f) const {
  if (entails(f)) return true;
  if (entails(store_->not_(f))) return false;
  return std::nullopt;
}

namespace {

// Families whose chunks are permissions to a single resource: the total
// coefficient for one address never exceeds 1.
bool exclusive(const ChunkFamily &f) {
  return f.kind != ChunkFamily::Kind::Predicate && f.kind != ChunkFamily::Kind::InstancePredicate;
}

}  // namespace

void SymState::add_chunk(Chunk c) {
  if (exclusive(c.family) && !c.args.empty()) separate(c);
  heap_.push_back(std::move(c));
}

void SymState::separate(const Chunk &c) {
  // Group the other chunks of the family by address. Any set of groups that
  // would push the new chunk's address above 1 cannot all alias it.
  TermId at = c.args[0];
  Rational own = c.coef;
  std::vector<std::pair<TermId, Rational>> groups;
  for (const Chunk &h : heap_) {
    if (!(h.family == c.family) || h.args.empty()) continue;
    TermId a = h.args[0];
    if (a == at || entails(store_->eq(a, at))) {
      own += h.coef;
      continue;
    }
    if (entails(store_->ne(a, at))) continue;
    auto g = std::find_if(groups.begin(), groups.end(),
                          [&](const auto &p) { return p.first == a || entails(store_->eq(p.first, a)); });
    if (g == groups.end())
      groups.emplace_back(a, h.coef);
    else
      g->second += h.coef;
  }
  if (own > 1) {
    assume(store_->boolean(false));
    return;
  }
  std::size_t m = std::min<std::size_t>(groups.size(), 12);
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    Rational sum = own;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (1u << i)) sum += groups[i].second;
    if (sum <= 1) continue;
    bool minimal = true;
    for (std::size_t i = 0; i < m && minimal; ++i)
      if ((mask & (1u << i)) && sum - groups[i].second > 1) minimal = false;
    if (!minimal) continue;
    TermId apart = store_->boolean(false);
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (1u << i)) apart = store_->or_(apart, store_->ne(groups[i].first, at));
    assume(apart);
  }
  for (std::size_t i = m; i < groups.size(); ++i)
    if (own + groups[i].second > 1) assume(store_->ne(groups[i].first, at));
}

std::optional<Match> SymState::match_chunk(const ChunkFamily &family, const std::optional<Pattern> &index,
                                           const CoefPattern &coef, const std::vector<Pattern> &args,
                                           bool peek) {
  auto fits = [&](const Pattern &p, TermId actual) {
    return p.kind != Pattern::Kind::Fixed || entails(store_->eq(p.term, actual));
  };
  for (std::size_t i = 0; i < heap_.size(); ++i) {
    const Chunk &c = heap_[i];
    if (!(c.family == family) || c.args.size() != args.size()) continue;
    if (index.has_value() != c.index.has_value()) continue;
    if (index && !fits(*index, *c.index)) continue;
    bool ok = true;
    for (std::size_t k = 0; k < args.size() && ok; ++k) ok = fits(args[k], c.args[k]);
    if (!ok) continue;
    if (coef.kind == CoefPattern::Kind::Fixed && coef.value > c.coef) {
      if (auto m = gather(i, coef.value, peek)) return m;
      continue;
    }
    Match m;
    m.position = i;
    m.chunk = c;
    m.taken = coef.kind == CoefPattern::Kind::Fixed ? coef.value : c.coef;
    if (!peek) {
      if (m.taken == c.coef)
        heap_.erase(heap_.begin() + static_cast<long>(i));
      else
        heap_[i].coef -= m.taken;
    }
    return m;
  }
  return std::nullopt;
}

std::optional<Match> SymState::gather(std::size_t first, const Rational &want, bool peek) {
  // Fractions of one resource may sit in several chunks whose arguments are
  // equal but not syntactically identical.
  const Chunk base = heap_[first];
  auto same = [&](const Chunk &c) {
    if (!(c.family == base.family) || c.args.size() != base.args.size()) return false;
    if (c.index.has_value() != base.index.has_value()) return false;
    if (c.index && !entails(store_->eq(*c.index, *base.index))) return false;
    for (std::size_t k = 0; k < c.args.size(); ++k)
      if (!entails(store_->eq(c.args[k], base.args[k]))) return false;
    return true;
  };
  std::vector<std::size_t> parts{first};
  Rational total = base.coef;
  for (std::size_t j = first + 1; j < heap_.size() && total < want; ++j)
    if (same(heap_[j])) {
      parts.push_back(j);
      total += heap_[j].coef;
    }
  if (total < want) return std::nullopt;
  Match m;
  m.position = first;
  m.chunk = base;
  m.chunk.coef = total;
  m.taken = want;
  if (peek) return m;
  Rational left = want;
  std::vector<std::size_t> drop;
  for (std::size_t j : parts) {
    Rational t = heap_[j].coef < left ? heap_[j].coef : left;
    heap_[j].coef -= t;
    left -= t;
    if (heap_[j].coef == 0) drop.push_back(j);
  }
  for (auto it = drop.rbegin(); it != drop.rend(); ++it) heap_.erase(heap_.begin() + static_cast<long>(*it));
  return m;
}

const Binding *SymState::lookup(const std::string &name) const {
  auto it = env_.find(name);
  return it == env_.end() ? nullptr : &it->second;
}

void SymState::bind(const std::string &name, TermId value, TypeRef type, bool object) {
  env_[name] = Binding{value, std::move(type), object};
}

void SymState::event(TraceEvent::Kind kind, SourceLoc loc, std::string text) const {
  if (!trace_) return;
  trace_->push_back(TraceEvent{kind, loc, std::move(text), heap_.size(), path_.size()});
}

std::vector<std::string> SymState::heap_strings() const {
  std::vector<std::string> out;
  for (const Chunk &c : heap_) out.push_back(chunk_str(*store_, c));
  return out;
}

}  // namespace mcv
