#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mcv/solver.hpp"
#include "mcv/term.hpp"

namespace mcv {

struct ChunkFamily {
  enum class Kind { Field, Integer, NewBlock, BasesConstructed, VType, Predicate, InstancePredicate };
  Kind kind = Kind::Predicate;
  std::string cls;   // Field, NewBlock, BasesConstructed, VType: class; InstancePredicate: root class
  std::string name;  // Field: field name; Predicate, InstancePredicate: predicate name

  static ChunkFamily field(std::string c, std::string f) { return {Kind::Field, std::move(c), std::move(f)}; }
  static ChunkFamily integer() { return {Kind::Integer, "", ""}; }
  static ChunkFamily new_block(std::string c) { return {Kind::NewBlock, std::move(c), ""}; }
  static ChunkFamily bases_constructed(std::string c) { return {Kind::BasesConstructed, std::move(c), ""}; }
  static ChunkFamily vtype(std::string c) { return {Kind::VType, std::move(c), ""}; }
  static ChunkFamily predicate(std::string n) { return {Kind::Predicate, "", std::move(n)}; }
  static ChunkFamily instance(std::string root, std::string n) {
    return {Kind::InstancePredicate, std::move(root), std::move(n)};
  }

  std::string str() const;
  friend bool operator==(const ChunkFamily &, const ChunkFamily &) = default;
};

struct Chunk {
  ChunkFamily family;
  std::optional<TermId> index;
  Rational coef = 1;
  std::vector<TermId> args;
};

std::string chunk_str(const TermStore &store, const Chunk &c);

struct Pattern {
  enum class Kind { Fixed, Bind, Any };
  Kind kind = Kind::Any;
  TermId term = -1;

  static Pattern fixed(TermId t) { return {Kind::Fixed, t}; }
  static Pattern bind() { return {Kind::Bind, -1}; }
  static Pattern any() { return {Kind::Any, -1}; }
};

struct CoefPattern {
  enum class Kind { Fixed, All };
  Kind kind = Kind::Fixed;
  Rational value = 1;

  static CoefPattern fixed(Rational r) { return {Kind::Fixed, std::move(r)}; }
  static CoefPattern all() { return {Kind::All, 0}; }
};

struct Match {
  std::size_t position = 0;
  Chunk chunk;      // as found in the heap before removal
  Rational taken;   // coefficient consumed (or read, for peeks)
};

struct TraceEvent {
  enum class Kind { Produce, Consume, Assume, Branch, Call, Note, Unreachable };
  Kind kind = Kind::Note;
  SourceLoc loc;
  std::string text;
  std::size_t heap_size = 0;
  std::size_t path_size = 0;
};

std::string_view trace_kind_name(TraceEvent::Kind k);

using Trace = std::vector<TraceEvent>;

// Local variable binding. Class-typed locals and references hold an address.
struct Binding {
  TermId value = -1;
  TypeRef type;
  bool object = false;  // stack object owned by the current scope
};

// The unit of symbolic execution: path condition, chunk heap and locals.
// A SymState is a value; copies share the term store and trace sink.
class SymState {
 public:
  SymState(std::shared_ptr<TermStore> store, std::shared_ptr<Trace> trace, SolverLimits limits = {});

  TermStore &terms() const { return *store_; }
  const std::shared_ptr<TermStore> &store_ptr() const { return store_; }

  const std::vector<TermId> &path() const { return path_; }
  bool inconsistent() const { return inconsistent_; }
  void assume(TermId f, SourceLoc loc = {});
  bool entails(TermId f) const;
  // Truth value of `f` on the current path when decidable.
  std::optional<bool> decide(TermId f) const;

  const std::vector<Chunk> &heap() const { return heap_; }
  // Identical chunks coexist. For single-resource families, any aliasing
  // that would exceed full permission at one address is ruled out on the path.
  void add_chunk(Chunk c);
  void remove_chunk(std::size_t position) { heap_.erase(heap_.begin() + static_cast<long>(position)); }
  void clear_heap() { heap_.clear(); }

  // First-match lookup in insertion order. Removes the taken coefficient
  // unless `peek`. Fixed patterns are compared by entailment.
  std::optional<Match> match_chunk(const ChunkFamily &family, const std::optional<Pattern> &index,
                                   const CoefPattern &coef, const std::vector<Pattern> &args, bool peek = false);

  std::map<std::string, Binding> &env() { return env_; }
  const std::map<std::string, Binding> &env() const { return env_; }
  const Binding *lookup(const std::string &name) const;
  void bind(const std::string &name, TermId value, TypeRef type = {}, bool object = false);

  void event(TraceEvent::Kind kind, SourceLoc loc, std::string text) const;
  const std::shared_ptr<Trace> &trace() const { return trace_; }

  std::vector<std::string> heap_strings() const;

 private:
  void separate(const Chunk &c);
  std::optional<Match> gather(std::size_t first, const Rational &want, bool peek);

  std::shared_ptr<TermStore> store_;
  std::shared_ptr<Trace> trace_;
  SolverLimits limits_;
  std::vector<TermId> path_;
  bool inconsistent_ = false;
  std::vector<Chunk> heap_;
  std::map<std::string, Binding> env_;
};

}  // namespace mcv
