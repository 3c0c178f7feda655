#include "mcv/verifier.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "mcv/assertions.hpp"
#include "mcv/parser.hpp"
#include "mcv/printer.hpp"

namespace mcv {

std::string Obligation::verdict() const {
  return failure ? std::string(category_name(failure->category)) : "Verified";
}

std::string_view obligation_kind_name(Obligation::Kind k) {
  switch (k) {
    case Obligation::Kind::Function: return "function";
    case Obligation::Kind::Constructor: return "constructor";
    case Obligation::Kind::Destructor: return "destructor";
    case Obligation::Kind::Subtyping: return "subtyping-check";
    case Obligation::Kind::OverrideCompleteness: return "override-completeness";
  }
  return "function";
}

namespace {

TypeRef type_info_ptr() { return TypeRef::make(TypeRef::Base::TypeInfo).pointer_to(); }
TypeRef class_ptr(const std::string &c) { return TypeRef::class_type(c).pointer_to(); }

using Precomp = std::map<const Expr *, Value>;

struct ScopeVar {
  std::string name;
  std::optional<Binding> previous;
  bool object = false;
  TypeRef type;
};

struct Frame {
  std::vector<std::vector<ScopeVar>> scopes;
  int loop_depth = 0;
};

struct ExecState {
  SymState st;
  Frame frame;
};

using ExecCont = std::function<void(ExecState)>;
using ValueCont = std::function<void(ExecState, Value)>;
using CallsCont = std::function<void(ExecState, const Precomp &)>;
using ReturnCont = std::function<void(ExecState, SourceLoc)>;

void collect_calls(const Expr &e, std::vector<const Expr *> &out) {
  for (const ExprPtr &a : e.args)
    if (a) collect_calls(*a, out);
  if (e.kind == ExprKind::Call || e.kind == ExprKind::MemberCall || e.kind == ExprKind::New) out.push_back(&e);
}

void scan_expr(const Expr &e) {
  if (e.kind == ExprKind::DtorCall)
    fail(Category::ExplicitDtorCall, e.loc, "explicit destructor call " + to_source(e) + " is not allowed");
  for (const ExprPtr &a : e.args)
    if (a) scan_expr(*a);
}

// Explicit destructor calls are rejected wherever they occur, reachable or not.
void scan_stmt(const Stmt &s) {
  if (s.expr) scan_expr(*s.expr);
  if (s.lhs) scan_expr(*s.lhs);
  for (const ExprPtr &a : s.ctor_args) scan_expr(*a);
  for (const StmtPtr &b : s.body) scan_stmt(*b);
  if (s.then_branch) scan_stmt(*s.then_branch);
  if (s.else_branch) scan_stmt(*s.else_branch);
}

void assigned_locals(const Stmt &s, std::set<std::string> &out) {
  if (s.kind == StmtKind::Assign && s.lhs && s.lhs->kind == ExprKind::Name) out.insert(s.lhs->name);
  for (const StmtPtr &b : s.body) assigned_locals(*b, out);
  if (s.then_branch) assigned_locals(*s.then_branch, out);
  if (s.else_branch) assigned_locals(*s.else_branch, out);
}

bool is_lvalue(const Value &v) { return v.place.kind != Place::Kind::None; }

ArgType arg_type(const Value &v) { return ArgType{v.type, is_lvalue(v), v.null_literal}; }


// Runs a produce/consume whose failures belong to a call site rather than to
// the callee's contract text.
void at_call_site(SourceLoc site, const std::string &what, const std::function<void(const StateCont &)> &run,
                  const StateCont &k) {
  bool inside = true;
  try {
    run([&](SymState s) {
      inside = false;
      k(std::move(s));
      inside = true;
    });
  } catch (DiagnosticError &e) {
    if (!inside) throw;
    Diagnostic &d = e.diagnostic();
    d.message = what + ": " + d.message + " (contract at " + std::to_string(d.loc.line) + ":" +
                std::to_string(d.loc.col) + ")";
    d.loc = site;
    throw;
  }
}

class Executor {
 public:
  Executor(const ClassTable &table, std::string cls, const FunctionDecl *fn)
      : tbl_(table), fn_(fn) {
    ctx_.table = &table;
    ctx_.cls = std::move(cls);
  }

  const EvalContext &ctx() const { return ctx_; }

  void set_return(ReturnCont r) { on_return_ = std::move(r); }

  // ---- engine chunks -----------------------------------------------------

  static void add_engine(SymState &st, ChunkFamily family, std::vector<TermId> args, SourceLoc loc) {
    Chunk c{std::move(family), std::nullopt, 1, std::move(args)};
    st.event(TraceEvent::Kind::Produce, loc, chunk_str(st.terms(), c));
    st.add_chunk(std::move(c));
  }

  static void take_engine(SymState &st, const ChunkFamily &family, const std::vector<TermId> &args, SourceLoc loc,
                          const std::string &why) {
    std::vector<Pattern> pats;
    for (TermId t : args) pats.push_back(Pattern::fixed(t));
    Chunk want{family, std::nullopt, 1, args};
    auto m = st.match_chunk(family, std::nullopt, CoefPattern::fixed(1), pats);
    if (!m) consume_failure(st, Category::MissingChunk, loc, why, chunk_str(st.terms(), want));
    st.event(TraceEvent::Kind::Consume, loc, chunk_str(st.terms(), m->chunk));
  }

  // ---- calls ---------------------------------------------------------------

  // Produces the callee contract under a fresh environment and restores the
  // caller's bindings afterwards.
  struct CallSpec {
    std::string cls;  // class whose contract is used; empty for free functions
    const FunctionDecl *fn = nullptr;
    std::optional<TermId> self;
    TermId this_type = -1;
    std::vector<Value> args;
    SourceLoc site;
    bool ctor_tail = false;  // produce engine chunks after the post
    bool dtor_tail = false;  // consume engine chunks after the pre
    std::string what;
  };

  TermId convert_value(SymState &st, const Value &v, const TypeRef &to, SourceLoc loc) const {
    if (to.reference) {
      switch (v.place.kind) {
        case Place::Kind::Object:
        case Place::Kind::Cell: return v.place.addr;
        case Place::Kind::Field: return st.terms().field_addr(v.place.addr, v.place.cls, v.place.field);
        default: fail(Category::TypeError, loc, "a reference must bind to a field, object or dereferenced pointer");
      }
    }
    if (to.is_class_pointer() && v.type.is_class_pointer() && !v.null_literal && v.type.cls != to.cls) {
      if (tbl_.upcast_path(v.type.cls, to.cls).status == UpcastResult::Status::NotABase)
        fail(Category::TypeError, loc, "cannot convert " + v.type.str() + " to " + to.str());
      return convert_pointer(st, v.term, v.type.cls, to.cls, tbl_, loc);
    }
    if (to.is_class_object()) fail(Category::PassByValue, loc, "class objects cannot be copied");
    return v.term;
  }

  void invoke(ExecState es, const CallSpec &c, const ValueCont &k) {
    SymState &st = es.st;
    TermStore &ts = st.terms();
    st.event(TraceEvent::Kind::Call, c.site, c.what);
    auto saved = st.env();
    std::map<std::string, Binding> callee;
    if (c.self) {
      callee["this"] = Binding{*c.self, class_ptr(c.cls), false};
      callee["thisType"] = Binding{c.this_type, type_info_ptr(), false};
    }
    for (std::size_t i = 0; i < c.fn->params.size(); ++i) {
      const Param &p = c.fn->params[i];
      callee[p.name] = Binding{convert_value(st, c.args[i], p.type, c.site), p.type, false};
    }
    st.env() = std::move(callee);
    EvalContext cctx;
    cctx.table = &tbl_;
    cctx.cls = c.cls;
    const Assertion *pre = c.fn->contract ? c.fn->contract->pre.get() : nullptr;
    const Assertion *post = c.fn->contract ? c.fn->contract->post.get() : nullptr;

    auto after_pre = [&](SymState s) {
      if (c.dtor_tail) engine_tail(s, c.cls, *c.self, c.site, false);
      Value result;
      result.type = c.fn->return_type;
      if (!c.fn->return_type.is_void()) {
        result.term = ts.fresh("result", sort_of(c.fn->return_type));
        s.bind("result", result.term, c.fn->return_type);
      }
      auto finish = [&](SymState s2) {
        if (c.ctor_tail) engine_tail(s2, c.cls, *c.self, c.site, true);
        s2.env() = saved;
        k(ExecState{std::move(s2), es.frame}, result);
      };
      if (post)
        produce(std::move(s), *post, cctx, finish);
      else
        finish(std::move(s));
    };
    if (pre)
      at_call_site(c.site, "precondition of " + c.what,
                   [&](const StateCont &kk) { consume(std::move(st), *pre, cctx, kk); }, after_pre);
    else
      after_pre(std::move(st));
  }

  // The hidden contract tail of constructors and destructors.
  void engine_tail(SymState &st, const std::string &cls, TermId addr, SourceLoc loc, bool producing) {
    TermStore &ts = st.terms();
    if (tbl_.is_polymorphic(cls)) {
      ChunkFamily f = ChunkFamily::vtype(cls);
      if (producing)
        add_engine(st, f, {addr, ts.type_info(cls)}, loc);
      else
        take_engine(st, f, {addr, ts.type_info(cls)}, loc, "destructor of " + cls + " needs the vtype chunk");
    }
    if (tbl_.has_bases(cls)) {
      ChunkFamily f = ChunkFamily::bases_constructed(cls);
      if (producing)
        add_engine(st, f, {addr}, loc);
      else
        take_engine(st, f, {addr}, loc, "destructor of " + cls + " needs the bases_constructed chunk");
    }
  }

  void ctor_call(ExecState es, const std::string &cls, TermId addr, const std::vector<Value> &args, SourceLoc site,
                 const ExecCont &k) {
    const ClassInfo &ci = tbl_.get(cls);
    std::vector<ArgType> ats;
    for (const Value &v : args) ats.push_back(arg_type(v));
    const FunctionDecl *ctor = tbl_.resolve_overload(ci.ctors, ats, site, cls + "::" + cls);
    CallSpec c;
    c.cls = cls;
    c.fn = ctor;
    c.self = addr;
    c.this_type = es.st.terms().type_info(cls);
    c.args = args;
    c.site = site;
    c.ctor_tail = true;
    c.what = tbl_.signature(cls, *ctor);
    invoke(std::move(es), c, [k](ExecState e, Value) { k(std::move(e)); });
  }

  void dtor_call(ExecState es, const std::string &cls, TermId addr, SourceLoc site, const ExecCont &k) {
    const ClassInfo &ci = tbl_.get(cls);
    if (!ci.dtor) {
      // No destructor declared: only the engine chunks are released.
      es.st.event(TraceEvent::Kind::Call, site, cls + "::~" + cls + "()");
      engine_tail(es.st, cls, addr, site, false);
      k(std::move(es));
      return;
    }
    CallSpec c;
    c.cls = cls;
    c.fn = ci.dtor;
    c.self = addr;
    c.this_type = es.st.terms().type_info(cls);
    c.site = site;
    c.dtor_tail = true;
    c.what = tbl_.signature(cls, *ci.dtor);
    invoke(std::move(es), c, [k](ExecState e, Value) { k(std::move(e)); });
  }

  void member_call(ExecState es, const Expr &e, const Precomp &pc, const ValueCont &k) {
    SymState &st = es.st;
    TermStore &ts = st.terms();
    EvalContext c = ctx_;
    c.precomputed = &pc;
    Value target;
    if (e.args[0]) {
      target = eval_expr(st, *e.args[0], c);
      if (e.arrow ? !target.type.is_class_pointer() : !target.type.is_class_object())
        fail(Category::TypeError, e.loc, "member call " + e.name + " on a value of type " + target.type.str());
    } else {
      const Binding *self = st.lookup("this");
      if (!self || ctx_.cls.empty()) fail(Category::UnknownName, e.loc, "unknown function " + e.name);
      target.term = self->value;
      target.type = class_ptr(ctx_.cls);
    }
    const std::string &static_cls = target.type.cls;
    std::string lookup_cls = e.qualifier.empty() ? static_cls : e.qualifier;
    if (!tbl_.find(lookup_cls)) fail(Category::UnknownName, e.loc, "unknown class " + lookup_cls);
    MethodSet ms = tbl_.lookup_methods(lookup_cls, e.name, e.loc);
    if (ms.candidates.empty()) fail(Category::UnknownName, e.loc, "class " + lookup_cls + " has no member " + e.name);
    std::vector<Value> args;
    std::vector<ArgType> ats;
    for (std::size_t i = 1; i < e.args.size(); ++i) {
      args.push_back(eval_expr(st, *e.args[i], c));
      ats.push_back(arg_type(args.back()));
    }
    const FunctionDecl *fn = tbl_.resolve_overload(ms.candidates, ats, e.loc, ms.cls + "::" + e.name);
    const std::string &S = ms.cls;
    if (!st.entails(ts.ne(target.term, ts.null())))
      fail(Category::NullTarget, e.loc, "target of call to " + e.name + " may be null");
    TermId t = convert_pointer(st, target.term, static_cls, S, tbl_, e.loc);
    if (tbl_.has_bases(S)) {
      auto m = st.match_chunk(ChunkFamily::bases_constructed(S), std::nullopt, CoefPattern::all(),
                              {Pattern::fixed(t)}, true);
      if (!m)
        consume_failure(st, Category::MissingChunk, e.loc, "call to " + S + "::" + e.name + " needs " + S +
                            "_bases_constructed", S + "_bases_constructed(" + ts.str(t) + ")");
    }
    CallSpec cs;
    cs.cls = S;
    cs.fn = fn;
    cs.self = t;
    cs.args = std::move(args);
    cs.site = e.loc;
    cs.what = tbl_.signature(S, *fn);
    if (tbl_.is_virtual(S, *fn) && e.qualifier.empty()) {
      auto m = st.match_chunk(ChunkFamily::vtype(S), std::nullopt, CoefPattern::all(),
                              {Pattern::fixed(t), Pattern::bind()}, true);
      if (!m)
        consume_failure(st, Category::MissingChunk, e.loc, "virtual call to " + cs.what + " needs " + S + "_vtype",
                        "[_]" + S + "_vtype(" + ts.str(t) + ", _)");
      cs.this_type = m->chunk.args[1];
    } else {
      cs.this_type = ts.type_info(S);
    }
    invoke(std::move(es), cs, k);
  }

  void free_call(ExecState es, const Expr &e, const Precomp &pc, const ValueCont &k) {
    if (!ctx_.cls.empty() && es.st.lookup("this") &&
        !tbl_.lookup_methods(ctx_.cls, e.name, e.loc).candidates.empty()) {
      // Unqualified call of a member on the implicit `this`.
      Expr mc;
      mc.kind = ExprKind::MemberCall;
      mc.loc = e.loc;
      mc.name = e.name;
      mc.arrow = true;
      mc.args.push_back(nullptr);
      for (const ExprPtr &a : e.args) mc.args.push_back(clone(*a));
      Precomp shifted = pc;
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        auto it = pc.find(e.args[i].get());
        if (it != pc.end()) shifted[mc.args[i + 1].get()] = it->second;
      }
      member_call(std::move(es), mc, shifted, k);
      return;
    }
    auto cands = tbl_.free_functions(e.name);
    if (cands.empty()) fail(Category::UnknownName, e.loc, "unknown function " + e.name);
    EvalContext c = ctx_;
    c.precomputed = &pc;
    std::vector<Value> args;
    std::vector<ArgType> ats;
    for (const ExprPtr &a : e.args) {
      args.push_back(eval_expr(es.st, *a, c));
      ats.push_back(arg_type(args.back()));
    }
    CallSpec cs;
    cs.fn = tbl_.resolve_overload(cands, ats, e.loc, e.name);
    cs.args = std::move(args);
    cs.site = e.loc;
    cs.what = tbl_.signature("", *cs.fn);
    invoke(std::move(es), cs, k);
  }

  void new_expr(ExecState es, const Expr &e, const Precomp &pc, const ValueCont &k) {
    if (!e.type.is_class_object() || !tbl_.find(e.type.cls))
      fail(Category::TypeError, e.loc, "new is only supported for class types");
    const std::string cls = e.type.cls;
    TermStore &ts = es.st.terms();
    EvalContext c = ctx_;
    c.precomputed = &pc;
    std::vector<Value> args;
    for (const ExprPtr &a : e.args) args.push_back(eval_expr(es.st, *a, c));
    TermId addr = ts.fresh("new");
    es.st.assume(ts.ne(addr, ts.null()), e.loc);
    ctor_call(std::move(es), cls, addr, args, e.loc, [&e, &k, cls, addr](ExecState s) {
      add_engine(s.st, ChunkFamily::new_block(cls), {addr}, e.loc);
      Value v;
      v.term = addr;
      v.type = class_ptr(cls);
      k(std::move(s), v);
    });
  }

  void run_calls(ExecState es, const std::vector<const Expr *> &calls, std::size_t i, Precomp pc,
                 const CallsCont &k) {
    if (i == calls.size()) {
      k(std::move(es), pc);
      return;
    }
    const Expr &e = *calls[i];
    ValueCont next = [&, i, pc](ExecState s, Value v) mutable {
      pc[&e] = v;
      run_calls(std::move(s), calls, i + 1, pc, k);
    };
    switch (e.kind) {
      case ExprKind::MemberCall: member_call(std::move(es), e, pc, next); return;
      case ExprKind::Call: free_call(std::move(es), e, pc, next); return;
      default: new_expr(std::move(es), e, pc, next); return;
    }
  }

  // Executes the calls inside `exprs` left to right, innermost first.
  void with_calls(ExecState es, std::vector<const Expr *> exprs, const CallsCont &k) {
    auto calls = std::make_shared<std::vector<const Expr *>>();
    for (const Expr *e : exprs)
      if (e) collect_calls(*e, *calls);
    run_calls(std::move(es), *calls, 0, {}, [calls, &k](ExecState s, const Precomp &pc) { k(std::move(s), pc); });
  }

  EvalContext with(const Precomp &pc) const {
    EvalContext c = ctx_;
    c.precomputed = &pc;
    return c;
  }

  // ---- scopes ----------------------------------------------------------------

  static void declare(ExecState &es, const std::string &name, Binding b) {
    ScopeVar v;
    v.name = name;
    if (const Binding *old = es.st.lookup(name)) v.previous = *old;
    v.object = b.object;
    v.type = b.type;
    es.frame.scopes.back().push_back(v);
    es.st.env()[name] = std::move(b);
  }

  void destroy(ExecState es, std::vector<ScopeVar> vars, SourceLoc loc, const ExecCont &k) {
    while (!vars.empty()) {
      ScopeVar v = vars.back();
      vars.pop_back();
      if (v.object) {
        TermId addr = es.st.env().at(v.name).value;
        restore(es, v);
        dtor_call(std::move(es), v.type.cls, addr, loc,
                  [this, vars, loc, &k](ExecState s) { destroy(std::move(s), vars, loc, k); });
        return;
      }
      restore(es, v);
    }
    k(std::move(es));
  }

  static void restore(ExecState &es, const ScopeVar &v) {
    if (v.previous)
      es.st.env()[v.name] = *v.previous;
    else
      es.st.env().erase(v.name);
  }

  void exit_scope(ExecState es, SourceLoc loc, const ExecCont &k) {
    std::vector<ScopeVar> vars = std::move(es.frame.scopes.back());
    es.frame.scopes.pop_back();
    destroy(std::move(es), std::move(vars), loc, k);
  }

  void unwind(ExecState es, SourceLoc loc, const ExecCont &k) {
    if (es.frame.scopes.empty()) {
      k(std::move(es));
      return;
    }
    exit_scope(std::move(es), loc, [this, loc, &k](ExecState s) { unwind(std::move(s), loc, k); });
  }

  // ---- statements ------------------------------------------------------------

  void exec_seq(ExecState es, const std::vector<StmtPtr> &body, std::size_t i, const ExecCont &k) {
    if (es.st.inconsistent()) return;
    if (i == body.size()) {
      k(std::move(es));
      return;
    }
    exec(std::move(es), *body[i], [this, &body, i, &k](ExecState s) { exec_seq(std::move(s), body, i + 1, k); });
  }

  void exec_scoped(ExecState es, const Stmt &s, const ExecCont &k) {
    if (s.kind == StmtKind::Block) {
      exec(std::move(es), s, k);
      return;
    }
    es.frame.scopes.emplace_back();
    exec(std::move(es), s, [this, &s, &k](ExecState e) { exit_scope(std::move(e), s.loc, k); });
  }

  void exec(ExecState es, const Stmt &s, const ExecCont &k) {
    switch (s.kind) {
      case StmtKind::Block:
        es.frame.scopes.emplace_back();
        exec_seq(std::move(es), s.body, 0, [this, &s, &k](ExecState e) { exit_scope(std::move(e), s.loc, k); });
        return;
      case StmtKind::VarDecl: var_decl(std::move(es), s, k); return;
      case StmtKind::Assign:
        with_calls(std::move(es), {s.expr.get(), s.lhs.get()}, [&](ExecState e, const Precomp &pc) {
          EvalContext c = with(pc);
          Value v = eval_expr(e.st, *s.expr, c);
          Value p = eval_place(e.st, *s.lhs, c);
          if (p.place.kind == Place::Kind::Object)
            fail(Category::TypeError, s.loc, "assignment of class objects is not supported");
          write_place(e.st, p.place, convert_value(e.st, v, p.type, s.loc), s.loc);
          k(std::move(e));
        });
        return;
      case StmtKind::ExprStmt:
        with_calls(std::move(es), {s.expr.get()}, [&](ExecState e, const Precomp &pc) {
          eval_expr(e.st, *s.expr, with(pc));
          k(std::move(e));
        });
        return;
      case StmtKind::Return: ret(std::move(es), s); return;
      case StmtKind::If: if_stmt(std::move(es), s, k); return;
      case StmtKind::While: while_stmt(std::move(es), s, k); return;
      case StmtKind::Delete: delete_stmt(std::move(es), s, k); return;
      case StmtKind::Open:
      case StmtKind::Close: {
        Frame f = es.frame;
        open_close(std::move(es.st), s.kind == StmtKind::Open, *s.assertion, ctx_,
                   [&](SymState st) { k(ExecState{std::move(st), f}); });
        return;
      }
      case StmtKind::Leak: {
        Frame f = es.frame;
        consume(std::move(es.st), *s.assertion, ctx_, [&](SymState st) { k(ExecState{std::move(st), f}); });
        return;
      }
      case StmtKind::GhostAssert: {
        SymState probe = es.st;
        consume(std::move(probe), *s.assertion, ctx_, [&](SymState st) {
          ExecState next = es;
          next.st.env() = st.env();
          k(std::move(next));
        });
        return;
      }
    }
  }

  void var_decl(ExecState es, const Stmt &s, const ExecCont &k) {
    TermStore &ts = es.st.terms();
    if (s.type.reference) fail(Category::TypeError, s.loc, "reference variables are not supported");
    if (s.type.is_class_object()) {
      if (!tbl_.find(s.type.cls)) fail(Category::UnknownName, s.loc, "unknown class " + s.type.cls);
      if (!s.ctor_syntax) fail(Category::PassByValue, s.loc, "copy initialization of class objects is not supported");
      std::vector<const Expr *> roots;
      for (const ExprPtr &a : s.ctor_args) roots.push_back(a.get());
      with_calls(std::move(es), roots, [&](ExecState e, const Precomp &pc) {
        std::vector<Value> args;
        for (const ExprPtr &a : s.ctor_args) args.push_back(eval_expr(e.st, *a, with(pc)));
        TermId addr = ts.fresh(s.name);
        e.st.assume(ts.ne(addr, ts.null()), s.loc);
        ctor_call(std::move(e), s.type.cls, addr, args, s.loc, [&, addr](ExecState e2) {
          declare(e2, s.name, Binding{addr, s.type, true});
          k(std::move(e2));
        });
      });
      return;
    }
    if (!s.expr) {
      TermId v = ts.fresh(s.name, sort_of(s.type));
      declare(es, s.name, Binding{v, s.type, false});
      k(std::move(es));
      return;
    }
    with_calls(std::move(es), {s.expr.get()}, [&](ExecState e, const Precomp &pc) {
      Value v = eval_expr(e.st, *s.expr, with(pc));
      TermId t = convert_value(e.st, v, s.type, s.loc);
      declare(e, s.name, Binding{t, s.type, false});
      k(std::move(e));
    });
  }

  void ret(ExecState es, const Stmt &s) {
    if (es.frame.loop_depth > 0) fail(Category::TypeError, s.loc, "return inside a loop body is not supported");
    auto finish = [this, &s](ExecState e) {
      unwind(std::move(e), s.loc, [this, &s](ExecState e2) { on_return_(std::move(e2), s.loc); });
    };
    if (!s.expr) {
      finish(std::move(es));
      return;
    }
    with_calls(std::move(es), {s.expr.get()}, [&](ExecState e, const Precomp &pc) {
      Value v = eval_expr(e.st, *s.expr, with(pc));
      TypeRef rt = fn_ ? fn_->return_type : v.type;
      e.st.bind("result", convert_value(e.st, v, rt, s.loc), rt);
      finish(std::move(e));
    });
  }

  void if_stmt(ExecState es, const Stmt &s, const ExecCont &k) {
    with_calls(std::move(es), {s.expr.get()}, [&](ExecState e, const Precomp &pc) {
      Value c = eval_expr(e.st, *s.expr, with(pc));
      auto arm = [&](ExecState x, bool taken) {
        const Stmt *b = taken ? s.then_branch.get() : s.else_branch.get();
        if (b)
          exec_scoped(std::move(x), *b, k);
        else
          k(std::move(x));
      };
      auto d = e.st.decide(c.term);
      if (d) {
        arm(std::move(e), *d);
        return;
      }
      TermStore &ts = e.st.terms();
      e.st.event(TraceEvent::Kind::Branch, s.loc, ts.str(c.term));
      ExecState yes = e;
      yes.st.assume(c.term, s.loc);
      if (!yes.st.inconsistent()) arm(std::move(yes), true);
      ExecState no = std::move(e);
      no.st.assume(ts.not_(c.term), s.loc);
      if (!no.st.inconsistent()) arm(std::move(no), false);
    });
  }

  void while_stmt(ExecState es, const Stmt &s, const ExecCont &k) {
    std::vector<const Expr *> calls;
    collect_calls(*s.expr, calls);
    if (!calls.empty()) fail(Category::TypeError, s.loc, "calls in loop conditions are not supported");
    if (!s.assertion) fail(Category::MalformedAssertion, s.loc, "loop without an invariant");
    const Assertion &inv = *s.assertion;
    std::set<std::string> assigned;
    assigned_locals(*s.then_branch, assigned);
    Frame f = es.frame;
    consume(std::move(es.st), inv, ctx_, [&](SymState rest) {
      TermStore &ts = rest.terms();
      for (const std::string &n : assigned) {
        auto it = rest.env().find(n);
        if (it == rest.env().end() || it->second.object) continue;
        it->second.value = ts.fresh(n, sort_of(it->second.type));
      }
      // An arbitrary iteration, starting from an empty heap.
      SymState body = rest;
      body.clear_heap();
      produce(std::move(body), inv, ctx_, [&](SymState b) {
        Value c = eval_expr(b, *s.expr, ctx_);
        b.assume(c.term, s.loc);
        if (b.inconsistent()) return;
        Frame bf = f;
        ++bf.loop_depth;
        exec_scoped(ExecState{std::move(b), bf}, *s.then_branch, [&](ExecState end) {
          consume(std::move(end.st), inv, ctx_, [&](SymState after) {
            if (!after.heap().empty())
              consume_failure(after, Category::Leak, s.loc, "loop body leaks heap chunks", "");
          });
        });
      });
      produce(std::move(rest), inv, ctx_, [&](SymState x) {
        Value c = eval_expr(x, *s.expr, ctx_);
        x.assume(x.terms().not_(c.term), s.loc);
        if (x.inconsistent()) return;
        k(ExecState{std::move(x), f});
      });
    });
  }

  void delete_stmt(ExecState es, const Stmt &s, const ExecCont &k) {
    with_calls(std::move(es), {s.expr.get()}, [&](ExecState e, const Precomp &pc) {
      Value p = eval_expr(e.st, *s.expr, with(pc));
      if (!p.type.is_class_pointer()) fail(Category::TypeError, s.loc, "delete is only supported on class pointers");
      TermStore &ts = e.st.terms();
      TermId isnull = ts.eq(p.term, ts.null());
      auto d = e.st.decide(isnull);
      if (d && *d) {
        k(std::move(e));
        return;
      }
      if (!d) {
        ExecState n = e;
        n.st.event(TraceEvent::Kind::Branch, s.loc, ts.str(isnull));
        n.st.assume(isnull, s.loc);
        if (!n.st.inconsistent()) k(std::move(n));
        e.st.assume(ts.not_(isnull), s.loc);
        if (e.st.inconsistent()) return;
      }
      const std::string cls = p.type.cls;
      TermId addr = p.term;
      dtor_call(std::move(e), cls, addr, s.loc, [&, cls, addr](ExecState x) {
        take_engine(x.st, ChunkFamily::new_block(cls), {addr}, s.loc,
                    "delete needs a new_block_" + cls + " chunk for " + x.st.terms().str(addr));
        k(std::move(x));
      });
    });
  }

 private:
  const ClassTable &tbl_;
  const FunctionDecl *fn_;
  EvalContext ctx_;
  ReturnCont on_return_;
};

// ---- obligation drivers ------------------------------------------------------

struct Session {
  std::shared_ptr<TermStore> store = std::make_shared<TermStore>();
  std::shared_ptr<Trace> trace = std::make_shared<Trace>();
  SymState st;
  explicit Session(const VerifyOptions &o) : st(store, trace, o.limits) {}
};

void leak_check(const SymState &st, SourceLoc loc, const std::string &what) {
  if (!st.heap().empty()) consume_failure(st, Category::Leak, loc, what + " leaks heap chunks", "");
}

void bind_params(SymState &st, const FunctionDecl &fn) {
  for (const Param &p : fn.params) st.bind(p.name, st.terms().fresh(p.name, sort_of(p.type)), p.type);
}

void bind_this(SymState &st, const std::string &cls, SourceLoc loc) {
  TermStore &ts = st.terms();
  TermId self = ts.fresh("this");
  st.bind("this", self, class_ptr(cls));
  st.assume(ts.ne(self, ts.null()), loc);
  st.bind("thisType", ts.type_info(cls), type_info_ptr());
}

Obligation make_obligation(const ClassTable &table, Obligation::Kind kind, const std::string &cls,
                           const FunctionDecl &fn) {
  Obligation ob;
  ob.kind = kind;
  ob.subject = table.signature(cls, fn);
  ob.file = table.path();
  ob.loc = fn.loc;
  return ob;
}

// Runs `body`, recording a failure or an Unreachable warning when no path
// reached the end of the obligation.
void run_obligation(Obligation &ob, Session &s, const std::function<void(int &)> &body) {
  int reached = 0;
  try {
    body(reached);
    if (reached == 0) {
      Diagnostic w;
      w.category = Category::Unreachable;
      w.file = ob.file;
      w.loc = ob.loc;
      w.message = "no execution path reaches the end of " + ob.subject;
      ob.warnings.push_back(std::move(w));
    }
  } catch (DiagnosticError &e) {
    ob.failure = e.diagnostic();
    ob.failure->file = ob.file;
  }
  ob.trace = *s.trace;
}

const Assertion *pre_of(const FunctionDecl &fn) { return fn.contract ? fn.contract->pre.get() : nullptr; }
const Assertion *post_of(const FunctionDecl &fn) { return fn.contract ? fn.contract->post.get() : nullptr; }

void produce_opt(SymState st, const Assertion *a, const EvalContext &ctx, const StateCont &k) {
  if (a)
    produce(std::move(st), *a, ctx, k);
  else
    k(std::move(st));
}

void consume_opt(SymState st, const Assertion *a, const EvalContext &ctx, const StateCont &k) {
  if (a)
    consume(std::move(st), *a, ctx, k);
  else
    k(std::move(st));
}

void run_body(Executor &ex, SymState st, const FunctionDecl &fn, const ReturnCont &done) {
  ex.set_return(done);
  if (!fn.body) {
    done(ExecState{std::move(st), {}}, fn.loc);
    return;
  }
  scan_stmt(*fn.body);
  ex.exec(ExecState{std::move(st), {}}, *fn.body, [&](ExecState e) { done(std::move(e), fn.loc); });
}

}  // namespace

Obligation verify_function(const ClassTable &table, const std::string &cls, const FunctionDecl &fn,
                           const VerifyOptions &options) {
  Obligation ob = make_obligation(table, Obligation::Kind::Function, cls, fn);
  Session s(options);
  run_obligation(ob, s, [&](int &reached) {
    if (!cls.empty()) bind_this(s.st, cls, fn.loc);
    bind_params(s.st, fn);
    Executor ex(table, cls, &fn);
    produce_opt(s.st, pre_of(fn), ex.ctx(), [&](SymState st) {
      run_body(ex, std::move(st), fn, [&](ExecState e, SourceLoc at) {
        consume_opt(std::move(e.st), post_of(fn), ex.ctx(), [&](SymState end) {
          leak_check(end, at, ob.subject);
          ++reached;
        });
      });
    });
  });
  return ob;
}

Obligation verify_constructor(const ClassTable &table, const std::string &cls, const FunctionDecl &ctor,
                              const VerifyOptions &options) {
  Obligation ob = make_obligation(table, Obligation::Kind::Constructor, cls, ctor);
  Session s(options);
  run_obligation(ob, s, [&](int &reached) {
    bind_this(s.st, cls, ctor.loc);
    bind_params(s.st, ctor);
    TermId self = s.st.lookup("this")->value;
    Executor ex(table, cls, &ctor);
    const ClassInfo &ci = table.get(cls);

    ReturnCont done = [&](ExecState e, SourceLoc at) {
      consume_opt(std::move(e.st), post_of(ctor), ex.ctx(), [&](SymState end) {
        ex.engine_tail(end, cls, self, at, false);
        leak_check(end, at, ob.subject);
        ++reached;
      });
    };
    auto body = [&](ExecState e) { run_body(ex, std::move(e.st), ctor, done); };

    auto find_init = [&](const std::string &name) -> const Initializer * {
      for (const Initializer &i : ctor.inits)
        if (i.name == name) return &i;
      return nullptr;
    };
    auto eval_args = [&](ExecState e, const std::vector<ExprPtr> &args,
                         const std::function<void(ExecState, std::vector<Value>)> &k) {
      std::vector<const Expr *> roots;
      for (const ExprPtr &a : args) roots.push_back(a.get());
      ex.with_calls(std::move(e), roots, [&](ExecState x, const Precomp &pc) {
        std::vector<Value> vals;
        for (const ExprPtr &a : args) vals.push_back(eval_expr(x.st, *a, ex.with(pc)));
        k(std::move(x), std::move(vals));
      });
    };

    std::function<void(ExecState, std::size_t)> fields = [&](ExecState e, std::size_t i) {
      if (i == ci.fields.size()) {
        body(std::move(e));
        return;
      }
      const FieldDecl &f = *ci.fields[i];
      TermStore &ts = e.st.terms();
      const Initializer *init = find_init(f.name);
      SourceLoc at = init ? init->loc : f.loc;
      if (f.type.is_class_object()) {
        TermId addr = ts.field_addr(self, cls, f.name);
        static const std::vector<ExprPtr> none;
        eval_args(std::move(e), init ? init->args : none, [&, addr, at, i](ExecState x, std::vector<Value> vals) {
          ex.ctor_call(std::move(x), f.type.cls, addr, vals, at, [&, i](ExecState y) { fields(std::move(y), i + 1); });
        });
        return;
      }
      auto store = [&, i, at](ExecState x, TermId v) {
        Executor::add_engine(x.st, ChunkFamily::field(cls, f.name), {self, v}, at);
        fields(std::move(x), i + 1);
      };
      const Expr *src = nullptr;
      if (init) {
        if (init->args.size() != 1)
          fail(Category::TypeError, init->loc, "field " + f.name + " takes exactly one initializer");
        src = init->args[0].get();
      } else if (f.init) {
        src = f.init.get();
      }
      if (!src) {
        store(std::move(e), ts.fresh(f.name, sort_of(f.type)));
        return;
      }
      ex.with_calls(std::move(e), {src}, [&, src, at](ExecState x, const Precomp &pc) {
        Value v = eval_expr(x.st, *src, ex.with(pc));
        TermId t = ex.convert_value(x.st, v, f.type, at);
        store(std::move(x), t);
      });
    };

    std::function<void(ExecState, std::size_t)> bases = [&](ExecState e, std::size_t i) {
      TermStore &ts = e.st.terms();
      if (i == ci.bases.size()) {
        if (ci.polymorphic)
          Executor::add_engine(e.st, ChunkFamily::vtype(cls), {self, ts.type_info(cls)}, ctor.loc);
        if (!ci.bases.empty()) Executor::add_engine(e.st, ChunkFamily::bases_constructed(cls), {self}, ctor.loc);
        fields(std::move(e), 0);
        return;
      }
      const std::string &b = ci.bases[i];
      TermId bp = ts.field_ptr(self, OffsetSymbol{cls, b});
      const Initializer *init = find_init(b);
      SourceLoc at = init ? init->loc : ctor.loc;
      static const std::vector<ExprPtr> none;
      eval_args(std::move(e), init ? init->args : none, [&, b, bp, at, i](ExecState x, std::vector<Value> vals) {
        ex.ctor_call(std::move(x), b, bp, vals, at, [&, b, bp, at, i](ExecState y) {
          if (table.is_polymorphic(b))
            Executor::take_engine(y.st, ChunkFamily::vtype(b), {bp, y.st.terms().type_info(b)}, at,
                                  "construction of base " + b + " must leave its vtype chunk");
          bases(std::move(y), i + 1);
        });
      });
    };

    produce_opt(s.st, pre_of(ctor), ex.ctx(), [&](SymState st) {
      ExecState e{std::move(st), {}};
      if (ctor.inits.size() == 1 && ctor.inits[0].name == cls) {
        const Initializer &d = ctor.inits[0];
        eval_args(std::move(e), d.args, [&](ExecState x, std::vector<Value> vals) {
          ex.ctor_call(std::move(x), cls, self, vals, d.loc, body);
        });
        return;
      }
      bases(std::move(e), 0);
    });
  });
  return ob;
}

Obligation verify_destructor(const ClassTable &table, const std::string &cls, const FunctionDecl &dtor,
                             const VerifyOptions &options) {
  Obligation ob = make_obligation(table, Obligation::Kind::Destructor, cls, dtor);
  Session s(options);
  run_obligation(ob, s, [&](int &reached) {
    bind_this(s.st, cls, dtor.loc);
    TermId self = s.st.lookup("this")->value;
    Executor ex(table, cls, &dtor);
    const ClassInfo &ci = table.get(cls);

    auto finish = [&](ExecState e, SourceLoc at) {
      consume_opt(std::move(e.st), post_of(dtor), ex.ctx(), [&](SymState end) {
        leak_check(end, at, ob.subject);
        ++reached;
      });
    };

    std::function<void(ExecState, SourceLoc, std::size_t)> bases = [&](ExecState e, SourceLoc at, std::size_t n) {
      if (n == 0) {
        finish(std::move(e), at);
        return;
      }
      const std::string &b = ci.bases[n - 1];
      TermStore &ts = e.st.terms();
      TermId bp = ts.field_ptr(self, OffsetSymbol{cls, b});
      if (table.is_polymorphic(b)) Executor::add_engine(e.st, ChunkFamily::vtype(b), {bp, ts.type_info(b)}, at);
      ex.dtor_call(std::move(e), b, bp, at, [&, at, n](ExecState x) { bases(std::move(x), at, n - 1); });
    };

    std::function<void(ExecState, SourceLoc, std::size_t)> fields = [&](ExecState e, SourceLoc at, std::size_t n) {
      if (n == 0) {
        ex.engine_tail(e.st, cls, self, at, false);
        bases(std::move(e), at, ci.bases.size());
        return;
      }
      const FieldDecl &f = *ci.fields[n - 1];
      TermStore &ts = e.st.terms();
      if (f.type.is_class_object()) {
        ex.dtor_call(std::move(e), f.type.cls, ts.field_addr(self, cls, f.name), at,
                     [&, at, n](ExecState x) { fields(std::move(x), at, n - 1); });
        return;
      }
      auto m = e.st.match_chunk(ChunkFamily::field(cls, f.name), std::nullopt, CoefPattern::fixed(1),
                                {Pattern::fixed(self), Pattern::any()});
      if (!m)
        consume_failure(e.st, Category::MissingChunk, at, "destruction of field " + cls + "::" + f.name +
                            " needs full permission", cls + "_" + f.name + "(" + ts.str(self) + ", _)");
      e.st.event(TraceEvent::Kind::Consume, at, chunk_str(ts, m->chunk));
      fields(std::move(e), at, n - 1);
    };

    produce_opt(s.st, pre_of(dtor), ex.ctx(), [&](SymState st) {
      ex.engine_tail(st, cls, self, dtor.loc, true);
      run_body(ex, std::move(st), dtor,
               [&](ExecState e, SourceLoc at) { fields(std::move(e), at, ci.fields.size()); });
    });
  });
  return ob;
}

Obligation check_behavioral_subtyping(const ClassTable &table, const std::string &base_cls,
                                      const FunctionDecl &base_fn, const std::string &derived_cls,
                                      const FunctionDecl &derived_fn, const UpcastPath &path,
                                      const VerifyOptions &options) {
  Obligation ob;
  ob.kind = Obligation::Kind::Subtyping;
  ob.subject = table.signature(derived_cls, derived_fn) + " <: " + table.signature(base_cls, base_fn);
  ob.file = table.path();
  ob.loc = derived_fn.loc;
  Session s(options);
  const char *steps[] = {"", "producing the overridden precondition", "consuming the overriding precondition",
                         "producing the overriding postcondition", "consuming the overridden postcondition",
                         "checking for leaks"};
  int step = 0;
  run_obligation(ob, s, [&](int &reached) {
    try {
      TermStore &ts = *s.store;
      TermId d = ts.fresh("this");
      s.st.assume(ts.ne(d, ts.null()), derived_fn.loc);
      TermId info = ts.fresh("thisType");
      std::map<std::string, Binding> env_b, env_d;
      env_b["this"] = Binding{ts.upcast(d, path), class_ptr(base_cls), false};
      env_d["this"] = Binding{d, class_ptr(derived_cls), false};
      env_b["thisType"] = env_d["thisType"] = Binding{info, type_info_ptr(), false};
      for (std::size_t i = 0; i < base_fn.params.size() && i < derived_fn.params.size(); ++i) {
        TermId p = ts.fresh(derived_fn.params[i].name, sort_of(derived_fn.params[i].type));
        env_b[base_fn.params[i].name] = Binding{p, base_fn.params[i].type, false};
        env_d[derived_fn.params[i].name] = Binding{p, derived_fn.params[i].type, false};
      }
      if (!derived_fn.return_type.is_void()) {
        TermId r = ts.fresh("result", sort_of(derived_fn.return_type));
        env_b["result"] = Binding{r, base_fn.return_type, false};
        env_d["result"] = Binding{r, derived_fn.return_type, false};
      }
      EvalContext cb{&table, base_cls, nullptr}, cd{&table, derived_cls, nullptr};
      SymState st = s.st;
      st.env() = env_b;
      step = 1;
      produce_opt(std::move(st), pre_of(base_fn), cb, [&](SymState s1) {
        auto eb = s1.env();
        s1.env() = env_d;
        step = 2;
        consume_opt(std::move(s1), pre_of(derived_fn), cd, [&](SymState s2) {
          step = 3;
          produce_opt(std::move(s2), post_of(derived_fn), cd, [&](SymState s3) {
            s3.env() = eb;
            step = 4;
            consume_opt(std::move(s3), post_of(base_fn), cb, [&](SymState s4) {
              step = 5;
              leak_check(s4, derived_fn.loc, ob.subject);
              ++reached;
              step = 3;
            });
            step = 2;
          });
          step = 1;
        });
      });
    } catch (DiagnosticError &e) {
      Diagnostic &d = e.diagnostic();
      if (d.category == Category::MissingChunk || d.category == Category::AssertionFailed ||
          d.category == Category::Leak) {
        d.message = std::string(steps[step]) + ": " + d.message;
        d.category = Category::SubtypingViolation;
        d.loc = derived_fn.loc;
      }
      throw;
    }
  });
  return ob;
}

std::vector<Obligation> verify_program(const ClassTable &table, const VerifyOptions &options) {
  struct Task {
    SourceLoc loc;
    std::string subject;
    std::function<Obligation()> run;
  };
  std::vector<Task> tasks;

  for (const Diagnostic &d : table.check_override_completeness()) {
    const std::string sep = " does not override ";
    auto at = d.message.find(sep);
    std::string subject = d.message.substr(at + sep.size()) + " in " + d.message.substr(0, at);
    tasks.push_back({d.loc, subject, [d, subject, &table] {
                       Obligation ob;
                       ob.kind = Obligation::Kind::OverrideCompleteness;
                       ob.subject = subject;
                       ob.file = table.path();
                       ob.loc = d.loc;
                       ob.failure = d;
                       return ob;
                     }});
  }

  for (const std::string &cls : table.class_order()) {
    const ClassInfo &ci = table.get(cls);
    std::vector<const FunctionDecl *> overriding = ci.methods;
    if (ci.dtor && !ci.implicit_dtor) overriding.push_back(ci.dtor);
    for (const FunctionDecl *fn : overriding) {
      for (const auto &[bcls, bfn] : table.overridden(cls, *fn)) {
        std::string subject = table.signature(cls, *fn) + " <: " + table.signature(bcls, *bfn);
        tasks.push_back({fn->loc, subject, [&table, &options, cls, fn, bcls, bfn, subject] {
                           UpcastResult up = table.upcast_path(cls, bcls);
                           if (up.status != UpcastResult::Status::Ok) {
                             Obligation ob;
                             ob.kind = Obligation::Kind::Subtyping;
                             ob.subject = subject;
                             ob.file = table.path();
                             ob.loc = fn->loc;
                             Diagnostic d;
                             d.category = Category::AmbiguousUpcast;
                             d.file = table.path();
                             d.loc = fn->loc;
                             d.message = "conversion from " + cls + " to " + bcls + " is ambiguous";
                             ob.failure = d;
                             return ob;
                           }
                           return check_behavioral_subtyping(table, bcls, *bfn, cls, *fn, up.path, options);
                         }});
      }
    }
    for (const FunctionDecl *c : ci.ctors) {
      if (!c->body || ci.implicit_ctor) continue;
      tasks.push_back({c->loc, table.signature(cls, *c),
                       [&table, &options, cls, c] { return verify_constructor(table, cls, *c, options); }});
    }
    if (ci.dtor && ci.dtor->body && !ci.implicit_dtor) {
      const FunctionDecl *d = ci.dtor;
      tasks.push_back({d->loc, table.signature(cls, *d),
                       [&table, &options, cls, d] { return verify_destructor(table, cls, *d, options); }});
    }
    for (const FunctionDecl *m : ci.methods) {
      if (!m->body) continue;
      tasks.push_back({m->loc, table.signature(cls, *m),
                       [&table, &options, cls, m] { return verify_function(table, cls, *m, options); }});
    }
  }
  for (const FunctionDecl *f : table.all_free_functions()) {
    if (!f->body) continue;
    tasks.push_back({f->loc, table.signature("", *f),
                     [&table, &options, f] { return verify_function(table, "", *f, options); }});
  }

  std::stable_sort(tasks.begin(), tasks.end(), [](const Task &a, const Task &b) {
    if (a.loc != b.loc) return a.loc < b.loc;
    return a.subject < b.subject;
  });
  std::vector<Obligation> out;
  for (const Task &t : tasks) {
    out.push_back(t.run());
    if (options.stop_on_first_error && !out.back().verified()) break;
  }
  return out;
}

}  // namespace mcv
