#include "mcv/assertions.hpp"
#include "mcv/parser.hpp"
#include "mcv/printer.hpp"

namespace mcv {

namespace {

TypeRef type_info_ptr() { return TypeRef::make(TypeRef::Base::TypeInfo).pointer_to(); }

ExprPtr make_expr(ExprKind k, SourceLoc loc) {
  auto e = std::make_unique<Expr>();
  e->kind = k;
  e->loc = loc;
  return e;
}

struct ChunkSpec {
  ChunkFamily family;
  std::vector<TypeRef> arg_types;  // excluding the index
  bool indexed = false;            // assertion argument 1 is the index
  std::string upcast_to;           // implicit upcast target of the first argument
};

std::optional<ChunkSpec> resolve_chunk_name(const ClassTable &tbl, const std::string &name, SourceLoc loc) {
  ChunkSpec s;
  auto hash = name.find('#');
  if (hash != std::string::npos) {
    std::string cls = name.substr(0, hash), pred = name.substr(hash + 1);
    if (!tbl.find(cls)) fail(Category::UnknownName, loc, "unknown class " + cls);
    auto ref = tbl.lookup_instance_predicate(cls, pred, loc);
    if (!ref) fail(Category::UnknownName, loc, "class " + cls + " has no instance predicate " + pred);
    s.family = ChunkFamily::instance(ref->root, pred);
    s.arg_types.push_back(TypeRef::class_type(ref->root).pointer_to());
    for (const Param &p : ref->decl->params) s.arg_types.push_back(p.type);
    s.indexed = true;
    s.upcast_to = ref->root;
    return s;
  }
  if (const PredicateDecl *p = tbl.find_static_predicate(name)) {
    s.family = ChunkFamily::predicate(name);
    for (const Param &q : p->params) s.arg_types.push_back(q.type);
    return s;
  }
  if (name == "integer") {
    s.family = ChunkFamily::integer();
    s.arg_types = {TypeRef::make(TypeRef::Base::Int).pointer_to(), TypeRef::make(TypeRef::Base::Int)};
    return s;
  }
  auto class_ptr = [](const std::string &c) { return TypeRef::class_type(c).pointer_to(); };
  const std::string nb = "new_block_";
  if (name.rfind(nb, 0) == 0 && tbl.find(name.substr(nb.size()))) {
    std::string c = name.substr(nb.size());
    s.family = ChunkFamily::new_block(c);
    s.arg_types = {class_ptr(c)};
    s.upcast_to = c;
    return s;
  }
  auto suffix = [&](const std::string &sfx) -> std::string {
    if (name.size() > sfx.size() && name.compare(name.size() - sfx.size(), sfx.size(), sfx) == 0) {
      std::string c = name.substr(0, name.size() - sfx.size());
      if (tbl.find(c)) return c;
    }
    return "";
  };
  if (std::string c = suffix("_vtype"); !c.empty()) {
    if (!tbl.is_polymorphic(c)) fail(Category::TypeError, loc, "class " + c + " is not polymorphic");
    s.family = ChunkFamily::vtype(c);
    s.arg_types = {class_ptr(c), type_info_ptr()};
    s.upcast_to = c;
    return s;
  }
  if (std::string c = suffix("_bases_constructed"); !c.empty()) {
    s.family = ChunkFamily::bases_constructed(c);
    s.arg_types = {class_ptr(c)};
    s.upcast_to = c;
    return s;
  }
  for (std::size_t i = name.find('_'); i != std::string::npos; i = name.find('_', i + 1)) {
    std::string c = name.substr(0, i), f = name.substr(i + 1);
    const ClassInfo *ci = tbl.find(c);
    if (!ci) continue;
    for (const FieldDecl *fd : ci->fields) {
      if (fd->name != f) continue;
      if (fd->type.is_class_object())
        fail(Category::TypeError, loc, "field " + c + "::" + f + " holds an object and has no field chunk");
      s.family = ChunkFamily::field(c, f);
      s.arg_types = {class_ptr(c), fd->type};
      s.upcast_to = c;
      return s;
    }
  }
  return std::nullopt;
}

struct ArgSrc {
  const Expr *expr = nullptr;  // null: `term` is already evaluated
  TermId term = -1;
  TypeRef type;
  std::string upcast_to;
};

struct ChunkInst {
  ChunkFamily family;
  std::optional<ArgSrc> index;
  std::vector<ArgSrc> args;
  const Expr *coef = nullptr;
  bool peek = false;
  std::string text;
  SourceLoc loc;
};

ChunkInst chunk_inst(const Assertion &a, const ChunkSpec &spec) {
  ChunkInst in;
  in.family = spec.family;
  in.coef = a.coef.get();
  in.peek = a.peek;
  in.text = to_source(a);
  in.loc = a.loc;
  std::size_t expected = spec.arg_types.size() + (spec.indexed ? 1 : 0);
  if (a.args.size() != expected)
    fail(Category::TypeError, a.loc,
         spec.family.str() + " expects " + std::to_string(expected) + " arguments, got " +
             std::to_string(a.args.size()));
  std::size_t t = 0;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    ArgSrc src;
    src.expr = a.args[i].get();
    if (spec.indexed && i == 1) {
      src.type = type_info_ptr();
      in.index = src;
      continue;
    }
    src.type = spec.arg_types[t];
    if (t == 0) src.upcast_to = spec.upcast_to;
    ++t;
    in.args.push_back(src);
  }
  return in;
}

ChunkInst points_to_inst(SymState &st, const Assertion &a, const EvalContext &ctx) {
  const Expr &lhs = *a.expr;
  ChunkInst in;
  in.coef = a.coef.get();
  in.text = to_source(a);
  in.loc = a.loc;
  Place p = eval_place(st, lhs, ctx).place;
  ArgSrc value;
  value.expr = a.rhs.get();
  if (p.kind == Place::Kind::Field) {
    // Points-to never upcasts implicitly: the field must be declared in the
    // static class of the target expression.
    std::string static_cls = ctx.cls;
    if (lhs.kind == ExprKind::Member) {
      SymState probe = st;
      Value base = eval_expr(probe, *lhs.args[0], ctx);
      static_cls = base.type.cls;
    }
    if (static_cls != p.cls)
      fail(Category::TypeError, a.loc,
           "points-to on field " + p.cls + "::" + p.field + " through a " + static_cls +
               " requires an explicit cast");
    in.family = ChunkFamily::field(p.cls, p.field);
    for (const FieldDecl *f : ctx.table->get(p.cls).fields)
      if (f->name == p.field) value.type = f->type;
  } else if (p.kind == Place::Kind::Cell) {
    in.family = ChunkFamily::integer();
    value.type = TypeRef::make(TypeRef::Base::Int);
  } else {
    fail(Category::TypeError, a.loc, "points-to requires a field or a pointer dereference");
  }
  ArgSrc addr;
  addr.term = p.addr;
  in.args = {addr, value};
  return in;
}

TermId produce_term(SymState &st, const ArgSrc &src, const EvalContext &ctx) {
  if (!src.expr) return src.term;
  TermStore &ts = st.terms();
  if (src.expr->kind == ExprKind::Pattern) {
    TermId t = ts.fresh(src.expr->name, sort_of(src.type));
    st.bind(src.expr->name, t, src.type);
    return t;
  }
  if (src.expr->kind == ExprKind::Wildcard) return ts.fresh("w", sort_of(src.type));
  Value v = eval_expr(st, *src.expr, ctx);
  if (!src.upcast_to.empty() && v.type.is_class_pointer() && v.type.cls != src.upcast_to)
    return convert_pointer(st, v.term, v.type.cls, src.upcast_to, *ctx.table, src.expr->loc);
  return v.term;
}

Pattern consume_pattern(SymState &st, const ArgSrc &src, const EvalContext &ctx) {
  if (!src.expr) return Pattern::fixed(src.term);
  if (src.expr->kind == ExprKind::Pattern) return Pattern::bind();
  if (src.expr->kind == ExprKind::Wildcard) return Pattern::any();
  return Pattern::fixed(produce_term(st, src, ctx));
}

Rational fixed_coef(SymState &st, const Expr *coef, const EvalContext &ctx, SourceLoc loc) {
  if (!coef) return 1;
  if (coef->kind == ExprKind::Pattern || coef->kind == ExprKind::Wildcard)
    fail(Category::MalformedAssertion, loc, "a produced chunk needs a fixed coefficient");
  Value v = eval_expr(st, *coef, ctx);
  if (!st.terms().is_number(v.term))
    fail(Category::MalformedAssertion, loc, "coefficient " + to_source(*coef) + " is not a constant");
  Rational r = st.terms().node(v.term).value;
  if (r <= 0 || r > 1) fail(Category::MalformedAssertion, loc, "coefficient " + rational_str(r) + " is outside (0, 1]");
  return r;
}

Match consume_chunk(SymState &st, const ChunkInst &in, const EvalContext &ctx, const Rational &scale) {
  CoefPattern cp = CoefPattern::fixed(scale);
  if (in.coef && (in.coef->kind == ExprKind::Pattern || in.coef->kind == ExprKind::Wildcard))
    cp = CoefPattern::all();
  else if (in.coef)
    cp = CoefPattern::fixed(fixed_coef(st, in.coef, ctx, in.loc) * scale);
  std::optional<Pattern> index;
  if (in.index) index = consume_pattern(st, *in.index, ctx);
  std::vector<Pattern> pats;
  for (const ArgSrc &a : in.args) pats.push_back(consume_pattern(st, a, ctx));
  auto m = st.match_chunk(in.family, index, cp, pats, in.peek);
  if (!m) consume_failure(st, Category::MissingChunk, in.loc, "no matching " + in.family.str() + " chunk", in.text);
  auto bind = [&](const ArgSrc &src, TermId t) {
    if (src.expr && src.expr->kind == ExprKind::Pattern) st.bind(src.expr->name, t, src.type);
  };
  if (in.index) bind(*in.index, *m->chunk.index);
  for (std::size_t i = 0; i < in.args.size(); ++i) bind(in.args[i], m->chunk.args[i]);
  if (in.coef && in.coef->kind == ExprKind::Pattern)
    st.bind(in.coef->name, st.terms().number(m->taken), TypeRef::make(TypeRef::Base::Real));
  Chunk taken = m->chunk;
  taken.coef = m->taken;
  st.event(TraceEvent::Kind::Consume, in.loc, (in.peek ? "peek " : "") + chunk_str(st.terms(), taken));
  return *m;
}

void produce_chunk(SymState &st, const ChunkInst &in, const EvalContext &ctx, const Rational &scale) {
  if (in.peek) {
    consume_chunk(st, in, ctx, scale);
    return;
  }
  Chunk c;
  c.family = in.family;
  c.coef = fixed_coef(st, in.coef, ctx, in.loc) * scale;
  if (in.index) c.index = produce_term(st, *in.index, ctx);
  for (const ArgSrc &a : in.args) c.args.push_back(produce_term(st, a, ctx));
  st.event(TraceEvent::Kind::Produce, in.loc, chunk_str(st.terms(), c));
  st.add_chunk(std::move(c));
}

bool is_chunk_like(const Assertion &a) { return a.kind == AssertKind::Chunk || a.kind == AssertKind::Instance; }

AssertionPtr maybe_desugar(const SymState &st, const Assertion &a, const EvalContext &ctx) {
  if (a.kind == AssertKind::Instance)
    return desugar_instance(st, ctx, a.target.get(), a.index.get(), a.name, a.args, a.coef.get(), a.loc);
  if (a.kind != AssertKind::Chunk) return nullptr;
  if (a.index) return desugar_instance(st, ctx, nullptr, a.index.get(), a.name, a.args, a.coef.get(), a.loc);
  if (a.name.find('#') != std::string::npos || ctx.table->find_static_predicate(a.name)) return nullptr;
  if (!ctx.cls.empty() && ctx.table->lookup_instance_predicate(ctx.cls, a.name, a.loc))
    return desugar_instance(st, ctx, nullptr, nullptr, a.name, a.args, a.coef.get(), a.loc);
  return nullptr;
}

ChunkInst resolve_chunk(SymState &st, const Assertion &a, const EvalContext &ctx) {
  if (a.kind == AssertKind::PointsTo) return points_to_inst(st, a, ctx);
  auto spec = resolve_chunk_name(*ctx.table, a.name, a.loc);
  if (!spec) fail(Category::UnknownName, a.loc, "unknown predicate or chunk " + a.name);
  return chunk_inst(a, *spec);
}

void produce_impl(SymState st, const Assertion &a, const EvalContext &ctx, const Rational &scale,
                  const StateCont &k);
void consume_impl(SymState st, const Assertion &a, const EvalContext &ctx, const Rational &scale,
                  const StateCont &k);

void branch(SymState st, const Assertion &a, const EvalContext &ctx, const Rational &scale, const StateCont &k,
            bool producing) {
  Value c = eval_expr(st, *a.expr, ctx);
  auto go = [&](SymState s, const Assertion &arm) {
    if (producing)
      produce_impl(std::move(s), arm, ctx, scale, k);
    else
      consume_impl(std::move(s), arm, ctx, scale, k);
  };
  auto d = st.decide(c.term);
  if (d) {
    go(st, *d ? *a.left : *a.right);
    return;
  }
  st.event(TraceEvent::Kind::Branch, a.loc, st.terms().str(c.term));
  SymState yes = st;
  yes.assume(c.term, a.loc);
  if (!yes.inconsistent()) go(std::move(yes), *a.left);
  SymState no = st;
  no.assume(st.terms().not_(c.term), a.loc);
  if (!no.inconsistent()) go(std::move(no), *a.right);
}

void produce_impl(SymState st, const Assertion &a, const EvalContext &ctx, const Rational &scale,
                  const StateCont &k) {
  switch (a.kind) {
    case AssertKind::Pure: {
      Value v = eval_expr(st, *a.expr, ctx);
      st.assume(v.term, a.loc);
      if (st.inconsistent()) return;
      k(std::move(st));
      return;
    }
    case AssertKind::Sep:
      produce_impl(std::move(st), *a.left, ctx, scale,
                   [&](SymState s) { produce_impl(std::move(s), *a.right, ctx, scale, k); });
      return;
    case AssertKind::Cond: branch(std::move(st), a, ctx, scale, k, true); return;
    case AssertKind::Chunk:
    case AssertKind::Instance:
      if (AssertionPtr d = maybe_desugar(st, a, ctx)) {
        produce_impl(std::move(st), *d, ctx, scale, k);
        return;
      }
      [[fallthrough]];
    case AssertKind::PointsTo: {
      ChunkInst in = resolve_chunk(st, a, ctx);
      produce_chunk(st, in, ctx, scale);
      if (st.inconsistent()) return;
      k(std::move(st));
      return;
    }
  }
}

void consume_impl(SymState st, const Assertion &a, const EvalContext &ctx, const Rational &scale,
                  const StateCont &k) {
  switch (a.kind) {
    case AssertKind::Pure: {
      Value v = eval_expr(st, *a.expr, ctx);
      if (!st.entails(v.term))
        consume_failure(st, Category::AssertionFailed, a.loc, "cannot prove " + to_source(*a.expr), to_source(a));
      st.event(TraceEvent::Kind::Consume, a.loc, st.terms().str(v.term));
      k(std::move(st));
      return;
    }
    case AssertKind::Sep:
      consume_impl(std::move(st), *a.left, ctx, scale,
                   [&](SymState s) { consume_impl(std::move(s), *a.right, ctx, scale, k); });
      return;
    case AssertKind::Cond: branch(std::move(st), a, ctx, scale, k, false); return;
    case AssertKind::Chunk:
    case AssertKind::Instance:
      if (AssertionPtr d = maybe_desugar(st, a, ctx)) {
        consume_impl(std::move(st), *d, ctx, scale, k);
        return;
      }
      [[fallthrough]];
    case AssertKind::PointsTo: {
      ChunkInst in = resolve_chunk(st, a, ctx);
      consume_chunk(st, in, ctx, scale);
      k(std::move(st));
      return;
    }
  }
}

struct Body {
  const Assertion *assertion = nullptr;
  std::map<std::string, Binding> env;
  EvalContext ctx;
};

Body predicate_body(SymState &st, const ChunkFamily &family, std::optional<TermId> index,
                    const std::vector<TermId> &args, const EvalContext &ctx, SourceLoc loc) {
  const ClassTable &tbl = *ctx.table;
  Body b;
  b.ctx = ctx;
  b.ctx.precomputed = nullptr;
  auto bind_params = [&](const std::vector<Param> &params, std::size_t first) {
    for (std::size_t i = 0; i < params.size(); ++i)
      b.env[params[i].name] = Binding{args.at(first + i), params[i].type, false};
  };
  switch (family.kind) {
    case ChunkFamily::Kind::Predicate: {
      const PredicateDecl *p = tbl.find_static_predicate(family.name);
      if (!p->body) fail(Category::OpaquePredicate, loc, "predicate " + family.name + " has no body");
      b.assertion = p->body.get();
      b.ctx.cls.clear();
      bind_params(p->params, 0);
      return b;
    }
    case ChunkFamily::Kind::VType: {
      const PredicateDecl *p = tbl.vtype_definition(family.cls);
      if (!p)
        fail(Category::OpaquePredicate, loc,
             family.cls + "_vtype is opaque: " + family.cls + " has no polymorphic direct base");
      b.assertion = p->body.get();
      b.ctx.cls.clear();
      bind_params(p->params, 0);
      return b;
    }
    case ChunkFamily::Kind::InstancePredicate: {
      TermStore &ts = st.terms();
      std::string dynamic;
      for (const std::string &c : tbl.class_order()) {
        if (st.entails(ts.eq(*index, ts.type_info(c)))) {
          dynamic = c;
          break;
        }
      }
      if (dynamic.empty())
        fail(Category::UnknownIndex, loc,
             "index " + ts.str(*index) + " of " + family.str() + " is not a known type_info constant");
      const PredicateDecl *p = tbl.instance_definition(family.cls, family.name, dynamic);
      if (!p || !p->body)
        fail(Category::OpaquePredicate, loc, "class " + dynamic + " has no definition of " + family.str());
      b.assertion = p->body.get();
      b.ctx.cls = dynamic;
      TermId self = convert_pointer(st, args.at(0), family.cls, dynamic, tbl, loc);
      b.env["this"] = Binding{self, TypeRef::class_type(dynamic).pointer_to(), false};
      b.env["thisType"] = Binding{*index, type_info_ptr(), false};
      bind_params(p->params, 1);
      return b;
    }
    default: fail(Category::OpaquePredicate, loc, family.str() + " chunks cannot be opened or closed");
  }
}

void open_close_chunk(SymState st, bool open, const Assertion &a, const EvalContext &ctx, const StateCont &k) {
  if (a.kind != AssertKind::Chunk)
    fail(Category::MalformedAssertion, a.loc, "open and close take a predicate assertion");
  ChunkInst in = resolve_chunk(st, a, ctx);
  if (open) {
    Match m = consume_chunk(st, in, ctx, 1);
    Body body = predicate_body(st, m.chunk.family, m.chunk.index, m.chunk.args, ctx, a.loc);
    auto saved = st.env();
    SymState bs = std::move(st);
    bs.env() = std::move(body.env);
    produce_impl(std::move(bs), *body.assertion, body.ctx, m.taken, [&](SymState s) {
      s.env() = saved;
      k(std::move(s));
    });
    return;
  }
  auto fixed = [&](const ArgSrc &src) {
    if (src.expr && (src.expr->kind == ExprKind::Pattern || src.expr->kind == ExprKind::Wildcard))
      fail(Category::MalformedAssertion, a.loc, "close needs fixed arguments");
    return produce_term(st, src, ctx);
  };
  Chunk c;
  c.family = in.family;
  c.coef = fixed_coef(st, in.coef, ctx, a.loc);
  if (in.index) c.index = fixed(*in.index);
  for (const ArgSrc &s : in.args) c.args.push_back(fixed(s));
  Body body = predicate_body(st, c.family, c.index, c.args, ctx, a.loc);
  auto saved = st.env();
  SymState bs = std::move(st);
  bs.env() = std::move(body.env);
  consume_impl(std::move(bs), *body.assertion, body.ctx, c.coef, [&](SymState s) {
    s.env() = saved;
    s.event(TraceEvent::Kind::Produce, a.loc, chunk_str(s.terms(), c));
    s.add_chunk(c);
    k(std::move(s));
  });
}

}  // namespace

AssertionPtr desugar_instance(const SymState &st, const EvalContext &ctx, const Expr *target, const Expr *index,
                              const std::string &name, const std::vector<ExprPtr> &args, const Expr *coef,
                              SourceLoc loc) {
  const ClassTable &tbl = *ctx.table;
  std::string cls;
  if (target) {
    SymState probe = st;
    Value v = eval_expr(probe, *target, ctx);
    if (!v.type.is_class_pointer())
      fail(Category::TypeError, loc, "instance predicate target has type " + v.type.str());
    cls = v.type.cls;
  } else {
    if (ctx.cls.empty()) fail(Category::UnknownName, loc, "unknown predicate " + name);
    cls = ctx.cls;
  }
  auto ref = tbl.lookup_instance_predicate(cls, name, loc);
  if (!ref) fail(Category::UnknownName, loc, "class " + cls + " has no instance predicate " + name);

  auto target_expr = [&]() {
    ExprPtr t = target ? clone(*target) : make_expr(ExprKind::This, loc);
    if (cls == ref->root) return t;
    auto c = make_expr(ExprKind::Cast, loc);
    c->type = TypeRef::class_type(ref->root).pointer_to();
    c->args.push_back(std::move(t));
    return c;
  };

  AssertionPtr vtype;
  ExprPtr index_expr;
  if (index) {
    index_expr = clone(*index);
  } else if (!target) {
    index_expr = make_expr(ExprKind::ThisType, loc);
  } else if (!tbl.is_polymorphic(cls)) {
    index_expr = make_expr(ExprKind::TypeId, loc);
    index_expr->type = TypeRef::class_type(cls);
  } else {
    std::string binder = "vt_" + std::to_string(st.terms().size());
    vtype = std::make_unique<Assertion>();
    vtype->kind = AssertKind::Chunk;
    vtype->loc = loc;
    vtype->name = cls + "_vtype";
    if (coef) vtype->coef = clone(*coef);
    vtype->args.push_back(clone(*target));
    auto pat = make_expr(ExprKind::Pattern, loc);
    pat->name = binder;
    vtype->args.push_back(std::move(pat));
    index_expr = make_expr(ExprKind::Name, loc);
    index_expr->name = binder;
  }

  auto chunk = std::make_unique<Assertion>();
  chunk->kind = AssertKind::Chunk;
  chunk->loc = loc;
  chunk->name = ref->root + "#" + name;
  if (coef) chunk->coef = clone(*coef);
  chunk->args.push_back(target_expr());
  chunk->args.push_back(std::move(index_expr));
  for (const ExprPtr &a : args) chunk->args.push_back(clone(*a));
  if (!vtype) return chunk;
  auto both = std::make_unique<Assertion>();
  both->kind = AssertKind::Sep;
  both->loc = loc;
  both->left = std::move(vtype);
  both->right = std::move(chunk);
  return both;
}

void produce(SymState st, const Assertion &a, const EvalContext &ctx, const StateCont &k) {
  produce_impl(std::move(st), a, ctx, 1, k);
}

void consume(SymState st, const Assertion &a, const EvalContext &ctx, const StateCont &k) {
  consume_impl(std::move(st), a, ctx, 1, k);
}

void open_close(SymState st, bool open, const Assertion &a, const EvalContext &ctx, const StateCont &k) {
  if (!is_chunk_like(a)) fail(Category::MalformedAssertion, a.loc, "open and close take a predicate assertion");
  AssertionPtr d = maybe_desugar(st, a, ctx);
  if (!d) {
    open_close_chunk(std::move(st), open, a, ctx, k);
    return;
  }
  if (d->kind == AssertKind::Sep) {
    // the vtype conjunct only selects the index
    d->left->peek = true;
    consume_impl(std::move(st), *d->left, ctx, 1,
                 [&](SymState s) { open_close_chunk(std::move(s), open, *d->right, ctx, k); });
    return;
  }
  open_close_chunk(std::move(st), open, *d, ctx, k);
}

}  // namespace mcv
