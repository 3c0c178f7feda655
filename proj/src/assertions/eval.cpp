#include "mcv/assertions.hpp"
#include "mcv/printer.hpp"

namespace mcv {

Sort sort_of(const TypeRef &t) {
  if (t.pointer_depth > 0) return Sort::Int;
  if (t.base == TypeRef::Base::Bool) return Sort::Bool;
  if (t.base == TypeRef::Base::Real) return Sort::Real;
  return Sort::Int;
}

void consume_failure(const SymState &st, Category category, SourceLoc loc, const std::string &message,
                     const std::string &conjunct) {
  Diagnostic d;
  d.category = category;
  d.loc = loc;
  d.message = message;
  d.conjunct = conjunct;
  d.heap = st.heap_strings();
  throw DiagnosticError(std::move(d));
}

namespace {

TypeRef int_type() { return TypeRef::make(TypeRef::Base::Int); }
TypeRef bool_type() { return TypeRef::make(TypeRef::Base::Bool); }
TypeRef type_info_ptr() { return TypeRef::make(TypeRef::Base::TypeInfo).pointer_to(); }

const ClassTable &table_of(const EvalContext &ctx) {
  if (!ctx.table) throw std::logic_error("evaluation without a class table");
  return *ctx.table;
}

Value locate(SymState &st, const Expr &e, const EvalContext &ctx);

Value member_place(SymState &st, TermId addr, const std::string &cls, const std::string &field, SourceLoc loc,
                   const EvalContext &ctx) {
  const ClassTable &tbl = table_of(ctx);
  auto fr = tbl.lookup_field(cls, field, loc);
  if (!fr) fail(Category::UnknownName, loc, "class " + cls + " has no field " + field);
  TermId obj = convert_pointer(st, addr, cls, fr->cls, tbl, loc);
  Value v;
  v.type = fr->decl->type;
  if (v.type.is_class_object()) {
    v.place.kind = Place::Kind::Object;
    v.place.addr = st.terms().field_addr(obj, fr->cls, field);
    v.term = v.place.addr;
  } else {
    v.place.kind = Place::Kind::Field;
    v.place.cls = fr->cls;
    v.place.field = field;
    v.place.addr = obj;
  }
  return v;
}

Value locate(SymState &st, const Expr &e, const EvalContext &ctx) {
  switch (e.kind) {
    case ExprKind::Name: {
      if (const Binding *b = st.lookup(e.name)) {
        Value v;
        v.type = b->type.without_ref();
        if (b->type.is_class_object()) {
          v.place.kind = Place::Kind::Object;
          v.place.addr = b->value;
          v.term = b->value;
        } else if (b->type.reference) {
          v.place.kind = Place::Kind::Cell;
          v.place.addr = b->value;
        } else {
          v.place.kind = Place::Kind::Local;
          v.place.local = e.name;
        }
        return v;
      }
      const Binding *self = st.lookup("this");
      if (!ctx.cls.empty() && self && table_of(ctx).lookup_field(ctx.cls, e.name, e.loc))
        return member_place(st, self->value, ctx.cls, e.name, e.loc, ctx);
      fail(Category::UnknownName, e.loc, "unknown name " + e.name);
    }
    case ExprKind::Member: {
      Value base = eval_expr(st, *e.args[0], ctx);
      if (e.arrow ? !base.type.is_class_pointer() : !base.type.is_class_object())
        fail(Category::TypeError, e.loc,
             "member access " + std::string(e.arrow ? "->" : ".") + e.name + " on a value of type " + base.type.str());
      return member_place(st, base.term, base.type.cls, e.name, e.loc, ctx);
    }
    case ExprKind::Deref: {
      Value p = eval_expr(st, *e.args[0], ctx);
      if (!p.type.is_pointer()) fail(Category::TypeError, e.loc, "dereference of a non-pointer");
      Value v;
      v.type = p.type.pointee();
      if (v.type.is_class_object()) {
        v.place.kind = Place::Kind::Object;
        v.term = p.term;
      } else {
        v.place.kind = Place::Kind::Cell;
      }
      v.place.addr = p.term;
      return v;
    }
    default: fail(Category::TypeError, e.loc, "expression is not an lvalue");
  }
}

TermId binary(TermStore &ts, const std::string &op, TermId a, TermId b, SourceLoc loc) {
  if (op == "+") return ts.add(a, b);
  if (op == "-") return ts.sub(a, b);
  if (op == "*") return ts.mul(a, b);
  if (op == "/") {
    if (ts.is_number(a) && ts.is_number(b) && ts.node(b).value != 0)
      return ts.number(ts.node(a).value / ts.node(b).value);
    fail(Category::TypeError, loc, "division is only supported between constants");
  }
  if (op == "==") return ts.eq(a, b);
  if (op == "!=") return ts.ne(a, b);
  if (op == "<") return ts.lt(a, b);
  if (op == "<=") return ts.le(a, b);
  if (op == ">") return ts.gt(a, b);
  if (op == ">=") return ts.ge(a, b);
  if (op == "&&") return ts.and_(a, b);
  if (op == "||") return ts.or_(a, b);
  fail(Category::TypeError, loc, "unsupported operator " + op);
}

}  // namespace

TermId convert_pointer(SymState &st, TermId addr, const std::string &from, const std::string &to,
                       const ClassTable &table, SourceLoc loc) {
  if (from == to) return addr;
  TermStore &ts = st.terms();
  UpcastResult up = table.upcast_path(from, to);
  if (up.status == UpcastResult::Status::Ok) return ts.upcast(addr, up.path);
  if (up.status == UpcastResult::Status::Ambiguous)
    fail(Category::AmbiguousUpcast, loc, "conversion from " + from + " to " + to + " is ambiguous");
  UpcastResult down = table.upcast_path(to, from);
  if (down.status == UpcastResult::Status::Ambiguous)
    fail(Category::AmbiguousUpcast, loc, "conversion from " + from + " to " + to + " is ambiguous");
  if (down.status == UpcastResult::Status::NotABase)
    fail(Category::NotABase, loc, to + " is neither a base nor a derived class of " + from);
  TermId t = addr;
  bool peeled = true;
  for (auto it = down.path.rbegin(); it != down.path.rend(); ++it) {
    const TermNode &n = ts.node(t);
    if (n.kind != TermKind::FieldPtr || n.text != it->derived || n.aux != it->base) {
      peeled = false;
      break;
    }
    t = n.kids[0];
  }
  if (peeled) return t;
  TermId d = ts.fresh("down");
  st.assume(ts.eq(ts.upcast(d, down.path), addr), loc);
  return d;
}

Value eval_place(SymState &st, const Expr &e, const EvalContext &ctx) { return locate(st, e, ctx); }

Value read_place(SymState &st, const Place &p, const TypeRef &type, SourceLoc loc) {
  Value v;
  v.type = type;
  v.place = p;
  TermStore &ts = st.terms();
  switch (p.kind) {
    case Place::Kind::Local: {
      const Binding *b = st.lookup(p.local);
      if (!b) fail(Category::UnknownName, loc, "unknown name " + p.local);
      v.term = b->value;
      return v;
    }
    case Place::Kind::Object: v.term = p.addr; return v;
    case Place::Kind::Field: {
      auto m = st.match_chunk(ChunkFamily::field(p.cls, p.field), std::nullopt, CoefPattern::all(),
                              {Pattern::fixed(p.addr), Pattern::any()}, true);
      if (!m)
        consume_failure(st, Category::MissingChunk, loc, "no permission to read field " + p.cls + "::" + p.field,
                        p.cls + "_" + p.field + "(" + ts.str(p.addr) + ", _)");
      v.term = m->chunk.args[1];
      return v;
    }
    case Place::Kind::Cell: {
      for (const Chunk &c : st.heap()) {
        if (c.family.kind == ChunkFamily::Kind::Integer && st.entails(ts.eq(c.args[0], p.addr))) {
          v.term = c.args[1];
          return v;
        }
        if (c.family.kind == ChunkFamily::Kind::Field &&
            st.entails(ts.eq(ts.field_addr(c.args[0], c.family.cls, c.family.name), p.addr))) {
          v.term = c.args[1];
          return v;
        }
      }
      consume_failure(st, Category::MissingChunk, loc, "no permission to read " + ts.str(p.addr),
                      "integer(" + ts.str(p.addr) + ", _)");
    }
    case Place::Kind::None: break;
  }
  fail(Category::TypeError, loc, "expression is not readable");
}

void write_place(SymState &st, const Place &p, TermId value, SourceLoc loc) {
  TermStore &ts = st.terms();
  switch (p.kind) {
    case Place::Kind::Local: {
      Binding *b = &st.env()[p.local];
      b->value = value;
      return;
    }
    case Place::Kind::Field: {
      ChunkFamily fam = ChunkFamily::field(p.cls, p.field);
      auto m = st.match_chunk(fam, std::nullopt, CoefPattern::fixed(1), {Pattern::fixed(p.addr), Pattern::any()});
      if (!m)
        consume_failure(st, Category::MissingChunk, loc, "no full permission to write field " + p.cls + "::" + p.field,
                        p.cls + "_" + p.field + "(" + ts.str(p.addr) + ", _)");
      st.add_chunk(Chunk{fam, std::nullopt, 1, {p.addr, value}});
      return;
    }
    case Place::Kind::Cell: {
      for (std::size_t i = 0; i < st.heap().size(); ++i) {
        const Chunk &c = st.heap()[i];
        if (c.coef != 1) continue;
        bool hit = false;
        if (c.family.kind == ChunkFamily::Kind::Integer)
          hit = st.entails(ts.eq(c.args[0], p.addr));
        else if (c.family.kind == ChunkFamily::Kind::Field)
          hit = st.entails(ts.eq(ts.field_addr(c.args[0], c.family.cls, c.family.name), p.addr));
        if (!hit) continue;
        Chunk updated = c;
        updated.args[1] = value;
        st.remove_chunk(i);
        st.add_chunk(std::move(updated));
        return;
      }
      consume_failure(st, Category::MissingChunk, loc, "no full permission to write " + ts.str(p.addr),
                      "integer(" + ts.str(p.addr) + ", _)");
    }
    default: fail(Category::TypeError, loc, "expression is not assignable");
  }
}

Value eval_expr(SymState &st, const Expr &e, const EvalContext &ctx) {
  if (ctx.precomputed) {
    auto it = ctx.precomputed->find(&e);
    if (it != ctx.precomputed->end()) return it->second;
  }
  TermStore &ts = st.terms();
  Value v;
  switch (e.kind) {
    case ExprKind::IntLit:
      v.term = ts.integer(e.int_value);
      v.type = int_type();
      return v;
    case ExprKind::BoolLit:
      v.term = ts.boolean(e.bool_value);
      v.type = bool_type();
      return v;
    case ExprKind::Null:
      v.term = ts.null();
      v.type = TypeRef::make(TypeRef::Base::Void).pointer_to();
      v.null_literal = true;
      return v;
    case ExprKind::Name:
    case ExprKind::Member:
    case ExprKind::Deref: {
      Value p = locate(st, e, ctx);
      return read_place(st, p.place, p.type, e.loc);
    }
    case ExprKind::This:
    case ExprKind::ThisType:
    case ExprKind::Result: {
      const char *key = e.kind == ExprKind::This ? "this" : e.kind == ExprKind::ThisType ? "thisType" : "result";
      const Binding *b = st.lookup(key);
      if (!b) fail(Category::TypeError, e.loc, std::string("'") + key + "' is not available here");
      v.term = b->value;
      v.type = b->type;
      return v;
    }
    case ExprKind::AddrOf: {
      Value p = locate(st, *e.args[0], ctx);
      switch (p.place.kind) {
        case Place::Kind::Field:
          v.term = ts.field_addr(p.place.addr, p.place.cls, p.place.field);
          break;
        case Place::Kind::Object:
        case Place::Kind::Cell: v.term = p.place.addr; break;
        default: fail(Category::TypeError, e.loc, "taking the address of a local variable is not supported");
      }
      v.type = p.type.pointer_to();
      return v;
    }
    case ExprKind::Unary: {
      Value a = eval_expr(st, *e.args[0], ctx);
      if (e.name == "!") {
        v.term = ts.not_(a.term);
        v.type = bool_type();
      } else {
        v.term = ts.neg(a.term);
        v.type = a.type;
      }
      return v;
    }
    case ExprKind::Binary: {
      Value a = eval_expr(st, *e.args[0], ctx);
      Value b = eval_expr(st, *e.args[1], ctx);
      v.term = binary(ts, e.name, a.term, b.term, e.loc);
      static const std::vector<std::string> arith = {"+", "-", "*", "/"};
      if (std::find(arith.begin(), arith.end(), e.name) != arith.end()) {
        bool real = a.type.base == TypeRef::Base::Real || b.type.base == TypeRef::Base::Real ||
                    (ts.is_number(v.term) && ts.sort(v.term) == Sort::Real);
        v.type = TypeRef::make(real ? TypeRef::Base::Real : TypeRef::Base::Int);
      } else {
        v.type = bool_type();
      }
      return v;
    }
    case ExprKind::Ternary: {
      Value c = eval_expr(st, *e.args[0], ctx);
      auto d = st.decide(c.term);
      if (d) return eval_expr(st, *e.args[*d ? 1 : 2], ctx);
      Value a = eval_expr(st, *e.args[1], ctx);
      Value b = eval_expr(st, *e.args[2], ctx);
      v.type = a.type;
      v.term = ts.fresh("cond", sort_of(a.type));
      st.assume(ts.and_(ts.implies(c.term, ts.eq(v.term, a.term)), ts.implies(ts.not_(c.term), ts.eq(v.term, b.term))),
                e.loc);
      return v;
    }
    case ExprKind::Cast: {
      Value a = eval_expr(st, *e.args[0], ctx);
      v.type = e.type;
      if (a.null_literal && e.type.is_pointer()) {
        v.term = a.term;
        return v;
      }
      if (e.type.is_class_pointer() && a.type.is_class_pointer()) {
        v.term = convert_pointer(st, a.term, a.type.cls, e.type.cls, table_of(ctx), e.loc);
        return v;
      }
      if (e.type == a.type || ((e.type.is_int() || e.type.is_bool()) && (a.type.is_int() || a.type.is_bool()))) {
        v.term = a.term;
        return v;
      }
      fail(Category::TypeError, e.loc, "unsupported cast from " + a.type.str() + " to " + e.type.str());
    }
    case ExprKind::TypeId:
      if (e.type.base != TypeRef::Base::Class || e.type.pointer_depth != 0 || !table_of(ctx).find(e.type.cls))
        fail(Category::TypeError, e.loc, "typeid is only supported on class types");
      v.term = ts.type_info(e.type.cls);
      v.type = type_info_ptr();
      return v;
    case ExprKind::Pattern:
    case ExprKind::Wildcard:
      fail(Category::MalformedAssertion, e.loc, "pattern " + to_source(e) + " is not allowed here");
    case ExprKind::DtorCall: fail(Category::ExplicitDtorCall, e.loc, "explicit destructor calls are not allowed");
    case ExprKind::Call:
    case ExprKind::MemberCall:
    case ExprKind::New: fail(Category::TypeError, e.loc, "calls are not allowed in this context");
  }
  fail(Category::TypeError, e.loc, "unsupported expression");
}

}  // namespace mcv
