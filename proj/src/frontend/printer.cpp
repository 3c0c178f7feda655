#include "mcv/printer.hpp"

#include <sstream>

namespace mcv {

std::string TypeRef::str() const { return to_source(*this); }

std::string to_source(const TypeRef &t) {
  std::string s;
  switch (t.base) {
    case TypeRef::Base::Void: s = "void"; break;
    case TypeRef::Base::Int: s = "int"; break;
    case TypeRef::Base::Bool: s = "bool"; break;
    case TypeRef::Base::Real: s = "real"; break;
    case TypeRef::Base::TypeInfo: s = "std::type_info"; break;
    case TypeRef::Base::Class: s = t.cls; break;
  }
  for (int i = 0; i < t.pointer_depth; ++i) s += "*";
  if (t.reference) s += "&";
  return s;
}

namespace {

// Everything is printed fully parenthesized so that reparsing never depends
// on precedence.
void print_expr(std::ostream &os, const Expr &e);

// Operand of `.`, `->`: postfix chains and names need no parentheses.
void print_operand(std::ostream &os, const Expr &e) {
  switch (e.kind) {
    case ExprKind::Name:
    case ExprKind::This:
    case ExprKind::Member:
    case ExprKind::Call:
    case ExprKind::MemberCall:
    case ExprKind::Cast: print_expr(os, e); return;
    default: os << "("; print_expr(os, e); os << ")";
  }
}

void print_expr(std::ostream &os, const Expr &e) {
  auto args_from = [&](std::size_t first) {
    os << "(";
    for (std::size_t i = first; i < e.args.size(); ++i) {
      if (i > first) os << ", ";
      print_expr(os, *e.args[i]);
    }
    os << ")";
  };
  switch (e.kind) {
    case ExprKind::IntLit: os << e.int_value; break;
    case ExprKind::BoolLit: os << (e.bool_value ? "true" : "false"); break;
    case ExprKind::Null: os << "nullptr"; break;
    case ExprKind::Name: os << e.name; break;
    case ExprKind::This: os << "this"; break;
    case ExprKind::ThisType: os << "thisType"; break;
    case ExprKind::Result: os << "result"; break;
    case ExprKind::Member:
      print_operand(os, *e.args[0]);
      os << (e.arrow ? "->" : ".") << e.name;
      break;
    case ExprKind::Deref:
      os << "*(";
      print_expr(os, *e.args[0]);
      os << ")";
      break;
    case ExprKind::AddrOf:
      os << "&(";
      print_expr(os, *e.args[0]);
      os << ")";
      break;
    case ExprKind::Unary:
      os << e.name << "(";
      print_expr(os, *e.args[0]);
      os << ")";
      break;
    case ExprKind::Binary:
      os << "(";
      print_expr(os, *e.args[0]);
      os << " " << e.name << " ";
      print_expr(os, *e.args[1]);
      os << ")";
      break;
    case ExprKind::Ternary:
      os << "(";
      print_expr(os, *e.args[0]);
      os << " ? ";
      print_expr(os, *e.args[1]);
      os << " : ";
      print_expr(os, *e.args[2]);
      os << ")";
      break;
    case ExprKind::Cast:
      os << "((" << to_source(e.type) << ")";
      print_expr(os, *e.args[0]);
      os << ")";
      break;
    case ExprKind::Call:
      os << e.name;
      args_from(0);
      break;
    case ExprKind::MemberCall:
      if (e.args[0]) {
        print_operand(os, *e.args[0]);
        os << (e.arrow ? "->" : ".");
      }
      if (!e.qualifier.empty()) os << e.qualifier << "::";
      os << e.name;
      args_from(1);
      break;
    case ExprKind::New:
      os << "new " << to_source(e.type);
      args_from(0);
      break;
    case ExprKind::TypeId: os << "&typeid(" << to_source(e.type) << ")"; break;
    case ExprKind::Pattern: os << "?" << e.name; break;
    case ExprKind::Wildcard: os << "_"; break;
    case ExprKind::DtorCall:
      print_operand(os, *e.args[0]);
      os << (e.arrow ? "->" : ".") << "~" << e.name << "()";
      break;
  }
}

void print_assertion(std::ostream &os, const Assertion &a) {
  auto coef = [&] {
    if (a.coef) {
      os << "[";
      print_expr(os, *a.coef);
      os << "]";
    }
  };
  auto arglist = [&] {
    os << "(";
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) os << ", ";
      print_expr(os, *a.args[i]);
    }
    os << ")";
  };
  switch (a.kind) {
    case AssertKind::Pure: print_expr(os, *a.expr); break;
    case AssertKind::Chunk:
      coef();
      os << a.name;
      if (a.index) {
        os << "(";
        print_expr(os, *a.index);
        os << ")";
      }
      arglist();
      break;
    case AssertKind::Instance:
      coef();
      print_operand(os, *a.target);
      os << "->" << a.name;
      if (a.index) {
        os << "(";
        print_expr(os, *a.index);
        os << ")";
      }
      arglist();
      break;
    case AssertKind::PointsTo:
      coef();
      print_expr(os, *a.expr);
      os << " |-> ";
      print_expr(os, *a.rhs);
      break;
    case AssertKind::Sep:
      os << "(";
      print_assertion(os, *a.left);
      os << " &*& ";
      print_assertion(os, *a.right);
      os << ")";
      break;
    case AssertKind::Cond:
      os << "(";
      print_expr(os, *a.expr);
      os << " ? ";
      print_assertion(os, *a.left);
      os << " : ";
      print_assertion(os, *a.right);
      os << ")";
      break;
  }
}

class SourcePrinter {
 public:
  explicit SourcePrinter(std::ostream &os) : os_(os) {}

  void program(const Program &p) {
    for (const auto &d : p.decls) {
      if (auto *c = std::get_if<ClassDecl>(&d)) klass(*c);
      else if (auto *f = std::get_if<FunctionDecl>(&d)) function(*f);
      else predicate(std::get<PredicateDecl>(d));
      os_ << "\n";
    }
  }

 private:
  void indent() {
    for (int i = 0; i < depth_; ++i) os_ << "  ";
  }

  void predicate(const PredicateDecl &p) {
    indent();
    os_ << "//@ predicate " << p.name << "(";
    for (std::size_t i = 0; i < p.params.size(); ++i) {
      if (i) os_ << (i == p.input_count ? "; " : ", ");
      os_ << to_source(p.params[i].type) << " " << p.params[i].name;
    }
    os_ << ")";
    if (p.body) {
      os_ << " = ";
      print_assertion(os_, *p.body);
    }
    os_ << ";\n";
  }

  void klass(const ClassDecl &c) {
    indent();
    os_ << (c.is_struct ? "struct " : "class ") << c.name;
    for (std::size_t i = 0; i < c.bases.size(); ++i)
      os_ << (i ? ", " : " : ") << "public " << c.bases[i].name;
    os_ << " {\n";
    ++depth_;
    if (!c.is_struct) {
      indent();
      os_ << "public:\n";
    }
    for (const auto &f : c.fields) {
      indent();
      os_ << to_source(f.type) << " " << f.name;
      if (f.init) {
        os_ << " = ";
        print_expr(os_, *f.init);
      }
      os_ << ";\n";
    }
    for (const auto &p : c.predicates) predicate(p);
    for (const auto &f : c.functions) function(f);
    --depth_;
    indent();
    os_ << "};\n";
  }

  void params(const std::vector<Param> &ps) {
    os_ << "(";
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (i) os_ << ", ";
      os_ << to_source(ps[i].type) << " " << ps[i].name;
    }
    os_ << ")";
  }

  void contract(const FunctionDecl &f) {
    if (!f.contract) return;
    if (f.contract->pre) {
      indent();
      os_ << "//@ requires ";
      print_assertion(os_, *f.contract->pre);
      os_ << ";\n";
    }
    if (f.contract->post) {
      indent();
      os_ << "//@ ensures ";
      print_assertion(os_, *f.contract->post);
      os_ << ";\n";
    }
  }

  void function(const FunctionDecl &f) {
    indent();
    if (f.is_virtual) os_ << "virtual ";
    switch (f.kind) {
      case FunctionDecl::Kind::Constructor:
      case FunctionDecl::Kind::Destructor:
        os_ << f.name;
        break;
      default:
        os_ << to_source(f.return_type) << " " << f.name;
    }
    params(f.params);
    if (f.is_const) os_ << " const";
    if (f.is_override) os_ << " override";
    if (!f.inits.empty()) {
      os_ << " : ";
      for (std::size_t i = 0; i < f.inits.size(); ++i) {
        if (i) os_ << ", ";
        os_ << f.inits[i].name << "(";
        for (std::size_t j = 0; j < f.inits[i].args.size(); ++j) {
          if (j) os_ << ", ";
          print_expr(os_, *f.inits[i].args[j]);
        }
        os_ << ")";
      }
    }
    if (f.body) {
      os_ << "\n";
      contract(f);
      stmt(*f.body);
    } else {
      os_ << (f.is_pure ? " = 0;\n" : ";\n");
      contract(f);
    }
  }

  void stmt(const Stmt &s) {
    indent();
    switch (s.kind) {
      case StmtKind::Block:
        os_ << "{\n";
        ++depth_;
        for (const auto &x : s.body) stmt(*x);
        --depth_;
        indent();
        os_ << "}\n";
        break;
      case StmtKind::VarDecl:
        os_ << to_source(s.type) << " " << s.name;
        if (s.expr) {
          os_ << " = ";
          print_expr(os_, *s.expr);
        } else if (s.ctor_syntax && !s.ctor_args.empty()) {
          os_ << "(";
          for (std::size_t i = 0; i < s.ctor_args.size(); ++i) {
            if (i) os_ << ", ";
            print_expr(os_, *s.ctor_args[i]);
          }
          os_ << ")";
        }
        os_ << ";\n";
        break;
      case StmtKind::Assign:
        print_expr(os_, *s.lhs);
        os_ << " = ";
        print_expr(os_, *s.expr);
        os_ << ";\n";
        break;
      case StmtKind::ExprStmt:
        print_expr(os_, *s.expr);
        os_ << ";\n";
        break;
      case StmtKind::Return:
        os_ << "return";
        if (s.expr) {
          os_ << " ";
          print_expr(os_, *s.expr);
        }
        os_ << ";\n";
        break;
      case StmtKind::If:
        os_ << "if (";
        print_expr(os_, *s.expr);
        os_ << ")\n";
        nested(*s.then_branch);
        if (s.else_branch) {
          indent();
          os_ << "else\n";
          nested(*s.else_branch);
        }
        break;
      case StmtKind::While:
        os_ << "while (";
        print_expr(os_, *s.expr);
        os_ << ")\n";
        indent();
        os_ << "//@ invariant ";
        print_assertion(os_, *s.assertion);
        os_ << ";\n";
        nested(*s.then_branch);
        break;
      case StmtKind::Delete:
        os_ << "delete ";
        print_expr(os_, *s.expr);
        os_ << ";\n";
        break;
      case StmtKind::Open:
      case StmtKind::Close:
      case StmtKind::Leak:
      case StmtKind::GhostAssert: {
        const char *kw = s.kind == StmtKind::Open    ? "open"
                         : s.kind == StmtKind::Close ? "close"
                         : s.kind == StmtKind::Leak  ? "leak"
                                                     : "assert";
        os_ << "//@ " << kw << " ";
        print_assertion(os_, *s.assertion);
        os_ << ";\n";
        break;
      }
    }
  }

  // Single statements in if/while positions. Ghost statements there were
  // parsed into a block, so they are always printed inside braces.
  void nested(const Stmt &s) {
    ++depth_;
    stmt(s);
    --depth_;
  }

  std::ostream &os_;
  int depth_ = 0;
};

// ---- structural dump -------------------------------------------------------

void dump_type(std::ostream &os, const TypeRef &t) { os << "(type " << to_source(t) << ")"; }

void dump_expr(std::ostream &os, const Expr *e) {
  if (!e) {
    os << "nil";
    return;
  }
  os << "(e" << static_cast<int>(e->kind) << " '" << e->name << "' '" << e->qualifier << "' "
     << e->arrow << " " << e->int_value << " " << e->bool_value << " ";
  dump_type(os, e->type);
  for (const auto &a : e->args) {
    os << " ";
    dump_expr(os, a.get());
  }
  os << ")";
}

void dump_assertion(std::ostream &os, const Assertion *a) {
  if (!a) {
    os << "nil";
    return;
  }
  os << "(a" << static_cast<int>(a->kind) << " '" << a->name << "' " << a->peek << " ";
  dump_expr(os, a->coef.get());
  os << " ";
  dump_expr(os, a->target.get());
  os << " ";
  dump_expr(os, a->index.get());
  os << " [";
  for (const auto &x : a->args) {
    dump_expr(os, x.get());
    os << " ";
  }
  os << "] ";
  dump_expr(os, a->expr.get());
  os << " ";
  dump_expr(os, a->rhs.get());
  os << " ";
  dump_assertion(os, a->left.get());
  os << " ";
  dump_assertion(os, a->right.get());
  os << ")";
}

void dump_stmt(std::ostream &os, const Stmt *s) {
  if (!s) {
    os << "nil";
    return;
  }
  os << "(s" << static_cast<int>(s->kind) << " '" << s->name << "' ";
  dump_type(os, s->type);
  os << " " << s->ctor_syntax << " ";
  dump_expr(os, s->expr.get());
  os << " ";
  dump_expr(os, s->lhs.get());
  os << " [";
  for (const auto &x : s->ctor_args) dump_expr(os, x.get());
  os << "] [";
  for (const auto &x : s->body) dump_stmt(os, x.get());
  os << "] ";
  dump_stmt(os, s->then_branch.get());
  os << " ";
  dump_stmt(os, s->else_branch.get());
  os << " ";
  dump_assertion(os, s->assertion.get());
  os << ")";
}

void dump_params(std::ostream &os, const std::vector<Param> &ps) {
  os << "(params";
  for (const auto &p : ps) {
    os << " (" << p.name << " ";
    dump_type(os, p.type);
    os << ")";
  }
  os << ")";
}

void dump_predicate(std::ostream &os, const PredicateDecl &p) {
  os << "(predicate " << p.name << " " << p.input_count << " ";
  dump_params(os, p.params);
  os << " ";
  dump_assertion(os, p.body.get());
  os << ")";
}

void dump_function(std::ostream &os, const FunctionDecl &f) {
  os << "(function " << static_cast<int>(f.kind) << " " << f.name << " ";
  dump_type(os, f.return_type);
  os << " ";
  dump_params(os, f.params);
  os << " " << f.is_virtual << f.is_override << f.is_pure << f.is_const << " (inits";
  for (const auto &in : f.inits) {
    os << " (" << in.name;
    for (const auto &a : in.args) {
      os << " ";
      dump_expr(os, a.get());
    }
    os << ")";
  }
  os << ") ";
  if (f.contract) {
    os << "(contract ";
    dump_assertion(os, f.contract->pre.get());
    os << " ";
    dump_assertion(os, f.contract->post.get());
    os << ")";
  } else {
    os << "nil";
  }
  os << " ";
  dump_stmt(os, f.body.get());
  os << ")";
}

}  // namespace

std::string to_source(const Expr &e) {
  std::ostringstream os;
  print_expr(os, e);
  return os.str();
}

std::string to_source(const Assertion &a) {
  std::ostringstream os;
  print_assertion(os, a);
  return os.str();
}

std::string pretty_print(const Program &program) {
  std::ostringstream os;
  SourcePrinter(os).program(program);
  return os.str();
}

std::string structural_dump(const Program &program) {
  std::ostringstream os;
  for (const auto &d : program.decls) {
    if (auto *c = std::get_if<ClassDecl>(&d)) {
      os << "(class " << c->name << " " << c->is_struct << " (bases";
      for (const auto &b : c->bases) os << " " << b.name;
      os << ") (fields";
      for (const auto &f : c->fields) {
        os << " (" << f.name << " ";
        dump_type(os, f.type);
        os << " ";
        dump_expr(os, f.init.get());
        os << ")";
      }
      os << ")";
      for (const auto &p : c->predicates) dump_predicate(os, p);
      for (const auto &f : c->functions) dump_function(os, f);
      os << ")\n";
    } else if (auto *f = std::get_if<FunctionDecl>(&d)) {
      dump_function(os, *f);
      os << "\n";
    } else {
      dump_predicate(os, std::get<PredicateDecl>(d));
      os << "\n";
    }
  }
  return os.str();
}

std::string structural_dump(const Assertion &a) {
  std::ostringstream os;
  dump_assertion(os, &a);
  return os.str();
}

std::string structural_dump(const Expr &e) {
  std::ostringstream os;
  dump_expr(os, &e);
  return os.str();
}

}  // namespace mcv
