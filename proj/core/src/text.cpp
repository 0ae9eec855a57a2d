#include "aquas/text.hpp"

#include <cctype>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "aquas/isax.hpp"

namespace aquas::ir {

std::string VerifyError::join(const std::vector<Diagnostic>& diags) {
  std::string out = "verification failed:";
  for (const auto& d : diags) out += "\n  " + d.message;
  return out;
}

namespace {

// ----------------------------------------------------------------- lexer

enum class Tok {
  Ident,    // func, addi, rs1, full, ...
  Value,    // %name
  FuncRef,  // @name
  Int,
  Punct,  // single char: ( ) { } [ ] < > = : ,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  int64_t ival = 0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& cur() const { return cur_; }

  void advance() {
    skip_ws();
    cur_.line = line_;
    cur_.col = col_;
    if (pos_ >= src_.size()) {
      cur_.kind = Tok::End;
      cur_.text.clear();
      return;
    }
    char c = src_[pos_];
    if (c == '%' || c == '@') {
      get();
      std::string name = lex_word();
      if (name.empty()) fail("expected a name after '" + std::string(1, c) + "'");
      cur_.kind = (c == '%') ? Tok::Value : Tok::FuncRef;
      cur_.text = std::move(name);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      bool neg = c == '-';
      if (neg) get();
      int64_t v = 0;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        v = v * 10 + (get() - '0');
      }
      cur_.kind = Tok::Int;
      cur_.ival = neg ? -v : v;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      cur_.kind = Tok::Ident;
      cur_.text = lex_word();
      return;
    }
    switch (c) {
      case '(': case ')': case '{': case '}': case '[': case ']':
      case '<': case '>': case '=': case ':': case ',':
        cur_.kind = Tok::Punct;
        cur_.text = std::string(1, get());
        return;
      default:
        fail(std::string("unexpected character '") + c + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(cur_.line, cur_.col, msg);
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') get();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        get();
      } else {
        break;
      }
    }
  }

  std::string lex_word() {
    std::string out;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')
        out += get();
      else
        break;
    }
    return out;
  }

  char get() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token cur_;
};

// ----------------------------------------------------------------- parser

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Function parse_function() {
    expect_ident("func");
    Function f;
    f.kind = FuncKind::Application;
    f_ = &f;
    f.name = expect(Tok::FuncRef).text;
    expect_punct("(");
    if (!at_punct(")")) {
      do {
        Token v = expect(Tok::Value);
        expect_punct(":");
        Type t = parse_type();
        f.params.push_back(def_value(v, t));
      } while (accept_punct(","));
    }
    expect_punct(")");
    expect_punct("{");
    parse_ops_into(f.body);
    expect_punct("}");
    finish(f);
    return f;
  }

  isax::IsaxDescription parse_isax_file() {
    expect_ident("isax");
    isax::IsaxDescription d;
    Function f;
    f.kind = FuncKind::IsaxBody;
    f_ = &f;
    f.name = expect(Tok::FuncRef).text;
    d.name = f.name;
    expect_punct("(");
    do {
      Token r = expect(Tok::Ident);
      if (r.text == "rd") d.has_rd = true;
      d.registers.push_back(r.text);
      registers_.insert(r.text);
    } while (accept_punct(","));
    expect_punct(")");
    expect_punct("{");
    while (at_ident("static")) {
      lex_.advance();
      Token v = expect(Tok::Value);
      expect_punct(":");
      Type t = parse_type();
      if (!t.is_array()) lex_.fail("static declarations must be arrays");
      if (at_ident("partition")) {
        lex_.advance();
        Token k = expect(Tok::Ident);
        PartitionDirective part;
        if (k.text == "cyclic")
          part.kind = PartitionDirective::Kind::Cyclic;
        else if (k.text == "block")
          part.kind = PartitionDirective::Kind::Block;
        else if (k.text == "complete")
          part.kind = PartitionDirective::Kind::Complete;
        else
          lex_.fail("unknown partition kind '" + k.text + "'");
        if (part.kind != PartitionDirective::Kind::Complete)
          part.factor = expect(Tok::Int).ival;
        t = Type::array(t.array_len(), t.elem_kind(), part);
      }
      f.params.push_back(def_value(v, t));
    }
    parse_ops_into(f.body);
    expect_punct("}");
    finish(f);
    d.effects = has_side_effects_anywhere(f.body);
    d.body = std::move(f);
    return d;
  }

 private:
  static bool has_side_effects_anywhere(const Block& b) {
    for (const auto& op : b.ops)
      if (op.op == Opcode::MemStore || op.op == Opcode::BlockStore)
        return true;
      else
        for (const auto& r : op.regions)
          for (const auto& blk : r.blocks)
            if (has_side_effects_anywhere(blk)) return true;
    return false;
  }

  void finish(Function& f) {
    auto diags = verify(f);
    if (!diags.empty()) throw VerifyError(diags);
  }

  // --- token helpers

  Token expect(Tok kind) {
    if (lex_.cur().kind != kind) lex_.fail("unexpected token");
    Token t = lex_.cur();
    lex_.advance();
    return t;
  }

  void expect_punct(const std::string& p) {
    if (!at_punct(p)) lex_.fail("expected '" + p + "'");
    lex_.advance();
  }

  void expect_ident(const std::string& word) {
    if (!at_ident(word)) lex_.fail("expected '" + word + "'");
    lex_.advance();
  }

  bool at_punct(const std::string& p) const {
    return lex_.cur().kind == Tok::Punct && lex_.cur().text == p;
  }

  bool at_ident(const std::string& w) const {
    return lex_.cur().kind == Tok::Ident && lex_.cur().text == w;
  }

  bool accept_punct(const std::string& p) {
    if (!at_punct(p)) return false;
    lex_.advance();
    return true;
  }

  // --- values and types

  ValueId def_value(const Token& tok, Type t) {
    if (names_.count(tok.text))
      throw ParseError(tok.line, tok.col, "redefinition of %" + tok.text);
    ValueId v = f_->new_value(tok.text, t);
    names_[tok.text] = v;
    return v;
  }

  ValueId use_value(const Token& tok) {
    auto it = names_.find(tok.text);
    if (it == names_.end())
      throw ParseError(tok.line, tok.col, "unknown value %" + tok.text);
    return it->second;
  }

  ValueId parse_use() { return use_value(expect(Tok::Value)); }

  Type parse_type() {
    Token t = expect(Tok::Ident);
    if (t.text == "i1") return Type::i1();
    if (t.text == "i32") return Type::i32();
    if (t.text == "i64") return Type::i64();
    if (t.text == "index") return Type::index();
    if (t.text == "ptr") {
      expect_punct("<");
      TypeKind elem = parse_scalar_kind();
      expect_punct(">");
      return Type::ptr(elem);
    }
    if (t.text == "array") {
      expect_punct("<");
      int64_t len = expect(Tok::Int).ival;
      expect_ident("x");
      TypeKind elem = parse_scalar_kind();
      expect_punct(">");
      return Type::array(len, elem);
    }
    throw ParseError(t.line, t.col, "unknown type '" + t.text + "'");
  }

  TypeKind parse_scalar_kind() {
    Token t = expect(Tok::Ident);
    if (t.text == "i1") return TypeKind::I1;
    if (t.text == "i32") return TypeKind::I32;
    if (t.text == "i64") return TypeKind::I64;
    if (t.text == "index") return TypeKind::Index;
    throw ParseError(t.line, t.col, "expected a scalar type");
  }

  // --- operations

  void parse_ops_into(Block& block) {
    while (!at_punct("}")) {
      parse_op(block);
    }
  }

  void parse_op(Block& block) {
    std::vector<Token> result_toks;
    if (lex_.cur().kind == Tok::Value) {
      result_toks.push_back(expect(Tok::Value));
      while (accept_punct(",")) result_toks.push_back(expect(Tok::Value));
      expect_punct("=");
    }
    Token name = expect(Tok::Ident);
    auto opc = opcode_from_name(name.text);
    if (!opc)
      throw ParseError(name.line, name.col, "unknown opcode '" + name.text + "'");

    Operation op;
    op.op = *opc;
    switch (*opc) {
      case Opcode::Const: {
        int64_t v = expect(Tok::Int).ival;
        op.attrs["value"] = v;
        expect_punct(":");
        define_results(op, result_toks, {parse_type()});
        break;
      }
      case Opcode::AddI:
      case Opcode::SubI:
      case Opcode::MulI:
      case Opcode::ShlI:
      case Opcode::ShrI:
      case Opcode::AndI:
      case Opcode::OrI:
      case Opcode::PtrAdd: {
        op.operands.push_back(parse_use());
        expect_punct(",");
        op.operands.push_back(parse_use());
        expect_punct(":");
        define_results(op, result_toks, {parse_type()});
        break;
      }
      case Opcode::CmpI: {
        op.attrs["pred"] = expect(Tok::Ident).text;
        expect_punct(",");
        op.operands.push_back(parse_use());
        expect_punct(",");
        op.operands.push_back(parse_use());
        expect_punct(":");
        define_results(op, result_toks, {parse_type()});
        break;
      }
      case Opcode::Select: {
        for (int i = 0; i < 3; ++i) {
          if (i) expect_punct(",");
          op.operands.push_back(parse_use());
        }
        expect_punct(":");
        define_results(op, result_toks, {parse_type()});
        break;
      }
      case Opcode::Load: {
        op.operands.push_back(parse_use());
        expect_punct("[");
        op.operands.push_back(parse_use());
        expect_punct("]");
        expect_punct(":");
        define_results(op, result_toks, {parse_type()});
        break;
      }
      case Opcode::Store: {
        op.operands.push_back(parse_use());
        expect_punct(",");
        op.operands.push_back(parse_use());
        expect_punct("[");
        op.operands.push_back(parse_use());
        expect_punct("]");
        expect_punct(":");
        parse_type();  // decorative value type
        define_results(op, result_toks, {});
        break;
      }
      case Opcode::For:
        parse_for(op, result_toks);
        break;
      case Opcode::Yield: {
        std::vector<Type> tys;
        if (lex_.cur().kind == Tok::Value) {
          op.operands.push_back(parse_use());
          while (accept_punct(",")) op.operands.push_back(parse_use());
          expect_punct(":");
          tys.push_back(parse_type());
          while (accept_punct(",")) tys.push_back(parse_type());
        }
        define_results(op, result_toks, {});
        break;
      }
      case Opcode::Return: {
        if (lex_.cur().kind == Tok::Value) {
          op.operands.push_back(parse_use());
          expect_punct(":");
          parse_type();
        }
        define_results(op, result_toks, {});
        break;
      }
      case Opcode::ReadRf: {
        Token r = expect(Tok::Ident);
        if (!registers_.empty() && !registers_.count(r.text))
          throw ParseError(r.line, r.col, "undeclared register '" + r.text + "'");
        op.attrs["reg"] = r.text;
        expect_punct(":");
        define_results(op, result_toks, {parse_type()});
        break;
      }
      case Opcode::WriteRf: {
        Token r = expect(Tok::Ident);
        if (!registers_.empty() && !registers_.count(r.text))
          throw ParseError(r.line, r.col, "undeclared register '" + r.text + "'");
        op.attrs["reg"] = r.text;
        expect_punct(",");
        op.operands.push_back(parse_use());
        expect_punct(":");
        parse_type();
        define_results(op, result_toks, {});
        break;
      }
      case Opcode::BlockLoad:
      case Opcode::BlockStore: {
        op.operands.push_back(parse_use());
        expect_punct(",");
        op.operands.push_back(parse_use());
        expect_punct(",");
        op.attrs["len"] = expect(Tok::Int).ival;
        define_results(op, result_toks, {});
        break;
      }
      case Opcode::MemLoad: {
        op.operands.push_back(parse_use());
        expect_punct(":");
        define_results(op, result_toks, {parse_type()});
        break;
      }
      case Opcode::MemStore: {
        op.operands.push_back(parse_use());
        expect_punct(",");
        op.operands.push_back(parse_use());
        expect_punct(":");
        parse_type();
        define_results(op, result_toks, {});
        break;
      }
      case Opcode::IsaxCall: {
        op.attrs["callee"] = expect(Tok::FuncRef).text;
        expect_punct("(");
        if (!at_punct(")")) {
          op.operands.push_back(parse_use());
          while (accept_punct(",")) op.operands.push_back(parse_use());
        }
        expect_punct(")");
        if (at_ident("effects")) {
          lex_.advance();
          op.attrs["effects"] = int64_t{1};
        } else {
          op.attrs["effects"] = int64_t{0};
        }
        if (!result_toks.empty()) {
          expect_punct(":");
          define_results(op, result_toks, {parse_type()});
        }
        break;
      }
    }
    block.ops.push_back(std::move(op));
  }

  void define_results(Operation& op, const std::vector<Token>& toks,
                      std::vector<Type> types) {
    if (toks.size() != types.size())
      lex_.fail("result count mismatch for '" +
                std::string(opcode_name(op.op)) + "'");
    for (size_t i = 0; i < toks.size(); ++i)
      op.results.push_back(def_value(toks[i], types[i]));
  }

  void parse_for(Operation& op, const std::vector<Token>& result_toks) {
    Token ind = expect(Tok::Value);
    expect_punct("=");
    op.operands.push_back(parse_use());  // lb
    expect_ident("to");
    op.operands.push_back(parse_use());  // ub
    expect_ident("step");
    op.operands.push_back(parse_use());  // step

    std::vector<Token> iter_toks;
    std::vector<Type> iter_types;
    if (at_ident("iter_args")) {
      lex_.advance();
      expect_punct("(");
      do {
        iter_toks.push_back(expect(Tok::Value));
        expect_punct("=");
        op.operands.push_back(parse_use());  // init
      } while (accept_punct(","));
      expect_punct(")");
      expect_punct(":");
      iter_types.push_back(parse_type());
      while (accept_punct(",")) iter_types.push_back(parse_type());
      if (iter_types.size() != iter_toks.size())
        lex_.fail("iter_args type count mismatch");
    }
    if (at_ident("attrs")) {
      lex_.advance();
      expect_punct("{");
      do {
        Token key = expect(Tok::Ident);
        expect_punct("=");
        op.attrs[key.text] = parse_attr_value();
      } while (accept_punct(","));
      expect_punct("}");
    }

    // Results are numbered before the body, matching their position in text.
    if (result_toks.size() != iter_toks.size())
      lex_.fail("for result count must match iter_args");
    for (size_t i = 0; i < result_toks.size(); ++i)
      op.results.push_back(def_value(result_toks[i], iter_types[i]));

    Block body;
    body.args.push_back(def_value(ind, Type::index()));
    for (size_t i = 0; i < iter_toks.size(); ++i)
      body.args.push_back(def_value(iter_toks[i], iter_types[i]));
    expect_punct("{");
    parse_ops_into(body);
    expect_punct("}");
    op.regions.push_back(Region{{std::move(body)}});
  }

  Attr parse_attr_value() {
    if (lex_.cur().kind == Tok::Int) {
      int64_t v = lex_.cur().ival;
      lex_.advance();
      return v;
    }
    if (lex_.cur().kind == Tok::Ident) {
      std::string s = lex_.cur().text;
      lex_.advance();
      return s;
    }
    if (at_punct("[")) {
      lex_.advance();
      std::vector<int64_t> vs;
      if (!at_punct("]")) {
        vs.push_back(expect(Tok::Int).ival);
        while (accept_punct(",")) vs.push_back(expect(Tok::Int).ival);
      }
      expect_punct("]");
      return vs;
    }
    lex_.fail("expected an attribute value");
  }

  Lexer lex_;
  Function* f_ = nullptr;
  std::unordered_map<std::string, ValueId> names_;
  std::unordered_set<std::string> registers_;
};

// ---------------------------------------------------------------- printer

class Printer {
 public:
  explicit Printer(const Function& f) : f_(f) {
    names_.resize(f.values.size());
  }

  std::string run() {
    out_ << "func @" << f_.name << "(";
    for (size_t i = 0; i < f_.params.size(); ++i) {
      if (i) out_ << ", ";
      out_ << name(f_.params[i]) << ": " << to_string(f_.type_of(f_.params[i]));
    }
    out_ << ") {\n";
    print_block(f_.body, 1);
    out_ << "}\n";
    return out_.str();
  }

 private:
  std::string name(ValueId v) {
    if (names_[v].empty()) names_[v] = "%" + std::to_string(next_++);
    return names_[v];
  }

  std::string type_of(ValueId v) { return to_string(f_.type_of(v)); }

  void indent(int depth) {
    for (int i = 0; i < depth; ++i) out_ << "  ";
  }

  void print_block(const Block& block, int depth) {
    for (const auto& op : block.ops) print_op(op, depth);
  }

  void print_op(const Operation& op, int depth) {
    indent(depth);
    for (size_t i = 0; i < op.results.size(); ++i)
      out_ << (i ? ", " : "") << name(op.results[i]);
    if (!op.results.empty()) out_ << " = ";
    switch (op.op) {
      case Opcode::Const:
        out_ << "const " << *op.int_attr("value") << " : "
             << type_of(op.results[0]);
        break;
      case Opcode::AddI:
      case Opcode::SubI:
      case Opcode::MulI:
      case Opcode::ShlI:
      case Opcode::ShrI:
      case Opcode::AndI:
      case Opcode::OrI:
      case Opcode::PtrAdd:
        out_ << opcode_name(op.op) << " " << name(op.operands[0]) << ", "
             << name(op.operands[1]) << " : " << type_of(op.results[0]);
        break;
      case Opcode::CmpI:
        out_ << "cmpi " << *op.str_attr("pred") << ", " << name(op.operands[0])
             << ", " << name(op.operands[1]) << " : " << type_of(op.results[0]);
        break;
      case Opcode::Select:
        out_ << "select " << name(op.operands[0]) << ", "
             << name(op.operands[1]) << ", " << name(op.operands[2]) << " : "
             << type_of(op.results[0]);
        break;
      case Opcode::Load:
        out_ << "load " << name(op.operands[0]) << "[" << name(op.operands[1])
             << "] : " << type_of(op.results[0]);
        break;
      case Opcode::Store:
        out_ << "store " << name(op.operands[0]) << ", " << name(op.operands[1])
             << "[" << name(op.operands[2]) << "] : " << type_of(op.operands[0]);
        break;
      case Opcode::For:
        print_for(op, depth);
        return;
      case Opcode::Yield:
        out_ << "yield";
        print_value_list_with_types(op.operands);
        break;
      case Opcode::Return:
        out_ << "return";
        print_value_list_with_types(op.operands);
        break;
      case Opcode::ReadRf:
        out_ << "readrf " << *op.str_attr("reg") << " : "
             << type_of(op.results[0]);
        break;
      case Opcode::WriteRf:
        out_ << "writerf " << *op.str_attr("reg") << ", "
             << name(op.operands[0]) << " : " << type_of(op.operands[0]);
        break;
      case Opcode::BlockLoad:
      case Opcode::BlockStore:
        out_ << opcode_name(op.op) << " " << name(op.operands[0]) << ", "
             << name(op.operands[1]) << ", " << *op.int_attr("len");
        break;
      case Opcode::MemLoad:
        out_ << "memload " << name(op.operands[0]) << " : "
             << type_of(op.results[0]);
        break;
      case Opcode::MemStore:
        out_ << "memstore " << name(op.operands[0]) << ", "
             << name(op.operands[1]) << " : " << type_of(op.operands[0]);
        break;
      case Opcode::IsaxCall: {
        out_ << "isax.call @" << *op.str_attr("callee") << "(";
        for (size_t i = 0; i < op.operands.size(); ++i)
          out_ << (i ? ", " : "") << name(op.operands[i]);
        out_ << ")";
        if (op.int_attr("effects").value_or(0)) out_ << " effects";
        if (!op.results.empty()) out_ << " : " << type_of(op.results[0]);
        break;
      }
    }
    out_ << "\n";
  }

  void print_value_list_with_types(const std::vector<ValueId>& vs) {
    if (vs.empty()) return;
    out_ << " ";
    for (size_t i = 0; i < vs.size(); ++i) out_ << (i ? ", " : "") << name(vs[i]);
    out_ << " : ";
    for (size_t i = 0; i < vs.size(); ++i)
      out_ << (i ? ", " : "") << type_of(vs[i]);
  }

  void print_for(const Operation& op, int depth) {
    ForView fv{op};
    // Result names come first so numbering matches parse order.
    out_ << "for ";
    std::string ind = name(fv.induction());
    out_ << ind << " = " << name(fv.lb()) << " to " << name(fv.ub())
         << " step " << name(fv.step());
    if (fv.num_iters() > 0) {
      out_ << " iter_args(";
      for (size_t i = 0; i < fv.num_iters(); ++i) {
        if (i) out_ << ", ";
        out_ << name(fv.iter_arg(i)) << " = " << name(fv.init(i));
      }
      out_ << ") : ";
      for (size_t i = 0; i < fv.num_iters(); ++i)
        out_ << (i ? ", " : "") << type_of(fv.iter_arg(i));
    }
    if (!op.attrs.empty()) {
      out_ << " attrs {";
      bool first = true;
      for (const auto& [key, value] : op.attrs) {
        if (!first) out_ << ", ";
        first = false;
        out_ << key << " = ";
        if (const auto* i = std::get_if<int64_t>(&value))
          out_ << *i;
        else if (const auto* s = std::get_if<std::string>(&value))
          out_ << *s;
        else if (const auto* v = std::get_if<std::vector<int64_t>>(&value)) {
          out_ << "[";
          for (size_t i = 0; i < v->size(); ++i)
            out_ << (i ? ", " : "") << (*v)[i];
          out_ << "]";
        }
      }
      out_ << "}";
    }
    out_ << " {\n";
    print_block(fv.body(), depth + 1);
    indent(depth);
    out_ << "}\n";
  }

  const Function& f_;
  std::ostringstream out_;
  std::vector<std::string> names_;
  unsigned next_ = 0;
};

}  // namespace

Function parse(const std::string& text) { return Parser(text).parse_function(); }

std::string print(const Function& f) { return Printer(f).run(); }

}  // namespace aquas::ir

namespace aquas::isax {

IsaxDescription parse_isax(const std::string& text) {
  return ir::Parser{text}.parse_isax_file();
}

}  // namespace aquas::isax
