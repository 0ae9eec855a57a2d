#include "aquas/ir.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <unordered_map>
#include <unordered_set>

namespace aquas::ir {

int scalar_bit_width(TypeKind k) {
  switch (k) {
    case TypeKind::I1:
      return 1;
    case TypeKind::I32:
      return 32;
    case TypeKind::I64:
    case TypeKind::Index:
      return 64;
    default:
      return 0;
  }
}

int64_t scalar_byte_size(TypeKind k) {
  switch (k) {
    case TypeKind::I1:
      return 1;
    case TypeKind::I32:
      return 4;
    case TypeKind::I64:
    case TypeKind::Index:
      return 8;
    default:
      return 0;
  }
}

int Type::bit_width() const { return scalar_bit_width(kind_); }

int64_t Type::elem_bytes() const { return scalar_byte_size(elem_); }

static std::string scalar_name(TypeKind k) {
  switch (k) {
    case TypeKind::Void:
      return "void";
    case TypeKind::I1:
      return "i1";
    case TypeKind::I32:
      return "i32";
    case TypeKind::I64:
      return "i64";
    case TypeKind::Index:
      return "index";
    default:
      return "?";
  }
}

std::string to_string(const Type& t) {
  switch (t.kind()) {
    case TypeKind::Ptr:
      return "ptr<" + scalar_name(t.elem_kind()) + ">";
    case TypeKind::Array:
      return "array<" + std::to_string(t.array_len()) + " x " +
             scalar_name(t.elem_kind()) + ">";
    default:
      return scalar_name(t.kind());
  }
}

std::optional<int64_t> Operation::int_attr(const std::string& key) const {
  auto it = attrs.find(key);
  if (it == attrs.end()) return std::nullopt;
  if (const auto* v = std::get_if<int64_t>(&it->second)) return *v;
  return std::nullopt;
}

std::optional<std::string> Operation::str_attr(const std::string& key) const {
  auto it = attrs.find(key);
  if (it == attrs.end()) return std::nullopt;
  if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
  return std::nullopt;
}

namespace {

struct OpcodeInfo {
  Opcode op;
  std::string_view name;
};

constexpr std::array<OpcodeInfo, 23> kOpcodes = {{
    {Opcode::Const, "const"},
    {Opcode::AddI, "addi"},
    {Opcode::SubI, "subi"},
    {Opcode::MulI, "muli"},
    {Opcode::ShlI, "shli"},
    {Opcode::ShrI, "shri"},
    {Opcode::AndI, "andi"},
    {Opcode::OrI, "ori"},
    {Opcode::CmpI, "cmpi"},
    {Opcode::Select, "select"},
    {Opcode::PtrAdd, "ptradd"},
    {Opcode::Load, "load"},
    {Opcode::Store, "store"},
    {Opcode::For, "for"},
    {Opcode::Yield, "yield"},
    {Opcode::Return, "return"},
    {Opcode::ReadRf, "readrf"},
    {Opcode::WriteRf, "writerf"},
    {Opcode::BlockLoad, "blockload"},
    {Opcode::BlockStore, "blockstore"},
    {Opcode::MemLoad, "memload"},
    {Opcode::MemStore, "memstore"},
    {Opcode::IsaxCall, "isax.call"},
}};

}  // namespace

std::string_view opcode_name(Opcode op) {
  for (const auto& info : kOpcodes)
    if (info.op == op) return info.name;
  return "?";
}

std::optional<Opcode> opcode_from_name(std::string_view name) {
  // Accept the surface spellings used by isax descriptions.
  if (name == "_blockld") return Opcode::BlockLoad;
  if (name == "_blockst") return Opcode::BlockStore;
  for (const auto& info : kOpcodes)
    if (info.name == name) return info.op;
  return std::nullopt;
}

bool is_terminator(Opcode op) {
  return op == Opcode::Yield || op == Opcode::Return;
}

bool is_hardware_op(Opcode op) {
  switch (op) {
    case Opcode::ReadRf:
    case Opcode::WriteRf:
    case Opcode::BlockLoad:
    case Opcode::BlockStore:
    case Opcode::MemLoad:
    case Opcode::MemStore:
      return true;
    default:
      return false;
  }
}

bool is_pure_scalar_op(Opcode op) {
  switch (op) {
    case Opcode::Const:
    case Opcode::AddI:
    case Opcode::SubI:
    case Opcode::MulI:
    case Opcode::ShlI:
    case Opcode::ShrI:
    case Opcode::AndI:
    case Opcode::OrI:
    case Opcode::CmpI:
    case Opcode::Select:
    case Opcode::PtrAdd:
      return true;
    default:
      return false;
  }
}

bool is_effecting_root(const Operation& op) {
  switch (op.op) {
    case Opcode::Store:
    case Opcode::MemStore:
    case Opcode::BlockStore:
    case Opcode::WriteRf:
      return true;
    case Opcode::IsaxCall:
      return op.int_attr("effects").value_or(0) != 0;
    default:
      return false;
  }
}

bool has_side_effects(const Operation& op) {
  if (is_effecting_root(op)) return true;
  for (const auto& region : op.regions)
    for (const auto& block : region.blocks)
      for (const auto& inner : block.ops)
        if (has_side_effects(inner)) return true;
  return false;
}

std::optional<int64_t> trip_count(int64_t lb, int64_t ub, int64_t step) {
  if (step == 0) return std::nullopt;
  int64_t n = ub - lb;
  // ceil(n / step) with C++ truncating division.
  int64_t q = n / step;
  if (n % step != 0 && ((n < 0) == (step < 0))) q += 1;
  return std::max<int64_t>(0, q);
}

namespace {

const Operation* find_def(const Block& block, ValueId v) {
  for (const auto& op : block.ops) {
    for (ValueId r : op.results)
      if (r == v) return &op;
    for (const auto& region : op.regions)
      for (const auto& b : region.blocks)
        if (const Operation* d = find_def(b, v)) return d;
  }
  return nullptr;
}

}  // namespace

std::optional<int64_t> defining_const(const Function& f, ValueId v) {
  const Operation* def = find_def(f.body, v);
  if (def && def->op == Opcode::Const) return def->int_attr("value");
  return std::nullopt;
}

// --------------------------------------------------------------------------
// Verifier
// --------------------------------------------------------------------------

namespace {

class Verifier {
 public:
  explicit Verifier(const Function& f) : f_(f) {}

  std::vector<Diagnostic> run() {
    defined_.assign(f_.values.size(), false);
    for (ValueId p : f_.params) {
      if (p >= f_.values.size()) {
        error("parameter value id out of range");
        return diags_;
      }
      define(p, "parameter");
      const Type& t = f_.type_of(p);
      if (t.is_array() && f_.kind != FuncKind::IsaxBody)
        error("static array parameter outside an isax body");
      check_type_wellformed(t, "parameter " + f_.name_of(p));
      visible_.insert(p);
    }
    if (!f_.body.args.empty()) error("function body block takes no arguments");
    check_block(f_.body, Opcode::Return, /*expected_yields=*/{});
    return diags_;
  }

 private:
  void error(std::string msg) { diags_.push_back(Diagnostic{std::move(msg)}); }

  void op_error(const Operation& op, const std::string& msg) {
    std::string where(opcode_name(op.op));
    if (!op.results.empty()) where += " %" + f_.name_of(op.results[0]);
    error("'" + where + "': " + msg);
  }

  void define(ValueId v, const char* what) {
    if (v >= defined_.size()) {
      error(std::string(what) + " value id out of range");
      return;
    }
    if (defined_[v]) error("value %" + f_.name_of(v) + " defined more than once");
    defined_[v] = true;
  }

  void check_type_wellformed(const Type& t, const std::string& where) {
    if (t.is_array()) {
      if (t.array_len() <= 0) error(where + ": static array length must be > 0");
      if (t.partition() &&
          t.partition()->kind != PartitionDirective::Kind::Complete) {
        if (t.partition()->factor < 1)
          error(where + ": partition factor must be >= 1");
        else if (t.partition()->kind == PartitionDirective::Kind::Cyclic &&
                 t.array_len() % t.partition()->factor != 0)
          error(where + ": cyclic partition factor does not divide length");
      }
    }
  }

  bool use(const Operation& op, ValueId v) {
    if (v >= f_.values.size()) {
      op_error(op, "operand id out of range");
      return false;
    }
    if (!visible_.count(v)) {
      op_error(op, "operand %" + f_.name_of(v) + " used before definition");
      return false;
    }
    return true;
  }

  const Type& ty(ValueId v) { return f_.type_of(v); }

  void expect(const Operation& op, bool cond, const std::string& msg) {
    if (!cond) op_error(op, msg);
  }

  void check_block(const Block& block, Opcode terminator,
                   std::vector<Type> expected_yields) {
    size_t n = block.ops.size();
    if (n == 0) {
      error("block has no terminator");
      return;
    }
    for (size_t i = 0; i < n; ++i) {
      const Operation& op = block.ops[i];
      bool last = (i + 1 == n);
      if (is_terminator(op.op) != last) {
        op_error(op, last ? "block must end with a terminator"
                          : "terminator before end of block");
        continue;
      }
      check_op(op, terminator, expected_yields);
    }
  }

  void check_op(const Operation& op, Opcode terminator,
                const std::vector<Type>& expected_yields) {
    bool ok = true;
    for (ValueId v : op.operands) ok &= use(op, v);
    if (!ok) return;

    if (is_hardware_op(op.op) && f_.kind != FuncKind::IsaxBody)
      op_error(op, "hardware op outside an isax body");
    if (op.op == Opcode::IsaxCall && f_.kind != FuncKind::Application)
      op_error(op, "isax.call is only legal in application functions");

    switch (op.op) {
      case Opcode::Const:
        expect(op, op.operands.empty() && op.results.size() == 1,
               "const takes no operands and one result");
        expect(op, op.int_attr("value").has_value(), "const needs a value attr");
        if (op.results.size() == 1)
          expect(op, ty(op.results[0]).is_int(), "const result must be integer");
        break;
      case Opcode::AddI:
      case Opcode::SubI:
      case Opcode::MulI:
      case Opcode::ShlI:
      case Opcode::ShrI:
      case Opcode::AndI:
      case Opcode::OrI: {
        expect(op, op.operands.size() == 2 && op.results.size() == 1,
               "binary op takes two operands and one result");
        if (op.operands.size() == 2 && op.results.size() == 1) {
          const Type& t = ty(op.results[0]);
          expect(op, t.is_int(), "binary op on non-integer type");
          expect(op, ty(op.operands[0]) == t && ty(op.operands[1]) == t,
                 "operand types must match result type");
        }
        break;
      }
      case Opcode::CmpI: {
        expect(op, op.operands.size() == 2 && op.results.size() == 1,
               "cmpi takes two operands and one result");
        auto pred = op.str_attr("pred");
        expect(op,
               pred && (*pred == "eq" || *pred == "ne" || *pred == "slt" ||
                        *pred == "sle" || *pred == "sgt" || *pred == "sge"),
               "cmpi needs a pred attr in {eq,ne,slt,sle,sgt,sge}");
        if (op.operands.size() == 2) {
          expect(op, ty(op.operands[0]) == ty(op.operands[1]),
                 "cmpi operand types must match");
          expect(op, ty(op.operands[0]).is_int(), "cmpi on non-integer type");
        }
        if (op.results.size() == 1)
          expect(op, ty(op.results[0]).kind() == TypeKind::I1,
                 "cmpi result must be i1");
        break;
      }
      case Opcode::Select: {
        expect(op, op.operands.size() == 3 && op.results.size() == 1,
               "select takes three operands and one result");
        if (op.operands.size() == 3 && op.results.size() == 1) {
          expect(op, ty(op.operands[0]).kind() == TypeKind::I1,
                 "select condition must be i1");
          expect(op,
                 ty(op.operands[1]) == ty(op.results[0]) &&
                     ty(op.operands[2]) == ty(op.results[0]),
                 "select arms must match result type");
        }
        break;
      }
      case Opcode::PtrAdd: {
        expect(op, op.operands.size() == 2 && op.results.size() == 1,
               "ptradd takes (ptr, index) and one result");
        if (op.operands.size() == 2 && op.results.size() == 1) {
          expect(op, ty(op.operands[0]).is_ptr(), "ptradd base must be a pointer");
          expect(op, ty(op.operands[1]).kind() == TypeKind::Index,
                 "ptradd offset must be index");
          expect(op, ty(op.results[0]) == ty(op.operands[0]),
                 "ptradd result type must match base");
        }
        break;
      }
      case Opcode::Load: {
        expect(op, op.operands.size() == 2 && op.results.size() == 1,
               "load takes (ptr|array, index) and one result");
        if (op.operands.size() == 2 && op.results.size() == 1) {
          const Type& base = ty(op.operands[0]);
          expect(op, base.is_ptr() || base.is_array(),
                 "load base must be pointer or static array");
          expect(op, ty(op.operands[1]).kind() == TypeKind::Index,
                 "load index must be index");
          if (base.is_ptr() || base.is_array())
            expect(op, ty(op.results[0]) == base.elem_type(),
                   "load result must be the element type");
        }
        break;
      }
      case Opcode::Store: {
        expect(op, op.operands.size() == 3 && op.results.empty(),
               "store takes (value, ptr|array, index) and no results");
        if (op.operands.size() == 3) {
          const Type& base = ty(op.operands[1]);
          expect(op, base.is_ptr() || base.is_array(),
                 "store base must be pointer or static array");
          expect(op, ty(op.operands[2]).kind() == TypeKind::Index,
                 "store index must be index");
          if (base.is_ptr() || base.is_array())
            expect(op, ty(op.operands[0]) == base.elem_type(),
                   "stored value must be the element type");
        }
        break;
      }
      case Opcode::For:
        check_for(op, expected_yields);
        return;  // region handled inside
      case Opcode::Yield: {
        expect(op, terminator == Opcode::Yield,
               "yield outside a loop body");
        expect(op, op.results.empty(), "yield has no results");
        if (terminator == Opcode::Yield) {
          expect(op, op.operands.size() == expected_yields.size(),
                 "yield must carry exactly one value per iter_arg");
          for (size_t i = 0;
               i < std::min(op.operands.size(), expected_yields.size()); ++i)
            expect(op, ty(op.operands[i]) == expected_yields[i],
                   "yield operand type mismatch");
        }
        break;
      }
      case Opcode::Return:
        expect(op, terminator == Opcode::Return,
               "return inside a loop body");
        expect(op, op.results.empty(), "return has no results");
        expect(op, op.operands.size() <= 1, "at most one return value");
        break;
      case Opcode::ReadRf: {
        expect(op, op.operands.empty() && op.results.size() == 1,
               "readrf takes a register name and one result");
        expect(op, op.str_attr("reg").has_value(), "readrf needs a reg attr");
        if (op.results.size() == 1) {
          const Type& t = ty(op.results[0]);
          expect(op, t.is_int() || t.is_ptr(),
                 "readrf result must be integer or pointer");
        }
        break;
      }
      case Opcode::WriteRf:
        expect(op, op.operands.size() == 1 && op.results.empty(),
               "writerf takes one value");
        expect(op, op.str_attr("reg").has_value(), "writerf needs a reg attr");
        break;
      case Opcode::BlockLoad: {
        expect(op, op.operands.size() == 2 && op.results.empty(),
               "blockload takes (array, addr)");
        expect(op, op.int_attr("len").has_value(), "blockload needs a len attr");
        if (op.operands.size() == 2) {
          expect(op, ty(op.operands[0]).is_array(),
                 "blockload destination must be a static array");
          expect(op, ty(op.operands[1]).is_ptr(),
                 "blockload source must be a pointer");
          if (ty(op.operands[0]).is_array() && op.int_attr("len"))
            expect(op, *op.int_attr("len") <= ty(op.operands[0]).array_len(),
                   "blockload length exceeds array length");
        }
        break;
      }
      case Opcode::BlockStore: {
        expect(op, op.operands.size() == 2 && op.results.empty(),
               "blockstore takes (addr, array)");
        expect(op, op.int_attr("len").has_value(), "blockstore needs a len attr");
        if (op.operands.size() == 2) {
          expect(op, ty(op.operands[0]).is_ptr(),
                 "blockstore destination must be a pointer");
          expect(op, ty(op.operands[1]).is_array(),
                 "blockstore source must be a static array");
          if (ty(op.operands[1]).is_array() && op.int_attr("len"))
            expect(op, *op.int_attr("len") <= ty(op.operands[1]).array_len(),
                   "blockstore length exceeds array length");
        }
        break;
      }
      case Opcode::MemLoad:
        expect(op, op.operands.size() == 1 && op.results.size() == 1,
               "memload takes one address");
        if (op.operands.size() == 1 && op.results.size() == 1) {
          expect(op, ty(op.operands[0]).is_ptr(), "memload address must be a pointer");
          if (ty(op.operands[0]).is_ptr())
            expect(op, ty(op.results[0]) == ty(op.operands[0]).elem_type(),
                   "memload result must be the element type");
        }
        break;
      case Opcode::MemStore:
        expect(op, op.operands.size() == 2 && op.results.empty(),
               "memstore takes (value, addr)");
        if (op.operands.size() == 2) {
          expect(op, ty(op.operands[1]).is_ptr(), "memstore address must be a pointer");
          if (ty(op.operands[1]).is_ptr())
            expect(op, ty(op.operands[0]) == ty(op.operands[1]).elem_type(),
                   "stored value must be the element type");
        }
        break;
      case Opcode::IsaxCall: {
        expect(op, op.str_attr("callee").has_value(),
               "isax.call needs a callee attr");
        expect(op, op.results.size() <= 1, "isax.call has at most one result");
        break;
      }
    }
    if (op.op != Opcode::For) {
      expect(op, op.regions.empty(), "only for-loops carry regions");
      for (ValueId r : op.results) {
        define(r, "result");
        visible_.insert(r);
      }
    }
  }

  void check_for(const Operation& op, const std::vector<Type>&) {
    if (op.operands.size() < 3 || op.regions.size() != 1 ||
        op.regions[0].blocks.size() != 1) {
      op_error(op, "for needs (lb, ub, step, init...) and one body block");
      return;
    }
    ForView fv{op};
    for (ValueId b : {fv.lb(), fv.ub(), fv.step()})
      expect(op, ty(b).kind() == TypeKind::Index, "loop bounds must be index");
    if (auto s = defining_const(f_, fv.step()))
      expect(op, *s != 0, "loop step must be nonzero");
    expect(op, op.results.size() == fv.num_iters(),
           "for results must match iter_args");

    const Block& body = fv.body();
    if (body.args.size() != 1 + fv.num_iters()) {
      op_error(op, "body block args must be (induction, iter_args...)");
      return;
    }
    expect(op, ty(fv.induction()).kind() == TypeKind::Index,
           "induction variable must be index");
    std::vector<Type> yields;
    for (size_t i = 0; i < fv.num_iters(); ++i) {
      expect(op, ty(fv.iter_arg(i)) == ty(fv.init(i)),
             "iter_arg type must match its init");
      expect(op, ty(op.results[i]) == ty(fv.iter_arg(i)),
             "for result type must match its iter_arg");
      yields.push_back(ty(fv.iter_arg(i)));
    }

    for (ValueId a : body.args) {
      define(a, "block argument");
      visible_.insert(a);
    }
    check_block(body, Opcode::Yield, yields);
    // Body-local values go out of scope; results become visible.
    for (const Block& b : op.regions[0].blocks) hide_block(b);
    for (ValueId r : op.results) {
      define(r, "result");
      visible_.insert(r);
    }
  }

  void hide_block(const Block& block) {
    for (ValueId a : block.args) visible_.erase(a);
    for (const auto& op : block.ops) {
      for (ValueId r : op.results) visible_.erase(r);
      for (const auto& region : op.regions)
        for (const Block& b : region.blocks) hide_block(b);
    }
  }

  const Function& f_;
  std::vector<Diagnostic> diags_;
  std::vector<bool> defined_;
  std::unordered_set<ValueId> visible_;
};

}  // namespace

std::vector<Diagnostic> verify(const Function& f) { return Verifier(f).run(); }

// --------------------------------------------------------------------------
// Structural equality
// --------------------------------------------------------------------------

namespace {

struct Matcher {
  const Function& a;
  const Function& b;
  std::unordered_map<ValueId, ValueId> map;  // a -> b

  bool values(ValueId va, ValueId vb) {
    if (a.type_of(va) != b.type_of(vb)) return false;
    auto [it, inserted] = map.try_emplace(va, vb);
    return inserted ? true : it->second == vb;
  }

  bool blocks(const Block& ba, const Block& bb) {
    if (ba.args.size() != bb.args.size() || ba.ops.size() != bb.ops.size())
      return false;
    for (size_t i = 0; i < ba.args.size(); ++i)
      if (!values(ba.args[i], bb.args[i])) return false;
    for (size_t i = 0; i < ba.ops.size(); ++i)
      if (!ops(ba.ops[i], bb.ops[i])) return false;
    return true;
  }

  bool ops(const Operation& oa, const Operation& ob) {
    if (oa.op != ob.op || oa.attrs != ob.attrs ||
        oa.operands.size() != ob.operands.size() ||
        oa.results.size() != ob.results.size() ||
        oa.regions.size() != ob.regions.size())
      return false;
    for (size_t i = 0; i < oa.operands.size(); ++i)
      if (!values(oa.operands[i], ob.operands[i])) return false;
    for (size_t i = 0; i < oa.results.size(); ++i)
      if (!values(oa.results[i], ob.results[i])) return false;
    for (size_t i = 0; i < oa.regions.size(); ++i) {
      if (oa.regions[i].blocks.size() != ob.regions[i].blocks.size())
        return false;
      for (size_t j = 0; j < oa.regions[i].blocks.size(); ++j)
        if (!blocks(oa.regions[i].blocks[j], ob.regions[i].blocks[j]))
          return false;
    }
    return true;
  }
};

}  // namespace

bool structurally_equal(const Function& a, const Function& b) {
  if (a.name != b.name || a.kind != b.kind ||
      a.params.size() != b.params.size())
    return false;
  Matcher m{a, b, {}};
  for (size_t i = 0; i < a.params.size(); ++i)
    if (!m.values(a.params[i], b.params[i])) return false;
  return m.blocks(a.body, b.body);
}

}  // namespace aquas::ir
