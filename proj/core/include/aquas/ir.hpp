#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// Region-based SSA mini-IR: operations, blocks, regions, structured loops,
// flat byte-addressed memory ops, and the hardware-interface ops that appear
// in accelerator instruction bodies. Functions are immutable after
// verification and safe to share across threads for reading.

namespace aquas::ir {

// --------------------------------------------------------------------------
// Types
// --------------------------------------------------------------------------

enum class TypeKind : uint8_t { Void, I1, I32, I64, Index, Ptr, Array };

struct PartitionDirective {
  enum class Kind : uint8_t { Cyclic, Block, Complete };
  Kind kind = Kind::Cyclic;
  int64_t factor = 1;
  bool operator==(const PartitionDirective&) const = default;
};

// Value type. Pointer and array element types are scalar kinds only, which
// keeps Type a flat value class (no nested pointers-to-pointers).
class Type {
 public:
  Type() = default;

  static Type void_() { return Type(TypeKind::Void); }
  static Type i1() { return Type(TypeKind::I1); }
  static Type i32() { return Type(TypeKind::I32); }
  static Type i64() { return Type(TypeKind::I64); }
  static Type index() { return Type(TypeKind::Index); }
  static Type ptr(TypeKind elem) {
    Type t(TypeKind::Ptr);
    t.elem_ = elem;
    return t;
  }
  static Type array(int64_t len, TypeKind elem,
                    std::optional<PartitionDirective> part = std::nullopt) {
    Type t(TypeKind::Array);
    t.elem_ = elem;
    t.len_ = len;
    t.part_ = part;
    return t;
  }

  TypeKind kind() const { return kind_; }
  TypeKind elem_kind() const { return elem_; }
  Type elem_type() const { return Type(elem_); }
  int64_t array_len() const { return len_; }
  const std::optional<PartitionDirective>& partition() const { return part_; }

  bool is_int() const {
    return kind_ == TypeKind::I1 || kind_ == TypeKind::I32 ||
           kind_ == TypeKind::I64 || kind_ == TypeKind::Index;
  }
  bool is_ptr() const { return kind_ == TypeKind::Ptr; }
  bool is_array() const { return kind_ == TypeKind::Array; }

  // Width of an integer kind; index is 64-bit.
  int bit_width() const;
  // Byte size of one pointed-to / array element.
  int64_t elem_bytes() const;

  bool operator==(const Type&) const = default;

 private:
  explicit Type(TypeKind k) : kind_(k) {}

  TypeKind kind_ = TypeKind::Void;
  TypeKind elem_ = TypeKind::Void;
  int64_t len_ = 0;
  std::optional<PartitionDirective> part_;
};

int scalar_bit_width(TypeKind k);
int64_t scalar_byte_size(TypeKind k);
std::string to_string(const Type& t);

// --------------------------------------------------------------------------
// Operations
// --------------------------------------------------------------------------

using ValueId = uint32_t;
inline constexpr ValueId kInvalidValue = 0xffffffffu;

enum class Opcode : uint8_t {
  Const,
  AddI,
  SubI,
  MulI,
  ShlI,
  ShrI,
  AndI,
  OrI,
  CmpI,
  Select,
  PtrAdd,
  Load,
  Store,
  For,
  Yield,
  Return,
  ReadRf,
  WriteRf,
  BlockLoad,
  BlockStore,
  MemLoad,
  MemStore,
  IsaxCall,
};

using Attr = std::variant<int64_t, std::string, std::vector<int64_t>>;
using AttrMap = std::map<std::string, Attr>;

struct Region;

struct Operation {
  Opcode op = Opcode::Const;
  std::vector<ValueId> operands;
  std::vector<ValueId> results;
  AttrMap attrs;
  std::vector<Region> regions;

  std::optional<int64_t> int_attr(const std::string& key) const;
  std::optional<std::string> str_attr(const std::string& key) const;
  bool has_attr(const std::string& key) const { return attrs.count(key) != 0; }
};

struct Block {
  std::vector<ValueId> args;
  std::vector<Operation> ops;
};

struct Region {
  std::vector<Block> blocks;
};

// For-loop accessors; `op` must be Opcode::For. Operand layout is
// [lb, ub, step, init...]; the body block's args are [induction, iter...].
struct ForView {
  const Operation& op;
  ValueId lb() const { return op.operands[0]; }
  ValueId ub() const { return op.operands[1]; }
  ValueId step() const { return op.operands[2]; }
  size_t num_iters() const { return op.operands.size() - 3; }
  ValueId init(size_t i) const { return op.operands[3 + i]; }
  const Block& body() const { return op.regions[0].blocks[0]; }
  ValueId induction() const { return body().args[0]; }
  ValueId iter_arg(size_t i) const { return body().args[1 + i]; }
};

enum class FuncKind : uint8_t { Application, IsaxBody };

struct ValueInfo {
  std::string name;
  Type type;
};

struct Function {
  std::string name;
  FuncKind kind = FuncKind::Application;
  std::vector<ValueId> params;
  Block body;
  std::vector<ValueInfo> values;

  ValueId new_value(std::string name, Type type) {
    values.push_back(ValueInfo{std::move(name), type});
    return static_cast<ValueId>(values.size() - 1);
  }
  const Type& type_of(ValueId v) const { return values[v].type; }
  const std::string& name_of(ValueId v) const { return values[v].name; }
};

// --------------------------------------------------------------------------
// Opcode metadata
// --------------------------------------------------------------------------

std::string_view opcode_name(Opcode op);
std::optional<Opcode> opcode_from_name(std::string_view name);

bool is_terminator(Opcode op);   // yield, return
bool is_hardware_op(Opcode op);  // readrf/writerf/blockload/blockstore/memload/memstore
bool is_pure_scalar_op(Opcode op);  // const..ptradd

// True if this op (including nested regions) writes memory, the register
// file, or calls an effectful isax.
bool has_side_effects(const Operation& op);
// Shallow: the op itself is a side-effecting root (store, memstore,
// blockstore, writerf, effectful isax.call).
bool is_effecting_root(const Operation& op);

// max(0, ceil((ub - lb) / step)); nullopt when step == 0.
std::optional<int64_t> trip_count(int64_t lb, int64_t ub, int64_t step);

// Walks the function for the op defining `v`; returns its value when that op
// is a `const`.
std::optional<int64_t> defining_const(const Function& f, ValueId v);

// --------------------------------------------------------------------------
// Verification and structural equality
// --------------------------------------------------------------------------

struct Diagnostic {
  std::string message;
};

// Returns the empty vector when `f` satisfies all IR invariants: SSA single
// assignment, dominance, terminator placement, opcode arity and attribute
// schema, type agreement, and opcode legality for the function kind.
std::vector<Diagnostic> verify(const Function& f);

// Equality modulo value names: compares opcodes, attributes, types and
// operand definition indices in program order.
bool structurally_equal(const Function& a, const Function& b);

}  // namespace aquas::ir
