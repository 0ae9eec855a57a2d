#include "aquas/interp.hpp"

#include <cassert>

#include "aquas/text.hpp"

namespace aquas::ir {

bool MachineState::memory_equals(const MachineState& other) const {
  if (memory.size() != other.memory.size()) return false;
  for (const auto& [addr, byte] : memory) {
    auto it = other.memory.find(addr);
    if (it == other.memory.end() || it->second != byte) return false;
  }
  return true;
}

void mem_write(MachineState& state, uint64_t addr, int64_t value, TypeKind elem) {
  int64_t n = scalar_byte_size(elem);
  auto bits = static_cast<uint64_t>(value);
  for (int64_t i = 0; i < n; ++i)
    state.memory[addr + i] = static_cast<uint8_t>(bits >> (8 * i));
}

int64_t mem_read(const MachineState& state, uint64_t addr, TypeKind elem) {
  int64_t n = scalar_byte_size(elem);
  uint64_t bits = 0;
  for (int64_t i = 0; i < n; ++i) {
    auto it = state.memory.find(addr + i);
    if (it == state.memory.end())
      throw EvalError("read of uninitialized memory at address " +
                      std::to_string(addr + i));
    bits |= static_cast<uint64_t>(it->second) << (8 * i);
  }
  // Sign-extend to the internal 64-bit representation.
  int width = scalar_bit_width(elem);
  if (width < 64) {
    uint64_t sign = uint64_t{1} << (width - 1);
    bits = (bits ^ sign) - sign;
  }
  return static_cast<int64_t>(bits);
}

namespace {

int64_t wrap(int64_t v, TypeKind k) {
  switch (k) {
    case TypeKind::I1:
      return v & 1;
    case TypeKind::I32:
      return static_cast<int32_t>(v);
    default:
      return v;
  }
}

struct Scratchpad {
  std::vector<int64_t> data;
  std::vector<bool> init;
  TypeKind elem;
};

struct RtVal {
  int64_t scalar = 0;
  int pad = -1;  // >= 0: scratchpad handle
};

class Interpreter {
 public:
  Interpreter(MachineState& state, const InterpOptions& opts, uint64_t& steps)
      : state_(state), opts_(opts), steps_(steps) {}

  std::vector<int64_t> run(const Function& f, const std::vector<int64_t>& args) {
    f_ = &f;
    env_.assign(f.values.size(), RtVal{});
    size_t next_arg = 0;
    for (ValueId p : f.params) {
      const Type& t = f.type_of(p);
      if (t.is_array()) {
        Scratchpad pad;
        pad.data.assign(t.array_len(), 0);
        pad.init.assign(t.array_len(), false);
        pad.elem = t.elem_kind();
        pads_.push_back(std::move(pad));
        env_[p] = RtVal{0, static_cast<int>(pads_.size() - 1)};
      } else {
        if (next_arg >= args.size())
          throw EvalError("too few arguments for @" + f.name);
        env_[p] = RtVal{wrap(args[next_arg++], t.kind()), -1};
      }
    }
    if (next_arg != args.size())
      throw EvalError("too many arguments for @" + f.name);
    return run_block(f.body);
  }

 private:
  int64_t scalar(ValueId v) {
    if (env_[v].pad >= 0) throw EvalError("scalar use of a static array value");
    return env_[v].scalar;
  }

  Scratchpad& pad_of(ValueId v) {
    if (env_[v].pad < 0) throw EvalError("array use of a scalar value");
    return pads_[env_[v].pad];
  }

  // Executes a block; returns the terminator's operand values.
  std::vector<int64_t> run_block(const Block& block) {
    for (const auto& op : block.ops) {
      if (is_terminator(op.op)) {
        std::vector<int64_t> out;
        out.reserve(op.operands.size());
        for (ValueId v : op.operands) out.push_back(scalar(v));
        return out;
      }
      run_op(op);
    }
    throw EvalError("block fell off the end without a terminator");
  }

  void run_op(const Operation& op) {
    switch (op.op) {
      case Opcode::Const:
        set(op.results[0], *op.int_attr("value"));
        break;
      case Opcode::AddI:
        set(op.results[0], scalar(op.operands[0]) + scalar(op.operands[1]));
        break;
      case Opcode::SubI:
        set(op.results[0], scalar(op.operands[0]) - scalar(op.operands[1]));
        break;
      case Opcode::MulI:
        set(op.results[0], scalar(op.operands[0]) * scalar(op.operands[1]));
        break;
      case Opcode::ShlI: {
        int64_t amt = scalar(op.operands[1]);
        check_shift(op, amt);
        set(op.results[0],
            static_cast<int64_t>(
                static_cast<uint64_t>(scalar(op.operands[0])) << amt));
        break;
      }
      case Opcode::ShrI: {
        // Logical shift right within the type width.
        int64_t amt = scalar(op.operands[1]);
        check_shift(op, amt);
        const Type& t = f_->type_of(op.results[0]);
        uint64_t bits = static_cast<uint64_t>(scalar(op.operands[0]));
        if (t.bit_width() < 64) bits &= (uint64_t{1} << t.bit_width()) - 1;
        set(op.results[0], static_cast<int64_t>(bits >> amt));
        break;
      }
      case Opcode::AndI:
        set(op.results[0], scalar(op.operands[0]) & scalar(op.operands[1]));
        break;
      case Opcode::OrI:
        set(op.results[0], scalar(op.operands[0]) | scalar(op.operands[1]));
        break;
      case Opcode::CmpI: {
        int64_t a = scalar(op.operands[0]);
        int64_t b = scalar(op.operands[1]);
        const std::string& pred = *op.str_attr("pred");
        bool r = pred == "eq"    ? a == b
                 : pred == "ne"  ? a != b
                 : pred == "slt" ? a < b
                 : pred == "sle" ? a <= b
                 : pred == "sgt" ? a > b
                                 : a >= b;
        set(op.results[0], r ? 1 : 0);
        break;
      }
      case Opcode::Select:
        set(op.results[0], scalar(op.operands[0]) != 0
                               ? scalar(op.operands[1])
                               : scalar(op.operands[2]));
        break;
      case Opcode::PtrAdd: {
        int64_t esz = f_->type_of(op.operands[0]).elem_bytes();
        set(op.results[0],
            scalar(op.operands[0]) + scalar(op.operands[1]) * esz);
        break;
      }
      case Opcode::Load: {
        const Type& base = f_->type_of(op.operands[0]);
        int64_t idx = scalar(op.operands[1]);
        if (base.is_array()) {
          Scratchpad& pad = pad_of(op.operands[0]);
          check_index(idx, base.array_len());
          if (!pad.init[idx])
            throw EvalError("read of uninitialized static array element " +
                            std::to_string(idx));
          set(op.results[0], pad.data[idx]);
        } else {
          uint64_t addr = static_cast<uint64_t>(scalar(op.operands[0])) +
                          static_cast<uint64_t>(idx * base.elem_bytes());
          set(op.results[0], mem_read(state_, addr, base.elem_kind()));
        }
        break;
      }
      case Opcode::Store: {
        const Type& base = f_->type_of(op.operands[1]);
        int64_t value = scalar(op.operands[0]);
        int64_t idx = scalar(op.operands[2]);
        if (base.is_array()) {
          Scratchpad& pad = pad_of(op.operands[1]);
          check_index(idx, base.array_len());
          pad.data[idx] = wrap(value, base.elem_kind());
          pad.init[idx] = true;
        } else {
          uint64_t addr = static_cast<uint64_t>(scalar(op.operands[1])) +
                          static_cast<uint64_t>(idx * base.elem_bytes());
          mem_write(state_, addr, value, base.elem_kind());
        }
        break;
      }
      case Opcode::For:
        run_for(op);
        break;
      case Opcode::ReadRf: {
        const std::string& reg = *op.str_attr("reg");
        auto it = state_.regfile.find(reg);
        if (it == state_.regfile.end())
          throw EvalError("read of unset register " + reg);
        set(op.results[0], it->second);
        break;
      }
      case Opcode::WriteRf:
        state_.regfile[*op.str_attr("reg")] = scalar(op.operands[0]);
        break;
      case Opcode::BlockLoad: {
        Scratchpad& pad = pad_of(op.operands[0]);
        uint64_t addr = static_cast<uint64_t>(scalar(op.operands[1]));
        int64_t len = *op.int_attr("len");
        int64_t esz = scalar_byte_size(pad.elem);
        for (int64_t e = 0; e < len; ++e) {
          pad.data[e] = mem_read(state_, addr + e * esz, pad.elem);
          pad.init[e] = true;
        }
        break;
      }
      case Opcode::BlockStore: {
        uint64_t addr = static_cast<uint64_t>(scalar(op.operands[0]));
        Scratchpad& pad = pad_of(op.operands[1]);
        int64_t len = *op.int_attr("len");
        int64_t esz = scalar_byte_size(pad.elem);
        for (int64_t e = 0; e < len; ++e) {
          if (!pad.init[e])
            throw EvalError("blockstore of uninitialized element " +
                            std::to_string(e));
          mem_write(state_, addr + e * esz, pad.data[e], pad.elem);
        }
        break;
      }
      case Opcode::MemLoad: {
        const Type& t = f_->type_of(op.operands[0]);
        set(op.results[0],
            mem_read(state_, static_cast<uint64_t>(scalar(op.operands[0])),
                     t.elem_kind()));
        break;
      }
      case Opcode::MemStore: {
        const Type& t = f_->type_of(op.operands[1]);
        mem_write(state_, static_cast<uint64_t>(scalar(op.operands[1])),
                  scalar(op.operands[0]), t.elem_kind());
        break;
      }
      case Opcode::IsaxCall: {
        const std::string& callee = *op.str_attr("callee");
        if (!opts_.isax_bodies)
          throw EvalError("isax.call @" + callee + " with no inline bodies");
        auto it = opts_.isax_bodies->find(callee);
        if (it == opts_.isax_bodies->end())
          throw EvalError("isax.call to unknown isax @" + callee);
        std::vector<int64_t> args;
        args.reserve(op.operands.size());
        for (ValueId v : op.operands) args.push_back(scalar(v));
        Interpreter inner(state_, opts_, steps_);
        auto results = inner.run(*it->second, args);
        if (!op.results.empty()) {
          if (results.empty())
            throw EvalError("isax @" + callee + " returned no value");
          set(op.results[0], results[0]);
        }
        break;
      }
      case Opcode::Yield:
      case Opcode::Return:
        assert(false && "terminators are handled by run_block");
        break;
    }
  }

  void run_for(const Operation& op) {
    ForView fv{op};
    int64_t lb = scalar(fv.lb());
    int64_t ub = scalar(fv.ub());
    int64_t step = scalar(fv.step());
    auto trips = trip_count(lb, ub, step);
    if (!trips) throw EvalError("loop step is zero");

    std::vector<int64_t> iters(fv.num_iters());
    for (size_t i = 0; i < iters.size(); ++i) iters[i] = scalar(fv.init(i));

    for (int64_t k = 0; k < *trips; ++k) {
      if (++steps_ > opts_.max_loop_steps)
        throw EvalError("loop iteration cap exceeded (" +
                        std::to_string(opts_.max_loop_steps) + " steps)");
      env_[fv.induction()] = RtVal{lb + k * step, -1};
      for (size_t i = 0; i < iters.size(); ++i)
        env_[fv.iter_arg(i)] = RtVal{iters[i], -1};
      iters = run_block(fv.body());
    }
    for (size_t i = 0; i < iters.size(); ++i)
      set(op.results[i], iters[i]);
  }

  void set(ValueId v, int64_t raw) {
    env_[v] = RtVal{wrap(raw, f_->type_of(v).kind()), -1};
  }

  void check_shift(const Operation& op, int64_t amt) {
    int width = f_->type_of(op.results[0]).bit_width();
    if (amt < 0 || amt >= width)
      throw EvalError("shift amount " + std::to_string(amt) +
                      " out of range for " + to_string(f_->type_of(op.results[0])));
  }

  static void check_index(int64_t idx, int64_t len) {
    if (idx < 0 || idx >= len)
      throw EvalError("static array index " + std::to_string(idx) +
                      " out of bounds [0, " + std::to_string(len) + ")");
  }

  MachineState& state_;
  const InterpOptions& opts_;
  uint64_t& steps_;
  const Function* f_ = nullptr;
  std::vector<RtVal> env_;
  std::vector<Scratchpad> pads_;
};

}  // namespace

std::vector<int64_t> interpret(const Function& f,
                               const std::vector<int64_t>& args,
                               MachineState& state, const InterpOptions& opts) {
  uint64_t steps = 0;
  return Interpreter(state, opts, steps).run(f, args);
}

}  // namespace aquas::ir
