#include "aquas/bridge.hpp"

#include <cassert>

#include "aquas/text.hpp"

namespace aquas::bridge {

using eg::ClassId;
using eg::EGraph;
using eg::ENode;
using eg::kNoClass;

std::optional<RootKind> root_kind(const ir::Operation& op) {
  switch (op.op) {
    case ir::Opcode::Yield:
    case ir::Opcode::Return:
      return RootKind::Terminator;
    case ir::Opcode::Store:
    case ir::Opcode::MemStore:
    case ir::Opcode::BlockStore:
    case ir::Opcode::WriteRf:
      return RootKind::SideEffect;
    case ir::Opcode::For:
      return RootKind::ControlFlow;
    case ir::Opcode::IsaxCall:
      if (op.int_attr("effects").value_or(0)) return RootKind::SideEffect;
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

namespace {

std::string scoped(int64_t scope, int64_t idx) {
  return std::to_string(scope) + ":" + std::to_string(idx);
}

// ---------------------------------------------------------------- encoder

class Encoder {
 public:
  Encoder(EGraph& g, Encoded& enc) : g_(g), enc_(enc) {}

  void run(const ir::Function& f) {
    enc_.func_name = f.name;
    enc_.func_kind = f.kind;
    enc_.param_scope = g_.fresh_scope();
    for (size_t i = 0; i < f.params.size(); ++i) {
      ir::ValueId p = f.params[i];
      ClassId cls = leaf_var(enc_.param_scope, int64_t(i), f.type_of(p));
      enc_.valuemap[p] = cls;
      enc_.param_types.push_back(f.type_of(p));
      enc_.param_classes.push_back(cls);
    }
    f_ = &f;
    enc_.root = encode_block(f.body, enc_.param_scope, 0);
  }

  ClassId run_fragment(const ir::Function& frag,
                       const std::vector<ClassId>& param_classes) {
    if (frag.params.size() != param_classes.size())
      throw BridgeError("fragment parameter count mismatch");
    for (size_t i = 0; i < frag.params.size(); ++i)
      enc_.valuemap[frag.params[i]] = param_classes[i];
    f_ = &frag;
    ClassId first_for = kNoClass;
    for (const auto& op : frag.body.ops) {
      if (op.op == ir::Opcode::For) {
        ClassId c = encode_for(op, 0);
        if (first_for == kNoClass) first_for = c;
      } else if (ir::is_terminator(op.op)) {
        continue;
      } else if (root_kind(op)) {
        throw BridgeError("fragment may not contain top-level effects");
      } else {
        if (op.op == ir::Opcode::Load || op.op == ir::Opcode::MemLoad)
          throw BridgeError("fragment may not contain top-level loads");
        encode_pure(op, kNoClass);
      }
    }
    if (first_for == kNoClass)
      throw BridgeError("fragment contains no loop");
    return first_for;
  }

 private:
  ClassId vm(ir::ValueId v) const {
    auto it = enc_.valuemap.find(v);
    if (it == enc_.valuemap.end())
      throw BridgeError("unmapped value during encoding");
    return it->second;
  }

  ClassId leaf_var(int64_t scope, int64_t idx, ir::Type t) {
    return g_.add(ENode{g_.intern("var"), scoped(scope, idx), t, {}});
  }

  ClassId epoch_leaf(int64_t scope, int64_t n) {
    return g_.add(
        ENode{g_.intern("epoch"), scoped(scope, n), ir::Type::void_(), {}});
  }

  ClassId node(const std::string& sym, std::vector<ClassId> kids, ir::Type t,
               eg::Payload payload = {}) {
    return g_.add(ENode{g_.intern(sym), std::move(payload), t, std::move(kids)});
  }

  ClassId encode_block(const ir::Block& block, int64_t scope, int depth) {
    int64_t epoch_n = 0;
    ClassId epoch = epoch_leaf(scope, 0);
    std::vector<ClassId> roots;
    for (const auto& op : block.ops) {
      auto rk = root_kind(op);
      if (!rk) {
        encode_pure(op, epoch);
        continue;
      }
      roots.push_back(encode_root(op, epoch, depth));
      if (*rk == RootKind::SideEffect ||
          (*rk == RootKind::ControlFlow && ir::has_side_effects(op)))
        epoch = epoch_leaf(scope, ++epoch_n);
    }
    return node("tuple", std::move(roots), ir::Type::void_());
  }

  ClassId encode_root(const ir::Operation& op, ClassId epoch, int depth) {
    switch (op.op) {
      case ir::Opcode::For:
        return encode_for(op, depth);
      case ir::Opcode::Store:
        return node("store",
                    {vm(op.operands[0]), vm(op.operands[1]), vm(op.operands[2])},
                    ir::Type::void_());
      case ir::Opcode::MemStore:
        return node("memstore", {vm(op.operands[0]), vm(op.operands[1])},
                    ir::Type::void_());
      case ir::Opcode::BlockStore:
        return node("blockstore", {vm(op.operands[0]), vm(op.operands[1])},
                    ir::Type::void_(), *op.int_attr("len"));
      case ir::Opcode::WriteRf:
        return node("writerf", {vm(op.operands[0])}, ir::Type::void_(),
                    *op.str_attr("reg"));
      case ir::Opcode::Yield:
      case ir::Opcode::Return: {
        std::vector<ClassId> kids;
        for (ir::ValueId v : op.operands) kids.push_back(vm(v));
        return node(op.op == ir::Opcode::Yield ? "yield" : "return",
                    std::move(kids), ir::Type::void_());
      }
      case ir::Opcode::IsaxCall: {
        std::vector<ClassId> kids;
        for (ir::ValueId v : op.operands) kids.push_back(vm(v));
        return node("isax!" + *op.str_attr("callee"), std::move(kids),
                    ir::Type::void_());
      }
      default:
        throw BridgeError("unexpected root opcode");
    }
  }

  void encode_pure(const ir::Operation& op, ClassId epoch) {
    auto ty = [&](ir::ValueId v) { return f_->type_of(v); };
    switch (op.op) {
      case ir::Opcode::Const:
        enc_.valuemap[op.results[0]] =
            node("const", {}, ty(op.results[0]), *op.int_attr("value"));
        return;
      case ir::Opcode::CmpI:
        enc_.valuemap[op.results[0]] =
            node("cmpi", {vm(op.operands[0]), vm(op.operands[1])},
                 ir::Type::i1(), *op.str_attr("pred"));
        return;
      case ir::Opcode::Load:
        enc_.valuemap[op.results[0]] =
            node("load", {vm(op.operands[0]), vm(op.operands[1]), epoch},
                 ty(op.results[0]));
        return;
      case ir::Opcode::MemLoad:
        enc_.valuemap[op.results[0]] =
            node("memload", {vm(op.operands[0]), epoch}, ty(op.results[0]));
        return;
      case ir::Opcode::ReadRf:
        enc_.valuemap[op.results[0]] =
            node("readrf", {}, ty(op.results[0]), *op.str_attr("reg"));
        return;
      case ir::Opcode::BlockLoad:
        // Never consumed; kept only so raw bodies encode without error.
        node("blockload", {vm(op.operands[0]), vm(op.operands[1])},
             ir::Type::void_(), *op.int_attr("len"));
        return;
      case ir::Opcode::IsaxCall: {
        std::vector<ClassId> kids;
        for (ir::ValueId v : op.operands) kids.push_back(vm(v));
        enc_.valuemap[op.results[0]] = node(
            "isax:" + *op.str_attr("callee"), std::move(kids), ty(op.results[0]));
        return;
      }
      default: {
        std::vector<ClassId> kids;
        for (ir::ValueId v : op.operands) kids.push_back(vm(v));
        enc_.valuemap[op.results[0]] =
            node(std::string(ir::opcode_name(op.op)), std::move(kids),
                 ty(op.results[0]));
        return;
      }
    }
  }

  ClassId encode_for(const ir::Operation& op, int depth) {
    ir::ForView fv{op};
    std::vector<ClassId> kids = {vm(fv.lb()), vm(fv.ub()), vm(fv.step())};
    for (size_t i = 0; i < fv.num_iters(); ++i) kids.push_back(vm(fv.init(i)));

    int64_t scope = g_.fresh_scope();
    ScopeInfo info;
    info.scope = scope;
    info.induction = leaf_var(scope, 0, ir::Type::index());
    enc_.valuemap[fv.induction()] = info.induction;
    for (size_t i = 0; i < fv.num_iters(); ++i) {
      ir::Type t = f_->type_of(fv.iter_arg(i));
      ClassId leaf = leaf_var(scope, int64_t(1 + i), t);
      enc_.valuemap[fv.iter_arg(i)] = leaf;
      info.iter_leaves.push_back(leaf);
      info.iter_types.push_back(t);
    }
    enc_.scopes[scope] = info;

    kids.push_back(encode_block(fv.body(), scope, depth + 1));
    ClassId fcls = node("for", std::move(kids), ir::Type::void_(), scope);
    enc_.loops.push_back(LoopRecord{fcls, scope, depth});

    for (size_t i = 0; i < fv.num_iters(); ++i)
      enc_.valuemap[op.results[i]] =
          node("get", {fcls}, info.iter_types[i], int64_t(i));
    return fcls;
  }

  EGraph& g_;
  Encoded& enc_;
  const ir::Function* f_ = nullptr;
};

// ------------------------------------------------------------ materializer

class Materializer {
 public:
  Materializer(const EGraph& g, const Encoded& enc, const eg::CostModel& cm)
      : g_(g), enc_(enc), ex_(eg::extract(g, cm)) {}

  ir::Function run() {
    out_.name = enc_.func_name;
    out_.kind = enc_.func_kind;
    frames_.emplace_back();
    std::vector<ir::ValueId>& params = frames_.back().scope_args[enc_.param_scope];
    for (size_t i = 0; i < enc_.param_types.size(); ++i) {
      ir::ValueId p = out_.new_value("", enc_.param_types[i]);
      out_.params.push_back(p);
      params.push_back(p);
    }
    if (!ex_.has(g_, enc_.root, false))
      throw BridgeError("no finite witness for the function root");
    fill_block(out_.body, enc_.root, false);
    return std::move(out_);
  }

  ir::Function run_fragment(ClassId loop_cls,
                            std::vector<ClassId>& free_classes) {
    fragment_mode_ = true;
    out_.name = enc_.func_name + "_fragment";
    out_.kind = ir::FuncKind::Application;
    frames_.emplace_back();
    if (!ex_.has(g_, loop_cls, false))
      throw BridgeError("no finite witness for the loop fragment");
    materialize_root(loop_cls, out_.body, false);

    ir::Operation ret;
    ret.op = ir::Opcode::Return;
    auto it = frames_.back().loop_results.find(g_.find(loop_cls));
    if (it != frames_.back().loop_results.end() && !it->second.empty())
      ret.operands.push_back(it->second[0]);
    out_.body.ops.push_back(std::move(ret));
    free_classes = frag_param_classes_;
    return std::move(out_);
  }

 private:
  struct Frame {
    std::map<ClassId, ir::ValueId> memo;
    std::map<ClassId, std::vector<ir::ValueId>> loop_results;
    std::map<int64_t, std::vector<ir::ValueId>> scope_args;
  };

  const ENode& pick(ClassId cls, bool in_loop) {
    if (!ex_.has(g_, cls, in_loop))
      throw BridgeError("no finite witness for class " +
                        std::to_string(g_.find(cls)));
    return ex_.node(g_, cls, in_loop);
  }

  void fill_block(ir::Block& b, ClassId tuple_cls, bool in_loop) {
    const ENode& t = pick(tuple_cls, in_loop);
    if (g_.sym_name(t.sym) != "tuple")
      throw BridgeError("block class does not hold a tuple node");
    for (ClassId root : t.children) materialize_root(root, b, in_loop);
  }

  void materialize_root(ClassId cls, ir::Block& b, bool in_loop) {
    const ENode& n = pick(cls, in_loop);
    const std::string& sym = g_.sym_name(n.sym);
    if (sym == "for") {
      materialize_for(cls, n, b, in_loop);
      return;
    }
    ir::Operation op;
    if (sym == "store") {
      op.op = ir::Opcode::Store;
      for (ClassId ch : n.children)
        op.operands.push_back(value(ch, b, in_loop));
    } else if (sym == "yield" || sym == "return") {
      op.op = sym == "yield" ? ir::Opcode::Yield : ir::Opcode::Return;
      for (ClassId ch : n.children)
        op.operands.push_back(value(ch, b, in_loop));
    } else if (sym.rfind("isax!", 0) == 0) {
      op.op = ir::Opcode::IsaxCall;
      op.attrs["callee"] = sym.substr(5);
      op.attrs["effects"] = int64_t{1};
      for (ClassId ch : n.children)
        op.operands.push_back(value(ch, b, in_loop));
    } else if (sym == "memstore") {
      op.op = ir::Opcode::MemStore;
      for (ClassId ch : n.children)
        op.operands.push_back(value(ch, b, in_loop));
    } else {
      throw BridgeError("root slot holds unexpected symbol '" + sym + "'");
    }
    b.ops.push_back(std::move(op));
  }

  void materialize_for(ClassId cls, const ENode& n, ir::Block& b,
                       bool in_loop) {
    size_t nkids = n.children.size();
    size_t niters = nkids - 4;
    ir::Operation op;
    op.op = ir::Opcode::For;
    for (size_t i = 0; i < 3 + niters; ++i)
      op.operands.push_back(value(n.children[i], b, in_loop));

    int64_t scope = std::get<int64_t>(n.payload);
    ir::Block body;
    frames_.emplace_back();
    auto& args = frames_.back().scope_args[scope];
    ir::ValueId ind = out_.new_value("", ir::Type::index());
    body.args.push_back(ind);
    args.push_back(ind);
    std::vector<ir::Type> iter_types;
    for (size_t i = 0; i < niters; ++i) {
      ir::Type t = g_.type_of(n.children[3 + i]);
      ir::ValueId a = out_.new_value("", t);
      body.args.push_back(a);
      args.push_back(a);
      iter_types.push_back(t);
    }
    fill_block(body, n.children[nkids - 1], true);
    frames_.pop_back();
    op.regions.push_back(ir::Region{{std::move(body)}});

    std::vector<ir::ValueId> results;
    for (size_t i = 0; i < niters; ++i) {
      ir::ValueId r = out_.new_value("", iter_types[i]);
      op.results.push_back(r);
      results.push_back(r);
    }
    frames_.back().loop_results[g_.find(cls)] = results;
    b.ops.push_back(std::move(op));
  }

  ir::ValueId value(ClassId cls, ir::Block& b, bool in_loop) {
    cls = g_.find(cls);
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
      auto hit = it->memo.find(cls);
      if (hit != it->memo.end()) return hit->second;
    }
    if (fragment_mode_) {
      auto hit = frag_params_.find(cls);
      if (hit != frag_params_.end()) return hit->second;
    }
    const ENode& n = pick(cls, in_loop);
    const std::string& sym = g_.sym_name(n.sym);

    if (sym == "var") {
      auto [scope, idx] = parse_scoped(std::get<std::string>(n.payload));
      for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
        auto sa = it->scope_args.find(scope);
        if (sa != it->scope_args.end()) return sa->second[idx];
      }
      if (fragment_mode_) return make_param(cls, n.type);
      throw BridgeError("leaf variable out of scope");
    }
    if (sym == "get") {
      ClassId loop = g_.find(n.children[0]);
      for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
        auto lr = it->loop_results.find(loop);
        if (lr != it->loop_results.end())
          return lr->second[size_t(std::get<int64_t>(n.payload))];
      }
      if (fragment_mode_) return make_param(cls, n.type);
      throw BridgeError("loop result used before its loop materialized");
    }
    if (sym == "const") {
      ir::Operation op;
      op.op = ir::Opcode::Const;
      op.attrs["value"] = std::get<int64_t>(n.payload);
      return emit(op, b, cls, n.type);
    }
    if (sym == "load" || sym == "memload") {
      if (fragment_mode_ && !epoch_scope_bound(n.children.back()))
        return make_param(cls, n.type);
      ir::Operation op;
      op.op = sym == "load" ? ir::Opcode::Load : ir::Opcode::MemLoad;
      for (size_t i = 0; i + 1 < n.children.size(); ++i)  // epoch dropped
        op.operands.push_back(value(n.children[i], b, in_loop));
      return emit(op, b, cls, n.type);
    }
    if (sym == "cmpi") {
      ir::Operation op;
      op.op = ir::Opcode::CmpI;
      op.attrs["pred"] = std::get<std::string>(n.payload);
      for (ClassId ch : n.children)
        op.operands.push_back(value(ch, b, in_loop));
      return emit(op, b, cls, n.type);
    }
    if (sym == "readrf") {
      ir::Operation op;
      op.op = ir::Opcode::ReadRf;
      op.attrs["reg"] = std::get<std::string>(n.payload);
      return emit(op, b, cls, n.type);
    }
    if (sym.rfind("isax:", 0) == 0) {
      ir::Operation op;
      op.op = ir::Opcode::IsaxCall;
      op.attrs["callee"] = sym.substr(5);
      op.attrs["effects"] = int64_t{0};
      for (ClassId ch : n.children)
        op.operands.push_back(value(ch, b, in_loop));
      return emit(op, b, cls, n.type);
    }
    if (auto opc = ir::opcode_from_name(sym);
        opc && ir::is_pure_scalar_op(*opc)) {
      ir::Operation op;
      op.op = *opc;
      for (ClassId ch : n.children)
        op.operands.push_back(value(ch, b, in_loop));
      return emit(op, b, cls, n.type);
    }
    throw BridgeError("cannot materialize symbol '" + sym + "' as a value");
  }

  ir::ValueId emit(ir::Operation& op, ir::Block& b, ClassId cls, ir::Type t) {
    ir::ValueId r = out_.new_value("", t);
    op.results.push_back(r);
    b.ops.push_back(op);
    frames_.back().memo[cls] = r;
    return r;
  }

  ir::ValueId make_param(ClassId cls, ir::Type t) {
    ir::ValueId p = out_.new_value("", t);
    out_.params.push_back(p);
    frag_params_[cls] = p;
    frag_param_classes_.push_back(cls);
    return p;
  }

  bool epoch_scope_bound(ClassId epoch_cls) const {
    const auto& nodes = g_.eclass(epoch_cls).nodes;
    if (nodes.empty() || g_.sym_name(nodes[0].sym) != "epoch") return false;
    auto [scope, idx] = parse_scoped(std::get<std::string>(nodes[0].payload));
    (void)idx;
    for (const auto& f : frames_)
      if (f.scope_args.count(scope)) return true;
    return false;
  }

  static std::pair<int64_t, int64_t> parse_scoped(const std::string& s) {
    size_t colon = s.find(':');
    return {std::stoll(s.substr(0, colon)), std::stoll(s.substr(colon + 1))};
  }

  const EGraph& g_;
  const Encoded& enc_;
  eg::Extraction ex_;
  ir::Function out_;
  std::vector<Frame> frames_;
  bool fragment_mode_ = false;
  std::map<ClassId, ir::ValueId> frag_params_;
  std::vector<ClassId> frag_param_classes_;
};

}  // namespace

Encoded encode(eg::EGraph& g, const ir::Function& f) {
  auto diags = ir::verify(f);
  if (!diags.empty()) throw BridgeError("cannot encode an unverified function");
  Encoded enc;
  Encoder(g, enc).run(f);
  g.rebuild();
  return enc;
}

ir::Function witness_extract(const eg::EGraph& g, const Encoded& enc,
                             const eg::CostModel& cm) {
  ir::Function f = Materializer(g, enc, cm).run();
  auto diags = ir::verify(f);
  if (!diags.empty())
    throw BridgeError("extracted function fails verification: " +
                      diags[0].message);
  return f;
}

ir::Function extract_loop_fragment(const eg::EGraph& g, const Encoded& enc,
                                   const eg::CostModel& cm, eg::ClassId loop_cls,
                                   std::vector<eg::ClassId>& free_classes) {
  ir::Function f = Materializer(g, enc, cm).run_fragment(loop_cls, free_classes);
  auto diags = ir::verify(f);
  if (!diags.empty())
    throw BridgeError("loop fragment fails verification: " + diags[0].message);
  return f;
}

eg::ClassId encode_fragment(eg::EGraph& g, Encoded& enc,
                            const ir::Function& fragment,
                            const std::vector<eg::ClassId>& param_classes) {
  auto diags = ir::verify(fragment);
  if (!diags.empty())
    throw BridgeError("cannot encode an unverified fragment: " +
                      diags[0].message);
  // The fragment reuses the parent encoding's valuemap keyspace; fragment
  // value ids are local, so encode against a scratch copy of the map.
  Encoded scratch;
  scratch.func_name = fragment.name;
  scratch.func_kind = fragment.kind;
  Encoder enc2(g, scratch);
  eg::ClassId cls = enc2.run_fragment(fragment, param_classes);
  // Surface new scopes and loops to the parent encoding.
  for (auto& [scope, info] : scratch.scopes) enc.scopes[scope] = info;
  for (auto& rec : scratch.loops) enc.loops.push_back(rec);
  g.rebuild();
  return cls;
}

}  // namespace aquas::bridge
