#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "aquas/ir.hpp"
#include "aquas/text.hpp"

using namespace aquas;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_loops(const ir::Block& b) {
  int n = 0;
  for (const auto& op : b.ops) {
    if (op.op == ir::Opcode::For) ++n;
    for (const auto& r : op.regions)
      for (const auto& blk : r.blocks) n += count_loops(blk);
  }
  return n;
}

}  // namespace

TEST_CASE("gemv fixture parses to a two-level loop nest") {
  auto f = ir::parse(read_file(AQUAS_FIXTURE_DIR "/gemv_app.ir"));
  CHECK(f.name == "gemv_app");
  CHECK(f.params.size() == 2);
  CHECK(count_loops(f.body) == 2);
  CHECK(ir::verify(f).empty());
}

TEST_CASE("identity function parses to a single block with zero loops") {
  auto f = ir::parse("func @id(%x: i32) { return %x : i32 }");
  CHECK(f.params.size() == 1);
  CHECK(f.body.ops.size() == 1);
  CHECK(count_loops(f.body) == 0);
}

TEST_CASE("print of parsed gemv is canonical and stable") {
  auto f = ir::parse(read_file(AQUAS_FIXTURE_DIR "/gemv_app.ir"));
  std::string canon = ir::print(f);
  auto f2 = ir::parse(canon);
  CHECK(ir::structurally_equal(f, f2));
  // print . parse is the identity on canonical text.
  CHECK(ir::print(f2) == canon);
}

TEST_CASE("empty-body function prints in minimal form") {
  auto f = ir::parse("func @empty() { return }");
  CHECK(ir::print(f) == "func @empty() {\n  return\n}\n");
}

TEST_CASE("parse errors carry line and column") {
  try {
    ir::parse("func @f() {\n  %x = bogus %y : i32\n}");
    FAIL("expected a parse error");
  } catch (const ir::ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("verifier flags use before definition") {
  // Built by hand; the parser would already reject the unknown name.
  ir::Function f;
  f.name = "bad";
  ir::ValueId x = f.new_value("x", ir::Type::i32());
  ir::ValueId y = f.new_value("y", ir::Type::i32());
  ir::Operation use;
  use.op = ir::Opcode::AddI;
  use.operands = {x, x};
  use.results = {y};
  ir::Operation def;
  def.op = ir::Opcode::Const;
  def.attrs["value"] = int64_t{1};
  def.results = {x};
  ir::Operation ret;
  ret.op = ir::Opcode::Return;
  f.body.ops = {use, def, ret};
  auto diags = ir::verify(f);
  REQUIRE(!diags.empty());
  CHECK(diags[0].message.find("used before definition") != std::string::npos);
}

TEST_CASE("verifier rejects hardware ops outside isax bodies") {
  ir::Function f;
  f.name = "bad";
  f.kind = ir::FuncKind::Application;
  ir::ValueId arr = f.new_value("arr", ir::Type::array(4, ir::TypeKind::I32));
  ir::ValueId p = f.new_value("p", ir::Type::ptr(ir::TypeKind::I32));
  f.params = {arr, p};
  ir::Operation bl;
  bl.op = ir::Opcode::BlockLoad;
  bl.operands = {arr, p};
  bl.attrs["len"] = int64_t{4};
  ir::Operation ret;
  ret.op = ir::Opcode::Return;
  f.body.ops = {bl, ret};
  auto diags = ir::verify(f);
  bool found_hw = false, found_arr = false;
  for (const auto& d : diags) {
    if (d.message.find("hardware op outside") != std::string::npos)
      found_hw = true;
    if (d.message.find("static array parameter outside") != std::string::npos)
      found_arr = true;
  }
  CHECK(found_hw);
  CHECK(found_arr);
}

TEST_CASE("verifier enforces terminator placement") {
  ir::Function f;
  f.name = "bad";
  ir::Operation ret;
  ret.op = ir::Opcode::Return;
  f.body.ops = {ret, ret};
  auto diags = ir::verify(f);
  REQUIRE(!diags.empty());
  CHECK(diags[0].message.find("terminator") != std::string::npos);
}

TEST_CASE("verifier checks partition directives") {
  CHECK_THROWS_AS(
      ir::parse("func @f(%a: ptr<i32>) { blockload %a, %a, 4\n return }"),
      ir::VerifyError);
}

TEST_CASE("trip count law on closed form") {
  using ir::trip_count;
  CHECK(*trip_count(0, 4, 1) == 4);
  CHECK(*trip_count(0, 5, 2) == 3);
  CHECK(*trip_count(4, 4, 1) == 0);
  CHECK(*trip_count(8, 0, 1) == 0);
  CHECK(*trip_count(8, 0, -2) == 4);
  CHECK(*trip_count(0, 7, 3) == 3);
  CHECK(!trip_count(0, 4, 0));
}

TEST_CASE("structural equality ignores value names") {
  auto a = ir::parse("func @f(%x: i32) { %y = addi %x, %x : i32\n return %y : i32 }");
  auto b = ir::parse("func @f(%u: i32) { %v = addi %u, %u : i32\n return %v : i32 }");
  CHECK(ir::structurally_equal(a, b));
  auto c = ir::parse("func @f(%x: i32) { %y = muli %x, %x : i32\n return %y : i32 }");
  CHECK(!ir::structurally_equal(a, c));
}
