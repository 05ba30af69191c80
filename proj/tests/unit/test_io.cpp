#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "mfplan/densities.hpp"
#include "mfplan/error.hpp"
#include "mfplan/io.hpp"

using namespace mfplan;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mfplan_io_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("field files round-trip bit-identically") {
    GridSpec g{2, 3, 5, 1.25};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    SliceField m(g);
    for (double& v : m.values()) v = n01(rng);
    m.values()[0] = -0.0;
    m.values()[1] = 1e-310;
    MomentumField w(g);
    for (int a = 0; a < 2; ++a) for (double& v : w.component(a)) v = n01(rng);
    CellField u(g);
    for (double& v : u.values()) v = n01(rng);

    write_field(scratch("m.field"), to_field_file(m, "density"));
    write_field(scratch("w.field"), to_field_file(w));
    write_field(scratch("u.field"), to_field_file(u));
    const SliceField m2 = slices_from(read_field(scratch("m.field")));
    const MomentumField w2 = momentum_from(read_field(scratch("w.field")));
    const CellField u2 = cells_from(read_field(scratch("u.field")));
    CHECK(std::memcmp(m.values().data(), m2.values().data(), m.values().size() * 8) == 0);
    CHECK(std::signbit(m2.values()[0]));
    CHECK(w2.component(1) == w.component(1));
    CHECK(u2.values() == u.values());
    CHECK(m2.grid() == g);
    CHECK(fs::file_size(scratch("m.field")) == m.values().size() * 8);
  }

  TEST_CASE("payload/header mismatches are io errors") {
    GridSpec g{1, 2, 4, 1.0};
    write_field(scratch("d.field"), to_field_file(Density{g, {1, 2, 3, 4}}));
    write_text(scratch("d.field"), std::string(24, '\0'));
    try {
      read_field(scratch("d.field"));
      FAIL("expected io error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kIo);
    }
    CHECK_THROWS_AS(read_field(scratch("missing.field")), Error);
    CHECK_THROWS_AS(write_field(scratch("x.field"), FieldFile{"density", "spatial", g, 1, {1.0}}), Error);
  }

  TEST_CASE("model json round trip including sampled coefficients") {
    GridSpec g{1, 2, 4, 1.0};
    write_field(scratch("vh.field"), to_field_file(Density{g, {0.1, 0.2, 0.3, 0.4}}));
    const std::string text = R"({"p": 3, "hamiltonian": {"g": 2, "z": [0.5], "V_H": {"field": "vh.field"}},
      "coupling": {"a": 0.25, "V_f": -1}, "constants": {"c_H": 2, "c_H_plus": 0.5, "c_H_minus": 0.1, "c_f": 3}})";
    const ModelSpec m = model_from_json(text, scratch("").parent_path());
    CHECK(m.p == 3.0);
    CHECK(m.g.constant() == 2.0);
    CHECK(m.z[0].constant() == 0.5);
    CHECK_FALSE(m.V_H.is_constant());
    CHECK(m.V_H({g.center(2), 0}) == doctest::Approx(0.3));
    CHECK(m.c_f == 3.0);
    const ModelSpec back = model_from_json(model_to_json(m));
    CHECK(back.V_H.samples() == m.V_H.samples());
    CHECK(back.a.constant() == 0.25);
    CHECK_THROWS_AS(model_from_json(R"({"p": 2, "hamiltonian": {"q": 1}})"), Error);
    CHECK_THROWS_AS(model_from_json("not json"), Error);
  }

  TEST_CASE("grid and config json") {
    const GridSpec g = grid_from_json(R"({"d": 2, "nt": 8, "nx": 16, "R": 1.5})");
    CHECK(g == GridSpec{2, 8, 16, 1.5});
    CHECK(grid_from_json(grid_to_json(g)) == g);
    SolverConfig c = config_from_json(R"({"max_iters": 10, "init": "displacement", "stop_gap": 1e-3})");
    CHECK(c.max_iters == 10);
    CHECK(c.init == InitStrategy::kDisplacement);
    const SolverConfig c2 = config_from_json(config_to_json(c));
    CHECK(c2.stop_gap == 1e-3);
    CHECK_THROWS_AS(config_from_json(R"({"iters": 10})"), Error);
  }

  TEST_CASE("history csv round trip") {
    std::vector<HistoryEntry> h(3);
    for (int i = 0; i < 3; ++i) {
      h[i].iteration = 10 * i;
      h[i].B = 1.0 / (i + 3);
      h[i].relative_gap = 1e-3 / (i + 1);
    }
    write_history_csv(scratch("h.csv"), h);
    const auto back = read_history_csv(scratch("h.csv"));
    REQUIRE(back.size() == 3);
    CHECK(back[2].B == h[2].B);
    CHECK(back[1].iteration == 10);
  }

  TEST_CASE("csv export and hashing") {
    GridSpec g{1, 2, 4, 1.0};
    write_field_csv(scratch("d.csv"), to_field_file(Density{g, {1, 2, 3, 4}}));
    CHECK(read_text(scratch("d.csv")).rfind("x,value\n", 0) == 0);
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  }
}
