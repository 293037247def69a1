#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "morita/instance.hpp"
#include "test_support.hpp"

using namespace morita;

namespace {

json scalar_cp_map_doc() {
  // psi = tr/2 : M2 -> scalars, same data as the shipped trace fixture.
  auto d = make_algebra({2});
  auto b = make_algebra({1});
  auto f = free_module(b, 1);
  json table = json::array();
  for (int w = 0; w < 4; ++w) {
    const double v = (w == 0 || w == 3) ? 0.5 : 0.0;
    table.push_back(to_json(ModuleMap(f, f, {{unit_element(b) * v}})));
  }
  return json{
      {"algebras", {{"D", to_json(d)}, {"B", to_json(b)}}},
      {"modules", {{"F", json{{"base", "B"}, {"free_rank", 1}}}}},
      {"cp_maps",
       {{"psi", json{{"source", "D"}, {"space", "F"}, {"table", table}}}}},
      {"plan", {{"map", "psi"}}}};
}

}  // namespace

TEST_CASE("json round trips preserve the objects") {
  std::mt19937_64 rng(139);
  auto b = make_algebra({2, 1});

  SECTION("algebra elements survive exactly") {
    for (int trial = 0; trial < 5; ++trial) {
      auto e = testsupport::random_element(b, rng);
      auto back = element_from_json(b, to_json(e));
      CHECK((back - e).norm() == 0.0);
    }
  }

  SECTION("module maps survive exactly") {
    auto mod = free_module(b, 2);
    auto m = testsupport::random_map(mod, mod, rng);
    auto back = map_from_json(mod, mod, to_json(m));
    CHECK((back - m).norm() == 0.0);
  }

  SECTION("free modules serialize by rank, projective ones by projection") {
    json free_doc = to_json(free_module(b, 3), "B");
    CHECK(free_doc.at("free_rank") == 3);
    CHECK_FALSE(free_doc.contains("p"));

    auto scalars = make_algebra({1});
    const auto half = unit_element(scalars) * 0.5;
    auto line = make_module(scalars, 2, {{half, half}, {half, half}});
    json proj_doc = to_json(line, "B");
    CHECK(proj_doc.contains("p"));
    auto back = make_module(
        scalars, 2, entries_from_json(scalars, proj_doc.at("p"), 2, 2));
    CHECK(same_module(back, line));
  }

  SECTION("malformed payloads raise parse errors") {
    CHECK_THROWS_AS(complex_from_json(json::array({1.0})), Error);
    CHECK_THROWS_AS(mat_from_json(json::array({json::array()}), 1, 1), Error);
    CHECK_THROWS_AS(element_from_json(b, json::array()), Error);
  }
}

TEST_CASE("instances load with validation") {
  Tolerances tt;

  SECTION("the trace document yields a working cp map") {
    auto ins = parse_instance(scalar_cp_map_doc(), tt);
    REQUIRE(ins.cp_maps.count("psi") == 1);
    CHECK(ins.cp_maps.at("psi").source->rep_dim() == 2);
    CHECK(ins.plan.at("map") == "psi");
  }

  SECTION("a non-projection p is rejected by name and axiom") {
    auto b = make_algebra({1});
    auto bad = json{
        {"algebras", {{"B", json{{"blocks", {1}}}}}},
        {"modules",
         {{"E", json{{"base", "B"},
                     {"p", entries_to_json({{unit_element(b) * 2.0}})}}}}}};
    try {
      parse_instance(bad, tt);
      FAIL("expected a projection error");
    } catch (const Error& e) {
      CHECK(e.kind() == "projection");
      CHECK(std::string(e.what()).find("module 'E'") != std::string::npos);
    }
  }

  SECTION("a non-cp table is rejected while loading") {
    json doc = scalar_cp_map_doc();
    // swap in the transpose of the 2x2 block, which is not cp
    auto d = make_algebra({2});
    json table = json::array();
    auto f2 = free_module(d, 1);
    for (int w = 0; w < 4; ++w) {
      const auto ix = d->basis_index(w);
      table.push_back(
          to_json(ModuleMap(f2, f2, {{basis_element(d, ix.col * 2 + ix.row)}})));
    }
    doc["modules"]["F2"] = json{{"base", "D"}, {"free_rank", 1}};
    doc["cp_maps"]["bad"] =
        json{{"source", "D"}, {"space", "F2"}, {"table", table}};
    try {
      parse_instance(doc, tt);
      FAIL("expected a cp failure");
    } catch (const Error& e) {
      CHECK(e.kind() == "not-cp");
      CHECK(std::string(e.what()).find("'bad'") != std::string::npos);
    }
  }

  SECTION("unknown references fail with the missing name") {
    json doc = scalar_cp_map_doc();
    doc["modules"]["G"] = json{{"base", "NOPE"}, {"free_rank", 1}};
    CHECK_THROWS_AS(parse_instance(doc, tt), Error);
  }

  SECTION("bimodule kinds resolve out of declaration order") {
    json doc{{"algebras", {{"B", json{{"blocks", {1}}}}}},
             {"bimodules",
              {{"A_dual", json{{"kind", "dual"}, {"of", "Y"}}},
               {"Both", json{{"kind", "tensor"},
                             {"first", "Y"},
                             {"second", "A_dual"}}},
               {"Y", json{{"kind", "matrix-column"},
                          {"base", "B"},
                          {"columns", 2}}}}}};
    auto ins = parse_instance(doc, tt);
    REQUIRE(ins.bimodules.size() == 3);
    CHECK(ins.bimodules.at("A_dual")->right()->rep_dim() == 2);
    CHECK(same_algebra(ins.bimodules.at("Both")->left(),
                       ins.bimodules.at("Both")->right()));

    json cyclic{{"bimodules",
                 {{"A", json{{"kind", "dual"}, {"of", "B"}}},
                  {"B", json{{"kind", "dual"}, {"of", "A"}}}}}};
    CHECK_THROWS_AS(parse_instance(cyclic, tt), Error);
  }
}

TEST_CASE("command runners emit certified reports") {
  Tolerances tt;

  SECTION("ksgns reports the dilation dimension") {
    auto out = run_ksgns(parse_instance(scalar_cp_map_doc(), tt), {});
    CHECK(out.passed);
    CHECK(out.report.at("command") == "ksgns");
    CHECK(out.report.at("results").at("dilation_dim") == 4);
    CHECK(out.report.at("certificates").size() == 1);
    CHECK(out.report.at("passed") == true);
  }

  SECTION("the worked pipeline runs from a document") {
    auto b = make_algebra({1});
    auto f = free_module(b, 1);
    json table = json::array({to_json(identity_map(f))});
    json doc{
        {"algebras", {{"B", to_json(b)}}},
        {"modules", {{"F", json{{"base", "B"}, {"free_rank", 1}}}}},
        {"cp_maps",
         {{"psi", json{{"source", "B"}, {"space", "F"}, {"table", table}}}}},
        {"bimodules",
         {{"Y",
           json{{"kind", "matrix-column"}, {"base", "B"}, {"columns", 2}}}}},
        {"plan", {{"map", "psi"}, {"bimodule", "Y"}}}};
    auto ins = parse_instance(doc, tt);

    auto induce = run_induce(ins, {});
    CHECK(induce.passed);
    CHECK(induce.report.at("results").at("induced_space_dim") == 2);

    auto gns = run_gns_sme(ins, {});
    CHECK(gns.passed);
    CHECK(gns.report.at("results").at("tensor_dim") == 2);
  }

  SECTION("the built-in instance passes") {
    auto out = run_example_gns5(tt);
    CHECK(out.passed);
    CHECK(out.report.at("results").at("induced_dim") == 2);
  }

  SECTION("a failing witness flips the exit flag but keeps the report") {
    auto d = make_algebra({1, 1});
    auto rep = testsupport::left_regular(d);
    auto w = witness_reflexive(rep, tt);
    for (auto& m : w.maps) m = m * cplx(1.3, 0.0);
    json maps = json::array();
    for (const auto& m : w.maps) maps.push_back(to_json(m));
    json table = json::array();
    for (const auto& m : rep.table) table.push_back(to_json(m));
    json doc{
        {"algebras", {{"D", to_json(d)}}},
        {"modules", {{"F", json{{"base", "D"}, {"free_rank", 1}}}}},
        {"representations",
         {{"pi", json{{"algebra", "D"}, {"space", "F"}, {"table", table}}}}},
        {"bimodules", {{"T", json{{"kind", "trivial"}, {"base", "D"}}}}},
        {"witnesses",
         {{"w", json{{"rep1", "pi"},
                     {"rep2", "pi"},
                     {"bimodule", "T"},
                     {"maps", maps}}}}}};
    auto out = run_verify_sme(parse_instance(doc, tt), {});
    CHECK_FALSE(out.passed);
    CHECK(out.report.at("passed") == false);
    bool found = false;
    for (const auto& cond :
         out.report.at("certificates").at(0).at("conditions"))
      if (cond.at("residual").get<double>() > 0.3) found = true;
    CHECK(found);
  }

  SECTION("object picking prefers flags over the plan") {
    json doc = scalar_cp_map_doc();
    doc["cp_maps"]["zero"] = doc["cp_maps"]["psi"];
    json zt = json::array();
    auto b = make_algebra({1});
    auto f = free_module(b, 1);
    for (int w = 0; w < 4; ++w)
      zt.push_back(to_json(zero_map(f, f)));
    doc["cp_maps"]["zero"]["table"] = zt;
    auto ins = parse_instance(doc, tt);

    CommandOptions opt;
    opt.map = "zero";
    auto out = run_ksgns(ins, opt);
    CHECK(out.report.at("results").at("cp_map") == "zero");
    CHECK(out.report.at("results").at("dilation_dim") == 0);

    auto planned = run_ksgns(ins, {});
    CHECK(planned.report.at("results").at("cp_map") == "psi");

    ins.plan.erase("map");
    CHECK_THROWS_AS(run_ksgns(ins, {}), Error);
  }

  SECTION("sweep reports are reproducible") {
    auto a = run_sweep(11, 3, tt);
    auto b2 = run_sweep(11, 3, tt);
    CHECK(a.passed);
    CHECK(a.report.dump() == b2.report.dump());
    CHECK(a.report.at("results").at("instances").size() == 3);
    CHECK(a.report.at("seed") == 11);
  }
}

TEST_CASE("generators respect caps and reload") {
  Tolerances tt;

  SECTION("generated instances load back through the validators") {
    json cp = gen_instance("cp-map", {2, 1}, {1}, 2, 2, 5, {}, tt);
    auto ins = parse_instance(cp, tt);
    CHECK(ins.seed.value() == 5);
    CHECK(run_ksgns(ins, {}).passed);

    json bi = gen_instance("bimodule", {1, 2}, {}, 1, 2, 6, {}, tt);
    auto ins2 = parse_instance(bi, tt);
    REQUIRE(ins2.bimodules.count("Y") == 1);

    CHECK_THROWS_AS(gen_instance("nope", {1}, {1}, 1, 1, 1, {}, tt), Error);
  }

  SECTION("the same seed reproduces the same instance") {
    json a = gen_instance("cp-map", {2}, {1, 1}, 1, 2, 9, {}, tt);
    json b = gen_instance("cp-map", {2}, {1, 1}, 1, 2, 9, {}, tt);
    CHECK(a.dump() == b.dump());
    json c = gen_instance("cp-map", {2}, {1, 1}, 1, 2, 10, {}, tt);
    CHECK(a.dump() != c.dump());
  }

  SECTION("desk-scale caps reject oversized requests") {
    std::mt19937_64 rng(149);
    CHECK_THROWS_AS(gen_cp_map({9, 9}, {1}, 1, rng), Error);
    CHECK_THROWS_AS(gen_cp_map({1}, {2}, 20, rng), Error);
    try {
      gen_bimodule({17}, 1, rng);
      FAIL("expected a cap error");
    } catch (const Error& e) {
      CHECK(e.kind() == "cap-exceeded");
    }
  }

  SECTION("a rank-one projection gives a trivial-like bimodule") {
    std::mt19937_64 rng(151);
    auto y = gen_bimodule({1}, 1, rng);
    CHECK(y->left()->rep_dim() == 1);
    CHECK(y->carrier()->complex_dim() == 1);
    CHECK(to_json(y->carrier(), "B").contains("free_rank"));
  }

  SECTION("generated bimodules work as induction data") {
    std::mt19937_64 rng(157);
    for (int trial = 0; trial < 3; ++trial) {
      auto psi = gen_cp_map({2}, {1}, 1, rng, {}, tt);
      auto y = gen_bimodule({2}, 2, rng, {}, tt);
      auto ind = induce_cp_map(psi, y, left_basis(y, tt), tt);
      CHECK(verify_sme_witness(ind.witness, tt).passed());
    }
  }
}
