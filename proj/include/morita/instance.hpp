#pragma once

// Instance files and command runners behind the command-line front end.
// An instance is a JSON document of named objects (algebras, modules,
// CP maps, representations, bimodules, witnesses) plus an optional plan
// naming the defaults a command should pick up.  Every object is
// validated while loading, so commands operate on data that already
// passed the constructors' certificates.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "morita/correspondence.hpp"
#include "morita/generate.hpp"
#include "morita/serialize.hpp"

namespace morita {

struct Instance {
  Tolerances tt;
  std::map<std::string, AlgebraPtr> algebras;
  std::map<std::string, ModuleRef> modules;
  std::map<std::string, CPMap> cp_maps;
  std::map<std::string, Representation> representations;
  std::map<std::string, BimodulePtr> bimodules;
  std::map<std::string, SMEWitness> witnesses;
  json plan = json::object();
  std::optional<std::uint64_t> seed;
};

namespace instancing {

/// Re-throws construction errors with the failing object's name in
/// front, keeping the machine-readable kind intact.
template <class F>
auto named(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string msg = std::string(e.what()).substr(e.kind().size() + 2);
    if (e.has_certificate())
      throw Error(e.kind(), what + ": " + msg, e.certificate());
    throw Error(e.kind(), what + ": " + msg);
  }
}

template <class M>
const typename M::mapped_type& lookup(const M& section, const std::string& name,
                                      const std::string& what) {
  auto it = section.find(name);
  require(it != section.end(), "unresolved",
          what + " '" + name + "' is not defined in the instance");
  return it->second;
}

inline const json& field(const json& j, const char* key,
                         const std::string& what) {
  require(j.is_object() && j.contains(key), "parse",
          what + ": missing field '" + key + "'");
  return j.at(key);
}

inline std::string str_field(const json& j, const char* key,
                             const std::string& what) {
  const json& v = field(j, key, what);
  require(v.is_string(), "parse",
          what + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline std::vector<ModuleMap> maps_from_json(const ModuleRef& src,
                                             const ModuleRef& tgt,
                                             const json& j,
                                             const std::string& what) {
  require(j.is_array(), "parse", what + ": table must be an array");
  std::vector<ModuleMap> out;
  out.reserve(j.size());
  for (const auto& m : j) out.push_back(map_from_json(src, tgt, m));
  return out;
}

}  // namespace instancing

inline Instance parse_instance(const json& j, const Tolerances& tt = {}) {
  using instancing::field;
  using instancing::lookup;
  using instancing::named;
  using instancing::str_field;
  require(j.is_object(), "parse", "an instance must be a JSON object");

  Instance ins;
  ins.tt = tt;

  if (j.contains("algebras"))
    for (const auto& [name, spec] : j.at("algebras").items()) {
      const std::string what = "algebra '" + name + "'";
      ins.algebras.emplace(name, named(what, [&] {
        const json& blocks = field(spec, "blocks", what);
        require(blocks.is_array() && !blocks.empty(), "parse",
                what + ": 'blocks' must be a nonempty array");
        return make_algebra(blocks.get<std::vector<int>>());
      }));
    }

  if (j.contains("modules"))
    for (const auto& [name, spec] : j.at("modules").items()) {
      const std::string what = "module '" + name + "'";
      ins.modules.emplace(name, named(what, [&] {
        const auto& base =
            lookup(ins.algebras, str_field(spec, "base", what), "algebra");
        if (spec.contains("free_rank"))
          return free_module(base, spec.at("free_rank").get<int>());
        const json& p = field(spec, "p", what);
        require(p.is_array() && !p.empty(), "parse",
                what + ": 'p' must be a nonempty matrix over the base");
        const int n = static_cast<int>(p.size());
        return make_module(base, n, entries_from_json(base, p, n, n));
      }));
    }

  if (j.contains("cp_maps"))
    for (const auto& [name, spec] : j.at("cp_maps").items()) {
      const std::string what = "cp map '" + name + "'";
      ins.cp_maps.emplace(name, named(what, [&] {
        const auto& source =
            lookup(ins.algebras, str_field(spec, "source", what), "algebra");
        const auto& space =
            lookup(ins.modules, str_field(spec, "space", what), "module");
        auto table = instancing::maps_from_json(space, space,
                                                field(spec, "table", what), what);
        return make_cp_map(source, space, std::move(table), tt);
      }));
    }

  if (j.contains("representations"))
    for (const auto& [name, spec] : j.at("representations").items()) {
      const std::string what = "representation '" + name + "'";
      ins.representations.emplace(name, named(what, [&] {
        const auto& alg =
            lookup(ins.algebras, str_field(spec, "algebra", what), "algebra");
        const auto& space =
            lookup(ins.modules, str_field(spec, "space", what), "module");
        auto table = instancing::maps_from_json(space, space,
                                                field(spec, "table", what), what);
        return make_representation(alg, space, std::move(table), tt);
      }));
    }

  if (j.contains("bimodules")) {
    // Dual and tensor kinds reference other bimodules, so resolution
    // loops until a pass makes no progress.
    std::map<std::string, const json*> pending;
    for (const auto& [name, spec] : j.at("bimodules").items())
      pending.emplace(name, &spec);
    bool progress = true;
    while (!pending.empty() && progress) {
      progress = false;
      for (auto it = pending.begin(); it != pending.end();) {
        const std::string& name = it->first;
        const json& spec = *it->second;
        const std::string what = "bimodule '" + name + "'";
        const std::string kind = str_field(spec, "kind", what);
        const bool deps_ready = [&] {
          if (kind == "dual")
            return ins.bimodules.count(str_field(spec, "of", what)) > 0;
          if (kind == "tensor")
            return ins.bimodules.count(str_field(spec, "first", what)) > 0 &&
                   ins.bimodules.count(str_field(spec, "second", what)) > 0;
          return true;
        }();
        if (!deps_ready) {
          ++it;
          continue;
        }
        ins.bimodules.emplace(name, named(what, [&]() -> BimodulePtr {
          if (kind == "trivial")
            return trivial_bimodule(
                lookup(ins.algebras, str_field(spec, "base", what), "algebra"),
                tt);
          if (kind == "matrix-column")
            return matrix_column_bimodule(
                lookup(ins.algebras, str_field(spec, "base", what), "algebra"),
                field(spec, "columns", what).get<int>(), tt);
          if (kind == "dual")
            return dual_bimodule(
                       lookup(ins.bimodules, str_field(spec, "of", what),
                              "bimodule"),
                       tt)
                .dual;
          if (kind == "tensor")
            return bimodule_tensor(
                       lookup(ins.bimodules, str_field(spec, "first", what),
                              "bimodule"),
                       lookup(ins.bimodules, str_field(spec, "second", what),
                              "bimodule"),
                       tt)
                .bimodule;
          if (kind == "explicit") {
            const auto& left = lookup(
                ins.algebras, str_field(spec, "left", what), "algebra");
            const auto& carrier = lookup(
                ins.modules, str_field(spec, "carrier", what), "module");
            auto action = instancing::maps_from_json(
                carrier, carrier, field(spec, "action", what), what);
            return make_bimodule(left, carrier, std::move(action), tt);
          }
          throw Error("parse", what + ": unknown kind '" + kind + "'");
        }));
        it = pending.erase(it);
        progress = true;
      }
    }
    if (!pending.empty()) {
      std::string names;
      for (const auto& [name, spec] : pending)
        names += (names.empty() ? "'" : ", '") + name + "'";
      throw Error("unresolved", "bimodule references do not resolve: " + names);
    }
  }

  if (j.contains("witnesses"))
    for (const auto& [name, spec] : j.at("witnesses").items()) {
      const std::string what = "witness '" + name + "'";
      ins.witnesses.emplace(name, named(what, [&] {
        const auto& rep1 = lookup(ins.representations,
                                  str_field(spec, "rep1", what),
                                  "representation");
        const auto& rep2 = lookup(ins.representations,
                                  str_field(spec, "rep2", what),
                                  "representation");
        const auto& bimod = lookup(ins.bimodules,
                                   str_field(spec, "bimodule", what),
                                   "bimodule");
        auto maps = instancing::maps_from_json(
            rep2.space, rep1.space, field(spec, "maps", what), what);
        return SMEWitness{rep1, rep2, bimod, std::move(maps)};
      }));
    }

  if (j.contains("plan")) {
    require(j.at("plan").is_object(), "parse", "'plan' must be an object");
    ins.plan = j.at("plan");
  }
  if (j.contains("seed")) ins.seed = j.at("seed").get<std::uint64_t>();
  return ins;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "io", "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("parse", std::string(e.what()));
  }
}

inline Instance load_instance(const std::string& path,
                              const Tolerances& tt = {}) {
  return parse_instance(read_json_file(path), tt);
}

/// Object names a command received from flags, falling back to the
/// instance plan and then to the only object of the right kind.
struct CommandOptions {
  std::string map;
  std::string bimodule;
  std::string second;
  std::string witness;
  std::string phi;
  std::string psi;
  bool roundtrip = false;
};

namespace instancing {

template <class M>
std::pair<std::string, const typename M::mapped_type*> pick(
    const M& section, const std::string& flag, const json& plan,
    const std::string& role, const std::string& what) {
  std::string name = flag;
  if (name.empty() && plan.contains(role) && plan.at(role).is_string())
    name = plan.at(role).get<std::string>();
  if (name.empty()) {
    require(!section.empty(), "unresolved",
            "the instance defines no " + what);
    require(section.size() == 1, "ambiguous",
            "several " + what + "s are defined; name one with --" + role +
                " or a plan entry");
    return {section.begin()->first, &section.begin()->second};
  }
  return {name, &lookup(section, name, what)};
}

inline Certificate renamed(Certificate cert, const std::string& name) {
  cert.name = name;
  return cert;
}

}  // namespace instancing

struct RunOutcome {
  json report;
  bool passed = false;
};

inline json report_envelope(const std::string& command, const Tolerances& tt,
                            const json& seed, json results,
                            const std::vector<Certificate>& certs,
                            bool extra_ok = true) {
  json certificates = json::array();
  bool passed = extra_ok;
  for (const auto& c : certs) {
    certificates.push_back(to_json(c));
    passed = passed && c.passed();
  }
  return json{{"command", command},
              {"tolerances", to_json(tt)},
              {"seed", seed},
              {"results", std::move(results)},
              {"certificates", std::move(certificates)},
              {"passed", passed}};
}

inline RunOutcome run_ksgns(const Instance& ins, const CommandOptions& opt) {
  auto [name, psi] =
      instancing::pick(ins.cp_maps, opt.map, ins.plan, "map", "cp map");
  auto d = ksgns(*psi, ins.tt);
  json results{{"cp_map", name},
               {"space_dim", psi->space->complex_dim()},
               {"dilation_dim", d.module()->complex_dim()}};
  json report = report_envelope("ksgns", ins.tt, nullptr, std::move(results),
                                {d.cert});
  return {std::move(report), d.cert.passed()};
}

inline RunOutcome run_induce(const Instance& ins, const CommandOptions& opt) {
  auto [mname, psi] =
      instancing::pick(ins.cp_maps, opt.map, ins.plan, "map", "cp map");
  auto [bname, y] =
      instancing::pick(ins.bimodules, opt.bimodule, ins.plan, "bimodule",
                       "bimodule");
  auto ind = induce_cp_map(*psi, *y, left_basis(*y, ins.tt), ins.tt);

  Certificate unitary("induction", ins.tt.tol);
  const auto id_f = identity_map(ind.dilation.module());
  const auto id_t = identity_map(ind.induced.tensor.module());
  unitary.record("unitary-isometry",
                 (ind.u.adjoint().compose(ind.u) - id_f).norm());
  unitary.record("unitary-coisometry",
                 (ind.u.compose(ind.u.adjoint()) - id_t).norm());

  std::vector<Certificate> certs{
      instancing::renamed(ind.source_dilation.cert, "source-ksgns"),
      instancing::renamed(ind.dilation.cert, "induced-ksgns"), unitary,
      verify_sme_witness(ind.witness, ins.tt),
      instancing::renamed(
          verify_cp_sme(ind.phi, *psi, *y, ind.witness.maps, ins.tt),
          "cp-sme")};
  json results{{"cp_map", mname},
               {"bimodule", bname},
               {"induced_space_dim", ind.phi.space->complex_dim()},
               {"source_dilation_dim", ind.source_dilation.module()->complex_dim()},
               {"induced_dilation_dim", ind.dilation.module()->complex_dim()}};
  json report =
      report_envelope("induce", ins.tt, nullptr, std::move(results), certs);
  const bool ok = report.at("passed").get<bool>();
  return {std::move(report), ok};
}

inline RunOutcome run_transfer(const Instance& ins, const CommandOptions& opt) {
  auto [mname, psi] =
      instancing::pick(ins.cp_maps, opt.map, ins.plan, "map", "cp map");
  auto [yname, y] =
      instancing::pick(ins.bimodules, opt.bimodule, ins.plan, "bimodule",
                       "bimodule");
  auto [zname, z] =
      instancing::pick(ins.bimodules, opt.second, ins.plan, "second",
                       "bimodule");

  std::vector<Certificate> certs;
  json results{{"cp_map", mname}, {"bimodule", yname}, {"second", zname}};
  if (opt.roundtrip) {
    auto rt = transfer_roundtrip(*psi, *y, *z, ins.tt);
    certs = {instancing::renamed(rt.forward.cert, "forward-transfer"),
             instancing::renamed(rt.back.cert, "back-transfer"),
             instancing::renamed(rt.cert, "roundtrip-witness")};
    results["transferred_space_dim"] =
        rt.forward.tensored.space.module()->complex_dim();
    results["returned_space_dim"] =
        rt.back.tensored.space.module()->complex_dim();
  } else {
    auto tr = transfer_cp_class(*psi, *y, *z, ins.tt);
    certs = {tr.cert};
    results["transferred_space_dim"] = tr.tensored.space.module()->complex_dim();
  }
  json report =
      report_envelope("transfer", ins.tt, nullptr, std::move(results), certs);
  const bool ok = report.at("passed").get<bool>();
  return {std::move(report), ok};
}

inline RunOutcome run_verify_sme(const Instance& ins,
                                 const CommandOptions& opt) {
  auto [name, w] =
      instancing::pick(ins.witnesses, opt.witness, ins.plan, "witness",
                       "witness");
  auto cert = verify_sme_witness(*w, ins.tt);
  json results{{"witness", name},
               {"space_dim", w->rep1.space->complex_dim()},
               {"partner_space_dim", w->rep2.space->complex_dim()}};
  json report = report_envelope("verify-sme", ins.tt, nullptr,
                                std::move(results), {cert});
  return {std::move(report), cert.passed()};
}

inline RunOutcome run_verify_cp_sme(const Instance& ins,
                                    const CommandOptions& opt) {
  auto [pname, phi] =
      instancing::pick(ins.cp_maps, opt.phi, ins.plan, "phi", "cp map");
  auto [qname, psi] =
      instancing::pick(ins.cp_maps, opt.psi, ins.plan, "psi", "cp map");
  auto [wname, w] =
      instancing::pick(ins.witnesses, opt.witness, ins.plan, "witness",
                       "witness");
  auto cert = instancing::renamed(
      verify_cp_sme(*phi, *psi, w->bimodule, w->maps, ins.tt), "cp-sme");
  json results{{"phi", pname}, {"psi", qname}, {"witness", wname}};
  json report = report_envelope("verify-cp-sme", ins.tt, nullptr,
                                std::move(results), {cert});
  return {std::move(report), cert.passed()};
}

inline RunOutcome run_gns_sme(const Instance& ins, const CommandOptions& opt) {
  auto [mname, psi] =
      instancing::pick(ins.cp_maps, opt.map, ins.plan, "map", "cp map");
  auto [bname, y] =
      instancing::pick(ins.bimodules, opt.bimodule, ins.plan, "bimodule",
                       "bimodule");
  auto pipe = example_gns5(*psi, *y, ins.tt);
  json results{{"cp_map", mname},
               {"bimodule", bname},
               {"tensor_dim", pipe.equivalence.source()->complex_dim()},
               {"induced_dim", pipe.equivalence.target()->complex_dim()}};
  json report = report_envelope("gns-sme", ins.tt, nullptr, std::move(results),
                                {pipe.cert});
  return {std::move(report), pipe.cert.passed()};
}

/// The worked pipeline instance: matrices act on their column space,
/// and the identity map of the scalars is induced across it.
inline RunOutcome run_example_gns5(const Tolerances& tt) {
  auto b = make_algebra({1});
  auto f = free_module(b, 1);
  auto psi = make_cp_map(b, f, {identity_map(f)}, tt);
  auto y = matrix_column_bimodule(b, 2, tt);
  std::vector<ModuleElement> columns;
  for (int j = 0; j < 2; ++j)
    columns.push_back(column_generator(y->carrier(), j));
  auto pipe = example_gns5(psi, y, columns, tt);
  json results{{"description",
                "identity of the scalars induced across the column bimodule "
                "of the 2x2 matrices"},
               {"tensor_dim", pipe.equivalence.source()->complex_dim()},
               {"induced_dim", pipe.equivalence.target()->complex_dim()}};
  json report = report_envelope("example-gns5", tt, nullptr,
                                std::move(results), {pipe.cert});
  return {std::move(report), pipe.cert.passed()};
}

/// One sweep instance: a seeded CP map, its dilation, and the induction
/// across a seeded equivalence bimodule, all certified.
inline json sweep_instance(std::uint64_t seed, int index, const Tolerances& tt,
                           const GenCaps& caps) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull +
                      static_cast<std::uint64_t>(index) + 1);
  static const std::vector<std::vector<int>> source_pool{
      {1}, {2}, {1, 1}, {2, 1}};
  static const std::vector<std::vector<int>> base_pool{{1}, {2}, {1, 1}};
  const auto d_dims = source_pool[rng() % source_pool.size()];
  const auto b_dims = base_pool[rng() % base_pool.size()];
  const int f_rank = genutil::uniform_int(1, 2, rng);
  const int y_rank = genutil::uniform_int(1, 2, rng);

  auto psi = gen_cp_map(d_dims, b_dims, f_rank, rng, caps, tt);
  auto y = gen_bimodule(d_dims, y_rank, rng, caps, tt);
  auto ind = induce_cp_map(psi, y, left_basis(y, tt), tt);

  std::vector<Certificate> certs{
      verify_cp_map(psi, tt),
      instancing::renamed(ind.source_dilation.cert, "ksgns"),
      instancing::renamed(ind.dilation.cert, "induced-ksgns"),
      verify_sme_witness(ind.witness, tt),
      instancing::renamed(
          verify_cp_sme(ind.phi, psi, y, ind.witness.maps, tt), "cp-sme")};

  json certificates = json::array();
  bool passed = true;
  for (const auto& c : certs) {
    certificates.push_back(to_json(c));
    passed = passed && c.passed();
  }
  return json{{"index", index},
              {"source_blocks", d_dims},
              {"base_blocks", b_dims},
              {"space_rank", f_rank},
              {"bimodule_rank", y_rank},
              {"dilation_dim", ind.source_dilation.module()->complex_dim()},
              {"certificates", std::move(certificates)},
              {"passed", passed}};
}

inline RunOutcome run_sweep(std::uint64_t seed, int count, const Tolerances& tt,
                            const GenCaps& caps = {}) {
  require(count >= 1, "invalid-shape", "sweep count must be positive");
  json instances = json::array();
  bool passed = true;
  for (int i = 0; i < count; ++i) {
    json one = sweep_instance(seed, i, tt, caps);
    passed = passed && one.at("passed").get<bool>();
    instances.push_back(std::move(one));
  }
  json results{{"count", count}, {"instances", std::move(instances)}};
  json report = report_envelope("sweep", tt, seed, std::move(results), {},
                                passed);
  return {std::move(report), passed};
}

/// Emits a random instance document that load_instance accepts back.
inline json gen_instance(const std::string& kind, const std::vector<int>& dims,
                         const std::vector<int>& base, int rank, int columns,
                         std::uint64_t seed, const GenCaps& caps = {},
                         const Tolerances& tt = {}) {
  std::mt19937_64 rng(seed);
  if (kind == "cp-map") {
    auto psi = gen_cp_map(dims, base, rank, rng, caps, tt);
    json table = json::array();
    for (const auto& m : psi.table) table.push_back(to_json(m));
    return json{
        {"seed", seed},
        {"algebras",
         {{"B", to_json(psi.space->base())}, {"D", to_json(psi.source)}}},
        {"modules",
         {{"F", json{{"base", "B"}, {"free_rank", psi.space->ambient_rank()}}}}},
        {"cp_maps",
         {{"psi", json{{"source", "D"}, {"space", "F"}, {"table", table}}}}},
        {"plan", {{"map", "psi"}, {"psi", "psi"}}}};
  }
  if (kind == "bimodule") {
    auto y = gen_bimodule(dims, columns, rng, caps, tt);
    json action = json::array();
    for (const auto& m : y->action_table()) action.push_back(to_json(m));
    return json{
        {"seed", seed},
        {"algebras",
         {{"B", to_json(y->right())}, {"C", to_json(y->left())}}},
        {"modules", {{"Y_carrier", to_json(y->carrier(), "B")}}},
        {"bimodules",
         {{"Y", json{{"kind", "explicit"},
                     {"left", "C"},
                     {"carrier", "Y_carrier"},
                     {"action", action}}}}},
        {"plan", {{"bimodule", "Y"}}}};
  }
  throw Error("parse", "unknown generator kind '" + kind +
                           "' (expected cp-map or bimodule)");
}

}  // namespace morita
