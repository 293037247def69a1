// Command-line front end: loads instance files, runs the toolkit's
// constructions and verifiers, and prints certificate reports as JSON.
// Exit code 0 means every certificate passed, 1 means some certificate
// failed, 2 means the run could not complete.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "morita/instance.hpp"

namespace {

using morita::json;

void emit(const json& doc, const std::string& out_path) {
  const std::string text = doc.dump(2) + "\n";
  std::cout << text;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out.good())
      throw morita::Error("io", "cannot write '" + out_path + "'");
    out << text;
  }
}

json error_json(const morita::Error& e) {
  const std::string message = std::string(e.what()).substr(e.kind().size() + 2);
  json err{{"kind", e.kind()}, {"message", message}};
  if (e.has_certificate())
    err["certificate"] = morita::to_json(e.certificate());
  return json{{"error", std::move(err)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-dimensional strong Morita equivalence toolkit"};
  app.require_subcommand(1);

  double tol = 1e-9;
  double rank_cutoff = 1e-10;
  std::uint64_t seed = 0;
  std::string out_path;
  bool timings = false;
  app.add_option("--tol", tol, "residual tolerance")
      ->envname("MORITA_TOL")
      ->capture_default_str();
  app.add_option("--rank-cutoff", rank_cutoff,
                 "singular value cutoff for rank decisions")
      ->envname("MORITA_RANK_CUTOFF")
      ->capture_default_str();
  app.add_option("--seed", seed, "random seed for sweep and gen")
      ->envname("MORITA_SEED")
      ->capture_default_str();
  app.add_option("--out", out_path, "also write the report to this path")
      ->envname("MORITA_OUT");
  app.add_flag("--timings", timings, "append wall-clock timings to the report")
      ->envname("MORITA_TIMINGS");

  std::string instance_path;
  morita::CommandOptions opt;
  int count = 20;
  std::string gen_kind;
  std::vector<int> gen_dims{2};
  std::vector<int> gen_base{1};
  int gen_rank = 1;
  int gen_columns = 2;

  auto add_instance_arg = [&](CLI::App* sub) {
    sub->add_option("instance", instance_path, "instance file (JSON)")
        ->required();
    sub->fallthrough();
  };

  auto* c_ksgns = app.add_subcommand("ksgns", "dilate a CP map");
  add_instance_arg(c_ksgns);
  c_ksgns->add_option("--map", opt.map, "CP map to dilate");

  auto* c_induce =
      app.add_subcommand("induce", "induce a CP map across a bimodule");
  add_instance_arg(c_induce);
  c_induce->add_option("--map", opt.map, "CP map to induce");
  c_induce->add_option("--bimodule", opt.bimodule, "equivalence bimodule");

  auto* c_transfer = app.add_subcommand(
      "transfer", "move a CP map across two bimodules (base change)");
  add_instance_arg(c_transfer);
  c_transfer->add_option("--map", opt.map, "CP map to transfer");
  c_transfer->add_option("--bimodule", opt.bimodule, "first bimodule");
  c_transfer->add_option("--second", opt.second, "second bimodule");
  c_transfer->add_flag("--roundtrip", opt.roundtrip,
                       "also transfer back and certify the roundtrip");

  auto* c_vsme =
      app.add_subcommand("verify-sme", "check a strong Morita witness");
  add_instance_arg(c_vsme);
  c_vsme->add_option("--witness", opt.witness, "witness to verify");

  auto* c_vcpsme = app.add_subcommand(
      "verify-cp-sme", "check that a witness links two CP maps' dilations");
  add_instance_arg(c_vcpsme);
  c_vcpsme->add_option("--phi", opt.phi, "first CP map");
  c_vcpsme->add_option("--psi", opt.psi, "second CP map");
  c_vcpsme->add_option("--witness", opt.witness, "witness to verify");

  auto* c_gns = app.add_subcommand(
      "gns-sme", "certify strong Morita equivalence of GNS correspondences");
  add_instance_arg(c_gns);
  c_gns->add_option("--map", opt.map, "algebra-valued CP map");
  c_gns->add_option("--bimodule", opt.bimodule, "equivalence bimodule");

  auto* c_example = app.add_subcommand(
      "example-gns5", "run the built-in worked pipeline instance");
  c_example->fallthrough();

  auto* c_sweep = app.add_subcommand(
      "sweep", "generate and certify seeded random instances");
  c_sweep->add_option("--count", count, "number of instances")
      ->capture_default_str();
  c_sweep->fallthrough();

  auto* c_gen =
      app.add_subcommand("gen", "emit a seeded random instance file");
  c_gen->add_option("--kind", gen_kind, "cp-map or bimodule")->required();
  c_gen->add_option("--dims", gen_dims,
                    "source algebra blocks (cp-map) or base blocks (bimodule)")
      ->delimiter(',')
      ->capture_default_str();
  c_gen->add_option("--base", gen_base, "base algebra blocks for cp-map")
      ->delimiter(',')
      ->capture_default_str();
  c_gen->add_option("--rank", gen_rank, "free module rank for cp-map")
      ->capture_default_str();
  c_gen->add_option("--columns", gen_columns, "ambient rank for bimodule")
      ->capture_default_str();
  c_gen->fallthrough();

  CLI11_PARSE(app, argc, argv);

  morita::Tolerances tt;
  tt.tol = tol;
  tt.rank_cutoff = rank_cutoff;

  try {
    const auto start = std::chrono::steady_clock::now();
    morita::RunOutcome outcome;
    if (app.got_subcommand(c_example)) {
      outcome = morita::run_example_gns5(tt);
    } else if (app.got_subcommand(c_sweep)) {
      outcome = morita::run_sweep(seed, count, tt);
    } else if (app.got_subcommand(c_gen)) {
      outcome.report = morita::gen_instance(gen_kind, gen_dims, gen_base,
                                            gen_rank, gen_columns, seed, {}, tt);
      outcome.passed = true;
    } else {
      auto ins = morita::load_instance(instance_path, tt);
      if (app.got_subcommand(c_ksgns))
        outcome = morita::run_ksgns(ins, opt);
      else if (app.got_subcommand(c_induce))
        outcome = morita::run_induce(ins, opt);
      else if (app.got_subcommand(c_transfer))
        outcome = morita::run_transfer(ins, opt);
      else if (app.got_subcommand(c_vsme))
        outcome = morita::run_verify_sme(ins, opt);
      else if (app.got_subcommand(c_vcpsme))
        outcome = morita::run_verify_cp_sme(ins, opt);
      else
        outcome = morita::run_gns_sme(ins, opt);
    }
    if (timings) {
      const auto stop = std::chrono::steady_clock::now();
      outcome.report["timings"] = json{
          {"wall_ms",
           std::chrono::duration<double, std::milli>(stop - start).count()}};
    }
    emit(outcome.report, out_path);
    return outcome.passed ? 0 : 1;
  } catch (const morita::Error& e) {
    emit(error_json(e), out_path);
    std::cerr << "morita: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    emit(json{{"error", {{"kind", "internal"}, {"message", e.what()}}}},
         out_path);
    std::cerr << "morita: " << e.what() << "\n";
    return 2;
  }
}
