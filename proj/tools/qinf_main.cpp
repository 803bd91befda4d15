// qinf: compile quantum causal structures into inflation-hierarchy SDPs,
// certify observed distributions against them, and drive the finite-model
// oracle. Exit codes: 0 notRejected, 2 rejected, 3 inconclusive, 1 error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qinf/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qinf::Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  if (fs::path(path).has_parent_path())
    fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qinf::Error("cannot write " + path);
  out << content;
}

struct CommonArgs {
  std::string scenario, dist, out_dir = ".";
  qinf::RunConfig config;
  std::string mode = "quadraticEpigraph";
  std::vector<std::string> profile;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_scenario = true) {
  auto* s = cmd->add_option("--scenario", a.scenario, "scenario document (JSON)");
  if (needs_scenario) s->required();
  cmd->add_option("--dist", a.dist, "distribution document (JSON)");
  cmd->add_option("-n", a.config.n, "inflation level");
  cmd->add_option("-k", a.config.k, "NPO level");
  cmd->add_option("-r", a.config.r, "Schmidt rank bound");
  cmd->add_option("-C", a.config.norm_bound, "generator norm bound");
  cmd->add_option("--eps", a.config.epsilon, "rejection threshold");
  cmd->add_option("--mode", a.mode,
                  "polarizedObjective | linearConstraints | quadraticEpigraph");
  cmd->add_option("--profile", a.profile,
                  "flags: nonhermitian, legacyProjective, legacyMarginals, "
                  "realMoments");
  cmd->add_option("--tol", a.config.tol, "solver tolerance");
  cmd->add_option("--time-limit", a.config.time_limit_seconds, "seconds");
  cmd->add_option("--max-vars", a.config.max_variables, "variable guard");
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--seed", a.config.seed, "random seed");
}

void finish_config(CommonArgs& a) {
  if (a.mode == "polarizedObjective")
    a.config.mode = qinf::ConstraintMode::PolarizedObjective;
  else if (a.mode == "linearConstraints")
    a.config.mode = qinf::ConstraintMode::LinearConstraints;
  else if (a.mode == "quadraticEpigraph")
    a.config.mode = qinf::ConstraintMode::QuadraticEpigraph;
  else
    throw qinf::Error("unknown mode: " + a.mode);
  for (const auto& f : a.profile) {
    if (f == "nonhermitian")
      a.config.hermitian_generators = false;
    else if (f == "hermitian")
      a.config.hermitian_generators = true;
    else if (f == "legacyProjective")
      a.config.legacy_projective = true;
    else if (f == "legacyMarginals")
      a.config.legacy_marginals = true;
    else if (f == "realMoments")
      a.config.real_moments = true;
    else
      throw qinf::Error("unknown profile flag: " + f);
  }
}

qinf::Compilation compile_from_args(CommonArgs& a) {
  finish_config(a);
  std::string scenario_text = read_file(a.scenario);
  std::string dist_text = a.dist.empty() ? "" : read_file(a.dist);
  if (!a.dist.empty() || a.config.mode == qinf::ConstraintMode::LinearConstraints ||
      !dist_text.empty()) {
    if (dist_text.empty())
      throw qinf::Error("mode requires a distribution (--dist)");
  }
  return qinf::compile(a.config, scenario_text, dist_text);
}

int cmd_compile(CommonArgs& a) {
  qinf::Compilation comp = compile_from_args(a);
  write_file(a.out_dir + "/problem.sdpa", qinf::export_sdpa(comp.problem.sdp));
  write_file(a.out_dir + "/report.json",
             qinf::report_to_json(a.config, comp, nullptr));
  std::cout << "compiled: " << comp.stats.sdp_variables << " variables, blocks [";
  for (std::size_t i = 0; i < comp.stats.block_dims.size(); ++i)
    std::cout << (i ? " " : "") << comp.stats.block_dims[i];
  std::cout << "] -> " << a.out_dir << "/problem.sdpa\n";
  return 0;
}

int cmd_certify(CommonArgs& a) {
  qinf::Compilation comp = compile_from_args(a);
  if (!comp.target) throw qinf::Error("certify requires a distribution (--dist)");
  qinf::CertifyOutcome outcome = qinf::run_solve(a.config, comp);
  write_file(a.out_dir + "/problem.sdpa", qinf::export_sdpa(comp.problem.sdp));
  write_file(a.out_dir + "/report.json",
             qinf::report_to_json(a.config, comp, &outcome));
  std::cout << "status: " << qinf::to_string(outcome.result.status);
  if (outcome.result.status == qinf::SolveStatus::Optimal ||
      outcome.result.status == qinf::SolveStatus::Inaccurate)
    std::cout << ", value: " << outcome.result.value;
  std::cout << ", decision: " << qinf::to_string(outcome.decision) << "\n";
  switch (outcome.decision) {
    case qinf::Decision::NotRejected: return 0;
    case qinf::Decision::Rejected: return 2;
    case qinf::Decision::Inconclusive: return 3;
  }
  return 1;
}

int cmd_transform(CommonArgs& a) {
  finish_config(a);
  qinf::CausalStructure s = qinf::parse_structure(read_file(a.scenario));
  qinf::TransformReport report;
  qinf::ScenarioClass cls = qinf::classify(s);
  if (cls == qinf::ScenarioClass::NonExogenous) {
    auto [exo, rep] = qinf::exogenize(s);
    s = exo;
    report = rep;
  }
  if (qinf::classify(s) == qinf::ScenarioClass::LatentExogenous) {
    auto [net, rep] = qinf::interrupt(s);
    s = net;
    for (const auto& ps : rep.post_selection) report.post_selection.push_back(ps);
    for (const auto& g : rep.setting_factorization)
      report.setting_factorization.push_back(g);
  }
  ordered_json j;
  j["class"] = qinf::to_string(cls);
  j["structure"] = ordered_json::parse(qinf::structure_to_json(s));
  j["postSelection"] = ordered_json::array();
  for (const auto& ps : report.post_selection)
    j["postSelection"].push_back({{"original", ps.original}, {"copy", ps.copy}});
  j["settingFactorization"] = report.setting_factorization;
  write_file(a.out_dir + "/network.json", j.dump(2) + "\n");
  std::cout << qinf::to_string(cls) << " -> network (" << a.out_dir
            << "/network.json)\n";
  return 0;
}

int cmd_oracle_sample(CommonArgs& a, int dim, bool magic, int magic_copies) {
  finish_config(a);
  qinf::FiniteModel model;
  qinf::DistributionTable dist;
  if (magic) {
    model = qinf::magic_basis_model(magic_copies);
    dist = qinf::model_distribution(model);
  } else {
    qinf::NetworkScenario net =
        qinf::to_network(qinf::parse_structure(read_file(a.scenario)));
    std::vector<int> dims(net.sources.size(), dim);
    auto [m, d] = qinf::sample_model(net, dims, a.config.r, a.config.seed);
    model = std::move(m);
    dist = std::move(d);
  }
  write_file(a.out_dir + "/model.json", qinf::model_to_json(model));
  write_file(a.out_dir + "/dist.json", qinf::distribution_to_json(dist));
  std::cout << "model C=" << model.norm_bound << " -> " << a.out_dir
            << "/model.json, dist.json\n";
  return 0;
}

int cmd_oracle_moments(const std::string& model_path, const std::string& words_path,
                       const std::string& out_dir, int n) {
  qinf::FiniteModel model = qinf::model_from_json(read_file(model_path));
  qinf::AlgebraParams ap;
  ap.n = n;
  for (const auto& [k, v] : model.ops) ap.r = std::max(ap.r, k.alpha);
  qinf::Alphabet alph(model.net, ap);
  std::vector<qinf::Word> words;
  ordered_json desc = ordered_json::array();
  if (!words_path.empty()) {
    ordered_json jw = ordered_json::parse(read_file(words_path));
    for (const auto& wj : jw) {
      qinf::Word w;
      for (const auto& lj : wj) {
        qinf::Letter l;
        l.party = lj.value("party", 0);
        l.slot = lj.value("slot", 0);
        l.outcome = lj.value("outcome", 1);
        l.alpha = lj.value("alpha", 1);
        l.setting = lj.value("setting", 1);
        for (const auto& ci : lj.value("copies", std::vector<int>{1}))
          l.copies.v[l.copies.arity++] = static_cast<std::uint8_t>(ci);
        w.push_back(alph.id_of(l));
      }
      words.push_back(alph.canonicalize(w));
      desc.push_back(wj);
    }
  } else {
    words.push_back({});  // rho(identity)
    desc.push_back(ordered_json::array());
  }
  std::vector<qinf::cx> vals = qinf::eval_moments(model, alph, words);
  ordered_json out = ordered_json::array();
  for (std::size_t i = 0; i < vals.size(); ++i)
    out.push_back({{"word", desc[i]}, {"value", {vals[i].real(), vals[i].imag()}}});
  write_file(out_dir + "/moments.json", out.dump(2) + "\n");
  std::cout << "wrote " << vals.size() << " moments -> " << out_dir
            << "/moments.json\n";
  return 0;
}

qinf::Mat kron2(const qinf::Mat& a, const qinf::Mat& b) {
  qinf::Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

int cmd_oracle_truncate(const std::string& model_path, int party, int rank,
                        double delta, const std::string& out_dir) {
  qinf::FiniteModel model = qinf::model_from_json(read_file(model_path));
  qinf::require(party >= 0 && party < static_cast<int>(model.net.parties.size()),
                "party index out of range");
  const qinf::PartySpec& p = model.net.parties[party];
  qinf::require(p.slots.size() == 2, "truncation expects a two-slot party");
  qinf::AlgebraParams ap;
  ap.n = 1;
  for (const auto& [k, v] : model.ops) ap.r = std::max(ap.r, k.alpha);
  qinf::Alphabet alph(model.net, ap);

  int s0 = model.net.source_index(p.slots[0].sources[0]);
  int s1 = model.net.source_index(p.slots[1].sources[0]);
  int da = model.endpoint_dim(s0, party, 0, 0);
  int db = model.endpoint_dim(s1, party, 1, 0);

  // Materialize the POVM on the party's two local factors.
  std::vector<qinf::Mat> povm;
  for (int a = 1; a <= p.outcomes; ++a) {
    qinf::Mat e = qinf::Mat::Zero(da * db, da * db);
    qinf::Polynomial q = alph.povm_element(
        party, a, {qinf::InflationTuple::of({1}), qinf::InflationTuple::of({1})}, 1);
    for (const auto& [w, c] : q) {
      qinf::Mat term = qinf::Mat::Identity(da * db, da * db);
      for (auto id : w) {
        const qinf::Letter& l = alph.letter(id);
        qinf::Mat op = model.ops.at({l.party, l.slot, l.outcome, l.alpha, l.setting});
        qinf::Mat full = l.slot == 0 ? kron2(op, qinf::Mat::Identity(db, db))
                                     : kron2(qinf::Mat::Identity(da, da), op);
        term = term * full;
      }
      e += c * term;
    }
    povm.push_back(e);
  }
  std::vector<qinf::Mat> truncated =
      qinf::schmidt_truncate(povm, da, db, rank, delta);
  ordered_json j;
  j["party"] = p.id;
  j["rank"] = rank;
  j["delta"] = delta;
  double max_dev = 0;
  for (std::size_t a = 0; a < povm.size(); ++a)
    max_dev = std::max(max_dev, (truncated[a] - povm[a]).norm());
  j["maxElementDeviation"] = max_dev;
  write_file(out_dir + "/truncated.json", j.dump(2) + "\n");
  std::cout << "max element deviation " << max_dev << " -> " << out_dir
            << "/truncated.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank-constrained quantum inflation SDP compiler and solver"};
  app.require_subcommand(1);

  CommonArgs compile_args, certify_args, transform_args, sample_args;
  auto* compile_cmd = app.add_subcommand("compile", "emit SDPA problem + statistics");
  add_common(compile_cmd, compile_args);
  auto* certify_cmd =
      app.add_subcommand("certify", "compile, solve, and apply the rejection rule");
  add_common(certify_cmd, certify_args);
  auto* transform_cmd = app.add_subcommand(
      "transform", "rewrite a causal structure into a network scenario");
  add_common(transform_cmd, transform_args);

  auto* oracle_cmd = app.add_subcommand("oracle", "finite-model oracle tools");
  oracle_cmd->require_subcommand(1);
  auto* sample_cmd = oracle_cmd->add_subcommand("sample", "random feasible model");
  int sample_dim = 2, magic_copies = 2;
  bool magic = false;
  add_common(sample_cmd, sample_args, false);
  sample_cmd->add_option("--dim", sample_dim, "local dimension per source endpoint");
  sample_cmd->add_flag("--magic", magic, "build the magic-basis model instead");
  sample_cmd->add_option("--magic-copies", magic_copies, "copies for --magic");

  auto* moments_cmd = oracle_cmd->add_subcommand("moments", "evaluate word moments");
  std::string model_path, words_path, moments_out = ".";
  int moments_n = 1;
  moments_cmd->add_option("--model", model_path)->required();
  moments_cmd->add_option("--words", words_path);
  moments_cmd->add_option("--out", moments_out);
  moments_cmd->add_option("-n", moments_n, "inflation level of the words");

  auto* truncate_cmd =
      oracle_cmd->add_subcommand("truncate", "operator-Schmidt POVM truncation");
  std::string trunc_model, trunc_out = ".";
  int trunc_party = 0, trunc_rank = 1;
  double trunc_delta = 0.0;
  truncate_cmd->add_option("--model", trunc_model)->required();
  truncate_cmd->add_option("--party", trunc_party);
  truncate_cmd->add_option("--rank", trunc_rank);
  truncate_cmd->add_option("--delta", trunc_delta);
  truncate_cmd->add_option("--out", trunc_out);

  try {
    app.parse(argc, argv);
    if (compile_cmd->parsed()) return cmd_compile(compile_args);
    if (certify_cmd->parsed()) return cmd_certify(certify_args);
    if (transform_cmd->parsed()) return cmd_transform(transform_args);
    if (sample_cmd->parsed())
      return cmd_oracle_sample(sample_args, sample_dim, magic, magic_copies);
    if (moments_cmd->parsed())
      return cmd_oracle_moments(model_path, words_path, moments_out, moments_n);
    if (truncate_cmd->parsed())
      return cmd_oracle_truncate(trunc_model, trunc_party, trunc_rank, trunc_delta,
                                 trunc_out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
