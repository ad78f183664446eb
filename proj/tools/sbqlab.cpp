#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sbq/io.hpp"
#include "sbq/protocol.hpp"

extern "C" void openblas_set_num_threads(int);

namespace {

using namespace sbq;

std::vector<double> parse_list(const std::string& csv, const char* what,
                               size_t expect = 0) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError(std::string(what) + ": bad number '" + item + "'");
    }
  }
  if (expect != 0 && out.size() != expect)
    throw CLI::ValidationError(std::string(what) + ": expected " +
                               std::to_string(expect) + " comma-separated values");
  return out;
}

HermitianOperator build_named(const ProtocolConfig& cfg, const ReducedBasis& basis,
                              const std::string& which) {
  ModelParameters mp;
  mp.n_sites = cfg.n_sites;
  mp.alpha = cfg.alpha;
  mp.j = cfg.j;
  mp.epsilon = cfg.epsilon;
  if (which == "tfim" || which == "h2") {
    mp.h = which == "h2" ? cfg.h2 : cfg.h3;
    return build_tfim(basis, mp, cfg.dense_threshold);
  }
  if (which == "h3" || which == "perturbed") {
    mp.h = cfg.h3;
    return build_perturbed(basis, mp, cfg.dense_threshold);
  }
  if (which == "m") return build_magnetization(basis, cfg.dense_threshold);
  if (which == "m_scaled") return build_scaled_m(basis, cfg.dense_threshold);
  if (which == "pi") return build_parity(basis);
  if (which == "c") return sign_star(build_magnetization(basis, cfg.dense_threshold));
  if (which == "k") {
    auto c = sign_star(build_magnetization(basis, cfg.dense_threshold));
    return build_K(c, build_parity(basis));
  }
  if (which == "w") return build_W(basis);
  throw CLI::ValidationError("unknown operator '" + which + "'");
}

struct ChainGgeOps {
  ReducedBasis basis;
  HermitianOperator h;
  HermitianOperator c;
  HermitianOperator pi;
  HermitianOperator m;
  XPolarizedPair xpair;
};

ChainGgeOps chain_gge_ops(const ProtocolConfig& cfg) {
  ReducedBasis basis =
      ReducedBasis::enumerate_sector(cfg.n_sites, ParitySector::Both);
  ModelParameters mp;
  mp.n_sites = cfg.n_sites;
  mp.alpha = cfg.alpha;
  mp.j = cfg.j;
  mp.h = cfg.h3;
  mp.epsilon = cfg.epsilon;
  HermitianOperator h = build_perturbed(basis, mp, cfg.dense_threshold);
  HermitianOperator m = build_magnetization(basis, cfg.dense_threshold);
  HermitianOperator c = sign_star(m);
  HermitianOperator pi = build_parity(basis);
  XPolarizedPair xp = x_polarized_states(basis);
  return {std::move(basis), std::move(h), std::move(c),
          std::move(pi),    std::move(m), std::move(xp)};
}

int run(int argc, char** argv) {
  CLI::App app{"simulation laboratory for symmetry-breaking equilibrium states"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  int threads = 1;
  unsigned seed = 0;
  app.add_option("--config", config_path, "path to a key=value run configuration");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "BLAS/Eigen thread count");
  app.add_option("--seed", seed, "seed echoed to manifests (randomized tests only)");

  auto load_config = [&]() {
    if (config_path.empty())
      throw CLI::ValidationError("--config is required for this subcommand");
    return parse_config(config_path);
  };

  // basis
  auto* cmd_basis = app.add_subcommand("basis", "symmetry-reduced sector summary");
  int basis_n = 19;
  std::string basis_parity = "both";
  int basis_list = 0;
  cmd_basis->add_option("-n,--n-sites", basis_n, "chain length");
  cmd_basis->add_option("--parity", basis_parity, "+, - or both");
  cmd_basis->add_option("--list", basis_list, "print the first k representatives");

  // operator / spectrum
  auto* cmd_op = app.add_subcommand("operator", "operator summary in the reduced sector");
  auto* cmd_spec = app.add_subcommand("spectrum", "eigenvalues of a named operator");
  std::string which = "tfim";
  int lowest = 10;
  for (auto* c : {cmd_op, cmd_spec})
    c->add_option("--which", which,
                  "tfim|h2|h3|perturbed|m|m_scaled|pi|c|k|w");
  cmd_spec->add_option("--lowest", lowest, "how many eigenvalues to print (0: all to CSV)");

  auto* cmd_protocol =
      app.add_subcommand("protocol", "ramp preparation, charges vs relaxation time");
  auto* cmd_quench = app.add_subcommand("quench", "doublet superposition quench");
  auto* cmd_sweep = app.add_subcommand("sweep", "quench for several symmetry-breaking strengths");
  std::string epsilons_csv = "1e-2,-1e-3,1e-4";
  cmd_sweep->add_option("--epsilons", epsilons_csv, "comma-separated epsilon list");

  auto* cmd_fit = app.add_subcommand("gge-fit", "multipliers from charge/energy targets");
  std::string targets_csv;
  cmd_fit->add_option("--targets", targets_csv, "pi,c,k,E")->required();

  auto* cmd_predict = app.add_subcommand("gge-predict", "ensemble expectation value");
  std::string params_csv, observable = "m";
  cmd_predict->add_option("--params", params_csv, "beta,lambda_pi,lambda_c,lambda_k")
      ->required();
  cmd_predict->add_option("--observable", observable, "m|W|C|K|Pi|E");

  auto* cmd_dist = app.add_subcommand("distribution", "magnetization histogram of the quench");

  CLI11_PARSE(app, argc, argv);

  openblas_set_num_threads(threads);
  Eigen::setNbThreads(threads);

  if (cmd_basis->parsed()) {
    ParitySector sector = basis_parity == "+"   ? ParitySector::Plus
                          : basis_parity == "-" ? ParitySector::Minus
                                                : ParitySector::Both;
    const ReducedBasis b = ReducedBasis::enumerate_sector(basis_n, sector);
    std::cout << "tag " << b.tag() << "\n";
    std::cout << "dimension " << b.dimension() << "\n";
    std::cout << "n_plus " << b.n_plus() << "\n";
    for (int i = 0; i < std::min(basis_list, b.dimension()); ++i)
      std::cout << i << " rep=" << b.rep_bits(i) << " orbit=" << b.orbit_size(i)
                << " parity=" << b.parity(i) << "\n";
    return 0;
  }

  if (cmd_op->parsed() || cmd_spec->parsed()) {
    const ProtocolConfig cfg = load_config();
    const ReducedBasis basis =
        ReducedBasis::enumerate_sector(cfg.n_sites, ParitySector::Both);
    const HermitianOperator op = build_named(cfg, basis, which);
    if (cmd_op->parsed()) {
      std::cout << "label " << op.label() << "\n";
      std::cout << "basis " << op.basis_tag() << "\n";
      std::cout << "dim " << op.dim() << "\n";
      std::cout << "storage "
                << (op.is_sparse() ? "sparse"
                                   : op.is_dense_real() ? "dense-real"
                                                        : "dense-complex")
                << "\n";
      std::cout << "frobenius " << format_number(op.frobenius_norm()) << "\n";
      std::cout << "spectral_bound " << format_number(op.spectral_bound()) << "\n";
      return 0;
    }
    const EigenSystem es = EigenSystem::diagonalize(op);
    if (lowest > 0) {
      for (int i = 0; i < std::min(lowest, es.dim()); ++i)
        std::cout << format_number(es.eigenvalues()[i]) << "\n";
      return 0;
    }
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/spectrum.csv";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "index,eigenvalue\n";
    for (int i = 0; i < es.dim(); ++i)
      out << i << ',' << format_number(es.eigenvalues()[i]) << '\n';
    std::cout << path << "\n";
    return 0;
  }

  if (cmd_protocol->parsed()) {
    ProtocolConfig cfg = load_config();
    const ExperimentResult r = run_preparation(cfg);
    for (const auto& p : emit_results(r, cfg, out_dir)) std::cout << p << "\n";
    return 0;
  }

  if (cmd_quench->parsed()) {
    ProtocolConfig cfg = load_config();
    const ExperimentResult r = run_quench(cfg);
    for (const auto& p : emit_results(r, cfg, out_dir)) std::cout << p << "\n";
    return 0;
  }

  if (cmd_sweep->parsed()) {
    ProtocolConfig cfg = load_config();
    const std::vector<double> eps = parse_list(epsilons_csv, "--epsilons");
    const auto results = run_perturbation_sweep(cfg, eps);
    for (size_t i = 0; i < results.size(); ++i) {
      ProtocolConfig run = cfg;
      run.epsilon = eps[i];
      const std::string dir = out_dir + "/eps_" + std::to_string(i);
      for (const auto& p : emit_results(results[i], run, dir)) std::cout << p << "\n";
    }
    return 0;
  }

  if (cmd_fit->parsed()) {
    const ProtocolConfig cfg = load_config();
    const std::vector<double> t = parse_list(targets_csv, "--targets", 4);
    ChargeTargets targets{t[0], t[1], t[2], t[3]};
    GgeParameters params = solve_multipliers(targets, cfg.delta);
    const ChainGgeOps ops = chain_gge_ops(cfg);
    BetaFitOptions opts;
    opts.in_place_cutoff = cfg.in_place_cutoff;
    const BetaFitResult fit =
        fit_beta(ops.h, ops.c, ops.pi, params, targets.energy_target, opts);
    params.beta = fit.beta;
    const GgePrediction pred = gge_predict(ops.h, ops.c, ops.pi, ops.m,
                                           ops.xpair, params,
                                           cfg.epsilon == 0.0, opts);
    ExperimentResult r;
    r.gge = pred;
    r.targets = targets;
    std::cout << gge_json(r);
    return 0;
  }

  if (cmd_predict->parsed()) {
    const ProtocolConfig cfg = load_config();
    const std::vector<double> pv = parse_list(params_csv, "--params", 4);
    GgeParameters params;
    params.beta = pv[0];
    params.lambda_pi = pv[1];
    params.lambda_c = pv[2];
    params.lambda_k = pv[3];
    params.delta = cfg.delta;
    const ChainGgeOps ops = chain_gge_ops(cfg);
    BetaFitOptions opts;
    opts.in_place_cutoff = cfg.in_place_cutoff;
    const GgePrediction pred = gge_predict(ops.h, ops.c, ops.pi, ops.m,
                                           ops.xpair, params,
                                           cfg.epsilon == 0.0, opts);
    double value = 0.0;
    if (observable == "m") value = pred.m / cfg.n_sites;
    else if (observable == "M") value = pred.m;
    else if (observable == "W") value = pred.w;
    else if (observable == "C") value = pred.c;
    else if (observable == "K") value = pred.k;
    else if (observable == "Pi") value = pred.pi;
    else if (observable == "E") value = pred.energy;
    else throw CLI::ValidationError("unknown observable '" + observable + "'");
    std::cout << format_number(value) << "\n";
    return 0;
  }

  if (cmd_dist->parsed()) {
    ProtocolConfig cfg = load_config();
    const ChainWorkspace ws = make_chain_workspace(cfg);
    ModelParameters mp;
    mp.n_sites = cfg.n_sites;
    mp.alpha = cfg.alpha;
    mp.j = cfg.j;
    mp.h = cfg.h3;
    mp.epsilon = cfg.epsilon;
    const HermitianOperator h3 = build_perturbed(ws.basis, mp, cfg.dense_threshold);
    const EigenSystem es3 =
        cfg.epsilon == 0.0
            ? EigenSystem::diagonalize_blocked(h3, ws.basis)
            : EigenSystem::diagonalize(h3, ws.basis.dimension() > cfg.in_place_cutoff);
    std::vector<double> grid(cfg.n_samples);
    for (int i = 0; i < cfg.n_samples; ++i)
      grid[i] = cfg.n_samples <= 1 ? 0.0 : cfg.t_max * i / (cfg.n_samples - 1);
    const MagnetizationHistogram hist =
        magnetization_distribution(es3, ws.m_eigensystem, ws.psi0, grid);
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/hist.csv";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << histogram_csv(hist);
    std::cout << path << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
