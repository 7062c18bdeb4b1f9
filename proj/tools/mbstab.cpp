// Command-line front end: single-point computations, (R,Q) sweeps, per-mode
// simulation and the self-verification suite. Exit codes: 0 success, 1 error,
// 2 verification failure.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbstab/criteria.hpp"
#include "mbstab/growth.hpp"
#include "mbstab/report.hpp"
#include "mbstab/timedomain.hpp"
#include "mbstab/variational.hpp"
#include "mbstab/verification.hpp"

namespace {

struct CommonOpts {
  double Ra = 1707.8;  // Rayleigh number R^2; R = sqrt(Ra)
  double Q = 0.0;
  double P_theta = 1.0;
  double tau = 1.0;
  double L1 = 1.0;
  double L2 = 1.0;
  std::string bc = "rigid";
  int N = 64;
  double a_max = 8.0;
  std::string format = "text";
  std::string output;
};

// Reads a flat key=value file into command-line tokens ("--key", "value").
// Lines that are blank or start with '#' are skipped. Boolean keys take
// true/false.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line is not key=value: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (value == "true") {
      tokens.push_back("--" + key);
    } else if (value == "false") {
      // omitted flag stays at its default
    } else {
      tokens.push_back("--" + key);
      tokens.push_back(value);
    }
  }
  return tokens;
}

void add_param_flags(CLI::App* cmd, CommonOpts* o) {
  static std::string config_doc;  // value consumed before parsing; shown in help
  cmd->add_option("--config", config_doc, "flat key=value configuration file supplying defaults");
  cmd->add_option("--rayleigh", o->Ra, "Rayleigh number R^2")->check(CLI::PositiveNumber);
  cmd->add_option("--Q", o->Q, "Chandrasekhar number")->check(CLI::NonNegativeNumber);
  cmd->add_option("--P-theta", o->P_theta, "Prandtl number")->check(CLI::PositiveNumber);
  cmd->add_option("--tau", o->tau, "artificial-viscosity factor in (0,1]");
  cmd->add_option("--L1", o->L1, "horizontal period / 2 pi, direction 1")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--L2", o->L2, "horizontal period / 2 pi, direction 2")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--bc", o->bc, "boundary kind: rigid | stress-free");
  cmd->add_option("--N", o->N, "vertical elements")->check(CLI::Range(4, 4096));
  cmd->add_option("--a-max", o->a_max, "wavenumber magnitude cutoff")
      ->check(CLI::PositiveNumber);
}

void add_output_flags(CLI::App* cmd, CommonOpts* o) {
  cmd->add_option("--format", o->format, "output format: text | csv | json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  cmd->add_option("--output", o->output, "write to file instead of stdout");
}

mbstab::Params to_params(const CommonOpts& o) {
  mbstab::Params p;
  p.R = std::sqrt(o.Ra);
  p.Q = o.Q;
  p.P_theta = o.P_theta;
  p.tau = o.tau;
  p.L1 = o.L1;
  p.L2 = o.L2;
  p.bc = mbstab::parse_boundary_kind(o.bc);
  return mbstab::validate_params(p);
}

void deliver(const CommonOpts& o, const std::string& text) {
  if (o.output.empty())
    std::cout << text;
  else
    mbstab::write_file(o.output, text);
}

std::string g17(double x) { return mbstab::detail::fmt17(x); }

int default_workers() {
  if (const char* env = std::getenv("MBSTAB_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational stability toolkit for magnetic Rayleigh-Benard convection "
               "at zero resistivity"};
  app.require_subcommand(1);

  CommonOpts o;
  bool lattice = false;
  double a_lo = 0.3, a_hi = 12.0;
  double sim_a = 3.117, sim_dt = 1e-3, sim_t_end = 1.0;
  double g_Rs = 657.5, g_Qs = 0.0, g_Pm = 1.0;
  std::vector<double> sw_R, sw_Q;
  int workers = default_workers();

  auto* c_crit = app.add_subcommand("critical", "critical convection threshold R0 and a_c");
  add_param_flags(c_crit, &o);
  add_output_flags(c_crit, &o);
  c_crit->add_flag("--lattice", lattice, "search the periodic-domain lattice instead of a continuous bracket");
  c_crit->add_option("--a-lo", a_lo, "continuous bracket lower end");
  c_crit->add_option("--a-hi", a_hi, "continuous bracket upper end");

  auto* c_l0 = app.add_subcommand("lambda0", "largest inviscid growth functional Lambda0");
  add_param_flags(c_l0, &o);
  add_output_flags(c_l0, &o);

  auto* c_growth = app.add_subcommand("growth", "growth rate Lambda(tau) with bracketing bounds");
  add_param_flags(c_growth, &o);
  add_output_flags(c_growth, &o);

  auto* c_classify = app.add_subcommand("classify", "provable stability / instability verdict");
  add_param_flags(c_classify, &o);
  add_output_flags(c_classify, &o);

  auto* c_sweep = app.add_subcommand("sweep", "classify an (R^2, Q) grid");
  add_param_flags(c_sweep, &o);
  add_output_flags(c_sweep, &o);
  c_sweep->add_option("--rayleigh-values", sw_R, "grid of Rayleigh numbers R^2")->required();
  c_sweep->add_option("--Q-values", sw_Q, "grid of Chandrasekhar numbers")->required();
  c_sweep->add_option("--workers", workers, "worker threads (default from MBSTAB_WORKERS)");

  auto* c_sim = app.add_subcommand("simulate", "per-mode Crank-Nicolson run with energy trace");
  add_param_flags(c_sim, &o);
  add_output_flags(c_sim, &o);
  c_sim->add_option("--a", sim_a, "wavenumber magnitude")->check(CLI::PositiveNumber);
  c_sim->add_option("--dt", sim_dt, "time step")->check(CLI::PositiveNumber);
  c_sim->add_option("--t-end", sim_t_end, "final time")->check(CLI::PositiveNumber);

  auto* c_galdi = app.add_subcommand("galdi", "resistive-regime stability threshold");
  c_galdi->add_option("--R-s", g_Rs, "nonmagnetic critical threshold R_s")
      ->check(CLI::PositiveNumber);
  c_galdi->add_option("--Q-sigma", g_Qs, "resistive Chandrasekhar number")
      ->check(CLI::NonNegativeNumber);
  c_galdi->add_option("--P-m", g_Pm, "magnetic Prandtl number")->check(CLI::PositiveNumber);
  c_galdi->add_option("--P-theta", o.P_theta, "thermal Prandtl number")
      ->check(CLI::PositiveNumber);

  auto* c_verify = app.add_subcommand("verify", "run the full acceptance suite");

  // flat key=value config: injected as tokens right after the subcommand so
  // explicit flags (parsed later, last value wins) override it
  std::vector<std::string> args;
  try {
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    std::string config_path;
    for (size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        config_path = args[i + 1];
        args.erase(args.begin() + i, args.begin() + i + 2);
        break;
      }
      if (args[i].rfind("--config=", 0) == 0) {
        config_path = args[i].substr(9);
        args.erase(args.begin() + i);
        break;
      }
    }
    if (!config_path.empty() && !args.empty()) {
      const auto tokens = config_tokens(config_path);
      args.insert(args.begin() + 1, tokens.begin(), tokens.end());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  for (auto* sub : app.get_subcommands({}))
    for (auto* opt : sub->get_options())
      opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::vector<const char*> cargs{argv[0]};
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (c_crit->parsed()) {
      mbstab::Params p = to_params(o);
      mbstab::VariationalSolver solver(p, o.N);
      const mbstab::SearchSpec search =
          lattice ? mbstab::SearchSpec{mbstab::LatticeSearch{mbstab::build_lattice(p, o.a_max)}}
                  : mbstab::SearchSpec{mbstab::ContinuousSearch{a_lo, a_hi}};
      auto r = solver.critical_R0(search);
      const double xi = solver.xi(search);
      if (o.format == "json") {
        nlohmann::json j{{"R0", r.value},
                         {"R0_squared", r.value * r.value},
                         {"a_c", r.a_star},
                         {"xi", xi},
                         {"bc", mbstab::to_string(p.bc)},
                         {"N", o.N}};
        deliver(o, j.dump(2) + "\n");
      } else if (o.format == "csv") {
        deliver(o, "R0,R0_squared,a_c,xi\n" + g17(r.value) + "," + g17(r.value * r.value) +
                       "," + g17(r.a_star) + "," + g17(xi) + "\n");
      } else {
        deliver(o, "R0 = " + g17(r.value) + "\nR0^2 = " + g17(r.value * r.value) +
                       "\na_c = " + g17(r.a_star) + "\nxi = " + g17(xi) + "\n");
      }
      return 0;
    }

    if (c_l0->parsed()) {
      mbstab::Params p = to_params(o);
      mbstab::VariationalSolver solver(p, o.N);
      auto r = solver.lambda0(mbstab::LatticeSearch{mbstab::build_lattice(p, o.a_max)});
      if (o.format == "json") {
        nlohmann::json j{{"lambda0", r.value}, {"a_star", r.a_star}};
        deliver(o, j.dump(2) + "\n");
      } else if (o.format == "csv") {
        deliver(o, "lambda0,a_star\n" + g17(r.value) + "," + g17(r.a_star) + "\n");
      } else {
        deliver(o, "Lambda0 = " + g17(r.value) + "\na* = " + g17(r.a_star) + "\n");
      }
      return 0;
    }

    if (c_growth->parsed()) {
      mbstab::Params p = to_params(o);
      mbstab::VariationalSolver solver(p, o.N);
      const mbstab::SearchSpec search = mbstab::LatticeSearch{mbstab::build_lattice(p, o.a_max)};
      const auto g = mbstab::fixed_point_lambda(solver, search);
      if (o.format == "json") {
        nlohmann::json j = mbstab::to_json(g);
        if (p.Q < 1.0 && p.tau == 1.0) {
          const double R0 = solver.critical_R0(search).value;
          if (p.R > R0 && g.lambda0 > 0.0) {
            const auto [lo, hi] = mbstab::lambda_star_bounds(p, g.lambda0, R0);
            j["bounds"] = {{"lower", lo}, {"upper", hi}};
          }
        }
        deliver(o, j.dump(2) + "\n");
      } else if (o.format == "csv") {
        deliver(o, mbstab::to_csv(g));
      } else {
        std::string text = "Lambda = " + g17(g.lambda) + "\nLambda0 = " + g17(g.lambda0) +
                           "\na* = " + g17(g.a_star) +
                           "\nfixed-point residual = " + g17(g.fixed_point_residual) + "\n";
        if (p.Q < 1.0 && p.tau == 1.0) {
          const double R0 = solver.critical_R0(search).value;
          if (p.R > R0 && g.lambda0 > 0.0) {
            const auto [lo, hi] = mbstab::lambda_star_bounds(p, g.lambda0, R0);
            text += "bounds = [" + g17(lo) + ", " + g17(hi) + "]\n";
          }
        }
        deliver(o, text);
      }
      return 0;
    }

    if (c_classify->parsed()) {
      mbstab::Params p = to_params(o);
      const auto c = mbstab::classify(p, o.N, o.a_max);
      if (o.format == "json")
        deliver(o, mbstab::to_json(c).dump(2) + "\n");
      else if (o.format == "csv")
        deliver(o, mbstab::to_csv(c));
      else
        deliver(o, "verdict = " + mbstab::to_string(c.verdict) + " (" + c.witness + ")\n" +
                       "R0 = " + g17(c.R0) + "\nLambda0 = " + g17(c.lambda0) +
                       "\nUpsilon1 = " + g17(c.upsilon1) + "\nUpsilon2 = " + g17(c.upsilon2) +
                       (c.lambda_star ? "\nLambda* = " + g17(*c.lambda_star) : "") + "\n");
      return 0;
    }

    if (c_sweep->parsed()) {
      mbstab::SweepSpec spec;
      for (double ra : sw_R) spec.R_values.push_back(std::sqrt(ra));
      spec.Q_values = sw_Q;
      mbstab::Params fixed;
      fixed.P_theta = o.P_theta;
      fixed.tau = o.tau;
      fixed.L1 = o.L1;
      fixed.L2 = o.L2;
      fixed.bc = mbstab::parse_boundary_kind(o.bc);
      spec.fixed = fixed;
      spec.N = o.N;
      spec.a_max = o.a_max;
      spec.workers = workers;
      const auto rep = mbstab::run_sweep(spec);
      if (o.format == "json")
        deliver(o, mbstab::to_json(rep).dump(2) + "\n");
      else
        deliver(o, mbstab::to_csv(rep));
      return 0;
    }

    if (c_sim->parsed()) {
      mbstab::Params p = to_params(o);
      const auto sim = mbstab::simulate_and_fit(p, sim_a, o.N, sim_dt, sim_t_end);
      if (o.format == "json") {
        nlohmann::json j = mbstab::to_json(sim.trace);
        j["fitted_rate"] = sim.fitted_rate;
        j["predicted_rate"] = sim.predicted_rate;
        j["a"] = sim.a;
        deliver(o, j.dump(2) + "\n");
      } else if (o.format == "csv") {
        deliver(o, mbstab::to_csv(sim.trace,
                                  {{"a", g17(sim.a)},
                                   {"fitted_rate", g17(sim.fitted_rate)},
                                   {"predicted_rate", g17(sim.predicted_rate)}}));
      } else {
        deliver(o, "fitted rate = " + g17(sim.fitted_rate) +
                       "\npredicted rate = " + g17(sim.predicted_rate) +
                       "\nenergy-identity residual = " + g17(sim.trace.identity_residual) + "\n");
      }
      return 0;
    }

    if (c_galdi->parsed()) {
      const double t = mbstab::galdi_resistive_threshold(g_Rs, g_Qs, g_Pm, o.P_theta);
      std::cout << "threshold = " << g17(t) << "\n";
      return 0;
    }

    if (c_verify->parsed()) {
      const auto checks = mbstab::run_acceptance();
      bool all = true;
      for (const auto& c : checks) {
        std::printf("[%s] %-36s %6.1fs  %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.seconds, c.detail.c_str());
        all = all && c.pass;
      }
      std::printf("%s\n", all ? "ALL CHECKS PASSED" : "CHECKS FAILED");
      return all ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
