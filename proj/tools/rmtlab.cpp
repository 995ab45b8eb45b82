// rmtlab: batch driver for the random-matrix experiments.
//
// Exit status: 0 when every verdict passes, 2 when some verdict fails or is withheld,
// 1 on any execution or usage error.

#include "rmt/rmt.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace rmt;

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::istringstream is(item.substr(b));
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) throw InvalidArgument(std::string("bad value in ") + what + ": " + item);
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument(std::string(what) + " is empty");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// Coefficient tuples on the command line:
//   column:n        a_j = e_{j1}/sqrt(n) in M_n
//   identity:k      the single matrix I_k
//   diag:k          the k diagonal matrix units of M_k
//   random:n:k      Gaussian tuple rescaled to rc = 1, drawn from the run seed
//   poly:FILE       degree-one terms of a polynomial file, coefficient of x_j as a_j
MatrixTuple parse_tuple(const std::string& spec, std::uint64_t seed) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  require(!parts.empty(), "empty coefficient specification");
  auto num = [&](std::size_t i) {
    require(parts.size() > i, "coefficient specification '" + spec + "' is missing a size");
    const long v = std::stol(parts[i]);
    require(v >= 1, "coefficient sizes must be positive");
    return static_cast<Index>(v);
  };
  const std::string& kind = parts[0];
  if (kind == "column") return normalized_column_tuple(static_cast<std::size_t>(num(1)));
  if (kind == "identity") return MatrixTuple{Matrix(Matrix::Identity(num(1), num(1)))};
  if (kind == "diag") {
    std::vector<Matrix> d;
    for (Index j = 0; j < num(1); ++j) d.push_back(matrix_unit(num(1), j, j));
    return MatrixTuple(std::move(d));
  }
  if (kind == "random")
    return sample_coefficient_tuple(static_cast<std::size_t>(num(1)), num(2), SeededStream{seed}.fork("cli-coefficients"));
  if (kind == "poly") {
    require(parts.size() == 2, "poly: expects a file path");
    const StarPolynomial p = parse_polynomial(read_file(parts[1]));
    std::vector<Matrix> out(p.num_vars(), Matrix::Zero(p.coeff_dim(), p.coeff_dim()));
    for (const auto& [w, c] : p.terms()) {
      require(w.size() == 1 && w[0] <= p.num_vars(), "poly: tuple files may only contain terms x_j");
      out[w[0] - 1] += c;
    }
    return MatrixTuple(std::move(out));
  }
  throw InvalidArgument("unknown coefficient specification: " + spec);
}

// key = value lines; '#' starts a comment. Keys are long option names without dashes.
std::vector<std::string> config_tokens(const std::string& path) {
  std::istringstream is(read_file(path));
  std::vector<std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto x = s.find_first_not_of(" \t\r");
      if (x == std::string::npos) return std::string();
      const auto y = s.find_last_not_of(" \t\r");
      return s.substr(x, y - x + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidArgument(path + ":" + std::to_string(lineno) + ": empty key");
    if (key == "config") throw InvalidArgument(path + ": nested config files are not supported");
    if (value == "true" || value == "false") {
      if (value == "true") out.push_back("--" + key);
      continue;
    }
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

struct Globals {
  std::uint64_t seed = 20240601;
  std::optional<int> trials;
  unsigned threads = 1;
  std::string out;
  std::string csv;
  std::string config;
  bool timing = false;
};

int trials_or(const Globals& g, int fallback) { return g.trials ? *g.trials : fallback; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian random matrix experiments with free-probability references", "rmtlab"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->option_text("UINT")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--trials", g.trials, "Number of Monte Carlo trials")->check(CLI::PositiveNumber)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--out", g.out, "Write the JSON report here instead of stdout")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--csv", g.csv, "Also write per-row CSV here")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", g.config, "Flat key = value file with option defaults");
  app.add_flag("--timing", g.timing, "Include wall-clock seconds in the report");

  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };
  auto last = [](CLI::Option* o) { return o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast); };

  // moments
  std::string m_p = "2,4,6", m_coeffs;
  Index m_N = 16;
  double m_z = 4.0;
  auto* moments = sub("moments", "Exact Wick moments against Monte Carlo");
  last(moments->add_option("--p", m_p, "Even moment orders, comma separated"));
  last(moments->add_option("--N", m_N, "Matrix size"));
  last(moments->add_option("--coeffs", m_coeffs, "Coefficient tuple (column:n, identity:k, diag:k, random:n:k, poly:FILE)"));
  last(moments->add_option("--z-limit", m_z, "Allowed standard errors"));

  // concentration
  ConcentrationConfig cc;
  std::string c_coeffs = "column:2", c_mp = "2,4";
  auto* conc = sub("concentration", "Gaussian concentration checks");
  last(conc->add_option("--N", cc.N, "Matrix size for the tail check"));
  last(conc->add_option("--t", cc.t, "Deviation threshold"));
  last(conc->add_option("--coeffs", c_coeffs, "Coefficient tuple with rc <= 1"));
  last(conc->add_option("--moment-N", cc.moment_N, "Matrix size for the moment check"));
  last(conc->add_option("--moment-p", c_mp, "Moment orders"));
  last(conc->add_option("--moment-trials", cc.moment_trials, "Trials for the moment check"));
  conc->add_flag("--uniform", cc.lemcon, "Also estimate the sampled uniform concentration event");
  last(conc->add_option("--uniform-n", cc.lemcon_n, "Tuple length"));
  last(conc->add_option("--uniform-k", cc.lemcon_k, "Coefficient size"));
  last(conc->add_option("--uniform-N", cc.lemcon_N, "Matrix size"));
  last(conc->add_option("--uniform-eps", cc.lemcon_eps, "Relative tolerance"));
  last(conc->add_option("--uniform-samples", cc.lemcon_samples, "Sampled tuples per trial"));
  last(conc->add_option("--uniform-trials", cc.lemcon_trials, "Trials"));

  // converge
  ConvergeConfig cv;
  std::string cv_poly, cv_text = "1 ; x1", cv_grid = "64,128,256,512", cv_model = "ginibre";
  auto* conv = sub("converge", "Strong convergence of polynomial norms towards the free reference");
  last(conv->add_option("--poly", cv_poly, "Polynomial file"));
  last(conv->add_option("--poly-text", cv_text, "Polynomial text, terms separated by '|'"));
  last(conv->add_option("--N-grid", cv_grid, "Strictly increasing matrix sizes"));
  last(conv->add_option("--depth", cv.depth, "Fock truncation depth, 0 for the deepest within the cap"));
  last(conv->add_option("--cap", cv.cap, "Fock basis cap"));
  last(conv->add_option("--model", cv_model, "ginibre or gue"));
  conv->add_flag("--selfadjoint", cv.selfadjoint, "Replace P by P + P*");

  // tightness
  TightnessConfig tc;
  std::string t_coeffs = "column:4", t_grid = "64,128,256,512";
  auto* tight = sub("tightness", "Ratio of mean norms to the rc norm");
  last(tight->add_option("--coeffs", t_coeffs, "Coefficient tuple"));
  last(tight->add_option("--N-grid", t_grid, "Strictly increasing matrix sizes"));
  last(tight->add_option("--depth", tc.depth, "Fock depth, 0 for automatic"));
  last(tight->add_option("--cap", tc.cap, "Fock basis cap"));
  last(tight->add_option("--ceiling", tc.ceiling, "Allowed ratio at the largest N"));

  // growth
  GrowthConfig gc;
  std::string g_space = "oh";
  auto* growth = sub("growth", "Growth witnesses for the canonical bases of classical spaces");
  last(growth->add_option("--space", g_space, "l1_max, oh, rc_sum or l2_max"));
  last(growth->add_option("--n", gc.n, "Space dimension"));
  last(growth->add_option("--N", gc.N, "Matrix size"));
  last(growth->add_option("--radius", gc.radius, "Free group ball radius, 0 for automatic"));

  // blocksum
  BlocksumConfig bc;
  std::string b_alpha = "8,16,32,64";
  auto* block = sub("blocksum", "Block-sum witness for the failure of exactness");
  last(block->add_option("--n", bc.n, "Number of variables"));
  last(block->add_option("--alpha", b_alpha, "Block sizes"));
  last(block->add_option("--depth", bc.depth, "Fock depth for an optional lower bound, 0 to skip"));
  last(block->add_option("--fraction", bc.required_fraction, "Required witness fraction"));

  // calibrate
  CalibrateConfig kc;
  std::string k_kgrid = "2,4,8", k_Ngrid = "8,16,32,64";
  auto* calib = sub("calibrate", "Fit the gamma constant of the finite-N bound");
  last(calib->add_option("--eps", kc.eps, "Multiplicative slack"));
  last(calib->add_option("--k-grid", k_kgrid, "Coefficient sizes"));
  last(calib->add_option("--N-grid", k_Ngrid, "Matrix sizes"));
  last(calib->add_option("--samples", kc.samples, "Random tuples per k"));

  // ealpha
  EalphaConfig ec;
  std::string e_kgrid = "1,2";
  auto* ealpha = sub("ealpha", "Two-sided sandwich for lacunary block families");
  last(ealpha->add_option("--n", ec.n, "Tuple length"));
  last(ealpha->add_option("--c-eps", ec.c_eps, "Block threshold constant"));
  last(ealpha->add_option("--count", ec.count, "Length of the lacunary sequence"));
  last(ealpha->add_option("--k-grid", e_kgrid, "Coefficient sizes"));
  last(ealpha->add_option("--samples", ec.samples, "Coefficient tuples per k"));
  last(ealpha->add_option("--eps", ec.eps, "Upper slack"));
  last(ealpha->add_option("--max-block", ec.max_block, "Largest block size simulated"));

  // bounds
  std::string bd_calc = "ht";
  double bd_k = 2, bd_N = 256, bd_eps = 0.1, bd_gamma = 1.0, bd_C = 1.0, bd_t = 0.25, bd_delta = 0.5, bd_c = 1.0;
  int bd_n = 4;
  unsigned bd_a = 2, bd_count = 6, bd_kk = 2;
  auto* bounds = sub("bounds", "Evaluate a closed-form bound or constant");
  last(bounds->add_option("--calc", bd_calc, "ht, subexp, tail, net, kmax, lacunary, constants, pi2, gaussian"));
  last(bounds->add_option("--k", bd_k, "Coefficient size"));
  last(bounds->add_option("--N", bd_N, "Matrix size"));
  last(bounds->add_option("--eps", bd_eps, "Epsilon"));
  last(bounds->add_option("--gamma", bd_gamma, "Gamma constant"));
  last(bounds->add_option("--C", bd_C, "Tightness constant"));
  last(bounds->add_option("--t", bd_t, "Deviation threshold"));
  last(bounds->add_option("--delta", bd_delta, "Net mesh"));
  last(bounds->add_option("--c-eps", bd_c, "Block threshold constant"));
  last(bounds->add_option("--n", bd_n, "Dimension"));
  last(bounds->add_option("--a", bd_a, "Lacunary ratio"));
  last(bounds->add_option("--count", bd_count, "Sequence length"));
  last(bounds->add_option("--net-k", bd_kk, "Matrix size for the net bound"));

  // Config values are spliced in right after the subcommand name, so explicit
  // command-line options that follow still win.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    std::string cfg_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) cfg_path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) cfg_path = args[i].substr(9);
    }
    if (!cfg_path.empty()) {
      const auto tokens = config_tokens(cfg_path);
      std::size_t pos = args.size();
      for (std::size_t i = 0; i < args.size(); ++i)
        if (app.get_subcommand_no_throw(args[i]) != nullptr) {
          pos = i + 1;
          break;
        }
      if (pos == args.size() && (args.empty() || app.get_subcommand_no_throw(args.back()) == nullptr))
        throw InvalidArgument("--config needs a subcommand");
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(pos), tokens.begin(), tokens.end());
    }
  } catch (const std::exception& e) {
    std::cerr << "rmtlab: " << e.what() << "\n";
    return 1;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const RunContext ctx{g.seed, g.threads};
    Report rep;
    if (*moments) {
      MomentsConfig mc;
      mc.p_list = parse_list<int>(m_p, "--p");
      mc.N = m_N;
      mc.trials = trials_or(g, 2000);
      mc.z_limit = m_z;
      if (!m_coeffs.empty()) mc.coefficients = parse_tuple(m_coeffs, g.seed);
      rep = run_moments(mc, ctx);
    } else if (*conc) {
      cc.trials = trials_or(g, 500);
      cc.coefficients = parse_tuple(c_coeffs, g.seed);
      cc.moment_p = parse_list<int>(c_mp, "--moment-p");
      rep = run_concentration(cc, ctx);
    } else if (*conv) {
      cv.polynomial = parse_polynomial(cv_poly.empty() ? cv_text : read_file(cv_poly));
      cv.N_grid = parse_list<Index>(cv_grid, "--N-grid");
      cv.trials = trials_or(g, 10);
      if (cv_model == "gue") cv.model = MatrixModel::gue;
      else if (cv_model != "ginibre") throw InvalidArgument("--model must be ginibre or gue");
      rep = run_strong_convergence(cv, ctx);
    } else if (*tight) {
      tc.coefficients = parse_tuple(t_coeffs, g.seed);
      tc.N_grid = parse_list<Index>(t_grid, "--N-grid");
      tc.trials = trials_or(g, 4);
      rep = estimate_tightness(tc, ctx);
    } else if (*growth) {
      gc.space = parse_growth_space(g_space);
      gc.trials = trials_or(g, 1);
      rep = run_growth_witness(gc, ctx);
    } else if (*block) {
      bc.alpha = parse_list<Index>(b_alpha, "--alpha");
      bc.trials = trials_or(g, 100);
      rep = run_blocksum_witness(bc, ctx);
    } else if (*calib) {
      kc.k_grid = parse_list<Index>(k_kgrid, "--k-grid");
      kc.N_grid = parse_list<Index>(k_Ngrid, "--N-grid");
      kc.trials = trials_or(g, 20);
      rep = calibrate_gamma(kc, ctx);
    } else if (*ealpha) {
      ec.k_grid = parse_list<Index>(e_kgrid, "--k-grid");
      ec.trials = trials_or(g, 3);
      rep = run_ealpha_sandwich(ec, ctx);
    } else if (*bounds) {
      rep.experiment = "bounds";
      rep.config = {{"calc", bd_calc}};
      Json& r = rep.results;
      if (bd_calc == "ht") {
        rep.config.update({{"k", bd_k}, {"N", bd_N}, {"eps", bd_eps}, {"gamma", bd_gamma}});
        r["bound"] = {{"ht_bound", ht_bound(bd_k, bd_N, bd_eps, bd_gamma)}};
      } else if (bd_calc == "subexp") {
        rep.config.update({{"K", bd_k}, {"N", bd_N}, {"eps", bd_eps}, {"gamma", bd_gamma}, {"C", bd_C}});
        r["bound"] = {{"subexp_bound", subexp_bound_eq10(bd_k, bd_N, bd_eps, bd_gamma, bd_C)}};
      } else if (bd_calc == "tail") {
        rep.config.update({{"N", bd_N}, {"t", bd_t}});
        r["bound"] = {{"tail_bound", tail_bound(bd_N, bd_t)}};
      } else if (bd_calc == "net") {
        rep.config.update({{"delta", bd_delta}, {"n", bd_n}, {"k", bd_kk}});
        const double lg = log_net_cardinality_bound(bd_delta, bd_n, bd_kk);
        r["bound"] = {{"log_cardinality", lg}};
        if (lg / std::log(2.0) < 4096) r["bound"]["cardinality"] = to_string(net_cardinality_bound(bd_delta, bd_n, bd_kk));
      } else if (bd_calc == "kmax") {
        rep.config.update({{"N", bd_N}, {"n", bd_n}, {"c_eps", bd_c}});
        r["bound"] = {{"kmax", lemcon_kmax(bd_N, bd_n, bd_c)}};
      } else if (bd_calc == "lacunary") {
        rep.config.update({{"a", bd_a}, {"count", bd_count}});
        const auto seq = lacunary_sequence(bd_a, bd_count);
        Json s = Json::array();
        for (const auto& v : seq) s.push_back(to_string(v));
        r["reference"] = {{"sequence", s}, {"sum_constant", lacunary_sum_constant(seq)}};
      } else if (bd_calc == "constants") {
        rep.config.update({{"n", bd_n}});
        const auto t = constants_table(bd_n);
        r["bound"] = {{"oh", {t.oh.lower, t.oh.upper}}, {"r_plus_c", {t.r_plus_c.lower, t.r_plus_c.upper}},
                      {"max_space_lower", t.max_space_lower}, {"universal_upper", t.universal_upper}};
      } else if (bd_calc == "pi2") {
        rep.config.update({{"n", bd_n}});
        const auto p = pi2_norm(Matrix::Identity(bd_n, bd_n));
        r["reference"] = {{"pi2_identity", p.value}, {"upper", p.upper}, {"gap", p.gap},
                          {"schatten4_identity", schatten_norm(Matrix::Identity(bd_n, bd_n), 4)}};
      } else if (bd_calc == "gaussian") {
        rep.config.update({{"p", bd_k}});
        r["reference"] = {{"complex_lp", complex_gaussian_lp_norm(bd_k)}, {"real_lp", real_gaussian_lp_norm(bd_k)},
                          {"gamma_one", gaussian_gamma_one()}};
      } else {
        throw InvalidArgument("unknown --calc: " + bd_calc);
      }
    }
    const std::string json = rep.dump(g.timing);
    if (g.out.empty())
      std::cout << json;
    else
      write_text_file(g.out, json);
    if (!g.csv.empty()) write_text_file(g.csv, rep.to_csv());
    for (const auto& v : rep.verdicts)
      std::cerr << (v.withheld ? "WITHHELD " : v.pass ? "PASS " : "FAIL ") << rep.experiment << "." << v.name << "\n";
    return rep.pass() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "rmtlab: " << e.what() << "\n";
    return 1;
  }
}
