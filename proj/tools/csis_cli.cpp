// Command-line front end: `simulate` runs replicated benchmark designs,
// `screen` ranks the columns of a CSV dataset, `threshold` computes
// data-driven selection thresholds for a CSV dataset, and `eigen-ratio`
// prints the conditional max-eigenvalue diagnostic.
//
// Exit codes: 0 success, 1 usage error, 2 data/processing error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csis/csv.hpp"
#include "csis/harness.hpp"
#include "csis/metrics.hpp"

namespace {

using namespace csis;

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

double parse_double_token(const std::string& flag, const std::string& token) {
  try {
    size_t pos = 0;
    double v = std::stod(token, &pos);
    if (pos != token.size()) {
      throw std::invalid_argument(token);
    }
    return v;
  } catch (const std::exception&) {
    throw CLI::ValidationError(flag, "'" + token + "' is not a number");
  }
}

long parse_long_token(const std::string& flag, const std::string& token) {
  try {
    size_t pos = 0;
    long v = std::stol(token, &pos);
    if (pos != token.size()) {
      throw std::invalid_argument(token);
    }
    return v;
  } catch (const std::exception&) {
    throw CLI::ValidationError(flag, "'" + token + "' is not an integer");
  }
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write output file: " + path);
  }
  out << text;
}

std::string format_cell(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Render a small table in the chosen format (shared by screen/threshold/eigen).
std::string render_table(const std::vector<std::string>& headers,
                         const std::vector<std::vector<std::string>>& rows,
                         ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::csv || format == ReportFormat::tsv) {
    const char sep = format == ReportFormat::csv ? ',' : '\t';
    for (size_t c = 0; c < headers.size(); ++c) {
      if (c) out << sep;
      out << headers[c];
    }
    out << "\n";
    for (const auto& row : rows) {
      for (size_t c = 0; c < row.size(); ++c) {
        if (c) out << sep;
        out << row[c];
      }
      out << "\n";
    }
    return out.str();
  }
  std::vector<size_t> width(headers.size());
  for (size_t c = 0; c < headers.size(); ++c) {
    width[c] = headers[c].size();
    for (const auto& row : rows) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  auto pad = [&](const std::string& s, size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  for (size_t c = 0; c < headers.size(); ++c) {
    if (c) out << "  ";
    out << pad(headers[c], width[c]);
  }
  out << "\n";
  size_t total = 0;
  for (size_t c = 0; c < headers.size(); ++c) {
    total += width[c] + (c ? 2 : 0);
  }
  out << std::string(total, '-') << "\n";
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      out << pad(row[c], width[c]);
    }
    out << "\n";
  }
  return out.str();
}

struct CommonScreenArgs {
  std::string input;
  std::string response = "y";
  std::string cond_list;
  std::string family = "gaussian";
  bool no_standardize = false;
  bool center_cond = false;
  int workers = 0;
  std::uint64_t seed = 1;
  double fdr_f = 0.0;
  int decouple_k = 5;
  double decouple_tau = 0.99;
  std::string wald = "inverse";
};

void add_common_screen_flags(CLI::App* cmd, CommonScreenArgs& args) {
  cmd->add_option("--input", args.input, "input CSV file (header required)")->required();
  cmd->add_option("--response", args.response, "response column name (default y)");
  cmd->add_option("--cond", args.cond_list,
                  "comma-separated conditioning column names (default none)");
  cmd->add_option("--family", args.family, "gaussian|binomial|poisson")
      ->check(CLI::IsMember({"gaussian", "binomial", "poisson"}));
  cmd->add_flag("--no-standardize", args.no_standardize,
                "keep candidate columns on their original scale");
  cmd->add_flag("--center-cond", args.center_cond, "center conditioning columns");
  cmd->add_option("--workers", args.workers, "worker threads (0 = hardware)");
  cmd->add_option("--seed", args.seed, "seed for all randomness");
  cmd->add_option("--fdr-f", args.fdr_f, "tolerated false positives (0 = n/log n)");
  cmd->add_option("--decouple-k", args.decouple_k, "decoupling repetitions");
  cmd->add_option("--decouple-tau", args.decouple_tau, "decoupling quantile level");
  cmd->add_option("--wald", args.wald, "Wald variance: inverse|raw")
      ->check(CLI::IsMember({"inverse", "raw"}));
}

LoadedCsv load_from_args(const CommonScreenArgs& args) {
  LoadOptions lopts;
  lopts.standardize = !args.no_standardize;
  lopts.center_conditioning = args.center_cond;
  LoadedCsv loaded = load_csv(args.input, args.response, split_list(args.cond_list), lopts);
  for (const auto& w : loaded.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  return loaded;
}

ScreenOptions screen_options_from(const CommonScreenArgs& args) {
  ScreenOptions sopts;
  sopts.workers = args.workers;
  sopts.wald_mode =
      args.wald == "raw" ? WaldMode::raw_information : WaldMode::inverse_information;
  return sopts;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Conditional feature screening for generalized linear models"};
  app.require_subcommand(1);

  // ---- simulate ----------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "run a replicated benchmark design");
  std::string sim_example = "ex1";
  std::string sim_config_path;
  std::string sim_family = "gaussian";
  std::string sim_methods = "csis";
  std::string sim_rules = "fdr,decoupling";
  std::string sim_rho_list;
  std::string sim_output;
  std::string sim_format = "pretty";
  long sim_reps = 0, sim_n = 0, sim_p = 0, sim_s = 0;
  int sim_cset = 1, sim_workers = -1, sim_k = 0;
  std::uint64_t sim_seed = 0;
  bool sim_have_seed = false, sim_no_timing = false;
  double sim_f = -1.0, sim_tau = -1.0;
  sim->add_option("--example", sim_example, "ex1|ex2|ex3|ex4|ex5")
      ->check(CLI::IsMember({"ex1", "ex2", "ex3", "ex4", "ex5"}));
  sim->add_option("--config", sim_config_path, "JSON config file (flags override it)");
  sim->add_option("--family", sim_family, "gaussian|binomial|poisson")
      ->check(CLI::IsMember({"gaussian", "binomial", "poisson"}));
  sim->add_option("--method", sim_methods, "comma list from sis,mlr,csis,cmlr");
  sim->add_option("--rules", sim_rules,
                  "threshold rules: comma list from fdr,decoupling,none");
  sim->add_option("--rho", sim_rho_list, "design correlation(s), comma list");
  sim->add_option("--cset", sim_cset, "ex5 conditioning set: 1, 2, or 3");
  sim->add_option("--reps", sim_reps, "replications");
  sim->add_option("--n", sim_n, "override sample size");
  sim->add_option("--p", sim_p, "override dimension");
  sim->add_option("--s", sim_s, "override active-coefficient count (ex3/ex4)");
  auto* seed_opt = sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--workers", sim_workers, "worker threads (0 = hardware)");
  sim->add_option("--fdr-f", sim_f, "tolerated false positives (0 = n/log n)");
  sim->add_option("--decouple-k", sim_k, "decoupling repetitions");
  sim->add_option("--decouple-tau", sim_tau, "decoupling quantile level");
  sim->add_option("--output", sim_output, "output path (default stdout)");
  sim->add_option("--format", sim_format, "csv|tsv|pretty")
      ->check(CLI::IsMember({"csv", "tsv", "pretty"}));
  sim->add_flag("--no-timing", sim_no_timing, "report wall_seconds as 0 (byte-stable output)");

  sim->callback([&]() {
    sim_have_seed = seed_opt->count() > 0;
    RunConfig base;
    if (!sim_config_path.empty()) {
      std::ifstream in(sim_config_path);
      if (!in) {
        throw DataError("cannot open config file: " + sim_config_path);
      }
      std::stringstream buffer;
      buffer << in.rdbuf();
      base = config_from_json(buffer.str());
    }

    // Flags override config-file values.
    std::string example = sim->count("--example") || sim_config_path.empty()
                              ? sim_example
                              : base.spec.name;
    Family family = sim->count("--family") || sim_config_path.empty()
                        ? parse_family(sim_family)
                        : base.spec.family;
    ExampleOptions eopts;
    eopts.cset = sim->count("--cset") ? sim_cset : base.spec.cset_id;
    eopts.n = sim->count("--n") ? sim_n : (sim_config_path.empty() ? 0 : base.spec.n);
    eopts.p = sim->count("--p") ? sim_p : (sim_config_path.empty() ? 0 : base.spec.p);
    eopts.s = sim_s;  // 0 = keep example default
    eopts.replications =
        sim->count("--reps") ? sim_reps
                             : (sim_config_path.empty() ? 50 : base.spec.replications);
    eopts.seed = sim_have_seed ? sim_seed : (sim_config_path.empty() ? 1 : base.spec.seed);

    std::vector<double> rhos;
    if (sim->count("--rho")) {
      for (const auto& tok : split_list(sim_rho_list)) {
        rhos.push_back(parse_double_token("--rho", tok));
      }
    } else {
      rhos.push_back(sim_config_path.empty() ? -1.0 : base.spec.rho);
    }

    std::vector<Method> methods;
    if (sim->count("--method") || sim_config_path.empty()) {
      for (const auto& tok : split_list(sim_methods)) {
        methods.push_back(parse_method(tok));
      }
    } else {
      methods = base.methods;
    }

    std::vector<ThresholdRule> rules;
    if (sim->count("--rules") || sim_config_path.empty()) {
      for (const auto& tok : split_list(sim_rules)) {
        if (tok == "none") {
          rules.clear();
          break;
        }
        ThresholdRule rule;
        if (tok == "fdr") {
          rule.kind = ThresholdRule::Kind::fdr;
        } else if (tok == "decoupling") {
          rule.kind = ThresholdRule::Kind::decoupling;
        } else {
          throw CLI::ValidationError("--rules", "must be from fdr,decoupling,none");
        }
        rules.push_back(rule);
      }
    } else {
      rules = base.rules;
    }
    for (auto& rule : rules) {
      if (rule.kind == ThresholdRule::Kind::fdr && sim_f >= 0) {
        rule.f = sim_f;
      }
      if (rule.kind == ThresholdRule::Kind::decoupling) {
        if (sim_k > 0) rule.repetitions = sim_k;
        if (sim_tau > 0) rule.tau = sim_tau;
      }
    }

    std::vector<ReportRow> rows;
    for (double rho : rhos) {
      RunConfig config = base;
      eopts.rho = rho;
      config.spec = example_spec(example, family, eopts);
      config.methods = methods;
      config.rules = rules;
      if (sim_workers >= 0) {
        config.workers = sim_workers;
      }
      config.timing = !sim_no_timing && base.timing;
      auto batch = run_experiment(config);
      rows.insert(rows.end(), batch.begin(), batch.end());
    }
    emit(format_report(rows, parse_report_format(sim_format)), sim_output);
  });

  // ---- screen ------------------------------------------------------------
  auto* scr = app.add_subcommand("screen", "rank the columns of a CSV dataset");
  CommonScreenArgs sargs;
  std::string scr_rule = "none";
  double scr_gamma = -1.0;
  std::string scr_method = "csis";
  std::string scr_output;
  std::string scr_format = "pretty";
  long scr_top = 0;
  add_common_screen_flags(scr, sargs);
  scr->add_option("--rule", scr_rule, "selection rule: none|fixed|fdr|decoupling")
      ->check(CLI::IsMember({"none", "fixed", "fdr", "decoupling"}));
  scr->add_option("--gamma", scr_gamma, "threshold for --rule fixed");
  scr->add_option("--method", scr_method, "ranking statistic: csis|cmlr (or sis|mlr)")
      ->check(CLI::IsMember({"csis", "cmlr", "sis", "mlr"}));
  scr->add_option("--top", scr_top, "print only the top K rows");
  scr->add_option("--output", scr_output, "output path (default stdout)");
  scr->add_option("--format", scr_format, "csv|tsv|pretty")
      ->check(CLI::IsMember({"csv", "tsv", "pretty"}));

  scr->callback([&]() {
    LoadedCsv loaded = load_from_args(sargs);
    Family family = parse_family(sargs.family);
    ScreenOptions sopts = screen_options_from(sargs);
    ScreenStatistics stats = screen_conditional(loaded.data, loaded.cond, family, sopts);

    Method method = parse_method(scr_method);
    bool coef_path = method == Method::csis || method == Method::sis;
    // Priority order always uses the likelihood drop: it is scale-free,
    // immune to the Wald collapse under near-separation, and identical to
    // the Wald ordering for the gaussian family.  The coefficient-path
    // selection rules below still threshold raw magnitudes.
    std::vector<int> ranking = rank_features(stats, RankMethod::likelihood);

    std::vector<int> selected;
    double realized = 0.0;
    bool have_rule = scr_rule != "none";
    if (scr_rule == "fixed") {
      if (scr_gamma < 0) {
        throw CLI::ValidationError("--gamma", "required for --rule fixed");
      }
      realized = scr_gamma;
      selected = coef_path
                     ? select_by_magnitude(stats, scr_gamma)
                     : select_by_likelihood(stats, scr_gamma);
    } else if (scr_rule == "fdr") {
      double f = sargs.fdr_f > 0
                     ? sargs.fdr_f
                     : static_cast<double>(stats.n) / std::log(static_cast<double>(stats.n));
      auto fs = fdr_select(stats, static_cast<long>(stats.candidates.size()), f);
      realized = fs.delta;
      selected = fs.selected;
    } else if (scr_rule == "decoupling") {
      DecouplingOptions dopts;
      dopts.repetitions = sargs.decouple_k;
      dopts.tau = sargs.decouple_tau;
      dopts.seed = sargs.seed;
      dopts.screen = sopts;
      DecouplingResult thr =
          decoupling_threshold(loaded.data, loaded.cond, family, dopts);
      if (coef_path) {
        realized = thr.gamma_star;
        selected = select_by_magnitude(stats, thr.gamma_star);
      } else {
        realized = thr.gamma_tilde;
        selected = select_by_likelihood(stats, thr.gamma_tilde);
      }
    }
    std::vector<char> is_selected(static_cast<size_t>(loaded.data.x.cols()), 0);
    for (int j : selected) {
      is_selected[static_cast<size_t>(j)] = 1;
    }
    std::vector<size_t> slot_of(static_cast<size_t>(loaded.data.x.cols()), 0);
    for (size_t i = 0; i < stats.candidates.size(); ++i) {
      slot_of[static_cast<size_t>(stats.candidates[i])] = i;
    }

    std::vector<std::string> headers = {"rank", "column", "coef",
                                        "wald", "nll",    "converged"};
    if (have_rule) {
      headers.push_back("selected");
    }
    std::vector<std::vector<std::string>> rows;
    long limit = scr_top > 0 ? std::min<long>(scr_top, static_cast<long>(ranking.size()))
                             : static_cast<long>(ranking.size());
    for (long r = 0; r < limit; ++r) {
      int col = ranking[static_cast<size_t>(r)];
      size_t slot = slot_of[static_cast<size_t>(col)];
      std::string name = static_cast<size_t>(col) < loaded.data.column_names.size()
                             ? loaded.data.column_names[static_cast<size_t>(col)]
                             : "x" + std::to_string(col + 1);
      std::vector<std::string> row = {
          std::to_string(r + 1),
          name,
          format_cell(stats.coef[static_cast<Eigen::Index>(slot)]),
          format_cell(stats.wald[static_cast<Eigen::Index>(slot)]),
          format_cell(stats.nll[static_cast<Eigen::Index>(slot)]),
          stats.converged[slot] ? "yes" : "no"};
      if (have_rule) {
        row.push_back(is_selected[static_cast<size_t>(col)] ? "yes" : "no");
      }
      rows.push_back(std::move(row));
    }
    std::ostringstream out;
    if (have_rule) {
      out << "# rule=" << scr_rule << " realized_threshold=" << format_cell(realized)
          << " selected=" << selected.size() << "\n";
    }
    out << render_table(headers, rows, parse_report_format(scr_format));
    emit(out.str(), scr_output);
  });

  // ---- threshold ---------------------------------------------------------
  auto* thr = app.add_subcommand("threshold", "compute selection thresholds for a CSV dataset");
  CommonScreenArgs targs;
  std::string thr_rule = "both";
  add_common_screen_flags(thr, targs);
  thr->add_option("--rule", thr_rule, "fdr|decoupling|both")
      ->check(CLI::IsMember({"fdr", "decoupling", "both"}));

  thr->callback([&]() {
    LoadedCsv loaded = load_from_args(targs);
    Family family = parse_family(targs.family);
    ScreenOptions sopts = screen_options_from(targs);
    std::ostringstream out;
    if (thr_rule == "fdr" || thr_rule == "both") {
      long n = loaded.data.x.rows();
      long d = loaded.data.x.cols() - static_cast<long>(loaded.cond.indices.size());
      double f = targs.fdr_f > 0
                     ? targs.fdr_f
                     : static_cast<double>(n) / std::log(static_cast<double>(n));
      double delta = normal_quantile(1.0 - f / (2.0 * static_cast<double>(d)));
      out << "fdr: f=" << format_cell(f) << " d=" << d
          << " delta=" << format_cell(delta) << "\n";
    }
    if (thr_rule == "decoupling" || thr_rule == "both") {
      DecouplingOptions dopts;
      dopts.repetitions = targs.decouple_k;
      dopts.tau = targs.decouple_tau;
      dopts.seed = targs.seed;
      dopts.screen = sopts;
      DecouplingResult res = decoupling_threshold(loaded.data, loaded.cond, family, dopts);
      out << "decoupling: k=" << targs.decouple_k << " tau=" << format_cell(targs.decouple_tau)
          << " gamma_star=" << format_cell(res.gamma_star)
          << " gamma_tilde=" << format_cell(res.gamma_tilde)
          << " pooled=" << res.pooled_values << " fit_failures=" << res.fit_failures << "\n";
    }
    std::cout << out.str();
  });

  // ---- eigen-ratio -------------------------------------------------------
  auto* eig = app.add_subcommand(
      "eigen-ratio", "conditional max-eigenvalue diagnostic for equicorrelated designs");
  std::string eig_r = "0.5", eig_q = "5", eig_d = "1000";
  std::string eig_output, eig_format = "pretty";
  eig->add_option("--r", eig_r, "correlation value(s), comma list");
  eig->add_option("--q", eig_q, "conditioning-set size(s), comma list");
  eig->add_option("--d", eig_d, "candidate count(s), comma list");
  eig->add_option("--output", eig_output, "output path (default stdout)");
  eig->add_option("--format", eig_format, "csv|tsv|pretty")
      ->check(CLI::IsMember({"csv", "tsv", "pretty"}));

  eig->callback([&]() {
    std::vector<std::string> headers = {"r", "q", "d", "lam_unc", "lam_cond", "ratio"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& rs : split_list(eig_r)) {
      for (const auto& qs : split_list(eig_q)) {
        for (const auto& ds : split_list(eig_d)) {
          double r = parse_double_token("--r", rs);
          long q = parse_long_token("--q", qs);
          long d = parse_long_token("--d", ds);
          EigenRatio er = conditional_eigen_ratio(r, q, d);
          rows.push_back({format_cell(r), std::to_string(q), std::to_string(d),
                          format_cell(er.lam_unc), format_cell(er.lam_cond),
                          format_cell(er.ratio)});
        }
      }
    }
    emit(render_table(headers, rows, parse_report_format(eig_format)), eig_output);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems -> 1
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const csis::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
