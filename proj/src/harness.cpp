#include "csis/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "csis/metrics.hpp"

namespace csis {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_magnitude_method(Method m) {
  return m == Method::sis || m == Method::csis;
}

bool is_conditional_method(Method m) {
  return m == Method::csis || m == Method::cmlr;
}

struct MethodRep {
  long mms = 0;
  long fp_pi = -1, fn_pi = -1;    // -1 = rule not run
  long fp_fdr = -1, fn_fdr = -1;
};

}  // namespace

Method parse_method(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "sis") return Method::sis;
  if (s == "mlr") return Method::mlr;
  if (s == "csis") return Method::csis;
  if (s == "cmlr") return Method::cmlr;
  throw std::invalid_argument("unknown method: " + name);
}

const char* method_name(Method m) {
  switch (m) {
    case Method::sis: return "SIS";
    case Method::mlr: return "MLR";
    case Method::csis: return "CSIS";
    case Method::cmlr: return "CMLR";
  }
  return "?";
}

std::vector<ReportRow> run_experiment(const RunConfig& config) {
  const ExperimentSpec& spec = config.spec;
  if (config.methods.empty()) {
    throw std::invalid_argument("run_experiment: need at least one method");
  }
  if (spec.replications < 1) {
    throw std::invalid_argument("run_experiment: need at least one replication");
  }
  const ThresholdRule* fdr_rule = nullptr;
  const ThresholdRule* pi_rule = nullptr;
  for (const auto& rule : config.rules) {
    switch (rule.kind) {
      case ThresholdRule::Kind::fdr:
        if (fdr_rule) {
          throw std::invalid_argument("run_experiment: more than one fdr rule");
        }
        fdr_rule = &rule;
        break;
      case ThresholdRule::Kind::decoupling:
        if (pi_rule) {
          throw std::invalid_argument("run_experiment: more than one decoupling rule");
        }
        pi_rule = &rule;
        break;
      case ThresholdRule::Kind::fixed_gamma:
        throw std::invalid_argument(
            "run_experiment: fixed_gamma applies to single-dataset screening only");
    }
  }

  const long reps = spec.replications;
  const size_t nmethods = config.methods.size();
  const bool want_cond = std::any_of(config.methods.begin(), config.methods.end(),
                                     is_conditional_method);
  const bool want_uncond = std::any_of(config.methods.begin(), config.methods.end(),
                                       [](Method m) { return !is_conditional_method(m); });

  std::vector<std::vector<MethodRep>> results(
      static_cast<size_t>(reps), std::vector<MethodRep>(nmethods));
  std::vector<char> failed(static_cast<size_t>(reps), 0);

  const auto t0 = std::chrono::steady_clock::now();

  auto process_rep = [&](long r) {
    try {
      const std::uint64_t rep_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(r));
      Rng rng(rep_seed);
      Dataset data = draw_dataset(spec, rng);
      std::vector<int> cond_cols = draw_conditioning(spec, rng);
      std::vector<int> active = active_candidates(spec, cond_cols);
      if (active.empty()) {
        failed[static_cast<size_t>(r)] = 1;
        return;
      }
      // Common candidate pool: every column outside the conditioning set.
      // The unconditional methods rank the same pool so model sizes compare.
      std::vector<char> in_cond(static_cast<size_t>(spec.p), 0);
      for (int c : cond_cols) {
        in_cond[static_cast<size_t>(c)] = 1;
      }
      std::vector<int> pool_cols;
      pool_cols.reserve(static_cast<size_t>(spec.p) - cond_cols.size());
      for (long j = 0; j < spec.p; ++j) {
        if (!in_cond[static_cast<size_t>(j)]) {
          pool_cols.push_back(static_cast<int>(j));
        }
      }
      const long d = static_cast<long>(pool_cols.size());
      double f_eff = 0.0;
      if (fdr_rule) {
        f_eff = fdr_rule->f > 0 ? fdr_rule->f
                                : static_cast<double>(spec.n) / std::log(static_cast<double>(spec.n));
      }

      for (int mode = 0; mode < 2; ++mode) {
        const bool conditional = mode == 0;
        if (conditional && !want_cond) continue;
        if (!conditional && !want_uncond) continue;

        ConditioningSet cset;
        ScreenOptions sopts;
        sopts.wald_mode = config.wald_mode;
        sopts.workers = 1;  // parallelism lives at the replication level here
        if (conditional) {
          cset.indices = cond_cols;
        } else {
          sopts.candidate_subset = pool_cols;
        }

        ScreenStatistics stats = screen_conditional(data, cset, spec.family, sopts);

        std::vector<int> sel_fdr;
        if (fdr_rule) {
          sel_fdr = fdr_select(stats, d, f_eff).selected;
        }
        std::vector<int> sel_pi_mag, sel_pi_lik;
        if (pi_rule) {
          DecouplingOptions dopts;
          dopts.repetitions = pi_rule->repetitions;
          dopts.tau = pi_rule->tau;
          dopts.seed = derive_seed(rep_seed, 1000 + static_cast<std::uint64_t>(mode));
          dopts.permutation = config.permutation;
          dopts.pool = config.pool;
          dopts.screen = sopts;
          DecouplingResult thr = decoupling_threshold(data, cset, spec.family, dopts);
          sel_pi_mag = select_by_magnitude(stats, thr.gamma_star);
          sel_pi_lik = select_by_likelihood(stats, thr.gamma_tilde);
        }

        std::vector<int> rank_lik;
        for (size_t mi = 0; mi < nmethods; ++mi) {
          Method m = config.methods[mi];
          if (is_conditional_method(m) != conditional) {
            continue;
          }
          MethodRep& out = results[static_cast<size_t>(r)][mi];
          // Model size uses the likelihood-drop ordering for every method:
          // raw |coef| is not comparable across candidates with different
          // conditional scales, and the Wald ordering collapses under
          // near-separation (Hauck-Donner), while the likelihood drop is
          // scale-free and equals the Wald ordering exactly for gaussian.
          // The threshold rules below stay statistic-specific.
          if (rank_lik.empty()) {
            rank_lik = rank_features(stats, RankMethod::likelihood);
          }
          out.mms = minimum_model_size(rank_lik, active);
          if (pi_rule) {
            auto [fp, fn] = is_magnitude_method(m) ? fp_fn(sel_pi_mag, active)
                                                   : fp_fn(sel_pi_lik, active);
            out.fp_pi = fp;
            out.fn_pi = fn;
          }
          if (fdr_rule) {
            auto [fp, fn] = fp_fn(sel_fdr, active);
            out.fp_fdr = fp;
            out.fn_fdr = fn;
          }
        }
      }
    } catch (const std::exception&) {
      failed[static_cast<size_t>(r)] = 1;
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  long workers = config.workers > 0 ? config.workers : static_cast<long>(hw > 0 ? hw : 1);
  workers = std::min<long>(workers, reps);
  if (workers <= 1) {
    for (long r = 0; r < reps; ++r) {
      process_rep(r);
    }
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (long t = 0; t < workers; ++t) {
      pool.emplace_back([&]() {
        while (true) {
          long r = next.fetch_add(1);
          if (r >= reps) {
            break;
          }
          process_rep(r);
        }
      });
    }
    for (auto& th : pool) {
      th.join();
    }
  }

  const auto t1 = std::chrono::steady_clock::now();
  const double wall =
      config.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
  const long nfailed = std::count(failed.begin(), failed.end(), 1);

  std::vector<ReportRow> rows;
  rows.reserve(nmethods);
  for (size_t mi = 0; mi < nmethods; ++mi) {
    ReportRow row;
    row.method = method_name(config.methods[mi]);
    row.rho = spec.rho;
    row.n = spec.n;
    row.p = spec.p;
    row.family = family_name(spec.family);
    row.replications = reps;
    row.failed = nfailed;
    row.wall_seconds = wall;

    std::vector<long> mms;
    double fp_pi = 0, fn_pi = 0, fp_fdr = 0, fn_fdr = 0;
    long n_pi = 0, n_fdr = 0;
    for (long r = 0; r < reps; ++r) {
      if (failed[static_cast<size_t>(r)]) {
        continue;
      }
      const MethodRep& mr = results[static_cast<size_t>(r)][mi];
      mms.push_back(mr.mms);
      if (mr.fp_pi >= 0) {
        fp_pi += static_cast<double>(mr.fp_pi);
        fn_pi += static_cast<double>(mr.fn_pi);
        ++n_pi;
      }
      if (mr.fp_fdr >= 0) {
        fp_fdr += static_cast<double>(mr.fp_fdr);
        fn_fdr += static_cast<double>(mr.fn_fdr);
        ++n_fdr;
      }
    }
    if (mms.empty()) {
      throw std::runtime_error("run_experiment: every replication failed");
    }
    MmsSummary summary = summarize_mms(mms);
    row.mmms = summary.mmms;
    row.rsd = summary.rsd;
    row.fp_pi = n_pi > 0 ? fp_pi / static_cast<double>(n_pi) : kNaN;
    row.fn_pi = n_pi > 0 ? fn_pi / static_cast<double>(n_pi) : kNaN;
    row.fp_fdr = n_fdr > 0 ? fp_fdr / static_cast<double>(n_fdr) : kNaN;
    row.fn_fdr = n_fdr > 0 ? fn_fdr / static_cast<double>(n_fdr) : kNaN;
    rows.push_back(std::move(row));
  }
  return rows;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "tsv") return ReportFormat::tsv;
  if (name == "pretty" || name == "table") return ReportFormat::pretty;
  throw std::invalid_argument("unknown report format: " + name);
}

namespace {

std::string format_number(double v, const char* fmt = "%.6g") {
  if (std::isnan(v)) {
    return "";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

std::string format_report(const std::vector<ReportRow>& rows, ReportFormat format) {
  static const char* headers[] = {"method", "rho",    "n",      "p",
                                  "family", "mmms",   "rsd",    "fp_pi",
                                  "fn_pi",  "fp_fdr", "fn_fdr", "replications",
                                  "failed", "wall_seconds"};
  constexpr size_t ncol = sizeof(headers) / sizeof(headers[0]);

  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (const auto& r : rows) {
    cells.push_back({r.method, format_number(r.rho), std::to_string(r.n),
                     std::to_string(r.p), r.family, format_number(r.mmms),
                     format_number(r.rsd), format_number(r.fp_pi), format_number(r.fn_pi),
                     format_number(r.fp_fdr), format_number(r.fn_fdr),
                     std::to_string(r.replications), std::to_string(r.failed),
                     format_number(r.wall_seconds, "%.3f")});
  }

  std::ostringstream out;
  if (format == ReportFormat::csv || format == ReportFormat::tsv) {
    const char sep = format == ReportFormat::csv ? ',' : '\t';
    for (size_t c = 0; c < ncol; ++c) {
      out << (c ? std::string(1, sep) : "") << headers[c];
    }
    out << "\n";
    for (const auto& row : cells) {
      for (size_t c = 0; c < ncol; ++c) {
        if (c) {
          out << sep;
        }
        out << row[c];
      }
      out << "\n";
    }
    return out.str();
  }

  std::vector<size_t> width(ncol);
  for (size_t c = 0; c < ncol; ++c) {
    width[c] = std::string(headers[c]).size();
    for (const auto& row : cells) {
      std::string shown = row[c].empty() ? "-" : row[c];
      width[c] = std::max(width[c], shown.size());
    }
  }
  auto emit = [&](const std::vector<std::string>& row, bool header) {
    for (size_t c = 0; c < ncol; ++c) {
      std::string shown = !header && row[c].empty() ? "-" : row[c];
      bool left = c == 0 || c == 4;  // method, family
      if (c) {
        out << "  ";
      }
      if (left) {
        out << shown << std::string(width[c] - shown.size(), ' ');
      } else {
        out << std::string(width[c] - shown.size(), ' ') << shown;
      }
    }
    out << "\n";
  };
  std::vector<std::string> head(headers, headers + ncol);
  emit(head, true);
  size_t total = 0;
  for (size_t c = 0; c < ncol; ++c) {
    total += width[c] + (c ? 2 : 0);
  }
  out << std::string(total, '-') << "\n";
  for (const auto& row : cells) {
    emit(row, false);
  }
  return out.str();
}

RunConfig config_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) {
    throw std::invalid_argument("config must be a JSON object");
  }

  static const char* known[] = {"example", "family", "rho",   "cset",    "n",
                                "p",       "s",      "replications", "seed",
                                "methods", "rules",  "workers", "wald",
                                "permutation", "pool", "timing"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* k : known) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");
    }
  }

  RunConfig config;
  std::string example = doc.value("example", std::string("ex1"));
  Family family = parse_family(doc.value("family", std::string("gaussian")));
  ExampleOptions eopts;
  eopts.rho = doc.value("rho", -1.0);
  eopts.cset = doc.value("cset", 1);
  eopts.n = doc.value("n", 0L);
  eopts.p = doc.value("p", 0L);
  eopts.s = doc.value("s", 0L);
  eopts.replications = doc.value("replications", 0L);
  eopts.seed = doc.value("seed", static_cast<std::uint64_t>(1));
  config.spec = example_spec(example, family, eopts);

  config.methods.clear();
  if (doc.contains("methods")) {
    for (const auto& m : doc.at("methods")) {
      config.methods.push_back(parse_method(m.get<std::string>()));
    }
  } else {
    config.methods = {Method::csis};
  }

  if (doc.contains("rules")) {
    for (const auto& r : doc.at("rules")) {
      ThresholdRule rule;
      std::string kind = r.value("kind", std::string());
      if (kind == "fdr") {
        rule.kind = ThresholdRule::Kind::fdr;
        rule.f = r.value("f", 0.0);
      } else if (kind == "decoupling") {
        rule.kind = ThresholdRule::Kind::decoupling;
        rule.repetitions = r.value("repetitions", 5);
        rule.tau = r.value("tau", 0.99);
      } else if (kind == "fixed") {
        rule.kind = ThresholdRule::Kind::fixed_gamma;
        rule.gamma = r.value("gamma", 0.0);
      } else {
        throw std::invalid_argument("config: rule kind must be fdr, decoupling, or fixed");
      }
      config.rules.push_back(rule);
    }
  }

  config.workers = doc.value("workers", 0);
  std::string wald = doc.value("wald", std::string("inverse"));
  if (wald == "inverse") {
    config.wald_mode = WaldMode::inverse_information;
  } else if (wald == "raw") {
    config.wald_mode = WaldMode::raw_information;
  } else {
    throw std::invalid_argument("config: wald must be 'inverse' or 'raw'");
  }
  std::string perm = doc.value("permutation", std::string("joint"));
  if (perm == "joint") {
    config.permutation = PermutationMode::joint;
  } else if (perm == "per-column") {
    config.permutation = PermutationMode::per_column;
  } else {
    throw std::invalid_argument("config: permutation must be 'joint' or 'per-column'");
  }
  std::string pool = doc.value("pool", std::string("pooled"));
  if (pool == "pooled") {
    config.pool = PoolMode::pooled;
  } else if (pool == "rep-max") {
    config.pool = PoolMode::per_repetition_max;
  } else {
    throw std::invalid_argument("config: pool must be 'pooled' or 'rep-max'");
  }
  config.timing = doc.value("timing", true);
  return config;
}

}  // namespace csis
