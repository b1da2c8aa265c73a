// Command-line front end. Every subcommand takes `--config FILE` plus one
// flag per key; flags override the file. Exit codes: 0 ok, 1 failed
// criterion, 2 usage error, 3 budget or resource error.

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfh/analysis.hpp"
#include "mfh/chaos.hpp"
#include "mfh/config.hpp"
#include "mfh/error.hpp"
#include "mfh/io.hpp"
#include "mfh/parallel.hpp"
#include "mfh/plot.hpp"
#include "mfh/serialize.hpp"
#include "mfh/spectral.hpp"
#include "mfh/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mfh;

namespace {

struct SubcommandFlags {
  std::string config_file;
  bool print_config = false;
  std::map<std::string, std::string> store;
  std::map<std::string, CLI::Option*> options;
  std::string positional;
};

std::string dashed(std::string s) {
  for (char& c : s)
    if (c == '_') c = '-';
  return s;
}

HurstFunction hurst_of(const RunConfig& c) {
  const std::string kind = c.text("hurst");
  if (kind == "sinusoidal") return make_hurst(HurstKind::Sinusoidal, {c.real("h"), c.real("h_amp"), c.real("h_freq")});
  if (kind == "affine")
    return make_hurst(HurstKind::AffineClamped, {c.real("h"), c.real("h_slope"), c.real("h_lo"), c.real("h_hi")});
  return constant_hurst(c.real("h"));
}

DiscretizationParams disc_of(const RunConfig& c, int n_paths = 1) {
  DiscretizationParams d;
  d.n_grid = static_cast<int>(c.integer("n_grid"));
  d.x_min = c.real("x_min");
  d.seed = c.seed;
  d.desk_caps = c.values.count("desk_caps") ? c.flag("desk_caps") : true;
  d.n_paths = n_paths;
  return d;
}

fs::path out_file(const RunConfig& c, const std::string& suffix) { return c.out_dir / (c.text("stem") + suffix); }

void write_json(const fs::path& f, const json& j) { write_text(f, j.dump(2) + "\n"); }

SamplePath input_path(const RunConfig& c) {
  if (!c.text("input").empty()) return read_path(c.text("input"));
  return simulate_mfh_path(static_cast<int>(c.integer("d")), hurst_of(c), dyadic_grid(static_cast<int>(c.integer("j"))),
                           disc_of(c));
}

CsvTable table(std::vector<std::string> header) { return CsvTable{std::move(header), {}}; }

int run_simulate(const RunConfig& c) {
  const auto n = static_cast<int>(c.integer("replicas"));
  const auto paths = simulate_mfh_replicas(static_cast<int>(c.integer("d")), hurst_of(c),
                                           dyadic_grid(static_cast<int>(c.integer("j"))), disc_of(c, n));
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string stem = n == 1 ? c.text("stem") : c.text("stem") + "_" + std::to_string(i);
    write_path(paths[i], c.out_dir / stem);
  }
  std::cout << "wrote " << paths.size() << " path(s) with " << paths[0].size() << " points to " << c.out_dir << "\n";
  return 0;
}

int run_field(const RunConfig& c) {
  const auto n_h = static_cast<int>(c.integer("n_h"));
  std::vector<double> hs(n_h);
  for (int i = 0; i < n_h; ++i)
    hs[i] = n_h == 1 ? c.real("h_min") : c.real("h_min") + (c.real("h_max") - c.real("h_min")) * i / (n_h - 1);
  const auto f = simulate_field(static_cast<int>(c.integer("d")), dyadic_grid(static_cast<int>(c.integer("j"))), hs,
                                disc_of(c), static_cast<std::uint64_t>(c.integer("replica")));
  write_field(f, out_file(c, ".csv"));
  std::cout << "wrote " << f.times.size() << " x " << f.h_values.size() << " field to " << out_file(c, ".csv") << "\n";
  return 0;
}

int run_spectral(const RunConfig& c) {
  const auto m = increment_model(c.real("t"), c.real("h"), c.real("u"), c.real("h2"),
                                 static_cast<int>(c.integer("n_uniform")));
  save_model(m, c.out_dir / c.text("stem"));
  std::cout << "cells " << m.size() << ", rank " << m.numerical_rank() << ", sum lambda^2 " << format_double(m.sum_sq())
            << ", lambda_1 " << format_double(m.eigenvalues[0]) << "\n";
  return 0;
}

int run_estimate(const RunConfig& c) {
  const std::string method = c.text("method");
  const int j_min = static_cast<int>(c.integer("j_min")), j_max = static_cast<int>(c.integer("j_max"));
  const int d = static_cast<int>(c.integer("d"));
  const double t0 = c.real("t0");
  json out{{"method", method}};
  CsvTable csv;

  if (method == "lass") {
    const auto rep = lass_test(d, hurst_of(c), t0, c.reals("eps"), c.reals("t_grid"),
                               disc_of(c, static_cast<int>(c.integer("replicas"))), c.real("control_shift"));
    csv = table({"eps", "cov_error", "control_error"});
    json scales = json::array();
    for (const auto& s : rep.scales) {
      csv.rows.push_back({s.eps, s.cov_error, s.control_error});
      scales.push_back({{"eps", s.eps}, {"cov_error", s.cov_error}, {"control_error", s.control_error},
                        {"decile_error", s.decile_error}});
    }
    out["t0"] = rep.t0;
    out["h_t0"] = rep.h_t0;
    out["monotone"] = rep.monotone;
    out["scales"] = scales;
  } else {
    const auto path = input_path(c);
    if (method == "holder" || method == "uniform") {
      const auto L = build_leaders(path, j_min, j_max);
      const auto rep = method == "holder" ? pointwise_holder_estimate(L, t0) : uniform_holder_estimate(L, 0.0, 1.0);
      csv = table({"j", "log2_leader", "stderr"});
      for (int j = j_min; j <= j_max; ++j) {
        const auto& l = L.leaders_at(j);
        double v = 0.0;
        if (method == "holder") {
          const auto k = std::min<std::size_t>(dyadic_of_point(t0, j).k, l.size() - 1);
          v = l[k];
        } else {
          v = *std::max_element(l.begin(), l.end());
        }
        if (v > 0) csv.rows.push_back({static_cast<double>(j), std::log2(v), 0.0});
      }
      out["report"] = report_to_json(rep);
    } else {
      const bool modulus = method == "modulus";
      const auto curve = modulus ? modulus_ratio_curve(path, 0.0, 1.0, c.real("h_norm"), d, j_min, j_max)
                                 : lil_statistic(path, t0, c.real("h_norm"), d, j_min, j_max);
      csv = table({"r", "value", "stderr"});
      std::vector<double> x, y;
      for (const auto& p : curve) {
        csv.rows.push_back({p.r, p.value, 0.0});
        x.push_back(p.j);
        y.push_back(std::log2(p.value));
      }
      out["report"] = report_to_json(fit_line(x, y));
      if (modulus) {
        out["peak_to_median"] = curve_peak_to_median(curve);
        out["growth_per_3_scales"] = curve_growth_per_3_scales(curve);
      } else {
        out["running_max"] = running_max(curve).back();
      }
    }
  }
  write_csv(csv, out_file(c, ".csv"));
  write_json(out_file(c, ".json"), out);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_dims(const RunConfig& c) {
  const auto path = input_path(c);
  std::vector<double> eps;
  for (auto j = c.integer("eps_j_lo"); j <= c.integer("eps_j_hi"); ++j) eps.push_back(std::ldexp(1.0, -static_cast<int>(j)));
  if (eps.size() < 2) throw ValidationError("key 'eps_j_hi' must exceed eps_j_lo");
  const auto counts = box_counts(path, 0.0, 1.0, eps);
  const auto rep = box_counting_dimension(path, 0.0, 1.0, eps);
  auto csv = table({"eps", "count", "stderr"});
  for (std::size_t i = 0; i < eps.size(); ++i) csv.rows.push_back({eps[i], counts[i], 0.0});
  write_csv(csv, out_file(c, ".csv"));
  write_json(out_file(c, ".json"), report_to_json(rep));
  std::cout << "box-counting slope " << format_double(rep.slope) << " (r^2 " << format_double(rep.r_squared) << ")\n";
  return 0;
}

int run_smallball(const RunConfig& c) {
  const int d = static_cast<int>(c.integer("d"));
  const double h = c.real("h");
  const auto n = static_cast<std::size_t>(c.integer("samples"));
  std::vector<double> s;
  if (d == 2) {
    s = sample_chaos2(increment_model(1.0, h, 0.0, h, static_cast<int>(c.integer("n_uniform"))), n, c.seed);
  } else {
    const std::vector<double> hh{h};
    DiscretizationParams disc = disc_of(c);
    FieldSimulator sim(3, hh, disc, 1.0);
    s.resize(n);
    parallel_for(n, [&](std::size_t r) { s[r] = sim.run(r)[sim.steps()]; });
  }
  std::vector<double> a(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) a[i] = std::abs(s[i]);
  const std::vector<double> ps{std::max(5e-4, 20.0 / n), 0.2};
  const auto q = quantiles(a, ps);
  const auto curve = small_ball_curve(s, log_grid(q[0], q[1], static_cast<int>(c.integer("x_points"))));
  auto csv = table({"x", "p", "lo", "hi"});
  for (const auto& p : curve.points) csv.rows.push_back({p.x, p.p, p.lo, p.hi});
  write_csv(csv, out_file(c, ".csv"));
  json out{{"d", d}, {"h", h}, {"samples", n}, {"undersampled", curve.undersampled}};
  if (curve.fit) out["fit"] = report_to_json(*curve.fit);
  write_json(out_file(c, ".json"), out);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_verify(const RunConfig& c) {
  const std::string which = c.text("experiment");
  std::vector<Experiment> exps;
  if (which == "all") exps = acceptance_experiments();
  else exps.push_back(find_experiment(which));
  const fs::path dir = c.out_dir / "verify";
  fs::create_directories(dir);
  bool ok = true;
  for (const auto& e : exps) {
    const auto rep = run_experiment(e);
    write_json(dir / (e.name + ".json"), rep.to_json(c.flag("wall_time")));
    std::cout << rep.table() << std::flush;
    ok = ok && rep.pass;
  }
  return ok ? 0 : 1;
}

int run_sweep(const RunConfig& c) {
  const auto csv = sweep(c.text("param"), c.reals("values"), find_experiment(c.text("experiment")));
  write_text(out_file(c, ".csv"), csv);
  std::cout << csv;
  return 0;
}

int run_plot(const RunConfig& c) {
  if (c.text("input").empty()) throw ValidationError("key 'input' is required for plot");
  PlotStyle st;
  st.x_col = static_cast<std::size_t>(c.integer("x_col"));
  st.y_col = static_cast<std::size_t>(c.integer("y_col"));
  st.log_x = c.flag("log_x");
  st.log_y = c.flag("log_y");
  st.fit = c.flag("fit");
  st.title = c.text("title");
  emit_plot(c.text("input"), st, out_file(c, ".svg"));
  std::cout << "wrote " << out_file(c, ".svg") << "\n";
  return 0;
}

int dispatch(const RunConfig& c) {
  const auto& s = c.subcommand;
  if (s == "simulate") return run_simulate(c);
  if (s == "field") return run_field(c);
  if (s == "spectral") return run_spectral(c);
  if (s == "estimate") return run_estimate(c);
  if (s == "dims") return run_dims(c);
  if (s == "smallball") return run_smallball(c);
  if (s == "verify") return run_verify(c);
  if (s == "sweep") return run_sweep(c);
  return run_plot(c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hermite processes with a time-varying Hurst index: simulation, estimators and checks", "mfh"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help and exit");
  std::map<std::string, std::unique_ptr<SubcommandFlags>> flags;

  const std::map<std::string, std::string> about{
      {"simulate", "simulate sample paths of X_d(t, H(t))"},
      {"field", "simulate the generator field on a (t, h) grid"},
      {"spectral", "eigen-decompose a second-chaos increment kernel"},
      {"estimate", "Hölder, modulus, LIL and LASS estimators on a path"},
      {"dims", "box-counting dimension of a path graph"},
      {"smallball", "small-ball probabilities of a second-chaos variable"},
      {"verify", "run a named experiment, or all acceptance experiments"},
      {"sweep", "vary one parameter of an experiment"},
      {"plot", "render a CSV curve as SVG"}};
  for (const auto& name : subcommand_names()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->set_help_flag("--help", "print this help and exit");
    auto& f = *(flags[name] = std::make_unique<SubcommandFlags>());
    sub->add_option("--config", f.config_file, "flat key = value file");
    sub->add_flag("--print-config", f.print_config, "print the resolved configuration and exit");
    if (name == "verify") sub->add_option("name", f.positional, "experiment name or all");
    for (const auto& k : keys_for(name)) {
      std::string help = k.help + "  [" + k.range_text() + "; default " +
                         (k.default_value.empty() ? "none" : k.default_value) + "]";
      auto* opt = sub->add_option("--" + dashed(k.name) + (k.name.find('_') != std::string::npos ? ",--" + k.name : ""),
                                  f.store[k.name], help);
      if (k.type == KeyType::Bool) opt->expected(0, 1);
      f.options[k.name] = opt;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto& f = *flags.at(sub->get_name());
  try {
    std::map<std::string, std::string> over;
    for (const auto& [k, opt] : f.options)
      if (opt->count() > 0) over[k] = f.store[k].empty() ? "true" : f.store[k];
    if (!f.positional.empty()) over["experiment"] = f.positional;
    const RunConfig cfg = f.config_file.empty() ? parse_config(sub->get_name(), {}, over)
                                                : parse_config_file(sub->get_name(), f.config_file, over);
    if (f.print_config) {
      std::cout << cfg.dump();
      return 0;
    }
    if (cfg.threads > 0) set_thread_count(cfg.threads);
    fs::create_directories(cfg.out_dir);
    return dispatch(cfg);
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io: " << e.what() << "\n";
    return 3;
  } catch (const InsufficientRank& e) {
    std::cerr << "resource: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
