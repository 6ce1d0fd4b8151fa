#include "runner.hpp"

#include <sys/resource.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>

#include "sgl/capacity_grid.hpp"
#include "sgl/diagnostics.hpp"
#include "sgl/digest.hpp"
#include "sgl/errors.hpp"
#include "sgl/grid_io.hpp"
#include "sgl/model_io.hpp"
#include "sgl/numerics.hpp"
#include "sgl/parallel.hpp"
#include "sgl/reconstruction.hpp"
#include "sgl/spectra.hpp"
#include "sgl/theory.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace sglab {

namespace {

using namespace sgl;

json real(double x) {
  if (std::isfinite(x)) return x;
  return format_real(x);
}

// Outputs are accumulated in memory and written together at the end, so a
// failing command leaves nothing behind.
class Run {
 public:
  Run(std::string subcommand, std::vector<std::string> argv, std::ostream& out, std::ostream& err)
      : subcommand_(std::move(subcommand)), argv_(std::move(argv)), out_(out), err_(err),
        start_(std::chrono::steady_clock::now()) {}

  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

  void input(const std::string& role, const fs::path& path) {
    inputs_.push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_file(path)}});
  }
  void set(const std::string& key, json value) { config_[key] = std::move(value); }

  void output(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
  void output_json(const std::string& name, const json& j) { output(name, j.dump(2) + "\n"); }
  // Binary outputs are produced by a writer callback into the final directory.
  void output_file(const std::string& name, std::function<void(const fs::path&)> writer) {
    writers_.emplace_back(name, std::move(writer));
  }

  void commit(const fs::path& dir) {
    fs::create_directories(dir);
    json outputs = json::array();
    for (const auto& [name, content] : files_) {
      std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
      if (!f) throw InvalidInput("cannot write " + (dir / name).string());
      f << content;
      f.close();
      outputs.push_back({{"file", name}, {"sha256", sha256_hex(content)}});
    }
    for (const auto& [name, writer] : writers_) {
      writer(dir / name);
      outputs.push_back({{"file", name}, {"sha256", sha256_file(dir / name)}});
    }
    rusage ru{};
    getrusage(RUSAGE_SELF, &ru);
    json m;
    m["tool"] = "sglab";
    m["version"] = kVersion;
    m["subcommand"] = subcommand_;
    m["argv"] = argv_;
    m["cwd"] = fs::current_path().string();
    m["config"] = config_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs;
    m["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["peak_rss_kib"] = ru.ru_maxrss;
    std::ofstream f(dir / "manifest.json", std::ios::trunc);
    f << m.dump(2) << '\n';
  }

 private:
  std::string subcommand_;
  std::vector<std::string> argv_;
  std::ostream& out_;
  std::ostream& err_;
  std::chrono::steady_clock::time_point start_;
  json config_ = json::object();
  json inputs_ = json::array();
  std::vector<std::pair<std::string, std::string>> files_;
  std::vector<std::pair<std::string, std::function<void(const fs::path&)>>> writers_;
};

struct QGrid {
  double lo = -5.0, hi = 5.0, step = 0.05;
  void add(CLI::App* app) {
    app->add_option("--q-min", lo, "Smallest q")->capture_default_str();
    app->add_option("--q-max", hi, "Largest q")->capture_default_str();
    app->add_option("--q-step", step, "q spacing")->capture_default_str();
  }
  std::vector<double> values() const { return arange(lo, hi, step); }
};

struct HGrid {
  std::optional<double> lo, hi;
  double step = 0.02;
  void add(CLI::App* app) {
    app->add_option("--h-min", lo, "Smallest H (default 0)");
    app->add_option("--h-max", hi, "Largest H (default H_max + H~ + 0.5)");
    app->add_option("--h-step", step, "H spacing")->capture_default_str();
  }
  std::vector<double> values(double default_hi) const { return arange(lo.value_or(0.0), hi.value_or(default_hi), step); }
};

std::string csv_line(std::initializer_list<std::string> cells) {
  std::string s;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) s += ',';
    s += c;
    first = false;
  }
  return s + '\n';
}

json summary_json(const TheorySummary& s) {
  json j;
  j["eta"] = s.eta;
  j["d"] = s.dim;
  j["homogeneous"] = s.homogeneous;
  j["H_min"] = s.H_min;
  j["H_s"] = s.H_s;
  j["H_max"] = s.H_max;
  j["eta_ell"] = s.eta_ell;
  j["eta_r"] = s.eta_r;
  j["H_ell_of_eta_ell"] = s.H_ell_of_eta_ell;
  j["H_r_of_eta_r"] = s.H_r_of_eta_r;
  j["eta_tilde"] = s.eta_tilde;
  j["eta_tilde_argmin"] = s.eta_tilde_argmin;
  j["H_ell_tilde"] = s.H_ell_tilde;
  j["H_tilde_ell_tilde"] = s.H_tilde_ell_tilde;
  j["q_eta_tilde"] = s.q_eta_tilde;
  j["q_eta_ell_finite"] = s.q_eta_ell_finite;
  j["q_eta_ell"] = real(s.q_eta_ell);
  j["H_ell_zero"] = s.H_ell_zero;
  j["breakpoints"] = {s.breakpoints[0], s.breakpoints[1], s.breakpoints[2], s.breakpoints[3]};
  j["eta_tilde_agreement"] = s.eta_tilde_agreement;
  j["tau_at_q_eta_tilde_residual"] = s.tau_at_q_eta_tilde_residual;
  j["tangency_residual"] = s.tangency_residual;
  j["middle_coefficient_gap"] = s.middle_coefficient_gap;
  return j;
}

void check_consistency(const TheorySummary& s) {
  if (s.tau_at_q_eta_tilde_residual > 1e-9 || s.tangency_residual > 1e-8 || s.eta_tilde_agreement > 1e-6 ||
      s.middle_coefficient_gap > 1e-8) {
    throw NumericalError("theory self-checks failed: tau residual " + format_real(s.tau_at_q_eta_tilde_residual) +
                         ", tangency " + format_real(s.tangency_residual) + ", eta~ agreement " +
                         format_real(s.eta_tilde_agreement));
  }
}

struct Curves {
  std::vector<std::string> names;
  std::vector<double> xs;
  std::vector<std::vector<double>> cols;
};

Curves read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  Curves c;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + " is empty");
  {
    std::istringstream is(line);
    std::string cell;
    while (std::getline(is, cell, ',')) c.names.push_back(cell);
  }
  if (c.names.size() < 2) throw InvalidInput(path.string() + ": need at least two columns");
  c.cols.resize(c.names.size() - 1);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(is, cell, ',')) {
      double v;
      try {
        v = parse_real(cell);
      } catch (const InvalidInput&) {
        throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": bad value '" + cell + "'");
      }
      if (k == 0) {
        c.xs.push_back(v);
      } else if (k < c.names.size()) {
        c.cols[k - 1].push_back(v);
      }
      ++k;
    }
    if (k != c.names.size()) throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
  }
  return c;
}

Curve column(const Curves& c, const std::string& name, const fs::path& path) {
  for (std::size_t k = 1; k < c.names.size(); ++k) {
    if (c.names[k] == name) {
      Curve out;
      out.xs = c.xs;
      out.ys = c.cols[k - 1];
      return out;
    }
  }
  throw InvalidInput(path.string() + " has no column '" + name + "'");
}

GibbsModel load_and_record(Run& run, const std::string& path) {
  auto m = load_model(path);
  run.input("model", path);
  run.set("model_hash", sha256_hex(m.canonical_text()));
  return m;
}

// ---------------------------------------------------------------- theory

struct TheoryCmd {
  std::string model, out;
  double eta = 0.5;
  QGrid q;
  HGrid h;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Model file")->required();
    app->add_option("--eta", eta, "Sampling index in (0,1)")->required();
    app->add_option("--out", out, "Output directory")->required();
    q.add(app);
    h.add(app);
  }

  void exec(Run& run) {
    const auto m = load_and_record(run, model);
    const Theory th(m, eta);
    const auto& s = th.summary();
    check_consistency(s);
    run.set("eta", eta);
    json j = summary_json(s);
    run.output_json("theory.json", j);

    std::string tau = csv_line({"q", "tau_mu", "tau_tilde"});
    for (double x : q.values()) tau += csv_line({format_real(x), format_real(m.tau(x)), format_real(th.tau_tilde(x))});
    run.output("tau.csv", tau);

    std::string spec = csv_line({"H", "D_mu", "D_Mmu"});
    for (double H : h.values(s.H_max + s.H_tilde_ell_tilde + 0.5)) {
      spec += csv_line({format_real(H), format_real(m.tau_star(H)), format_real(th.D_Mmu(H))});
    }
    run.output("spectrum.csv", spec);
    run.out() << "q_eta_tilde=" << format_real(s.q_eta_tilde) << " eta_tilde=" << format_real(s.eta_tilde)
              << " tangency_residual=" << format_real(s.tangency_residual) << '\n';
  }
};

// ---------------------------------------------------------------- simulate

struct SimulateCmd {
  std::string model, out, backend = "index";
  double eta = 0.5, trunc_factor = 1.0;
  int J = 10, deepen = 4;
  std::uint64_t seed = 1;
  std::optional<int> truncation, threads;
  bool csv = false;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Model file")->required();
    app->add_option("--eta", eta, "Sampling index in (0,1)")->required();
    app->add_option("--J", J, "Grid depth")->required();
    app->add_option("--seed", seed, "Field seed")->capture_default_str();
    app->add_option("--backend", backend, "hash or index")->capture_default_str();
    app->add_option("--trunc-factor", trunc_factor, "Slack multiplier (>= 1)")->capture_default_str();
    app->add_option("--truncation", truncation, "Explicit truncation depth");
    app->add_option("--deepen", deepen, "Extra levels for empty neighborhoods")->capture_default_str();
    app->add_flag("--csv", csv, "Also export grid.csv with witness depths");
    app->add_option("--threads", threads, "Worker threads (default LAB_THREADS or hardware)");
    app->add_option("--out", out, "Output directory")->required();
  }

  void exec(Run& run) {
    const auto m = load_and_record(run, model);
    if (m.dim() * J > kMaxGridBits) {
      throw ResourceError("d*J = " + std::to_string(m.dim() * J) + " exceeds the supported limit d*J <= " +
                          std::to_string(kMaxGridBits));
    }
    GridOptions opt;
    opt.trunc_factor = trunc_factor;
    opt.truncation_depth = truncation;
    opt.deepen_levels = deepen;
    opt.threads = resolve_threads(threads);
    opt.keep_witnesses = csv;
    const int T = truncation.value_or(default_truncation_depth(J, eta, trunc_factor));
    const int cap = 64 / m.dim();
    if (T > cap) {
      throw ResourceError("truncation depth " + std::to_string(T) + " exceeds the packed-word limit " +
                          std::to_string(cap) + " for d = " + std::to_string(m.dim()));
    }
    SurvivalField field({seed, eta, m.dim(), parse_backend(backend), std::min(cap, T + deepen)});
    auto grid = build_capacity_grid(m, field, J, opt);
    run.set("eta", eta);
    run.set("J", J);
    run.set("seed", seed);
    run.set("backend", backend);
    run.set("trunc_factor", trunc_factor);
    run.set("truncation_depth", grid.truncation_depth);
    run.set("deepen_levels", deepen);
    run.set("mixer", SurvivalField::mixer_name());

    json s;
    s["J"] = J;
    s["d"] = grid.dim;
    s["truncation_depth"] = grid.truncation_depth;
    s["cells"] = grid.cells();
    s["finite_cells"] = grid.finite_cells();
    s["incomplete_cells"] = grid.incomplete_cells.size();
    s["unresolved_cells"] = grid.unresolved_cells.size();
    s["seed"] = seed;
    s["backend"] = backend;
    s["eta"] = eta;
    s["model_hash"] = grid.provenance.model_hash;
    run.output_json("simulate.json", s);
    auto shared = std::make_shared<CapacityGrid>(std::move(grid));
    run.output_file("grid.bin", [shared](const fs::path& p) { save_grid(*shared, p); });
    if (csv) run.output_file("grid.csv", [shared](const fs::path& p) { export_grid_csv(*shared, p); });
    run.err() << "incomplete cells: " << shared->incomplete_cells.size()
              << " (unresolved after deepening: " << shared->unresolved_cells.size() << ")\n";
  }
};

// ------------------------------------------------------ spectrum / ldspec

std::optional<Theory> optional_theory(Run& run, const std::string& model, std::optional<double> eta,
                                      const CapacityGrid& g) {
  if (model.empty()) return std::nullopt;
  const auto m = load_and_record(run, model);
  if (sha256_hex(m.canonical_text()) != g.provenance.model_hash) {
    run.err() << "warning: model differs from the one the grid was built with\n";
  }
  return Theory(m, eta.value_or(g.provenance.field.eta));
}

struct SpectrumCmd {
  std::string grid, model, out;
  std::optional<double> eta;
  std::optional<int> threads;
  QGrid q;

  void add(CLI::App* app) {
    app->add_option("--grid", grid, "Grid file")->required();
    app->add_option("--model", model, "Model file (adds tau_theory)");
    app->add_option("--eta", eta, "Override eta for the theory column");
    app->add_option("--threads", threads, "Worker threads");
    app->add_option("--out", out, "Output directory")->required();
    q.add(app);
  }

  void exec(Run& run) {
    const auto g = load_grid(grid);
    run.input("grid", grid);
    const auto th = optional_theory(run, model, eta, g);
    const auto qs = q.values();
    const auto c = lq_spectrum(g, qs, resolve_threads(threads));
    std::string csv = th ? csv_line({"q", "tau_emp", "tau_theory"}) : csv_line({"q", "tau_emp"});
    Curve theory;
    theory.xs = qs;
    for (std::size_t i = 0; i < qs.size(); ++i) {
      if (th) {
        theory.ys.push_back(th->tau_tilde(qs[i]));
        csv += csv_line({format_real(qs[i]), format_real(c.ys[i]), format_real(theory.ys.back())});
      } else {
        csv += csv_line({format_real(qs[i]), format_real(c.ys[i])});
      }
    }
    run.output("lq.csv", csv);
    json s;
    s["J"] = g.J;
    s["finite_cells"] = g.finite_cells();
    if (th) {
      const auto gap = compare_curves(c, theory);
      s["sup_gap"] = real(gap.sup);
      s["mean_gap"] = real(gap.mean);
      s["q_at_sup"] = gap.x_at_sup;
    }
    run.output_json("spectrum.json", s);
  }
};

struct LdspecCmd {
  std::vector<std::string> grids;
  std::string model, out;
  std::optional<double> eta;
  double eps = 0.1;
  HGrid h;

  void add(CLI::App* app) {
    app->add_option("--grid", grids, "Grid file(s); several give a depth ladder")->required();
    app->add_option("--model", model, "Model file (adds D_theory)");
    app->add_option("--eta", eta, "Override eta for the theory column");
    app->add_option("--eps", eps, "Half-width of the exponent window")->capture_default_str();
    app->add_option("--out", out, "Output directory")->required();
    h.add(app);
  }

  void exec(Run& run) {
    std::vector<CapacityGrid> gs;
    for (const auto& p : grids) {
      gs.push_back(load_grid(p));
      run.input("grid", p);
    }
    std::size_t deepest = 0;
    for (std::size_t i = 1; i < gs.size(); ++i) {
      if (gs[i].J > gs[deepest].J) deepest = i;
    }
    const auto& g = gs[deepest];
    const auto th = optional_theory(run, model, eta, g);
    double max_exp = 0.0;
    for (double v : g.values) {
      if (v != kNegInf) max_exp = std::max(max_exp, -v / g.J);
    }
    const double default_hi =
        th ? th->summary().H_max + th->summary().H_tilde_ell_tilde + 0.5 : max_exp + 0.5;
    const auto Hs = h.values(default_hi);
    const auto ld = ld_counts(g, Hs, eps);

    std::string csv = th ? csv_line({"H", "f_est", "D_theory"}) : csv_line({"H", "f_est"});
    std::string counts = csv_line({"H", "count"});
    for (std::size_t i = 0; i < Hs.size(); ++i) {
      if (th) {
        csv += csv_line({format_real(Hs[i]), format_real(ld.f.ys[i]), format_real(th->D_Mmu(Hs[i]))});
      } else {
        csv += csv_line({format_real(Hs[i]), format_real(ld.f.ys[i])});
      }
      counts += csv_line({format_real(Hs[i]), std::to_string(ld.counts[i])});
    }
    run.output("ld.csv", csv);
    run.output("ld_counts.csv", counts);
    if (gs.size() > 1) {
      std::vector<const CapacityGrid*> ladder;
      for (const auto& x : gs) ladder.push_back(&x);
      const auto [lo, hi] = ld_envelope(ladder, Hs, eps);
      std::string env = csv_line({"H", "f_lower", "f_upper"});
      for (std::size_t i = 0; i < Hs.size(); ++i) {
        env += csv_line({format_real(Hs[i]), format_real(lo.ys[i]), format_real(hi.ys[i])});
      }
      run.output("ld_envelope.csv", env);
    }

    // Disjoint partition of all cells by exponent, for bookkeeping.
    const double step = h.step;
    std::uint64_t empty = 0, below = 0, above = 0, inside = 0;
    const double lo_edge = Hs.front() - step / 2, hi_edge = Hs.back() + step / 2;
    for (double v : g.values) {
      if (v == kNegInf) {
        ++empty;
        continue;
      }
      const double e = -v / g.J;
      if (e < lo_edge) {
        ++below;
      } else if (e >= hi_edge) {
        ++above;
      } else {
        ++inside;
      }
    }
    json s;
    s["J"] = g.J;
    s["epsilon"] = eps;
    s["cells"] = g.cells();
    s["empty_cells"] = empty;
    s["below_range"] = below;
    s["in_range"] = inside;
    s["above_range"] = above;
    s["partition_total"] = empty + below + inside + above;
    if (th) {
      double sup = 0.0;
      for (std::size_t i = 0; i < Hs.size(); ++i) {
        const double D = th->D_Mmu(Hs[i]);
        if (std::isfinite(D) && std::isfinite(ld.f.ys[i])) sup = std::max(sup, std::abs(D - ld.f.ys[i]));
      }
      s["sup_gap_on_common_support"] = sup;
    }
    run.output_json("ldspec.json", s);
  }
};

// ---------------------------------------------------------------- diagnose

struct DiagnoseCmd {
  std::string model, out, backend = "index";
  double eta = 0.5, eps = 0.15, tol = 0.2;
  int j = 20, bins = 40;
  std::uint64_t seed = 1;
  std::optional<double> eta_prime;
  bool survivors = false;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Model file")->required();
    app->add_option("--eta", eta, "Sampling index")->required();
    app->add_option("--j", j, "Depth")->required();
    app->add_option("--seed", seed, "Field seed")->capture_default_str();
    app->add_option("--backend", backend, "hash or index")->capture_default_str();
    app->add_option("--bins", bins, "Histogram bins")->capture_default_str();
    app->add_option("--eps", eps, "Coverage generation offset (floor(j(eta - eps)))")->capture_default_str();
    app->add_option("--eta-prime", eta_prime, "Root fraction for the root/tail split");
    app->add_option("--tol", tol, "Tail-exponent tolerance")->capture_default_str();
    app->add_flag("--survivors", survivors, "Dump survivors.csv");
    app->add_option("--out", out, "Output directory")->required();
  }

  void exec(Run& run) {
    const auto m = load_and_record(run, model);
    if (m.dim() * j > 64) throw ResourceError("d * j must not exceed 64");
    SurvivalField field({seed, eta, m.dim(), parse_backend(backend), j});
    const Theory th(m, eta);
    const auto& s = th.summary();
    json r;
    r["j"] = j;
    r["seed"] = seed;
    r["backend"] = backend;
    const auto range = survivor_value_range(m, field, j);
    r["survivors"] = range.count;
    r["expected_survivors"] = std::exp2(m.dim() * eta * j);
    r["min_exponent"] = range.empty ? json(nullptr) : json(range.min_exp);
    r["max_exponent"] = range.empty ? json(nullptr) : json(range.max_exp);
    r["predicted_range"] = {s.H_ell_of_eta_ell, s.H_r_of_eta_r};

    const double pad = std::max(0.1, 0.05 * (s.H_max - s.H_min));
    const BinSpec spec{s.H_min - pad, s.H_max + pad, bins};
    const auto hist = survivor_level_histogram(m, field, j, spec);
    std::string csv = csv_line({"H_center", "count", "predicted_log2"});
    for (int b = 0; b < bins; ++b) {
      csv += csv_line({format_real(spec.center(b)), std::to_string(hist.counts[b]), format_real(hist.predicted_log2[b])});
    }
    run.output("histogram.csv", csv);

    const int g_cov = static_cast<int>(std::floor(j * (eta - eps)));
    const int g_mult = static_cast<int>(std::floor(eta * j));
    r["coverage_generation"] = g_cov;
    r["coverage"] = g_cov >= 0 ? json(cylinder_coverage(field, j, g_cov)) : json(nullptr);
    r["multiplicity_generation"] = g_mult;
    r["max_multiplicity"] = max_cylinder_multiplicity(field, j, g_mult);
    if (eta_prime || !s.homogeneous) {
      const double ep = eta_prime.value_or(s.eta_tilde);
      const double target = th.H_ell(ep);
      const auto dec = decomposition_histogram(m, field, j, ep, spec, spec, target, tol);
      r["decomposition"] = {{"eta_prime", ep},
                            {"root_length", dec.root_length},
                            {"tail_target", target},
                            {"tol", tol},
                            {"coverage", dec.coverage},
                            {"covered_cylinders", dec.covered_cylinders},
                            {"occupied_cylinders", dec.occupied_cylinders}};
    }
    run.output_json("diagnose.json", r);
    if (survivors) {
      auto mp = std::make_shared<GibbsModel>(m);
      auto fp = std::make_shared<SurvivalField>(field.config());
      run.output_file("survivors.csv", [mp, fp, jj = j](const fs::path& p) { write_survivor_csv(*mp, *fp, jj, p); });
    }
  }
};

// ------------------------------------------------------------- reconstruct

struct ReconstructCmd {
  std::string model, out, eta_list, word;
  double eta_min = 0.3, eta_max = 0.7, eta_step = 0.05;
  std::optional<double> eta;
  int word_len = 4, jmax = 22, seeds = 16, k_max = 4;
  std::uint64_t seed = 1;
  std::optional<int> threads;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Model file")->required();
    app->add_option("--eta-grid", eta_list, "Comma-separated eta values");
    app->add_option("--eta-min", eta_min, "First eta")->capture_default_str();
    app->add_option("--eta-max", eta_max, "Last eta")->capture_default_str();
    app->add_option("--eta-step", eta_step, "eta spacing")->capture_default_str();
    app->add_option("--word-len", word_len, "Length of the target words")->capture_default_str();
    app->add_option("--jmax", jmax, "Depth budget for w")->capture_default_str();
    app->add_option("--seeds", seeds, "Seeds 1..n per eta")->capture_default_str();
    app->add_option("--word", word, "Reconstruct one word (hex letters) instead");
    app->add_option("--eta", eta, "eta for --word");
    app->add_option("--seed", seed, "Seed for --word")->capture_default_str();
    app->add_option("--k-max", k_max, "Most pieces for --word")->capture_default_str();
    app->add_option("--threads", threads, "Worker threads");
    app->add_option("--out", out, "Output directory")->required();
  }

  void exec(Run& run) {
    const auto m = load_and_record(run, model);
    if (!word.empty()) {
      if (!eta) throw InvalidInput("--word needs --eta");
      const auto u = DyadicWord::parse(m.dim(), word);
      if (m.dim() * (u.depth() + jmax) > 64) throw InvalidInput("|u| + jmax too deep for packed words");
      SurvivalField field({seed, *eta, m.dim(), Backend::Hash, u.depth() + jmax});
      const auto r = reconstruct(m, field, u, jmax, k_max);
      json j;
      j["word"] = word;
      j["eta"] = *eta;
      j["seed"] = seed;
      j["found"] = r.found;
      j["k"] = r.k;
      json pieces = json::array();
      for (const auto& p : r.pieces) {
        pieces.push_back({{"part", p.part.to_string()},
                          {"w", DyadicWord::from_packed(m.dim(), p.w_depth, p.w_index).to_string()},
                          {"w_depth", p.w_depth}});
      }
      j["pieces"] = pieces;
      if (r.found) {
        j["mu_estimate_log2"] = r.mu_estimate_log2;
        j["mu_true_log2"] = m.mu_log2(u);
        j["error_bound_log2"] = r.error_bound_log2;
      }
      j["search_depth_used"] = r.search_depth_used;
      run.output_json("reconstruct.json", j);
      return;
    }
    std::vector<double> etas;
    if (!eta_list.empty()) {
      std::istringstream is(eta_list);
      std::string cell;
      while (std::getline(is, cell, ',')) etas.push_back(parse_real(cell));
    } else {
      etas = arange(eta_min, eta_max, eta_step);
    }
    std::vector<std::uint64_t> seed_list;
    for (int s = 1; s <= seeds; ++s) seed_list.push_back(static_cast<std::uint64_t>(s));
    const auto t = fraction_experiment(m.dim(), etas, word_len, jmax, seed_list, resolve_threads(threads));
    std::string csv = csv_line({"eta", "seed", "word_len", "fraction", "expected_pairs"});
    for (const auto& r : t.rows) {
      csv += csv_line({format_real(r.eta), std::to_string(r.seed), std::to_string(r.word_len), format_real(r.fraction),
                       format_real(r.expected_pairs)});
    }
    run.output("fraction.csv", csv);
    json j;
    j["word_len"] = word_len;
    j["jmax"] = jmax;
    j["seeds"] = seeds;
    json rows = json::array();
    for (std::size_t i = 0; i < etas.size(); ++i) {
      rows.push_back({{"eta", etas[i]},
                      {"mean_fraction", t.mean_fraction[i]},
                      {"expected_pairs", expected_pairs(m.dim(), etas[i], word_len, jmax)}});
    }
    j["by_eta"] = rows;
    j["crossing_eta"] = real(t.crossing_eta());
    run.output_json("reconstruct.json", j);
  }
};

// ----------------------------------------------------------------- compare

struct CompareCmd {
  std::string a, b, a_col, b_col, out;
  std::optional<double> x_min, x_max;

  void add(CLI::App* app) {
    app->add_option("--a", a, "First CSV")->required();
    app->add_option("--a-col", a_col, "Column of the first CSV (default: second column)");
    app->add_option("--b", b, "Second CSV")->required();
    app->add_option("--b-col", b_col, "Column of the second CSV (default: second column)");
    app->add_option("--x-min", x_min, "Restrict to x >= x-min");
    app->add_option("--x-max", x_max, "Restrict to x <= x-max");
    app->add_option("--out", out, "Output directory")->required();
  }

  void exec(Run& run) {
    const auto ca = read_csv(a);
    const auto cb = read_csv(b);
    run.input("a", a);
    run.input("b", b);
    const auto curve_a = column(ca, a_col.empty() ? ca.names[1] : a_col, a);
    const auto curve_b = column(cb, b_col.empty() ? cb.names[1] : b_col, b);
    const auto gap = compare_curves(curve_a, curve_b, x_min.value_or(kNegInf), x_max.value_or(kInf));
    json j;
    j["a"] = a_col.empty() ? ca.names[1] : a_col;
    j["b"] = b_col.empty() ? cb.names[1] : b_col;
    j["points"] = gap.points;
    j["sup_gap"] = real(gap.sup);
    j["mean_gap"] = real(gap.mean);
    j["x_at_sup"] = gap.x_at_sup;
    run.output_json("compare.json", j);
    run.out() << "sup_gap=" << format_real(gap.sup) << " mean_gap=" << format_real(gap.mean)
              << " x_at_sup=" << format_real(gap.x_at_sup) << '\n';
  }
};

std::vector<std::string> strip_run_options(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& s = args[i];
    if (s == "--out" || s == "--threads") {
      ++i;
      continue;
    }
    if (s.rfind("--out=", 0) == 0 || s.rfind("--threads=", 0) == 0) continue;
    kept.push_back(s);
  }
  return kept;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// ------------------------------------------------------------------ replay

int replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  std::ifstream in(manifest_path);
  if (!in) throw InvalidInput("cannot open manifest " + manifest_path);
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw InvalidInput(manifest_path + ": " + e.what());
  }
  if (m.value("version", "") != kVersion) {
    err << "warning: manifest written by version " << m.value("version", "?") << ", replaying with " << kVersion
        << '\n';
  }
  const fs::path target = fs::absolute(out_dir);
  const fs::path original_cwd = fs::current_path();
  fs::current_path(m.at("cwd").get<std::string>());
  struct Restore {
    fs::path cwd;
    ~Restore() { fs::current_path(cwd); }
  } restore{original_cwd};
  for (const auto& i : m.at("inputs")) {
    const auto path = i.at("path").get<std::string>();
    if (!fs::exists(path) || sha256_file(path) != i.at("sha256").get<std::string>()) {
      throw InvalidInput("input " + path + " is missing or changed since the manifest was written");
    }
  }
  auto args = m.at("argv").get<std::vector<std::string>>();
  args.push_back("--out");
  args.push_back(target.string());
  std::ostringstream sink;
  const int code = dispatch(args, sink, err);
  if (code != kOk) return code;
  bool same = true;
  for (const auto& o : m.at("outputs")) {
    const auto name = o.at("file").get<std::string>();
    const auto want = o.at("sha256").get<std::string>();
    const bool ok = fs::exists(target / name) && sha256_file(target / name) == want;
    out << (ok ? "identical " : "MISMATCH  ") << name << '\n';
    same = same && ok;
  }
  return same ? kOk : kNumerical;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sampled Gibbs capacity laboratory", "sglab"};
  app.set_version_flag("--version", std::string("sglab ") + kVersion);
  app.set_config("--config", "", "Read options from a TOML/INI file (flags override it)");
  app.require_subcommand(1);

  TheoryCmd theory;
  SimulateCmd simulate;
  SpectrumCmd spectrum;
  LdspecCmd ldspec;
  DiagnoseCmd diagnose;
  ReconstructCmd recon;
  CompareCmd compare;
  std::string manifest, replay_out;

  auto* c_theory = app.add_subcommand("theory", "Closed-form parameters and curves");
  theory.add(c_theory);
  auto* c_sim = app.add_subcommand("simulate", "Build a sampled capacity grid");
  simulate.add(c_sim);
  auto* c_spec = app.add_subcommand("spectrum", "Empirical free energy of a grid");
  spectrum.add(c_spec);
  auto* c_ld = app.add_subcommand("ldspec", "Large-deviation counts of a grid");
  ldspec.add(c_ld);
  auto* c_diag = app.add_subcommand("diagnose", "Survivor statistics at one depth");
  diagnose.add(c_diag);
  auto* c_rec = app.add_subcommand("reconstruct", "Pair-search reconstruction experiment");
  recon.add(c_rec);
  auto* c_cmp = app.add_subcommand("compare", "Gaps between two curves");
  compare.add(c_cmp);
  auto* c_rep = app.add_subcommand("replay", "Re-run a manifest and compare output hashes");
  c_rep->add_option("--manifest", manifest, "manifest.json to replay")->required();
  c_rep->add_option("--out", replay_out, "Directory for the replayed outputs")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << "sglab " << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (c_rep->parsed()) return replay(manifest, replay_out, out, err);

  const auto sub = app.get_subcommands().front();
  Run run(sub->get_name(), strip_run_options(args), out, err);
  std::string out_dir;
  if (c_theory->parsed()) {
    theory.exec(run);
    out_dir = theory.out;
  } else if (c_sim->parsed()) {
    simulate.exec(run);
    out_dir = simulate.out;
  } else if (c_spec->parsed()) {
    spectrum.exec(run);
    out_dir = spectrum.out;
  } else if (c_ld->parsed()) {
    ldspec.exec(run);
    out_dir = ldspec.out;
  } else if (c_diag->parsed()) {
    diagnose.exec(run);
    out_dir = diagnose.out;
  } else if (c_rec->parsed()) {
    recon.exec(run);
    out_dir = recon.out;
  } else if (c_cmp->parsed()) {
    compare.exec(run);
    out_dir = compare.out;
  }
  run.commit(out_dir);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const sgl::InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const sgl::ResourceError& e) {
    err << "error: " << e.what() << '\n';
    return kResources;
  } catch (const sgl::NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace sglab
