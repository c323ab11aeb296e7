#pragma once

// Config-driven experiments: eigenvalue scans over reduction fractions,
// reduced-basis dynamics against the full-grid reference, and lattice heat maps.

#include "pvb/systems.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace pvb {

inline constexpr int kConfigSchemaVersion = 1;

enum class Mode { TiseScan, Tdse, Heatmap };

struct AxisOverride {
  double lo = 0.0, hi = 0.0;
  Index n = 0;
};

struct ExperimentConfig {
  std::string case_name;
  Mode mode = Mode::TiseScan;
  std::vector<AxisOverride> grid;  // empty: case default
  std::vector<AxisLattice> lattice;
  double sigma_scale = 1.0;
  double center_shift = 0.5;
  std::vector<HForm> forms{HForm::H1};
  std::vector<double> fractions;
  std::vector<double> thresholds;
  Index states = 0;  // 0: case default
  std::vector<double> times;
  double tolerance = 1e-10;
  int recheck_steps = 10;
  double recheck_interval = 0.0;
  bool growth = true;
  std::vector<Index> heatmap_states;
  std::string output = "result.csv";
  std::string output_dir = ".";
  unsigned seed = 0;
};

inline Mode parse_mode(std::string_view s) {
  if (s == "tise-scan") return Mode::TiseScan;
  if (s == "tdse") return Mode::Tdse;
  if (s == "heatmap") return Mode::Heatmap;
  throw Error("unknown mode '" + std::string(s) + "'");
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  const int version = j.value("schema_version", 0);
  if (version != kConfigSchemaVersion)
    throw Error("config: unsupported schema_version " + std::to_string(version) + " (expected " +
                std::to_string(kConfigSchemaVersion) + ")");
  c.case_name = j.at("case").get<std::string>();
  c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("grid"))
    for (const auto& a : j["grid"]) c.grid.push_back({a.at("lo").get<double>(), a.at("hi").get<double>(), a.at("n").get<Index>()});
  if (j.contains("lattice"))
    for (const auto& a : j["lattice"]) c.lattice.push_back({a.at("nx").get<Index>(), a.at("np").get<Index>()});
  c.sigma_scale = j.value("sigma_scale", 1.0);
  c.center_shift = j.value("center_shift", 0.5);
  if (j.contains("forms")) {
    c.forms.clear();
    for (const auto& f : j["forms"]) c.forms.push_back(parse_form(f.get<std::string>()));
  }
  c.fractions = j.value("fractions", std::vector<double>{});
  c.thresholds = j.value("thresholds", std::vector<double>{});
  c.states = j.value("states", Index{0});
  c.times = j.value("times", std::vector<double>{});
  c.tolerance = j.value("tolerance", 1e-10);
  c.recheck_steps = j.value("recheck_steps", 10);
  c.recheck_interval = j.value("recheck_interval", 0.0);
  c.growth = j.value("growth", true);
  c.heatmap_states = j.value("heatmap_states", std::vector<Index>{});
  c.output = j.value("output", std::string("result.csv"));
  c.output_dir = j.value("output_dir", std::string("."));
  c.seed = j.value("seed", 0u);

  if (c.forms.empty()) throw Error("config: 'forms' must not be empty");
  for (double f : c.fractions)
    if (!(f > 0.0 && f <= 1.0)) throw Error("config: fractions must lie in (0, 1]");
  for (double t : c.thresholds)
    if (!(t >= 0.0)) throw Error("config: thresholds must be non-negative");
  if (c.mode != Mode::Heatmap && c.fractions.empty() && c.thresholds.empty())
    throw Error("config: a 'fractions' or 'thresholds' sweep is required");
  if (!(c.tolerance > 0.0)) throw Error("config: tolerance must be positive");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse_config(nlohmann::json::parse(in));
}

/// Shortest round-trip decimal representation; independent of locale.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt(Index v) { return std::to_string(v); }

inline BenchmarkCase configured_case(const ExperimentConfig& cfg) {
  BenchmarkCase c = case_by_name(cfg.case_name);
  if (!cfg.grid.empty()) {
    if (cfg.grid.size() != c.grid.dimension()) throw Error("config: grid override needs one entry per axis");
    std::vector<Grid1D> axes;
    for (const auto& a : cfg.grid) axes.push_back(interval_grid(a.lo, a.hi, a.n));
    c.grid = GridND(std::move(axes));
  }
  if (!cfg.lattice.empty()) c.lattice = cfg.lattice;
  if (cfg.states > 0) c.tracked_states = cfg.states;
  if (!cfg.times.empty()) c.times = cfg.times;
  return c;
}

struct Sweep {
  bool fraction = true;
  double value = 1.0;
};

inline std::vector<Sweep> sweep_points(const ExperimentConfig& cfg) {
  std::vector<Sweep> s;
  for (double f : cfg.fractions) s.push_back({true, f});
  for (double t : cfg.thresholds) s.push_back({false, t});
  return s;
}

/// Runs `cells` jobs on up to `jobs` threads; results come back in index order.
template <class Result, class F>
std::vector<Result> run_cells(std::size_t cells, unsigned jobs, F&& work) {
  std::vector<Result> out(cells);
  std::size_t next = 0;
  std::mutex m;
  auto worker = [&]() {
    while (true) {
      std::size_t i;
      {
        std::lock_guard lock(m);
        if (next >= cells) return;
        i = next++;
      }
      out[i] = work(i);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cells)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

struct RunReport {
  std::vector<std::string> rows;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

struct CellOutput {
  std::vector<std::string> rows;
  std::string error;
};

/// Combined footprint of a set of reference states: cell i scores the largest
/// |psi_B| it has in any of them, each state normalized to unit peak. Keeping the
/// top cells by this score is the union of per-state supports at a common cutoff.
inline RVector footprint_score(const CMatrix& psi_b_columns) {
  RVector score = RVector::Zero(psi_b_columns.rows());
  for (Index c = 0; c < psi_b_columns.cols(); ++c) {
    const RVector a = psi_b_columns.col(c).cwiseAbs();
    const double peak = a.maxCoeff();
    if (peak > 0.0) score = score.cwiseMax(a / peak);
  }
  return score;
}

inline Selection sweep_selection(const Sweep& s, const RVector& score) {
  if (s.fraction) return select_top_count(score, fraction_count(s.value, score.size()));
  Index count = 0;
  for (Index i = 0; i < score.size(); ++i)
    if (score(i) >= s.value) ++count;
  return select_top_count(score, std::max<Index>(count, 1));
}

/// Eigenpairs of a reduced form, lifted to samples. H1 and H4 are similar to
/// Hermitian pencils and go through the generalized Hermitian solver.
inline std::vector<StateVector> reduced_eigenstates(HForm form, const ReducedHamiltonianFactory& fac,
                                                    const FgHamiltonian& h, const ReducedBases& red, Index count,
                                                    RVector& energies) {
  const BasisPair& basis = fac.basis();
  EigenResult r;
  CMatrix lift_basis;
  switch (form) {
    case HForm::H1: {
      const CMatrix a = red.B_tilde.adjoint() * h.apply(red.B_tilde);
      r = solve_tise_generalized(a, red.S_tilde_inv, count);
      lift_basis = red.B_tilde;
      break;
    }
    case HForm::H4: {
      const CMatrix a = red.G_check.adjoint() * h.apply(red.G_check);
      r = solve_tise_generalized(a, red.S_check, count, Representation::BCheck);
      r.vectors = red.S_check * r.vectors;
      lift_basis = red.B_check;
      break;
    }
    default: {
      const OperatorRep op = fac.make(form, red.selection);
      r = solve_tise(op, count);
      lift_basis = op.input == Representation::BTilde ? red.B_tilde : red.B_check;
    }
  }
  energies = r.energies();
  std::vector<StateVector> out;
  const double sw = std::sqrt(basis.weight());
  for (Index c = 0; c < count; ++c)
    out.push_back({Representation::Theta, lift_basis * r.vectors.col(c) / sw, basis.grid()});
  return out;
}

inline RunReport run_tise_scan(const ExperimentConfig& cfg, unsigned jobs = 1) {
  const BenchmarkCase c = configured_case(cfg);
  const Index count = c.tracked_states;
  if (count < 1) throw Error("tise-scan: 'states' must be positive");
  const FgHamiltonian h = assemble_fg_hamiltonian(c.system, c.grid);
  const BasisPair basis = build_basis_pair(c.make_lattice_nd(cfg.sigma_scale, cfg.center_shift));
  const ReducedHamiltonianFactory fac(h, basis);

  const EigenResult ref = solve_tise_hermitian(h.dense(), count);
  std::vector<StateVector> ref_states;
  CMatrix ref_b(basis.size(), count);
  for (Index s = 0; s < count; ++s) {
    ref_states.push_back({Representation::Theta, ref.vectors.col(s), c.grid});
    ref_b.col(s) = to_pvb(ref_states.back(), basis).coefficients;
  }
  const RVector score = footprint_score(ref_b);

  const auto sweeps = sweep_points(cfg);
  const std::size_t cells = sweeps.size() * cfg.forms.size();
  auto results = run_cells<CellOutput>(cells, jobs, [&](std::size_t i) {
    const Sweep& sw = sweeps[i / cfg.forms.size()];
    const HForm form = cfg.forms[i % cfg.forms.size()];
    CellOutput out;
    const std::string head = fmt(sw.value) + "," + std::string(to_string(form)) + ",";
    Index n_kept = 0;
    double cond = std::numeric_limits<double>::quiet_NaN();
    try {
      const Selection sel = sweep_selection(sw, score);
      n_kept = sel.size();
      if (n_kept < count) throw Error("reduced basis smaller than the number of tracked states");
      const ReducedBases red = build_reduced(basis, sel);
      cond = red.cond_s_tilde_inv;
      RVector energies;
      const auto states = reduced_eigenstates(form, fac, h, red, count, energies);
      std::vector<double> infid(static_cast<std::size_t>(count));
      double mean = 0.0;
      for (Index s = 0; s < count; ++s) {
        infid[static_cast<std::size_t>(s)] = infidelity(states[static_cast<std::size_t>(s)], ref_states[static_cast<std::size_t>(s)]);
        mean += infid[static_cast<std::size_t>(s)];
      }
      mean /= static_cast<double>(count);
      for (Index s = 0; s < count; ++s)
        out.rows.push_back(head + fmt(s) + "," + fmt(energies(s)) + "," + fmt(infid[static_cast<std::size_t>(s)]) + "," +
                           fmt(mean) + "," + fmt(n_kept) + "," + fmt(cond));
    } catch (const std::exception& e) {
      out.error = head + " " + e.what();
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (Index s = 0; s < count; ++s)
        out.rows.push_back(head + fmt(s) + "," + fmt(nan) + "," + fmt(nan) + "," + fmt(nan) + "," + fmt(n_kept) + "," + fmt(cond));
    }
    return out;
  });

  RunReport rep;
  rep.rows.push_back("fraction,form,state_index,energy,infidelity,mean_infidelity,n_kept,cond_s_tilde_inv");
  for (auto& r : results) {
    rep.rows.insert(rep.rows.end(), r.rows.begin(), r.rows.end());
    if (!r.error.empty()) rep.errors.push_back(r.error);
  }
  return rep;
}

inline RunReport run_tdse(const ExperimentConfig& cfg, unsigned jobs = 1) {
  const BenchmarkCase c = configured_case(cfg);
  if (!c.initial_state) throw Error("tdse: case '" + c.name + "' has no initial state");
  if (c.times.empty()) throw Error("tdse: no snapshot times");
  const FgHamiltonian h = assemble_fg_hamiltonian(c.system, c.grid);
  const BasisPair basis = build_basis_pair(c.make_lattice_nd(cfg.sigma_scale, cfg.center_shift));
  const ReducedHamiltonianFactory fac(h, basis);
  const FullReference ref(h);
  const StateVector psi0 = c.initial_state(c.grid);
  std::vector<double> times = c.times;
  if (times.front() != 0.0) times.insert(times.begin(), 0.0);
  std::vector<StateVector> ref_states;
  for (double t : times) ref_states.push_back(ref.evolve(psi0, t));

  const auto sweeps = sweep_points(cfg);
  const std::size_t cells = sweeps.size() * cfg.forms.size();
  auto results = run_cells<CellOutput>(cells, jobs, [&](std::size_t i) {
    const Sweep& sw = sweeps[i / cfg.forms.size()];
    const HForm form = cfg.forms[i % cfg.forms.size()];
    CellOutput out;
    const std::string head = fmt(sw.value) + "," + std::string(to_string(form)) + ",";
    try {
      AdaptivePolicy pol;
      pol.rule = sw.fraction ? AdaptivePolicy::Rule::Fraction : AdaptivePolicy::Rule::Threshold;
      pol.value = sw.value;
      pol.form = form;
      pol.recheck_steps = cfg.recheck_steps;
      pol.recheck_interval = cfg.recheck_interval;
      pol.growth = cfg.growth;
      PropagationControls ctl;
      ctl.rtol = cfg.tolerance;
      ctl.atol = cfg.tolerance * 1e-2;
      const PropagationResult r = propagate_adaptive(psi0, fac, pol, times, ctl);
      for (std::size_t s = 0; s < times.size(); ++s) {
        const double fid = 1.0 - infidelity(lift_sample(r, s, basis), ref_states[s]);
        const Index n_kept = r.selections[r.selection_of[s]].selection.size();
        out.rows.push_back(head + fmt(times[s]) + "," + fmt(fid) + "," + fmt(n_kept) + "," + fmt(r.norms[s]));
      }
    } catch (const std::exception& e) {
      out.error = head + " " + e.what();
      for (double t : times) out.rows.push_back(head + fmt(t) + ",nan,0,nan");
    }
    return out;
  });

  RunReport rep;
  rep.rows.push_back("fraction,form,t,fidelity,n_kept,norm");
  for (auto& r : results) {
    rep.rows.insert(rep.rows.end(), r.rows.begin(), r.rows.end());
    if (!r.error.empty()) rep.errors.push_back(r.error);
  }
  return rep;
}

struct HeatmapFile {
  std::string name;
  std::vector<std::string> rows;
};

/// |psi_B|^2 lattice maps of full-grid eigenstates, one CSV per state (rows:
/// position cells, columns: momentum cells), plus a 0/1 mask of the cells kept
/// at each configured fraction.
inline std::vector<HeatmapFile> run_heatmap(const ExperimentConfig& cfg) {
  const BenchmarkCase c = configured_case(cfg);
  if (c.grid.dimension() != 1) throw Error("heatmap: 1D cases only");
  const FgHamiltonian h = assemble_fg_hamiltonian(c.system, c.grid);
  const BasisPair basis = build_basis_pair(c.make_lattice_nd(cfg.sigma_scale, cfg.center_shift));
  const Lattice& lat = basis.lattice.axes[0];
  std::vector<Index> wanted = cfg.heatmap_states.empty() ? std::vector<Index>{0} : cfg.heatmap_states;
  const Index top = *std::max_element(wanted.begin(), wanted.end());
  const EigenResult ref = solve_tise_hermitian(h.dense(), top + 1);
  const std::string stem = std::filesystem::path(cfg.output).stem().string();

  auto grid_rows = [&](const std::function<std::string(Index, Index)>& cell) {
    std::vector<std::string> rows;
    for (Index a = 0; a < lat.nx; ++a) {
      std::string line;
      for (Index b = 0; b < lat.np; ++b) line += (b ? "," : "") + cell(a, b);
      rows.push_back(line);
    }
    return rows;
  };

  std::vector<HeatmapFile> files;
  for (Index s : wanted) {
    const StateVector psi{Representation::Theta, ref.vectors.col(s), c.grid};
    const CVector psi_b = to_pvb(psi, basis).coefficients;
    files.push_back({stem + "_state" + std::to_string(s) + ".csv",
                     grid_rows([&](Index a, Index b) { return fmt(std::norm(psi_b(lat.flat(a, b)))); })});
    for (double f : cfg.fractions) {
      const Selection sel = select_top_fraction(psi_b, f);
      std::vector<char> kept(static_cast<std::size_t>(basis.size()), 0);
      for (Index k : sel.kept) kept[static_cast<std::size_t>(k)] = 1;
      files.push_back({stem + "_state" + std::to_string(s) + "_mask_" + fmt(f) + ".csv",
                       grid_rows([&](Index a, Index b) { return kept[static_cast<std::size_t>(lat.flat(a, b))] ? std::string("1") : std::string("0"); })});
    }
  }
  return files;
}

inline void write_lines(const std::filesystem::path& path, const std::vector<std::string>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : rows) out << r << '\n';
}

/// Runs an experiment and writes its files into `dir`; returns error messages of failed cells.
inline std::vector<std::string> run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                               unsigned jobs = 1) {
  std::filesystem::create_directories(dir);
  switch (cfg.mode) {
    case Mode::TiseScan: {
      auto rep = run_tise_scan(cfg, jobs);
      write_lines(dir / cfg.output, rep.rows);
      return rep.errors;
    }
    case Mode::Tdse: {
      auto rep = run_tdse(cfg, jobs);
      write_lines(dir / cfg.output, rep.rows);
      return rep.errors;
    }
    case Mode::Heatmap: {
      for (const auto& f : run_heatmap(cfg)) write_lines(dir / f.name, f.rows);
      return {};
    }
  }
  return {};
}

}  // namespace pvb
