// Acceptance run: one PASS/FAIL line per criterion, details indented below it.
// Usage: acceptance <configs-dir>

#include "oracles.hpp"
#include "pvb/experiment.hpp"

#include <chrono>
#include <iostream>
#include <sstream>

using namespace pvb;

namespace {

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;
};

template <class... T>
std::string cat(const T&... v) {
  std::ostringstream s;
  s.precision(3);
  (s << ... << v);
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CVector ground_state_pvb(const FgHamiltonian& h, const BasisPair& bp, StateVector& ground) {
  const EigenResult e = solve_tise_hermitian(h.dense(), 1);
  ground = {Representation::Theta, e.vectors.col(0), h.grid()};
  return to_pvb(ground, bp).coefficients;
}

// 1. Full-basis identities, N = 16, 64, 256.
Outcome basis_identities() {
  Outcome o{true, {}};
  const auto t0 = std::chrono::steady_clock::now();
  for (Index side : {4, 8, 16}) {
    const Index n = side * side;
    const BasisPair bp = build_basis_pair(make_lattice(make_grid(0.5 * static_cast<double>(n), n), side, side));
    const double e1 = max_abs_from_identity(CMatrix(bp.B.adjoint() * bp.G));
    const double e2 = max_abs_from_identity(CMatrix(bp.G * bp.B.adjoint()));
    const double e3 = max_abs(bp.S - bp.G.adjoint() * bp.G);
    const double e4 = max_abs(bp.S_inv - bp.B.adjoint() * bp.B);
    const double worst = std::max({e1, e2, e3, e4});
    o.pass = o.pass && worst < 1e-10;
    o.details.push_back(cat("N=", n, " max identity error ", worst, " cond(S) ", bp.condition));
  }
  const double dt = seconds_since(t0);
  o.pass = o.pass && dt < 5.0;
  o.details.push_back(cat("runtime ", dt, " s (limit 5)"));
  return o;
}

// 2. Reduced-basis identities on a 16x16 lattice.
Outcome reduced_identities() {
  Outcome o{true, {}};
  const auto t0 = std::chrono::steady_clock::now();
  const Lattice lat = make_lattice(make_grid(32.0, 256, 0.0, -16.0), 16, 16);
  const BasisPair bp = build_basis_pair(lat);
  const StateVector packet = collocate(
      [](double x) { return std::exp(-0.5 * (x - 1.3) * (x - 1.3)) * std::exp(kI * (0.7 * x)); }, lat.grid);
  const CVector psi_b = to_pvb(packet, bp).coefficients;
  for (Index kept : {32, 128}) {
    const Selection sel = select_top_count(psi_b.cwiseAbs(), kept);
    const ReducedBases red = build_reduced(bp, sel);
    const CMatrix r = sel.R();
    const CMatrix p = projector_theta(red);
    const double sub = max_abs(oracle::subtractive_deformed(bp.G, sel.complement, sel.kept) - red.G_tilde);
    const std::vector<std::pair<std::string, double>> errs{
        {"G~^dag B~ - 1", max_abs_from_identity(CMatrix(red.G_tilde.adjoint() * red.B_tilde))},
        {"S~^-1 - R^dag S^-1 R", max_abs(red.S_tilde_inv - r.adjoint() * bp.S_inv * r)},
        {"P~^2 - P~", max_abs(p * p - p)},
        {"P~ - P~^dag", max_abs(p - p.adjoint())},
        {"P~_G~G - R^dag", max_abs(projector_rep(p, bp.G, red.G_tilde) - r.adjoint())},
        {"subtractive oracle", sub}};
    std::string line = cat("N~=", kept);
    for (const auto& [name, e] : errs) {
      o.pass = o.pass && e < 1e-10;
      line += cat("  ", name, " ", e);
    }
    o.details.push_back(line);
  }
  const double dt = seconds_since(t0);
  o.pass = o.pass && dt < 30.0;
  o.details.push_back(cat("runtime ", dt, " s (limit 30)"));
  return o;
}

// 3. Morse: Fourier-grid spectrum equals the full PvB spectrum; bound-state count; E0.
Outcome morse_spectrum() {
  const auto t0 = std::chrono::steady_clock::now();
  const BenchmarkCase c = morse_1d();
  const FgHamiltonian h = assemble_fg_hamiltonian(c.system, c.grid);
  const BasisPair bp = build_basis_pair(c.make_lattice_nd());
  const ReducedHamiltonianFactory fac(h, bp);
  const RVector fg = solve_tise_hermitian(h.dense(), h.size()).energies();
  Eigen::ComplexEigenSolver<CMatrix> es(fac.H_BB(), false);
  RVector pvb = es.eigenvalues().real();
  std::sort(pvb.data(), pvb.data() + pvb.size());
  double rel = 0.0;
  for (Index i = 0; i < fg.size(); ++i) rel = std::max(rel, std::abs(pvb(i) - fg(i)) / std::max(1.0, std::abs(fg(i))));
  const Index below = (fg.array() < 12.0).count();
  const double e0 = std::abs(fg(0) - oracle::morse_levels(12.0, 0.5, 6.0)[0]);
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = rel < 1e-9 && below == 24 && e0 < 1e-6 && dt < 10.0;
  o.details = {cat("max rel spectrum difference ", rel, " (limit 1e-9)"), cat("eigenvalues below 12: ", below),
               cat("|E0 - oracle| ", e0, " (limit 1e-6)"), cat("runtime ", dt, " s (limit 10)")};
  return o;
}

// 4. 2D coupled HO against normal modes.
Outcome coupled_ho_spectrum() {
  const auto t0 = std::chrono::steady_clock::now();
  const BenchmarkCase c = coupled_ho_2d();
  const FgHamiltonian h = assemble_fg_hamiltonian(c.system, c.grid);
  const RVector e = solve_tise_hermitian(h.dense(), 22).energies();
  const auto ref = oracle::quadratic_2d_levels(1.0, 1.0, -0.3, 22);
  double worst = 0.0;
  for (Index i = 0; i < 22; ++i) worst = std::max(worst, std::abs(e(i) - ref[static_cast<std::size_t>(i)]));
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = worst < 1e-5 && dt < 120.0;
  o.details = {cat("max |E - oracle| over 22 states ", worst, " (limit 1e-5)"), cat("runtime ", dt, " s (limit 120)")};
  return o;
}

// 5. Ordering of the four reduced forms on the HO ground state.
Outcome form_ordering() {
  const BenchmarkCase c = harmonic_1d();
  const FgHamiltonian h = assemble_fg_hamiltonian(c.system, c.grid);
  const BasisPair bp = build_basis_pair(c.make_lattice_nd());
  const ReducedHamiltonianFactory fac(h, bp);
  StateVector ground;
  const CVector psi_b = ground_state_pvb(h, bp, ground);
  const double e_fg = solve_tise_hermitian(h.dense(), 1).energies()(0);
  const std::array<HForm, 4> forms{HForm::H1, HForm::H2, HForm::H3, HForm::H4};

  Outcome o{true, {}};
  int window = 0, ratio_fail = 0, h34_fail = 0, solve_fail = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  const Index n = bp.size();
  for (Index k = 1; k <= n; ++k) {
    const Selection sel = select_top_count(psi_b.cwiseAbs(), k);
    const ReducedBases red = build_reduced(bp, sel);
    std::array<double, 4> inf{}, en{};
    bool solved = true;
    for (std::size_t f = 0; f < 4; ++f) {
      try {
        RVector energies;
        const auto states = reduced_eigenstates(forms[f], fac, h, red, 1, energies);
        inf[f] = infidelity(states[0], ground);
        en[f] = energies(0);
      } catch (const Error&) {
        solved = false;
      }
    }
    if (k == n) {
      double worst = 0.0;
      for (std::size_t f = 0; f < 4; ++f) worst = std::max({worst, inf[f], std::abs(en[f] - e_fg)});
      const bool agree = solved && worst < 1e-9;
      o.pass = o.pass && agree;
      o.details.push_back(cat("fraction 1: max infidelity/energy deviation over forms ", worst, " (limit 1e-9)"));
      continue;
    }
    if (!solved) {
      ++solve_fail;
      continue;
    }
    if (inf[0] < 1e-10 || inf[0] > 1e-4) continue;
    ++window;
    const double ratio = inf[1] / inf[0];
    worst_ratio = std::min(worst_ratio, ratio);
    if (ratio < 10.0) ++ratio_fail;
    if (!(inf[2] > 1e-5 && inf[3] > 1e-5)) ++h34_fail;
    o.details.push_back(cat("fraction ", static_cast<double>(k) / n, ": H1 ", inf[0], "  H2 ", inf[1], "  H3 ", inf[2],
                            "  H4 ", inf[3], "  H2/H1 ", ratio));
  }
  o.pass = o.pass && window > 0 && ratio_fail == 0 && h34_fail == 0;
  o.details.push_back(cat(window, " fractions with H1 infidelity in [1e-10, 1e-4]; H2/H1 < 10 at ", ratio_fail,
                          " (smallest ratio ", worst_ratio, "); H3 or H4 <= 1e-5 at ", h34_fail,
                          "; unsolvable cells skipped ", solve_fail));
  return o;
}

// 6. Morse scan shape.
Outcome morse_scan() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.case_name = "morse_1d";
  cfg.forms = {HForm::H1, HForm::H2};
  cfg.fractions = {0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.7, 0.8, 0.9, 1.0};
  const RunReport rep = run_tise_scan(cfg, std::max(1u, std::thread::hardware_concurrency()));
  std::map<double, std::array<double, 2>> mean;
  for (std::size_t r = 1; r < rep.rows.size(); ++r) {
    std::stringstream s(rep.rows[r]);
    std::string f, form, idx, energy, inf, m;
    std::getline(s, f, ',');
    std::getline(s, form, ',');
    std::getline(s, idx, ',');
    std::getline(s, energy, ',');
    std::getline(s, inf, ',');
    std::getline(s, m, ',');
    mean[std::stod(f)][form == "H1" ? 0 : 1] = std::stod(m);
  }
  constexpr double noise_factor = 3.0, noise_floor = 1e-13, intermediate_cut = 0.1;
  Outcome o{rep.ok(), {}};
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& [f, m] : mean) {
    const bool monotone = m[0] <= noise_factor * prev + noise_floor;
    const bool intermediate = f < 1.0 && m[0] < intermediate_cut;
    const bool ordered = !intermediate || m[0] <= m[1];
    o.pass = o.pass && monotone && ordered && std::isfinite(m[0]);
    o.details.push_back(cat("fraction ", f, ": H1 ", m[0], "  H2 ", m[1], monotone ? "" : "  [not monotone]",
                            ordered ? "" : "  [H1 > H2]"));
    prev = m[0];
  }
  const double at_one = mean.at(1.0)[0];
  const double dt = seconds_since(t0);
  o.pass = o.pass && at_one < 1e-9 && dt < 180.0;
  o.details.push_back(cat("H1 mean infidelity at fraction 1: ", at_one, " (limit 1e-9); runtime ", dt, " s (limit 180)"));
  for (const auto& e : rep.errors) o.details.push_back("cell error: " + e);
  return o;
}

// 7. Double-well adaptive dynamics, H1 versus H2 at fraction 0.3.
Outcome double_well_dynamics() {
  const auto t0 = std::chrono::steady_clock::now();
  const BenchmarkCase c = double_well_2d();
  const FgHamiltonian h = assemble_fg_hamiltonian(c.system, c.grid);
  const BasisPair bp = build_basis_pair(c.make_lattice_nd());
  const ReducedHamiltonianFactory fac(h, bp);
  const StateVector psi0 = c.initial_state(c.grid);
  const double t2 = 24.6;
  const StateVector ref = FullReference(h).evolve(psi0, t2);
  PropagationControls ctl;
  ctl.rtol = 1e-7;
  ctl.atol = 1e-9;
  std::array<double, 2> inf{};
  Outcome o;
  for (int k = 0; k < 2; ++k) {
    AdaptivePolicy pol;
    pol.value = 0.3;
    pol.form = k == 0 ? HForm::H1 : HForm::H2;
    pol.recheck_interval = 0.1;
    const PropagationResult r = propagate_adaptive(psi0, fac, pol, {0.0, t2}, ctl);
    inf[static_cast<std::size_t>(k)] = infidelity(lift_sample(r, 1, bp), ref);
    o.details.push_back(cat(to_string(pol.form), ": infidelity at t2 ", inf[static_cast<std::size_t>(k)], ", norm ",
                            r.norms.back(), ", ", r.accepted_steps, " steps, ", r.selections.size() - 1, " re-selections"));
  }
  const double dt = seconds_since(t0);
  const bool h1_ok = inf[0] <= 1e-6, h2_ok = inf[1] >= 100.0 * inf[0], time_ok = dt < 600.0;
  o.pass = h1_ok && h2_ok && time_ok;
  o.details.push_back(cat("H1 infidelity <= 1e-6: ", h1_ok ? "yes" : "no", "; H2/H1 = ", inf[1] / inf[0],
                          " (need >= 100); runtime ", dt, " s (limit 600)"));
  return o;
}

// 8. Full-basis unitarity and integrator convergence.
Outcome unitarity_and_order() {
  const BenchmarkCase c = harmonic_1d();
  const FgHamiltonian h = assemble_fg_hamiltonian(c.system, c.grid);
  const BasisPair bp = build_basis_pair(c.make_lattice_nd());
  const ReducedHamiltonianFactory fac(h, bp);
  const StateVector psi0 = c.initial_state(c.grid);
  const OperatorRep hbb{fac.H_BB(), Representation::B, Representation::B, "H_BB"};
  const double period = 2.0 * kPi;
  const StateVector exact = FullReference(h).evolve(psi0, period);

  Outcome o;
  const PropagationResult r = propagate(to_pvb(psi0, bp), hbb, {0.0, period}, {}, bp.S_inv);
  const double drift = std::abs(r.norms[1] - r.norms[0]);
  const double fid = 1.0 - infidelity(lift_sample(r, 1, bp), psi0);
  o.details.push_back(cat("norm drift ", drift, " (limit 1e-8), fidelity after one period ", fid, " (limit 1 - 1e-6)"));

  std::vector<double> err;
  for (double tol : {1.6e-5, 8e-6, 4e-6, 2e-6, 1e-6}) {
    PropagationControls ctl;
    ctl.rtol = tol;
    ctl.atol = tol * 1e-2;
    const PropagationResult q = propagate(to_pvb(psi0, bp), hbb, {0.0, period}, ctl);
    err.push_back((lift_sample(q, 1, bp).coefficients - exact.coefficients).norm() * std::sqrt(bp.weight()));
  }
  const double expected = tolerance_exponent();
  const double slope = std::log2(err.front() / err.back()) / static_cast<double>(err.size() - 1);
  std::string line = "errors for successive tolerance halvings:";
  bool decreasing = true;
  for (std::size_t i = 0; i < err.size(); ++i) {
    line += cat(" ", err[i]);
    if (i > 0) decreasing = decreasing && err[i] < err[i - 1];
  }
  o.details.push_back(line);
  o.details.push_back(cat("observed error exponent per halving ", slope, ", documented ", expected,
                          " (accepted band +-0.3)"));
  o.pass = drift < 1e-8 && fid >= 1.0 - 1e-6 && decreasing && std::abs(slope - expected) <= 0.3;
  return o;
}

std::map<std::string, std::string> read_dir(const std::filesystem::path& d) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(d)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    out[e.path().filename().string()] = s.str();
  }
  return out;
}

// 9. Shipped configs are reproducible byte for byte.
Outcome determinism(const std::filesystem::path& configs) {
  Outcome o{true, {}};
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(configs))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  const auto root = std::filesystem::temp_directory_path() / "pvb_acceptance";
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  for (const auto& f : files) {
    ExperimentConfig cfg = load_config(f);
    std::string note;
    if (cfg.mode == Mode::Tdse) {
      cfg.times = {2.05};
      note = " (horizon cut to t = 2.05)";
    }
    const auto a = root / (f.stem().string() + "_a"), b = root / (f.stem().string() + "_b");
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
    const auto ea = run_experiment(cfg, a, 1);
    const auto eb = run_experiment(cfg, b, jobs);
    const auto fa = read_dir(a), fb = read_dir(b);
    const bool same = !fa.empty() && fa == fb;
    o.pass = o.pass && same;
    o.details.push_back(cat(f.filename().string(), note, ": ", fa.size(), " file(s), ",
                            same ? "identical" : "DIFFERENT", ", failed cells ", ea.size()));
  }
  o.pass = o.pass && !files.empty();
  std::filesystem::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <configs-dir>\n";
    return 2;
  }
  const std::filesystem::path configs = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"basis identities", basis_identities},
      {"reduced-basis identities", reduced_identities},
      {"Morse full-basis spectrum", morse_spectrum},
      {"2D coupled HO spectrum", coupled_ho_spectrum},
      {"H-form accuracy ordering", form_ordering},
      {"Morse scan shape", morse_scan},
      {"double-well adaptive dynamics", double_well_dynamics},
      {"unitarity and propagator convergence", unitarity_and_order},
      {"determinism", [&] { return determinism(configs); }}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, {std::string("exception: ") + e.what()}};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << " ["
              << cat(seconds_since(t0)) << " s]\n";
    for (const auto& d : o.details) std::cout << "    " << d << "\n";
    std::cout.flush();
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed\n";
  return failed ? 1 : 0;
}
