//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! run with `--nocapture` to see them.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use qphase::fewmode::{
    build_hamiltonian, coherent_state, evolve, run_double_well, DoubleWellConfig, FockBasis, ModeHamiltonian, StateVector,
};
use qphase::gaussian::{renyi_entropy, GaussianPhasePoint, Pairing, Species};
use qphase::lattice::{build_dispersion, hilbert_dimension, HubbardModel, LatticeSpec, Statistics, Units};
use qphase::plusp::{time_reversal_test, CanonicalWidth, Gauge, PlusPEnsemble, PlusPObservable, PlusPState, PlusPSystem, TimeReversalConfig};
use qphase::stochastic::{run_ensemble, EnsembleConfig, ExactSum, MomentAccumulator, NoiseStream, Reduction, SdeScheme};
use qphase::variational::{anharmonic_run, AnharmonicConfig, PolynomialHamiltonian, Propagator, PropagatorConfig, VariationalState};
use qphase::wigner::{FieldObservable, WignerEnsemble, WignerSystem};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// ⟨a⟩(t) for H = ω a†a + (χ/2) a†²a² from a real coherent amplitude, by direct Fock summation.
fn fock_mean(alpha: f64, omega: f64, chi: f64, nmax: usize, t: f64) -> Complex64 {
    let mut ln_c = vec![0.0; nmax + 1];
    ln_c[0] = -0.5 * alpha * alpha;
    for n in 1..=nmax {
        ln_c[n] = ln_c[n - 1] + alpha.ln() - 0.5 * (n as f64).ln();
    }
    let energy = |n: usize| omega * n as f64 + 0.5 * chi * n as f64 * (n as f64 - 1.0);
    (0..nmax)
        .map(|n| {
            let mag = (ln_c[n] + ln_c[n + 1]).exp() * ((n + 1) as f64).sqrt();
            mag * (-I * (energy(n + 1) - energy(n)) * t).exp()
        })
        .sum()
}

fn criterion_1() -> Outcome {
    let cfg = TimeReversalConfig::default();
    let r = time_reversal_test(&cfg).expect("time reversal run");
    let end = r.times.len() - 1;
    let at = |t: f64| r.times.iter().position(|&x| (x - t).abs() < 1e-9).expect("sampled time");
    let i04 = at(0.4);
    let dev = (r.x_mean[end] - 10.0).abs();
    let recovered = dev <= 2.0 * r.x_error[end];
    let grows = r.x_error[end] > r.x_error[i04];
    outcome(
        recovered && grows,
        format!(
            "|X(1)-10| = {dev:.4} vs 2σ = {:.4}; σ(1.0) = {:.4} > σ(0.4) = {:.4}: {grows}",
            2.0 * r.x_error[end],
            r.x_error[end],
            r.x_error[i04]
        ),
    )
}

fn plusp_kerr_fraction(seed: u64, trajectories: usize) -> (f64, usize) {
    let chi = 0.01;
    let model = HubbardModel::single_mode(0.0, chi);
    let ens = PlusPEnsemble::new(
        PlusPSystem::new(model, Gauge::Identity),
        SdeScheme::midpoint(0.002),
        PlusPState::Coherent(vec![c(10.0, 0.0)]),
        CanonicalWidth::Delta,
        vec![PlusPObservable::X { mode: 0 }],
    )
    .expect("ensemble");
    let slot = ens.slots()[0];
    let times: Vec<f64> = (0..=25).map(|k| 0.02 * k as f64).collect();
    let res = run_ensemble(&ens, &times, &EnsembleConfig { seed, trajectories, reduction: Reduction::Deterministic }).expect("run");
    let within = times
        .iter()
        .enumerate()
        .filter(|&(k, &t)| {
            let e = res.estimates[k][slot];
            let exact = fock_mean(10.0, 0.0, chi, 200, t).re;
            (e.mean - exact).abs() <= 2.0 * e.error
        })
        .count();
    (within as f64 / times.len() as f64, times.len())
}

fn criterion_2() -> Outcome {
    let (frac, n) = plusp_kerr_fraction(1, 10_000);
    outcome(frac >= 0.95, format!("{:.0}/{n} time points within 2σ (fraction {frac:.3}, seed 1)", frac * n as f64))
}

/// Seed-to-seed spread of criterion 2, printed for information only.
fn criterion_2_seed_rate(seeds: u64) -> String {
    let passing = (1..=seeds).filter(|&s| plusp_kerr_fraction(s, 10_000).0 >= 0.95).count();
    format!("{passing}/{seeds} seeds reach 95%")
}

fn variational_errors(components: usize) -> (f64, f64) {
    let cfg = AnharmonicConfig { components, ..AnharmonicConfig::default() };
    let samples = anharmonic_run(&cfg).expect("variational run");
    let alpha = cfg.alpha.re;
    let mut ex = 0.0f64;
    let mut ey = 0.0f64;
    for s in &samples {
        // (u/2)a†²a² is the χ = u convention of the oracle
        let m = fock_mean(alpha, 0.0, cfg.u, 60, s.t);
        ex = ex.max((s.x - m.re).abs());
        ey = ey.max((s.y - m.im).abs());
    }
    (ex, ey)
}

fn criterion_3() -> Outcome {
    let (x16, y16) = variational_errors(16);
    let (x8, y8) = variational_errors(8);
    let e16 = x16.max(y16);
    let e8 = x8.max(y8);
    let pass = x16 <= 0.05 && y16 <= 0.05 && e8 > e16;
    outcome(pass, format!("N=16: max|ΔX| = {x16:.4}, max|ΔY| = {y16:.4}; N=8 max error {e8:.4} > {e16:.4}"))
}

fn criterion_4() -> Outcome {
    let mut rng = NoiseStream::new(44, 0);
    let mut z = || c(rng.normal(), rng.normal());
    // random unitary from Gram-Schmidt on two random vectors
    let a = [z(), z()];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let u0 = [a[0] / na, a[1] / na];
    let b = [z(), z()];
    let proj = u0[0].conj() * b[0] + u0[1].conj() * b[1];
    let b = [b[0] - proj * u0[0], b[1] - proj * u0[1]];
    let nb = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
    let u1 = [b[0] / nb, b[1] / nb];
    let u = DMatrix::from_row_slice(2, 2, &[u0[0], u1[0], u0[1], u1[1]]);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]));
    let omega = &u * d * u.adjoint();

    let components = 8;
    let mut x = Vec::new();
    for _ in 0..components {
        x.push(0.3 * z());
        x.push(z());
        x.push(z());
    }
    let init = VariationalState::from_parameters(components, 2, x).expect("state");
    let h = PolynomialHamiltonian::new(2).and_then(|h| h.with_linear(&omega)).expect("hamiltonian");
    let cfg = PropagatorConfig { dt: 2.0 * PI / 2000.0, ..PropagatorConfig::default() };
    let prop = Propagator::new(h, cfg).expect("propagator");
    let times: Vec<f64> = (0..=100).map(|k| 2.0 * PI * k as f64 / 100.0).collect();
    let states = prop.propagate(&init, &times).expect("propagate");

    let mut amp_dev = 0.0f64;
    let mut weight_dev = 0.0f64;
    for (t, s) in times.iter().zip(&states) {
        let rot = (&omega * c(0.0, -*t)).exp();
        for n in 0..components {
            let a0 = nalgebra::DVector::from_column_slice(init.amplitudes(n));
            let want = &rot * a0;
            for (k, got) in s.amplitudes(n).iter().enumerate() {
                amp_dev = amp_dev.max((got - want[k]).norm());
            }
            weight_dev = weight_dev.max((s.weight(n) - init.weight(n)).norm());
        }
    }
    outcome(
        amp_dev <= 1e-6 && weight_dev <= 1e-6,
        format!("max amplitude deviation {amp_dev:.2e}, max weight drift {weight_dev:.2e} over one period"),
    )
}

fn s2_of(points: &[GaussianPhasePoint]) -> f64 {
    renyi_entropy(points, Pairing::Exact).expect("entropy").s2.expect("defined entropy")
}

/// Jordan-Wigner annihilators on two fermionic modes.
fn jw_annihilators() -> [Matrix4<f64>; 2] {
    let lower = nalgebra::Matrix2::new(0.0, 1.0, 0.0, 0.0);
    let z = nalgebra::Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let id = nalgebra::Matrix2::identity();
    [lower.kronecker(&id).fixed_view::<4, 4>(0, 0).into(), z.kronecker(&lower).fixed_view::<4, 4>(0, 0).into()]
}

/// ρ of the number-conserving fermionic Gaussian with real symmetric ⟨a_i†a_j⟩ = n_ij.
fn fermion_gaussian_rho(n: &nalgebra::Matrix2<f64>) -> Matrix4<f64> {
    let a = jw_annihilators();
    let eig = n.symmetric_eigen();
    let mut rho = Matrix4::identity();
    for k in 0..2 {
        let v = eig.eigenvectors.column(k);
        let b = a[0] * v[0] + a[1] * v[1];
        let bd = b.transpose();
        let f = eig.eigenvalues[k];
        rho *= (b * bd) * (1.0 - f) + (bd * b) * f;
    }
    rho
}

fn criterion_5() -> Outcome {
    let mut worst_b = 0.0f64;
    for nbar in [0.0, 0.5, 1.0, 10.0] {
        let p = GaussianPhasePoint::thermal(Species::Boson, &[nbar]);
        let s2 = s2_of(&[p.clone(), p]);
        worst_b = worst_b.max((s2 - (1.0 + 2.0 * nbar).ln()).abs());
    }
    let mut worst_f = 0.0f64;
    for f in [0.0, 0.3, 0.5, 1.0] {
        let p = GaussianPhasePoint::thermal(Species::Fermion, &[f]);
        let s2 = s2_of(&[p.clone(), p]);
        worst_f = worst_f.max((s2 + (f * f + (1.0 - f) * (1.0 - f)).ln()).abs());
    }

    let n1 = nalgebra::Matrix2::new(0.7, 0.2, 0.2, 0.4);
    let n2 = nalgebra::Matrix2::new(0.3, -0.1, -0.1, 0.9);
    let (w1, w2) = (0.3, 0.7);
    let a = jw_annihilators();
    let mut consistent = true;
    for n in [&n1, &n2] {
        let rho = fermion_gaussian_rho(n);
        for i in 0..2 {
            for j in 0..2 {
                let m = (rho * a[i].transpose() * a[j]).trace();
                consistent &= (m - n[(i, j)]).abs() < 1e-12;
            }
        }
        consistent &= (rho.trace() - 1.0).abs() < 1e-12;
    }
    let rho = fermion_gaussian_rho(&n1) * w1 + fermion_gaussian_rho(&n2) * w2;
    let brute = -(rho * rho).trace().ln();
    let to_c = |m: &nalgebra::Matrix2<f64>| DMatrix::from_fn(2, 2, |i, j| c(m[(i, j)], 0.0));
    let pts = [
        GaussianPhasePoint::new(Species::Fermion, to_c(&n1)).expect("point").with_weight(w1),
        GaussianPhasePoint::new(Species::Fermion, to_c(&n2)).expect("point").with_weight(w2),
    ];
    let mix_err = (s2_of(&pts) - brute).abs();
    outcome(
        worst_b <= 1e-10 && worst_f <= 1e-10 && mix_err <= 1e-8 && consistent,
        format!(
            "boson thermal max error {worst_b:.1e}, fermion single mode {worst_f:.1e}, mixture vs 4x4 density matrix {mix_err:.1e} (S2 = {brute:.6})"
        ),
    )
}

fn wigner_kerr(trajectories: usize, dt: f64, times: &[f64], seed: u64) -> Vec<(f64, f64)> {
    let model = HubbardModel::single_mode(0.0, 0.01);
    let system = WignerSystem::new(model, Vec::new(), true).expect("system");
    let ens = WignerEnsemble::new(system, SdeScheme::midpoint(dt), vec![c(10.0, 0.0)], vec![FieldObservable::X(0)])
        .expect("ensemble");
    let res = run_ensemble(&ens, times, &EnsembleConfig { seed, trajectories, reduction: Reduction::Deterministic })
        .expect("run");
    res.estimates.iter().map(|e| (e[0].mean, e[0].error)).collect()
}

fn criterion_6() -> Outcome {
    let chi = 0.01;
    let times: Vec<f64> = (0..=20).map(|k| 0.01 * k as f64).collect();
    let short = wigner_kerr(10_000, 0.001, &times, 3);
    let worst = times
        .iter()
        .zip(&short)
        .map(|(&t, &(x, _))| {
            let exact = fock_mean(10.0, 0.0, chi, 200, t).re;
            (x - exact).abs() / exact.abs()
        })
        .fold(0.0, f64::max);

    let revival = 2.0 * PI / chi;
    let long = wigner_kerr(500, 0.01, &[0.0, revival], 3);
    let (xw, xw_err) = long[1];
    let exact = fock_mean(10.0, 0.0, chi, 200, revival).re;
    let diverges = (xw - exact).abs() > 0.2 * exact.abs() && (xw - exact).abs() > 5.0 * xw_err;
    outcome(
        worst <= 0.05 && diverges,
        format!(
            "max relative error {worst:.2e} for χN̄t ≤ 0.2; at the revival t = 2π/χ exact X = {exact:.3}, truncated Wigner X = {xw:.3} ± {xw_err:.3}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let cfg = DoubleWellConfig::default();
    let pts = run_double_well(&cfg).expect("double well");
    let squeezed: Vec<f64> = pts.iter().filter(|p| p.s_db_theta < 0.0).map(|p| p.tau).collect();
    let entangled: Vec<f64> = pts.iter().filter(|p| p.e_product < 1.0).map(|p| p.tau).collect();
    let min_s = pts.iter().map(|p| p.s_db_theta).fold(f64::INFINITY, f64::min);
    let min_e = pts.iter().map(|p| p.e_product).fold(f64::INFINITY, f64::min);
    outcome(
        !squeezed.is_empty() && !entangled.is_empty(),
        format!(
            "min S_dB(θ) = {min_s:.2} dB ({} of {} τ values below 0), min E_product = {min_e:.3} ({} below 1)",
            squeezed.len(),
            pts.len(),
            entangled.len()
        ),
    )
}

fn count_occupations(particles: u64, modes: u64) -> u64 {
    if modes == 1 {
        return 1;
    }
    (0..=particles).map(|k| count_occupations(particles - k, modes - 1)).sum()
}

fn criterion_8() -> Outcome {
    let mut mismatches = Vec::new();
    for m in 1..=8u64 {
        for n in 0..=8u64 {
            let got = hilbert_dimension(n, m, Statistics::Boson).expect("count").exact.expect("exact");
            let want = count_occupations(n, m);
            if got != want.into() {
                mismatches.push(format!("boson N={n} M={m}"));
            }
        }
        let subsets = (0..1u64 << m).count() as u64;
        let by_filling: u64 = (0..=m).map(|n| (0..1u64 << m).filter(|s| s.count_ones() as u64 == n).count() as u64).sum();
        let got = hilbert_dimension(m, m, Statistics::Fermion).expect("count").exact.expect("exact");
        if got != subsets.into() || by_filling != subsets {
            mismatches.push(format!("fermion M={m}"));
        }
    }
    let lb = hilbert_dimension(500_000, 500_000, Statistics::Boson).expect("count").log10;
    let lf = hilbert_dimension(500_000, 500_000, Statistics::Fermion).expect("count").log10;
    let ok_b = (lb - 300_000.0).abs() <= 3_000.0;
    let ok_f = (lf - 150_000.0).abs() <= 1_500.0;
    outcome(
        mismatches.is_empty() && ok_b && ok_f,
        format!(
            "{} enumeration mismatches for N, M ≤ 8; log10 boson = {lb:.1}, fermion = {lf:.1}",
            mismatches.len()
        ),
    )
}

fn annihilate(psi: &StateVector, mode: usize) -> Vec<Complex64> {
    let b = psi.basis();
    let mut out = vec![c(0.0, 0.0); b.dim()];
    for (i, &a) in psi.amplitudes().iter().enumerate() {
        let occ = b.occupation(i);
        if occ[mode] == 0 {
            continue;
        }
        let mut lower = occ.to_vec();
        lower[mode] -= 1;
        let j = b.index_of(&lower).expect("lowered state in basis");
        out[j] += a * (occ[mode] as f64).sqrt();
    }
    out
}

fn apply_hop(psi: &[Complex64], basis: &FockBasis, to: usize, from: usize) -> Vec<Complex64> {
    let mut out = vec![c(0.0, 0.0); basis.dim()];
    for (i, &a) in psi.iter().enumerate() {
        let occ = basis.occupation(i);
        if to == from {
            out[i] += a * occ[to] as f64;
        } else if occ[from] > 0 {
            let mut next = occ.to_vec();
            next[from] -= 1;
            next[to] += 1;
            let j = basis.index_of(&next).expect("hopped state in sector");
            out[j] += a * ((occ[from] as f64) * (occ[to] as f64 + 1.0)).sqrt();
        }
    }
    out
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// ΔX²ΔY² − 1/16 for one mode, from moments computed on the untruncated operators.
fn quadrature_slack(psi: &StateVector, mode: usize) -> f64 {
    let norm = psi.norm_sqr();
    let a1 = annihilate(psi, mode);
    let a2 = annihilate(&StateVector::new(psi.basis().clone(), a1.clone()).expect("state"), mode);
    let mean = dot(psi.amplitudes(), &a1) / norm;
    let pair = dot(psi.amplitudes(), &a2) / norm;
    let number = dot(&a1, &a1).re / norm;
    let vx = 0.25 * (2.0 * pair.re + 2.0 * number + 1.0) - mean.re * mean.re;
    let vy = 0.25 * (-2.0 * pair.re + 2.0 * number + 1.0) - mean.im * mean.im;
    vx * vy - 1.0 / 16.0
}

/// Smallest Robertson slack ΔJ_iΔJ_j − ½|⟨J_k⟩| over the three spin pairs, on a fixed-number basis.
fn spin_slack(psi: &StateVector) -> f64 {
    let b = psi.basis();
    let v = psi.amplitudes();
    let norm = psi.norm_sqr();
    let h10 = apply_hop(v, b, 1, 0);
    let h01 = apply_hop(v, b, 0, 1);
    let n0 = apply_hop(v, b, 0, 0);
    let n1 = apply_hop(v, b, 1, 1);
    let j: Vec<Vec<Complex64>> = vec![
        h10.iter().zip(&h01).map(|(p, q)| 0.5 * (p + q)).collect(),
        h10.iter().zip(&h01).map(|(p, q)| (p - q) / (2.0 * I)).collect(),
        n0.iter().zip(&n1).map(|(p, q)| 0.5 * (p - q)).collect(),
    ];
    let mean: Vec<f64> = j.iter().map(|w| dot(v, w).re / norm).collect();
    let sd: Vec<f64> = (0..3).map(|k| (dot(&j[k], &j[k]).re / norm - mean[k] * mean[k]).max(0.0).sqrt()).collect();
    (0..3)
        .map(|k| {
            let (p, q) = ((k + 1) % 3, (k + 2) % 3);
            sd[p] * sd[q] - 0.5 * mean[k].abs()
        })
        .fold(f64::INFINITY, f64::min)
}

fn binomial_state(basis: &Arc<FockBasis>, atoms: u32) -> StateVector {
    let mut amps = vec![c(0.0, 0.0); basis.dim()];
    let mut ln_binom = 0.0;
    for k in 0..=atoms {
        if k > 0 {
            ln_binom += ((atoms - k + 1) as f64).ln() - (k as f64).ln();
        }
        let idx = basis.index_of(&[k, atoms - k]).expect("sector state");
        amps[idx] = c((0.5 * ln_binom - 0.5 * atoms as f64 * 2f64.ln()).exp(), 0.0);
    }
    StateVector::new(basis.clone(), amps).expect("state")
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn property_suites() -> Vec<Check> {
    let mut checks = Vec::new();

    // reproducible noise
    let draw = |seed, traj| {
        let mut s = NoiseStream::new(seed, traj);
        (0..1000).map(|_| s.normal().to_bits()).collect::<Vec<u64>>()
    };
    let same = draw(9, 17) == draw(9, 17);
    let distinct = draw(9, 17) != draw(9, 18) && draw(9, 17) != draw(10, 17);
    let model = HubbardModel::single_mode(0.0, 0.01);
    let ens = PlusPEnsemble::new(
        PlusPSystem::new(model, Gauge::Identity),
        SdeScheme::midpoint(0.005),
        PlusPState::Coherent(vec![c(10.0, 0.0)]),
        CanonicalWidth::Delta,
        vec![PlusPObservable::X { mode: 0 }, PlusPObservable::Moment { creation: vec![0], annihilation: vec![0] }],
    )
    .expect("ensemble");
    let number_slot = ens.slots()[1];
    let times: Vec<f64> = (0..=10).map(|k| 0.05 * k as f64).collect();
    let run_in = |threads: usize, reduction| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("pool");
        pool.install(|| run_ensemble(&ens, &times, &EnsembleConfig { seed: 7, trajectories: 2000, reduction }).expect("run"))
    };
    let r1 = run_in(1, Reduction::Deterministic);
    let r4 = run_in(4, Reduction::Deterministic);
    let r4f = run_in(4, Reduction::Fast);
    let rerun = r1 == run_in(1, Reduction::Deterministic);
    checks.push(Check {
        name: "rng reproducibility",
        pass: same && distinct && rerun && r1 == r4 && r1 == r4f,
        detail: format!("stream rerun {same}, streams distinct {distinct}, ensemble rerun {rerun}, 1 vs 4 threads {}", r1 == r4),
    });

    // merge associativity
    let mut rng = NoiseStream::new(3, 0);
    let values: Vec<[f64; 2]> = (0..3000)
        .map(|i| {
            let scale = 10f64.powi((i % 13) as i32 - 6);
            [rng.normal() * scale, rng.normal() * 1e8 + 1.0]
        })
        .collect();
    let acc_of = |s: &[[f64; 2]]| {
        let mut a = MomentAccumulator::new(2);
        let mut e = ExactSum::new();
        for v in s {
            a.push(v);
            e.add(v[0]);
        }
        (a, e)
    };
    let (pa, pb, pc) = (&values[..700], &values[700..1900], &values[1900..]);
    let (mut left, mut le) = acc_of(pa);
    let (b, be) = acc_of(pb);
    left.merge(&b);
    le.merge(&be);
    let (cc, ce) = acc_of(pc);
    left.merge(&cc);
    le.merge(&ce);
    let (mut right_bc, mut re_bc) = acc_of(pb);
    right_bc.merge(&cc);
    re_bc.merge(&ce);
    let (mut right, mut re) = acc_of(pa);
    right.merge(&right_bc);
    re.merge(&re_bc);
    let (whole, we) = acc_of(&values);
    let bits = |a: &MomentAccumulator| {
        a.estimates().iter().flat_map(|e| [e.mean.to_bits(), e.error.to_bits()]).collect::<Vec<u64>>()
    };
    let assoc = bits(&left) == bits(&right) && bits(&left) == bits(&whole);
    let sums = le.value().to_bits() == re.value().to_bits() && le.value().to_bits() == we.value().to_bits();
    checks.push(Check {
        name: "accumulator merge associativity",
        pass: assoc && sums,
        detail: format!("moment accumulators bitwise equal {assoc}, exact sums bitwise equal {sums}"),
    });

    // exact few-mode: norm, energy, number, uncertainty slack
    let basis = Arc::new(FockBasis::new(1, 60).expect("basis"));
    let psi0 = coherent_state(&[c(2.0, 0.5)], &basis).expect("coherent").state;
    let h = build_hamiltonian(&ModeHamiltonian::kerr(DMatrix::from_element(1, 1, 0.3)).expect("h"), &basis).expect("h");
    let e0 = h.expectation(&psi0);
    let mut norm_dev = 0.0f64;
    let mut energy_dev = 0.0f64;
    let mut min_slack = quadrature_slack(&psi0, 0);
    for k in 1..=40 {
        let psi = evolve(&psi0, &h, 0.25 * k as f64).expect("evolve");
        norm_dev = norm_dev.max((psi.norm_sqr() - 1.0).abs());
        energy_dev = energy_dev.max((h.expectation(&psi) - e0).abs() / e0.abs());
        min_slack = min_slack.min(quadrature_slack(&psi, 0));
    }
    let atoms = 40;
    let sector = Arc::new(FockBasis::with_sector(2, atoms, atoms).expect("sector"));
    let hop = DMatrix::from_row_slice(2, 2, &[c(0.1, 0.0), c(-0.4, 0.0), c(-0.4, 0.0), c(0.0, 0.0)]);
    let josephson = ModeHamiltonian::new(hop, DMatrix::from_row_slice(2, 2, &[0.05, 0.03, 0.03, 0.06])).expect("h");
    let dw = build_hamiltonian(&josephson, &sector).expect("h");
    let phi0 = binomial_state(&sector, atoms);
    let de0 = dw.expectation(&phi0);
    let mut number_dev = 0.0f64;
    let mut min_spin = spin_slack(&phi0);
    for k in 1..=40 {
        let phi = evolve(&phi0, &dw, 0.5 * k as f64).expect("evolve");
        norm_dev = norm_dev.max((phi.norm_sqr() - 1.0).abs());
        energy_dev = energy_dev.max((dw.expectation(&phi) - de0).abs() / de0.abs());
        number_dev = number_dev.max((phi.total_number() - atoms as f64).abs());
        min_spin = min_spin.min(spin_slack(&phi));
    }
    checks.push(Check {
        name: "exact few-mode unitarity",
        pass: norm_dev <= 1e-10 && energy_dev <= 1e-9 && number_dev <= 1e-9,
        detail: format!("norm {norm_dev:.1e}, relative energy {energy_dev:.1e}, number {number_dev:.1e}"),
    });
    checks.push(Check {
        name: "uncertainty slack",
        pass: min_slack >= -1e-9 && min_spin >= -1e-9,
        detail: format!("min ΔXΔY slack {min_slack:.3e}, min spin Robertson slack {min_spin:.3e}"),
    });

    // truncated Wigner: lossless lattice keeps the total number on every trajectory
    let lattice = LatticeSpec::new(vec![4], vec![4.0], vec![1.0], Units::Dimensionless).expect("lattice");
    let model = build_dispersion(lattice, &[0.0; 4]).and_then(|m| m.with_interaction(vec![0.05])).expect("model");
    let system = WignerSystem::new(model, Vec::new(), true).expect("system");
    let init = vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
    let ens = WignerEnsemble::new(system, SdeScheme::midpoint(0.002), init, vec![FieldObservable::TotalNumber]).expect("ensemble");
    let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let res = run_ensemble(&ens, &times, &EnsembleConfig { seed: 2, trajectories: 200, reduction: Reduction::Deterministic })
        .expect("run");
    let n0 = res.estimates[0][0].mean;
    let drift = res.estimates.iter().map(|e| (e[0].mean - n0).abs() / n0).fold(0.0, f64::max);
    checks.push(Check {
        name: "wigner number conservation",
        pass: drift <= 1e-6,
        detail: format!("relative drift of the mean total number {drift:.1e} over t = 1"),
    });

    // positive-P: ⟨n⟩ is a martingale under Kerr
    let slot = number_slot;
    let n_dev = r1
        .estimates
        .iter()
        .map(|e| (e[slot].mean - 100.0).abs() / e[slot].error.max(1e-300))
        .fold(0.0, f64::max);
    let exact_start = (r1.estimates[0][slot].mean - 100.0).abs() < 1e-9;
    checks.push(Check {
        name: "positive-P number conservation",
        pass: n_dev <= 3.0 && exact_start,
        detail: format!("max |⟨n⟩ − 100| = {n_dev:.2}σ"),
    });

    // variational: norm and energy over the Kerr revival, and the exact linear case
    let samples = anharmonic_run(&AnharmonicConfig::default()).expect("variational run");
    let (vn0, ve0) = (samples[0].norm, samples[0].energy);
    let vnorm = samples.iter().map(|s| (s.norm - vn0).abs() / vn0).fold(0.0, f64::max);
    let venergy = samples.iter().map(|s| (s.energy - ve0).abs() / ve0.abs()).fold(0.0, f64::max);
    checks.push(Check {
        name: "variational norm/energy conservation",
        pass: vnorm <= 1e-4 && venergy <= 1e-4,
        detail: format!("relative norm drift {vnorm:.2e}, energy drift {venergy:.2e} (bound 1e-4)"),
    });

    // Gaussian entropy: physical ensembles have S2 ≥ 0
    let mut rng = NoiseStream::new(21, 0);
    let mut min_s2 = f64::INFINITY;
    for species in [Species::Boson, Species::Fermion] {
        for _ in 0..50 {
            let pts: Vec<GaussianPhasePoint> = (0..4)
                .map(|_| {
                    let occ: Vec<f64> = (0..3)
                        .map(|_| match species {
                            Species::Boson => 3.0 * rng.uniform(),
                            Species::Fermion => rng.uniform(),
                        })
                        .collect();
                    GaussianPhasePoint::thermal(species, &occ).with_weight(0.1 + rng.uniform())
                })
                .collect();
            min_s2 = min_s2.min(s2_of(&pts));
        }
    }
    checks.push(Check {
        name: "gaussian entropy positivity",
        pass: min_s2 >= -1e-12,
        detail: format!("min S2 over 100 random mixtures {min_s2:.3e}"),
    });
    checks
}

fn criterion_9() -> Outcome {
    let checks = property_suites();
    let mut detail = Vec::new();
    for c in &checks {
        println!("    {} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
        if !c.pass {
            detail.push(c.name);
        }
    }
    let pass = detail.is_empty();
    outcome(
        pass,
        if pass {
            format!("{} suites green", checks.len())
        } else {
            format!("{} of {} suites green; failing: {}", checks.len() - detail.len(), checks.len(), detail.join(", "))
        },
    )
}

#[test]
fn acceptance() {
    let criteria: Vec<(u32, fn() -> Outcome, Option<Duration>)> = vec![
        (1, criterion_1, Some(Duration::from_secs(120))),
        (2, criterion_2, Some(Duration::from_secs(120))),
        (3, criterion_3, Some(Duration::from_secs(60))),
        (4, criterion_4, None),
        (5, criterion_5, None),
        (6, criterion_6, None),
        (7, criterion_7, Some(Duration::from_secs(300))),
        (8, criterion_8, None),
        (9, criterion_9, Some(Duration::from_secs(600))),
    ];
    let mut failed = Vec::new();
    for (n, run, limit) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = o.pass && in_time;
        let budget = limit.map_or(String::new(), |l| format!(" of {}s", l.as_secs()));
        println!(
            "criterion {n}: {} {} [{:.1}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
        if n == 2 {
            let start = Instant::now();
            println!("    info: {} [{:.1}s]", criterion_2_seed_rate(10), start.elapsed().as_secs_f64());
        }
        if !pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
