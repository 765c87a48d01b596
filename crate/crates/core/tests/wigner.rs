use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qphase::fewmode::{build_hamiltonian, coherent_state, evolve, kerr_oracle, poisson_cutoff, FockBasis, ModeHamiltonian, MomentTable, QuadraticForm};
use qphase::lattice::{build_dispersion, HubbardModel, LatticeSpec, ModeTransform, Units};
use qphase::spin::xi_squared;
use qphase::stochastic::*;
use qphase::wigner::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn two_spin_cell(chi: [f64; 4]) -> HubbardModel {
    let lattice = LatticeSpec::new(vec![1], vec![1.0], vec![1.0, 1.0], Units::Dimensionless).unwrap();
    build_dispersion(lattice, &[0.0, 0.0]).unwrap().with_interaction(chi.to_vec()).unwrap()
}

fn ensemble(system: WignerSystem, dt: f64, init: Vec<Complex64>, obs: Vec<FieldObservable>) -> WignerEnsemble {
    WignerEnsemble::new(system, SdeScheme::midpoint(dt), init, obs).unwrap()
}

fn cfg(seed: u64, n: usize) -> EnsembleConfig {
    EnsembleConfig {
        seed,
        trajectories: n,
        reduction: Reduction::Deterministic,
    }
}

#[test]
fn initial_noise_has_half_quantum_per_mode() {
    let n = 100_000;
    let alpha0 = [c(3.0, -1.0), c(0.0, 0.0)];
    let mut s = NoiseStream::new(1, 0);
    let (mut re2, mut num, mut vac) = (0.0, 0.0, 0.0);
    let mut nums = Vec::with_capacity(n);
    for _ in 0..n {
        let a = sample_initial_wigner(&alpha0, &mut s);
        re2 += (a[0].re - 3.0).powi(2);
        let k = a[0].norm_sqr() - 0.5;
        num += k;
        nums.push(k);
        vac += a[1].norm_sqr();
    }
    let nf = n as f64;
    let var_re = re2 / nf;
    assert!((var_re - 0.25).abs() < 0.0025, "{var_re}");
    let mean = num / nf;
    let sd = (nums.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    assert!((mean - 10.0).abs() < 4.0 * sd / nf.sqrt(), "{mean}");
    assert!((vac / nf - 0.5).abs() < 0.01);
}

#[test]
fn free_field_evolves_linearly_in_k_space() {
    let lattice = LatticeSpec::new(vec![8], vec![4.0], vec![1.0], Units::Dimensionless).unwrap();
    let model = build_dispersion(lattice.clone(), &[0.0; 8]).unwrap();
    let system = WignerSystem::new(model.clone(), vec![], true).unwrap();
    let mut x: Vec<Complex64> = (0..8).map(|j| c((j as f64 * 0.7).cos(), (j as f64).sin() * 0.3)).collect();
    let mut k0 = x.clone();
    let tr = ModeTransform::new(&lattice);
    tr.to_momentum(&mut k0).unwrap();
    let t = 0.8;
    let mut ws = Workspace::default();
    let mut stream = NoiseStream::new(0, 0);
    assert_eq!(integrate(&system, &SdeScheme::midpoint(0.01), 0.0, t, &mut x, &mut stream, &mut ws), StepOutcome::Ok);
    tr.to_momentum(&mut x).unwrap();
    for (m, (a, b)) in x.iter().zip(&k0).enumerate() {
        let expect = b * Complex64::from_polar(1.0, -model.kinetic()[m] * t);
        assert!((a - expect).norm() < 1e-12, "{m}");
    }
}

#[test]
fn free_field_number_moments_are_stationary() {
    let model = HubbardModel::single_mode(1.3, 0.0);
    let system = WignerSystem::new(model, vec![], true).unwrap();
    let ens = ensemble(system, 0.01, vec![c(2.0, 0.0)], vec![FieldObservable::Number(0), FieldObservable::X(0)]);
    let times = [0.0, 1.0, 2.0];
    let r = run_ensemble(&ens, &times, &cfg(3, 4000)).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let n = r.estimates[k][0];
        assert!((n.mean - r.estimates[0][0].mean).abs() <= 1e-6 * t * n.mean, "{} {}", n.mean, r.estimates[0][0].mean);
        let x = r.estimates[k][1];
        assert!((x.mean - 2.0 * (1.3 * t).cos()).abs() < 4.0 * x.error + 1e-12);
    }
}

#[test]
fn kerr_drift_rotates_phase_at_fixed_modulus() {
    let chi = 0.3;
    let system = WignerSystem::new(HubbardModel::single_mode(0.0, chi), vec![], false).unwrap();
    let a = c(1.5, 0.5);
    let d = wigner_drift(&system, 0.0, &[a]).unwrap()[0];
    assert!((d - (-Complex64::i() * chi * a.norm_sqr() * a)).norm() < 1e-14);
    let corrected = WignerSystem::new(HubbardModel::single_mode(0.0, chi), vec![], true).unwrap();
    let d = wigner_drift(&corrected, 0.0, &[a]).unwrap()[0];
    assert!((d - (-Complex64::i() * chi * (a.norm_sqr() - 1.0) * a)).norm() < 1e-14);
    let mut x = vec![a];
    let mut ws = Workspace::default();
    let mut s = NoiseStream::new(0, 0);
    integrate(&system, &SdeScheme::midpoint(0.01), 0.0, 2.0, &mut x, &mut s, &mut ws);
    assert!((x[0].norm() - a.norm()).abs() < 2e-6 * a.norm());
    let expect = a * Complex64::from_polar(1.0, -chi * a.norm_sqr() * 2.0);
    assert!((x[0] - expect).norm() < 1e-4);
}

#[test]
fn kerr_quadrature_matches_exact_at_short_times() {
    let chi = 1e-3;
    let alpha = c(10.0, 0.0);
    let system = WignerSystem::new(HubbardModel::single_mode(0.0, chi), vec![], true).unwrap();
    let ens = ensemble(system, 0.02, vec![alpha], vec![FieldObservable::X(0), FieldObservable::Y(0)]);
    let times = [0.0, 0.5, 1.0, 1.5, 2.0];
    let r = run_ensemble(&ens, &times, &cfg(9, 4000)).unwrap();
    let chim = DMatrix::from_element(1, 1, chi);
    for (k, &t) in times.iter().enumerate() {
        let exact = kerr_oracle(&[alpha], &chim, t).mean[0];
        let (x, y) = (r.estimates[k][0], r.estimates[k][1]);
        let scale = exact.norm();
        assert!((x.mean - exact.re).abs() < 0.02 * scale, "t={t} {} vs {}", x.mean, exact.re);
        assert!((y.mean - exact.im).abs() < 0.02 * scale, "t={t} {} vs {}", y.mean, exact.im);
    }
}

#[test]
fn quadrature_tracks_exact_to_a_quarter_revival_for_two_modes() {
    let chi = [1.0 / 60.0, 0.4 / 60.0, 0.4 / 60.0, 0.8 / 60.0];
    let alphas = [c(50f64.sqrt(), 0.0), c(0.0, 60f64.sqrt())];
    let system = WignerSystem::new(two_spin_cell(chi), vec![], true).unwrap();
    let obs = vec![FieldObservable::X(0), FieldObservable::Y(0), FieldObservable::X(1), FieldObservable::Y(1)];
    let ens = ensemble(system, 0.01, alphas.to_vec(), obs);
    let chim = DMatrix::from_row_slice(2, 2, &chi);
    // the a-mode sees its first revival at χ₁₁ t = 2π
    let times: Vec<f64> = (0..=5).map(|k| k as f64 * 0.5 * std::f64::consts::PI * 60.0 / 5.0).collect();
    let r = run_ensemble(&ens, &times, &cfg(21, 4000)).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let exact = kerr_oracle(&alphas, &chim, t).mean;
        for m in 0..2 {
            let scale = alphas[m].norm();
            let (x, y) = (r.estimates[k][2 * m], r.estimates[k][2 * m + 1]);
            assert!((x.mean - exact[m].re).abs() < 0.05 * scale, "t={t} m={m}");
            assert!((y.mean - exact[m].im).abs() < 0.05 * scale, "t={t} m={m}");
        }
    }
}

fn lattice_energy(system: &WignerSystem, x: &[Complex64]) -> f64 {
    let model = system.model();
    let lattice = model.lattice();
    let cells = lattice.cell_count();
    let spins = lattice.spin_count();
    let mut k = x.to_vec();
    ModeTransform::new(lattice).to_momentum(&mut k).unwrap();
    let mut e: f64 = k.iter().zip(model.kinetic()).map(|(a, w)| w * a.norm_sqr()).sum();
    e += x.iter().zip(model.potential()).map(|(a, v)| v * a.norm_sqr()).sum::<f64>();
    for n in 0..cells {
        for s in 0..spins {
            let ds = x[s * cells + n].norm_sqr();
            let mut off = 0.0;
            for u in 0..spins {
                let du = x[u * cells + n].norm_sqr();
                e += 0.5 * model.chi(s, u) * ds * du;
                off += if u == s { model.chi(s, s) } else { 0.5 * model.chi(s, u) };
            }
            e -= off * ds;
        }
    }
    e
}

#[test]
fn lossless_lattice_conserves_number_and_energy() {
    let lattice = LatticeSpec::new(vec![16], vec![16.0], vec![1.0, 1.2], Units::Dimensionless).unwrap();
    let pot: Vec<f64> = (0..32).map(|m| 0.02 * ((m % 16) as f64 - 8.0).powi(2)).collect();
    let model = build_dispersion(lattice, &pot).unwrap().with_interaction(vec![0.05, 0.04, 0.04, 0.045]).unwrap();
    let system = WignerSystem::new(model, vec![], true).unwrap();
    let mut stream = NoiseStream::new(5, 0);
    let alpha0: Vec<Complex64> = (0..32).map(|m| c(2.0 * (-(((m % 16) as f64 - 8.0) / 4.0).powi(2)).exp(), 0.0)).collect();
    let mut x = sample_initial_wigner(&alpha0, &mut stream);
    let n0: f64 = x.iter().map(|a| a.norm_sqr()).sum();
    let e0 = lattice_energy(&system, &x);
    let mut ws = Workspace::default();
    let t = 2.0;
    integrate(&system, &SdeScheme::midpoint(1e-3), 0.0, t, &mut x, &mut stream, &mut ws);
    let n1: f64 = x.iter().map(|a| a.norm_sqr()).sum();
    let e1 = lattice_energy(&system, &x);
    assert!(((n1 - n0) / n0).abs() < 1e-6 * t, "{n0} {n1}");
    assert!(((e1 - e0) / e0).abs() < 1e-6 * t, "{e0} {e1}");
}

#[test]
fn one_body_loss_decays_number_exponentially() {
    let kappa = 0.2;
    let system = WignerSystem::new(HubbardModel::single_mode(0.0, 0.0), vec![LossChannel::one_body(1, 0, kappa)], true).unwrap();
    let ens = ensemble(system, 0.01, vec![c(6.0, 0.0)], vec![FieldObservable::Number(0)]);
    let times = [0.0, 0.5, 1.0, 2.0, 4.0];
    let r = run_ensemble(&ens, &times, &cfg(13, 4000)).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let e = r.estimates[k][0];
        let expect = 36.0 * (-2.0 * kappa * t).exp();
        assert!((e.mean - expect).abs() < 4.0 * e.error + 1e-9, "t={t} {} vs {expect} ± {}", e.mean, e.error);
    }
}

#[test]
fn one_body_loss_increment_has_the_right_moments() {
    let kappa = 0.5;
    let system = WignerSystem::new(HubbardModel::single_mode(0.0, 0.0), vec![LossChannel::one_body(1, 0, kappa)], true).unwrap();
    let a = c(1.0, 2.0);
    let dt = 0.01;
    let n = 50_000;
    let mut s = NoiseStream::new(2, 0);
    let mut mean = c(0.0, 0.0);
    let mut sq = 0.0;
    for _ in 0..n {
        let d = apply_losses(&system, &[a], &mut s, dt)[0];
        mean += d;
        sq += (d + kappa * a * dt).norm_sqr();
    }
    mean /= n as f64;
    assert!((mean + kappa * a * dt).norm() < 4.0 * (kappa * dt / n as f64).sqrt());
    assert!((sq / n as f64 / (kappa * dt) - 1.0).abs() < 0.03);
}

#[test]
fn two_body_loss_gives_linear_inverse_number() {
    let kappa = 1e-3;
    let n0: f64 = 100.0;
    let system = WignerSystem::new(HubbardModel::single_mode(0.0, 0.0), vec![LossChannel::two_body(1, 0, 0, kappa)], true).unwrap();
    let ens = ensemble(system, 0.005, vec![c(n0.sqrt(), 0.0)], vec![FieldObservable::Number(0)]);
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    let r = run_ensemble(&ens, &times, &cfg(17, 2000)).unwrap();
    let inv: Vec<f64> = r.estimates.iter().map(|e| 1.0 / e[0].mean).collect();
    // 1/n(t) = 1/n₀ + 4κt from dn/dt = −4κn²
    for (k, &t) in times.iter().enumerate() {
        let expect = 1.0 / n0 + 4.0 * kappa * t;
        assert!((inv[k] - expect).abs() < 0.03 * expect, "t={t} {} vs {expect}", inv[k]);
    }
    let slope = (inv[4] - inv[0]) / 1.0;
    let mid = (inv[2] - inv[0]) / 0.5;
    assert!((slope - mid).abs() < 0.05 * slope);
}

#[test]
fn zero_rate_loss_is_bit_identical_to_lossless() {
    let model = two_spin_cell([0.1, 0.05, 0.05, 0.08]);
    let init = vec![c(3.0, 0.0), c(2.0, 1.0)];
    let obs = vec![FieldObservable::X(0), FieldObservable::Y(1), FieldObservable::Number(0)];
    let a = ensemble(WignerSystem::new(model.clone(), vec![], true).unwrap(), 0.01, init.clone(), obs.clone());
    let losses = vec![LossChannel::one_body(2, 0, 0.0), LossChannel::two_body(2, 0, 1, 0.0)];
    let b = ensemble(WignerSystem::new(model, losses, true).unwrap(), 0.01, init, obs);
    let times = [0.0, 0.3, 1.0];
    let ra = run_ensemble(&a, &times, &cfg(4, 64)).unwrap();
    let rb = run_ensemble(&b, &times, &cfg(4, 64)).unwrap();
    for (x, y) in ra.estimates.iter().flatten().zip(rb.estimates.iter().flatten()) {
        assert_eq!(x.mean.to_bits(), y.mean.to_bits());
        assert_eq!(x.error.to_bits(), y.error.to_bits());
    }
}

#[test]
fn invalid_channels_and_observables_are_rejected() {
    let model = two_spin_cell([1.0, 0.0, 0.0, 1.0]);
    let bad = LossChannel {
        multiplicity: vec![1],
        rate: 1.0,
    };
    assert!(WignerSystem::new(model.clone(), vec![bad], true).is_err());
    let empty = LossChannel {
        multiplicity: vec![0, 0],
        rate: 1.0,
    };
    assert!(WignerSystem::new(model.clone(), vec![empty], true).is_err());
    let sys = WignerSystem::new(model, vec![], true).unwrap();
    assert!(WignerEnsemble::new(sys.clone(), SdeScheme::midpoint(0.1), vec![c(1.0, 0.0)], vec![]).is_err());
    assert!(WignerEnsemble::new(sys, SdeScheme::midpoint(0.1), vec![c(1.0, 0.0); 2], vec![FieldObservable::X(2)]).is_err());
}

fn exact_xi2(chi: [f64; 4], n_total: f64, t: f64) -> f64 {
    let amp = c((0.5 * n_total).sqrt(), 0.0);
    let cutoff = poisson_cutoff(0.5 * n_total, 1e-12);
    let basis = Arc::new(FockBasis::new(2, cutoff).unwrap());
    let psi = coherent_state(&[amp, amp], &basis).unwrap().state;
    let h = build_hamiltonian(&ModeHamiltonian::kerr(DMatrix::from_row_slice(2, 2, &chi)).unwrap(), &basis).unwrap();
    let table = MomentTable::from_state(&evolve(&psi, &h, t).unwrap());
    let mut sx = QuadraticForm::zeros(2);
    sx.add_term(0, 1, c(0.5, 0.0));
    sx.add_term(1, 0, c(0.5, 0.0));
    let mut sy = QuadraticForm::zeros(2);
    sy.add_term(0, 1, c(0.0, 0.5));
    sy.add_term(1, 0, c(0.0, -0.5));
    let mut sz = QuadraticForm::zeros(2);
    sz.add_term(0, 0, c(0.5, 0.0));
    sz.add_term(1, 1, c(-0.5, 0.0));
    let forms = [sx, sy, sz];
    let mean = [0, 1, 2].map(|i| table.mean(&forms[i]).re);
    let mut cov = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            cov[i][j] = table.covariance(&forms[i], &forms[j]);
        }
    }
    let n = table.mean(&QuadraticForm::number(2, 0).plus(&QuadraticForm::number(2, 1))).re;
    xi_squared(n, mean, cov).unwrap()
}

#[test]
fn coherent_two_mode_state_has_unit_xi2() {
    let system = WignerSystem::new(two_spin_cell([0.0; 4]), vec![], true).unwrap();
    let amp = c(50f64.sqrt(), 0.0);
    let r = run_squeezing(system, SdeScheme::midpoint(0.1), vec![amp, amp], &[0.0, 1.0], &cfg(8, 8000), 20).unwrap();
    for q in r {
        assert!((q.xi2 - 1.0).abs() < 4.0 * q.error, "{q:?}");
        assert!(q.error < 0.05);
    }
}

#[test]
fn kerr_squeezing_matches_exact_xi2() {
    let chi = [1.0, 0.0, 0.0, 1.0];
    let system = WignerSystem::new(two_spin_cell(chi), vec![], true).unwrap();
    let amp = c(50f64.sqrt(), 0.0);
    let times = [0.0, 0.005, 0.01, 0.02];
    let r = run_squeezing(system, SdeScheme::midpoint(2e-4), vec![amp, amp], &times, &cfg(31, 8000), 20).unwrap();
    for (q, &t) in r.iter().zip(&times) {
        let exact = exact_xi2(chi, 100.0, t);
        if t > 0.0 {
            assert!(exact < 1.0);
            assert!(q.xi2 < 1.0, "t={t} {q:?}");
        }
        assert!((q.xi2 - exact).abs() < 3.0 * q.error + 0.02 * exact, "t={t} {q:?} vs {exact}");
    }
}

#[test]
fn xi2_is_undefined_without_mean_spin() {
    let system = WignerSystem::new(two_spin_cell([0.0; 4]), vec![], true).unwrap();
    let r = run_squeezing(system, SdeScheme::midpoint(0.1), vec![c(0.0, 0.0); 2], &[0.0], &cfg(8, 400), 4);
    assert!(r.is_err());
}

#[test]
fn feshbach_scan_prefers_an_intermediate_detuning() {
    let cfg = FeshbachConfig::default();
    let curves = feshbach_scan(&cfg).unwrap();
    let minima: Vec<f64> = curves.iter().map(|c| c.minimum().unwrap().1.xi2).collect();
    assert_eq!(curves.len(), 4);
    assert!(curves.windows(2).all(|w| w[0].kappa12 > w[1].kappa12));
    let best = minima.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(best == 1 || best == 2, "{minima:?}");
    assert!(minima[1].min(minima[2]) < minima[0] && minima[1].min(minima[2]) < minima[3]);
}
