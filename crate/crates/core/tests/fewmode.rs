use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qphase::fewmode::*;
use qphase::linalg::CMatrix;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn kerr_h(chi: &DMatrix<f64>, basis: &Arc<FockBasis>) -> SparseHamiltonian {
    build_hamiltonian(&ModeHamiltonian::kerr(chi.clone()).unwrap(), basis).unwrap()
}

#[test]
fn kerr_eigenvalue_is_normal_ordered() {
    let h = ModeHamiltonian::double_well(0.0, [[1.0, 0.0], [0.0, 0.0]]).unwrap();
    let basis = Arc::new(FockBasis::new(4, 3).unwrap());
    let hs = build_hamiltonian(&h, &basis).unwrap();
    assert!(hs.is_diagonal());
    let idx = basis.index_of(&[2, 0, 0, 0]).unwrap();
    assert!((hs.diagonal()[idx] - 1.0).abs() < 1e-15);
}

#[test]
fn single_particle_tunneling_splits_by_two_omega() {
    let basis = Arc::new(FockBasis::with_sector(4, 1, 1).unwrap());
    let h = build_hamiltonian(&ModeHamiltonian::double_well(1.0, [[0.0; 2]; 2]).unwrap(), &basis).unwrap();
    let eig = h.to_dense().symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    for (e, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
        assert!((e - want).abs() < 1e-12);
    }
}

#[test]
fn coherent_state_examples() {
    let basis = Arc::new(FockBasis::new(1, 30).unwrap());
    let vac = coherent_state(&[c(0.0, 0.0)], &basis).unwrap().state;
    assert!((vac.amplitudes()[0].re - 1.0).abs() < 1e-15);
    let two = coherent_state(&[c(2.0, 0.0)], &basis).unwrap();
    assert!((two.state.total_number() - 4.0).abs() < 1e-10);
    assert!(two.discarded_weight < 1e-10);
    let small = Arc::new(FockBasis::new(1, 5).unwrap());
    let cut = coherent_state(&[c(2.0, 0.0)], &small).unwrap();
    assert!(cut.discarded_weight > 1e-3);
    assert!((cut.state.norm_sqr() - 1.0).abs() < 1e-14);
}

#[test]
fn poisson_cutoff_bounds_tail() {
    for mean in [0.5, 4.0, 50.0, 100.0, 800.0] {
        let n = poisson_cutoff(mean, 1e-10);
        assert!(n as f64 > mean);
        let basis = Arc::new(FockBasis::new(1, n).unwrap());
        let cs = coherent_state(&[c(mean.sqrt(), 0.0)], &basis).unwrap();
        assert!(cs.discarded_weight < 1e-10, "mean {mean}: {}", cs.discarded_weight);
    }
}

#[test]
fn kerr_oracle_revives_and_starts_at_alpha() {
    let chi = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.7]);
    let alpha = [c(1.3, 0.2), c(-0.4, 0.9)];
    let m0 = kerr_oracle(&alpha, &chi, 0.0);
    assert!((m0.mean[0] - alpha[0]).norm() < 1e-15);
    let m = kerr_oracle(&alpha, &chi, 2.0 * PI);
    assert!((m.mean[0] - alpha[0]).norm() < 1e-12);
}

#[test]
fn kerr_oracle_matches_exact_propagation() {
    let chi = DMatrix::from_row_slice(2, 2, &[1.0, 0.804, 0.804, 0.951]);
    let alpha = [c(1.5, 0.5), c(0.8, -1.1)];
    let basis = Arc::new(FockBasis::new(2, 40).unwrap());
    let psi = coherent_state(&alpha, &basis).unwrap().state;
    let h = kerr_h(&chi, &basis);
    for t in [0.0, 0.3, 1.1, 2.5, 2.0 * PI] {
        let phi = evolve(&psi, &h, t).unwrap();
        let table = MomentTable::from_state(&phi);
        let o = kerr_oracle(&alpha, &chi, t);
        for i in 0..2 {
            assert!((table.mean_field(i) - o.mean[i]).norm() < 1e-8, "t={t} mean {i}");
            for j in 0..2 {
                assert!((table.coherence(i, j) - o.coherence[(i, j)]).norm() < 1e-8);
                let pair = phi.expect_ladder(&[Ladder::Annihilate(i), Ladder::Annihilate(j)]).unwrap();
                assert!((pair - o.pair[(i, j)]).norm() < 1e-8, "t={t} pair {i}{j}");
                let nn = table.fourth(i, i, j, j).re;
                assert!((nn - o.number_corr[(i, j)]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn evolution_is_reversible_and_conserving() {
    let basis = Arc::new(FockBasis::new(4, 5).unwrap());
    let alpha = [c(0.8, 0.1), c(0.5, -0.4), c(-0.3, 0.6), c(0.7, 0.0)];
    let psi = coherent_state(&alpha, &basis).unwrap().state;
    let h = build_hamiltonian(&ModeHamiltonian::double_well(0.6, [[1.0, 0.8], [0.8, 0.95]]).unwrap(), &basis).unwrap();
    assert!(h.hermitian_deviation() < 1e-14);
    let e0 = h.expectation(&psi);
    let n0 = psi.total_number();
    let fwd = evolve(&psi, &h, 1.7).unwrap();
    assert!((fwd.norm_sqr() - 1.0).abs() < 1e-8);
    assert!(((h.expectation(&fwd) - e0) / e0).abs() < 1e-8);
    assert!(((fwd.total_number() - n0) / n0).abs() < 1e-8);
    let back = evolve(&fwd, &h, -1.7).unwrap();
    assert!(back.fidelity(&psi) > 1.0 - 1e-7);
    let same = evolve(&psi, &h, 0.0).unwrap();
    assert!((same.fidelity(&psi) - 1.0).abs() < 1e-14);
}

#[test]
fn krylov_and_dense_propagation_agree() {
    let basis = Arc::new(FockBasis::new(3, 7).unwrap());
    let mut lin = CMatrix::zeros(3, 3);
    lin[(0, 1)] = c(0.4, 0.1);
    lin[(1, 0)] = c(0.4, -0.1);
    lin[(1, 2)] = c(0.3, 0.0);
    lin[(2, 1)] = c(0.3, 0.0);
    let chi = DMatrix::from_row_slice(3, 3, &[0.2, 0.05, 0.0, 0.05, 0.1, 0.0, 0.0, 0.0, 0.15]);
    let h = build_hamiltonian(&ModeHamiltonian::new(lin, chi).unwrap(), &basis).unwrap();
    let psi = coherent_state(&[c(1.0, 0.0), c(0.5, 0.5), c(0.0, 0.8)], &basis).unwrap().state;
    let krylov = Propagator::krylov(&h).unwrap().apply(&psi, 2.3).unwrap();
    let dense = h.to_dense();
    let eig = dense.symmetric_eigen();
    let v = &eig.eigenvectors;
    let coeffs = v.adjoint() * CMatrix::from_column_slice(basis.dim(), 1, psi.amplitudes());
    let phased = CMatrix::from_fn(basis.dim(), 1, |i, _| coeffs[(i, 0)] * Complex64::from_polar(1.0, -eig.eigenvalues[i] * 2.3));
    let exact = v * phased;
    let diff: f64 = krylov.amplitudes().iter().zip(exact.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    assert!(diff.sqrt() < 1e-9, "{diff}");
}

#[test]
fn non_hermitian_linear_part_is_rejected() {
    let mut lin = CMatrix::zeros(2, 2);
    lin[(0, 1)] = c(1.0, 0.0);
    assert!(ModeHamiltonian::new(lin, DMatrix::zeros(2, 2)).is_err());
}

#[test]
fn vacuum_has_no_spin() {
    let basis = Arc::new(FockBasis::new(4, 2).unwrap());
    let vac = StateVector::basis_state(basis, &[0, 0, 0, 0]).unwrap();
    let m = schwinger_spins(&vac, PhasePolicy::Auto);
    for w in m.wells {
        assert!(w.mean.iter().all(|x| x.abs() < 1e-15));
        assert!(w.var_x.abs() < 1e-15 && w.var_z.abs() < 1e-15);
    }
    assert!(entanglement_criteria(&m, 0.0).is_err());
}

#[test]
fn independent_coherent_wells_sit_on_the_boundary() {
    let a = c(1.2, 0.3);
    let basis = Arc::new(FockBasis::new(2, 22).unwrap());
    let well = coherent_state(&[a, a], &basis).unwrap().state;
    let table = MomentTable::product(&[&well, &well]).unwrap();
    let m = SpinMoments::from_table(&table, PhasePolicy::Auto);
    for theta in [0.0, 0.4, 1.3] {
        let crit = entanglement_criteria(&m, theta).unwrap();
        assert!((crit.e_product - 1.0).abs() < 1e-6, "{}", crit.e_product);
        assert!((crit.e_sum - 1.0).abs() < 1e-6);
    }
}

#[test]
fn beam_splitter_dual_route_on_kerr_evolved_wells() {
    // Schrödinger: mix the Fock state. Heisenberg: transform the spin operators.
    let chi = [[1.0, 0.6], [0.6, 0.9]];
    let alpha = [c(0.9, 0.0), c(0.7, 0.3), c(0.6, -0.2), c(0.8, 0.1)];
    let basis = Arc::new(FockBasis::new(4, 9).unwrap());
    let psi = coherent_state(&alpha, &basis).unwrap().state;
    let h = build_hamiltonian(&ModeHamiltonian::double_well(0.0, chi).unwrap(), &basis).unwrap();
    let psi = evolve(&psi, &h, 0.8).unwrap();
    let bs = BeamSplitter { angle: 0.6, phase: 0.9 };
    let (mixed, lost0) = beam_splitter(&psi, bs, 0, 2).unwrap();
    let (mixed, lost1) = beam_splitter(&mixed, bs, 1, 3).unwrap();
    assert!(lost0 + lost1 < 1e-6);
    let schr = schwinger_spins(&mixed, PhasePolicy::Fixed(0.3));
    let s = bs.mode_matrix(4, &[(0, 2), (1, 3)]);
    let table = MomentTable::from_state(&psi);
    let heis = SpinMoments::from_table_with(&table, PhasePolicy::Fixed(0.3), &|q| q.transformed(&s));
    for (a, b) in schr.wells.iter().zip(heis.wells.iter()) {
        for k in 0..3 {
            assert!((a.mean[k] - b.mean[k]).abs() < 1e-5);
        }
        assert!((a.var_z - b.var_z).abs() < 1e-5);
        assert!((a.var_x - b.var_x).abs() < 1e-5);
        assert!((a.cov_zx - b.cov_zx).abs() < 1e-5);
    }
    assert!((schr.cross_zx - heis.cross_zx).abs() < 1e-5);
    assert!((schr.cross_xx - heis.cross_xx).abs() < 1e-5);
}

#[test]
fn uncertainty_relation_holds_along_evolution() {
    let basis = Arc::new(FockBasis::new(4, 6).unwrap());
    let alpha = [c(1.0, 0.0), c(1.0, 0.0), c(0.9, 0.1), c(0.9, 0.0)];
    let psi = coherent_state(&alpha, &basis).unwrap().state;
    let h = build_hamiltonian(&ModeHamiltonian::double_well(0.2, [[1.0, 0.8], [0.8, 0.95]]).unwrap(), &basis).unwrap();
    let prop = Propagator::new(&h).unwrap();
    for k in 0..12 {
        let phi = prop.apply(&psi, 0.25 * k as f64).unwrap();
        assert!((phi.norm_sqr() - 1.0).abs() < 1e-8);
        let m = schwinger_spins(&phi, PhasePolicy::Auto);
        for w in m.wells {
            for theta in [0.0, 0.3, 0.9, -1.2] {
                let lhs = w.variance_at(theta) * w.variance_at(theta + PI / 2.0);
                assert!(lhs >= w.mean[1].powi(2) / 4.0 - 1e-10);
                assert!(w.variance_at(theta) >= -1e-12);
            }
        }
    }
}

proptest! {
    #[test]
    fn optimal_theta_beats_grid(vz in 0.01f64..5.0, vx in 0.01f64..5.0, r in -0.99f64..0.99) {
        let cov = r * (vz * vx).sqrt();
        let w = WellSpin { dtheta: 0.0, mean: [0.0, 1.0, 0.0], var_z: vz, var_x: vx, cov_zx: cov, var_y: 0.0 };
        let choice = optimal_theta(&w);
        prop_assert!(choice.theta > -PI / 2.0 && choice.theta <= PI / 2.0);
        let grid = (0..10_000).map(|k| -PI / 2.0 + PI * k as f64 / 10_000.0).map(|t| w.variance_at(t)).fold(f64::INFINITY, f64::min);
        prop_assert!(choice.variance <= grid + 1e-12);
        prop_assert!(w.variance_at(choice.theta + 1e-5) >= choice.variance - 1e-12);
        prop_assert!(w.variance_at(choice.theta - 1e-5) >= choice.variance - 1e-12);
    }

    #[test]
    fn product_criterion_never_exceeds_sum(t in 0.0f64..2.0, theta in -1.5f64..1.5) {
        let basis = Arc::new(FockBasis::new(2, 14).unwrap());
        let chi = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 0.95]);
        let psi = coherent_state(&[c(1.2, 0.0), c(1.1, 0.2)], &basis).unwrap().state;
        let phi = evolve(&psi, &kerr_h(&chi, &basis), t).unwrap();
        let table = MomentTable::product(&[&phi, &psi]).unwrap();
        let s = BeamSplitter::fifty_fifty(PI / 2.0).mode_matrix(4, &[(0, 2), (1, 3)]);
        let m = SpinMoments::from_table_with(&table, PhasePolicy::Auto, &|q| q.transformed(&s));
        let crit = entanglement_criteria(&m, theta).unwrap();
        prop_assert!(crit.e_product <= crit.e_sum + 1e-12);
    }

    #[test]
    fn beam_splitter_preserves_norm(re in proptest::collection::vec(-1.0f64..1.0, 36), im in proptest::collection::vec(-1.0f64..1.0, 36), angle in 0.0f64..3.2, phase in 0.0f64..6.3) {
        let basis = Arc::new(FockBasis::new(2, 5).unwrap());
        let amps: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| c(*a, *b)).collect();
        let mut psi = StateVector::new(basis, amps).unwrap();
        psi.normalize();
        // states with n_a + n_b > cutoff can spill, so only keep the lower triangle
        let b = psi.basis().clone();
        for i in 0..b.dim() {
            if b.occupation(i).iter().sum::<u32>() > 5 {
                psi.amplitudes_mut()[i] = c(0.0, 0.0);
            }
        }
        psi.normalize();
        let (out, lost) = beam_splitter(&psi, BeamSplitter { angle, phase }, 0, 1).unwrap();
        prop_assert!(lost < 1e-20);
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }
}
