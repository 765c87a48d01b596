//! Executes a parsed scenario against the engines.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qphase::fewmode::{kerr_oracle, rubidium_chi, run_double_well, DoubleWellConfig, DoubleWellPoint};
use qphase::gaussian::{renyi_entropy, GaussianPhasePoint, Species};
use qphase::lattice::{build_dispersion, harmonic_potential, hilbert_dimension, HubbardModel, LatticeSpec};
use qphase::linalg::CMatrix;
use qphase::plusp::{time_reversal_test, Gauge, PlusPEnsemble, PlusPObservable, PlusPState, PlusPSystem, TimeReversalConfig};
use qphase::stochastic::{run_ensemble, EnsembleConfig, SchemeKind, SdeScheme};
use qphase::variational::{self, PolynomialHamiltonian, VariationalState};
use qphase::wigner::{run_squeezing, FieldObservable, WignerEnsemble, WignerSystem};

use crate::scenario::*;

/// A time series or scan written as one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, header: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub scalars: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub text: BTreeMap<String, String>,
    /// Trajectories excluded by the end of the run.
    pub diverged: usize,
    pub inconclusive: bool,
    /// One-line result for the terminal.
    pub summary: String,
}

impl RunOutput {
    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.scalars
            .get(name)
            .copied()
            .or_else(|| self.flags.get(name).map(|&b| if b { 1.0 } else { 0.0 }))
    }
}

#[derive(Debug)]
pub enum RunError {
    Engine(qphase::Error),
    Input(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Engine(e) => write!(f, "{e}"),
            RunError::Input(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<qphase::Error> for RunError {
    fn from(e: qphase::Error) -> Self {
        RunError::Engine(e)
    }
}

type Res<T> = std::result::Result<T, RunError>;

/// Runs `scenario`; relative input files resolve against `base`.
pub fn execute(scenario: &Scenario, base: &Path) -> Res<RunOutput> {
    match &scenario.body {
        Body::ExactDoublewell(s) => double_well(s),
        Body::Wigner(s) => wigner(s, scenario.seed),
        Body::Plusp(s) => plusp(s, scenario.seed),
        Body::PluspReverse(s) => reverse(s, scenario.seed),
        Body::Entropy(s) => entropy(s, base),
        Body::Variational(s) => variational_run(s),
        Body::DimensionCount(d) => dimension(d),
    }
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn double_well(s: &DoubleWellScenario) -> Res<RunOutput> {
    let cfg = DoubleWellConfig {
        atoms_a: s.model.atoms_a,
        atoms_b: s.model.atoms_b,
        chi: s.model.chi.unwrap_or_else(rubidium_chi),
        omega: s.model.omega,
        scan: s.method.scan.clone(),
        phase_policy: s.method.phase_policy,
        beam_splitter: s.method.beam_splitter,
        truncation_tol: s.method.truncation_tol,
    };
    let points = run_double_well(&cfg)?;
    let row = |p: &DoubleWellPoint| {
        [
            p.tau,
            p.atoms_a,
            p.theta,
            p.s_db_theta,
            p.s_db_theta_perp,
            p.n0,
            p.cross_theta,
            p.s_plus_db,
            p.s_minus_db,
            p.e_product,
            p.e_sum,
            p.discarded_weight,
        ]
    };
    let cols: Vec<usize> = if s.observables.is_empty() {
        (0..DOUBLE_WELL_COLUMNS.len()).collect()
    } else {
        let mut c = vec![0];
        c.extend(
            s.observables
                .iter()
                .filter_map(|o| DOUBLE_WELL_COLUMNS.iter().position(|c| c == o))
                .filter(|&k| k != 0),
        );
        c
    };
    let mut table = Table::new("scan", cols.iter().map(|&k| DOUBLE_WELL_COLUMNS[k].to_string()).collect());
    for p in &points {
        let r = row(p);
        table.rows.push(cols.iter().map(|&k| r[k]).collect());
    }
    let mut out = RunOutput::default();
    // shot-noise points at τ = 0 sit within rounding of the thresholds
    let sq = points.iter().filter(|p| p.s_db_theta < -1e-6).count();
    let ent = points.iter().filter(|p| p.e_product < 1.0 - 1e-6).count();
    out.scalars.insert("min_s_db_theta".into(), min_of(points.iter().map(|p| p.s_db_theta)));
    out.scalars.insert("min_e_product".into(), min_of(points.iter().map(|p| p.e_product)));
    out.scalars.insert("min_e_sum".into(), min_of(points.iter().map(|p| p.e_sum)));
    out.scalars.insert("max_discarded_weight".into(), max_of(points.iter().map(|p| p.discarded_weight)));
    out.scalars.insert("squeezed_points".into(), sq as f64);
    out.scalars.insert("entangled_points".into(), ent as f64);
    out.summary = format!("{} points, {sq} squeezed, {ent} with E_product < 1", points.len());
    out.tables.push(table);
    Ok(out)
}

pub fn build_model(m: &LatticeModel) -> qphase::Result<HubbardModel> {
    let lattice = LatticeSpec::new(m.dims.clone(), m.box_length.clone(), m.masses.clone(), m.units)?;
    let potential = match &m.potential {
        Potential::Flat => vec![0.0; lattice.mode_count()],
        Potential::Values { values } => values.clone(),
        Potential::Harmonic { frequencies } => harmonic_potential(&lattice, frequencies)?,
    };
    let mut model = build_dispersion(lattice, &potential)?;
    if !m.chi.is_empty() {
        model = model.with_interaction(m.chi.clone())?;
    }
    if let Some(w) = &m.internal {
        model = model.with_internal_energies(w.clone())?;
    }
    Ok(model)
}

fn scheme(kind: SchemeKind, dt: f64, iters: Option<usize>) -> SdeScheme {
    let mut s = match kind {
        SchemeKind::Midpoint => SdeScheme::midpoint(dt),
        SchemeKind::Euler => SdeScheme::euler(dt),
    };
    if let Some(k) = iters {
        s.midpoint_iters = k;
    }
    s
}

fn chi_matrix(m: &LatticeModel) -> DMatrix<f64> {
    let s = m.masses.len();
    if m.chi.is_empty() {
        DMatrix::zeros(s, s)
    } else {
        DMatrix::from_row_slice(s, s, &m.chi)
    }
}

fn field_label(o: &FieldObservable) -> String {
    const AXES: [&str; 3] = ["x", "y", "z"];
    match *o {
        FieldObservable::X(k) => format!("x{k}"),
        FieldObservable::Y(k) => format!("y{k}"),
        FieldObservable::Number(k) => format!("n{k}"),
        FieldObservable::TotalNumber => "n_total".into(),
        FieldObservable::Spin(a) => format!("s{}", AXES[a]),
        FieldObservable::SpinProduct(a, b) => format!("s{}s{}", AXES[a], AXES[b]),
    }
}

fn wigner(s: &WignerScenario, seed: u64) -> Res<RunOutput> {
    let model = build_model(&s.model)?;
    let cells = model.lattice().cell_count();
    let initial = s.initial.field(cells);
    let m = &s.method;
    let system = WignerSystem::new(model, s.model.losses.clone(), m.vacuum_correction)?;
    let sch = scheme(m.scheme, m.dt, m.midpoint_iters);
    let times = m.times.times();
    let cfg = EnsembleConfig {
        seed,
        trajectories: m.trajectories,
        reduction: m.reduction,
    };
    let mut out = RunOutput::default();

    if let Some(blocks) = m.squeezing_blocks {
        let xi = run_squeezing(system, sch, initial, &times, &cfg, blocks)?;
        let mut table = Table::new("squeezing", vec!["t".into(), "xi2".into(), "xi2_err".into()]);
        for (t, x) in times.iter().zip(&xi) {
            table.rows.push(vec![*t, x.xi2, x.error]);
        }
        let (k, best) = xi
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.xi2.total_cmp(&b.1.xi2))
            .expect("at least one time");
        out.scalars.insert("min_xi2".into(), best.xi2);
        out.scalars.insert("min_xi2_error".into(), best.error);
        out.scalars.insert("min_xi2_time".into(), times[k]);
        out.summary = format!("min xi2 = {} ± {} at t = {}", best.xi2, best.error, times[k]);
        out.tables.push(table);
        return Ok(out);
    }

    let ens = WignerEnsemble::new(system, sch, initial.clone(), s.observables.clone())?;
    let res = run_ensemble(&ens, &times, &cfg)?;
    let mut header = vec!["t".to_string()];
    for o in &s.observables {
        let l = field_label(o);
        header.push(l.clone());
        header.push(format!("{l}_err"));
    }
    let exact = if m.compare_exact {
        let chi = chi_matrix(&s.model);
        let means: Vec<Vec<Complex64>> = times.iter().map(|&t| kerr_oracle(&initial, &chi, t).mean).collect();
        Some(means)
    } else {
        None
    };
    let exact_value = |o: &FieldObservable, k: usize| -> Option<f64> {
        let e = exact.as_ref()?;
        match *o {
            FieldObservable::X(m) => Some(e[k][m].re),
            FieldObservable::Y(m) => Some(e[k][m].im),
            FieldObservable::Number(m) => Some(initial[m].norm_sqr()),
            FieldObservable::TotalNumber => Some(initial.iter().map(|a| a.norm_sqr()).sum()),
            _ => None,
        }
    };
    let compared: Vec<usize> = (0..s.observables.len())
        .filter(|&j| exact_value(&s.observables[j], 0).is_some())
        .collect();
    for &j in &compared {
        header.push(format!("{}_exact", field_label(&s.observables[j])));
    }
    header.push("count".into());
    header.push("diverged".into());
    let mut table = Table::new("series", header);
    let mut worst: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for (k, t) in times.iter().enumerate() {
        let mut row = vec![*t];
        for e in &res.estimates[k] {
            row.push(e.mean);
            row.push(e.error);
        }
        for &j in &compared {
            let o = &s.observables[j];
            let ex = exact_value(o, k).expect("compared");
            let d = (res.estimates[k][j].mean - ex).abs();
            let w = worst.entry(field_label(o)).or_insert((0.0, 0.0));
            w.0 = w.0.max(d);
            if ex != 0.0 {
                w.1 = w.1.max(d / ex.abs());
            }
            row.push(ex);
        }
        row.push(res.counts[k] as f64);
        row.push(res.diverged[k] as f64);
        table.rows.push(row);
    }
    for (l, (abs, rel)) in worst {
        out.scalars.insert(format!("max_abs_error_{l}"), abs);
        out.scalars.insert(format!("max_rel_error_{l}"), rel);
    }
    out.diverged = res.diverged.last().copied().unwrap_or(0);
    out.scalars.insert("diverged".into(), out.diverged as f64);
    out.flags.insert("unreliable".into(), res.unreliable);
    out.summary = format!("{} times, {} trajectories, {} diverged", times.len(), m.trajectories, out.diverged);
    out.tables.push(table);
    Ok(out)
}

fn plusp_label(o: &PlusPObservable) -> String {
    match o {
        PlusPObservable::X { mode } => format!("x{mode}"),
        PlusPObservable::Y { mode } => format!("y{mode}"),
        PlusPObservable::AlphaNorm { mode } => format!("alpha_norm{mode}"),
        PlusPObservable::Moment { creation, annihilation } => {
            let idx = |v: &[usize]| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("_");
            format!("moment_c{}_a{}", idx(creation), idx(annihilation))
        }
    }
}

fn plusp(s: &PlusPScenario, seed: u64) -> Res<RunOutput> {
    let model = build_model(&s.model)?;
    let m = &s.method;
    let ens = PlusPEnsemble::new(
        PlusPSystem::new(model, Gauge::Identity),
        scheme(m.scheme, m.dt, m.midpoint_iters),
        s.initial.clone(),
        m.width,
        s.observables.clone(),
    )?;
    let slots = ens.slots();
    let times = m.times.times();
    let cfg = EnsembleConfig {
        seed,
        trajectories: m.trajectories,
        reduction: m.reduction,
    };
    let res = run_ensemble(&ens, &times, &cfg)?;

    let mut header = vec!["t".to_string()];
    for o in &s.observables {
        let l = plusp_label(o);
        if matches!(o, PlusPObservable::AlphaNorm { .. }) {
            header.extend([l.clone(), format!("{l}_err")]);
        } else {
            header.extend([format!("{l}_re"), format!("{l}_re_err"), format!("{l}_im"), format!("{l}_im_err")]);
        }
    }
    let exact: Option<Vec<Vec<Complex64>>> = match (&s.initial, m.compare_exact) {
        (PlusPState::Coherent(alpha), true) => {
            let chi = chi_matrix(&s.model);
            Some(times.iter().map(|&t| kerr_oracle(alpha, &chi, t).mean).collect())
        }
        _ => None,
    };
    let exact_value = |o: &PlusPObservable, k: usize| -> Option<f64> {
        let e = exact.as_ref()?;
        match o {
            PlusPObservable::X { mode } => Some(e[k][*mode].re),
            PlusPObservable::Y { mode } => Some(e[k][*mode].im),
            _ => None,
        }
    };
    let compared: Vec<usize> = (0..s.observables.len())
        .filter(|&j| exact_value(&s.observables[j], 0).is_some())
        .collect();
    for &j in &compared {
        header.push(format!("{}_exact", plusp_label(&s.observables[j])));
    }
    header.push("count".into());
    header.push("diverged".into());
    let mut table = Table::new("series", header);
    let mut within = vec![0usize; compared.len()];
    let mut max_sigma = vec![0.0f64; compared.len()];
    for (k, t) in times.iter().enumerate() {
        let mut row = vec![*t];
        for e in &res.estimates[k] {
            row.push(e.mean);
            row.push(e.error);
        }
        for (c, &j) in compared.iter().enumerate() {
            let ex = exact_value(&s.observables[j], k).expect("compared");
            let est = res.estimates[k][slots[j]];
            let d = (est.mean - ex).abs();
            if d <= 2.0 * est.error {
                within[c] += 1;
            }
            if est.error > 0.0 {
                max_sigma[c] = max_sigma[c].max(d / est.error);
            } else if d > 1e-12 {
                max_sigma[c] = f64::INFINITY;
            }
            row.push(ex);
        }
        row.push(res.counts[k] as f64);
        row.push(res.diverged[k] as f64);
        table.rows.push(row);
    }
    let mut out = RunOutput::default();
    let n = times.len() as f64;
    for (c, &j) in compared.iter().enumerate() {
        let l = plusp_label(&s.observables[j]);
        out.scalars.insert(format!("fraction_within_2sigma_{l}"), within[c] as f64 / n);
        out.scalars.insert(format!("max_sigma_{l}"), max_sigma[c]);
    }
    if !compared.is_empty() {
        let all = within.iter().sum::<usize>() as f64 / (n * compared.len() as f64);
        out.scalars.insert("fraction_within_2sigma".into(), all);
    }
    out.diverged = res.diverged.last().copied().unwrap_or(0);
    out.scalars.insert("diverged".into(), out.diverged as f64);
    out.flags.insert("unreliable".into(), res.unreliable);
    out.summary = format!("{} times, {} trajectories, {} diverged", times.len(), m.trajectories, out.diverged);
    if let Some(f) = out.scalars.get("fraction_within_2sigma") {
        out.summary.push_str(&format!(", {:.1}% of points within 2 sigma of exact", 100.0 * f));
    }
    out.tables.push(table);
    Ok(out)
}

fn reverse(s: &ReverseScenario, seed: u64) -> Res<RunOutput> {
    let m = &s.method;
    let cfg = TimeReversalConfig {
        alpha0: s.initial.alpha0,
        chi: s.model.chi,
        omega: s.model.omega,
        reverse_at: m.reverse_at,
        times: m.times.times(),
        trajectories: m.trajectories,
        dt: m.dt,
        seed,
        width: m.width,
        error_ceiling: m.error_ceiling,
    };
    let rep = time_reversal_test(&cfg)?;
    let mut table = Table::new(
        "series",
        ["t", "x", "x_err", "x_imag", "alpha_spread", "diverged"].map(String::from).to_vec(),
    );
    for k in 0..rep.times.len() {
        table.rows.push(vec![
            rep.times[k],
            rep.x_mean[k],
            rep.x_error[k],
            rep.x_imag[k],
            rep.alpha_spread[k],
            rep.diverged[k] as f64,
        ]);
    }
    let last = rep.times.len() - 1;
    let rev = nearest(&rep.times, m.reverse_at);
    let mut out = RunOutput::default();
    let err_end = rep.x_error[last];
    out.scalars.insert("residual".into(), rep.residual);
    out.scalars.insert("error_end".into(), err_end);
    out.scalars.insert("error_at_reversal".into(), rep.x_error[rev]);
    out.scalars.insert("residual_over_error".into(), rep.residual / err_end);
    out.diverged = rep.diverged[last];
    out.scalars.insert("diverged".into(), out.diverged as f64);
    out.inconclusive = rep.inconclusive;
    out.flags.insert("inconclusive".into(), rep.inconclusive);
    out.flags.insert("unreliable".into(), rep.result.unreliable);
    out.summary = format!(
        "X(end) = {} ± {} (X(0) = {}), residual {} = {:.2} error bars{}",
        rep.x_mean[last],
        err_end,
        rep.x_mean[0],
        rep.residual,
        rep.residual / err_end,
        if rep.inconclusive { ", inconclusive" } else { "" }
    );
    out.tables.push(table);
    Ok(out)
}

fn nearest(times: &[f64], t: f64) -> usize {
    (0..times.len())
        .min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs()))
        .expect("non-empty")
}

fn matrix_from_rows(rows: &[Vec<Complex64>]) -> CMatrix {
    let m = rows.len();
    CMatrix::from_fn(m, m, |i, j| rows[i][j])
}

/// Reads `weight,re00,im00,re01,im01,...` rows of row-major m×m matrices.
pub fn read_points_csv(path: &Path, species: Species) -> Res<Vec<GaussianPhasePoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| RunError::Input(format!("{} row {}: {e}", path.display(), line + 1)))?;
        let entries = (vals.len().saturating_sub(1)) / 2;
        let m = (entries as f64).sqrt().round() as usize;
        if vals.len() < 3 || m * m != entries || vals.len() != 1 + 2 * entries {
            return Err(RunError::Input(format!(
                "{} row {}: expected a weight and 2m² values",
                path.display(),
                line + 1
            )));
        }
        let n = CMatrix::from_fn(m, m, |i, j| {
            let k = 1 + 2 * (i * m + j);
            Complex64::new(vals[k], vals[k + 1])
        });
        points.push(GaussianPhasePoint::new(species, n)?.with_weight(vals[0]));
    }
    Ok(points)
}

fn entropy(s: &EntropyScenario, base: &Path) -> Res<RunOutput> {
    let species = s.model.species;
    let mut points = Vec::new();
    for p in &s.initial.points {
        let mut g = GaussianPhasePoint::new(species, matrix_from_rows(&p.n))?.with_weight(p.weight);
        if let Some(d) = &p.displacement {
            g = g.with_displacement(d.clone())?;
        }
        points.push(g);
    }
    if let Some(f) = &s.initial.file {
        let path = if f.is_absolute() { f.clone() } else { base.join(f) };
        points.extend(read_points_csv(&path, species)?);
    }
    let est = renyi_entropy(&points, s.method.pairing)?;
    let mut out = RunOutput::default();
    out.scalars.insert("S2".into(), est.s2.unwrap_or(f64::NAN));
    out.scalars.insert("error".into(), est.error);
    out.scalars.insert("purity".into(), est.purity.re);
    out.scalars.insert("purity_imag".into(), est.purity.im);
    out.scalars.insert("purity_error".into(), est.purity_error);
    out.scalars.insert("pair_count".into(), est.pair_count as f64);
    out.flags.insert("sign_problem_flag".into(), est.sign_problem);
    out.summary = match est.s2 {
        Some(v) => format!("S2 = {v} ± {} from {} pairs", est.error, est.pair_count),
        None => format!("purity estimate {} is not positive; S2 undefined", est.purity.re),
    };
    if est.sign_problem {
        out.summary.push_str(" (sign problem)");
    }
    Ok(out)
}

fn hamiltonian(m: &VariationalModel) -> qphase::Result<PolynomialHamiltonian> {
    let mut h = PolynomialHamiltonian::new(m.modes)?;
    if let Some(l) = &m.linear {
        h = h.with_linear(&matrix_from_rows(l))?;
    }
    for (k, &c) in m.kerr.iter().enumerate() {
        h = h.with_kerr(k, c)?;
    }
    for &(k, l, c) in &m.cross_kerr {
        h = h.with_cross_kerr(k, l, c)?;
    }
    Ok(h)
}

fn variational_run(s: &VariationalScenario) -> Res<RunOutput> {
    let h = hamiltonian(&s.model)?;
    let state = match &s.initial {
        VariationalInitial::Coherent { alpha } => VariationalState::coherent(alpha)?,
        VariationalInitial::Ring {
            alpha,
            components,
            radius,
        } => VariationalState::ring(alpha, *components, *radius)?,
    };
    let times = s.method.times.times();
    let samples = variational::run(h, s.method.propagator(), &state, &times)?;
    let mut header: Vec<String> = ["t", "x", "y", "norm", "energy"].map(String::from).to_vec();
    let exact: Option<Vec<Complex64>> = s.method.compare_exact.then(|| {
        // K a†²a² is the χ = 2K case of the closed form
        let mut chi = DMatrix::zeros(s.model.modes, s.model.modes);
        for (k, &c) in s.model.kerr.iter().enumerate() {
            chi[(k, k)] = 2.0 * c;
        }
        times.iter().map(|&t| kerr_oracle(s.initial.alpha(), &chi, t).mean[0]).collect()
    });
    if exact.is_some() {
        header.extend(["x_exact".into(), "y_exact".into()]);
    }
    let mut table = Table::new("series", header);
    let (n0, e0) = (samples[0].norm, samples[0].energy);
    let mut out = RunOutput::default();
    let (mut dx, mut dy, mut dn, mut de) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (k, p) in samples.iter().enumerate() {
        let mut row = vec![p.t, p.x, p.y, p.norm, p.energy];
        if let Some(e) = &exact {
            row.extend([e[k].re, e[k].im]);
            dx = dx.max((p.x - e[k].re).abs());
            dy = dy.max((p.y - e[k].im).abs());
        }
        dn = dn.max((p.norm - n0).abs() / n0);
        de = de.max((p.energy - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
        table.rows.push(row);
    }
    out.scalars.insert("max_norm_drift".into(), dn);
    out.scalars.insert("max_energy_drift".into(), de);
    out.summary = format!("{} samples, relative norm drift {dn:.3e}, energy drift {de:.3e}", samples.len());
    if exact.is_some() {
        out.scalars.insert("max_x_error".into(), dx);
        out.scalars.insert("max_y_error".into(), dy);
        out.summary.push_str(&format!(", max |X - exact| {dx:.3e}, max |Y - exact| {dy:.3e}"));
    }
    out.tables.push(table);
    Ok(out)
}

fn dimension(d: &DimensionModel) -> Res<RunOutput> {
    let c = hilbert_dimension(d.particles, d.modes, d.statistics)?;
    let mut out = RunOutput::default();
    out.scalars.insert("log10".into(), c.log10);
    out.summary = match &c.exact {
        Some(n) => {
            out.text.insert("exact".into(), n.to_string());
            n.to_string()
        }
        None => format!("10^{}", c.log10),
    };
    Ok(out)
}
