//! Subcommand bodies. Each one computes everything in memory and returns the
//! artifacts; `main` writes them only after the whole run succeeded.

use rayon::prelude::*;
use serde_json::json;
use stark_core::assembly::{normal_scale, PatchOptions};
use stark_core::asymptotics::{energy_terms, fit_remainder, predict_lambda, PowerFit};
use stark_core::diagnostics::{agmon_report, exterior_mass, fit_exterior_decay, AgmonReport};
use stark_core::eigensolve::{smallest_sym_with, SolveOptions, SpectralResult};
use stark_core::geometry::{BoundaryCurve, PatchGeometry, TubularPatch};
use stark_core::model1d::{
    below_crossover, discretize_airy_halfline, discretize_oscillator, richardson, tensor_spectrum, ModelSpectrumRequest,
};
use stark_core::pipeline::{
    patch_operator, solve_fullgrid, solve_patch, FullGridSolveOptions, PatchSolve, PatchSolveOptions,
    DEFAULT_CUT_SCALES,
};
use stark_core::quasimode::{
    build_quasimode_with, fit_off_diagonal, matrix_elements, quasimode_patch_options, CutoffOptions, MatrixElements,
};
use stark_core::StarkError;

use crate::config::{RunConfig, MAX_VERIFY_MODES};
use crate::format::{Cell, Table};
use crate::CliError;

/// Minimum remainder exponent and fit quality for a passing verify run.
pub const VERIFY_MIN_EXPONENT: f64 = 1.2;
pub const VERIFY_MIN_R2: f64 = 0.9;

pub struct Artifacts {
    pub files: Vec<(String, String)>,
    /// False when verify thresholds were not met.
    pub passed: bool,
}

impl Artifacts {
    fn ok(files: Vec<(String, String)>) -> Self {
        Artifacts { files, passed: true }
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    hash: String,
    hs: Vec<f64>,
    patch: TubularPatch,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self, CliError> {
        let curve = BoundaryCurve::new(cfg.domain.clone()).map_err(CliError::from)?;
        Ok(Ctx {
            cfg,
            hash: cfg.hash(),
            hs: cfg.h_grid()?,
            patch: TubularPatch::new(curve)?,
        })
    }

    fn table(&self, header: &[&str]) -> Table {
        Table::new(header, Some(&self.hash))
    }

    fn patch_options(&self) -> PatchOptions {
        PatchOptions {
            c_t: self.cfg.c_t,
            points_per_scale: self.cfg.points_per_scale,
            s_scales: self.cfg.s_scales,
            delta: self.cfg.delta,
        }
    }

    fn solve_options(&self) -> PatchSolveOptions {
        PatchSolveOptions {
            patch: self.patch_options(),
            tol: self.cfg.eig_tol,
            richardson: self.cfg.richardson,
            inner: self.cfg.inner_solver,
        }
    }

    /// Runs `f` for every `h` in a worker pool; results come back in grid
    /// order regardless of scheduling.
    fn sweep<T: Send>(&self, f: impl Fn(f64) -> Result<T, StarkError> + Sync) -> Result<Vec<T>, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.parallelism.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Validation(format!("worker pool: {e}")))?;
        pool.install(|| self.hs.par_iter().map(|&h| f(h)).collect::<Result<Vec<T>, StarkError>>())
            .map_err(CliError::from)
    }
}

pub fn predict(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let cx = Ctx::new(cfg)?;
    let site = *cx.patch.min_site();
    let mut t = cx.table(&["n", "h", "t0", "t1", "t2", "total"]);
    for &h in &cx.hs {
        for n in 1..=cfg.n_max {
            let p = predict_lambda(n, h, &site)?;
            t.push(vec![n.into(), h.into(), p.t0.into(), p.t1.into(), p.t2.into(), p.total.into()]);
        }
    }
    let mut files = vec![("predict.csv".to_string(), t.render())];
    if let Some(ps) = &cfg.physical {
        let mut t = cx.table(&["n", "hbar", "mass", "charge", "field", "h", "e0", "e1", "e2", "energy"]);
        for (p, &h) in ps.iter().zip(&cx.hs) {
            for n in 1..=cfg.n_max {
                let e = energy_terms(n, p, &site)?;
                t.push(vec![
                    n.into(),
                    p.hbar.into(),
                    p.mass.into(),
                    p.charge.into(),
                    p.field.into(),
                    h.into(),
                    e.e0.into(),
                    e.e1.into(),
                    e.e2.into(),
                    e.total.into(),
                ]);
            }
        }
        files.push(("predict_physical.csv".to_string(), t.render()));
    }
    Ok(Artifacts::ok(files))
}

/// Tensor-product model spectrum from Richardson-extrapolated 1D
/// discretizations, sorted and truncated like the exact one.
fn discretized_model(h: f64, kappa0: f64, count: usize) -> Result<Vec<f64>, StarkError> {
    let lt = normal_scale(h);
    let dt = lt / 40.0;
    let air = richardson(
        &discretize_airy_halfline(h, 16.0 * lt, dt, count)?,
        &discretize_airy_halfline(h, 16.0 * lt, dt / 2.0, count)?,
    );
    let w = h.sqrt() * (2.0 / kappa0).powf(0.25);
    let ds = w / 40.0;
    let osc = richardson(
        &discretize_oscillator(h, kappa0, 12.0 * w, ds, count)?,
        &discretize_oscillator(h, kappa0, 12.0 * w, ds / 2.0, count)?,
    );
    let mut sums: Vec<f64> = air.iter().flat_map(|a| osc.iter().map(move |o| a + o)).collect();
    sums.sort_by(f64::total_cmp);
    sums.truncate(count);
    Ok(sums)
}

pub fn model(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let cx = Ctx::new(cfg)?;
    let kappa0 = cx.patch.kappa0();
    let rows = cx.sweep(|h| {
        let exact = tensor_spectrum(ModelSpectrumRequest::new(h, kappa0, cfg.n_max)?)?;
        Ok((exact, discretized_model(h, kappa0, cfg.n_max)?))
    })?;
    let mut t = cx.table(&["h", "n", "kappa0", "exact", "discretized", "difference"]);
    for (&h, (exact, disc)) in cx.hs.iter().zip(&rows) {
        for n in 0..cfg.n_max {
            t.push(vec![
                h.into(),
                (n + 1).into(),
                kappa0.into(),
                exact[n].into(),
                disc[n].into(),
                (disc[n] - exact[n]).into(),
            ]);
        }
    }
    Ok(Artifacts::ok(vec![("model.csv".into(), t.render())]))
}

pub fn solve(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let cx = Ctx::new(cfg)?;
    let opts = cx.solve_options();
    let site = *cx.patch.min_site();
    let curve = cx.patch.curve().clone();
    let runs = cx.sweep(|h| {
        let patch = solve_patch(&cx.patch, h, cfg.n_max, &opts)?;
        let full = if cfg.fullgrid {
            let spacing = cfg.fullgrid_spacing.unwrap_or(normal_scale(h) / 10.0);
            Some(solve_fullgrid(
                &curve,
                &site,
                h,
                cfg.n_max,
                &FullGridSolveOptions {
                    spacing,
                    cut_scales: Some(DEFAULT_CUT_SCALES),
                    tol: cfg.eig_tol,
                    inner: cfg.inner_solver,
                },
            )?)
        } else {
            None
        };
        Ok((patch, full))
    })?;
    let mut header = vec!["h", "n", "lambda", "lambda_coarse", "lambda_fine", "solver_residual"];
    if cfg.fullgrid {
        header.extend(["lambda_fullgrid", "fullgrid_residual"]);
    }
    let mut t = cx.table(&header);
    let mut files = Vec::new();
    for (k, (r, full)) in runs.iter().enumerate() {
        for n in 0..cfg.n_max {
            let fine = r.fine.as_ref().map_or(f64::NAN, |f| f[n]);
            let mut row: Vec<Cell> = vec![
                r.h.into(),
                (n + 1).into(),
                r.eigenvalues[n].into(),
                r.coarse.eigenvalues[n].into(),
                fine.into(),
                r.solver_residual.into(),
            ];
            if let Some(f) = full {
                row.push(f.eigenvalues[n].into());
                row.push(f.residuals[n].into());
            }
            t.push(row);
        }
        if cfg.write_eigenvectors {
            files.push((format!("eigenvectors_{k}.csv"), eigenvector_table(&cx, r).render()));
        }
    }
    files.insert(0, ("solve.csv".into(), t.render()));
    Ok(Artifacts::ok(files))
}

fn eigenvector_table(cx: &Ctx, r: &PatchSolve) -> Table {
    let names: Vec<String> = (1..=r.coarse.len()).map(|n| format!("v{n}")).collect();
    let mut header = vec!["h", "s", "t"];
    header.extend(names.iter().map(String::as_str));
    let mut t = cx.table(&header);
    for k in 0..r.grid.len() {
        let (i, j) = r.grid.coords(k);
        let mut row: Vec<Cell> = vec![r.h.into(), r.grid.s(i).into(), r.grid.t(j).into()];
        row.extend(r.coarse.eigenvectors.iter().map(|v| Cell::from(v[k])));
        t.push(row);
    }
    t
}

pub fn quasimode(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let cx = Ctx::new(cfg)?;
    let cutoff = CutoffOptions {
        theta: cfg.theta,
        scale: cfg.cutoff_scale,
    };
    let kappa0 = cx.patch.kappa0();
    let sopts = SolveOptions {
        inner: cfg.inner_solver,
        shift: None,
    };
    let runs: Vec<(MatrixElements, Vec<f64>, SpectralResult)> = cx.sweep(|h| {
        let op = patch_operator(&cx.patch, h, &quasimode_patch_options(h, kappa0, &cutoff))?;
        let modes = (1..=cfg.n_max)
            .map(|n| build_quasimode_with(n, h, kappa0, &op.grid, &cutoff))
            .collect::<Result<Vec<_>, _>>()?;
        let me = matrix_elements(&op, &modes)?;
        let ritz = me.ritz_values()?;
        let eig = smallest_sym_with(&op, cfg.n_max, cfg.eig_tol, &sopts)?;
        Ok((me, ritz, eig))
    })?;
    let mut mt = cx.table(&["h", "i", "j", "form", "gram", "shifted_form"]);
    let mut rt = cx.table(&["h", "n", "ritz", "lambda", "excess", "excess_over_h43"]);
    for (me, ritz, eig) in &runs {
        let sf = me.shifted_form();
        for i in 0..cfg.n_max {
            for j in 0..cfg.n_max {
                mt.push(vec![
                    me.h.into(),
                    (i + 1).into(),
                    (j + 1).into(),
                    me.form[i][j].into(),
                    me.gram[i][j].into(),
                    sf[i][j].into(),
                ]);
            }
        }
        for n in 0..cfg.n_max {
            let ex = ritz[n] - eig.eigenvalues[n];
            rt.push(vec![
                me.h.into(),
                (n + 1).into(),
                ritz[n].into(),
                eig.eigenvalues[n].into(),
                ex.into(),
                (ex / me.h.powf(4.0 / 3.0)).into(),
            ]);
        }
    }
    let mut ft = cx.table(&["quantity", "exponent", "prefactor", "r2"]);
    // Off-diagonals need two modes and two h values to fit; with one mode
    // they vanish identically and the table stays header-only.
    if cfg.n_max >= 2 && cx.hs.len() >= 2 {
        let tables: Vec<MatrixElements> = runs.into_iter().map(|r| r.0).collect();
        let (form, gram) = fit_off_diagonal(&tables)?;
        for (name, f) in [("shifted_form_offdiag", form), ("gram_offdiag", gram)] {
            ft.push(vec![name.into(), f.exponent.into(), f.prefactor.into(), f.r2.into()]);
        }
    }
    Ok(Artifacts::ok(vec![
        ("quasimode_matrices.csv".into(), mt.render()),
        ("quasimode_ritz.csv".into(), rt.render()),
        ("quasimode_fit.csv".into(), ft.render()),
    ]))
}

pub fn agmon(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let cx = Ctx::new(cfg)?;
    let popts = cx.patch_options();
    let sopts = SolveOptions {
        inner: cfg.inner_solver,
        shift: None,
    };
    let runs: Vec<(Vec<AgmonReport>, Vec<f64>)> = cx.sweep(|h| {
        let op = patch_operator(&cx.patch, h, &popts)?;
        let res = smallest_sym_with(&op, cfg.n_max, cfg.eig_tol, &sopts)?;
        Ok((agmon_report(&res, &op, cfg.epsilon)?, exterior_mass(&res, &op, cfg.eta_radius)?))
    })?;
    // The decay rate needs three h values; it is `nan` otherwise or when a
    // fraction underflows to zero.
    let rates: Vec<f64> = (0..cfg.n_max)
        .map(|n| {
            let f: Vec<f64> = runs.iter().map(|r| r.1[n]).collect();
            fit_exterior_decay(&cx.hs, &f).map_or(f64::NAN, |d| d.rate)
        })
        .collect();
    let mut t = cx.table(&[
        "h",
        "n",
        "epsilon",
        "weighted_t",
        "weighted_s",
        "grad_t",
        "sigma_s",
        "sigma_t",
        "exterior_mass",
        "fitted_c_eta",
    ]);
    for (&h, (reps, ext)) in cx.hs.iter().zip(&runs) {
        for (n, r) in reps.iter().enumerate() {
            if r.clipped {
                eprintln!("warning: Agmon weight clipped at h = {h}, n = {}; epsilon is too large", n + 1);
            }
            t.push(vec![
                h.into(),
                (n + 1).into(),
                r.epsilon.into(),
                r.weighted_t_norm.into(),
                r.weighted_s_norm.into(),
                r.gradient_t_norm.into(),
                r.sigma_s.into(),
                r.sigma_t.into(),
                ext[n].into(),
                rates[n].into(),
            ]);
        }
    }
    Ok(Artifacts::ok(vec![("agmon.csv".into(), t.render())]))
}

pub const VERIFY_HEADER: [&str; 9] = [
    "h",
    "n",
    "lambda_numeric",
    "lambda_predicted",
    "residual",
    "gap_numeric",
    "gap_predicted",
    "residual_over_h43",
    "solver_residual",
];

/// Whether the `(k+1)`-th eigenvalue is still the `(k+1)`-th level of the
/// oscillator ladder, i.e. below the second Airy branch of the model.
fn on_ladder(h: f64, kappa0: f64, k: usize) -> Result<bool, StarkError> {
    if k == 0 {
        return Ok(true);
    }
    below_crossover(ModelSpectrumRequest::new(h, kappa0, k)?)
}

pub fn verify(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    if cfg.n_max > MAX_VERIFY_MODES {
        return Err(CliError::Validation(format!("verify allows n_max <= {MAX_VERIFY_MODES}")));
    }
    let cx = Ctx::new(cfg)?;
    let (lo, hi) = cx.hs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &h| (a.min(h), b.max(h)));
    if cx.hs.len() < 4 || hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(CliError::Validation("verify needs at least 4 h values spanning a decade".into()));
    }
    let site = *cx.patch.min_site();
    let opts = cx.solve_options();
    // one extra mode so that every row has a gap
    let runs = cx.sweep(|h| solve_patch(&cx.patch, h, cfg.n_max + 1, &opts))?;

    let mut t = Table::new(&VERIFY_HEADER, None);
    // (h, residual) pairs per mode, kept only while the mode is still on
    // the first transverse branch
    let mut residuals = vec![(Vec::new(), Vec::new()); cfg.n_max];
    let mut worst_c: f64 = 0.0;
    let mut worst_gap_c: f64 = 0.0;
    let mut skipped = 0usize;
    for r in &runs {
        let h = r.h;
        let h43 = h.powf(4.0 / 3.0);
        let gap_pred = 2.0 * h * (0.5 * site.kappa0).sqrt();
        for n in 0..cfg.n_max {
            let pred = predict_lambda(n + 1, h, &site)?.total;
            let lam = r.eigenvalues[n];
            let gap = r.eigenvalues[n + 1] - lam;
            if on_ladder(h, site.kappa0, n)? {
                residuals[n].0.push(h);
                residuals[n].1.push(lam - pred);
                worst_c = worst_c.max((lam - pred).abs() / h43);
            } else {
                skipped += 1;
            }
            if on_ladder(h, site.kappa0, n + 1)? {
                worst_gap_c = worst_gap_c.max((gap - gap_pred).abs() / h43);
            }
            t.push(vec![
                h.into(),
                (n + 1).into(),
                lam.into(),
                pred.into(),
                (lam - pred).into(),
                gap.into(),
                gap_pred.into(),
                ((lam - pred) / h43).into(),
                r.solver_residual.into(),
            ]);
        }
    }
    let fits: Vec<Option<PowerFit>> = residuals
        .iter()
        .map(|(hs, res)| fit_remainder(hs, res, cfg.eig_tol).ok())
        .collect();
    let fits_ok = fits
        .iter()
        .all(|f| f.is_some_and(|f| f.exponent >= VERIFY_MIN_EXPONENT && f.r2 >= VERIFY_MIN_R2));
    let passed = fits_ok && worst_c <= cfg.remainder_c && worst_gap_c <= cfg.remainder_c;

    let finest = runs
        .iter()
        .min_by(|a, b| a.h.total_cmp(&b.h))
        .expect("nonempty grid");
    let gap_pred = 2.0 * finest.h * (0.5 * site.kappa0).sqrt();
    let gap_ratio_error = ((finest.eigenvalues[1] - finest.eigenvalues[0]) / gap_pred - 1.0).abs();
    let ground = fits[0];
    let modes: Vec<_> = fits
        .iter()
        .enumerate()
        .map(|(n, f)| {
            json!({
                "n": n + 1,
                "remainder_exponent": f.map(|f| f.exponent),
                "remainder_prefactor": f.map(|f| f.prefactor),
                "r2": f.map(|f| f.r2),
            })
        })
        .collect();
    let summary = json!({
        "domain": cfg.domain,
        "kappa0": site.kappa0,
        "x_min": site.x_min,
        "h_grid": cx.hs,
        "remainder_exponent": ground.map(|f| f.exponent),
        "remainder_prefactor": ground.map(|f| f.prefactor),
        "r2": ground.map(|f| f.r2),
        "gap_ratio_error": gap_ratio_error,
        "status": if passed { "pass" } else { "fail" },
        "max_residual_over_h43": worst_c,
        "max_gap_residual_over_h43": worst_gap_c,
        "remainder_c": cfg.remainder_c,
        "rows_past_crossover": skipped,
        "modes": modes,
        "config_hash": cx.hash,
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    Ok(Artifacts {
        files: vec![("verify.csv".into(), t.render()), ("summary.json".into(), text)],
        passed,
    })
}
