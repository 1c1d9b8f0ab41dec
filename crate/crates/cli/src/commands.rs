//! Experiment orchestration for each subcommand.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use twistop::correlations::{
    correlation_predicted, correlation_series_direct, decay_rate_estimate, dirichlet_lags, eigen_observable,
    CorrelationSeries, Method, SkewMeasure,
};
use twistop::dynamics::{pressure_from_orbits, ExpandingMap};
use twistop::groups::{
    beta_constant, gamma_constant, heat::beta_exponent_fit, irrep_enumerate, GroupModel, IrrepId, IrrepInfo,
};
use twistop::heataverage::{contradiction_scheme, fit_and_verify, ContradictionParams, HeatAverage, CSV_HEADER};
use twistop::thermo::{normalize_potential, rpf_solve, Potential, RpfData};
use twistop::twisted::{
    build_twisted_matrix, contour_extract_W, determinant_zeros, eigenvalues, trace_periodic, SkewFunction,
    SpectrumRecord, ZetaSeries,
};
use twistop::{Error, Result};

use crate::config::ExperimentConfig;
use crate::output::{num, CheckOutcome, CommandOutput, Table};

/// Terms of the trace series used for contour extraction.
const CONTOUR_SERIES_TERMS: usize = 64;

/// Built objects shared by the commands.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub map: ExpandingMap,
    pub phi: Potential,
    pub group: GroupModel,
    pub tau: SkewFunction,
    pub rpf: RpfData,
    /// `φ − P(φ)`.
    pub phin: Potential,
    pub rpfn: RpfData,
    pub cap: u128,
}

impl Context {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let map = cfg.map.build()?;
        let phi = cfg.potential.build(&map)?;
        let group = cfg.group.build()?;
        let tau = if cfg.gauge {
            cfg.tau.build_gauged(group, &map)?
        } else {
            cfg.tau.build(group)?
        };
        let rpf = rpf_solve(&map, &phi, cfg.collocation)?;
        let phin = normalize_potential(&phi, &rpf);
        let rpfn = rpf_solve(&map, &phin, cfg.collocation)?;
        Ok(Context {
            cfg: cfg.clone(),
            map,
            phi,
            group,
            tau,
            rpf,
            phin,
            rpfn,
            cap: cfg.orbit_cap as u128,
        })
    }

    fn irreps(&self) -> Result<Vec<IrrepInfo>> {
        irrep_enumerate(self.group, self.cfg.kappa_max)
    }

    /// `P(2φ)` of the normalized potential.
    fn pressure2(&self) -> Result<f64> {
        Ok(rpf_solve(&self.map, &self.phin.scaled(2.0), self.cfg.collocation)?.pressure)
    }

    fn improved(&self) -> bool {
        self.cfg.heat.improved && !self.group.is_abelian()
    }
}

fn cpx(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

/// `P = −log|z_0|` for the smallest zero of the untwisted determinant.
fn pressure_from_determinant(map: &ExpandingMap, phi: &Potential, period: usize, cap: u128) -> Result<f64> {
    let trivial = IrrepInfo::torus(&[0]);
    let identity = SkewFunction::identity(GroupModel::Torus(1));
    let zs = ZetaSeries::from_orbits(map, phi, &identity, &trivial, period, cap)?;
    let zeros = determinant_zeros(&zs, period)?;
    let z0 = zeros
        .iter()
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .ok_or_else(|| Error::InsufficientData("determinant polynomial has no zeros".into()))?;
    Ok(-z0.norm().ln())
}

pub fn pressure(ctx: &Context) -> Result<CommandOutput> {
    let tol = ctx.cfg.tolerances.pressure;
    let period = ctx.cfg.pressure.orbit_period;
    let mut result = serde_json::Map::new();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for (label, scale) in [("phi", 1.0), ("2phi", 2.0)] {
        let phi = ctx.phi.scaled(scale);
        let rpf = rpf_solve(&ctx.map, &phi, ctx.cfg.collocation)?;
        let det = pressure_from_determinant(&ctx.map, &phi, period, ctx.cap)?;
        let orbit = pressure_from_orbits(&ctx.map, |x| phi.eval(x), period, ctx.cap)?;
        let agreement = (det - rpf.pressure).abs();
        checks.push(CheckOutcome::at_most(format!("P({label}) determinant vs eigenvalue"), agreement, tol));
        rows.push(vec![
            label.to_string(),
            num(rpf.pressure),
            num(det),
            num(orbit),
            num(agreement),
        ]);
        summary.push(format!(
            "P({label}) = {:.12} (eigenvalue), {:.12} (determinant), {:.12} (orbit sum n={period}); agreement {agreement:.2e}",
            rpf.pressure, det, orbit
        ));
        result.insert(
            label.to_string(),
            json!({
                "eigenvalue": rpf.pressure,
                "determinant": det,
                "orbit_sum": orbit,
                "orbit_period": period,
                "agreement": agreement,
                "gap_ratio": rpf.gap_ratio,
            }),
        );
    }
    Ok(CommandOutput {
        result: Value::Object(result),
        tables: vec![Table {
            name: "pressure",
            header: vec!["potential", "eigenvalue", "determinant", "orbit_sum", "agreement"],
            rows,
        }],
        checks,
        summary,
    })
}

pub fn spectrum(ctx: &Context) -> Result<CommandOutput> {
    let tol = ctx.cfg.tolerances.spectral_radius;
    let n = ctx.cfg.collocation;
    let irreps = ctx.irreps()?;
    let per_irrep: Vec<(SpectrumRecord, usize, f64)> = irreps
        .par_iter()
        .map(|irrep| {
            let op = build_twisted_matrix(&ctx.map, &ctx.phi, &ctx.rpf, &ctx.tau, irrep, n)?;
            let spec = eigenvalues(&op)?;
            let traces = op.traces(ctx.cfg.n_max)?;
            Ok((SpectrumRecord::new(&spec, &traces), spec.trusted, spec.spectral_radius()))
        })
        .collect::<Result<_>>()?;
    let p2 = ctx.pressure2()?;
    let band = (p2 / 2.0).exp();
    let gamma = gamma_constant(ctx.group, ctx.improved())?;
    let threshold = (gamma * p2).exp();

    let mut checks = Vec::new();
    let mut ev_rows = Vec::new();
    let mut irrep_rows = Vec::new();
    let mut records = Vec::new();
    let mut max_nontrivial: f64 = 0.0;
    for ((rec, trusted, radius), irrep) in per_irrep.iter().zip(&irreps) {
        if irrep.is_trivial() {
            checks.push(CheckOutcome::at_most("trivial irrep radius = 1", (radius - 1.0).abs(), tol));
        } else {
            max_nontrivial = max_nontrivial.max(*radius);
        }
        for (i, z) in rec.eigenvalues.iter().enumerate() {
            ev_rows.push(vec![
                rec.irrep_id.clone(),
                num(rec.kappa),
                i.to_string(),
                num(z[0]),
                num(z[1]),
                num(z[0].hypot(z[1])),
                (i < *trusted).to_string(),
            ]);
        }
        irrep_rows.push(vec![
            rec.irrep_id.clone(),
            num(rec.kappa),
            irrep.dim.to_string(),
            rec.n.to_string(),
            trusted.to_string(),
            num(*radius),
        ]);
        let mut v = serde_json::to_value(rec).map_err(|e| Error::CheckFailed(e.to_string()))?;
        v["trusted"] = json!(trusted);
        v["spectral_radius"] = json!(radius);
        records.push(v);
    }
    let max_radius = per_irrep.iter().map(|r| r.2).fold(0.0, f64::max);
    checks.push(CheckOutcome::at_most("max spectral radius - 1", max_radius - 1.0, tol));
    let summary = vec![
        format!("{} irreps with kappa <= {}", irreps.len(), ctx.cfg.kappa_max),
        format!("largest non-trivial spectral radius {max_nontrivial:.10}"),
        format!("conjecture band e^(P(2phi)/2) = {band:.10}; threshold e^(gamma P(2phi)) = {threshold:.10} (gamma = {gamma})"),
    ];
    Ok(CommandOutput {
        result: json!({
            "irreps": records,
            "pressure2": p2,
            "conjecture_band": band,
            "gamma": gamma,
            "threshold": threshold,
            "max_nontrivial_radius": max_nontrivial,
        }),
        tables: vec![
            Table {
                name: "irreps",
                header: vec!["irrep_id", "kappa", "dim", "N", "trusted", "spectral_radius"],
                rows: irrep_rows,
            },
            Table {
                name: "eigenvalues",
                header: vec!["irrep_id", "kappa", "index", "re", "im", "modulus", "trusted"],
                rows: ev_rows,
            },
        ],
        checks,
        summary,
    })
}

struct TraceRow {
    irrep: IrrepInfo,
    n: usize,
    periodic: Complex64,
    matrix: Complex64,
    contour: Complex64,
}

fn trace_rows(ctx: &Context, irreps: &[IrrepInfo]) -> Result<Vec<TraceRow>> {
    let per_irrep: Vec<Vec<TraceRow>> = irreps
        .par_iter()
        .map(|irrep| {
            let op = build_twisted_matrix(&ctx.map, &ctx.phi, &ctx.rpf, &ctx.tau, irrep, ctx.cfg.collocation)?;
            let radius = eigenvalues(&op)?.spectral_radius().max(f64::MIN_POSITIVE);
            let zs = ZetaSeries::from_operator(&op, CONTOUR_SERIES_TERMS)?;
            let matrix = op.traces(ctx.cfg.n_max)?;
            (1..=ctx.cfg.n_max)
                .map(|n| {
                    Ok(TraceRow {
                        irrep: irrep.clone(),
                        n,
                        periodic: trace_periodic(&ctx.map, &ctx.phin, &ctx.tau, irrep, n, ctx.cap)?,
                        matrix: matrix[n - 1],
                        contour: contour_extract_W(&zs, n, 0.5 / radius)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_irrep.into_iter().flatten().collect())
}

pub fn traces(ctx: &Context) -> Result<CommandOutput> {
    traces_for(ctx, &ctx.irreps()?)
}

fn traces_for(ctx: &Context, irreps: &[IrrepInfo]) -> Result<CommandOutput> {
    let tol = ctx.cfg.tolerances.trace;
    let rows = trace_rows(ctx, irreps)?;
    let worst_matrix = rows.iter().map(|r| rel(r.matrix, r.periodic)).fold(0.0, f64::max);
    let worst_contour = rows.iter().map(|r| rel(r.contour, r.periodic)).fold(0.0, f64::max);
    let table_rows = rows
        .iter()
        .map(|r| {
            vec![
                r.irrep.id.to_string(),
                r.n.to_string(),
                num(r.periodic.re),
                num(r.periodic.im),
                num(r.matrix.re),
                num(r.matrix.im),
                num(r.contour.re),
                num(r.contour.im),
                num(rel(r.matrix, r.periodic).max(rel(r.contour, r.periodic))),
            ]
        })
        .collect();
    let records: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "irrep_id": r.irrep.id.to_string(),
                "kappa": r.irrep.kappa,
                "n": r.n,
                "periodic": cpx(r.periodic),
                "matrix": cpx(r.matrix),
                "contour": cpx(r.contour),
            })
        })
        .collect();
    Ok(CommandOutput {
        result: json!({
            "rows": records,
            "max_discrepancy_matrix": worst_matrix,
            "max_discrepancy_contour": worst_contour,
        }),
        tables: vec![Table {
            name: "traces",
            header: vec![
                "irrep_id",
                "n",
                "periodic_re",
                "periodic_im",
                "matrix_re",
                "matrix_im",
                "contour_re",
                "contour_im",
                "max_rel_discrepancy",
            ],
            rows: table_rows,
        }],
        checks: vec![
            CheckOutcome::at_most("trace matrix vs periodic (relative)", worst_matrix, tol),
            CheckOutcome::at_most("trace contour vs periodic (relative)", worst_contour, tol),
        ],
        summary: vec![format!(
            "{} irreps x n <= {}: max relative discrepancy matrix {worst_matrix:.2e}, contour {worst_contour:.2e}",
            irreps.len(),
            ctx.cfg.n_max
        )],
    })
}

/// One representative per conjugate pair: for the torus keep `q` whose first
/// nonzero component is positive.
fn correlation_irreps(group: GroupModel, kappa_max: f64) -> Result<Vec<IrrepInfo>> {
    Ok(irrep_enumerate(group, kappa_max)?
        .into_iter()
        .filter(|p| !p.is_trivial())
        .filter(|p| match &p.id {
            IrrepId::Torus(q) => q.iter().find(|v| **v != 0).is_some_and(|v| *v > 0),
            IrrepId::Su2(_) => true,
        })
        .collect())
}

pub fn correlations(ctx: &Context) -> Result<CommandOutput> {
    let cc = &ctx.cfg.correlations;
    let tol = ctx.cfg.tolerances.correlation;
    let irreps = correlation_irreps(ctx.group, cc.kappa_max)?;
    let lags: Vec<usize> = (1..=cc.lags).collect();
    let p2 = ctx.pressure2()?;
    let gamma_plain = gamma_constant(ctx.group, false)?;
    let gamma_improved = if ctx.group.is_abelian() {
        gamma_plain
    } else {
        gamma_constant(ctx.group, true)?
    };

    let mut records = Vec::new();
    let mut series_rows = Vec::new();
    let mut plot_rows = Vec::new();
    let mut obs_rows = Vec::new();
    let mut worst: f64 = 0.0;
    let mut summary = Vec::new();
    for irrep in &irreps {
        let id = irrep.id.to_string();
        let obs = match eigen_observable(
            &ctx.map,
            &ctx.phin,
            &ctx.rpfn,
            &ctx.tau,
            irrep,
            ctx.cfg.collocation,
            cc.eigen_index,
        ) {
            Ok(o) => o,
            Err(Error::InsufficientData(reason)) => {
                summary.push(format!("{id}: skipped ({reason})"));
                records.push(json!({ "irrep_id": id, "skipped": reason }));
                obs_rows.push(vec![id, String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), reason]);
                continue;
            }
            Err(e) => return Err(e),
        };
        let measure = SkewMeasure::new(&ctx.rpfn, irrep.group, obs.resolution)?;
        let direct = correlation_series_direct(&ctx.map, &ctx.phin, &ctx.tau, &obs.f, &obs.f, &lags, &measure)?;
        let predicted: Vec<f64> = lags.iter().map(|&n| correlation_predicted(&[(1.0, &obs)], n)).collect();
        let errors: Vec<f64> = direct
            .iter()
            .zip(&predicted)
            .map(|(d, p)| (d - p).abs() / (1.0 + p.abs()))
            .collect();
        worst = errors.iter().copied().fold(worst, f64::max);
        for (i, n) in lags.iter().enumerate() {
            series_rows.push(vec![
                id.clone(),
                n.to_string(),
                num(direct[i]),
                Method::DirectQuadrature.to_string(),
            ]);
            series_rows.push(vec![
                id.clone(),
                n.to_string(),
                num(predicted[i]),
                Method::EigenFormula.to_string(),
            ]);
        }
        let series = CorrelationSeries::new(direct.clone(), Method::DirectQuadrature, &obs.f)?;
        for (n, v) in series.plot_data() {
            plot_rows.push(vec![id.clone(), n.to_string(), num(v)]);
        }
        let angles = [obs.lambda.arg() / TAU];
        let sub = dirichlet_lags(&angles, cc.dirichlet_q, cc.lags)?;
        let (estimate, best_lag) = match decay_rate_estimate(&series, Some(&sub)) {
            Ok(d) => (Some(d.estimate), Some(d.best_lag)),
            Err(Error::InsufficientData(_)) => (None, None),
            Err(e) => return Err(e),
        };
        summary.push(format!(
            "{id}: lambda = {:.8}{:+.8}i |lambda| = {:.8}; decay estimate {}; max rel error {:.2e}",
            obs.lambda.re,
            obs.lambda.im,
            obs.lambda.norm(),
            estimate.map_or("n/a".to_string(), |e| format!("{e:.8}")),
            errors.iter().copied().fold(0.0, f64::max),
        ));
        let sub_text: Vec<String> = sub.iter().map(|n| n.to_string()).collect();
        obs_rows.push(vec![
            id.clone(),
            obs.index.to_string(),
            num(obs.lambda.re),
            num(obs.lambda.im),
            num(obs.lambda.norm()),
            estimate.map_or(String::new(), num),
            sub_text.join(" "),
            String::new(),
        ]);
        records.push(json!({
            "irrep_id": id,
            "kappa": irrep.kappa,
            "eigen_index": obs.index,
            "lambda": cpx(obs.lambda),
            "modulus": obs.lambda.norm(),
            "residual": obs.residual,
            "int_fg": obs.int_fg,
            "direct": series,
            "predicted": predicted,
            "dirichlet_lags": sub,
            "decay_estimate": estimate,
            "decay_best_lag": best_lag,
        }));
    }
    let thresholds = json!({
        "pressure2": p2,
        "gamma": gamma_plain,
        "gamma_improved": gamma_improved,
        "threshold": (gamma_plain * p2).exp(),
        "threshold_improved": (gamma_improved * p2).exp(),
    });
    summary.push(format!(
        "thresholds e^(gamma P(2phi)): {:.8} (gamma = {gamma_plain}), improved {:.8} (gamma = {gamma_improved})",
        (gamma_plain * p2).exp(),
        (gamma_improved * p2).exp()
    ));
    Ok(CommandOutput {
        result: json!({ "observables": records, "thresholds": thresholds, "max_relative_error": worst }),
        tables: vec![
            Table {
                name: "series",
                header: vec!["irrep_id", "n", "C(n)", "method"],
                rows: series_rows,
            },
            Table {
                name: "plot",
                header: vec!["irrep_id", "n", "log_abs_C"],
                rows: plot_rows,
            },
            Table {
                name: "observables",
                header: vec![
                    "irrep_id",
                    "eigen_index",
                    "lambda_re",
                    "lambda_im",
                    "modulus",
                    "decay_estimate",
                    "dirichlet_lags",
                    "skipped",
                ],
                rows: obs_rows,
            },
        ],
        checks: vec![CheckOutcome::at_most("direct vs eigen-formula (relative)", worst, tol)],
        summary,
    })
}

pub fn heataverage(ctx: &Context) -> Result<CommandOutput> {
    let h = &ctx.cfg.heat;
    let tol = ctx.cfg.tolerances.heat_truncation;
    let averages = (1..=ctx.cfg.n_max)
        .map(|n| HeatAverage::new(&ctx.map, &ctx.phin, &ctx.tau, ctx.group, n, ctx.cap))
        .collect::<Result<Vec<_>>>()?;
    let (a, verify, bound) = fit_and_verify(&averages, &h.fit_t_grid, &h.verify_t_grid, tol)?;
    let mut grid = Vec::new();
    for avg in &averages {
        for &t in &h.t_grid {
            grid.push(avg.report(t, tol, a)?);
        }
    }
    let improved = ctx.improved();
    let beta_expected = beta_constant(ctx.group, improved)?;
    let fit = beta_exponent_fit(ctx.group, &h.t_grid, tol)?;
    let p2 = ctx.pressure2()?;
    let scheme = contradiction_scheme(&ContradictionParams {
        group: ctx.group,
        improved,
        pressure2: p2,
        rho_hypothesis: h.rho_hypothesis,
        epsilon: h.epsilon,
        alpha: None,
        a_constant: a,
        n_max: h.contradiction_n_max,
    })?;
    let row = |r: &twistop::heataverage::AverageReport| r.csv_row().to_vec();
    let checks = vec![
        CheckOutcome::at_least("diagonal bound worst margin", bound.worst_margin, 0.0),
        CheckOutcome::at_most(
            "beta fit vs expected",
            (fit.beta - beta_expected).abs(),
            ctx.cfg.tolerances.beta,
        ),
    ];
    let summary = vec![
        format!(
            "A = {a:.6e}; worst verification margin {:.4} at t = {}, n = {}",
            bound.worst_margin, bound.worst_cell.0, bound.worst_cell.1
        ),
        format!("beta fit {:.4} (expected {beta_expected})", fit.beta),
        format!(
            "contradiction at rho = {}: {}; threshold {:.8} (limit {:.8})",
            h.rho_hypothesis, scheme.contradiction, scheme.threshold, scheme.threshold_limit
        ),
    ];
    Ok(CommandOutput {
        result: json!({
            "a_constant": a,
            "grid": grid,
            "verification": verify,
            "bound": bound,
            "beta_fit": fit,
            "beta_expected": beta_expected,
            "contradiction": scheme,
        }),
        tables: vec![
            Table {
                name: "grid",
                header: CSV_HEADER.to_vec(),
                rows: grid.iter().map(row).collect(),
            },
            Table {
                name: "verification",
                header: CSV_HEADER.to_vec(),
                rows: verify.iter().map(row).collect(),
            },
            Table {
                name: "beta",
                header: vec!["t", "sum"],
                rows: fit.t_grid.iter().zip(&fit.sums).map(|(t, s)| vec![num(*t), num(*s)]).collect(),
            },
            Table {
                name: "contradiction",
                header: vec!["n", "t", "log_lower", "log_upper_trivial", "log_upper_twisted"],
                rows: scheme
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.n.to_string(),
                            num(r.t),
                            num(r.log_lower),
                            num(r.log_upper_trivial),
                            num(r.log_upper_twisted),
                        ]
                    })
                    .collect(),
            },
        ],
        checks,
        summary,
    })
}

/// Exponents for every supported group; thresholds when a context is given.
pub fn gamma_table(ctx: Option<&Context>) -> Result<CommandOutput> {
    let p2 = ctx.map(|c| c.pressure2()).transpose()?;
    let groups = [
        GroupModel::Torus(1),
        GroupModel::Torus(2),
        GroupModel::Torus(3),
        GroupModel::Torus(4),
        GroupModel::Su2,
        GroupModel::So3,
    ];
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for g in groups {
        let beta = beta_constant(g, false)?;
        let gamma = gamma_constant(g, false)?;
        let (beta_i, gamma_i) = if g.is_abelian() {
            (None, None)
        } else {
            (Some(beta_constant(g, true)?), Some(gamma_constant(g, true)?))
        };
        let best = gamma_i.unwrap_or(gamma);
        let threshold = p2.map(|p| (best * p).exp());
        let opt = |v: Option<f64>| v.map_or(String::new(), num);
        rows.push(vec![
            g.to_string(),
            g.rank().to_string(),
            g.dim().to_string(),
            num(beta),
            num(gamma),
            opt(beta_i),
            opt(gamma_i),
            opt(threshold),
        ]);
        records.push(json!({
            "group": g.to_string(),
            "rank": g.rank(),
            "dim": g.dim(),
            "beta": beta,
            "gamma": gamma,
            "beta_improved": beta_i,
            "gamma_improved": gamma_i,
            "threshold": threshold,
        }));
    }
    let mut summary: Vec<String> = records
        .iter()
        .map(|r| format!("{}: gamma = {} improved {}", r["group"], r["gamma"], r["gamma_improved"]))
        .collect();
    if let Some(p) = p2 {
        summary.push(format!("P(2phi) = {p:.12}"));
    }
    Ok(CommandOutput {
        result: json!({ "pressure2": p2, "groups": records }),
        tables: vec![Table {
            name: "gamma",
            header: vec![
                "group",
                "rank",
                "dim",
                "beta",
                "gamma",
                "beta_improved",
                "gamma_improved",
                "threshold",
            ],
            rows,
        }],
        checks: Vec::new(),
        summary,
    })
}
