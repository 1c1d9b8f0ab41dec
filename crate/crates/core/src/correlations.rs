//! Observables on `[0,1] × G` built from representation coefficients, and
//! their correlation functions under the skew product `(x, g) ↦ (Tx, τ(x) g)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{ExpandingMap, SymbolWord};
use crate::error::{Error, Result};
use crate::groups::haar::haar_quadrature;
use crate::groups::{GroupModel, GroupPoint, IrrepId, IrrepInfo};
use crate::linalg::{eigenvector_complex, residual, CMatrix};
use crate::quadrature::ChebGrid;
use crate::thermo::{Potential, RpfData};
use crate::twisted::{build_twisted_matrix, eigenvalues, SkewFunction};

pub const EIGEN_OBSERVABLE_RESIDUAL: f64 = 1e-9;
pub const DEGENERATE_NORM: f64 = 1e-12;
pub const DEFAULT_DIRICHLET_Q: u64 = 9;
pub const DIRICHLET_SEARCH_CAP: u64 = 1 << 32;
const VALUE_FLOOR: f64 = 1e-300;

type CoeffFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Part {
    Re,
    Im,
}

impl Part {
    fn take(self, z: Complex64) -> f64 {
        match self {
            Part::Re => z.re,
            Part::Im => z.im,
        }
    }
}

#[derive(Clone)]
pub struct ObservableTerm {
    pub irrep: IrrepInfo,
    pub part: Part,
    pub scale: f64,
    coeff: CoeffFn,
}

impl ObservableTerm {
    pub fn new(
        irrep: IrrepInfo,
        part: Part,
        coeff: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
    ) -> Self {
        ObservableTerm {
            irrep,
            part,
            scale: 1.0,
            coeff: Arc::new(coeff),
        }
    }

    pub fn coeff(&self, x: f64) -> CMatrix {
        (self.coeff)(x)
    }
}

/// `F(x, g) = Σ scale · part(Tr(π(g) A(x)))`.
#[derive(Clone)]
pub struct Observable {
    pub terms: Vec<ObservableTerm>,
    pub description: String,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.terms.iter().map(|t| t.irrep.id.to_string()).collect();
        write!(f, "Observable({}; {})", self.description, ids.join(" + "))
    }
}

impl Observable {
    pub fn new(description: impl Into<String>, terms: Vec<ObservableTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("an observable needs at least one term".into()));
        }
        let group = terms[0].irrep.group;
        if let Some(t) = terms.iter().find(|t| t.irrep.group != group) {
            return Err(Error::GroupMismatch {
                irrep: t.irrep.id.to_string(),
                group: group.to_string(),
            });
        }
        Ok(Observable {
            terms,
            description: description.into(),
        })
    }

    /// A function of the fibre only: `part(Tr(π(g) A))` with constant `A`.
    pub fn fiber_only(irrep: IrrepInfo, a: CMatrix, part: Part) -> Result<Self> {
        check_coeff_shape(&irrep, &a)?;
        let desc = format!("fiber {} {:?}", irrep.id, part);
        Observable::new(desc, vec![ObservableTerm::new(irrep, part, move |_| a.clone())])
    }

    pub fn group(&self) -> GroupModel {
        self.terms[0].irrep.group
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.scale *= s);
        out
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Observable, b: f64) -> Result<Self> {
        let mut terms = self.scaled(a).terms;
        terms.extend(other.scaled(b).terms);
        Observable::new(format!("{a}·[{}] + {b}·[{}]", self.description, other.description), terms)
    }

    pub fn eval(&self, x: f64, g: &GroupPoint) -> Result<f64> {
        let mut s = 0.0;
        for t in &self.terms {
            let p = t.irrep.matrix(g)?;
            s += t.scale * t.part.take(trace_product(&p.transpose(), &t.coeff(x)));
        }
        Ok(s)
    }

    fn max_degree(&self) -> usize {
        self.terms
            .iter()
            .map(|t| match &t.irrep.id {
                IrrepId::Torus(q) => q.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0),
                IrrepId::Su2(m) => *m as usize,
            })
            .max()
            .unwrap_or(0)
    }
}

fn check_coeff_shape(irrep: &IrrepInfo, a: &CMatrix) -> Result<()> {
    if a.nrows() != irrep.dim || a.ncols() != irrep.dim {
        return Err(Error::InvalidInput(format!(
            "coefficient must be {0}x{0} for {1}, got {2}x{3}",
            irrep.dim,
            irrep.id,
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// `Tr(P C)` given `pt = Pᵀ`.
fn trace_product(pt: &CMatrix, c: &CMatrix) -> Complex64 {
    pt.as_slice().iter().zip(c.as_slice()).map(|(a, b)| a * b).sum()
}

/// `(T^n x, τ(T^{n-1}x)⋯τ(x)·g)` along the true forward branches.
pub fn skew_apply(map: &ExpandingMap, tau: &SkewFunction, n: usize, x: f64, g: &GroupPoint) -> (f64, GroupPoint) {
    let mut x = x;
    let mut g = *g;
    for _ in 0..n {
        g = tau.eval(x).mul(&g);
        x = map.apply(x);
    }
    (x, g)
}

/// Haar resolution that integrates every product `F·G` exactly.
pub fn fiber_resolution(f: &Observable, g: &Observable) -> usize {
    match f.group() {
        GroupModel::Torus(_) => f.max_degree() + g.max_degree() + 1,
        GroupModel::Su2 | GroupModel::So3 => f.max_degree() + g.max_degree() + 2,
    }
}

/// Product measure `μ_φ × Haar` on collocation and Haar nodes.
pub struct SkewMeasure<'a> {
    pub rpf: &'a RpfData,
    pub group: GroupModel,
    pub fiber: Vec<(GroupPoint, f64)>,
}

impl<'a> SkewMeasure<'a> {
    pub fn new(rpf: &'a RpfData, group: GroupModel, resolution: usize) -> Result<Self> {
        Ok(SkewMeasure {
            rpf,
            group,
            fiber: haar_quadrature(group, resolution)?,
        })
    }

    /// `Pᵀ` for every fibre node, per term.
    fn fiber_matrices(&self, obs: &Observable) -> Result<Vec<Vec<CMatrix>>> {
        if obs.group() != self.group {
            return Err(Error::GroupMismatch {
                irrep: obs.description.clone(),
                group: self.group.to_string(),
            });
        }
        obs.terms
            .iter()
            .map(|t| {
                self.fiber
                    .iter()
                    .map(|(g, _)| Ok(t.irrep.matrix(g)?.transpose()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect()
    }

    /// `∫ F G dμ̂`.
    pub fn inner(&self, f: &Observable, g: &Observable) -> Result<f64> {
        let pf = self.fiber_matrices(f)?;
        let pg = self.fiber_matrices(g)?;
        let per_node: Vec<f64> = self
            .rpf
            .node_points
            .iter()
            .zip(&self.rpf.measure_weights)
            .map(|(&y, &w)| {
                let fv = fiber_values(f, &pf, y, None);
                let gv = fiber_values(g, &pg, y, None);
                w * self.fiber.iter().enumerate().map(|(j, (_, wg))| wg * fv[j] * gv[j]).sum::<f64>()
            })
            .collect();
        Ok(per_node.iter().sum())
    }

    /// `∫ F dμ̂`.
    pub fn mean(&self, f: &Observable) -> Result<f64> {
        let pf = self.fiber_matrices(f)?;
        Ok(self
            .rpf
            .node_points
            .iter()
            .zip(&self.rpf.measure_weights)
            .map(|(&y, &w)| {
                let fv = fiber_values(f, &pf, y, None);
                w * self.fiber.iter().zip(&fv).map(|((_, wg), v)| wg * v).sum::<f64>()
            })
            .sum())
    }
}

/// `F(x, h·g_j)` for every fibre node `g_j`, with `h` optional.
fn fiber_values(obs: &Observable, mats: &[Vec<CMatrix>], x: f64, h: Option<&GroupPoint>) -> Vec<f64> {
    let n = mats.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (t, pts) in obs.terms.iter().zip(mats) {
        // Tr(π(h g) A) = Tr(π(g) A π(h))
        let mut c = t.coeff(x);
        if let Some(h) = h {
            c = c * t.irrep.matrix(h).expect("holonomy lies in the observable's group");
        }
        for (o, p) in out.iter_mut().zip(pts) {
            *o += t.scale * t.part.take(trace_product(p, &c));
        }
    }
    out
}

/// `C(F,G)(n) = ∫ F∘T̂^n · G dμ̂ − ∫F ∫G`.
///
/// Evaluated through transfer duality on the collocation nodes `y`: every
/// preimage `x = γ_w(y)` of a length-`n` word `w` is iterated forward along
/// `w` to obtain `φ^{(n)}(x)` and the holonomy `τ(T^{n-1}x)⋯τ(x)`, and
/// `∫ F∘T̂^n · G = Σ_y u_y Σ_w e^{φ^{(n)}(x) − nP} h(x) Σ_j ω_j F(y, g_x g_j) G(x, g_j)`.
#[allow(clippy::too_many_arguments)]
pub fn correlation_direct(
    map: &ExpandingMap,
    phi: &Potential,
    tau: &SkewFunction,
    f: &Observable,
    g: &Observable,
    n: usize,
    rpf: &RpfData,
    resolution: usize,
) -> Result<f64> {
    let measure = SkewMeasure::new(rpf, f.group(), resolution)?;
    Ok(correlation_series_direct(map, phi, tau, f, g, &[n], &measure)?[0])
}

/// [`correlation_direct`] for several lags sharing one fibre quadrature.
pub fn correlation_series_direct(
    map: &ExpandingMap,
    phi: &Potential,
    tau: &SkewFunction,
    f: &Observable,
    g: &Observable,
    lags: &[usize],
    measure: &SkewMeasure,
) -> Result<Vec<f64>> {
    let tau = tau.with_group(measure.group)?;
    let pf = measure.fiber_matrices(f)?;
    let pg = measure.fiber_matrices(g)?;
    let means = measure.mean(f)? * measure.mean(g)?;
    let rpf = measure.rpf;
    let k = map.k();
    lags.iter()
        .map(|&n| {
            let words = (k as u128)
                .checked_pow(n as u32)
                .filter(|&c| c <= crate::dynamics::DEFAULT_ORBIT_CAP)
                .ok_or(Error::CapExceeded {
                    requested: (k as f64).powi(n as i32) as u128,
                    cap: crate::dynamics::DEFAULT_ORBIT_CAP,
                })?;
            let per_node: Vec<f64> = rpf
                .node_points
                .par_iter()
                .zip(&rpf.nu_weights)
                .map(|(&y, &u)| {
                    let mut acc = 0.0;
                    for idx in 0..words {
                        let word = SymbolWord::from_index(idx, n, k);
                        let x = map.inverse_word(&word, y);
                        let mut z = x;
                        let mut holo = measure.group.identity();
                        let mut phi_sum = 0.0;
                        for &a in word.letters() {
                            phi_sum += phi.eval(z);
                            holo = tau.eval(z).mul(&holo);
                            z = (map.branch(a).forward)(z);
                        }
                        let weight = (phi_sum - n as f64 * rpf.pressure).exp() * rpf.density_at(x);
                        let fv = fiber_values(f, &pf, y, Some(&holo));
                        let gv = fiber_values(g, &pg, x, None);
                        let inner: f64 = measure
                            .fiber
                            .iter()
                            .enumerate()
                            .map(|(j, (_, w))| w * fv[j] * gv[j])
                            .sum();
                        acc += weight * inner;
                    }
                    u * acc
                })
                .collect();
            Ok(per_node.iter().sum::<f64>() - means)
        })
        .collect()
}

/// Eigen-observable `F = Re Tr(π(g) A(x))` with `M_π A = λ A`, normalized to `∫F² = 1`.
#[derive(Debug, Clone)]
pub struct EigenObservable {
    pub f: Observable,
    /// `Im Tr(π(g) A(x))`, same normalization.
    pub g: Observable,
    pub lambda: Complex64,
    pub irrep: IrrepInfo,
    pub index: usize,
    pub residual: f64,
    /// `A` was replaced by `iA`.
    pub rotated: bool,
    /// `∫ F G dμ̂`.
    pub int_fg: f64,
    pub mean: f64,
    pub resolution: usize,
}

/// Build the eigen-observable for the `index`-th trusted eigenvalue of `M_π`.
#[allow(clippy::too_many_arguments)]
pub fn eigen_observable(
    map: &ExpandingMap,
    phi: &Potential,
    rpf: &RpfData,
    tau: &SkewFunction,
    irrep: &IrrepInfo,
    n: usize,
    index: usize,
) -> Result<EigenObservable> {
    let op = build_twisted_matrix(map, phi, rpf, tau, irrep, n)?;
    let spec = eigenvalues(&op)?;
    if index >= spec.trusted {
        return Err(Error::InsufficientData(format!(
            "requested eigenvalue {index} but only {} are trusted for {}",
            spec.trusted, irrep.id
        )));
    }
    let v = eigenvector_complex(&op.matrix, spec.eigenvalues[index])?;
    let mv = &op.matrix * &v;
    let lambda = v.dotc(&mv) / v.dotc(&v);
    let res = residual(&op.matrix, lambda, &v);
    if res > EIGEN_OBSERVABLE_RESIDUAL * lambda.norm().max(1e-300) {
        return Err(Error::CheckFailed(format!("eigen-residual {res:e} exceeds tolerance")));
    }
    let d = irrep.dim;
    let grid = Arc::new(ChebGrid::new(n));
    let values: Arc<Vec<Complex64>> = Arc::new(v.iter().cloned().collect());
    // eigenvector of the gauged matrix; undo the gauge with π(θ(x))^{-1}
    let make = |factor: Complex64| {
        let grid = grid.clone();
        let values = values.clone();
        let tau = tau.clone();
        let irrep = irrep.clone();
        move |x: f64| {
            let card = grid.cardinals(x);
            let row: Vec<Complex64> = (0..d)
                .map(|b| card.iter().enumerate().map(|(l, c)| values[l * d + b] * *c).sum::<Complex64>() * factor)
                .collect();
            let ungauge = if tau.has_gauge() {
                Some(irrep.matrix(&tau.gauge_at(x)).expect("irrep matches tau").adjoint())
            } else {
                None
            };
            CMatrix::from_fn(d, d, |r, b| {
                if r != 0 {
                    return Complex64::new(0.0, 0.0);
                }
                match &ungauge {
                    None => row[b],
                    Some(p) => (0..d).map(|a| row[a] * p[(a, b)]).sum(),
                }
            })
        }
    };
    let res_fiber = 2 * irrep_degree(irrep) + 2;
    let measure = SkewMeasure::new(rpf, irrep.group, res_fiber)?;
    let build = |factor: Complex64, part: Part, label: &str| {
        Observable::new(
            format!("{label} eigen {} λ{index}", irrep.id),
            vec![ObservableTerm::new(irrep.clone(), part, make(factor))],
        )
    };
    let mut factor = Complex64::new(1.0, 0.0);
    let mut rotated = false;
    let mut f = build(factor, Part::Re, "F")?;
    let mut norm2 = measure.inner(&f, &f)?;
    if norm2 < DEGENERATE_NORM {
        factor = Complex64::new(0.0, 1.0);
        rotated = true;
        f = build(factor, Part::Re, "F")?;
        norm2 = measure.inner(&f, &f)?;
        if norm2 < DEGENERATE_NORM {
            return Err(Error::CheckFailed("eigen-observable has vanishing L² norm".into()));
        }
    }
    factor /= norm2.sqrt();
    let f = build(factor, Part::Re, "F")?;
    let g = build(factor, Part::Im, "G")?;
    Ok(EigenObservable {
        int_fg: measure.inner(&f, &g)?,
        mean: measure.mean(&f)?,
        f,
        g,
        lambda,
        irrep: irrep.clone(),
        index,
        residual: res,
        rotated,
        resolution: res_fiber,
    })
}

fn irrep_degree(irrep: &IrrepInfo) -> usize {
    match &irrep.id {
        IrrepId::Torus(q) => q.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0),
        IrrepId::Su2(m) => *m as usize,
    }
}

/// `Σ a²(ρ^n cos(nθ) ∫F² − ρ^n sin(nθ) ∫FG)` for `F = Σ a F_α` with `∫F_α² = 1`.
pub fn correlation_predicted(components: &[(f64, &EigenObservable)], n: usize) -> f64 {
    components
        .iter()
        .map(|(a, e)| {
            let ln = e.lambda.powu(n as u32);
            a * a * (ln.re - ln.im * e.int_fg)
        })
        .sum()
}

/// `∫ F G dμ̂` on a Haar rule of the given resolution.
pub fn orthogonality_check(rpf: &RpfData, f: &Observable, g: &Observable, resolution: usize) -> Result<f64> {
    SkewMeasure::new(rpf, f.group(), resolution)?.inner(f, g)
}

fn dist_to_integer(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Smallest `q ∈ {D, …, D·Q^N}` with `dist(q α_j, Z) < 1/Q` for every angle.
pub fn dirichlet_subsequence(angles: &[f64], q: u64, d: u64, cap: u64) -> Result<u64> {
    if q < 2 || d < 1 {
        return Err(Error::InvalidInput(format!("need Q ≥ 2 and D ≥ 1, got Q={q}, D={d}")));
    }
    let upper = (q as u128)
        .checked_pow(angles.len() as u32)
        .and_then(|p| p.checked_mul(d as u128))
        .filter(|&u| u <= cap as u128)
        .ok_or(Error::CapExceeded {
            requested: (d as f64 * (q as f64).powi(angles.len() as i32)) as u128,
            cap: cap as u128,
        })? as u64;
    let bound = 1.0 / q as f64;
    (d..=upper)
        .find(|&k| angles.iter().all(|a| dist_to_integer(k as f64 * a) < bound))
        .ok_or_else(|| Error::CheckFailed("no Dirichlet multiple found in the guaranteed range".into()))
}

/// Lags `dirichlet_subsequence(angles, Q, D)` for `D = 1, 2, …` up to `n_max`.
pub fn dirichlet_lags(angles: &[f64], q: u64, n_max: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for d in 1..=n_max as u64 {
        let k = dirichlet_subsequence(angles, q, d, DIRICHLET_SEARCH_CAP)? as usize;
        if k <= n_max && !out.contains(&k) {
            out.push(k);
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DirectQuadrature,
    EigenFormula,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::DirectQuadrature => "direct-quadrature",
            Method::EigenFormula => "eigen-formula",
        })
    }
}

/// `C(n)` for `n = 1..=N`.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSeries {
    pub values: Vec<f64>,
    pub method: Method,
    pub observable: String,
    pub group: String,
}

impl CorrelationSeries {
    pub fn new(values: Vec<f64>, method: Method, observable: &Observable) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::CheckFailed(format!("non-finite correlation value {v}")));
        }
        Ok(CorrelationSeries {
            values,
            method,
            observable: observable.description.clone(),
            group: observable.group().to_string(),
        })
    }

    /// Lag `n` (1-based).
    pub fn at(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    pub fn csv_rows(&self) -> Vec<[String; 3]> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| [(i + 1).to_string(), format!("{v:.17e}"), self.method.to_string()])
            .collect()
    }

    /// `(n, log|C(n)|)` for nonzero values.
    pub fn plot_data(&self) -> Vec<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > VALUE_FLOOR)
            .map(|(i, v)| (i + 1, v.abs().ln()))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayEstimate {
    pub estimate: f64,
    pub lags: Vec<usize>,
    pub best_lag: usize,
}

/// `max |C(n)|^{1/n}` over the lags in the upper half of the series.
///
/// `lags` defaults to every lag; pass [`dirichlet_lags`] of the eigen-angles
/// to follow the subsequence along which the phases realign.
pub fn decay_rate_estimate(series: &CorrelationSeries, lags: Option<&[usize]>) -> Result<DecayEstimate> {
    let n_max = series.values.len();
    let all: Vec<usize> = (1..=n_max).collect();
    let lags = lags.unwrap_or(&all);
    let usable: Vec<usize> = lags
        .iter()
        .copied()
        .filter(|&n| series.at(n).is_some_and(|v| v.abs() > VALUE_FLOOR))
        .collect();
    if usable.is_empty() {
        return Err(Error::InsufficientData("all correlation values are below the floor".into()));
    }
    if usable.len() < 4 && lags.len() == n_max {
        return Err(Error::InsufficientData(format!(
            "decay estimate needs at least 4 nonzero values, have {}",
            usable.len()
        )));
    }
    let tail_start = n_max.div_ceil(2);
    let tail: Vec<usize> = usable.iter().copied().filter(|&n| n >= tail_start).collect();
    let pool = if tail.is_empty() { &usable } else { &tail };
    let (best_lag, estimate) = pool
        .iter()
        .map(|&n| (n, series.at(n).unwrap().abs().powf(1.0 / n as f64)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    Ok(DecayEstimate {
        estimate,
        lags: usable,
        best_lag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::rpf_solve;
    use std::f64::consts::{LN_2, TAU};

    fn doubling_setup(n: usize) -> (ExpandingMap, Potential, RpfData) {
        let m = ExpandingMap::doubling();
        let phi = Potential::constant(-LN_2);
        let rpf = rpf_solve(&m, &phi, n).unwrap();
        (m, phi, rpf)
    }

    #[test]
    fn skew_apply_examples() {
        let m = ExpandingMap::doubling();
        let tau = SkewFunction::torus_linear(&[1.0]).unwrap();
        let g = GroupPoint::torus(&[0.7]).unwrap();
        let (x, h) = skew_apply(&m, &tau, 2, 1.0 / 3.0, &g);
        assert!((x - 1.0 / 3.0).abs() < 1e-14);
        assert!(h.approx_eq(&g, 1e-12));
        let (x0, h0) = skew_apply(&m, &tau, 0, 0.3, &g);
        assert_eq!(x0, 0.3);
        assert_eq!(h0, g);
    }

    #[test]
    fn dirichlet_examples() {
        assert_eq!(dirichlet_subsequence(&[1.0 / 3.0], 3, 1, 1000).unwrap(), 3);
        assert_eq!(dirichlet_subsequence(&[0.41421356], 10, 1, 1000).unwrap(), 5);
        assert_eq!(dirichlet_subsequence(&[0.0], 7, 4, 1000).unwrap(), 4);
        assert!(dirichlet_subsequence(&[0.1, 0.2], 10, 1, 50).is_err());
    }

    #[test]
    fn fiber_only_observable_is_flat() {
        let (m, phi, rpf) = doubling_setup(32);
        let tau = SkewFunction::identity(GroupModel::Su2);
        let a = CMatrix::from_fn(2, 2, |r, c| Complex64::new((r + 2 * c) as f64, 0.5));
        let f = Observable::fiber_only(IrrepInfo::su2(1), a, Part::Re).unwrap();
        let measure = SkewMeasure::new(&rpf, GroupModel::Su2, 4).unwrap();
        let c = correlation_series_direct(&m, &phi, &tau, &f, &f, &[0, 1, 3, 5], &measure).unwrap();
        assert!(c[0] > 0.0);
        for v in &c[1..] {
            assert!((v - c[0]).abs() < 1e-12 * c[0]);
        }
    }

    #[test]
    fn doubling_linear_twist_two_routes() {
        let (m, phi, rpf) = doubling_setup(48);
        let tau = SkewFunction::torus_linear(&[1.0]).unwrap();
        let irrep = IrrepInfo::torus(&[1]);
        for index in 0..2 {
            let e = eigen_observable(&m, &phi, &rpf, &tau, &irrep, 48, index).unwrap();
            assert!(e.residual <= 1e-9);
            assert!(e.mean.abs() < 1e-10);
            assert!((e.lambda - Complex64::new(0.5f64.powi(index as i32), 0.0)).norm() < 1e-9);
            let measure = SkewMeasure::new(&rpf, GroupModel::Torus(1), e.resolution).unwrap();
            let lags: Vec<usize> = (0..=6).collect();
            let direct = correlation_series_direct(&m, &phi, &tau, &e.f, &e.f, &lags, &measure).unwrap();
            for (&n, d) in lags.iter().zip(&direct) {
                let p = correlation_predicted(&[(1.0, &e)], n);
                assert!((d - p).abs() <= 1e-9 * (1.0 + p.abs()), "index {index} n {n}: {d} vs {p}");
            }
        }
    }

    #[test]
    fn schur_orthogonality_between_frequencies() {
        let (m, phi, rpf) = doubling_setup(48);
        let tau = SkewFunction::new(GroupModel::Torus(1), "sin", |x| {
            GroupPoint::torus(&[TAU * x + 0.3 * (TAU * x).sin()]).unwrap()
        });
        let e1 = eigen_observable(&m, &phi, &rpf, &tau, &IrrepInfo::torus(&[1]), 64, 0).unwrap();
        let e2 = eigen_observable(&m, &phi, &rpf, &tau, &IrrepInfo::torus(&[2]), 64, 0).unwrap();
        assert!(orthogonality_check(&rpf, &e1.f, &e2.f, 6).unwrap().abs() < 1e-10);
        assert!((orthogonality_check(&rpf, &e1.f, &e1.f, 6).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decay_estimate_of_geometric_series() {
        let values: Vec<f64> = (1..=8).map(|n| 0.5f64.powi(n) * 1.3).collect();
        let obs = Observable::fiber_only(IrrepInfo::torus(&[1]), CMatrix::identity(1, 1), Part::Re).unwrap();
        let s = CorrelationSeries::new(values, Method::EigenFormula, &obs).unwrap();
        let est = decay_rate_estimate(&s, None).unwrap();
        assert!((est.estimate - 0.5).abs() < 0.05);
        let zero = CorrelationSeries::new(vec![0.0; 8], Method::EigenFormula, &obs).unwrap();
        assert!(decay_rate_estimate(&zero, None).is_err());
    }
}
