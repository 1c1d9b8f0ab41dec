//! Twisted transfer operators `M_π` for skew products `(x, g) ↦ (Tx, τ(x) g)`.
//!
//! `M_π` acts on row-vector valued functions `v : [0,1] → C^{dim π}` by
//! `v ↦ Σ_j w_j(x) v(γ_j x) π(τ(γ_j x))^{-1}` with the normalized weights
//! `w_j(x) = e^{-P} h(x)^{-1} e^{φ(γ_j x)} h(γ_j x)`. Each row of an
//! `End(V)`-valued function evolves independently, so the `End(V)` operator
//! has the same spectrum with multiplicity `dim π`; matrix traces are scaled
//! by `dim π` accordingly.
//!
//! With this convention `Tr M_π^n = dim π Σ_{T^n x = x} χ_π(g_x^{-1}) G_n(x)`,
//! where `g_x = τ(T^{n-1}x)⋯τ(x)` is the fibre map of the `n`-th iterate and
//! `G_n(x) = e^{φ^{(n)}(x)} / (1 − 1/(T^n)'(x))`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    birkhoff_sum, enumerate_periodic_points, log_sum_exp, orbit_weight, skew_cocycle, ExpandingMap, PeriodicPoint,
};
use crate::error::{Error, Result};
use crate::groups::{GroupModel, GroupPoint, IrrepInfo, Quaternion};
use crate::linalg::{eigenvalues_complex, linear_fit, CMatrix};
use crate::quadrature::ChebGrid;
use crate::thermo::{Potential, RpfData};

pub const DEFAULT_TRACE_TERMS: usize = 12;
pub const CONTOUR_POINTS: usize = 256;

type GroupFn = Arc<dyn Fn(f64) -> GroupPoint + Send + Sync>;

/// The fibre map `τ : [0,1] → G`.
#[derive(Clone)]
pub struct SkewFunction {
    eval: GroupFn,
    /// Optional `θ` with `θ(Tx) ≈ τ(x) θ(x)`; see [`SkewFunction::with_gauge`].
    gauge: Option<GroupFn>,
    group: GroupModel,
    label: String,
}

impl fmt::Debug for SkewFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SkewFunction({} in {})", self.label, self.group)
    }
}

impl SkewFunction {
    pub fn new(
        group: GroupModel,
        label: impl Into<String>,
        f: impl Fn(f64) -> GroupPoint + Send + Sync + 'static,
    ) -> Self {
        SkewFunction {
            eval: Arc::new(f),
            gauge: None,
            group,
            label: label.into(),
        }
    }

    pub fn identity(group: GroupModel) -> Self {
        let e = group.identity();
        SkewFunction::new(group, "identity", move |_| e)
    }

    pub fn torus_constant(angles: &[f64]) -> Result<Self> {
        let p = GroupPoint::torus(angles)?;
        Ok(SkewFunction::new(
            GroupModel::Torus(angles.len()),
            format!("constant{angles:?}"),
            move |_| p,
        ))
    }

    /// `τ(x) = 2π (s_1 x, …, s_d x)`.
    pub fn torus_linear(slopes: &[f64]) -> Result<Self> {
        GroupModel::Torus(slopes.len()).validate()?;
        let s = slopes.to_vec();
        Ok(SkewFunction::new(
            GroupModel::Torus(slopes.len()),
            format!("linear{slopes:?}"),
            move |x| {
                let angles: Vec<f64> = s.iter().map(|si| TAU * si * x).collect();
                GroupPoint::torus(&angles).expect("finite angles")
            },
        ))
    }

    /// `τ(x) = exp(x ξ)` for a fixed Lie-algebra element `ξ ≠ 0`.
    pub fn su2_one_direction(xi: [f64; 3]) -> Result<Self> {
        let norm = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidInput("direction must be a nonzero finite vector".into()));
        }
        Ok(SkewFunction::new(GroupModel::Su2, format!("exp(x*{xi:?})"), move |x| {
            GroupPoint::Su2(Quaternion::exp(xi, norm * x))
        }))
    }

    /// `τ(x) = exp(a(x) ξ_1) exp(b(x) ξ_2)` with unit directions.
    pub fn su2_two_direction(
        xi1: [f64; 3],
        xi2: [f64; 3],
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        label: impl Into<String>,
    ) -> Self {
        SkewFunction::new(GroupModel::Su2, label, move |x| {
            GroupPoint::Su2(Quaternion::exp(xi1, a(x)).mul(&Quaternion::exp(xi2, b(x))))
        })
    }

    /// The same function viewed in another group sharing its points (SU(2) ↔ SO(3)).
    pub fn with_group(&self, group: GroupModel) -> Result<Self> {
        let compatible = matches!(
            (self.group, group),
            (GroupModel::Su2 | GroupModel::So3, GroupModel::Su2 | GroupModel::So3)
        ) || self.group == group;
        if !compatible {
            return Err(Error::GroupMismatch {
                irrep: group.to_string(),
                group: self.group.to_string(),
            });
        }
        Ok(SkewFunction {
            eval: self.eval.clone(),
            gauge: self.gauge.clone(),
            group,
            label: self.label.clone(),
        })
    }

    pub fn eval(&self, x: f64) -> GroupPoint {
        (self.eval)(x)
    }

    /// Attach a gauge `θ`. The matrix of `M_π` is then assembled for the
    /// cohomologous cocycle `σ(y) = θ(Ty)^{-1} τ(y) θ(y)`, which is similar to
    /// the original operator via `v ↦ v π(θ)^{-1}`. Spectrum and traces are
    /// unchanged; a good gauge removes oscillation the grid cannot resolve.
    pub fn with_gauge(mut self, theta: impl Fn(f64) -> GroupPoint + Send + Sync + 'static) -> Self {
        self.gauge = Some(Arc::new(theta));
        self
    }

    pub fn has_gauge(&self) -> bool {
        self.gauge.is_some()
    }

    /// `θ(x)`, or the identity without a gauge.
    pub fn gauge_at(&self, x: f64) -> GroupPoint {
        self.gauge.as_ref().map_or_else(|| self.group.identity(), |g| g(x))
    }

    /// `σ(y) = θ(x)^{-1} τ(y) θ(y)` for a preimage `y` of `x`.
    pub fn gauged_eval(&self, y: f64, x: f64) -> GroupPoint {
        match &self.gauge {
            None => self.eval(y),
            Some(g) => g(x).inverse().mul(&self.eval(y)).mul(&g(y)),
        }
    }

    pub fn group(&self) -> GroupModel {
        self.group
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn check(&self, xs: &[f64]) -> Result<()> {
        for &x in xs {
            let g = self.eval(x);
            let ok = self.group.contains(&g)
                && match g {
                    GroupPoint::Su2(q) => (q.norm() - 1.0).abs() < 1e-9,
                    GroupPoint::Torus(p) => p.angles().iter().all(|a| a.is_finite()),
                };
            if !ok {
                return Err(Error::InvalidInput(format!("skew function {} is invalid at x = {x}", self.label)));
            }
        }
        Ok(())
    }
}

fn check_irrep(tau: &SkewFunction, irrep: &IrrepInfo) -> Result<()> {
    if irrep.group != tau.group() {
        return Err(Error::GroupMismatch {
            irrep: format!("{} of {}", irrep.id, irrep.group),
            group: tau.group().to_string(),
        });
    }
    Ok(())
}

/// Periodic orbits of one period with their weights and fibre holonomies.
#[derive(Debug, Clone)]
pub struct OrbitEnsemble {
    pub period: usize,
    pub points: Vec<PeriodicPoint>,
    /// `φ^{(n)}(x)`.
    pub phi_sums: Vec<f64>,
    /// `G_n(x)`.
    pub weights: Vec<f64>,
    /// `g_x = τ(T^{n-1}x)⋯τ(x)`.
    pub holonomy: Vec<GroupPoint>,
}

impl OrbitEnsemble {
    pub fn new(map: &ExpandingMap, phi: &Potential, tau: &SkewFunction, n: usize, cap: u128) -> Result<Self> {
        let points = enumerate_periodic_points(map, n, cap)?;
        let rows: Vec<(f64, f64, GroupPoint)> = points
            .par_iter()
            .map(|p| {
                let s = birkhoff_sum(|x| phi.eval(x), p);
                Ok((s, orbit_weight(p, s)?, skew_cocycle(tau, p)))
            })
            .collect::<Result<_>>()?;
        let mut phi_sums = Vec::with_capacity(rows.len());
        let mut weights = Vec::with_capacity(rows.len());
        let mut holonomy = Vec::with_capacity(rows.len());
        for (s, w, g) in rows {
            phi_sums.push(s);
            weights.push(w);
            holonomy.push(g);
        }
        Ok(OrbitEnsemble {
            period: n,
            points,
            phi_sums,
            weights,
            holonomy,
        })
    }

    /// `dim π Σ_x χ_π(g_x^{-1}) G_n(x)`.
    pub fn trace(&self, irrep: &IrrepInfo) -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for (g, w) in self.holonomy.iter().zip(&self.weights) {
            s += irrep.character(&g.inverse())? * *w;
        }
        Ok(s * irrep.dim as f64)
    }

    /// `log Σ_x e^{2 φ^{(n)}(x)}`.
    pub fn log_sum_exp_2phi(&self) -> f64 {
        let doubled: Vec<f64> = self.phi_sums.iter().map(|s| 2.0 * s).collect();
        log_sum_exp(&doubled)
    }
}

/// Orbit-sum trace of `M_π^n` (expects a pressure-zero potential).
pub fn trace_periodic(
    map: &ExpandingMap,
    phi: &Potential,
    tau: &SkewFunction,
    irrep: &IrrepInfo,
    n: usize,
    cap: u128,
) -> Result<Complex64> {
    check_irrep(tau, irrep)?;
    OrbitEnsemble::new(map, phi, tau, n, cap)?.trace(irrep)
}

/// `W(n, π)`; the same orbit sum as [`trace_periodic`].
#[allow(non_snake_case)]
pub fn W_value(
    map: &ExpandingMap,
    phi: &Potential,
    tau: &SkewFunction,
    irrep: &IrrepInfo,
    n: usize,
    cap: u128,
) -> Result<Complex64> {
    trace_periodic(map, phi, tau, irrep, n, cap)
}

/// Orbit-sum trace with the `h`-conjugated weights
/// `e^{φ^{(n)}(x)} Π_j h(T^j x) / h(T^{j+1} x)` written out along each orbit.
pub fn trace_periodic_conjugated(
    map: &ExpandingMap,
    phi: &Potential,
    rpf: &RpfData,
    tau: &SkewFunction,
    irrep: &IrrepInfo,
    n: usize,
    cap: u128,
) -> Result<Complex64> {
    check_irrep(tau, irrep)?;
    let points = enumerate_periodic_points(map, n, cap)?;
    let mut s = Complex64::new(0.0, 0.0);
    for p in &points {
        let mut log_w = 0.0;
        for j in 0..n {
            let x = p.orbit[j];
            let next = p.orbit[(j + 1) % n];
            log_w += phi.eval(x) + rpf.density_at(x).ln() - rpf.density_at(next).ln();
        }
        let g = skew_cocycle(tau, p);
        s += irrep.character(&g.inverse())? * orbit_weight(p, log_w)?;
    }
    Ok(s * irrep.dim as f64)
}

/// Collocation matrix of `M_π` on `N` Chebyshev nodes.
#[derive(Debug, Clone)]
pub struct TwistedOperator {
    pub irrep: IrrepInfo,
    pub matrix: CMatrix,
    pub collocation_size: usize,
    /// Pressure shift and density conjugation applied.
    pub normalized: bool,
}

/// Assemble `M_π`. Row index `(i, a)` ↦ `i·dim + a`.
pub fn build_twisted_matrix(
    map: &ExpandingMap,
    phi: &Potential,
    rpf: &RpfData,
    tau: &SkewFunction,
    irrep: &IrrepInfo,
    n: usize,
) -> Result<TwistedOperator> {
    check_irrep(tau, irrep)?;
    if n < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 collocation nodes, got {n}")));
    }
    let grid = ChebGrid::new(n);
    let d = irrep.dim;
    let size = n * d;
    let scale = (-rpf.pressure).exp();
    let preimages: Vec<f64> = grid
        .nodes()
        .iter()
        .flat_map(|&x| map.branches().iter().map(move |b| (b.inverse)(x)))
        .collect();
    tau.check(&preimages)?;

    let blocks: Vec<Vec<Complex64>> = grid
        .nodes()
        .par_iter()
        .map(|&x| -> Result<Vec<Complex64>> {
            let hx = rpf.density_at(x);
            let mut rows = vec![Complex64::new(0.0, 0.0); d * size];
            let mut card = vec![0.0; n];
            for b in map.branches() {
                let y = (b.inverse)(x);
                let w = scale * phi.eval(y).exp() * rpf.density_at(y) / hx;
                grid.cardinals_into(y, &mut card);
                let r = irrep.matrix(&tau.gauged_eval(y, x))?.adjoint();
                for a in 0..d {
                    let row = &mut rows[a * size..(a + 1) * size];
                    for (l, &c) in card.iter().enumerate() {
                        if c == 0.0 {
                            continue;
                        }
                        for bb in 0..d {
                            row[l * d + bb] += r[(bb, a)] * (w * c);
                        }
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let matrix = CMatrix::from_fn(size, size, |row, col| blocks[row / d][(row % d) * size + col]);
    Ok(TwistedOperator {
        irrep: irrep.clone(),
        matrix,
        collocation_size: n,
        normalized: true,
    })
}

impl TwistedOperator {
    pub fn dim(&self) -> usize {
        self.irrep.dim
    }

    /// `dim π · Tr(M^n)`.
    pub fn trace_matrix(&self, n: usize) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::InvalidInput("trace power must be at least 1".into()));
        }
        Ok(self.traces(n)?[n - 1])
    }

    /// `dim π · Tr(M^k)` for `k = 1..=n_max`.
    pub fn traces(&self, n_max: usize) -> Result<Vec<Complex64>> {
        if n_max == 0 {
            return Err(Error::InvalidInput("need at least one trace".into()));
        }
        let d = self.dim() as f64;
        let mut out = Vec::with_capacity(n_max);
        let mut p = self.matrix.clone();
        out.push(p.trace() * d);
        for _ in 1..n_max {
            p = &p * &self.matrix;
            out.push(p.trace() * d);
        }
        Ok(out)
    }
}

/// Free-function form of [`TwistedOperator::trace_matrix`].
pub fn trace_matrix(op: &TwistedOperator, n: usize) -> Result<Complex64> {
    op.trace_matrix(n)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    /// Sorted by decreasing modulus.
    pub eigenvalues: Vec<Complex64>,
    /// The first `trusted` entries pass the collocation-trust cutoff.
    pub trusted: usize,
    pub irrep: IrrepInfo,
    pub collocation_size: usize,
    /// Multiplicity of each eigenvalue in the `End(V)`-valued operator.
    pub multiplicity: usize,
}

impl SpectrumResult {
    pub fn trusted_eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues[..self.trusted]
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |z| z.norm())
    }
}

/// Agreement between the two Galerkin truncations, relative to `|λ_0|`.
pub const STABILITY_TOL: f64 = 1e-7;

/// Operator in the Chebyshev coefficient basis, restricted to degrees `< k`
/// in every component: `(W_k ⊗ I) M (V_k ⊗ I)`.
pub fn galerkin_block(op: &TwistedOperator, k: usize) -> CMatrix {
    let n = op.collocation_size;
    let d = op.dim();
    let k = k.min(n);
    let grid = ChebGrid::new(n);
    let v = grid.chebyshev_vandermonde();
    let w = grid.coefficient_transform();
    let zero = Complex64::new(0.0, 0.0);
    let p = CMatrix::from_fn(k * d, n * d, |r, c| {
        if r % d == c % d {
            Complex64::new(w[r / d][c / d], 0.0)
        } else {
            zero
        }
    });
    let q = CMatrix::from_fn(n * d, k * d, |r, c| {
        if r % d == c % d {
            Complex64::new(v[r / d][c / d], 0.0)
        } else {
            zero
        }
    });
    p * &op.matrix * q
}

/// Spectrum of `M_π`.
///
/// Eigenvalues are taken from the Chebyshev–Galerkin block of degrees
/// `< N/2`: the full nodal matrix is strongly non-normal and rounding alone
/// displaces its deeper eigenvalues. An eigenvalue is trusted when
/// `|λ| > sqrt(ε)|λ_0|` and a second truncation at degree `3N/8` reproduces
/// it to within [`STABILITY_TOL`]`·|λ_0|`; the trusted set is a prefix.
pub fn eigenvalues(op: &TwistedOperator) -> Result<SpectrumResult> {
    let n = op.collocation_size;
    let ev = eigenvalues_complex(&galerkin_block(op, (n / 2).max(2)))?;
    let check = eigenvalues_complex(&galerkin_block(op, (3 * n / 8).max(2)))?;
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenSolver("non-finite eigenvalue".into()));
    }
    let lead = ev.first().map_or(0.0, |z| z.norm());
    let floor = f64::EPSILON.sqrt() * lead;
    let trusted = ev
        .iter()
        .take_while(|z| {
            z.norm() > floor && check.iter().any(|c| (c - *z).norm() <= STABILITY_TOL * lead)
        })
        .count();
    Ok(SpectrumResult {
        eigenvalues: ev,
        trusted,
        irrep: op.irrep.clone(),
        collocation_size: n,
        multiplicity: op.dim(),
    })
}

/// All eigenvalues of the full nodal matrix, by decreasing modulus.
pub fn eigenvalues_full(op: &TwistedOperator) -> Result<Vec<Complex64>> {
    eigenvalues_complex(&op.matrix)
}

/// Fit `|λ_n| ≈ C ρ^n` over the trusted eigenvalues.
pub fn decay_fit(spec: &SpectrumResult) -> Result<(f64, f64)> {
    let tr = spec.trusted_eigenvalues();
    if tr.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 6 trusted eigenvalues, have {}",
            tr.len()
        )));
    }
    let xs: Vec<f64> = (0..tr.len()).map(|i| i as f64).collect();
    let ys: Vec<f64> = tr.iter().map(|z| z.norm().ln()).collect();
    let (a, b) = linear_fit(&xs, &ys)?;
    let (c, rho) = (a.exp(), b.exp());
    if !(rho < 1.0) {
        return Err(Error::CheckFailed(format!("fitted eigenvalue decay ratio {rho} is not below 1")));
    }
    Ok((c, rho))
}

/// Truncated trace series of `Z_π(ζ) = exp(−Σ_n ζ^n Tr(M_π^n) / n)`.
#[derive(Debug, Clone, Serialize)]
pub struct ZetaSeries {
    pub irrep: IrrepInfo,
    /// `traces[k] = Tr(M_π^{k+1})`.
    pub traces: Vec<Complex64>,
    pub n_max: usize,
    pub radius_hint: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZetaValue {
    pub value: Complex64,
    /// Estimated truncation error of `value`.
    pub error: f64,
}

impl ZetaSeries {
    pub fn new(irrep: IrrepInfo, traces: Vec<Complex64>, radius_hint: f64) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::InvalidInput("zeta series needs at least one trace".into()));
        }
        if traces.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite trace".into()));
        }
        if !(radius_hint > 0.0) {
            return Err(Error::InvalidInput(format!("radius hint must be positive, got {radius_hint}")));
        }
        Ok(ZetaSeries {
            irrep,
            n_max: traces.len(),
            traces,
            radius_hint,
        })
    }

    /// Traces from periodic orbits; `λ_0` estimated from the growth of the last traces.
    pub fn from_orbits(
        map: &ExpandingMap,
        phi: &Potential,
        tau: &SkewFunction,
        irrep: &IrrepInfo,
        n_max: usize,
        cap: u128,
    ) -> Result<Self> {
        check_irrep(tau, irrep)?;
        let traces = (1..=n_max)
            .map(|n| trace_periodic(map, phi, tau, irrep, n, cap))
            .collect::<Result<Vec<_>>>()?;
        let lambda0 = traces
            .iter()
            .enumerate()
            .skip(n_max / 2)
            .map(|(i, t)| (t.norm() / irrep.dim as f64).powf(1.0 / (i + 1) as f64))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        ZetaSeries::new(irrep.clone(), traces, 0.75 / lambda0)
    }

    /// Traces `dim π Σ λ^n` over the listed eigenvalues only.
    pub fn from_spectrum(spec: &SpectrumResult, n_max: usize) -> Result<Self> {
        let lead = spec.spectral_radius();
        Self::from_eigenvalues(spec.irrep.clone(), &spec.eigenvalues, spec.multiplicity, n_max, lead)
    }

    /// Traces `dim π Σ λ^n` over every eigenvalue of the nodal matrix; power
    /// sums of the full spectrum equal `Tr(M^n)` to rounding error, so long
    /// series are cheap.
    pub fn from_operator(op: &TwistedOperator, n_max: usize) -> Result<Self> {
        let ev = eigenvalues_full(op)?;
        let lead = eigenvalues(op)?.spectral_radius();
        Self::from_eigenvalues(op.irrep.clone(), &ev, op.dim(), n_max, lead)
    }

    fn from_eigenvalues(irrep: IrrepInfo, ev: &[Complex64], dim: usize, n_max: usize, lead: f64) -> Result<Self> {
        let d = dim as f64;
        let mut powers = ev.to_vec();
        let mut traces = Vec::with_capacity(n_max);
        for _ in 0..n_max {
            traces.push(powers.iter().sum::<Complex64>() * d);
            for (p, l) in powers.iter_mut().zip(ev) {
                *p *= l;
            }
        }
        ZetaSeries::new(irrep, traces, 0.75 / lead.max(f64::MIN_POSITIVE))
    }

    fn check_trust(&self, zeta: Complex64) -> Result<()> {
        if zeta.norm() >= self.radius_hint {
            return Err(Error::OutsideTrustRegion {
                modulus: zeta.norm(),
                radius: self.radius_hint,
            });
        }
        Ok(())
    }

    fn lambda0(&self) -> f64 {
        0.75 / self.radius_hint
    }

    /// `Z'(ζ)/Z(ζ) = −Σ_n Tr(M^n) ζ^{n-1}`.
    pub fn log_derivative(&self, zeta: Complex64) -> Result<Complex64> {
        self.check_trust(zeta)?;
        Ok(self.log_derivative_unchecked(zeta))
    }

    fn log_derivative_unchecked(&self, zeta: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        for t in &self.traces {
            s -= t * p;
            p *= zeta;
        }
        s
    }

    fn log_value_unchecked(&self, zeta: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        let mut p = zeta;
        for (k, t) in self.traces.iter().enumerate() {
            s -= t * p / (k + 1) as f64;
            p *= zeta;
        }
        s
    }
}

/// `Z(ζ)` from the truncated series, with a geometric tail estimate.
pub fn zeta_eval(zs: &ZetaSeries, zeta: Complex64) -> Result<ZetaValue> {
    zs.check_trust(zeta)?;
    let value = zs.log_value_unchecked(zeta).exp();
    let ratio = zeta.norm() * zs.lambda0();
    let n = zs.n_max as f64;
    let d = zs.irrep.dim as f64;
    // |Tr M^k| ≲ dim² λ_0^k (size-independent bound up to the spectral sum)
    let last = zs.traces.last().map_or(0.0, |t| t.norm()).max(d * d * zs.lambda0().powf(n));
    let tail = last * zeta.norm().powf(n) / (n + 1.0) * ratio / (1.0 - ratio);
    Ok(ZetaValue {
        value,
        error: value.norm() * tail.exp_m1().abs(),
    })
}

fn contour_points(r: f64) -> impl Iterator<Item = Complex64> {
    (0..CONTOUR_POINTS).map(move |k| Complex64::from_polar(r, TAU * k as f64 / CONTOUR_POINTS as f64))
}

fn check_contour(zs: &ZetaSeries, r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("contour radius must be positive, got {r}")));
    }
    zs.check_trust(Complex64::new(r, 0.0))?;
    for z in contour_points(r) {
        let v = zs.log_value_unchecked(z).exp();
        if v.norm() < 1e-10 {
            return Err(Error::ZeroOnContour(format!("|Z| = {:e} at ζ = {z}", v.norm())));
        }
    }
    Ok(())
}

/// `−(1/2πi) ∮_{|ζ|=r} Z'/Z ζ^{-n} dζ` by the trapezoid rule, which recovers `W(n, π)`.
#[allow(non_snake_case)]
pub fn contour_extract_W(zs: &ZetaSeries, n: usize, r: f64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if n > zs.n_max {
        return Err(Error::InvalidInput(format!(
            "n = {n} exceeds the {} terms of the series",
            zs.n_max
        )));
    }
    check_contour(zs, r)?;
    let m = CONTOUR_POINTS as f64;
    let s: Complex64 = contour_points(r)
        .map(|z| zs.log_derivative_unchecked(z) * z.powi(1 - n as i32))
        .sum();
    Ok(-s / m)
}

/// Number of zeros of `Z` inside `|ζ| < r` by the argument principle.
pub fn zero_count(zs: &ZetaSeries, r: f64) -> Result<i64> {
    check_contour(zs, r)?;
    let s: Complex64 = contour_points(r).map(|z| zs.log_derivative_unchecked(z) * z).sum();
    Ok((s.re / CONTOUR_POINTS as f64).round() as i64)
}

/// Taylor coefficients `c_0..=c_k` of `Z` from the traces (Newton's identities).
pub fn determinant_coefficients(zs: &ZetaSeries, k_max: usize) -> Vec<Complex64> {
    let k_max = k_max.min(zs.n_max);
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for k in 1..=k_max {
        let s: Complex64 = (1..=k).map(|j| zs.traces[j - 1] * c[k - j]).sum();
        c.push(-s / k as f64);
    }
    c
}

/// Roots of the determinant polynomial `Σ_{k ≤ k_max} c_k ζ^k`, by modulus.
pub fn determinant_zeros(zs: &ZetaSeries, k_max: usize) -> Result<Vec<Complex64>> {
    let mut c = determinant_coefficients(zs, k_max);
    let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    while c.len() > 1 && c.last().unwrap().norm() <= 1e-14 * scale {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let mut comp = CMatrix::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -c[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let mut roots = eigenvalues_complex(&comp)?;
    roots.reverse();
    Ok(roots)
}

#[derive(Debug, Clone, Serialize)]
pub struct LogDerivReport {
    pub r: f64,
    pub rho1: f64,
    pub max_log_derivative: f64,
    pub sqrt_kappa: f64,
}

/// `max_{|ζ| = r} |Z'/Z|` after checking that `Z` has no zeros in `|ζ| < rho1`.
/// The zero-free check uses the determinant polynomial, so `rho1` may exceed
/// the series trust radius.
pub fn logderiv_bound_check(zs: &ZetaSeries, r: f64, rho1: f64) -> Result<LogDerivReport> {
    if !(rho1 > r) {
        return Err(Error::InvalidInput(format!("need rho1 > r, got rho1 = {rho1}, r = {r}")));
    }
    if let Some(z) = determinant_zeros(zs, zs.n_max.min(24))?.into_iter().find(|z| z.norm() < rho1) {
        return Err(Error::ZeroOnContour(format!("zero at {z} inside |ζ| < {rho1}")));
    }
    check_contour(zs, r)?;
    let max = contour_points(r)
        .map(|z| zs.log_derivative_unchecked(z).norm())
        .fold(0.0, f64::max);
    Ok(LogDerivReport {
        r,
        rho1,
        max_log_derivative: max,
        sqrt_kappa: zs.irrep.kappa.sqrt(),
    })
}

/// Log-log slope of `max |Z'/Z|` against `sqrt(κ)` over non-trivial irreps.
pub fn logderiv_growth_exponent(reports: &[LogDerivReport]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.sqrt_kappa > 0.0 && r.max_log_derivative > 0.0)
        .map(|r| (r.sqrt_kappa.ln(), r.max_log_derivative.ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(linear_fit(&xs, &ys)?.1)
}

/// JSON export record for one irrep.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRecord {
    pub group: String,
    pub irrep_id: String,
    pub kappa: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub eigenvalues: Vec<[f64; 2]>,
    pub traces: Vec<[f64; 2]>,
}

impl SpectrumRecord {
    pub fn new(spec: &SpectrumResult, traces: &[Complex64]) -> Self {
        SpectrumRecord {
            group: spec.irrep.group.to_string(),
            irrep_id: spec.irrep.id.to_string(),
            kappa: spec.irrep.kappa,
            n: spec.collocation_size,
            eigenvalues: spec.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            traces: traces.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DEFAULT_ORBIT_CAP;
    use crate::thermo::rpf_solve;
    use std::f64::consts::LN_2;

    fn doubling_srb() -> (ExpandingMap, Potential, RpfData) {
        let m = ExpandingMap::doubling();
        let phi = Potential::constant(-LN_2);
        let rpf = rpf_solve(&m, &phi, 32).unwrap();
        (m, phi, rpf)
    }

    #[test]
    fn untwisted_traces() {
        let (m, phi, _) = doubling_srb();
        let tau = SkewFunction::identity(GroupModel::Torus(1));
        let triv = IrrepInfo::torus(&[0]);
        let t1 = trace_periodic(&m, &phi, &tau, &triv, 1, DEFAULT_ORBIT_CAP).unwrap();
        assert!((t1 - 2.0).norm() < 1e-14);
        let t2 = trace_periodic(&m, &phi, &tau, &triv, 2, DEFAULT_ORBIT_CAP).unwrap();
        assert!((t2 - 4.0 / 3.0).norm() < 1e-14);
    }

    #[test]
    fn identity_twist_scales_by_dim_squared() {
        let (m, phi, rpf) = doubling_srb();
        let tau = SkewFunction::identity(GroupModel::Su2);
        let pi = IrrepInfo::su2(1);
        let tp = trace_periodic(&m, &phi, &tau, &pi, 2, DEFAULT_ORBIT_CAP).unwrap();
        assert!((tp - 16.0 / 3.0).norm() < 1e-13);
        let op = build_twisted_matrix(&m, &phi, &rpf, &tau, &pi, 32).unwrap();
        assert!((op.trace_matrix(2).unwrap() - 16.0 / 3.0).norm() < 1e-10);
        let op0 = build_twisted_matrix(&m, &phi, &rpf, &tau, &IrrepInfo::su2(0), 48).unwrap();
        assert!((op0.trace_matrix(1).unwrap() - 2.0).norm() < 1e-10);
    }

    #[test]
    fn linear_twist_fixed_points() {
        let (m, phi, _) = doubling_srb();
        let tau = SkewFunction::torus_linear(&[1.0]).unwrap();
        let w = W_value(&m, &phi, &tau, &IrrepInfo::torus(&[1]), 1, DEFAULT_ORBIT_CAP).unwrap();
        assert!((w - 2.0).norm() < 1e-12);
    }

    #[test]
    fn constant_twist_rotates_spectrum() {
        let (m, phi, rpf) = doubling_srb();
        let c = 0.9;
        let tau = SkewFunction::torus_constant(&[c]).unwrap();
        let q = 2;
        let op = build_twisted_matrix(&m, &phi, &rpf, &tau, &IrrepInfo::torus(&[q]), 24).unwrap();
        let spec = eigenvalues(&op).unwrap();
        let rot = Complex64::from_polar(1.0, -(q as f64) * c);
        for k in 0..8 {
            let target = rot * 0.5f64.powi(k);
            let hit = spec.eigenvalues.iter().map(|z| (z - target).norm()).fold(f64::INFINITY, f64::min);
            assert!(hit < 1e-9, "k={k}");
        }
    }

    #[test]
    fn doubling_decay_fit() {
        let (m, phi, rpf) = doubling_srb();
        let tau = SkewFunction::identity(GroupModel::Torus(1));
        let op = build_twisted_matrix(&m, &phi, &rpf, &tau, &IrrepInfo::torus(&[0]), 32).unwrap();
        let spec = eigenvalues(&op).unwrap();
        let (c, rho) = decay_fit(&spec).unwrap();
        assert!((rho - 0.5).abs() < 1e-5, "{rho}");
        assert!((c - 1.0).abs() < 1e-5);
    }

    #[test]
    fn zeta_at_half_is_the_infinite_product() {
        let (m, phi, rpf) = doubling_srb();
        let tau = SkewFunction::identity(GroupModel::Torus(1));
        let op = build_twisted_matrix(&m, &phi, &rpf, &tau, &IrrepInfo::torus(&[0]), 32).unwrap();
        let zs = ZetaSeries::from_operator(&op, 80).unwrap();
        let product: f64 = (1..60).map(|k| 1.0 - 0.5f64.powi(k)).product();
        let z = zeta_eval(&zs, Complex64::new(0.5, 0.0)).unwrap();
        assert!((z.value.re - product).abs() < 1e-10, "{} vs {product}", z.value);
        assert!((zeta_eval(&zs, Complex64::new(0.0, 0.0)).unwrap().value - 1.0).norm() < 1e-15);
        assert!(zeta_eval(&zs, Complex64::new(0.8, 0.0)).is_err());
        let zeros = determinant_zeros(&zs, 20).unwrap();
        assert!((zeros[0] - 1.0).norm() < 1e-8);
        assert_eq!(zero_count(&zs, 0.5).unwrap(), 0);
    }

    #[test]
    fn contour_recovers_traces() {
        let (m, phi, _) = doubling_srb();
        let tau = SkewFunction::identity(GroupModel::Torus(1));
        let zs = ZetaSeries::from_orbits(&m, &phi, &tau, &IrrepInfo::torus(&[0]), 10, DEFAULT_ORBIT_CAP).unwrap();
        assert!((contour_extract_W(&zs, 1, 0.5).unwrap() - 2.0).norm() < 1e-12);
        assert!((contour_extract_W(&zs, 2, 0.5).unwrap() - 4.0 / 3.0).norm() < 1e-12);
    }

    #[test]
    fn group_mismatch_is_rejected() {
        let (m, phi, rpf) = doubling_srb();
        let tau = SkewFunction::torus_linear(&[1.0]).unwrap();
        assert!(build_twisted_matrix(&m, &phi, &rpf, &tau, &IrrepInfo::su2(1), 8).is_err());
        assert!(trace_periodic(&m, &phi, &tau, &IrrepInfo::torus(&[1, 1]), 1, 100).is_err());
    }
}
