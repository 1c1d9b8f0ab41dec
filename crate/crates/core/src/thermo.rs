//! Scalar transfer operator `L_φ f(x) = Σ_{Ty=x} e^{φ(y)} f(y)` by
//! Chebyshev collocation, and its Ruelle–Perron–Frobenius data.
//!
//! `RpfData` carries two sets of node weights:
//! * `nu_weights` `u`: the left eigenvector, read as the functional
//!   `ν(f) ≈ Σ u_i f(x_i)`, normalized so `ν(1) = 1`;
//! * `measure_weights` `w_i = u_i h_i` for `μ = h ν`, with `h` scaled so
//!   that `Σ w_i = 1`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dynamics::{ExpandingMap, RealFn};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_real, eigenvector_real};
use crate::quadrature::ChebGrid;

/// Residual accepted for the leading eigenpair, relative to `max(1, λ)`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-11;
pub const DEFAULT_NODES_LINEAR: usize = 32;
pub const DEFAULT_NODES_NONLINEAR: usize = 64;

#[derive(Clone)]
pub struct Potential {
    eval: RealFn,
    label: String,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential({})", self.label)
    }
}

impl Potential {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Potential {
            eval: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Potential::new(format!("{c}"), move |_| c)
    }

    /// `−log |T'|`, whose equilibrium state is the absolutely continuous invariant measure.
    pub fn srb(map: &ExpandingMap) -> Self {
        let m = map.clone();
        Potential::new(format!("srb({})", map.name()), move |x| -m.derivative(x).abs().ln())
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shifted(&self, c: f64) -> Self {
        let f = self.eval.clone();
        Potential::new(format!("{} + {c}", self.label), move |x| f(x) + c)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let f = self.eval.clone();
        Potential::new(format!("{s}*({})", self.label), move |x| s * f(x))
    }

    pub fn plus(&self, label: &str, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let f = self.eval.clone();
        Potential::new(format!("{} + {label}", self.label), move |x| f(x) + g(x))
    }

    /// Finite at the given sample points.
    pub fn check_finite(&self, xs: &[f64]) -> Result<()> {
        match xs.iter().find(|&&x| !self.eval(x).is_finite()) {
            Some(x) => Err(Error::InvalidInput(format!("potential {} is not finite at {x}", self.label))),
            None => Ok(()),
        }
    }
}

fn check_nodes(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 collocation nodes, got {n}")));
    }
    Ok(())
}

/// Matrix of `f ↦ Σ_j e^{φ(γ_j x)} f(γ_j x)` on node values:
/// entry `(i,l) = Σ_j e^{φ(γ_j x_i)} ℓ_l(γ_j x_i)`.
pub fn discretize_transfer_operator(map: &ExpandingMap, phi: &Potential, n: usize) -> Result<DMatrix<f64>> {
    check_nodes(n)?;
    let grid = ChebGrid::new(n);
    Ok(transfer_matrix_on(map, phi, &grid))
}

fn transfer_matrix_on(map: &ExpandingMap, phi: &Potential, grid: &ChebGrid) -> DMatrix<f64> {
    let n = grid.len();
    let rows: Vec<Vec<f64>> = grid
        .nodes()
        .par_iter()
        .map(|&x| {
            let mut row = vec![0.0; n];
            let mut card = vec![0.0; n];
            for b in map.branches() {
                let y = (b.inverse)(x);
                let w = phi.eval(y).exp();
                grid.cardinals_into(y, &mut card);
                for (r, c) in row.iter_mut().zip(&card) {
                    *r += w * c;
                }
            }
            row
        })
        .collect();
    DMatrix::from_fn(n, n, |i, l| rows[i][l])
}

#[derive(Debug, Clone)]
pub struct RpfData {
    pub pressure: f64,
    /// `e^{P(φ)}`.
    pub leading_eigenvalue: f64,
    /// `|λ_1| / λ_0` of the discretized operator.
    pub gap_ratio: f64,
    pub density_values: Vec<f64>,
    pub node_points: Vec<f64>,
    pub nu_weights: Vec<f64>,
    pub measure_weights: Vec<f64>,
    pub collocation_size: usize,
    pub residual: f64,
    grid: ChebGrid,
}

impl RpfData {
    pub fn grid(&self) -> &ChebGrid {
        &self.grid
    }

    /// Interpolated density `h(y)`.
    pub fn density_at(&self, y: f64) -> f64 {
        self.grid.interpolate(&self.density_values, y)
    }

    /// `∫ f dν` by the left-eigenvector weights.
    pub fn nu_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.node_points.iter().zip(&self.nu_weights).map(|(&x, &u)| u * f(x)).sum()
    }
}

/// Leading eigendata of the discretized operator.
pub fn rpf_solve(map: &ExpandingMap, phi: &Potential, n: usize) -> Result<RpfData> {
    check_nodes(n)?;
    let grid = ChebGrid::new(n);
    phi.check_finite(grid.nodes())?;
    let m = transfer_matrix_on(map, phi, &grid);
    let ev = eigenvalues_real(&m)?;
    let lead = ev[0];
    if lead.re <= 0.0 || lead.im.abs() > 1e-10 * lead.norm() {
        return Err(Error::LeadingEigenvalue(format!(
            "leading eigenvalue {lead} is not real positive; increase N or check the map/potential"
        )));
    }
    let gap_ratio = ev.get(1).map_or(0.0, |z| z.norm() / lead.re);
    if gap_ratio > 1.0 - 1e-8 {
        return Err(Error::LeadingEigenvalue(format!(
            "leading eigenvalue {} is not simple (next modulus ratio {gap_ratio})",
            lead.re
        )));
    }
    let lambda = lead.re;

    let mut h: Vec<f64> = eigenvector_real(&m, lambda)?.iter().cloned().collect();
    let mut u: Vec<f64> = eigenvector_real(&m.transpose(), lambda)?.iter().cloned().collect();
    if h.iter().sum::<f64>() < 0.0 {
        h.iter_mut().for_each(|v| *v = -*v);
    }
    let su: f64 = u.iter().sum();
    u.iter_mut().for_each(|v| *v /= su);
    let uh: f64 = u.iter().zip(&h).map(|(a, b)| a * b).sum();
    h.iter_mut().for_each(|v| *v /= uh);

    let hv = nalgebra::DVector::from_column_slice(&h);
    let residual = (&m * &hv - &hv * lambda).norm() / hv.norm();
    if residual > EIGEN_RESIDUAL_TOL * lambda.max(1.0) {
        return Err(Error::LeadingEigenvalue(format!("eigenvector residual {residual:e} too large")));
    }
    if let Some(bad) = h.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::LeadingEigenvalue(format!("density is not positive (value {bad})")));
    }
    let measure_weights: Vec<f64> = u.iter().zip(&h).map(|(a, b)| a * b).collect();

    Ok(RpfData {
        pressure: lambda.ln(),
        leading_eigenvalue: lambda,
        gap_ratio,
        density_values: h,
        node_points: grid.nodes().to_vec(),
        nu_weights: u,
        measure_weights,
        collocation_size: n,
        residual,
        grid,
    })
}

/// `φ − P(φ)`.
pub fn normalize_potential(phi: &Potential, rpf: &RpfData) -> Potential {
    if rpf.pressure == 0.0 {
        return phi.clone();
    }
    let p = rpf.pressure;
    let f = phi.eval.clone();
    Potential::new(format!("{} - P", phi.label), move |x| f(x) - p)
}

/// `Σ_i w_i f(x_i) ≈ ∫ f dμ_φ`.
pub fn equilibrium_integral(rpf: &RpfData, f: impl Fn(f64) -> f64) -> f64 {
    rpf.node_points
        .iter()
        .zip(&rpf.measure_weights)
        .map(|(&x, &w)| w * f(x))
        .sum()
}

/// Matrix of `L̃ f = e^{-P} h^{-1} L(h f)` on node values, with `h`
/// interpolated at the preimages.
pub fn normalized_transfer_matrix(map: &ExpandingMap, phi: &Potential, rpf: &RpfData) -> DMatrix<f64> {
    let grid = &rpf.grid;
    let n = grid.len();
    let scale = (-rpf.pressure).exp();
    let rows: Vec<Vec<f64>> = grid
        .nodes()
        .par_iter()
        .zip(&rpf.density_values)
        .map(|(&x, &hx)| {
            let mut row = vec![0.0; n];
            let mut card = vec![0.0; n];
            for b in map.branches() {
                let y = (b.inverse)(x);
                let w = scale * phi.eval(y).exp() * rpf.density_at(y) / hx;
                grid.cardinals_into(y, &mut card);
                for (r, c) in row.iter_mut().zip(&card) {
                    *r += w * c;
                }
            }
            row
        })
        .collect();
    DMatrix::from_fn(n, n, |i, l| rows[i][l])
}
