//! Heat-averaged orbit sums
//! `S(t,n) = Σ_π e^{-tκ_π} |W(n,π)|² / dim(π)²` and the diagonal lower bound
//! obtained by keeping only the `x = y` terms of
//! `S = Σ_{x,y} G_n(x) G_n(y) F(t; g_x, g_y)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::ExpandingMap;
use crate::error::{Error, Result};
use crate::groups::heat::truncation_kappa;
use crate::groups::{beta_constant, irrep_enumerate, su2, GroupModel, GroupPoint};
use crate::thermo::Potential;
use crate::twisted::{OrbitEnsemble, SkewFunction};

/// Orbits of one period together with the fibre group.
#[derive(Debug, Clone)]
pub struct HeatAverage {
    pub group: GroupModel,
    pub ensemble: OrbitEnsemble,
}

#[derive(Debug, Clone, Copy)]
pub struct Components {
    pub s: f64,
    pub diagonal: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AverageReport {
    pub t: f64,
    pub n: usize,
    pub s_value: f64,
    pub diagonal_value: f64,
    /// `min_x F(t; g_x, g_x)` over the period-`n` orbits.
    pub diagonal_floor: f64,
    /// `A t^{-rank/2} Σ e^{2φ^{(n)}}`.
    pub lower_bound_value: f64,
    pub a_constant: f64,
    pub rank: usize,
    /// `Σ_{T^n x = x} e^{2φ^{(n)}(x)}`.
    pub orbit_sum_2phi: f64,
    /// Orbit estimate `(1/n) log Σ e^{2φ^{(n)}}` of `P(2φ)`.
    pub pressure2: f64,
}

impl AverageReport {
    /// `S / bound − 1`.
    pub fn margin(&self) -> f64 {
        self.s_value / self.lower_bound_value - 1.0
    }

    pub fn csv_row(&self) -> [String; 6] {
        [
            format!("{:e}", self.t),
            self.n.to_string(),
            format!("{:.17e}", self.s_value),
            format!("{:.17e}", self.diagonal_value),
            format!("{:.17e}", self.lower_bound_value),
            format!("{:.17e}", self.margin()),
        ]
    }
}

pub const CSV_HEADER: [&str; 6] = ["t", "n", "S", "diagonal", "bound", "margin"];

impl HeatAverage {
    pub fn new(
        map: &ExpandingMap,
        phi: &Potential,
        tau: &SkewFunction,
        group: GroupModel,
        n: usize,
        cap: u128,
    ) -> Result<Self> {
        let tau = tau.with_group(group)?;
        Ok(HeatAverage {
            group,
            ensemble: OrbitEnsemble::new(map, phi, &tau, n, cap)?,
        })
    }

    pub fn period(&self) -> usize {
        self.ensemble.period
    }

    pub fn orbit_sum_2phi(&self) -> f64 {
        self.ensemble.log_sum_exp_2phi().exp()
    }

    /// `S(t,n)`, its diagonal part and `min_x F(t; g_x, g_x)`, with the common truncation rule.
    pub fn components(&self, t: f64, tol: f64) -> Result<Components> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
        }
        let k_max = truncation_kappa(t, self.group.dim(), tol);
        let g = &self.ensemble.weights;
        let sq: f64 = g.iter().map(|w| w * w).sum();
        match self.group {
            GroupModel::Torus(_) => {
                let irreps = irrep_enumerate(self.group, k_max)?;
                let angles: Vec<&[f64]> = self
                    .ensemble
                    .holonomy
                    .iter()
                    .map(|p| match p {
                        GroupPoint::Torus(a) => a.angles(),
                        GroupPoint::Su2(_) => unreachable!(),
                    })
                    .collect();
                let terms: Vec<f64> = irreps
                    .par_iter()
                    .map(|pi| {
                        let q = match &pi.id {
                            crate::groups::IrrepId::Torus(q) => q,
                            crate::groups::IrrepId::Su2(_) => unreachable!(),
                        };
                        let mut w = Complex64::new(0.0, 0.0);
                        for (a, gx) in angles.iter().zip(g) {
                            let phase: f64 = q.iter().zip(a.iter()).map(|(qi, ai)| *qi as f64 * ai).sum();
                            w += Complex64::from_polar(*gx, -phase);
                        }
                        (-t * pi.kappa).exp() * w.norm_sqr()
                    })
                    .collect();
                let heat_trace: f64 = irreps.iter().map(|pi| (-t * pi.kappa).exp()).sum();
                Ok(Components {
                    s: terms.iter().sum(),
                    diagonal: heat_trace * sq,
                    floor: heat_trace,
                })
            }
            GroupModel::Su2 | GroupModel::So3 => {
                let step = if self.group == GroupModel::So3 { 2 } else { 1 };
                let mut m_max = 0u32;
                while ((m_max + 1) as f64) * ((m_max + 3) as f64) <= k_max {
                    m_max += 1;
                }
                let chars: Vec<Vec<f64>> = self
                    .ensemble
                    .holonomy
                    .iter()
                    .map(|p| match p {
                        GroupPoint::Su2(q) => su2::characters_upto(m_max, q.w),
                        GroupPoint::Torus(_) => unreachable!(),
                    })
                    .collect();
                let ms: Vec<usize> = (0..=m_max as usize).step_by(step).collect();
                let decay: Vec<f64> = ms.iter().map(|&m| (-t * (m * (m + 2)) as f64).exp()).collect();
                let terms: Vec<f64> = ms
                    .par_iter()
                    .zip(&decay)
                    .map(|(&m, e)| {
                        let w: f64 = chars.iter().zip(g).map(|(c, gx)| gx * c[m]).sum();
                        e * w * w
                    })
                    .collect();
                // F(t; g_x, g_x) for each orbit
                let self_avg: Vec<f64> = chars
                    .par_iter()
                    .map(|c| ms.iter().zip(&decay).map(|(&m, e)| e * c[m] * c[m]).sum())
                    .collect();
                Ok(Components {
                    s: terms.iter().sum(),
                    diagonal: self_avg.iter().zip(g).map(|(f, gx)| gx * gx * f).sum(),
                    floor: self_avg.iter().copied().fold(f64::INFINITY, f64::min),
                })
            }
        }
    }

    pub fn report(&self, t: f64, tol: f64, a_constant: f64) -> Result<AverageReport> {
        let c = self.components(t, tol)?;
        let rank = self.group.rank();
        let orbit = self.orbit_sum_2phi();
        Ok(AverageReport {
            t,
            n: self.period(),
            s_value: c.s,
            diagonal_value: c.diagonal,
            diagonal_floor: c.floor,
            lower_bound_value: a_constant * t.powf(-(rank as f64) / 2.0) * orbit,
            a_constant,
            rank,
            orbit_sum_2phi: orbit,
            pressure2: orbit.ln() / self.period() as f64,
        })
    }
}

/// `S(t,n)` for one cell; `a_constant` scales the reported lower bound.
#[allow(non_snake_case, clippy::too_many_arguments)]
pub fn S_sum(
    map: &ExpandingMap,
    phi: &Potential,
    tau: &SkewFunction,
    group: GroupModel,
    t: f64,
    n: usize,
    tol: f64,
    cap: u128,
    a_constant: f64,
) -> Result<AverageReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    HeatAverage::new(map, phi, tau, group, n, cap)?.report(t, tol, a_constant)
}

/// `A = min t^{rank/2} min_x F(t; g_x, g_x)` over the given cells.
///
/// Since `G_n(x)² ≥ e^{2φ^{(n)}(x)}`, this constant bounds the diagonal of
/// every fitted cell from below, and `S` dominates the diagonal.
pub fn fit_lower_bound_constant(reports: &[AverageReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::InsufficientData("no cells to fit the constant on".into()));
    }
    Ok(reports
        .iter()
        .map(|r| r.t.powf(r.rank as f64 / 2.0) * r.diagonal_floor)
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub holds: bool,
    pub worst_margin: f64,
    pub worst_cell: (f64, usize),
}

/// Check `S ≥ bound` on every report; margins are relative (`S/bound − 1`).
pub fn diagonal_lower_bound_check(reports: &[AverageReport]) -> Result<BoundCheck> {
    let worst = reports
        .iter()
        .min_by(|a, b| a.margin().total_cmp(&b.margin()))
        .ok_or_else(|| Error::InsufficientData("no cells to check".into()))?;
    Ok(BoundCheck {
        holds: worst.margin() >= 0.0,
        worst_margin: worst.margin(),
        worst_cell: (worst.t, worst.n),
    })
}

/// Fit `A` on `fit_cells`, then evaluate the bound on the disjoint `verify_cells`.
pub fn fit_and_verify(
    averages: &[HeatAverage],
    fit_ts: &[f64],
    verify_ts: &[f64],
    tol: f64,
) -> Result<(f64, Vec<AverageReport>, BoundCheck)> {
    if fit_ts.iter().any(|t| verify_ts.contains(t)) {
        return Err(Error::InvalidInput("fit and verification t grids overlap".into()));
    }
    let mut fit = Vec::new();
    for avg in averages {
        for &t in fit_ts {
            fit.push(avg.report(t, tol, 1.0)?);
        }
    }
    let a = fit_lower_bound_constant(&fit)?;
    let mut verify = Vec::new();
    for avg in averages {
        for &t in verify_ts {
            verify.push(avg.report(t, tol, a)?);
        }
    }
    let check = diagonal_lower_bound_check(&verify)?;
    Ok((a, verify, check))
}

#[derive(Debug, Clone, Serialize)]
pub struct ContradictionRow {
    pub n: usize,
    pub t: f64,
    /// `log(A t^{-rank/2} e^{n P(2φ)})`.
    pub log_lower: f64,
    /// `log((1+ε)^{2n})`, trivial-irrep part of the upper bound.
    pub log_upper_trivial: f64,
    /// `log(t^{-β} (ρ+ε)^{2n})`, non-trivial irreps under the spectral hypothesis.
    pub log_upper_twisted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContradictionReport {
    pub group: String,
    pub rank: usize,
    pub beta: f64,
    pub gamma: f64,
    pub pressure2: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub rho_hypothesis: f64,
    /// Growth rate of the lower bound along `t = e^{-αn}`.
    pub lower_rate: f64,
    pub upper_rate: f64,
    /// The hypothesis `ρ` contradicts the lower bound.
    pub contradiction: bool,
    /// Every `ρ` below this value is excluded at this `ε`.
    pub threshold: f64,
    /// `e^{γ P(2φ)}`, the `ε → 0` limit of `threshold`.
    pub threshold_limit: f64,
    pub rows: Vec<ContradictionRow>,
}

#[derive(Debug, Clone)]
pub struct ContradictionParams {
    pub group: GroupModel,
    pub improved: bool,
    pub pressure2: f64,
    pub rho_hypothesis: f64,
    pub epsilon: f64,
    /// Coupling `t = e^{-αn}`; default `(2|P(2φ)| + 6ε)/rank`.
    pub alpha: Option<f64>,
    pub a_constant: f64,
    pub n_max: usize,
}

/// Replay the contradiction argument along `t = e^{-αn}`.
///
/// With `t = e^{-αn}` the lower bound grows like `e^{n(αr/2 + P)}` while the
/// upper bound grows like `e^{n max(2 log(1+ε), αβ + 2 log(ρ+ε))}`; the
/// hypothesis on `ρ` fails when the first rate is larger.
pub fn contradiction_scheme(p: &ContradictionParams) -> Result<ContradictionReport> {
    if !(p.rho_hypothesis > 0.0 && p.rho_hypothesis < 1.0) {
        return Err(Error::InvalidInput(format!("rho must lie in (0,1), got {}", p.rho_hypothesis)));
    }
    if !(p.epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", p.epsilon)));
    }
    let rank = p.group.rank() as f64;
    let beta = beta_constant(p.group, p.improved)?;
    let gamma = beta / rank;
    let eps = p.epsilon;
    let alpha = p.alpha.unwrap_or((2.0 * p.pressure2.abs() + 6.0 * eps) / rank);
    let lower_rate = alpha * rank / 2.0 + p.pressure2;
    let trivial_rate = 2.0 * (1.0 + eps).ln();
    let twisted_rate = alpha * beta + 2.0 * (p.rho_hypothesis + eps).ln();
    let upper_rate = trivial_rate.max(twisted_rate);
    let contradiction = lower_rate > upper_rate;
    let threshold = if lower_rate > trivial_rate {
        ((lower_rate - alpha * beta) / 2.0).exp() - eps
    } else {
        0.0
    };
    let rows = (1..=p.n_max)
        .map(|n| {
            let nf = n as f64;
            let t = (-alpha * nf).exp();
            ContradictionRow {
                n,
                t,
                log_lower: p.a_constant.ln() + rank / 2.0 * alpha * nf + nf * p.pressure2,
                log_upper_trivial: nf * trivial_rate,
                log_upper_twisted: beta * alpha * nf + 2.0 * nf * (p.rho_hypothesis + eps).ln(),
            }
        })
        .collect();
    Ok(ContradictionReport {
        group: p.group.to_string(),
        rank: p.group.rank(),
        beta,
        gamma,
        pressure2: p.pressure2,
        epsilon: eps,
        alpha,
        rho_hypothesis: p.rho_hypothesis,
        lower_rate,
        upper_rate,
        contradiction,
        threshold,
        threshold_limit: (gamma * p.pressure2).exp(),
        rows,
    })
}
