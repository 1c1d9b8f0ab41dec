//! Heat kernels `h_t = Σ_π e^{-tκ_π} dim(π) χ_π` and related spectral sums.
//!
//! Character sums keep every irrep with `κ ≤ K(t)`, where `K(t)` is the
//! smallest value with `e^{-tK} K^{d/2+1} ≤ tol`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use super::{su2, GroupModel, GroupPoint, IrrepInfo, Quaternion};
use crate::error::{Error, Result};
use crate::linalg::linear_fit;

/// Casimir cutoff `K(t)` for a truncated heat-kernel sum.
pub fn truncation_kappa(t: f64, dim: usize, tol: f64) -> f64 {
    let p = dim as f64 / 2.0 + 1.0;
    let l = (1.0 / tol).ln();
    let mut k = (l / t).max(1.0);
    for _ in 0..100 {
        let next = ((l + p * k.ln()) / t).max(1.0);
        if (next - k).abs() <= 1e-9 * k {
            k = next;
            break;
        }
        k = next;
    }
    k
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("heat time must be positive and finite, got {t}")))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("tolerance must lie in (0,1), got {tol}")))
    }
}

fn real_part_checked(sum: Complex64, abs_sum: f64, tol: f64, what: &str) -> Result<f64> {
    let allowed = tol.max(64.0 * f64::EPSILON * abs_sum);
    if sum.im.abs() > allowed {
        return Err(Error::CheckFailed(format!(
            "{what}: imaginary part {} exceeds {allowed}",
            sum.im
        )));
    }
    Ok(sum.re)
}

fn su2_m_max(kappa_max: f64) -> u32 {
    // m(m+2) ≤ K  ⇔  m ≤ sqrt(K+1) − 1
    let mut m = ((kappa_max + 1.0).sqrt() - 1.0).floor().max(0.0) as u32;
    while ((m + 1) as f64) * ((m + 3) as f64) <= kappa_max {
        m += 1;
    }
    m
}

/// Truncated character expansion of `h_t(g)`.
pub fn heat_kernel(group: GroupModel, t: f64, g: &GroupPoint, tol: f64) -> Result<f64> {
    check_t(t)?;
    check_tol(tol)?;
    group.validate()?;
    if !group.contains(g) {
        return Err(Error::GroupMismatch {
            irrep: group.to_string(),
            group: format!("{g:?}"),
        });
    }
    let k_max = truncation_kappa(t, group.dim(), tol);
    match (group, g) {
        (GroupModel::Torus(_), GroupPoint::Torus(p)) => {
            // product of one-dimensional sums
            let mut value = Complex64::new(1.0, 0.0);
            let mut abs_total = 1.0;
            let r = k_max.sqrt().floor() as i64;
            for &theta in p.angles() {
                let mut s = Complex64::new(0.0, 0.0);
                let mut a = 0.0;
                for q in -r..=r {
                    let term = Complex64::from_polar((-t * (q * q) as f64).exp(), q as f64 * theta);
                    s += term;
                    a += term.norm();
                }
                value *= s;
                abs_total *= a;
            }
            real_part_checked(value, abs_total, tol, "torus heat kernel")
        }
        (GroupModel::Su2 | GroupModel::So3, GroupPoint::Su2(q)) => {
            let m_max = su2_m_max(k_max);
            let chars = su2::characters_upto(m_max, q.w);
            let step = if group == GroupModel::So3 { 2 } else { 1 };
            let mut s = 0.0;
            for m in (0..=m_max as usize).step_by(step) {
                let mf = m as f64;
                s += (-t * mf * (mf + 2.0)).exp() * (mf + 1.0) * chars[m];
            }
            Ok(s)
        }
        _ => unreachable!(),
    }
}

/// `sqrt(π/t) Σ_{p∈Z} e^{-(θ-2πp)²/(4t)}`, the Poisson-dual form of
/// `Σ_q e^{-tq²} e^{iqθ}`.
pub fn theta_inversion_rhs(t: f64, theta: f64) -> f64 {
    let th = theta.rem_euclid(TAU);
    let reach = (4.0 * t * 745.0).sqrt() / TAU + 2.0;
    let pmax = reach.ceil() as i64;
    let mut s = 0.0;
    for p in -pmax..=pmax {
        let d = th - TAU * p as f64;
        s += (-d * d / (4.0 * t)).exp();
    }
    (PI / t).sqrt() * s
}

/// `x / sin(x)` and `expm1(-c x) / sin(x)` with their limits at `x = 0`.
fn over_sin(num: f64, x: f64, limit: f64) -> f64 {
    if x == 0.0 {
        limit
    } else {
        num / x.sin()
    }
}

/// SU(2) heat kernel from the method of images on the unit 3-sphere:
/// `e^t sqrt(π) / (4 t^{3/2} sin ϑ) Σ_p (ϑ-2πp) e^{-(ϑ-2πp)²/(4t)}`,
/// regrouped in symmetric pairs so that ϑ near 0 or π loses no precision.
fn su2_images(t: f64, q: &Quaternion) -> f64 {
    let theta = q.class_angle();
    let (center, sign) = if theta <= PI / 2.0 { (0.0, 1.0) } else { (PI, -1.0) };
    let delta = theta - center;
    let gauss = |x: f64| (-x * x / (4.0 * t)).exp();
    let mut f = 0.0;
    if center == 0.0 {
        f += gauss(delta) * over_sin(delta, delta, 1.0);
    }
    let mut s = if center == 0.0 { TAU } else { PI };
    loop {
        let a_plus = gauss(delta + s);
        let a_minus = gauss(delta - s);
        // a_plus - a_minus = a_minus * expm1(-δs/t), formed without cancellation
        let x = -delta * s / t;
        let diff = if x.abs() < 1.0 {
            over_sin(a_minus * x.exp_m1(), delta, -a_minus * s / t)
        } else {
            (a_plus - a_minus) / delta.sin()
        };
        let term = over_sin(delta, delta, 1.0) * (a_plus + a_minus) + s * diff;
        f += term;
        if a_minus < 1e-300 || (term.abs() <= 1e-18 * f.abs() && s > 4.0 * PI) {
            break;
        }
        s += TAU;
    }
    sign * f * t.exp() * PI.sqrt() / (4.0 * t.powf(1.5))
}

/// Heat kernel evaluated through its dual (image) representation; accurate in
/// relative terms even where `h_t` is exponentially small.
pub fn heat_kernel_images(group: GroupModel, t: f64, g: &GroupPoint) -> Result<f64> {
    check_t(t)?;
    group.validate()?;
    match (group, g) {
        (GroupModel::Torus(d), GroupPoint::Torus(p)) if p.dim() == d => {
            Ok(p.angles().iter().map(|&a| theta_inversion_rhs(t, a)).product())
        }
        (GroupModel::Su2, GroupPoint::Su2(q)) => Ok(su2_images(t, q)),
        (GroupModel::So3, GroupPoint::Su2(q)) => {
            let neg = Quaternion::new(-q.w, -q.x, -q.y, -q.z);
            Ok(0.5 * (su2_images(t, q) + su2_images(t, &neg)))
        }
        _ => Err(Error::GroupMismatch {
            irrep: group.to_string(),
            group: format!("{g:?}"),
        }),
    }
}

/// `Σ_π e^{-tκ_π} χ_π(a) conj(χ_π(b))`, equal to
/// `∫ h_t(a g b^{-1} g^{-1}) dm(g)`.
pub fn conjugation_average(group: GroupModel, t: f64, a: &GroupPoint, b: &GroupPoint, tol: f64) -> Result<f64> {
    check_t(t)?;
    check_tol(tol)?;
    let k_max = truncation_kappa(t, group.dim(), tol);
    let irreps = super::irrep_enumerate(group, k_max)?;
    let mut s = Complex64::new(0.0, 0.0);
    let mut abs_total = 0.0;
    for pi in &irreps {
        let term = pi.character(a)? * pi.character(b)?.conj() * (-t * pi.kappa).exp();
        s += term;
        abs_total += term.norm();
    }
    real_part_checked(s, abs_total, tol, "conjugation average")
}

/// The same average computed by Haar quadrature of the heat kernel.
pub fn conjugation_average_quadrature(
    group: GroupModel,
    t: f64,
    a: &GroupPoint,
    b: &GroupPoint,
    resolution: usize,
) -> Result<f64> {
    let rule = super::haar::haar_quadrature(group, resolution)?;
    let b_inv = b.inverse();
    let mut s = 0.0;
    for (g, w) in &rule {
        let x = a.mul(g).mul(&b_inv).mul(&g.inverse());
        s += w * heat_kernel_images(group, t, &x)?;
    }
    Ok(s)
}

/// `Σ_π e^{-tκ_π} κ_π / dim(π)²`.
pub fn beta_sum(group: GroupModel, t: f64, tol: f64) -> Result<f64> {
    check_t(t)?;
    check_tol(tol)?;
    let k_max = truncation_kappa(t, group.dim(), tol);
    Ok(super::irrep_enumerate(group, k_max)?
        .iter()
        .map(|p: &IrrepInfo| (-t * p.kappa).exp() * p.kappa / (p.dim * p.dim) as f64)
        .sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaFit {
    /// Exponent of the model `S(t) = A t^{-β} + B`.
    pub beta: f64,
    pub prefactor: f64,
    pub offset: f64,
    /// `-d log S / d log t` from a straight-line fit, for comparison.
    pub naive_slope: f64,
    pub t_grid: Vec<f64>,
    pub sums: Vec<f64>,
}

fn projected_fit(ts: &[f64], ss: &[f64], beta: f64) -> (f64, f64, f64) {
    // weighted least squares for (A, B) with weights 1/S
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &s) in ts.iter().zip(ss) {
        let w = 1.0 / (s * s);
        let x = t.powf(-beta);
        s11 += w * x * x;
        s12 += w * x;
        s22 += w;
        r1 += w * x * s;
        r2 += w * s;
    }
    let det = s11 * s22 - s12 * s12;
    let a = (r1 * s22 - r2 * s12) / det;
    let b = (s11 * r2 - s12 * r1) / det;
    let res = ts
        .iter()
        .zip(ss)
        .map(|(&t, &s)| ((a * t.powf(-beta) + b - s) / s).powi(2))
        .sum();
    (res, a, b)
}

/// Fit `S(t) = A t^{-β} + B` to precomputed sums by variable projection.
pub fn fit_power_law_with_offset(ts: &[f64], ss: &[f64]) -> Result<BetaFit> {
    if ts.len() != ss.len() {
        return Err(Error::InvalidInput("t grid and sums differ in length".into()));
    }
    let mut distinct: Vec<f64> = ts.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least three distinct t values, got {}",
            distinct.len()
        )));
    }
    if ts.iter().chain(ss).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("t values and sums must be positive".into()));
    }
    let (lo, hi, step) = (0.01, 6.0, 0.005);
    let mut best = (f64::INFINITY, lo);
    let mut b = lo;
    while b <= hi {
        let r = projected_fit(ts, ss, b).0;
        if r < best.0 {
            best = (r, b);
        }
        b += step;
    }
    // golden-section refinement
    let (mut x0, mut x1) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = x1 - g * (x1 - x0);
        let d = x0 + g * (x1 - x0);
        if projected_fit(ts, ss, c).0 < projected_fit(ts, ss, d).0 {
            x1 = d;
        } else {
            x0 = c;
        }
    }
    let beta = 0.5 * (x0 + x1);
    let (_, prefactor, offset) = projected_fit(ts, ss, beta);
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ss.iter().map(|s| s.ln()).collect();
    let (_, slope) = linear_fit(&lx, &ly)?;
    Ok(BetaFit {
        beta,
        prefactor,
        offset,
        naive_slope: -slope,
        t_grid: ts.to_vec(),
        sums: ss.to_vec(),
    })
}

/// Fit the small-`t` growth exponent of [`beta_sum`] on a grid of times.
pub fn beta_exponent_fit(group: GroupModel, t_grid: &[f64], tol: f64) -> Result<BetaFit> {
    if let Some(bad) = t_grid.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::InvalidInput(format!("t values must be positive, got {bad}")));
    }
    let sums = t_grid
        .iter()
        .map(|&t| beta_sum(group, t, tol))
        .collect::<Result<Vec<_>>>()?;
    fit_power_law_with_offset(t_grid, &sums)
}

/// Largest `c` with `h_t(g) ≥ c t^{-d/2} e^{-dist(g,e)²/(4t)}` over the samples.
pub fn gaussian_lower_constant(group: GroupModel, t_grid: &[f64], points: &[GroupPoint]) -> Result<f64> {
    let d = group.dim() as f64;
    let mut c = f64::INFINITY;
    for &t in t_grid {
        for g in points {
            let h = heat_kernel_images(group, t, g)?;
            let r = group.distance_to_identity(g);
            c = c.min(h * t.powf(d / 2.0) * (r * r / (4.0 * t)).exp());
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn su2_at(theta: f64) -> GroupPoint {
        GroupPoint::Su2(Quaternion::exp([0.2, -0.5, 0.8], theta))
    }

    #[test]
    fn truncation_bound_holds() {
        for &t in &[1e-3, 0.05, 1.0] {
            let k = truncation_kappa(t, 3, 1e-14);
            assert!((-t * k).exp() * k.powf(2.5) <= 1.01e-14);
        }
    }

    #[test]
    fn circle_theta_inversion() {
        for &t in &[0.05, 0.3, 1.0] {
            for &th in &[0.0, 0.4, 2.0, PI] {
                let g = GroupPoint::torus(&[th]).unwrap();
                let lhs = heat_kernel(GroupModel::Torus(1), t, &g, 1e-14).unwrap();
                assert!((lhs - theta_inversion_rhs(t, th)).abs() < 1e-10, "t={t} θ={th}");
            }
        }
    }

    #[test]
    fn su2_images_match_characters() {
        for &t in &[0.01, 0.1, 0.5, 2.0] {
            for k in 0..=16 {
                let th = PI * k as f64 / 16.0;
                let g = su2_at(th);
                let a = heat_kernel(GroupModel::Su2, t, &g, 1e-14).unwrap();
                let b = heat_kernel_images(GroupModel::Su2, t, &g).unwrap();
                assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "t={t} θ={th}: {a} vs {b}");
                let a3 = heat_kernel(GroupModel::So3, t, &g, 1e-14).unwrap();
                let b3 = heat_kernel_images(GroupModel::So3, t, &g).unwrap();
                assert!((a3 - b3).abs() < 1e-9 * a3.abs().max(1.0));
            }
        }
    }

    #[test]
    fn images_are_positive_near_antipode() {
        for &t in &[0.05, 0.1] {
            for th in [PI - 1e-3, PI - 1e-8, PI] {
                assert!(heat_kernel_images(GroupModel::Su2, t, &su2_at(th)).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn conjugation_average_two_routes() {
        let a = su2_at(0.7);
        let b = GroupPoint::Su2(Quaternion::exp([1.0, 0.0, 0.3], 1.9));
        let t = 0.3;
        let series = conjugation_average(GroupModel::Su2, t, &a, &b, 1e-14).unwrap();
        let quad = conjugation_average_quadrature(GroupModel::Su2, t, &a, &b, 24).unwrap();
        assert!((series - quad).abs() < 1e-8, "{series} vs {quad}");
    }

    #[test]
    fn beta_fit_recovers_exact_power_law() {
        let ts = [0.1, 0.05, 0.02, 0.01];
        let ss: Vec<f64> = ts.iter().map(|t: &f64| 2.0 * t.powf(-1.3) + 0.7).collect();
        let fit = fit_power_law_with_offset(&ts, &ss).unwrap();
        assert!((fit.beta - 1.3).abs() < 1e-6);
        assert!((fit.offset - 0.7).abs() < 1e-4);
        assert!(fit_power_law_with_offset(&[0.1, 0.1, 0.1], &[1.0, 1.0, 1.0]).is_err());
    }
}
