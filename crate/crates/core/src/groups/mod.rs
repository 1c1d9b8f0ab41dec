//! Compact groups used as fibres of skew products: tori `T^d`, SU(2) and SO(3).
//!
//! SO(3) points are carried as SU(2) quaternions (double cover); only its
//! irreps differ.

pub mod haar;
pub mod heat;
pub mod su2;

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
pub use su2::Quaternion;

/// Largest torus dimension supported.
pub const MAX_TORUS_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupModel {
    Torus(usize),
    Su2,
    So3,
}

impl GroupModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GroupModel::Torus(d) if d == 0 || d > MAX_TORUS_DIM => Err(Error::InvalidInput(format!(
                "torus dimension must lie in 1..={MAX_TORUS_DIM}, got {d}"
            ))),
            _ => Ok(()),
        }
    }

    /// Real dimension of the manifold.
    pub fn dim(&self) -> usize {
        match *self {
            GroupModel::Torus(d) => d,
            GroupModel::Su2 | GroupModel::So3 => 3,
        }
    }

    pub fn rank(&self) -> usize {
        match *self {
            GroupModel::Torus(d) => d,
            GroupModel::Su2 | GroupModel::So3 => 1,
        }
    }

    pub fn identity(&self) -> GroupPoint {
        match *self {
            GroupModel::Torus(d) => GroupPoint::Torus(TorusPoint::zero(d)),
            GroupModel::Su2 | GroupModel::So3 => GroupPoint::Su2(Quaternion::IDENTITY),
        }
    }

    pub fn is_abelian(&self) -> bool {
        matches!(self, GroupModel::Torus(_))
    }

    pub fn contains(&self, g: &GroupPoint) -> bool {
        match (self, g) {
            (GroupModel::Torus(d), GroupPoint::Torus(p)) => *d == p.dim,
            (GroupModel::Su2 | GroupModel::So3, GroupPoint::Su2(_)) => true,
            _ => false,
        }
    }

    /// Riemannian distance to the identity for the bi-invariant metric whose
    /// Laplacian has eigenvalues `κ_π`: flat `R^d/2πZ^d` for tori and the unit
    /// 3-sphere for SU(2).
    pub fn distance_to_identity(&self, g: &GroupPoint) -> f64 {
        match g {
            GroupPoint::Torus(p) => p
                .angles()
                .iter()
                .map(|a| {
                    let r = a.rem_euclid(TAU);
                    r.min(TAU - r).powi(2)
                })
                .sum::<f64>()
                .sqrt(),
            GroupPoint::Su2(q) => match self {
                GroupModel::So3 => {
                    let th = q.class_angle();
                    th.min(PI - th)
                }
                _ => q.class_angle(),
            },
        }
    }
}

impl fmt::Display for GroupModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupModel::Torus(d) => write!(f, "T^{d}"),
            GroupModel::Su2 => write!(f, "SU(2)"),
            GroupModel::So3 => write!(f, "SO(3)"),
        }
    }
}

/// A point of `T^d`, angles in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    dim: usize,
    angles: [f64; MAX_TORUS_DIM],
}

impl TorusPoint {
    pub fn zero(dim: usize) -> Self {
        TorusPoint {
            dim,
            angles: [0.0; MAX_TORUS_DIM],
        }
    }

    pub fn new(angles: &[f64]) -> Result<Self> {
        if angles.is_empty() || angles.len() > MAX_TORUS_DIM {
            return Err(Error::InvalidInput(format!("torus point with {} angles", angles.len())));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("non-finite torus angle".into()));
        }
        let mut p = TorusPoint::zero(angles.len());
        for (slot, a) in p.angles.iter_mut().zip(angles) {
            *slot = a.rem_euclid(TAU);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles[..self.dim]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupPoint {
    Torus(TorusPoint),
    Su2(Quaternion),
}

impl GroupPoint {
    pub fn torus(angles: &[f64]) -> Result<Self> {
        Ok(GroupPoint::Torus(TorusPoint::new(angles)?))
    }

    pub fn su2(q: Quaternion) -> Result<Self> {
        let n = q.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("quaternion norm {n} is not 1")));
        }
        Ok(GroupPoint::Su2(q.normalized()))
    }

    pub fn mul(&self, other: &GroupPoint) -> GroupPoint {
        match (self, other) {
            (GroupPoint::Torus(a), GroupPoint::Torus(b)) => {
                assert_eq!(a.dim, b.dim, "torus dimension mismatch");
                let mut out = TorusPoint::zero(a.dim);
                for i in 0..a.dim {
                    out.angles[i] = (a.angles[i] + b.angles[i]).rem_euclid(TAU);
                }
                GroupPoint::Torus(out)
            }
            (GroupPoint::Su2(a), GroupPoint::Su2(b)) => GroupPoint::Su2(a.mul(b)),
            _ => panic!("cannot multiply points of different groups"),
        }
    }

    pub fn inverse(&self) -> GroupPoint {
        match self {
            GroupPoint::Torus(a) => {
                let mut out = *a;
                for x in out.angles[..a.dim].iter_mut() {
                    *x = (-*x).rem_euclid(TAU);
                }
                GroupPoint::Torus(out)
            }
            GroupPoint::Su2(q) => GroupPoint::Su2(q.inverse()),
        }
    }

    /// Loose equality modulo `2π` on tori.
    pub fn approx_eq(&self, other: &GroupPoint, tol: f64) -> bool {
        match (self, other) {
            (GroupPoint::Torus(a), GroupPoint::Torus(b)) => {
                a.dim == b.dim
                    && a.angles().iter().zip(b.angles()).all(|(x, y)| {
                        let r = (x - y).rem_euclid(TAU);
                        r.min(TAU - r) <= tol
                    })
            }
            (GroupPoint::Su2(a), GroupPoint::Su2(b)) => {
                (a.w - b.w).abs() <= tol
                    && (a.x - b.x).abs() <= tol
                    && (a.y - b.y).abs() <= tol
                    && (a.z - b.z).abs() <= tol
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IrrepId {
    /// Character `θ ↦ e^{i q·θ}`.
    Torus(Vec<i64>),
    /// Spin `m/2`, dimension `m + 1`.
    Su2(u32),
}

impl fmt::Display for IrrepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrrepId::Torus(q) => {
                let parts: Vec<String> = q.iter().map(|v| v.to_string()).collect();
                write!(f, "q=({})", parts.join(","))
            }
            IrrepId::Su2(m) => write!(f, "m={m}"),
        }
    }
}

/// An irreducible unitary representation with its Casimir eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrepInfo {
    pub group: GroupModel,
    pub id: IrrepId,
    pub dim: usize,
    pub kappa: f64,
}

impl IrrepInfo {
    pub fn new(group: GroupModel, id: IrrepId) -> Result<Self> {
        group.validate()?;
        match (&group, &id) {
            (GroupModel::Torus(d), IrrepId::Torus(q)) if q.len() == *d => {
                let kappa = q.iter().map(|v| (v * v) as f64).sum();
                Ok(IrrepInfo { group, id, dim: 1, kappa })
            }
            (GroupModel::Su2, IrrepId::Su2(m)) => Ok(Self::su2_unchecked(group, *m)),
            (GroupModel::So3, IrrepId::Su2(m)) if m % 2 == 0 => Ok(Self::su2_unchecked(group, *m)),
            _ => Err(Error::GroupMismatch {
                irrep: id.to_string(),
                group: group.to_string(),
            }),
        }
    }

    pub fn torus(q: &[i64]) -> Self {
        IrrepInfo::new(GroupModel::Torus(q.len()), IrrepId::Torus(q.to_vec())).expect("valid torus irrep")
    }

    pub fn su2(m: u32) -> Self {
        Self::su2_unchecked(GroupModel::Su2, m)
    }

    fn su2_unchecked(group: GroupModel, m: u32) -> Self {
        let mf = m as f64;
        IrrepInfo {
            group,
            id: IrrepId::Su2(m),
            dim: m as usize + 1,
            kappa: mf * (mf + 2.0),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.kappa == 0.0
    }

    fn check_point(&self, g: &GroupPoint) -> Result<()> {
        if self.group.contains(g) {
            Ok(())
        } else {
            Err(Error::GroupMismatch {
                irrep: format!("{} of {}", self.id, self.group),
                group: format!("{g:?}"),
            })
        }
    }

    pub fn character(&self, g: &GroupPoint) -> Result<Complex64> {
        self.check_point(g)?;
        Ok(match (&self.id, g) {
            (IrrepId::Torus(q), GroupPoint::Torus(p)) => {
                let phase: f64 = q.iter().zip(p.angles()).map(|(qi, a)| *qi as f64 * a).sum();
                Complex64::from_polar(1.0, phase)
            }
            (IrrepId::Su2(m), GroupPoint::Su2(h)) => Complex64::new(su2::character(*m, h.w), 0.0),
            _ => unreachable!(),
        })
    }

    /// Unitary matrix `π(g)`.
    pub fn matrix(&self, g: &GroupPoint) -> Result<CMatrix> {
        self.check_point(g)?;
        Ok(match (&self.id, g) {
            (IrrepId::Su2(m), GroupPoint::Su2(h)) => su2::irrep_matrix(*m, h),
            _ => CMatrix::from_element(1, 1, self.character(g)?),
        })
    }
}

/// All irreps with `κ ≤ kappa_max`, sorted by `κ` then by id.
pub fn irrep_enumerate(group: GroupModel, kappa_max: f64) -> Result<Vec<IrrepInfo>> {
    group.validate()?;
    if !(kappa_max >= 0.0) || !kappa_max.is_finite() {
        return Err(Error::InvalidInput(format!("kappa_max must be finite and >= 0, got {kappa_max}")));
    }
    let mut out = Vec::new();
    match group {
        GroupModel::Torus(d) => {
            let r = kappa_max.sqrt().floor() as i64;
            let side = (2 * r + 1) as usize;
            let total = side.checked_pow(d as u32).ok_or_else(|| {
                Error::CapExceeded {
                    requested: u128::MAX,
                    cap: u32::MAX as u128,
                }
            })?;
            let mut q = vec![0i64; d];
            for idx in 0..total {
                let mut rem = idx;
                for slot in q.iter_mut() {
                    *slot = (rem % side) as i64 - r;
                    rem /= side;
                }
                let k: i64 = q.iter().map(|v| v * v).sum();
                if (k as f64) <= kappa_max {
                    out.push(IrrepInfo::torus(&q));
                }
            }
        }
        GroupModel::Su2 | GroupModel::So3 => {
            let step = if group == GroupModel::So3 { 2 } else { 1 };
            let mut m = 0u32;
            while (m as f64) * (m as f64 + 2.0) <= kappa_max {
                out.push(IrrepInfo::su2_unchecked(group, m));
                m += step;
            }
        }
    }
    out.sort_by(|a, b| a.kappa.total_cmp(&b.kappa).then_with(|| a.id.cmp(&b.id)));
    Ok(out)
}

/// `N(R) = Σ_{κ_π ≤ R} dim(π)²`.
pub fn weyl_counting(group: GroupModel, r: f64) -> Result<u64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidInput(format!("R must be >= 0, got {r}")));
    }
    Ok(irrep_enumerate(group, r)?
        .iter()
        .map(|p| (p.dim * p.dim) as u64)
        .sum())
}

/// Exponent `β` in `Σ_π e^{-tκ_π} κ_π / dim(π)² ≍ t^{-β}` as `t → 0`:
/// the generic bound `1 + d/2`, or the sharp value for rank-one
/// non-abelian groups when `improved` is set.
pub fn beta_constant(group: GroupModel, improved: bool) -> Result<f64> {
    group.validate()?;
    match (group, improved) {
        (_, false) => Ok(1.0 + group.dim() as f64 / 2.0),
        (GroupModel::Su2 | GroupModel::So3, true) => Ok(0.5),
        (GroupModel::Torus(_), true) => Err(Error::Unsupported(format!(
            "no improved exponent for {group}; all its irreps are one-dimensional"
        ))),
    }
}

/// `γ = β / rank`.
pub fn gamma_constant(group: GroupModel, improved: bool) -> Result<f64> {
    Ok(beta_constant(group, improved)? / group.rank() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn su2_enumeration_up_to_24() {
        let irreps = irrep_enumerate(GroupModel::Su2, 24.0).unwrap();
        let ms: Vec<_> = irreps.iter().map(|p| p.id.clone()).collect();
        assert_eq!(ms, (0..=4).map(IrrepId::Su2).collect::<Vec<_>>());
        let kappas: Vec<f64> = irreps.iter().map(|p| p.kappa).collect();
        assert_eq!(kappas, vec![0.0, 3.0, 8.0, 15.0, 24.0]);
        let dims: Vec<usize> = irreps.iter().map(|p| p.dim).collect();
        assert_eq!(dims, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn so3_keeps_even_spins() {
        let irreps = irrep_enumerate(GroupModel::So3, 24.0).unwrap();
        let dims: Vec<usize> = irreps.iter().map(|p| p.dim).collect();
        assert_eq!(dims, vec![1, 3, 5]);
        assert!(IrrepInfo::new(GroupModel::So3, IrrepId::Su2(1)).is_err());
    }

    #[test]
    fn torus_enumeration_counts_lattice_points() {
        let irreps = irrep_enumerate(GroupModel::Torus(2), 2.0).unwrap();
        assert_eq!(irreps.len(), 9);
        assert_eq!(irreps[0].id, IrrepId::Torus(vec![0, 0]));
        let circle = irrep_enumerate(GroupModel::Torus(1), 9.0).unwrap();
        assert_eq!(circle.len(), 7);
        assert!(irrep_enumerate(GroupModel::Torus(0), 1.0).is_err());
    }

    #[test]
    fn weyl_counts() {
        assert_eq!(weyl_counting(GroupModel::Su2, 0.0).unwrap(), 1);
        assert_eq!(weyl_counting(GroupModel::Su2, 10.0).unwrap(), 14);
        assert_eq!(weyl_counting(GroupModel::Su2, 24.0).unwrap(), 55);
        assert_eq!(weyl_counting(GroupModel::Torus(1), 4.0).unwrap(), 5);
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_constant(GroupModel::Torus(1), false).unwrap(), 1.5);
        assert_eq!(gamma_constant(GroupModel::Torus(2), false).unwrap(), 1.0);
        assert_eq!(gamma_constant(GroupModel::Su2, false).unwrap(), 2.5);
        assert_eq!(gamma_constant(GroupModel::Su2, true).unwrap(), 0.5);
        assert!(gamma_constant(GroupModel::Torus(1), true).is_err());
    }

    #[test]
    fn characters_and_mismatch() {
        let p = GroupPoint::torus(&[0.5, 1.0]).unwrap();
        let chi = IrrepInfo::torus(&[2, -1]).character(&p).unwrap();
        assert!((chi - Complex64::from_polar(1.0, 0.0)).norm() < 1e-15);
        let q = GroupPoint::Su2(Quaternion::IDENTITY);
        assert!(IrrepInfo::torus(&[1]).character(&q).is_err());
        assert_eq!(IrrepInfo::su2(3).character(&q).unwrap().re, 4.0);
    }

    #[test]
    fn torus_group_law() {
        let a = GroupPoint::torus(&[6.0, 1.0]).unwrap();
        let b = GroupPoint::torus(&[1.0, -2.0]).unwrap();
        let e = GroupModel::Torus(2).identity();
        assert!(a.mul(&a.inverse()).approx_eq(&e, 1e-14));
        assert!(a.mul(&b).approx_eq(&b.mul(&a), 1e-14));
        let dist = GroupModel::Torus(1).distance_to_identity(&GroupPoint::torus(&[6.0]).unwrap());
        assert!((dist - (TAU - 6.0)).abs() < 1e-14);
    }
}
