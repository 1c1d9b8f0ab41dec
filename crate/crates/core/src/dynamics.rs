//! Analytic full-branch expanding maps of [0,1] and their periodic orbits.
//!
//! Periodic points are indexed by symbolic words: the point of the word
//! `(a_0, …, a_{n-1})` is the unique fixed point of
//! `γ_{a_0} ∘ … ∘ γ_{a_{n-1}}`, so its forward orbit visits the branches
//! `a_0, a_1, …` in that order. Letters are 0-based branch indices.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::GroupPoint;
use crate::twisted::SkewFunction;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default cap on the number of words visited by orbit enumeration.
pub const DEFAULT_ORBIT_CAP: u128 = 1 << 22;

const FIXED_POINT_STEP: f64 = 1e-15;
const FIXED_POINT_MAX_ITER: usize = 10_000;

/// One full branch `T_i : [a_i, b_i] → [0,1]` with its analytic inverse.
#[derive(Clone)]
pub struct BranchSpec {
    pub index: usize,
    pub interval: (f64, f64),
    pub forward: RealFn,
    pub derivative: RealFn,
    pub inverse: RealFn,
    pub expansion_min: f64,
}

impl fmt::Debug for BranchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BranchSpec")
            .field("index", &self.index)
            .field("interval", &self.interval)
            .field("expansion_min", &self.expansion_min)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub struct ExpandingMap {
    name: String,
    branches: Vec<BranchSpec>,
}

impl ExpandingMap {
    /// Validates the cover, the inverse branches and the expansion bound on a sample grid.
    pub fn new(name: impl Into<String>, branches: Vec<BranchSpec>) -> Result<Self> {
        let name = name.into();
        let k = branches.len();
        if k < 2 {
            return Err(Error::InvalidMap(format!("{name}: need at least two branches, got {k}")));
        }
        const TOL: f64 = 1e-12;
        if branches[0].interval.0.abs() > TOL || (branches[k - 1].interval.1 - 1.0).abs() > TOL {
            return Err(Error::InvalidMap(format!("{name}: intervals do not cover [0,1]")));
        }
        for (i, b) in branches.iter().enumerate() {
            if b.index != i {
                return Err(Error::InvalidMap(format!("{name}: branch {i} carries index {}", b.index)));
            }
            let (a, c) = b.interval;
            if !(a < c) {
                return Err(Error::InvalidMap(format!("{name}: empty interval for branch {i}")));
            }
            if i + 1 < k && (c - branches[i + 1].interval.0).abs() > TOL {
                return Err(Error::InvalidMap(format!(
                    "{name}: branches {i} and {} leave a gap or overlap",
                    i + 1
                )));
            }
            if !(b.expansion_min > 1.0) {
                return Err(Error::InvalidMap(format!("{name}: branch {i} is not expanding")));
            }
            for s in 0..=32 {
                let y = s as f64 / 32.0;
                let x = (b.inverse)(y);
                if !(x >= a - TOL && x <= c + TOL) {
                    return Err(Error::InvalidMap(format!(
                        "{name}: inverse branch {i} sends {y} outside its interval"
                    )));
                }
                if ((b.forward)(x) - y).abs() > 1e-11 {
                    return Err(Error::InvalidMap(format!(
                        "{name}: forward(inverse({y})) != {y} on branch {i}"
                    )));
                }
                let xs = a + (c - a) * y;
                if (b.derivative)(xs).abs() < b.expansion_min - TOL {
                    return Err(Error::InvalidMap(format!(
                        "{name}: |T'| drops below the declared expansion on branch {i}"
                    )));
                }
            }
            let lo = (b.forward)(a);
            let hi = (b.forward)(c);
            let onto = (lo.abs() < 1e-11 && (hi - 1.0).abs() < 1e-11)
                || (hi.abs() < 1e-11 && (lo - 1.0).abs() < 1e-11);
            if !onto {
                return Err(Error::InvalidMap(format!("{name}: branch {i} is not onto [0,1]")));
            }
        }
        Ok(ExpandingMap { name, branches })
    }

    /// Linear full-branch map `x ↦ kx mod 1` with `k ≥ 2` branches.
    pub fn linear(k: usize) -> Result<Self> {
        let kf = k as f64;
        let branches = (0..k)
            .map(|i| {
                let shift = i as f64;
                BranchSpec {
                    index: i,
                    interval: (shift / kf, (shift + 1.0) / kf),
                    forward: Arc::new(move |x| kf * x - shift),
                    derivative: Arc::new(move |_| kf),
                    inverse: Arc::new(move |y| (y + shift) / kf),
                    expansion_min: kf,
                }
            })
            .collect();
        let name = match k {
            2 => "doubling".to_string(),
            3 => "triple".to_string(),
            _ => format!("linear{k}"),
        };
        ExpandingMap::new(name, branches)
    }

    pub fn doubling() -> Self {
        Self::linear(2).expect("doubling map is valid")
    }

    pub fn triple() -> Self {
        Self::linear(3).expect("triple map is valid")
    }

    /// `T(x) = 2x + ε sin(2πx) mod 1`, valid for `0 ≤ ε < 1/(2π)`.
    /// Inverse branches are solved by Newton seeded from the linear inverse.
    pub fn perturbed_doubling(eps: f64) -> Result<Self> {
        if !(0.0..1.0 / (2.0 * PI)).contains(&eps) {
            return Err(Error::InvalidMap(format!(
                "perturbed doubling needs 0 <= eps < 1/(2π), got {eps}"
            )));
        }
        let branches = (0..2)
            .map(|i| {
                let shift = i as f64;
                let fwd = move |x: f64| 2.0 * x + eps * (2.0 * PI * x).sin() - shift;
                let der = move |x: f64| 2.0 + 2.0 * PI * eps * (2.0 * PI * x).cos();
                let inv = move |y: f64| {
                    let mut x = (y + shift) / 2.0;
                    for _ in 0..60 {
                        let dx = (fwd(x) - y) / der(x);
                        x -= dx;
                        if dx.abs() < 1e-17 {
                            break;
                        }
                    }
                    x.clamp(shift / 2.0, (shift + 1.0) / 2.0)
                };
                BranchSpec {
                    index: i,
                    interval: (shift / 2.0, (shift + 1.0) / 2.0),
                    forward: Arc::new(fwd),
                    derivative: Arc::new(der),
                    inverse: Arc::new(inv),
                    expansion_min: 2.0 - 2.0 * PI * eps,
                }
            })
            .collect();
        ExpandingMap::new(format!("perturbed_doubling(eps={eps})"), branches)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of branches k.
    pub fn k(&self) -> usize {
        self.branches.len()
    }

    pub fn branches(&self) -> &[BranchSpec] {
        &self.branches
    }

    pub fn branch(&self, i: usize) -> &BranchSpec {
        &self.branches[i]
    }

    pub fn expansion_min(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.expansion_min)
            .fold(f64::INFINITY, f64::min)
    }

    /// Branch containing `x`; points shared by two intervals go to the lower index.
    pub fn branch_of(&self, x: f64) -> usize {
        self.branches
            .iter()
            .position(|b| x <= b.interval.1)
            .unwrap_or(self.branches.len() - 1)
    }

    pub fn apply(&self, x: f64) -> f64 {
        (self.branches[self.branch_of(x)].forward)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.branches[self.branch_of(x)].derivative)(x)
    }

    /// `γ_word = γ_{a_0} ∘ … ∘ γ_{a_{n-1}}` applied to `y`.
    pub fn inverse_word(&self, word: &SymbolWord, y: f64) -> f64 {
        word.letters
            .iter()
            .rev()
            .fold(y, |z, &a| (self.branches[a].inverse)(z))
    }

    /// Forward iteration along the word's branches; returns `(T^n x, (T^n)'(x))`.
    pub fn forward_word(&self, word: &SymbolWord, x: f64) -> (f64, f64) {
        word.letters.iter().fold((x, 1.0), |(z, d), &a| {
            let b = &self.branches[a];
            ((b.forward)(z), d * (b.derivative)(z))
        })
    }
}

/// A word over the branch alphabet `{0, …, k-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolWord {
    letters: Vec<usize>,
}

impl SymbolWord {
    pub fn new(letters: Vec<usize>, k: usize) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidInput("symbol words must be nonempty".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&a| a >= k) {
            return Err(Error::InvalidInput(format!("letter {bad} outside alphabet of size {k}")));
        }
        Ok(SymbolWord { letters })
    }

    /// The `index`-th word of length `n` in lexicographic order.
    pub fn from_index(mut index: u128, n: usize, k: usize) -> Self {
        let mut letters = vec![0; n];
        for slot in letters.iter_mut().rev() {
            *slot = (index % k as u128) as usize;
            index /= k as u128;
        }
        SymbolWord { letters }
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Cyclic left rotation by `s` letters.
    pub fn rotated(&self, s: usize) -> Self {
        let mut letters = self.letters.clone();
        let n = letters.len();
        letters.rotate_left(s % n);
        SymbolWord { letters }
    }
}

/// Periodic point of period `n = word.len()` with its full orbit.
#[derive(Debug, Clone)]
pub struct PeriodicPoint {
    pub word: SymbolWord,
    pub x: f64,
    /// `(T^n)'(x)`.
    pub multiplier: f64,
    /// `x, Tx, …, T^{n-1}x`.
    pub orbit: Vec<f64>,
}

impl PeriodicPoint {
    pub fn period(&self) -> usize {
        self.word.len()
    }
}

/// Fixed point of the contraction `γ_word`, polished by one Newton step on `T^n(x) − x`.
pub fn periodic_point_of_word(map: &ExpandingMap, word: &SymbolWord) -> Result<PeriodicPoint> {
    if word.letters.iter().any(|&a| a >= map.k()) {
        return Err(Error::InvalidInput("word uses a letter outside the map's alphabet".into()));
    }
    let mut x = 0.5;
    let mut converged = false;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let nx = map.inverse_word(word, x);
        let step = (nx - x).abs();
        x = nx;
        if step < FIXED_POINT_STEP {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            word: word.letters.clone(),
            iterations: FIXED_POINT_MAX_ITER,
        });
    }
    let (tx, d) = map.forward_word(word, x);
    if (d - 1.0).abs() > 0.0 {
        let polished = x - (tx - x) / (d - 1.0);
        // keep the polish only if it does not leave the cylinder or worsen the residual
        let before = (map.inverse_word(word, x) - x).abs();
        let after = (map.inverse_word(word, polished) - polished).abs();
        if polished.is_finite() && after <= before {
            x = polished;
        }
    }
    let residual = (map.inverse_word(word, x) - x).abs();
    if residual > 1e-13 {
        return Err(Error::NoConvergence {
            word: word.letters.clone(),
            iterations: FIXED_POINT_MAX_ITER,
        });
    }

    let n = word.len();
    let mut orbit = vec![0.0; n];
    orbit[0] = x;
    let mut next = x;
    for j in (1..n).rev() {
        next = (map.branches[word.letters[j]].inverse)(next);
        orbit[j] = next;
    }
    let multiplier = orbit
        .iter()
        .zip(&word.letters)
        .map(|(&xj, &a)| (map.branches[a].derivative)(xj))
        .product();
    Ok(PeriodicPoint {
        word: word.clone(),
        x,
        multiplier,
        orbit,
    })
}

/// Number of period-`n` words, or an error if it exceeds `cap`.
pub fn word_count(map: &ExpandingMap, n: usize, cap: u128) -> Result<u128> {
    let k = map.k() as u128;
    let mut count: u128 = 1;
    for _ in 0..n {
        count = count.checked_mul(k).unwrap_or(u128::MAX);
        if count > cap {
            return Err(Error::CapExceeded { requested: count, cap });
        }
    }
    Ok(count)
}

/// All `k^n` periodic points, lexicographic in the word. Coincident coordinates are not merged.
pub fn enumerate_periodic_points(map: &ExpandingMap, n: usize, cap: u128) -> Result<Vec<PeriodicPoint>> {
    if n == 0 {
        return Err(Error::InvalidInput("period must be at least 1".into()));
    }
    let count = word_count(map, n, cap)?;
    let k = map.k();
    (0..count)
        .into_par_iter()
        .map(|i| periodic_point_of_word(map, &SymbolWord::from_index(i, n, k)))
        .collect()
}

/// `Σ_{j<n} f(T^j x)` along the stored orbit.
pub fn birkhoff_sum(f: impl Fn(f64) -> f64, point: &PeriodicPoint) -> f64 {
    point.orbit.iter().map(|&x| f(x)).sum()
}

/// Ordered product `τ(x) τ(Tx) … τ(T^{n-1}x)`.
pub fn group_cocycle(tau: &SkewFunction, point: &PeriodicPoint) -> GroupPoint {
    let mut acc = tau.group().identity();
    for &x in &point.orbit {
        acc = acc.mul(&tau.eval(x));
    }
    acc
}

/// Fiber map of `T̂^n` along the orbit: `τ(T^{n-1}x) ⋯ τ(x)`.
pub fn skew_cocycle(tau: &SkewFunction, point: &PeriodicPoint) -> GroupPoint {
    let mut acc = tau.group().identity();
    for &x in &point.orbit {
        acc = tau.eval(x).mul(&acc);
    }
    acc
}

/// `e^{φ^{(n)}(x)} / (1 − ((T^n)'(x))^{-1})`.
pub fn orbit_weight(point: &PeriodicPoint, phi_birkhoff: f64) -> Result<f64> {
    if !(point.multiplier.abs() > 1.0) {
        return Err(Error::InvalidInput(format!(
            "multiplier {} is not expanding",
            point.multiplier
        )));
    }
    Ok(phi_birkhoff.exp() / (1.0 - 1.0 / point.multiplier))
}

/// `log Σ_i e^{a_i}` without overflow.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `(1/n) log Σ_{T^n x = x} e^{φ^{(n)}(x)}`.
pub fn pressure_from_orbits(
    map: &ExpandingMap,
    phi: impl Fn(f64) -> f64 + Sync,
    n: usize,
    cap: u128,
) -> Result<f64> {
    let points = enumerate_periodic_points(map, n, cap)?;
    let sums: Vec<f64> = points.iter().map(|p| birkhoff_sum(&phi, p)).collect();
    Ok(log_sum_exp(&sums) / n as f64)
}
