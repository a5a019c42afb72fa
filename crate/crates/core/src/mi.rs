//! Mutual information between units and the information-theoretic split of
//! training units into a generator subset `G` and a predictor subset `P`.
//!
//! MI is estimated with the first Kraskov-Stögbauer-Grassberger estimator:
//!
//! ```text
//! I(X;Y) ≈ ψ(k) + ψ(n) − ⟨ψ(n_x + 1) + ψ(n_y + 1)⟩
//! ```
//!
//! where `ε_i` is the max-norm distance from sample `i` to its k-th neighbour
//! in the joint space and `n_x(i)`, `n_y(i)` count marginal neighbours strictly
//! closer than `ε_i`. Neighbour search is exact brute force.

use crate::data::RawSeries;
use crate::math::digamma;
use crate::rng::{normal, seeded, shuffle};
use crate::{math, Error, Result};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

const JITTER_SEED: u64 = 0x6b73_675f_6a69_7474;
const JITTER_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MiEstimate {
    /// Nats. Not clamped at zero.
    pub value: f64,
    pub k: usize,
    pub n: usize,
}

/// `n` samples of dimension `dim`, row-major.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub data: &'a [f64],
    pub dim: usize,
}

impl<'a> Samples<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Self {
        Samples { data, dim }
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn has_ties(s: &Samples) -> bool {
    let n = s.len();
    let mut col = vec![0.0; n];
    for d in 0..s.dim {
        for i in 0..n {
            col[i] = s.data[i * s.dim + d];
        }
        col.sort_unstable_by(f64::total_cmp);
        if col.windows(2).any(|w| w[0] == w[1]) {
            return true;
        }
    }
    false
}

/// Add tiny seeded noise, scaled per feature by its standard deviation.
fn jittered(s: &Samples, seed: u64) -> Vec<f64> {
    let n = s.len();
    let mut out = s.data.to_vec();
    let mut rng = seeded(seed);
    for d in 0..s.dim {
        let mean = (0..n).map(|i| s.data[i * s.dim + d]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| { let e = s.data[i * s.dim + d] - mean; e * e }).sum::<f64>() / n as f64;
        let scale = if var > 0.0 { math::sqrt(var) } else { 1.0 };
        for i in 0..n {
            out[i * s.dim + d] += JITTER_SCALE * scale * normal(&mut rng);
        }
    }
    out
}

#[inline]
fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// KSG (variant 1) estimate of `I(X;Y)` with max-norm distances.
///
/// Inputs with exact ties in any coordinate get a deterministic jitter of
/// relative size 1e-10 before the neighbour search; tie-free inputs are used
/// as given.
pub fn ksg_mi(x: Samples, y: Samples, k: usize) -> Result<MiEstimate> {
    let n = x.len();
    if y.len() != n || x.data.len() != n * x.dim || y.data.len() != n * y.dim {
        return Err(Error::shape("ksg_mi", format!("{n} paired samples"), format!("{}", y.len())));
    }
    if k < 1 || n <= k {
        return Err(Error::TooFewSamples { n, k });
    }
    if x.data.iter().chain(y.data).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ksg_mi"));
    }
    let xs = if has_ties(&x) { jittered(&x, JITTER_SEED) } else { x.data.to_vec() };
    let ys = if has_ties(&y) {
        jittered(&y, JITTER_SEED ^ 1)
    } else {
        y.data.to_vec()
    };
    let (dx, dy) = (x.dim, y.dim);
    let mut dist_x = vec![0.0; n];
    let mut dist_y = vec![0.0; n];
    let mut joint = Vec::with_capacity(n);
    let mut acc = 0.0;
    for i in 0..n {
        let xi = &xs[i * dx..(i + 1) * dx];
        let yi = &ys[i * dy..(i + 1) * dy];
        joint.clear();
        for j in 0..n {
            dist_x[j] = max_norm(xi, &xs[j * dx..(j + 1) * dx]);
            dist_y[j] = max_norm(yi, &ys[j * dy..(j + 1) * dy]);
            if j != i {
                joint.push(dist_x[j].max(dist_y[j]));
            }
        }
        let (_, eps, _) = joint.select_nth_unstable_by(k - 1, f64::total_cmp);
        let eps = *eps;
        let mut nx = 0usize;
        let mut ny = 0usize;
        for j in 0..n {
            if j == i {
                continue;
            }
            nx += (dist_x[j] < eps) as usize;
            ny += (dist_y[j] < eps) as usize;
        }
        acc += digamma((nx + 1) as f64) + digamma((ny + 1) as f64);
    }
    let value = digamma(k as f64) + digamma(n as f64) - acc / n as f64;
    Ok(MiEstimate { value, k, n })
}

/// Score every unit by `J(P_i) = Σ_{j≠i} I(P_i; P_j)`.
///
/// All units are truncated to the shortest unit's length and paired by time
/// index; samples are the full K-dimensional observations. Summation runs in
/// sorted-id order, so the result is bitwise reproducible.
pub fn score_units(units: &[RawSeries], k: usize) -> Result<BTreeMap<String, f64>> {
    if units.len() < 2 {
        return Err(Error::TooFewUnits {
            needed: 2,
            got: units.len(),
        });
    }
    let mut order: Vec<&RawSeries> = units.iter().collect();
    order.sort_by(|a, b| a.unit_id.cmp(&b.unit_id));
    let common = order.iter().map(|s| s.len()).min().unwrap_or(0);
    let truncated: Vec<RawSeries> = order.iter().map(|s| s.truncated(common)).collect();
    let u = truncated.len();
    let mut pair = vec![0.0; u * u];
    for i in 0..u {
        for j in (i + 1)..u {
            let a = &truncated[i];
            let b = &truncated[j];
            let mi = ksg_mi(Samples::new(&a.values, a.k()), Samples::new(&b.values, b.k()), k)?.value;
            pair[i * u + j] = mi;
            pair[j * u + i] = mi;
        }
    }
    Ok((0..u)
        .map(|i| {
            let j_score = (0..u).filter(|&j| j != i).map(|j| pair[i * u + j]).sum::<f64>();
            (truncated[i].unit_id.clone(), j_score)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ItcPartition {
    /// Units in descending score order, cut into `γ` contiguous groups.
    pub groups: Vec<Vec<String>>,
    /// Units for training the generator.
    pub subset_g: Vec<String>,
    /// Units for training the predictor.
    pub subset_p: Vec<String>,
    pub scores: BTreeMap<String, f64>,
}

impl ItcPartition {
    pub fn side(&self, unit: &str) -> Option<char> {
        if self.subset_g.iter().any(|u| u == unit) {
            Some('G')
        } else if self.subset_p.iter().any(|u| u == unit) {
            Some('P')
        } else {
            None
        }
    }
}

/// Sort units by descending score, cut them into `gamma` near-equal groups and
/// sample `round(fraction · |group|)` units of each group into `G`; the rest
/// form `P`.
pub fn itc_partition(scores: &BTreeMap<String, f64>, gamma: usize, fraction: f64, seed: u64) -> Result<ItcPartition> {
    let n = scores.len();
    if gamma < 1 || gamma > n {
        return Err(Error::invalid(format!("group count {gamma} must be in 1..={n}")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid("fraction must lie in (0, 1)"));
    }
    let mut ranked: Vec<(&String, f64)> = scores.iter().map(|(u, s)| (u, *s)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let base = n / gamma;
    let extra = n % gamma;
    let mut rng = seeded(seed);
    let mut groups = Vec::with_capacity(gamma);
    let mut subset_g = Vec::new();
    let mut subset_p = Vec::new();
    let mut start = 0;
    for g in 0..gamma {
        let size = base + usize::from(g < extra);
        let group: Vec<String> = ranked[start..start + size].iter().map(|(u, _)| (*u).clone()).collect();
        start += size;
        let take = (math::round(fraction * size as f64) as usize).min(size);
        let mut picked = group.clone();
        shuffle(&mut rng, &mut picked);
        let rest = picked.split_off(take);
        subset_g.extend(picked);
        subset_p.extend(rest);
        groups.push(group);
    }
    subset_g.sort();
    subset_p.sort();
    Ok(ItcPartition {
        groups,
        subset_g,
        subset_p,
        scores: scores.clone(),
    })
}
