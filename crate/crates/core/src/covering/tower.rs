//! Residually finite towers of quotients and word-length versus distance
//! profiles of finite covers.

use serde::{Deserialize, Serialize};

use super::graph::{derived_cover, VoltageGraph};
use crate::error::{Error, Result};
use crate::gamma::{DeckGroup, GroupElement, Quotient};

#[derive(Debug, Clone, PartialEq)]
pub struct DeckTower {
    base: DeckGroup,
    orders: Vec<u32>,
    quotients: Vec<Quotient>,
}

impl DeckTower {
    pub fn base(&self) -> &DeckGroup {
        &self.base
    }

    pub fn levels(&self) -> usize {
        self.quotients.len()
    }

    pub fn quotient(&self, level: usize) -> &Quotient {
        &self.quotients[level]
    }

    pub fn quotients(&self) -> &[Quotient] {
        &self.quotients
    }

    /// Indices `d_i = |Γ/Γ_i|`.
    pub fn indices(&self) -> Vec<usize> {
        self.quotients.iter().map(Quotient::index).collect()
    }

    /// Projection from level `from` down to level `to ≤ from`.
    pub fn project(&self, from: usize, to: usize, g: &GroupElement) -> Result<GroupElement> {
        if to > from || from >= self.levels() {
            return Err(Error::InvalidInput(format!("no projection from level {from} to {to}")));
        }
        let k = self.base.free_rank();
        let m = self.orders[to] as i64;
        let mut v: Vec<i64> = g.0[..k].iter().map(|x| x.rem_euclid(m)).collect();
        v.extend_from_slice(&g.0[k..]);
        Ok(GroupElement(v))
    }
}

/// Tower `Γ/Γ_i` with `Γ_i = orders[i]·Z^k` on the lattice part. A finite
/// group admits the one-step tower `orders = [|G|]`.
pub fn tower(gamma: &DeckGroup, orders: &[u32]) -> Result<DeckTower> {
    if orders.is_empty() {
        return Err(Error::InvalidInput("a tower needs at least one level".into()));
    }
    let quotients = if gamma.is_finite() {
        if orders != [gamma.torsion_order() as u32] {
            return Err(Error::InvalidInput(
                "a finite group only admits the one-step tower of its own order".into(),
            ));
        }
        vec![gamma.quotient(&[])?]
    } else {
        for w in orders.windows(2) {
            if w[1] <= w[0] || w[1] % w[0] != 0 {
                return Err(Error::InvalidInput(format!(
                    "orders must form a strictly increasing divisibility chain ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        orders
            .iter()
            .map(|&m| gamma.quotient(&vec![m; gamma.free_rank()]))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(DeckTower {
        base: gamma.clone(),
        orders: orders.to_vec(),
        quotients,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordDistanceProfile {
    /// `(|γ|, d(x, xγ))` for reachable pairs.
    pub samples: Vec<(u64, usize)>,
    /// Pairs `(x, γ)` with `xγ` in another component of the cover.
    pub unreachable: usize,
    pub components: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Constants with `|γ|/b − a ≤ d ≤ b|γ| + a` on all samples.
    pub a: f64,
    pub b: f64,
}

/// Compares graph distance `d((x,e), (x,γ))` in the derived cover with the
/// word length of `γ` in the quotient.
pub fn word_distance_profile(g: &VoltageGraph, q: &Quotient) -> Result<WordDistanceProfile> {
    let cover = derived_cover(g, q)?;
    let target = q.target();
    let elems = target.elements()?;
    let d = elems.len();
    let mut samples = Vec::new();
    let mut unreachable = 0;
    for x in 0..g.vertex_count() {
        let dist = cover.distances_from(x * d + target.torsion_rank(&target.identity()));
        for gamma in &elems {
            match dist[x * d + target.torsion_rank(gamma)] {
                Some(dd) => samples.push((target.word_length(gamma), dd)),
                None => unreachable += 1,
            }
        }
    }
    let n = samples.len() as f64;
    let (mx, my) = samples
        .iter()
        .fold((0.0, 0.0), |(a, b), &(w, dd)| (a + w as f64 / n, b + dd as f64 / n));
    let sxx: f64 = samples.iter().map(|&(w, _)| (w as f64 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|&(w, dd)| (w as f64 - mx) * (dd as f64 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let b = if slope > 0.0 { slope.max(1.0 / slope) } else { 1.0 };
    let a = samples
        .iter()
        .map(|&(w, dd)| {
            let (w, dd) = (w as f64, dd as f64);
            (dd - b * w).max(w / b - dd)
        })
        .fold(0.0, f64::max);
    Ok(WordDistanceProfile {
        samples,
        unreachable,
        components: cover.component_count(),
        slope,
        intercept,
        a,
        b,
    })
}
