//! Off-diagonal decay of heat kernels of graph Laplacians.
//!
//! Kernels are evaluated by uniformization, `e^{−tH} = Σ_k P(k; ts)(I − H/s)^k`
//! with Poisson weights, which is entrywise accurate for Z-matrices (real,
//! nonpositive off-diagonal) because every term is nonnegative.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::covering::{graph_laplacian, VoltageGraph};
use crate::error::{Error, Result};

/// Column `x` of `e^{−tH}` for a real symmetric Z-matrix `H`.
pub fn heat_column(h: &DMatrix<f64>, x: usize, t: f64) -> Result<DVector<f64>> {
    let n = h.nrows();
    if h.ncols() != n || x >= n {
        return Err(Error::Dimension("heat column of a non-square generator".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && h[(i, j)] > 0.0 {
                return Err(Error::Precondition("generator has positive off-diagonal entries".into()));
            }
        }
    }
    let s = (0..n).map(|i| h[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let p = DMatrix::<f64>::identity(n, n) - h / s;
    let lambda = t * s;
    let mut v = DVector::<f64>::zeros(n);
    v[x] = 1.0;
    let mut out = DVector::<f64>::zeros(n);
    // Sum until the Poisson tail is negligible; the mode sits at k ≈ ts.
    let kmax = (lambda + 40.0 * lambda.sqrt() + 60.0 + n as f64).ceil() as usize;
    for k in 0..=kmax {
        let logw = -lambda + k as f64 * lambda.ln() - libm::lgamma(k as f64 + 1.0);
        if k == 0 {
            out += &v * (-lambda).exp();
        } else {
            out += &v * logw.exp();
        }
        v = &p * v;
    }
    Ok(out)
}

/// Vertex Laplacian (with potentials) of a trivial-group graph as a real
/// matrix.
pub fn real_laplacian(g: &VoltageGraph) -> Result<DMatrix<f64>> {
    if !g.group().is_finite() || g.group().torsion_order() != 1 {
        return Err(Error::Unsupported("decay checks run on trivial-group graphs".into()));
    }
    let l = graph_laplacian(g)?.dense()?;
    Ok(DMatrix::from_fn(l.nrows(), l.ncols(), |i, j| l[(i, j)].re))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPair {
    pub x: usize,
    pub y: usize,
    pub d: usize,
    pub t: f64,
    pub magnitude: f64,
    pub bound: f64,
    pub in_regime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub c: f64,
    /// Diagonal constant `C` per time.
    pub constants: Vec<(f64, f64)>,
    pub pairs: Vec<DecayPair>,
    /// In-regime pairs exceeding the envelope.
    pub violations: usize,
    /// Out-of-regime geodesic triples (fixed `x`, `t`) whose successive
    /// log-magnitude drops fail to increase.
    pub non_superexponential: usize,
    /// Fitted exponent `a` of `|k| ≈ e^{−a d log d}` outside the regime, per
    /// time.
    pub tail_exponents: Vec<(f64, f64)>,
}

impl DecayReport {
    pub fn pass(&self) -> bool {
        self.violations == 0 && self.non_superexponential == 0
    }

    /// Columns `x, y, d, t, |k|, bound`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "d", "t", "|k|", "bound"])?;
        for p in &self.pairs {
            w.write_record([
                p.x.to_string(),
                p.y.to_string(),
                p.d.to_string(),
                p.t.to_string(),
                p.magnitude.to_string(),
                p.bound.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `e^{−d²/(6c²t)}`.
pub fn envelope(d: f64, c: f64, t: f64) -> f64 {
    (-d * d / (6.0 * c * c * t)).exp()
}

/// Checks `|K_t(x,y)| ≤ C e^{−d²/(6c²t)}` for `d ≤ c·t` and strictly
/// increasing log-drops along geodesics beyond, for each source in `sources`.
pub fn gaussian_decay_check(
    h: &DMatrix<f64>,
    distances: &dyn Fn(usize) -> Vec<Option<usize>>,
    sources: &[usize],
    times: &[f64],
    c: f64,
) -> Result<DecayReport> {
    if !(c > 0.0) {
        return Err(Error::InvalidInput("propagation constant must be positive".into()));
    }
    let n = h.nrows();
    let mut pairs = Vec::new();
    let mut constants = Vec::new();
    let mut violations = 0;
    let mut non_super = 0;
    let mut tail_exponents = Vec::new();
    let all_dist: Vec<Vec<Option<usize>>> = (0..n).map(distances).collect();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && h[(i, j)] != 0.0).collect())
        .collect();
    for &t in times {
        let cols: Vec<DVector<f64>> = (0..n).map(|x| heat_column(h, x, t)).collect::<Result<_>>()?;
        let big_c = (0..n).map(|x| cols[x][x]).fold(0.0, f64::max);
        constants.push((t, big_c));
        let mut fit = (0.0, 0.0);
        for &x in sources {
            let dist = distances(x);
            // Smallest magnitude per distance, used for the tail test.
            let mut by_d: Vec<(usize, f64)> = Vec::new();
            for y in 0..n {
                let Some(d) = dist[y] else { continue };
                let magnitude = cols[x][y].abs();
                let in_regime = d as f64 <= c * t;
                let bound = big_c * envelope(d as f64, c, t);
                if in_regime && magnitude > bound * (1.0 + 1e-12) {
                    violations += 1;
                }
                pairs.push(DecayPair {
                    x,
                    y,
                    d,
                    t,
                    magnitude,
                    bound,
                    in_regime,
                });
                if !in_regime {
                    by_d.push((d, magnitude));
                }
            }
            by_d.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
            by_d.dedup_by_key(|p| p.0);
            let logs: Vec<(usize, f64)> = by_d
                .iter()
                .filter(|p| p.1 > 0.0)
                .map(|&(d, m)| (d, m.ln()))
                .collect();
            // Log-drops must increase along each geodesic ray out of `x`.
            // Points within two steps of the end of their ray feel the
            // reflection at the boundary of a finite graph and are skipped.
            let extends = |w: usize| {
                let dw = &all_dist[w];
                (0..n).any(|u| matches!((dist[u], dw[u]), (Some(du), Some(2)) if Some(du) == dist[w].map(|d| d + 2)))
            };
            let log_at = |y: usize| {
                let m = cols[x][y].abs();
                (m > 0.0).then(|| m.ln())
            };
            for w0 in 0..n {
                let Some(d0) = dist[w0] else { continue };
                if d0 as f64 <= c * t {
                    continue;
                }
                for &w1 in &neighbors[w0] {
                    if dist[w1] != Some(d0 + 1) {
                        continue;
                    }
                    for &w2 in &neighbors[w1] {
                        if dist[w2] != Some(d0 + 2) || !extends(w2) {
                            continue;
                        }
                        let (Some(l0), Some(l1), Some(l2)) = (log_at(w0), log_at(w1), log_at(w2)) else {
                            continue;
                        };
                        let drop1 = l0 - l1;
                        let drop2 = l1 - l2;
                        if drop2 <= drop1 - 1e-9 * drop1.abs() {
                            non_super += 1;
                        }
                    }
                }
            }
            for &(d, l) in &logs {
                let df = d as f64;
                if d > 1 {
                    let basis = df * df.ln();
                    fit.0 += -l * basis;
                    fit.1 += basis * basis;
                }
            }
        }
        tail_exponents.push((t, if fit.1 > 0.0 { fit.0 / fit.1 } else { f64::NAN }));
    }
    Ok(DecayReport {
        c,
        constants,
        pairs,
        violations,
        non_superexponential: non_super,
        tail_exponents,
    })
}

/// Gaussian decay check on a trivial-group graph with BFS distances and
/// the hopping bound `max √w` as propagation constant.
pub fn graph_decay_check(g: &VoltageGraph, sources: &[usize], times: &[f64]) -> Result<DecayReport> {
    let h = real_laplacian(g)?;
    let c = g.edges().iter().map(|e| e.weight.sqrt()).fold(0.0, f64::max);
    gaussian_decay_check(&h, &|x| g.distances_from(x), sources, times, c)
}

/// Explicit isomorphism between the balls of radius `radius` around `x1` in
/// `g1` and `x2` in `g2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallCertificate {
    pub radius: usize,
    pub centers: (usize, usize),
    pub map: Vec<(usize, usize)>,
}

impl BallCertificate {
    /// Verifies that `map` is a bijection between the two balls preserving
    /// edges, weights and potentials.
    pub fn verify(&self, g1: &VoltageGraph, g2: &VoltageGraph) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("invalid ball certificate: {m}")));
        let ball = |g: &VoltageGraph, x: usize| -> Vec<usize> {
            g.distances_from(x)
                .iter()
                .enumerate()
                .filter(|(_, d)| d.is_some_and(|d| d <= self.radius))
                .map(|(v, _)| v)
                .collect()
        };
        let (b1, b2) = (ball(g1, self.centers.0), ball(g2, self.centers.1));
        let mut fwd = std::collections::BTreeMap::new();
        let mut bwd = std::collections::BTreeMap::new();
        for &(a, b) in &self.map {
            if fwd.insert(a, b).is_some() || bwd.insert(b, a).is_some() {
                return bad("map is not injective");
            }
        }
        if fwd.get(&self.centers.0) != Some(&self.centers.1) {
            return bad("centers do not correspond");
        }
        let k1: Vec<usize> = fwd.keys().copied().collect();
        let k2: Vec<usize> = bwd.keys().copied().collect();
        if k1 != b1 || k2 != b2 {
            return bad("map does not cover both balls");
        }
        let edge_set = |g: &VoltageGraph, inside: &std::collections::BTreeMap<usize, usize>, translate: bool| {
            let mut set: Vec<(usize, usize, u64)> = g
                .edges()
                .iter()
                .filter(|e| inside.contains_key(&e.tail) && inside.contains_key(&e.head))
                .map(|e| {
                    let (mut a, mut b) = (e.tail, e.head);
                    if translate {
                        a = inside[&a];
                        b = inside[&b];
                    }
                    (a.min(b), a.max(b), e.weight.to_bits())
                })
                .collect();
            set.sort_unstable();
            set
        };
        if edge_set(g1, &fwd, true) != edge_set(g2, &bwd, false) {
            return bad("edges differ");
        }
        let pot = |g: &VoltageGraph, v: usize| g.potentials().map_or(0.0, |p| p[v]);
        // Degrees inside the ball must agree too so that Laplacian rows match
        // strictly inside.
        for (&a, &b) in &fwd {
            if pot(g1, a) != pot(g2, b) {
                return bad("potentials differ");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeDecayReport {
    pub difference: f64,
    pub bound: f64,
    pub in_regime: bool,
    pub constant: f64,
}

impl RelativeDecayReport {
    pub fn pass(&self) -> bool {
        !self.in_regime || self.difference <= self.bound
    }
}

/// `|e^{−tΔ₁}(x,x) − e^{−tΔ₂}(x,x)|` for two graphs agreeing on a ball,
/// against `C e^{−(ρ−1)²/(6c²t)}`.
pub fn relative_decay_check(
    g1: &VoltageGraph,
    g2: &VoltageGraph,
    cert: &BallCertificate,
    time: f64,
) -> Result<RelativeDecayReport> {
    cert.verify(g1, g2)?;
    let (h1, h2) = (real_laplacian(g1)?, real_laplacian(g2)?);
    let k1 = heat_column(&h1, cert.centers.0, time)?;
    let k2 = heat_column(&h2, cert.centers.1, time)?;
    let difference = (k1[cert.centers.0] - k2[cert.centers.1]).abs();
    let constant = k1[cert.centers.0].max(k2[cert.centers.1]);
    let c = g1
        .edges()
        .iter()
        .chain(g2.edges())
        .map(|e| e.weight.sqrt())
        .fold(0.0, f64::max);
    let rho = cert.radius as f64;
    Ok(RelativeDecayReport {
        difference,
        bound: constant * envelope(rho - 1.0, c, time),
        in_regime: rho <= c * time,
        constant,
    })
}

/// Certificate for a path of `n` sites (center `n/2`) against a cycle of `m`
/// sites (center 0).
pub fn path_cycle_certificate(n: usize, m: usize, radius: usize) -> BallCertificate {
    let center = n / 2;
    let map = (0..=2 * radius)
        .map(|k| {
            let off = k as i64 - radius as i64;
            ((center as i64 + off) as usize, (off.rem_euclid(m as i64)) as usize)
        })
        .collect::<Vec<_>>();
    let mut map = map;
    map.sort_unstable();
    BallCertificate {
        radius,
        centers: (center, 0),
        map,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniformization_matches_eigen() {
        let g = VoltageGraph::path(12).unwrap();
        let h = real_laplacian(&g).unwrap();
        let col = heat_column(&h, 3, 1.7).unwrap();
        let eig = h.clone().symmetric_eigen();
        let dense = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (-1.7 * l).exp()))
            * eig.eigenvectors.transpose();
        for y in 0..12 {
            assert!((col[y] - dense[(y, 3)]).abs() < 1e-14);
        }
    }

    #[test]
    fn path_of_sixty() {
        let g = VoltageGraph::path(60).unwrap();
        let r = graph_decay_check(&g, &[30], &[10.0, 2.0]).unwrap();
        assert!(r.pass(), "{} {}", r.violations, r.non_superexponential);
        let far = r.pairs.iter().find(|p| p.d == 8 && p.t == 10.0).unwrap();
        assert!(far.in_regime && far.magnitude < far.bound);
        assert!(r.pairs.iter().any(|p| p.d == 25 && p.t == 2.0 && !p.in_regime));
    }

    #[test]
    fn path_versus_cycle() {
        let g1 = VoltageGraph::path(41).unwrap();
        let g2 = VoltageGraph::cycle(30).unwrap();
        let r = relative_decay_check(&g1, &g2, &path_cycle_certificate(41, 30, 10), 3.0).unwrap();
        assert!(r.difference < 1e-6 && r.pass());
        let same = relative_decay_check(&g1, &g1, &path_cycle_certificate(41, 1000, 10), 3.0);
        assert!(same.is_err());
    }
}
