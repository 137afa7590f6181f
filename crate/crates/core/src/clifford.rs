//! Complex Clifford algebras `Cl(k)` with generators squaring to `-1`, their
//! graded traces and matrix spinor representations.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, kron, trace, CMatrix, ONE, ZERO};

pub const MAX_GENERATORS: usize = 12;

/// Sorted generator multi-index encoded as a bit set: bit `i-1` set means
/// `c_i` occurs.
pub type Monomial = u16;

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordElement {
    k: usize,
    coefficients: BTreeMap<Monomial, Complex64>,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_GENERATORS {
        return Err(Error::InvalidInput(format!(
            "generator count {k} outside 1..={MAX_GENERATORS}"
        )));
    }
    Ok(())
}

/// Sign and product index of `c_a c_b` for monomials `a`, `b`.
fn monomial_product(a: Monomial, b: Monomial) -> (f64, Monomial) {
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        // generators of `a` with a larger index than this generator of `b`
        swaps += (a >> (bit + 1)).count_ones();
        rest &= rest - 1;
    }
    let squares = (a & b).count_ones();
    let sign = if (swaps + squares) % 2 == 0 { 1.0 } else { -1.0 };
    (sign, a ^ b)
}

fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

impl CliffordElement {
    pub fn zero(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(Self {
            k,
            coefficients: BTreeMap::new(),
        })
    }

    pub fn scalar(k: usize, value: Complex64) -> Result<Self> {
        Self::monomial(k, &[], value)
    }

    pub fn one(k: usize) -> Result<Self> {
        Self::scalar(k, ONE)
    }

    pub fn generator(k: usize, i: usize) -> Result<Self> {
        Self::monomial(k, &[i], ONE)
    }

    /// `coefficient * c_{i_1} ... c_{i_r}` for strictly increasing 1-based
    /// indices.
    pub fn monomial(k: usize, indices: &[usize], coefficient: Complex64) -> Result<Self> {
        check_k(k)?;
        let mut mask: Monomial = 0;
        let mut last = 0;
        for &i in indices {
            if i <= last || i > k {
                return Err(Error::InvalidInput(format!(
                    "multi-index {indices:?} is not strictly increasing within 1..={k}"
                )));
            }
            mask |= 1 << (i - 1);
            last = i;
        }
        let mut e = Self::zero(k)?;
        e.insert(mask, coefficient);
        Ok(e)
    }

    pub fn from_masks(k: usize, terms: impl IntoIterator<Item = (Monomial, Complex64)>) -> Result<Self> {
        let mut e = Self::zero(k)?;
        for (mask, z) in terms {
            if (mask as usize) >> k != 0 {
                return Err(Error::InvalidInput(format!("monomial {mask:#b} exceeds k={k}")));
            }
            e.insert(mask, z);
        }
        Ok(e)
    }

    fn insert(&mut self, mask: Monomial, z: Complex64) {
        let entry = self.coefficients.entry(mask).or_insert(ZERO);
        *entry += z;
        if *entry == ZERO {
            self.coefficients.remove(&mask);
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coefficient(&self, mask: Monomial) -> Complex64 {
        self.coefficients.get(&mask).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, Complex64)> + '_ {
        self.coefficients.iter().map(|(&m, &z)| (m, z))
    }

    pub fn full_mask(&self) -> Monomial {
        ((1u32 << self.k) - 1) as Monomial
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut out = Self {
            k: self.k,
            coefficients: BTreeMap::new(),
        };
        for (m, v) in self.terms() {
            out.insert(m, v * z);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        let mut out = self.clone();
        for (m, v) in other.terms() {
            out.insert(m, v);
        }
        Ok(out)
    }

    fn same_algebra(&self, other: &Self) -> Result<()> {
        if self.k != other.k {
            return Err(Error::Dimension(format!(
                "Clifford algebras differ: k={} vs k={}",
                self.k, other.k
            )));
        }
        Ok(())
    }

    /// Product under `c_i c_j + c_j c_i = -2 δ_ij`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        let mut out = Self {
            k: self.k,
            coefficients: BTreeMap::new(),
        };
        for (a, za) in self.terms() {
            for (b, zb) in other.terms() {
                let (sign, m) = monomial_product(a, b);
                out.insert(m, za * zb * sign);
            }
        }
        Ok(out)
    }

    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        let mut keys: Vec<Monomial> = self.coefficients.keys().copied().collect();
        keys.extend(other.coefficients.keys().copied());
        keys.into_iter()
            .map(|m| (self.coefficient(m) - other.coefficient(m)).norm())
            .fold(0.0, f64::max)
    }
}

/// The volume element `i^{[(k+1)/2]} c_1 ... c_k`; it squares to one.
pub fn volume_element(k: usize) -> Result<CliffordElement> {
    check_k(k)?;
    let indices: Vec<usize> = (1..=k).collect();
    CliffordElement::monomial(k, &indices, i_pow(k.div_ceil(2)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradedTraceTable {
    pub k: usize,
    /// Graded trace on the spinor module of `Cl(2l)`; identically zero on the
    /// odd algebras, which sit inside `Cl(k+1)` without the top monomial.
    pub str: Complex64,
    pub tr_plus: Option<Complex64>,
    pub tr_minus: Option<Complex64>,
}

/// Graded traces evaluated from the coefficients alone.
///
/// Even `k = 2l`: only the top monomial survives, `str(τ_{2l}) = 2^l`.
/// Odd `k = 2l-1`: `tr±(1) = 2^{l-1}`, `tr±(τ) = ±2^{l-1}`, all others zero.
pub fn graded_trace(x: &CliffordElement) -> GradedTraceTable {
    let k = x.k;
    let l = k.div_ceil(2);
    let top = x.coefficient(x.full_mask());
    // τ = i^l c_full, so c_full = (-i)^l τ.
    let top_in_tau = top * i_pow(3 * l);
    if k % 2 == 0 {
        GradedTraceTable {
            k,
            str: top_in_tau * 2f64.powi(l as i32),
            tr_plus: None,
            tr_minus: None,
        }
    } else {
        let half = 2f64.powi(l as i32 - 1);
        let scalar = x.coefficient(0);
        GradedTraceTable {
            k,
            str: ZERO,
            tr_plus: Some((scalar + top_in_tau) * half),
            tr_minus: Some((scalar - top_in_tau) * half),
        }
    }
}

/// Matrices for `c_1..c_k` on `C^{2^{⌈k/2⌉}}` built from iterated 2x2 tensor
/// blocks, together with the diagonal grading of `Cl(2⌈k/2⌉)`.
#[derive(Debug, Clone)]
pub struct SpinorRepresentation {
    pub k: usize,
    pub generators: Vec<CMatrix>,
    pub grading: CMatrix,
}

fn pauli() -> (CMatrix, CMatrix, CMatrix, CMatrix) {
    let id = CMatrix::identity(2, 2);
    let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let y = CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]);
    let z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(-1.0, 0.0)]);
    (id, x, y, z)
}

fn tensor_chain(factors: &[CMatrix]) -> CMatrix {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| kron(&acc, f))
}

pub fn spinor_representation(k: usize) -> Result<SpinorRepresentation> {
    check_k(k)?;
    let l = k.div_ceil(2);
    let (id, x, y, z) = pauli();
    let mut generators = Vec::with_capacity(k);
    for j in 0..k {
        let site = j / 2;
        let mut factors = Vec::with_capacity(l);
        for s in 0..l {
            factors.push(match s.cmp(&site) {
                std::cmp::Ordering::Less => z.clone(),
                std::cmp::Ordering::Equal => {
                    if j % 2 == 0 {
                        x.clone()
                    } else {
                        y.clone()
                    }
                }
                std::cmp::Ordering::Greater => id.clone(),
            });
        }
        // Hermitian involution times i squares to -1.
        generators.push(tensor_chain(&factors) * c(0.0, 1.0));
    }
    let grading = tensor_chain(&vec![z; l]);
    Ok(SpinorRepresentation {
        k,
        generators,
        grading,
    })
}

impl SpinorRepresentation {
    pub fn dim(&self) -> usize {
        self.grading.nrows()
    }

    pub fn monomial(&self, mask: Monomial) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::identity(n, n);
        for i in 0..self.k {
            if mask & (1 << i) != 0 {
                m *= &self.generators[i];
            }
        }
        m
    }

    pub fn represent(&self, x: &CliffordElement) -> Result<CMatrix> {
        if x.k != self.k {
            return Err(Error::Dimension(format!(
                "element of Cl({}) in a representation of Cl({})",
                x.k, self.k
            )));
        }
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for (mask, z) in x.terms() {
            m += self.monomial(mask) * z;
        }
        Ok(m)
    }

    /// `tr(grading · ρ(x))`.
    pub fn supertrace(&self, x: &CliffordElement) -> Result<Complex64> {
        Ok(trace(&(&self.grading * self.represent(x)?)))
    }

    /// Traces on the `±1` eigenspaces of `ρ(τ_k)` for odd `k`.
    pub fn chiral_traces(&self, x: &CliffordElement) -> Result<Option<(Complex64, Complex64)>> {
        if self.k % 2 == 0 {
            return Ok(None);
        }
        let n = self.dim();
        let tau = self.represent(&volume_element(self.k)?)?;
        let rx = self.represent(x)?;
        let id = CMatrix::identity(n, n);
        let plus = (&id + &tau).scale(0.5);
        let minus = (&id - &tau).scale(0.5);
        Ok(Some((trace(&(plus * &rx)), trace(&(minus * &rx)))))
    }

    /// Orthonormal basis of the `+1` eigenspace of `ρ(τ_k)` (odd `k`).
    pub fn plus_basis(&self) -> Result<CMatrix> {
        if self.k % 2 == 0 {
            return Err(Error::Unsupported("plus-representation needs odd k".into()));
        }
        let tau = self.represent(&volume_element(self.k)?)?;
        let (values, vectors) = crate::linalg::hermitian_eigen(&tau);
        let cols: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.0).collect();
        Ok(CMatrix::from_fn(vectors.nrows(), cols.len(), |r, j| vectors[(r, cols[j])]))
    }

    /// Largest entry of `ρ(c_i)ρ(c_j) + ρ(c_j)ρ(c_i) + 2δ_ij` over all pairs.
    pub fn relation_residual(&self) -> f64 {
        let n = self.dim();
        let id = CMatrix::identity(n, n);
        let mut worst: f64 = 0.0;
        for i in 0..self.k {
            for j in 0..self.k {
                let gi = &self.generators[i];
                let gj = &self.generators[j];
                let mut r = gi * gj + gj * gi;
                if i == j {
                    r += &id * c(2.0, 0.0);
                }
                worst = worst.max(crate::linalg::max_abs(&r));
            }
        }
        worst
    }
}

/// Checks `str(c(∂r) Ω diag(φ, φ)) = -2 tr(φ)` in the block model `E = F ⊕ F`
/// with `c(∂r) = [[0,-1],[1,0]]`, `Ω = [[0,1],[1,0]]` and grading `diag(1,-1)`.
/// Returns the absolute residual.
pub fn cylinder_trace_identity_check(phi: &CMatrix) -> Result<f64> {
    if phi.nrows() != phi.ncols() {
        return Err(Error::Dimension("φ must be square".into()));
    }
    let n = phi.nrows();
    let block = |entries: [f64; 4]| {
        CMatrix::from_row_slice(
            2,
            2,
            &entries.map(|v| c(v, 0.0)),
        )
    };
    let id = CMatrix::identity(n, n);
    let clifford_r = kron(&block([0.0, -1.0, 1.0, 0.0]), &id);
    let omega = kron(&block([0.0, 1.0, 1.0, 0.0]), &id);
    let grading = kron(&block([1.0, 0.0, 0.0, -1.0]), &id);
    let embedded = kron(&CMatrix::identity(2, 2), phi);
    let str_value = trace(&(grading * clifford_r * omega * embedded));
    Ok((str_value + trace(phi) * 2.0).norm())
}
