//! Nearest-neighbour momentum operators on a ring of sites.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gamma::{DeckGroup, EquivariantOperator, FiberDims, GroupElement};
use crate::linalg::{c, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircleMode {
    /// Closed ring of `n` sites over the trivial group.
    Ring,
    /// Periodic chain over `Z`, the bond from site `n−1` to the next cell's
    /// site 0 carrying the generator.
    Periodic,
}

/// `(i/2)(e^{iφ}S − e^{−iφ}S†) + diag(potential)` with `(Sξ)_j = ξ_{j+1}`.
/// An empty potential means zero.
pub fn circle_operator(n: usize, flux: f64, potential: &[f64], mode: CircleMode) -> Result<EquivariantOperator> {
    if n < 2 {
        return Err(Error::InvalidInput("a circle operator needs at least two sites".into()));
    }
    if !potential.is_empty() && potential.len() != n {
        return Err(Error::InvalidInput(format!("{} potential values for {n} sites", potential.len())));
    }
    let hop = c(0.0, 0.5) * Complex64::from_polar(1.0, flux);
    let mut local = CMatrix::zeros(n, n);
    for j in 0..n - 1 {
        local[(j, j + 1)] += hop;
        local[(j + 1, j)] += hop.conj();
    }
    for (j, &v) in potential.iter().enumerate() {
        local[(j, j)] += c(v, 0.0);
    }
    match mode {
        CircleMode::Ring => {
            local[(n - 1, 0)] += hop;
            local[(0, n - 1)] += hop.conj();
            EquivariantOperator::new(DeckGroup::trivial(), FiberDims::ungraded(n), [(GroupElement(vec![]), local)])
        }
        CircleMode::Periodic => {
            let mut cut = CMatrix::zeros(n, n);
            cut[(n - 1, 0)] = hop;
            EquivariantOperator::new(
                DeckGroup::free_abelian(1),
                FiberDims::ungraded(n),
                [
                    (GroupElement(vec![0]), local),
                    (GroupElement(vec![-1]), cut.adjoint()),
                    (GroupElement(vec![1]), cut),
                ],
            )
        }
    }
}
