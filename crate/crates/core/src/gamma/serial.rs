//! JSON form of equivariant operators.

use serde::{Deserialize, Serialize};

use super::group::{DeckGroup, GroupElement, GroupSpec};
use super::operator::{EquivariantOperator, FiberDims};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub gamma: Vec<i64>,
    /// Row-major `[re, im]` entries.
    pub matrix: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub group: GroupSpec,
    /// `[plus, minus]`.
    pub fiber_dims: [usize; 2],
    pub blocks: Vec<BlockSpec>,
}

impl TryFrom<OperatorSpec> for EquivariantOperator {
    type Error = Error;

    fn try_from(spec: OperatorSpec) -> Result<Self> {
        let group = DeckGroup::try_from(spec.group)?;
        let [plus, minus] = spec.fiber_dims;
        let n = plus
            .checked_add(minus)
            .filter(|n| n.checked_mul(*n).is_some())
            .ok_or_else(|| Error::Dimension(format!("fiber dimensions {plus} + {minus} are too large")))?;
        let fiber = FiberDims::new(plus, minus);
        let blocks = spec
            .blocks
            .into_iter()
            .map(|b| {
                if b.matrix.len() != n * n {
                    return Err(Error::Dimension(format!(
                        "block at {:?} has {} entries, expected {}",
                        b.gamma,
                        b.matrix.len(),
                        n * n
                    )));
                }
                let m = CMatrix::from_row_iterator(n, n, b.matrix.iter().map(|&[re, im]| c(re, im)));
                Ok((GroupElement(b.gamma), m))
            })
            .collect::<Result<Vec<_>>>()?;
        EquivariantOperator::new(group, fiber, blocks)
    }
}

impl From<&EquivariantOperator> for OperatorSpec {
    fn from(op: &EquivariantOperator) -> Self {
        let n = op.dim();
        OperatorSpec {
            group: GroupSpec::from(op.group()),
            fiber_dims: [op.fiber().plus, op.fiber().minus],
            blocks: op
                .blocks()
                .iter()
                .map(|(g, m)| BlockSpec {
                    gamma: g.0.clone(),
                    matrix: (0..n * n)
                        .map(|i| {
                            let z = m[(i / n, i % n)];
                            [z.re, z.im]
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn operator_from_json(text: &str) -> Result<EquivariantOperator> {
    let spec: OperatorSpec = serde_json::from_str(text)?;
    EquivariantOperator::try_from(spec)
}

pub fn operator_to_json(op: &EquivariantOperator) -> Result<String> {
    Ok(serde_json::to_string(&OperatorSpec::from(op))?)
}
