//! Deck groups: free-abelian lattices times finite groups (cyclic factors or
//! groups given by a multiplication table), with their finite quotients.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates of a group element: first the `free_rank` lattice coordinates,
/// then one coordinate per finite factor (residue for cyclic factors, element
/// index for table factors).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(pub Vec<i64>);

impl GroupElement {
    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A finite group given by its multiplication table `table[a][b] = a·b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CayleyTable {
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl CayleyTable {
    pub fn new(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty multiplication table".into()));
        }
        if table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
            return Err(Error::InvalidGroup("table must be square with entries below its order".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            let inv = (0..n).find(|&b| table[a][b] == identity && table[b][a] == identity);
            inverse[a] = inv.ok_or_else(|| Error::InvalidGroup(format!("element {a} has no inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::InvalidGroup(format!(
                            "associativity fails for ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            table,
            identity,
            inverse,
        })
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.table[a][b] == self.table[b][a]))
    }

    /// Symmetric group on three letters, as a small non-abelian test group.
    pub fn symmetric3() -> Self {
        // Elements: permutations of {0,1,2} in lexicographic order.
        let perms: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
        let table = (0..6)
            .map(|a| {
                (0..6)
                    .map(|b| {
                        // (a·b)(x) = a(b(x))
                        let comp = [perms[a][perms[b][0]], perms[a][perms[b][1]], perms[a][perms[b][2]]];
                        index(comp)
                    })
                    .collect()
            })
            .collect();
        Self::new(table).expect("S3 table is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FiniteFactor {
    Cyclic(u32),
    Table(Arc<CayleyTable>),
}

impl FiniteFactor {
    pub fn order(&self) -> usize {
        match self {
            FiniteFactor::Cyclic(m) => *m as usize,
            FiniteFactor::Table(t) => t.order(),
        }
    }

    fn identity(&self) -> i64 {
        match self {
            FiniteFactor::Cyclic(_) => 0,
            FiniteFactor::Table(t) => t.identity as i64,
        }
    }

    fn mul(&self, a: i64, b: i64) -> i64 {
        match self {
            FiniteFactor::Cyclic(m) => (a + b).rem_euclid(*m as i64),
            FiniteFactor::Table(t) => t.table[a as usize][b as usize] as i64,
        }
    }

    fn inv(&self, a: i64) -> i64 {
        match self {
            FiniteFactor::Cyclic(m) => (-a).rem_euclid(*m as i64),
            FiniteFactor::Table(t) => t.inverse[a as usize] as i64,
        }
    }
}

/// Largest lattice rank accepted; Floquet grids beyond it are out of reach.
pub const MAX_FREE_RANK: usize = 8;

/// `Z^free_rank × F_1 × ... × F_r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeckGroup {
    free_rank: usize,
    factors: Vec<FiniteFactor>,
}

impl DeckGroup {
    pub fn new(free_rank: usize, factors: Vec<FiniteFactor>) -> Result<Self> {
        if free_rank > MAX_FREE_RANK {
            return Err(Error::Unsupported(format!("free rank {free_rank} exceeds {MAX_FREE_RANK}")));
        }
        for f in &factors {
            if let FiniteFactor::Cyclic(0) = f {
                return Err(Error::InvalidGroup("cyclic factor of order 0".into()));
            }
        }
        Ok(Self { free_rank, factors })
    }

    pub fn trivial() -> Self {
        Self {
            free_rank: 0,
            factors: Vec::new(),
        }
    }

    pub fn cyclic(m: u32) -> Result<Self> {
        Self::new(0, vec![FiniteFactor::Cyclic(m)])
    }

    pub fn free_abelian(rank: usize) -> Self {
        Self {
            free_rank: rank,
            factors: Vec::new(),
        }
    }

    pub fn from_table(table: CayleyTable) -> Self {
        Self {
            free_rank: 0,
            factors: vec![FiniteFactor::Table(Arc::new(table))],
        }
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn factors(&self) -> &[FiniteFactor] {
        &self.factors
    }

    pub fn coordinate_count(&self) -> usize {
        self.free_rank + self.factors.len()
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    /// Order of the finite part.
    pub fn torsion_order(&self) -> usize {
        self.factors.iter().map(FiniteFactor::order).product()
    }

    pub fn order(&self) -> Option<usize> {
        self.is_finite().then(|| self.torsion_order())
    }

    /// True when every finite factor is cyclic, so that characters
    /// diagonalize the finite part.
    pub fn torsion_is_cyclic(&self) -> bool {
        self.factors.iter().all(|f| matches!(f, FiniteFactor::Cyclic(_)))
    }

    pub fn is_abelian(&self) -> bool {
        self.factors.iter().all(|f| match f {
            FiniteFactor::Cyclic(_) => true,
            FiniteFactor::Table(t) => t.is_abelian(),
        })
    }

    pub fn identity(&self) -> GroupElement {
        let mut v = vec![0; self.free_rank];
        v.extend(self.factors.iter().map(FiniteFactor::identity));
        GroupElement(v)
    }

    pub fn validate(&self, g: &GroupElement) -> Result<()> {
        if g.0.len() != self.coordinate_count() {
            return Err(Error::GroupMismatch(format!(
                "element {g} has {} coordinates, group needs {}",
                g.0.len(),
                self.coordinate_count()
            )));
        }
        for (f, &x) in self.factors.iter().zip(&g.0[self.free_rank..]) {
            if x < 0 || x as usize >= f.order() {
                return Err(Error::GroupMismatch(format!("element {g} has a coordinate outside its factor")));
            }
        }
        Ok(())
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let k = self.free_rank;
        let mut v: Vec<i64> = (0..k).map(|i| a.0[i] + b.0[i]).collect();
        v.extend(
            self.factors
                .iter()
                .enumerate()
                .map(|(j, f)| f.mul(a.0[k + j], b.0[k + j])),
        );
        GroupElement(v)
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        let k = self.free_rank;
        let mut v: Vec<i64> = a.0[..k].iter().map(|x| -x).collect();
        v.extend(self.factors.iter().enumerate().map(|(j, f)| f.inv(a.0[k + j])));
        GroupElement(v)
    }

    pub fn is_identity(&self, a: &GroupElement) -> bool {
        *a == self.identity()
    }

    /// Index of the finite part of `g` in the mixed-radix enumeration of the
    /// finite factors.
    pub fn torsion_rank(&self, g: &GroupElement) -> usize {
        let mut r = 0usize;
        for (f, &x) in self.factors.iter().zip(&g.0[self.free_rank..]) {
            r = r * f.order() + x as usize;
        }
        r
    }

    /// Finite-part coordinates for a mixed-radix index.
    pub fn torsion_at(&self, mut rank: usize) -> Vec<i64> {
        let mut coords = vec![0i64; self.factors.len()];
        for (j, f) in self.factors.iter().enumerate().rev() {
            coords[j] = (rank % f.order()) as i64;
            rank /= f.order();
        }
        coords
    }

    /// All elements of a finite group in rank order (lexicographic in the
    /// coordinates).
    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        if !self.is_finite() {
            return Err(Error::Unsupported("cannot enumerate an infinite group".into()));
        }
        Ok((0..self.torsion_order()).map(|r| GroupElement(self.torsion_at(r))).collect())
    }

    /// Word length for the standard generators: `|x|_1` on the lattice, the
    /// cyclic distance on cyclic factors, and 0/1 on table factors.
    pub fn word_length(&self, g: &GroupElement) -> u64 {
        let k = self.free_rank;
        let mut len: u64 = g.0[..k].iter().map(|x| x.unsigned_abs()).sum();
        for (f, &x) in self.factors.iter().zip(&g.0[k..]) {
            len += match f {
                FiniteFactor::Cyclic(m) => (x as u64).min(*m as u64 - x as u64),
                FiniteFactor::Table(t) => u64::from(x as usize != t.identity),
            };
        }
        len
    }

    /// Quotient by `m_1 Z × ... × m_k Z` on the lattice part; finite factors
    /// are kept.
    pub fn quotient(&self, moduli: &[u32]) -> Result<Quotient> {
        if moduli.len() != self.free_rank {
            return Err(Error::GroupMismatch(format!(
                "{} moduli for a lattice of rank {}",
                moduli.len(),
                self.free_rank
            )));
        }
        let mut factors: Vec<FiniteFactor> = Vec::with_capacity(moduli.len() + self.factors.len());
        for &m in moduli {
            if m == 0 {
                return Err(Error::InvalidGroup("quotient modulus 0".into()));
            }
            factors.push(FiniteFactor::Cyclic(m));
        }
        factors.extend(self.factors.iter().cloned());
        Ok(Quotient {
            source: self.clone(),
            moduli: moduli.to_vec(),
            target: DeckGroup::new(0, factors)?,
        })
    }

}

/// A surjection onto a finite quotient group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient {
    source: DeckGroup,
    moduli: Vec<u32>,
    target: DeckGroup,
}

impl Quotient {
    pub fn source(&self) -> &DeckGroup {
        &self.source
    }

    pub fn target(&self) -> &DeckGroup {
        &self.target
    }

    pub fn moduli(&self) -> &[u32] {
        &self.moduli
    }

    pub fn index(&self) -> usize {
        self.target.torsion_order()
    }

    pub fn apply(&self, g: &GroupElement) -> GroupElement {
        let k = self.source.free_rank;
        let mut v: Vec<i64> = (0..k)
            .map(|i| g.0[i].rem_euclid(self.moduli[i] as i64))
            .collect();
        v.extend_from_slice(&g.0[k..]);
        GroupElement(v)
    }
}

/// Serialized group description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    #[serde(default)]
    pub free_rank: usize,
    #[serde(default)]
    pub factors: Vec<FactorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FactorSpec {
    Cyclic(u32),
    Table(Vec<Vec<usize>>),
}

impl TryFrom<GroupSpec> for DeckGroup {
    type Error = Error;

    fn try_from(spec: GroupSpec) -> Result<Self> {
        let factors = spec
            .factors
            .into_iter()
            .map(|f| match f {
                FactorSpec::Cyclic(m) => Ok(FiniteFactor::Cyclic(m)),
                FactorSpec::Table(t) => Ok(FiniteFactor::Table(Arc::new(CayleyTable::new(t)?))),
            })
            .collect::<Result<Vec<_>>>()?;
        DeckGroup::new(spec.free_rank, factors)
    }
}

impl From<&DeckGroup> for GroupSpec {
    fn from(g: &DeckGroup) -> Self {
        GroupSpec {
            free_rank: g.free_rank,
            factors: g
                .factors
                .iter()
                .map(|f| match f {
                    FiniteFactor::Cyclic(m) => FactorSpec::Cyclic(*m),
                    FiniteFactor::Table(t) => FactorSpec::Table(t.table.clone()),
                })
                .collect(),
        }
    }
}
