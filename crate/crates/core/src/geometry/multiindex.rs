use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported total degree per dimension.
const MAX_DEGREE: [u32; 3] = [400, 120, 60];

/// Exponent vector in up to three variables.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    exps: [u32; 3],
    dim: u8,
}

impl MultiIndex {
    pub fn new(exps: &[u32]) -> Self {
        assert!((1..=3).contains(&exps.len()), "dimension must be 1..=3");
        let mut e = [0; 3];
        e[..exps.len()].copy_from_slice(exps);
        MultiIndex {
            exps: e,
            dim: exps.len() as u8,
        }
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex::new(&vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps[..self.dim as usize]
    }

    pub fn degree(&self) -> u32 {
        self.exps().iter().sum()
    }

    /// `self + e_j`
    pub fn bump(&self, j: usize) -> Self {
        let mut m = *self;
        m.exps[j] += 1;
        m
    }

    /// `self - e_j`, if the j-th exponent is positive.
    pub fn drop_one(&self, j: usize) -> Option<Self> {
        (self.exps[j] > 0).then(|| {
            let mut m = *self;
            m.exps[j] -= 1;
            m
        })
    }

    /// Graded lexicographic comparison with the first variable strongest.
    pub fn grlex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps().cmp(self.exps()))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.exps().iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Monomials of total degree at most `n` in `d` variables, graded
/// lexicographic with `z_1` strongest: `1, z, w, z^2, zw, w^2, ...`.
#[derive(Clone, Debug)]
pub struct MultiIndexOrder {
    dim: usize,
    degree: u32,
    indices: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
}

fn push_degree(dim: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == dim {
        prefix.push(total);
        out.push(MultiIndex::new(prefix));
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        push_degree(dim, total - first, prefix, out);
        prefix.pop();
    }
}

impl MultiIndexOrder {
    pub fn new(dim: usize, degree: u32) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedRange(format!(
                "dimension {dim} not in 1..=3"
            )));
        }
        if degree > MAX_DEGREE[dim - 1] {
            return Err(Error::UnsupportedRange(format!(
                "degree {degree} exceeds {} for dimension {dim}",
                MAX_DEGREE[dim - 1]
            )));
        }
        let mut indices = Vec::new();
        let mut prefix = Vec::with_capacity(dim);
        for total in 0..=degree {
            push_degree(dim, total, &mut prefix, &mut indices);
        }
        let position = indices.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        Ok(MultiIndexOrder {
            dim,
            degree,
            indices,
            position,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> MultiIndex {
        self.indices[i]
    }

    pub fn position(&self, a: &MultiIndex) -> Option<usize> {
        self.position.get(a).copied()
    }

    /// Positions of the multi-indices with total degree exactly `k`.
    pub fn degree_block(&self, k: u32) -> std::ops::Range<usize> {
        let start = self.indices.partition_point(|a| a.degree() < k);
        let end = self.indices.partition_point(|a| a.degree() <= k);
        start..end
    }
}

/// `binomial(d + n, d)`
pub fn dimension_of_polys(d: usize, n: u32) -> usize {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 1..=d as u128 {
        num *= n as u128 + i;
        den *= i;
    }
    (num / den) as usize
}
