//! Vector matroids over a prime field GF(p).

use crate::error::{Error, Result};

/// Arithmetic modulo a prime `p <= 2^31`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub const MAX_PRIME: u64 = 1 << 31;

    pub fn new(p: u64) -> Result<Self> {
        if !(2..=Self::MAX_PRIME).contains(&p) || !is_prime(p) {
            return Err(Error::InvalidInput(format!(
                "field size {p} is not a prime in 2..=2^31"
            )));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.p - b) % self.p
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.p
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `a` must be non-zero.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(!a.is_multiple_of(self.p));
        self.pow(a, self.p - 2)
    }

    /// Canonical representative of a possibly negative integer.
    pub fn reduce(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Rank of a list of vectors, by row reduction.
pub(crate) fn rank(field: &PrimeField, vectors: &[&[u64]]) -> usize {
    let mut rows: Vec<Vec<u64>> = vectors.iter().map(|v| v.to_vec()).collect();
    let width = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..width {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = field.inv(rows[rank][col]);
        for v in rows[rank].iter_mut() {
            *v = field.mul(*v, inv);
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][col] != 0 {
                let factor = rows[r][col];
                for c in col..width {
                    let sub = field.mul(factor, rows[rank][c]);
                    rows[r][c] = field.sub(rows[r][c], sub);
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Echelon form of an independent family of vectors, remembering how each
/// echelon row is written in terms of the original family so that
/// dependencies can be read back as fundamental circuits.
#[derive(Debug, Clone)]
pub(crate) struct TrackedEchelon {
    field: PrimeField,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
    // combos[k][j]: coefficient of original vector j in echelon row k
    combos: Vec<Vec<u64>>,
}

impl TrackedEchelon {
    /// Returns `None` if the vectors are dependent.
    pub(crate) fn new(field: PrimeField, vectors: &[&[u64]]) -> Option<Self> {
        let count = vectors.len();
        let mut ech = Self {
            field,
            rows: Vec::with_capacity(count),
            pivots: Vec::with_capacity(count),
            combos: Vec::with_capacity(count),
        };
        for (j, v) in vectors.iter().enumerate() {
            let mut combo = vec![0; count];
            combo[j] = 1;
            let (row, coeffs) = ech.reduce(v);
            // row = v - sum coeffs[k] * rows[k]
            for (k, &a) in coeffs.iter().enumerate() {
                if a != 0 {
                    for (t, slot) in combo.iter_mut().enumerate() {
                        let s = field.mul(a, ech.combos[k][t]);
                        *slot = field.sub(*slot, s);
                    }
                }
            }
            let pivot = row.iter().position(|&x| x != 0)?;
            let inv = field.inv(row[pivot]);
            let row: Vec<u64> = row.iter().map(|&x| field.mul(x, inv)).collect();
            let combo: Vec<u64> = combo.iter().map(|&x| field.mul(x, inv)).collect();
            ech.rows.push(row);
            ech.pivots.push(pivot);
            ech.combos.push(combo);
        }
        Some(ech)
    }

    /// Reduces `v` by the rows in insertion order; returns the residual and
    /// the multiple of each row that was subtracted.
    fn reduce(&self, v: &[u64]) -> (Vec<u64>, Vec<u64>) {
        let f = &self.field;
        let mut res = v.to_vec();
        let mut coeffs = vec![0; self.rows.len()];
        for (k, row) in self.rows.iter().enumerate() {
            let a = res[self.pivots[k]];
            if a != 0 {
                coeffs[k] = a;
                for (slot, &r) in res.iter_mut().zip(row) {
                    if r != 0 {
                        *slot = f.sub(*slot, f.mul(a, r));
                    }
                }
            }
        }
        (res, coeffs)
    }

    /// Positions of the original vectors in the unique dependency of `v` on
    /// the family, or `None` if `v` is outside their span.
    pub(crate) fn circuit(&self, v: &[u64]) -> Option<Vec<usize>> {
        let (res, coeffs) = self.reduce(v);
        if res.iter().any(|&x| x != 0) {
            return None;
        }
        let f = &self.field;
        let width = self.combos.len();
        let mut total = vec![0; width];
        for (k, &a) in coeffs.iter().enumerate() {
            if a != 0 {
                for (t, slot) in total.iter_mut().enumerate() {
                    *slot = f.add(*slot, f.mul(a, self.combos[k][t]));
                }
            }
        }
        Some((0..width).filter(|&t| total[t] != 0).collect())
    }
}
