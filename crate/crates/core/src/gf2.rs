//! Linear-algebraic model of deterministic schedules.
//!
//! Playing edge `(i, j)` acts on a configuration as the matrix
//! `A_{i,j} = I + Δ_{i,j} + Δ_{j,i}` over GF(2). A finite schedule composes
//! to a single matrix, and a periodic edge schedule stabilizes the system
//! from every start iff that matrix is nilpotent.
//!
//! Composition order: the first-scheduled edge is the leftmost factor, and
//! configurations act as row vectors (`x ↦ x·M`), so applying the matrix
//! replays the schedule in time order. The same convention makes the
//! integer product equal `I + C` where `C` counts increasing-label walks
//! from row index to column index.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Configuration;
use crate::graph::Graph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("index {0} out of range for order {1}")]
    IndexOutOfRange(usize, usize),
    #[error("edge ({0}, {1}) is not in the graph")]
    NotAnEdge(usize, usize),
    #[error("labeling is not a bijection onto 1..=m")]
    BadLabeling,
    #[error("minor order {0} out of range 1..={1}")]
    BadMinorOrder(usize, usize),
}

/// A square matrix over GF(2) with rows packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gf2Matrix {
    n: usize,
    wpr: usize,
    rows: Vec<u64>,
}

impl Gf2Matrix {
    pub fn zero(n: usize) -> Self {
        let wpr = n.div_ceil(64).max(1);
        Gf2Matrix {
            n,
            wpr,
            rows: vec![0; n * wpr],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.wpr + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let w = &mut self.rows[i * self.wpr + j / 64];
        if value {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|&w| w == 0)
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.wpr..(i + 1) * self.wpr]
    }

    pub fn mul(&self, other: &Gf2Matrix) -> Gf2Matrix {
        assert_eq!(self.n, other.n);
        let mut out = Gf2Matrix::zero(self.n);
        for i in 0..self.n {
            let mut acc = vec![0u64; self.wpr];
            for (w, &word) in self.row(i).iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let k = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    for (a, &b) in acc.iter_mut().zip(other.row(k)) {
                        *a ^= b;
                    }
                }
            }
            out.rows[i * self.wpr..(i + 1) * self.wpr].copy_from_slice(&acc);
        }
        out
    }

    /// Right-multiplies by the update matrix of edge `(u, v)` in place:
    /// columns `u` and `v` both become their XOR.
    fn push_edge(&mut self, u: usize, v: usize) {
        for i in 0..self.n {
            let b = self.get(i, u) ^ self.get(i, v);
            self.set(i, u, b);
            self.set(i, v, b);
        }
    }

    /// Applies the matrix to a configuration as a row vector: the XOR of
    /// the rows selected by the 1-bits of `x`.
    pub fn apply(&self, x: &Configuration) -> Configuration {
        assert_eq!(x.n(), self.n);
        let mut out = Configuration::zeros(self.n);
        for i in 0..self.n {
            if x.get(i) {
                for j in 0..self.n {
                    if self.get(i, j) {
                        out.set(j, !out.get(j));
                    }
                }
            }
        }
        out
    }

    /// True iff `M^n = 0`, decided by repeated squaring.
    pub fn is_nilpotent(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut p = self.clone();
        let mut exponent = 1usize;
        while exponent < self.n {
            if p.is_zero() {
                return true;
            }
            p = p.mul(&p);
            exponent *= 2;
        }
        p.is_zero()
    }
}

impl std::fmt::Display for Gf2Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n {
            for j in 0..self.n {
                write!(f, "{}", if self.get(i, j) { 1 } else { 0 })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

/// `A_{i,j} = I + Δ_{i,j} + Δ_{j,i}`: the one-step update matrix of an edge.
pub fn update_matrix(e: (usize, usize), n: usize) -> Result<Gf2Matrix, Gf2Error> {
    let (i, j) = e;
    if i >= n {
        return Err(Gf2Error::IndexOutOfRange(i, n));
    }
    if j >= n {
        return Err(Gf2Error::IndexOutOfRange(j, n));
    }
    if i == j {
        return Err(Gf2Error::IndexOutOfRange(i, n));
    }
    let mut m = Gf2Matrix::identity(n);
    m.set(i, j, true);
    m.set(j, i, true);
    Ok(m)
}

/// Product of update matrices in schedule order (first edge leftmost), so
/// that [`Gf2Matrix::apply`] plays the edges in sequence order.
pub fn schedule_matrix(g: &Graph, seq: &[(usize, usize)]) -> Result<Gf2Matrix, Gf2Error> {
    let mut m = Gf2Matrix::identity(g.n());
    for &(u, v) in seq {
        if !g.has_edge(u, v) {
            return Err(Gf2Error::NotAnEdge(u, v));
        }
        m.push_edge(u, v);
    }
    Ok(m)
}

/// A square integer matrix with arbitrary-precision entries.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(n: usize) -> Self {
        IntMatrix {
            n,
            entries: vec![BigInt::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.entries[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigInt) {
        self.entries[i * self.n + j] = value;
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = IntMatrix::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let cell = &mut out.entries[i * n + j];
                        *cell += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a += b;
        }
        out
    }

    /// Elementwise reduction modulo 2.
    pub fn mod2(&self) -> Gf2Matrix {
        let mut m = Gf2Matrix::zero(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j).is_odd() {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    pub fn trace(&self) -> BigInt {
        (0..self.n).map(|i| self.get(i, i).clone()).sum()
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        let n = self.n;
        if n == 0 {
            return BigInt::one();
        }
        let mut a: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).clone()).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = num / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * a[n - 1][n - 1].clone()
    }

    fn submatrix(&self, rows: &[usize]) -> IntMatrix {
        let p = rows.len();
        let mut m = IntMatrix::zero(p);
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in rows.iter().enumerate() {
                m.set(i, j, self.get(r, c).clone());
            }
        }
        m
    }

    /// The exact sum of all `p × p` principal minors.
    pub fn principal_minor_sum(&self, p: usize) -> Result<BigInt, Gf2Error> {
        use itertools::Itertools;
        if p == 0 || p > self.n {
            return Err(Gf2Error::BadMinorOrder(p, self.n));
        }
        let mut sum = BigInt::zero();
        for subset in (0..self.n).combinations(p) {
            sum += self.submatrix(&subset).determinant();
        }
        Ok(sum)
    }

    /// Parity of the principal-minor sum; odd means the mod-2 reduction of
    /// the matrix cannot be nilpotent.
    pub fn principal_minor_parity(&self, p: usize) -> Result<u8, Gf2Error> {
        Ok(if self.principal_minor_sum(p)?.is_odd() {
            1
        } else {
            0
        })
    }
}

impl std::fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

impl std::fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn check_labeling(g: &Graph, order: &[usize]) -> Result<(), Gf2Error> {
    let m = g.m();
    if order.len() != m {
        return Err(Gf2Error::BadLabeling);
    }
    let mut seen = vec![false; m];
    for &e in order {
        if e >= m || seen[e] {
            return Err(Gf2Error::BadLabeling);
        }
        seen[e] = true;
    }
    Ok(())
}

/// Integer product of the `(I + P)` update matrices in label order (label 1
/// leftmost). `order[k]` is the edge index carrying label `k + 1`.
pub fn integer_schedule_matrix(g: &Graph, order: &[usize]) -> Result<IntMatrix, Gf2Error> {
    check_labeling(g, order)?;
    let n = g.n();
    let mut m = IntMatrix::identity(n);
    for &idx in order {
        let (u, v) = g.edge(idx);
        // Right-multiply by (I + P_{u,v}): both columns become their sum.
        for i in 0..n {
            let s = m.get(i, u) + m.get(i, v);
            m.set(i, u, s.clone());
            m.set(i, v, s);
        }
    }
    Ok(m)
}

/// Counts, for every ordered vertex pair `(i, j)`, the walks from `i` to
/// `j` in the doubled-edge digraph whose labels strictly increase. Each
/// undirected edge is usable in either direction under its single label.
/// Computed by depth-first search, independently of the matrix product.
pub fn path_count_matrix(g: &Graph, order: &[usize]) -> Result<IntMatrix, Gf2Error> {
    check_labeling(g, order)?;
    let n = g.n();
    let mut label_of = vec![0usize; g.m()];
    for (k, &idx) in order.iter().enumerate() {
        label_of[idx] = k + 1;
    }
    // Incidence lists sorted by label.
    let mut inc: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (idx, &(u, v)) in g.edges().iter().enumerate() {
        inc[u].push((label_of[idx], v));
        inc[v].push((label_of[idx], u));
    }
    for list in &mut inc {
        list.sort_unstable();
    }

    let mut counts = IntMatrix::zero(n);
    fn dfs(
        inc: &[Vec<(usize, usize)>],
        counts: &mut IntMatrix,
        start: usize,
        cur: usize,
        last_label: usize,
    ) {
        for &(label, next) in &inc[cur] {
            if label > last_label {
                let cell = counts.get(start, next) + 1;
                counts.set(start, next, cell);
                dfs(inc, counts, start, next, label);
            }
        }
    }
    for s in 0..n {
        dfs(&inc, &mut counts, s, s, 0);
    }
    Ok(counts)
}

/// The all-ones lower-triangular matrix `B` raised to the `k`-th integer
/// power; the oracle for the star-strategy recurrence analysis.
pub fn lower_triangular_power(n: usize, k: usize) -> IntMatrix {
    assert!(n >= 1 && k >= 1);
    let mut b = IntMatrix::zero(n);
    for i in 0..n {
        for j in 0..=i {
            b.set(i, j, BigInt::one());
        }
    }
    let mut out = b.clone();
    for _ in 1..k {
        out = out.mul(&b);
    }
    out
}

/// Exact binomial coefficient, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut out = BigInt::one();
    for i in 0..k.min(n - k) {
        out = out * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    out
}
