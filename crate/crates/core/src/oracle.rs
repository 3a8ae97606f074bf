//! Exact dense reference.
//!
//! Builds full `2ⁿ × 2ⁿ` matrices and diagonalizes them. This is the ground
//! truth the simulator, ansätze and estimators are checked against, and the
//! stand-in for full configuration interaction on small problems.
//!
//! The Hermitian eigensolver is Householder tridiagonalization followed by
//! implicit QL with Wilkinson shifts.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::pauli::{Observable, Pauli, PauliString};
use crate::statevector::{Circuit, Gate};
use crate::{math, Error, Result};

/// Dense matrices are refused above this many qubits.
pub const ORACLE_MAX_QUBITS: usize = 12;

/// Eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.dim).map(|r| self[(r, c)]).collect()
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    /// `self ⊗ other`, `self` on the more significant index.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (a, b) = (self.dim, other.dim);
        CMatrix::from_fn(a * b, |r, c| self[(r / b, c / b)] * other[(r % b, c % b)])
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|a| a.norm_sqr()).sum())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// `v† M v`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        self.bilinear(v, v)
    }

    /// `u† M v`.
    pub fn bilinear(&self, u: &[C64], v: &[C64]) -> C64 {
        u.iter()
            .zip(self.mul_vec(v))
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n > ORACLE_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            n,
            cap: ORACLE_MAX_QUBITS,
        });
    }
    Ok(())
}

/// Single-qubit Pauli as a monomial: column `c` maps to row `perm[c]` with value `val[c]`.
fn pauli_monomial(p: Pauli) -> ([usize; 2], [C64; 2]) {
    let i = C64::new(0.0, 1.0);
    match p {
        Pauli::I => ([0, 1], [ONE, ONE]),
        Pauli::X => ([1, 0], [ONE, ONE]),
        Pauli::Y => ([1, 0], [i, -i]),
        Pauli::Z => ([0, 1], [ONE, -ONE]),
    }
}

/// Kronecker product of single-qubit monomials, qubit 0 most significant.
fn string_monomial(p: &PauliString) -> (Vec<usize>, Vec<C64>) {
    let mut perm = vec![0usize];
    let mut val = vec![ONE];
    for &op in p.ops() {
        let (pp, pv) = pauli_monomial(op);
        let mut nperm = Vec::with_capacity(perm.len() * 2);
        let mut nval = Vec::with_capacity(val.len() * 2);
        for (r, v) in perm.iter().zip(&val) {
            for b in 0..2 {
                nperm.push(2 * r + pp[b]);
                nval.push(v * pv[b]);
            }
        }
        perm = nperm;
        val = nval;
    }
    (perm, val)
}

/// Dense matrix of a single Pauli string.
pub fn pauli_to_matrix(p: &PauliString) -> Result<CMatrix> {
    check_cap(p.n())?;
    let (perm, val) = string_monomial(p);
    let mut m = CMatrix::zeros(1 << p.n());
    for (c, (r, v)) in perm.into_iter().zip(val).enumerate() {
        m[(r, c)] = v;
    }
    Ok(m)
}

/// `Σ aᵢ Pᵢ` as a dense Hermitian matrix.
pub fn observable_to_matrix(o: &Observable) -> Result<CMatrix> {
    check_cap(o.n())?;
    let mut m = CMatrix::zeros(1 << o.n());
    for (c, p) in o.terms() {
        let (perm, val) = string_monomial(p);
        for (col, (r, v)) in perm.into_iter().zip(val).enumerate() {
            m[(r, col)] += v * *c;
        }
    }
    Ok(m)
}

/// Pauli decomposition `cₚ = Tr(P·M)/2ⁿ` of a Hermitian matrix. Costs
/// `O(8ⁿ)`; coefficients below `drop_tol` are dropped.
pub fn observable_from_matrix(m: &CMatrix, drop_tol: f64) -> Result<Observable> {
    let dim = m.dim();
    if !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch {
            got: dim,
            n: dim.trailing_zeros() as usize,
        });
    }
    let n = dim.trailing_zeros() as usize;
    check_cap(n)?;
    if !m.is_hermitian(1e-12) {
        let adj = m.adjoint();
        return Err(Error::NotHermitian(m.max_abs_diff(&adj)));
    }
    let mut terms = Vec::new();
    for code in 0..1usize << (2 * n) {
        let ops = (0..n)
            .map(|q| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][(code >> (2 * (n - 1 - q))) & 3])
            .collect();
        let p = PauliString::new(ops)?;
        let (perm, val) = string_monomial(&p);
        let tr: C64 = perm
            .iter()
            .zip(&val)
            .enumerate()
            .map(|(col, (&r, v))| v * m[(col, r)])
            .sum();
        terms.push((tr.re / dim as f64, p));
    }
    Observable::from_terms_with_tol(n, terms, drop_tol)
}

/// Embeds a `2ᵏ × 2ᵏ` matrix acting on `targets` (first target most significant).
fn embed(n: usize, targets: &[usize], small: &CMatrix) -> CMatrix {
    let bits: Vec<usize> = targets.iter().map(|&q| PauliString::bit(n, q)).collect();
    let mask: usize = bits.iter().fold(0, |a, b| a | b);
    let sub = |x: usize| {
        bits.iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(x & b != 0))
    };
    CMatrix::from_fn(1 << n, |r, c| {
        if r & !mask == c & !mask {
            small[(sub(r), sub(c))]
        } else {
            ZERO
        }
    })
}

fn real2(m: [[f64; 2]; 2]) -> CMatrix {
    CMatrix::from_fn(2, |r, c| C64::new(m[r][c], 0.0))
}

fn real4(m: [[f64; 4]; 4]) -> CMatrix {
    CMatrix::from_fn(4, |r, c| C64::new(m[r][c], 0.0))
}

/// Dense matrix of one gate on `n` qubits.
pub fn gate_matrix(g: &Gate, n: usize) -> Result<CMatrix> {
    check_cap(n)?;
    g.validate(n)?;
    let half = |t: f64| (math::cos(t / 2.0), math::sin(t / 2.0));
    Ok(match g {
        Gate::X(q) => embed(n, &[*q], &real2([[0.0, 1.0], [1.0, 0.0]])),
        Gate::Ry { qubit, theta } => {
            let (c, s) = half(*theta);
            embed(n, &[*qubit], &real2([[c, -s], [s, c]]))
        }
        Gate::Rz { qubit, theta } => {
            let (c, s) = half(*theta);
            let mut m = CMatrix::zeros(2);
            m[(0, 0)] = C64::new(c, -s);
            m[(1, 1)] = C64::new(c, s);
            embed(n, &[*qubit], &m)
        }
        Gate::Cz(a, b) => {
            let m = real4([
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, -1.0],
            ]);
            embed(n, &[*a, *b], &m)
        }
        Gate::Cnot { control, target } => {
            let m = real4([
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
            ]);
            embed(n, &[*control, *target], &m)
        }
        Gate::Givens { a, b, theta } => {
            let (c, s) = (math::cos(*theta), math::sin(*theta));
            let m = real4([
                [1.0, 0.0, 0.0, 0.0],
                [0.0, c, -s, 0.0],
                [0.0, s, c, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]);
            embed(n, &[*a, *b], &m)
        }
        Gate::Exchange { a, b, theta } => {
            let (c, s) = (math::cos(*theta), math::sin(*theta));
            let m = real4([
                [1.0, 0.0, 0.0, 0.0],
                [0.0, c, s, 0.0],
                [0.0, s, -c, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]);
            embed(n, &[*a, *b], &m)
        }
        Gate::PauliRotation { pauli, theta } => {
            let (c, s) = half(*theta);
            CMatrix::identity(1 << n)
                .scale(C64::new(c, 0.0))
                .add(&pauli_to_matrix(pauli)?.scale(C64::new(0.0, -s)))
        }
        Gate::Pauli(p) => pauli_to_matrix(p)?,
    })
}

/// Product of gate matrices, last gate leftmost.
pub fn circuit_unitary(c: &Circuit) -> Result<CMatrix> {
    let mut u = CMatrix::identity(1 << c.n());
    for g in c.gates() {
        u = gate_matrix(g, c.n())?.matmul(&u);
    }
    Ok(u)
}

/// Spectrum of a Hermitian matrix: ascending eigenvalues and matching
/// orthonormal eigenvectors, `eigenvectors[i]` belonging to `eigenvalues[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSpectrum {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<C64>>,
}

/// Spin expectations of one eigenvector under the interleaved spin-orbital layout.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpinLabels {
    pub sz: f64,
    pub sz2: f64,
    pub s2: f64,
}

impl ExactSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `⟨Sz⟩, ⟨Sz²⟩, ⟨S²⟩` per state. Needs an even qubit count.
    pub fn spin_labels(&self) -> Result<Vec<SpinLabels>> {
        if !self.n.is_multiple_of(2) {
            return Err(Error::InvalidConfig(
                "spin labels need an even number of qubits".into(),
            ));
        }
        let spatial = self.n / 2;
        let sz = observable_to_matrix(&crate::fermion::build_sz(spatial)?)?;
        let sz2 = observable_to_matrix(&crate::fermion::build_sz_squared(spatial)?)?;
        let s2 = observable_to_matrix(&crate::fermion::build_s_squared(spatial)?)?;
        Ok(self
            .eigenvectors
            .iter()
            .map(|v| SpinLabels {
                sz: sz.expectation(v).re,
                sz2: sz2.expectation(v).re,
                s2: s2.expectation(v).re,
            })
            .collect())
    }
}

/// Eigenvalues and eigenvectors of `o`, ascending.
///
/// Degenerate eigenvalues (within [`DEGENERACY_TOL`]) get a deterministic
/// basis: the degenerate subspace is re-orthonormalized by pivoted
/// Gram-Schmidt on its projector, and, when `labels` is given (typically
/// `Sz²`), rotated so that `labels` is diagonal inside the block. Within a
/// block, states are ordered by descending `⟨labels⟩`, then by that
/// canonical order. Each eigenvector's largest component is made real and
/// positive. `k` truncates to the lowest `k` states.
pub fn exact_eigensystem(
    o: &Observable,
    k: Option<usize>,
    labels: Option<&Observable>,
) -> Result<ExactSpectrum> {
    let h = observable_to_matrix(o)?;
    let label_matrix = match labels {
        Some(l) => {
            if l.n() != o.n() {
                return Err(Error::QubitMismatch {
                    left: o.n(),
                    right: l.n(),
                });
            }
            Some(observable_to_matrix(l)?)
        }
        None => None,
    };
    let (values, vectors) = hermitian_eigen(&h)?;
    let dim = h.dim();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut vecs: Vec<Vec<C64>> = order.iter().map(|&i| vectors.column(i)).collect();

    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim
            && values[end] - values[start] <= DEGENERACY_TOL * values[start].abs().max(1.0)
        {
            end += 1;
        }
        if end - start > 1 {
            let block = canonical_block(&vecs[start..end], label_matrix.as_ref())?;
            for (slot, v) in vecs[start..end].iter_mut().zip(block) {
                *slot = v;
            }
        }
        start = end;
    }
    for v in &mut vecs {
        fix_phase(v);
    }
    let keep = k.unwrap_or(dim).min(dim);
    Ok(ExactSpectrum {
        n: o.n(),
        eigenvalues: values[..keep].to_vec(),
        eigenvectors: vecs.into_iter().take(keep).collect(),
    })
}

/// `v₁† · matrix(A) · v₂`.
pub fn exact_transition_amplitude(a: &Observable, v1: &[C64], v2: &[C64]) -> Result<C64> {
    let dim = 1usize << a.n();
    for v in [v1, v2] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                got: v.len(),
                n: a.n(),
            });
        }
        let ns: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        if (ns - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(ns));
        }
    }
    Ok(observable_to_matrix(a)?.bilinear(v1, v2))
}

fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(v: &[C64]) -> f64 {
    math::sqrt(v.iter().map(|a| a.norm_sqr()).sum())
}

/// Deterministic orthonormal basis of the span of `block`.
fn canonical_block(block: &[Vec<C64>], labels: Option<&CMatrix>) -> Result<Vec<Vec<C64>>> {
    let m = block.len();
    let dim = block[0].len();
    // Columns of the projector P = Σ v v†, Gram-Schmidt with largest-residual pivoting.
    let column = |j: usize| -> Vec<C64> {
        let mut c = vec![ZERO; dim];
        for v in block {
            let w = v[j].conj();
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi * w;
            }
        }
        c
    };
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut residuals: Vec<Vec<C64>> = (0..dim).map(column).collect();
    for _ in 0..m {
        let mut best = 0;
        let mut best_norm = -1.0;
        for (j, r) in residuals.iter().enumerate() {
            let nr = norm(r);
            if nr > best_norm + 1e-12 {
                best = j;
                best_norm = nr;
            }
        }
        if best_norm <= 1e-12 {
            return Err(Error::NoConvergence);
        }
        let b: Vec<C64> = residuals[best].iter().map(|x| x / best_norm).collect();
        for r in residuals.iter_mut() {
            let proj = dot(&b, r);
            for (ri, bi) in r.iter_mut().zip(&b) {
                *ri -= bi * proj;
            }
        }
        basis.push(b);
    }

    let Some(l) = labels else {
        return Ok(basis);
    };
    let small = CMatrix::from_fn(m, |r, c| l.bilinear(&basis[r], &basis[c]));
    let (lv, w) = hermitian_eigen(&small)?;
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| {
        if (lv[a] - lv[b]).abs() <= DEGENERACY_TOL {
            a.cmp(&b)
        } else {
            lv[b].total_cmp(&lv[a])
        }
    });
    Ok(idx
        .into_iter()
        .map(|j| {
            let mut v = vec![ZERO; dim];
            for (r, b) in basis.iter().enumerate() {
                let coef = w[(r, j)];
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi += bi * coef;
                }
            }
            v
        })
        .collect())
}

fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        let a = x.norm();
        if a > best_abs + 1e-12 {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / best_abs;
        for x in v.iter_mut() {
            *x *= phase;
        }
        v[best] = C64::new(v[best].re, 0.0);
    }
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are unsorted;
/// column `i` of the returned matrix is the eigenvector of value `i`.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.dim();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0)));
    }
    let mut a = a.clone();
    let mut q = CMatrix::identity(n);

    // Householder reduction to Hermitian tridiagonal form, A = Q T Q†.
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|r| a[(r, k)]).collect();
        let xnorm = norm(&x);
        if xnorm < 1e-300 {
            continue;
        }
        let x0abs = x[0].norm();
        let phase = if x0abs > 0.0 { x[0] / x0abs } else { ONE };
        let alpha = -phase * xnorm;
        let mut u = x.clone();
        u[0] -= alpha;
        let unorm = norm(&u);
        if unorm < 1e-300 {
            continue;
        }
        // u†u = 2 so that H = I − u u†
        let scale = core::f64::consts::SQRT_2 / unorm;
        for ui in &mut u {
            *ui *= scale;
        }
        let m = n - k - 1;
        // p = B u on the trailing block
        let mut p = vec![ZERO; m];
        for i in 0..m {
            let mut s = ZERO;
            for j in 0..m {
                s += a[(k + 1 + i, k + 1 + j)] * u[j];
            }
            p[i] = s;
        }
        let kk = dot(&u, &p) / 2.0;
        let qv: Vec<C64> = p.iter().zip(&u).map(|(pi, ui)| pi - kk * ui).collect();
        for i in 0..m {
            for j in 0..m {
                let d = u[i] * qv[j].conj() + qv[i] * u[j].conj();
                a[(k + 1 + i, k + 1 + j)] -= d;
            }
        }
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for r in k + 2..n {
            a[(r, k)] = ZERO;
            a[(k, r)] = ZERO;
        }
        // Q ← Q H
        for r in 0..n {
            let mut s = ZERO;
            for j in 0..m {
                s += q[(r, k + 1 + j)] * u[j];
            }
            for j in 0..m {
                q[(r, k + 1 + j)] -= s * u[j].conj();
            }
        }
    }

    // Diagonal phase similarity making the off-diagonal real and non-negative.
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut e = vec![0.0; n];
    let mut ph = vec![ONE; n];
    for k in 0..n - 1 {
        let off = a[(k + 1, k)];
        let mag = off.norm();
        e[k] = mag;
        ph[k + 1] = if mag > 0.0 { ph[k] * off / mag } else { ph[k] };
    }

    let mut z = vec![vec![0.0; n]; n];
    for i in 0..n {
        z[i][i] = 1.0;
    }
    tqli(&mut d, &mut e, &mut z)?;

    // eigenvectors: Q · diag(ph) · Z
    let mut v = CMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            let mut s = ZERO;
            for j in 0..n {
                s += q[(r, j)] * ph[j] * z[j][c];
            }
            v[(r, c)] = s;
        }
    }
    Ok((d, v))
}

/// Implicit QL on a real symmetric tridiagonal matrix. `e[i]` couples `i`
/// and `i + 1`; `z` accumulates eigenvectors as columns.
fn tqli(d: &mut [f64], e: &mut [f64], z: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = math::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = math::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
