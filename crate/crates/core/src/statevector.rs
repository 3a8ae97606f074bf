//! Dense statevector simulation.
//!
//! Gates are applied in place by stride iteration; no `2ⁿ × 2ⁿ` matrix is
//! ever formed here (the [`oracle`](crate::oracle) module does that for
//! checking). Bit `n-1-q` of a basis index is qubit `q`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::mitigation::ReadoutChannel;
use crate::pauli::{Observable, Pauli, PauliString};
use crate::rng::{rng_from_seed, Rng};
use crate::{math, Error, Result};

/// Hard cap on simulated qubits.
pub const MAX_QUBITS: usize = 24;

const NORM_TOL: f64 = 1e-10;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A circuit element. Rotation angles are in radians.
///
/// * `Ry(θ) = exp(−iθY/2)`, `Rz(θ) = exp(−iθZ/2)`.
/// * `PauliRotation { pauli, theta } = exp(−iθP/2)`.
/// * `Givens` acts as the identity on `|00⟩, |11⟩` and as
///   `[[cos θ, −sin θ], [sin θ, cos θ]]` on `(|01⟩, |10⟩)` of `(a, b)`.
/// * `Exchange` is the real particle-conserving reflection
///   `[[cos θ, sin θ], [sin θ, −cos θ]]` on the same subspace. It is
///   `Givens(θ)` preceded by a sign flip of `|10⟩`; it squares to identity.
/// * `Pauli` applies the string itself (a Pauli-product gate).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Gate {
    X(usize),
    Ry { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    Cz(usize, usize),
    Cnot { control: usize, target: usize },
    PauliRotation { pauli: PauliString, theta: f64 },
    Givens { a: usize, b: usize, theta: f64 },
    Exchange { a: usize, b: usize, theta: f64 },
    Pauli(PauliString),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::X(q) | Gate::Ry { qubit: q, .. } | Gate::Rz { qubit: q, .. } => vec![*q],
            Gate::Cz(a, b) | Gate::Givens { a, b, .. } | Gate::Exchange { a, b, .. } => {
                vec![*a, *b]
            }
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::PauliRotation { pauli, .. } | Gate::Pauli(pauli) => (0..pauli.n()).collect(),
        }
    }

    /// Checks that targets are distinct and fit in `n` qubits.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Gate::PauliRotation { pauli, .. } | Gate::Pauli(pauli) => {
                if pauli.n() != n {
                    return Err(Error::QubitMismatch {
                        left: n,
                        right: pauli.n(),
                    });
                }
            }
            _ => {
                let qs = self.qubits();
                for (i, &q) in qs.iter().enumerate() {
                    if q >= n {
                        return Err(Error::QubitOutOfRange { index: q, n });
                    }
                    if qs[..i].contains(&q) {
                        return Err(Error::RepeatedTarget(q));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Ry { qubit, theta } => Gate::Ry {
                qubit: *qubit,
                theta: -theta,
            },
            Gate::Rz { qubit, theta } => Gate::Rz {
                qubit: *qubit,
                theta: -theta,
            },
            Gate::PauliRotation { pauli, theta } => Gate::PauliRotation {
                pauli: pauli.clone(),
                theta: -theta,
            },
            Gate::Givens { a, b, theta } => Gate::Givens {
                a: *a,
                b: *b,
                theta: -theta,
            },
            Gate::X(_)
            | Gate::Cz(..)
            | Gate::Cnot { .. }
            | Gate::Exchange { .. }
            | Gate::Pauli(_) => self.clone(),
        }
    }

    /// The rotation angle, when the gate has one.
    pub fn angle(&self) -> Option<f64> {
        match self {
            Gate::Ry { theta, .. }
            | Gate::Rz { theta, .. }
            | Gate::PauliRotation { theta, .. }
            | Gate::Givens { theta, .. }
            | Gate::Exchange { theta, .. } => Some(*theta),
            _ => None,
        }
    }

    /// Copy of the gate with a new angle; gates without an angle are returned unchanged.
    pub fn with_angle(&self, angle: f64) -> Gate {
        let mut g = self.clone();
        match &mut g {
            Gate::Ry { theta, .. }
            | Gate::Rz { theta, .. }
            | Gate::PauliRotation { theta, .. }
            | Gate::Givens { theta, .. }
            | Gate::Exchange { theta, .. } => *theta = angle,
            _ => {}
        }
        g
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::X(_) => "X",
            Gate::Ry { .. } => "RY",
            Gate::Rz { .. } => "RZ",
            Gate::Cz(..) => "CZ",
            Gate::Cnot { .. } => "CNOT",
            Gate::PauliRotation { .. } => "PauliRotation",
            Gate::Givens { .. } => "Givens",
            Gate::Exchange { .. } => "Exchange",
            Gate::Pauli(_) => "Pauli",
        }
    }
}

/// Ordered gate list on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self {
            n,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(n: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(n)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    /// X gates that take `|0…0⟩` to basis state `index`.
    pub fn basis_preparation(n: usize, index: usize) -> Result<Self> {
        check_index(n, index)?;
        let gates = (0..n)
            .filter(|&q| index & PauliString::bit(n, q) != 0)
            .map(Gate::X)
            .collect();
        Self::from_gates(n, gates)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.n)?;
        self.gates.push(gate);
        Ok(self)
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &Circuit) -> Result<Circuit> {
        if self.n != other.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut gates = self.gates.clone();
        gates.extend(other.gates.iter().cloned());
        Ok(Circuit { n: self.n, gates })
    }

    /// `U†`: reversed order, each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n: self.n,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("at least one qubit required".into()));
    }
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits { n, cap: MAX_QUBITS });
    }
    Ok(())
}

fn check_index(n: usize, index: usize) -> Result<()> {
    if index >> n != 0 {
        return Err(Error::DimensionMismatch { got: index, n });
    }
    Ok(())
}

/// Dense complex amplitudes of an `n`-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero_state(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        check_index(n, index)?;
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Ok(Self { n, amps })
    }

    /// Wraps raw amplitudes; no normalization check (see [`StateVector::normalized`]).
    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch { got: amps.len(), n });
        }
        Ok(Self { n, amps })
    }

    pub fn from_real(n: usize, amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(n, amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Self {
        let norm = math::sqrt(self.norm_sqr());
        if norm > 0.0 {
            for a in &mut self.amps {
                *a /= norm;
            }
        }
        self
    }

    pub fn check_normalized(&self) -> Result<()> {
        let ns = self.norm_sqr();
        if math::abs(ns - 1.0) > NORM_TOL {
            return Err(Error::NotNormalized(ns));
        }
        Ok(())
    }

    /// Largest `|Im aᵢ|`.
    pub fn max_imag(&self) -> f64 {
        self.amps
            .iter()
            .map(|a| math::abs(a.im))
            .fold(0.0, f64::max)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.same_n(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_squared(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `a·self + b·other` (not renormalized).
    pub fn linear_combination(&self, a: C64, other: &StateVector, b: C64) -> Result<StateVector> {
        self.same_n(other)?;
        let amps = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(StateVector { n: self.n, amps })
    }

    fn same_n(&self, other: &StateVector) -> Result<()> {
        if self.n != other.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply_circuit(&mut self, c: &Circuit) -> Result<()> {
        if c.n != self.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: c.n,
            });
        }
        for g in &c.gates {
            self.apply_gate_unchecked(g);
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        g.validate(self.n)?;
        self.apply_gate_unchecked(g);
        Ok(())
    }

    fn apply_gate_unchecked(&mut self, g: &Gate) {
        match g {
            Gate::X(q) => {
                let bit = self.bit(*q);
                for i in 0..self.dim() {
                    if i & bit == 0 {
                        self.amps.swap(i, i | bit);
                    }
                }
            }
            Gate::Ry { qubit, theta } => {
                let (c, s) = (math::cos(theta / 2.0), math::sin(theta / 2.0));
                self.apply_1q(
                    *qubit,
                    [
                        [C64::new(c, 0.0), C64::new(-s, 0.0)],
                        [C64::new(s, 0.0), C64::new(c, 0.0)],
                    ],
                );
            }
            Gate::Rz { qubit, theta } => {
                let (c, s) = (math::cos(theta / 2.0), math::sin(theta / 2.0));
                self.apply_1q(*qubit, [[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]]);
            }
            Gate::Cz(a, b) => {
                let mask = self.bit(*a) | self.bit(*b);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let (cb, tb) = (self.bit(*control), self.bit(*target));
                for i in 0..self.dim() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amps.swap(i, i | tb);
                    }
                }
            }
            Gate::PauliRotation { pauli, theta } => {
                let (c, s) = (math::cos(theta / 2.0), math::sin(theta / 2.0));
                let rotated = self.apply_pauli(pauli);
                let minus_is = C64::new(0.0, -s);
                for (a, p) in self.amps.iter_mut().zip(rotated.amps) {
                    *a = *a * c + minus_is * p;
                }
            }
            Gate::Givens { a, b, theta } => {
                let (c, s) = (math::cos(*theta), math::sin(*theta));
                self.apply_middle(*a, *b, [[c, -s], [s, c]]);
            }
            Gate::Exchange { a, b, theta } => {
                let (c, s) = (math::cos(*theta), math::sin(*theta));
                self.apply_middle(*a, *b, [[c, s], [s, -c]]);
            }
            Gate::Pauli(p) => {
                *self = self.apply_pauli(p);
            }
        }
    }

    fn bit(&self, q: usize) -> usize {
        PauliString::bit(self.n, q)
    }

    fn apply_1q(&mut self, q: usize, m: [[C64; 2]; 2]) {
        let bit = self.bit(q);
        for i in 0..self.dim() {
            if i & bit == 0 {
                let j = i | bit;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Real 2×2 map on `(|01⟩, |10⟩)` of qubit pair `(a, b)`.
    fn apply_middle(&mut self, a: usize, b: usize, m: [[f64; 2]; 2]) {
        let (ba, bb) = (self.bit(a), self.bit(b));
        for i in 0..self.dim() {
            if i & ba == 0 && i & bb != 0 {
                let j = i ^ ba ^ bb;
                let (x01, x10) = (self.amps[i], self.amps[j]);
                self.amps[i] = x01 * m[0][0] + x10 * m[0][1];
                self.amps[j] = x01 * m[1][0] + x10 * m[1][1];
            }
        }
    }

    /// `P|ψ⟩` as a new state.
    pub fn apply_pauli(&self, p: &PauliString) -> StateVector {
        let flip = p.flip_mask();
        let sign = p.sign_mask();
        let base = i_power(p.y_count());
        let mut out = vec![ZERO; self.dim()];
        for (x, a) in self.amps.iter().enumerate() {
            let s = if (x & sign).count_ones() % 2 == 1 {
                -base
            } else {
                base
            };
            out[x ^ flip] = s * a;
        }
        StateVector {
            n: self.n,
            amps: out,
        }
    }

    /// `⟨ψ|P|ψ⟩` (complex in general; real for a normalized state).
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<C64> {
        if p.n() != self.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: p.n(),
            });
        }
        let flip = p.flip_mask();
        let sign = p.sign_mask();
        let base = i_power(p.y_count());
        let mut acc = ZERO;
        for (x, a) in self.amps.iter().enumerate() {
            let s = if (x & sign).count_ones() % 2 == 1 {
                -base
            } else {
                base
            };
            acc += self.amps[x ^ flip].conj() * s * a;
        }
        Ok(acc)
    }

    /// Exact `Σᵢ aᵢ ⟨ψ|Pᵢ|ψ⟩`.
    pub fn expectation(&self, o: &Observable) -> Result<f64> {
        if o.n() != self.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: o.n(),
            });
        }
        let mut total = 0.0;
        for (c, p) in o.terms() {
            total += c * self.pauli_expectation(p)?.re;
        }
        Ok(total)
    }

    /// `⟨self|O|other⟩` for a real-weighted observable.
    pub fn matrix_element(&self, o: &Observable, other: &StateVector) -> Result<C64> {
        self.same_n(other)?;
        if o.n() != self.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: o.n(),
            });
        }
        let mut acc = ZERO;
        for (c, p) in o.terms() {
            acc += self.inner(&other.apply_pauli(p))? * *c;
        }
        Ok(acc)
    }

    /// Rotates each non-identity factor of `p` into the Z basis (H for X,
    /// H·S† for Y), so measuring Z on the support gives the outcome of `p`.
    pub fn rotated_for_measurement(&self, p: &PauliString) -> Result<StateVector> {
        if p.n() != self.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: p.n(),
            });
        }
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let mut s = self.clone();
        for (q, op) in p.ops().iter().enumerate() {
            match op {
                Pauli::X => s.apply_1q(
                    q,
                    [
                        [C64::new(h, 0.0), C64::new(h, 0.0)],
                        [C64::new(h, 0.0), C64::new(-h, 0.0)],
                    ],
                ),
                // H·S† = 1/√2 [[1, −i], [1, i]]
                Pauli::Y => s.apply_1q(
                    q,
                    [
                        [C64::new(h, 0.0), C64::new(0.0, -h)],
                        [C64::new(h, 0.0), C64::new(0.0, h)],
                    ],
                ),
                Pauli::I | Pauli::Z => {}
            }
        }
        Ok(s)
    }
}

fn i_power(k: usize) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// A circuit applied to a computational basis reference, `U|φ⟩`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreparedState {
    pub reference: usize,
    pub circuit: Circuit,
}

impl PreparedState {
    pub fn new(reference: usize, circuit: Circuit) -> Result<Self> {
        check_index(circuit.n(), reference)?;
        Ok(Self { reference, circuit })
    }

    pub fn n(&self) -> usize {
        self.circuit.n()
    }

    pub fn state(&self) -> Result<StateVector> {
        run_from_basis(&self.circuit, self.reference)
    }

    /// Circuit preparing the state from `|0…0⟩`.
    pub fn full_circuit(&self) -> Result<Circuit> {
        Circuit::basis_preparation(self.n(), self.reference)?.then(&self.circuit)
    }
}

/// Applies `c` to a copy of `reference`.
pub fn run(c: &Circuit, reference: &StateVector) -> Result<StateVector> {
    if c.n() != reference.n() {
        return Err(Error::QubitMismatch {
            left: c.n(),
            right: reference.n(),
        });
    }
    reference.check_normalized()?;
    let mut s = reference.clone();
    s.apply_circuit(c)?;
    Ok(s)
}

pub fn run_from_basis(c: &Circuit, index: usize) -> Result<StateVector> {
    let mut s = StateVector::basis(c.n(), index)?;
    s.apply_circuit(c)?;
    Ok(s)
}

/// `|⟨ψ₁|ψ₂⟩|²` with `ψᵢ = cᵢ|refᵢ⟩`.
///
/// When both references are `|0…0⟩` this is the return probability of the
/// composed circuit `c₁† c₂`; otherwise the inner product is taken directly.
pub fn overlap_squared(c1: &Circuit, c2: &Circuit, ref1: usize, ref2: usize) -> Result<f64> {
    if ref1 == 0 && ref2 == 0 {
        overlap_squared_composed(c1, c2)
    } else {
        overlap_squared_direct(c1, c2, ref1, ref2)
    }
}

/// `|⟨0|c₁† c₂|0⟩|²`.
pub fn overlap_squared_composed(c1: &Circuit, c2: &Circuit) -> Result<f64> {
    let composed = c2.then(&c1.inverse())?;
    let s = run_from_basis(&composed, 0)?;
    Ok(s.amps[0].norm_sqr())
}

pub fn overlap_squared_direct(c1: &Circuit, c2: &Circuit, ref1: usize, ref2: usize) -> Result<f64> {
    run_from_basis(c1, ref1)?.overlap_squared(&run_from_basis(c2, ref2)?)
}

/// Draws `shots` outcomes from a probability vector; returns counts per index.
pub fn sample_counts(probabilities: &[f64], shots: u64, rng: &mut Rng) -> Vec<u64> {
    let mut counts = vec![0u64; probabilities.len()];
    let mut mass: f64 = probabilities.iter().map(|p| p.max(0.0)).sum();
    if mass <= 0.0 {
        return counts;
    }
    // multinomial as a chain of conditional binomials
    let mut left = shots;
    let last = probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (k, &p) in probabilities.iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p.max(0.0);
        if k == last {
            counts[k] = left;
            break;
        }
        let c = crate::rng::binomial(left, p / mass, rng);
        counts[k] = c;
        left -= c;
        mass -= p;
        if mass <= 0.0 {
            counts[k] += left;
            break;
        }
    }
    counts
}

/// Measures all qubits of `state` `shots` times, passing each outcome through
/// the optional readout channel.
pub fn measurement_counts(
    state: &StateVector,
    shots: u64,
    noise: Option<&ReadoutChannel>,
    rng: &mut Rng,
) -> Result<Vec<u64>> {
    if shots < 1 {
        return Err(Error::NoShots);
    }
    let ideal = sample_counts(&state.probabilities(), shots, rng);
    match noise {
        None => Ok(ideal),
        Some(ch) => {
            if ch.n() != state.n() {
                return Err(Error::QubitMismatch {
                    left: state.n(),
                    right: ch.n(),
                });
            }
            Ok(ch.apply_to_counts(&ideal, rng))
        }
    }
}

/// Mean and sample variance of the ±1 outcomes of a Pauli measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PauliSample {
    pub mean: f64,
    pub variance: f64,
    pub shots: u64,
}

impl PauliSample {
    /// Variance of the mean estimate, `variance / shots`.
    pub fn variance_of_mean(&self) -> f64 {
        self.variance / self.shots as f64
    }
}

/// Outcome counts for measuring `p` (after basis rotation) on every qubit.
pub fn pauli_measurement_counts(
    p: &PauliString,
    s: &StateVector,
    shots: u64,
    noise: Option<&ReadoutChannel>,
    seed: u64,
) -> Result<Vec<u64>> {
    if shots < 1 {
        return Err(Error::NoShots);
    }
    let rotated = s.rotated_for_measurement(p)?;
    let mut rng = rng_from_seed(seed);
    measurement_counts(&rotated, shots, noise, &mut rng)
}

/// Parity expectation `Σ_y w(y)·(−1)^{|y ∧ support|}` over a (quasi-)distribution.
pub fn parity_expectation(weights: &[f64], support_mask: usize) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(y, w)| {
            if (y & support_mask).count_ones() % 2 == 1 {
                -w
            } else {
                *w
            }
        })
        .sum()
}

/// Samples the ±1 outcome of measuring `p` on `s`.
pub fn sample_pauli_expectation(
    p: &PauliString,
    s: &StateVector,
    shots: u64,
    noise: Option<&ReadoutChannel>,
    seed: u64,
) -> Result<PauliSample> {
    let counts = pauli_measurement_counts(p, s, shots, noise, seed)?;
    let support = p.support_mask();
    let plus: u64 = counts
        .iter()
        .enumerate()
        .filter(|(y, _)| (y & support).count_ones().is_multiple_of(2))
        .map(|(_, c)| c)
        .sum();
    Ok(pauli_sample_from_plus(plus, shots))
}

pub(crate) fn pauli_sample_from_plus(plus: u64, shots: u64) -> PauliSample {
    let n = shots as f64;
    let mean = (2.0 * plus as f64 - n) / n;
    // unbiased sample variance of ±1 outcomes
    let variance = if shots > 1 {
        (1.0 - mean * mean) * n / (n - 1.0)
    } else {
        0.0
    };
    PauliSample {
        mean,
        variance: variance.max(0.0),
        shots,
    }
}

/// Estimated probability and its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbabilitySample {
    pub estimate: f64,
    pub std_error: f64,
    pub shots: u64,
}

/// Fraction of all-zeros outcomes when measuring `state`.
pub fn sample_zero_probability(
    state: &StateVector,
    shots: u64,
    noise: Option<&ReadoutChannel>,
    seed: u64,
) -> Result<ProbabilitySample> {
    let mut rng = rng_from_seed(seed);
    let counts = measurement_counts(state, shots, noise, &mut rng)?;
    let p = counts[0] as f64 / shots as f64;
    Ok(ProbabilitySample {
        estimate: p,
        std_error: math::sqrt(p * (1.0 - p) / shots as f64),
        shots,
    })
}

/// Return probability of `|0…0⟩` after running `c` on `|0…0⟩`.
pub fn sample_return_probability(
    c: &Circuit,
    shots: u64,
    noise: Option<&ReadoutChannel>,
    seed: u64,
) -> Result<ProbabilitySample> {
    if shots < 1 {
        return Err(Error::NoShots);
    }
    let state = run_from_basis(c, 0)?;
    sample_zero_probability(&state, shots, noise, seed)
}

/// Sampled energy: per-term samples plus the combined mean.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampledExpectation {
    pub value: f64,
    /// `(coefficient, sample)` per non-identity term, in observable order.
    pub terms: Vec<(f64, PauliSample)>,
}

impl SampledExpectation {
    /// `(cᵢ, variance of the mean of Pᵢ)` pairs for error-bar formulas.
    pub fn error_terms(&self) -> Vec<(f64, f64)> {
        self.terms
            .iter()
            .map(|(c, s)| (*c, s.variance_of_mean()))
            .collect()
    }
}

/// Estimates `⟨O⟩` by sampling each non-identity term independently with
/// `shots` shots. Term `k` uses seed `derive_seed(seed, k)`.
pub fn sample_expectation(
    o: &Observable,
    s: &StateVector,
    shots: u64,
    noise: Option<&ReadoutChannel>,
    mitigation: Option<&crate::mitigation::ConfusionMatrix>,
    seed: u64,
) -> Result<SampledExpectation> {
    if o.n() != s.n() {
        return Err(Error::QubitMismatch {
            left: s.n(),
            right: o.n(),
        });
    }
    let mut value = 0.0;
    let mut terms = Vec::new();
    for (k, (c, p)) in o.terms().iter().enumerate() {
        if p.is_identity() {
            value += c;
            continue;
        }
        let term_seed = crate::rng::derive_seed(seed, k as u64);
        let sample = match mitigation {
            None => sample_pauli_expectation(p, s, shots, noise, term_seed)?,
            Some(cm) => {
                let counts = pauli_measurement_counts(p, s, shots, noise, term_seed)?;
                let quasi = crate::mitigation::mitigate(&counts, cm)?;
                let mean =
                    parity_expectation(&quasi.probabilities, p.support_mask()).clamp(-1.0, 1.0);
                let n = shots as f64;
                let variance = if shots > 1 {
                    (1.0 - mean * mean) * n / (n - 1.0)
                } else {
                    0.0
                };
                PauliSample {
                    mean,
                    variance,
                    shots,
                }
            }
        };
        value += c * sample.mean;
        terms.push((*c, sample));
    }
    Ok(SampledExpectation { value, terms })
}

/// Shot settings for sampled evaluation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sampling {
    pub shots: u64,
    pub noise: Option<ReadoutChannel>,
    /// Applied to every measured histogram when present.
    pub mitigation: Option<crate::mitigation::ConfusionMatrix>,
}

impl Sampling {
    pub fn new(shots: u64) -> Self {
        Self {
            shots,
            noise: None,
            mitigation: None,
        }
    }
}

/// Exact statevector evaluation or finite-shot sampling.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    #[default]
    Exact,
    Sampled(Sampling),
}

impl Mode {
    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact)
    }

    /// `⟨O⟩` on `s`; `seed` is ignored in exact mode.
    pub fn energy(&self, o: &Observable, s: &StateVector, seed: u64) -> Result<f64> {
        match self {
            Mode::Exact => s.expectation(o),
            Mode::Sampled(sm) => Ok(sample_expectation(
                o,
                s,
                sm.shots,
                sm.noise.as_ref(),
                sm.mitigation.as_ref(),
                seed,
            )?
            .value),
        }
    }

    /// `|⟨a|b⟩|²`. Sampled mode measures the return probability of the
    /// composed circuit `prep(a)† prep(b)` on `|0…0⟩`.
    pub fn overlap_squared(&self, a: &PreparedState, b: &PreparedState, seed: u64) -> Result<f64> {
        match self {
            Mode::Exact => overlap_squared_direct(&a.circuit, &b.circuit, a.reference, b.reference),
            Mode::Sampled(sm) => Ok(sample_overlap(a, b, sm, seed)?.estimate),
        }
    }
}

/// Sampled `|⟨a|b⟩|²` with its binomial standard error.
pub fn sample_overlap(
    a: &PreparedState,
    b: &PreparedState,
    sampling: &Sampling,
    seed: u64,
) -> Result<ProbabilitySample> {
    let composed = b.full_circuit()?.then(&a.full_circuit()?.inverse())?;
    let state = run_from_basis(&composed, 0)?;
    match &sampling.mitigation {
        None => sample_zero_probability(&state, sampling.shots, sampling.noise.as_ref(), seed),
        Some(cm) => {
            let mut rng = rng_from_seed(seed);
            let counts =
                measurement_counts(&state, sampling.shots, sampling.noise.as_ref(), &mut rng)?;
            let p = crate::mitigation::mitigate(&counts, cm)?.probabilities[0];
            let pc = p.clamp(0.0, 1.0);
            Ok(ProbabilitySample {
                estimate: p,
                std_error: math::sqrt(pc * (1.0 - pc) / sampling.shots as f64),
                shots: sampling.shots,
            })
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::oracle::{circuit_unitary, observable_to_matrix};
    use core::f64::consts::PI;
    use proptest::prelude::*;
    use rand::Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    pub(crate) fn random_circuit(n: usize, len: usize, rng: &mut crate::rng::Rng) -> Circuit {
        let mut c = Circuit::new(n).unwrap();
        for _ in 0..len {
            let q = rng.random_range(0..n);
            let mut r = rng.random_range(0..n);
            if n > 1 {
                while r == q {
                    r = rng.random_range(0..n);
                }
            }
            let theta = rng.random_range(-PI..PI);
            let kind = if n > 1 {
                rng.random_range(0..9)
            } else {
                rng.random_range(0..3)
            };
            let g = match kind {
                0 => Gate::X(q),
                1 => Gate::Ry { qubit: q, theta },
                2 => Gate::Rz { qubit: q, theta },
                3 => Gate::Cz(q, r),
                4 => Gate::Cnot {
                    control: q,
                    target: r,
                },
                5 => {
                    let ops = (0..n)
                        .map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)])
                        .collect();
                    Gate::PauliRotation {
                        pauli: PauliString::new(ops).unwrap(),
                        theta,
                    }
                }
                6 => Gate::Givens { a: q, b: r, theta },
                7 => Gate::Exchange { a: q, b: r, theta },
                _ => {
                    let ops = (0..n)
                        .map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)])
                        .collect();
                    Gate::Pauli(PauliString::new(ops).unwrap())
                }
            };
            c.push(g).unwrap();
        }
        c
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(3).unwrap();
        let s = run(&c, &StateVector::zero_state(3).unwrap()).unwrap();
        assert_eq!(s, StateVector::zero_state(3).unwrap());
    }

    #[test]
    fn ry_pi_flips() {
        let c = Circuit::from_gates(
            1,
            vec![Gate::Ry {
                qubit: 0,
                theta: PI,
            }],
        )
        .unwrap();
        let s = run_from_basis(&c, 0).unwrap();
        assert!((s.amplitudes()[1].norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        let c = Circuit::from_gates(3, vec![Gate::X(0)]).unwrap();
        let s = run_from_basis(&c, 0).unwrap();
        assert_eq!(s.amplitudes()[0b100], ONE);
    }

    #[test]
    fn gate_validation() {
        let mut c = Circuit::new(2).unwrap();
        assert_eq!(
            c.push(Gate::Cz(0, 0)).unwrap_err(),
            Error::RepeatedTarget(0)
        );
        assert_eq!(
            c.push(Gate::X(2)).unwrap_err(),
            Error::QubitOutOfRange { index: 2, n: 2 }
        );
        assert!(matches!(
            c.push(Gate::Pauli(ps("XYZ"))).unwrap_err(),
            Error::QubitMismatch { .. }
        ));
        assert_eq!(
            Circuit::new(25).unwrap_err(),
            Error::TooManyQubits {
                n: 25,
                cap: MAX_QUBITS
            }
        );
    }

    #[test]
    fn run_rejects_mismatched_reference() {
        let c = Circuit::new(2).unwrap();
        assert!(run(&c, &StateVector::zero_state(3).unwrap()).is_err());
    }

    #[test]
    fn simple_expectations() {
        let z = Observable::parse_terms([(1.0, "Z")]).unwrap();
        let x = Observable::parse_terms([(1.0, "X")]).unwrap();
        let zero = StateVector::zero_state(1).unwrap();
        assert_eq!(zero.expectation(&z).unwrap(), 1.0);
        let plus = run_from_basis(
            &Circuit::from_gates(
                1,
                vec![Gate::Ry {
                    qubit: 0,
                    theta: PI / 2.0,
                }],
            )
            .unwrap(),
            0,
        )
        .unwrap();
        assert!((plus.expectation(&x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circuits_match_dense_unitary() {
        let mut rng = rng_from_seed(5);
        for n in 1..=5 {
            for _ in 0..10 {
                let c = random_circuit(n, 25, &mut rng);
                let u = circuit_unitary(&c).unwrap();
                for index in [0, (1 << n) - 1, rng.random_range(0..1 << n)] {
                    let s = run_from_basis(&c, index).unwrap();
                    for row in 0..1 << n {
                        assert!((s.amplitudes()[row] - u[(row, index)]).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn expectation_matches_dense_quadratic_form() {
        let mut rng = rng_from_seed(8);
        for n in 1..=4 {
            for _ in 0..10 {
                let terms = (0..6).map(|_| {
                    let ops = (0..n)
                        .map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)])
                        .collect();
                    (rng.random_range(-1.0..1.0), PauliString::new(ops).unwrap())
                });
                let o = Observable::from_terms(n, terms.collect::<Vec<_>>()).unwrap();
                let s = run_from_basis(&random_circuit(n, 20, &mut rng), 0).unwrap();
                let dense = observable_to_matrix(&o).unwrap();
                let want = dense.expectation(s.amplitudes());
                assert!(want.im.abs() < 1e-12);
                assert!((s.expectation(&o).unwrap() - want.re).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_preserved_over_many_circuits() {
        let mut rng = rng_from_seed(13);
        for i in 0..1000 {
            let n = 1 + i % 5;
            let s = run_from_basis(&random_circuit(n, 30, &mut rng), 0).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn overlap_basic_cases() {
        let id = Circuit::new(2).unwrap();
        let x0 = Circuit::from_gates(2, vec![Gate::X(0)]).unwrap();
        assert!((overlap_squared(&id, &id, 0, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!(overlap_squared(&id, &x0, 0, 0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn overlap_paths_agree_and_are_symmetric() {
        let mut rng = rng_from_seed(17);
        for n in 1..=4 {
            for _ in 0..20 {
                let c1 = random_circuit(n, 15, &mut rng);
                let c2 = random_circuit(n, 15, &mut rng);
                let composed = overlap_squared_composed(&c1, &c2).unwrap();
                let direct = overlap_squared_direct(&c1, &c2, 0, 0).unwrap();
                assert!((composed - direct).abs() < 1e-12);
                assert!((overlap_squared(&c2, &c1, 0, 0).unwrap() - composed).abs() < 1e-12);
                // a global phase (Pauli rotation by the identity) is invisible
                let mut phased = c2.clone();
                phased
                    .push(Gate::PauliRotation {
                        pauli: PauliString::identity(n),
                        theta: 1.234,
                    })
                    .unwrap();
                assert!((overlap_squared(&c1, &phased, 0, 0).unwrap() - composed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pauli_rotation_by_pi_is_minus_i_p() {
        // exp(−iπP/2) = −iP: applied twice gives −I
        let mut rng = rng_from_seed(3);
        let c = random_circuit(3, 10, &mut rng);
        let s = run_from_basis(&c, 0).unwrap();
        let p = ps("XZY");
        let mut twice = s.clone();
        twice
            .apply_gate(&Gate::PauliRotation {
                pauli: p.clone(),
                theta: PI,
            })
            .unwrap();
        twice
            .apply_gate(&Gate::PauliRotation {
                pauli: p.clone(),
                theta: PI,
            })
            .unwrap();
        let inner = s.inner(&twice).unwrap();
        assert!((inner - C64::new(-1.0, 0.0)).norm() < 1e-12);
        let mut once = s.clone();
        once.apply_gate(&Gate::PauliRotation {
            pauli: p.clone(),
            theta: PI,
        })
        .unwrap();
        assert!((s.apply_pauli(&p).overlap_squared(&once).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_sampling_cases() {
        let zero = StateVector::zero_state(1).unwrap();
        let s = sample_pauli_expectation(&ps("Z"), &zero, 100, None, 1).unwrap();
        assert_eq!((s.mean, s.variance), (1.0, 0.0));

        let bell = run_from_basis(
            &Circuit::from_gates(
                2,
                vec![
                    Gate::Ry {
                        qubit: 0,
                        theta: PI / 2.0,
                    },
                    Gate::Cnot {
                        control: 0,
                        target: 1,
                    },
                ],
            )
            .unwrap(),
            0,
        )
        .unwrap();
        let zz = sample_pauli_expectation(&ps("ZZ"), &bell, 1000, None, 2).unwrap();
        assert_eq!(zz.mean, 1.0);
        let xx = sample_pauli_expectation(&ps("XX"), &bell, 1000, None, 2).unwrap();
        assert_eq!(xx.mean, 1.0);
        let yy = sample_pauli_expectation(&ps("YY"), &bell, 1000, None, 2).unwrap();
        assert_eq!(yy.mean, -1.0);
    }

    #[test]
    fn x_on_zero_is_unbiased_coin() {
        let shots = 100_000;
        let zero = StateVector::zero_state(1).unwrap();
        let s = sample_pauli_expectation(&ps("X"), &zero, shots, None, 99).unwrap();
        assert!(s.mean.abs() < 5.0 / (shots as f64).sqrt());
        assert!((s.variance - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_shots_rejected() {
        let zero = StateVector::zero_state(1).unwrap();
        assert_eq!(
            sample_pauli_expectation(&ps("Z"), &zero, 0, None, 1),
            Err(Error::NoShots)
        );
        assert_eq!(
            sample_return_probability(&Circuit::new(1).unwrap(), 0, None, 1),
            Err(Error::NoShots)
        );
    }

    #[test]
    fn return_probability_cases() {
        let id = Circuit::new(2).unwrap();
        assert_eq!(
            sample_return_probability(&id, 500, None, 1)
                .unwrap()
                .estimate,
            1.0
        );
        let x = Circuit::from_gates(2, vec![Gate::X(1)]).unwrap();
        assert_eq!(
            sample_return_probability(&x, 500, None, 1)
                .unwrap()
                .estimate,
            0.0
        );
        let half = Circuit::from_gates(
            1,
            vec![Gate::Ry {
                qubit: 0,
                theta: PI / 2.0,
            }],
        )
        .unwrap();
        let r = sample_return_probability(&half, 10_000, None, 4).unwrap();
        assert!((r.estimate - 0.5).abs() < 5.0 * r.std_error);
    }

    #[test]
    fn sampled_expectation_converges_to_exact() {
        let mut rng = rng_from_seed(21);
        let o =
            Observable::parse_terms([(0.7, "XZ"), (-0.4, "YY"), (0.2, "ZI"), (1.5, "II")]).unwrap();
        let mut within = 0;
        for trial in 0..50 {
            let s = run_from_basis(&random_circuit(2, 12, &mut rng), 0).unwrap();
            let exact = s.expectation(&o).unwrap();
            let sampled = sample_expectation(&o, &s, 20_000, None, None, trial).unwrap();
            let sigma: f64 = sampled
                .error_terms()
                .iter()
                .map(|(c, v)| c * c * v)
                .sum::<f64>()
                .sqrt();
            if (sampled.value - exact).abs() <= 5.0 * sigma.max(1e-12) {
                within += 1;
            }
        }
        assert_eq!(within, 50);
    }

    #[test]
    fn same_seed_same_counts() {
        let s = run_from_basis(&random_circuit(3, 10, &mut rng_from_seed(1)), 0).unwrap();
        let a = pauli_measurement_counts(&ps("XYZ"), &s, 1000, None, 42).unwrap();
        let b = pauli_measurement_counts(&ps("XYZ"), &s, 1000, None, 42).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn inverse_undoes_circuit(seed in 0u64..1000, n in 1usize..5) {
            let mut rng = rng_from_seed(seed);
            let c = random_circuit(n, 12, &mut rng);
            let both = c.then(&c.inverse()).unwrap();
            let s = run_from_basis(&both, 0).unwrap();
            prop_assert!((s.amplitudes()[0].norm_sqr() - 1.0).abs() < 1e-10);
        }
    }
}
