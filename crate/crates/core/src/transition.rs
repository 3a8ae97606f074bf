//! Transition amplitudes `|⟨ψ₁|A|ψ₂⟩|²`, oscillator strengths and their error bars.
//!
//! The overlap estimator writes `A = Σ aᵢPᵢ` and recovers the squared matrix
//! element from overlaps alone:
//!
//! ```text
//! |⟨ψ₁|A|ψ₂⟩|² = Σᵢ aᵢ² Oᵢ + Σ_{i<j} aᵢaⱼ [2O⁺ᵢⱼ + 2O⁻ᵢⱼ − Oᵢ − Oⱼ − O_{PᵢPⱼ}]
//! ```
//!
//! with `O_V = |⟨ψ₁|V|ψ₂⟩|²`, `Oᵢ = O_{Pᵢ}` and
//! `U_{ij,±} = e^{±iπ/4 Pᵢ} e^{±iπ/4 Pⱼ}`. It requires `⟨ψ₁|ψ₂⟩ = 0`, which is
//! checked. Every overlap is the return probability of a circuit, so the
//! estimator runs on the same hardware model as the eigensolver.
//!
//! `O_{PᵢPⱼ}` uses the product string without its phase: `|…|²` cannot see it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::pauli::{Observable, PauliString};
use crate::rng::derive_seed;
use crate::statevector::{
    run_from_basis, sample_overlap, sample_pauli_expectation, Circuit, Gate, Mode, PreparedState,
    StateVector,
};
use crate::{math, Error, Result};

/// Default bound on `|⟨ψ₁|ψ₂⟩|²`.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;

/// Largest imaginary amplitude accepted by the superposition method.
pub const REAL_TOL: f64 = 1e-10;

type C64 = Complex64;

fn sq(x: f64) -> f64 {
    x * x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `e^{±iπ/4 Pᵢ} e^{±iπ/4 Pⱼ} = ½(I ± iPᵢ)(I ± iPⱼ)` as two Pauli rotations.
pub fn build_u_ij(pi: &PauliString, pj: &PauliString, sign: Sign) -> Result<Circuit> {
    if pi.n() != pj.n() {
        return Err(Error::QubitMismatch {
            left: pi.n(),
            right: pj.n(),
        });
    }
    // exp(−iθP/2) with θ = ∓π/2 is exp(±iπ/4 P)
    let theta = -sign.value() * FRAC_PI_2;
    Circuit::from_gates(
        pi.n(),
        vec![
            Gate::PauliRotation {
                pauli: pj.clone(),
                theta,
            },
            Gate::PauliRotation {
                pauli: pi.clone(),
                theta,
            },
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    Overlap,
    Ancilla,
    Superposition,
}

/// The five overlaps entering one `(i, j)` cross term.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairTerms {
    pub i: usize,
    pub j: usize,
    pub plus: f64,
    pub minus: f64,
    pub single_i: f64,
    pub single_j: f64,
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransitionEstimate {
    /// `max(raw_value, 0)`.
    pub value: f64,
    pub raw_value: f64,
    /// Quadrature-propagated shot noise; `None` in exact mode.
    pub std_error: Option<f64>,
    pub method: Method,
    /// `Oᵢ` per term of `A`.
    pub diagonal: Vec<f64>,
    pub pairs: Vec<PairTerms>,
    /// Number of distinct overlaps evaluated.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransitionOptions {
    pub orthogonality_tol: f64,
    /// Base seed; overlap `k` is sampled with `derive_seed(seed, k)`.
    pub seed: u64,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        Self {
            orthogonality_tol: ORTHOGONALITY_TOL,
            seed: 0,
        }
    }
}

fn check_orthogonal(s1: &StateVector, s2: &StateVector, tol: f64) -> Result<()> {
    let ov = s1.overlap_squared(s2)?;
    if ov > tol {
        return Err(Error::NotOrthogonal { overlap: ov, tol });
    }
    Ok(())
}

/// Overlap estimator on two prepared states.
pub fn transition_amplitude_squared(
    a: &Observable,
    psi1: &PreparedState,
    psi2: &PreparedState,
    mode: &Mode,
    options: &TransitionOptions,
) -> Result<TransitionEstimate> {
    if psi1.n() != psi2.n() {
        return Err(Error::QubitMismatch {
            left: psi1.n(),
            right: psi2.n(),
        });
    }
    if a.n() != psi1.n() {
        return Err(Error::QubitMismatch {
            left: psi1.n(),
            right: a.n(),
        });
    }
    let s1 = psi1.state()?;
    let s2 = psi2.state()?;
    check_orthogonal(&s1, &s2, options.orthogonality_tol)?;
    let mut counter = 0u64;
    let overlap = |v: &Circuit| -> Result<(f64, f64)> {
        match mode {
            Mode::Exact => {
                let mut moved = s2.clone();
                moved.apply_circuit(v)?;
                Ok((s1.overlap_squared(&moved)?, 0.0))
            }
            Mode::Sampled(sm) => {
                let k = counter_next(&mut counter);
                let target = PreparedState::new(psi2.reference, psi2.circuit.then(v)?)?;
                let r = sample_overlap(psi1, &target, sm, derive_seed(options.seed, k))?;
                Ok((r.estimate, r.std_error))
            }
        }
    };
    estimate(a, overlap, !mode.is_exact())
}

fn counter_next(c: &mut u64) -> u64 {
    let k = *c;
    *c += 1;
    k
}

/// Overlap estimator on explicit statevectors (exact mode only).
pub fn transition_amplitude_squared_states(
    a: &Observable,
    s1: &StateVector,
    s2: &StateVector,
    options: &TransitionOptions,
) -> Result<TransitionEstimate> {
    if s1.n() != s2.n() {
        return Err(Error::QubitMismatch {
            left: s1.n(),
            right: s2.n(),
        });
    }
    if a.n() != s1.n() {
        return Err(Error::QubitMismatch {
            left: s1.n(),
            right: a.n(),
        });
    }
    check_orthogonal(s1, s2, options.orthogonality_tol)?;
    let overlap = |v: &Circuit| -> Result<(f64, f64)> {
        let mut moved = s2.clone();
        moved.apply_circuit(v)?;
        Ok((s1.overlap_squared(&moved)?, 0.0))
    };
    estimate(a, overlap, false)
}

fn estimate(
    a: &Observable,
    mut overlap: impl FnMut(&Circuit) -> Result<(f64, f64)>,
    sampled: bool,
) -> Result<TransitionEstimate> {
    let n = a.n();
    let terms = a.terms();
    let m = terms.len();
    let mut evaluations = 0usize;
    let mut eval = |v: &Circuit| {
        evaluations += 1;
        overlap(v)
    };

    let mut diag = Vec::with_capacity(m);
    let mut diag_err = Vec::with_capacity(m);
    for (_, p) in terms {
        let (o, e) = eval(&Circuit::from_gates(n, vec![Gate::Pauli(p.clone())])?)?;
        diag.push(o);
        diag_err.push(e);
    }

    let mut raw = 0.0;
    // coefficient of each overlap in the estimator, for error propagation
    let mut diag_coef: Vec<f64> = terms.iter().map(|(c, _)| c * c).collect();
    let mut var = 0.0;
    for (i, (ci, _)) in terms.iter().enumerate() {
        raw += ci * ci * diag[i];
    }
    let mut pairs = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let (ci, pi) = &terms[i];
            let (cj, pj) = &terms[j];
            let (plus, e_plus) = eval(&build_u_ij(pi, pj, Sign::Plus)?)?;
            let (minus, e_minus) = eval(&build_u_ij(pi, pj, Sign::Minus)?)?;
            let (_, pp) = pi.mul(pj)?;
            let (product, e_pp) = eval(&Circuit::from_gates(n, vec![Gate::Pauli(pp)])?)?;
            let w = ci * cj;
            raw += w * (2.0 * plus + 2.0 * minus - diag[i] - diag[j] - product);
            diag_coef[i] -= w;
            diag_coef[j] -= w;
            var += sq(2.0 * w * e_plus) + sq(2.0 * w * e_minus) + sq(w * e_pp);
            pairs.push(PairTerms {
                i,
                j,
                plus,
                minus,
                single_i: diag[i],
                single_j: diag[j],
                product,
            });
        }
    }
    for (c, e) in diag_coef.iter().zip(&diag_err) {
        var += sq(c * e);
    }
    debug_assert_eq!(evaluations, m + 3 * m * m.saturating_sub(1) / 2);
    Ok(TransitionEstimate {
        value: raw.max(0.0),
        raw_value: raw,
        std_error: if sampled { Some(math::sqrt(var)) } else { None },
        method: Method::Overlap,
        diagonal: diag,
        pairs,
        evaluations,
    })
}

/// `⟨ψ₁|A|ψ₂⟩` from an ancilla-controlled preparation
/// `(|0⟩|ψ₁⟩ + |1⟩|ψ₂⟩)/√2`: `Re = ⟨X⊗A⟩`, `Im = ⟨Y⊗A⟩`. The ancilla is the
/// new qubit 0. No orthogonality is needed.
pub fn transition_amplitude_ancilla(
    a: &Observable,
    psi1: &PreparedState,
    psi2: &PreparedState,
    mode: &Mode,
    seed: u64,
) -> Result<C64> {
    if psi1.n() != psi2.n() {
        return Err(Error::QubitMismatch {
            left: psi1.n(),
            right: psi2.n(),
        });
    }
    if a.n() != psi1.n() {
        return Err(Error::QubitMismatch {
            left: psi1.n(),
            right: a.n(),
        });
    }
    let n = a.n();
    // controlled preparations act on the two halves of the ancilla register
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut amps: Vec<C64> = psi1.state()?.into_amplitudes();
    amps.extend(psi2.state()?.into_amplitudes());
    for x in &mut amps {
        *x *= h;
    }
    let joint = StateVector::from_amplitudes(n + 1, amps)?;
    let mut value = C64::new(0.0, 0.0);
    for (k, (c, p)) in a.terms().iter().enumerate() {
        let mut ops = vec![crate::Pauli::X];
        ops.extend_from_slice(p.ops());
        let xp = PauliString::new(ops.clone())?;
        ops[0] = crate::Pauli::Y;
        let yp = PauliString::new(ops)?;
        let (re, im) = match mode {
            Mode::Exact => (
                joint.pauli_expectation(&xp)?.re,
                joint.pauli_expectation(&yp)?.re,
            ),
            Mode::Sampled(sm) => (
                sample_pauli_expectation(
                    &xp,
                    &joint,
                    sm.shots,
                    None,
                    derive_seed(seed, 2 * k as u64),
                )?
                .mean,
                sample_pauli_expectation(
                    &yp,
                    &joint,
                    sm.shots,
                    None,
                    derive_seed(seed, 2 * k as u64 + 1),
                )?
                .mean,
            ),
        };
        value += C64::new(re, im) * *c;
    }
    Ok(value)
}

/// `⟨ψᵢ|A|ψⱼ⟩ = (⟨+|A|+⟩ − ⟨−|A|−⟩)/2` with `|±⟩ = U(|φᵢ⟩ ± |φⱼ⟩)/√2`.
/// Valid only for real states, which is checked.
pub fn superposition_matrix_element(
    a: &Observable,
    circuit: &Circuit,
    ref_i: usize,
    ref_j: usize,
    mode: &Mode,
    seed: u64,
) -> Result<f64> {
    let n = circuit.n();
    if a.n() != n {
        return Err(Error::QubitMismatch {
            left: n,
            right: a.n(),
        });
    }
    if ref_i == ref_j {
        return Err(Error::InvalidConfig(
            "superposition method needs two distinct references".into(),
        ));
    }
    // odd-Y strings are imaginary and only contribute to Im⟨ψᵢ|A|ψⱼ⟩
    if a.terms().iter().any(|(_, p)| p.y_count() % 2 == 1) {
        return Err(Error::InvalidConfig(
            "superposition method needs a real operator (even number of Y per term)".into(),
        ));
    }
    for r in [ref_i, ref_j] {
        let s = run_from_basis(circuit, r)?;
        if s.max_imag() > REAL_TOL {
            return Err(Error::ComplexAmplitudes(s.max_imag()));
        }
    }
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let branch = |sign: f64| -> Result<StateVector> {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[ref_i] += h;
        amps[ref_j] += sign * h;
        let mut s = StateVector::from_amplitudes(n, amps)?;
        s.apply_circuit(circuit)?;
        Ok(s)
    };
    let plus = mode.energy(a, &branch(1.0)?, derive_seed(seed, 0))?;
    let minus = mode.energy(a, &branch(-1.0)?, derive_seed(seed, 1))?;
    Ok((plus - minus) / 2.0)
}

/// Square of [`superposition_matrix_element`].
pub fn transition_amplitude_superposition(
    a: &Observable,
    circuit: &Circuit,
    ref_i: usize,
    ref_j: usize,
    mode: &Mode,
    seed: u64,
) -> Result<f64> {
    let e = superposition_matrix_element(a, circuit, ref_i, ref_j, mode, seed)?;
    Ok(e * e)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OscillatorStrength {
    pub f: f64,
    /// `|E_j − E_i|`.
    pub gap: f64,
    /// `|⟨Sⱼ|R_α|Sᵢ⟩|²` for α = x, y, z.
    pub amplitudes: [f64; 3],
    pub error: Option<f64>,
}

/// `f = (2/3)·ΔE·Σ_α |⟨Sⱼ|R_α|Sᵢ⟩|²`. The gap is taken as `|E_j − E_i|`,
/// so the argument order of the two states does not matter.
pub fn compose_oscillator_strength(e_i: f64, e_j: f64, amplitudes: [f64; 3]) -> f64 {
    2.0 / 3.0 * (e_j - e_i).abs() * amplitudes.iter().sum::<f64>()
}

/// Oscillator strength from the overlap estimator, one call per dipole axis.
pub fn oscillator_strength(
    e_i: f64,
    e_j: f64,
    dipoles: [&Observable; 3],
    psi_i: &PreparedState,
    psi_j: &PreparedState,
    mode: &Mode,
    options: &TransitionOptions,
) -> Result<OscillatorStrength> {
    let mut amplitudes = [0.0; 3];
    let mut errors = [0.0; 3];
    for (axis, d) in dipoles.iter().enumerate() {
        if d.is_empty() {
            continue;
        }
        let opts = TransitionOptions {
            seed: derive_seed(options.seed, axis as u64),
            ..*options
        };
        let t = transition_amplitude_squared(d, psi_i, psi_j, mode, &opts)?;
        amplitudes[axis] = t.value;
        errors[axis] = t.std_error.unwrap_or(0.0);
    }
    let gap = (e_j - e_i).abs();
    let error = if mode.is_exact() {
        None
    } else {
        Some(2.0 / 3.0 * gap * math::sqrt(errors.iter().map(|e| e * e).sum()))
    };
    Ok(OscillatorStrength {
        f: compose_oscillator_strength(e_i, e_j, amplitudes),
        gap,
        amplitudes,
        error,
    })
}

/// Which variance formula [`energy_error_bar`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ErrorBarFormula {
    /// `ΔH = sqrt((1/N) Σᵢ cᵢ² (ΔPᵢ)²)` with `N` the number of terms.
    #[default]
    AsPublished,
    /// `ΔH = sqrt(Σᵢ cᵢ² (ΔPᵢ)²)`, independent-term propagation.
    Independent,
}

/// Error bar of a sampled energy from `(cᵢ, (ΔPᵢ)²)` pairs.
pub fn energy_error_bar(terms: &[(f64, f64)], formula: ErrorBarFormula) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let s: f64 = terms.iter().map(|(c, v)| c * c * v).sum();
    Ok(match formula {
        ErrorBarFormula::AsPublished => math::sqrt(s / terms.len() as f64),
        ErrorBarFormula::Independent => math::sqrt(s),
    })
}

/// How the spread of repeated amplitude estimates becomes an error bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RepeatSpread {
    /// Sample standard deviation of the realizations.
    #[default]
    StandardDeviation,
    /// Standard deviation divided by `√R`.
    StandardError,
}

/// Mean and sample standard deviation (`n − 1`).
pub fn mean_and_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| sq(v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, math::sqrt(var)))
}

/// First-order propagation through `f = (2/3)·gap·Σ_α A_α`:
///
/// `Δf² = ((2/3) Σ A_α)² Δgap² + ((2/3) gap)² Σ_α ΔA_α²`,
///
/// where `A_α` is the mean of the realizations for axis α and `ΔA_α` their
/// spread. Axes with no realizations count as exactly zero.
pub fn oscillator_error_bar(
    gap: f64,
    gap_error: f64,
    repeats: [&[f64]; 3],
    spread: RepeatSpread,
) -> Result<f64> {
    let mut sum_a = 0.0;
    let mut sum_var = 0.0;
    for r in repeats {
        if r.is_empty() {
            continue;
        }
        let (mean, std) = mean_and_std(r)?;
        let d = match spread {
            RepeatSpread::StandardDeviation => std,
            RepeatSpread::StandardError => std / math::sqrt(r.len() as f64),
        };
        sum_a += mean;
        sum_var += d * d;
    }
    let k = 2.0 / 3.0;
    Ok(math::sqrt(
        sq(k * sum_a * gap_error) + sq(k * gap) * sum_var,
    ))
}

/// Sampled oscillator strength from `repeats` independent amplitude
/// realizations per axis. The reported amplitudes are the realization means.
pub fn sampled_oscillator_strength(
    energies: (f64, f64),
    energy_errors: (f64, f64),
    dipoles: [&Observable; 3],
    psi_i: &PreparedState,
    psi_j: &PreparedState,
    mode: &Mode,
    repeats: usize,
    spread: RepeatSpread,
    options: &TransitionOptions,
) -> Result<(OscillatorStrength, [Vec<f64>; 3])> {
    if repeats < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: repeats,
        });
    }
    let mut real: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (axis, d) in dipoles.iter().enumerate() {
        if d.is_empty() {
            continue;
        }
        for r in 0..repeats {
            let seed = derive_seed(derive_seed(options.seed, axis as u64), r as u64);
            let opts = TransitionOptions { seed, ..*options };
            real[axis].push(transition_amplitude_squared(d, psi_i, psi_j, mode, &opts)?.value);
        }
    }
    let mut amplitudes = [0.0; 3];
    for (a, r) in amplitudes.iter_mut().zip(&real) {
        if !r.is_empty() {
            *a = r.iter().sum::<f64>() / r.len() as f64;
        }
    }
    let (e_i, e_j) = energies;
    let gap = (e_j - e_i).abs();
    let gap_error = math::hypot(energy_errors.0, energy_errors.1);
    let error = oscillator_error_bar(gap, gap_error, [&real[0], &real[1], &real[2]], spread)?;
    let f = compose_oscillator_strength(e_i, e_j, amplitudes);
    Ok((
        OscillatorStrength {
            f,
            gap,
            amplitudes,
            error: Some(error),
        },
        real,
    ))
}
