//! Variational eigensolvers: VQE, SSVQE, MCVQE and VQD.
//!
//! All four share [`SolverConfig`]: an optimizer, an evaluation [`Mode`], a
//! seed and a restart count. Penalty terms (for example `α·Sz²`) are
//! expected to be folded into the Hamiltonian beforehand.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;

use crate::ansatz::Ansatz;
use crate::optim::{
    minimize, parameter_shift_gradient, OptimizationResult, OptimizationTrace, OptimizerConfig,
};
use crate::oracle::{hermitian_eigen, CMatrix};
use crate::pauli::Observable;
use crate::rng::{derive_seed, rng_from_seed};
use crate::statevector::{run_from_basis, Mode, PreparedState, StateVector};
use crate::{math, Error, Result};

/// Overlap² above which a VQD level is flagged as collapsed onto an earlier one.
pub const COLLAPSE_OVERLAP: f64 = 0.5;

/// Largest tolerated `|H̃ᵢⱼ − H̃ⱼᵢ|` in exact mode.
pub const SUBSPACE_SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Algorithm {
    Vqe,
    Ssvqe,
    Mcvqe,
    Vqd,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub optimizer: OptimizerConfig,
    pub mode: Mode,
    /// Seeds initial parameters and every sampled evaluation.
    pub seed: u64,
    /// Extra optimizations from fresh random starts; the lowest final cost wins.
    pub restarts: usize,
    /// Starting parameters per optimization (per level for VQD); random in
    /// `[0, 2π)` where absent.
    pub initial_params: Vec<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            mode: Mode::Exact,
            seed: 0,
            restarts: 0,
            initial_params: Vec::new(),
        }
    }
}

/// How later VQD levels are started.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum VqdInit {
    /// Previous level's optimum plus seeded uniform noise in `[−jitter, jitter]`.
    /// The previous optimum is a stationary point of the deflated cost, so
    /// some jitter is needed to leave it.
    WarmStart {
        jitter: f64,
    },
    Random,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeflationConfig {
    /// One β per earlier level; `None` uses [`default_beta`] for all levels.
    pub betas: Option<Vec<f64>>,
    pub init: VqdInit,
}

impl Default for DeflationConfig {
    fn default() -> Self {
        Self {
            betas: None,
            init: VqdInit::WarmStart { jitter: 0.5 },
        }
    }
}

/// `4·Σ|h_P|` over non-identity terms: twice the bound `2·Σ|h_P|` on the
/// spectral range, so any gap is strictly smaller than the penalty.
pub fn default_beta(h: &Observable) -> f64 {
    4.0 * h.non_identity_l1()
}

/// One converged state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateResult {
    /// Position in solve order (VQD level, SSVQE reference slot, MCVQE root).
    pub level: usize,
    pub energy: f64,
    pub params: Vec<f64>,
    /// Basis reference the circuit acts on.
    pub reference: usize,
    /// MCVQE contraction coefficients over the references.
    pub coefficients: Option<Vec<f64>>,
    /// VQD penalty weights against the earlier levels.
    pub betas: Vec<f64>,
}

/// The `k × k` MCVQE subspace Hamiltonian and its diagonalization.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Subspace {
    /// Off-diagonals from direct inner products (exact mode) or the
    /// superposition estimator (sampled mode).
    pub h_tilde: Vec<Vec<f64>>,
    /// Off-diagonals from the superposition estimator.
    pub h_tilde_superposition: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// `coefficients[r][i]`: weight of reference `i` in root `r`.
    pub coefficients: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Collapse {
    pub level: usize,
    pub earlier: usize,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigensolverResult {
    pub algorithm: Algorithm,
    pub ansatz: Ansatz,
    /// Sorted by ascending energy.
    pub states: Vec<StateResult>,
    /// Exact pairwise `|⟨ψᵢ|ψⱼ⟩|²` in `states` order.
    pub overlaps: Vec<Vec<f64>>,
    /// One trace per optimization (per level for VQD).
    pub traces: Vec<OptimizationTrace>,
    /// Final value of the optimized cost of each optimization.
    pub costs: Vec<f64>,
    pub subspace: Option<Subspace>,
    pub collapses: Vec<Collapse>,
}

impl EigensolverResult {
    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }

    /// Circuit-plus-reference form of state `i`; `None` for contracted MCVQE roots.
    pub fn prepared(&self, i: usize) -> Result<Option<PreparedState>> {
        let s = &self.states[i];
        if s.coefficients.is_some() {
            return Ok(None);
        }
        Ok(Some(PreparedState::new(
            s.reference,
            self.ansatz.build(&s.params)?,
        )?))
    }

    pub fn statevector(&self, i: usize) -> Result<StateVector> {
        state_of(&self.ansatz, &self.states[i], &self.references())
    }

    fn references(&self) -> Vec<usize> {
        let mut refs: Vec<(usize, usize)> =
            self.states.iter().map(|s| (s.level, s.reference)).collect();
        refs.sort();
        refs.into_iter().map(|(_, r)| r).collect()
    }
}

fn state_of(ansatz: &Ansatz, s: &StateResult, refs: &[usize]) -> Result<StateVector> {
    let c = ansatz.build(&s.params)?;
    match &s.coefficients {
        None => run_from_basis(&c, s.reference),
        Some(coef) => {
            let mut amps = vec![Complex64::new(0.0, 0.0); 1 << ansatz.n];
            for (&r, &w) in refs.iter().zip(coef) {
                amps[r] += w;
            }
            let mut v = StateVector::from_amplitudes(ansatz.n, amps)?;
            v.apply_circuit(&c)?;
            Ok(v)
        }
    }
}

/// Basis index with the first `n_electrons` qubits occupied.
pub fn hartree_fock_reference(n_qubits: usize, n_electrons: usize) -> Result<usize> {
    if n_electrons > n_qubits || n_qubits == 0 {
        return Err(Error::InvalidConfig(alloc::format!(
            "{n_electrons} electrons do not fit in {n_qubits} qubits"
        )));
    }
    Ok(((1usize << n_electrons) - 1) << (n_qubits - n_electrons))
}

/// Hartree-Fock reference followed by spin-conserving single excitations
/// (occupied qubit `p` to empty qubit `q` with `p ≡ q mod 2`), ordered by
/// `q − p` and then by descending `p`.
pub fn default_references(n_qubits: usize, n_electrons: usize, k: usize) -> Result<Vec<usize>> {
    let hf = hartree_fock_reference(n_qubits, n_electrons)?;
    let bit = |q: usize| 1usize << (n_qubits - 1 - q);
    let mut singles: Vec<(usize, usize)> = Vec::new();
    for p in 0..n_electrons {
        for q in n_electrons..n_qubits {
            if p % 2 == q % 2 {
                singles.push((p, q));
            }
        }
    }
    singles.sort_by(|a, b| (a.1 - a.0).cmp(&(b.1 - b.0)).then(b.0.cmp(&a.0)));
    let mut refs = vec![hf];
    refs.extend(singles.into_iter().map(|(p, q)| hf ^ bit(p) ^ bit(q)));
    if k > refs.len() {
        return Err(Error::InvalidConfig(alloc::format!(
            "only {} references available, {k} requested",
            refs.len()
        )));
    }
    refs.truncate(k);
    Ok(refs)
}

fn check_problem(h: &Observable, ansatz: &Ansatz, refs: &[usize]) -> Result<()> {
    if h.n() != ansatz.n {
        return Err(Error::QubitMismatch {
            left: ansatz.n,
            right: h.n(),
        });
    }
    for (i, &r) in refs.iter().enumerate() {
        if r >> ansatz.n != 0 {
            return Err(Error::DimensionMismatch {
                got: r,
                n: ansatz.n,
            });
        }
        if refs[..i].contains(&r) {
            return Err(Error::InvalidConfig("references must be distinct".into()));
        }
    }
    Ok(())
}

fn random_params(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect()
}

/// Seeds of sampled evaluations: one fresh seed per evaluation, in call order.
struct EvalSeeds {
    base: u64,
    next: Cell<u64>,
}

impl EvalSeeds {
    fn new(base: u64) -> Self {
        Self {
            base,
            next: Cell::new(0),
        }
    }

    fn take(&self) -> u64 {
        let k = self.next.get();
        self.next.set(k + 1);
        derive_seed(self.base, k)
    }
}

/// Minimizes `cost` from `start` and from `restarts` random points; keeps the best.
fn optimize(
    cost: &dyn Fn(&[f64]) -> Result<f64>,
    ansatz: &Ansatz,
    start: Vec<f64>,
    config: &SolverConfig,
    stream: u64,
) -> Result<OptimizationResult> {
    if start.len() != ansatz.parameter_count() {
        return Err(Error::ParameterCount {
            expected: ansatz.parameter_count(),
            got: start.len(),
        });
    }
    let rules = ansatz.shift_rules();
    let grad = |p: &[f64]| parameter_shift_gradient(cost, p, &rules);
    let mut best: Option<OptimizationResult> = None;
    for attempt in 0..=config.restarts {
        let x0 = if attempt == 0 {
            start.clone()
        } else {
            random_params(
                ansatz.parameter_count(),
                derive_seed(config.seed, (stream << 16) | attempt as u64),
            )
        };
        let mut opt = config.optimizer;
        opt.seed = derive_seed(
            config.optimizer.seed ^ config.seed,
            (stream << 16) | attempt as u64,
        );
        let r = minimize(cost, &grad, &x0, &opt)?;
        if best.as_ref().is_none_or(|b| r.cost < b.cost) {
            best = Some(r);
        }
    }
    Ok(best.unwrap())
}

fn initial(config: &SolverConfig, ansatz: &Ansatz, slot: usize, stream: u64) -> Vec<f64> {
    match config.initial_params.get(slot) {
        Some(p) => p.clone(),
        None => random_params(ansatz.parameter_count(), derive_seed(config.seed, stream)),
    }
}

/// Pairwise exact overlaps².
fn overlap_matrix(states: &[StateVector]) -> Result<Vec<Vec<f64>>> {
    let k = states.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            m[i][j] = if i == j {
                1.0
            } else {
                states[i].overlap_squared(&states[j])?
            };
        }
    }
    Ok(m)
}

fn finish(
    algorithm: Algorithm,
    ansatz: &Ansatz,
    mut states: Vec<StateResult>,
    traces: Vec<OptimizationTrace>,
    costs: Vec<f64>,
    subspace: Option<Subspace>,
    collapses: Vec<Collapse>,
    refs: &[usize],
) -> Result<EigensolverResult> {
    states.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.level.cmp(&b.level)));
    let vectors = states
        .iter()
        .map(|s| state_of(ansatz, s, refs))
        .collect::<Result<Vec<_>>>()?;
    let overlaps = overlap_matrix(&vectors)?;
    Ok(EigensolverResult {
        algorithm,
        ansatz: *ansatz,
        states,
        overlaps,
        traces,
        costs,
        subspace,
        collapses,
    })
}

/// Ground state by direct energy minimization.
pub fn vqe(
    h: &Observable,
    ansatz: &Ansatz,
    reference: usize,
    config: &SolverConfig,
) -> Result<EigensolverResult> {
    check_problem(h, ansatz, &[reference])?;
    let seeds = EvalSeeds::new(derive_seed(config.seed, 0x5EED));
    let cost = |p: &[f64]| {
        config.mode.energy(
            h,
            &run_from_basis(&ansatz.build(p)?, reference)?,
            seeds.take(),
        )
    };
    let r = optimize(&cost, ansatz, initial(config, ansatz, 0, 0), config, 0)?;
    let energy = config.mode.energy(
        h,
        &run_from_basis(&ansatz.build(&r.params)?, reference)?,
        seeds.take(),
    )?;
    let state = StateResult {
        level: 0,
        energy,
        params: r.params,
        reference,
        coefficients: None,
        betas: Vec::new(),
    };
    finish(
        Algorithm::Vqe,
        ansatz,
        vec![state],
        vec![r.trace],
        vec![r.cost],
        None,
        Vec::new(),
        &[reference],
    )
}

/// Energies of `U(θ)|φᵢ⟩` for every reference.
fn reference_energies(
    h: &Observable,
    ansatz: &Ansatz,
    refs: &[usize],
    params: &[f64],
    mode: &Mode,
    seeds: &EvalSeeds,
) -> Result<Vec<f64>> {
    let c = ansatz.build(params)?;
    refs.iter()
        .map(|&r| mode.energy(h, &run_from_basis(&c, r)?, seeds.take()))
        .collect()
}

/// Weighted-subspace search: one shared circuit, cost `Σ wᵢ Eᵢ(θ)`.
/// `weights` defaults to `(k, k−1, …, 1)` and must be strictly decreasing.
pub fn ssvqe(
    h: &Observable,
    ansatz: &Ansatz,
    references: &[usize],
    weights: Option<&[f64]>,
    config: &SolverConfig,
) -> Result<EigensolverResult> {
    check_problem(h, ansatz, references)?;
    let k = references.len();
    if k == 0 {
        return Err(Error::InvalidConfig(
            "at least one reference required".into(),
        ));
    }
    let w: Vec<f64> = match weights {
        Some(w) => w.to_vec(),
        None => (0..k).map(|i| (k - i) as f64).collect(),
    };
    if w.len() != k {
        return Err(Error::InvalidConfig(alloc::format!(
            "{} weights for {k} references",
            w.len()
        )));
    }
    if w.iter().any(|&x| !(x > 0.0)) || w.windows(2).any(|p| !(p[0] > p[1])) {
        return Err(Error::InvalidConfig(
            "SSVQE weights must be positive and strictly decreasing".into(),
        ));
    }
    let seeds = EvalSeeds::new(derive_seed(config.seed, 0x5EED));
    let cost = |p: &[f64]| {
        let e = reference_energies(h, ansatz, references, p, &config.mode, &seeds)?;
        Ok(e.iter().zip(&w).map(|(a, b)| a * b).sum())
    };
    let r = optimize(&cost, ansatz, initial(config, ansatz, 0, 0), config, 0)?;
    let energies = reference_energies(h, ansatz, references, &r.params, &config.mode, &seeds)?;
    let states = energies
        .iter()
        .zip(references)
        .enumerate()
        .map(|(level, (&energy, &reference))| StateResult {
            level,
            energy,
            params: r.params.clone(),
            reference,
            coefficients: None,
            betas: Vec::new(),
        })
        .collect();
    finish(
        Algorithm::Ssvqe,
        ansatz,
        states,
        vec![r.trace],
        vec![r.cost],
        None,
        Vec::new(),
        references,
    )
}

/// Equal-weight subspace search followed by diagonalization of
/// `H̃ᵢⱼ = ⟨φᵢ|U†HU|φⱼ⟩`. Needs a real ansatz.
pub fn mcvqe(
    h: &Observable,
    ansatz: &Ansatz,
    references: &[usize],
    config: &SolverConfig,
) -> Result<EigensolverResult> {
    check_problem(h, ansatz, references)?;
    let k = references.len();
    if k == 0 {
        return Err(Error::InvalidConfig(
            "at least one reference required".into(),
        ));
    }
    let seeds = EvalSeeds::new(derive_seed(config.seed, 0x5EED));
    let cost = |p: &[f64]| {
        Ok(
            reference_energies(h, ansatz, references, p, &config.mode, &seeds)?
                .iter()
                .sum(),
        )
    };
    let r = optimize(&cost, ansatz, initial(config, ansatz, 0, 0), config, 0)?;
    let sub = subspace_hamiltonian(h, ansatz, references, &r.params, &config.mode, seeds.take())?;
    let states = (0..k)
        .map(|root| StateResult {
            level: root,
            energy: sub.eigenvalues[root],
            params: r.params.clone(),
            reference: references[root],
            coefficients: Some(sub.coefficients[root].clone()),
            betas: Vec::new(),
        })
        .collect();
    finish(
        Algorithm::Mcvqe,
        ansatz,
        states,
        vec![r.trace],
        vec![r.cost],
        Some(sub),
        Vec::new(),
        references,
    )
}

/// Builds and diagonalizes the subspace Hamiltonian at `params`.
pub fn subspace_hamiltonian(
    h: &Observable,
    ansatz: &Ansatz,
    references: &[usize],
    params: &[f64],
    mode: &Mode,
    seed: u64,
) -> Result<Subspace> {
    let seeds = EvalSeeds::new(seed);
    let k = references.len();
    let c = ansatz.build(params)?;
    let n = ansatz.n;
    let states = references
        .iter()
        .map(|&r| run_from_basis(&c, r))
        .collect::<Result<Vec<_>>>()?;
    let mut direct = vec![vec![0.0; k]; k];
    let mut sup = vec![vec![0.0; k]; k];
    let element =
        |i: usize, j: usize| -> Result<Complex64> { states[i].matrix_element(h, &states[j]) };
    let mut asym: f64 = 0.0;
    for i in 0..k {
        direct[i][i] = mode.energy(h, &states[i], seeds.take())?;
        sup[i][i] = direct[i][i];
        for j in 0..i {
            let hij = element(i, j)?;
            let hji = element(j, i)?;
            asym = asym.max((hij - hji).norm()).max(hij.im.abs());
            // |±⟩ = U(|φᵢ⟩ ± |φⱼ⟩)/√2
            let s = core::f64::consts::FRAC_1_SQRT_2;
            let mut plus_ref = vec![Complex64::new(0.0, 0.0); 1 << n];
            plus_ref[references[i]] += s;
            plus_ref[references[j]] += s;
            let mut minus_ref = vec![Complex64::new(0.0, 0.0); 1 << n];
            minus_ref[references[i]] += s;
            minus_ref[references[j]] -= s;
            let mut plus = StateVector::from_amplitudes(n, plus_ref)?;
            plus.apply_circuit(&c)?;
            let mut minus = StateVector::from_amplitudes(n, minus_ref)?;
            minus.apply_circuit(&c)?;
            let e_plus = mode.energy(h, &plus, seeds.take())?;
            let e_minus = mode.energy(h, &minus, seeds.take())?;
            let via_sup = (e_plus - e_minus) / 2.0;
            sup[i][j] = via_sup;
            sup[j][i] = via_sup;
            let d = if mode.is_exact() { hij.re } else { via_sup };
            direct[i][j] = d;
            direct[j][i] = d;
        }
    }
    if asym > SUBSPACE_SYMMETRY_TOL {
        return Err(Error::AsymmetricSubspace(asym));
    }
    let m = CMatrix::from_fn(k, |r, col| Complex64::new(direct[r][col], 0.0));
    let (vals, vecs) = hermitian_eigen(&m)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let eigenvalues = order.iter().map(|&i| vals[i]).collect();
    let coefficients = order
        .iter()
        .map(|&col| {
            let mut v: Vec<f64> = (0..k).map(|r| vecs[(r, col)].re).collect();
            // sign convention: largest weight positive
            let big = v
                .iter()
                .copied()
                .fold(0.0f64, |a, x| if x.abs() > a.abs() + 1e-12 { x } else { a });
            if big < 0.0 {
                for x in &mut v {
                    *x = -*x;
                }
            }
            let nrm = math::sqrt(v.iter().map(|x| x * x).sum());
            v.iter().map(|x| x / nrm).collect()
        })
        .collect();
    Ok(Subspace {
        h_tilde: direct,
        h_tilde_superposition: sup,
        eigenvalues,
        coefficients,
    })
}

/// Deflation: level `j` minimizes `E(θ) + Σ_{i<j} βᵢ |⟨ψᵢ|ψ(θ)⟩|²`.
///
/// `references` holds either one reference shared by all levels or one per
/// level. Levels whose converged state has overlap² above
/// [`COLLAPSE_OVERLAP`] with an earlier level are reported in `collapses`.
pub fn vqd(
    h: &Observable,
    ansatz: &Ansatz,
    k: usize,
    references: &[usize],
    deflation: &DeflationConfig,
    config: &SolverConfig,
) -> Result<EigensolverResult> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let refs: Vec<usize> = match references.len() {
        1 => vec![references[0]; k],
        l if l == k => references.to_vec(),
        l => {
            return Err(Error::InvalidConfig(alloc::format!(
                "{l} references for {k} levels"
            )))
        }
    };
    if h.n() != ansatz.n {
        return Err(Error::QubitMismatch {
            left: ansatz.n,
            right: h.n(),
        });
    }
    for &r in &refs {
        if r >> ansatz.n != 0 {
            return Err(Error::DimensionMismatch {
                got: r,
                n: ansatz.n,
            });
        }
    }
    let betas: Vec<f64> = match &deflation.betas {
        Some(b) => {
            if b.len() + 1 < k {
                return Err(Error::InvalidConfig(alloc::format!(
                    "{} betas for {k} levels",
                    b.len()
                )));
            }
            b.clone()
        }
        None => vec![default_beta(h); k.saturating_sub(1)],
    };
    if betas.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::InvalidConfig(
            "deflation betas must be positive".into(),
        ));
    }

    let mut found: Vec<PreparedState> = Vec::new();
    let mut states = Vec::new();
    let mut traces = Vec::new();
    let mut costs = Vec::new();
    let mut collapses = Vec::new();
    for level in 0..k {
        let seeds = EvalSeeds::new(derive_seed(config.seed, 0x5EED + level as u64));
        let reference = refs[level];
        let level_betas = betas[..level].to_vec();
        let cost = |p: &[f64]| {
            let prep = PreparedState::new(reference, ansatz.build(p)?)?;
            let mut c = config.mode.energy(h, &prep.state()?, seeds.take())?;
            for (prev, beta) in found.iter().zip(&level_betas) {
                c += beta * config.mode.overlap_squared(prev, &prep, seeds.take())?;
            }
            Ok(c)
        };
        let start = match (config.initial_params.get(level), level, deflation.init) {
            (Some(p), _, _) => p.clone(),
            (None, 0, _) | (None, _, VqdInit::Random) => {
                initial(config, ansatz, level, level as u64)
            }
            (None, _, VqdInit::WarmStart { jitter }) => {
                let prev: &Vec<f64> = &states
                    .last()
                    .map(|s: &StateResult| s.params.clone())
                    .unwrap();
                let mut rng = rng_from_seed(derive_seed(config.seed, 0x0717 + level as u64));
                prev.iter()
                    .map(|x| x + rng.random_range(-jitter..=jitter))
                    .collect()
            }
        };
        let r = optimize(&cost, ansatz, start, config, level as u64)?;
        let prep = PreparedState::new(reference, ansatz.build(&r.params)?)?;
        let energy = config.mode.energy(h, &prep.state()?, seeds.take())?;
        let sv = prep.state()?;
        for (i, prev) in found.iter().enumerate() {
            let ov = prev.state()?.overlap_squared(&sv)?;
            if ov > COLLAPSE_OVERLAP {
                collapses.push(Collapse {
                    level,
                    earlier: i,
                    overlap: ov,
                });
            }
        }
        found.push(prep);
        states.push(StateResult {
            level,
            energy,
            params: r.params,
            reference,
            coefficients: None,
            betas: level_betas,
        });
        traces.push(r.trace);
        costs.push(r.cost);
    }
    finish(
        Algorithm::Vqd,
        ansatz,
        states,
        traces,
        costs,
        None,
        collapses,
        &refs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{build_sz_squared, TwoSiteModel};
    use crate::optim::Method;
    use crate::oracle::exact_eigensystem;
    use crate::statevector::Sampling;

    fn z() -> Observable {
        Observable::parse_terms([(1.0, "Z")]).unwrap()
    }

    fn cfg(seed: u64) -> SolverConfig {
        SolverConfig {
            seed,
            ..Default::default()
        }
    }

    fn model() -> Observable {
        let h = TwoSiteModel::default().hamiltonian().unwrap();
        build_sz_squared(2).unwrap().scale_add(4.0, &h).unwrap()
    }

    #[test]
    fn references() {
        assert_eq!(hartree_fock_reference(4, 2).unwrap(), 0b1100);
        assert_eq!(
            default_references(4, 2, 3).unwrap(),
            vec![0b1100, 0b1001, 0b0110]
        );
        assert!(default_references(4, 2, 4).is_err());
        assert!(hartree_fock_reference(2, 3).is_err());
    }

    #[test]
    fn vqe_single_qubit() {
        let a = Ansatz::two_local(1, 0).unwrap();
        let r = vqe(&z(), &a, 0, &cfg(1)).unwrap();
        assert!((r.states[0].energy + 1.0).abs() < 1e-8);
        let x = Observable::parse_terms([(1.0, "X")]).unwrap();
        let r = vqe(&x, &a, 0, &cfg(2)).unwrap();
        assert!((r.states[0].energy + 1.0).abs() < 1e-8);
    }

    #[test]
    fn vqe_sampled_spsa() {
        let a = Ansatz::two_local(1, 0).unwrap();
        let config = SolverConfig {
            optimizer: OptimizerConfig {
                method: Method::Spsa,
                max_iters: 200,
                ..Default::default()
            },
            mode: Mode::Sampled(Sampling::new(4096)),
            seed: 3,
            ..Default::default()
        };
        let r = vqe(&z(), &a, 0, &config).unwrap();
        assert!(r.states[0].energy < -0.95, "{}", r.states[0].energy);
    }

    #[test]
    fn vqe_model_ground_state() {
        let h = model();
        let exact = exact_eigensystem(&h, Some(1), None).unwrap().eigenvalues[0];
        let a = Ansatz::rsp(4, 4).unwrap();
        let config = SolverConfig {
            restarts: 2,
            ..cfg(5)
        };
        let r = vqe(&h, &a, 0b1100, &config).unwrap();
        let e = r.states[0].energy;
        assert!(e >= exact - 1e-9);
        assert!(e - exact < 1.6e-3, "{e} vs {exact}");
    }

    #[test]
    fn ssvqe_one_qubit_spectrum() {
        let a = Ansatz::two_local(1, 0).unwrap();
        let r = ssvqe(&z(), &a, &[0, 1], None, &cfg(1)).unwrap();
        assert!((r.states[0].energy + 1.0).abs() < 1e-8);
        assert!((r.states[1].energy - 1.0).abs() < 1e-8);
        assert!(r.overlaps[0][1] < 1e-20);
    }

    #[test]
    fn ssvqe_rejects_bad_weights() {
        let a = Ansatz::two_local(1, 0).unwrap();
        assert!(ssvqe(&z(), &a, &[0, 1], Some(&[1.0, 1.0]), &cfg(1)).is_err());
        assert!(ssvqe(&z(), &a, &[0, 1], Some(&[1.0, 2.0]), &cfg(1)).is_err());
        assert!(ssvqe(&z(), &a, &[0, 0], None, &cfg(1)).is_err());
    }

    #[test]
    fn ssvqe_k1_is_vqe() {
        let a = Ansatz::two_local(2, 1).unwrap();
        let h = Observable::parse_terms([(0.5, "XX"), (-0.3, "ZI"), (0.2, "IY")]).unwrap();
        let v = vqe(&h, &a, 0, &cfg(9)).unwrap();
        let s = ssvqe(&h, &a, &[0], None, &cfg(9)).unwrap();
        assert_eq!(v.traces, s.traces);
        assert_eq!(v.states[0].energy, s.states[0].energy);
    }

    #[test]
    fn ssvqe_global_minimum_bound() {
        let h = model();
        let exact = exact_eigensystem(&h, Some(3), None).unwrap().eigenvalues;
        let a = Ansatz::rsp(4, 6).unwrap();
        let refs = default_references(4, 2, 3).unwrap();
        let r = ssvqe(&h, &a, &refs, None, &cfg(2)).unwrap();
        let bound = 3.0 * exact[0] + 2.0 * exact[1] + exact[2];
        assert!(r.costs[0] >= bound - 1e-9);
    }

    #[test]
    fn mcvqe_trivial_cases() {
        let a = Ansatz::rsp(1, 0).unwrap();
        let r = mcvqe(&z(), &a, &[0, 1], &cfg(1)).unwrap();
        assert_eq!(r.energies(), vec![-1.0, 1.0]);
        let sub = r.subspace.as_ref().unwrap();
        assert_eq!(sub.h_tilde, vec![vec![1.0, 0.0], vec![0.0, -1.0]]);
        let one = mcvqe(&z(), &Ansatz::two_local(1, 0).unwrap(), &[0], &cfg(1)).unwrap();
        assert!((one.subspace.unwrap().h_tilde[0][0] - one.states[0].energy).abs() < 1e-15);
    }

    #[test]
    fn mcvqe_model_estimators_agree_and_order_invariant() {
        let h = model();
        let a = Ansatz::rsp(4, 6).unwrap();
        let refs = default_references(4, 2, 3).unwrap();
        let r = mcvqe(&h, &a, &refs, &cfg(4)).unwrap();
        let sub = r.subspace.as_ref().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((sub.h_tilde[i][j] - sub.h_tilde_superposition[i][j]).abs() < 1e-10);
            }
        }
        let params = [r.states[0].params.clone()];
        let mut reversed = refs.clone();
        reversed.reverse();
        let sub2 = subspace_hamiltonian(&h, &a, &reversed, &params[0], &Mode::Exact, 0).unwrap();
        for (x, y) in sub.eigenvalues.iter().zip(&sub2.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
        // contracted roots are orthonormal
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((r.overlaps[i][j] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn vqd_one_qubit() {
        let a = Ansatz::two_local(1, 0).unwrap();
        let d = DeflationConfig {
            betas: Some(vec![4.0]),
            ..Default::default()
        };
        let r = vqd(&z(), &a, 2, &[0], &d, &cfg(1)).unwrap();
        assert!((r.states[0].energy + 1.0).abs() < 1e-6);
        assert!((r.states[1].energy - 1.0).abs() < 1e-6);
        assert!(r.overlaps[0][1] < 1e-6);
        assert!(r.collapses.is_empty());
        assert_eq!(r.states[1].betas, vec![4.0]);
    }

    #[test]
    fn vqd_full_two_qubit_spectrum() {
        let h = Observable::parse_terms([(0.6, "ZI"), (0.25, "IZ"), (0.1, "ZZ")]).unwrap();
        let exact = exact_eigensystem(&h, None, None).unwrap().eigenvalues;
        let a = Ansatz::two_local(2, 2).unwrap();
        let r = vqd(
            &h,
            &a,
            4,
            &[0],
            &DeflationConfig::default(),
            &SolverConfig {
                restarts: 2,
                ..cfg(6)
            },
        )
        .unwrap();
        for (got, want) in r.energies().iter().zip(&exact) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(r.overlaps[i][j] < 1e-6);
                }
            }
        }
    }

    #[test]
    fn vqd_model_three_levels() {
        let h = model();
        let exact = exact_eigensystem(&h, Some(3), None).unwrap().eigenvalues;
        let a = Ansatz::rsp(4, 4).unwrap();
        let r = vqd(&h, &a, 3, &[0b1100], &DeflationConfig::default(), &cfg(7)).unwrap();
        for (got, want) in r.energies().iter().zip(&exact) {
            assert!(*got >= want - 1e-9);
            assert!(got - want < 1.6e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn deflated_cost_identity_on_exact_eigenstates() {
        let h = model();
        let spec = exact_eigensystem(&h, Some(3), None).unwrap();
        let hm = crate::oracle::observable_to_matrix(&h).unwrap();
        let beta = default_beta(&h);
        assert!(beta > spec.eigenvalues[2] - spec.eigenvalues[0]);
        // H₁ = H + β|ψ₀⟩⟨ψ₀| evaluated at ψ₀ gives E₀ + β
        let v0 = &spec.eigenvectors[0];
        let e0 = hm.expectation(v0).re;
        let ov: f64 = v0.iter().map(|a| a.norm_sqr()).sum::<f64>().powi(2);
        assert!((e0 + beta * ov - (spec.eigenvalues[0] + beta)).abs() < 1e-10);
    }

    #[test]
    fn vqd_reports_collapse() {
        // β far below the gap: the second level falls back onto the ground state
        let x = Observable::parse_terms([(1.0, "X")]).unwrap();
        let a = Ansatz::two_local(1, 0).unwrap();
        let d = DeflationConfig {
            betas: Some(vec![0.01]),
            ..Default::default()
        };
        let r = vqd(&x, &a, 2, &[0], &d, &cfg(2)).unwrap();
        assert_eq!(r.collapses.len(), 1);
        assert_eq!(r.collapses[0].level, 1);
    }

    #[test]
    fn wrong_inputs() {
        let a = Ansatz::two_local(2, 1).unwrap();
        assert!(vqe(&z(), &a, 0, &cfg(0)).is_err());
        let h = Observable::parse_terms([(1.0, "ZZ")]).unwrap();
        assert!(vqd(&h, &a, 3, &[0, 1], &DeflationConfig::default(), &cfg(0)).is_err());
        let d = DeflationConfig {
            betas: Some(vec![-1.0]),
            ..Default::default()
        };
        assert!(vqd(&h, &a, 2, &[0], &d, &cfg(0)).is_err());
        let c = SolverConfig {
            initial_params: vec![vec![0.0; 3]],
            ..cfg(0)
        };
        assert!(matches!(
            vqe(&h, &a, 0, &c),
            Err(Error::ParameterCount { .. })
        ));
    }
}
