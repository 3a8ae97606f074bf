//! The five subcommands as library functions. Each returns a [`Report`]
//! holding the JSON and CSV text it would write, so runs can be checked
//! without touching the filesystem.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qtrans_core::eigensolvers::{self, Algorithm, EigensolverResult, SolverConfig};
use qtrans_core::mitigation::{calibrate_confusion, FlipProbabilities};
use qtrans_core::oracle::{
    exact_eigensystem, exact_transition_amplitude, ExactSpectrum, ORACLE_MAX_QUBITS,
};
use qtrans_core::rng::derive_seed;
use qtrans_core::statevector::{sample_expectation, Mode, Sampling};
use qtrans_core::transition::{
    compose_oscillator_strength, energy_error_bar, sampled_oscillator_strength,
    transition_amplitude_ancilla, transition_amplitude_squared,
    transition_amplitude_squared_states, transition_amplitude_superposition, TransitionOptions,
};
use qtrans_core::{ConfusionMatrix, Observable, PreparedState, ReadoutChannel, StateVector};

use crate::config::{AlgorithmName, ModeName, RunConfig};
use crate::problem::ProblemFile;
use crate::{bundled, cmfile, Error};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status of a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    /// Finished, but a deflated level collapsed onto an earlier one.
    Collapse,
    /// Finished with at least one failed sweep point.
    PartialFailure,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::PartialFailure => 1,
            Outcome::Collapse => 2,
        }
    }

    fn worst(self, other: Outcome) -> Outcome {
        let rank = |o: Outcome| match o {
            Outcome::Ok => 0,
            Outcome::Collapse => 1,
            Outcome::PartialFailure => 2,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

/// Output files of one command: `(suffix, contents)` pairs written next to
/// the configured output prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub files: Vec<(String, String)>,
    pub outcome: Outcome,
}

impl Report {
    pub fn json(&self) -> &str {
        &self
            .files
            .iter()
            .find(|(s, _)| s == ".json")
            .expect("every report has JSON")
            .1
    }

    pub fn file(&self, suffix: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(s, _)| s == suffix)
            .map(|(_, c)| c.as_str())
    }

    /// Writes `<prefix><suffix>` for every file and returns the paths.
    pub fn write(&self, prefix: &Path) -> Result<Vec<PathBuf>, Error> {
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut written = Vec::new();
        for (suffix, contents) in &self.files {
            let mut p = prefix.as_os_str().to_owned();
            p.push(suffix);
            let p = PathBuf::from(p);
            std::fs::write(&p, contents).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
        Ok(written)
    }
}

/// `bundled:NAME` or a file path.
pub fn load_problem(arg: &str) -> Result<ProblemFile, Error> {
    match arg.strip_prefix("bundled:") {
        Some(name) => bundled::load(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown bundled problem '{name}' (have {})",
                bundled::NAMES.join(", ")
            ))
        }),
        None => ProblemFile::read(Path::new(arg)),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output types serialize");
    s.push('\n');
    s
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn oracle(h: &Observable, k: usize) -> Result<Option<ExactSpectrum>, Error> {
    if h.n() > ORACLE_MAX_QUBITS {
        return Ok(None);
    }
    exact_eigensystem(h, Some(k.min(1 << h.n())), None)
        .map(Some)
        .map_err(Error::core("exact diagonalization"))
}

#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub base: u64,
    /// Seed of the energy re-measurement of state `i`: `derive_seed(measurement, i)`.
    pub measurement: u64,
    pub transition: u64,
}

impl Seeds {
    fn new(base: u64) -> Self {
        Self {
            base,
            measurement: derive_seed(base, 0xE4E4),
            transition: derive_seed(base, 0x7A45),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateRow {
    pub state: usize,
    pub level: usize,
    pub energy: f64,
    pub energy_error: Option<f64>,
    pub oracle: Option<f64>,
    pub deviation: Option<f64>,
    pub reference: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    pub algorithm: Algorithm,
    pub references: Vec<usize>,
    pub states: Vec<StateRow>,
    pub collapsed: bool,
    pub result: EigensolverResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutput {
    pub command: String,
    pub version: String,
    pub problem: String,
    pub n_qubits: usize,
    pub config: RunConfig,
    pub oracle_energies: Option<Vec<f64>>,
    pub runs: Vec<RunOutput>,
}

fn references(cfg: &RunConfig, n: usize, algorithm: AlgorithmName) -> Result<Vec<usize>, Error> {
    let electrons = cfg.electrons.unwrap_or(n / 2);
    let k = match algorithm {
        AlgorithmName::Vqe | AlgorithmName::Vqd => 1,
        _ => cfg.k,
    };
    eigensolvers::default_references(n, electrons, k).map_err(Error::core("references"))
}

/// Runs one eigensolver on the penalized Hamiltonian.
pub fn run_eigensolver(
    h: &Observable,
    cfg: &RunConfig,
    algorithm: AlgorithmName,
    initial_params: Vec<Vec<f64>>,
) -> Result<(EigensolverResult, Vec<usize>), Error> {
    let n = h.n();
    let ansatz = cfg.ansatz_for(n)?;
    let solver = SolverConfig {
        initial_params,
        ..cfg.solver_config(n)?
    };
    let refs = references(cfg, n, algorithm)?;
    let ctx = format!("{algorithm:?}").to_lowercase();
    let r = match algorithm {
        AlgorithmName::Vqe => eigensolvers::vqe(h, &ansatz, refs[0], &solver),
        AlgorithmName::Ssvqe => {
            eigensolvers::ssvqe(h, &ansatz, &refs, cfg.weights.as_deref(), &solver)
        }
        AlgorithmName::Mcvqe => eigensolvers::mcvqe(h, &ansatz, &refs, &solver),
        AlgorithmName::Vqd => {
            eigensolvers::vqd(h, &ansatz, cfg.k, &refs, &cfg.deflation(), &solver)
        }
    }
    .map_err(Error::core(ctx))?;
    Ok((r, refs))
}

fn sampling(mode: &Mode) -> Option<&Sampling> {
    match mode {
        Mode::Exact => None,
        Mode::Sampled(s) => Some(s),
    }
}

/// Sampled energy and its error bar from one fresh measurement of every term.
fn measure_energy(
    h: &Observable,
    s: &StateVector,
    sm: &Sampling,
    cfg: &RunConfig,
    seed: u64,
) -> Result<(f64, f64), Error> {
    let e = sample_expectation(
        h,
        s,
        sm.shots,
        sm.noise.as_ref(),
        sm.mitigation.as_ref(),
        seed,
    )
    .map_err(Error::core("energy measurement"))?;
    let err = energy_error_bar(&e.error_terms(), cfg.error_bar_formula())
        .map_err(Error::core("energy error bar"))?;
    Ok((e.value, err))
}

fn run_output(
    h: &Observable,
    cfg: &RunConfig,
    mode: &Mode,
    result: EigensolverResult,
    refs: Vec<usize>,
    spectrum: Option<&ExactSpectrum>,
    seeds: &Seeds,
) -> Result<RunOutput, Error> {
    let mut states = Vec::new();
    for (i, s) in result.states.iter().enumerate() {
        let oracle = spectrum.and_then(|sp| sp.eigenvalues.get(i).copied());
        let energy_error = match sampling(mode) {
            Some(sm) => {
                let sv = result.statevector(i).map_err(Error::core("state"))?;
                Some(measure_energy(h, &sv, sm, cfg, derive_seed(seeds.measurement, i as u64))?.1)
            }
            None => None,
        };
        states.push(StateRow {
            state: i,
            level: s.level,
            energy: s.energy,
            energy_error,
            oracle,
            deviation: oracle.map(|o| s.energy - o),
            reference: s.reference,
        });
    }
    Ok(RunOutput {
        algorithm: result.algorithm,
        references: refs,
        collapsed: !result.collapses.is_empty(),
        states,
        result,
    })
}

/// `solve`: one algorithm, or SSVQE, MCVQE and VQD side by side with `compare`.
pub fn solve(problem_arg: &str, cfg: &RunConfig, compare: bool) -> Result<Report, Error> {
    let out = solve_output(problem_arg, cfg, compare)?;
    let outcome = if out.runs.iter().any(|r| r.collapsed) {
        Outcome::Collapse
    } else {
        Outcome::Ok
    };
    let rows: Vec<Vec<String>> = out
        .runs
        .iter()
        .flat_map(|r| {
            r.states.iter().map(move |s| {
                vec![
                    format!("{:?}", r.algorithm).to_lowercase(),
                    s.state.to_string(),
                    num(s.energy),
                    opt(s.energy_error),
                    opt(s.oracle),
                    opt(s.deviation),
                    s.reference.to_string(),
                ]
            })
        })
        .collect();
    let csv = to_csv(
        &[
            "algorithm",
            "state",
            "energy",
            "energy_error",
            "oracle",
            "deviation",
            "reference",
        ],
        &rows,
    );
    Ok(Report {
        files: vec![(".json".into(), to_json(&out)), (".csv".into(), csv)],
        outcome,
    })
}

pub fn solve_output(
    problem_arg: &str,
    cfg: &RunConfig,
    compare: bool,
) -> Result<SolveOutput, Error> {
    let problem = load_problem(problem_arg)?;
    let h = problem
        .penalized_hamiltonian()
        .map_err(Error::core("penalty"))?;
    let spectrum = oracle(&h, cfg.k)?;
    let mode = cfg.mode_for(h.n())?;
    let seeds = Seeds::new(cfg.seed);
    let algorithms = if compare {
        vec![
            AlgorithmName::Ssvqe,
            AlgorithmName::Mcvqe,
            AlgorithmName::Vqd,
        ]
    } else {
        vec![cfg.algorithm]
    };
    let mut runs = Vec::new();
    for alg in algorithms {
        let run_cfg = RunConfig {
            algorithm: alg,
            ..cfg.clone()
        };
        run_cfg.validate()?;
        let (result, refs) = run_eigensolver(&h, &run_cfg, alg, Vec::new())?;
        runs.push(run_output(
            &h,
            &run_cfg,
            &mode,
            result,
            refs,
            spectrum.as_ref(),
            &seeds,
        )?);
    }
    Ok(SolveOutput {
        command: "solve".into(),
        version: VERSION.into(),
        problem: problem_arg.into(),
        n_qubits: h.n(),
        config: cfg.clone(),
        oracle_energies: spectrum.map(|s| s.eigenvalues),
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum TransitionMethod {
    Overlap,
    Ancilla,
    Superposition,
}

pub const AXES: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, Serialize)]
pub struct AxisOutput {
    pub axis: &'static str,
    /// Overlap estimator; the realization mean in sampled mode.
    pub overlap: f64,
    pub overlap_std_error: Option<f64>,
    pub overlap_repeats: Vec<f64>,
    pub evaluations: usize,
    pub ancilla: Option<f64>,
    pub superposition: Option<f64>,
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairOutput {
    pub i: usize,
    pub j: usize,
    pub energy_i: f64,
    pub energy_j: f64,
    pub energy_errors: Option<[f64; 2]>,
    pub gap: f64,
    pub axes: Vec<AxisOutput>,
    pub f: f64,
    pub f_error: Option<f64>,
    pub f_oracle: Option<f64>,
    /// Why a requested method was skipped for this pair.
    pub notes: Vec<String>,
}

fn empty_axes() -> Vec<AxisOutput> {
    AXES.iter()
        .map(|a| AxisOutput {
            axis: a,
            overlap: 0.0,
            overlap_std_error: None,
            overlap_repeats: Vec::new(),
            evaluations: 0,
            ancilla: None,
            superposition: None,
            oracle: None,
        })
        .collect()
}

enum StateHandle {
    Prepared(PreparedState),
    Vector(StateVector),
}

fn handle(result: &EigensolverResult, i: usize) -> Result<StateHandle, Error> {
    Ok(match result.prepared(i).map_err(Error::core("state"))? {
        Some(p) => StateHandle::Prepared(p),
        None => StateHandle::Vector(result.statevector(i).map_err(Error::core("state"))?),
    })
}

/// Transition amplitudes and `f` for one pair of solved states.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_pair(
    problem: &ProblemFile,
    h: &Observable,
    result: &EigensolverResult,
    (i, j): (usize, usize),
    methods: &[TransitionMethod],
    cfg: &RunConfig,
    mode: &Mode,
    spectrum: Option<&ExactSpectrum>,
) -> Result<PairOutput, Error> {
    let k = result.states.len();
    if i >= k || j >= k {
        return Err(Error::Config(format!(
            "state pair ({i}, {j}) out of range for {k} states"
        )));
    }
    if !problem.has_dipoles() {
        return Err(Error::Config(
            "oscillator strengths need at least one dipole section".into(),
        ));
    }
    if i == j {
        // zero gap: no transition
        let e = result.states[i].energy;
        return Ok(PairOutput {
            i,
            j,
            energy_i: e,
            energy_j: e,
            energy_errors: None,
            gap: 0.0,
            axes: empty_axes(),
            f: 0.0,
            f_error: None,
            f_oracle: spectrum.map(|_| 0.0),
            notes: vec!["same state: zero gap".into()],
        });
    }
    let dipoles = problem.dipole_operators();
    let seeds = Seeds::new(cfg.seed);
    let pair_seed = derive_seed(seeds.transition, ((i as u64) << 32) | j as u64);
    let (si, sj) = (&result.states[i], &result.states[j]);
    let (hi, hj) = (handle(result, i)?, handle(result, j)?);
    let ctx = format!("states ({i}, {j})");
    let options = TransitionOptions {
        seed: pair_seed,
        ..TransitionOptions::default()
    };
    let mut notes = Vec::new();

    // energies: solver values in exact mode, re-measured with error bars when sampled
    let (ei, ej, energy_errors) = match sampling(mode) {
        None => (si.energy, sj.energy, None),
        Some(sm) => {
            let vi = result.statevector(i).map_err(Error::core("state"))?;
            let vj = result.statevector(j).map_err(Error::core("state"))?;
            let (ei, di) =
                measure_energy(h, &vi, sm, cfg, derive_seed(seeds.measurement, i as u64))?;
            let (ej, dj) =
                measure_energy(h, &vj, sm, cfg, derive_seed(seeds.measurement, j as u64))?;
            (ei, ej, Some([di, dj]))
        }
    };

    let mut axes = empty_axes();

    let mut f_error = None;
    match (&hi, &hj, mode) {
        (StateHandle::Prepared(pi), StateHandle::Prepared(pj), Mode::Sampled(_)) => {
            let dref = [&dipoles[0], &dipoles[1], &dipoles[2]];
            let (osc, repeats) = sampled_oscillator_strength(
                (ei, ej),
                (energy_errors.unwrap()[0], energy_errors.unwrap()[1]),
                dref,
                pi,
                pj,
                mode,
                cfg.repeats,
                cfg.repeat_spread(),
                &options,
            )
            .map_err(Error::core(ctx.clone()))?;
            f_error = osc.error;
            for (a, (amp, rep)) in axes.iter_mut().zip(osc.amplitudes.iter().zip(repeats)) {
                a.overlap = *amp;
                a.overlap_repeats = rep;
            }
        }
        (_, _, Mode::Sampled(_)) => {
            return Err(Error::Config(
                "sampled transitions need circuit-prepared states (not contracted MCVQE roots)"
                    .into(),
            ))
        }
        _ => {
            for (axis, d) in dipoles.iter().enumerate() {
                if d.is_empty() {
                    continue;
                }
                let est = match (&hi, &hj) {
                    (StateHandle::Prepared(pi), StateHandle::Prepared(pj)) => {
                        transition_amplitude_squared(d, pi, pj, mode, &options)
                    }
                    (StateHandle::Vector(vi), StateHandle::Vector(vj)) => {
                        transition_amplitude_squared_states(d, vi, vj, &options)
                    }
                    _ => {
                        let vi = result.statevector(i).map_err(Error::core("state"))?;
                        let vj = result.statevector(j).map_err(Error::core("state"))?;
                        transition_amplitude_squared_states(d, &vi, &vj, &options)
                    }
                }
                .map_err(Error::core(ctx.clone()))?;
                axes[axis].overlap = est.value;
                axes[axis].overlap_std_error = est.std_error;
                axes[axis].evaluations = est.evaluations;
            }
        }
    }

    for m in methods {
        match m {
            TransitionMethod::Overlap => {}
            TransitionMethod::Ancilla => match (&hi, &hj) {
                (StateHandle::Prepared(pi), StateHandle::Prepared(pj)) => {
                    for (axis, d) in dipoles.iter().enumerate() {
                        let v = transition_amplitude_ancilla(
                            d,
                            pi,
                            pj,
                            mode,
                            derive_seed(pair_seed, 100 + axis as u64),
                        )
                        .map_err(Error::core(ctx.clone()))?;
                        axes[axis].ancilla = Some(v.norm_sqr());
                    }
                }
                _ => notes
                    .push("ancilla: contracted states have no single preparation circuit".into()),
            },
            TransitionMethod::Superposition => {
                let shared = si.params == sj.params
                    && si.coefficients.is_none()
                    && sj.coefficients.is_none();
                if !shared {
                    notes.push(
                        "superposition: states do not share one circuit on distinct references"
                            .into(),
                    );
                    continue;
                }
                let c = result
                    .ansatz
                    .build(&si.params)
                    .map_err(Error::core("ansatz"))?;
                for (axis, d) in dipoles.iter().enumerate() {
                    let v = transition_amplitude_superposition(
                        d,
                        &c,
                        si.reference,
                        sj.reference,
                        mode,
                        derive_seed(pair_seed, 200 + axis as u64),
                    )
                    .map_err(Error::core(ctx.clone()))?;
                    axes[axis].superposition = Some(v);
                }
            }
        }
    }

    let amplitudes = [axes[0].overlap, axes[1].overlap, axes[2].overlap];
    let f = compose_oscillator_strength(ei, ej, amplitudes);
    let mut f_oracle = None;
    if let Some(sp) = spectrum.filter(|sp| i < sp.len() && j < sp.len()) {
        let (vi, vj) = (&sp.eigenvectors[i], &sp.eigenvectors[j]);
        let mut amps = [0.0; 3];
        for (axis, d) in dipoles.iter().enumerate() {
            let a = exact_transition_amplitude(d, vi, vj)
                .map_err(Error::core("oracle"))?
                .norm_sqr();
            axes[axis].oracle = Some(a);
            amps[axis] = a;
        }
        f_oracle = Some(compose_oscillator_strength(
            sp.eigenvalues[i],
            sp.eigenvalues[j],
            amps,
        ));
    }
    Ok(PairOutput {
        i,
        j,
        energy_i: ei,
        energy_j: ej,
        energy_errors,
        gap: (ej - ei).abs(),
        axes,
        f,
        f_error,
        f_oracle,
        notes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionOutput {
    pub command: String,
    pub version: String,
    pub problem: String,
    pub n_qubits: usize,
    pub config: RunConfig,
    pub seeds: Seeds,
    /// `inline` or the solve JSON the states were read from.
    pub states_from: String,
    pub methods: Vec<TransitionMethod>,
    pub energies: Vec<f64>,
    pub oracle_energies: Option<Vec<f64>>,
    pub pairs: Vec<PairOutput>,
    pub solve: Option<RunOutput>,
}

/// Reads run `index` of a solve JSON.
pub fn read_solve_run(path: &Path, index: usize) -> Result<RunOutput, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let out: SolveOutput = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let n = out.runs.len();
    out.runs
        .into_iter()
        .nth(index)
        .ok_or_else(|| Error::Format {
            path: path.display().to_string(),
            message: format!("run {index} requested, file has {n}"),
        })
}

/// `transition`: `|⟨ψᵢ|R_α|ψⱼ⟩|²` and `f_ij` for each requested pair; states
/// come from a solve JSON or an inline solve.
pub fn transition(
    problem_arg: &str,
    cfg: &RunConfig,
    from: Option<(&Path, usize)>,
    pairs: &[(usize, usize)],
    methods: &[TransitionMethod],
) -> Result<Report, Error> {
    let problem = load_problem(problem_arg)?;
    let h = problem
        .penalized_hamiltonian()
        .map_err(Error::core("penalty"))?;
    let mode = cfg.mode_for(h.n())?;
    let seeds = Seeds::new(cfg.seed);
    let (run, inline, source) = match from {
        Some((path, idx)) => (
            read_solve_run(path, idx)?,
            false,
            path.display().to_string(),
        ),
        None => {
            let (result, refs) = run_eigensolver(&h, cfg, cfg.algorithm, Vec::new())?;
            let spectrum = oracle(&h, result.states.len())?;
            (
                run_output(&h, cfg, &mode, result, refs, spectrum.as_ref(), &seeds)?,
                true,
                "inline".into(),
            )
        }
    };
    if run.result.ansatz.n != h.n() {
        return Err(Error::Config(format!(
            "states act on {} qubits, problem has {}",
            run.result.ansatz.n,
            h.n()
        )));
    }
    let k = run.result.states.len();
    let spectrum = oracle(&h, k)?;
    let pairs: Vec<(usize, usize)> = if pairs.is_empty() {
        (1..k).map(|j| (0, j)).collect()
    } else {
        pairs.to_vec()
    };
    let mut out_pairs = Vec::new();
    for &p in &pairs {
        out_pairs.push(evaluate_pair(
            &problem,
            &h,
            &run.result,
            p,
            methods,
            cfg,
            &mode,
            spectrum.as_ref(),
        )?);
    }
    let outcome = if run.collapsed {
        Outcome::Collapse
    } else {
        Outcome::Ok
    };
    let rows: Vec<Vec<String>> = out_pairs
        .iter()
        .map(|p| {
            let mut r = vec![p.i.to_string(), p.j.to_string(), num(p.gap)];
            r.extend(p.axes.iter().map(|a| num(a.overlap)));
            r.extend([num(p.f), opt(p.f_error), opt(p.f_oracle)]);
            r
        })
        .collect();
    let csv = to_csv(
        &[
            "i", "j", "gap", "amp_x", "amp_y", "amp_z", "f", "f_error", "f_oracle",
        ],
        &rows,
    );
    let out = TransitionOutput {
        command: "transition".into(),
        version: VERSION.into(),
        problem: problem_arg.into(),
        n_qubits: h.n(),
        config: cfg.clone(),
        seeds,
        states_from: source,
        methods: methods.to_vec(),
        energies: run.result.energies(),
        oracle_energies: spectrum.map(|s| s.eigenvalues),
        pairs: out_pairs,
        solve: inline.then_some(run),
    };
    Ok(Report {
        files: vec![(".json".into(), to_json(&out)), (".csv".into(), csv)],
        outcome,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub problem: String,
    pub warm_started: bool,
    pub error: Option<String>,
    pub run: Option<RunOutput>,
    pub transitions: Vec<PairOutput>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub points: Vec<SweepPoint>,
}

/// Starting parameters for the next sweep point: per level for VQD, the
/// shared circuit parameters otherwise.
fn warm_start(result: &EigensolverResult) -> Vec<Vec<f64>> {
    let mut by_level: Vec<&eigensolvers::StateResult> = result.states.iter().collect();
    by_level.sort_by_key(|s| s.level);
    match result.algorithm {
        Algorithm::Vqd => by_level.iter().map(|s| s.params.clone()).collect(),
        _ => vec![by_level[0].params.clone()],
    }
}

fn sweep_point(
    index: usize,
    arg: &str,
    cfg: &RunConfig,
    previous: Option<&EigensolverResult>,
) -> Result<(RunOutput, Vec<PairOutput>), Error> {
    let problem = load_problem(arg)?;
    let h = problem
        .penalized_hamiltonian()
        .map_err(Error::core("penalty"))?;
    let mode = cfg.mode_for(h.n())?;
    let init = previous.map(warm_start).unwrap_or_default();
    let point_cfg = RunConfig {
        seed: derive_seed(cfg.seed, index as u64),
        ..cfg.clone()
    };
    let (result, refs) = run_eigensolver(&h, &point_cfg, cfg.algorithm, init)?;
    let spectrum = oracle(&h, result.states.len())?;
    let seeds = Seeds::new(point_cfg.seed);
    let run = run_output(
        &h,
        &point_cfg,
        &mode,
        result,
        refs,
        spectrum.as_ref(),
        &seeds,
    )?;
    let mut transitions = Vec::new();
    if problem.has_dipoles() {
        for j in 1..run.result.states.len() {
            transitions.push(evaluate_pair(
                &problem,
                &h,
                &run.result,
                (0, j),
                &[TransitionMethod::Overlap],
                &point_cfg,
                &mode,
                spectrum.as_ref(),
            )?);
        }
    }
    Ok((run, transitions))
}

/// `sweep`: solves the files in order, each point warm-started from the
/// previous successful one. Failed points are recorded and skipped.
pub fn sweep(problems: &[String], cfg: &RunConfig) -> Result<Report, Error> {
    if problems.is_empty() {
        return Err(Error::Config("sweep needs at least one problem".into()));
    }
    let mut points = Vec::new();
    let mut previous: Option<EigensolverResult> = None;
    let mut outcome = Outcome::Ok;
    for (index, arg) in problems.iter().enumerate() {
        let warm = previous.is_some();
        match sweep_point(index, arg, cfg, previous.as_ref()) {
            Ok((run, transitions)) => {
                if run.collapsed {
                    outcome = outcome.worst(Outcome::Collapse);
                }
                previous = Some(run.result.clone());
                points.push(SweepPoint {
                    index,
                    problem: arg.clone(),
                    warm_started: warm,
                    error: None,
                    run: Some(run),
                    transitions,
                });
            }
            Err(e) => {
                outcome = outcome.worst(Outcome::PartialFailure);
                points.push(SweepPoint {
                    index,
                    problem: arg.clone(),
                    warm_started: warm,
                    error: Some(e.to_string()),
                    run: None,
                    transitions: Vec::new(),
                });
            }
        }
    }
    let mut energy_rows = Vec::new();
    let mut f_rows = Vec::new();
    for p in &points {
        if let Some(run) = &p.run {
            for s in &run.states {
                energy_rows.push(vec![
                    p.index.to_string(),
                    p.problem.clone(),
                    s.state.to_string(),
                    num(s.energy),
                    opt(s.oracle),
                    opt(s.deviation),
                ]);
            }
        }
        for t in &p.transitions {
            f_rows.push(vec![
                p.index.to_string(),
                p.problem.clone(),
                t.i.to_string(),
                t.j.to_string(),
                num(t.f),
                opt(t.f_error),
                opt(t.f_oracle),
            ]);
        }
    }
    let out = SweepOutput {
        command: "sweep".into(),
        version: VERSION.into(),
        config: cfg.clone(),
        points,
    };
    Ok(Report {
        files: vec![
            (".json".into(), to_json(&out)),
            (
                ".csv".into(),
                to_csv(
                    &["index", "problem", "state", "energy", "oracle", "deviation"],
                    &energy_rows,
                ),
            ),
            (
                "_f.csv".into(),
                to_csv(
                    &["index", "problem", "i", "j", "f", "f_error", "f_oracle"],
                    &f_rows,
                ),
            ),
        ],
        outcome,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrateOutput {
    pub command: String,
    pub version: String,
    pub qubits: usize,
    pub flips: Vec<FlipProbabilities>,
    pub shots: u64,
    pub seed: u64,
    pub condition_number: f64,
    pub confusion: ConfusionMatrix,
}

/// `calibrate`: estimates a confusion matrix by preparing every basis state
/// `shots` times under a per-qubit readout channel.
pub fn calibrate(
    qubits: usize,
    flips: &[FlipProbabilities],
    shots: u64,
    seed: u64,
) -> Result<Report, Error> {
    let flips: Vec<FlipProbabilities> = match flips.len() {
        1 => vec![flips[0]; qubits],
        l if l == qubits => flips.to_vec(),
        l => {
            return Err(Error::Config(format!(
                "{l} flip settings for {qubits} qubits"
            )))
        }
    };
    let channel = ReadoutChannel::PerQubit(flips.clone());
    let cm = calibrate_confusion(&channel, shots, seed).map_err(Error::core("calibration"))?;
    let out = CalibrateOutput {
        command: "calibrate".into(),
        version: VERSION.into(),
        qubits,
        flips,
        shots,
        seed,
        condition_number: cm.condition_number(),
        confusion: cm.clone(),
    };
    Ok(Report {
        files: vec![
            (".json".into(), to_json(&out)),
            (".cm".into(), cmfile::format_confusion(&cm)),
        ],
        outcome: Outcome::Ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactLevel {
    pub level: usize,
    pub energy: f64,
    pub sz: Option<f64>,
    pub sz2: Option<f64>,
    pub s2: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactOscillator {
    pub i: usize,
    pub j: usize,
    pub amplitudes: [f64; 3],
    pub f: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactOutput {
    pub command: String,
    pub version: String,
    pub problem: String,
    pub n_qubits: usize,
    pub penalized: bool,
    pub levels: Vec<ExactLevel>,
    pub oscillator_strengths: Vec<ExactOscillator>,
}

/// `exact`: lowest `k` levels of the penalized Hamiltonian by dense
/// diagonalization, with spin labels for penalized spin-orbital problems and
/// `f₀ⱼ` when dipoles are present.
pub fn exact(problem_arg: &str, k: usize) -> Result<Report, Error> {
    let problem = load_problem(problem_arg)?;
    let h = problem
        .penalized_hamiltonian()
        .map_err(Error::core("penalty"))?;
    if h.n() > ORACLE_MAX_QUBITS {
        return Err(Error::Config(format!(
            "exact diagonalization is limited to {ORACLE_MAX_QUBITS} qubits"
        )));
    }
    let sp = oracle(&h, k)?.expect("size checked");
    let spin_orbitals = problem.penalty_sz2_alpha.is_some() || problem.penalty_s2_beta.is_some();
    let labels = if spin_orbitals && h.n().is_multiple_of(2) {
        Some(sp.spin_labels().map_err(Error::core("spin labels"))?)
    } else {
        None
    };
    let levels = sp
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(level, &energy)| {
            let l = labels.as_ref().map(|l| l[level]);
            ExactLevel {
                level,
                energy,
                sz: l.map(|l| l.sz),
                sz2: l.map(|l| l.sz2),
                s2: l.map(|l| l.s2),
            }
        })
        .collect::<Vec<_>>();
    let mut osc = Vec::new();
    if problem.has_dipoles() {
        let d = problem.dipole_operators();
        for j in 1..sp.len() {
            let mut amplitudes = [0.0; 3];
            for (a, op) in amplitudes.iter_mut().zip(&d) {
                *a = exact_transition_amplitude(op, &sp.eigenvectors[0], &sp.eigenvectors[j])
                    .map_err(Error::core("oracle"))?
                    .norm_sqr();
            }
            let f = compose_oscillator_strength(sp.eigenvalues[0], sp.eigenvalues[j], amplitudes);
            osc.push(ExactOscillator {
                i: 0,
                j,
                amplitudes,
                f,
            });
        }
    }
    let rows: Vec<Vec<String>> = levels
        .iter()
        .map(|l| {
            vec![
                l.level.to_string(),
                num(l.energy),
                opt(l.sz),
                opt(l.sz2),
                opt(l.s2),
            ]
        })
        .collect();
    let out = ExactOutput {
        command: "exact".into(),
        version: VERSION.into(),
        problem: problem_arg.into(),
        n_qubits: h.n(),
        penalized: spin_orbitals,
        levels,
        oscillator_strengths: osc,
    };
    Ok(Report {
        files: vec![
            (".json".into(), to_json(&out)),
            (
                ".csv".into(),
                to_csv(&["level", "energy", "sz", "sz2", "s2"], &rows),
            ),
        ],
        outcome: Outcome::Ok,
    })
}

/// True when this configuration evaluates with shots.
pub fn is_sampled(cfg: &RunConfig) -> bool {
    cfg.mode == ModeName::Sampled
}
