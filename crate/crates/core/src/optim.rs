//! Classical optimizers and parameter-shift gradients.
//!
//! Both optimizers minimize a cost `f(θ)` given as a closure. BFGS also
//! takes a gradient closure, usually [`parameter_shift_gradient`].
//! Convergence is declared when the relative cost change between
//! iterations drops below `rel_energy_tol`, with the denominator floored at
//! [`REL_TOL_FLOOR`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng as _;

use crate::rng::rng_from_seed;
use crate::statevector::Gate;
use crate::{math, Error, Result};

pub const REL_TOL_FLOOR: f64 = 1e-10;

/// Exact parameter-shift rule `∂f = Σₖ rₖ [f(θ + sₖ) − f(θ − sₖ)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ShiftRule {
    /// Generators with eigenvalues ±½ (RY, RZ, Pauli rotations): `s = π/2, r = ½`.
    TwoTerm,
    /// Generators with eigenvalues {−1, 0, 0, 1} (Givens and exchange
    /// blocks): shifts π/4 and 3π/4.
    FourTerm,
}

impl ShiftRule {
    pub fn two_term() -> Self {
        ShiftRule::TwoTerm
    }

    pub fn four_term() -> Self {
        ShiftRule::FourTerm
    }

    /// `(shift, coefficient)` pairs.
    pub fn terms(&self) -> Vec<(f64, f64)> {
        match self {
            ShiftRule::TwoTerm => vec![(FRAC_PI_2, 0.5)],
            ShiftRule::FourTerm => {
                vec![
                    (FRAC_PI_4, (1.0 + FRAC_1_SQRT_2) / 2.0),
                    (3.0 * FRAC_PI_4, (FRAC_1_SQRT_2 - 1.0) / 2.0),
                ]
            }
        }
    }

    pub fn for_gate(g: &Gate) -> Result<Self> {
        match g {
            Gate::Ry { .. } | Gate::Rz { .. } | Gate::PauliRotation { .. } => {
                Ok(ShiftRule::TwoTerm)
            }
            Gate::Givens { .. } | Gate::Exchange { .. } => Ok(ShiftRule::FourTerm),
            _ => Err(Error::NoShiftRule(g.name().into())),
        }
    }
}

/// Gradient of `cost` at `params`, one shift rule per parameter.
pub fn parameter_shift_gradient(
    cost: &dyn Fn(&[f64]) -> Result<f64>,
    params: &[f64],
    rules: &[ShiftRule],
) -> Result<Vec<f64>> {
    if rules.len() != params.len() {
        return Err(Error::ParameterCount {
            expected: params.len(),
            got: rules.len(),
        });
    }
    let mut shifted = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for (k, rule) in rules.iter().enumerate() {
        let mut g = 0.0;
        for (s, r) in rule.terms() {
            shifted[k] = params[k] + s;
            let plus = cost(&shifted)?;
            shifted[k] = params[k] - s;
            let minus = cost(&shifted)?;
            g += r * (plus - minus);
        }
        shifted[k] = params[k];
        grad.push(g);
    }
    Ok(grad)
}

/// Central finite-difference gradient.
pub fn finite_difference_gradient(
    cost: &dyn Fn(&[f64]) -> Result<f64>,
    params: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let mut x = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        x[k] = params[k] + h;
        let plus = cost(&x)?;
        x[k] = params[k] - h;
        let minus = cost(&x)?;
        x[k] = params[k];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    #[default]
    Bfgs,
    Spsa,
}

/// SPSA gains: `aₖ = a/(A+k+1)^α`, `cₖ = c/(k+1)^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SpsaGains {
    /// Calibrated from gradient probes when `None`.
    pub a: Option<f64>,
    pub c: f64,
    /// Defaults to `0.1·max_iters`.
    #[cfg_attr(feature = "serde", serde(rename = "stability"))]
    pub big_a: Option<f64>,
    pub alpha: f64,
    pub gamma: f64,
    /// Size of the first update step targeted by calibration.
    pub target_step: f64,
    pub calibration_probes: usize,
}

impl Default for SpsaGains {
    fn default() -> Self {
        Self {
            a: None,
            c: 0.1,
            big_a: None,
            alpha: 0.602,
            gamma: 0.101,
            target_step: 2.0 * PI / 10.0,
            calibration_probes: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_iters: usize,
    pub rel_energy_tol: f64,
    pub spsa: SpsaGains,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Bfgs,
            max_iters: 1000,
            rel_energy_tol: 1e-8,
            spsa: SpsaGains::default(),
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_energy_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "rel_energy_tol must be positive".into(),
            ));
        }
        let g = &self.spsa;
        for (name, v) in [("alpha", g.alpha), ("gamma", g.gamma)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "SPSA exponent {name} must be in (0, 1]"
                )));
            }
        }
        if !(g.c > 0.0) || g.a.is_some_and(|a| !(a > 0.0)) {
            return Err(Error::InvalidConfig("SPSA gains must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Status {
    Converged,
    MaxIters,
    /// The line search could not decrease the cost any further.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceEntry {
    pub params: Vec<f64>,
    pub cost: f64,
    pub gradient_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizationTrace {
    pub iterations: Vec<TraceEntry>,
    pub status: Status,
    pub cost_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizationResult {
    pub params: Vec<f64>,
    pub cost: f64,
    pub trace: OptimizationTrace,
}

/// Runs the configured method. `grad` is only used by BFGS.
pub fn minimize(
    cost: &dyn Fn(&[f64]) -> Result<f64>,
    grad: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    initial: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    match config.method {
        Method::Bfgs => minimize_bfgs(cost, grad, initial, config),
        Method::Spsa => minimize_spsa(cost, initial, config),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

fn axpy(x: &[f64], alpha: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(a, b)| a + alpha * b).collect()
}

struct Counted<'a> {
    f: &'a dyn Fn(&[f64]) -> Result<f64>,
    evaluations: usize,
    iteration: usize,
}

impl Counted<'_> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.f)(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteCost {
                iteration: self.iteration,
            });
        }
        Ok(v)
    }
}

/// BFGS with inverse-Hessian updates.
///
/// The first step is along the normalized steepest-descent direction and
/// the initial inverse Hessian is rescaled by `sᵀy / yᵀy` before the first
/// update, so the iterates do not depend on the overall scale of the cost.
/// The line search tries the unit step, then the minimizer of the quadratic
/// through `f(0), f'(0), f(1)`, then backtracks until the Armijo condition
/// holds. Returns the best parameters seen.
pub fn minimize_bfgs(
    cost: &dyn Fn(&[f64]) -> Result<f64>,
    grad: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    initial: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let dim = initial.len();
    let mut f = Counted {
        f: cost,
        evaluations: 0,
        iteration: 0,
    };
    let mut x = initial.to_vec();
    let mut fx = f.eval(&x)?;
    let mut g = grad(&x)?;
    let mut iterations = vec![TraceEntry {
        params: x.clone(),
        cost: fx,
        gradient_norm: Some(norm(&g)),
    }];
    let mut h: Option<Vec<f64>> = None;
    let mut status = Status::MaxIters;

    if dim == 0 {
        let trace = OptimizationTrace {
            iterations,
            status: Status::Converged,
            cost_evaluations: f.evaluations,
        };
        return Ok(OptimizationResult {
            params: x,
            cost: fx,
            trace,
        });
    }

    for it in 1..=config.max_iters {
        f.iteration = it;
        let gnorm = norm(&g);
        if gnorm == 0.0 {
            status = Status::Converged;
            break;
        }
        let mut p: Vec<f64> = match &h {
            Some(h) => (0..dim)
                .map(|i| -dot(&h[i * dim..(i + 1) * dim], &g))
                .collect(),
            None => g.iter().map(|v| -v / gnorm).collect(),
        };
        let mut slope = dot(&g, &p);
        if !(slope < 0.0) {
            h = None;
            p = g.iter().map(|v| -v / gnorm).collect();
            slope = -gnorm;
        }
        let scale = fx.abs().max(REL_TOL_FLOOR);

        let Some((alpha, f_new)) = line_search(&mut f, &x, fx, &p, slope)? else {
            status = if -slope / scale < config.rel_energy_tol {
                Status::Converged
            } else {
                Status::Stalled
            };
            break;
        };
        let x_new = axpy(&x, alpha, &p);
        let g_new = grad(&x_new)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            let hm = h.get_or_insert_with(|| {
                let gamma = sy / dot(&y, &y);
                let mut m = vec![0.0; dim * dim];
                for i in 0..dim {
                    m[i * dim + i] = gamma;
                }
                m
            });
            bfgs_update(hm, &s, &y, sy, dim);
        }
        let rel = (f_new - fx).abs() / scale;
        x = x_new;
        fx = f_new;
        g = g_new;
        iterations.push(TraceEntry {
            params: x.clone(),
            cost: fx,
            gradient_norm: Some(norm(&g)),
        });
        if rel < config.rel_energy_tol {
            status = Status::Converged;
            break;
        }
    }

    // every accepted step decreases the cost, so the last iterate is the best seen
    let trace = OptimizationTrace {
        iterations,
        status,
        cost_evaluations: f.evaluations,
    };
    Ok(OptimizationResult {
        params: x,
        cost: fx,
        trace,
    })
}

/// Returns `(α, f(x + αp))` with sufficient decrease, or `None`.
fn line_search(
    f: &mut Counted<'_>,
    x: &[f64],
    fx: f64,
    p: &[f64],
    slope: f64,
) -> Result<Option<(f64, f64)>> {
    const C1: f64 = 1e-4;
    let armijo = |alpha: f64, v: f64| v <= fx + C1 * alpha * slope;
    let mut alpha = 1.0;
    let f1 = f.eval(&axpy(x, alpha, p))?;
    // quadratic model through f(0), f'(0) and f(α)
    let curvature = f1 - fx - slope * alpha;
    let mut best: Option<(f64, f64)> = if armijo(alpha, f1) {
        Some((alpha, f1))
    } else {
        None
    };
    if curvature > 0.0 {
        let aq = (-slope * alpha * alpha / (2.0 * curvature)).clamp(1e-3 * alpha, 10.0 * alpha);
        let fq = f.eval(&axpy(x, aq, p))?;
        if armijo(aq, fq) && best.is_none_or(|(_, b)| fq < b) {
            best = Some((aq, fq));
        }
        alpha = aq.min(alpha);
    }
    if best.is_some() {
        return Ok(best);
    }
    for _ in 0..40 {
        alpha *= 0.3;
        let v = f.eval(&axpy(x, alpha, p))?;
        if armijo(alpha, v) {
            return Ok(Some((alpha, v)));
        }
    }
    Ok(None)
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, dim: usize) {
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..dim)
        .map(|i| dot(&h[i * dim..(i + 1) * dim], y))
        .collect();
    let yhy = dot(y, &hy);
    // H ← H − ρ(H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
    for i in 0..dim {
        for j in 0..dim {
            h[i * dim + j] +=
                -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Simultaneous-perturbation stochastic approximation.
///
/// Each iteration evaluates the cost at `θ ± cₖΔ` with a seeded Rademacher
/// `Δ`. Runs `max_iters` iterations and returns the average of the last
/// ten iterates. When `a` is unset it is chosen so that the first update
/// has magnitude `target_step`, from the mean perturbation-gradient size
/// over `calibration_probes` probes at the starting point.
pub fn minimize_spsa(
    cost: &dyn Fn(&[f64]) -> Result<f64>,
    initial: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let gains = config.spsa;
    let dim = initial.len();
    let mut rng = rng_from_seed(config.seed);
    let mut f = Counted {
        f: cost,
        evaluations: 0,
        iteration: 0,
    };
    let big_a = gains.big_a.unwrap_or(0.1 * config.max_iters as f64);
    let mut x = initial.to_vec();

    let rademacher = |rng: &mut crate::rng::Rng| -> Vec<f64> {
        (0..dim)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect()
    };

    let a = match gains.a {
        Some(a) => a,
        None => {
            let probes = gains.calibration_probes.max(1);
            let mut mag = 0.0;
            for _ in 0..probes {
                let delta = rademacher(&mut rng);
                let fp = f.eval(&axpy(&x, gains.c, &delta))?;
                let fm = f.eval(&axpy(&x, -gains.c, &delta))?;
                mag += (fp - fm).abs() / (2.0 * gains.c);
            }
            mag /= probes as f64;
            if mag > 0.0 {
                gains.target_step * math::powf(big_a + 1.0, gains.alpha) / mag
            } else {
                gains.target_step
            }
        }
    };

    let mut iterations = Vec::with_capacity(config.max_iters);
    let mut tail: Vec<Vec<f64>> = Vec::new();
    for k in 0..config.max_iters {
        f.iteration = k + 1;
        let ak = a / math::powf(big_a + k as f64 + 1.0, gains.alpha);
        let ck = gains.c / math::powf(k as f64 + 1.0, gains.gamma);
        let delta = rademacher(&mut rng);
        let fp = f.eval(&axpy(&x, ck, &delta))?;
        let fm = f.eval(&axpy(&x, -ck, &delta))?;
        let diff = (fp - fm) / (2.0 * ck);
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi -= ak * diff * di;
        }
        iterations.push(TraceEntry {
            params: x.clone(),
            cost: (fp + fm) / 2.0,
            gradient_norm: None,
        });
        if config.max_iters - k <= 10 {
            tail.push(x.clone());
        }
    }
    if !tail.is_empty() {
        let m = tail.len() as f64;
        x = (0..dim)
            .map(|i| tail.iter().map(|t| t[i]).sum::<f64>() / m)
            .collect();
    }
    f.iteration = config.max_iters;
    let final_cost = f.eval(&x)?;
    let trace = OptimizationTrace {
        iterations,
        status: Status::MaxIters,
        cost_evaluations: f.evaluations,
    };
    Ok(OptimizationResult {
        params: x,
        cost: final_cost,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::Ansatz;
    use crate::pauli::{Observable, Pauli, PauliString};
    use crate::rng::rng_from_seed;
    use crate::statevector::{run_from_basis, Circuit};
    use core::cell::Cell;
    use rand::Rng;

    fn ry_z_cost(p: &[f64]) -> Result<f64> {
        let c = Circuit::from_gates(
            1,
            vec![Gate::Ry {
                qubit: 0,
                theta: p[0],
            }],
        )?;
        run_from_basis(&c, 0)?.expectation(&Observable::parse_terms([(1.0, "Z")])?)
    }

    fn bfgs(cost: &dyn Fn(&[f64]) -> Result<f64>, x0: &[f64]) -> OptimizationResult {
        let grad = |x: &[f64]| finite_difference_gradient(cost, x, 1e-7);
        minimize_bfgs(cost, &grad, x0, &OptimizerConfig::default()).unwrap()
    }

    #[test]
    fn shift_rule_cos_theta() {
        let g = parameter_shift_gradient(&ry_z_cost, &[FRAC_PI_2], &[ShiftRule::TwoTerm]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-14);
        let g = parameter_shift_gradient(&ry_z_cost, &[0.0], &[ShiftRule::TwoTerm]).unwrap();
        assert!(g[0].abs() < 1e-15);
    }

    #[test]
    fn rules_per_gate() {
        assert_eq!(
            ShiftRule::for_gate(&Gate::Rz {
                qubit: 0,
                theta: 0.0
            }),
            Ok(ShiftRule::TwoTerm)
        );
        assert_eq!(
            ShiftRule::for_gate(&Gate::Exchange {
                a: 0,
                b: 1,
                theta: 0.0
            }),
            Ok(ShiftRule::FourTerm)
        );
        assert_eq!(
            ShiftRule::for_gate(&Gate::Cz(0, 1)),
            Err(Error::NoShiftRule("CZ".into()))
        );
    }

    fn random_observable(n: usize, rng: &mut crate::rng::Rng) -> Observable {
        let terms: Vec<(f64, PauliString)> = (0..8)
            .map(|_| {
                let ops = (0..n)
                    .map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)])
                    .collect();
                (rng.random_range(-1.0..1.0), PauliString::new(ops).unwrap())
            })
            .collect();
        Observable::from_terms(n, terms).unwrap()
    }

    #[test]
    fn shift_rule_matches_finite_difference() {
        let mut rng = rng_from_seed(12);
        for trial in 0..20 {
            let n = 2 + trial % 3;
            let a = if trial % 2 == 0 {
                Ansatz::rsp(n, 2).unwrap()
            } else {
                Ansatz::two_local(n, 2).unwrap()
            };
            let h = random_observable(n, &mut rng);
            let reference = rng.random_range(0..1usize << n);
            let cost = |p: &[f64]| run_from_basis(&a.build(p)?, reference)?.expectation(&h);
            let p: Vec<f64> = (0..a.parameter_count())
                .map(|_| rng.random_range(0.0..2.0 * PI))
                .collect();
            let ps = parameter_shift_gradient(&cost, &p, &a.shift_rules()).unwrap();
            let fd = finite_difference_gradient(&cost, &p, 1e-5).unwrap();
            for (x, y) in ps.iter().zip(&fd) {
                assert!((x - y).abs() < 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn shift_rule_exact_against_analytic_exchange() {
        // ⟨01|R(θ)† Z⊗I R(θ)|01⟩ = cos²θ − sin²θ = cos 2θ
        let z0 = Observable::parse_terms([(1.0, "ZI")]).unwrap();
        let cost = |p: &[f64]| {
            let c = Circuit::from_gates(
                2,
                vec![Gate::Exchange {
                    a: 0,
                    b: 1,
                    theta: p[0],
                }],
            )?;
            run_from_basis(&c, 0b01)?.expectation(&z0)
        };
        for theta in [0.0, 0.3, 1.7, -2.2] {
            assert!((cost(&[theta]).unwrap() - (2.0 * theta).cos()).abs() < 1e-14);
            let g = parameter_shift_gradient(&cost, &[theta], &[ShiftRule::FourTerm]).unwrap();
            assert!((g[0] + 2.0 * (2.0 * theta).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn bfgs_quadratic_1d() {
        let r = bfgs(&|x: &[f64]| Ok((x[0] - 1.0).powi(2)), &[5.0]);
        assert!((r.params[0] - 1.0).abs() < 1e-6);
        assert_eq!(r.trace.status, Status::Converged);
    }

    #[test]
    fn bfgs_rosenbrock() {
        let rosen = |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let grad = |x: &[f64]| {
            Ok(vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ])
        };
        let r = minimize_bfgs(&rosen, &grad, &[-1.2, 1.0], &OptimizerConfig::default()).unwrap();
        assert!(
            (r.params[0] - 1.0).abs() < 1e-4 && (r.params[1] - 1.0).abs() < 1e-4,
            "{:?}",
            r.params
        );
    }

    #[test]
    fn bfgs_convex_quadratic_iteration_bound() {
        let mut rng = rng_from_seed(3);
        for dim in 2..=6 {
            // A = LLᵀ + I
            let l: Vec<f64> = (0..dim * dim)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let a: Vec<f64> = (0..dim * dim)
                .map(|k| {
                    let (i, j) = (k / dim, k % dim);
                    (0..dim)
                        .map(|m| l[i * dim + m] * l[j * dim + m])
                        .sum::<f64>()
                        + if i == j { 1.0 } else { 0.0 }
                })
                .collect();
            let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ax = |x: &[f64]| -> Vec<f64> {
                (0..dim)
                    .map(|i| dot(&a[i * dim..(i + 1) * dim], x))
                    .collect()
            };
            let cost = |x: &[f64]| Ok(0.5 * dot(x, &ax(x)) - dot(&b, x));
            let grad = |x: &[f64]| Ok(ax(x).iter().zip(&b).map(|(p, q)| p - q).collect());
            let r =
                minimize_bfgs(&cost, &grad, &vec![0.0; dim], &OptimizerConfig::default()).unwrap();
            let gnorm = norm(&grad(&r.params).unwrap());
            assert!(gnorm < 1e-8, "dim {dim}: |g| = {gnorm}");
            assert!(
                r.trace.iterations.len() - 1 <= dim + 2,
                "dim {dim}: {} iterations",
                r.trace.iterations.len() - 1
            );
        }
    }

    #[test]
    fn bfgs_is_scale_aware() {
        let base =
            |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.7).powi(4) + (x[0] * x[1]).sin();
        let r1 = bfgs(&|x: &[f64]| Ok(base(x)), &[1.0, 1.0]);
        let r2 = bfgs(&|x: &[f64]| Ok(1e6 * base(x)), &[1.0, 1.0]);
        assert_eq!(r1.trace.status, r2.trace.status);
        assert!((r1.trace.iterations.len() as i64 - r2.trace.iterations.len() as i64).abs() <= 1);
        assert!((r1.params[0] - r2.params[0]).abs() < 1e-4);
    }

    #[test]
    fn bfgs_vqe_single_qubit() {
        let grad = |p: &[f64]| parameter_shift_gradient(&ry_z_cost, p, &[ShiftRule::TwoTerm]);
        let r = minimize_bfgs(&ry_z_cost, &grad, &[0.4], &OptimizerConfig::default()).unwrap();
        assert!((r.cost + 1.0).abs() < 1e-8);
    }

    #[test]
    fn non_finite_cost_aborts() {
        let calls = Cell::new(0);
        let cost = |x: &[f64]| {
            calls.set(calls.get() + 1);
            Ok(if calls.get() > 1 {
                f64::NAN
            } else {
                x[0] * x[0]
            })
        };
        let grad = |x: &[f64]| Ok(vec![2.0 * x[0]]);
        assert!(matches!(
            minimize_bfgs(&cost, &grad, &[1.0], &OptimizerConfig::default()),
            Err(Error::NonFiniteCost { .. })
        ));
        let cfg = OptimizerConfig {
            method: Method::Spsa,
            ..Default::default()
        };
        assert!(matches!(
            minimize_spsa(&|_: &[f64]| Ok(f64::INFINITY), &[0.0], &cfg),
            Err(Error::NonFiniteCost { .. })
        ));
    }

    #[test]
    fn invalid_config() {
        let mut cfg = OptimizerConfig::default();
        cfg.spsa.alpha = 1.5;
        assert!(cfg.validate().is_err());
        cfg = OptimizerConfig {
            rel_energy_tol: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    fn spsa_cfg(seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            method: Method::Spsa,
            max_iters: 200,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn spsa_noiseless_quadratic() {
        let cost = |x: &[f64]| {
            Ok((x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2) + 0.5 * (x[2] - 2.0).powi(2))
        };
        let r = minimize_spsa(&cost, &[0.0, 0.0, 0.0], &spsa_cfg(1)).unwrap();
        let err = norm(&[r.params[0] - 1.0, r.params[1] + 0.5, r.params[2] - 2.0]);
        assert!(err < 1e-2, "{:?}", r.params);
        assert_eq!(r.trace.iterations.len(), 200);
    }

    #[test]
    fn spsa_noisy_quadratic_median() {
        let mut errs: Vec<f64> = (0..20)
            .map(|seed| {
                let noise = core::cell::RefCell::new(rng_from_seed(1000 + seed));
                let cost = |x: &[f64]| {
                    let mut r = noise.borrow_mut();
                    // uniform noise with σ = 0.01
                    let e = (r.random::<f64>() - 0.5) * 0.01 * 12f64.sqrt();
                    Ok((x[0] - 1.0).powi(2) + (x[1] + 1.0).powi(2) + e)
                };
                let r = minimize_spsa(&cost, &[0.0, 0.0], &spsa_cfg(seed)).unwrap();
                norm(&[r.params[0] - 1.0, r.params[1] + 1.0])
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[10] < 5e-2, "median error {}", errs[10]);
    }

    #[test]
    fn spsa_is_deterministic() {
        let cost = |x: &[f64]| Ok((x[0] - 1.0).powi(2));
        let a = minimize_spsa(&cost, &[0.0], &spsa_cfg(4)).unwrap();
        let b = minimize_spsa(&cost, &[0.0], &spsa_cfg(4)).unwrap();
        assert_eq!(a, b);
    }
}
