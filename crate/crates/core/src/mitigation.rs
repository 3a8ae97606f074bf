//! Readout-error model and measurement-error mitigation.
//!
//! Readout noise is purely classical: a measured bitstring `x` is reported
//! as `y` with probability `⟨y|A|x⟩`. Mitigation calibrates `A` by
//! preparing every basis state and inverts it on measured histograms.

use alloc::vec;
use alloc::vec::Vec;

use crate::rng::{binomial, derive_seed, rng_from_seed, Rng};
use crate::statevector::sample_counts;
use crate::{Error, Result};

/// Confusion matrices are only built up to this many qubits.
pub const MAX_CALIBRATION_QUBITS: usize = 10;

/// Mitigation refuses matrices whose 1-norm condition number exceeds this.
pub const MAX_CONDITION: f64 = 1e6;

const STOCHASTIC_TOL: f64 = 1e-9;

/// Per-qubit readout flip probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlipProbabilities {
    /// P(read 1 | state 0)
    pub p01: f64,
    /// P(read 0 | state 1)
    pub p10: f64,
}

impl FlipProbabilities {
    pub fn symmetric(p: f64) -> Self {
        Self { p01: p, p10: p }
    }

    fn validate(&self) -> Result<()> {
        for p in [self.p01, self.p10] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "flip probability {p} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Column-stochastic `2ⁿ × 2ⁿ` matrix; `get(y, x)` is P(measure y | prepared x).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    n: usize,
    entries: Vec<f64>,
    calibration_shots: Option<u64>,
}

impl ConfusionMatrix {
    /// Row-major entries (`entries[y * 2ⁿ + x]`).
    pub fn new(n: usize, entries: Vec<f64>, calibration_shots: Option<u64>) -> Result<Self> {
        if n == 0 || n > MAX_CALIBRATION_QUBITS {
            return Err(Error::TooManyQubits {
                n,
                cap: MAX_CALIBRATION_QUBITS,
            });
        }
        let dim = 1usize << n;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                got: entries.len(),
                n: 2 * n,
            });
        }
        for x in 0..dim {
            let mut sum = 0.0;
            for y in 0..dim {
                let e = entries[y * dim + x];
                if !(-1e-12..=1.0 + 1e-12).contains(&e) {
                    return Err(Error::NotStochastic { column: x, sum: e });
                }
                sum += e;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { column: x, sum });
            }
        }
        Ok(Self {
            n,
            entries,
            calibration_shots,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let dim = 1usize << n.min(MAX_CALIBRATION_QUBITS + 1);
        let mut e = vec![0.0; dim * dim];
        for i in 0..dim {
            e[i * dim + i] = 1.0;
        }
        Self::new(n, e, None)
    }

    /// Exact tensor-product matrix of independent per-qubit flips (qubit 0 most significant).
    pub fn from_flips(flips: &[FlipProbabilities]) -> Result<Self> {
        let n = flips.len();
        if n == 0 || n > MAX_CALIBRATION_QUBITS {
            return Err(Error::TooManyQubits {
                n,
                cap: MAX_CALIBRATION_QUBITS,
            });
        }
        for f in flips {
            f.validate()?;
        }
        let dim = 1usize << n;
        let mut e = vec![0.0; dim * dim];
        for y in 0..dim {
            for x in 0..dim {
                let mut p = 1.0;
                for (q, f) in flips.iter().enumerate() {
                    let bit = 1 << (n - 1 - q);
                    p *= match (x & bit != 0, y & bit != 0) {
                        (false, false) => 1.0 - f.p01,
                        (false, true) => f.p01,
                        (true, false) => f.p10,
                        (true, true) => 1.0 - f.p10,
                    };
                }
                e[y * dim + x] = p;
            }
        }
        Self::new(n, e, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.entries[y * self.dim() + x]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn calibration_shots(&self) -> Option<u64> {
        self.calibration_shots
    }

    pub fn column(&self, x: usize) -> Vec<f64> {
        (0..self.dim()).map(|y| self.get(y, x)).collect()
    }

    /// Forward channel on a probability vector, `A·p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|y| (0..dim).map(|x| self.get(y, x) * p[x]).sum())
            .collect()
    }

    /// `A⁻¹` by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Vec<f64>> {
        invert(&self.entries, self.dim())
    }

    /// 1-norm condition number `‖A‖₁‖A⁻¹‖₁` (infinite when singular).
    pub fn condition_number(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => one_norm(&self.entries, self.dim()) * one_norm(&inv, self.dim()),
            Err(_) => f64::INFINITY,
        }
    }
}

fn one_norm(m: &[f64], dim: usize) -> f64 {
    (0..dim)
        .map(|c| (0..dim).map(|r| m[r * dim + c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn invert(m: &[f64], dim: usize) -> Result<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; dim * dim];
    for i in 0..dim {
        inv[i * dim + i] = 1.0;
    }
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&r, &s| a[r * dim + col].abs().total_cmp(&a[s * dim + col].abs()))
            .unwrap();
        let pv = a[pivot * dim + col];
        if pv.abs() < 1e-300 {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        if pivot != col {
            for k in 0..dim {
                a.swap(pivot * dim + k, col * dim + k);
                inv.swap(pivot * dim + k, col * dim + k);
            }
        }
        for k in 0..dim {
            a[col * dim + k] /= pv;
            inv[col * dim + k] /= pv;
        }
        for r in 0..dim {
            if r == col {
                continue;
            }
            let f = a[r * dim + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..dim {
                a[r * dim + k] -= f * a[col * dim + k];
                inv[r * dim + k] -= f * inv[col * dim + k];
            }
        }
    }
    Ok(inv)
}

/// Source of readout errors applied to sampled bitstrings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ReadoutChannel {
    /// Independent flips per qubit.
    PerQubit(Vec<FlipProbabilities>),
    /// Arbitrary column-stochastic map.
    Full(ConfusionMatrix),
}

impl ReadoutChannel {
    pub fn uniform(n: usize, p: f64) -> Self {
        ReadoutChannel::PerQubit(vec![FlipProbabilities::symmetric(p); n])
    }

    pub fn n(&self) -> usize {
        match self {
            ReadoutChannel::PerQubit(f) => f.len(),
            ReadoutChannel::Full(cm) => cm.n(),
        }
    }

    pub fn is_noiseless(&self) -> bool {
        match self {
            ReadoutChannel::PerQubit(f) => f.iter().all(|f| f.p01 == 0.0 && f.p10 == 0.0),
            ReadoutChannel::Full(cm) => (0..cm.dim()).all(|x| cm.get(x, x) == 1.0),
        }
    }

    /// The channel's exact confusion matrix.
    pub fn matrix(&self) -> Result<ConfusionMatrix> {
        match self {
            ReadoutChannel::PerQubit(f) => ConfusionMatrix::from_flips(f),
            ReadoutChannel::Full(cm) => Ok(cm.clone()),
        }
    }

    /// Models calibration staleness: per-qubit flip probabilities scaled by
    /// `factor` (clamped to `[0, 1]`). A full matrix `A` becomes
    /// `I + factor·(A − I)`.
    pub fn drifted(&self, factor: f64) -> Result<Self> {
        match self {
            ReadoutChannel::PerQubit(f) => Ok(ReadoutChannel::PerQubit(
                f.iter()
                    .map(|f| FlipProbabilities {
                        p01: (f.p01 * factor).clamp(0.0, 1.0),
                        p10: (f.p10 * factor).clamp(0.0, 1.0),
                    })
                    .collect(),
            )),
            ReadoutChannel::Full(cm) => {
                let dim = cm.dim();
                let e = (0..dim * dim)
                    .map(|k| {
                        let id = if k / dim == k % dim { 1.0 } else { 0.0 };
                        id + factor * (cm.entries[k] - id)
                    })
                    .collect();
                Ok(ReadoutChannel::Full(ConfusionMatrix::new(cm.n(), e, None)?))
            }
        }
    }

    /// Passes each recorded outcome through the channel.
    pub fn apply_to_counts(&self, counts: &[u64], rng: &mut Rng) -> Vec<u64> {
        let mut out = vec![0u64; counts.len()];
        match self {
            ReadoutChannel::PerQubit(flips) => {
                // flips on different qubits are independent, so they can be
                // applied one qubit at a time to whole buckets
                let n = flips.len();
                out.copy_from_slice(counts);
                for (q, f) in flips.iter().enumerate() {
                    let bit = 1 << (n - 1 - q);
                    let before = out.clone();
                    for (x, &c) in before.iter().enumerate() {
                        let p = if x & bit != 0 { f.p10 } else { f.p01 };
                        let moved = binomial(c, p, rng);
                        out[x] -= moved;
                        out[x ^ bit] += moved;
                    }
                }
            }
            ReadoutChannel::Full(cm) => {
                for (x, &c) in counts.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    for (o, k) in out.iter_mut().zip(sample_counts(&cm.column(x), c, rng)) {
                        *o += k;
                    }
                }
            }
        }
        out
    }
}

/// Estimates the channel's confusion matrix by preparing each of the `2ⁿ`
/// basis states `n_cal` times. Column `x` uses seed `derive_seed(seed, x)`.
pub fn calibrate_confusion(
    channel: &ReadoutChannel,
    n_cal: u64,
    seed: u64,
) -> Result<ConfusionMatrix> {
    if n_cal < 1 {
        return Err(Error::NoShots);
    }
    let n = channel.n();
    if n == 0 || n > MAX_CALIBRATION_QUBITS {
        return Err(Error::TooManyQubits {
            n,
            cap: MAX_CALIBRATION_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut e = vec![0.0; dim * dim];
    for x in 0..dim {
        let mut prepared = vec![0u64; dim];
        prepared[x] = n_cal;
        let mut rng = rng_from_seed(derive_seed(seed, x as u64));
        let measured = channel.apply_to_counts(&prepared, &mut rng);
        for (y, m) in measured.into_iter().enumerate() {
            e[y * dim + x] = m as f64 / n_cal as f64;
        }
    }
    ConfusionMatrix::new(n, e, Some(n_cal))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MitigationMode {
    /// `A⁻¹·h`; small negative quasi-probabilities are kept.
    #[default]
    Inverse,
    /// `argmin ‖A·p − h‖₂` over probability vectors `p`.
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mitigated {
    pub probabilities: Vec<f64>,
    /// Some entry is below zero (only possible in inverse mode).
    pub has_negative: bool,
    pub condition_number: f64,
}

/// `A⁻¹ · (counts / Σ counts)`.
pub fn mitigate(counts: &[u64], cm: &ConfusionMatrix) -> Result<Mitigated> {
    mitigate_with(counts, cm, MitigationMode::Inverse)
}

pub fn mitigate_with(
    counts: &[u64],
    cm: &ConfusionMatrix,
    mode: MitigationMode,
) -> Result<Mitigated> {
    let dim = cm.dim();
    if counts.len() != dim {
        return Err(Error::DimensionMismatch {
            got: counts.len(),
            n: cm.n(),
        });
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoShots);
    }
    let h: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    mitigate_distribution(&h, cm, mode)
}

/// Mitigates an already normalized measured distribution.
pub fn mitigate_distribution(
    h: &[f64],
    cm: &ConfusionMatrix,
    mode: MitigationMode,
) -> Result<Mitigated> {
    let dim = cm.dim();
    if h.len() != dim {
        return Err(Error::DimensionMismatch {
            got: h.len(),
            n: cm.n(),
        });
    }
    let inv = cm.inverse()?;
    let cond = one_norm(&cm.entries, dim) * one_norm(&inv, dim);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let direct: Vec<f64> = (0..dim)
        .map(|r| (0..dim).map(|c| inv[r * dim + c] * h[c]).sum())
        .collect();
    let probabilities = match mode {
        MitigationMode::Inverse => direct,
        MitigationMode::LeastSquares => {
            constrained_least_squares(cm, h, project_to_simplex(&direct))
        }
    };
    let has_negative = probabilities.iter().any(|&p| p < 0.0);
    Ok(Mitigated {
        probabilities,
        has_negative,
        condition_number: cond,
    })
}

/// Projected gradient descent on `‖A p − h‖²` over the simplex.
fn constrained_least_squares(cm: &ConfusionMatrix, h: &[f64], start: Vec<f64>) -> Vec<f64> {
    let dim = cm.dim();
    // ‖A‖₂² ≤ ‖A‖₁‖A‖∞
    let inf_norm = (0..dim)
        .map(|r| (0..dim).map(|c| cm.get(r, c).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / (one_norm(&cm.entries, dim) * inf_norm).max(1e-12);
    let mut p = start;
    for _ in 0..10_000 {
        let r: Vec<f64> = cm.apply(&p).iter().zip(h).map(|(a, b)| a - b).collect();
        let grad: Vec<f64> = (0..dim)
            .map(|c| (0..dim).map(|y| cm.get(y, c) * r[y]).sum())
            .collect();
        let next = project_to_simplex(
            &p.iter()
                .zip(&grad)
                .map(|(x, g)| x - step * g)
                .collect::<Vec<_>>(),
        );
        let change = next
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        p = next;
        if change < 1e-15 {
            break;
        }
    }
    p
}

/// Euclidean projection onto `{p ≥ 0, Σ p = 1}`.
fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::parity_expectation;

    #[test]
    fn noiseless_calibration_is_identity() {
        let ch = ReadoutChannel::uniform(3, 0.0);
        assert!(ch.is_noiseless());
        let cm = calibrate_confusion(&ch, 100, 1).unwrap();
        assert_eq!(
            cm.entries(),
            ConfusionMatrix::identity(3).unwrap().entries()
        );
        assert_eq!(cm.calibration_shots(), Some(100));
    }

    #[test]
    fn single_qubit_calibration_statistics() {
        let n_cal = 100_000;
        let cm = calibrate_confusion(&ReadoutChannel::uniform(1, 0.1), n_cal, 7).unwrap();
        let sigma = (0.1f64 * 0.9 / n_cal as f64).sqrt();
        for (y, x, want) in [(0, 0, 0.9), (1, 0, 0.1), (0, 1, 0.1), (1, 1, 0.9)] {
            assert!((cm.get(y, x) - want).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn product_channel_calibrates_to_kron() {
        let flips = [
            FlipProbabilities {
                p01: 0.05,
                p10: 0.1,
            },
            FlipProbabilities {
                p01: 0.02,
                p10: 0.08,
            },
        ];
        let exact = ConfusionMatrix::from_flips(&flips).unwrap();
        let n_cal = 100_000;
        let cm = calibrate_confusion(&ReadoutChannel::PerQubit(flips.to_vec()), n_cal, 3).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let p = exact.get(y, x);
                let sigma = (p * (1.0 - p) / n_cal as f64).sqrt().max(1e-9);
                assert!((cm.get(y, x) - p).abs() < 5.0 * sigma, "({y},{x})");
            }
        }
        // single-qubit blocks: ⟨0|A|1⟩ on qubit 0 with qubit 1 at 0
        assert!((exact.get(0b00, 0b10) - 0.1 * 0.98).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(
            ConfusionMatrix::new(1, vec![0.9, 0.0, 0.2, 1.0], None),
            Err(Error::NotStochastic { .. })
        ));
        assert!(ConfusionMatrix::new(1, vec![1.0, 0.0], None).is_err());
        let singular = ConfusionMatrix::new(1, vec![0.5, 0.5, 0.5, 0.5], None).unwrap();
        assert!(matches!(
            mitigate(&[3, 7], &singular),
            Err(Error::IllConditioned(_))
        ));
        assert_eq!(
            calibrate_confusion(&ReadoutChannel::uniform(1, 0.1), 0, 1),
            Err(Error::NoShots)
        );
    }

    #[test]
    fn near_singular_refused() {
        let p = 0.5 - 1e-8;
        let cm = ConfusionMatrix::from_flips(&[FlipProbabilities::symmetric(p)]).unwrap();
        assert!(cm.condition_number() > MAX_CONDITION);
        assert!(matches!(
            mitigate(&[1, 1], &cm),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn identity_leaves_histogram_unchanged() {
        let cm = ConfusionMatrix::identity(2).unwrap();
        let m = mitigate(&[1, 2, 3, 4], &cm).unwrap();
        assert_eq!(m.probabilities, vec![0.1, 0.2, 0.3, 0.4]);
        assert!(!m.has_negative);
    }

    #[test]
    fn inverse_undoes_exact_forward_channel() {
        let cm = ConfusionMatrix::from_flips(&[
            FlipProbabilities {
                p01: 0.013,
                p10: 0.03,
            },
            FlipProbabilities::symmetric(0.07),
        ])
        .unwrap();
        let p = [0.1, 0.5, 0.15, 0.25];
        let measured = cm.apply(&p);
        let back = mitigate_distribution(&measured, &cm, MitigationMode::Inverse).unwrap();
        for (a, b) in back.probabilities.iter().zip(p) {
            assert!((a - b).abs() < 1e-10);
        }
        let ls = mitigate_distribution(&measured, &cm, MitigationMode::LeastSquares).unwrap();
        for (a, b) in ls.probabilities.iter().zip(p) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn finite_sample_matrix_inverts_its_own_output() {
        let cm = calibrate_confusion(&ReadoutChannel::uniform(2, 0.05), 1000, 9).unwrap();
        let p = [0.4, 0.3, 0.2, 0.1];
        let back = mitigate_distribution(&cm.apply(&p), &cm, MitigationMode::Inverse).unwrap();
        for (a, b) in back.probabilities.iter().zip(p) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn negatives_flagged_and_least_squares_stays_on_simplex() {
        let cm = ConfusionMatrix::from_flips(&[FlipProbabilities::symmetric(0.1)]).unwrap();
        // all shots read 0: the inverse overshoots past 1
        let m = mitigate(&[100, 0], &cm).unwrap();
        assert!(m.has_negative);
        assert!((m.probabilities[0] - 1.125).abs() < 1e-12);
        let ls = mitigate_with(&[100, 0], &cm, MitigationMode::LeastSquares).unwrap();
        assert!(!ls.has_negative);
        assert!((ls.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((ls.probabilities[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mitigation_recovers_z_contraction() {
        let p = 0.1;
        let ch = ReadoutChannel::uniform(1, p);
        let cm = ch.matrix().unwrap();
        let shots = 100_000u64;
        let mut rng = rng_from_seed(5);
        // true state |0⟩: ⟨Z⟩ = 1
        let noisy = ch.apply_to_counts(&[shots, 0], &mut rng);
        let raw = parity_expectation(
            &noisy
                .iter()
                .map(|&c| c as f64 / shots as f64)
                .collect::<Vec<_>>(),
            1,
        );
        let sigma = 2.0 * (p * (1.0 - p) / shots as f64).sqrt();
        assert!((raw - (1.0 - 2.0 * p)).abs() < 5.0 * sigma);
        let fixed = parity_expectation(&mitigate(&noisy, &cm).unwrap().probabilities, 1);
        assert!((fixed - 1.0).abs() < 5.0 * sigma / (1.0 - 2.0 * p));
    }

    #[test]
    fn drift_scales_flips() {
        let ch = ReadoutChannel::uniform(2, 0.02).drifted(1.5).unwrap();
        assert_eq!(ch, ReadoutChannel::uniform(2, 0.03));
        let full = ReadoutChannel::Full(
            ConfusionMatrix::from_flips(&[FlipProbabilities::symmetric(0.1)]).unwrap(),
        );
        let d = full.drifted(0.5).unwrap().matrix().unwrap();
        assert!((d.get(1, 0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn full_channel_sampling_matches_matrix() {
        let cm = ConfusionMatrix::from_flips(&[FlipProbabilities { p01: 0.2, p10: 0.3 }]).unwrap();
        let ch = ReadoutChannel::Full(cm.clone());
        let n_cal = 200_000;
        let est = calibrate_confusion(&ch, n_cal, 11).unwrap();
        for y in 0..2 {
            for x in 0..2 {
                let p = cm.get(y, x);
                assert!((est.get(y, x) - p).abs() < 5.0 * (p * (1.0 - p) / n_cal as f64).sqrt());
            }
        }
    }
}
