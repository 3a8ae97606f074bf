//! Parameterized circuit builders.
//!
//! * **RSP** (real, symmetry preserving): `D` ladder layers of two-qubit
//!   particle-conserving blocks on `(0,1), (1,2), …, (n−2,n−1)`, one angle
//!   per block, `D·(n−1)` parameters. The block is the real exchange
//!   reflection [`Gate::Exchange`]: it keeps every state real and conserves
//!   the Hamming weight of the reference. A ladder of plain Givens rotations
//!   would only reach single Slater determinants under Jordan-Wigner.
//! * **TwoLocal RY/CZ**: an RY layer, then `D` repetitions of a linear CZ
//!   chain followed by another RY layer, `n·(D+1)` parameters.
//!
//! Parameters are consumed in gate order, so parameter `k` is the angle of
//! the `k`-th parameterized gate of the built circuit.

use alloc::vec::Vec;

use crate::optim::ShiftRule;
use crate::statevector::{Circuit, Gate};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AnsatzFamily {
    Rsp,
    TwoLocalRyCz,
}

/// Family, qubit count and depth of a parameterized circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ansatz {
    pub family: AnsatzFamily,
    pub n: usize,
    pub depth: usize,
}

impl Ansatz {
    pub fn new(family: AnsatzFamily, n: usize, depth: usize) -> Result<Self> {
        Circuit::new(n)?;
        Ok(Self { family, n, depth })
    }

    pub fn rsp(n: usize, depth: usize) -> Result<Self> {
        Self::new(AnsatzFamily::Rsp, n, depth)
    }

    pub fn two_local(n: usize, depth: usize) -> Result<Self> {
        Self::new(AnsatzFamily::TwoLocalRyCz, n, depth)
    }

    pub fn parameter_count(&self) -> usize {
        match self.family {
            AnsatzFamily::Rsp => self.depth * (self.n - 1),
            AnsatzFamily::TwoLocalRyCz => self.n * (self.depth + 1),
        }
    }

    /// Whether every output state is real for a real reference.
    pub fn is_real(&self) -> bool {
        true
    }

    /// Whether the Hamming weight of a basis reference is conserved.
    pub fn conserves_particle_number(&self) -> bool {
        self.family == AnsatzFamily::Rsp
    }

    pub fn build(&self, params: &[f64]) -> Result<Circuit> {
        match self.family {
            AnsatzFamily::Rsp => build_rsp(self, params),
            AnsatzFamily::TwoLocalRyCz => build_two_local(self, params),
        }
    }

    /// Shift rule of each parameter, in parameter order.
    pub fn shift_rules(&self) -> Vec<ShiftRule> {
        let rule = match self.family {
            AnsatzFamily::Rsp => ShiftRule::four_term(),
            AnsatzFamily::TwoLocalRyCz => ShiftRule::two_term(),
        };
        alloc::vec![rule; self.parameter_count()]
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::ParameterCount {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        Ok(())
    }
}

pub fn build_rsp(spec: &Ansatz, params: &[f64]) -> Result<Circuit> {
    if spec.family != AnsatzFamily::Rsp {
        return Err(Error::InvalidConfig("build_rsp needs an RSP ansatz".into()));
    }
    spec.check_params(params)?;
    let mut c = Circuit::new(spec.n)?;
    let mut theta = params.iter();
    for _ in 0..spec.depth {
        for a in 0..spec.n - 1 {
            c.push(Gate::Exchange {
                a,
                b: a + 1,
                theta: *theta.next().unwrap(),
            })?;
        }
    }
    Ok(c)
}

pub fn build_two_local(spec: &Ansatz, params: &[f64]) -> Result<Circuit> {
    if spec.family != AnsatzFamily::TwoLocalRyCz {
        return Err(Error::InvalidConfig(
            "build_two_local needs a TwoLocal ansatz".into(),
        ));
    }
    spec.check_params(params)?;
    let mut c = Circuit::new(spec.n)?;
    let mut theta = params.iter();
    for layer in 0..=spec.depth {
        if layer > 0 {
            for a in 0..spec.n - 1 {
                c.push(Gate::Cz(a, a + 1))?;
            }
        }
        for qubit in 0..spec.n {
            c.push(Gate::Ry {
                qubit,
                theta: *theta.next().unwrap(),
            })?;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{circuit_unitary, gate_matrix, CMatrix};
    use crate::rng::rng_from_seed;
    use crate::statevector::run_from_basis;
    use core::f64::consts::PI;
    use rand::Rng;

    fn random_params(a: &Ansatz, rng: &mut crate::rng::Rng) -> Vec<f64> {
        (0..a.parameter_count())
            .map(|_| rng.random_range(0.0..2.0 * PI))
            .collect()
    }

    #[test]
    fn published_parameter_counts() {
        assert_eq!(Ansatz::rsp(12, 10).unwrap().parameter_count(), 110);
        assert_eq!(Ansatz::rsp(8, 20).unwrap().parameter_count(), 140);
        assert_eq!(Ansatz::rsp(6, 10).unwrap().parameter_count(), 50);
        assert_eq!(Ansatz::two_local(2, 4).unwrap().parameter_count(), 10);
    }

    #[test]
    fn wrong_parameter_count() {
        let a = Ansatz::rsp(3, 2).unwrap();
        assert_eq!(
            a.build(&[0.0; 3]).unwrap_err(),
            Error::ParameterCount {
                expected: 4,
                got: 3
            }
        );
        assert!(build_two_local(&a, &[0.0; 4]).is_err());
    }

    #[test]
    fn rsp_layer_order() {
        let c = Ansatz::rsp(3, 2)
            .unwrap()
            .build(&[0.1, 0.2, 0.3, 0.4])
            .unwrap();
        let pairs: Vec<(usize, usize, f64)> = c
            .gates()
            .iter()
            .map(|g| match g {
                Gate::Exchange { a, b, theta } => (*a, *b, *theta),
                _ => panic!("unexpected gate"),
            })
            .collect();
        assert_eq!(
            pairs,
            alloc::vec![(0, 1, 0.1), (1, 2, 0.2), (0, 1, 0.3), (1, 2, 0.4)]
        );
    }

    #[test]
    fn two_local_single_layer() {
        let c = Ansatz::two_local(2, 0).unwrap().build(&[PI, 0.0]).unwrap();
        let s = run_from_basis(&c, 0).unwrap();
        assert!((s.amplitudes()[0b10].norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_local_matches_dense_product() {
        let a = Ansatz::two_local(3, 1).unwrap();
        let mut rng = rng_from_seed(2);
        let p = random_params(&a, &mut rng);
        let ry = |q: usize, t: f64| gate_matrix(&Gate::Ry { qubit: q, theta: t }, 3).unwrap();
        let cz = |a: usize, b: usize| gate_matrix(&Gate::Cz(a, b), 3).unwrap();
        let mut want = CMatrix::identity(8);
        for m in [
            ry(0, p[0]),
            ry(1, p[1]),
            ry(2, p[2]),
            cz(0, 1),
            cz(1, 2),
            ry(0, p[3]),
            ry(1, p[4]),
            ry(2, p[5]),
        ] {
            want = m.matmul(&want);
        }
        let got = circuit_unitary(&a.build(&p).unwrap()).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-13);
    }

    #[test]
    fn rsp_conserves_weight_and_stays_real() {
        let mut rng = rng_from_seed(4);
        for trial in 0..200 {
            let n = 2 + trial % 5;
            let a = Ansatz::rsp(n, 1 + trial % 4).unwrap();
            let c = a.build(&random_params(&a, &mut rng)).unwrap();
            let reference = rng.random_range(0..1usize << n);
            let w = reference.count_ones();
            let s = run_from_basis(&c, reference).unwrap();
            for (x, amp) in s.amplitudes().iter().enumerate() {
                if x.count_ones() != w {
                    assert_eq!(amp.norm_sqr(), 0.0);
                }
                assert_eq!(amp.im, 0.0);
            }
        }
    }

    #[test]
    fn rsp_zero_parameters_fix_every_reference() {
        let a = Ansatz::rsp(4, 3).unwrap();
        let c = a.build(&alloc::vec![0.0; a.parameter_count()]).unwrap();
        for r in 0..16 {
            let s = run_from_basis(&c, r).unwrap();
            assert!((s.amplitudes()[r].norm_sqr() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shift_rules_follow_family() {
        assert_eq!(
            Ansatz::rsp(3, 1).unwrap().shift_rules(),
            alloc::vec![ShiftRule::four_term(); 2]
        );
        assert_eq!(
            Ansatz::two_local(2, 1).unwrap().shift_rules(),
            alloc::vec![ShiftRule::two_term(); 4]
        );
    }
}
