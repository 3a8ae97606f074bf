//! Fermionic operators and the Jordan-Wigner map.
//!
//! Convention: `a_p = (⊗_{q<p} Z_q) ⊗ (X_p + iY_p)/2`, so `|1⟩` on qubit `p`
//! means mode `p` is occupied. Spin orbitals are interleaved: qubit `2i` is
//! spatial orbital `i` spin-up, qubit `2i+1` is spin-down.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::pauli::{ComplexPauliSum, Observable, Pauli, PauliString};
use crate::{Error, Result};

/// Residual imaginary coefficients above this mean the input was not Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// `coefficient · f₁ f₂ … f_m`, factors applied right to left as written.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionTerm {
    pub coefficient: f64,
    pub factors: Vec<(usize, Ladder)>,
}

impl FermionTerm {
    pub fn new(coefficient: f64, factors: Vec<(usize, Ladder)>) -> Self {
        Self {
            coefficient,
            factors,
        }
    }

    /// `c · a†_p a_q`.
    pub fn hopping(coefficient: f64, p: usize, q: usize) -> Self {
        Self::new(
            coefficient,
            vec![(p, Ladder::Create), (q, Ladder::Annihilate)],
        )
    }

    /// `c · n_p`.
    pub fn number(coefficient: f64, p: usize) -> Self {
        Self::hopping(coefficient, p, p)
    }

    /// `c · n_p n_q` written as `a†_p a_p a†_q a_q`.
    pub fn density_density(coefficient: f64, p: usize, q: usize) -> Self {
        Self::new(
            coefficient,
            vec![
                (p, Ladder::Create),
                (p, Ladder::Annihilate),
                (q, Ladder::Create),
                (q, Ladder::Annihilate),
            ],
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FermionOperator {
    pub n_modes: usize,
    pub terms: Vec<FermionTerm>,
}

impl FermionOperator {
    pub fn new(n_modes: usize) -> Self {
        Self {
            n_modes,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, term: FermionTerm) -> &mut Self {
        self.terms.push(term);
        self
    }

    /// Adds `c (a†_p a_q + a†_q a_p)`.
    pub fn push_hopping_pair(&mut self, c: f64, p: usize, q: usize) -> &mut Self {
        self.push(FermionTerm::hopping(c, p, q));
        self.push(FermionTerm::hopping(c, q, p))
    }
}

fn ladder_operator(n: usize, mode: usize, kind: Ladder) -> ComplexPauliSum {
    let mut x = PauliString::identity(n);
    let mut y = PauliString::identity(n);
    for q in 0..mode {
        x = replace(x, q, Pauli::Z);
        y = replace(y, q, Pauli::Z);
    }
    x = replace(x, mode, Pauli::X);
    y = replace(y, mode, Pauli::Y);
    let y_coeff = match kind {
        Ladder::Annihilate => Complex64::new(0.0, 0.5),
        Ladder::Create => Complex64::new(0.0, -0.5),
    };
    ComplexPauliSum::from_terms(n, vec![(Complex64::new(0.5, 0.0), x), (y_coeff, y)])
        .expect("ladder strings have n qubits")
}

fn replace(s: PauliString, q: usize, p: Pauli) -> PauliString {
    let mut ops = s.ops().to_vec();
    ops[q] = p;
    PauliString::new(ops).expect("non-empty")
}

/// Maps a fermion operator to a complex Pauli sum without a Hermiticity check.
pub fn jordan_wigner_complex(f: &FermionOperator) -> Result<ComplexPauliSum> {
    let n = f.n_modes;
    if n == 0 {
        return Err(Error::InvalidConfig(
            "fermion operator needs at least one mode".into(),
        ));
    }
    let mut total = ComplexPauliSum::zero(n);
    for term in &f.terms {
        let mut product = ComplexPauliSum::from_terms(
            n,
            vec![(
                Complex64::new(term.coefficient, 0.0),
                PauliString::identity(n),
            )],
        )?;
        for &(mode, kind) in &term.factors {
            if mode >= n {
                return Err(Error::ModeOutOfRange { mode, n_modes: n });
            }
            product = product.mul(&ladder_operator(n, mode, kind))?;
        }
        total = total.add(&product)?;
    }
    Ok(total.simplified(1e-14))
}

/// Jordan-Wigner image of a Hermitian fermion operator.
pub fn jordan_wigner(f: &FermionOperator) -> Result<Observable> {
    jordan_wigner_complex(f)?.into_observable(HERMITICITY_TOL)
}

/// Total particle number `Σ_p n_p` on `n_modes` qubits.
pub fn number_operator(n_modes: usize) -> Result<Observable> {
    let mut f = FermionOperator::new(n_modes);
    for p in 0..n_modes {
        f.push(FermionTerm::number(1.0, p));
    }
    jordan_wigner(&f)
}

/// `Sz = ½ Σᵢ (n_{2i} − n_{2i+1})` on `2·n_spatial` qubits.
pub fn build_sz(n_spatial: usize) -> Result<Observable> {
    jordan_wigner(&sz_fermion(n_spatial))
}

fn sz_fermion(n_spatial: usize) -> FermionOperator {
    let mut f = FermionOperator::new(2 * n_spatial);
    for i in 0..n_spatial {
        f.push(FermionTerm::number(0.5, 2 * i));
        f.push(FermionTerm::number(-0.5, 2 * i + 1));
    }
    f
}

/// `Sz²`, formed as a Pauli-sum product; only I/Z strings appear.
pub fn build_sz_squared(n_spatial: usize) -> Result<Observable> {
    let sz = build_sz(n_spatial)?;
    sz.product(&sz)?.into_observable(HERMITICITY_TOL)
}

/// `S² = S₋S₊ + Sz(Sz + 1)` with `S₊ = Σᵢ a†_{2i} a_{2i+1}`.
pub fn build_s_squared(n_spatial: usize) -> Result<Observable> {
    let n = 2 * n_spatial;
    let mut minus_plus = FermionOperator::new(n);
    for i in 0..n_spatial {
        for j in 0..n_spatial {
            // a†_{2i+1} a_{2i} · a†_{2j} a_{2j+1}
            minus_plus.push(FermionTerm::new(
                1.0,
                vec![
                    (2 * i + 1, Ladder::Create),
                    (2 * i, Ladder::Annihilate),
                    (2 * j, Ladder::Create),
                    (2 * j + 1, Ladder::Annihilate),
                ],
            ));
        }
    }
    let sz = build_sz(n_spatial)?;
    let sz_sq = build_sz_squared(n_spatial)?;
    jordan_wigner(&minus_plus)?.add(&sz_sq)?.add(&sz)
}

/// Parameters of the bundled two-site interacting model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSiteModel {
    /// Hopping amplitude between the two sites (same spin).
    pub hopping: f64,
    /// On-site repulsion `U n↑ n↓`.
    pub onsite: f64,
    /// Site energies.
    pub site_energy: [f64; 2],
    /// Charging energy `Ec (N − N₀)²`.
    pub charging: f64,
    /// Preferred particle number `N₀`.
    pub filling: f64,
}

impl Default for TwoSiteModel {
    fn default() -> Self {
        Self {
            hopping: 1.0,
            onsite: 2.0,
            site_energy: [0.0, 0.5],
            charging: 3.0,
            filling: 2.0,
        }
    }
}

impl TwoSiteModel {
    /// Fermionic Hamiltonian on 4 spin orbitals (interleaved spin ordering).
    pub fn fermion_operator(&self) -> FermionOperator {
        let mut f = FermionOperator::new(4);
        for spin in 0..2 {
            f.push_hopping_pair(-self.hopping, spin, 2 + spin);
        }
        for site in 0..2 {
            let up = 2 * site;
            f.push(FermionTerm::density_density(self.onsite, up, up + 1));
            // Ec (N − N₀)² = Ec (N² − 2 N₀ N + N₀²) with N² = Σ n_p + Σ_{p≠q} n_p n_q
            let one_body = self.site_energy[site] + self.charging * (1.0 - 2.0 * self.filling);
            f.push(FermionTerm::number(one_body, up));
            f.push(FermionTerm::number(one_body, up + 1));
        }
        for p in 0..4 {
            for q in 0..4 {
                if p != q {
                    f.push(FermionTerm::density_density(self.charging, p, q));
                }
            }
        }
        f.push(FermionTerm::new(
            self.charging * self.filling * self.filling,
            Vec::new(),
        ));
        f
    }

    pub fn hamiltonian(&self) -> Result<Observable> {
        jordan_wigner(&self.fermion_operator())
    }
}
