//! Bundled example problems and the generators behind them.
//!
//! * `z`: one qubit, `H = Z`.
//! * `zz`: two qubits, `H = ZZ + 0.5·XI`.
//! * `two_site`: the four-spin-orbital two-site fermion model under
//!   Jordan-Wigner with an `α = 4` Sz² penalty.
//! * `lih_style`: the same model restricted to its two-electron `Sz = 0`
//!   sector, re-expanded in Pauli strings on two qubits, with dipole
//!   operators along the bond (`z`) and a transverse hopping dipole (`x`).
//! * `sweep_0` … `sweep_4`: `H(x) = (1 − x)·H_a + x·H_b` on two qubits for
//!   `x = 0, ¼, ½, ¾, 1`, with `H_a`, `H_b` two `lih_style` geometries.
//!
//! The text files under `data/` are these generators' output, written in the
//! canonical problem-file format.

use qtrans_core::fermion::{jordan_wigner, FermionOperator, FermionTerm, TwoSiteModel};
use qtrans_core::oracle::{observable_from_matrix, observable_to_matrix, CMatrix};
use qtrans_core::{Observable, Result};

use crate::problem::{parse_problem, ProblemFile};

pub const NAMES: [&str; 9] = [
    "z",
    "zz",
    "two_site",
    "lih_style",
    "sweep_0",
    "sweep_1",
    "sweep_2",
    "sweep_3",
    "sweep_4",
];

/// Four-qubit basis states (qubit order 0↑ 0↓ 1↑ 1↓) spanning `N = 2, Sz = 0`.
pub const SECTOR_BASIS: [usize; 4] = [0b0011, 0b0110, 0b1001, 0b1100];

const DROP_TOL: f64 = 1e-12;

/// Bond half-length: the sites sit at `z = ∓BOND_HALF_LENGTH`.
pub const BOND_HALF_LENGTH: f64 = 0.8;

/// Strength of the transverse (`x`) transition dipole.
pub const TRANSVERSE_DIPOLE: f64 = 0.15;

pub const SWEEP_POINTS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        "z" => include_str!("../data/z.txt"),
        "zz" => include_str!("../data/zz.txt"),
        "two_site" => include_str!("../data/two_site.txt"),
        "lih_style" => include_str!("../data/lih_style.txt"),
        "sweep_0" => include_str!("../data/sweep_0.txt"),
        "sweep_1" => include_str!("../data/sweep_1.txt"),
        "sweep_2" => include_str!("../data/sweep_2.txt"),
        "sweep_3" => include_str!("../data/sweep_3.txt"),
        "sweep_4" => include_str!("../data/sweep_4.txt"),
        _ => return None,
    })
}

/// Parses a bundled file by name.
pub fn load(name: &str) -> Option<ProblemFile> {
    text(name).map(|t| parse_problem(t).expect("bundled files parse"))
}

/// Freshly generated problem by name.
pub fn generate(name: &str) -> Result<Option<ProblemFile>> {
    Ok(Some(match name {
        "z" => ProblemFile::new(Observable::parse_terms([(1.0, "Z")])?),
        "zz" => ProblemFile::new(Observable::parse_terms([(1.0, "ZZ"), (0.5, "XI")])?),
        "two_site" => two_site_problem()?,
        "lih_style" => lih_style_problem(&TwoSiteModel::default())?,
        s if s.starts_with("sweep_") => match s[6..].parse::<usize>() {
            Ok(i) if i < SWEEP_POINTS.len() => sweep_problem(SWEEP_POINTS[i])?,
            _ => return Ok(None),
        },
        _ => return Ok(None),
    }))
}

pub fn two_site_problem() -> Result<ProblemFile> {
    let model = TwoSiteModel::default();
    let mut p = ProblemFile::new(model.hamiltonian()?);
    p.dipoles = four_qubit_dipoles()?.map(Some);
    p.penalty_sz2_alpha = Some(4.0);
    Ok(p)
}

/// Dipoles on four spin orbitals: `z` from site occupations, `x` a
/// spin-summed inter-site hopping, `y` zero.
fn four_qubit_dipoles() -> Result<[Observable; 3]> {
    let mut z = FermionOperator::new(4);
    let mut x = FermionOperator::new(4);
    for spin in 0..2 {
        z.push(FermionTerm::number(-BOND_HALF_LENGTH, spin));
        z.push(FermionTerm::number(BOND_HALF_LENGTH, 2 + spin));
        x.push_hopping_pair(TRANSVERSE_DIPOLE, spin, 2 + spin);
    }
    Ok([jordan_wigner(&x)?, Observable::zero(4), jordan_wigner(&z)?])
}

/// `⟨bᵢ|O|bⱼ⟩` over `basis`, re-expanded as a Pauli sum on `log₂|basis|` qubits.
pub fn restrict_to_basis(o: &Observable, basis: &[usize]) -> Result<Observable> {
    let full = observable_to_matrix(o)?;
    let small = CMatrix::from_fn(basis.len(), |r, c| full[(basis[r], basis[c])]);
    observable_from_matrix(&small, DROP_TOL)
}

pub fn lih_style_problem(model: &TwoSiteModel) -> Result<ProblemFile> {
    let h = restrict_to_basis(&model.hamiltonian()?, &SECTOR_BASIS)?;
    let d = four_qubit_dipoles()?;
    let mut p = ProblemFile::new(h);
    let mut dipoles = [None, None, None];
    for (slot, o) in dipoles.iter_mut().zip(d.iter()) {
        *slot = Some(restrict_to_basis(o, &SECTOR_BASIS)?);
    }
    p.dipoles = dipoles;
    Ok(p)
}

/// Geometry `a` of the sweep: the default model. Geometry `b`: weaker hopping
/// and a larger site-energy offset, as for a stretched bond.
pub fn sweep_endpoints() -> Result<(Observable, Observable)> {
    let a = lih_style_problem(&TwoSiteModel::default())?.hamiltonian;
    let stretched = TwoSiteModel {
        hopping: 0.6,
        site_energy: [0.0, 0.9],
        ..TwoSiteModel::default()
    };
    let b = lih_style_problem(&stretched)?.hamiltonian;
    Ok((a, b))
}

pub fn sweep_problem(x: f64) -> Result<ProblemFile> {
    let (a, b) = sweep_endpoints()?;
    let h = a.scaled(1.0 - x).add(&b.scaled(x))?;
    let mut p = lih_style_problem(&TwoSiteModel::default())?;
    p.hamiltonian = h.normalized_with(DROP_TOL);
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qtrans_core::fermion::build_sz_squared;
    use qtrans_core::oracle::exact_eigensystem;

    #[test]
    fn data_files_match_generators() {
        for name in NAMES {
            let generated = generate(name).unwrap().unwrap();
            if std::env::var_os("QTRANS_REGENERATE").is_some() {
                let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
                    .join("data")
                    .join(format!("{name}.txt"));
                std::fs::write(path, generated.to_string()).unwrap();
                continue;
            }
            assert_eq!(
                text(name).unwrap(),
                generated.to_string(),
                "data/{name}.txt is stale"
            );
            assert_eq!(load(name).unwrap(), generated);
        }
        assert!(generate("sweep_9").unwrap().is_none());
        assert!(generate("nope").unwrap().is_none());
    }

    #[test]
    fn sector_restriction_keeps_the_spectrum() {
        let model = TwoSiteModel::default();
        let p = lih_style_problem(&model).unwrap();
        assert_eq!(p.n(), 2);
        let small = exact_eigensystem(&p.hamiltonian, None, None)
            .unwrap()
            .eigenvalues;
        let h4 = build_sz_squared(2)
            .unwrap()
            .scale_add(4.0, &model.hamiltonian().unwrap())
            .unwrap();
        let big = exact_eigensystem(&h4, Some(3), None).unwrap().eigenvalues;
        for (a, b) in small.iter().zip(&big) {
            assert!((a - b).abs() < 1e-10, "{small:?} vs {big:?}");
        }
    }

    #[test]
    fn two_site_low_spectrum() {
        let h = two_site_problem().unwrap().penalized_hamiltonian().unwrap();
        let e = exact_eigensystem(&h, Some(3), None).unwrap().eigenvalues;
        assert!((e[0] + 0.757_545_168).abs() < 1e-8);
        assert!((e[1] - 0.5).abs() < 1e-10);
        assert!((e[2] - 2.387_932).abs() < 1e-6);
    }

    #[test]
    fn sweep_endpoints_are_lih_style_geometries() {
        let (a, b) = sweep_endpoints().unwrap();
        assert_eq!(
            sweep_problem(0.0).unwrap().hamiltonian,
            a.normalized_with(DROP_TOL)
        );
        assert_eq!(
            sweep_problem(1.0).unwrap().hamiltonian,
            b.normalized_with(DROP_TOL)
        );
    }
}
