//! Pauli strings and real-weighted Pauli sums.
//!
//! Text form: one character per qubit from `{I, X, Y, Z}`, qubit 0 leftmost.
//! `"XIZ"` is `X₀ ⊗ I₁ ⊗ Z₂`.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Mul;
use core::str::FromStr;

use num_complex::Complex64;

use crate::math;
use crate::{Error, Result};

/// Default threshold below which normalized coefficients are dropped.
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

/// Single-qubit Pauli operator. Declaration order gives the lexicographic
/// order used for term sorting: `I < X < Y < Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidPauliChar(other)),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Product `self · other` as `(phase, pauli)`.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Pauli) -> (Phase, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (Phase::One, p),
            (a, b) if a == b => (Phase::One, I),
            (X, Y) => (Phase::I, Z),
            (Y, Z) => (Phase::I, X),
            (Z, X) => (Phase::I, Y),
            (Y, X) => (Phase::MinusI, Z),
            (Z, Y) => (Phase::MinusI, X),
            (X, Z) => (Phase::MinusI, Y),
            _ => unreachable!(),
        }
    }
}

/// A power of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    I,
    MinusOne,
    MinusI,
}

impl Phase {
    fn exponent(self) -> u8 {
        match self {
            Phase::One => 0,
            Phase::I => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    /// `i^k` for any `k`.
    pub fn from_exponent(k: u32) -> Self {
        match k % 4 {
            0 => Phase::One,
            1 => Phase::I,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::One => Complex64::new(1.0, 0.0),
            Phase::I => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;

    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Phase) -> Phase {
        Phase::from_exponent(u32::from(self.exponent() + rhs.exponent()))
    }
}

/// Tensor product of single-qubit Paulis; `ops[q]` acts on qubit `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidConfig(
                "Pauli string needs at least one qubit".into(),
            ));
        }
        Ok(Self { ops })
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "Pauli string needs at least one qubit");
        Self {
            ops: alloc::vec![Pauli::I; n],
        }
    }

    /// `pauli` on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, pauli: Pauli) -> Result<Self> {
        if qubit >= n {
            return Err(Error::QubitOutOfRange { index: qubit, n });
        }
        let mut s = Self::identity(n);
        s.ops[qubit] = pauli;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.ops[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.ops.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Basis-index bit of `qubit` (qubit 0 is the most significant bit).
    pub(crate) fn bit(n: usize, qubit: usize) -> usize {
        1usize << (n - 1 - qubit)
    }

    /// Bits flipped by the string (positions of X and Y).
    pub fn flip_mask(&self) -> usize {
        self.mask_of(|p| matches!(p, Pauli::X | Pauli::Y))
    }

    /// Bits contributing a `(-1)^bit` sign (positions of Y and Z).
    pub fn sign_mask(&self) -> usize {
        self.mask_of(|p| matches!(p, Pauli::Y | Pauli::Z))
    }

    /// Bits where the string acts non-trivially.
    pub fn support_mask(&self) -> usize {
        self.mask_of(|p| p != Pauli::I)
    }

    pub fn y_count(&self) -> usize {
        self.ops.iter().filter(|&&p| p == Pauli::Y).count()
    }

    fn mask_of(&self, pred: impl Fn(Pauli) -> bool) -> usize {
        let n = self.n();
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, &p)| pred(p))
            .fold(0, |m, (q, _)| m | Self::bit(n, q))
    }

    /// Operator product `self · other = phase · product`.
    pub fn mul(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        pauli_mul(self, other)
    }

    /// True when the two strings commute.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .ops
            .iter()
            .zip(&other.ops)
            .filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }
}

/// Operator product of two strings: returns `(phase, product)` with
/// `p · q = phase · product`.
pub fn pauli_mul(p: &PauliString, q: &PauliString) -> Result<(Phase, PauliString)> {
    if p.n() != q.n() {
        return Err(Error::QubitMismatch {
            left: p.n(),
            right: q.n(),
        });
    }
    let mut phase = Phase::One;
    let ops = p
        .ops
        .iter()
        .zip(&q.ops)
        .map(|(&a, &b)| {
            let (ph, c) = a.mul(b);
            phase = phase * ph;
            c
        })
        .collect();
    Ok((phase, PauliString { ops }))
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .map(Pauli::from_char)
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(ops)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.ops {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = <alloc::string::String as serde::Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Real-weighted sum of Pauli strings, `Σ aᵢ Pᵢ` with `aᵢ ∈ ℝ`.
///
/// Always kept normalized: no repeated strings, no coefficient below the drop
/// tolerance, terms sorted by string.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observable {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    /// The zero operator on `n` qubits.
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: Vec::new(),
        }
    }

    /// `c · I` on `n` qubits.
    pub fn identity(n: usize, c: f64) -> Self {
        Self::zero(n)
            .with_terms([(c, PauliString::identity(n))])
            .expect("identity has matching n")
    }

    /// Builds and normalizes with [`DEFAULT_DROP_TOL`].
    pub fn from_terms(
        n: usize,
        terms: impl IntoIterator<Item = (f64, PauliString)>,
    ) -> Result<Self> {
        Self::from_terms_with_tol(n, terms, DEFAULT_DROP_TOL)
    }

    pub fn from_terms_with_tol(
        n: usize,
        terms: impl IntoIterator<Item = (f64, PauliString)>,
        drop_tol: f64,
    ) -> Result<Self> {
        let terms: Vec<_> = terms.into_iter().collect();
        for (_, p) in &terms {
            if p.n() != n {
                return Err(Error::QubitMismatch {
                    left: n,
                    right: p.n(),
                });
            }
        }
        Ok(Self {
            n,
            terms: normalize_terms(terms, drop_tol),
        })
    }

    /// Convenience for tests and small literals: `[(0.5, "XZ"), ...]`.
    pub fn parse_terms<'a>(terms: impl IntoIterator<Item = (f64, &'a str)>) -> Result<Self> {
        let terms = terms
            .into_iter()
            .map(|(c, s)| Ok((c, s.parse::<PauliString>()?)))
            .collect::<Result<Vec<_>>>()?;
        let n = terms
            .first()
            .map(|(_, p)| p.n())
            .ok_or_else(|| Error::InvalidConfig("empty term list; use Observable::zero".into()))?;
        Self::from_terms(n, terms)
    }

    fn with_terms(self, extra: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        let n = self.n;
        Self::from_terms(n, self.terms.into_iter().chain(extra))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Re-normalizes with an explicit drop tolerance.
    pub fn normalized_with(&self, drop_tol: f64) -> Self {
        Self {
            n: self.n,
            terms: normalize_terms(self.terms.clone(), drop_tol),
        }
    }

    /// Coefficient of the identity string (zero when absent).
    pub fn identity_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .find(|(_, p)| p.is_identity())
            .map_or(0.0, |(c, _)| *c)
    }

    /// `Σ |aᵢ|` over the non-identity terms; the spectral range of the
    /// operator is at most twice this.
    pub fn non_identity_l1(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(_, p)| !p.is_identity())
            .map(|(c, _)| math::abs(*c))
            .sum()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_terms(self.n, self.terms.iter().map(|(c, p)| (a * c, p.clone())))
            .expect("same qubit count")
    }

    /// `a · self + other`, normalized.
    pub fn scale_add(&self, a: f64, other: &Observable) -> Result<Self> {
        observable_scale_add(a, self, other)
    }

    pub fn add(&self, other: &Observable) -> Result<Self> {
        observable_scale_add(1.0, self, other)
    }

    /// Operator product as a complex-weighted sum.
    pub fn product(&self, other: &Observable) -> Result<ComplexPauliSum> {
        ComplexPauliSum::from(self).mul(&ComplexPauliSum::from(other))
    }
}

/// Merges duplicate strings, drops `|c| < drop_tol`, sorts by string.
pub fn observable_normalize(o: &Observable, drop_tol: f64) -> Observable {
    o.normalized_with(drop_tol)
}

/// Normalized `a · o1 + o2`.
pub fn observable_scale_add(a: f64, o1: &Observable, o2: &Observable) -> Result<Observable> {
    if o1.n != o2.n {
        return Err(Error::QubitMismatch {
            left: o1.n,
            right: o2.n,
        });
    }
    Observable::from_terms(
        o1.n,
        o1.terms
            .iter()
            .map(|(c, p)| (a * c, p.clone()))
            .chain(o2.terms.iter().cloned()),
    )
}

fn normalize_terms(mut terms: Vec<(f64, PauliString)>, drop_tol: f64) -> Vec<(f64, PauliString)> {
    terms.sort_by(|a, b| a.1.cmp(&b.1));
    let mut out: Vec<(f64, PauliString)> = Vec::with_capacity(terms.len());
    for (c, p) in terms {
        match out.last_mut() {
            Some((acc, last)) if *last == p => *acc += c,
            _ => out.push((c, p)),
        }
    }
    out.retain(|(c, _)| math::abs(*c) >= drop_tol);
    out
}

/// Complex-weighted Pauli sum. Used as an intermediate for operator products
/// and the Jordan-Wigner map; converted back to an [`Observable`] once the
/// imaginary parts are known to cancel.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPauliSum {
    n: usize,
    terms: Vec<(Complex64, PauliString)>,
}

impl ComplexPauliSum {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(n: usize, terms: Vec<(Complex64, PauliString)>) -> Result<Self> {
        for (_, p) in &terms {
            if p.n() != n {
                return Err(Error::QubitMismatch {
                    left: n,
                    right: p.n(),
                });
            }
        }
        Ok(Self { n, terms }.simplified(0.0))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Complex64, PauliString)] {
        &self.terms
    }

    /// Merges duplicates and drops terms with `|c| <= tol`.
    pub fn simplified(mut self, tol: f64) -> Self {
        self.terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut out: Vec<(Complex64, PauliString)> = Vec::with_capacity(self.terms.len());
        for (c, p) in self.terms {
            match out.last_mut() {
                Some((acc, last)) if *last == p => *acc += c,
                _ => out.push((c, p)),
            }
        }
        out.retain(|(c, _)| c.norm() > tol);
        Self {
            n: self.n,
            terms: out,
        }
    }

    pub fn add(&self, other: &ComplexPauliSum) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self { n: self.n, terms }.simplified(0.0))
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(c, p)| (a * c, p.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &ComplexPauliSum) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                let (ph, r) = pauli_mul(p, q)?;
                terms.push((a * b * ph.to_complex(), r));
            }
        }
        Ok(Self { n: self.n, terms }.simplified(0.0))
    }

    /// Largest `|Im c|` over all terms.
    pub fn max_imag(&self) -> f64 {
        self.terms
            .iter()
            .map(|(c, _)| math::abs(c.im))
            .fold(0.0, f64::max)
    }

    /// Converts to an [`Observable`], failing when any imaginary part exceeds
    /// `imag_tol`.
    pub fn into_observable(self, imag_tol: f64) -> Result<Observable> {
        let residual = self.max_imag();
        if residual > imag_tol {
            return Err(Error::NotHermitian(residual));
        }
        Observable::from_terms(self.n, self.terms.into_iter().map(|(c, p)| (c.re, p)))
    }
}

impl From<&Observable> for ComplexPauliSum {
    fn from(o: &Observable) -> Self {
        Self {
            n: o.n,
            terms: o
                .terms
                .iter()
                .map(|(c, p)| (Complex64::new(*c, 0.0), p.clone()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(pauli_mul(&ps("X"), &ps("Y")).unwrap(), (Phase::I, ps("Z")));
        assert_eq!(
            pauli_mul(&ps("Z"), &ps("Z")).unwrap(),
            (Phase::One, ps("I"))
        );
        assert_eq!(
            pauli_mul(&ps("Y"), &ps("X")).unwrap(),
            (Phase::MinusI, ps("Z"))
        );
    }

    #[test]
    fn two_qubit_product_phases_cancel() {
        // XY·YX = (XY)⊗(YX) = (iZ)⊗(-iZ) = ZZ
        assert_eq!(
            pauli_mul(&ps("XY"), &ps("YX")).unwrap(),
            (Phase::One, ps("ZZ"))
        );
    }

    #[test]
    fn product_rejects_mismatched_lengths() {
        assert_eq!(
            pauli_mul(&ps("XY"), &ps("X")),
            Err(Error::QubitMismatch { left: 2, right: 1 })
        );
    }

    #[test]
    fn rejects_bad_characters() {
        assert_eq!(
            "XQ".parse::<PauliString>(),
            Err(Error::InvalidPauliChar('Q'))
        );
    }

    #[test]
    fn masks_follow_msb_convention() {
        let p = ps("XYZI");
        assert_eq!(p.flip_mask(), 0b1100);
        assert_eq!(p.sign_mask(), 0b0110);
        assert_eq!(p.support_mask(), 0b1110);
        assert_eq!(p.y_count(), 1);
    }

    #[test]
    fn normalize_merges_duplicates() {
        let o = Observable::parse_terms([(0.5, "Z"), (0.5, "Z")]).unwrap();
        assert_eq!(o.terms(), &[(1.0, ps("Z"))]);
    }

    #[test]
    fn normalize_drops_below_tolerance() {
        let raw = Observable::from_terms_with_tol(1, [(1e-15, ps("X"))], 0.0).unwrap();
        assert_eq!(raw.len(), 1);
        assert!(observable_normalize(&raw, 1e-12).is_empty());
    }

    #[test]
    fn normalize_cancels() {
        let o = Observable::parse_terms([(1.0, "X"), (-1.0, "X"), (2.0, "I")]).unwrap();
        assert_eq!(o.terms(), &[(2.0, ps("I"))]);
    }

    #[test]
    fn normalize_sorts_lexicographically() {
        let o = Observable::parse_terms([(1.0, "ZI"), (1.0, "IX"), (1.0, "XY")]).unwrap();
        let order: Vec<_> = o
            .terms()
            .iter()
            .map(|(_, p)| alloc::format!("{p}"))
            .collect();
        assert_eq!(order, vec!["IX", "XY", "ZI"]);
    }

    #[test]
    fn scale_add_edge_cases() {
        let h = Observable::parse_terms([(0.3, "ZI"), (-0.2, "XX")]).unwrap();
        let o1 = Observable::parse_terms([(5.0, "YY")]).unwrap();
        assert_eq!(observable_scale_add(0.0, &o1, &h).unwrap(), h);

        let x = Observable::parse_terms([(1.0, "X")]).unwrap();
        let mx = Observable::parse_terms([(-1.0, "X")]).unwrap();
        assert!(observable_scale_add(1.0, &x, &mx).unwrap().is_empty());

        assert!(matches!(
            observable_scale_add(1.0, &x, &h),
            Err(Error::QubitMismatch { .. })
        ));
    }

    #[test]
    fn complex_sum_rejects_imaginary_residue() {
        let s = ComplexPauliSum::from_terms(1, vec![(Complex64::new(0.0, 1.0), ps("X"))]).unwrap();
        assert!(matches!(
            s.into_observable(1e-10),
            Err(Error::NotHermitian(_))
        ));
    }

    fn arb_pauli() -> impl Strategy<Value = Pauli> {
        prop_oneof![
            Just(Pauli::I),
            Just(Pauli::X),
            Just(Pauli::Y),
            Just(Pauli::Z)
        ]
    }

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        proptest::collection::vec(arb_pauli(), n).prop_map(|ops| PauliString::new(ops).unwrap())
    }

    proptest! {
        #[test]
        fn product_is_associative(
            (p, q, r) in (1usize..6).prop_flat_map(|n| (arb_string(n), arb_string(n), arb_string(n)))
        ) {
            let (a1, pq) = pauli_mul(&p, &q).unwrap();
            let (a2, left) = pauli_mul(&pq, &r).unwrap();
            let (b1, qr) = pauli_mul(&q, &r).unwrap();
            let (b2, right) = pauli_mul(&p, &qr).unwrap();
            prop_assert_eq!(left, right);
            prop_assert_eq!(a1 * a2, b1 * b2);
        }

        #[test]
        fn strings_square_to_identity(p in (1usize..8).prop_flat_map(arb_string)) {
            let (phase, sq) = pauli_mul(&p, &p).unwrap();
            prop_assert_eq!(phase, Phase::One);
            prop_assert!(sq.is_identity());
        }

        #[test]
        fn normalize_is_idempotent(
            terms in proptest::collection::vec((-2.0f64..2.0, arb_string(3)), 0..12)
        ) {
            let o = Observable::from_terms(3, terms).unwrap();
            prop_assert_eq!(o.normalized_with(DEFAULT_DROP_TOL), o.clone());
        }

        #[test]
        fn text_form_round_trips(p in (1usize..10).prop_flat_map(arb_string)) {
            let s = alloc::format!("{p}");
            prop_assert_eq!(s.parse::<PauliString>().unwrap(), p);
        }
    }
}
