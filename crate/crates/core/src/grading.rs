//! Finitely generated abelian grading groups and commutation factors.
//!
//! A grading group is `Z^a ⊕ Z_{m_1} ⊕ ...` written as a list of per-generator
//! moduli, where `0` marks a free generator. A commutation factor is a
//! bicharacter `ε` with `ε(α,β)ε(β,α) = 1`; it is stored through its values on
//! generator pairs and extended bimultiplicatively.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for equality of complex scalars.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest accepted magnitude for free coordinates and integer exponents.
pub const MAX_EXPONENT: i64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GradingGroup {
    moduli: Vec<u64>,
}

impl GradingGroup {
    pub fn new(moduli: Vec<u64>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::invalid("grading group needs at least one generator"));
        }
        if let Some(m) = moduli.iter().find(|&&m| m == 1) {
            return Err(Error::invalid(format!("modulus {m} is not allowed (use 0 or >= 2)")));
        }
        Ok(Self { moduli })
    }

    /// `Z_2`, the grading of ordinary superalgebra.
    pub fn z2() -> Self {
        Self { moduli: vec![2] }
    }

    /// `Z^k`.
    pub fn free(k: usize) -> Result<Self> {
        Self::new(vec![0; k])
    }

    /// `Z_n^k`.
    pub fn cyclic_power(n: u64, k: usize) -> Result<Self> {
        Self::new(vec![n; k])
    }

    pub fn rank(&self) -> usize {
        self.moduli.len()
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement(vec![0; self.rank()])
    }

    pub fn generator(&self, i: usize) -> GroupElement {
        let mut coords = vec![0; self.rank()];
        coords[i] = 1;
        GroupElement(coords)
    }

    /// Builds a reduced element from raw coordinates.
    pub fn element(&self, coords: &[i64]) -> Result<GroupElement> {
        self.check_len(coords.len())?;
        let mut out = Vec::with_capacity(coords.len());
        for (&c, &m) in coords.iter().zip(&self.moduli) {
            if m == 0 {
                if c.abs() > MAX_EXPONENT {
                    return Err(Error::invalid(format!(
                        "free coordinate {c} exceeds the bound {MAX_EXPONENT}"
                    )));
                }
                out.push(c);
            } else {
                out.push(c.rem_euclid(m as i64));
            }
        }
        Ok(GroupElement(out))
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check_len(a.0.len())?;
        self.check_len(b.0.len())?;
        let sum: Vec<i64> = a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect();
        self.element(&sum)
    }

    pub fn neg(&self, a: &GroupElement) -> Result<GroupElement> {
        let coords: Vec<i64> = a.0.iter().map(|x| -x).collect();
        self.element(&coords)
    }

    pub fn contains(&self, a: &GroupElement) -> bool {
        a.0.len() == self.rank()
            && a.0.iter().zip(&self.moduli).all(|(&c, &m)| {
                if m == 0 {
                    c.abs() <= MAX_EXPONENT
                } else {
                    (0..m as i64).contains(&c)
                }
            })
    }

    /// Uniform sample; free coordinates are drawn from `[-bound, bound]`.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R, bound: i64) -> GroupElement {
        let coords = self
            .moduli
            .iter()
            .map(|&m| {
                if m == 0 {
                    rng.random_range(-bound..=bound)
                } else {
                    rng.random_range(0..m as i64)
                }
            })
            .collect();
        GroupElement(coords)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), got });
        }
        Ok(())
    }
}

impl fmt::Display for GradingGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .moduli
            .iter()
            .map(|&m| if m == 0 { "Z".to_string() } else { format!("Z_{m}") })
            .collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Reduced coordinates of a group element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(Vec<i64>);

impl GroupElement {
    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Integer power by repeated squaring; keeps `z^n` exact for roots of unity
/// with small exponents and avoids the `i32` limit of `Complex::powi`.
pub(crate) fn cpow(z: Complex64, n: i64) -> Complex64 {
    let mut base = if n < 0 { z.inv() } else { z };
    let mut e = n.unsigned_abs();
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutationFactor {
    group: GradingGroup,
    gen_values: Vec<Vec<Complex64>>,
    tol: f64,
}

impl CommutationFactor {
    /// Validates the antisymmetry, diagonal-sign and torsion constraints on the
    /// generator matrix `gen_values[i][j] = ε(ξ_i, ξ_j)`.
    pub fn from_generator_values(
        group: GradingGroup,
        mut gen_values: Vec<Vec<Complex64>>,
        tol: f64,
    ) -> Result<Self> {
        let k = group.rank();
        if gen_values.len() != k || gen_values.iter().any(|row| row.len() != k) {
            return Err(Error::invalid(format!("generator matrix must be {k}x{k}")));
        }
        for i in 0..k {
            for j in 0..k {
                let v = gen_values[i][j];
                if !v.re.is_finite() || !v.im.is_finite() || v.norm() == 0.0 {
                    return Err(Error::Factor { i, j, reason: format!("value {v} is not a nonzero finite scalar") });
                }
                let prod = v * gen_values[j][i];
                if !close(prod, Complex64::new(1.0, 0.0), tol) {
                    return Err(Error::Factor {
                        i,
                        j,
                        reason: format!("ε(ξ_i,ξ_j)ε(ξ_j,ξ_i) = {prod}, expected 1"),
                    });
                }
            }
        }
        for i in 0..k {
            let d = gen_values[i][i];
            if close(d, Complex64::new(1.0, 0.0), tol) {
                gen_values[i][i] = Complex64::new(1.0, 0.0);
            } else if close(d, Complex64::new(-1.0, 0.0), tol) {
                gen_values[i][i] = Complex64::new(-1.0, 0.0);
            } else {
                return Err(Error::Factor { i, j: i, reason: format!("diagonal value {d} is not ±1") });
            }
        }
        for (i, &m) in group.moduli().iter().enumerate() {
            if m == 0 {
                continue;
            }
            for j in 0..k {
                for (a, b) in [(i, j), (j, i)] {
                    let p = cpow(gen_values[a][b], m as i64);
                    if !close(p, Complex64::new(1.0, 0.0), tol) {
                        return Err(Error::Factor {
                            i: a,
                            j: b,
                            reason: format!("torsion incompatible: value^{m} = {p}, expected 1"),
                        });
                    }
                }
            }
        }
        Ok(Self { group, gen_values, tol })
    }

    /// `ε_ij = (-1)^{s_ij} z^{a_ij}` with `s` symmetric and `a` antisymmetric.
    pub fn from_exponents(
        group: GradingGroup,
        s: &[Vec<i64>],
        a: &[Vec<i64>],
        z: Complex64,
    ) -> Result<Self> {
        let k = group.rank();
        check_square("s", s, k)?;
        check_square("a", a, k)?;
        if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::invalid("z must be a nonzero finite scalar"));
        }
        for i in 0..k {
            for j in 0..k {
                if s[i][j] != s[j][i] {
                    return Err(Error::Factor { i, j, reason: "s is not symmetric".into() });
                }
                if a[i][j] != -a[j][i] {
                    return Err(Error::Factor { i, j, reason: "a is not antisymmetric".into() });
                }
            }
        }
        let gen_values = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let sign = if s[i][j].rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                        cpow(z, a[i][j]) * sign
                    })
                    .collect()
            })
            .collect();
        Self::from_generator_values(group, gen_values, DEFAULT_TOL)
    }

    /// `ε_ij = exp(2πi Ω_ij / N)` on `Z_N^k`.
    pub fn from_omega(group: GradingGroup, omega: &[Vec<i64>], n: u64) -> Result<Self> {
        if n <= 2 {
            return Err(Error::invalid(format!("N = {n} must exceed 2")));
        }
        if let Some(&m) = group.moduli().iter().find(|&&m| m != n) {
            return Err(Error::invalid(format!("all moduli must equal N = {n}, found {m}")));
        }
        let k = group.rank();
        check_square("omega", omega, k)?;
        for i in 0..k {
            for j in 0..k {
                if omega[i][j] != -omega[j][i] {
                    return Err(Error::Factor { i, j, reason: "Ω is not antisymmetric".into() });
                }
            }
        }
        let gen_values = (0..k)
            .map(|i| (0..k).map(|j| root_of_unity(omega[i][j], n)).collect())
            .collect();
        Self::from_generator_values(group, gen_values, DEFAULT_TOL)
    }

    /// `ε(α,β) = (-1)^{αβ}` on `Z_2`.
    pub fn supercommutation() -> Self {
        Self {
            group: GradingGroup::z2(),
            gen_values: vec![vec![Complex64::new(-1.0, 0.0)]],
            tol: DEFAULT_TOL,
        }
    }

    pub fn trivial(group: GradingGroup) -> Self {
        let k = group.rank();
        Self {
            group,
            gen_values: vec![vec![Complex64::new(1.0, 0.0); k]; k],
            tol: DEFAULT_TOL,
        }
    }

    pub fn group(&self) -> &GradingGroup {
        &self.group
    }

    pub fn gen_values(&self) -> &[Vec<Complex64>] {
        &self.gen_values
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `ε(a, b) = Π_{i,j} ε(ξ_i, ξ_j)^{a_i b_j}`.
    pub fn eval(&self, a: &GroupElement, b: &GroupElement) -> Result<Complex64> {
        let k = self.group.rank();
        for x in [a, b] {
            if x.0.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: x.0.len() });
            }
        }
        Ok(bimultiplicative(&self.gen_values, self.group.moduli(), a.coords(), b.coords()))
    }

    /// `π(α) ∈ {0, 1}` with `ε(α,α) = (-1)^{π(α)}`.
    pub fn parity(&self, a: &GroupElement) -> Result<u8> {
        let v = self.eval(a, a)?;
        if close(v, Complex64::new(1.0, 0.0), self.tol) {
            Ok(0)
        } else if close(v, Complex64::new(-1.0, 0.0), self.tol) {
            Ok(1)
        } else {
            Err(Error::Numerical(format!("ε({a},{a}) = {v} is not ±1")))
        }
    }

    pub fn is_even(&self) -> bool {
        (0..self.group.rank()).all(|i| self.gen_values[i][i].re > 0.0)
    }
}

/// `Π_{i,j} gen[i][j]^{a_i b_j}`, reducing each exponent by a torsion modulus
/// of its row or column generator.
pub(crate) fn bimultiplicative(gen: &[Vec<Complex64>], moduli: &[u64], a: &[i64], b: &[i64]) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            let mut e = ai * bj;
            if e == 0 {
                continue;
            }
            if moduli[i] > 0 {
                e = e.rem_euclid(moduli[i] as i64);
            } else if moduli[j] > 0 {
                e = e.rem_euclid(moduli[j] as i64);
            }
            acc *= cpow(gen[i][j], e);
        }
    }
    acc
}

fn check_square(name: &str, m: &[Vec<i64>], k: usize) -> Result<()> {
    if m.len() != k || m.iter().any(|r| r.len() != k) {
        return Err(Error::invalid(format!("{name} must be {k}x{k}")));
    }
    if let Some(v) = m.iter().flatten().find(|v| v.abs() > MAX_EXPONENT) {
        return Err(Error::invalid(format!("{name} entry {v} exceeds the bound {MAX_EXPONENT}")));
    }
    Ok(())
}

fn root_of_unity(r: i64, n: u64) -> Complex64 {
    let n = n as i64;
    let r = r.rem_euclid(n);
    // exact values on the axes keep serialized output free of 1e-16 noise
    if r == 0 {
        Complex64::new(1.0, 0.0)
    } else if 2 * r == n {
        Complex64::new(-1.0, 0.0)
    } else if 4 * r == n {
        Complex64::new(0.0, 1.0)
    } else if 4 * r == 3 * n {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / n as f64)
    }
}

/// Outcome of sampling the bicharacter axioms of a factor.
#[derive(Clone, Debug, Serialize)]
pub struct FactorReport {
    pub check: &'static str,
    pub samples: usize,
    pub even: bool,
    pub antisymmetry_residual: f64,
    pub bimultiplicativity_residual: f64,
    pub torsion_residual: f64,
    pub parity_homomorphism: bool,
    pub pass: bool,
}

/// Samples `samples` random pairs/triples and measures the relative defect of
/// each axiom. Free coordinates are drawn from `[-3, 3]`.
pub fn check_axioms<R: Rng + ?Sized>(
    f: &CommutationFactor,
    rng: &mut R,
    samples: usize,
    tol: f64,
) -> Result<FactorReport> {
    let g = f.group();
    let one = Complex64::new(1.0, 0.0);
    let rel = |x: Complex64, y: Complex64| (x - y).norm() / x.norm().max(y.norm()).max(1.0);
    let mut anti = 0.0_f64;
    let mut bimul = 0.0_f64;
    let mut torsion = 0.0_f64;
    let mut hom = true;
    for _ in 0..samples {
        let a = g.random_element(rng, 3);
        let b = g.random_element(rng, 3);
        let c = g.random_element(rng, 3);
        let ab = g.add(&a, &b)?;
        anti = anti.max(rel(f.eval(&a, &b)? * f.eval(&b, &a)?, one));
        bimul = bimul.max(rel(f.eval(&ab, &c)?, f.eval(&a, &c)? * f.eval(&b, &c)?));
        bimul = bimul.max(rel(f.eval(&c, &ab)?, f.eval(&c, &a)? * f.eval(&c, &b)?));
        hom &= f.parity(&ab)? == f.parity(&a)? ^ f.parity(&b)?;

        // shifting a torsion coordinate by its modulus must not change ε
        for (i, &m) in g.moduli().iter().enumerate() {
            if m == 0 {
                continue;
            }
            let mut shifted = a.coords().to_vec();
            shifted[i] += m as i64;
            let raw = GroupElement(shifted);
            torsion = torsion.max(rel(f.eval(&raw, &b)?, f.eval(&a, &b)?));
        }
    }
    let pass = anti <= tol && bimul <= tol && torsion <= tol && hom;
    Ok(FactorReport {
        check: "factor",
        samples,
        even: f.is_even(),
        antisymmetry_residual: anti,
        bimultiplicativity_residual: bimul,
        torsion_residual: torsion,
        parity_homomorphism: hom,
        pass,
    })
}
