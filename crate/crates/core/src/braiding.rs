//! Color swaps, color Hecke R-matrices and their QYBE / Hecke verifiers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grading::{CommutationFactor, GradingGroup};
use crate::linop::{multi_indices, GradedBasis, TensorOperator};

/// Coefficient of the `e_i ⊗ e_j` term for `i < j`.
///
/// `Literal` multiplies `q - q^{-1}` by `ε(α,α)` of the first factor;
/// `Uniform` does not. They agree on even factors. Only `Uniform` satisfies
/// the braid relation when an odd label precedes another label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeckeVariant {
    #[default]
    Uniform,
    Literal,
}

fn check_group(f: &CommutationFactor, basis: &GradedBasis) -> Result<()> {
    if f.group() != basis.group() {
        return Err(Error::invalid(format!(
            "basis is graded by {} but the factor lives on {}",
            basis.group(),
            f.group()
        )));
    }
    Ok(())
}

pub(crate) fn kappa(q: Complex64) -> Complex64 {
    q - q.inv()
}

fn check_q(q: Complex64) -> Result<()> {
    if q.norm() == 0.0 || !q.re.is_finite() || !q.im.is_finite() {
        return Err(Error::invalid("deformation parameter q must be nonzero and finite"));
    }
    Ok(())
}

/// `e_i ⊗ e_j ↦ ε(p(i), p(j)) e_j ⊗ e_i`.
pub fn build_color_swap(f: &CommutationFactor, basis: &GradedBasis) -> Result<TensorOperator> {
    check_group(f, basis)?;
    let mut entries = Vec::new();
    for i in basis.labels() {
        for j in basis.labels() {
            let e = f.eval(basis.grade(i), basis.grade(j))?;
            entries.push((vec![i, j], vec![j, i], e));
        }
    }
    TensorOperator::from_entries(basis.dim(), 2, entries)
}

/// Color Hecke R-matrix:
///
/// ```text
/// i = j:  e_i⊗e_i ↦ q^{1-2π(α)} ε(α,α) e_i⊗e_i
/// i < j:  e_i⊗e_j ↦ c e_i⊗e_j + ε(α,β) e_j⊗e_i
/// i > j:  e_i⊗e_j ↦ ε(α,β) e_j⊗e_i
/// ```
///
/// with `α = p(i)`, `β = p(j)` and `c` fixed by the variant.
pub fn build_color_hecke(
    f: &CommutationFactor,
    basis: &GradedBasis,
    q: Complex64,
    variant: HeckeVariant,
) -> Result<TensorOperator> {
    check_q(q)?;
    build_with_triangular(f, basis, q, kappa(q), variant)
}

/// Same as [`build_color_hecke`] with an arbitrary base coefficient for the
/// upper-triangular term in place of `q - q^{-1}`.
pub fn build_with_triangular(
    f: &CommutationFactor,
    basis: &GradedBasis,
    q: Complex64,
    triangular: Complex64,
    variant: HeckeVariant,
) -> Result<TensorOperator> {
    check_group(f, basis)?;
    check_q(q)?;
    let mut entries = Vec::new();
    for i in basis.labels() {
        let alpha = basis.grade(i);
        let eps_aa = f.eval(alpha, alpha)?;
        let par = f.parity(alpha)?;
        for j in basis.labels() {
            let beta = basis.grade(j);
            if i == j {
                let diag = if par == 0 { q } else { q.inv() } * eps_aa;
                entries.push((vec![i, i], vec![i, i], diag));
                continue;
            }
            entries.push((vec![i, j], vec![j, i], f.eval(alpha, beta)?));
            if i < j {
                let c = match variant {
                    HeckeVariant::Uniform => triangular,
                    HeckeVariant::Literal => triangular * eps_aa,
                };
                entries.push((vec![i, j], vec![i, j], c));
            }
        }
    }
    TensorOperator::from_entries(basis.dim(), 2, entries)
}

/// Multiparameter R-matrix on `Z^k` with the standard gradation and
/// `ε_ij = z^{a_ij}` (`s ≡ 0`).
pub fn build_multiparameter(
    basis: &GradedBasis,
    a: &[Vec<i64>],
    z: Complex64,
    q: Complex64,
) -> Result<TensorOperator> {
    let k = a.len();
    let group = GradingGroup::free(k)?;
    if basis != &GradedBasis::standard(group.clone()) {
        return Err(Error::invalid("multiparameter R-matrix needs the standard gradation of Z^k"));
    }
    let f = CommutationFactor::from_exponents(group, &vec![vec![0; k]; k], a, z)?;
    build_color_hecke(&f, basis, q, HeckeVariant::Uniform)
}

/// Anyonic R-matrix on `Z_N^k` with the standard gradation and
/// `ε_ij = exp(2πi Ω_ij / N)`.
pub fn build_anyonic(
    basis: &GradedBasis,
    omega: &[Vec<i64>],
    n: u64,
    q: Complex64,
) -> Result<TensorOperator> {
    let group = GradingGroup::cyclic_power(n, omega.len())?;
    if basis != &GradedBasis::standard(group.clone()) {
        return Err(Error::invalid("anyonic R-matrix needs the standard gradation of Z_N^k"));
    }
    let f = CommutationFactor::from_omega(group, omega, n)?;
    build_color_hecke(&f, basis, q, HeckeVariant::Uniform)
}

/// Standard super R-matrix on a `Z_2`-graded basis.
pub fn build_super_r(z2_basis: &GradedBasis, q: Complex64) -> Result<TensorOperator> {
    if z2_basis.group() != &GradingGroup::z2() {
        return Err(Error::invalid(format!("super R-matrix needs a Z_2 grading, got {}", z2_basis.group())));
    }
    build_color_hecke(&CommutationFactor::supercommutation(), z2_basis, q, HeckeVariant::Uniform)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QybeReport {
    pub check: &'static str,
    pub residual: f64,
    pub pass: bool,
    pub worst_input: Vec<usize>,
}

/// Compares `R_12 R_23 R_12` with `R_23 R_12 R_23` on `E^{⊗3}`.
pub fn check_qybe(r: &TensorOperator, tol: f64) -> Result<QybeReport> {
    let (residual, worst_input) = braid_defect(r, r, r, r, r, r)?;
    Ok(QybeReport { check: "qybe", residual, pass: residual <= tol, worst_input })
}

/// Residual of `X_12 Y_23 Z_12 = U_23 V_12 W_23`.
pub(crate) fn braid_defect(
    x: &TensorOperator,
    y: &TensorOperator,
    z: &TensorOperator,
    u: &TensorOperator,
    v: &TensorOperator,
    w: &TensorOperator,
) -> Result<(f64, Vec<usize>)> {
    let lhs = x
        .place_on_legs(3, 1)?
        .compose(&y.place_on_legs(3, 2)?)?
        .compose(&z.place_on_legs(3, 1)?)?;
    let rhs = u
        .place_on_legs(3, 2)?
        .compose(&v.place_on_legs(3, 1)?)?
        .compose(&w.place_on_legs(3, 2)?)?;
    lhs.distance_by_input(&rhs)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeckeSubspace {
    pub indices: Vec<usize>,
    /// `Some(s)` when `M² = 1 + s(q - q^{-1})M` holds; `+1` wins ties.
    pub sign: Option<i8>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeckeReport {
    pub check: &'static str,
    pub exchange_shaped: bool,
    pub subspaces: Vec<HeckeSubspace>,
    /// True iff every subspace carries sign `+1`, i.e. `R² = 1 + (q - q^{-1})R`.
    pub pass: bool,
}

impl HeckeReport {
    pub fn sign_of(&self, i: usize, j: usize) -> Option<i8> {
        let key = if i <= j { vec![i, j] } else { vec![j, i] };
        let key = if key[0] == key[1] { vec![key[0]] } else { key };
        self.subspaces.iter().find(|s| s.indices == key).and_then(|s| s.sign)
    }
}

/// Tests the Hecke relation on each invariant subspace
/// `span{e_i⊗e_j, e_j⊗e_i}` (`i < j`) and `span{e_i⊗e_i}`.
pub fn check_hecke(
    r: &TensorOperator,
    basis: &GradedBasis,
    q: Complex64,
    tol: f64,
) -> Result<HeckeReport> {
    if r.arity() != 2 {
        return Err(Error::Shape(format!("Hecke check needs arity 2, got {}", r.arity())));
    }
    r.check_basis(basis)?;
    check_q(q)?;
    let shaped = multi_indices(r.dim(), 2).all(|input| {
        r.column(&input).is_none_or(|col| {
            col.keys().all(|o| *o == input || (o[0] == input[1] && o[1] == input[0]))
        })
    });
    if !shaped {
        return Ok(HeckeReport { check: "hecke", exchange_shaped: false, subspaces: Vec::new(), pass: false });
    }
    let k = kappa(q);
    let mut subspaces = Vec::new();
    for i in basis.labels() {
        for j in basis.labels().filter(|&j| j >= i) {
            let idx: Vec<Vec<usize>> = if i == j { vec![vec![i, i]] } else { vec![vec![i, j], vec![j, i]] };
            let n = idx.len();
            let m: Vec<Vec<Complex64>> =
                (0..n).map(|row| (0..n).map(|col| r.entry(&idx[col], &idx[row])).collect()).collect();
            let defect = |s: f64| {
                let mut worst = 0.0_f64;
                for a in 0..n {
                    for b in 0..n {
                        let sq: Complex64 = (0..n).map(|c| m[a][c] * m[c][b]).sum();
                        let id = if a == b { 1.0 } else { 0.0 };
                        worst = worst.max((sq - id - k * s * m[a][b]).norm());
                    }
                }
                worst
            };
            let (plus, minus) = (defect(1.0), defect(-1.0));
            let (sign, residual) = if plus <= tol {
                (Some(1), plus)
            } else if minus <= tol {
                (Some(-1), minus)
            } else {
                (None, plus.min(minus))
            };
            let indices = if i == j { vec![i] } else { vec![i, j] };
            subspaces.push(HeckeSubspace { indices, sign, residual });
        }
    }
    let pass = subspaces.iter().all(|s| s.sign == Some(1));
    Ok(HeckeReport { check: "hecke", exchange_shaped: true, subspaces, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::GradingGroup;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn z2_basis(grades: &[i64]) -> GradedBasis {
        let g = GradingGroup::z2();
        GradedBasis::new(
            g.clone(),
            grades.iter().enumerate().map(|(i, &p)| (i + 1, g.element(&[p]).unwrap())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn trivial_swap_is_flip() {
        let g = GradingGroup::free(2).unwrap();
        let basis = GradedBasis::standard(g.clone());
        let r = build_color_swap(&CommutationFactor::trivial(g), &basis).unwrap();
        assert_eq!(r, TensorOperator::flip(2).unwrap());
    }

    #[test]
    fn super_swap_odd_odd_is_minus() {
        let basis = z2_basis(&[1, 1]);
        let r = build_color_swap(&CommutationFactor::supercommutation(), &basis).unwrap();
        assert_eq!(r.entry(&[1, 2], &[2, 1]), c(-1.0));
        let sq = r.compose(&r).unwrap();
        assert!(sq.distance(&TensorOperator::identity(2, 2).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn gl11_matrix() {
        let basis = z2_basis(&[0, 1]);
        let f = CommutationFactor::supercommutation();
        for variant in [HeckeVariant::Uniform, HeckeVariant::Literal] {
            let r = build_color_hecke(&f, &basis, c(2.0), variant).unwrap();
            let m = r.to_dense();
            let expected = [
                [2.0, 0.0, 0.0, 0.0],
                [0.0, 1.5, 1.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, -0.5],
            ];
            for a in 0..4 {
                for b in 0..4 {
                    assert!((m[(a, b)] - c(expected[a][b])).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn odd_first_variants_differ() {
        let basis = z2_basis(&[1, 0]);
        let f = CommutationFactor::supercommutation();
        let lit = build_color_hecke(&f, &basis, c(2.0), HeckeVariant::Literal).unwrap();
        let uni = build_color_hecke(&f, &basis, c(2.0), HeckeVariant::Uniform).unwrap();
        assert_eq!(lit.entry(&[1, 2], &[1, 2]), c(-1.5));
        assert_eq!(uni.entry(&[1, 2], &[1, 2]), c(1.5));
        assert_eq!(lit.entry(&[1, 2], &[2, 1]), c(1.0));
        assert_eq!(uni.entry(&[1, 2], &[2, 1]), c(1.0));
    }

    #[test]
    fn trivial_q1_is_flip() {
        let basis = z2_basis(&[0, 0, 0]);
        let f = CommutationFactor::trivial(GradingGroup::z2());
        let r = build_color_hecke(&f, &basis, c(1.0), HeckeVariant::Uniform).unwrap();
        assert_eq!(r, TensorOperator::flip(3).unwrap());
    }

    #[test]
    fn q_zero_rejected() {
        let basis = z2_basis(&[0]);
        let f = CommutationFactor::supercommutation();
        assert!(build_color_hecke(&f, &basis, c(0.0), HeckeVariant::Uniform).is_err());
    }

    #[test]
    fn group_mismatch_rejected() {
        let basis = z2_basis(&[0, 1]);
        let f = CommutationFactor::trivial(GradingGroup::free(1).unwrap());
        assert!(build_color_swap(&f, &basis).is_err());
        assert!(build_super_r(&GradedBasis::standard(GradingGroup::free(2).unwrap()), c(2.0)).is_err());
    }

    #[test]
    fn multiparameter_entries() {
        let basis = GradedBasis::standard(GradingGroup::free(2).unwrap());
        let z0 = Complex64::new(0.6, 0.8);
        let q = c(1.4);
        let r = build_multiparameter(&basis, &[vec![0, 1], vec![-1, 0]], z0, q).unwrap();
        assert!((r.entry(&[1, 2], &[1, 2]) - kappa(q)).norm() < 1e-15);
        assert!((r.entry(&[1, 2], &[2, 1]) - z0).norm() < 1e-15);
        assert!((r.entry(&[2, 1], &[1, 2]) - z0.inv()).norm() < 1e-15);
        assert_eq!(r.entry(&[1, 1], &[1, 1]), q);
        assert_eq!(r.entry(&[2, 2], &[2, 2]), q);
        assert_eq!(r.column(&[2, 1]).unwrap().len(), 1);
    }

    #[test]
    fn multiparameter_z1_is_one_parameter() {
        let basis = GradedBasis::standard(GradingGroup::free(3).unwrap());
        let a = vec![vec![0, 1, -2], vec![-1, 0, 3], vec![2, -3, 0]];
        let r = build_multiparameter(&basis, &a, c(1.0), c(1.3)).unwrap();
        let zero = vec![vec![0; 3]; 3];
        let r0 = build_multiparameter(&basis, &zero, c(2.0), c(1.3)).unwrap();
        assert!(r.distance(&r0).unwrap() < 1e-15);
        for (i, o, v) in r.iter() {
            if i[0] != i[1] && o[0] == i[1] {
                assert_eq!(v, c(1.0));
            }
        }
    }

    #[test]
    fn anyonic_entries() {
        let g = GradingGroup::cyclic_power(3, 2).unwrap();
        let basis = GradedBasis::standard(g);
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let r = build_anyonic(&basis, &[vec![0, 1], vec![-1, 0]], 3, c(1.7)).unwrap();
        assert!((r.entry(&[1, 2], &[2, 1]) - w).norm() < 1e-15);
        assert!((r.entry(&[2, 1], &[1, 2]) - w.conj()).norm() < 1e-15);

        let swap = build_color_swap(
            &CommutationFactor::from_omega(basis.group().clone(), &[vec![0, 1], vec![-1, 0]], 3).unwrap(),
            &basis,
        )
        .unwrap();
        let r1 = build_anyonic(&basis, &[vec![0, 1], vec![-1, 0]], 3, c(1.0)).unwrap();
        assert!(r1.distance(&swap).unwrap() < 1e-15);
    }

    #[test]
    fn super_r_examples() {
        let q = c(1.6);
        let even = build_super_r(&z2_basis(&[0, 0]), q).unwrap();
        let ungraded = build_color_hecke(
            &CommutationFactor::trivial(GradingGroup::z2()),
            &z2_basis(&[0, 0]),
            q,
            HeckeVariant::Uniform,
        )
        .unwrap();
        assert_eq!(even, ungraded);

        let odd = build_super_r(&z2_basis(&[1, 1]), q).unwrap();
        assert!((odd.entry(&[1, 2], &[1, 2]) - kappa(q)).norm() < 1e-15);
        assert_eq!(odd.entry(&[1, 2], &[2, 1]), c(-1.0));
        assert!((odd.entry(&[1, 1], &[1, 1]) + q.inv()).norm() < 1e-15);
    }

    #[test]
    fn qybe_flip_and_gl11() {
        let flip = TensorOperator::flip(3).unwrap();
        let rep = check_qybe(&flip, 1e-12).unwrap();
        assert_eq!(rep.residual, 0.0);
        assert!(rep.pass);

        let r = build_color_hecke(&CommutationFactor::supercommutation(), &z2_basis(&[0, 1]), c(1.7), HeckeVariant::Uniform)
            .unwrap();
        assert!(check_qybe(&r, 1e-9).unwrap().residual < 1e-9);
    }

    #[test]
    fn hecke_rejects_non_exchange() {
        let basis = z2_basis(&[0, 0]);
        let op = TensorOperator::from_entries(2, 2, vec![(vec![1, 1], vec![2, 2], c(1.0))]).unwrap();
        let rep = check_hecke(&op, &basis, c(2.0), 1e-9).unwrap();
        assert!(!rep.exchange_shaped);
        assert!(!rep.pass);
    }

    #[test]
    fn hecke_signs() {
        let f = CommutationFactor::supercommutation();
        let q = c(1.7);
        let r = build_color_hecke(&f, &z2_basis(&[0, 1]), q, HeckeVariant::Uniform).unwrap();
        let rep = check_hecke(&r, &z2_basis(&[0, 1]), q, 1e-9).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.subspaces.len(), 3);

        let basis = z2_basis(&[1, 0]);
        let lit = build_color_hecke(&f, &basis, q, HeckeVariant::Literal).unwrap();
        let rep = check_hecke(&lit, &basis, q, 1e-9).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.sign_of(1, 2), Some(-1));
        assert_eq!(rep.sign_of(1, 1), Some(1));
        assert_eq!(rep.sign_of(2, 2), Some(1));
    }
}
