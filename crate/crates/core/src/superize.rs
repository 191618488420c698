//! Reduction of a color Hecke braiding to a super R-matrix tensored with a
//! color swap on one-dimensional grade carriers.
//!
//! A factor splits as `ε(α,β) = (-1)^{π(α)π(β)} δ̂(α,β)` where `δ̂` is an
//! alternating bicharacter, so `δ̂ = σ/σᵀ` for a bicharacter `σ`. The
//! superization sends `e_i` to `ẽ_i ⊗ ρ_{p(i)}`, with `ẽ_i` graded by
//! `π(p(i)) ∈ Z_2`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::braiding::{build_color_hecke, build_super_r, HeckeVariant};
use crate::error::{Error, Result};
use crate::grading::{bimultiplicative, cpow, CommutationFactor, GradingGroup, GroupElement};
use crate::linop::{column_distance, BlockKey, Column, GradedBasis, TensorOperator};

/// The same basis regraded by `δ = π ∘ p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Z2Regrading {
    original: GradedBasis,
    parities: Vec<u8>,
}

impl Z2Regrading {
    pub fn original(&self) -> &GradedBasis {
        &self.original
    }

    pub fn parities(&self) -> &[u8] {
        &self.parities
    }

    pub fn delta(&self, label: usize) -> u8 {
        self.parities[label - 1]
    }

    /// Labels spanning `Ẽ_0`.
    pub fn even_labels(&self) -> Vec<usize> {
        self.original.labels().filter(|&l| self.delta(l) == 0).collect()
    }

    /// Labels spanning `Ẽ_1`.
    pub fn odd_labels(&self) -> Vec<usize> {
        self.original.labels().filter(|&l| self.delta(l) == 1).collect()
    }

    pub fn super_basis(&self) -> GradedBasis {
        let z2 = GradingGroup::z2();
        let labelled = self
            .original
            .labels()
            .map(|l| (l, z2.element(&[self.delta(l) as i64]).expect("0 or 1 is in Z_2")))
            .collect();
        GradedBasis::new(z2, labelled).expect("relabelling a valid basis")
    }
}

pub fn z2_regrade(basis: &GradedBasis, f: &CommutationFactor) -> Result<Z2Regrading> {
    if basis.group() != f.group() {
        return Err(Error::invalid("basis and factor use different grading groups"));
    }
    let parities = basis.grades().iter().map(|g| f.parity(g)).collect::<Result<_>>()?;
    Ok(Z2Regrading { original: basis.clone(), parities })
}

/// `δ̂(α,β) = ε(α,β) (-1)^{π(α)π(β)}`.
pub fn delta_hat(f: &CommutationFactor, a: &GroupElement, b: &GroupElement) -> Result<Complex64> {
    let sign = if f.parity(a)? & f.parity(b)? == 1 { -1.0 } else { 1.0 };
    Ok(f.eval(a, b)? * sign)
}

/// Bicharacter `σ` on the grading group with `σ(α,β)/σ(β,α) = δ̂(α,β)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CocycleSigma {
    group: GradingGroup,
    gen_sigma: Vec<Vec<Complex64>>,
}

impl CocycleSigma {
    /// Name of the fixed gauge: `σ(ξ_i,ξ_j) = δ̂(ξ_i,ξ_j)` for `i < j`, else 1.
    pub const GAUGE: &'static str = "upper-generator";

    pub fn group(&self) -> &GradingGroup {
        &self.group
    }

    pub fn gen_sigma(&self) -> &[Vec<Complex64>] {
        &self.gen_sigma
    }

    pub fn eval(&self, a: &GroupElement, b: &GroupElement) -> Result<Complex64> {
        let k = self.group.rank();
        for x in [a, b] {
            if x.coords().len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: x.coords().len() });
            }
        }
        Ok(bimultiplicative(&self.gen_sigma, self.group.moduli(), a.coords(), b.coords()))
    }

    /// `σ(α,β) / σ(β,α)`.
    pub fn ratio(&self, a: &GroupElement, b: &GroupElement) -> Result<Complex64> {
        Ok(self.eval(a, b)? / self.eval(b, a)?)
    }
}

pub fn compute_cocycle(f: &CommutationFactor) -> Result<CocycleSigma> {
    let group = f.group().clone();
    let k = group.rank();
    let one = Complex64::new(1.0, 0.0);
    let mut gen_sigma = vec![vec![one; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            gen_sigma[i][j] = delta_hat(f, &group.generator(i), &group.generator(j))?;
        }
    }
    for i in 0..k {
        for j in 0..k {
            for m in [group.moduli()[i], group.moduli()[j]] {
                if m == 0 {
                    continue;
                }
                let p = cpow(gen_sigma[i][j], m as i64);
                if (p - one).norm() > f.tolerance() {
                    return Err(Error::Factor {
                        i,
                        j,
                        reason: format!("cocycle value {} has order not dividing {m}", gen_sigma[i][j]),
                    });
                }
            }
        }
    }
    Ok(CocycleSigma { group, gen_sigma })
}

/// Color swap `ρ_α ⊗ ρ_β ↦ δ̂(α,β) ρ_β ⊗ ρ_α` on the span of one carrier per
/// grade; carrier `ρ` for `grades_in_use[n]` has label `n + 1`. `δ̂` is taken
/// as the cocycle ratio `σ(α,β)/σ(β,α)`.
pub fn build_rdelta(f: &CommutationFactor, grades_in_use: &[GroupElement]) -> Result<TensorOperator> {
    for (n, g) in grades_in_use.iter().enumerate() {
        if grades_in_use[..n].contains(g) {
            return Err(Error::invalid(format!("grade {g} listed twice")));
        }
    }
    let sigma = compute_cocycle(f)?;
    let mut entries = Vec::new();
    for (a, ga) in grades_in_use.iter().enumerate() {
        for (b, gb) in grades_in_use.iter().enumerate() {
            entries.push((vec![a + 1, b + 1], vec![b + 1, a + 1], sigma.ratio(ga, gb)?));
        }
    }
    TensorOperator::from_entries(grades_in_use.len(), 2, entries)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionBlock {
    pub src: (GroupElement, GroupElement),
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionReport {
    pub check: &'static str,
    pub sigma_gauge: &'static str,
    /// `Γ_0 = Γ`: the super R-matrix is the ordinary one.
    pub even_factor: bool,
    pub blocks: Vec<ReductionBlock>,
    pub pass: bool,
}

impl ReductionReport {
    pub fn max_residual(&self) -> f64 {
        self.blocks.iter().map(|b| b.residual).fold(0.0, f64::max)
    }
}

/// Compares `s∘R` with `(R̄ ⊗̂ R_δ)∘s` on every basis input, both sides
/// written in `Ẽ⊗Ẽ⊗E'⊗E'` coordinates `(k, l, a, b)`.
///
/// On outputs where `R̄` exchanges the two labels the carriers are exchanged
/// by `R_δ`; on the `(q - q^{-1}) ẽ_i⊗ẽ_j` term the carriers stay attached to
/// their labels, so both sides stay inside the image of `s ⊗ s`.
pub fn check_reduction(
    r: &TensorOperator,
    basis: &GradedBasis,
    f: &CommutationFactor,
    q: Complex64,
    tol: f64,
) -> Result<ReductionReport> {
    r.check_basis(basis)?;
    let regrade = z2_regrade(basis, f)?;
    let rbar = build_super_r(&regrade.super_basis(), q)?;
    let grades = basis.grades_in_use();
    let rdelta = build_rdelta(f, &grades)?;
    let carrier = |label: usize| grades.iter().position(|g| g == basis.grade(label)).expect("grade in use") + 1;

    let mut blocks: BTreeMap<BlockKey, f64> = BTreeMap::new();
    for i in basis.labels() {
        for j in basis.labels() {
            let mut lhs = Column::new();
            if let Some(col) = r.column(&[i, j]) {
                for (o, &c) in col {
                    *lhs.entry(vec![o[0], o[1], carrier(o[0]), carrier(o[1])]).or_default() += c;
                }
            }

            let mut rhs = Column::new();
            if let Some(col) = rbar.column(&[i, j]) {
                for (o, &c) in col {
                    if o[0] == j && o[1] == i {
                        let rho_in = [carrier(i), carrier(j)];
                        for (ro, &d) in rdelta.column(&rho_in).into_iter().flatten() {
                            *rhs.entry(vec![o[0], o[1], ro[0], ro[1]]).or_default() += c * d;
                        }
                    } else {
                        *rhs.entry(vec![o[0], o[1], carrier(o[0]), carrier(o[1])]).or_default() += c;
                    }
                }
            }

            let d = column_distance(&lhs, &rhs);
            let slot = blocks.entry(BlockKey::of_input(basis, i, j)).or_default();
            *slot = slot.max(d);
        }
    }

    let blocks: Vec<ReductionBlock> =
        blocks.into_iter().map(|(k, residual)| ReductionBlock { src: k.src, residual }).collect();
    let pass = blocks.iter().all(|b| b.residual <= tol);
    let even = f.is_even();

    if !pass && !even {
        let literal = build_color_hecke(f, basis, q, HeckeVariant::Literal)?;
        let uniform = build_color_hecke(f, basis, q, HeckeVariant::Uniform)?;
        if r.distance(&literal)? <= tol && literal.distance(&uniform)? > tol {
            return Err(Error::VariantMismatch(
                "operator is the literal-variant color Hecke matrix of an odd factor; \
                 the super R-matrix target matches the uniform variant"
                    .into(),
            ));
        }
    }

    Ok(ReductionReport { check: "reduction", sigma_gauge: CocycleSigma::GAUGE, even_factor: even, blocks, pass })
}
