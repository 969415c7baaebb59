//! Phase bookkeeping for Weyl operators `W(f)` with
//! `W(f₁)W(f₂) = e^{-iσ(f₁,f₂)} W(f₁+f₂)` and `W(f)* = W(-f)`, and for the
//! coherent automorphisms `α_v(W(f)) = e^{-2i Im⟨-iv, f⟩} W(f)`.
//!
//! Labels are finite complex combinations of the basis wave functions of
//! a [`LabelSpace`]; the symplectic form on labels comes from the cached
//! Gram matrix, so the group law holds to rounding.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::pairing::{check_integrable, pair_many, pairings_on_common_rule, QuadratureSpec};
use crate::photon::{Combination, PhotonWaveFunction, WaveFn};
use crate::profiles::{DressingParams, Profile, ProfileKind};
use crate::testfields::{photon_wavefunction, TestFieldPair};

/// Square-integrable basis wave functions and their Gram matrix.
pub struct LabelSpace {
    basis: Vec<WaveFn>,
    gram: Vec<Vec<Complex64>>,
    gram_error: f64,
    q: QuadratureSpec,
}

impl LabelSpace {
    pub fn new(basis: Vec<WaveFn>, q: &QuadratureSpec) -> Result<Self> {
        let n = basis.len();
        let refs: Vec<&dyn PhotonWaveFunction> = basis.iter().map(|b| b.as_ref()).collect();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let mut gram = vec![vec![Complex64::default(); n]; n];
        let mut gram_error: f64 = 0.0;
        if n > 0 {
            let results = pair_many(&refs, &pairs, q)?;
            for (&(i, j), r) in pairs.iter().zip(&results) {
                gram[i][j] = r.value;
                gram_error = gram_error.max(r.error_estimate);
            }
            for i in 0..n {
                gram[i][i].im = 0.0;
                for j in 0..i {
                    gram[i][j] = gram[j][i].conj();
                }
            }
        }
        Ok(Self { basis, gram, gram_error, q: q.clone() })
    }

    pub fn from_fields(fields: &[TestFieldPair], q: &QuadratureSpec) -> Result<Self> {
        let basis = fields.iter().map(|f| Arc::new(photon_wavefunction(f)) as WaveFn).collect();
        Self::new(basis, q)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn gram(&self) -> &[Vec<Complex64>] {
        &self.gram
    }

    /// Largest quadrature error estimate among the Gram entries.
    pub fn gram_error(&self) -> f64 {
        self.gram_error
    }

    /// The `i`-th basis vector as a label.
    pub fn basis_label(&self, i: usize) -> Label {
        let mut coeffs = vec![Complex64::default(); self.dim()];
        coeffs[i] = Complex64::new(1.0, 0.0);
        Label { coeffs }
    }

    pub fn zero(&self) -> Label {
        Label { coeffs: vec![Complex64::default(); self.dim()] }
    }

    pub fn label(&self, coeffs: Vec<Complex64>) -> Result<Label> {
        if coeffs.len() != self.dim() {
            return Err(invalid(format!("label has {} coefficients, space has dimension {}", coeffs.len(), self.dim())));
        }
        Ok(Label { coeffs })
    }

    fn check(&self, l: &Label) -> Result<()> {
        if l.coeffs.len() != self.dim() {
            return Err(invalid("label does not belong to this space"));
        }
        Ok(())
    }

    /// `⟨a, b⟩ = Σ conj(aᵢ) bⱼ Gᵢⱼ`.
    pub fn inner(&self, a: &Label, b: &Label) -> Result<Complex64> {
        self.check(a)?;
        self.check(b)?;
        let mut acc = Complex64::default();
        for (i, ai) in a.coeffs.iter().enumerate() {
            if *ai == Complex64::default() {
                continue;
            }
            let mut row = Complex64::default();
            for (j, bj) in b.coeffs.iter().enumerate() {
                row += self.gram[i][j] * bj;
            }
            acc += ai.conj() * row;
        }
        Ok(acc)
    }

    /// `σ(a, b) = Im⟨a, b⟩`.
    pub fn sigma(&self, a: &Label, b: &Label) -> Result<f64> {
        Ok(self.inner(a, b)?.im)
    }

    /// The label as a wave function.
    pub fn wavefunction(&self, l: &Label) -> Result<Combination> {
        self.check(l)?;
        Ok(Combination::new(
            l.coeffs
                .iter()
                .zip(&self.basis)
                .filter(|(c, _)| **c != Complex64::default())
                .map(|(c, b)| (*c, b.clone()))
                .collect(),
        ))
    }

    /// `⟨v, bᵢ⟩` for every profile and basis element, on one rule shared
    /// with the Gram matrix.
    pub fn profile_pairings(&self, profiles: &[&dyn PhotonWaveFunction]) -> Result<Vec<Vec<Complex64>>> {
        let n = self.dim();
        let mut functions: Vec<&dyn PhotonWaveFunction> = self.basis.iter().map(|b| b.as_ref()).collect();
        functions.extend_from_slice(profiles);
        let plan: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let eval: Vec<(usize, usize)> = (0..profiles.len()).flat_map(|p| (0..n).map(move |i| (n + p, i))).collect();
        check_integrable(&functions, &eval)?;
        let results = pairings_on_common_rule(&functions, &plan, &eval, self.q.r_min, self.q.r_max, &self.q)?;
        Ok(results.chunks(n.max(1)).map(|c| c.iter().map(|r| r.value).collect()).collect())
    }
}

/// Finite complex combination of basis wave functions.
#[derive(Clone, Debug, PartialEq)]
pub struct Label {
    coeffs: Vec<Complex64>,
}

impl Label {
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn add(&self, other: &Label) -> Label {
        Label { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, c: Complex64) -> Label {
        Label { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn neg(&self) -> Label {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::default())
    }
}

/// Reduces a phase to `[0, 2π)`.
pub fn canonical_phase(p: f64) -> f64 {
    let r = p.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two phases on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// `e^{iθ} W(f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylElement {
    pub label: Label,
    phase: f64,
}

impl WeylElement {
    pub fn new(label: Label, phase: f64) -> Self {
        Self { label, phase: canonical_phase(phase) }
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

/// `W₁W₂` with phase `θ₁ + θ₂ - σ(f₁, f₂)`.
pub fn multiply(space: &LabelSpace, a: &WeylElement, b: &WeylElement) -> Result<WeylElement> {
    let s = space.sigma(&a.label, &b.label)?;
    Ok(WeylElement::new(a.label.add(&b.label), a.phase + b.phase - s))
}

/// `W*` with label and phase negated.
pub fn adjoint(w: &WeylElement) -> WeylElement {
    WeylElement::new(w.label.neg(), -w.phase)
}

/// `α_v`, stored by its profile `v`, which need not be square integrable.
#[derive(Clone)]
pub struct CoherentAutomorphism {
    profile: WaveFn,
}

impl CoherentAutomorphism {
    pub fn new(profile: WaveFn) -> Self {
        Self { profile }
    }

    pub fn from_profile(params: &DressingParams, kind: ProfileKind) -> Result<Self> {
        Ok(Self::new(Arc::new(Profile::new(params, kind)?)))
    }

    pub fn profile(&self) -> &WaveFn {
        &self.profile
    }

    /// Phase shift `-2 Im⟨-iv, f⟩ = -2 Re⟨v, f⟩` given `⟨v, bᵢ⟩`.
    fn shift(pairings: &[Complex64], label: &Label) -> f64 {
        let vf: Complex64 = pairings.iter().zip(label.coeffs()).map(|(p, c)| p * c).sum();
        -2.0 * vf.re
    }
}

/// `α_v(e^{iθ}W(f)) = e^{i(θ - 2 Re⟨v, f⟩)} W(f)`.
pub fn apply_automorphism(space: &LabelSpace, alpha: &CoherentAutomorphism, w: &WeylElement) -> Result<WeylElement> {
    space.check(&w.label)?;
    let pairings = space.profile_pairings(&[alpha.profile.as_ref()])?;
    Ok(WeylElement::new(w.label.clone(), w.phase + CoherentAutomorphism::shift(&pairings[0], &w.label)))
}

/// Phase shifts of several automorphisms on several labels, all on one rule.
pub fn phase_shifts(space: &LabelSpace, alphas: &[&CoherentAutomorphism], labels: &[Label]) -> Result<Vec<Vec<f64>>> {
    for l in labels {
        space.check(l)?;
    }
    let profiles: Vec<&dyn PhotonWaveFunction> = alphas.iter().map(|a| a.profile.as_ref()).collect();
    let pairings = space.profile_pairings(&profiles)?;
    Ok(pairings
        .iter()
        .map(|p| labels.iter().map(|l| CoherentAutomorphism::shift(p, l)).collect())
        .collect())
}

/// `α_{v₁} ∘ α_{v₂}⁻¹ = α_{v₁ - v₂}`.
pub fn compose_difference(a: &CoherentAutomorphism, b: &CoherentAutomorphism) -> CoherentAutomorphism {
    CoherentAutomorphism::new(Arc::new(Combination::difference(a.profile.clone(), b.profile.clone())))
}

/// `e^{-2i Im⟨-i v, f⟩}` for the limiting dressing `v`.
pub fn state_phase(params: &DressingParams, f: &TestFieldPair, q: &QuadratureSpec) -> Result<Complex64> {
    let v = Profile::new(params, ProfileKind::VLimit)?;
    let fw = photon_wavefunction(f);
    let r = pair_many(&[&v, &fw], &[(0, 1)], q)?[0];
    Ok(Complex64::from_polar(1.0, -2.0 * r.value.re))
}
