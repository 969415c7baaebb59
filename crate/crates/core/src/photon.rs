//! Single-photon kinematics: polarisation frame, transverse projection,
//! helicity components and the scalar product / symplectic form on
//! momentum-space wave functions.
//!
//! The scalar product is antilinear in its first argument.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{complexify, dot_rc, CVec3, Vec3};
use crate::pairing::{pair, PairingResult, QuadratureSpec};

/// Directions with `k̂₁² + k̂₂²` below the square of this are on the axis.
pub const AXIS_TOLERANCE: f64 = 1e-9;

/// Bounds on how fast a wave function's phase varies, used to size the
/// momentum quadrature.
///
/// `radial` bounds `|∂φ/∂|k||`; `polar` and `azimuthal` bound the angular
/// derivatives per unit `|k|`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Oscillation {
    pub radial: f64,
    pub polar: f64,
    pub azimuthal: f64,
}

impl Oscillation {
    pub fn combine(&self, other: &Oscillation) -> Oscillation {
        Oscillation {
            radial: self.radial + other.radial,
            polar: self.polar + other.polar,
            azimuthal: self.azimuthal + other.azimuthal,
        }
    }

    pub fn max(&self, other: &Oscillation) -> Oscillation {
        Oscillation {
            radial: self.radial.max(other.radial),
            polar: self.polar.max(other.polar),
            azimuthal: self.azimuthal.max(other.azimuthal),
        }
    }
}

/// A transverse `ℂ³`-valued function of photon momentum.
pub trait PhotonWaveFunction: Send + Sync {
    /// Evaluator on the sphere `|k| = radius`, taking the unit direction.
    /// Radius-only work is done once per call.
    fn shell(&self, radius: f64) -> Box<dyn Fn(&Vec3) -> CVec3 + '_>;

    /// `p` such that `|f(k)| = O(|k|^p)` as `k → 0`.
    fn small_k_exponent(&self) -> f64;

    /// Radius beyond which the function is negligible or cut off.
    fn truncation_radius(&self) -> f64;

    fn oscillation(&self) -> Oscillation {
        Oscillation::default()
    }

    /// As [`oscillation`](Self::oscillation), with the angles measured
    /// about the unit vector `axis` instead of `e₃`.
    fn oscillation_about(&self, _axis: &Vec3) -> Oscillation {
        let o = self.oscillation();
        Oscillation { azimuthal: o.polar.max(o.azimuthal), ..o }
    }

    /// Radii where the function jumps or has a kink.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn eval(&self, k: &Vec3) -> CVec3 {
        let r = k.norm();
        if r == 0.0 {
            return (self.shell(0.0))(&Vec3::new(0.0, 0.0, 1.0));
        }
        (self.shell(r))(&(k / r))
    }
}

pub type WaveFn = Arc<dyn PhotonWaveFunction>;

/// `(ε₊, ε₋)` with `ε₊ = (k̂₂, -k̂₁, 0)/√(k̂₁² + k̂₂²)` and `ε₋ = k̂ × ε₊`.
pub fn polarisation(khat: &Vec3) -> Result<(Vec3, Vec3)> {
    let rho = khat[0].hypot(khat[1]);
    if rho <= AXIS_TOLERANCE {
        return Err(Error::AxisSingularity([khat[0], khat[1], khat[2]]));
    }
    let plus = Vec3::new(khat[1] / rho, -khat[0] / rho, 0.0);
    let minus = khat.cross(&plus);
    Ok((plus, minus))
}

/// `P_tr u = u - (k̂·u) k̂`, which equals `Σ_λ (u·ε_λ) ε_λ` off the axis
/// and stays defined on it.
pub fn transverse_project(khat: &Vec3, u: &CVec3) -> CVec3 {
    let along = dot_rc(khat, u);
    u - complexify(khat) * along
}

/// `P_tr` written through the polarisation frame.
pub fn transverse_project_frame(khat: &Vec3, u: &CVec3) -> Result<CVec3> {
    let (p, m) = polarisation(khat)?;
    Ok(complexify(&p) * dot_rc(&p, u) + complexify(&m) * dot_rc(&m, u))
}

/// `(ε₊·f(k), ε₋·f(k))`.
pub fn helicity_components(f: &dyn PhotonWaveFunction, k: &Vec3) -> Result<(Complex64, Complex64)> {
    let r = k.norm();
    if r == 0.0 {
        return Err(Error::PointSingularity);
    }
    let (p, m) = polarisation(&(k / r))?;
    let v = f.eval(k);
    Ok((dot_rc(&p, &v), dot_rc(&m, &v)))
}

/// `⟨f, g⟩ = ∫ d³k f(k)* · g(k)`.
pub fn inner_product(
    f: &dyn PhotonWaveFunction,
    g: &dyn PhotonWaveFunction,
    q: &QuadratureSpec,
) -> Result<PairingResult> {
    pair(f, g, q)
}

/// `σ(f, g) = Im⟨f, g⟩`.
pub fn symplectic(f: &dyn PhotonWaveFunction, g: &dyn PhotonWaveFunction, q: &QuadratureSpec) -> Result<f64> {
    Ok(pair(f, g, q)?.value.im)
}

/// Finite linear combination `Σ cᵢ fᵢ`.
#[derive(Clone)]
pub struct Combination {
    parts: Vec<(Complex64, WaveFn)>,
}

impl Combination {
    pub fn new(parts: Vec<(Complex64, WaveFn)>) -> Self {
        Self { parts }
    }

    pub fn difference(a: WaveFn, b: WaveFn) -> Self {
        Self::new(vec![(Complex64::new(1.0, 0.0), a), (Complex64::new(-1.0, 0.0), b)])
    }
}

impl PhotonWaveFunction for Combination {
    fn shell(&self, radius: f64) -> Box<dyn Fn(&Vec3) -> CVec3 + '_> {
        let shells: Vec<(Complex64, Box<dyn Fn(&Vec3) -> CVec3 + '_>)> =
            self.parts.iter().map(|(c, f)| (*c, f.shell(radius))).collect();
        Box::new(move |dir: &Vec3| {
            let mut acc = CVec3::zeros();
            for (c, s) in &shells {
                acc += s(dir) * *c;
            }
            acc
        })
    }

    fn small_k_exponent(&self) -> f64 {
        self.parts
            .iter()
            .map(|(_, f)| f.small_k_exponent())
            .fold(f64::INFINITY, f64::min)
    }

    fn truncation_radius(&self) -> f64 {
        self.parts.iter().map(|(_, f)| f.truncation_radius()).fold(0.0, f64::max)
    }

    fn oscillation(&self) -> Oscillation {
        self.parts
            .iter()
            .map(|(_, f)| f.oscillation())
            .fold(Oscillation::default(), |a, b| a.max(&b))
    }

    fn oscillation_about(&self, axis: &Vec3) -> Oscillation {
        self.parts
            .iter()
            .map(|(_, f)| f.oscillation_about(axis))
            .fold(Oscillation::default(), |a, b| a.max(&b))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.parts.iter().flat_map(|(_, f)| f.breakpoints()).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point4;
    use crate::linalg::dot_conj;
    use crate::testfields::{photon_wavefunction, Channel, TestFieldPair};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
        loop {
            let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = v.norm();
            if n > 0.1 && n < 1.0 {
                return v / n;
            }
        }
    }

    fn random_cvec(rng: &mut ChaCha8Rng) -> CVec3 {
        CVec3::from_fn(|_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn polarisation_printed_values() {
        let (p, m) = polarisation(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((p - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
        assert!((m - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
        let (p, m) = polarisation(&Vec3::new(0.0, 1.0, 0.0)).unwrap();
        assert!((p - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((m - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
        assert!(matches!(polarisation(&Vec3::new(0.0, 0.0, 1.0)), Err(Error::AxisSingularity(_))));
        assert!(matches!(polarisation(&Vec3::new(0.0, 0.0, -1.0)), Err(Error::AxisSingularity(_))));
    }

    #[test]
    fn frame_orthonormal_at_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let k = random_unit(&mut rng);
            let (p, m) = polarisation(&k).unwrap();
            assert!(k.dot(&p).abs() < 1e-14 && k.dot(&m).abs() < 1e-14 && p.dot(&m).abs() < 1e-14);
            assert!((p.norm() - 1.0).abs() < 1e-14 && (m.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_examples() {
        let k = Vec3::new(1.0, 0.0, 0.0);
        assert!(transverse_project(&k, &complexify(&k)).norm() < 1e-16);
        let u = complexify(&Vec3::new(0.0, 1.0, 0.0));
        assert!((transverse_project(&k, &u) - u).norm() < 1e-16);
    }

    #[test]
    fn projection_idempotent_and_frame_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let k = random_unit(&mut rng);
            let u = random_cvec(&mut rng);
            let p1 = transverse_project(&k, &u);
            let p2 = transverse_project(&k, &p1);
            assert!((p1 - p2).norm() < 1e-14);
            assert!(dot_rc(&k, &p1).norm() < 1e-14);
            let pf = transverse_project_frame(&k, &u).unwrap();
            assert!((pf - p1).norm() < 1e-14);
        }
    }

    #[test]
    fn helicity_parseval() {
        let f = photon_wavefunction(
            &TestFieldPair::single(Channel::Electric, [0.2, 0.7, -0.3], Point4::origin(), 0.4, 0.5, 1.0).unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let k = random_unit(&mut rng) * rng.gen_range(0.1..4.0);
            let (fp, fm) = helicity_components(&f, &k).unwrap();
            let v = f.eval(&k);
            let lhs = dot_conj(&v, &v).re;
            assert!((lhs - fp.norm_sqr() - fm.norm_sqr()).abs() <= 1e-12 * lhs.max(1e-300));
        }
        assert!(matches!(helicity_components(&f, &Vec3::new(0.0, 0.0, 2.0)), Err(Error::AxisSingularity(_))));
    }

    struct Fixed(CVec3);
    impl PhotonWaveFunction for Fixed {
        fn shell(&self, _radius: f64) -> Box<dyn Fn(&Vec3) -> CVec3 + '_> {
            Box::new(move |dir: &Vec3| transverse_project(dir, &self.0))
        }
        fn small_k_exponent(&self) -> f64 {
            0.0
        }
        fn truncation_radius(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn helicity_of_polarised_and_longitudinal() {
        let k = Vec3::new(0.6, 0.0, 0.8);
        let (p, _) = polarisation(&k).unwrap();
        let (fp, fm) = helicity_components(&Fixed(complexify(&(p * 2.0))), &k).unwrap();
        assert!((fp.norm() - 2.0).abs() < 1e-15 && fm.norm() < 1e-15);
        let (fp, fm) = helicity_components(&Fixed(complexify(&k)), &k).unwrap();
        assert!(fp.norm() < 1e-15 && fm.norm() < 1e-15);
    }
}
