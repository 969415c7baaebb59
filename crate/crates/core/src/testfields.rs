//! Smooth compactly supported test functions `(f_e, f_b)` on spacetime and
//! their Fourier transforms evaluated on the positive mass shell.
//!
//! Conventions: the 1D transform is `(2π)^{-1/2} ∫ e^{-iωt} g(t) dt`; the
//! spacetime transform is `(2π)^{-2} ∫ e^{i(k₀t - k·x)} f(t, x)`, so the
//! on-shell value at `k₀ = |k|` is the 1D time transform at `-|k|` times
//! the 3D spatial transform at `k`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{DoubleCone, Point4};
use crate::linalg::{complexify, cross_rc, CVec3, Vec3, I};
use crate::photon::{Oscillation, PhotonWaveFunction};
use crate::quad::{integrate_real, Tolerance};

/// Relative accuracy of every 1D transform quadrature.
pub const TRANSFORM_REL_TOL: f64 = 1e-10;
/// Absolute floor, relative to the size of the untransformed profile.
pub const TRANSFORM_ABS_TOL: f64 = 1e-15;

/// Radius (in units of 1/halfwidth) beyond which a test-field transform is
/// treated as negligible by the momentum quadrature.
pub const TRUNCATION_FACTOR: f64 = 40.0;

/// The standard bump `exp(-1/(1-s²))` on `|s| < 1`.
pub fn unit_bump(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub center: f64,
    pub halfwidth: f64,
    pub amplitude: f64,
}

pub fn make_bump(center: f64, halfwidth: f64, amplitude: f64) -> Result<BumpProfile> {
    if !(halfwidth > 0.0) || !halfwidth.is_finite() {
        return Err(invalid(format!("bump halfwidth must be positive, got {halfwidth}")));
    }
    if !center.is_finite() || !amplitude.is_finite() {
        return Err(invalid("bump center and amplitude must be finite"));
    }
    Ok(BumpProfile { center, halfwidth, amplitude })
}

impl BumpProfile {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * unit_bump((x - self.center) / self.halfwidth)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.halfwidth, self.center + self.halfwidth)
    }

    /// `∫ cos(ω h s) b(s) ds` over the unit support, times `2 A h`; the
    /// transform of the centered bump without the `e^{-iωc}` phase.
    fn centered_cosine_integral(&self, omega: f64) -> f64 {
        let h = self.halfwidth;
        let scale = 2.0 * h * self.amplitude.abs();
        let tol = Tolerance::new(TRANSFORM_ABS_TOL * scale.max(f64::MIN_POSITIVE), TRANSFORM_REL_TOL);
        let (v, _) = integrate_real(|s| unit_bump(s) * (omega * h * s).cos(), 0.0, 1.0, tol);
        2.0 * h * self.amplitude * v
    }
}

/// `(2π)^{-1/2} ∫ e^{-iωt} b(t) dt` by adaptive quadrature over the support.
pub fn fourier_transform_1d(b: &BumpProfile, omega: f64) -> Complex64 {
    let real = b.centered_cosine_integral(omega) / (2.0 * PI).sqrt();
    if b.center == 0.0 {
        Complex64::new(real, 0.0)
    } else {
        Complex64::from_polar(1.0, -omega * b.center) * real
    }
}

/// `(2π)^{-3/2} ∫ e^{-ik·x} A b(|x|/R) d³x` for a bump centered at the
/// origin; depends on `|k|` only.
pub fn radial_bump_transform(radius: f64, amplitude: f64, k: f64) -> f64 {
    let kr = k * radius;
    let pref = 4.0 * PI * amplitude * radius.powi(3) / (2.0 * PI).powf(1.5);
    let tol = Tolerance::new(TRANSFORM_ABS_TOL, TRANSFORM_REL_TOL);
    let (v, _) = integrate_real(|s| s * s * unit_bump(s) * crate::linalg::sinc(kr * s), 0.0, 1.0, tol);
    pref * v
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum SpatialProfile {
    /// `A b(|x - c| / R)`.
    Radial { center: [f64; 3], radius: f64, amplitude: f64 },
    /// `b₁(x₁) b₂(x₂) b₃(x₃)`.
    Product { factors: [BumpProfile; 3] },
}

impl SpatialProfile {
    pub fn radial(center: [f64; 3], radius: f64, amplitude: f64) -> Result<Self> {
        make_bump(0.0, radius, amplitude)?;
        Ok(SpatialProfile::Radial { center, radius, amplitude })
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            SpatialProfile::Radial { center, radius, amplitude } => {
                amplitude * unit_bump((x - Vec3::from(*center)).norm() / radius)
            }
            SpatialProfile::Product { factors } => {
                factors[0].eval(x[0]) * factors[1].eval(x[1]) * factors[2].eval(x[2])
            }
        }
    }

    fn center(&self) -> Vec3 {
        match self {
            SpatialProfile::Radial { center, .. } => Vec3::from(*center),
            SpatialProfile::Product { factors } => {
                Vec3::new(factors[0].center, factors[1].center, factors[2].center)
            }
        }
    }

    /// Largest distance from the center to a support point.
    fn reach(&self) -> f64 {
        match self {
            SpatialProfile::Radial { radius, .. } => *radius,
            SpatialProfile::Product { factors } => {
                Vec3::new(factors[0].halfwidth, factors[1].halfwidth, factors[2].halfwidth).norm()
            }
        }
    }

    fn min_width(&self) -> f64 {
        match self {
            SpatialProfile::Radial { radius, .. } => *radius,
            SpatialProfile::Product { factors } => factors
                .iter()
                .map(|f| f.halfwidth)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `(2π)^{-3/2} ∫ e^{-ik·x} b(x) d³x`.
    pub fn transform(&self, k: &Vec3) -> Complex64 {
        match self {
            SpatialProfile::Radial { center, radius, amplitude } => {
                let phase = -k.dot(&Vec3::from(*center));
                Complex64::from_polar(1.0, phase) * radial_bump_transform(*radius, *amplitude, k.norm())
            }
            SpatialProfile::Product { factors } => {
                fourier_transform_1d(&factors[0], k[0])
                    * fourier_transform_1d(&factors[1], k[1])
                    * fourier_transform_1d(&factors[2], k[2])
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Electric,
    Magnetic,
}

/// One separable term `a(t) b(x) n` of a test field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub time: BumpProfile,
    pub space: SpatialProfile,
    pub direction: [f64; 3],
    pub channel: Channel,
}

impl Term {
    pub fn new(time: BumpProfile, space: SpatialProfile, direction: [f64; 3], channel: Channel) -> Result<Self> {
        let d = Vec3::from(direction);
        let n = d.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid("term direction must be a nonzero finite vector"));
        }
        let d = d / n;
        Ok(Self { time, space, direction: [d[0], d[1], d[2]], channel })
    }

    pub fn eval(&self, p: &Point4) -> Vec3 {
        Vec3::from(self.direction) * (self.time.eval(p.t) * self.space.eval(&p.spatial()))
    }

    /// Sup of `|t - c₀| + |x - c|` over the term's support box.
    fn reach_from(&self, c: &Point4) -> f64 {
        (self.time.center - c.t).abs()
            + self.time.halfwidth
            + (self.space.center() - c.spatial()).norm()
            + self.space.reach()
    }

    /// On-shell transform `ã(-|k|) b̃(k) n`.
    pub fn onshell(&self, k: &Vec3) -> CVec3 {
        let t = fourier_transform_1d(&self.time, -k.norm());
        complexify(&Vec3::from(self.direction)) * (t * self.space.transform(k))
    }
}

/// Compactly supported pair `(f_e, f_b)` with a declared double-cone support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFieldPair {
    terms: Vec<Term>,
    support: DoubleCone,
}

impl TestFieldPair {
    /// Validates that every term's support box lies in `support`.
    pub fn new(terms: Vec<Term>, support: DoubleCone) -> Result<Self> {
        for (i, term) in terms.iter().enumerate() {
            let reach = term.reach_from(&support.center);
            if reach > support.radius * (1.0 + 1e-12) {
                return Err(invalid(format!(
                    "term {i} reaches {reach} from the support center, beyond radius {}",
                    support.radius
                )));
            }
        }
        Ok(Self { terms, support })
    }

    /// Wraps the terms in a double cone centered at the first term's center
    /// that just contains all of them.
    pub fn enclosing(terms: Vec<Term>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| invalid("test field needs at least one term"))?;
        let center = Point4::new(first.time.center, {
            let c = first.space.center();
            [c[0], c[1], c[2]]
        });
        let radius = terms.iter().map(|t| t.reach_from(&center)).fold(0.0, f64::max);
        Self::new(terms, DoubleCone::new(center, radius)?)
    }

    /// Single radially symmetric term in a double cone of radius
    /// `time_halfwidth + space_radius` around `(t, x)`.
    pub fn single(
        channel: Channel,
        direction: [f64; 3],
        center: Point4,
        time_halfwidth: f64,
        space_radius: f64,
        amplitude: f64,
    ) -> Result<Self> {
        let term = Term::new(
            make_bump(center.t, time_halfwidth, amplitude)?,
            SpatialProfile::radial(center.x, space_radius, 1.0)?,
            direction,
            channel,
        )?;
        Self::new(vec![term], DoubleCone::new(center, time_halfwidth + space_radius)?)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn support(&self) -> &DoubleCone {
        &self.support
    }

    /// Spacetime translate by `a`.
    pub fn translated(&self, a: &Point4) -> Self {
        let shift = a.spatial();
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut t = *t;
                t.time.center += a.t;
                t.space = match t.space {
                    SpatialProfile::Radial { center, radius, amplitude } => SpatialProfile::Radial {
                        center: [center[0] + shift[0], center[1] + shift[1], center[2] + shift[2]],
                        radius,
                        amplitude,
                    },
                    SpatialProfile::Product { mut factors } => {
                        for (f, s) in factors.iter_mut().zip(shift.iter()) {
                            f.center += s;
                        }
                        SpatialProfile::Product { factors }
                    }
                };
                t
            })
            .collect();
        let c = &self.support.center;
        let support = DoubleCone {
            center: Point4::new(c.t + a.t, [c.x[0] + a.x[0], c.x[1] + a.x[1], c.x[2] + a.x[2]]),
            radius: self.support.radius,
        };
        Self { terms, support }
    }

    /// Real-space values `(f_e(p), f_b(p))`.
    pub fn eval(&self, p: &Point4) -> (Vec3, Vec3) {
        let mut e = Vec3::zeros();
        let mut b = Vec3::zeros();
        for term in &self.terms {
            match term.channel {
                Channel::Electric => e += term.eval(p),
                Channel::Magnetic => b += term.eval(p),
            }
        }
        (e, b)
    }

    fn min_width(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.time.halfwidth.min(t.space.min_width()))
            .fold(f64::INFINITY, f64::min)
    }

    fn oscillation(&self) -> Oscillation {
        let mut osc = Oscillation::default();
        for t in &self.terms {
            let c = t.space.center();
            let radial = t.time.center.abs() + t.time.halfwidth + c.norm() + t.space.reach();
            osc.radial = osc.radial.max(radial);
            osc.polar = osc.polar.max(c.norm() + t.space.reach());
            osc.azimuthal = osc.azimuthal.max(c[0].hypot(c[1]) + t.space.reach());
        }
        osc
    }

    fn oscillation_about(&self, axis: &Vec3) -> Oscillation {
        let mut osc = self.oscillation();
        osc.azimuthal = 0.0;
        for t in &self.terms {
            let c = t.space.center();
            osc.azimuthal = osc.azimuthal.max((c - axis * c.dot(axis)).norm() + t.space.reach());
        }
        osc
    }
}

/// Radial parts of one term at a fixed `|k|`: the time transform at `-|k|`
/// and, for radial spatial bumps, the centered spatial transform.
#[derive(Clone, Copy, Debug)]
struct RadialFactors {
    time: Complex64,
    space: Option<f64>,
}

/// On-shell transform of a [`TestFieldPair`] with a per-radius cache.
#[derive(Debug)]
pub struct OnShellTransform {
    pair: Arc<TestFieldPair>,
    cache: Mutex<HashMap<u64, Arc<Vec<RadialFactors>>>>,
}

const CACHE_LIMIT: usize = 1 << 20;

impl OnShellTransform {
    pub fn new(pair: Arc<TestFieldPair>) -> Self {
        Self { pair, cache: Mutex::new(HashMap::new()) }
    }

    pub fn pair(&self) -> &TestFieldPair {
        &self.pair
    }

    fn radial_factors(&self, radius: f64) -> Arc<Vec<RadialFactors>> {
        let key = radius.to_bits();
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let factors: Vec<RadialFactors> = self
            .pair
            .terms
            .iter()
            .map(|t| RadialFactors {
                time: fourier_transform_1d(&t.time, -radius),
                space: match t.space {
                    SpatialProfile::Radial { radius: r, amplitude, .. } => {
                        Some(radial_bump_transform(r, amplitude, radius))
                    }
                    SpatialProfile::Product { .. } => None,
                },
            })
            .collect();
        let factors = Arc::new(factors);
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, factors.clone());
        factors
    }

    fn assemble(&self, factors: &[RadialFactors], k: &Vec3) -> (CVec3, CVec3) {
        let mut e = CVec3::zeros();
        let mut b = CVec3::zeros();
        for (term, f) in self.pair.terms.iter().zip(factors) {
            let space = match (f.space, &term.space) {
                (Some(radial), SpatialProfile::Radial { center, .. }) => {
                    Complex64::from_polar(radial, -k.dot(&Vec3::from(*center)))
                }
                _ => term.space.transform(k),
            };
            let v = complexify(&Vec3::from(term.direction)) * (f.time * space);
            match term.channel {
                Channel::Electric => e += v,
                Channel::Magnetic => b += v,
            }
        }
        (e, b)
    }

    /// `(f̃_e(|k|, k), f̃_b(|k|, k))`.
    pub fn eval(&self, k: &Vec3) -> (CVec3, CVec3) {
        let factors = self.radial_factors(k.norm());
        self.assemble(&factors, k)
    }
}

pub fn onshell_transform(pair: &TestFieldPair, k: &Vec3) -> (CVec3, CVec3) {
    let mut e = CVec3::zeros();
    let mut b = CVec3::zeros();
    for term in pair.terms() {
        match term.channel {
            Channel::Electric => e += term.onshell(k),
            Channel::Magnetic => b += term.onshell(k),
        }
    }
    (e, b)
}

/// Photon wave function `f(k) = -i(2π)²(|k|^{1/2} P_tr f̃_e + |k|^{-1/2} k × f̃_b)`.
#[derive(Debug)]
pub struct TestFieldWave {
    transform: OnShellTransform,
}

pub fn photon_wavefunction(pair: &TestFieldPair) -> TestFieldWave {
    TestFieldWave { transform: OnShellTransform::new(Arc::new(pair.clone())) }
}

impl TestFieldWave {
    pub fn pair(&self) -> &TestFieldPair {
        self.transform.pair()
    }

    fn combine(radius: f64, dir: &Vec3, e: &CVec3, b: &CVec3) -> CVec3 {
        if radius == 0.0 {
            return CVec3::zeros();
        }
        let along = e[0] * dir[0] + e[1] * dir[1] + e[2] * dir[2];
        let e_tr = e - complexify(dir) * along;
        let b_cross = cross_rc(dir, b);
        let pref = -I * (2.0 * PI).powi(2);
        (e_tr + b_cross) * (pref * radius.sqrt())
    }
}

impl PhotonWaveFunction for TestFieldWave {
    fn shell(&self, radius: f64) -> Box<dyn Fn(&Vec3) -> CVec3 + '_> {
        let factors = self.transform.radial_factors(radius);
        Box::new(move |dir: &Vec3| {
            let k = dir * radius;
            let (e, b) = self.transform.assemble(&factors, &k);
            Self::combine(radius, dir, &e, &b)
        })
    }

    fn small_k_exponent(&self) -> f64 {
        0.5
    }

    fn truncation_radius(&self) -> f64 {
        TRUNCATION_FACTOR / self.pair().min_width()
    }

    fn oscillation(&self) -> Oscillation {
        self.pair().oscillation()
    }

    fn oscillation_about(&self, axis: &Vec3) -> Oscillation {
        self.pair().oscillation_about(axis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;
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

    fn generic_pair() -> TestFieldPair {
        let t1 = Term::new(
            make_bump(0.2, 0.4, 1.3).unwrap(),
            SpatialProfile::radial([0.1, -0.2, 0.3], 0.5, 1.0).unwrap(),
            [0.3, 0.5, -0.8],
            Channel::Electric,
        )
        .unwrap();
        let t2 = Term::new(
            make_bump(-0.1, 0.5, -0.7).unwrap(),
            SpatialProfile::radial([-0.2, 0.1, 0.0], 0.4, 1.0).unwrap(),
            [0.9, -0.1, 0.2],
            Channel::Magnetic,
        )
        .unwrap();
        TestFieldPair::enclosing(vec![t1, t2]).unwrap()
    }

    #[test]
    fn bump_values() {
        let b = make_bump(0.0, 1.0, 1.0).unwrap();
        assert!((b.eval(0.0) - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(b.eval(1.0), 0.0);
        assert_eq!(b.eval(-1.5), 0.0);
        let b = make_bump(2.0, 0.5, 3.0).unwrap();
        assert!((b.eval(2.0) - 3.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(make_bump(0.0, 0.0, 1.0).is_err());
        assert!(make_bump(0.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn bump_derivative_differences_converge_quadratically() {
        let b = make_bump(0.0, 1.0, 1.0).unwrap();
        let exact = |x: f64| -2.0 * x / (1.0 - x * x).powi(2) * b.eval(x);
        let cd = |x: f64, h: f64| (b.eval(x + h) - b.eval(x - h)) / (2.0 * h);
        for x in [-0.6, -0.2, 0.3, 0.7] {
            let e1 = (cd(x, 1e-3) - exact(x)).abs();
            let e2 = (cd(x, 5e-4) - exact(x)).abs();
            assert!((e1 / e2 - 4.0).abs() < 0.1, "x = {x}: {e1} {e2}");
        }
        // flat to all orders at the edge
        assert!(cd(1.0, 1e-2) < 1e-20);
    }

    #[test]
    fn even_bump_transform_is_real() {
        let b = make_bump(0.0, 0.7, 2.0).unwrap();
        for &w in &[0.0, 0.3, 5.0, 41.0] {
            assert_eq!(fourier_transform_1d(&b, w).im, 0.0);
        }
    }

    #[test]
    fn transform_at_zero_matches_direct_quadrature() {
        // independent oracle: fixed high-order Gauss-Legendre on the support
        let b = make_bump(0.3, 0.8, 1.5).unwrap();
        let rule = gauss_legendre(400);
        let direct: f64 = rule.mapped(-0.5, 1.1).map(|(x, w)| w * b.eval(x)).sum();
        let ft = fourier_transform_1d(&b, 0.0);
        assert!((ft.re - direct / (2.0 * PI).sqrt()).abs() < 1e-12);
        assert!(ft.im.abs() < 1e-15);
        // and at finite frequency, with the e^{-iωt} kernel
        let w = 3.7;
        let direct: Complex64 = rule
            .mapped(-0.5, 1.1)
            .map(|(x, wt)| Complex64::from_polar(wt * b.eval(x), -w * x))
            .sum();
        assert!((fourier_transform_1d(&b, w) - direct / (2.0 * PI).sqrt()).norm() < 1e-12);
    }

    #[test]
    fn transform_decays_super_polynomially() {
        let b = make_bump(0.0, 1.0, 1.0).unwrap();
        let f0 = fourier_transform_1d(&b, 0.0).norm();
        // measured: 1.5e-4 at ω = 50 and below 1e-6 from ω ≈ 150 on
        assert!(fourier_transform_1d(&b, 50.0).norm() / f0 < 1e-3);
        assert!(fourier_transform_1d(&b, 150.0).norm() / f0 < 1e-6);
        // faster than any fixed power: ω^6 |f̃(ω)| keeps shrinking on the tail envelope
        let env = |w0: f64| -> f64 {
            (0..40).map(|i| fourier_transform_1d(&b, w0 + 0.25 * i as f64).norm()).fold(0.0, f64::max)
        };
        let (a, c) = (env(100.0), env(400.0));
        assert!(c * 400f64.powi(6) < a * 100f64.powi(6));
    }

    #[test]
    fn radial_transform_matches_cartesian_oracle() {
        // oracle: 3D transform of the radial bump via a product GL grid in Cartesian coordinates
        let (radius, amp) = (0.6, 1.7);
        let rule = gauss_legendre(48);
        let k = Vec3::new(1.3, -0.4, 2.1);
        let mut acc = Complex64::default();
        for (x, wx) in rule.mapped(-radius, radius) {
            for (y, wy) in rule.mapped(-radius, radius) {
                for (z, wz) in rule.mapped(-radius, radius) {
                    let r = (x * x + y * y + z * z).sqrt();
                    let v = amp * unit_bump(r / radius);
                    if v != 0.0 {
                        acc += Complex64::from_polar(wx * wy * wz * v, -(k[0] * x + k[1] * y + k[2] * z));
                    }
                }
            }
        }
        acc /= (2.0 * PI).powf(1.5);
        let ours = radial_bump_transform(radius, amp, k.norm());
        assert!((acc - ours).norm() < 1e-6 * ours.abs(), "{acc} vs {ours}");
    }

    #[test]
    fn zero_amplitude_gives_zero_transform() {
        let p = TestFieldPair::single(Channel::Electric, [1.0, 0.0, 0.0], Point4::origin(), 0.5, 0.5, 0.0).unwrap();
        let (e, b) = onshell_transform(&p, &Vec3::new(0.3, 1.0, -0.2));
        assert_eq!(e.norm(), 0.0);
        assert_eq!(b.norm(), 0.0);
    }

    #[test]
    fn realness_symmetry() {
        // f real ⇒ f̃(-k₀, -k) = conj f̃(k₀, k); on shell: f̃(|k|,-k) = conj f̃(-|k|, k)
        let p = generic_pair();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let k = random_unit(&mut rng) * rng.gen_range(0.1..6.0);
            let minus_k = -k;
            for term in p.terms() {
                let t_neg = fourier_transform_1d(&term.time, k.norm());
                let lhs = term.onshell(&minus_k);
                let rhs_space = term.space.transform(&k);
                let rhs = complexify(&Vec3::from(term.direction)) * (t_neg * rhs_space).conj();
                assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
            }
        }
    }

    #[test]
    fn translation_multiplies_by_onshell_phase() {
        let p = generic_pair();
        let a = Point4::new(0.7, [-1.1, 0.4, 2.0]);
        let q = p.translated(&a);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let k = random_unit(&mut rng) * rng.gen_range(0.1..5.0);
            let phase = Complex64::from_polar(1.0, k.norm() * a.t - k.dot(&a.spatial()));
            let (e0, b0) = onshell_transform(&p, &k);
            let (e1, b1) = onshell_transform(&q, &k);
            assert!((e1 - e0 * phase).norm() < 1e-10 * (1.0 + e0.norm()));
            assert!((b1 - b0 * phase).norm() < 1e-10 * (1.0 + b0.norm()));
        }
    }

    #[test]
    fn translation_phase_against_direct_spacetime_quadrature() {
        // oracle: brute-force (t, x) quadrature of the 4D on-shell transform
        let term = Term::new(
            make_bump(0.4, 0.3, 1.0).unwrap(),
            SpatialProfile::Product {
                factors: [
                    make_bump(0.2, 0.3, 1.0).unwrap(),
                    make_bump(-0.1, 0.25, 1.0).unwrap(),
                    make_bump(0.0, 0.35, 1.0).unwrap(),
                ],
            },
            [0.0, 0.0, 1.0],
            Channel::Electric,
        )
        .unwrap();
        let k = Vec3::new(1.1, -2.0, 0.7);
        let rule = gauss_legendre(40);
        let mut acc = Complex64::default();
        let f = &term.space;
        let SpatialProfile::Product { factors } = f else { unreachable!() };
        for (t, wt) in rule.mapped(0.1, 0.7) {
            let at = term.time.eval(t);
            for (x, wx) in rule.mapped(factors[0].support().0, factors[0].support().1) {
                for (y, wy) in rule.mapped(factors[1].support().0, factors[1].support().1) {
                    for (z, wz) in rule.mapped(factors[2].support().0, factors[2].support().1) {
                        let v = at * f.eval(&Vec3::new(x, y, z));
                        let phase = k.norm() * t - (k[0] * x + k[1] * y + k[2] * z);
                        acc += Complex64::from_polar(wt * wx * wy * wz * v, phase);
                    }
                }
            }
        }
        acc /= (2.0 * PI).powi(2);
        let ours = term.onshell(&k)[2];
        assert!((acc - ours).norm() < 1e-8 * ours.norm().max(1e-3), "{acc} vs {ours}");
    }

    #[test]
    fn cached_transform_matches_uncached() {
        let p = generic_pair();
        let t = OnShellTransform::new(Arc::new(p.clone()));
        let k = Vec3::new(0.5, 0.2, -1.0);
        let (e0, b0) = onshell_transform(&p, &k);
        for _ in 0..2 {
            let (e1, b1) = t.eval(&k);
            assert!((e1 - e0).norm() < 1e-14 && (b1 - b0).norm() < 1e-14);
        }
    }

    #[test]
    fn support_is_validated() {
        let term = Term::new(
            make_bump(0.0, 0.5, 1.0).unwrap(),
            SpatialProfile::radial([0.0; 3], 0.5, 1.0).unwrap(),
            [1.0, 0.0, 0.0],
            Channel::Electric,
        )
        .unwrap();
        assert!(TestFieldPair::new(vec![term], DoubleCone::new(Point4::origin(), 1.0).unwrap()).is_ok());
        assert!(TestFieldPair::new(vec![term], DoubleCone::new(Point4::origin(), 0.9).unwrap()).is_err());
    }

    #[test]
    fn support_honesty_on_sampled_grid() {
        let p = generic_pair();
        let dc = *p.support();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut outside = 0;
        for _ in 0..20000 {
            let q = Point4::new(
                dc.center.t + rng.gen_range(-2.0..2.0) * dc.radius,
                [
                    dc.center.x[0] + rng.gen_range(-2.0..2.0) * dc.radius,
                    dc.center.x[1] + rng.gen_range(-2.0..2.0) * dc.radius,
                    dc.center.x[2] + rng.gen_range(-2.0..2.0) * dc.radius,
                ],
            );
            if !crate::geometry::contains(&dc, &q) {
                outside += 1;
                let (e, b) = p.eval(&q);
                assert_eq!(e.norm() + b.norm(), 0.0, "nonzero outside support at {q:?}");
            }
        }
        assert!(outside > 1000);
    }

    #[test]
    fn photon_wavefunction_special_cases() {
        let k = Vec3::new(0.3, -0.5, 0.8);
        let dir = k.normalize();
        // magnetic field along k: the cross product vanishes
        let p = TestFieldPair::single(Channel::Magnetic, [dir[0], dir[1], dir[2]], Point4::origin(), 0.4, 0.4, 1.0).unwrap();
        assert!(photon_wavefunction(&p).eval(&k).norm() < 1e-15);
        // longitudinal electric field is annihilated by P_tr
        let p = TestFieldPair::single(Channel::Electric, [dir[0], dir[1], dir[2]], Point4::origin(), 0.4, 0.4, 1.0).unwrap();
        let f = photon_wavefunction(&p);
        let (e, _) = onshell_transform(f.pair(), &k);
        let scale = (2.0 * PI).powi(2) * k.norm().sqrt() * e.norm();
        assert!(scale > 0.0);
        assert!(f.eval(&k).norm() < 1e-15 * scale);
    }

    #[test]
    fn photon_wavefunction_is_transverse() {
        let p = generic_pair();
        let f = photon_wavefunction(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let k = random_unit(&mut rng) * rng.gen_range(0.01..10.0);
            let v = f.eval(&k);
            let dot = v[0] * k[0] + v[1] * k[1] + v[2] * k[2];
            assert!(dot.norm() <= 1e-12 * k.norm() * v.norm().max(1e-300), "k·f = {dot}");
        }
    }

    #[test]
    fn photon_wavefunction_small_k_law() {
        let p = generic_pair();
        let f = photon_wavefunction(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dir = random_unit(&mut rng);
        let ratios: Vec<f64> = (0..20)
            .map(|i| {
                let r = 10f64.powf(-8.0 + 8.0 * i as f64 / 19.0);
                f.eval(&(dir * r)).norm() / r.sqrt()
            })
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max.is_finite() && max < 1e3);
        // the ratio approaches a constant as |k| → 0
        assert!((ratios[0] - ratios[1]).abs() < 1e-3 * ratios[0].max(1e-12));
    }

    #[test]
    fn photon_wavefunction_rapid_decay_beyond_truncation() {
        let p = generic_pair();
        let f = photon_wavefunction(&p);
        let rt = f.truncation_radius();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let peak = (0..50)
            .map(|i| f.eval(&(random_unit(&mut rng) * (0.2 + 0.1 * i as f64))).norm())
            .fold(0.0, f64::max);
        for i in 0..20 {
            let r = rt * (1.0 + 0.5 * i as f64);
            let v = f.eval(&(random_unit(&mut rng) * r)).norm();
            assert!(v < 1e-6 * peak, "|f| = {v} at {r}, peak {peak}");
        }
    }
}
