//! Soft-photon dressing profiles of an electron with velocity `w`:
//! the cutoff cloud `v_σ`, its pointwise limit `v`, the modified cloud
//! `v̂` built from a smooth bump `g`, and the finite-time approximants
//! `v̂_T` together with their two remainder terms.
//!
//! Every profile has the form `s(k) P_tr w` with a scalar `s`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{complexify, exprel_i, sinc, CVec3, Vec3};
use crate::pairing::{linear_fit, shell_pairings, PairingResult, QuadratureSpec};
use crate::photon::{polarisation, Combination, Oscillation, PhotonWaveFunction, WaveFn};
use crate::quad::{gauss_legendre, integrate_adaptive, integrate_real, Tolerance};
use crate::testfields::unit_bump;

/// `g̃` is treated as negligible beyond this many inverse bump radii.
pub const DRESSING_TRUNCATION_FACTOR: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DressingParams {
    /// `α̃`.
    pub coupling: f64,
    /// `κ`.
    pub uv_cutoff: f64,
    /// `σ`.
    pub ir_cutoff: f64,
    /// `w`, standing for the gradient of the dispersion relation.
    pub velocity: [f64; 3],
    pub v_max: f64,
    /// Support radius of the radial bump `g`.
    pub bump_radius: f64,
    /// `g̃(0)`; the construction needs 1, other values exist to break it.
    pub bump_norm: f64,
    /// `u`.
    pub time_shift: f64,
}

impl Default for DressingParams {
    fn default() -> Self {
        Self {
            coupling: 0.01,
            uv_cutoff: 1.0,
            ir_cutoff: 0.0,
            velocity: [0.0, 0.0, 0.3],
            v_max: 0.9,
            bump_radius: 1.0,
            bump_norm: 1.0,
            time_shift: 2.0,
        }
    }
}

impl DressingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.coupling > 0.0) {
            return Err(invalid("coupling must be positive"));
        }
        if !(self.uv_cutoff > 0.0) || !self.uv_cutoff.is_finite() {
            return Err(invalid("uv_cutoff must be positive"));
        }
        if !(self.ir_cutoff >= 0.0 && self.ir_cutoff <= self.uv_cutoff) {
            return Err(invalid("ir_cutoff must lie in [0, uv_cutoff]"));
        }
        if !(self.v_max > 0.0 && self.v_max < 1.0) {
            return Err(invalid("v_max must lie in (0, 1)"));
        }
        let speed = self.w().norm();
        if !speed.is_finite() || speed > self.v_max {
            return Err(invalid(format!("|velocity| = {speed} exceeds v_max = {}", self.v_max)));
        }
        if !(self.time_shift > 1.0) {
            return Err(invalid("time_shift u must exceed 1"));
        }
        if !(self.bump_radius > 0.0 && self.bump_radius < self.time_shift) {
            return Err(invalid("bump_radius must lie in (0, time_shift)"));
        }
        if !self.bump_norm.is_finite() {
            return Err(invalid("bump_norm must be finite"));
        }
        Ok(())
    }

    pub fn w(&self) -> Vec3 {
        Vec3::from(self.velocity)
    }

    pub fn with_velocity(&self, w: [f64; 3]) -> Self {
        Self { velocity: w, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    VSigma,
    VLimit,
    VHat,
    VHatT { t: f64 },
    /// The `[e^{iw·kT} - 1]` bracket term of `v̂_T - v̂`.
    Term2 { t: f64 },
    /// The `e^{-i(|k| - w·k)T}` term of `v̂_T - v̂`.
    Term3 { t: f64 },
    /// `v - v̂`.
    LimitMinusHat,
}

impl ProfileKind {
    fn horizon(&self) -> f64 {
        match *self {
            ProfileKind::VHatT { t } | ProfileKind::Term2 { t } | ProfileKind::Term3 { t } => t,
            _ => 0.0,
        }
    }

    fn uses_dressing(&self) -> bool {
        !matches!(self, ProfileKind::VSigma | ProfileKind::VLimit)
    }
}

/// `g̃(|k|)` for the radial bump `A b(|x|/R)` normalized to a given `g̃(0)`,
/// memoized per radius.
#[derive(Debug)]
pub struct Dressing {
    radius: f64,
    norm: f64,
    zero: f64,
    cache: Mutex<HashMap<u64, f64>>,
}

impl Dressing {
    pub fn new(radius: f64, norm: f64) -> Self {
        let zero = Self::moment(0.0);
        Self { radius, norm, zero, cache: Mutex::new(HashMap::new()) }
    }

    /// `∫₀¹ s² b(s) sinc(x s) ds`.
    fn moment(x: f64) -> f64 {
        let tol = Tolerance::new(1e-16, 1e-11);
        integrate_real(|s| s * s * unit_bump(s) * sinc(x * s), 0.0, 1.0, tol).0
    }

    pub fn eval(&self, k: f64) -> f64 {
        let key = k.to_bits();
        if let Some(&v) = self.cache.lock().unwrap().get(&key) {
            return v;
        }
        let v = self.norm * Self::moment(k * self.radius) / self.zero;
        let mut cache = self.cache.lock().unwrap();
        if cache.len() > 1 << 20 {
            cache.clear();
        }
        cache.insert(key, v);
        v
    }

    /// The bump `g(x)` itself at `|x| = r`.
    pub fn position_space(&self, r: f64) -> f64 {
        let amp = self.norm * (2.0 * PI).powf(1.5) / (4.0 * PI * self.radius.powi(3) * self.zero);
        amp * unit_bump(r / self.radius)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// A dressing profile as a photon wave function.
#[derive(Clone, Debug)]
pub struct Profile {
    params: DressingParams,
    kind: ProfileKind,
    dressing: Arc<Dressing>,
}

impl Profile {
    pub fn new(params: &DressingParams, kind: ProfileKind) -> Result<Self> {
        let dressing = Arc::new(Dressing::new(params.bump_radius, params.bump_norm));
        Self::with_dressing(params, kind, dressing)
    }

    /// Shares an existing `g̃` cache between profiles with the same bump.
    pub fn with_dressing(params: &DressingParams, kind: ProfileKind, dressing: Arc<Dressing>) -> Result<Self> {
        params.validate()?;
        let t = kind.horizon();
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid(format!("time horizon T must be non-negative, got {t}")));
        }
        if dressing.radius != params.bump_radius || dressing.norm != params.bump_norm {
            return Err(invalid("dressing cache does not match the bump parameters"));
        }
        Ok(Self { params: params.clone(), kind, dressing })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn params(&self) -> &DressingParams {
        &self.params
    }

    pub fn dressing(&self) -> &Arc<Dressing> {
        &self.dressing
    }

    /// `x ↦ s(r, x)` on the shell `|k| = r`, with `x = k̂·w`.
    pub(crate) fn axial_shell(&self, r: f64) -> impl Fn(f64) -> Complex64 + '_ {
        let radial = self.radial_part(r);
        move |x| self.scalar(r, &radial, x)
    }

    /// The scalar `s` with `profile(k) = s P_tr w`, given the radial
    /// factors and `c = k̂·w`.
    fn scalar(&self, r: f64, radial: &RadialPart, c: f64) -> Complex64 {
        let denom = 1.0 - c;
        match self.kind {
            ProfileKind::VSigma | ProfileKind::VLimit => Complex64::new(radial.a / denom, 0.0),
            ProfileKind::VHat => radial.b / denom,
            ProfileKind::VHatT { t } => {
                radial.b * r * t * (exprel_i(-r * denom * t) - radial.e * exprel_i(c * r * t))
            }
            ProfileKind::Term2 { t } => -radial.b * radial.e * r * t * exprel_i(c * r * t),
            ProfileKind::Term3 { t } => -radial.b * Complex64::from_polar(1.0, -r * denom * t) / denom,
            ProfileKind::LimitMinusHat => (radial.b_limit - radial.b) / denom,
        }
    }

    fn radial_part(&self, r: f64) -> RadialPart {
        let p = &self.params;
        let amp = p.coupling.sqrt() * r.powf(-1.5);
        let lo = match self.kind {
            ProfileKind::VSigma => p.ir_cutoff,
            _ => 0.0,
        };
        let in_shell = r >= lo && r <= p.uv_cutoff && lo < p.uv_cutoff;
        let a = if in_shell { amp } else { 0.0 };
        let (b, e) = if self.kind.uses_dressing() {
            let g = self.dressing.eval(r);
            (
                Complex64::from_polar(amp * g, -r * p.time_shift),
                Complex64::from_polar(1.0, -r * self.kind.horizon()),
            )
        } else {
            (Complex64::default(), Complex64::new(1.0, 0.0))
        };
        let b_limit = Complex64::new(if r <= p.uv_cutoff { amp } else { 0.0 }, 0.0);
        RadialPart { a, b, e, b_limit }
    }
}

struct RadialPart {
    /// Cutoff amplitude `α̃^{1/2} χ(|k|) |k|^{-3/2}`.
    a: f64,
    /// `α̃^{1/2} g̃ e^{-iu|k|} |k|^{-3/2}`.
    b: Complex64,
    /// `e^{-i|k|T}`.
    e: Complex64,
    /// `α̃^{1/2} χ_{[0,κ]} |k|^{-3/2}`.
    b_limit: Complex64,
}

impl PhotonWaveFunction for Profile {
    fn shell(&self, radius: f64) -> Box<dyn Fn(&Vec3) -> CVec3 + '_> {
        let w = self.params.w();
        if radius == 0.0 {
            return Box::new(|_| CVec3::repeat(Complex64::new(f64::NAN, f64::NAN)));
        }
        let radial = self.radial_part(radius);
        Box::new(move |dir: &Vec3| {
            let c = dir.dot(&w);
            let ptr = w - dir * c;
            complexify(&ptr) * self.scalar(radius, &radial, c)
        })
    }

    fn small_k_exponent(&self) -> f64 {
        match self.kind {
            ProfileKind::VSigma if self.params.ir_cutoff > 0.0 => f64::INFINITY,
            ProfileKind::VHatT { .. } => 0.5,
            ProfileKind::Term2 { .. } => -0.5,
            ProfileKind::LimitMinusHat if self.params.bump_norm == 1.0 => -0.5,
            _ => -1.5,
        }
    }

    fn truncation_radius(&self) -> f64 {
        let dressed = DRESSING_TRUNCATION_FACTOR / self.params.bump_radius;
        match self.kind {
            ProfileKind::VSigma | ProfileKind::VLimit => self.params.uv_cutoff,
            ProfileKind::LimitMinusHat => dressed.max(self.params.uv_cutoff),
            _ => dressed,
        }
    }

    fn oscillation(&self) -> Oscillation {
        if !self.kind.uses_dressing() {
            return Oscillation::default();
        }
        let w = self.params.w();
        let t = self.kind.horizon();
        Oscillation {
            radial: self.params.time_shift + self.params.bump_radius + (1.0 + w.norm()) * t,
            polar: w.norm() * t,
            azimuthal: w[0].hypot(w[1]) * t,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            ProfileKind::VSigma if self.params.ir_cutoff > 0.0 => vec![self.params.ir_cutoff, self.params.uv_cutoff],
            ProfileKind::VSigma | ProfileKind::VLimit | ProfileKind::LimitMinusHat => vec![self.params.uv_cutoff],
            _ => Vec::new(),
        }
    }
}

/// Profile value at `k`.
pub fn evaluate(params: &DressingParams, kind: ProfileKind, k: &Vec3) -> Result<CVec3> {
    let r = k.norm();
    if r == 0.0 {
        return Err(Error::PointSingularity);
    }
    let profile = Profile::new(params, kind)?;
    let value = (profile.shell(r))(&(k / r));
    Ok(value)
}

/// `v̂_T(k)` by direct numerical integration of the double time integral
/// over `0 ≤ t ≤ τ ≤ T`, assembled from its two helicity components.
pub fn v_hat_t_direct(params: &DressingParams, t_max: f64, k: &Vec3) -> Result<CVec3> {
    params.validate()?;
    if !(t_max >= 0.0) {
        return Err(invalid("T must be non-negative"));
    }
    let r = k.norm();
    if r == 0.0 {
        return Err(Error::PointSingularity);
    }
    let khat = k / r;
    let (eps_p, eps_m) = polarisation(&khat)?;
    if t_max == 0.0 {
        return Ok(CVec3::zeros());
    }
    let wk = params.w().dot(k);
    let kernel_scale = t_max * t_max / 2.0;
    let tol = Tolerance::new(1e-13 * kernel_scale, 1e-12);
    let outer = integrate_adaptive(
        |t| {
            let inner = integrate_adaptive(
                |tau| Complex64::from_polar(1.0, -(r * tau - wk * t)),
                t,
                t_max,
                &[],
                Tolerance::new(1e-14 * (t_max - t).max(1e-300), 1e-13),
                2000,
            );
            inner.value
        },
        0.0,
        t_max,
        &[],
        tol,
        2000,
    );
    let g = Dressing::new(params.bump_radius, params.bump_norm).eval(r);
    let pref = -params.coupling.sqrt() * r.sqrt() * g * Complex64::from_polar(1.0, -r * params.time_shift) * outer.value;
    let w = params.w();
    let mut out = CVec3::zeros();
    for eps in [eps_p, eps_m] {
        out += complexify(&eps) * (pref * w.dot(&eps));
    }
    Ok(out)
}

/// `A(|w|) = 2π|w|² ∫₋₁¹ (1 - c²)/(1 - |w|c)² dc`.
pub fn velocity_angular_factor(speed: f64) -> f64 {
    if speed == 0.0 {
        return 0.0;
    }
    let (v, _) = integrate_real(
        |c| (1.0 - c * c) / (1.0 - speed * c).powi(2),
        -1.0,
        1.0,
        Tolerance::new(1e-15, 1e-13),
    );
    2.0 * PI * speed * speed * v
}

/// `∫ dΩ |P_tr(w/(1 - k̂·w) - w'/(1 - k̂·w'))|²`, the coefficient of
/// `α̃ ln(1/σ_lo)` in the pairwise shell norm.
pub fn pairwise_angular_factor(w: [f64; 3], w_prime: [f64; 3]) -> f64 {
    let (a, b) = (Vec3::from(w), Vec3::from(w_prime));
    if a == b {
        return 0.0;
    }
    const PANELS: usize = 16;
    const N_PHI: usize = 128;
    let gl = gauss_legendre(32);
    let mut total = 0.0;
    for p in 0..PANELS {
        let lo = -1.0 + 2.0 * p as f64 / PANELS as f64;
        for (c, wc) in gl.mapped(lo, lo + 2.0 / PANELS as f64) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            let mut ring = 0.0;
            for j in 0..N_PHI {
                let phi = 2.0 * PI * j as f64 / N_PHI as f64;
                let k = Vec3::new(s * phi.cos(), s * phi.sin(), c);
                let u = a / (1.0 - k.dot(&a)) - b / (1.0 - k.dot(&b));
                ring += (u - k * k.dot(&u)).norm_squared();
            }
            total += wc * ring * 2.0 * PI / N_PHI as f64;
        }
    }
    total
}

/// `∫_{σ_lo ≤ |k| ≤ κ} |v(k)|² d³k` by quadrature.
pub fn shell_norm_squared(params: &DressingParams, sigma_lo: f64, q: &QuadratureSpec) -> Result<PairingResult> {
    params.validate()?;
    if !(sigma_lo > 0.0 && sigma_lo < params.uv_cutoff) {
        return Err(invalid(format!("shell bounds need 0 < σ_lo < κ, got σ_lo = {sigma_lo}")));
    }
    let v = Profile::new(params, ProfileKind::VLimit)?;
    Ok(shell_pairings(&[&v], &[(0, 0)], sigma_lo, Some(params.uv_cutoff), q)?[0])
}

/// The same shell norm from the exact radial factorization.
pub fn shell_norm_closed_form(params: &DressingParams, sigma_lo: f64) -> f64 {
    params.coupling * velocity_angular_factor(params.w().norm()) * (params.uv_cutoff / sigma_lo).ln()
}

/// `∫_{σ_lo ≤ |k| ≤ κ} |v_w(k) - v_{w'}(k)|² d³k`.
pub fn pairwise_shell_norm(
    params: &DressingParams,
    w: [f64; 3],
    w_prime: [f64; 3],
    sigma_lo: f64,
    q: &QuadratureSpec,
) -> Result<PairingResult> {
    if !(sigma_lo > 0.0 && sigma_lo < params.uv_cutoff) {
        return Err(invalid(format!("shell bounds need 0 < σ_lo < κ, got σ_lo = {sigma_lo}")));
    }
    let a: WaveFn = Arc::new(Profile::new(&params.with_velocity(w), ProfileKind::VLimit)?);
    let b: WaveFn = Arc::new(Profile::new(&params.with_velocity(w_prime), ProfileKind::VLimit)?);
    let d = Combination::difference(a, b);
    Ok(shell_pairings(&[&d], &[(0, 0)], sigma_lo, Some(params.uv_cutoff), q)?[0])
}

/// Least-squares slope of the pairwise shell norm against `ln(1/σ_lo)`.
pub fn pairwise_divergence_slope(
    params: &DressingParams,
    w: [f64; 3],
    w_prime: [f64; 3],
    sigma_list: &[f64],
    q: &QuadratureSpec,
) -> Result<f64> {
    if sigma_list.len() < 2 {
        return Err(invalid("slope fit needs at least two σ_lo values"));
    }
    let mut x = Vec::with_capacity(sigma_list.len());
    let mut y = Vec::with_capacity(sigma_list.len());
    for &s in sigma_list {
        x.push((1.0 / s).ln());
        y.push(pairwise_shell_norm(params, w, w_prime, s, q)?.value.re);
    }
    Ok(linear_fit(&x, &y).0)
}

/// `∫_{|k| ≥ σ_probe} |v(k) - v̂(k)|² d³k`.
pub fn difference_norm_squared(params: &DressingParams, sigma_probe: f64, q: &QuadratureSpec) -> Result<PairingResult> {
    if !(sigma_probe > 0.0) {
        return Err(invalid("σ_probe must be positive"));
    }
    let d = Profile::new(params, ProfileKind::LimitMinusHat)?;
    Ok(shell_pairings(&[&d], &[(0, 0)], sigma_probe, None, q)?[0])
}
