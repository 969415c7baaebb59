//! Radial solutions of the wave equation with smooth initial velocity,
//! the conserved symplectic pairing between two of them, the support of
//! the cosine-smeared magnetic transform, and the localization radius of
//! the finite-time dressing approximant.
//!
//! All solutions here are spherically symmetric about a common center, so
//! spatial integrals reduce to `4π ∫ ρ² dρ` on a uniform radial grid.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{causally_separated, CausalRelation, DoubleCone, Point4};
use crate::linalg::Vec3;
use crate::pairing::{pairing_defect, DefectResult, ProbeKind, QuadratureSpec};
use crate::profiles::DressingParams;
use crate::quad::gauss_legendre;
use crate::testfields::{fourier_transform_1d, radial_bump_transform, unit_bump, Channel, SpatialProfile, TestFieldPair};

/// Spectral cutoff in units of the inverse bump radius.
const SPECTRAL_CUTOFF: f64 = 400.0;
const PANEL_ORDER: usize = 24;

/// Gauss-Legendre nodes on `[0, k_max]` fine enough for phases
/// `e^{±ik s}` with `|s| ≤ rate`.
fn spectral_nodes(k_max: f64, rate: f64) -> Vec<(f64, f64)> {
    let width = (PANEL_ORDER as f64 * PI / (4.0 * rate.max(1e-3))).min(k_max / 8.0);
    let panels = (k_max / width).ceil() as usize;
    let h = k_max / panels as f64;
    let rule = gauss_legendre(PANEL_ORDER);
    (0..panels).flat_map(|p| rule.mapped(p as f64 * h, (p + 1) as f64 * h).collect::<Vec<_>>()).collect()
}

/// `sin(kρ)/ρ`, continuous at `ρ = 0`.
fn sin_over(k: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        k
    } else {
        (k * rho).sin() / rho
    }
}

/// `g(t, x) = (2π)^{-3/2} ∫ e^{ik·x} sin(|k|(t + t₀))/|k| f̃(k) d³k` for the
/// radial bump `f(x) = A b(|x|/r)` centered at the origin.
#[derive(Clone, Debug)]
pub struct WaveSolution {
    radius: f64,
    amplitude: f64,
    time_offset: f64,
    /// `(k, w, f̃(k))`.
    spectrum: Arc<Vec<(f64, f64, f64)>>,
    reach: f64,
}

impl WaveSolution {
    /// `reach` bounds `|t + t₀| + ρ` over all later evaluations.
    pub fn new(radius: f64, amplitude: f64, time_offset: f64, reach: f64) -> Result<Self> {
        if !(radius > 0.0) || !amplitude.is_finite() || !time_offset.is_finite() || !(reach > 0.0) {
            return Err(invalid("wave solution needs positive radius and reach, finite amplitude and offset"));
        }
        let nodes = spectral_nodes(SPECTRAL_CUTOFF / radius, reach);
        let spectrum = nodes.into_iter().map(|(k, w)| (k, w, radial_bump_transform(radius, amplitude, k))).collect();
        Ok(Self { radius, amplitude, time_offset, spectrum: Arc::new(spectrum), reach })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn time_offset(&self) -> f64 {
        self.time_offset
    }

    /// Initial velocity profile `f(ρ)`.
    pub fn initial_velocity(&self, rho: f64) -> f64 {
        self.amplitude * unit_bump(rho / self.radius)
    }

    fn check_reach(&self, t: f64, rho: f64) {
        debug_assert!((t + self.time_offset).abs() + rho <= self.reach * (1.0 + 1e-9), "evaluation beyond resolved reach");
    }

    /// `g(t, ρ)`.
    pub fn value(&self, t: f64, rho: f64) -> f64 {
        self.check_reach(t, rho);
        let tt = t + self.time_offset;
        let s: f64 = self.spectrum.iter().map(|&(k, w, f)| w * f * (k * tt).sin() * sin_over(k, rho)).sum();
        (2.0 / PI).sqrt() * s
    }

    /// `∂_t g(t, ρ)`.
    pub fn time_derivative(&self, t: f64, rho: f64) -> f64 {
        self.check_reach(t, rho);
        let tt = t + self.time_offset;
        let s: f64 = self.spectrum.iter().map(|&(k, w, f)| w * f * k * (k * tt).cos() * sin_over(k, rho)).sum();
        (2.0 / PI).sqrt() * s
    }
}

impl WaveSolution {
    /// `(g(t, ρᵢ), ∂_t g(t, ρᵢ))` at every grid point.
    fn sample_grid(&self, grid: &GridSpec, t: f64) -> (Vec<f64>, Vec<f64>) {
        const ANCHOR: usize = 64;
        let pts = grid.points();
        let h = grid.spacing;
        let tt = t + self.time_offset;
        let mut value = vec![0.0; pts.len()];
        let mut rate = vec![0.0; pts.len()];
        for &(k, w, f) in self.spectrum.iter() {
            let (st, ct) = (k * tt).sin_cos();
            let (c1, c2) = (w * f * st, w * f * k * ct);
            let (step_s, step_c) = (k * h).sin_cos();
            let (mut s, mut c) = (0.0, 1.0);
            for (i, (v, d)) in value.iter_mut().zip(rate.iter_mut()).enumerate() {
                if i % ANCHOR == 0 {
                    (s, c) = (k * pts[i]).sin_cos();
                }
                let sk = if i == 0 { k } else { s };
                *v += c1 * sk;
                *d += c2 * sk;
                (s, c) = (s * step_c + c * step_s, c * step_c - s * step_s);
            }
        }
        let norm = (2.0 / PI).sqrt();
        for (i, (v, d)) in value.iter_mut().zip(rate.iter_mut()).enumerate() {
            let inv = if i == 0 { 1.0 } else { 1.0 / pts[i] };
            *v *= norm * inv;
            *d *= norm * inv;
        }
        (value, rate)
    }
}

pub fn wave_evaluate(ws: &WaveSolution, t: f64, x: &Vec3) -> f64 {
    ws.value(t, x.norm())
}

/// Uniform radial grid `ρᵢ = i h`, `0 ≤ ρᵢ ≤ L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub extent: f64,
    pub spacing: f64,
}

impl GridSpec {
    /// `L = 4(r + t_max)`, `h = r/32`.
    pub fn default_for(radius: f64, t_max: f64) -> Self {
        Self { extent: 4.0 * (radius + t_max), spacing: radius / 32.0 }
    }

    pub fn halved(&self) -> Self {
        Self { spacing: self.spacing / 2.0, ..*self }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = (self.extent / self.spacing).round() as usize;
        (0..=n).map(|i| i as f64 * self.spacing).collect()
    }

    /// Trapezoid weights for `4π ∫ ρ² dρ`.
    fn weights(&self) -> Vec<f64> {
        let pts = self.points();
        let last = pts.len() - 1;
        pts.iter()
            .enumerate()
            .map(|(i, r)| {
                let half = if i == 0 || i == last { 0.5 } else { 1.0 };
                4.0 * PI * r * r * self.spacing * half
            })
            .collect()
    }

    fn check_resolves(&self, ws: &WaveSolution) -> Result<()> {
        self.check_spacing(ws)
    }

    fn check_reach(&self, ws: &WaveSolution, t: f64) -> Result<()> {
        let needed = (t + ws.time_offset).abs() + self.extent;
        if needed > ws.reach * (1.0 + 1e-9) {
            return Err(Error::Resolution(format!(
                "grid of extent {} at t = {t} needs reach {needed}, solution resolves {}",
                self.extent, ws.reach
            )));
        }
        Ok(())
    }

    fn check_spacing(&self, ws: &WaveSolution) -> Result<()> {
        if 2.0 * ws.radius / self.spacing < 16.0 - 1e-9 {
            return Err(Error::Resolution(format!(
                "spacing {} gives fewer than 16 points across a bump of radius {}",
                self.spacing, ws.radius
            )));
        }
        Ok(())
    }
}

/// Samples of a radial field on a grid at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub time: f64,
}

impl GridField {
    pub fn sample(ws: &WaveSolution, grid: &GridSpec, t: f64) -> Result<Self> {
        grid.check_resolves(ws)?;
        grid.check_reach(ws, t)?;
        Ok(Self { grid: *grid, values: ws.sample_grid(grid, t).0, time: t })
    }

    /// `∫ |g| d³x` over `ρ > rho_min` divided by the total.
    pub fn outside_fraction(&self, rho_min: f64) -> f64 {
        let w = self.grid.weights();
        let pts = self.grid.points();
        let mut total = 0.0;
        let mut outside = 0.0;
        for ((v, w), r) in self.values.iter().zip(&w).zip(&pts) {
            total += v.abs() * w;
            if *r > rho_min {
                outside += v.abs() * w;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }
}

/// `∫ |g(t)| d³x` outside the ball of radius `r + |t + t₀|`, relative to the total.
pub fn outside_mass_fraction(ws: &WaveSolution, grid: &GridSpec, t: f64) -> Result<f64> {
    let field = GridField::sample(ws, grid, t)?;
    Ok(field.outside_fraction(ws.radius + (t + ws.time_offset).abs() + grid.spacing))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticReport {
    pub times: Vec<f64>,
    /// `S(t) = ∫ (g₁ ∂_t g₂ - ∂_t g₁ g₂) d³x`.
    pub values: Vec<f64>,
    /// `max_t |S(t) - S(t₀)|` with `t₀` the first listed time.
    pub max_drift: f64,
    pub relative_drift: f64,
    /// `∫ α(τ) S(τ) dτ` for a unit-mass bump `α` of halfwidth 0.1.
    pub smeared: f64,
}

/// Halfwidth of the smearing function in time.
pub const SMEARING_HALFWIDTH: f64 = 0.1;

fn grid_symplectic(ws1: &WaveSolution, ws2: &WaveSolution, grid: &GridSpec, w: &[f64], t: f64) -> f64 {
    let (g1, d1) = ws1.sample_grid(grid, t);
    let (g2, d2) = ws2.sample_grid(grid, t);
    (0..w.len()).map(|i| w[i] * (g1[i] * d2[i] - d1[i] * g2[i])).sum()
}

pub fn symplectic_time_invariance(
    ws1: &WaveSolution,
    ws2: &WaveSolution,
    t_list: &[f64],
    grid: &GridSpec,
) -> Result<SymplecticReport> {
    if t_list.is_empty() {
        return Err(invalid("time list must not be empty"));
    }
    grid.check_resolves(ws1)?;
    grid.check_resolves(ws2)?;
    let t_abs = t_list.iter().fold(SMEARING_HALFWIDTH, |a, t| a.max(t.abs() + SMEARING_HALFWIDTH));
    for ws in [ws1, ws2] {
        let support = ws.radius + t_abs + ws.time_offset.abs();
        if support > grid.extent {
            return Err(Error::Resolution(format!("grid extent {} below solution support {support}", grid.extent)));
        }
    }
    for ws in [ws1, ws2] {
        for &t in t_list.iter().chain(&[-SMEARING_HALFWIDTH, SMEARING_HALFWIDTH]) {
            grid.check_reach(ws, t)?;
        }
    }
    let w = grid.weights();
    let values: Vec<f64> = t_list.iter().map(|&t| grid_symplectic(ws1, ws2, grid, &w, t)).collect();
    let max_drift = values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max);
    let relative_drift = if values[0] == 0.0 {
        if max_drift == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        max_drift / values[0].abs()
    };
    let gl = gauss_legendre(24);
    let mut norm = 0.0;
    let mut smeared = 0.0;
    for (tau, wt) in gl.mapped(-SMEARING_HALFWIDTH, SMEARING_HALFWIDTH) {
        let a = unit_bump(tau / SMEARING_HALFWIDTH);
        norm += wt * a;
        smeared += wt * a * grid_symplectic(ws1, ws2, grid, &w, tau);
    }
    Ok(SymplecticReport { times: t_list.to_vec(), values, max_drift, relative_drift, smeared: smeared / norm })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub probe_radius: f64,
    /// `∫_{|y-c| > R} |h| d³y / ∫ |h| d³y`.
    pub outside_fraction: f64,
    pub total_mass: f64,
}

/// Mass fraction outside the probe ball of the inverse Fourier transform of
/// `(f̃_b(|k|,k) + conj f̃_b(|k|,-k))/2 = (2π)^{-2} ∫ f_b(t,x) e^{-ik·x} cos(|k|t)`.
///
/// Requires a support double cone at time 0 and magnetic terms sharing one
/// spatial center with radial spatial profiles; the transform is then
/// radial about that center.
pub fn bj_support_check(f_b: &TestFieldPair, probe_radius: f64) -> Result<SupportReport> {
    if f_b.support().center.t != 0.0 {
        return Err(Error::SupportPrecondition("support double cone must be centered at time 0".into()));
    }
    if !(probe_radius > 0.0) {
        return Err(invalid("probe radius must be positive"));
    }
    let center = f_b.support().center.spatial();
    let mut terms = Vec::new();
    for t in f_b.terms() {
        if t.channel != Channel::Magnetic {
            continue;
        }
        match t.space {
            SpatialProfile::Radial { center: c, radius, amplitude } if (Vec3::from(c) - center).norm() == 0.0 => {
                terms.push((t.time, radius, amplitude, Vec3::from(t.direction)));
            }
            _ => {
                return Err(Error::SupportPrecondition(
                    "magnetic terms must be radial bumps centered at the support center".into(),
                ))
            }
        }
    }
    if terms.is_empty() {
        return Err(Error::SupportPrecondition("no magnetic terms".into()));
    }
    let r = f_b.support().radius;
    let width = terms.iter().map(|(a, rad, _, _)| a.halfwidth.max(*rad)).fold(f64::INFINITY, f64::min);
    let extent = 3.0 * r.max(probe_radius);
    let grid = GridSpec { extent, spacing: r / 200.0 };
    let nodes = spectral_nodes(SPECTRAL_CUTOFF / width, extent);
    // per term: k-space weights Re ã(k) B(k) k² w
    let weighted: Vec<Vec<f64>> = terms
        .iter()
        .map(|(a, rad, amp, _)| {
            nodes
                .iter()
                .map(|&(k, w)| w * k * fourier_transform_1d(a, k).re * radial_bump_transform(*rad, *amp, k))
                .collect()
        })
        .collect();
    let pts = grid.points();
    let wts = grid.weights();
    let mut total = 0.0;
    let mut outside = 0.0;
    for (rho, wr) in pts.iter().zip(&wts) {
        let mut h = Vec3::zeros();
        for ((_, _, _, n), wk) in terms.iter().zip(&weighted) {
            let radial: f64 = nodes.iter().zip(wk).map(|(&(k, _), c)| c * sin_over(k, *rho)).sum();
            h += n * (4.0 * PI * radial);
        }
        let m = h.norm() * wr;
        total += m;
        if *rho > probe_radius {
            outside += m;
        }
    }
    Ok(SupportReport { probe_radius, outside_fraction: if total == 0.0 { 0.0 } else { outside / total }, total_mass: total })
}

/// `|σ(-i v̂_T, f)|` for a probe causally separated from the double cone of
/// radius `u + T` centered at `(-(u + T), 0)`, where the approximant lives.
pub fn lemma_a2_radius_check(
    params: &DressingParams,
    t_horizon: f64,
    f_probe: &TestFieldPair,
    q: &QuadratureSpec,
) -> Result<DefectResult> {
    let reach = params.time_shift + t_horizon;
    let home = DoubleCone::new(Point4::new(-reach, [0.0; 3]), reach)?;
    match causally_separated(&home, f_probe.support()) {
        CausalRelation::Neither => Err(Error::SupportPrecondition(format!(
            "probe support is neither spacelike nor timelike to the double cone of radius {reach} at t = {}",
            -reach
        ))),
        _ => {
            let mut d = pairing_defect(params, f_probe, ProbeKind::VHatT { t: t_horizon }, q)?;
            d.defect = d.defect.abs();
            Ok(d)
        }
    }
}
