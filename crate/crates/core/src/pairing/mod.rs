//! Momentum-space quadrature for pairings `⟨v, f⟩ = ∫ d³k v(k)*·f(k)` of
//! possibly singular, possibly oscillatory wave functions, and the study
//! drivers built on it.
//!
//! The radial variable uses a geometric panel mesh graded towards `k = 0`
//! with Gauss-Legendre panels; panels are split so that every wavelength
//! of the combined radial phase carries at least `nodes_per_wavelength`
//! nodes. The angular rule is Gauss-Legendre in `cos θ` times a uniform,
//! half-offset rule in `φ`, with node counts growing with `|k|` when the
//! integrand's phase varies with direction. No node ever sits on the
//! polar axis.

mod axial;
mod studies;

pub use axial::{axial_pairings, AxialField};

pub use studies::{
    huyghens_defect, huyghens_defects, lemma1_phase, pairing_defects, limit_t_study, pairing_defect, DefectResult, LimitRow, PhaseResult, ProbeKind,
};

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot_conj, CVec3, Vec3};
use crate::photon::{Oscillation, PhotonWaveFunction};
use crate::quad::gauss_legendre;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Inner radius of the radial mesh.
    pub r_min: f64,
    /// Outer radius; taken from the wave functions' truncation radii when absent.
    pub r_max: Option<f64>,
    pub panels_per_decade: usize,
    /// Gauss-Legendre points per radial panel.
    pub radial_order: usize,
    /// Base number of `cos θ` nodes.
    pub n_theta: usize,
    /// Base number of `φ` nodes.
    pub n_phi: usize,
    pub oscillation_aware: bool,
    pub nodes_per_wavelength: f64,
    pub abs_tol: f64,
    /// Relative to the absolute scale `∫ |v*·f|`.
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            r_min: 1e-8,
            r_max: None,
            panels_per_decade: 4,
            radial_order: 16,
            n_theta: 24,
            n_phi: 16,
            oscillation_aware: true,
            nodes_per_wavelength: 6.0,
            abs_tol: 1e-12,
            rel_tol: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0) {
            return Err(invalid("quadrature r_min must be positive"));
        }
        if let Some(r) = self.r_max {
            if !(r > self.r_min) {
                return Err(invalid("quadrature r_max must exceed r_min"));
            }
        }
        if self.panels_per_decade == 0 || self.radial_order < 2 || self.n_theta < 2 || self.n_phi < 1 {
            return Err(invalid("quadrature node counts too small"));
        }
        if self.oscillation_aware && self.nodes_per_wavelength < 6.0 {
            return Err(invalid("nodes_per_wavelength must be at least 6 for oscillation-aware rules"));
        }
        if !(self.abs_tol >= 0.0) || !(self.rel_tol >= 0.0) {
            return Err(invalid("quadrature tolerances must be non-negative"));
        }
        Ok(())
    }

    /// Doubles the radial panel count and the angular node counts.
    pub fn refined(&self) -> Self {
        Self {
            panels_per_decade: self.panels_per_decade * 2,
            n_theta: self.n_theta * 2,
            n_phi: self.n_phi * 2,
            nodes_per_wavelength: self.nodes_per_wavelength * 2.0,
            ..self.clone()
        }
    }

    /// Lower-resolution companion rule used for the error estimate.
    fn coarsened(&self) -> Self {
        Self {
            radial_order: (self.radial_order * 2 / 3).max(4),
            n_theta: (self.n_theta * 2 / 3).max(4),
            n_phi: (self.n_phi * 2 / 3).max(2),
            nodes_per_wavelength: self.nodes_per_wavelength * 2.0 / 3.0,
            ..self.clone()
        }
    }

    pub fn with_r_min(&self, r_min: f64) -> Self {
        Self { r_min, ..self.clone() }
    }

    pub fn with_r_max(&self, r_max: f64) -> Self {
        Self { r_max: Some(r_max), ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    pub value: Complex64,
    pub error_estimate: f64,
    /// `∫ |v(k)*·f(k)| d³k`, the scale against which cancellations are judged.
    pub scale: f64,
    pub node_count: usize,
}

/// Panels of the graded radial mesh, split so that each spans at most
/// `radial_order / nodes_per_wavelength` wavelengths of `radial_rate`.
fn radial_panels(r_lo: f64, r_hi: f64, breakpoints: &[f64], radial_rate: f64, spec: &QuadratureSpec) -> Vec<(f64, f64)> {
    let ratio = 10f64.powf(1.0 / spec.panels_per_decade as f64);
    let mut cuts = vec![r_lo];
    let mut r = r_lo;
    while r * ratio < r_hi {
        r *= ratio;
        cuts.push(r);
    }
    cuts.push(r_hi);
    cuts.extend(breakpoints.iter().copied().filter(|&b| b > r_lo && b < r_hi));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());

    let max_width = max_panel_width(radial_rate, spec);
    let mut panels = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((b - a) / max_width).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for p in 0..pieces {
            let lo = a + h * p as f64;
            let hi = if p + 1 == pieces { b } else { lo + h };
            panels.push((lo, hi));
        }
    }
    panels
}

fn max_panel_width(rate: f64, spec: &QuadratureSpec) -> f64 {
    if spec.oscillation_aware && rate > 0.0 {
        spec.radial_order as f64 * (2.0 * PI / rate) / spec.nodes_per_wavelength
    } else {
        f64::INFINITY
    }
}

/// Radial Gauss-Legendre nodes `(r, w)` on a graded panel mesh.
fn radial_nodes(r_lo: f64, r_hi: f64, breakpoints: &[f64], radial_rate: f64, spec: &QuadratureSpec) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(spec.radial_order);
    radial_panels(r_lo, r_hi, breakpoints, radial_rate, spec)
        .into_iter()
        .flat_map(|(lo, hi)| rule.mapped(lo, hi).collect::<Vec<_>>())
        .collect()
}

fn round_up(n: usize, m: usize) -> usize {
    n.div_ceil(m) * m
}

/// Angular node counts `(n_θ, n_φ)` on the shell of radius `r`.
fn angular_counts(r: f64, osc: &Oscillation, spec: &QuadratureSpec) -> (usize, usize) {
    if !spec.oscillation_aware {
        return (spec.n_theta, spec.n_phi);
    }
    // Gauss-Legendre in cos θ needs about a/2 nodes for e^{iac}, and the
    // periodic trapezoid rule about b nodes for e^{ib cos φ}; at the minimum
    // of 6 nodes per wavelength both counts carry a 1.5x margin.
    let polar = spec.nodes_per_wavelength * osc.polar * r / 8.0;
    let azimuthal = spec.nodes_per_wavelength * osc.azimuthal * r / 4.0;
    let nt = round_up(spec.n_theta + polar.ceil() as usize, 4);
    let np = if osc.azimuthal > 0.0 {
        round_up(spec.n_phi + azimuthal.ceil() as usize, 4)
    } else {
        spec.n_phi
    };
    (nt, np)
}

fn phi_table(n: usize) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&n) {
        return t.clone();
    }
    let table: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let phi = 2.0 * PI * (j as f64 + 0.5) / n as f64;
            (phi.cos(), phi.sin())
        })
        .collect();
    let table = Arc::new(table);
    cache.lock().unwrap().entry(n).or_insert(table).clone()
}

/// Visits every node `(k̂, r, weight)` of the product rule over the shell
/// region `r_lo ≤ |k| ≤ r_hi`; the weight includes the `r²` Jacobian.
/// The visitor receives each radius first so radius-only work can be hoisted.
pub(crate) struct BallRule {
    radial: Vec<(f64, f64)>,
    osc: Oscillation,
    spec: QuadratureSpec,
}

impl BallRule {
    pub(crate) fn new(r_lo: f64, r_hi: f64, breakpoints: &[f64], osc: Oscillation, spec: &QuadratureSpec) -> Self {
        let radial = radial_nodes(r_lo, r_hi, breakpoints, osc.radial, spec);
        Self { radial, osc, spec: spec.clone() }
    }

    /// Calls `shell(r)` for each radial node; the returned closure is then
    /// called for each direction with its angular weight (which sums to 4π).
    /// Returns the number of nodes visited.
    pub(crate) fn visit<S>(&self, mut shell: S) -> usize
    where
        S: FnMut(f64, f64, &mut dyn FnMut(&mut dyn FnMut(&Vec3, f64))),
    {
        let mut count = 0;
        for &(r, wr) in &self.radial {
            let (nt, np) = angular_counts(r, &self.osc, &self.spec);
            let gl = gauss_legendre(nt);
            let phis = phi_table(np);
            let wphi = 2.0 * PI / np as f64;
            let mut directions = |sink: &mut dyn FnMut(&Vec3, f64)| {
                for (&c, &wc) in gl.nodes.iter().zip(&gl.weights) {
                    let s = (1.0 - c * c).sqrt();
                    for &(cp, sp) in phis.iter() {
                        sink(&Vec3::new(s * cp, s * sp, c), wc * wphi);
                    }
                }
            };
            shell(r, wr * r * r, &mut directions);
            count += nt * np;
        }
        count
    }
}

/// Pairings `⟨f_i, f_j⟩` for the requested index pairs, all computed on
/// one node set; each function is evaluated once per node.
/// Returns `(value, scale)` per pair and the node count.
pub(crate) fn pairings_on_rule(
    functions: &[&dyn PhotonWaveFunction],
    pairs: &[(usize, usize)],
    rule: &BallRule,
) -> (Vec<(Complex64, f64)>, usize) {
    let mut totals = vec![(Complex64::default(), 0.0); pairs.len()];
    let mut values = vec![CVec3::zeros(); functions.len()];
    let count = rule.visit(|r, wr, directions| {
        let shells: Vec<_> = functions.iter().map(|f| f.shell(r)).collect();
        let mut shell_sums = vec![(Complex64::default(), 0.0); pairs.len()];
        directions(&mut |dir, w| {
            for (v, s) in values.iter_mut().zip(&shells) {
                *v = s(dir);
            }
            for (acc, &(i, j)) in shell_sums.iter_mut().zip(pairs) {
                let p = dot_conj(&values[i], &values[j]);
                acc.0 += p * w;
                acc.1 += p.norm() * w;
            }
        });
        for (t, s) in totals.iter_mut().zip(&shell_sums) {
            t.0 += s.0 * wr;
            t.1 += s.1 * wr;
        }
    });
    (totals, count)
}

/// Region and rule parameters shared by a family of pairings.
fn plan(
    functions: &[&dyn PhotonWaveFunction],
    pairs: &[(usize, usize)],
    r_lo: f64,
    r_hi: Option<f64>,
) -> (f64, Vec<f64>, Oscillation) {
    let mut hi: f64 = 0.0;
    let mut osc = Oscillation::default();
    for &(i, j) in pairs {
        hi = hi.max(functions[i].truncation_radius().min(functions[j].truncation_radius()));
        osc = osc.max(&functions[i].oscillation().combine(&functions[j].oscillation()));
    }
    let hi = r_hi.unwrap_or(hi).max(r_lo * 10.0);
    let mut bps: Vec<f64> = functions.iter().flat_map(|f| f.breakpoints()).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    (hi, bps, osc)
}

pub(crate) fn check_integrable(functions: &[&dyn PhotonWaveFunction], pairs: &[(usize, usize)]) -> Result<()> {
    for &(i, j) in pairs {
        let exponent = functions[i].small_k_exponent() + functions[j].small_k_exponent();
        if exponent <= -3.0 {
            return Err(Error::NonIntegrablePairing { exponent });
        }
    }
    Ok(())
}

/// Several pairings at once with two-level error estimates.
pub fn pair_many(
    functions: &[&dyn PhotonWaveFunction],
    pairs: &[(usize, usize)],
    q: &QuadratureSpec,
) -> Result<Vec<PairingResult>> {
    q.validate()?;
    check_integrable(functions, pairs)?;
    shell_pairings(functions, pairs, q.r_min, q.r_max, q)
}

/// Pairings restricted to `r_lo ≤ |k| ≤ r_hi`, without the integrability
/// check (the region excludes the origin).
pub fn shell_pairings(
    functions: &[&dyn PhotonWaveFunction],
    pairs: &[(usize, usize)],
    r_lo: f64,
    r_hi: Option<f64>,
    q: &QuadratureSpec,
) -> Result<Vec<PairingResult>> {
    pairings_on_common_rule(functions, pairs, pairs, r_lo, r_hi, q)
}

/// Evaluates `eval_pairs` on the rule sized for `plan_pairs ∪ eval_pairs`,
/// so that results from separate calls with the same plan share nodes.
pub fn pairings_on_common_rule(
    functions: &[&dyn PhotonWaveFunction],
    plan_pairs: &[(usize, usize)],
    eval_pairs: &[(usize, usize)],
    r_lo: f64,
    r_hi: Option<f64>,
    q: &QuadratureSpec,
) -> Result<Vec<PairingResult>> {
    q.validate()?;
    let all: Vec<(usize, usize)> = plan_pairs.iter().chain(eval_pairs).copied().collect();
    let (hi, bps, osc) = plan(functions, &all, r_lo, r_hi);
    if !(hi > r_lo) {
        return Err(invalid(format!("empty shell [{r_lo}, {hi}]")));
    }
    let fine = BallRule::new(r_lo, hi, &bps, osc, q);
    let (fine_vals, count) = pairings_on_rule(functions, eval_pairs, &fine);
    let coarse = BallRule::new(r_lo, hi, &bps, osc, &q.coarsened());
    let (coarse_vals, _) = pairings_on_rule(functions, eval_pairs, &coarse);
    Ok(fine_vals
        .iter()
        .zip(&coarse_vals)
        .map(|(f, c)| PairingResult {
            value: f.0,
            error_estimate: (f.0 - c.0).norm(),
            scale: f.1,
            node_count: count,
        })
        .collect())
}

/// `⟨v, f⟩` with first-slot conjugation.
pub fn pair(v: &dyn PhotonWaveFunction, f: &dyn PhotonWaveFunction, q: &QuadratureSpec) -> Result<PairingResult> {
    let result = pair_many(&[v, f], &[(0, 1)], q)?[0];
    let target = q.abs_tol.max(q.rel_tol * result.scale);
    if result.error_estimate > target {
        return Err(Error::ToleranceNotMet { value: result.value, estimate: result.error_estimate, target });
    }
    Ok(result)
}

/// Fitted slope and intercept of `y` against `x` by least squares.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point4;
    use crate::linalg::complexify;
    use crate::testfields::{photon_wavefunction, Channel, TestFieldPair};

    /// `e^{-|k|²} P_tr(a)` with a fixed real `a`: `∫ |f|² = |a|² (2/3) 4π ∫ k² e^{-2k²} dk`.
    struct Gaussian(Vec3, f64);
    impl PhotonWaveFunction for Gaussian {
        fn shell(&self, radius: f64) -> Box<dyn Fn(&Vec3) -> CVec3 + '_> {
            let g = (-radius * radius).exp() * radius.powf(self.1);
            Box::new(move |dir: &Vec3| complexify(&(self.0 - dir * dir.dot(&self.0))) * Complex64::new(g, 0.0))
        }
        fn small_k_exponent(&self) -> f64 {
            self.1
        }
        fn truncation_radius(&self) -> f64 {
            8.0
        }
    }

    #[test]
    fn gaussian_norm_matches_closed_form() {
        let a = Vec3::new(0.3, -1.2, 0.5);
        let f = Gaussian(a, 0.0);
        let r = pair(&f, &f, &QuadratureSpec::default()).unwrap();
        // ∫ k² e^{-2k²} dk = √(π/2)/8 ; angular average of |P_tr a|² is (2/3)|a|²
        let exact = a.norm_squared() * (2.0 / 3.0) * 4.0 * PI * (PI / 2.0).sqrt() / 8.0;
        assert!((r.value.re - exact).abs() < 1e-11 * exact, "{} vs {exact}", r.value.re);
        assert_eq!(r.value.im, 0.0);
        assert!(r.error_estimate < 1e-9 * exact);
    }

    #[test]
    fn singular_weight_is_integrable_when_exponents_allow() {
        // |k|^{-1.4} · |k|^{-1.4} · k²: integrable, ∫ k^{-0.8} e^{-2k²} dk = Γ(0.1)/(2·2^{0.1})
        let a = Vec3::new(0.0, 1.0, 0.0);
        let f = Gaussian(a, -1.4);
        let q = QuadratureSpec { r_min: 1e-14, ..Default::default() };
        let r = pair_many(&[&f, &f], &[(0, 1)], &q).unwrap()[0];
        let gamma_01 = 9.513507698668731836;
        let exact = (2.0 / 3.0) * 4.0 * PI * gamma_01 / (2.0 * 2f64.powf(0.1));
        // the truncated region (0, 1e-14) contributes ~(1e-14)^{0.2}/0.2 relative
        assert!((r.value.re - exact).abs() < 3e-2 * exact, "{} vs {exact}", r.value.re);
        let f = Gaussian(a, -1.5);
        assert!(matches!(pair(&f, &f, &q), Err(Error::NonIntegrablePairing { .. })));
    }

    #[test]
    fn pairing_is_sesquilinear_and_hermitian() {
        let f = photon_wavefunction(
            &TestFieldPair::single(Channel::Electric, [0.1, 0.9, 0.2], Point4::new(0.3, [0.2, 0.0, -0.1]), 0.4, 0.5, 1.0).unwrap(),
        );
        let g = photon_wavefunction(
            &TestFieldPair::single(Channel::Magnetic, [0.5, -0.3, 0.8], Point4::new(-0.2, [0.0, 0.3, 0.1]), 0.5, 0.4, 1.0).unwrap(),
        );
        let q = QuadratureSpec::default();
        let fg = pair(&f, &g, &q).unwrap().value;
        let gf = pair(&g, &f, &q).unwrap().value;
        assert!((fg - gf.conj()).norm() < 1e-12 * fg.norm());
        let ff = pair(&f, &f, &q).unwrap();
        assert!(ff.value.re > 0.0 && ff.value.im == 0.0);
        let ig = crate::photon::Combination::new(vec![(Complex64::new(0.0, 1.0), Arc::new(g) as crate::photon::WaveFn)]);
        let fig = pair(&f, &ig, &q).unwrap().value;
        assert!((fig - fg * Complex64::new(0.0, 1.0)).norm() < 1e-12 * fg.norm());
    }

    #[test]
    fn refinement_changes_less_than_error_estimate() {
        let f = photon_wavefunction(
            &TestFieldPair::single(Channel::Electric, [0.0, 1.0, 0.0], Point4::new(0.0, [1.5, 0.0, 0.0]), 0.5, 0.5, 1.0).unwrap(),
        );
        let g = photon_wavefunction(
            &TestFieldPair::single(Channel::Magnetic, [0.0, 0.0, 1.0], Point4::new(0.5, [-1.0, 0.0, 0.0]), 0.5, 0.5, 1.0).unwrap(),
        );
        let q = QuadratureSpec::default();
        let base = pair_many(&[&f, &g], &[(0, 1)], &q).unwrap()[0];
        let fine = pair_many(&[&f, &g], &[(0, 1)], &q.refined()).unwrap()[0];
        assert!((fine.value - base.value).norm() <= base.error_estimate.max(1e-14 * base.scale));
    }

    #[test]
    fn nodes_avoid_the_axis() {
        let rule = BallRule::new(0.1, 10.0, &[], Oscillation { radial: 3.0, polar: 2.0, azimuthal: 1.0 }, &QuadratureSpec::default());
        let mut min_rho = f64::INFINITY;
        let mut wsum = 0.0;
        rule.visit(|r, _, dirs| {
            if r < 0.2 {
                dirs(&mut |d, w| {
                    min_rho = min_rho.min(d[0].hypot(d[1]));
                    wsum += w;
                });
            } else {
                dirs(&mut |d, _| min_rho = min_rho.min(d[0].hypot(d[1])));
            }
        });
        assert!(min_rho > 1e-4);
        assert!(wsum > 0.0);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, c) = linear_fit(&x, &y);
        assert!((s - 2.5).abs() < 1e-14 && (c + 1.0).abs() < 1e-14);
    }
}
