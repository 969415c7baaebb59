//! Pairings `⟨v, f⟩` of dressing profiles with arbitrary wave functions,
//! reduced to two dimensions by the symmetry of the profiles about `w`.
//!
//! A profile has the form `s(|k|, k̂·w) P_tr w`, so with `θ` measured from
//! `w`,
//!
//! ```text
//! ⟨v, f⟩ = ∫ r² dr ∫ sin θ dθ s(r, |w| cos θ)* G(r, θ),
//! G(r, θ) = ∫ dφ (P_tr w)·f(k).
//! ```
//!
//! `G` does not depend on the profile. It is tabulated once on
//! Gauss-Legendre panels in `r` and `θ` and then interpolated onto the
//! finer nodes that resolve the phase of `s`, which for the finite-`T`
//! profiles grows like `T|k|` in both variables.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use super::{check_integrable, max_panel_width, radial_panels, round_up, PairingResult, QuadratureSpec};
use crate::error::{invalid, Result};
use crate::linalg::{CVec3, Vec3};
use crate::photon::{Oscillation, PhotonWaveFunction};
use crate::profiles::Profile;
use crate::quad::{gauss_legendre, GaussLegendre};

/// Nodes per wavelength of the `G` table relative to the quadrature
/// target; interpolation needs more than integration.
const TABLE_OVERSAMPLING: f64 = 2.0;

/// Barycentric weights of the Gauss-Legendre nodes of one order.
fn barycentric_weights(rule: &GaussLegendre) -> Vec<f64> {
    let x = &rule.nodes;
    let mut w: Vec<f64> = (0..x.len())
        .map(|j| 1.0 / (0..x.len()).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect();
    let m = w.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    w.iter_mut().for_each(|v| *v /= m);
    w
}

/// Lagrange basis values at `x ∈ [-1, 1]` for the nodes of `rule`.
fn lagrange_row(rule: &GaussLegendre, bary: &[f64], x: f64, out: &mut [f64]) {
    if let Some(j) = rule.nodes.iter().position(|&n| n == x) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[j] = 1.0;
        return;
    }
    let mut den = 0.0;
    for ((o, &n), &b) in out.iter_mut().zip(&rule.nodes).zip(bary) {
        *o = b / (x - n);
        den += *o;
    }
    out.iter_mut().for_each(|v| *v /= den);
}

/// One radial panel of the `G` table.
struct Panel {
    lo: f64,
    hi: f64,
    /// Number of equal `θ` panels on `[0, π]`.
    theta_panels: usize,
    /// `G` at (radial node, θ node), row-major in the radial node.
    g: Vec<Complex64>,
}

struct Table {
    spec: QuadratureSpec,
    rule: Arc<GaussLegendre>,
    bary: Vec<f64>,
    panels: Vec<Panel>,
    f_osc: Oscillation,
    /// Interpolation matrices from one `θ` panel to `s` equal sub-panels.
    theta_maps: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
}

/// Orthonormal `(e₁, e₂)` completing `a` to a right-handed frame.
fn frame(a: &Vec3) -> (Vec3, Vec3) {
    let helper = if a[0].abs() <= a[1].abs() && a[0].abs() <= a[2].abs() {
        Vec3::x()
    } else if a[1].abs() <= a[2].abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let e1 = a.cross(&helper).normalize();
    let e2 = a.cross(&e1);
    (e1, e2)
}

impl Table {
    fn build(
        f: &dyn PhotonWaveFunction,
        w: &Vec3,
        r_lo: f64,
        r_hi: f64,
        breakpoints: &[f64],
        spec: &QuadratureSpec,
    ) -> Self {
        let grid_spec = QuadratureSpec {
            nodes_per_wavelength: spec.nodes_per_wavelength * TABLE_OVERSAMPLING,
            ..spec.clone()
        };
        let rule = gauss_legendre(spec.radial_order);
        let bary = barycentric_weights(&rule);
        let axis = w.normalize();
        let f_osc = f.oscillation_about(&axis);
        let (e1, e2) = frame(&axis);
        let order = rule.len();

        let mut panels = Vec::new();
        for (lo, hi) in radial_panels(r_lo, r_hi, breakpoints, f_osc.radial, &grid_spec) {
            // Phase of f per radian of θ is at most `polar * r`, of φ `azimuthal * r`.
            let theta_nodes = if spec.oscillation_aware {
                (grid_spec.nodes_per_wavelength * f_osc.polar * hi / 2.0).max(spec.n_theta as f64)
            } else {
                spec.n_theta as f64
            };
            let theta_panels = (theta_nodes / order as f64).ceil().max(1.0) as usize;
            let n_phi = if spec.oscillation_aware {
                round_up(spec.n_phi + (spec.nodes_per_wavelength * f_osc.azimuthal * hi / 4.0).ceil() as usize, 4)
            } else {
                spec.n_phi
            };
            let phis: Vec<(f64, f64)> = (0..n_phi)
                .map(|j| {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
                    (phi.cos(), phi.sin())
                })
                .collect();
            let w_phi = 2.0 * PI / n_phi as f64;
            let thetas: Vec<(f64, f64)> = (0..theta_panels)
                .flat_map(|p| {
                    let a = PI * p as f64 / theta_panels as f64;
                    let b = PI * (p + 1) as f64 / theta_panels as f64;
                    rule.mapped(a, b).map(|(t, _)| (t.cos(), t.sin())).collect::<Vec<_>>()
                })
                .collect();

            let mut g = Vec::with_capacity(order * thetas.len());
            for (r, _) in rule.mapped(lo, hi) {
                let eval = f.shell(r);
                for &(ct, st) in &thetas {
                    let mut acc = Complex64::default();
                    for &(cp, sp) in &phis {
                        let dir = axis * ct + (e1 * cp + e2 * sp) * st;
                        let value: CVec3 = eval(&dir);
                        let along_w = w[0] * value[0] + w[1] * value[1] + w[2] * value[2];
                        let along_k = dir[0] * value[0] + dir[1] * value[1] + dir[2] * value[2];
                        acc += along_w - along_k * dir.dot(w);
                    }
                    g.push(acc * w_phi);
                }
            }
            panels.push(Panel { lo, hi, theta_panels, g });
        }
        Self { spec: spec.clone(), rule, bary, panels, f_osc, theta_maps: Mutex::new(HashMap::new()) }
    }

    /// Row-major `(s·order) × order` matrix mapping one `θ` panel's values
    /// to the Gauss-Legendre nodes of its `s` equal sub-panels.
    fn theta_map(&self, s: usize) -> Arc<Vec<f64>> {
        if let Some(m) = self.theta_maps.lock().unwrap().get(&s) {
            return m.clone();
        }
        let order = self.rule.len();
        let mut m = vec![0.0; s * order * order];
        let mut row = 0;
        for p in 0..s {
            let a = -1.0 + 2.0 * p as f64 / s as f64;
            let b = -1.0 + 2.0 * (p + 1) as f64 / s as f64;
            for (x, _) in self.rule.mapped(a, b) {
                lagrange_row(&self.rule, &self.bary, x, &mut m[row * order..(row + 1) * order]);
                row += 1;
            }
        }
        let m = Arc::new(m);
        self.theta_maps.lock().unwrap().entry(s).or_insert(m).clone()
    }

    /// `(Σ s*G, Σ |s*G|)` per profile, and the node count.
    fn integrate(&self, profiles: &[&Profile], speed: f64) -> (Vec<(Complex64, f64)>, usize) {
        let order = self.rule.len();
        let osc = profiles.iter().fold(Oscillation::default(), |o, p| o.max(&p.oscillation()));
        let radial_rate = osc.radial + self.f_osc.radial;
        let max_width = max_panel_width(radial_rate, &self.spec);
        let mut totals = vec![(Complex64::default(), 0.0); profiles.len()];
        let mut count = 0;
        let mut l_r = vec![0.0; order];
        for panel in &self.panels {
            let n_t = panel.theta_panels * order;
            let pieces = ((panel.hi - panel.lo) / max_width).ceil().max(1.0) as usize;
            let h = (panel.hi - panel.lo) / pieces as f64;
            let half = 0.5 * (panel.hi - panel.lo);
            let mid = 0.5 * (panel.hi + panel.lo);
            let mut g_r = vec![Complex64::default(); n_t];
            for piece in 0..pieces {
                let a = panel.lo + h * piece as f64;
                let b = if piece + 1 == pieces { panel.hi } else { a + h };
                for (r, wr) in self.rule.mapped(a, b) {
                    lagrange_row(&self.rule, &self.bary, (r - mid) / half, &mut l_r);
                    g_r.iter_mut().for_each(|v| *v = Complex64::default());
                    for (j, &l) in l_r.iter().enumerate() {
                        if l != 0.0 {
                            for (v, &g) in g_r.iter_mut().zip(&panel.g[j * n_t..(j + 1) * n_t]) {
                                *v += g * l;
                            }
                        }
                    }
                    let shells: Vec<_> = profiles.iter().map(|p| p.axial_shell(r)).collect();
                    let width = PI / panel.theta_panels as f64;
                    let mut sums = vec![(Complex64::default(), 0.0); profiles.len()];
                    for tp in 0..panel.theta_panels {
                        let t0 = width * tp as f64;
                        // Phase of s per radian of θ is `polar * r * sin θ`.
                        let sin_max = if t0 <= PI / 2.0 && t0 + width >= PI / 2.0 {
                            1.0
                        } else {
                            t0.sin().max((t0 + width).sin())
                        };
                        let sub = if self.spec.oscillation_aware && osc.polar > 0.0 {
                            let nodes = self.spec.nodes_per_wavelength * osc.polar * r * sin_max * width / (2.0 * PI);
                            (nodes / order as f64).ceil().max(1.0) as usize
                        } else {
                            1
                        };
                        let map = self.theta_map(sub);
                        let values = &g_r[tp * order..(tp + 1) * order];
                        for sp in 0..sub {
                            let a = t0 + width * sp as f64 / sub as f64;
                            let b = t0 + width * (sp + 1) as f64 / sub as f64;
                            for (i, (theta, wt)) in self.rule.mapped(a, b).enumerate() {
                                let row = &map[(sp * order + i) * order..(sp * order + i + 1) * order];
                                let g: Complex64 = row.iter().zip(values).map(|(l, v)| v * l).sum();
                                let (st, ct) = theta.sin_cos();
                                let weight = wt * st;
                                for (acc, s) in sums.iter_mut().zip(&shells) {
                                    let p = s(speed * ct).conj() * g;
                                    acc.0 += p * weight;
                                    acc.1 += p.norm_sqr().sqrt() * weight;
                                }
                            }
                        }
                        count += sub * order;
                    }
                    let jac = wr * r * r;
                    for (t, s) in totals.iter_mut().zip(&sums) {
                        t.0 += s.0 * jac;
                        t.1 += s.1 * jac;
                    }
                }
            }
        }
        (totals, count)
    }
}

/// The tabulated azimuthal integral of one wave function about one axis,
/// at the working resolution and at the coarsened companion resolution.
pub struct AxialField {
    axis: Vec3,
    small_k_exponent: f64,
    fine: Table,
    coarse: Table,
}

impl AxialField {
    /// Tabulates `G` for `f` over the radial range needed by `plan`; every
    /// profile later paired against the field must share `plan`'s velocity
    /// and must not need a wider range.
    pub fn new(f: &dyn PhotonWaveFunction, plan: &[&Profile], q: &QuadratureSpec) -> Result<Self> {
        q.validate()?;
        let first = plan.first().ok_or_else(|| invalid("axial pairing needs at least one profile"))?;
        let axis = first.params().w();
        let mut hi: f64 = 0.0;
        let mut bps = f.breakpoints();
        for p in plan {
            if p.params().w() != axis {
                return Err(invalid("axial pairing needs profiles with one common velocity"));
            }
            hi = hi.max(p.truncation_radius().min(f.truncation_radius()));
            bps.extend(p.breakpoints());
        }
        let hi = q.r_max.unwrap_or(hi).max(q.r_min * 10.0);
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let build = |spec: &QuadratureSpec| Table::build(f, &axis, q.r_min, hi, &bps, spec);
        let (fine, coarse) = if axis.norm() == 0.0 {
            (Table::empty(q), Table::empty(q))
        } else {
            (build(q), build(&q.coarsened()))
        };
        Ok(Self { axis, small_k_exponent: f.small_k_exponent(), fine, coarse })
    }

    /// `⟨v_j, f⟩` for each profile, with the two-level error estimate.
    pub fn pairings(&self, profiles: &[&Profile]) -> Result<Vec<PairingResult>> {
        for p in profiles {
            if p.params().w() != self.axis {
                return Err(invalid("profile velocity differs from the tabulated axis"));
            }
            check_integrable(&[*p as &dyn PhotonWaveFunction, &Exponent(self.small_k_exponent)], &[(0, 1)])?;
        }
        let speed = self.axis.norm();
        let (fine, count) = self.fine.integrate(profiles, speed);
        let (coarse, _) = self.coarse.integrate(profiles, speed);
        Ok(fine
            .iter()
            .zip(&coarse)
            .map(|(f, c)| PairingResult {
                value: f.0,
                error_estimate: (f.0 - c.0).norm(),
                scale: f.1,
                node_count: count,
            })
            .collect())
    }
}

impl Table {
    fn empty(spec: &QuadratureSpec) -> Self {
        let rule = gauss_legendre(spec.radial_order);
        let bary = barycentric_weights(&rule);
        Self {
            spec: spec.clone(),
            rule,
            bary,
            panels: Vec::new(),
            f_osc: Oscillation::default(),
            theta_maps: Mutex::new(HashMap::new()),
        }
    }
}

/// Stand-in carrying only a small-`k` exponent for the integrability check.
struct Exponent(f64);

impl PhotonWaveFunction for Exponent {
    fn shell(&self, _radius: f64) -> Box<dyn Fn(&Vec3) -> CVec3 + '_> {
        Box::new(|_| CVec3::zeros())
    }
    fn small_k_exponent(&self) -> f64 {
        self.0
    }
    fn truncation_radius(&self) -> f64 {
        f64::INFINITY
    }
}

/// `⟨v_j, f⟩` for profiles sharing one velocity; see [`AxialField`].
/// The reported scale is `∫ |s* G|`, taken after the azimuthal integration.
pub fn axial_pairings(profiles: &[&Profile], f: &dyn PhotonWaveFunction, q: &QuadratureSpec) -> Result<Vec<PairingResult>> {
    AxialField::new(f, profiles, q)?.pairings(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point4;
    use crate::pairing::pair_many;
    use crate::profiles::{DressingParams, ProfileKind};
    use crate::testfields::{photon_wavefunction, Channel, TestFieldPair};

    fn params() -> DressingParams {
        DressingParams { velocity: [0.1, -0.2, 0.15], ..Default::default() }
    }

    fn field() -> TestFieldPair {
        TestFieldPair::single(Channel::Electric, [0.3, 0.5, 0.8], Point4::new(1.0, [0.5, -0.3, 0.2]), 0.8, 0.9, 1.0)
            .unwrap()
    }

    #[test]
    fn lagrange_rows_reproduce_polynomials() {
        let rule = gauss_legendre(16);
        let bary = barycentric_weights(&rule);
        let mut row = vec![0.0; 16];
        for x in [-0.93, -0.2, 0.0, 0.41, 0.999] {
            lagrange_row(&rule, &bary, x, &mut row);
            let p = |t: f64| 1.0 - 3.0 * t + t.powi(7) - 0.5 * t.powi(15);
            let got: f64 = row.iter().zip(&rule.nodes).map(|(l, n)| l * p(*n)).sum();
            assert!((got - p(x)).abs() < 1e-12, "{x}: {got} vs {}", p(x));
        }
    }

    #[test]
    fn agrees_with_the_three_dimensional_rule() {
        let q = QuadratureSpec::default();
        let fw = photon_wavefunction(&field());
        for kind in [ProfileKind::VHat, ProfileKind::VHatT { t: 2.0 }, ProfileKind::Term3 { t: 2.0 }] {
            let v = Profile::new(&params(), kind).unwrap();
            let axial = axial_pairings(&[&v], &fw, &q).unwrap()[0];
            let full = pair_many(&[&v, &fw], &[(0, 1)], &q).unwrap()[0];
            let diff = (axial.value - full.value).norm();
            assert!(diff < 1e-8 * full.scale, "{kind:?}: {} vs {} (scale {})", axial.value, full.value, full.scale);
            assert!(axial.error_estimate < 1e-8 * full.scale, "{kind:?}: {axial:?}");
        }
    }

    #[test]
    fn field_on_the_axis_needs_few_azimuthal_nodes() {
        let q = QuadratureSpec::default();
        let w = params().w();
        let c = w.normalize() * 3.0;
        let f = TestFieldPair::single(Channel::Magnetic, [0.3, 0.5, 0.8], Point4::new(0.5, [c[0], c[1], c[2]]), 0.8, 0.9, 1.0)
            .unwrap();
        let fw = photon_wavefunction(&f);
        assert!(fw.oscillation_about(&w.normalize()).azimuthal < 1.0);
        let v = Profile::new(&params(), ProfileKind::VHatT { t: 2.0 }).unwrap();
        let axial = axial_pairings(&[&v], &fw, &q).unwrap()[0];
        let full = pair_many(&[&v, &fw], &[(0, 1)], &q).unwrap()[0];
        assert!((axial.value - full.value).norm() < 1e-8 * full.scale, "{} vs {}", axial.value, full.value);
    }

    #[test]
    fn zero_velocity_gives_zero() {
        let v = Profile::new(&params().with_velocity([0.0; 3]), ProfileKind::VHat).unwrap();
        let r = axial_pairings(&[&v], &photon_wavefunction(&field()), &QuadratureSpec::default()).unwrap();
        assert_eq!(r[0].value, Complex64::default());
    }

    #[test]
    fn mismatched_axis_is_rejected() {
        let fw = photon_wavefunction(&field());
        let a = Profile::new(&params(), ProfileKind::VHat).unwrap();
        let b = Profile::new(&params().with_velocity([0.0, 0.0, 0.3]), ProfileKind::VHat).unwrap();
        let field = AxialField::new(&fw, &[&a], &QuadratureSpec::default()).unwrap();
        assert!(field.pairings(&[&b]).is_err());
    }
}
