use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{axial_pairings, AxialField, QuadratureSpec};
use crate::error::{invalid, Error, Result};
use crate::geometry::{double_cone_in_cone, ConeRegion, Point4};
use crate::profiles::{Dressing, DressingParams, Profile, ProfileKind};
use crate::testfields::{photon_wavefunction, TestFieldPair};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeKind {
    VHat,
    VHatT { t: f64 },
}

impl ProbeKind {
    fn profile_kind(self) -> ProfileKind {
        match self {
            ProbeKind::VHat => ProfileKind::VHat,
            ProbeKind::VHatT { t } => ProfileKind::VHatT { t },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectResult {
    /// `Im⟨-i v̂, f⟩ = Re⟨v̂, f⟩`.
    pub defect: f64,
    pub error_estimate: f64,
    /// `∫ |v̂*·f|` after the azimuthal integration about `w`.
    pub scale: f64,
    pub node_count: usize,
}

/// `Im⟨-i v̂, f⟩` for `f` localized in the forward lightcone of the origin.
pub fn huyghens_defect(
    params: &DressingParams,
    f: &TestFieldPair,
    kind: ProbeKind,
    q: &QuadratureSpec,
) -> Result<DefectResult> {
    Ok(huyghens_defects(params, f, &[kind], q)?[0])
}

/// [`huyghens_defect`] for several probes, sharing one azimuthal table.
pub fn huyghens_defects(
    params: &DressingParams,
    f: &TestFieldPair,
    kinds: &[ProbeKind],
    q: &QuadratureSpec,
) -> Result<Vec<DefectResult>> {
    if !double_cone_in_cone(f.support(), &ConeRegion::forward(Point4::origin())) {
        return Err(Error::SupportNotInForwardCone);
    }
    pairing_defects(params, f, kinds, q)
}

/// The same quantity without the support precondition, for contrast runs.
pub fn pairing_defect(
    params: &DressingParams,
    f: &TestFieldPair,
    kind: ProbeKind,
    q: &QuadratureSpec,
) -> Result<DefectResult> {
    Ok(pairing_defects(params, f, &[kind], q)?[0])
}

pub fn pairing_defects(
    params: &DressingParams,
    f: &TestFieldPair,
    kinds: &[ProbeKind],
    q: &QuadratureSpec,
) -> Result<Vec<DefectResult>> {
    if kinds.is_empty() {
        return Ok(Vec::new());
    }
    params.validate()?;
    let dressing = Arc::new(Dressing::new(params.bump_radius, params.bump_norm));
    let probes = kinds
        .iter()
        .map(|k| Profile::with_dressing(params, k.profile_kind(), dressing.clone()))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Profile> = probes.iter().collect();
    let fw = photon_wavefunction(f);
    let field = AxialField::new(&fw, &refs, q)?;
    let mut out = Vec::with_capacity(kinds.len());
    // One probe at a time, so each gets a rule sized for its own horizon.
    for p in &refs {
        let r = field.pairings(&[*p])?[0];
        out.push(DefectResult {
            defect: r.value.re,
            error_estimate: r.error_estimate,
            scale: r.scale,
            node_count: r.node_count,
        });
    }
    Ok(out)
}

/// One row of the large-`T` study; all pairings are `⟨·, f⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub t: f64,
    pub total: Complex64,
    pub vhat: Complex64,
    pub term2: Complex64,
    pub term3: Complex64,
    /// Largest error estimate among the four pairings.
    pub err: f64,
    /// Absolute scale of the `v̂` pairing.
    pub scale: f64,
    pub node_count: usize,
}

/// Pairings of `v̂_T`, `v̂` and the two remainder terms with `f`, evaluated
/// on one node set per `T`.
pub fn limit_t_study(
    params: &DressingParams,
    f: &TestFieldPair,
    t_list: &[f64],
    q: &QuadratureSpec,
) -> Result<Vec<LimitRow>> {
    if t_list.is_empty() {
        return Ok(Vec::new());
    }
    if t_list.iter().any(|t| !(*t > 0.0)) || t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("T list must be positive and strictly ascending"));
    }
    params.validate()?;
    let dressing = Arc::new(Dressing::new(params.bump_radius, params.bump_norm));
    let fw = photon_wavefunction(f);
    let vhat = Profile::with_dressing(params, ProfileKind::VHat, dressing.clone())?;
    let field = AxialField::new(&fw, &[&vhat], q)?;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let make = |kind| Profile::with_dressing(params, kind, dressing.clone());
        let total = make(ProfileKind::VHatT { t })?;
        let term2 = make(ProfileKind::Term2 { t })?;
        let term3 = make(ProfileKind::Term3 { t })?;
        let r = field.pairings(&[&total, &vhat, &term2, &term3])?;
        rows.push(LimitRow {
            t,
            total: r[0].value,
            vhat: r[1].value,
            term2: r[2].value,
            term3: r[3].value,
            err: r.iter().map(|x| x.error_estimate).fold(0.0, f64::max),
            scale: r[1].scale,
            node_count: r[0].node_count,
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub phase: f64,
    pub error_estimate: f64,
    pub scale: f64,
}

/// `-2 Im⟨-i(v - v̂), f⟩ = -2 Re⟨v - v̂, f⟩`.
pub fn lemma1_phase(params: &DressingParams, f: &TestFieldPair, q: &QuadratureSpec) -> Result<PhaseResult> {
    let d = Profile::new(params, ProfileKind::LimitMinusHat)?;
    let fw = photon_wavefunction(f);
    let r = axial_pairings(&[&d], &fw, q)?[0];
    Ok(PhaseResult { phase: -2.0 * r.value.re, error_estimate: 2.0 * r.error_estimate, scale: 2.0 * r.scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfields::Channel;

    fn forward_field() -> TestFieldPair {
        TestFieldPair::single(Channel::Electric, [0.0, 0.0, 1.0], Point4::new(5.0, [0.0; 3]), 0.45, 0.45, 1.0).unwrap()
    }

    fn params() -> DressingParams {
        DressingParams { velocity: [0.0, 0.0, 0.3], ..Default::default() }
    }

    #[test]
    fn support_outside_forward_cone_is_rejected() {
        let f = TestFieldPair::single(Channel::Electric, [0.0, 0.0, 1.0], Point4::new(-5.0, [0.0; 3]), 0.45, 0.45, 1.0)
            .unwrap();
        let r = huyghens_defect(&params(), &f, ProbeKind::VHat, &QuadratureSpec::default());
        assert!(matches!(r, Err(Error::SupportNotInForwardCone)));
    }

    #[test]
    fn defect_vanishes_in_forward_cone() {
        let q = QuadratureSpec::default();
        let kinds = [ProbeKind::VHat, ProbeKind::VHatT { t: 1.0 }, ProbeKind::VHatT { t: 10.0 }];
        for (kind, d) in kinds.iter().zip(huyghens_defects(&params(), &forward_field(), &kinds, &q).unwrap()) {
            assert!(d.defect.abs() <= 1e-5 * d.scale, "{kind:?}: {d:?}");
        }
        let off_axis =
            TestFieldPair::single(Channel::Magnetic, [0.3, 0.5, 0.8], Point4::new(5.0, [1.0, 0.5, -0.8]), 0.45, 0.45, 1.0)
                .unwrap();
        let d = huyghens_defect(&params(), &off_axis, ProbeKind::VHat, &q).unwrap();
        assert!(d.defect.abs() <= 1e-5 * d.scale, "{d:?}");
    }

    #[test]
    fn backward_field_has_visible_defect() {
        // On-axis backward fields cancel by symmetry; this one overlaps the cone.
        let f = TestFieldPair::single(Channel::Electric, [0.3, 0.5, 0.8], Point4::new(-3.0, [0.0, 0.0, -1.0]), 0.45, 0.45, 1.0)
            .unwrap();
        let d = pairing_defect(&params(), &f, ProbeKind::VHat, &QuadratureSpec::default()).unwrap();
        assert!(d.defect.abs() > 1e-3 * d.scale, "{d:?}");
    }

    #[test]
    fn limit_rows_sum_to_total() {
        let rows = limit_t_study(&params(), &forward_field(), &[1.0, 4.0], &QuadratureSpec::default()).unwrap();
        for row in rows {
            let parts = row.vhat + row.term2 + row.term3;
            assert!((row.total - parts).norm() <= 1e-10 * row.scale, "{row:?}");
        }
        assert!(limit_t_study(&params(), &forward_field(), &[2.0, 1.0], &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn lemma1_phase_vanishes_without_velocity() {
        let p = params().with_velocity([0.0; 3]);
        let r = lemma1_phase(&p, &forward_field(), &QuadratureSpec::default()).unwrap();
        assert_eq!(r.phase, 0.0);
    }
}
