//! Spacetime regions and causal predicates.
//!
//! All regions are open; boundary points are classified as outside. The
//! predicates are exact closed-form inequalities in the Minkowski metric
//! with `c = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::Vec3;

/// Spacetime point `(t, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point4 {
    pub t: f64,
    pub x: [f64; 3],
}

impl Point4 {
    pub fn new(t: f64, x: [f64; 3]) -> Self {
        Self { t, x }
    }

    pub fn origin() -> Self {
        Self::new(0.0, [0.0; 3])
    }

    pub fn spatial(&self) -> Vec3 {
        Vec3::from(self.x)
    }

    fn separation(&self, other: &Point4) -> (f64, f64) {
        let dt = other.t - self.t;
        let dx = (other.spatial() - self.spatial()).norm();
        (dt, dx)
    }
}

/// The set `{ p : |t - c_0| + |x - c| < r }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleCone {
    pub center: Point4,
    pub radius: f64,
}

impl DoubleCone {
    pub fn new(center: Point4, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("double cone radius must be positive, got {radius}")));
        }
        if !center.t.is_finite() || center.x.iter().any(|c| !c.is_finite()) {
            return Err(invalid("double cone center must be finite"));
        }
        Ok(Self { center, radius })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Forward,
    Backward,
}

/// Open lightcone `V_+ + a` or `V_- + a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeRegion {
    pub orientation: Orientation,
    pub apex: Point4,
}

impl ConeRegion {
    pub fn forward(apex: Point4) -> Self {
        Self { orientation: Orientation::Forward, apex }
    }

    pub fn backward(apex: Point4) -> Self {
        Self { orientation: Orientation::Backward, apex }
    }

    /// Signed time from the apex into the cone's interior.
    fn depth(&self, t: f64) -> f64 {
        match self.orientation {
            Orientation::Forward => t - self.apex.t,
            Orientation::Backward => self.apex.t - t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalRelation {
    Spacelike,
    Timelike,
    Neither,
}

/// A region that can be asked for point membership.
pub trait Region {
    fn contains(&self, p: &Point4) -> bool;
}

impl Region for DoubleCone {
    fn contains(&self, p: &Point4) -> bool {
        let (dt, dx) = self.center.separation(p);
        dt.abs() + dx < self.radius
    }
}

impl Region for ConeRegion {
    fn contains(&self, p: &Point4) -> bool {
        let dx = (p.spatial() - self.apex.spatial()).norm();
        self.depth(p.t) > dx
    }
}

pub fn contains<R: Region + ?Sized>(region: &R, p: &Point4) -> bool {
    region.contains(p)
}

/// Whether the whole double cone lies inside the (open) lightcone.
///
/// Over the double cone, `depth - |x - apex|` has infimum
/// `depth(center) - |center - apex| - r`, so containment holds iff that
/// infimum is non-negative.
pub fn double_cone_in_cone(dc: &DoubleCone, cone: &ConeRegion) -> bool {
    let dx = (dc.center.spatial() - cone.apex.spatial()).norm();
    cone.depth(dc.center.t) - dx >= dc.radius
}

/// Classifies every pair of points drawn from the two double cones.
///
/// The Minkowski sum of the two diamonds is a diamond of radius
/// `r1 + r2`, so the extremal values of `|dx| - |dt|` over all pairs are
/// those of the centers shifted by `r1 + r2`.
pub fn causally_separated(dc1: &DoubleCone, dc2: &DoubleCone) -> CausalRelation {
    let (dt, dx) = dc1.center.separation(&dc2.center);
    let reach = dc1.radius + dc2.radius;
    if dx - dt.abs() >= reach {
        CausalRelation::Spacelike
    } else if dt.abs() - dx >= reach {
        CausalRelation::Timelike
    } else {
        CausalRelation::Neither
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dc(t: f64, x: [f64; 3], r: f64) -> DoubleCone {
        DoubleCone::new(Point4::new(t, x), r).unwrap()
    }

    #[test]
    fn forward_cone_membership() {
        let v = ConeRegion::forward(Point4::origin());
        assert!(v.contains(&Point4::new(1.0, [0.0, 0.0, 0.5])));
        assert!(!v.contains(&Point4::new(1.0, [0.0, 0.0, 1.0])));
        assert!(!v.contains(&Point4::new(-1.0, [0.0, 0.0, 0.0])));
        let back = ConeRegion::backward(Point4::origin());
        assert!(back.contains(&Point4::new(-1.0, [0.3, 0.0, 0.0])));
    }

    #[test]
    fn double_cone_membership() {
        let d = dc(5.0, [0.0; 3], 1.0);
        assert!(d.contains(&Point4::new(5.5, [0.4, 0.0, 0.0])));
        assert!(!d.contains(&Point4::new(5.5, [0.5, 0.0, 0.0])));
        assert!(!d.contains(&Point4::new(6.0, [0.0; 3])));
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(DoubleCone::new(Point4::origin(), 0.0).is_err());
        assert!(DoubleCone::new(Point4::origin(), -1.0).is_err());
        assert!(DoubleCone::new(Point4::origin(), f64::NAN).is_err());
    }

    #[test]
    fn double_cone_inside_lightcones() {
        let fwd = ConeRegion::forward(Point4::origin());
        let bwd = ConeRegion::backward(Point4::origin());
        assert!(double_cone_in_cone(&dc(5.0, [0.0; 3], 1.0), &fwd));
        assert!(!double_cone_in_cone(&dc(0.0, [0.0; 3], 1.0), &fwd));
        assert!(double_cone_in_cone(&dc(-5.0, [0.0; 3], 1.0), &bwd));
        assert!(!double_cone_in_cone(&dc(-5.0, [0.0; 3], 1.0), &fwd));
        // tangent from the inside: the bottom tip touches the apex
        assert!(double_cone_in_cone(&dc(1.0, [0.0; 3], 1.0), &fwd));
        assert!(!double_cone_in_cone(&dc(1.0, [0.1, 0.0, 0.0], 1.0), &fwd));
    }

    #[test]
    fn causal_classification() {
        assert_eq!(
            causally_separated(&dc(0.0, [10.0, 0.0, 0.0], 1.0), &dc(0.0, [-10.0, 0.0, 0.0], 1.0)),
            CausalRelation::Spacelike
        );
        assert_eq!(
            causally_separated(&dc(10.0, [0.0; 3], 1.0), &dc(-10.0, [0.0; 3], 1.0)),
            CausalRelation::Timelike
        );
        assert_eq!(
            causally_separated(&dc(0.0, [0.0; 3], 1.0), &dc(1.5, [1.5, 0.0, 0.0], 1.0)),
            CausalRelation::Neither
        );
    }

    fn point() -> impl Strategy<Value = Point4> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
            .prop_map(|(t, a, b, c)| Point4::new(t, [a, b, c]))
    }

    proptest! {
        #[test]
        fn membership_monotone_in_radius(c in point(), p in point(), r in 0.1..4.0f64, dr in 0.0..3.0f64) {
            let small = DoubleCone::new(c, r).unwrap();
            let big = DoubleCone::new(c, r + dr).unwrap();
            prop_assert!(!small.contains(&p) || big.contains(&p));
        }

        #[test]
        fn causal_relation_symmetric(a in point(), b in point(), r1 in 0.1..3.0f64, r2 in 0.1..3.0f64) {
            let d1 = DoubleCone::new(a, r1).unwrap();
            let d2 = DoubleCone::new(b, r2).unwrap();
            prop_assert_eq!(causally_separated(&d1, &d2), causally_separated(&d2, &d1));
        }

        #[test]
        fn forward_and_backward_members_are_timelike(a in point(), b in point(), r1 in 0.1..3.0f64, r2 in 0.1..3.0f64) {
            let fwd = ConeRegion::forward(Point4::origin());
            let bwd = ConeRegion::backward(Point4::origin());
            let d1 = DoubleCone::new(Point4::new(a.t.abs() + 8.0, a.x), r1).unwrap();
            let d2 = DoubleCone::new(Point4::new(-b.t.abs() - 8.0, b.x), r2).unwrap();
            if double_cone_in_cone(&d1, &fwd) && double_cone_in_cone(&d2, &bwd) {
                prop_assert_eq!(causally_separated(&d1, &d2), CausalRelation::Timelike);
            }
        }

        #[test]
        fn containment_agrees_with_sampled_points(c in point(), r in 0.2..2.0f64, s in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 50)) {
            let d = DoubleCone::new(c, r).unwrap();
            let fwd = ConeRegion::forward(Point4::new(-3.0, [0.5, 0.0, 0.0]));
            if double_cone_in_cone(&d, &fwd) {
                for (a, b, e, f) in s {
                    let v = Vec3::new(b, e, f);
                    let n = v.norm().max(1e-12);
                    let budget = 0.999 * r * (1.0 - a.abs());
                    let y = v / n * budget * n.min(1.0);
                    let p = Point4::new(c.t + a * r * 0.999, [c.x[0] + y[0], c.x[1] + y[1], c.x[2] + y[2]]);
                    if d.contains(&p) {
                        prop_assert!(fwd.contains(&p));
                    }
                }
            }
        }
    }
}
