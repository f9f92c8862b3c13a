//! The collapsed coordinate s = tanh(r/2), the extended exponential map,
//! and the bounded boundary metric d_K = |e^{-r_p} - e^{-r_q}| + d_Y(p', q').

use crate::error::{Error, Result};

/// A point (y, s) with the normal ray collapsed to s = tanh(r/2) in (0, 1];
/// s = 1 encodes a point of the boundary at infinity with label y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompactifiedPoint {
    pub y: f64,
    pub s: f64,
}

impl CompactifiedPoint {
    /// Collapse map on interior points: (y, r) -> (y, tanh(r/2)).
    pub fn interior(y: f64, r: f64) -> Self {
        CompactifiedPoint {
            y,
            s: (r / 2.0).tanh(),
        }
    }

    pub fn boundary(y: f64) -> Self {
        CompactifiedPoint { y, s: 1.0 }
    }

    pub fn is_boundary(&self) -> bool {
        self.s >= 1.0
    }

    /// Fermi radius 2 atanh(s); infinite on the boundary.
    pub fn radius(&self) -> f64 {
        if self.is_boundary() {
            f64::INFINITY
        } else {
            2.0 * self.s.atanh()
        }
    }

    /// e^{-r} evaluated in the collapsed coordinate: (1-s)/(1+s), which is
    /// exact at the boundary and stable for s near 1.
    pub fn exp_minus_r(&self) -> f64 {
        (1.0 - self.s) / (1.0 + self.s)
    }
}

/// Image of the extended exponential map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedPoint {
    Interior { y: f64, r: f64 },
    Boundary { y: f64 },
}

/// Extended exponential: s in (0, 1) maps to the Fermi pair (y, 2 atanh(s)),
/// s = 1 to the boundary point labeled y.
pub fn extend_exponential(y: f64, s: f64) -> Result<ExtendedPoint> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidInput(format!("s = {s} outside (0, 1]")));
    }
    if s == 1.0 {
        Ok(ExtendedPoint::Boundary { y })
    } else {
        Ok(ExtendedPoint::Interior {
            y,
            r: 2.0 * s.atanh(),
        })
    }
}

/// Collapse map zeta(y, r) = (y, tanh(r/2)).
pub fn collapse(y: f64, r: f64) -> CompactifiedPoint {
    CompactifiedPoint::interior(y, r)
}

/// Intrinsic circle distance on the boundary hypersurface of an essential
/// subset, in arclength.
pub trait BoundaryMetric {
    fn d_boundary(&self, y1: f64, y2: f64) -> f64;

    /// Diameter of the boundary circle.
    fn boundary_diameter(&self) -> f64;
}

impl BoundaryMetric for crate::warp::WarpedModel {
    fn d_boundary(&self, y1: f64, y2: f64) -> f64 {
        self.d_y(y1, y2)
    }
    fn boundary_diameter(&self) -> f64 {
        self.circumference() / 2.0
    }
}

impl BoundaryMetric for super::boundary::BoundaryArclength {
    fn d_boundary(&self, y1: f64, y2: f64) -> f64 {
        self.d_y(y1, y2)
    }
    fn boundary_diameter(&self) -> f64 {
        self.total / 2.0
    }
}

/// The bounded metric d_K on the complement of an essential subset,
/// extending to the boundary at infinity.
pub fn dk_distance<B: BoundaryMetric + ?Sized>(
    boundary: &B,
    p: CompactifiedPoint,
    q: CompactifiedPoint,
) -> f64 {
    (p.exp_minus_r() - q.exp_minus_r()).abs() + boundary.d_boundary(p.y, q.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::PinchingProfile;
    use crate::warp::solve_warp;
    use proptest::prelude::*;

    #[test]
    fn extend_examples() {
        // s = tanh(1/2) recovers r = 1
        match extend_exponential(0.4, 0.5f64.tanh()).unwrap() {
            ExtendedPoint::Interior { y, r } => {
                assert_eq!(y, 0.4);
                assert!((r - 1.0).abs() < 1e-14);
            }
            _ => panic!("expected interior"),
        }
        assert_eq!(
            extend_exponential(1.2, 1.0).unwrap(),
            ExtendedPoint::Boundary { y: 1.2 }
        );
        assert!(extend_exponential(0.0, 0.0).is_err());
        assert!(extend_exponential(0.0, 1.1).is_err());
        assert!(extend_exponential(0.0, -0.3).is_err());
    }

    #[test]
    fn collapse_extend_round_trip() {
        for s in [0.01, 0.1, 0.5, 0.9, 0.999] {
            match extend_exponential(0.0, s).unwrap() {
                ExtendedPoint::Interior { r, .. } => {
                    let back = collapse(0.0, r);
                    assert!((back.s - s).abs() <= 1e-12, "s = {s}");
                }
                _ => panic!("interior expected"),
            }
        }
    }

    #[test]
    fn dk_examples() {
        let m = solve_warp(PinchingProfile::constant(1.0, 1.0, 1.0).unwrap(), 1.0, 0.0, 30.0)
            .unwrap();
        let p = CompactifiedPoint::interior(0.0, 1.0);
        let q = CompactifiedPoint::interior(0.0, 2.0);
        let d = dk_distance(&m, p, q);
        let expect = (-1.0f64).exp() - (-2.0f64).exp();
        assert!((d - expect).abs() < 1e-12);
        assert!((d - 0.23254415793482963).abs() < 1e-10);

        // boundary pair: only the Y term survives
        let b1 = CompactifiedPoint::boundary(0.0);
        let b2 = CompactifiedPoint::boundary(1.0);
        assert!((dk_distance(&m, b1, b2) - 1.0).abs() < 1e-12);
        assert_eq!(dk_distance(&m, b1, b1), 0.0);
    }

    #[test]
    fn dk_is_bounded_by_one_plus_diameter() {
        let m = solve_warp(PinchingProfile::constant(1.0, 1.0, 1.0).unwrap(), 1.0, 0.0, 30.0)
            .unwrap();
        let bound = 1.0 + m.boundary_diameter();
        for i in 0..100 {
            let p = CompactifiedPoint {
                y: i as f64 * 0.31,
                s: 0.01 + 0.99 * (i as f64 / 100.0),
            };
            let q = CompactifiedPoint {
                y: i as f64 * 0.77,
                s: 1.0 - 0.99 * (i as f64 / 100.0),
            };
            assert!(dk_distance(&m, p, q) <= bound + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn dk_metric_axioms(
            y1 in 0.0f64..std::f64::consts::TAU, y2 in 0.0f64..std::f64::consts::TAU, y3 in 0.0f64..std::f64::consts::TAU,
            s1 in 0.001f64..=1.0, s2 in 0.001f64..=1.0, s3 in 0.001f64..=1.0
        ) {
            let m = solve_warp(
                PinchingProfile::constant(1.0, 1.0, 1.0).unwrap(), 1.0, 0.0, 5.0
            ).unwrap();
            let p = CompactifiedPoint { y: y1, s: s1 };
            let q = CompactifiedPoint { y: y2, s: s2 };
            let w = CompactifiedPoint { y: y3, s: s3 };
            let dpq = dk_distance(&m, p, q);
            let dqp = dk_distance(&m, q, p);
            prop_assert!((dpq - dqp).abs() <= 1e-15);
            prop_assert!(dpq >= 0.0);
            // identity of indiscernibles on the sampled scale
            if dpq == 0.0 {
                prop_assert!((s1 - s2).abs() < 1e-12);
            }
            // triangle with roundoff slack
            prop_assert!(dpq <= dk_distance(&m, p, w) + dk_distance(&m, w, q) + 1e-12);
        }
    }
}
