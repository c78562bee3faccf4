use std::f64::consts::PI;

use proptest::prelude::*;

use overlatt::geometry2d::{overlap_at_covering_2d, voronoi_ball_area};
use overlatt::geometry3d::CapArrangement;
use overlatt::lattice::{unit_ball_volume, DistortedLattice, NearestPointSearch};
use overlatt::measures::{LatticeMeasures, OverlapMeasure};
use overlatt::quality::{max_radius_for_overlap, qual_packing, qual_packing_with};

fn lat(n: usize, d: f64) -> DistortedLattice {
    DistortedLattice::new(n, d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planar_union_is_a_monotone_fraction(d in 0.05f64..20.0, a in 0.0f64..1.5, b in 0.0f64..1.5) {
        let l = lat(2, d);
        let m = LatticeMeasures::new(&l).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (lo, hi) = (lo * l.covering_radius(), hi * l.covering_radius());
        let (u, v) = (m.union_exact(lo).unwrap(), m.union_exact(hi).unwrap());
        prop_assert!((0.0..=1.0).contains(&u));
        prop_assert!(u <= v + 1e-15);
    }

    #[test]
    fn planar_reciprocal_symmetry(d in 0.05f64..1.0, t in 0.0f64..1.2) {
        // The lattice for δ is a rotated copy of the one for 1/δ, scaled by δ.
        let r = t * lat(2, d).covering_radius();
        let a = voronoi_ball_area(d, r).unwrap() / d;
        let b = voronoi_ball_area(1.0 / d, r / d).unwrap() * d;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn spatial_routes_agree(d in 0.1f64..4.0, t in 0.8f64..1.05) {
        let arr = CapArrangement::new(d).unwrap();
        let r = t * arr.covering_radius;
        let ie = arr.ball_volume(r).unwrap();
        let direct = arr.ball_volume_direct(r.min(arr.covering_radius)).unwrap();
        prop_assert!((ie - direct).abs() < 1e-10, "{} vs {}", ie, direct);
        prop_assert!(ie <= d * (1.0 + 1e-12));
        prop_assert!(ie <= 4.0 / 3.0 * PI * r.powi(3) * (1.0 + 1e-12));
    }

    #[test]
    fn nearest_point_is_within_covering_radius(
        d in 0.2f64..5.0,
        p in proptest::collection::vec(-3.0f64..3.0, 3),
    ) {
        let l = lat(3, d);
        let s = NearestPointSearch::new(&l);
        let q = s.nearest(&p).unwrap();
        prop_assert!(q.distance <= l.covering_radius() * (1.0 + 1e-12));
        for v in l.vectors_within(l.covering_radius() * 2.0) {
            let other: Vec<f64> = q.point.iter().zip(&v.point).map(|(a, b)| a + b).collect();
            let dist = other.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(q.distance <= dist + 1e-12);
        }
    }

    #[test]
    fn volume_radius_inverts_the_overlap(d in 0.1f64..1.0, s in 0.01f64..0.99) {
        let m = LatticeMeasures::new(&lat(2, d)).unwrap();
        let w = s * overlap_at_covering_2d(d).unwrap();
        let r = max_radius_for_overlap(&m, OverlapMeasure::Volume, w).unwrap();
        prop_assert!((m.vol_overlap(r).unwrap().value() - w).abs() < 1e-10);
    }

    #[test]
    fn packing_quality_grows_with_budget(d in 0.2f64..3.0, a in 0.0f64..0.6, b in 0.0f64..0.6) {
        let m = LatticeMeasures::new(&lat(3, d)).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let q_lo = qual_packing_with(&m, OverlapMeasure::Volume, lo).unwrap();
        let q_hi = qual_packing_with(&m, OverlapMeasure::Volume, hi).unwrap();
        prop_assert!(q_lo.density <= q_hi.density + 1e-12);
        prop_assert!(q_hi.overlap <= hi + 1e-9);
    }

    #[test]
    fn distance_quality_matches_closed_form(n in 2usize..6, d in 0.05f64..20.0, w in 0.0f64..0.95) {
        // ‖m‖² + γ(Σm)² with γ = (δ² − 1)/n is smallest at e_i − e_j, e_i or the all-ones sum.
        let nf = n as f64;
        let gamma = (d * d - 1.0) / nf;
        let shortest = 2f64.min(1.0 + gamma).min(nf * d * d).sqrt();
        let expected = unit_ball_volume(n).unwrap() / d * (shortest / (2.0 * (1.0 - w))).powi(n as i32);
        let q = qual_packing(&lat(n, d), OverlapMeasure::Distance, w).unwrap();
        prop_assert!((q.density - expected).abs() <= 1e-9 * expected.max(1.0));
    }
}
