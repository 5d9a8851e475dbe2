mod common;

use proptest::prelude::*;
use simple_pinn_core::geometry::{classify_points, Geometry, GridSpec, Rect, Solid};

#[test]
fn unit_square_and_square_solids_match_enumeration() {
    common::classification_check().unwrap();
}

fn with_square(c: [f64; 2], half: f64) -> Geometry {
    let mut g = Geometry::rectangle(Rect::new(0.0, 1.0, 0.0, 1.0));
    g.solids.push(Solid::square(c[0] - half, c[1] - half, 2.0 * half));
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shrinking_a_solid_never_demotes_fvm_points(cx in 0.3..0.7f64, cy in 0.3..0.7f64, big in 0.08..0.2f64, frac in 0.2..1.0f64) {
        let grid = GridSpec { nx: 26, ny: 26 };
        let large = classify_points(&with_square([cx, cy], big), &grid, None).unwrap();
        let small = classify_points(&with_square([cx, cy], big * frac), &grid, None).unwrap();
        for z in &large.fvm {
            prop_assert!(small.fvm.contains(z), "{z:?} lost its FVM status");
        }
    }

    #[test]
    fn classification_is_deterministic(cx in 0.3..0.7f64, cy in 0.3..0.7f64, r in 0.05..0.2f64) {
        let mut g = Geometry::rectangle(Rect::new(0.0, 1.0, 0.0, 1.0));
        g.solids.push(Solid::Circle { center: [cx, cy], radius: r });
        let grid = GridSpec { nx: 21, ny: 21 };
        prop_assert_eq!(classify_points(&g, &grid, None).unwrap(), classify_points(&g, &grid, None).unwrap());
    }

    #[test]
    fn fvm_stencils_stay_in_fluid(cx in 0.3..0.7f64, cy in 0.3..0.7f64, r in 0.05..0.2f64) {
        let mut g = Geometry::rectangle(Rect::new(0.0, 1.0, 0.0, 1.0));
        g.solids.push(Solid::Circle { center: [cx, cy], radius: r });
        let set = classify_points(&g, &GridSpec { nx: 31, ny: 31 }, None).unwrap();
        let h = set.h;
        for z in &set.fvm {
            for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h), (h / 2.0, 0.0), (-h / 2.0, 0.0), (0.0, h / 2.0), (0.0, -h / 2.0)] {
                prop_assert!(g.is_fluid([z[1] + dx, z[2] + dy]));
            }
        }
    }
}
