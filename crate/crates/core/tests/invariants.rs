//! Symmetry and scaling invariants of the action, the linearizations and the
//! contraction map, checked on seeded random fields.

use higher_ground::contraction::{ContractionConfig, ContractionMap};
use higher_ground::groundstate::{
    action, align, minimize, nehari_residual, nehari_scale, GroundStateProblem, MinimizeConfig,
};
use higher_ground::linearization::{Linearization, Sign};
use higher_ground::nonlinearity::NonlinearityKind;
use higher_ground::spectral::{inner_product_hp, radial_defect, random_smooth_field, shift_and_phase, GridSpec};
use higher_ground::symbols::DispersionSymbol;
use proptest::prelude::*;

fn line_problem(eps: f64) -> GroundStateProblem {
    GroundStateProblem::new(
        DispersionSymbol::biharmonic(eps),
        NonlinearityKind::PowerNls { k: 1 },
        GridSpec::new(1, 128, 20.0).unwrap(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn action_is_gauge_and_translation_invariant(seed in 0u64..1000, cells in -30i64..30, theta in -3.0f64..3.0) {
        // Lattice shifts only: quadrature of the nonlinear term aliases under sub-cell shifts.
        let pb = line_problem(0.05);
        let u = random_smooth_field(*pb.grid(), seed, 3.0);
        let moved = shift_and_phase(&u, &[cells as f64 * pb.grid().dx()], theta).unwrap();
        let (a, b) = (action(&u, &pb).unwrap(), action(&moved, &pb).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn nehari_projection_lands_on_the_manifold(seed in 0u64..1000, eps in 0.0f64..0.2) {
        let pb = line_problem(eps);
        let u = random_smooth_field(*pb.grid(), seed, 3.0);
        let t = nehari_scale(&u, &pb).unwrap();
        prop_assert!(t > 0.0);
        prop_assert!(nehari_residual(&u.scale(t), &pb).unwrap() < 1e-12);
    }

    #[test]
    fn alignment_undoes_a_group_action(seed in 0u64..1000, cells in -10i64..10, frac in 0.0f64..1.0, theta in -3.0f64..3.0) {
        let pb = line_problem(0.0);
        let g = *pb.grid();
        let u = random_smooth_field(g, seed, 4.0);
        let a = (cells as f64 + frac) * g.dx();
        let moved = shift_and_phase(&u, &[a], theta).unwrap();
        let res = align(&moved, &u, pb.multiplier()).unwrap();
        prop_assert!(res.residual < 1e-10, "residual {}", res.residual);
    }

    #[test]
    fn linearizations_are_symmetric(seed in 0u64..1000, eps in 0.0f64..0.2) {
        let pb = line_problem(eps);
        let g = *pb.grid();
        let u = random_smooth_field(g, seed, 3.0);
        let (f, h) = (random_smooth_field(g, seed + 1, 2.0), random_smooth_field(g, seed + 2, 2.0));
        for sign in [Sign::Plus, Sign::Minus] {
            let lin = Linearization::new(sign, &u, &pb).unwrap();
            let lf = lin.apply_l(&f).unwrap().to_physical();
            let lh = lin.apply_l(&h).unwrap().to_physical();
            let (x, y) = (lf.dot_re(&h.to_physical()).unwrap(), lh.dot_re(&f.to_physical()).unwrap());
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1.0));
        }
    }
}

#[test]
fn contraction_map_preserves_radial_fields() {
    let g = GridSpec::new(1, 256, 40.0).unwrap();
    let kind = NonlinearityKind::PowerNls { k: 1 };
    let base = GroundStateProblem::new(DispersionSymbol::Laplacian, kind, g).unwrap();
    let q0 = minimize(&base, None, &MinimizeConfig::default()).unwrap().q;
    let pb = GroundStateProblem::new(DispersionSymbol::biharmonic(0.05), kind, g).unwrap();
    let cfg = ContractionConfig {
        beta0: Some(0.5),
        ..ContractionConfig::default()
    };
    let map = ContractionMap::new(&q0, &pb, &cfg).unwrap();
    for seed in 0..4 {
        let r = higher_ground::spectral::symmetrize_radial(&random_smooth_field(g, seed, 3.0).scale(1e-3));
        let (image, _) = map.apply(&r).unwrap();
        assert!(radial_defect(&image) < 1e-10, "seed {seed}");
        let ip = inner_product_hp(&image, &image, pb.multiplier()).unwrap();
        assert!(ip.re.is_finite());
    }
}
