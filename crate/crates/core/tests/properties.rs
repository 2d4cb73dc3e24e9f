use nalgebra::Vector3;
use proptest::prelude::*;
use streamsplat::geom::{rotation_exp, RigidPose};
use streamsplat::metrics::{loss_extrinsic, LossWeights};
use streamsplat::splat::{assemble, scale_factor, AlignmentMode, GaussianPrimitive, ScaleMeasure, WorldScene};

fn vec3(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-r..r).prop_map(Vector3::from)
}

fn pose() -> impl Strategy<Value = RigidPose> {
    (vec3(3.0), vec3(4.0)).prop_map(|(w, t)| RigidPose::new(rotation_exp(&w), t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extrinsic_loss_ignores_a_shared_world_transform(
        pred in prop::collection::vec(pose(), 2..6),
        gt_seed in prop::collection::vec(pose(), 6),
        a in pose(),
        b in pose(),
    ) {
        let gt = &gt_seed[..pred.len()];
        let w = LossWeights::default();
        let base = loss_extrinsic(&pred, gt, &w).unwrap();
        let moved_pred: Vec<_> = pred.iter().map(|p| a.compose(p)).collect();
        let moved_gt: Vec<_> = gt.iter().map(|p| b.compose(p)).collect();
        let moved = loss_extrinsic(&moved_pred, &moved_gt, &w).unwrap();
        prop_assert!((base - moved).abs() < 1e-9, "{base} vs {moved}");
    }

    #[test]
    fn assembled_means_do_not_depend_on_gt_scale(
        gt in prop::collection::vec(pose(), 8),
        pred in prop::collection::vec(pose(), 8),
        means in prop::collection::vec(vec3(2.0), 8),
        s in 0.05f64..20.0,
    ) {
        let locals: Vec<Vec<GaussianPrimitive>> = means
            .iter()
            .map(|m| vec![GaussianPrimitive::isotropic(*m, 0.1, 0.5, [0.5; 3])])
            .collect();
        let world = |scale: f64| {
            let scaled: Vec<_> = gt.iter().map(|p| p.with_scaled_translation(scale)).collect();
            let f = scale_factor(&scaled, &pred, AlignmentMode::PredictedScaleConsistent, ScaleMeasure::Translations).unwrap();
            assemble(WorldScene::new(), &locals, &scaled, f, 0).unwrap()
        };
        let (a, b) = (world(1.0), world(s));
        for (p, q) in a.iter().zip(b.iter()) {
            prop_assert!((p.mean - q.mean).norm() < 1e-9 * (1.0 + p.mean.norm()));
        }
    }
}
