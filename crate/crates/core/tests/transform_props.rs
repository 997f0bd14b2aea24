use eife_core::mesh::{BoundaryKind, TensorMesh};
use eife_core::transforms::{
    axis_spectrum, build_axis_matrices, dense_forward_transform, dense_inverse_transform, transform_matrix,
};
use eife_core::{forward_transform, inverse_transform, TensorD};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rel_diff(a: &TensorD, b: &TensorD) -> f64 {
    let scale = b.max_abs().max(1e-300);
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

fn bc_strategy() -> impl Strategy<Value = BoundaryKind> {
    prop_oneof![Just(BoundaryKind::HomogeneousDirichlet), Just(BoundaryKind::Periodic)]
}

fn random_field(mesh: &TensorMesh, seed: u64) -> TensorD {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    TensorD::from_fn(&mesh.dof_shape(), |_| rng.random_range(-1.0..1.0))
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_and_dense_agreement(
        n in prop::collection::vec(2usize..=32, 1..=3),
        bc in bc_strategy(),
        seed in any::<u64>(),
    ) {
        let bounds: Vec<_> = n.iter().map(|&k| (0.0, 0.1 * k as f64)).collect();
        let mesh = TensorMesh::uniform(&bounds, &n, bc).unwrap();
        let u = random_field(&mesh, seed);
        let fwd = forward_transform(&u, &mesh).unwrap();
        let back = inverse_transform(&fwd, &mesh).unwrap();
        prop_assert!(rel_diff(&back, &u) < 1e-12);
        prop_assert!(rel_diff(&fwd, &dense_forward_transform(&u, &mesh).unwrap()) < 1e-12);
        prop_assert!(rel_diff(&back, &dense_inverse_transform(&fwd, &mesh).unwrap()) < 1e-12);
    }
}

#[test]
fn round_trip_at_64_cubed() {
    for bc in [BoundaryKind::HomogeneousDirichlet, BoundaryKind::Periodic] {
        let mesh = TensorMesh::uniform(&[(0.0, 1.0); 3], &[64, 64, 64], bc).unwrap();
        let u = random_field(&mesh, 7);
        let back = inverse_transform(&forward_transform(&u, &mesh).unwrap(), &mesh).unwrap();
        assert!(rel_diff(&back, &u) < 1e-12, "{bc:?}");
    }
}

#[test]
fn transform_diagonalizes_mass_and_stiffness() {
    for bc in [BoundaryKind::HomogeneousDirichlet, BoundaryKind::Periodic] {
        for n in 2..=32 {
            let mesh = TensorMesh::uniform(&[(0.5, 0.5 + 0.37 * n as f64)], &[n], bc).unwrap();
            let part = &mesh.partitions()[0];
            let (a, b) = build_axis_matrices(part, bc);
            let spec = axis_spectrum(part, bc);
            // eigenvectors are the rows of the forward transform
            let p = transform_matrix(n, bc).transpose();
            let la = DMatrix::from_diagonal(&spec.lambda_mass.clone().into());
            let lb = DMatrix::from_diagonal(&spec.lambda_stiff.clone().into());
            assert!(inf_norm(&(&a * &p - &p * la)) < 1e-10, "mass {bc:?} n={n}");
            assert!(inf_norm(&(&b * &p - &p * lb)) < 1e-10, "stiffness {bc:?} n={n}");
        }
    }
}
