use eat_qkd::linalg::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn ket(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| c(x)).collect()
}

#[test]
fn entropy_of_maximally_mixed_qubit_is_one() {
    let x = HermitianOperator::diag(&[0.5, 0.5]);
    assert!(close(von_neumann_entropy(&x).unwrap(), 1.0, 1e-14));
}

#[test]
fn entropy_of_pure_state_is_zero() {
    let x = HermitianOperator::projector(&ket(&[1.0, 0.0]));
    assert_eq!(von_neumann_entropy(&x).unwrap(), 0.0);
}

#[test]
fn entropy_of_quarter_three_quarters() {
    let x = HermitianOperator::diag(&[0.25, 0.75]);
    let oracle = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
    assert!(close(von_neumann_entropy(&x).unwrap(), oracle, 1e-14));
    assert!(close(oracle, 0.811278124459, 1e-11));
}

#[test]
fn entropy_rejects_negative_operator() {
    let x = HermitianOperator::diag(&[1.1, -0.1]);
    assert!(von_neumann_entropy(&x).is_err());
}

#[test]
fn hermitian_check_rejects_asymmetric_matrix() {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = c(1.0);
    assert!(HermitianOperator::new(m).is_err());
}

#[test]
fn subnormalized_entropy_is_not_renormalized() {
    // H(diag(0.25, 0.25)) = -2 * 0.25 log2 0.25 = 1.
    let x = HermitianOperator::diag(&[0.25, 0.25]);
    assert!(close(von_neumann_entropy(&x).unwrap(), 1.0, 1e-14));
}

#[test]
fn depolarize_zero_is_identity() {
    let rho = DensityOperator::pure(&ket(&[0.6, 0.8])).unwrap();
    let out = depolarize(&rho, 0.0).unwrap();
    assert!(frob(&(out.matrix() - rho.matrix())) < 1e-15);
}

#[test]
fn depolarize_one_is_maximally_mixed() {
    let rho = DensityOperator::pure(&ket(&[0.6, 0.0, 0.8])).unwrap();
    let out = depolarize(&rho, 1.0).unwrap();
    assert!(frob(&(out.matrix() - scale(&identity(3), 1.0 / 3.0))) < 1e-15);
}

#[test]
fn depolarize_half_on_zero_ket() {
    let rho = DensityOperator::pure(&ket(&[1.0, 0.0])).unwrap();
    let out = depolarize(&rho, 0.5).unwrap();
    let expect = HermitianOperator::diag(&[0.75, 0.25]);
    assert!(frob(&(out.matrix() - expect.matrix())) < 1e-15);
}

#[test]
fn depolarize_rejects_out_of_range() {
    let rho = DensityOperator::maximally_mixed(2);
    assert!(depolarize(&rho, -0.1).is_err());
    assert!(depolarize(&rho, 1.1).is_err());
}

#[test]
fn binary_entropy_values() {
    assert!(close(binary_entropy(0.5).unwrap(), 1.0, 1e-15));
    assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
    assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
    let oracle = -(0.11f64 * 0.11f64.log2() + 0.89 * 0.89f64.log2());
    assert!(close(binary_entropy(0.11).unwrap(), oracle, 1e-15));
    assert!(close(oracle, 0.499916, 1e-6));
    assert!(binary_entropy(1.5).is_err());
}

#[test]
fn kron_examples() {
    let i2 = HermitianOperator::identity(2);
    assert!(frob(&(kron(&i2, &i2).matrix() - identity(4))) < 1e-15);
    let p0 = HermitianOperator::projector(&ket(&[1.0, 0.0]));
    let p1 = HermitianOperator::projector(&ket(&[0.0, 1.0]));
    let p01 = HermitianOperator::projector(&ket(&[0.0, 1.0, 0.0, 0.0]));
    assert!(frob(&(kron(&p0, &p1).matrix() - p01.matrix())) < 1e-15);
    let z = HermitianOperator::diag(&[1.0, -1.0]);
    let s = 0.5f64.sqrt();
    let phi = DensityOperator::pure(&ket(&[s, 0.0, 0.0, s])).unwrap();
    assert!(close(kron(&z, &z).inner(phi.op()), 1.0, 1e-14));
}

#[test]
fn density_operator_rejects_negative_and_wrong_trace() {
    assert!(DensityOperator::state(HermitianOperator::diag(&[1.2, -0.2])).is_err());
    assert!(DensityOperator::state(HermitianOperator::diag(&[0.5, 0.4])).is_err());
    assert!(DensityOperator::new(HermitianOperator::diag(&[0.2, 0.3]), 0.5).is_ok());
}

#[test]
fn probability_vector_validation() {
    assert!(ProbabilityVector::new(vec![0.5, 0.5]).is_ok());
    assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
    assert!(ProbabilityVector::new(vec![1.1, -0.1]).is_err());
}

#[test]
fn real_embedding_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_mixed_state(&mut rng, 4);
    let e = real_embed(rho.matrix());
    let back = real_unembed(&(e / 2.0));
    assert!(frob(&(back - rho.matrix())) < 1e-14);
}

fn random_hermitian(seed: u64, d: usize) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = random_traceless_hermitian(&mut rng, d);
    // Give it a trace and sparsity so rank-deficient cases are covered too.
    if seed % 4 == 0 {
        let v = random_unit_vector(&mut rng, d);
        let col = DMatrix::from_column_slice(d, 1, &v);
        h = &col * col.adjoint();
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn entropy_is_unitarily_invariant(seed in 0u64..10_000, d in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(&mut rng, d, seed as usize);
        let u = {
            let g = CMat::from_fn(d, d, |_, _| {
                let v = random_unit_vector(&mut rng, 2);
                v[0] + v[1]
            });
            g.qr().q()
        };
        let a = von_neumann_entropy(rho.op()).unwrap();
        let b = von_neumann_entropy(&rho.op().conjugate_by(&u)).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn depolarize_preserves_trace_and_positivity(seed in 0u64..10_000, d in 2usize..7, p in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(&mut rng, d, seed as usize);
        let out = depolarize(&rho, p).unwrap();
        prop_assert!((trace_re(out.matrix()) - trace_re(rho.matrix())).abs() <= 1e-12);
        prop_assert!(out.op().is_psd(1e-12));
    }

    #[test]
    fn eigendecomposition_roundtrip(seed in 0u64..10_000, d in 2usize..50) {
        let h = random_hermitian(seed, d);
        let e = eigh(&h);
        let back = reconstruct(&e.vectors, &e.values);
        let rel = frob(&(back - &h)) / frob(&h).max(1e-300);
        prop_assert!(rel <= 1e-10, "relative error {rel}");
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}
