use fastderain::core::spectral::{Complex64, DirectDft3, Fft3};
use fastderain::core::{Dims, Tensor3};
use fastderain::RustFft3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_buf(dims: Dims, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dims.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

#[test]
fn matches_direct_transform_on_awkward_sizes() {
    // prime, odd and batch-straddling extents; 1 exercises skipped axes
    for (k, dims) in [
        Dims::new(3, 5, 7),
        Dims::new(8, 70, 2),
        Dims::new(13, 1, 6),
        Dims::new(2, 2, 67),
        Dims::new(65, 3, 3),
    ]
    .into_iter()
    .enumerate()
    {
        let x = random_buf(dims, k as u64);
        let mut fast = x.clone();
        let mut slow = x.clone();
        RustFft3::new().forward(dims, &mut fast);
        DirectDft3::new().forward(dims, &mut slow);
        let scale = (dims.len() as f64).sqrt();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-10 * scale, "{dims}: {a} vs {b}");
        }
    }
}

#[test]
fn inverse_undoes_forward() {
    let dims = Dims::new(9, 16, 5);
    let x = random_buf(dims, 42);
    let mut fft = RustFft3::new();
    let mut buf = x.clone();
    fft.forward(dims, &mut buf);
    fft.inverse(dims, &mut buf);
    for (a, b) in buf.iter().zip(&x) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn circulant_solve_agrees_between_backends() {
    let dims = Dims::new(6, 10, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rhs = Tensor3::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0));
    let spectrum = Tensor3::from_fn(dims, |i, j, k| 1.0 + (i + 2 * j + 3 * k) as f64 / 10.0);
    let a = RustFft3::new().solve_circulant(&rhs, &spectrum);
    let b = DirectDft3::new().solve_circulant(&rhs, &spectrum);
    assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
}
