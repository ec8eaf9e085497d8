//! Gaussian fits of embedding sets and the Fréchet distance between them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::imaging::OctVolume;

use super::embedding::{Embedding, VolumeEmbedder};

/// Mean and unbiased covariance of a set of embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl GaussianStats {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = mu.len();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::DimMismatch(format!(
                "mean has {d} entries, covariance is {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let tol = 1e-9 * sigma.norm().max(f64::MIN_POSITIVE);
        if (&sigma - sigma.transpose()).amax() > tol {
            return Err(Error::NumericalFailure("covariance is not symmetric".into()));
        }
        Ok(Self { mu, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Two-pass mean and `(n - 1)`-normalised covariance, symmetrised. The
/// summation follows the input order.
pub fn gaussian_stats(set: &[Embedding]) -> Result<GaussianStats> {
    let n = set.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let d = set[0].dim();
    if let Some(bad) = set.iter().find(|e| e.dim() != d) {
        return Err(Error::DimMismatch(format!("embedding dim {} vs {d}", bad.dim())));
    }
    let mut mu = DVector::<f64>::zeros(d);
    for e in set {
        mu += DVector::from_column_slice(e.values());
    }
    mu /= n as f64;

    let mut centered = DMatrix::<f64>::zeros(d, n);
    for (j, e) in set.iter().enumerate() {
        for i in 0..d {
            centered[(i, j)] = e.values()[i] - mu[i];
        }
    }
    let s = &centered * centered.transpose() / (n - 1) as f64;
    let sigma = (&s + s.transpose()) * 0.5;
    Ok(GaussianStats { mu, sigma })
}

const EIGEN_MAX_ITER: usize = 100_000;

fn eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigendecomposition did not converge".into()))
}

/// Matrix square root from an eigendecomposition, negative eigenvalues
/// clamped to zero.
fn sqrt_from_eigen(e: &SymmetricEigen<f64, nalgebra::Dyn>) -> DMatrix<f64> {
    let roots = e.eigenvalues.map(|l| l.max(0.0).sqrt());
    let scaled = &e.eigenvectors * DMatrix::from_diagonal(&roots);
    let r = scaled * e.eigenvectors.transpose();
    (&r + r.transpose()) * 0.5
}

/// Adds `ε I`, `ε = 1e-6 · tr(Σ)/d`, when the spectrum has eigenvalues below
/// `-1e-8 ‖Σ‖`. Returns the (possibly shifted) matrix and its decomposition.
fn conditioned(sigma: &DMatrix<f64>) -> Result<(DMatrix<f64>, SymmetricEigen<f64, nalgebra::Dyn>)> {
    let e = eigen(sigma)?;
    let floor = -1e-8 * sigma.norm();
    if e.eigenvalues.iter().all(|&l| l >= floor) {
        return Ok((sigma.clone(), e));
    }
    let d = sigma.nrows();
    let eps = 1e-6 * sigma.trace().abs() / d as f64;
    let shifted = sigma + DMatrix::<f64>::identity(d, d) * eps;
    let e = eigen(&shifted)?;
    Ok((shifted, e))
}

/// `‖μa − μb‖² + tr Σa + tr Σb − 2 tr((Σa^½ Σb Σa^½)^½)`, clamped at zero.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    let (sa, ea) = conditioned(&a.sigma)?;
    let (sb, _) = conditioned(&b.sigma)?;
    let root_a = sqrt_from_eigen(&ea);
    let m = &root_a * &sb * &root_a;
    let m = (&m + m.transpose()) * 0.5;
    let em = eigen(&m)?;
    let tr_cross: f64 = em.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum();
    let diff = &a.mu - &b.mu;
    let d = diff.dot(&diff) + sa.trace() + sb.trace() - 2.0 * tr_cross;
    Ok(d.max(0.0))
}

/// Fréchet distance between two labelled embedding sets. Each set is put in
/// sample-id order before the statistics are accumulated, so the result does
/// not depend on the order of the inputs.
pub fn fvd_from_embeddings(pred: &[(String, Embedding)], gt: &[(String, Embedding)]) -> Result<f64> {
    let sorted = |set: &[(String, Embedding)]| {
        let mut v: Vec<&(String, Embedding)> = set.iter().collect();
        v.sort_by(|x, y| x.0.cmp(&y.0));
        v.into_iter().map(|(_, e)| e.clone()).collect::<Vec<_>>()
    };
    let a = gaussian_stats(&sorted(pred))?;
    let b = gaussian_stats(&sorted(gt))?;
    frechet_distance(&a, &b)
}

/// Set-level FVD between predicted and reference volumes under `embedder`.
pub fn fvd(
    pred_set: &[(String, OctVolume)],
    gt_set: &[(String, OctVolume)],
    embedder: &dyn VolumeEmbedder,
) -> Result<f64> {
    for set in [pred_set, gt_set] {
        if set.len() < 2 {
            return Err(Error::TooFewSamples(set.len()));
        }
    }
    let embed = |set: &[(String, OctVolume)]| {
        set.iter()
            .map(|(id, v)| Ok((id.clone(), embedder.embed(id, v)?)))
            .collect::<Result<Vec<_>>>()
    };
    fvd_from_embeddings(&embed(pred_set)?, &embed(gt_set)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats1(mu: f64, var: f64) -> GaussianStats {
        GaussianStats::new(DVector::from_element(1, mu), DMatrix::from_element(1, 1, var)).unwrap()
    }

    fn emb(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    #[test]
    fn stats_cases() {
        let s = gaussian_stats(&vec![emb(&[3.0, -1.0]); 5]).unwrap();
        assert_eq!(s.mu.as_slice(), &[3.0, -1.0]);
        assert!(s.sigma.iter().all(|&v| v == 0.0));

        let s = gaussian_stats(&[emb(&[0.0]), emb(&[2.0])]).unwrap();
        assert_eq!(s.mu[0], 1.0);
        assert_eq!(s.sigma[(0, 0)], 2.0);

        assert!(matches!(gaussian_stats(&[emb(&[1.0])]), Err(Error::TooFewSamples(1))));
        assert!(matches!(
            gaussian_stats(&[emb(&[1.0]), emb(&[1.0, 2.0])]),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn stats_against_textbook_variance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(2..60);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let set: Vec<Embedding> = xs.iter().map(|&x| emb(&[x])).collect();
            let s = gaussian_stats(&set).unwrap();
            assert!((s.sigma[(0, 0)] - var).abs() < 1e-12);
            assert!((s.mu[0] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn frechet_one_dimensional() {
        let a = stats1(0.0, 1.0);
        assert_eq!(frechet_distance(&a, &a).unwrap(), 0.0);
        assert!((frechet_distance(&a, &stats1(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-9);
        assert!((frechet_distance(&a, &stats1(0.0, 4.0)).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(
            frechet_distance(&a, &GaussianStats::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap()),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn asymmetric_covariance_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(GaussianStats::new(DVector::zeros(2), m).is_err());
    }

    #[test]
    fn singular_covariances_are_fine() {
        // n < d: rank-deficient covariance on both sides
        let a: Vec<Embedding> = (0..3).map(|i| emb(&[i as f64, 0.0, 1.0, 2.0 * i as f64])).collect();
        let b: Vec<Embedding> = (0..3).map(|i| emb(&[i as f64 + 0.5, 1.0, 1.0, i as f64])).collect();
        let sa = gaussian_stats(&a).unwrap();
        let sb = gaussian_stats(&b).unwrap();
        let d = frechet_distance(&sa, &sb).unwrap();
        assert!(d.is_finite() && d > 0.0);
        assert!(frechet_distance(&sa, &sa).unwrap() < 1e-9);
    }

    fn diag_oracle(mu_a: &[f64], va: &[f64], mu_b: &[f64], vb: &[f64]) -> f64 {
        (0..mu_a.len())
            .map(|i| (mu_a[i] - mu_b[i]).powi(2) + (va[i].sqrt() - vb[i].sqrt()).powi(2))
            .sum()
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn diag_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
            (1usize..8).prop_flat_map(|d| {
                (
                    proptest::collection::vec(-10.0..10.0f64, d),
                    proptest::collection::vec(0.0..9.0f64, d),
                    proptest::collection::vec(-10.0..10.0f64, d),
                    proptest::collection::vec(0.0..9.0f64, d),
                )
            })
        }

        proptest! {
            #[test]
            fn diagonal_closed_form((ma, va, mb, vb) in diag_case()) {
                let a = GaussianStats::new(DVector::from_vec(ma.clone()), DMatrix::from_diagonal(&DVector::from_vec(va.clone()))).unwrap();
                let b = GaussianStats::new(DVector::from_vec(mb.clone()), DMatrix::from_diagonal(&DVector::from_vec(vb.clone()))).unwrap();
                let want = diag_oracle(&ma, &va, &mb, &vb);
                let ab = frechet_distance(&a, &b).unwrap();
                let ba = frechet_distance(&b, &a).unwrap();
                prop_assert!((ab - want).abs() <= 1e-9 * want.max(1.0), "{} vs {}", ab, want);
                prop_assert!((ab - ba).abs() <= 1e-9 * want.max(1.0));
                prop_assert!(frechet_distance(&a, &a).unwrap() <= 1e-9);
            }

            #[test]
            fn symmetric_on_random_sets(seed in any::<u64>()) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let d = rng.random_range(1..6);
                let mut draw = |n: usize, shift: f64| -> Vec<Embedding> {
                    (0..n).map(|_| emb(&(0..d).map(|_| rng.random_range(-1.0..1.0) + shift).collect::<Vec<_>>())).collect()
                };
                let a = gaussian_stats(&draw(10, 0.0)).unwrap();
                let b = gaussian_stats(&draw(12, 0.3)).unwrap();
                let ab = frechet_distance(&a, &b).unwrap();
                let ba = frechet_distance(&b, &a).unwrap();
                prop_assert!(ab >= 0.0);
                prop_assert!((ab - ba).abs() <= 1e-9);
            }
        }
    }
}
