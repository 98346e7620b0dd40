//! Noisy sampling and best linear unbiased reconstruction.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::SampleAllocation;
use crate::error::{invalid, Error, Result};
use crate::linalg::{sorted_symmetric_eigen, INVERTIBILITY_RTOL};
use crate::spectral::DesignRows;

/// Ordered node indices, repeats allowed. Row `t` of the sampling operator
/// picks node `S[t]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SamplingSequence(Vec<usize>);

impl SamplingSequence {
    pub fn new(nodes: Vec<usize>, n: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid("sampling sequence is empty"));
        }
        if let Some(&bad) = nodes.iter().find(|&&i| i >= n) {
            return Err(invalid(format!("sampled node {bad} outside 0..{n}")));
        }
        Ok(SamplingSequence(nodes))
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Per-node counts over `n` nodes.
    pub fn counts(&self, n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for &i in &self.0 {
            c[i] += 1;
        }
        c
    }
}

/// Node `i` repeated `m_i` times, in ascending node order.
pub fn sequence_from_allocation(alloc: &SampleAllocation) -> SamplingSequence {
    SamplingSequence(alloc.counts().iter().enumerate().flat_map(|(i, &m)| std::iter::repeat_n(i, m)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisySamples {
    pub values: DVector<f64>,
    pub noise_std: f64,
}

/// Which signal power an SNR is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrReference {
    /// Mean power of the sampled values, `mean_t f[S_t]^2`.
    #[default]
    Samples,
    /// Mean power of the whole signal, `||f||^2 / N`. The noise level then
    /// does not depend on where the signal is sampled.
    Signal,
}

impl std::str::FromStr for SnrReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "samples" => Ok(SnrReference::Samples),
            "signal" => Ok(SnrReference::Signal),
            other => Err(invalid(format!("unknown SNR reference `{other}` (expected samples or signal)"))),
        }
    }
}

/// Noise standard deviation for a target SNR in dB:
/// `sigma^2 = power / 10^{snr/10}`. Infinite SNR or a zero signal gives
/// zero noise.
pub fn noise_std_for_snr(f: &DVector<f64>, s: &SamplingSequence, snr_db: f64, reference: SnrReference) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let power = match reference {
        SnrReference::Samples => s.nodes().iter().map(|&i| f[i] * f[i]).sum::<f64>() / s.len() as f64,
        SnrReference::Signal => f.norm_squared() / f.len() as f64,
    };
    (power / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// `y = Psi f + sigma z` for a given standard-normal vector `z`.
pub fn apply_noise(
    f: &DVector<f64>,
    s: &SamplingSequence,
    snr_db: f64,
    reference: SnrReference,
    standard_noise: &[f64],
) -> Result<NoisySamples> {
    if standard_noise.len() < s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), found: standard_noise.len() });
    }
    check_nodes(f.len(), s)?;
    let sigma = noise_std_for_snr(f, s, snr_db, reference);
    let values = DVector::from_iterator(s.len(), s.nodes().iter().zip(standard_noise).map(|(&i, z)| f[i] + sigma * z));
    Ok(NoisySamples { values, noise_std: sigma })
}

/// Samples `f` at `s` with i.i.d. Gaussian noise at the given SNR.
pub fn sample_with_noise<R: Rng + ?Sized>(
    f: &DVector<f64>,
    s: &SamplingSequence,
    snr_db: f64,
    rng: &mut R,
) -> Result<NoisySamples> {
    if s.is_empty() {
        return Err(invalid("sampling sequence is empty"));
    }
    let z = standard_normal_vec(s.len(), rng);
    apply_noise(f, s, snr_db, SnrReference::Samples, &z)
}

pub fn standard_normal_vec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn check_nodes(n: usize, s: &SamplingSequence) -> Result<()> {
    match s.nodes().iter().find(|&&i| i >= n) {
        Some(&i) => Err(invalid(format!("sampled node {i} outside 0..{n}"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub coeff_estimate: DVector<f64>,
    pub signal_estimate: DVector<f64>,
    /// `||f' - f||_2`, filled in by callers holding the truth.
    pub error_l2: Option<f64>,
}

/// Inverse of the Gram matrix `V_MK^T V_MK` through its eigendecomposition,
/// refusing rank-deficient samplings.
fn gram_inverse(v_mk: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let gram = v_mk.tr_mul(v_mk);
    let (vals, vecs) = sorted_symmetric_eigen(&gram)?;
    let top = vals.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let rank = vals.iter().filter(|&&l| l > INVERTIBILITY_RTOL * top).count();
    if top == 0.0 || rank < k {
        return Err(Error::RankDeficientSampling { rank, bandwidth: k });
    }
    let inv_vals = vals.map(|l| 1.0 / l);
    Ok(&vecs * DMatrix::from_diagonal(&inv_vals) * vecs.transpose())
}

/// `f_K' = (V_MK^T V_MK)^{-1} V_MK^T y` and `f' = V_K f_K'`.
pub fn blue_estimate(rows: &DesignRows, s: &SamplingSequence, y: &DVector<f64>) -> Result<EstimateResult> {
    if y.len() != s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), found: y.len() });
    }
    check_nodes(rows.n(), s)?;
    let k = rows.k();
    if s.len() < k {
        return Err(Error::RankDeficientSampling { rank: s.len(), bandwidth: k });
    }
    let v_mk = rows.select(s.nodes());
    let coeff_estimate = gram_inverse(&v_mk, k)? * v_mk.tr_mul(y);
    let signal_estimate = rows.matrix() * &coeff_estimate;
    Ok(EstimateResult { coeff_estimate, signal_estimate, error_l2: None })
}

/// Scalarizations of the unit-noise error covariance
/// `E = V_K (V_MK^T V_MK)^{-1} V_K^T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceSummary {
    /// `tr(E)`, the expected squared reconstruction error.
    pub trace: f64,
    /// `lambda_max(E) = ||E||_2`.
    pub lambda_max: f64,
    /// `log det (V_MK^T V_MK)^{-1}`.
    pub log_det: f64,
}

pub fn error_covariance(rows: &DesignRows, s: &SamplingSequence) -> Result<CovarianceSummary> {
    check_nodes(rows.n(), s)?;
    let k = rows.k();
    let v_mk = rows.select(s.nodes());
    let gram = v_mk.tr_mul(&v_mk);
    let (vals, _) = sorted_symmetric_eigen(&gram)?;
    let top = vals.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let rank = vals.iter().filter(|&&l| l > INVERTIBILITY_RTOL * top).count();
    if top == 0.0 || rank < k {
        return Err(Error::RankDeficientSampling { rank, bandwidth: k });
    }
    Ok(CovarianceSummary {
        trace: vals.iter().map(|l| 1.0 / l).sum(),
        lambda_max: 1.0 / vals[0],
        log_det: -vals.iter().map(|l| l.ln()).sum::<f64>(),
    })
}

pub fn error_covariance_for_allocation(rows: &DesignRows, alloc: &SampleAllocation) -> Result<CovarianceSummary> {
    if alloc.n() != rows.n() {
        return Err(Error::DimensionMismatch { expected: rows.n(), found: alloc.n() });
    }
    error_covariance(rows, &sequence_from_allocation(alloc))
}

/// `||f_est - f_true||_2`.
pub fn reconstruction_error(f_true: &DVector<f64>, f_est: &DVector<f64>) -> Result<f64> {
    if f_true.len() != f_est.len() {
        return Err(Error::DimensionMismatch { expected: f_true.len(), found: f_est.len() });
    }
    Ok((f_est - f_true).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn alloc(c: &[usize]) -> SampleAllocation {
        SampleAllocation::new(c.to_vec()).unwrap()
    }

    #[test]
    fn sequence_from_counts() {
        assert_eq!(sequence_from_allocation(&alloc(&[2, 0, 1])).nodes(), &[0, 0, 2]);
        assert_eq!(sequence_from_allocation(&alloc(&[0, 4, 0])).nodes(), &[1, 1, 1, 1]);
        let s = sequence_from_allocation(&alloc(&[3, 1, 0, 2]));
        assert_eq!(s.counts(4), vec![3, 1, 0, 2]);
    }

    #[test]
    fn sequence_validation() {
        assert!(SamplingSequence::new(vec![], 3).is_err());
        assert!(SamplingSequence::new(vec![3], 3).is_err());
        assert!(SamplingSequence::new(vec![2, 2], 3).is_ok());
    }

    #[test]
    fn noiseless_and_zero_signal() {
        let f = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let s = SamplingSequence::new(vec![2, 0, 2], 3).unwrap();
        let y = sample_with_noise(&f, &s, f64::INFINITY, &mut seeded(1)).unwrap();
        assert_eq!(y.values.as_slice(), &[3.0, 1.0, 3.0]);
        assert_eq!(y.noise_std, 0.0);
        let zero = DVector::zeros(3);
        let y = sample_with_noise(&zero, &s, 10.0, &mut seeded(1)).unwrap();
        assert_eq!(y.noise_std, 0.0);
        assert_eq!(y.values.amax(), 0.0);
    }

    #[test]
    fn noise_level_matches_snr() {
        let f = DVector::from_element(4, 2.0);
        let s = SamplingSequence::new(vec![0, 1, 2, 3], 4).unwrap();
        assert!((noise_std_for_snr(&f, &s, 10.0, SnrReference::Samples) - 2.0 / 10f64.sqrt()).abs() < 1e-14);
        assert!((noise_std_for_snr(&f, &s, 0.0, SnrReference::Samples) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hand_least_squares() {
        let rows = DesignRows::new(DMatrix::from_element(4, 1, 0.5)).unwrap();
        let s = SamplingSequence::new(vec![0, 0], 4).unwrap();
        let est = blue_estimate(&rows, &s, &DVector::from_vec(vec![3.0, 5.0])).unwrap();
        assert!((est.coeff_estimate[0] - 8.0).abs() < 1e-12);
        assert!(est.signal_estimate.iter().all(|v| (v - 4.0).abs() < 1e-12));
    }

    #[test]
    fn too_few_samples_are_rank_deficient() {
        let rows = DesignRows::new(DMatrix::identity(3, 2)).unwrap();
        let s = SamplingSequence::new(vec![0], 3).unwrap();
        let err = blue_estimate(&rows, &s, &DVector::from_vec(vec![1.0])).unwrap_err();
        assert!(matches!(err, Error::RankDeficientSampling { rank: 1, bandwidth: 2 }));
        let s = SamplingSequence::new(vec![0, 0, 2], 3).unwrap();
        assert!(matches!(
            blue_estimate(&rows, &s, &DVector::from_vec(vec![1.0, 1.0, 1.0])),
            Err(Error::RankDeficientSampling { rank: 1, .. })
        ));
    }

    #[test]
    fn covariance_examples() {
        let rows = DesignRows::new(DMatrix::identity(2, 2)).unwrap();
        let c = error_covariance_for_allocation(&rows, &alloc(&[1, 1])).unwrap();
        assert!((c.trace - 2.0).abs() < 1e-14);
        assert!((c.lambda_max - 1.0).abs() < 1e-14);
        assert!(c.log_det.abs() < 1e-14);

        let n = 5;
        let rows = DesignRows::new(DMatrix::from_element(n, 1, (n as f64).sqrt().recip())).unwrap();
        let c = error_covariance_for_allocation(&rows, &alloc(&[3, 0, 2, 1, 0])).unwrap();
        assert!((c.trace - n as f64 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn error_norm() {
        let a = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(reconstruction_error(&a, &a).unwrap(), 0.0);
        let b = DVector::from_vec(vec![4.0, 6.0, 3.0]);
        assert!((reconstruction_error(&a, &b).unwrap() - 5.0).abs() < 1e-15);
        assert!(reconstruction_error(&a, &DVector::zeros(2)).is_err());
    }
}
