//! Channel construction: the scalar interference-channel pair, downlink/uplink
//! matrix sets with an imperfect-CSIT split, multi-cell link grids, and the
//! fixed two-user geometry used for operation-region maps.
//!
//! Orientation: a user matrix is `M x N_k` with the transmitter dimension as
//! rows; the downlink received signal is `y_k = H_k^H x + n_k`. Noise variance
//! is 1 everywhere, so powers are SNRs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{dim, param, Result, RsmaError};
use crate::linalg::{fro2, CMat};

/// Symmetric two-user Gaussian interference channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcChannel {
    pub h_d: Complex64,
    pub h_c: Complex64,
    pub power: f64,
}

impl IcChannel {
    pub fn new(h_d: Complex64, h_c: Complex64, power: f64) -> Result<Self> {
        if !(power >= 0.0) || !power.is_finite() {
            return param(format!("IC power must be finite and >= 0, got {power}"));
        }
        if !(h_d.re.is_finite() && h_d.im.is_finite() && h_c.re.is_finite() && h_c.im.is_finite()) {
            return param("IC gains must be finite");
        }
        Ok(Self { h_d, h_c, power })
    }

    /// Build from squared magnitudes `|h_d|^2`, `|h_c|^2` with real gains.
    pub fn from_gains(gain_d: f64, gain_c: f64, power: f64) -> Result<Self> {
        if gain_d < 0.0 || gain_c < 0.0 {
            return param("squared gains must be >= 0");
        }
        Self::new(
            Complex64::new(gain_d.sqrt(), 0.0),
            Complex64::new(gain_c.sqrt(), 0.0),
            power,
        )
    }

    pub fn gain_d(&self) -> f64 {
        self.h_d.norm_sqr()
    }

    pub fn gain_c(&self) -> f64 {
        self.h_c.norm_sqr()
    }

    pub fn snr(&self) -> f64 {
        self.power * self.gain_d()
    }

    pub fn inr(&self) -> f64 {
        self.power * self.gain_c()
    }
}

/// One user's entry in a [`ChannelSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    pub rx: usize,
    pub true_channel: CMat,
    pub estimate: CMat,
    pub error_variance: f64,
    pub variance: f64,
}

impl UserChannel {
    /// Channel acquisition error `H - H_hat`.
    pub fn error(&self) -> CMat {
        &self.true_channel - &self.estimate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub tx: usize,
    pub users: Vec<UserChannel>,
}

impl ChannelSet {
    /// Perfect-CSIT set from true channels.
    pub fn from_true(tx: usize, channels: Vec<CMat>, variances: &[f64]) -> Result<Self> {
        if channels.len() != variances.len() {
            return dim("one variance per user required");
        }
        let users = channels
            .into_iter()
            .zip(variances)
            .map(|(h, &v)| UserChannel {
                rx: h.ncols(),
                estimate: h.clone(),
                true_channel: h,
                error_variance: 0.0,
                variance: v,
            })
            .collect();
        let set = Self { tx, users };
        set.validate()?;
        Ok(set)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx == 0 {
            return param("tx antennas must be >= 1");
        }
        if self.users.is_empty() {
            return param("channel set has no users");
        }
        for (k, u) in self.users.iter().enumerate() {
            if u.rx == 0 {
                return param(format!("user {k}: rx antennas must be >= 1"));
            }
            for (name, m) in [("true", &u.true_channel), ("estimate", &u.estimate)] {
                if m.nrows() != self.tx || m.ncols() != u.rx {
                    return dim(format!(
                        "user {k}: {name} channel is {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        self.tx,
                        u.rx
                    ));
                }
            }
            if !(u.variance > 0.0) {
                return param(format!("user {k}: variance must be > 0"));
            }
            if u.error_variance < 0.0 || u.error_variance > u.variance {
                return param(format!("user {k}: error variance outside [0, variance]"));
            }
        }
        Ok(())
    }

    pub fn true_channels(&self) -> Vec<&CMat> {
        self.users.iter().map(|u| &u.true_channel).collect()
    }

    /// The transmitter's view: estimates promoted to channels, zero error.
    pub fn design_view(&self) -> ChannelSet {
        let users = self
            .users
            .iter()
            .map(|u| UserChannel {
                rx: u.rx,
                true_channel: u.estimate.clone(),
                estimate: u.estimate.clone(),
                error_variance: 0.0,
                variance: u.variance,
            })
            .collect();
        ChannelSet { tx: self.tx, users }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ChannelSetDoc::from(self)).expect("channel set serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let doc: ChannelSetDoc = serde_json::from_value(v.clone())
            .map_err(|e| RsmaError::Parameter(format!("channel JSON: {e}")))?;
        doc.try_into()
    }
}

/// Link grid `links[k][j] = H_{kj}` from transmitter `j` to user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCellChannelSet {
    pub cells: usize,
    pub tx: usize,
    pub rx: usize,
    pub links: Vec<Vec<CMat>>,
}

impl MultiCellChannelSet {
    pub fn new(links: Vec<Vec<CMat>>) -> Result<Self> {
        let cells = links.len();
        if cells == 0 {
            return param("multi-cell set needs at least one cell");
        }
        let (tx, rx) = links[0].first().map(|m| (m.nrows(), m.ncols())).unwrap_or((0, 0));
        if tx == 0 || rx == 0 {
            return param("empty link matrix");
        }
        for row in &links {
            if row.len() != cells {
                return dim("link grid must be K x K");
            }
            for m in row {
                if m.nrows() != tx || m.ncols() != rx {
                    return dim("link matrices must share one M x N shape");
                }
            }
        }
        Ok(Self { cells, tx, rx, links })
    }

    pub fn link(&self, user: usize, cell: usize) -> &CMat {
        &self.links[user][cell]
    }
}

/// One Monte Carlo draw with its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct CsitSample {
    pub index: u64,
    pub seed: u64,
    pub channels: ChannelSet,
}

/// Per-sample seed from a base seed and an index (SplitMix64 finalizer over
/// both words), so samples can be drawn in any order or in parallel.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(base_seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub(crate) fn cn<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub(crate) fn cn_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for r in 0..rows {
        for col in 0..cols {
            m[(r, col)] = cn(rng, variance);
        }
    }
    m
}

/// i.i.d. Rayleigh channels, entry variance `variances[k]` for user `k`.
pub fn gen_rayleigh(seed: u64, tx: usize, rx_list: &[usize], variances: &[f64]) -> Result<ChannelSet> {
    if tx == 0 {
        return param("tx must be >= 1");
    }
    if rx_list.is_empty() {
        return param("rx_list must be nonempty");
    }
    if rx_list.len() != variances.len() {
        return dim(format!(
            "{} rx entries but {} variances",
            rx_list.len(),
            variances.len()
        ));
    }
    if let Some(v) = variances.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return param(format!("variances must be positive and finite, got {v}"));
    }
    let mut rng = rng_from(seed);
    let channels: Vec<CMat> = rx_list
        .iter()
        .zip(variances)
        .map(|(&n, &v)| cn_matrix(&mut rng, tx, n, v))
        .collect();
    ChannelSet::from_true(tx, channels, variances)
}

/// Error variance `sigma^2 * power^alpha_exponent` for one user.
pub fn csit_error_variance(variance: f64, alpha_exponent: f64, power: f64) -> f64 {
    variance * power.powf(alpha_exponent)
}

/// Split each user channel as `H = H_hat + H_tilde` with error entry variance
/// `sigma_k^2 * power^alpha_exponent`.
///
/// The true channel is kept and the estimate is drawn from its conditional
/// law given `H`: `H_hat = (1 - e/s) H + CN(0, e (s - e) / s)`, which yields the
/// same joint distribution as drawing independent estimate and error parts.
pub fn apply_csit_error(ch: &ChannelSet, alpha_exponent: f64, power: f64, seed: u64) -> Result<ChannelSet> {
    if !(power > 0.0) {
        return param("power must be > 0");
    }
    if !alpha_exponent.is_finite() {
        return param("alpha exponent must be finite");
    }
    let mut rng = rng_from(seed);
    let mut users = Vec::with_capacity(ch.users.len());
    for (k, u) in ch.users.iter().enumerate() {
        if u.error_variance != 0.0 {
            return param(format!("user {k}: CSIT error already applied"));
        }
        let s = u.variance;
        let e = csit_error_variance(s, alpha_exponent, power);
        if e > s {
            return param(format!(
                "user {k}: error variance {e} exceeds channel variance {s}"
            ));
        }
        let shrink = (s - e) / s;
        let cond_var = e * (s - e) / s;
        let noise = cn_matrix(&mut rng, ch.tx, u.rx, cond_var);
        let estimate = u.true_channel.map(|z| z * shrink) + noise;
        users.push(UserChannel {
            rx: u.rx,
            true_channel: u.true_channel.clone(),
            estimate,
            error_variance: e,
            variance: s,
        });
    }
    Ok(ChannelSet { tx: ch.tx, users })
}

/// Draw sample `index` of a Monte Carlo ensemble: Rayleigh channel plus
/// optional CSIT error (`alpha_exponent = None` keeps perfect CSIT).
pub fn sample_csit(
    base_seed: u64,
    index: u64,
    tx: usize,
    rx_list: &[usize],
    variances: &[f64],
    csit: Option<(f64, f64)>,
) -> Result<CsitSample> {
    let seed = derive_seed(base_seed, index);
    let mut channels = gen_rayleigh(seed, tx, rx_list, variances)?;
    if let Some((alpha, power)) = csit {
        channels = apply_csit_error(&channels, alpha, power, derive_seed(seed, u64::MAX))?;
    }
    Ok(CsitSample { index, seed, channels })
}

/// Fixed two-antenna geometry: `h1 = [1, 1]^H / sqrt(2)`,
/// `h2 = gamma [1, e^{j theta}]^H / sqrt(2)` with `gamma = 10^(gamma_db / 20)`.
pub fn geometry_2user(gamma_db: f64, theta: f64, tx: usize) -> Result<ChannelSet> {
    if tx != 2 {
        return param("the two-user geometry is defined for tx = 2");
    }
    if !gamma_db.is_finite() {
        return param("gamma_db must be finite");
    }
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return param(format!("theta must lie in [0, pi], got {theta}"));
    }
    let gamma = 10f64.powf(gamma_db / 20.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // Column vectors are the conjugate transposes of the row vectors.
    let h1 = CMat::from_column_slice(2, 1, &[Complex64::new(s, 0.0), Complex64::new(s, 0.0)]);
    let h2 = CMat::from_column_slice(
        2,
        1,
        &[
            Complex64::new(gamma * s, 0.0),
            Complex64::from_polar(gamma * s, -theta),
        ],
    );
    ChannelSet::from_true(2, vec![h1, h2], &[1.0, gamma * gamma])
}

/// `rho = 1 - |h1^H h2|^2 / (|h1|^2 |h2|^2)`; 0 for aligned, 1 for orthogonal.
pub fn channel_angle_rho(h1: &CMat, h2: &CMat) -> f64 {
    let inner = (h1.adjoint() * h2)[(0, 0)].norm_sqr();
    let denom = fro2(h1) * fro2(h2);
    if denom == 0.0 {
        return 1.0;
    }
    1.0 - inner / denom
}

/// `theta` giving a requested `rho` in the two-user geometry.
pub fn theta_for_rho(rho: f64) -> f64 {
    (1.0 - 2.0 * rho.clamp(0.0, 1.0)).clamp(-1.0, 1.0).acos()
}

/// Multi-cell Rayleigh grid: direct links variance `direct_var`, cross links
/// `cross_var`.
pub fn gen_multicell_rayleigh(
    seed: u64,
    cells: usize,
    tx: usize,
    rx: usize,
    direct_var: f64,
    cross_var: f64,
) -> Result<MultiCellChannelSet> {
    if cells == 0 || tx == 0 || rx == 0 {
        return param("cells, tx and rx must be >= 1");
    }
    if direct_var < 0.0 || cross_var < 0.0 {
        return param("variances must be >= 0");
    }
    let mut rng = rng_from(seed);
    let links = (0..cells)
        .map(|k| {
            (0..cells)
                .map(|j| cn_matrix(&mut rng, tx, rx, if j == k { direct_var } else { cross_var }))
                .collect()
        })
        .collect();
    MultiCellChannelSet::new(links)
}

#[derive(Serialize, Deserialize)]
struct ComplexDoc {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct UserDoc {
    rx: usize,
    #[serde(rename = "true")]
    true_channel: Vec<Vec<ComplexDoc>>,
    estimate: Vec<Vec<ComplexDoc>>,
    err_var: f64,
    #[serde(default = "one")]
    var: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
struct ChannelSetDoc {
    tx: usize,
    users: Vec<UserDoc>,
}

fn mat_rows(m: &CMat) -> Vec<Vec<ComplexDoc>> {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| ComplexDoc { re: m[(r, c)].re, im: m[(r, c)].im })
                .collect()
        })
        .collect()
}

fn rows_mat(rows: &[Vec<ComplexDoc>], tx: usize, rx: usize) -> Result<CMat> {
    if rows.len() != tx || rows.iter().any(|r| r.len() != rx) {
        return dim(format!("expected a {tx}x{rx} matrix in channel JSON"));
    }
    Ok(CMat::from_fn(tx, rx, |r, c| {
        Complex64::new(rows[r][c].re, rows[r][c].im)
    }))
}

impl From<&ChannelSet> for ChannelSetDoc {
    fn from(set: &ChannelSet) -> Self {
        Self {
            tx: set.tx,
            users: set
                .users
                .iter()
                .map(|u| UserDoc {
                    rx: u.rx,
                    true_channel: mat_rows(&u.true_channel),
                    estimate: mat_rows(&u.estimate),
                    err_var: u.error_variance,
                    var: u.variance,
                })
                .collect(),
        }
    }
}

impl TryFrom<ChannelSetDoc> for ChannelSet {
    type Error = RsmaError;

    fn try_from(doc: ChannelSetDoc) -> Result<Self> {
        let users = doc
            .users
            .iter()
            .map(|u| {
                Ok(UserChannel {
                    rx: u.rx,
                    true_channel: rows_mat(&u.true_channel, doc.tx, u.rx)?,
                    estimate: rows_mat(&u.estimate, doc.tx, u.rx)?,
                    error_variance: u.err_var,
                    variance: u.var,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let set = ChannelSet { tx: doc.tx, users };
        set.validate()?;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mean_power(m: &[CMat]) -> f64 {
        let n: usize = m.iter().map(|x| x.len()).sum();
        m.iter().map(fro2).sum::<f64>() / n as f64
    }

    #[test]
    fn rayleigh_unit_power_scalar() {
        let draws: Vec<CMat> = (0..100_000u64)
            .map(|i| gen_rayleigh(derive_seed(7, i), 1, &[1], &[1.0]).unwrap().users[0].true_channel.clone())
            .collect();
        let p = mean_power(&draws);
        assert!((p - 1.0).abs() < 0.02, "E|h|^2 = {p}");
    }

    #[test]
    fn rayleigh_disparate_variances() {
        let set = gen_rayleigh(11, 4, &[2, 2], &[1.0, 0.09]).unwrap();
        assert_eq!(set.users[0].true_channel.shape(), (4, 2));
        assert_eq!(set.users[1].true_channel.shape(), (4, 2));
        let weak: Vec<CMat> = (0..5000u64)
            .map(|i| gen_rayleigh(derive_seed(3, i), 4, &[2, 2], &[1.0, 0.09]).unwrap().users[1].true_channel.clone())
            .collect();
        let p = mean_power(&weak);
        assert!((p - 0.09).abs() < 0.09 * 0.05, "sample power {p}");
    }

    #[test]
    fn rayleigh_is_deterministic() {
        let a = gen_rayleigh(42, 3, &[1, 2], &[1.0, 0.5]).unwrap();
        let b = gen_rayleigh(42, 3, &[1, 2], &[1.0, 0.5]).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a.to_json()).unwrap(), serde_json::to_string(&b.to_json()).unwrap());
    }

    #[test]
    fn rayleigh_rejects_mismatch() {
        assert!(gen_rayleigh(1, 2, &[1, 1], &[1.0]).is_err());
        assert!(gen_rayleigh(1, 0, &[1], &[1.0]).is_err());
        assert!(gen_rayleigh(1, 2, &[], &[]).is_err());
        assert!(gen_rayleigh(1, 2, &[1], &[-1.0]).is_err());
    }

    #[test]
    fn csit_error_variance_examples() {
        let e = csit_error_variance(1.0, -0.6, 100.0);
        assert!((e - 100f64.powf(-0.6)).abs() < 1e-15);
        assert!((e - 0.0631).abs() < 1e-4);
        let base = gen_rayleigh(5, 2, &[1], &[1.0]).unwrap();
        let perfect = apply_csit_error(&base, -50.0, 100.0, 9).unwrap();
        assert!(perfect.users[0].error_variance < 1e-30);
        assert!(fro2(&perfect.users[0].error()) < 1e-20);
    }

    #[test]
    fn csit_all_error_gives_zero_estimate() {
        let base = gen_rayleigh(5, 2, &[1], &[1.0]).unwrap();
        let out = apply_csit_error(&base, 0.0, 1.0, 9).unwrap();
        assert_eq!(out.users[0].error_variance, 1.0);
        assert_eq!(fro2(&out.users[0].estimate), 0.0);
    }

    #[test]
    fn csit_rejects_growing_error() {
        let base = gen_rayleigh(5, 2, &[1], &[1.0]).unwrap();
        assert!(apply_csit_error(&base, 0.6, 100.0, 1).is_err());
        let once = apply_csit_error(&base, -0.6, 100.0, 1).unwrap();
        assert!(apply_csit_error(&once, -0.6, 100.0, 1).is_err());
    }

    #[test]
    fn csit_decomposition_and_statistics() {
        let (s, alpha, p) = (0.8, -0.6, 10.0);
        let e = csit_error_variance(s, alpha, p);
        let mut h = Vec::new();
        let mut est = Vec::new();
        let mut err = Vec::new();
        for i in 0..10_000u64 {
            let sample = sample_csit(77, i, 2, &[1], &[s], Some((alpha, p))).unwrap();
            let u = &sample.channels.users[0];
            let residual = &u.true_channel - (&u.estimate + u.error());
            assert!(fro2(&residual).sqrt() < 1e-12);
            h.push(u.true_channel.clone());
            est.push(u.estimate.clone());
            err.push(u.error());
        }
        let within = |got: f64, want: f64| (got - want).abs() <= 0.05 * want;
        assert!(within(mean_power(&h), s));
        assert!(within(mean_power(&est), s - e));
        assert!(within(mean_power(&err), e));
    }

    #[test]
    fn geometry_examples() {
        let aligned = geometry_2user(0.0, 0.0, 2).unwrap();
        assert!(fro2(&(&aligned.users[0].true_channel - &aligned.users[1].true_channel)) < 1e-30);
        let rho0 = channel_angle_rho(&aligned.users[0].true_channel, &aligned.users[1].true_channel);
        assert!(rho0.abs() < 1e-15);

        let orth = geometry_2user(0.0, PI, 2).unwrap();
        let rho1 = channel_angle_rho(&orth.users[0].true_channel, &orth.users[1].true_channel);
        assert!((rho1 - 1.0).abs() < 1e-15);

        let weak = geometry_2user(-20.0, 0.3, 2).unwrap();
        let ratio = fro2(&weak.users[1].true_channel) / fro2(&weak.users[0].true_channel);
        assert!((ratio - 0.01).abs() < 1e-15);
        assert!(geometry_2user(0.0, 0.1, 3).is_err());
    }

    #[test]
    fn geometry_rho_is_monotone_in_theta() {
        let mut last = -1.0;
        for i in 0..=200 {
            let theta = PI * i as f64 / 200.0;
            let set = geometry_2user(-3.0, theta, 2).unwrap();
            let rho = channel_angle_rho(&set.users[0].true_channel, &set.users[1].true_channel);
            assert!(rho > last, "rho not increasing at theta = {theta}");
            assert!((theta_for_rho(rho) - theta).abs() < 1e-6);
            last = rho;
        }
        assert!((last - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let set = apply_csit_error(&gen_rayleigh(2, 3, &[2, 1], &[1.0, 0.3]).unwrap(), -0.6, 100.0, 4).unwrap();
        let v = set.to_json();
        assert_eq!(v["tx"], 3);
        assert_eq!(v["users"][0]["true"].as_array().unwrap().len(), 3);
        assert_eq!(v["users"][0]["true"][0].as_array().unwrap().len(), 2);
        assert_eq!(ChannelSet::from_json(&v).unwrap(), set);
    }
}
