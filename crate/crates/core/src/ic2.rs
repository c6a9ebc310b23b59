//! Two-user symmetric Gaussian interference channel with rate-splitting:
//! each transmitter puts a fraction `t` of its power on a common stream that
//! both receivers decode jointly (treating private streams as noise), then
//! each receiver decodes its own private stream treating the other as noise.

use serde::Serialize;

use crate::channel::IcChannel;
use crate::error::{param, Result, RsmaError};

/// Default cut-off `|h_c|^2 / |h_d|^2` below which interference is very weak.
pub const DEFAULT_VERY_WEAK_RATIO: f64 = 1e-3;
/// Default number of grid points for [`optimize_t`].
pub const DEFAULT_GRID_POINTS: usize = 1001;

/// Fraction of each transmitter's power put on its common stream.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct IcSplit(f64);

impl IcSplit {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return param(format!("power split t must lie in [0, 1], got {t}"));
        }
        Ok(Self(t))
    }

    pub fn t(self) -> f64 {
        self.0
    }

    pub const PRIVATE_ONLY: IcSplit = IcSplit(0.0);
    pub const COMMON_ONLY: IcSplit = IcSplit(1.0);
}

/// Right-hand sides of the three common-rate constraints; `sum` is already
/// halved so that all three bound the per-stream common rate directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommonBounds {
    pub own: f64,
    pub cross: f64,
    pub sum: f64,
}

impl CommonBounds {
    pub fn min(&self) -> f64 {
        self.own.min(self.cross).min(self.sum)
    }
}

pub fn common_rate_bounds(ch: &IcChannel, split: IcSplit) -> CommonBounds {
    let (p, t) = (ch.power, split.t());
    let (gd, gc) = (ch.gain_d(), ch.gain_c());
    let noise = 1.0 + (1.0 - t) * p * (gd + gc);
    CommonBounds {
        own: (1.0 + t * p * gd / noise).log2(),
        cross: (1.0 + t * p * gc / noise).log2(),
        sum: 0.5 * (1.0 + t * p * (gd + gc) / noise).log2(),
    }
}

pub fn private_rate(ch: &IcChannel, split: IcSplit) -> f64 {
    let q = (1.0 - split.t()) * ch.power;
    (1.0 + q * ch.gain_d() / (1.0 + q * ch.gain_c())).log2()
}

pub fn rs_symmetric_rate(ch: &IcChannel, split: IcSplit) -> f64 {
    private_rate(ch, split) + common_rate_bounds(ch, split).min()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RegimeTag {
    VeryWeak,
    Weak,
    Strong,
    VeryStrong,
}

impl RegimeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeTag::VeryWeak => "very_weak",
            RegimeTag::Weak => "weak",
            RegimeTag::Strong => "strong",
            RegimeTag::VeryStrong => "very_strong",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcRegime {
    pub tag: RegimeTag,
    /// `|h_d|^2`: lower edge of the strong regime in `|h_c|^2`.
    pub strong_threshold: f64,
    /// `|h_d|^2 (1 + P |h_d|^2)`: lower edge of the very strong regime.
    pub very_strong_threshold: f64,
}

/// Classify with the default very-weak ratio.
pub fn classify_regime(ch: &IcChannel) -> Result<IcRegime> {
    classify_regime_with(ch, DEFAULT_VERY_WEAK_RATIO)
}

/// Boundary points go to the stronger regime.
pub fn classify_regime_with(ch: &IcChannel, very_weak_ratio: f64) -> Result<IcRegime> {
    if !(ch.power > 0.0) {
        return param("regime classification needs P > 0");
    }
    let (gd, gc) = (ch.gain_d(), ch.gain_c());
    if gd == 0.0 {
        return Err(RsmaError::DegenerateChannel("direct gain h_d is zero".into()));
    }
    let strong = gd;
    let very_strong = gd * (1.0 + ch.power * gd);
    let tag = if gc >= very_strong {
        RegimeTag::VeryStrong
    } else if gc >= strong {
        RegimeTag::Strong
    } else if gc < very_weak_ratio * gd {
        RegimeTag::VeryWeak
    } else {
        RegimeTag::Weak
    };
    Ok(IcRegime {
        tag,
        strong_threshold: strong,
        very_strong_threshold: very_strong,
    })
}

/// Power policy of the orthogonal baseline, where each transmitter is active
/// on half of the resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum OrthogonalPower {
    /// Same transmit power `P` while active: `1/2 log2(1 + P |h_d|^2)`.
    #[default]
    SamePower,
    /// Power `2P` while active (same average energy): `1/2 log2(1 + 2P |h_d|^2)`.
    EnergyPreserving,
}

impl OrthogonalPower {
    pub fn as_str(self) -> &'static str {
        match self {
            OrthogonalPower::SamePower => "same_power",
            OrthogonalPower::EnergyPreserving => "energy_preserving",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baselines {
    pub orthogonal: f64,
    pub tin: f64,
    pub decode: f64,
}

pub fn baseline_rates(ch: &IcChannel) -> Baselines {
    baseline_rates_with(ch, OrthogonalPower::default())
}

pub fn baseline_rates_with(ch: &IcChannel, policy: OrthogonalPower) -> Baselines {
    let boost = match policy {
        OrthogonalPower::SamePower => 1.0,
        OrthogonalPower::EnergyPreserving => 2.0,
    };
    Baselines {
        orthogonal: 0.5 * (1.0 + boost * ch.power * ch.gain_d()).log2(),
        tin: rs_symmetric_rate(ch, IcSplit::PRIVATE_ONLY),
        decode: rs_symmetric_rate(ch, IcSplit::COMMON_ONLY),
    }
}

/// Maximize the symmetric rate over `t`: uniform grid, then golden-section
/// refinement inside the cells adjacent to the best grid point. The refined
/// point replaces the grid point only if it is strictly better, so endpoint
/// optima are returned exactly.
pub fn optimize_t(ch: &IcChannel, grid_points: usize) -> Result<(f64, f64)> {
    if grid_points < 2 {
        return param("optimize_t needs at least 2 grid points");
    }
    let step = 1.0 / (grid_points - 1) as f64;
    let at = |t: f64| rs_symmetric_rate(ch, IcSplit(t.clamp(0.0, 1.0)));
    let mut best = (0.0, at(0.0));
    for i in 1..grid_points {
        let t = if i == grid_points - 1 { 1.0 } else { i as f64 * step };
        let r = at(t);
        if r > best.1 {
            best = (t, r);
        }
    }
    let lo = (best.0 - step).max(0.0);
    let hi = (best.0 + step).min(1.0);
    let (t_ref, r_ref) = golden_section_max(at, lo, hi, 1e-7);
    if r_ref > best.1 {
        best = (t_ref, r_ref);
    }
    Ok(best)
}

pub(crate) fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 { (x1, f1) } else { (x2, f2) }
}
