//! Achievable-rate evaluation and precoder optimization for rate-splitting
//! multiple access and its special cases (SDMA, NOMA, OMA, multicast) over
//! downlink, uplink, interference-channel and multi-cell settings.

pub mod channel;
pub mod error;
pub mod ic2;
pub mod linalg;
pub mod multicell;
pub mod optimize;
pub mod runner;
pub mod schemes;
pub mod uplink;

pub use channel::{ChannelSet, CsitSample, IcChannel, MultiCellChannelSet, UserChannel};
pub use error::{Result, RsmaError};
pub use optimize::{evaluate_metric, Metric, MetricKind};
pub use schemes::{build_layout, LayoutOptions, LayoutSpec, PrecoderSet, RateReport, SchemeKind, StreamLayout};
