use super::scenarios::Scenario;
use super::ScenarioKind;

fn describe(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Ic2Sweep => {
            "Two-user symmetric interference channel: optimized rate-splitting symmetric rate against \
             treating interference as noise, full interference decoding and orthogonal access, swept over \
             INR/SNR at P|h_d|^2 = 1000."
        }
        ScenarioKind::RateRegion => {
            "Ergodic two-user rate region traced by weighted-sum-rate weight sweeps over [1e-3, 1e3]; \
             default setup M=4, K=2 MISO at SNR 20 dB, perfect CSIT."
        }
        ScenarioKind::MmfSweep => {
            "Max-min fair rate vs SNR under imperfect CSIT; default setup M=5, K=6 with 1-layer RS, SDMA, \
             one-group NOMA and three-group NOMA."
        }
        ScenarioKind::EeSweep => {
            "Energy efficiency vs transmit power with eta=0.35, P_dyn=27 dBm per antenna, P_sta=1 mW."
        }
        ScenarioKind::RegionMap => {
            "Two-user MISO operation map over channel strength disparity gamma and angle rho at SNR 20 dB: \
             which of SDMA, NOMA, OMA rate splitting reduces to, and the RS common-power fraction."
        }
        ScenarioKind::UplinkRegion => {
            "Two-user SISO uplink: reach points on the dominant face of the MAC capacity region by message \
             splitting and successive decoding, without time sharing."
        }
        ScenarioKind::MulticellEval => {
            "Coordinated multi-cell rate splitting (per-cell common streams decoded by every user) against \
             coordinated beamforming without common streams and fully cooperative 1-layer RS."
        }
    }
}

/// Every scenario kind with its description and default parameters.
pub fn list_scenarios() -> String {
    let mut s = String::new();
    for kind in ScenarioKind::ALL {
        s.push_str(kind.as_str());
        s.push('\n');
        s.push_str("  ");
        s.push_str(describe(kind));
        s.push('\n');
        s.push_str("  defaults: ");
        s.push_str(&Scenario::defaults(kind).to_string());
        s.push('\n');
    }
    s.push_str("common keys: kind, seed, [params], [optimizer]\n");
    s.push_str("  optimizer defaults: ");
    s.push_str(&serde_json::to_string(&crate::optimize::OptimizerConfig::default()).expect("serializes"));
    s.push('\n');
    s
}
