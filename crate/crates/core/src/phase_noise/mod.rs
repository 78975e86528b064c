//! Phase-noise spectra, time-domain synthesis and PLL filtering.

pub mod pll;
pub mod psd;
pub mod trace;

pub use pll::{
    cascade_if_pll, pll_filter_traces, pll_transfer, Biquad, IfStage, PllParams,
    SecondOrderLoop, DEFAULT_DAMPING,
};
pub use psd::{psd_eval, refer_to_output, F2Anchor, PhaseNoisePsd};
pub use trace::{gen_white_trace, gen_wiener_trace, synthesize_trace, PhaseTrace};
