//! Linear-systems algebra: polynomials, rational transfer functions, small
//! state-space realizations and unity-feedback stability analysis.

mod poly;
mod ss;
mod stability;
mod tf;

pub use poly::Polynomial;
pub use ss::{ss_to_tf, StateSpaceSISO};
pub use stability::{
    closed_loop_poles, critical_gain, gain_phase_margins, Margin, MarginPair, GAIN_CAP, OMEGA_MAX,
    OMEGA_MIN, OMEGA_POINTS,
};
pub use tf::{tf_add, tf_eval, tf_series, tf_sub, NearCancellation, RationalTF};

pub use num_complex::Complex64;
