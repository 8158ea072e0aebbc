//! Limiting objects: the magnetization fixed point, low-temperature
//! constants, the critical quartic family, eigenvalue-series laws and
//! log-partition asymptotics.

mod critical;
mod limits;
mod normalizer;
mod regime;

pub use critical::{log_normalizer, CriticalLaw, DEFAULT_GRID_POINTS};
pub use limits::{
    sample_limit_st, sample_v, sample_v_set, LimitSampleSet, VLimitLaw, DEFAULT_TRUNCATION,
};
pub use normalizer::{
    delta_logz_asymptotic, mle_critical_cdf, normalizing_shift_c, normalizing_shift_c_plus,
    NormalizerShift,
};
pub use regime::{fixed_point_residual, m_prime, sigma_sq, solve_m, Regime, RegimeTheory};
