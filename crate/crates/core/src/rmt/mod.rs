//! Marchenko-Pastur closed forms and Monte-Carlo verification of the
//! asymptotic expansions used by eLDA.

mod transform;
mod verify;

pub use transform::{
    cauchy_derivatives, complex_step_derivative, mp_m1, mp_m2, mp_values_at_zero, mp_values_at_zero_numeric, mp_zm2,
    upper_half_plane_grid, MpParams, MpValuesAtZero,
};
pub use verify::{
    canonical_model, concentration_sweep, verify_concentration, verify_theta_clt, write_report, write_report_csv, CltReport,
    ConcentrationQuantity, ConcentrationReport, ConcentrationRow, ReportRow, REPORT_HEADER,
};
