//! Autocorrelation diagnostics, unit-root and cointegration tests, ARMA(1,1)
//! estimation and the bond-type spread forecast feature.

mod acf;
mod arma;
pub mod critical_values;
mod hybrid;
mod unit_root;

pub use acf::{acf, pacf};
pub use arma::{
    css_objective, css_residuals, fit_arma11, forecast_arma11, ArmaParams, COEFFICIENT_BOUND,
    GRADIENT_TOLERANCE,
};
pub use hybrid::{
    augment_with_ts_feature, build_group_arma_table, AugmentReport, GroupArmaEntry, GroupArmaTable,
    DEFAULT_SAMPLES_PER_GROUP, TS_FEATURE,
};
pub use unit_root::{
    adf_test, adf_test_at, df_statistic, engle_granger, engle_granger_at, regress_on, AdfResult,
    EgTestResult, DEFAULT_LEVEL,
};
