//! Symbolic engine for Segre and Chern currents of singular hermitian metrics
//! with model analytic singularities, plus a small numerical cross-check
//! oracle.

pub mod ambient;
pub mod current;
pub mod error;
pub mod lelong;
pub mod metric;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod weight;

pub use ambient::{Ambient, BasePoint, ConstructibleSet, CoordCycle, CoordNames, Polarity};
pub use current::{
    king_reduce, normalize, rat, ratio, restrict_off, restrict_to, wedge, wedge_power, Coeff,
    Current, SmoothFactor, Term,
};
pub use error::{EngineError, Result};
pub use lelong::{lelong_number, theta_independence_check, ThetaIndependenceReport};
pub use oracle::{
    compare_to_symbolic, numeric_lelong, numeric_ma_mass, numeric_mixed_mass, rows_to_csv,
    standard_check, LelongEstimate, NumericWeight, OracleRow, QuadratureGrid, RegionShape,
    RegularizedWeight, CSV_HEADER,
};
pub use metric::{
    chern_current, compositions, degeneracy_locus, decomposition_shape_check, induced_weight, pushforward,
    segre_current, segre_product, smooth_segre_check, theta_current, DegeneracyLocus, MetricForm,
    MetricSpec, SegreCheckReport, SegreSymbol, Substitution, SymbolRules,
};
pub use report::{render_report, run_scenario, Outcome, Report, ReportFormat, ReportItem};
pub use scenario::{parse_scenario, ParseError, PointExpr, Request, ScenarioFile, SetExpr};
pub use weight::{
    bracket_apply, bracket_expand, bracket_power, ddc_atom, ddc_weight, ddc_weight_times,
    generalized_product, ma_power, unbounded_locus, Weight, WeightAtom,
};
