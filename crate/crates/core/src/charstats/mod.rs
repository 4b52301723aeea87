//! Fabrication and characterization statistics: module metrology, loss
//! budgets, frequency sensitivity and spacing sweeps.

pub mod geometry;
pub mod loss;
pub mod sensitivity;
pub mod sweep;

pub use geometry::{
    find_discrepancies, load_module_records, module_geometry, population_stats, CornerMeasurements, Discrepancy,
    ExclusionPolicy, GeometrySource, ModuleGeometry, ModuleRecord, PopulationStats,
};
pub use loss::{load_loss_budget, loss_q, participation_normalize, LossDomain};
pub use sensitivity::{frequency_sensitivity, Combination, Sensitivity, SensitivityInput};
pub use sweep::{spacing_sweep, RelativeChange, SweepReport, SweepSample, SweepSpec};
