//! Interchip spacing and tilt from the four corner distances of a
//! flip-chip module, and population statistics over fabrication runs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{series_stats, SeriesStats};

pub const DEFAULT_EDGE_MM: f64 = 12.0;
pub const DEFAULT_DIAGONAL_MM: f64 = 16.97;
/// Allowed mismatch between edge·√2 and the diagonal.
const DIAGONAL_TOL: f64 = 1e-3;

/// Corner order used throughout: SE, NE, SW, NW.
pub const CORNERS: [&str; 4] = ["SE", "NE", "SW", "NW"];
/// Corner index pairs sharing a chip edge.
pub const EDGE_PAIRS: [(usize, usize); 4] = [(0, 1), (1, 3), (3, 2), (2, 0)];
/// Corner index pairs across a diagonal.
pub const DIAGONAL_PAIRS: [(usize, usize); 2] = [(0, 3), (1, 2)];

fn default_edge() -> f64 {
    DEFAULT_EDGE_MM
}

fn default_diagonal() -> f64 {
    DEFAULT_DIAGONAL_MM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerMeasurements {
    pub run: String,
    pub module: String,
    /// Distances in μm, ordered SE, NE, SW, NW.
    pub z: [f64; 4],
    #[serde(default = "default_edge")]
    pub edge_mm: f64,
    #[serde(default = "default_diagonal")]
    pub diagonal_mm: f64,
    #[serde(default)]
    pub excluded: bool,
    #[serde(default)]
    pub reason: Option<String>,
}

impl CornerMeasurements {
    pub fn new(run: &str, module: &str, z: [f64; 4]) -> Self {
        Self {
            run: run.into(),
            module: module.into(),
            z,
            edge_mm: DEFAULT_EDGE_MM,
            diagonal_mm: DEFAULT_DIAGONAL_MM,
            excluded: false,
            reason: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(z) = self.z.iter().find(|z| !(z.is_finite() && **z > 0.0)) {
            return Err(Error::validation(format!(
                "{} {}: corner distance {z} must be positive",
                self.run, self.module
            )));
        }
        if !(self.edge_mm > 0.0 && self.diagonal_mm > 0.0) {
            return Err(Error::validation("edge and diagonal lengths must be positive"));
        }
        let expected = self.edge_mm * std::f64::consts::SQRT_2;
        if ((self.diagonal_mm - expected) / expected).abs() > DIAGONAL_TOL {
            return Err(Error::validation(format!(
                "diagonal {} mm is inconsistent with edge {} mm",
                self.diagonal_mm, self.edge_mm
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuleGeometry {
    /// Mean spacing, μm.
    pub d: f64,
    /// Largest corner-to-corner spacing difference, μm.
    pub delta_d: f64,
    /// Largest tilt over the six corner pairs, μrad.
    pub delta_theta: f64,
}

/// Mean spacing, spread and tilt of one module. Tilt uses the exact
/// |Δz|/s for each pair (μm/mm = mrad, reported in μrad).
pub fn module_geometry(c: &CornerMeasurements) -> Result<ModuleGeometry> {
    c.validate()?;
    let z = &c.z;
    let d = z.iter().sum::<f64>() / 4.0;
    let max = z.iter().copied().fold(f64::MIN, f64::max);
    let min = z.iter().copied().fold(f64::MAX, f64::min);
    let tilt = |pairs: &[(usize, usize)], s: f64| {
        pairs.iter().map(|&(i, j)| (z[i] - z[j]).abs() / s * 1e3).fold(0.0, f64::max)
    };
    let delta_theta = tilt(&EDGE_PAIRS, c.edge_mm).max(tilt(&DIAGONAL_PAIRS, c.diagonal_mm));
    Ok(ModuleGeometry { d, delta_d: max - min, delta_theta })
}

/// One module as transcribed: corners plus the tabulated geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleRecord {
    pub corners: CornerMeasurements,
    pub tabulated: ModuleGeometry,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    run: String,
    module: String,
    z_se: f64,
    z_ne: f64,
    z_sw: f64,
    z_nw: f64,
    d_tab: f64,
    dd_tab: f64,
    dtheta_tab: f64,
    excluded: bool,
    reason: Option<String>,
}

/// Reads CSV columns `run,module,z_se,z_ne,z_sw,z_nw,d_tab,dd_tab,dtheta_tab,excluded,reason`.
/// Lines starting with `#` are treated as comments.
pub fn load_module_records<R: std::io::Read>(reader: R) -> Result<Vec<ModuleRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<CsvRow>() {
        let r = row?;
        let corners = CornerMeasurements {
            excluded: r.excluded,
            reason: r.reason.filter(|s| !s.is_empty()),
            ..CornerMeasurements::new(&r.run, &r.module, [r.z_se, r.z_ne, r.z_sw, r.z_nw])
        };
        corners.validate()?;
        out.push(ModuleRecord {
            corners,
            tabulated: ModuleGeometry { d: r.d_tab, delta_d: r.dd_tab, delta_theta: r.dtheta_tab },
        });
    }
    Ok(out)
}

/// Which modules enter the statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionPolicy {
    /// Honour the per-record `excluded` flag.
    pub use_record_flags: bool,
    /// Drop every module of these fabrication runs.
    pub runs: BTreeSet<String>,
}

impl ExclusionPolicy {
    pub fn runs<I: IntoIterator<Item = S>, S: Into<String>>(runs: I) -> Self {
        Self { use_record_flags: false, runs: runs.into_iter().map(Into::into).collect() }
    }

    pub fn excludes(&self, c: &CornerMeasurements) -> bool {
        (self.use_record_flags && c.excluded) || self.runs.contains(&c.run)
    }
}

/// Whether statistics use the tabulated columns or geometry recomputed
/// from the corners.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometrySource {
    #[default]
    Tabulated,
    Corners,
}

/// A tabulated value that disagrees with the corner recomputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub run: String,
    pub module: String,
    pub quantity: String,
    pub tabulated: f64,
    pub recomputed: f64,
}

/// Mismatch thresholds: lengths in μm, tilt in μrad. Chosen above the
/// rounding of the printed columns.
pub const LENGTH_TOL_UM: f64 = 0.05;
pub const ANGLE_TOL_URAD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub d: SeriesStats,
    pub delta_d: SeriesStats,
    pub delta_theta: SeriesStats,
    pub included: Vec<String>,
    pub excluded: Vec<String>,
    pub source: GeometrySource,
    pub discrepancies: Vec<Discrepancy>,
}

/// Tabulated values that disagree with the geometry recomputed from the
/// corner columns.
pub fn find_discrepancies(records: &[ModuleRecord]) -> Result<Vec<Discrepancy>> {
    let mut out = Vec::new();
    for r in records {
        let g = module_geometry(&r.corners)?;
        let checks = [
            ("d", r.tabulated.d, g.d, LENGTH_TOL_UM),
            ("delta_d", r.tabulated.delta_d, g.delta_d, LENGTH_TOL_UM),
            ("delta_theta", r.tabulated.delta_theta, g.delta_theta, ANGLE_TOL_URAD),
        ];
        for (q, tab, rec, tol) in checks {
            if (tab - rec).abs() > tol {
                out.push(Discrepancy {
                    run: r.corners.run.clone(),
                    module: r.corners.module.clone(),
                    quantity: q.into(),
                    tabulated: tab,
                    recomputed: rec,
                });
            }
        }
    }
    Ok(out)
}

/// Mean and sample standard deviation of d, Δd and Δθ over the included
/// modules. Discrepancies between tabulated and recomputed geometry are
/// always reported, never reconciled.
pub fn population_stats(
    records: &[ModuleRecord],
    policy: &ExclusionPolicy,
    source: GeometrySource,
) -> Result<PopulationStats> {
    let mut vals: [Vec<f64>; 3] = Default::default();
    let (mut included, mut excluded) = (Vec::new(), Vec::new());
    for r in records {
        let id = format!("{} {}", r.corners.run, r.corners.module);
        if policy.excludes(&r.corners) {
            excluded.push(id);
            continue;
        }
        let g = match source {
            GeometrySource::Tabulated => r.tabulated,
            GeometrySource::Corners => module_geometry(&r.corners)?,
        };
        vals[0].push(g.d);
        vals[1].push(g.delta_d);
        vals[2].push(g.delta_theta);
        included.push(id);
    }
    if included.len() < 2 {
        return Err(Error::validation(format!("need at least 2 included modules, got {}", included.len())));
    }
    Ok(PopulationStats {
        d: series_stats(&vals[0])?,
        delta_d: series_stats(&vals[1])?,
        delta_theta: series_stats(&vals[2])?,
        included,
        excluded,
        source,
        discrepancies: find_discrepancies(records)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(run: &str, z: [f64; 4], tab: (f64, f64, f64)) -> ModuleRecord {
        ModuleRecord {
            corners: CornerMeasurements::new(run, "CQ1", z),
            tabulated: ModuleGeometry { d: tab.0, delta_d: tab.1, delta_theta: tab.2 },
        }
    }

    #[test]
    fn geometry_examples() {
        let g = module_geometry(&CornerMeasurements::new("FC2", "CQ1", [7.77, 7.81, 8.44, 8.48])).unwrap();
        assert!((g.d - 8.125).abs() < 1e-12);
        assert!((g.delta_d - 0.71).abs() < 1e-12);
        assert!((g.delta_theta - 55.83).abs() < 0.01);
        let g = module_geometry(&CornerMeasurements::new("FC1", "CQ1", [8.5, 7.8, 8.0, 8.5])).unwrap();
        assert!((g.delta_d - 0.7).abs() < 1e-12);
        assert!((g.delta_theta - 58.33).abs() < 0.01);
        let g = module_geometry(&CornerMeasurements::new("x", "y", [8.0; 4])).unwrap();
        assert_eq!((g.d, g.delta_d, g.delta_theta), (8.0, 0.0, 0.0));
    }

    #[test]
    fn diagonal_pair_can_dominate() {
        // SE and NW differ most and share no edge
        let g = module_geometry(&CornerMeasurements::new("x", "y", [11.33, 9.22, 9.14, 7.03])).unwrap();
        assert!((g.delta_theta - 4.3 / 16.97 * 1e3).abs() < 1e-9);
    }

    #[test]
    fn invalid_corners() {
        assert!(module_geometry(&CornerMeasurements::new("x", "y", [8.0, 0.0, 8.0, 8.0])).is_err());
        let mut c = CornerMeasurements::new("x", "y", [8.0; 4]);
        c.diagonal_mm = 20.0;
        assert!(module_geometry(&c).is_err());
    }

    #[test]
    fn stats_examples() {
        let a = rec("A", [7.0; 4], (7.0, 0.0, 0.0));
        let b = rec("B", [9.0; 4], (9.0, 0.0, 0.0));
        let s = population_stats(&[a.clone(), b], &ExclusionPolicy::default(), GeometrySource::Tabulated).unwrap();
        assert_eq!(s.d.mean, 8.0);
        assert!((s.d.std - 2f64.sqrt()).abs() < 1e-12);
        let s =
            population_stats(&[a.clone(), a.clone()], &ExclusionPolicy::default(), GeometrySource::Corners).unwrap();
        assert_eq!(s.d.std, 0.0);
        let err = population_stats(
            &[a.clone(), rec("B", [9.0; 4], (9.0, 0.0, 0.0))],
            &ExclusionPolicy::runs(["B"]),
            GeometrySource::Tabulated,
        );
        assert!(err.is_err());
    }

    #[test]
    fn record_flags_respected_only_when_asked() {
        let mut a = rec("A", [7.0; 4], (7.0, 0.0, 0.0));
        a.corners.excluded = true;
        let recs = [a, rec("B", [8.0; 4], (8.0, 0.0, 0.0)), rec("C", [9.0; 4], (9.0, 0.0, 0.0))];
        let all = population_stats(&recs, &ExclusionPolicy::default(), GeometrySource::Tabulated).unwrap();
        assert_eq!(all.included.len(), 3);
        let policy = ExclusionPolicy { use_record_flags: true, ..Default::default() };
        let some = population_stats(&recs, &policy, GeometrySource::Tabulated).unwrap();
        assert_eq!(some.excluded, vec!["A CQ1".to_string()]);
        assert_eq!(some.d.mean, 8.5);
    }

    #[test]
    fn discrepancy_reported() {
        let r = rec("FC6", [8.2, 7.0, 8.2, 7.7], (8.4, 1.2, 100.0));
        let found = find_discrepancies(&[r]).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].quantity, "d");
        assert!((found[0].recomputed - 7.775).abs() < 1e-12);
    }

    #[test]
    fn csv_loading() {
        let csv = "# comment\nrun,module,z_se,z_ne,z_sw,z_nw,d_tab,dd_tab,dtheta_tab,excluded,reason\nFC1,CQ1,8.5,7.8,8,8.5,8.2,0.7,58,true,optical microscope\nFC2,CQ1,7.77,7.81,8.44,8.48,8.13,0.71,56,false,\n";
        let recs = load_module_records(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].corners.excluded);
        assert_eq!(recs[0].corners.reason.as_deref(), Some("optical microscope"));
        assert_eq!(recs[1].corners.reason, None);
        assert_eq!(recs[1].tabulated.delta_theta, 56.0);
    }
}
