use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewTiming {
    pub view: String,
    pub render_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Wall-clock stage durations of one viz step, seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub step: u64,
    pub receive_s: f64,
    pub setup_s: f64,
    /// Sum of the per-view render times.
    pub render_s: f64,
    #[serde(default)]
    pub views: Vec<ViewTiming>,
    pub particles: usize,
}

impl TimingRecord {
    pub fn total_s(&self) -> f64 {
        self.receive_s + self.setup_s + self.render_s
    }

    pub fn images(&self) -> usize {
        self.views.iter().filter(|v| v.error.is_none()).count()
    }
}

/// Mean and population standard deviation of a stage over all viz steps,
/// and its share of the mean total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub mean_s: f64,
    pub std_s: f64,
    pub percent: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Per-run summary in the shape of a stage table: receive, setup and render
/// mean, std and percentage of the per-step total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_name: String,
    pub config_hash: String,
    pub sim_hash: String,
    pub ranks: usize,
    pub particles: usize,
    pub viz_steps: usize,
    pub images: u64,
    pub images_per_view: BTreeMap<String, u64>,
    pub receive: StageStats,
    pub setup: StageStats,
    pub render: StageStats,
    /// Mean of receive + setup + render per viz step.
    pub total_mean_s: f64,
    /// Render time summed over the whole run.
    pub render_total_s: f64,
    pub wall_s: f64,
    pub render_failures: usize,
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    pub fn from_records(run_name: &str, config_hash: &str, sim_hash: &str, ranks: usize, records: &[TimingRecord]) -> Self {
        let (rm, rs) = mean_std(records.iter().map(|r| r.receive_s));
        let (sm, ss) = mean_std(records.iter().map(|r| r.setup_s));
        let (dm, ds) = mean_std(records.iter().map(|r| r.render_s));
        let total = rm + sm + dm;
        let pct = |m: f64| if total > 0.0 { 100.0 * m / total } else { 0.0 };
        let mut images_per_view = BTreeMap::new();
        let mut failures = 0;
        for r in records {
            for v in &r.views {
                if v.error.is_none() {
                    *images_per_view.entry(v.view.clone()).or_insert(0) += 1;
                } else {
                    failures += 1;
                }
            }
        }
        Self {
            run_name: run_name.to_string(),
            config_hash: config_hash.to_string(),
            sim_hash: sim_hash.to_string(),
            ranks,
            particles: records.first().map_or(0, |r| r.particles),
            viz_steps: records.len(),
            images: images_per_view.values().sum(),
            images_per_view,
            receive: StageStats { mean_s: rm, std_s: rs, percent: pct(rm) },
            setup: StageStats { mean_s: sm, std_s: ss, percent: pct(sm) },
            render: StageStats { mean_s: dm, std_s: ds, percent: pct(dm) },
            total_mean_s: total,
            render_total_s: records.iter().map(|r| r.render_s).sum(),
            wall_s: 0.0,
            render_failures: failures,
            partial: false,
            error: None,
        }
    }

    /// Stage percentages; they sum to 100 whenever any time was recorded.
    pub fn percent_sum(&self) -> f64 {
        self.receive.percent + self.setup.percent + self.render.percent
    }

    /// Human-readable stage table.
    pub fn table(&self) -> String {
        let mut s = format!(
            "run {} ({} particles, {} ranks, {} viz steps, {} images)\n",
            self.run_name, self.particles, self.ranks, self.viz_steps, self.images
        );
        s.push_str(&format!("{:<8} {:>12} {:>12} {:>8}\n", "stage", "mean (s)", "std (s)", "%"));
        for (name, st) in [("receive", self.receive), ("setup", self.setup), ("render", self.render)] {
            s.push_str(&format!("{:<8} {:>12.6} {:>12.6} {:>8.1}\n", name, st.mean_s, st.std_s, st.percent));
        }
        s.push_str(&format!("{:<8} {:>12.6}\n", "total", self.total_mean_s));
        if self.partial {
            s.push_str(&format!("PARTIAL: {}\n", self.error.as_deref().unwrap_or("unknown error")));
        }
        s
    }
}

/// Reduction achieved by a surrogate-informed config over a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Savings {
    pub baseline_images: u64,
    pub informed_images: u64,
    /// `1 - informed / baseline`; 0 when the baseline renders nothing.
    pub image_savings: f64,
    pub baseline_render_s: f64,
    pub informed_render_s: f64,
    pub render_savings: f64,
}

fn fraction_saved(base: f64, informed: f64) -> f64 {
    if base > 0.0 {
        1.0 - informed / base
    } else {
        0.0
    }
}

pub fn compare_runs(baseline: &RunReport, informed: &RunReport) -> Result<Savings, PipelineError> {
    if baseline.sim_hash != informed.sim_hash {
        return Err(PipelineError::MismatchedRuns {
            baseline: baseline.sim_hash.clone(),
            informed: informed.sim_hash.clone(),
        });
    }
    Ok(Savings {
        baseline_images: baseline.images,
        informed_images: informed.images,
        image_savings: fraction_saved(baseline.images as f64, informed.images as f64),
        baseline_render_s: baseline.render_total_s,
        informed_render_s: informed.render_total_s,
        render_savings: fraction_saved(baseline.render_total_s, informed.render_total_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(step: u64, r: f64, s: f64, d: f64) -> TimingRecord {
        TimingRecord {
            step,
            receive_s: r,
            setup_s: s,
            render_s: d,
            views: vec![ViewTiming { view: "side".into(), render_s: d, error: None }],
            particles: 10,
        }
    }

    #[test]
    fn stage_table_percentages() {
        let rep = RunReport::from_records("t", "c", "s", 1, &[record(0, 0.052, 0.012, 0.16)]);
        assert!((rep.receive.percent - 23.2).abs() < 0.1);
        assert!((rep.setup.percent - 5.3).abs() < 0.1);
        assert!((rep.render.percent - 71.5).abs() < 0.1);
        assert!((rep.total_mean_s - 0.224).abs() < 1e-12);
        assert!((rep.percent_sum() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn empty_run_is_zero() {
        let rep = RunReport::from_records("t", "c", "s", 2, &[]);
        assert_eq!(rep.viz_steps, 0);
        assert_eq!(rep.total_mean_s, 0.0);
        assert_eq!(rep.images, 0);
    }

    #[test]
    fn savings_and_mismatch() {
        let a = RunReport::from_records("a", "c1", "s", 1, &[record(0, 0.1, 0.1, 0.4), record(20, 0.1, 0.1, 0.4)]);
        let b = RunReport::from_records("b", "c2", "s", 1, &[record(0, 0.1, 0.1, 0.4)]);
        let s = compare_runs(&a, &b).unwrap();
        assert_eq!(s.image_savings, 0.5);
        assert_eq!(compare_runs(&a, &a).unwrap().image_savings, 0.0);
        let none = RunReport::from_records("n", "c3", "s", 1, &[]);
        assert_eq!(compare_runs(&a, &none).unwrap().image_savings, 1.0);
        let mut other = b.clone();
        other.sim_hash = "x".into();
        assert!(compare_runs(&a, &other).is_err());
    }
}
