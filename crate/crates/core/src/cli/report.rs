//! Run reports in human and machine form.
//!
//! Both renderings are produced from the same ordered field list, so they
//! carry identical numbers. The machine form is one `key=value` pair per
//! line in the order below; `undefined` marks a value that does not exist
//! (for example a QBER with no sifted clicks).
//!
//! | keys | content |
//! |------|---------|
//! | `scenario`, `mode`, `sampler`, `seed`, `n_windows`, `total_windows`, `worker_streams` | run metadata |
//! | `mean_photons_per_window`, `count_rate_hz`, `transmittance`, `loss_db` | source and channel |
//! | `counts.<state>.<basis>.{correct,wrong,double,empty}` | per-setting tallies, states V H L R, bases VH LR |
//! | `sifted_correct`, `sifted_wrong`, `qber`, `qber_stderr`, `n_sifted` | estimate |
//! | `analytic_qber`, `qber_deviation_sigma`, `signal_rate_hz`, `dark_rate_total_hz`, `sifted_rate_hz` | analytic expectation |
//! | `secure`, `limiting_factor` | verdict |
//! | `reference.*`, `path.*` | published values, when the scenario has them |
//! | `check.bromine.*`, `check.table.<row>.*` | physics cross-checks |
//!
//! Wall-clock time is printed in the human form only, so machine output is
//! byte-identical between repeated runs.

use std::fmt::Write as _;

use crate::budget::{LinkBudgetReport, PathCrossCheck, ReferenceValues};
use crate::channel::{BromineCell, PathDeviation};
use crate::protocol::{QberEstimate, RunCounts};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Undefined,
}

impl Value {
    fn opt(v: Option<f64>) -> Value {
        v.map_or(Value::Undefined, Value::Num)
    }

    pub fn render(&self) -> String {
        match self {
            Value::Num(x) => format_number(*x),
            Value::Int(n) => n.to_string(),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Undefined => "undefined".into(),
        }
    }
}

/// Shortest round-trip representation, scientific for very small or large magnitudes.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return "undefined".into();
    }
    let mag = x.abs();
    if mag != 0.0 && !(1e-4..1e9).contains(&mag) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BromineCheck {
    pub cell: BromineCell,
    pub decadic: f64,
    pub natural: f64,
    pub measured: f64,
}

impl BromineCheck {
    /// True when neither absorbance convention reproduces the measurement within 10%.
    pub fn discrepant(&self) -> bool {
        let off = |x: f64| ((x - self.measured) / self.measured).abs() > 0.1;
        off(self.decadic) && off(self.natural)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub scenario: String,
    pub mode: &'static str,
    pub sampler: &'static str,
    pub seed: u64,
    pub n_windows: u64,
    pub total_windows: u64,
    pub worker_streams: usize,
    pub wall_time_s: f64,
    pub mean_photons_per_window: f64,
    pub count_rate_hz: f64,
    pub counts: RunCounts,
    pub sifted: (u64, u64),
    pub estimate: Option<QberEstimate>,
    pub budget: LinkBudgetReport,
    pub reference: Option<ReferenceValues>,
    pub path_check: Option<PathCrossCheck>,
    pub bromine: BromineCheck,
    pub table: Vec<PathDeviation>,
}

/// Relative deviation above which a table row counts as inconsistent.
pub const TABLE_DEVIATION_LIMIT: f64 = 0.01;

impl ReportDocument {
    /// Simulated minus analytic QBER in units of the simulated standard error.
    pub fn deviation_sigma(&self) -> Option<f64> {
        let est = self.estimate?;
        let expected = self.budget.expected_qber?;
        (est.stderr > 0.0).then(|| (est.qber - expected) / est.stderr)
    }

    /// Ordered `(key, value)` pairs shared by both renderings.
    pub fn fields(&self) -> Vec<(String, Value)> {
        let mut f: Vec<(String, Value)> = Vec::new();
        let mut push = |k: &str, v: Value| f.push((k.to_string(), v));

        push("scenario", Value::Text(self.scenario.clone()));
        push("mode", Value::Text(self.mode.into()));
        push("sampler", Value::Text(self.sampler.into()));
        push("seed", Value::Int(self.seed));
        push("n_windows", Value::Int(self.n_windows));
        push("total_windows", Value::Int(self.total_windows));
        push("worker_streams", Value::Int(self.worker_streams as u64));
        push("mean_photons_per_window", Value::Num(self.mean_photons_per_window));
        push("count_rate_hz", Value::Num(self.count_rate_hz));
        push("transmittance", Value::Num(self.budget.transmittance));
        push("loss_db", Value::Num(self.budget.loss_db));

        for (setting, cell) in self.counts.cells() {
            let prefix = format!("counts.{}.{}", setting.alice, setting.bob);
            push(&format!("{prefix}.correct"), Value::Int(cell.correct));
            push(&format!("{prefix}.wrong"), Value::Int(cell.wrong));
            push(&format!("{prefix}.double"), Value::Int(cell.double));
            push(&format!("{prefix}.empty"), Value::Int(cell.empty));
        }

        push("sifted_correct", Value::Int(self.sifted.0));
        push("sifted_wrong", Value::Int(self.sifted.1));
        push("qber", Value::opt(self.estimate.map(|e| e.qber)));
        push("qber_stderr", Value::opt(self.estimate.map(|e| e.stderr)));
        push("n_sifted", Value::Int(self.sifted.0 + self.sifted.1));
        push("analytic_qber", Value::opt(self.budget.expected_qber));
        push("qber_deviation_sigma", Value::opt(self.deviation_sigma()));
        push("signal_rate_hz", Value::Num(self.budget.signal_rate_hz));
        push("dark_rate_total_hz", Value::Num(self.budget.dark_rate_total_hz));
        push("sifted_rate_hz", Value::Num(self.budget.sifted_rate_hz));
        push("secure", Value::Bool(self.budget.secure));
        push("limiting_factor", Value::Text(self.budget.limiting_factor.as_str().into()));

        if let Some(r) = self.reference {
            push("reference.qber", Value::opt(r.qber));
            push("reference.loss_db", Value::Num(r.loss_db));
        }
        if let Some(p) = self.path_check {
            push("path.reported_km", Value::Num(p.reported_km));
            push("path.formula_km", Value::Num(p.formula_km));
        }

        push("check.bromine.pressure_hpa", Value::Num(self.bromine.cell.pressure_hpa));
        push("check.bromine.temperature_k", Value::Num(self.bromine.cell.temperature_k));
        push("check.bromine.path_m", Value::Num(self.bromine.cell.path_length_m));
        push("check.bromine.epsilon", Value::Num(self.bromine.cell.molar_absorptivity));
        push("check.bromine.decadic", Value::Num(self.bromine.decadic));
        push("check.bromine.natural", Value::Num(self.bromine.natural));
        push("check.bromine.measured", Value::Num(self.bromine.measured));
        push("check.bromine.discrepant", Value::Bool(self.bromine.discrepant()));

        for row in &self.table {
            let prefix = format!("check.table.{}", row.profile.slug());
            push(&format!("{prefix}.k_per_km"), Value::Num(row.profile.k_per_km));
            push(&format!("{prefix}.formula_km"), Value::Num(row.formula_km));
            push(&format!("{prefix}.reported_km"), Value::Num(row.reported_km));
            push(&format!("{prefix}.deviation"), Value::Num(row.relative_deviation()));
            push(
                &format!("{prefix}.flagged"),
                Value::Bool(row.relative_deviation().abs() > TABLE_DEVIATION_LIMIT),
            );
        }
        f
    }

    pub fn render_machine(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}={}", v.render());
        }
        out
    }

    pub fn render_human(&self) -> String {
        let fields = self.fields();
        let get = |key: &str| {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.render())
                .unwrap_or_default()
        };
        let mut out = String::new();
        let _ = writeln!(out, "BB84 run: {}", get("scenario"));
        let _ = writeln!(
            out,
            "  mode {} / sampler {} / seed {} / {} windows per setting ({} total) / {} streams / {:.3} s",
            get("mode"),
            get("sampler"),
            get("seed"),
            get("n_windows"),
            get("total_windows"),
            get("worker_streams"),
            self.wall_time_s
        );
        let _ = writeln!(
            out,
            "  source: mu = {} photons/window ({} Hz detected at t = 1)",
            get("mean_photons_per_window"),
            get("count_rate_hz")
        );
        let _ = writeln!(
            out,
            "  channel: transmittance {}, loss {} dB",
            get("transmittance"),
            get("loss_db")
        );

        let _ = writeln!(out, "\n  {:<6} {:<4} {:>12} {:>12} {:>12} {:>14}", "state", "bob", "correct", "wrong", "double", "empty");
        for (setting, _) in self.counts.cells() {
            let p = format!("counts.{}.{}", setting.alice, setting.bob);
            let _ = writeln!(
                out,
                "  {:<6} {:<4} {:>12} {:>12} {:>12} {:>14}{}",
                setting.alice.as_str(),
                setting.bob.as_str(),
                get(&format!("{p}.correct")),
                get(&format!("{p}.wrong")),
                get(&format!("{p}.double")),
                get(&format!("{p}.empty")),
                if setting.is_sifted() { "  sifted" } else { "" }
            );
        }

        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "  sifted: {} correct, {} wrong ({} total)",
            get("sifted_correct"),
            get("sifted_wrong"),
            get("n_sifted")
        );
        let _ = writeln!(out, "  QBER (simulated): {} +/- {}", get("qber"), get("qber_stderr"));
        let _ = writeln!(
            out,
            "  QBER (analytic):  {}  deviation {} sigma",
            get("analytic_qber"),
            get("qber_deviation_sigma")
        );
        let _ = writeln!(
            out,
            "  rates: signal {} Hz, dark {} Hz total, sifted {} Hz",
            get("signal_rate_hz"),
            get("dark_rate_total_hz"),
            get("sifted_rate_hz")
        );
        let _ = writeln!(
            out,
            "  verdict: secure = {} (limiting factor: {})",
            get("secure"),
            get("limiting_factor")
        );
        if self.reference.is_some() {
            let _ = writeln!(
                out,
                "  reference experiment: QBER {}, loss {} dB",
                get("reference.qber"),
                get("reference.loss_db")
            );
        }
        if self.path_check.is_some() {
            let _ = writeln!(
                out,
                "  equivalent path: published {} km, -ln(0.01)/k = {} km",
                get("path.reported_km"),
                get("path.formula_km")
            );
        }

        let _ = writeln!(out, "\n  cross-checks");
        let _ = writeln!(
            out,
            "    gas cell ({} hPa, {} K, {} m, epsilon {}): predicted {} (decadic) / {} (natural) vs measured {}{}",
            get("check.bromine.pressure_hpa"),
            get("check.bromine.temperature_k"),
            get("check.bromine.path_m"),
            get("check.bromine.epsilon"),
            get("check.bromine.decadic"),
            get("check.bromine.natural"),
            get("check.bromine.measured"),
            if self.bromine.discrepant() { "  DISCREPANT" } else { "" }
        );
        for row in &self.table {
            let p = format!("check.table.{}", row.profile.slug());
            let _ = writeln!(
                out,
                "    {:<20} k {:<8} formula {} km, published {} km, deviation {}{}",
                row.profile.slug(),
                get(&format!("{p}.k_per_km")),
                get(&format!("{p}.formula_km")),
                get(&format!("{p}.reported_km")),
                get(&format!("{p}.deviation")),
                if get(&format!("{p}.flagged")) == "true" { "  FLAGGED" } else { "" }
            );
        }
        out
    }
}
