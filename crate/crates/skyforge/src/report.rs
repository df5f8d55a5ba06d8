//! CSV tables and plain-text summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use skyforge_core::metrics::{ComputeSavings, EvalReport, PrPoint};
use skyforge_core::pipeline::{FilterReport, Verification};
use skyforge_core::surrogate::EpochStats;

pub fn pr_curve_csv(curve: &[PrPoint]) -> String {
    let mut s = String::from("threshold,precision,recall\n");
    for p in curve {
        writeln!(s, "{},{},{}", p.threshold, p.precision, p.recall).unwrap();
    }
    s
}

/// Rows of `count,frequency`, ascending by count.
pub fn histogram_csv(hist: &BTreeMap<usize, usize>) -> String {
    let mut s = String::from("count,frequency\n");
    for (k, v) in hist {
        writeln!(s, "{k},{v}").unwrap();
    }
    s
}

pub fn history_csv(history: &[EpochStats]) -> String {
    let mut s = String::from("epoch,loss,accuracy\n");
    for h in history {
        writeln!(s, "{},{},{}", h.epoch, h.loss, h.accuracy).unwrap();
    }
    s
}

pub fn eval_summary(r: &EvalReport) -> String {
    let c = &r.confusion;
    format!(
        "threshold {:.4}\naccuracy  {:.4}\nprecision {:.4}\nrecall    {:.4}\ntp {} fp {} tn {} fn {}\n",
        r.threshold, r.accuracy, r.precision, r.recall, c.tp, c.fp, c.tn, c.r#fn
    )
}

pub fn savings_summary(s: &ComputeSavings, minutes_per_eval: f64) -> String {
    format!(
        "simulator time at {minutes_per_eval} min/eval: {:.1} days unfiltered, {:.1} days filtered\n",
        s.days_unfiltered, s.days_filtered
    )
}

pub fn verification_summary(v: &Verification) -> String {
    let mut s = format!(
        "verified {} designs: {} hover ({:.1}%)\n",
        v.sample_size,
        v.n_hover,
        100.0 * v.hover_rate
    );
    s.push_str("propellers among hovering designs:\n");
    for (k, n) in &v.propeller_histogram {
        writeln!(s, "  {k:>3}: {n}").unwrap();
    }
    s.push_str("wings among hovering designs:\n");
    for (k, n) in &v.wing_histogram {
        writeln!(s, "  {k:>3}: {n}").unwrap();
    }
    s
}

pub fn filter_summary(r: &FilterReport, minutes_per_eval: f64) -> String {
    let mut s = format!(
        "proposed {} designs from index {}, kept {} ({:.1}%) at threshold {}\n",
        r.n_proposed,
        r.start_index,
        r.n_kept,
        100.0 * r.keep_rate(),
        r.threshold
    );
    s.push_str(&savings_summary(&r.compute, minutes_per_eval));
    if let Some(v) = &r.verification {
        s.push_str(&verification_summary(v));
    }
    s
}
