//! Flat `key = value` configuration files and run snapshots.
//!
//! One setting per line; blank lines and lines starting with `#` are
//! ignored. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::drivers::DriverConfig;
use crate::error::{Error, Result};
use crate::harness::{Algorithm, ExperimentPlan, Fraction};

pub type Settings = BTreeMap<String, String>;

pub fn parse_settings(text: &str) -> Result<Settings> {
    let mut out = Settings::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("line {}: expected key = value", lineno + 1))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn render_settings(settings: &Settings) -> String {
    settings.iter().fold(String::new(), |mut s, (k, v)| {
        let _ = writeln!(s, "{k} = {v}");
        s
    })
}

pub(crate) fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Applies a driver setting. Returns `Ok(false)` if `key` is not a driver key.
pub fn apply_driver_setting(cfg: &mut DriverConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "omega" => cfg.omega = parse_value(key, value)?,
        "support_size" => {
            cfg.support_size = if value.eq_ignore_ascii_case("auto") {
                None
            } else {
                Some(parse_value(key, value)?)
            }
        }
        "max_newton_iters" => cfg.max_newton_iters = parse_value(key, value)?,
        "root_tol" => cfg.root_tol = parse_value(key, value)?,
        "iteration_budget" => {
            cfg.iteration_budget = if value.eq_ignore_ascii_case("none") {
                None
            } else {
                Some(parse_value(key, value)?)
            }
        }
        "spg_max_iterations" => cfg.spg.max_iterations = parse_value(key, value)?,
        "optimality_tol" => cfg.spg.optimality_tol = parse_value(key, value)?,
        "nonmonotone_memory" => cfg.spg.nonmonotone_memory = parse_value(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

pub fn driver_settings(cfg: &DriverConfig, out: &mut Settings) {
    out.insert("omega".into(), format!("{:?}", cfg.omega));
    out.insert(
        "support_size".into(),
        cfg.support_size.map_or("auto".into(), |k| k.to_string()),
    );
    out.insert("max_newton_iters".into(), cfg.max_newton_iters.to_string());
    out.insert("root_tol".into(), format!("{:?}", cfg.root_tol));
    out.insert(
        "iteration_budget".into(),
        cfg.iteration_budget
            .map_or("none".into(), |b| b.to_string()),
    );
    out.insert(
        "spg_max_iterations".into(),
        cfg.spg.max_iterations.to_string(),
    );
    out.insert(
        "optimality_tol".into(),
        format!("{:?}", cfg.spg.optimality_tol),
    );
    out.insert(
        "nonmonotone_memory".into(),
        cfg.spg.nonmonotone_memory.to_string(),
    );
}

/// Overrides `plan` fields from `settings`; unknown keys are an error.
pub fn apply_plan_settings(plan: &mut ExperimentPlan, settings: &Settings) -> Result<()> {
    for (key, value) in settings {
        let key = key.as_str();
        match key {
            "N" => plan.signal_len = parse_value(key, value)?,
            "n_fractions" => plan.n_fractions = parse_list::<Fraction>(key, value)?,
            "sparsity_ratios" => plan.sparsity_ratios = parse_list(key, value)?,
            "trials" => plan.trials = parse_value(key, value)?,
            "algorithms" => plan.algorithms = parse_list::<Algorithm>(key, value)?,
            "seed" => plan.seed_base = parse_value(key, value)?,
            "success_threshold" => plan.success_threshold = parse_value(key, value)?,
            "epsilon_rel" => plan.epsilon_rel = parse_value(key, value)?,
            "record_wall_time" => plan.record_wall_time = parse_value(key, value)?,
            "irw_outer_iters" => plan.irw.outer_iters = parse_value(key, value)?,
            "irw_delta" => plan.irw.delta = parse_value(key, value)?,
            _ => {
                if !apply_driver_setting(&mut plan.driver, key, value)? {
                    return Err(Error::InvalidArgument(format!("unknown setting '{key}'")));
                }
            }
        }
    }
    Ok(())
}

/// Every plan field, defaults included.
pub fn plan_settings(plan: &ExperimentPlan) -> Settings {
    let mut s = Settings::new();
    s.insert("N".into(), plan.signal_len.to_string());
    s.insert("n_fractions".into(), join(&plan.n_fractions));
    s.insert(
        "sparsity_ratios".into(),
        plan.sparsity_ratios
            .iter()
            .map(|r| format!("{r:?}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    s.insert("trials".into(), plan.trials.to_string());
    s.insert("algorithms".into(), join(&plan.algorithms));
    s.insert("seed".into(), plan.seed_base.to_string());
    s.insert(
        "success_threshold".into(),
        format!("{:?}", plan.success_threshold),
    );
    s.insert("epsilon_rel".into(), format!("{:?}", plan.epsilon_rel));
    s.insert("record_wall_time".into(), plan.record_wall_time.to_string());
    s.insert("irw_outer_iters".into(), plan.irw.outer_iters.to_string());
    s.insert("irw_delta".into(), format!("{:?}", plan.irw.delta));
    driver_settings(&plan.driver, &mut s);
    s
}
