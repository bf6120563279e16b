//! Comma-separated energy history.

use std::fmt::Write as _;

use crate::diagnostics::StepDiagnostics;

pub const BCP_HEADER: &str = "time,energy,mass,grad_w_sq,identity_residual,iterations";
pub const NS_HEADER: &str = "time,energy,mass,grad_w_sq,identity_residual,iterations,grad_u_sq,div_u";

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLog {
    coupled: bool,
    text: String,
    last_time: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl EnergyLog {
    /// Start a log with the initial energy and mass at `time`.
    pub fn new(coupled: bool, time: f64, energy: f64, mass: f64) -> Self {
        let mut text = String::from(if coupled { NS_HEADER } else { BCP_HEADER });
        text.push('\n');
        write!(text, "{time:e},{energy:e},{mass:e},,,0").unwrap();
        if coupled {
            text.push_str(",,");
        }
        text.push('\n');
        Self {
            coupled,
            text,
            last_time: time,
        }
    }

    /// Append a step row. Rows that do not advance time are dropped.
    pub fn push(&mut self, d: &StepDiagnostics) {
        if d.time <= self.last_time {
            return;
        }
        self.last_time = d.time;
        write!(
            self.text,
            "{:e},{:e},{:e},{:e},{},{}",
            d.time,
            d.energy,
            d.mass,
            d.grad_w_norm_sq,
            opt(d.energy_identity_residual),
            d.solver_iterations
        )
        .unwrap();
        if self.coupled {
            write!(self.text, ",{},{}", opt(d.grad_u_norm_sq), opt(d.div_u_norm)).unwrap();
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Parsed `(time, energy)` columns of a log, for plotting and checks.
pub fn read_energy_column(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty log")?;
    if header != BCP_HEADER && header != NS_HEADER {
        return Err(format!("unexpected header '{header}'"));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let mut it = l.split(',');
            let mut num = |name: &str| -> Result<f64, String> {
                it.next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| format!("row {}: bad {name}", i + 2))
            };
            Ok((num("time")?, num("energy")?))
        })
        .collect()
}
