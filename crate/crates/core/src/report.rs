use std::fmt;
use std::str::FromStr;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::lift::lift_table;
use crate::measures::{column_satisfies, MeasureKind};
use crate::prob::{compose_channel, Channel, JointDistribution};
use crate::watchdog::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MechanismKind {
    WatchdogComplete,
    WatchdogSubset,
    Aorr,
    Srr,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 4] = [
        MechanismKind::WatchdogComplete,
        MechanismKind::WatchdogSubset,
        MechanismKind::Aorr,
        MechanismKind::Srr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::WatchdogComplete => "watchdog-complete",
            Self::WatchdogSubset => "watchdog-subset",
            Self::Aorr => "aorr",
            Self::Srr => "srr",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mechanism `{s}`")))
    }
}

/// A synthesized channel with its utility and achieved leakage.
#[derive(Debug, Clone)]
pub struct MechanismReport {
    pub mechanism: MechanismKind,
    pub kind: MeasureKind,
    pub budget: Budget,
    /// Low-risk set and randomized groups, when the mechanism has them.
    pub partition: Option<Partition>,
    pub channel: Channel,
    /// `I(X; Y)` in nats.
    pub utility_mi: f64,
    /// `I(X; Y) / H(X)`.
    pub nmi: f64,
    /// `max_y log Λ(y)`.
    pub max_lift_leak: f64,
    /// `|min_y log Ψ(y)|`.
    pub min_lift_leak: f64,
    /// Every output meets the budget under `kind`.
    pub satisfied: bool,
    /// `(eps_bar_l, eps_bar_u)` of the last group when it could not be
    /// brought within budget.
    pub residual: Option<(f64, f64)>,
    /// Subset random response gave up on the polytope and used subset
    /// merging instead.
    pub fell_back: bool,
    /// Some group was too large for a full vertex search, so the channel
    /// may fall short of the optimum.
    pub truncated: bool,
}

/// Achieved leakage of a channel applied to `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assessment {
    pub max_lift_leak: f64,
    pub min_lift_leak: f64,
    pub satisfied: bool,
}

pub fn assess(
    j: &JointDistribution,
    channel: &Channel,
    kind: MeasureKind,
    b: &Budget,
) -> Result<Assessment> {
    let out = compose_channel(j, channel)?;
    let lt = lift_table(&out);
    let satisfied =
        (0..lt.n_outputs()).all(|y| column_satisfies(&lt.column(y), lt.prior(), kind, b));
    Ok(Assessment {
        max_lift_leak: lt.max_lift_leakage(),
        min_lift_leak: lt.min_lift_leakage(),
        satisfied,
    })
}

fn fmt_set(labels: &[String], members: &[usize]) -> String {
    let names: Vec<&str> = members.iter().map(|&x| labels[x].as_str()).collect();
    format!("{{{}}}", names.join(","))
}

impl MechanismReport {
    /// `key=value` lines describing the report.
    pub fn to_key_values(&self, labels: &[String]) -> String {
        let mut lines = vec![
            format!("mechanism={}", self.mechanism),
            format!("kind={}", self.kind.name()),
        ];
        if let Some(alpha) = self.kind.alpha() {
            lines.push(format!("alpha={alpha}"));
        }
        lines.push(format!("eps_l={}", self.budget.eps_l()));
        lines.push(format!("eps_u={}", self.budget.eps_u()));
        if let Some(p) = &self.partition {
            lines.push(format!("low_risk={}", fmt_set(labels, p.low_risk())));
            let groups: Vec<String> = p.groups().iter().map(|g| fmt_set(labels, g)).collect();
            lines.push(format!("groups={{{}}}", groups.join(",")));
        }
        lines.push(format!("outputs={}", self.channel.n_outputs()));
        lines.push(format!("utility_mi={}", crate::io::fmt_f64(self.utility_mi)));
        lines.push(format!("nmi={}", crate::io::fmt_f64(self.nmi)));
        lines.push(format!("max_lift_leak={}", crate::io::fmt_f64(self.max_lift_leak)));
        lines.push(format!("min_lift_leak={}", crate::io::fmt_f64(self.min_lift_leak)));
        lines.push(format!("satisfied={}", self.satisfied));
        if let Some((l, u)) = self.residual {
            lines.push(format!("residual_eps_l={}", crate::io::fmt_f64(l)));
            lines.push(format!("residual_eps_u={}", crate::io::fmt_f64(u)));
        }
        if self.fell_back {
            lines.push("fell_back=true".into());
        }
        if self.truncated {
            lines.push("truncated=true".into());
        }
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}
