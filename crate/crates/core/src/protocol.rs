// SPDX-License-Identifier: Apache-2.0

//! Control schedules for `(B(t), J(t))`.
//!
//! A [`Protocol`] is an ordered list of constant segments. Segments carry
//! durations rather than absolute times; breakpoints are derived on demand.
//! Every constructor validates the box constraint `0 ≤ B, J ≤ Λ` and drops
//! zero-duration segments.

use serde::{Deserialize, Serialize};

use crate::dynamics::{check_in_box, Case};
use crate::error::{ensure_finite, Error, Result};

/// Allowed mismatch between the declared total time and Σ durations.
pub const DURATION_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub dt: f64,
    pub b: f64,
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProtocolRecord", into = "ProtocolRecord")]
pub struct Protocol {
    tau: f64,
    case: Case,
    lambda: f64,
    segments: Vec<Segment>,
}

impl Protocol {
    /// Protocol in the unit box (`Λ = 1`).
    pub fn new(case: Case, segments: Vec<Segment>) -> Result<Self> {
        Self::with_bound(case, 1.0, segments)
    }

    pub fn with_bound(case: Case, lambda: f64, segments: Vec<Segment>) -> Result<Self> {
        ensure_finite("lambda", lambda)?;
        if lambda <= 0.0 {
            return Err(Error::invalid("lambda", "bound must be positive"));
        }
        let mut kept = Vec::with_capacity(segments.len());
        for (index, seg) in segments.into_iter().enumerate() {
            validate_segment(index, &seg, lambda)?;
            if seg.dt > 0.0 {
                kept.push(seg);
            }
        }
        let tau = kept.iter().map(|s| s.dt).sum();
        Ok(Self {
            tau,
            case,
            lambda,
            segments: kept,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Absolute start time of every segment followed by the total time.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut t = 0.0;
        out.push(t);
        for s in &self.segments {
            t += s.dt;
            out.push(t);
        }
        out
    }

    /// Splits every segment into `parts` equal pieces with the same controls.
    pub fn subdivide(&self, parts: usize) -> Result<Self> {
        if parts == 0 {
            return Err(Error::invalid("parts", "must be at least 1"));
        }
        let segments = self
            .segments
            .iter()
            .flat_map(|s| {
                std::iter::repeat(Segment {
                    dt: s.dt / parts as f64,
                    ..*s
                })
                .take(parts)
            })
            .collect();
        Self::with_bound(self.case, self.lambda, segments)
    }

    /// Maps a unit-box protocol onto `[0, Λ]` by scaling every coupling.
    pub fn scaled_to_bound(&self, lambda: f64) -> Result<Self> {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                dt: s.dt,
                b: s.b / self.lambda * lambda,
                j: s.j / self.lambda * lambda,
            })
            .collect();
        Self::with_bound(self.case, lambda, segments)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn validate_segment(index: usize, seg: &Segment, lambda: f64) -> Result<()> {
    if !seg.dt.is_finite() || seg.dt < 0.0 {
        return Err(Error::InvalidSegment {
            index,
            reason: format!("duration {} must be finite and nonnegative", seg.dt),
        });
    }
    for (name, v) in [("b", seg.b), ("j", seg.j)] {
        check_in_box(name, v, lambda).map_err(|e| Error::InvalidSegment {
            index,
            reason: e.to_string(),
        })?;
    }
    Ok(())
}

/// Wire format: `{"tau", "case", "segments": [{"dt", "b", "j"}]}`. The bound
/// is only written when it differs from 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProtocolRecord {
    tau: f64,
    case: Case,
    #[serde(default = "unit_bound", skip_serializing_if = "is_unit_bound")]
    lambda: f64,
    segments: Vec<Segment>,
}

fn unit_bound() -> f64 {
    1.0
}

fn is_unit_bound(x: &f64) -> bool {
    *x == 1.0
}

impl TryFrom<ProtocolRecord> for Protocol {
    type Error = Error;

    fn try_from(r: ProtocolRecord) -> Result<Self> {
        ensure_finite("tau", r.tau)?;
        let p = Protocol::with_bound(r.case, r.lambda, r.segments)?;
        if (p.tau - r.tau).abs() > DURATION_SUM_TOL * r.tau.abs().max(1.0) {
            return Err(Error::invalid(
                "tau",
                format!("declared {} but segment durations sum to {}", r.tau, p.tau),
            ));
        }
        Ok(Protocol { tau: r.tau, ..p })
    }
}

impl From<Protocol> for ProtocolRecord {
    fn from(p: Protocol) -> Self {
        Self {
            tau: p.tau,
            case: p.case,
            lambda: p.lambda,
            segments: p.segments,
        }
    }
}

/// `N` equal segments over `[0, τ]` with values `(b̃ₖ, j̃ₖ)`.
pub fn make_pwc(tau: f64, values: &[(f64, f64)], case: Case) -> Result<Protocol> {
    ensure_finite("tau", tau)?;
    if tau <= 0.0 {
        return Err(Error::invalid("tau", "must be positive"));
    }
    if values.is_empty() {
        return Err(Error::invalid("values", "need at least one segment"));
    }
    let dt = tau / values.len() as f64;
    let segments = values.iter().map(|&(b, j)| Segment { dt, b, j }).collect();
    let p = Protocol::new(case, segments)?;
    Ok(Protocol { tau, ..p })
}

/// `B(t) = 1 - t/τ`, `J(t) = t/τ`, sampled at segment midpoints.
pub fn linear_protocol(tau: f64, n_segments: usize, case: Case) -> Result<Protocol> {
    if n_segments == 0 {
        return Err(Error::invalid("n_segments", "must be at least 1"));
    }
    let n = n_segments as f64;
    let values: Vec<(f64, f64)> = (0..n_segments)
        .map(|k| {
            let s = (k as f64 + 0.5) / n;
            (1.0 - s, s)
        })
        .collect();
    make_pwc(tau, &values, case)
}

/// Bang-bang ansatz: `B` jumps 0 → 1 at `t_B`, `J` jumps 1 → 0 at `t_J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BangBangParams {
    pub tau: f64,
    #[serde(rename = "t_B")]
    pub t_b: f64,
    #[serde(rename = "t_J")]
    pub t_j: f64,
}

impl BangBangParams {
    pub fn new(tau: f64, t_b: f64, t_j: f64) -> Result<Self> {
        let p = Self { tau, t_b, t_j };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("tau", self.tau)?;
        ensure_finite("t_B", self.t_b)?;
        ensure_finite("t_J", self.t_j)?;
        if self.tau < 0.0 {
            return Err(Error::invalid("tau", "must be nonnegative"));
        }
        if !(0.0..=self.tau).contains(&self.t_b) {
            return Err(Error::invalid("t_B", format!("{} outside [0, τ]", self.t_b)));
        }
        if !(0.0..=self.tau).contains(&self.t_j) {
            return Err(Error::invalid("t_J", format!("{} outside [0, τ]", self.t_j)));
        }
        Ok(())
    }
}

pub fn bang_bang_protocol(p: &BangBangParams, case: Case) -> Result<Protocol> {
    p.validate()?;
    let (first, second) = if p.t_b <= p.t_j { (p.t_b, p.t_j) } else { (p.t_j, p.t_b) };
    let cuts = [0.0, first, second, p.tau];
    let segments = cuts
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            Segment {
                dt: w[1] - w[0],
                b: if mid >= p.t_b { 1.0 } else { 0.0 },
                j: if mid < p.t_j { 1.0 } else { 0.0 },
            }
        })
        .collect();
    let proto = Protocol::new(case, segments)?;
    Ok(Protocol { tau: p.tau, ..proto })
}
