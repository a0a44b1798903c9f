//! Randomized numeric equality oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{eval_tracked, EvalError, Point};
use crate::expr::{Expr, Symbol};

/// Resamples allowed per sample before the box is declared singular.
pub const MAX_RETRIES: usize = 10;
/// Width of the excluded neighbourhood around poles and log branch points.
pub const GUARD: f64 = 1e-3;
/// Multiplier on the propagated rounding-error bound.
const ROUNDING_FACTOR: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualityConfig {
    pub samples: usize,
    pub half_width: f64,
    pub rtol: f64,
    pub atol: f64,
    pub seed: u64,
}

impl Default for EqualityConfig {
    fn default() -> Self {
        EqualityConfig { samples: 25, half_width: 2.0, rtol: 1e-9, atol: 1e-12, seed: 0 }
    }
}

impl EqualityConfig {
    pub fn with_seed(seed: u64) -> Self {
        EqualityConfig { seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::InvalidInput("sample count must be at least 1".into()));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.half_width > 0.0) {
            return Err(Error::InvalidInput("tolerances and box half-width must be positive".into()));
        }
        Ok(())
    }

    /// Same tolerances, different seed stream.
    pub fn reseeded(&self, salt: u64) -> Self {
        EqualityConfig { seed: self.seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(salt), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub point: Vec<(String, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub equal: bool,
    pub samples: usize,
    pub worst: Option<Sample>,
}

impl OracleReport {
    fn trivially_equal() -> Self {
        OracleReport { equal: true, samples: 0, worst: None }
    }

    /// Ratio of the worst discrepancy to its allowance; above 1 means unequal.
    pub fn worst_ratio(&self) -> f64 {
        self.worst.as_ref().map_or(0.0, |s| if s.allowed > 0.0 { s.diff / s.allowed } else { f64::INFINITY })
    }

    pub fn worst_diff(&self) -> f64 {
        self.worst.as_ref().map_or(0.0, |s| s.diff)
    }

    /// Keep whichever of two reports is worse; verdicts combine by conjunction.
    pub fn merge(self, other: OracleReport) -> OracleReport {
        let equal = self.equal && other.equal;
        let samples = self.samples + other.samples;
        let worst = if other.worst_ratio() > self.worst_ratio() { other.worst } else { self.worst };
        OracleReport { equal, samples, worst }
    }
}

/// Uniform sampler on the box `[-h, h]^k` over a sorted symbol list.
pub struct Sampler {
    rng: ChaCha8Rng,
    symbols: Vec<Symbol>,
    half_width: f64,
}

impl Sampler {
    pub fn new(cfg: &EqualityConfig, symbols: Vec<Symbol>) -> Self {
        let mut symbols = symbols;
        symbols.sort();
        symbols.dedup();
        Sampler { rng: ChaCha8Rng::seed_from_u64(cfg.seed), symbols, half_width: cfg.half_width }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn draw(&mut self) -> Point {
        let h = self.half_width;
        self.symbols.iter().map(|s| (s.clone(), self.rng.random_range(-h..h))).collect()
    }

    /// Draw a point where every expression evaluates regularly.
    pub fn draw_regular(&mut self, exprs: &[&Expr]) -> Result<Point> {
        for _ in 0..=MAX_RETRIES {
            let p = self.draw();
            let mut ok = true;
            for e in exprs {
                match eval_tracked(e, &p, GUARD) {
                    Ok(_) => {}
                    Err(EvalError::Singular) => {
                        ok = false;
                        break;
                    }
                    Err(EvalError::Unbound(s)) => return Err(Error::Unbound(s.to_string())),
                }
            }
            if ok {
                return Ok(p);
            }
        }
        Err(Error::SingularOnBox)
    }
}

pub fn union_symbols(exprs: &[&Expr]) -> Vec<Symbol> {
    let mut v: Vec<Symbol> = exprs.iter().flat_map(|e| e.symbols().iter().cloned()).collect();
    v.sort();
    v.dedup();
    v
}

fn render_point(p: &Point, order: &[Symbol]) -> Vec<(String, f64)> {
    order.iter().map(|s| (s.to_string(), p[s])).collect()
}

/// Decide `e1 == e2` by sampling.
pub fn equal_numeric(e1: &Expr, e2: &Expr, cfg: &EqualityConfig) -> Result<OracleReport> {
    cfg.validate()?;
    if e1 == e2 {
        return Ok(OracleReport::trivially_equal());
    }
    let symbols = union_symbols(&[e1, e2]);
    let mut sampler = Sampler::new(cfg, symbols);
    let mut worst: Option<Sample> = None;
    let mut worst_ratio = -1.0;
    let mut equal = true;
    for _ in 0..cfg.samples {
        let mut found = None;
        for _ in 0..=MAX_RETRIES {
            let p = sampler.draw();
            let a = eval_tracked(e1, &p, GUARD);
            let b = eval_tracked(e2, &p, GUARD);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    found = Some((p, a, b));
                    break;
                }
                (Err(EvalError::Unbound(s)), _) | (_, Err(EvalError::Unbound(s))) => {
                    return Err(Error::Unbound(s.to_string()))
                }
                _ => continue,
            }
        }
        let Some((p, (v1, r1), (v2, r2))) = found else {
            return Err(Error::SingularOnBox);
        };
        let diff = (v1 - v2).abs();
        let allowed = cfg.atol + cfg.rtol * v1.abs().max(v2.abs()) + ROUNDING_FACTOR * (r1 + r2);
        let ratio = diff / allowed;
        if ratio > 1.0 {
            equal = false;
        }
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst = Some(Sample { point: render_point(&p, sampler.symbols()), lhs: v1, rhs: v2, diff, allowed });
        }
    }
    Ok(OracleReport { equal, samples: cfg.samples, worst })
}

pub fn is_zero(e: &Expr, cfg: &EqualityConfig) -> Result<OracleReport> {
    equal_numeric(e, &Expr::zero(), cfg)
}

/// Conjunction of pairwise checks with the worst sample overall.
pub fn equal_all<'a, I>(pairs: I, cfg: &EqualityConfig) -> Result<OracleReport>
where
    I: IntoIterator<Item = (&'a Expr, &'a Expr)>,
{
    let mut acc = OracleReport::trivially_equal();
    for (i, (a, b)) in pairs.into_iter().enumerate() {
        let r = equal_numeric(a, b, &cfg.reseeded(i as u64))?;
        acc = acc.merge(r);
    }
    Ok(acc)
}
