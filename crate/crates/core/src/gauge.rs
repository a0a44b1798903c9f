//! Gauge maps between twisted and standard prolongations.
//!
//! Forward direction: a gauge factor `β` (or `A`, `Γ`) multiplies the
//! field being prolonged. Inverse direction: the factor multiplies the
//! standard prolongation of a given field `W` and the twisted field is
//! `X = γ W` (resp. `Γ W`).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{eval_tracked, EvalError};
use crate::expr::Expr;
use crate::field::VectorField;
use crate::jet::{Coord, JetContext};
use crate::linalg::{rank, RANK_TOL};
use crate::matrix::MatrixExpr;
use crate::oracle::{equal_all, EqualityConfig, OracleReport, Sampler, GUARD, MAX_RETRIES};
use crate::prolong::{
    check_maurer_cartan, compare_sets, compare_tables, prolong, prolong_chi, prolong_lambda, prolong_mu_with,
    prolong_sigma_fields, ProlongedField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Serialize)]
pub struct GaugeVerdict {
    pub holds: bool,
    /// The diagram edge comparison.
    pub report: OracleReport,
    /// Equality of generated distributions, where checked.
    pub distribution: Option<bool>,
}

fn require_on_base(ctx: &JetContext, e: &Expr, what: &str) -> Result<()> {
    if ctx.order_of(e)? > 0 {
        return Err(Error::InvalidInput(format!("{} must be a function on the base", what)));
    }
    Ok(())
}

/// Reject a gauge factor that vanishes (or whose determinant vanishes)
/// on the whole sampling box.
pub fn require_nonsingular(det: &Expr, cfg: &EqualityConfig) -> Result<()> {
    if det.is_zero() {
        return Err(Error::SingularGauge);
    }
    let mut sampler = Sampler::new(cfg, det.symbols().to_vec());
    for _ in 0..cfg.samples {
        let mut ok = false;
        for _ in 0..=MAX_RETRIES {
            match eval_tracked(det, &sampler.draw(), GUARD) {
                Ok((v, _)) if v.abs() >= GUARD => {
                    ok = true;
                    break;
                }
                Ok(_) | Err(EvalError::Singular) => {}
                Err(EvalError::Unbound(s)) => return Err(Error::Unbound(s.to_string())),
            }
        }
        if !ok {
            return Err(Error::SingularGauge);
        }
    }
    Ok(())
}

/// `λ = (D_x β) / β` forward, `−(D_x β) / β` inverse.
pub fn lambda_from_beta(ctx: &JetContext, beta: &Expr, dir: Direction) -> Result<Expr> {
    if ctx.q() != 1 {
        return Err(Error::InvalidInput("lambda gauge requires a single independent variable".into()));
    }
    require_on_base(ctx, beta, "gauge factor")?;
    let l = ctx.unbounded().total_derivative(beta, 0)? / beta;
    Ok(match dir {
        Direction::Forward => l,
        Direction::Inverse => -l,
    })
}

/// `Λ_i = A⁻¹ D_i A` forward, `−(D_i A) A⁻¹` inverse, one matrix per
/// independent variable. The result is checked for zero curvature.
pub fn mu_from_a(ctx: &JetContext, a: &MatrixExpr, dir: Direction, cfg: &EqualityConfig) -> Result<Vec<MatrixExpr>> {
    if a.rows() != ctx.p() || a.cols() != ctx.p() {
        return Err(Error::Dimension(format!("gauge matrix must be {}x{}", ctx.p(), ctx.p())));
    }
    for e in a.entries() {
        require_on_base(ctx, e, "gauge matrix")?;
    }
    require_nonsingular(&a.det()?, cfg)?;
    let inv = a.inverse()?;
    let work = ctx.unbounded();
    let lambdas = (0..ctx.q())
        .map(|i| {
            let da = a.try_map(|e| work.total_derivative(e, i))?;
            match dir {
                Direction::Forward => inv.mul(&da),
                Direction::Inverse => Ok(da.mul(&inv)?.scale(&Expr::int(-1))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if !check_maurer_cartan(ctx, &lambdas, cfg)?.holds {
        return Err(Error::Internal("pure gauge twist failed the zero-curvature check".into()));
    }
    Ok(lambdas)
}

/// `σ = Γ⁻¹ D_x Γ` forward, `−(D_x Γ) Γ⁻¹` inverse.
pub fn sigma_from_gamma(ctx: &JetContext, gamma: &MatrixExpr, dir: Direction, cfg: &EqualityConfig) -> Result<MatrixExpr> {
    if ctx.q() != 1 {
        return Err(Error::InvalidInput("sigma gauge requires a single independent variable".into()));
    }
    if !gamma.is_square() {
        return Err(Error::Dimension("module gauge matrix must be square".into()));
    }
    for e in gamma.entries() {
        require_on_base(ctx, e, "gauge matrix")?;
    }
    require_nonsingular(&gamma.det()?, cfg)?;
    let inv = gamma.inverse()?;
    let dg = gamma.try_map(|e| ctx.unbounded().total_derivative(e, 0))?;
    match dir {
        Direction::Forward => inv.mul(&dg),
        Direction::Inverse => Ok(dg.mul(&inv)?.scale(&Expr::int(-1))),
    }
}

/// Forward: `β · X_λ^(n) = (β X)^(n)`. Inverse: with `X = γ W`,
/// `X_λ^(n) = γ · W^(n)`.
pub fn verify_gauge_lambda(x: &VectorField, beta: &Expr, n: usize, dir: Direction, cfg: &EqualityConfig) -> Result<GaugeVerdict> {
    let ctx = x.ctx();
    let lambda = lambda_from_beta(ctx, beta, dir)?;
    require_nonsingular(beta, cfg)?;
    let (lhs, rhs) = match dir {
        Direction::Forward => (prolong_lambda(x, &lambda, n)?.scaled(beta), prolong(&x.scaled(beta), n)?),
        Direction::Inverse => (prolong_lambda(&x.scaled(beta), &lambda, n)?, prolong(x, n)?.scaled(beta)),
    };
    let report = compare_tables(&lhs, &rhs, cfg)?;
    Ok(GaugeVerdict { holds: report.equal, report, distribution: None })
}

/// Forward: `A · (μ-prolonged Q) = standard prolongation of A Q`.
/// Inverse: with `Q = A W`, the μ-prolongation of `Q` is `A · W^(n)`.
pub fn verify_gauge_mu(qf: &VectorField, a: &MatrixExpr, n: usize, dir: Direction, cfg: &EqualityConfig) -> Result<GaugeVerdict> {
    if !qf.is_vertical() {
        return Err(Error::NonVertical);
    }
    let lambdas = mu_from_a(qf.ctx(), a, dir, cfg)?;
    let (lhs, rhs) = match dir {
        Direction::Forward => (
            prolong_mu_with(qf, &lambdas, n, true, cfg)?.mixed_components(a)?,
            prolong(&qf.mixed_components(a)?, n)?,
        ),
        Direction::Inverse => (
            prolong_mu_with(&qf.mixed_components(a)?, &lambdas, n, true, cfg)?,
            prolong(qf, n)?.mixed_components(a)?,
        ),
    };
    let report = compare_tables(&lhs, &rhs, cfg)?;
    Ok(GaugeVerdict { holds: report.equal, report, distribution: None })
}

/// Forward: `Γ · (σ-prolonged X_α) = standard prolongations of Γ X`.
/// Inverse: with `X = Γ W`, the σ-prolongations of `X` are `Γ · W^(n)`.
/// Also checks that the two families span the same distribution at
/// every sample point.
pub fn verify_gauge_sigma(fields: &[VectorField], gamma: &MatrixExpr, n: usize, dir: Direction, cfg: &EqualityConfig) -> Result<GaugeVerdict> {
    if fields.is_empty() {
        return Err(Error::InvalidInput("no fields".into()));
    }
    let ctx = fields[0].ctx();
    let sigma = sigma_from_gamma(ctx, gamma, dir, cfg)?;
    let std_all = |fs: &[VectorField]| fs.iter().map(|f| prolong(f, n)).collect::<Result<Vec<_>>>();
    let (twisted, standard, lhs, rhs) = match dir {
        Direction::Forward => {
            let tw = prolong_sigma_fields(fields, &sigma, n)?;
            let st = std_all(&VectorField::combine(gamma, fields)?)?;
            let l = ProlongedField::combine(gamma, &tw)?;
            (tw, st.clone(), l, st)
        }
        Direction::Inverse => {
            let tw = prolong_sigma_fields(&VectorField::combine(gamma, fields)?, &sigma, n)?;
            let st = std_all(fields)?;
            let r = ProlongedField::combine(gamma, &st)?;
            (tw.clone(), st, tw, r)
        }
    };
    let report = compare_sets(&lhs, &rhs, cfg)?;
    let distribution = same_distribution(&twisted, &standard, cfg)?;
    Ok(GaugeVerdict { holds: report.equal && distribution, report, distribution: Some(distribution) })
}

/// Combined gauge of vertical fields: `W_α = Γ_α^β A Q_β`. Forward
/// checks `Γ A · (χ-prolonged Q) = standard prolongations of W`.
pub fn verify_gauge_chi(
    fields: &[VectorField],
    a: &MatrixExpr,
    gamma: &MatrixExpr,
    n: usize,
    dir: Direction,
    cfg: &EqualityConfig,
) -> Result<GaugeVerdict> {
    if fields.is_empty() {
        return Err(Error::InvalidInput("no fields".into()));
    }
    if fields.iter().any(|f| !f.is_vertical()) {
        return Err(Error::NonVertical);
    }
    let ctx = fields[0].ctx();
    let lam = mu_from_a(ctx, a, dir, cfg)?.remove(0);
    let sigma = sigma_from_gamma(ctx, gamma, dir, cfg)?;
    let gauge = |fs: &[VectorField]| -> Result<Vec<VectorField>> {
        let mixed = fs.iter().map(|f| f.mixed_components(a)).collect::<Result<Vec<_>>>()?;
        VectorField::combine(gamma, &mixed)
    };
    let gauge_prolonged = |ys: &[ProlongedField]| -> Result<Vec<ProlongedField>> {
        let mixed = ys.iter().map(|y| y.mixed_components(a)).collect::<Result<Vec<_>>>()?;
        ProlongedField::combine(gamma, &mixed)
    };
    let std_all = |fs: &[VectorField]| fs.iter().map(|f| prolong(f, n)).collect::<Result<Vec<_>>>();
    let (lhs, rhs) = match dir {
        Direction::Forward => (gauge_prolonged(&prolong_chi(fields, &lam, &sigma, n)?)?, std_all(&gauge(fields)?)?),
        Direction::Inverse => (prolong_chi(&gauge(fields)?, &lam, &sigma, n)?, gauge_prolonged(&std_all(fields)?)?),
    };
    let report = compare_sets(&lhs, &rhs, cfg)?;
    Ok(GaugeVerdict { holds: report.equal, report, distribution: None })
}

/// Pointwise span comparison at oracle sample points.
fn same_distribution(a: &[ProlongedField], b: &[ProlongedField], cfg: &EqualityConfig) -> Result<bool> {
    let ca: Vec<Vec<Expr>> = a.iter().map(|y| y.coefficients()).collect();
    let cb: Vec<Vec<Expr>> = b.iter().map(|y| y.coefficients()).collect();
    let all: Vec<&Expr> = ca.iter().chain(cb.iter()).flatten().collect();
    let symbols = crate::oracle::union_symbols(&all);
    let mut sampler = Sampler::new(&cfg.reseeded(17), symbols);
    let r = a.len();
    let width = ca[0].len();
    let eval_rows = |rows: &[Vec<Expr>], pt: &crate::eval::Point| -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(rows.len(), width);
        for (i, row) in rows.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                m[(i, j)] = crate::eval::eval_numeric(e, pt).map_err(|_| Error::SingularOnBox)?;
            }
        }
        Ok(m)
    };
    for _ in 0..cfg.samples {
        let pt = sampler.draw_regular(&all)?;
        let ma = eval_rows(&ca, &pt)?;
        let mb = eval_rows(&cb, &pt)?;
        if rank(&ma, RANK_TOL) < r || rank(&mb, RANK_TOL) < r {
            return Err(Error::RankDegenerate);
        }
        let stacked = DMatrix::from_fn(2 * r, width, |i, j| if i < r { ma[(i, j)] } else { mb[(i - r, j)] });
        if rank(&stacked, RANK_TOL) > r {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `λ̄ = λ − (D_x f)/f`, so that `f · X_λ^(n) = (f X)_λ̄^(n)`. Only defined
/// for `f` on the base.
pub fn rescale_lambda(ctx: &JetContext, lambda: &Expr, f: &Expr) -> Result<Expr> {
    require_on_base(ctx, f, "rescaling factor")?;
    Ok(lambda - ctx.unbounded().total_derivative(f, 0)? / f)
}

/// `β(x) = exp(∫_{x0}^{x} λ)` on `m + 1` equally spaced points of
/// `[x0, x1]`, for `λ` depending on the independent variable alone.
pub fn beta_from_lambda_quadrature(ctx: &JetContext, lambda: &Expr, x0: f64, x1: f64, m: usize) -> Result<Vec<(f64, f64)>> {
    if ctx.q() != 1 {
        return Err(Error::InvalidInput("quadrature gauge requires a single independent variable".into()));
    }
    for s in lambda.symbols() {
        match ctx.classify(s) {
            Some(Coord::Indep(_)) => {}
            Some(_) => return Err(Error::NonlocalGauge),
            None => return Err(Error::UndeclaredSymbol(s.to_string())),
        }
    }
    let m = m.max(1);
    let xs = ctx.x_sym(0);
    let f = |t: f64| -> Result<f64> {
        let pt = std::iter::once((xs.clone(), t)).collect();
        crate::eval::eval_numeric(lambda, &pt).map_err(|_| Error::SingularOnBox)
    };
    let h = (x1 - x0) / m as f64;
    let mut out = vec![(x0, 1.0)];
    let mut acc = 0.0;
    for k in 0..m {
        let a = x0 + k as f64 * h;
        acc += adaptive_simpson(&f, a, a + h, 1e-10 / m as f64)?;
        out.push((a + h, acc.exp()));
    }
    Ok(out)
}

fn adaptive_simpson<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (fa, fb) = (f(a)?, f(b)?);
    let c = 0.5 * (a + b);
    let fc = f(c)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let c = 0.5 * (a + b);
    let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
    let (fd, fe) = (f(d)?, f(e)?);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, a, c, fa, fc, fd, left, tol / 2.0, depth - 1)?
        + simpson_step(f, c, b, fc, fb, fe, right, tol / 2.0, depth - 1)?)
}

/// Oracle check that the spans of two families agree, exposed for tests
/// of the symmetry-stability property.
pub fn distributions_agree(a: &[ProlongedField], b: &[ProlongedField], cfg: &EqualityConfig) -> Result<bool> {
    same_distribution(a, b, cfg)
}

/// Pairwise oracle comparison of two lists of expressions.
pub fn equal_lists(a: &[Expr], b: &[Expr], cfg: &EqualityConfig) -> Result<OracleReport> {
    equal_all(a.iter().zip(b.iter()), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::equal_numeric;

    fn ode(p: usize) -> JetContext {
        JetContext::ode(p, 3).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let c = ode(1);
        let cfg = EqualityConfig::default();
        assert!(lambda_from_beta(&c, &Expr::one(), Direction::Forward).unwrap().is_zero());
        let l = lambda_from_beta(&c, &c.x(0), Direction::Forward).unwrap();
        assert!(equal_numeric(&l, &c.x(0).recip(), &cfg).unwrap().equal);
        let l = lambda_from_beta(&c, &c.u(0).exp(), Direction::Forward).unwrap();
        assert_eq!(l, c.u_k(0, 1));
    }

    #[test]
    fn sigma_example() {
        let c = ode(1);
        let g = MatrixExpr::from_rows(vec![vec![Expr::one(), c.x(0)], vec![Expr::zero(), Expr::one()]]).unwrap();
        let s = sigma_from_gamma(&c, &g, Direction::Forward, &EqualityConfig::default()).unwrap();
        let want = MatrixExpr::from_rows(vec![vec![Expr::zero(), Expr::one()], vec![Expr::zero(), Expr::zero()]]).unwrap();
        assert_eq!(s, want);
    }

    #[test]
    fn singular_gauge_rejected() {
        let c = ode(2);
        let a = MatrixExpr::from_rows(vec![vec![c.x(0), c.x(0)], vec![Expr::one(), Expr::one()]]).unwrap();
        assert!(matches!(mu_from_a(&c, &a, Direction::Forward, &EqualityConfig::default()), Err(Error::SingularGauge)));
    }

    #[test]
    fn quadrature() {
        let c = ode(1);
        let v = beta_from_lambda_quadrature(&c, &c.x(0).recip(), 1.0, std::f64::consts::E, 4).unwrap();
        assert!((v.last().unwrap().1 - std::f64::consts::E).abs() < 1e-9);
        assert!(matches!(beta_from_lambda_quadrature(&c, &c.u_k(0, 1), 0.0, 1.0, 4), Err(Error::NonlocalGauge)));
    }
}
