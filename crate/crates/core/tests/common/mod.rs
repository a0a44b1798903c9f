//! Seeded generators shared by the property and acceptance tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twist_core::expr::{add, func, mul, pow, Func, Kind};
use twist_core::{Expr, JetContext, MatrixExpr, VectorField};

pub struct Fuzz {
    rng: ChaCha8Rng,
}

impl Fuzz {
    pub fn new(seed: u64) -> Self {
        Fuzz { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.random_range(lo..=hi)
    }

    pub fn nonzero(&mut self, lo: i64, hi: i64) -> i64 {
        loop {
            let k = self.int(lo, hi);
            if k != 0 {
                return k;
            }
        }
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random_bool(0.5)
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.random_range(0..xs.len())]
    }

    /// Sum of up to `terms` monomials of degree at most `degree` with small
    /// integer coefficients.
    pub fn poly(&mut self, vars: &[Expr], degree: usize, terms: usize) -> Expr {
        let count = self.rng.random_range(1..=terms.max(1));
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let d = self.rng.random_range(0..=degree);
            let mut m = Expr::int(self.nonzero(-3, 3));
            for _ in 0..d {
                if vars.is_empty() {
                    break;
                }
                m = m * self.pick(vars).clone();
            }
            out.push(m);
        }
        add(&out)
    }

    /// A polynomial that is not identically zero.
    pub fn poly_nonzero(&mut self, vars: &[Expr], degree: usize, terms: usize) -> Expr {
        loop {
            let p = self.poly(vars, degree, terms);
            if !p.is_zero() {
                return p;
            }
        }
    }

    /// `±k·exp(affine)`, nowhere zero and tame on the sampling box.
    pub fn nowhere_zero(&mut self, vars: &[Expr]) -> Expr {
        let k = self.nonzero(-2, 2);
        let arg = self.poly(vars, 1, 2) * Expr::rat(1, 2);
        Expr::int(k) * arg.exp()
    }

    /// `L·U` with unit lower `L` and nowhere-zero diagonal in `U`.
    pub fn invertible(&mut self, vars: &[Expr], size: usize) -> MatrixExpr {
        let mut l = MatrixExpr::identity(size);
        let mut u = MatrixExpr::zeros(size, size);
        for i in 0..size {
            for j in 0..size {
                if i > j && self.coin() {
                    l.set(i, j, self.poly(vars, 1, 2));
                }
                if i < j && self.coin() {
                    u.set(i, j, self.poly(vars, 1, 2));
                }
            }
            let d = if self.coin() { Expr::int(self.nonzero(-2, 2)) } else { self.nowhere_zero(vars) };
            u.set(i, i, d);
        }
        l.mul(&u).unwrap()
    }

    pub fn matrix(&mut self, vars: &[Expr], size: usize, degree: usize) -> MatrixExpr {
        let mut m = MatrixExpr::zeros(size, size);
        for i in 0..size {
            for j in 0..size {
                if self.coin() {
                    m.set(i, j, self.poly(vars, degree, 2));
                }
            }
        }
        m
    }

    pub fn field(&mut self, ctx: &JetContext, degree: usize) -> VectorField {
        let vars = base_vars(ctx);
        let xi = (0..ctx.q()).map(|_| if self.coin() { self.poly(&vars, degree, 3) } else { Expr::zero() }).collect();
        let phi = (0..ctx.p()).map(|_| self.poly(&vars, degree, 3)).collect();
        VectorField::new(ctx, xi, phi).unwrap()
    }

    /// A field with nonzero `ξ` somewhere, so horizontal terms are exercised.
    pub fn lie_point(&mut self, ctx: &JetContext, degree: usize) -> VectorField {
        let vars = base_vars(ctx);
        let xi = (0..ctx.q()).map(|_| self.poly(&vars, degree, 3)).collect();
        let phi = (0..ctx.p()).map(|_| self.poly(&vars, degree, 3)).collect();
        VectorField::new(ctx, xi, phi).unwrap()
    }

    pub fn vertical(&mut self, ctx: &JetContext, degree: usize) -> VectorField {
        let vars = base_vars(ctx);
        let phi = (0..ctx.p()).map(|_| self.poly_nonzero(&vars, degree, 3)).collect();
        VectorField::vertical(ctx, phi).unwrap()
    }

    /// Random expression tree over `vars` using every constructor.
    pub fn expr(&mut self, vars: &[Expr], depth: usize) -> Expr {
        if depth == 0 || self.rng.random_bool(0.25) {
            return match self.rng.random_range(0..4) {
                0 => Expr::int(self.int(-9, 9)),
                1 => Expr::rat(self.int(-9, 9), self.nonzero(1, 7)),
                _ => self.pick(vars).clone(),
            };
        }
        match self.rng.random_range(0..6) {
            0 | 1 => {
                let n = self.rng.random_range(2..=3);
                let ts: Vec<Expr> = (0..n).map(|_| self.expr(vars, depth - 1)).collect();
                add(&ts)
            }
            2 | 3 => {
                let n = self.rng.random_range(2..=3);
                let fs: Vec<Expr> = (0..n).map(|_| self.expr(vars, depth - 1)).collect();
                mul(&fs)
            }
            4 => {
                let b = self.expr(vars, depth - 1);
                let e = match self.rng.random_range(0..3) {
                    0 => Expr::int(self.nonzero(-3, 4)),
                    1 => Expr::rat(self.nonzero(-3, 3), 2),
                    _ => self.expr(vars, depth - 1),
                };
                pow(&b, &e)
            }
            _ => {
                let f = *self.pick(&[Func::Exp, Func::Log, Func::Sin, Func::Cos, Func::Tan]);
                func(f, &self.expr(vars, depth - 1))
            }
        }
    }
}

/// Coordinates of order zero.
pub fn base_vars(ctx: &JetContext) -> Vec<Expr> {
    ctx.coordinates(0).iter().map(Expr::symbol).collect()
}

/// Coordinates up to order `k` plus parameters.
pub fn jet_vars(ctx: &JetContext, k: usize) -> Vec<Expr> {
    let mut v: Vec<Expr> = ctx.coordinates(k).iter().map(Expr::symbol).collect();
    v.extend(ctx.params().iter().map(Expr::symbol));
    v
}

/// Rebuild a tree through the canonical constructors.
pub fn recanon(e: &Expr) -> Expr {
    match e.kind() {
        Kind::Num(_) | Kind::Sym(_) => e.clone(),
        Kind::Add(ts) => add(&ts.iter().map(recanon).collect::<Vec<_>>()),
        Kind::Mul(fs) => mul(&fs.iter().map(recanon).collect::<Vec<_>>()),
        Kind::Pow(b, x) => pow(&recanon(b), &recanon(x)),
        Kind::Fun(f, a) => func(*f, &recanon(a)),
    }
}
