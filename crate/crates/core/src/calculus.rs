//! Conformable fractional derivative and integral of order `alpha`.
//!
//! For differentiable `f` the conformable derivative is `t^(1-alpha) f'(t)`.
//! Under the change of variable `s = t^alpha / alpha` it is exactly `d/ds`,
//! which several routines here exploit. Evaluation is restricted to `t > 0`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quadrature::{self, QuadratureOptions};

/// Fractional order, `0 < alpha <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AlphaOrder(f64);

impl AlphaOrder {
    pub fn new(alpha: f64) -> Result<AlphaOrder> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(AlphaOrder(alpha))
        } else {
            Err(Error::InvalidAlpha(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `s = t^alpha / alpha`.
    pub fn to_s(self, t: f64) -> f64 {
        t.powf(self.0) / self.0
    }

    /// Inverse of [`AlphaOrder::to_s`].
    pub fn from_s(self, s: f64) -> f64 {
        (self.0 * s).powf(1.0 / self.0)
    }

    /// `t^(alpha - 1)`, the weight of the conformable integral.
    pub fn weight(self, t: f64) -> f64 {
        t.powf(self.0 - 1.0)
    }
}

impl fmt::Display for AlphaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

type Callback = dyn Fn(f64) -> Result<f64> + Send + Sync;

/// A real function of one variable with an open domain `(lo, hi)`.
#[derive(Clone)]
pub struct RealFunction {
    eval: Arc<Callback>,
    lo: f64,
    hi: f64,
}

impl fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFunction")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish_non_exhaustive()
    }
}

impl RealFunction {
    /// Wraps a callback. The domain defaults to `(0, inf)`.
    pub fn new<F>(f: F) -> RealFunction
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        RealFunction {
            eval: Arc::new(f),
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    /// Wraps an infallible closure.
    pub fn from_fn<F>(f: F) -> RealFunction
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        RealFunction::new(move |t| Ok(f(t)))
    }

    pub fn from_expr(expr: Expr) -> RealFunction {
        RealFunction::new(move |t| expr.eval(t))
    }

    pub fn parse(source: &str) -> Result<RealFunction> {
        Ok(RealFunction::from_expr(Expr::parse(source)?))
    }

    pub fn constant(value: f64) -> RealFunction {
        RealFunction::from_fn(move |_| value)
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> RealFunction {
        self.lo = lo;
        self.hi = hi;
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > self.lo && t < self.hi) {
            return Err(Error::domain(format!(
                "t = {t} outside function domain ({}, {})",
                self.lo, self.hi
            )));
        }
        let v = (self.eval)(t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(format!("non-finite value {v} at t = {t}")))
        }
    }

    fn zip_with<F>(&self, other: &RealFunction, op: F) -> RealFunction
    where
        F: Fn(f64, f64) -> Result<f64> + Send + Sync + 'static,
    {
        let (a, b) = (self.clone(), other.clone());
        RealFunction::new(move |t| op(a.eval(t)?, b.eval(t)?))
            .with_domain(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: f64, other: &RealFunction, b: f64) -> RealFunction {
        self.zip_with(other, move |x, y| Ok(a * x + b * y))
    }

    pub fn product(&self, other: &RealFunction) -> RealFunction {
        self.zip_with(other, |x, y| Ok(x * y))
    }

    pub fn quotient(&self, other: &RealFunction) -> RealFunction {
        self.zip_with(other, |x, y| {
            if y == 0.0 {
                Err(Error::domain("division by zero in quotient"))
            } else {
                Ok(x / y)
            }
        })
    }

    /// `t -> self(inner(t))`, on the domain of `inner`.
    pub fn compose(&self, inner: &RealFunction) -> RealFunction {
        let (outer, g) = (self.clone(), inner.clone());
        RealFunction::new(move |t| outer.eval(g.eval(t)?)).with_domain(inner.lo, inner.hi)
    }
}

impl From<Expr> for RealFunction {
    fn from(expr: Expr) -> Self {
        RealFunction::from_expr(expr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMethod {
    /// Limit quotient on a decreasing epsilon ladder.
    Limit,
    /// `t^(1-alpha) f'(t)` with central differences.
    Reduction,
}

#[derive(Debug, Clone, Copy)]
pub struct DerivativeOptions {
    /// Relative stabilization tolerance for extrapolated estimates.
    pub tol: f64,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        DerivativeOptions { tol: 1e-6 }
    }
}

fn require_positive(t: f64) -> Result<()> {
    if t > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "conformable derivative requires t > 0, got {t}"
        )))
    }
}

/// Limit definition `[f(t + eps t^(1-alpha)) - f(t)] / eps` on the ladder
/// `eps = 1e-2 .. 1e-7`, with one Richardson pass over consecutive rungs.
/// Returns the extrapolant from the most stable pair.
pub fn t_alpha_limit(
    f: &RealFunction,
    alpha: AlphaOrder,
    t: f64,
    opts: &DerivativeOptions,
) -> Result<f64> {
    require_positive(t)?;
    let shift = t.powf(1.0 - alpha.value());
    let ft = f.eval(t)?;
    let mut quotients = [0.0; 6];
    for (k, q) in quotients.iter_mut().enumerate() {
        let eps = 10f64.powi(-2 - k as i32);
        *q = (f.eval(t + eps * shift)? - ft) / eps;
    }
    let extrapolated: Vec<f64> = quotients
        .windows(2)
        .map(|w| (10.0 * w[1] - w[0]) / 9.0)
        .collect();
    let (best, spread) = extrapolated
        .windows(2)
        .map(|w| (w[1], (w[1] - w[0]).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("ladder has five extrapolants");
    if !best.is_finite() || spread > opts.tol * (1.0 + best.abs()) {
        return Err(Error::Convergence(format!(
            "epsilon ladder at t = {t} did not stabilize (spread {spread:e})"
        )));
    }
    Ok(best)
}

/// `t^(1-alpha) f'(t)`, with `f'` from central differences at `h` and `h/2`
/// combined by Richardson extrapolation.
pub fn t_alpha_reduction(f: &RealFunction, alpha: AlphaOrder, t: f64) -> Result<f64> {
    require_positive(t)?;
    let (lo, hi) = f.domain();
    let h = (1e-4 * t.abs().max(1.0))
        .min(0.01 * (t - lo))
        .min(0.01 * (hi - t));
    if !(h > 0.0) {
        return Err(Error::domain(format!(
            "t = {t} has no room inside ({lo}, {hi})"
        )));
    }
    let central = |h: f64| -> Result<f64> { Ok((f.eval(t + h)? - f.eval(t - h)?) / (2.0 * h)) };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    let slope = (4.0 * fine - coarse) / 3.0;
    Ok(t.powf(1.0 - alpha.value()) * slope)
}

pub fn t_alpha(
    f: &RealFunction,
    alpha: AlphaOrder,
    t: f64,
    method: DerivativeMethod,
    opts: &DerivativeOptions,
) -> Result<f64> {
    match method {
        DerivativeMethod::Limit => t_alpha_limit(f, alpha, t, opts),
        DerivativeMethod::Reduction => t_alpha_reduction(f, alpha, t),
    }
}

/// Fornberg weights of the `m`-th derivative at `z` over the nodes `x`.
fn fornberg_weights(x: &[f64], z: f64, m: usize) -> Vec<f64> {
    let n = x.len();
    // c[j][k]: weight of node j for derivative order k.
    let mut c = vec![vec![0.0f64; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[m]).collect()
}

/// `n`-fold conformable derivative.
///
/// `f` is sampled on a uniform stencil in `s = t^alpha / alpha`, where each
/// conformable level `t^(1-alpha) d/dt` is `d/ds`, and the `n`-th derivative
/// is taken with centered finite-difference weights. A narrower stencil at the
/// same spacing serves as the error estimate; disagreement beyond `opts.tol`
/// is a convergence error. `n = 1` uses the reduction form directly.
pub fn iterated_t_alpha(
    f: &RealFunction,
    alpha: AlphaOrder,
    n: usize,
    t: f64,
    opts: &DerivativeOptions,
) -> Result<f64> {
    require_positive(t)?;
    match n {
        0 => return f.eval(t),
        1 => return t_alpha_reduction(f, alpha, t),
        _ => {}
    }
    let radius = n + 4;
    let s0 = alpha.to_s(t);
    let (lo, hi) = f.domain();
    let s_lo = if lo > 0.0 { alpha.to_s(lo) } else { 0.0 };
    let s_hi = if hi.is_finite() {
        alpha.to_s(hi)
    } else {
        f64::INFINITY
    };
    let room = (s0 - s_lo).min(s_hi - s0);
    let spacing = (0.05f64)
        .min(0.25 * s0 / radius as f64)
        .min(0.999 * room / radius as f64);
    if !(spacing > 0.0) {
        return Err(Error::domain(format!("no stencil room around t = {t}")));
    }

    let stencil = |r: usize| -> Result<f64> {
        let nodes: Vec<f64> = (0..=2 * r)
            .map(|j| s0 + (j as f64 - r as f64) * spacing)
            .collect();
        let weights = fornberg_weights(&nodes, s0, n);
        nodes
            .iter()
            .zip(&weights)
            .try_fold(0.0, |acc, (&s, w)| Ok(acc + w * f.eval(alpha.from_s(s))?))
    };
    let low = stencil(radius - 2)?;
    let high = stencil(radius)?;
    let spread = (low - high).abs();
    if !high.is_finite() || spread > opts.tol * (1.0 + high.abs()) {
        return Err(Error::Convergence(format!(
            "order-{n} stencil at t = {t} lost too many digits (spread {spread:e})"
        )));
    }
    Ok(high)
}

/// `int_from^to x^(alpha-1) f(x) dx`, signed, by the substitution
/// `u = x^alpha`, which leaves `(1/alpha) int f(u^(1/alpha)) du`.
pub(crate) fn weighted_integral<F>(
    f: F,
    alpha: AlphaOrder,
    from: f64,
    to: f64,
    opts: &QuadratureOptions,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if from == to {
        return Ok(0.0);
    }
    let a = alpha.value();
    let u_from = from.powf(a);
    let u_to = to.powf(a);
    let inv = 1.0 / a;
    let integral = quadrature::integrate(|u| f(u.powf(inv)), u_from, u_to, opts)?;
    Ok(integral / a)
}

/// Conformable integral `I_alpha f(t) = int_a^t x^(alpha-1) f(x) dx`.
pub fn i_alpha(f: &RealFunction, alpha: AlphaOrder, a: f64, t: f64) -> Result<f64> {
    i_alpha_with(f, alpha, a, t, &QuadratureOptions::default())
}

pub fn i_alpha_with(
    f: &RealFunction,
    alpha: AlphaOrder,
    a: f64,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    if a < 0.0 {
        return Err(Error::domain(format!("lower limit {a} is negative")));
    }
    if t < a {
        return Err(Error::domain(format!(
            "upper limit {t} is below lower limit {a}"
        )));
    }
    weighted_integral(|x| f.eval(x), alpha, a, t, opts)
}

/// Calculus identities checked by [`verify_identity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Identity {
    /// `T(a f + b g) = a T f + b T g`.
    Linearity { a: f64, b: f64 },
    /// `T(f g) = T(f) g + f T(g)`.
    Product,
    /// `T(f / g) = (T(f) g - f T(g)) / g^2`.
    Quotient,
    /// `T(f o g)(t) = (T f)(g(t)) (T g)(t) g(t)^(alpha-1)`; needs `g(t) > 0`.
    Chain,
    /// `int_lower^t f T(g) d_alpha = [f g]_lower^t - int_lower^t g T(f) d_alpha`.
    Parts { lower: f64 },
    /// `T I_alpha f (t) = f(t)`, integral anchored at `lower`.
    FtcForward { lower: f64 },
    /// `I_alpha T f (t) = f(t) - f(lower)`.
    FtcBackward { lower: f64 },
}

impl Identity {
    pub fn name(&self) -> &'static str {
        match self {
            Identity::Linearity { .. } => "linearity",
            Identity::Product => "product",
            Identity::Quotient => "quotient",
            Identity::Chain => "chain",
            Identity::Parts { .. } => "parts",
            Identity::FtcForward { .. } => "ftc-forward",
            Identity::FtcBackward { .. } => "ftc-backward",
        }
    }

    /// Looks up an identity by name with default parameters
    /// (`a = 1.5, b = -2.5` for linearity, `lower = 0.5` for the integral forms).
    pub fn from_name(name: &str) -> Result<Identity> {
        Ok(match name {
            "linearity" => Identity::Linearity { a: 1.5, b: -2.5 },
            "product" => Identity::Product,
            "quotient" => Identity::Quotient,
            "chain" => Identity::Chain,
            "parts" => Identity::Parts { lower: 0.5 },
            "ftc-forward" => Identity::FtcForward { lower: 0.5 },
            "ftc-backward" => Identity::FtcBackward { lower: 0.5 },
            other => {
                return Err(Error::Invalid {
                    field: "kind".into(),
                    message: format!("unknown identity '{other}'"),
                })
            }
        })
    }

    fn needs_second_function(&self) -> bool {
        !matches!(
            self,
            Identity::FtcForward { .. } | Identity::FtcBackward { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySample {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub identity: Identity,
    pub samples: Vec<IdentitySample>,
    pub tolerance: f64,
    pub max_rel_residual: f64,
    pub pass: bool,
}

/// `|a - b| / max(1, |a|, |b|)`: relative for large values, absolute near 0.
pub fn scaled_residual(a: f64, b: f64) -> f64 {
    let r = (a - b).abs() / 1f64.max(a.abs()).max(b.abs());
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

/// Evaluates both sides of `identity` at every sample point.
pub fn verify_identity(
    identity: Identity,
    f: &RealFunction,
    g: Option<&RealFunction>,
    alpha: AlphaOrder,
    samples: &[f64],
    tolerance: f64,
) -> Result<IdentityReport> {
    let g = match (identity.needs_second_function(), g) {
        (true, Some(g)) => Some(g),
        (true, None) => {
            return Err(Error::Precondition(format!(
                "identity '{}' needs a second function",
                identity.name()
            )))
        }
        (false, _) => None,
    };
    if let Some(&bad) = samples.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::domain(format!("sample point {bad} is not positive")));
    }
    let deriv = |h: &RealFunction, t: f64| t_alpha_reduction(h, alpha, t);

    let mut rows = Vec::with_capacity(samples.len());
    for &t in samples {
        let (lhs, rhs) = match identity {
            Identity::Linearity { a, b } => {
                let g = g.expect("checked above");
                let combo = f.linear_combination(a, g, b);
                (deriv(&combo, t)?, a * deriv(f, t)? + b * deriv(g, t)?)
            }
            Identity::Product => {
                let g = g.expect("checked above");
                let lhs = deriv(&f.product(g), t)?;
                (lhs, deriv(f, t)? * g.eval(t)? + f.eval(t)? * deriv(g, t)?)
            }
            Identity::Quotient => {
                let g = g.expect("checked above");
                let gt = g.eval(t)?;
                if gt == 0.0 {
                    return Err(Error::domain(format!("g({t}) = 0 in quotient rule")));
                }
                let lhs = deriv(&f.quotient(g), t)?;
                (
                    lhs,
                    (deriv(f, t)? * gt - f.eval(t)? * deriv(g, t)?) / (gt * gt),
                )
            }
            Identity::Chain => {
                let g = g.expect("checked above");
                let gt = g.eval(t)?;
                if !(gt > 0.0) {
                    return Err(Error::domain(format!(
                        "chain rule needs g({t}) > 0, got {gt}"
                    )));
                }
                let lhs = deriv(&f.compose(g), t)?;
                let rhs = deriv(f, gt)? * deriv(g, t)? * gt.powf(alpha.value() - 1.0);
                (lhs, rhs)
            }
            Identity::Parts { lower } => {
                let g = g.expect("checked above");
                let opts = QuadratureOptions::default();
                let left =
                    weighted_integral(|x| Ok(f.eval(x)? * deriv(g, x)?), alpha, lower, t, &opts)?;
                let right =
                    weighted_integral(|x| Ok(g.eval(x)? * deriv(f, x)?), alpha, lower, t, &opts)?;
                let boundary = f.eval(t)? * g.eval(t)? - f.eval(lower)? * g.eval(lower)?;
                (left, boundary - right)
            }
            Identity::FtcForward { lower } => {
                let inner = f.clone();
                let integral = RealFunction::new(move |x| {
                    weighted_integral(
                        |y| inner.eval(y),
                        alpha,
                        lower,
                        x,
                        &QuadratureOptions::default(),
                    )
                })
                .with_domain(f.domain().0, f.domain().1);
                (deriv(&integral, t)?, f.eval(t)?)
            }
            Identity::FtcBackward { lower } => {
                let opts = QuadratureOptions::default();
                let lhs = weighted_integral(|x| deriv(f, x), alpha, lower, t, &opts)?;
                (lhs, f.eval(t)? - f.eval(lower)?)
            }
        };
        let abs_residual = (lhs - rhs).abs();
        let rel_residual = scaled_residual(lhs, rhs);
        let pass = abs_residual.is_finite() && rel_residual <= tolerance;
        rows.push(IdentitySample {
            t,
            lhs,
            rhs,
            abs_residual: if abs_residual.is_nan() {
                f64::INFINITY
            } else {
                abs_residual
            },
            rel_residual,
            pass,
        });
    }
    let max_rel_residual = rows.iter().map(|r| r.rel_residual).fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r.pass);
    Ok(IdentityReport {
        identity,
        samples: rows,
        tolerance,
        max_rel_residual,
        pass,
    })
}

/// A function with a closed-form conformable derivative.
#[derive(Debug, Clone, Copy)]
pub struct OracleEntry {
    pub name: &'static str,
    pub value: fn(f64, f64) -> f64,
    pub derivative: fn(f64, f64) -> f64,
}

impl OracleEntry {
    pub fn function(&self, alpha: AlphaOrder) -> RealFunction {
        let value = self.value;
        let a = alpha.value();
        RealFunction::from_fn(move |t| value(a, t))
    }
}

/// Power rule for several exponents, the three eigen-type functions of
/// `t^alpha / alpha`, and a constant. Closures take `(alpha, t)`.
pub fn oracle_table() -> Vec<OracleEntry> {
    fn s(a: f64, t: f64) -> f64 {
        t.powf(a) / a
    }
    vec![
        OracleEntry {
            name: "5",
            value: |_, _| 5.0,
            derivative: |_, _| 0.0,
        },
        OracleEntry {
            name: "t^-1",
            value: |_, t| t.powf(-1.0),
            derivative: |a, t| -t.powf(-1.0 - a),
        },
        OracleEntry {
            name: "t^0.5",
            value: |_, t| t.powf(0.5),
            derivative: |a, t| 0.5 * t.powf(0.5 - a),
        },
        OracleEntry {
            name: "t",
            value: |_, t| t,
            derivative: |a, t| t.powf(1.0 - a),
        },
        OracleEntry {
            name: "t^2",
            value: |_, t| t.powf(2.0),
            derivative: |a, t| 2.0 * t.powf(2.0 - a),
        },
        OracleEntry {
            name: "t^3.5",
            value: |_, t| t.powf(3.5),
            derivative: |a, t| 3.5 * t.powf(3.5 - a),
        },
        OracleEntry {
            name: "sin(t^a/a)",
            value: |a, t| s(a, t).sin(),
            derivative: |a, t| s(a, t).cos(),
        },
        OracleEntry {
            name: "cos(t^a/a)",
            value: |a, t| s(a, t).cos(),
            derivative: |a, t| -s(a, t).sin(),
        },
        OracleEntry {
            name: "exp(t^a/a)",
            value: |a, t| s(a, t).exp(),
            derivative: |a, t| s(a, t).exp(),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(a: f64) -> AlphaOrder {
        AlphaOrder::new(a).unwrap()
    }

    fn func(src: &str) -> RealFunction {
        RealFunction::parse(src).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn alpha_bounds() {
        assert!(AlphaOrder::new(1.0).is_ok());
        assert!(AlphaOrder::new(1e-3).is_ok());
        for bad in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(
                matches!(AlphaOrder::new(bad), Err(Error::InvalidAlpha(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn s_map_inverts() {
        let a = alpha(0.3);
        for t in [0.01, 0.5, 1.0, 7.0] {
            assert!((a.from_s(a.to_s(t)) - t).abs() < 1e-13 * t.max(1.0));
        }
        assert_eq!(alpha(1.0).to_s(2.5), 2.5);
    }

    #[test]
    fn limit_examples() {
        let opts = DerivativeOptions::default();
        let v = t_alpha_limit(&func("5"), alpha(0.7), 2.0, &opts).unwrap();
        assert_eq!(v, 0.0);
        let v = t_alpha_limit(&func("t^2"), alpha(0.5), 4.0, &opts).unwrap();
        assert!(close(v, 16.0, 1e-8), "{v}");
        let v = t_alpha_limit(&func("exp(2*sqrt(t))"), alpha(0.5), 1.0, &opts).unwrap();
        assert!(close(v, 7.389_056_098_930_65, 1e-8), "{v}");
    }

    #[test]
    fn limit_rejects_non_positive_t() {
        let err = t_alpha_limit(&func("t"), alpha(0.5), 0.0, &Default::default()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn limit_reports_non_convergence() {
        let noisy = RealFunction::from_fn(|t| (1e9 * t).sin());
        let err = t_alpha_limit(&noisy, alpha(0.5), 1.0, &Default::default()).unwrap_err();
        assert!(matches!(err, Error::Convergence(_)), "{err:?}");
    }

    #[test]
    fn reduction_examples() {
        let v = t_alpha_reduction(&func("t^2"), alpha(0.5), 4.0).unwrap();
        assert!(close(v, 16.0, 1e-10));
        let v = t_alpha_reduction(&func("sin(2*sqrt(t))"), alpha(0.5), 1.0).unwrap();
        assert!(close(v, (2.0f64).cos(), 1e-10), "{v}");
        // alpha = 1 is the classical derivative.
        let v = t_alpha_reduction(&func("t^3"), alpha(1.0), 2.0).unwrap();
        assert!(close(v, 12.0, 1e-10));
        assert!(t_alpha_reduction(&func("t"), alpha(0.5), -1.0).is_err());
    }

    #[test]
    fn reduction_respects_domain_near_zero() {
        let v = t_alpha_reduction(&func("ln(t)"), alpha(0.5), 1e-6).unwrap();
        // t^(1/2) * (1/t) = t^(-1/2)
        assert!(close(v, 1e3, 1e-6), "{v}");
    }

    #[test]
    fn iterated_examples() {
        let opts = DerivativeOptions::default();
        let t = std::f64::consts::PI.powi(2) / 16.0;
        let v = iterated_t_alpha(&func("sin(2*sqrt(t))"), alpha(0.5), 2, t, &opts).unwrap();
        assert!(close(v, -1.0, 1e-8), "{v}");
        let v = iterated_t_alpha(&func("t"), alpha(0.5), 2, 4.0, &opts).unwrap();
        assert!(close(v, 0.5, 1e-8), "{v}");
        let f = func("exp(t)*cos(t)");
        assert_eq!(
            iterated_t_alpha(&f, alpha(0.6), 1, 1.3, &opts).unwrap(),
            t_alpha_reduction(&f, alpha(0.6), 1.3).unwrap()
        );
    }

    #[test]
    fn iterated_higher_orders() {
        // n-th derivative in s of exp(s) is exp(s) for every n.
        let a = alpha(0.4);
        let f = RealFunction::from_fn(move |t| (t.powf(0.4) / 0.4).exp());
        for n in 2..=4 {
            let v = iterated_t_alpha(&f, a, n, 2.0, &Default::default()).unwrap();
            let exact = a.to_s(2.0).exp();
            assert!(close(v, exact, 1e-7), "n={n}: {v} vs {exact}");
        }
    }

    #[test]
    fn integral_examples() {
        let v = i_alpha(&func("1"), alpha(0.5), 0.0, 4.0).unwrap();
        assert!(close(v, 4.0, 1e-10), "{v}");
        let v = i_alpha(&func("t^0.5"), alpha(0.5), 0.0, 4.0).unwrap();
        assert!(close(v, 4.0, 1e-10), "{v}");
        assert_eq!(i_alpha(&func("sin(t)"), alpha(0.3), 2.0, 2.0).unwrap(), 0.0);
        assert!(i_alpha(&func("1"), alpha(0.5), -1.0, 1.0).is_err());
        assert!(i_alpha(&func("1"), alpha(0.5), 2.0, 1.0).is_err());
    }

    #[test]
    fn identity_examples() {
        let a = alpha(0.5);
        let t = func("t");
        let r = verify_identity(Identity::Product, &t, Some(&t), a, &[4.0], 1e-6).unwrap();
        assert!(r.pass);
        assert!(close(r.samples[0].lhs, 16.0, 1e-9));

        let r = verify_identity(
            Identity::FtcForward { lower: 0.5 },
            &func("sin(t)"),
            None,
            a,
            &[1.0, 2.0, 3.0],
            1e-6,
        )
        .unwrap();
        assert!(r.pass, "{r:?}");

        let r = verify_identity(
            Identity::Chain,
            &func("t^2"),
            Some(&func("t + 1")),
            a,
            &[1.0],
            1e-6,
        )
        .unwrap();
        assert!(r.pass, "{r:?}");

        let r = verify_identity(
            Identity::Parts { lower: 1.0 },
            &func("t"),
            Some(&func("sin(t)")),
            a,
            &[3.0],
            1e-6,
        )
        .unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn identity_rejects_bad_inputs() {
        let a = alpha(0.5);
        let f = func("t");
        assert!(matches!(
            verify_identity(Identity::Product, &f, Some(&f), a, &[0.0], 1e-6),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            verify_identity(Identity::Product, &f, None, a, &[1.0], 1e-6),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            verify_identity(Identity::Chain, &f, Some(&func("t - 2")), a, &[1.0], 1e-6),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn residual_above_tolerance_fails() {
        let a = alpha(0.5);
        let r = verify_identity(
            Identity::Linearity { a: 1.0, b: 1.0 },
            &func("sin(t)"),
            Some(&func("exp(t)")),
            a,
            &[2.0],
            0.0,
        )
        .unwrap();
        assert!(r.max_rel_residual > 0.0 && !r.pass);
    }

    #[test]
    fn oracle_table_matches_both_methods() {
        let opts = DerivativeOptions::default();
        for entry in oracle_table() {
            for a in [0.3, 0.5, 0.8] {
                let alpha = alpha(a);
                let f = entry.function(alpha);
                for t in [0.5, 1.0, 2.0, 5.0, 10.0] {
                    let exact = (entry.derivative)(a, t);
                    let lim = t_alpha_limit(&f, alpha, t, &opts).unwrap();
                    let red = t_alpha_reduction(&f, alpha, t).unwrap();
                    assert!(
                        scaled_residual(lim, exact) <= 1e-6,
                        "{} a={a} t={t}: limit {lim} vs {exact}",
                        entry.name
                    );
                    assert!(
                        scaled_residual(red, exact) <= 1e-6,
                        "{} a={a} t={t}: reduction {red} vs {exact}",
                        entry.name
                    );
                }
            }
        }
    }
}
