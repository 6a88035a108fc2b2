//! Sequential linear conformable equations of order `n alpha` and their
//! initial value problems.
//!
//! The equation `T^n y + p_{n-1} T^{n-1} y + ... + p_0 y = q` is reduced to
//! the companion system in `X = [y, T y, ..., T^{n-1} y]`. By default the
//! system is integrated in `s = t^alpha / alpha`, where it is the classical
//! `dX/ds = A X + b`.

use std::sync::Arc;

use crate::calculus::{self, AlphaOrder, DerivativeOptions, RealFunction};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::Matrix;
use crate::quadrature::QuadratureOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialFde {
    alpha: AlphaOrder,
    p: Vec<Expr>,
    q: Expr,
    domain: (f64, f64),
}

impl SequentialFde {
    /// `p[i]` is the coefficient of `T^i y`; the order is `p.len()`.
    pub fn new(alpha: AlphaOrder, p: Vec<Expr>, q: Expr, domain: (f64, f64)) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Invalid {
                field: "p".into(),
                message: "order must be at least 1".into(),
            });
        }
        let (a, b) = domain;
        if !(a > 0.0 && a < b && b.is_finite()) {
            return Err(Error::Invalid {
                field: "domain".into(),
                message: format!("need 0 < a < b < inf, got ({a}, {b})"),
            });
        }
        Ok(SequentialFde {
            alpha,
            p,
            q,
            domain,
        })
    }

    pub fn homogeneous(alpha: AlphaOrder, p: Vec<Expr>, domain: (f64, f64)) -> Result<Self> {
        SequentialFde::new(alpha, p, Expr::zero(), domain)
    }

    /// Parses coefficient and forcing strings.
    pub fn parse(alpha: f64, p: &[&str], q: &str, domain: (f64, f64)) -> Result<Self> {
        let p = p
            .iter()
            .map(|s| Expr::parse(s))
            .collect::<Result<Vec<_>>>()?;
        SequentialFde::new(AlphaOrder::new(alpha)?, p, Expr::parse(q)?, domain)
    }

    pub fn alpha(&self) -> AlphaOrder {
        self.alpha
    }

    pub fn order(&self) -> usize {
        self.p.len()
    }

    pub fn coefficients(&self) -> &[Expr] {
        &self.p
    }

    pub fn forcing(&self) -> &Expr {
        &self.q
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// True when the forcing term is the literal zero.
    pub fn is_homogeneous(&self) -> bool {
        self.q.is_zero()
    }

    /// Same coefficients with `q = 0`.
    pub fn homogeneous_part(&self) -> SequentialFde {
        SequentialFde {
            q: Expr::zero(),
            ..self.clone()
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.domain.0 && t < self.domain.1
    }

    fn require_inside(&self, what: &str, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{what} = {t} outside the open domain ({}, {})",
                self.domain.0, self.domain.1
            )))
        }
    }

    /// Checks length and placement of an initial condition against this equation.
    pub fn check_initial_condition(&self, ic: &InitialCondition) -> Result<()> {
        if ic.gamma.len() != self.order() {
            return Err(Error::Invalid {
                field: "init".into(),
                message: format!("expected {} values, got {}", self.order(), ic.gamma.len()),
            });
        }
        if !self.contains(ic.t0) {
            return Err(Error::Invalid {
                field: "t0".into(),
                message: format!(
                    "t0 = {} outside ({}, {})",
                    ic.t0, self.domain.0, self.domain.1
                ),
            });
        }
        Ok(())
    }
}

/// `T^k y(t0) = gamma[k]` for `k = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub t0: f64,
    pub gamma: Vec<f64>,
}

impl InitialCondition {
    pub fn new(t0: f64, gamma: Vec<f64>) -> Self {
        InitialCondition { t0, gamma }
    }

    /// The `j`-th canonical condition: `gamma = e_j`.
    pub fn canonical(t0: f64, n: usize, j: usize) -> Self {
        let mut gamma = vec![0.0; n];
        gamma[j] = 1.0;
        InitialCondition { t0, gamma }
    }
}

/// Companion form `T X = A(t) X + b(t)`: ones on the superdiagonal, last row
/// `-p_0(t) .. -p_{n-1}(t)`, and `b = q(t) e_n`.
pub fn companion_system(fde: &SequentialFde, t: f64) -> Result<(Matrix, Vec<f64>)> {
    fde.require_inside("t", t)?;
    let n = fde.order();
    let mut a = Matrix::zeros(n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for (j, pj) in fde.p.iter().enumerate() {
        a[(n - 1, j)] = -pj.eval(t)?;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = fde.q.eval(t)?;
    Ok((a, b))
}

/// Companion matrix with the last row's sign reversed. A deliberately wrong
/// reduction, used to check that verification notices.
pub fn flipped_companion_system(fde: &SequentialFde, t: f64) -> Result<(Matrix, Vec<f64>)> {
    let (mut a, b) = companion_system(fde, t)?;
    let n = fde.order();
    for j in 0..n {
        a[(n - 1, j)] = -a[(n - 1, j)];
    }
    Ok((a, b))
}

/// Builds `(A(t), b(t))`. Must keep ones on the superdiagonal and zeros
/// elsewhere above the last row; the dense output relies on that shape.
pub type CompanionFn = fn(&SequentialFde, f64) -> Result<(Matrix, Vec<f64>)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationVariable {
    /// `s = t^alpha / alpha`; the conformable derivative is `d/ds`.
    Substituted,
    /// Plain `t` with `X' = t^(alpha-1) (A X + b)`.
    Direct,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Defaults to `1e-3 |x_end - x_0|` in the integration variable.
    pub initial_step: Option<f64>,
    /// Defaults to `0.01 |x_end - x_0|`, which keeps the dense output
    /// accurate between nodes.
    pub max_step: Option<f64>,
    pub max_steps: usize,
    pub variable: IntegrationVariable,
    pub companion: CompanionFn,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rtol: 1e-9,
            atol: 1e-12,
            initial_step: None,
            max_step: None,
            max_steps: 1_000_000,
            variable: IntegrationVariable::Substituted,
            companion: companion_system,
        }
    }
}

impl SolveOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        SolveOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }
}

/// Solution nodes with the full state `[y, T y, ..., T^{n-1} y]` and a
/// piecewise Hermite dense output.
///
/// Each state component carries its derivatives with respect to the
/// integration variable at every node. In the substituted variable those are
/// the higher state components themselves (`d x_k / ds = x_{k+1}`), closed by
/// the last right-hand side, so `y` is interpolated by a degree `2n+1`
/// Hermite polynomial per step. In direct mode every component is cubic.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    alpha: AlphaOrder,
    variable: IntegrationVariable,
    order: usize,
    nodes: Vec<f64>,
    coords: Vec<f64>,
    states: Vec<Vec<f64>>,
    // jets[node][component][derivative order in the integration variable]
    jets: Vec<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn alpha(&self) -> AlphaOrder {
        self.alpha
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn variable(&self) -> IntegrationVariable {
        self.variable
    }

    /// Node times, strictly increasing.
    pub fn grid(&self) -> &[f64] {
        &self.nodes
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().expect("non-empty"))
    }

    pub fn covers(&self, t: f64) -> bool {
        let (lo, hi) = self.t_range();
        t >= lo && t <= hi
    }

    fn coord(&self, t: f64) -> f64 {
        match self.variable {
            IntegrationVariable::Substituted => self.alpha.to_s(t),
            IntegrationVariable::Direct => t,
        }
    }

    /// Index `i` with `nodes[i] <= t <= nodes[i + 1]`.
    fn bracket(&self, t: f64) -> Result<usize> {
        if !self.covers(t) {
            let (lo, hi) = self.t_range();
            return Err(Error::domain(format!(
                "t = {t} outside trajectory range [{lo}, {hi}]"
            )));
        }
        let i = self.nodes.partition_point(|&x| x <= t);
        Ok(i.saturating_sub(1).min(self.nodes.len().saturating_sub(2)))
    }

    /// Derivatives of component `k` at `t` in the integration variable,
    /// orders `0..=jet length`.
    fn jet_at(&self, t: f64, k: usize) -> Result<Vec<f64>> {
        let i = self.bracket(t)?;
        if self.nodes[i] == t || self.nodes.len() == 1 {
            return Ok(self.jets[i][k].clone());
        }
        if self.nodes[i + 1] == t {
            return Ok(self.jets[i + 1][k].clone());
        }
        let h = self.coords[i + 1] - self.coords[i];
        let theta = (self.coord(t) - self.coords[i]) / h;
        let poly = hermite_poly(&self.jets[i][k], &self.jets[i + 1][k], h);
        let m = self.jets[i][k].len();
        Ok((0..m)
            .map(|j| poly_derivative_at(&poly, j, theta) / h.powi(j as i32))
            .collect())
    }

    pub fn component_at(&self, t: f64, k: usize) -> Result<f64> {
        if k >= self.order {
            return Err(Error::Precondition(format!(
                "component {k} requested from an order-{} trajectory",
                self.order
            )));
        }
        let i = self.bracket(t)?;
        if self.nodes[i] == t {
            return Ok(self.states[i][k]);
        }
        if self.nodes[i + 1] == t {
            return Ok(self.states[i + 1][k]);
        }
        let h = self.coords[i + 1] - self.coords[i];
        let theta = (self.coord(t) - self.coords[i]) / h;
        let poly = hermite_poly(&self.jets[i][k], &self.jets[i + 1][k], h);
        Ok(poly_derivative_at(&poly, 0, theta))
    }

    /// Full state `[y, T y, ..., T^{n-1} y]` at `t` from the dense output.
    pub fn state_at(&self, t: f64) -> Result<Vec<f64>> {
        (0..self.order).map(|k| self.component_at(t, k)).collect()
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        self.component_at(t, 0)
    }

    /// Component `k` as a function on the open trajectory range.
    pub fn component_function(&self, k: usize) -> RealFunction {
        let traj = Arc::new(self.clone());
        let (lo, hi) = self.t_range();
        RealFunction::new(move |t| traj.component_at(t, k)).with_domain(lo, hi)
    }

    /// `count` uniformly spaced times across the range with their states.
    pub fn resample(&self, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let (lo, hi) = self.t_range();
        let count = count.max(2);
        (0..count)
            .map(|i| {
                let t = if i + 1 == count {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1) as f64
                };
                Ok((t, self.state_at(t)?))
            })
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Trajectory {
        let mut out = self.clone();
        out.states.iter_mut().flatten().for_each(|v| *v *= c);
        out.jets
            .iter_mut()
            .flatten()
            .flatten()
            .for_each(|v| *v *= c);
        out
    }

    /// `sum c_j traj_j` over the common range, exact with respect to the
    /// dense outputs: every piece is a polynomial of the same degree, so it
    /// is reproduced by Hermite data on the merged grid.
    pub fn linear_combination(terms: &[(f64, &Trajectory)]) -> Result<Trajectory> {
        let (_, first) = *terms
            .first()
            .ok_or_else(|| Error::Precondition("linear combination of no trajectories".into()))?;
        for (_, other) in terms {
            if other.alpha != first.alpha
                || other.variable != first.variable
                || other.order != first.order
            {
                return Err(Error::Precondition(
                    "trajectories differ in order, alpha or integration variable".into(),
                ));
            }
        }
        let lo = terms
            .iter()
            .map(|(_, tr)| tr.t_range().0)
            .fold(f64::MIN, f64::max);
        let hi = terms
            .iter()
            .map(|(_, tr)| tr.t_range().1)
            .fold(f64::MAX, f64::min);
        if lo > hi {
            return Err(Error::Precondition("trajectories do not overlap".into()));
        }
        let mut nodes: Vec<f64> = terms
            .iter()
            .flat_map(|(_, tr)| tr.nodes.iter().copied())
            .filter(|&t| t >= lo && t <= hi)
            .collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let n = first.order;
        let mut jets = Vec::with_capacity(nodes.len());
        for &t in &nodes {
            let mut node_jets: Vec<Vec<f64>> = Vec::with_capacity(n);
            for k in 0..n {
                let mut acc: Option<Vec<f64>> = None;
                for (c, tr) in terms {
                    let jet = tr.jet_at(t, k)?;
                    match acc.as_mut() {
                        None => acc = Some(jet.iter().map(|v| c * v).collect()),
                        Some(a) => a.iter_mut().zip(&jet).for_each(|(a, v)| *a += c * v),
                    }
                }
                node_jets.push(acc.expect("at least one term"));
            }
            jets.push(node_jets);
        }
        let states = jets
            .iter()
            .map(|node: &Vec<Vec<f64>>| node.iter().map(|jet| jet[0]).collect())
            .collect();
        let coords = nodes.iter().map(|&t| first.coord(t)).collect();
        Ok(Trajectory {
            alpha: first.alpha,
            variable: first.variable,
            order: n,
            nodes,
            coords,
            states,
            jets,
        })
    }

    /// Joins a trajectory ending at `t0` with one starting at `t0`.
    fn join(left: Trajectory, right: Trajectory) -> Trajectory {
        debug_assert_eq!(left.nodes.last(), right.nodes.first());
        let mut out = left;
        out.nodes.extend(right.nodes.into_iter().skip(1));
        out.coords.extend(right.coords.into_iter().skip(1));
        out.states.extend(right.states.into_iter().skip(1));
        out.jets.extend(right.jets.into_iter().skip(1));
        out
    }
}

/// Monomial coefficients in `theta` of the two-point Hermite interpolant on
/// `[0, 1]`, given unscaled derivatives at both ends and the step length.
fn hermite_poly(left: &[f64], right: &[f64], h: f64) -> Vec<f64> {
    let m = left.len();
    let size = 2 * m;
    let z: Vec<f64> = (0..size).map(|i| if i < m { 0.0 } else { 1.0 }).collect();
    // Scaled Taylor coefficients h^j f^(j) / j!.
    let mut taylor_left = Vec::with_capacity(m);
    let mut taylor_right = Vec::with_capacity(m);
    let mut scale = 1.0;
    for j in 0..m {
        if j > 0 {
            scale *= h / j as f64;
        }
        taylor_left.push(left[j] * scale);
        taylor_right.push(right[j] * scale);
    }
    // Divided differences over the repeated nodes, column by column.
    let mut column: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(i, _)| {
            if i < m {
                taylor_left[0]
            } else {
                taylor_right[0]
            }
        })
        .collect();
    let mut newton = vec![column[0]];
    for k in 1..size {
        let mut next = Vec::with_capacity(size - k);
        for i in 0..size - k {
            let value = if z[i] == z[i + k] {
                if i < m {
                    taylor_left[k]
                } else {
                    taylor_right[k]
                }
            } else {
                (column[i + 1] - column[i]) / (z[i + k] - z[i])
            };
            next.push(value);
        }
        newton.push(next[0]);
        column = next;
    }
    // Expand the Newton form into monomials.
    let mut poly = vec![newton[size - 1]];
    for k in (0..size - 1).rev() {
        let mut shifted = vec![0.0; poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            shifted[i + 1] += c;
            shifted[i] -= c * z[k];
        }
        shifted[0] += newton[k];
        poly = shifted;
    }
    poly
}

fn poly_derivative_at(poly: &[f64], order: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for i in (order..poly.len()).rev() {
        let falling: f64 = (0..order).map(|r| (i - r) as f64).product();
        acc = acc * x + poly[i] * falling;
    }
    acc
}

struct System<'a> {
    fde: &'a SequentialFde,
    opts: &'a SolveOptions,
}

impl System<'_> {
    fn time(&self, x: f64) -> f64 {
        match self.opts.variable {
            IntegrationVariable::Substituted => self.fde.alpha.from_s(x),
            IntegrationVariable::Direct => x,
        }
    }

    fn rhs(&self, x: f64, state: &[f64]) -> Result<Vec<f64>> {
        let t = self.time(x);
        let (a, b) = (self.opts.companion)(self.fde, t)?;
        let mut out = a.mul_vec(state);
        out.iter_mut().zip(&b).for_each(|(o, bi)| *o += bi);
        if self.opts.variable == IntegrationVariable::Direct {
            let w = self.fde.alpha.weight(t);
            out.iter_mut().for_each(|o| *o *= w);
        }
        Ok(out)
    }

    fn jets(&self, state: &[f64], slope: &[f64]) -> Vec<Vec<f64>> {
        let n = state.len();
        match self.opts.variable {
            IntegrationVariable::Substituted => (0..n)
                .map(|k| {
                    let mut jet = state[k..].to_vec();
                    jet.push(slope[n - 1]);
                    jet
                })
                .collect(),
            IntegrationVariable::Direct => (0..n).map(|k| vec![state[k], slope[k]]).collect(),
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from `ic.t0` to `t_end` (either direction).
pub fn solve_ivp(
    fde: &SequentialFde,
    ic: &InitialCondition,
    t_end: f64,
    opts: &SolveOptions,
) -> Result<Trajectory> {
    fde.check_initial_condition(ic).map_err(|e| match e {
        Error::Invalid { field, message } if field == "t0" => Error::Domain(message),
        other => other,
    })?;
    fde.require_inside("t_end", t_end)?;
    let system = System { fde, opts };
    let alpha = fde.alpha;
    let to_x = |t: f64| match opts.variable {
        IntegrationVariable::Substituted => alpha.to_s(t),
        IntegrationVariable::Direct => t,
    };
    let x0 = to_x(ic.t0);
    let x_end = to_x(t_end);
    let n = fde.order();

    let mut state = ic.gamma.clone();
    let mut slope = system.rhs(x0, &state)?;
    let mut nodes = vec![ic.t0];
    let mut coords = vec![x0];
    let mut states = vec![state.clone()];
    let mut jets = vec![system.jets(&state, &slope)];

    let span = x_end - x0;
    if span != 0.0 {
        let direction = span.signum();
        let h_max = opts.max_step.unwrap_or(0.01 * span.abs()).abs();
        let mut x = x0;
        let mut h = opts
            .initial_step
            .unwrap_or(1e-3 * span.abs())
            .abs()
            .min(h_max)
            * direction;
        let mut steps = 0usize;
        let mut rejected_last = false;
        let mut k = vec![vec![0.0; n]; 7];
        loop {
            let remaining = x_end - x;
            let last = h.abs() >= remaining.abs();
            if last {
                h = remaining;
            }
            let min_step = 16.0 * f64::EPSILON * x.abs().max(1.0);
            if h.abs() < min_step {
                return Err(Error::StepUnderflow {
                    t: system.time(x),
                    step: h.abs(),
                });
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::MaxSteps(opts.max_steps));
            }

            k[0].clone_from(&slope);
            let mut stage = vec![0.0; n];
            for s in 1..7 {
                for i in 0..n {
                    let incr: f64 = (0..s).map(|j| A[s][j] * k[j][i]).sum();
                    stage[i] = state[i] + h * incr;
                }
                let xs = if s >= 5 { x + h } else { x + C[s] * h };
                k[s] = system.rhs(xs, &stage)?;
            }
            // Stage 7 was evaluated at the fifth-order solution.
            let candidate = stage;
            let mut err_sq = 0.0;
            for i in 0..n {
                let e: f64 = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let sc = opts.atol + opts.rtol * state[i].abs().max(candidate[i].abs());
                err_sq += (e / sc).powi(2);
            }
            let err = (err_sq / n as f64).sqrt();
            if !err.is_finite() {
                h *= 0.2;
                rejected_last = true;
                continue;
            }
            if err <= 1.0 {
                x = if last { x_end } else { x + h };
                state = candidate;
                slope = k[6].clone();
                nodes.push(if last { t_end } else { system.time(x) });
                coords.push(x);
                jets.push(system.jets(&state, &slope));
                states.push(state.clone());
                if last {
                    break;
                }
                let mut factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                if rejected_last {
                    factor = factor.min(1.0);
                }
                h = (h * factor).abs().min(h_max) * direction;
                rejected_last = false;
            } else {
                h *= (0.9 * err.powf(-0.2)).max(0.2);
                rejected_last = true;
            }
        }
    }

    let mut traj = Trajectory {
        alpha,
        variable: opts.variable,
        order: n,
        nodes,
        coords,
        states,
        jets,
    };
    if span < 0.0 {
        traj.nodes.reverse();
        traj.coords.reverse();
        traj.states.reverse();
        traj.jets.reverse();
    }
    Ok(traj)
}

/// Solves over `span = (t_lo, t_hi)` containing `ic.t0`, integrating both ways.
pub fn solve_span(
    fde: &SequentialFde,
    ic: &InitialCondition,
    span: (f64, f64),
    opts: &SolveOptions,
) -> Result<Trajectory> {
    let (lo, hi) = span;
    if !(lo <= ic.t0 && ic.t0 <= hi) {
        return Err(Error::Invalid {
            field: "span".into(),
            message: format!("span [{lo}, {hi}] does not contain t0 = {}", ic.t0),
        });
    }
    let backward = solve_ivp(fde, ic, lo, opts)?;
    let forward = solve_ivp(fde, ic, hi, opts)?;
    Ok(Trajectory::join(backward, forward))
}

/// First-order problem `T y + p y = q`, `y(t0) = y0`, by the integrating
/// factor: `y(t) = e^{-mu(t)} [y0 + int_{t0}^t e^{mu(x)} x^(alpha-1) q(x) dx]`
/// with `mu(t) = int_{t0}^t x^(alpha-1) p(x) dx`.
pub fn solve_first_order_closed_form(
    p: &Expr,
    q: &Expr,
    alpha: AlphaOrder,
    ic: (f64, f64),
    t: f64,
) -> Result<f64> {
    let (t0, y0) = ic;
    if !(t0 > 0.0 && t > 0.0) {
        return Err(Error::domain(format!(
            "need t0, t > 0, got t0 = {t0}, t = {t}"
        )));
    }
    let opts = QuadratureOptions::default();
    let mu = |x: f64| calculus::weighted_integral(|u| p.eval(u), alpha, t0, x, &opts);
    let forced = if q.is_zero() {
        0.0
    } else {
        calculus::weighted_integral(|x| Ok(mu(x)?.exp() * q.eval(x)?), alpha, t0, t, &opts)?
    };
    Ok((-mu(t)?).exp() * (y0 + forced))
}

/// `L[y](t) - q(t)` for the dense output of `traj`, with the iterated
/// derivatives of `y` taken numerically.
pub fn residual(
    fde: &SequentialFde,
    traj: &Trajectory,
    t: f64,
    opts: &DerivativeOptions,
) -> Result<f64> {
    let y = traj.component_function(0);
    let alpha = fde.alpha;
    let n = fde.order();
    let mut total = calculus::iterated_t_alpha(&y, alpha, n, t, opts)?;
    for (i, p) in fde.p.iter().enumerate() {
        total += p.eval(t)? * calculus::iterated_t_alpha(&y, alpha, i, t, opts)?;
    }
    Ok(total - fde.q.eval(t)?)
}
