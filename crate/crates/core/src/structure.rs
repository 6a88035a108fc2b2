//! Solution-space structure of the homogeneous equation: the alpha-Wronskian,
//! Abel's identity, fundamental sets and general-solution assembly.

use std::thread;

use crate::calculus;
use crate::error::{Error, Result};
use crate::fde::{self, InitialCondition, SequentialFde, SolveOptions, Trajectory};
use crate::linalg::Matrix;
use crate::quadrature::QuadratureOptions;

/// Smallest-to-largest LU pivot ratio below which a system counts as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// The Wronskian matrix at `t`: row `k`, column `j` is `T^k y_j(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WronskianSample {
    pub t: f64,
    pub matrix: Matrix,
    pub det: f64,
}

impl WronskianSample {
    /// `|det| / prod_k ||row_k||_2`, in `[0, 1]` by Hadamard's inequality and
    /// unchanged by rescaling any row.
    pub fn normalized_det(&self) -> f64 {
        let n = self.matrix.dim();
        let norms: f64 = (0..n)
            .map(|k| self.matrix.row(k).iter().map(|v| v * v).sum::<f64>().sqrt())
            .product();
        if norms == 0.0 {
            0.0
        } else {
            self.det.abs() / norms
        }
    }
}

fn check_square(trajs: &[Trajectory]) -> Result<usize> {
    let n = trajs.len();
    if n == 0 {
        return Err(Error::Precondition("no trajectories".into()));
    }
    let first = &trajs[0];
    if let Some(bad) = trajs
        .iter()
        .find(|tr| tr.order() != n || tr.alpha() != first.alpha())
    {
        return Err(Error::Precondition(format!(
            "need {n} trajectories of order {n} with one alpha, found order {} alpha {}",
            bad.order(),
            bad.alpha()
        )));
    }
    Ok(n)
}

/// Reads the iterated derivatives straight from the trajectory states.
pub fn wronskian_at(trajs: &[Trajectory], t: f64) -> Result<WronskianSample> {
    let n = check_square(trajs)?;
    let mut matrix = Matrix::zeros(n);
    for (j, tr) in trajs.iter().enumerate() {
        let state = tr.state_at(t)?;
        for (k, v) in state.into_iter().enumerate() {
            matrix[(k, j)] = v;
        }
    }
    let det = matrix.det();
    Ok(WronskianSample { t, matrix, det })
}

/// `w0 * exp(-int_{t0}^t x^(alpha-1) p_{n-1}(x) dx)`.
pub fn abel_predict(fde: &SequentialFde, w0: f64, t0: f64, t: f64) -> Result<f64> {
    for (name, v) in [("t0", t0), ("t", t)] {
        if !fde.contains(v) {
            let (a, b) = fde.domain();
            return Err(Error::domain(format!("{name} = {v} outside ({a}, {b})")));
        }
    }
    let top = fde.coefficients().last().expect("order >= 1");
    let exponent = calculus::weighted_integral(
        |x| top.eval(x),
        fde.alpha(),
        t0,
        t,
        &QuadratureOptions::default(),
    )?;
    Ok(w0 * (-exponent).exp())
}

/// `n` solutions of the homogeneous equation, solution `j` started from the
/// `j`-th standard basis vector at `t0`.
#[derive(Debug, Clone)]
pub struct FundamentalSet {
    fde: SequentialFde,
    t0: f64,
    trajectories: Vec<Trajectory>,
    w_at_t0: f64,
}

impl FundamentalSet {
    /// Wraps arbitrary solutions without checking independence.
    pub fn from_trajectories(
        fde: SequentialFde,
        t0: f64,
        trajectories: Vec<Trajectory>,
    ) -> Result<FundamentalSet> {
        let w_at_t0 = wronskian_at(&trajectories, t0)?.det;
        Ok(FundamentalSet {
            fde,
            t0,
            trajectories,
            w_at_t0,
        })
    }

    pub fn fde(&self) -> &SequentialFde {
        &self.fde
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn w_at_t0(&self) -> f64 {
        self.w_at_t0
    }

    pub fn wronskian_at(&self, t: f64) -> Result<WronskianSample> {
        wronskian_at(&self.trajectories, t)
    }

    /// Measured Wronskian against the Abel prediction at each time.
    pub fn wronskian_profile(&self, times: &[f64]) -> Result<Vec<WronskianCheck>> {
        times
            .iter()
            .map(|&t| {
                let measured = self.wronskian_at(t)?.det;
                let predicted = abel_predict(&self.fde, self.w_at_t0, self.t0, t)?;
                Ok(WronskianCheck {
                    t,
                    measured,
                    predicted,
                    rel_error: (measured - predicted).abs() / predicted.abs(),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WronskianCheck {
    pub t: f64,
    pub measured: f64,
    pub predicted: f64,
    pub rel_error: f64,
}

/// Solves the `n` canonical problems over `span`, one thread each.
pub fn build_fundamental_set(
    fde: &SequentialFde,
    t0: f64,
    span: (f64, f64),
    opts: &SolveOptions,
) -> Result<FundamentalSet> {
    if !fde.is_homogeneous() {
        return Err(Error::Precondition(
            "fundamental sets need a homogeneous equation (q = 0)".into(),
        ));
    }
    let n = fde.order();
    let results: Vec<Result<Trajectory>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .map(|j| {
                scope.spawn(move || {
                    fde::solve_span(fde, &InitialCondition::canonical(t0, n, j), span, opts)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let trajectories = results.into_iter().collect::<Result<Vec<_>>>()?;
    let set = FundamentalSet::from_trajectories(fde.clone(), t0, trajectories)?;
    if (set.w_at_t0 - 1.0).abs() > 1e-6 {
        return Err(Error::Fundamentality { det: set.w_at_t0 });
    }
    Ok(set)
}

/// Independence test at a single point. Since a Wronskian that is nonzero
/// anywhere is nonzero everywhere, one probe decides the question.
pub fn is_fundamental(
    trajs: &[Trajectory],
    t_probe: f64,
    threshold: f64,
) -> Result<(bool, WronskianSample)> {
    let sample = wronskian_at(trajs, t_probe)?;
    Ok((sample.normalized_det() > threshold, sample))
}

/// Diagnostic variant probing every point; true only if all probes pass.
pub fn is_fundamental_scan(
    trajs: &[Trajectory],
    probes: &[f64],
    threshold: f64,
) -> Result<(bool, Vec<WronskianSample>)> {
    let samples = probes
        .iter()
        .map(|&t| wronskian_at(trajs, t))
        .collect::<Result<Vec<_>>>()?;
    let ok = samples.iter().all(|s| s.normalized_det() > threshold);
    Ok((ok, samples))
}

/// Coefficients `c` with `sum_j c_j T^k y_j(t0) = gamma_k`, by pivoted LU.
pub fn fit_coefficients(set: &FundamentalSet, target: &InitialCondition) -> Result<Vec<f64>> {
    let n = set.trajectories.len();
    if target.gamma.len() != n {
        return Err(Error::Invalid {
            field: "init".into(),
            message: format!("expected {n} values, got {}", target.gamma.len()),
        });
    }
    let sample = set.wronskian_at(target.t0)?;
    sample
        .matrix
        .lu()
        .solve(&target.gamma, SINGULAR_PIVOT_RATIO)
}

/// `sum_j c_j y_j(t)`, plus `y_p(t)` when a particular solution is given.
pub fn general_solution(
    set: &FundamentalSet,
    c: &[f64],
    particular: Option<&Trajectory>,
    t: f64,
) -> Result<f64> {
    if c.len() != set.trajectories.len() {
        return Err(Error::Precondition(format!(
            "{} coefficients for {} basis solutions",
            c.len(),
            set.trajectories.len()
        )));
    }
    let mut y = particular.map_or(Ok(0.0), |p| p.value_at(t))?;
    for (cj, tr) in c.iter().zip(&set.trajectories) {
        y += cj * tr.value_at(t)?;
    }
    Ok(y)
}

/// Pieces of a nonhomogeneous solution `y = y_p + sum c_j y_j`.
#[derive(Debug, Clone)]
pub struct NonhomogeneousSolution {
    pub solution: Trajectory,
    pub fundamental: FundamentalSet,
    pub particular: Trajectory,
    pub coefficients: Vec<f64>,
}

/// The particular solution starts from zero data at `ic.t0`, so the fitted
/// coefficients reproduce `gamma` exactly.
pub fn solve_nonhomogeneous(
    fde: &SequentialFde,
    ic: &InitialCondition,
    span: (f64, f64),
    opts: &SolveOptions,
) -> Result<NonhomogeneousSolution> {
    if fde.is_homogeneous() {
        return Err(Error::Precondition(
            "q = 0: use the homogeneous path (build_fundamental_set + fit_coefficients)".into(),
        ));
    }
    fde.check_initial_condition(ic)?;
    let n = fde.order();
    let zero = InitialCondition::new(ic.t0, vec![0.0; n]);
    let particular = fde::solve_span(fde, &zero, span, opts)?;
    let fundamental = build_fundamental_set(&fde.homogeneous_part(), ic.t0, span, opts)?;
    let yp0 = particular.state_at(ic.t0)?;
    let shifted = InitialCondition::new(
        ic.t0,
        ic.gamma.iter().zip(&yp0).map(|(g, p)| g - p).collect(),
    );
    let coefficients = fit_coefficients(&fundamental, &shifted)?;
    let mut terms: Vec<(f64, &Trajectory)> = coefficients
        .iter()
        .copied()
        .zip(fundamental.trajectories())
        .collect();
    terms.push((1.0, &particular));
    let solution = Trajectory::linear_combination(&terms)?;
    Ok(NonhomogeneousSolution {
        solution,
        fundamental,
        particular,
        coefficients,
    })
}
