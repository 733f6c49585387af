//! Newton-Raphson on scalar residuals with central-difference derivatives.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::fmt_float;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol_f: f64,
    pub tol_df: f64,
    pub tol_step: f64,
    /// Relative central-difference step factor; see [`central_difference`].
    pub fd_scale: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 20,
            tol_f: 1e-15,
            tol_df: 1e-10,
            tol_step: 1e-10,
            fd_scale: f64::EPSILON.sqrt(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tol_f, self.tol_df, self.tol_step, self.fd_scale];
        if self.max_iter == 0 || positive.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidConfig(format!("solver config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    ConvergedResidual,
    StoppedFlatDerivative,
    StoppedSmallStep,
    MaxIterations,
    Diverged,
}

impl SolveStatus {
    pub fn converged(self) -> bool {
        self == SolveStatus::ConvergedResidual
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::ConvergedResidual => "converged",
            SolveStatus::StoppedFlatDerivative => "flat derivative",
            SolveStatus::StoppedSmallStep => "small step",
            SolveStatus::MaxIterations => "max iterations",
            SolveStatus::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub x: Vec<f64>,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub root: Vec<f64>,
    pub iterations: usize,
    /// Every iterate with its residual, starting with the initial point.
    pub path: Vec<PathPoint>,
}

impl SolveOutcome {
    /// Residual at the final iterate.
    pub fn residual(&self) -> f64 {
        self.path.last().map_or(f64::NAN, |p| p.g)
    }

    /// Writes the iterate path as CSV: `step,x,g` (or `step,x1,..,xn,g`).
    pub fn write_path_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.root.len();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string()];
        if n == 1 {
            header.push("x".into());
        } else {
            header.extend((1..=n).map(|i| format!("x{i}")));
        }
        header.push("g".into());
        w.write_record(&header)?;
        for (step, p) in self.path.iter().enumerate() {
            let mut row = vec![step.to_string()];
            row.extend(p.x.iter().map(|&v| fmt_float(v)));
            row.push(fmt_float(p.g));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<path>".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// `fd_scale` times the smallest power of two not below `max(|x|, 1)`.
/// With a power-of-two `fd_scale` the step is a power of two, so `x +- h`
/// are usually exact and affine residuals get exact slopes.
fn fd_step(x: f64, cfg: &SolverConfig) -> f64 {
    let s = x.abs().max(1.0);
    if !s.is_finite() {
        return f64::NAN;
    }
    let p = f64::from_bits(s.to_bits() & 0x7ff0_0000_0000_0000);
    let p = if p < s { 2.0 * p } else { p };
    cfg.fd_scale * p
}

/// `(g(x+h) - g(x-h)) / (2h)` with `h = fd_scale * 2^ceil(log2(max(|x|, 1)))`,
/// dividing by the representable spacing `(x+h) - (x-h)` so the quotient
/// uses the points actually probed.
pub fn central_difference(g: impl Fn(f64) -> f64, x: f64, cfg: &SolverConfig) -> f64 {
    let h = fd_step(x, cfg);
    let (xp, xm) = (x + h, x - h);
    (g(xp) - g(xm)) / (xp - xm)
}

/// Componentwise central differences with per-coordinate steps.
pub fn gradient_fd(g: impl Fn(&[f64]) -> f64, x: &[f64], cfg: &SolverConfig) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(x[i], cfg);
            let (xp, xm) = (x[i] + h, x[i] - h);
            probe[i] = xp;
            let gp = g(&probe);
            probe[i] = xm;
            let gm = g(&probe);
            probe[i] = x[i];
            (gp - gm) / (xp - xm)
        })
        .collect()
}

/// `d / m`, with infinite `m` mapping infinite entries to +-1 and the rest to 0.
fn unit(d: f64, m: f64) -> f64 {
    if m.is_infinite() {
        if d.is_infinite() {
            d.signum()
        } else {
            0.0
        }
    } else {
        d / m
    }
}

/// Largest magnitude and sum of squares scaled by it.
fn scaled(v: &[f64]) -> (f64, f64) {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return (m, 1.0);
    }
    (m, v.iter().map(|&x| unit(x, m) * unit(x, m)).sum())
}

/// Euclidean norm; exact for one component.
fn norm(v: &[f64]) -> f64 {
    let (m, s) = scaled(v);
    m * s.sqrt()
}

/// Univariate Newton: `x <- x - g(x) / g'(x)`.
pub fn newton_solve(g: impl Fn(f64) -> f64, x0: f64, cfg: &SolverConfig) -> SolveOutcome {
    let mut x = x0;
    let mut gx = g(x);
    let mut path = vec![PathPoint { x: vec![x], g: gx }];
    let mut iterations = 0;
    let status = loop {
        if !gx.is_finite() || !x.is_finite() {
            break SolveStatus::Diverged;
        }
        if gx.abs() < cfg.tol_f {
            break SolveStatus::ConvergedResidual;
        }
        if iterations >= cfg.max_iter {
            break SolveStatus::MaxIterations;
        }
        let d = central_difference(&g, x, cfg);
        if d.is_nan() {
            break SolveStatus::Diverged;
        }
        if d.abs() < cfg.tol_df {
            break SolveStatus::StoppedFlatDerivative;
        }
        let step = gx / d;
        x -= step;
        gx = g(x);
        iterations += 1;
        path.push(PathPoint { x: vec![x], g: gx });
        if gx.is_finite() && x.is_finite() && gx.abs() >= cfg.tol_f && step.abs() < cfg.tol_step {
            break SolveStatus::StoppedSmallStep;
        }
    };
    SolveOutcome {
        status,
        root: vec![x],
        iterations,
        path,
    }
}

/// Minimal-norm Newton for one equation in `n` unknowns:
/// `x <- x - g(x) * grad / |grad|^2`. Reduces to [`newton_solve`] bit for
/// bit when `n = 1`.
pub fn newton_solve_multi(g: impl Fn(&[f64]) -> f64, x0: &[f64], cfg: &SolverConfig) -> SolveOutcome {
    let mut x = x0.to_vec();
    let mut gx = g(&x);
    let mut path = vec![PathPoint { x: x.clone(), g: gx }];
    let mut iterations = 0;
    let status = loop {
        if !gx.is_finite() || x.iter().any(|v| !v.is_finite()) {
            break SolveStatus::Diverged;
        }
        if gx.abs() < cfg.tol_f {
            break SolveStatus::ConvergedResidual;
        }
        if iterations >= cfg.max_iter {
            break SolveStatus::MaxIterations;
        }
        let grad = gradient_fd(&g, &x, cfg);
        if grad.iter().any(|d| d.is_nan()) {
            break SolveStatus::Diverged;
        }
        let (m, s) = scaled(&grad);
        if m * s.sqrt() < cfg.tol_df {
            break SolveStatus::StoppedFlatDerivative;
        }
        // g * (d_i / m) / (m * s): for n = 1 this is exactly g / d
        let step: Vec<f64> = grad.iter().map(|&d| gx * unit(d, m) / (m * s)).collect();
        for (xi, s) in x.iter_mut().zip(&step) {
            *xi -= s;
        }
        gx = g(&x);
        iterations += 1;
        path.push(PathPoint { x: x.clone(), g: gx });
        let finite = gx.is_finite() && x.iter().all(|v| v.is_finite());
        if finite && gx.abs() >= cfg.tol_f && norm(&step) < cfg.tol_step {
            break SolveStatus::StoppedSmallStep;
        }
    };
    SolveOutcome {
        status,
        root: x,
        iterations,
        path,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(x: f64) -> f64 {
        x * x * x - 2.0 * x - 5.0
    }

    #[test]
    fn defaults() {
        let c = SolverConfig::default();
        assert_eq!(c.max_iter, 20);
        assert_eq!(c.tol_f, 1e-15);
        assert_eq!(c.tol_df, 1e-10);
        assert_eq!(c.tol_step, 1e-10);
        assert_eq!(c.fd_scale, 2f64.powi(-26));
        assert!(c.validate().is_ok());
        assert!(SolverConfig { max_iter: 0, ..c }.validate().is_err());
    }

    #[test]
    fn central_differences() {
        let c = SolverConfig::default();
        assert_eq!(central_difference(|x| x * x, 3.0, &c), 6.0);
        assert!((central_difference(f64::sin, 0.0, &c) - 1.0).abs() < 1e-9);
        assert!((central_difference(cubic, 2.0, &c) - 10.0).abs() < 1e-6);
        assert!(central_difference(|_| f64::NAN, 1.0, &c).is_nan());
    }

    #[test]
    fn cubic_iterates() {
        let out = newton_solve(cubic, 2.0, &SolverConfig::default());
        assert_eq!(out.status, SolveStatus::ConvergedResidual);
        let xs: Vec<f64> = out.path.iter().map(|p| p.x[0]).collect();
        assert_eq!(xs[0], 2.0);
        assert!((xs[1] - 2.1).abs() <= f64::EPSILON * 2.1, "{}", xs[1]);
        assert!((xs[2] - 2.0946).abs() < 5e-5);
        assert!((out.root[0] - 2.0945514815423265).abs() < 1e-12);
        assert_eq!(out.path.len(), out.iterations + 1);
    }

    #[test]
    fn affine_in_one_step() {
        let out = newton_solve(|x| x - 7.0, 100.0, &SolverConfig::default());
        assert_eq!(out.status, SolveStatus::ConvergedResidual);
        assert_eq!(out.root, vec![7.0]);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn sine_from_three() {
        let out = newton_solve(|x| x.sin() - 0.4, 3.0, &SolverConfig::default());
        assert!(out.status.converged());
        let w = out.root[0];
        assert!((w.sin() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn statuses() {
        let c = SolverConfig::default();
        assert_eq!(newton_solve(|_| f64::NAN, 1.0, &c).status, SolveStatus::Diverged);
        assert_eq!(newton_solve(|_| 1.0, 1.0, &c).status, SolveStatus::StoppedFlatDerivative);
        let out = newton_solve(|x| x * x + 1.0, 0.5, &c);
        assert!(!out.status.converged());
        assert!(out.iterations <= c.max_iter);
    }

    #[test]
    fn gradients() {
        let c = SolverConfig::default();
        let g = gradient_fd(|v| v[0] + v[1], &[1.0, 2.0], &c);
        assert!((g[0] - 1.0).abs() < 1e-9 && (g[1] - 1.0).abs() < 1e-9);
        let g = gradient_fd(|v| v[0] * v[1], &[3.0, 5.0], &c);
        assert!((g[0] - 5.0).abs() < 1e-6 && (g[1] - 3.0).abs() < 1e-6);
        let g = gradient_fd(|v| v[0] * v[0] - v[1], &[2.0, 1.0], &c);
        assert!((g[0] - 4.0).abs() < 1e-6 && (g[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn multivariate() {
        let c = SolverConfig::default();
        let out = newton_solve_multi(|v| v[0] + v[1], &[10.0, 3.0], &c);
        assert!(out.status.converged());
        assert_eq!(out.iterations, 1);
        assert!((out.root[0] + out.root[1]).abs() < 1e-15);

        let out = newton_solve_multi(|v| v[0] * v[1] - 1.0, &[2.0, 2.0], &c);
        assert!(out.status.converged());
        assert!((out.root[0] * out.root[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_reduction() {
        let c = SolverConfig::default();
        let a = newton_solve(cubic, 2.0, &c);
        let b = newton_solve_multi(|v| cubic(v[0]), &[2.0], &c);
        assert_eq!(a, b);
    }

    #[test]
    fn scaled_norm() {
        assert_eq!(norm(&[-3.0]), 3.0);
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(norm(&[1e300, 1e300]), 1e300 * 2f64.sqrt());
        assert_eq!(norm(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn path_csv() {
        let out = newton_solve(|x| x - 7.0, 100.0, &SolverConfig::default());
        let mut buf = Vec::new();
        out.write_path_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,x,g\n0,100.0,93.0\n1,7.0,0.0\n");
    }
}
