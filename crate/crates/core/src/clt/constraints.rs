//! Admissible-parameter predicates for the two regimes and the closed-form
//! constants of the oscillatory limit law.

use serde::Serialize;

use crate::error::{Error, Result};

/// Outcome of the oscillatory-regime condition `0 < c < 12(1-ω²)/(7-5ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A3Check {
    pub ok: bool,
    /// Upper bound on `c` at this `ω`.
    pub bound: f64,
    /// `bound - c`; positive when the upper inequality holds.
    pub margin: f64,
}

/// Checks the oscillatory-regime condition on `(ω, c)`.
///
/// The bound is only meaningful for `ω ∈ (-1, 1)`; outside that range the
/// check reports `ok = false`.
pub fn check_a3(omega: f64, c: f64) -> A3Check {
    let bound = 12.0 * (1.0 - omega * omega) / (7.0 - 5.0 * omega);
    let in_range = omega > -1.0 && omega < 1.0;
    A3Check {
        ok: in_range && c > 0.0 && c < bound,
        bound,
        margin: bound - c,
    }
}

/// Outcome of the converging-regime condition `1+ω-c < ω/c < (1+c)/4`
/// together with the side conditions `c > 1` and `ω ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct B2Check {
    pub ok: bool,
    /// `1 + ω - c`.
    pub lower: f64,
    /// `ω / c`.
    pub middle: f64,
    /// `(1 + c) / 4`.
    pub upper: f64,
    /// `middle - lower`; positive when the left inequality holds.
    pub lower_margin: f64,
    /// `upper - middle`; positive when the right inequality holds.
    pub upper_margin: f64,
    pub side_conditions: bool,
}

pub fn check_b2(omega: f64, c: f64) -> B2Check {
    let lower = 1.0 + omega - c;
    let middle = omega / c;
    let upper = (1.0 + c) / 4.0;
    let side_conditions = c > 1.0 && omega > 0.0 && omega < 1.0;
    B2Check {
        ok: side_conditions && lower < middle && middle < upper,
        lower,
        middle,
        upper,
        lower_margin: middle - lower,
        upper_margin: upper - middle,
        side_conditions,
    }
}

/// The scalar constants `(𝔏, ℭ)` of the oscillatory limit law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Constants {
    pub l_const: f64,
    pub c_const: f64,
}

/// `c·(1-ω)/(1+ω)·(1+ω-c/2)`, the common factor of both constants.
pub fn theorem1_core(omega: f64, c: f64) -> f64 {
    c * (1.0 - omega) / (1.0 + omega) * (1.0 + omega - 0.5 * c)
}

/// Evaluates `𝔏 = 2c·k·(1+ω-c/2) - c²/6` and `ℭ = c·k·(1+ω-c/2) / (12𝔏)`
/// with `k = (1-ω)/(1+ω)`.
///
/// Rejects parameters outside the oscillatory regime, where `𝔏 ≤ 0` and the
/// limiting covariance does not exist.
pub fn theorem1_constants(omega: f64, c: f64) -> Result<Theorem1Constants> {
    let a3 = check_a3(omega, c);
    if !a3.ok {
        return Err(Error::ParameterRegime(format!(
            "oscillatory constants need 0 < c < {:.6} at omega = {omega}, got c = {c}",
            a3.bound
        )));
    }
    let core = theorem1_core(omega, c);
    let l_const = 2.0 * core - c * c / 6.0;
    if !(l_const > 0.0) {
        return Err(Error::ParameterRegime(format!(
            "L constant is {l_const:e} <= 0 at omega = {omega}, c = {c}"
        )));
    }
    Ok(Theorem1Constants {
        l_const,
        c_const: core / (12.0 * l_const),
    })
}

/// One cell of the `(ω, c)` constraint grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub omega: f64,
    pub c: f64,
    pub a3_ok: bool,
    pub b2_ok: bool,
}

/// Evaluates both predicates on an `n × n` grid over `ω ∈ [0, 1]` and
/// `c ∈ [0, 3]`, endpoints included, `ω` varying slowest.
pub fn constraint_grid(n: usize) -> Vec<GridPoint> {
    let axis = |k: usize, hi: f64| {
        if n <= 1 {
            0.0
        } else {
            hi * k as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let omega = axis(i, 1.0);
        for j in 0..n {
            let c = axis(j, 3.0);
            out.push(GridPoint {
                omega,
                c,
                a3_ok: check_a3(omega, c).ok,
                b2_ok: check_b2(omega, c).ok,
            });
        }
    }
    out
}

pub fn write_grid_csv<W: std::io::Write>(grid: &[GridPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "omega,c,a3_ok,b2_ok")?;
    for p in grid {
        writeln!(w, "{},{},{},{}", p.omega, p.c, p.a3_ok, p.b2_ok)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const W: f64 = 0.72984;
    const C: f64 = 1.496172;

    #[test]
    fn a3_classical_calibration() {
        let r = check_a3(W, C);
        assert!(r.ok);
        assert!((r.bound - 1.673629).abs() < 1e-5);
    }

    #[test]
    fn a3_boundaries() {
        assert!((check_a3(0.0, 1.0).bound - 12.0 / 7.0).abs() < 1e-15);
        assert!(!check_a3(0.5, 0.0).ok);
        assert!(!check_a3(1.0, 0.1).ok);
    }

    #[test]
    fn b2_classical_calibration() {
        let r = check_b2(W, C);
        assert!(r.ok);
        assert!((r.lower - 0.233668).abs() < 1e-5);
        assert!((r.middle - 0.487805).abs() < 1e-5);
        assert!((r.upper - 0.624043).abs() < 1e-5);
    }

    #[test]
    fn b2_needs_c_above_one() {
        let r = check_b2(0.9, 0.5);
        assert!(!r.ok);
        assert!(!r.side_conditions);
    }

    #[test]
    fn constants_classical() {
        let k = theorem1_constants(W, C).unwrap();
        assert!((k.l_const - 0.085717).abs() < 1e-5);
        assert!((k.c_const - 0.223024).abs() < 1e-5);
        let identity = k.c_const * 12.0 * k.l_const;
        let rhs = C * ((1.0 - W) / (1.0 + W)) * (1.0 + W - C / 2.0);
        assert!((identity - rhs).abs() < 1e-12);
    }

    #[test]
    fn constants_reject_outside_regime() {
        assert!(theorem1_constants(0.5, 0.0).is_err());
        assert!(theorem1_constants(W, 1.7).is_err());
        // Small positive c still gives a positive, if tiny, L.
        let k = theorem1_constants(0.5, 1e-6).unwrap();
        assert!(k.l_const > 0.0 && k.l_const < 1e-5);
    }

    #[test]
    fn grid_shape_and_classical_point() {
        let g = constraint_grid(200);
        assert_eq!(g.len(), 40_000);
        assert_eq!(g[0].omega, 0.0);
        assert_eq!(g.last().unwrap().c, 3.0);
        let mut buf = Vec::new();
        write_grid_csv(&g[..2], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("omega,c,a3_ok,b2_ok\n0,0,false,false\n"));
    }
}
