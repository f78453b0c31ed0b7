//! Scalar abstraction so the kinematics and dynamics recursions run on f64
//! or on forward-mode dual numbers. Dual sweeps give machine-precision
//! directional derivatives through the exact same code path.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(x: f64) -> Self;
    /// Primal part.
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
}

impl Real for f64 {
    fn constant(x: f64) -> Self {
        x
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Value plus one directional derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub dx: f64,
}

impl Dual {
    pub fn new(re: f64, dx: f64) -> Self {
        Self { re, dx }
    }

    pub fn var(re: f64) -> Self {
        Self { re, dx: 1.0 }
    }
}

impl From<f64> for Dual {
    fn from(re: f64) -> Self {
        Self { re, dx: 0.0 }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, dx: self.dx + o.dx }
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, dx: self.dx - o.dx }
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re, dx: self.dx * o.re + self.re * o.dx }
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let re = self.re / o.re;
        Self { re, dx: (self.dx - re * o.dx) / o.re }
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, dx: -self.dx }
    }
}

impl Real for Dual {
    fn constant(x: f64) -> Self {
        Self { re: x, dx: 0.0 }
    }
    fn value(self) -> f64 {
        self.re
    }
    fn sin(self) -> Self {
        Self { re: self.re.sin(), dx: self.re.cos() * self.dx }
    }
    fn cos(self) -> Self {
        Self { re: self.re.cos(), dx: -self.re.sin() * self.dx }
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Self { re: r, dx: 0.5 * self.dx / r }
    }
}

/// Dense linear solve A x = b by Gaussian elimination with partial pivoting
/// on the primal magnitude. Sized for the small contact KKT systems here.
pub fn lu_solve<T: Real>(a: &mut [T], b: &mut [T], n: usize) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].value().abs();
        for r in (col + 1)..n {
            let m = a[r * n + col].value().abs();
            if m > best {
                best = m;
                piv = r;
            }
        }
        if best < 1e-13 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let factor = a[r * n + col] / d;
            for c in col..n {
                let v = a[col * n + c];
                a[r * n + c] = a[r * n + c] - factor * v;
            }
            let bb = b[col];
            b[r] = b[r] - factor * bb;
        }
    }
    let mut x = vec![T::constant(0.0); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in (r + 1)..n {
            s = s - a[r * n + c] * x[c];
        }
        x[r] = s / a[r * n + r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dual_chain_rule() {
        // d/dx sin(x^2) = 2x cos(x^2)
        let x = Dual::var(0.7);
        let y = (x * x).sin();
        assert_abs_diff_eq!(y.dx, 2.0 * 0.7 * (0.49f64).cos(), epsilon = 1e-15);
    }

    #[test]
    fn dual_division_and_sqrt() {
        let x = Dual::var(2.0);
        let y = Dual::constant(1.0) / x;
        assert_abs_diff_eq!(y.dx, -0.25, epsilon = 1e-15);
        let z = x.sqrt();
        assert_abs_diff_eq!(z.dx, 0.5 / 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn generic_lu_solves_and_differentiates() {
        // A(x) y = b with A = [[x, 1], [1, 2]], b = (1, 0): check dy/dx
        // against the hand derivative via the implicit function theorem.
        let x = 3.0;
        let solve_at = |xv: f64| {
            let mut a = vec![xv, 1.0, 1.0, 2.0];
            let mut b = vec![1.0, 0.0];
            lu_solve(&mut a, &mut b, 2).unwrap()
        };
        let y0 = solve_at(x);
        let mut a = vec![Dual::var(x), 1.0.into(), 1.0.into(), 2.0.into()];
        let mut b = vec![Dual::from(1.0), Dual::from(0.0)];
        let y = lu_solve(&mut a, &mut b, 2).unwrap();
        assert_abs_diff_eq!(y[0].re, y0[0], epsilon = 1e-14);
        let h = 1e-7;
        let yp = solve_at(x + h);
        let ym = solve_at(x - h);
        for i in 0..2 {
            assert_abs_diff_eq!(y[i].dx, (yp[i] - ym[i]) / (2.0 * h), epsilon = 1e-6);
        }
    }
}
