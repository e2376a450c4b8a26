//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::collections::BinaryHeap;

use crate::error::{QmciError, Result};

// Nodes and weights as tabulated in QUADPACK.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_SEGMENTS: usize = 20_000;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rel: 1e-12 }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Segment { a, b, value: k * h, err: ((k - g) * h).abs() }
}

/// Integral of `f` over [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    integrate_with_breaks(f, &[a, b], tol)
}

/// Integral over [breaks[0], breaks.last()], seeding the subdivision at every break.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: Tolerance) -> Result<f64> {
    if breaks.len() < 2 {
        return Err(QmciError::Quadrature("need at least two break points".into()));
    }
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1]));
        } else if w[1] < w[0] {
            return Err(QmciError::Quadrature("break points must be nondecreasing".into()));
        }
    }
    let mut total: f64 = heap.iter().map(|s| s.value).sum();
    let mut err: f64 = heap.iter().map(|s| s.err).sum();
    loop {
        if !total.is_finite() {
            return Err(QmciError::Quadrature("integrand produced a non-finite value".into()));
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            // Re-sum to drop accumulated drift from the running totals.
            return Ok(heap.iter().map(|s| s.value).sum());
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(QmciError::Quadrature(format!(
                "error estimate {err:e} above tolerance after {MAX_SEGMENTS} segments"
            )));
        }
        let worst = heap.pop().expect("heap is nonempty");
        total -= worst.value;
        err -= worst.err;
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Segment cannot be split further in floating point; accept it.
            total += worst.value;
            heap.push(Segment { err: 0.0, ..worst });
            continue;
        }
        for s in [gk15(&f, worst.a, mid), gk15(&f, mid, worst.b)] {
            total += s.value;
            err += s.err;
            heap.push(s);
        }
        if heap.len() % 512 == 0 {
            err = heap.iter().map(|s| s.err).sum();
        }
    }
}

/// Iterated integral of `f(x, y)` over x in [xa, xb] and y in [ya(x), yb(x)].
/// `y_breaks` are extra seeds for the inner integral (clipped to its range).
#[allow(clippy::too_many_arguments)]
pub fn integrate_2d<F, YA, YB>(
    f: F,
    xa: f64,
    xb: f64,
    ya: YA,
    yb: YB,
    x_breaks: &[f64],
    y_breaks: &[f64],
    tol: Tolerance,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
    YA: Fn(f64) -> f64,
    YB: Fn(f64) -> f64,
{
    let inner_tol = Tolerance { abs: tol.abs * 1e-3, rel: tol.rel * 1e-2 };
    let failed = std::cell::Cell::new(None);
    let outer = |x: f64| {
        let (lo, hi) = (ya(x), yb(x));
        if hi <= lo {
            return 0.0;
        }
        let mut br = vec![lo];
        br.extend(y_breaks.iter().copied().filter(|&y| y > lo && y < hi));
        br.push(hi);
        match integrate_with_breaks(|y| f(x, y), &br, inner_tol) {
            Ok(v) => v,
            Err(e) => {
                failed.set(Some(e.to_string()));
                f64::NAN
            }
        }
    };
    let mut br = vec![xa];
    br.extend(x_breaks.iter().copied().filter(|&x| x > xa && x < xb));
    br.push(xb);
    let r = integrate_with_breaks(outer, &br, tol);
    if let Some(msg) = failed.take() {
        return Err(QmciError::Quadrature(format!("inner integral: {msg}")));
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| x.powi(5) - 3.0 * x, -1.0, 2.0, Tolerance::default()).unwrap();
        assert_relative_eq!(v, 64.0 / 6.0 - 1.0 / 6.0 - 4.5, epsilon = 1e-13);
    }

    #[test]
    fn narrow_lorentzian() {
        // Width 1e-3 inside [0, 1000]; exact value is atan-difference / g.
        let (m, g) = (400.0, 1e-3);
        let f = |x: f64| 1.0 / ((x - m) * (x - m) + g * g);
        let exact = (((1000.0 - m) / g).atan() - ((0.0 - m) / g).atan()) / g;
        let tol = Tolerance { abs: 1e-10, rel: 1e-12 };
        let v = integrate_with_breaks(f, &[0.0, m, 1000.0], tol).unwrap();
        assert_relative_eq!(v, exact, max_relative = 1e-11);
    }

    #[test]
    fn triangle_area() {
        let v = integrate_2d(|x, y| x * y, 0.0, 1.0, |_| 0.0, |x| 1.0 - x, &[], &[], Tolerance::default())
            .unwrap();
        assert_relative_eq!(v, 1.0 / 24.0, epsilon = 1e-13);
    }

    #[test]
    fn non_finite_integrand_fails() {
        assert!(integrate(|_| f64::NAN, 0.0, 1.0, Tolerance::default()).is_err());
    }
}
