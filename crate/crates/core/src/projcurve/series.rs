//! Truncated Taylor series with precision tracking.

/// Highest number of Taylor coefficients ever stored.
pub const SERIES_CAP: usize = 32;

/// Precision marker for polynomials known exactly.
pub const EXACT: usize = usize::MAX;

/// Taylor coefficients `c[n] = f⁽ⁿ⁾(0)/n!` known for orders `< prec`.
/// Coefficients past `c.len()` but below `prec` are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    c: Vec<f64>,
    prec: usize,
}

impl Series {
    /// Series known to orders `0..c.len()`.
    pub fn new(c: Vec<f64>) -> Series {
        let prec = c.len();
        Series { c, prec }
    }

    /// Polynomial with exactly these coefficients.
    pub fn exact(mut c: Vec<f64>) -> Series {
        while c.last() == Some(&0.0) {
            c.pop();
        }
        if c.len() > SERIES_CAP {
            c.truncate(SERIES_CAP);
            return Series { c, prec: SERIES_CAP };
        }
        Series { c, prec: EXACT }
    }

    /// Series from derivative values `f(0), f'(0), …`.
    pub fn from_derivatives(d: &[f64]) -> Series {
        let mut fact = 1.0;
        let c = d
            .iter()
            .enumerate()
            .map(|(n, v)| {
                if n > 0 {
                    fact *= n as f64;
                }
                v / fact
            })
            .collect();
        Series::new(c)
    }

    pub fn constant(v: f64) -> Series {
        Series::exact(vec![v])
    }

    pub fn zero() -> Series {
        Series::exact(Vec::new())
    }

    pub fn one() -> Series {
        Series::constant(1.0)
    }

    /// Number of known orders ([`EXACT`] for polynomials).
    pub fn prec(&self) -> usize {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec == EXACT
    }

    /// Known orders, capped at [`SERIES_CAP`].
    pub fn known(&self) -> usize {
        self.prec.min(SERIES_CAP)
    }

    fn get(&self, n: usize) -> f64 {
        self.c.get(n).copied().unwrap_or(0.0)
    }

    /// Taylor coefficient of order `n`, if known.
    pub fn coeff(&self, n: usize) -> Option<f64> {
        (n < self.prec).then(|| self.get(n))
    }

    /// `f⁽ⁿ⁾(0)`, if known.
    pub fn derivative_at(&self, n: usize) -> Option<f64> {
        self.coeff(n).map(|c| c * factorial(n))
    }

    pub fn value(&self) -> Option<f64> {
        self.coeff(0)
    }

    /// Largest absolute coefficient among known orders.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().take(self.known()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn truncate(&self, prec: usize) -> Series {
        let prec = prec.min(self.prec);
        let mut c = self.c.clone();
        c.truncate(prec);
        Series { c, prec }
    }

    fn with_prec(mut c: Vec<f64>, prec: usize) -> Series {
        if prec == EXACT {
            return Series::exact(c);
        }
        c.truncate(prec.min(SERIES_CAP));
        Series { c, prec: prec.min(SERIES_CAP) }
    }

    pub fn add(&self, o: &Series) -> Series {
        let prec = self.prec.min(o.prec);
        let n = self.c.len().max(o.c.len());
        Series::with_prec((0..n).map(|i| self.get(i) + o.get(i)).collect(), prec)
    }

    pub fn sub(&self, o: &Series) -> Series {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Series {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> Series {
        Series::with_prec(self.c.iter().map(|v| v * s).collect(), self.prec)
    }

    pub fn mul(&self, o: &Series) -> Series {
        if (self.is_exact() && self.c.is_empty()) || (o.is_exact() && o.c.is_empty()) {
            return Series::zero();
        }
        let mut prec = self.prec.min(o.prec);
        if self.c.is_empty() || o.c.is_empty() {
            return Series::with_prec(Vec::new(), prec);
        }
        let mut n = self.c.len() + o.c.len() - 1;
        if prec == EXACT && n > SERIES_CAP {
            prec = SERIES_CAP;
        }
        n = n.min(prec.min(SERIES_CAP));
        let mut c = vec![0.0; n];
        for (i, a) in self.c.iter().enumerate().take(n) {
            for (j, b) in o.c.iter().enumerate().take(n - i) {
                c[i + j] += a * b;
            }
        }
        Series::with_prec(c, prec)
    }

    /// `d/dt`; one order of precision is lost.
    pub fn deriv(&self) -> Series {
        let prec = if self.prec == EXACT { EXACT } else { self.prec.saturating_sub(1) };
        let c = self.c.iter().enumerate().skip(1).map(|(n, v)| v * n as f64).collect();
        Series::with_prec(c, prec)
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Option<Series> {
        let c0 = self.coeff(0)?;
        if c0 == 0.0 {
            return None;
        }
        if self.c.len() <= 1 && self.is_exact() {
            return Some(Series::constant(1.0 / c0));
        }
        let n = self.known();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / c0;
        for m in 1..n {
            let s: f64 = (1..=m).map(|i| self.get(i) * r[m - i]).sum();
            r[m] = -s / c0;
        }
        Some(Series::with_prec(r, n))
    }

    /// `self ∘ g` for `g(0) = 0`.
    pub fn compose(&self, g: &Series) -> Series {
        debug_assert!(g.get(0).abs() < 1e-300, "inner series must vanish at 0");
        let mut inner = g.clone();
        if let Some(c0) = inner.c.first_mut() {
            *c0 = 0.0;
        }
        let terms = self.c.len().min(self.known());
        let mut acc = Series::zero();
        for i in (0..terms).rev() {
            acc = acc.mul(&inner).add(&Series::constant(self.c[i]));
        }
        let prec = acc.prec.min(self.prec);
        Series::with_prec(acc.c, prec)
    }

    /// `exp(self)` for `self(0) = 0`.
    pub fn exp0(&self) -> Series {
        // f' = g' f, f(0) = 1
        let n = self.known();
        let mut f = vec![0.0; n];
        if n > 0 {
            f[0] = 1.0;
        }
        for m in 1..n {
            let s: f64 = (1..=m).map(|i| i as f64 * self.get(i) * f[m - i]).sum();
            f[m] = s / m as f64;
        }
        Series::with_prec(f, n)
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, b| a * b as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Square matrix of series.
pub(crate) type SMat = Vec<Vec<Series>>;

pub(crate) fn smat_zero(k: usize) -> SMat {
    vec![vec![Series::zero(); k]; k]
}

pub(crate) fn smat_mul(a: &SMat, b: &SMat) -> SMat {
    let k = a.len();
    let mut out = smat_zero(k);
    for i in 0..k {
        for j in 0..k {
            let mut acc = Series::zero();
            for (m, bm) in b.iter().enumerate() {
                acc = acc.add(&a[i][m].mul(&bm[j]));
            }
            out[i][j] = acc;
        }
    }
    out
}

pub(crate) fn smat_map(a: &SMat, f: impl Fn(&Series) -> Series) -> SMat {
    a.iter().map(|row| row.iter().map(&f).collect()).collect()
}

pub(crate) fn smat_add(a: &SMat, b: &SMat) -> SMat {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.add(y)).collect()).collect()
}

/// Solves `u x = m` for upper-triangular `u` with invertible diagonal.
pub(crate) fn upper_solve(u: &SMat, m: &SMat) -> Option<SMat> {
    let k = u.len();
    let mut x = smat_zero(k);
    let inv: Vec<Series> = (0..k).map(|i| u[i][i].recip()).collect::<Option<_>>()?;
    for col in 0..k {
        for i in (0..k).rev() {
            let mut acc = m[i][col].clone();
            for j in (i + 1)..k {
                acc = acc.sub(&u[i][j].mul(&x[j][col]));
            }
            x[i][col] = acc.mul(&inv[i]);
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_precision() {
        let a = Series::new(vec![1.0, 2.0, 3.0]);
        let b = Series::exact(vec![1.0, 1.0]);
        let p = a.mul(&b);
        assert_eq!(p.prec(), 3);
        assert_eq!(p.coeff(2), Some(5.0));
        assert_eq!(p.coeff(3), None);
    }

    #[test]
    fn exact_polynomials_stay_exact() {
        let a = Series::exact(vec![0.0, 1.0, 0.5]);
        assert!(a.mul(&a).is_exact());
        assert!(a.deriv().is_exact());
        assert_eq!(a.deriv().coeff(1), Some(1.0));
    }

    #[test]
    fn reciprocal_and_exp() {
        let a = Series::exact(vec![1.0, -1.0]);
        let r = a.recip().unwrap();
        assert_eq!(r.prec(), SERIES_CAP);
        assert!((0..10).all(|n| r.coeff(n) == Some(1.0)));
        let e = Series::exact(vec![0.0, 1.0]).exp0();
        assert!((e.derivative_at(5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn composition() {
        // (1 + t)² at t = 2τ + τ²
        let f = Series::exact(vec![1.0, 2.0, 1.0]);
        let g = Series::exact(vec![0.0, 2.0, 1.0]);
        let h = f.compose(&g);
        let expect = [1.0, 4.0, 6.0, 4.0, 1.0];
        for (n, e) in expect.iter().enumerate() {
            assert!((h.coeff(n).unwrap() - e).abs() < 1e-14);
        }
        let trunc = Series::new(vec![1.0, 2.0]).compose(&g);
        assert_eq!(trunc.prec(), 2);
    }

    #[test]
    fn derivative_loses_one_order() {
        let a = Series::from_derivatives(&[1.0, 2.0, 6.0]);
        assert_eq!(a.coeff(2), Some(3.0));
        let d = a.deriv();
        assert_eq!(d.prec(), 2);
        assert_eq!(d.derivative_at(1), Some(6.0));
    }
}
