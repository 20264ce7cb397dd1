//! Small numerical kernels shared by the solution representations.

use num::complex::Complex64;

/// 8-point Gauss–Legendre nodes and weights on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// `∫_a^b f` by one 8-point Gauss–Legendre panel.
pub fn gauss_legendre<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64) -> Complex64 {
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = Complex64::new(0.0, 0.0);
    for (t, w) in GL8 {
        s += f(m + h * t) * w;
    }
    s * h
}

/// `∫_a^b f` with `panels` equal Gauss–Legendre panels.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|k| gauss_legendre(&f, a + k as f64 * h, a + (k + 1) as f64 * h)).sum()
}

/// Cumulative integral on a uniform grid through `x0`, with the value 0 at `x0`.
/// Evaluation between nodes integrates from the nearest node.
#[derive(Debug, Clone)]
pub struct CumTable {
    pub x0: f64,
    pub h: f64,
    /// Index of `x0` in `values`.
    pub origin: usize,
    pub values: Vec<Complex64>,
}

impl CumTable {
    pub fn build<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, x0: f64, h: f64) -> CumTable {
        let below = ((x0 - a) / h).ceil().max(0.0) as usize;
        let above = ((b - x0) / h).ceil().max(0.0) as usize;
        let mut values = vec![Complex64::new(0.0, 0.0); below + above + 1];
        for k in 0..above {
            let xa = x0 + k as f64 * h;
            values[below + k + 1] = values[below + k] + gauss_legendre(&f, xa, xa + h);
        }
        for k in 0..below {
            let xb = x0 - k as f64 * h;
            values[below - k - 1] = values[below - k] - gauss_legendre(&f, xb - h, xb);
        }
        CumTable { x0, h, origin: below, values }
    }

    pub fn node(&self, k: usize) -> f64 {
        self.x0 + (k as f64 - self.origin as f64) * self.h
    }

    pub fn range(&self) -> (f64, f64) {
        (self.node(0), self.node(self.values.len() - 1))
    }

    pub fn eval<F: Fn(f64) -> Complex64>(&self, f: F, x: f64) -> Complex64 {
        let k = ((x - self.x0) / self.h).round() + self.origin as f64;
        let k = k.clamp(0.0, (self.values.len() - 1) as f64) as usize;
        let xk = self.node(k);
        if x == xk {
            return self.values[k];
        }
        self.values[k] + gauss_legendre(f, xk, x)
    }
}

/// All roots of `Σ c_k z^k` (ascending coefficients, nonzero leading) by the
/// Aberth–Ehrlich iteration.
pub fn poly_roots(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let a: Vec<Complex64> = c.iter().map(|z| z / lead).collect();
    let radius = 1.0 + a[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius * 0.5, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
        .collect();
    let eval = |x: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for k in (0..=n).rev() {
            dp = dp * x + p;
            p = p * x + a[k];
        }
        (p, dp)
    };
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * s);
            z[i] -= w;
            moved = moved.max(w.norm() / z[i].norm().max(1.0));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Quintic Hermite interpolation on `[x0, x1]` from values, first and second
/// derivatives at both ends.
pub fn hermite5(x0: f64, x1: f64, y: [Complex64; 2], d1: [Complex64; 2], d2: [Complex64; 2], x: f64) -> (Complex64, Complex64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h20 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h21 = 0.5 * t3 - t4 + 0.5 * t5;
    let dh00 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let dh10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let dh20 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
    let dh01 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let dh11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let dh21 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
    let v = y[0] * h00 + d1[0] * (h * h10) + d2[0] * (h * h * h20) + y[1] * h01 + d1[1] * (h * h11) + d2[1] * (h * h * h21);
    let dv = (y[0] * dh00 + y[1] * dh01) / h + d1[0] * dh10 + d1[1] * dh11 + (d2[0] * dh20 + d2[1] * dh21) * h;
    (v, dv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_on_low_degree() {
        let v = gauss_legendre(|x| Complex64::new(x.powi(15), 0.0), 0.0, 1.0);
        assert!((v.re - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn cumulative_table_matches_antiderivative() {
        let f = |x: f64| Complex64::new(x.cos(), 0.0);
        let t = CumTable::build(f, 0.0, 2.0, 0.7, 0.01);
        for x in [0.0, 0.123, 0.7, 1.55, 2.0] {
            assert!((t.eval(f, x).re - (x.sin() - 0.7f64.sin())).abs() < 1e-14);
        }
    }

    #[test]
    fn roots_of_cubic() {
        // (z - 1)(z + 2)(z - i)
        let c = [Complex64::new(0.0, 2.0), Complex64::new(-2.0, -1.0), Complex64::new(1.0, -1.0), Complex64::new(1.0, 0.0)];
        let mut r = poly_roots(&c);
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] - Complex64::new(-2.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((r[2] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quintic_hermite_reproduces_quintics() {
        let f = |x: f64| x.powi(5) - 2.0 * x * x;
        let d = |x: f64| 5.0 * x.powi(4) - 4.0 * x;
        let dd = |x: f64| 20.0 * x.powi(3) - 4.0;
        let c = |v: f64| Complex64::new(v, 0.0);
        let (v, dv) = hermite5(0.5, 1.0, [c(f(0.5)), c(f(1.0))], [c(d(0.5)), c(d(1.0))], [c(dd(0.5)), c(dd(1.0))], 0.8);
        assert!((v.re - f(0.8)).abs() < 1e-13);
        assert!((dv.re - d(0.8)).abs() < 1e-12);
    }
}
