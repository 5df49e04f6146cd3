use num_complex::Complex;
use serde::Serialize;

use crate::cplx;
use crate::scalar::Real;
use crate::types::PrecisionContext;

/// `v(x) = sum_k 2 c_k cos(2 pi k x)`: mean zero, entire, 1-periodic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub cosine_amplitudes: Vec<(u32, f64)>,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            cosine_amplitudes: vec![(1, 1.0)],
        }
    }
}

impl PotentialSpec {
    /// The free Stark operator.
    pub fn zero() -> Self {
        PotentialSpec {
            cosine_amplitudes: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.cosine_amplitudes.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn max_harmonic(&self) -> u32 {
        self.cosine_amplitudes.iter().map(|&(k, _)| k).max().unwrap_or(0)
    }

    pub fn max_amplitude(&self) -> f64 {
        self.cosine_amplitudes.iter().map(|&(_, c)| c.abs()).fold(0.0, f64::max)
    }

    /// Fourier coefficient `v_j` (`v = sum_j v_j e^{2 pi i j x}`).
    pub fn fourier(&self, j: i64) -> f64 {
        self.cosine_amplitudes
            .iter()
            .filter(|&&(k, _)| k as i64 == j.abs() && j != 0)
            .map(|&(_, c)| c)
            .sum()
    }

    /// Taylor coefficients `v^{(i)}(x0) / i!` for `i = 0..n`.
    pub fn taylor<T: Real>(&self, x0: &Complex<T>, n: usize, ctx: &PrecisionContext) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); n + 1];
        let two_pi = T::pi(ctx) * T::lift(2.0, ctx);
        for &(k, c) in &self.cosine_amplitudes {
            if c == 0.0 {
                continue;
            }
            let w = two_pi.clone() * T::lift(k as f64, ctx);
            // c e^{i w x0} and c e^{-i w x0}
            let ix = Complex::new(-(x0.im.clone() * &w), x0.re.clone() * &w);
            let ct = T::lift(c, ctx);
            let mut up = cplx::scale(&cplx::exp(&ix), &ct);
            let mut down = cplx::scale(&cplx::exp(&(-ix)), &ct);
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = slot.clone() + up.clone() + down.clone();
                // multiply by (+-i w)/(i+1)
                let f = w.clone() / T::lift((i + 1) as f64, ctx);
                up = Complex::new(-(up.im.clone() * &f), up.re.clone() * &f);
                down = Complex::new(down.im.clone() * &f, -(down.re.clone() * &f));
            }
        }
        out
    }
}
