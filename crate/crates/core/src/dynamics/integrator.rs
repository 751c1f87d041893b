//! Classical fourth-order Runge–Kutta on complex state vectors.

use crate::error::Result;
use crate::linalg::CMatrix;
use crate::scalar::{czero, Cplx, Real};

/// Scratch buffers for repeated RK4 steps of a fixed dimension.
#[derive(Debug, Clone)]
pub(crate) struct Rk4<T: Real> {
    k1: Vec<Cplx<T>>,
    k2: Vec<Cplx<T>>,
    k3: Vec<Cplx<T>>,
    k4: Vec<Cplx<T>>,
    tmp: Vec<Cplx<T>>,
}

impl<T: Real> Rk4<T> {
    pub fn new(dim: usize) -> Self {
        let z = vec![czero(); dim];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// Advances `y` from `t` to `t + h` in place. `f(t, y, out)` writes `dy/dt`.
    pub fn step<F>(&mut self, t: T, h: T, y: &mut [Cplx<T>], mut f: F)
    where
        F: FnMut(T, &[Cplx<T>], &mut [Cplx<T>]),
    {
        let half = T::lit(0.5);
        let sixth = h / T::lit(6.0);
        f(t, y, &mut self.k1);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *tmp = *y + *k * (h * half);
        }
        f(t + h * half, &self.tmp, &mut self.k2);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *tmp = *y + *k * (h * half);
        }
        f(t + h * half, &self.tmp, &mut self.k3);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *tmp = *y + *k * h;
        }
        f(t + h, &self.tmp, &mut self.k4);
        let two = T::lit(2.0);
        for (i, y) in y.iter_mut().enumerate() {
            *y = *y + (self.k1[i] + self.k2[i] * two + self.k3[i] * two + self.k4[i]) * sixth;
        }
    }
}

/// The linear map performed by one RK4 step of an autonomous linear system
/// `dy/dt = f(y)`. Applying it `k` times is the same computation as `k` RK4
/// steps, so powers of it can replace long runs of steps.
pub(crate) fn rk4_step_matrix<T, F>(dim: usize, h: T, mut f: F) -> Result<CMatrix<T>>
where
    T: Real,
    F: FnMut(&[Cplx<T>], &mut [Cplx<T>]),
{
    let mut rk = Rk4::new(dim);
    CMatrix::from_columns(dim, |unit| {
        let mut y = unit.to_vec();
        rk.step(T::zero(), h, &mut y, |_, y, out| f(y, out));
        Ok(y)
    })
}
