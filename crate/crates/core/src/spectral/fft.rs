//! Thin wrapper over `rustfft` for 1-D and 2-D periodic transforms.
//!
//! Layout is row-major: flat index `i0 * n + i1`, axis 0 is `x`.
//! Forward transforms are unnormalized (`rustfft` convention); callers
//! divide by `n^d` where needed.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// In-place transform of an `n^d` array.
pub(crate) fn transform(data: &mut [Complex64], n: usize, d: usize, dir: Direction) {
    debug_assert_eq!(data.len(), n.pow(d as u32));
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(n),
            Direction::Inverse => p.plan_fft_inverse(n),
        }
    });
    match d {
        1 => fft.process(data),
        2 => {
            // rows (contiguous along axis 1)
            fft.process(data);
            // columns
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for i1 in 0..n {
                for i0 in 0..n {
                    col[i0] = data[i0 * n + i1];
                }
                fft.process(&mut col);
                for i0 in 0..n {
                    data[i0 * n + i1] = col[i0];
                }
            }
        }
        _ => unreachable!("dimension checked at grid construction"),
    }
}

/// Signed wavenumber of FFT index `i` on an `n`-point axis.
#[inline]
pub(crate) fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT index of signed wavenumber `k` on an `n`-point axis.
#[inline]
pub(crate) fn index_of(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}
