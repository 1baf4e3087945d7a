//! Multi-axis FFTs over row-major complex arrays.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    Forward,
    Inverse,
}

fn plan(n: usize, dir: Dir) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, Dir), Arc<dyn Fft<f64>>>)>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap();
    let (planner, map) = &mut *guard;
    map.entry((n, dir))
        .or_insert_with(|| match dir {
            Dir::Forward => planner.plan_fft_forward(n),
            Dir::Inverse => planner.plan_fft_inverse(n),
        })
        .clone()
}

/// Unnormalised transform of `data` (row-major, `shape`) along every axis with `axes[a] == true`.
pub fn fft_axes(data: &mut [Complex64], shape: &[usize], axes: &[bool], dir: Dir) {
    debug_assert_eq!(data.len(), shape.iter().product::<usize>());
    for (a, &on) in axes.iter().enumerate() {
        if !on || shape[a] == 1 {
            continue;
        }
        let n = shape[a];
        let stride: usize = shape[a + 1..].iter().product();
        let outer: usize = shape[..a].iter().product();
        let fft = plan(n, dir);
        if stride == 1 {
            fft.process(data);
            continue;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for o in 0..outer {
            let base = o * n * stride;
            for s in 0..stride {
                for (i, z) in line.iter_mut().enumerate() {
                    *z = data[base + i * stride + s];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, z) in line.iter().enumerate() {
                    data[base + i * stride + s] = *z;
                }
            }
        }
    }
}
