//! Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued
//! integrands on intervals with optional infinite endpoints.
//!
//! Infinite ends are mapped onto the unit interval with `x = a + t/(1-t)`
//! (or its mirror image); interior breakpoints split the domain so that
//! kinks of the integrand fall on panel boundaries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<const K: usize> {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Component `c` is also allowed an error of `rel_tol * scales[c] * |I_0|`.
    pub scales: [f64; K],
    pub max_panels: usize,
}

impl<const K: usize> Default for QuadOptions<K> {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            scales: [0.0; K],
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// `x = a + t/(1-t)`, t in [0, 1)
    Upper(f64),
    /// `x = b - t/(1-t)`, t in [0, 1)
    Lower(f64),
}

impl Map {
    #[inline]
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Identity => (t, 1.0),
            Map::Upper(a) => {
                let d = 1.0 - t;
                (a + t / d, 1.0 / (d * d))
            }
            Map::Lower(b) => {
                let d = 1.0 - t;
                (b - t / d, 1.0 / (d * d))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel<const K: usize> {
    map: Map,
    lo: f64,
    hi: f64,
    value: [f64; K],
    error: [f64; K],
    priority: f64,
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

fn kronrod<const K: usize, F>(f: &F, map: Map, lo: f64, hi: f64) -> ([f64; K], [f64; K])
where
    F: Fn(f64) -> [f64; K],
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |t: f64| -> [f64; K] {
        let (x, jac) = map.apply(t);
        let mut v = f(x);
        for c in v.iter_mut() {
            *c *= jac;
            if !c.is_finite() {
                *c = 0.0;
            }
        }
        v
    };
    let mut k = [0.0; K];
    let mut g = [0.0; K];
    let fc = eval(center);
    for c in 0..K {
        k[c] = WGK[7] * fc[c];
        g[c] = WG[3] * fc[c];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        for c in 0..K {
            let s = f1[c] + f2[c];
            k[c] += WGK[j] * s;
            if j % 2 == 1 {
                g[c] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; K];
    for c in 0..K {
        k[c] *= half;
        g[c] *= half;
        err[c] = (k[c] - g[c]).abs();
    }
    (k, err)
}

/// Integrates `f` over the union of consecutive intervals between the sorted
/// `breakpoints`. Endpoints may be infinite; interior breakpoints must be finite.
pub fn integrate<const K: usize, F>(f: F, breakpoints: &[f64], opts: &QuadOptions<K>) -> Integral<K>
where
    F: Fn(f64) -> [f64; K],
{
    assert!(breakpoints.len() >= 2, "need at least two breakpoints");
    let mut segments: Vec<(Map, f64, f64)> = Vec::new();
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => segments.push((Map::Identity, a, b)),
            (true, false) => segments.push((Map::Upper(a), 0.0, 1.0)),
            (false, true) => segments.push((Map::Lower(b), 0.0, 1.0)),
            (false, false) => {
                segments.push((Map::Lower(0.0), 0.0, 1.0));
                segments.push((Map::Upper(0.0), 0.0, 1.0));
            }
        }
    }

    let mut heap: BinaryHeap<Panel<K>> = BinaryHeap::new();
    let mut evaluations = 0;
    let mut total = [0.0; K];
    let mut total_err = [0.0; K];
    for (map, lo, hi) in segments {
        let (value, error) = kronrod(&f, map, lo, hi);
        evaluations += 15;
        for c in 0..K {
            total[c] += value[c];
            total_err[c] += error[c];
        }
        heap.push(Panel {
            map,
            lo,
            hi,
            value,
            error,
            priority: 0.0,
        });
    }

    let tolerance = |total: &[f64; K], c: usize| -> f64 {
        opts.abs_tol + opts.rel_tol * total[c].abs().max(opts.scales[c] * total[0].abs())
    };
    let reprioritise = |p: &mut Panel<K>, total: &[f64; K]| {
        p.priority = (0..K)
            .map(|c| p.error[c] / tolerance(total, c).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
    };

    let mut panels: Vec<Panel<K>> = heap.into_vec();
    for p in panels.iter_mut() {
        reprioritise(p, &total);
    }
    let mut heap: BinaryHeap<Panel<K>> = panels.into();

    let done = |total: &[f64; K], err: &[f64; K]| (0..K).all(|c| err[c] <= tolerance(total, c));

    let mut converged = done(&total, &total_err);
    while !converged && heap.len() < opts.max_panels {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod(&f, worst.map, worst.lo, mid);
        let (v2, e2) = kronrod(&f, worst.map, mid, worst.hi);
        evaluations += 30;
        for c in 0..K {
            total[c] += v1[c] + v2[c] - worst.value[c];
            total_err[c] += e1[c] + e2[c] - worst.error[c];
        }
        let mut left = Panel {
            map: worst.map,
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
            priority: 0.0,
        };
        let mut right = Panel {
            map: worst.map,
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
            priority: 0.0,
        };
        reprioritise(&mut left, &total);
        reprioritise(&mut right, &total);
        heap.push(left);
        heap.push(right);
        converged = done(&total, &total_err);
    }

    // Re-sum panel values in a fixed order to remove the drift of the running total.
    let mut panels = heap.into_vec();
    panels.sort_by(|a, b| {
        let ka = (map_key(a.map), a.lo);
        let kb = (map_key(b.map), b.lo);
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for p in &panels {
        for c in 0..K {
            value[c] += p.value[c];
            error[c] += p.error[c];
        }
    }
    Integral {
        value,
        error,
        converged,
        evaluations,
    }
}

fn map_key(map: Map) -> f64 {
    match map {
        Map::Lower(b) => b - 1e300,
        Map::Identity => 0.0,
        Map::Upper(a) => a + 1e300,
    }
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(f: F, breakpoints: &[f64], rel_tol: f64, abs_tol: f64) -> Integral<1>
where
    F: Fn(f64) -> f64,
{
    let opts = QuadOptions {
        rel_tol,
        abs_tol,
        ..QuadOptions::default()
    };
    integrate(|x| [f(x)], breakpoints, &opts)
}
