//! Globally adaptive 21-point Gauss–Kronrod quadrature for vector-valued
//! complex integrands.
//!
//! The integration range is a list of segments, each carrying a `kind` tag so
//! that the integrand can apply a segment-specific change of variables. All
//! components share the same nodes and one error allowance, set relative to
//! the largest component; a panel is bisected while any component exceeds it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_745_597_291,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One piece of the integration range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: usize,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

#[derive(Debug, Clone)]
pub struct QuadOutput {
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
    pub panels: usize,
}

struct Panel {
    seg: Segment,
    values: Vec<Complex64>,
    errors: Vec<f64>,
    floors: Vec<f64>,
}

struct Priority(f64, usize);

impl PartialEq for Priority {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Priority {}
impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Priority {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

/// Kronrod estimate, error estimate and roundoff floor of one panel, per component.
fn rule<F>(seg: Segment, ncomp: usize, buf: &mut [Complex64], f: &mut F) -> Panel
where
    F: FnMut(usize, f64, &mut [Complex64]),
{
    let center = 0.5 * (seg.a + seg.b);
    let half = 0.5 * (seg.b - seg.a);
    // buf rows: 0..10 left nodes, 10..20 right nodes, 20 center.
    for k in 0..10 {
        let dx = half * XGK[k];
        f(seg.kind, center - dx, &mut buf[k * ncomp..(k + 1) * ncomp]);
        f(seg.kind, center + dx, &mut buf[(10 + k) * ncomp..(11 + k) * ncomp]);
    }
    f(seg.kind, center, &mut buf[20 * ncomp..21 * ncomp]);

    let mut values = Vec::with_capacity(ncomp);
    let mut errors = Vec::with_capacity(ncomp);
    let mut floors = Vec::with_capacity(ncomp);
    let row = |k: usize, c: usize| buf[k * ncomp + c];
    for c in 0..ncomp {
        let fc = row(20, c);
        let mut kron = fc * WGK[10];
        let mut resabs = fc.norm() * WGK[10];
        let mut gauss = Complex64::new(0.0, 0.0);
        for k in 0..10 {
            let (l, r) = (row(k, c), row(10 + k, c));
            kron += (l + r) * WGK[k];
            resabs += (l.norm() + r.norm()) * WGK[k];
            if k % 2 == 1 {
                gauss += (l + r) * WG[k / 2];
            }
        }
        let mean = kron * 0.5;
        let mut resasc = (fc - mean).norm() * WGK[10];
        for (k, w) in WGK.iter().take(10).enumerate() {
            resasc += ((row(k, c) - mean).norm() + (row(10 + k, c) - mean).norm()) * w;
        }
        let (kron, resabs, resasc) = (kron * half, resabs * half.abs(), resasc * half.abs());
        let mut err = ((kron - gauss * half).norm()).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        let floor = 50.0 * f64::EPSILON * resabs;
        values.push(kron);
        errors.push(err.max(floor));
        floors.push(floor);
    }
    Panel {
        seg,
        values,
        errors,
        floors,
    }
}

/// Error allowance shared by all components, relative to the largest one.
fn tolerance(settings: &QuadSettings, scale: f64) -> f64 {
    settings.abs_tol.max(settings.rel_tol * scale)
}

struct Totals {
    values: Vec<Complex64>,
    errors: Vec<f64>,
    floors: Vec<f64>,
}

impl Totals {
    fn new(ncomp: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); ncomp],
            errors: vec![0.0; ncomp],
            floors: vec![0.0; ncomp],
        }
    }

    fn add(&mut self, p: &Panel, sign: f64) {
        for c in 0..self.values.len() {
            self.values[c] += p.values[c] * sign;
            self.errors[c] += p.errors[c] * sign;
            self.floors[c] += p.floors[c] * sign;
        }
    }

    fn resum(panels: &[Panel], ncomp: usize) -> Self {
        let mut t = Totals::new(ncomp);
        for p in panels {
            t.add(p, 1.0);
        }
        t
    }

    fn scale(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// A component is done when it meets the tolerance or only roundoff remains.
    fn converged(&self, tol: f64, c: usize) -> bool {
        let e = self.errors[c];
        e <= tol || e <= self.floors[c] * (1.0 + 1e-9)
    }
}

/// Integrates `f` over the union of `segments`.
///
/// `f(kind, t, out)` writes the `ncomp` integrand components at parameter `t`
/// of a segment of the given kind, Jacobian included.
pub fn integrate<F>(segments: &[Segment], ncomp: usize, settings: &QuadSettings, mut f: F) -> Result<QuadOutput>
where
    F: FnMut(usize, f64, &mut [Complex64]),
{
    let mut buf = vec![Complex64::new(0.0, 0.0); 21 * ncomp];
    let mut panels: Vec<Panel> = segments
        .iter()
        .map(|&seg| rule(seg, ncomp, &mut buf, &mut f))
        .collect();
    let mut totals = Totals::resum(&panels, ncomp);

    // Panels are ranked by their error above the roundoff floor, relative to tolerance.
    let priority = |p: &Panel, tol: f64| {
        (0..ncomp)
            .map(|c| (p.errors[c] - p.floors[c]) / tol)
            .fold(0.0f64, f64::max)
    };
    let tol = tolerance(settings, totals.scale());
    let mut heap: BinaryHeap<Priority> = panels
        .iter()
        .enumerate()
        .map(|(i, p)| Priority(priority(p, tol), i))
        .collect();

    let mut iterations = 0usize;
    loop {
        let tol = tolerance(settings, totals.scale());
        if (0..ncomp).all(|c| totals.converged(tol, c)) {
            break;
        }
        if panels.len() >= settings.max_panels {
            let achieved = (0..ncomp)
                .filter(|&c| !totals.converged(tol, c))
                .map(|c| totals.errors[c])
                .fold(0.0, f64::max);
            return Err(Error::Accuracy {
                achieved,
                requested: tol,
            });
        }
        let Some(Priority(_, idx)) = heap.pop() else {
            break;
        };
        let seg = panels[idx].seg;
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a.min(seg.b) && mid < seg.a.max(seg.b)) {
            // Interval exhausted in floating point; keep its contribution as is.
            continue;
        }
        let left = rule(Segment { b: mid, ..seg }, ncomp, &mut buf, &mut f);
        let right = rule(Segment { a: mid, ..seg }, ncomp, &mut buf, &mut f);
        totals.add(&panels[idx], -1.0);
        totals.add(&left, 1.0);
        totals.add(&right, 1.0);
        panels[idx] = left;
        panels.push(right);
        let new = panels.len() - 1;
        heap.push(Priority(priority(&panels[idx], tol), idx));
        heap.push(Priority(priority(&panels[new], tol), new));

        iterations += 1;
        if iterations.is_multiple_of(64) {
            // Resum to shed accumulated cancellation in the running totals.
            totals = Totals::resum(&panels, ncomp);
        }
    }

    // Final resummation in panel order for reproducibility.
    let totals = Totals::resum(&panels, ncomp);
    Ok(QuadOutput {
        values: totals.values,
        errors: totals.errors,
        panels: panels.len(),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / pp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
