use num_complex::Complex64;
use pulsenet::rng::rng_from;
use pulsenet::waveform::{generate_pulse, standard_family, Pulse};
use rand::Rng;

const LAGS: usize = 48;
const SEGMENTS: usize = 16;

/// Complex autocorrelation at lags spread over the first half of the pulse,
/// normalized by the zero-lag energy, followed by the mean lag-1 product of
/// each of 16 equal segments (a coarse instantaneous-frequency track). Both
/// are proportional to the width so features compare across widths.
fn features(p: &Pulse) -> Vec<f64> {
    let x: Vec<Complex64> = p.samples.iter().map(|c| Complex64::new(c.re as f64, c.im as f64)).collect();
    let n = x.len();
    let r = |tau: usize| -> Complex64 { (0..n - tau).map(|t| x[t + tau] * x[t].conj()).sum() };
    let r0 = r(0).re;
    (1..=LAGS)
        .flat_map(|j| {
            let v = r(j * n / (2 * LAGS)) / r0;
            [v.re, v.im]
        })
        .chain((0..SEGMENTS).flat_map(|s| {
            let (a, b) = (s * n / SEGMENTS, (s + 1) * n / SEGMENTS);
            let v: Complex64 = (a..b - 1).map(|t| x[t + 1] * x[t].conj()).sum::<Complex64>() / r0 * SEGMENTS as f64;
            [v.re, v.im]
        }))
        .collect()
}

#[test]
fn classes_are_separable_by_nearest_neighbour_on_autocorrelation() {
    let family = standard_family(17).unwrap();
    let mut rng = rng_from(12, &[]);
    let mut points: Vec<(usize, Vec<f64>)> = Vec::new();
    for spec in &family {
        for s in 0..50u64 {
            let n = rng.random_range(256..=1024);
            let p = generate_pulse(spec, n, 12.0, 1000 * spec.class_id as u64 + s).unwrap();
            points.push((spec.class_id, features(&p)));
        }
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
    let correct = (0..points.len())
        .filter(|&i| {
            let nearest = (0..points.len())
                .filter(|&j| j != i)
                .min_by(|&a, &b| dist(&points[i].1, &points[a].1).total_cmp(&dist(&points[i].1, &points[b].1)))
                .unwrap();
            points[nearest].0 == points[i].0
        })
        .count();
    let acc = correct as f64 / points.len() as f64;
    assert!(acc >= 0.95, "leave-one-out accuracy {acc:.3}");
}
