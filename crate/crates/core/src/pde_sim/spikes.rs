use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Field2D;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub x: f64,
    pub y: f64,
    pub amplitude: f64,
}

/// Local maxima above half the global maximum (ties broken in scan order),
/// refined by a separable quadratic fit over the 3×3 neighbourhood. Maxima
/// closer than `3h` are merged into the taller one.
pub fn detect_spikes(field: &Field2D) -> Vec<Spike> {
    let (nx, ny) = (field.nx, field.ny);
    let max = field.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let at = |i: usize, j: usize| field.values[j * nx + i];
    let mut found: Vec<Spike> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let c = at(i, j);
            if c < 0.5 * max {
                continue;
            }
            // ties go to the first cell in scan order; a plateau is not a maximum
            let mut is_max = true;
            let mut above_some = false;
            'nb: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    let v = at(ii as usize, jj as usize);
                    let earlier = (dj, di) < (0, 0);
                    if v > c || (earlier && v == c) {
                        is_max = false;
                        break 'nb;
                    }
                    above_some |= v < c;
                }
            }
            if !is_max || !above_some {
                continue;
            }
            let fit = |lo: Option<f64>, hi: Option<f64>| match (lo, hi) {
                (Some(l), Some(r)) => {
                    let curv = l - 2.0 * c + r;
                    if curv < 0.0 {
                        (0.5 * (l - r) / curv).clamp(-0.5, 0.5)
                    } else {
                        0.0
                    }
                }
                _ => 0.0,
            };
            let ox = fit((i > 0).then(|| at(i - 1, j)), (i + 1 < nx).then(|| at(i + 1, j)));
            let oy = fit((j > 0).then(|| at(i, j - 1)), (j + 1 < ny).then(|| at(i, j + 1)));
            let (x, y) = field.centre(i, j);
            found.push(Spike {
                x: x + ox * field.h,
                y: y + oy * field.h,
                amplitude: c,
            });
        }
    }
    found.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    let mut kept: Vec<Spike> = Vec::new();
    for s in found {
        let close = kept
            .iter()
            .any(|k| ((k.x - s.x).powi(2) + (k.y - s.y).powi(2)).sqrt() < 3.0 * field.h);
        if !close {
            kept.push(s);
        }
    }
    kept.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
    kept
}

/// Coefficient of variation of the distances between angularly consecutive
/// spikes around their mean position. Spikes within a quarter of the mean
/// radius of the mean position count as a centre spike and are left out.
pub fn asymmetry_score(spikes: &[Spike]) -> f64 {
    if spikes.len() < 3 {
        return 0.0;
    }
    let n = spikes.len() as f64;
    let cx = spikes.iter().map(|s| s.x).sum::<f64>() / n;
    let cy = spikes.iter().map(|s| s.y).sum::<f64>() / n;
    let radius = |s: &Spike| ((s.x - cx).powi(2) + (s.y - cy).powi(2)).sqrt();
    let mean_r = spikes.iter().map(radius).sum::<f64>() / n;
    let mut ring: Vec<&Spike> = spikes.iter().filter(|s| radius(s) > 0.25 * mean_r).collect();
    if ring.len() < 2 {
        return 0.0;
    }
    ring.sort_by(|a, b| (a.y - cy).atan2(a.x - cx).total_cmp(&(b.y - cy).atan2(b.x - cx)));
    let d: Vec<f64> = (0..ring.len())
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
            ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
        })
        .collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.len() as f64;
    var.sqrt() / mean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackFrame {
    pub t: f64,
    pub spikes: Vec<Spike>,
    pub asymmetry: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrack {
    pub frames: Vec<TrackFrame>,
}

impl SpikeTrack {
    pub fn record(&mut self, t: f64, field: &Field2D) {
        let spikes = detect_spikes(field);
        let asymmetry = asymmetry_score(&spikes);
        self.frames.push(TrackFrame { t, spikes, asymmetry });
    }

    pub fn counts(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.spikes.len()).collect()
    }

    /// CSV `t,j,x,y,amplitude,asymmetry`, one row per spike per frame.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,j,x,y,amplitude,asymmetry")?;
        for f in &self.frames {
            for (j, s) in f.spikes.iter().enumerate() {
                writeln!(out, "{},{j},{},{},{},{}", f.t, s.x, s.y, s.amplitude, f.asymmetry)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bumps(centres: &[(f64, f64)]) -> Field2D {
        let mut f = Field2D::constant(64, 64, 1.0 / 32.0, 0.0);
        for j in 0..64 {
            for i in 0..64 {
                let (x, y) = f.centre(i, j);
                f.values[j * 64 + i] = centres
                    .iter()
                    .map(|(cx, cy)| (-((x - cx).powi(2) + (y - cy).powi(2)) / 0.01).exp())
                    .sum();
            }
        }
        f
    }

    #[test]
    fn single_bump_located_within_half_cell() {
        let f = bumps(&[(0.123, -0.217)]);
        let s = detect_spikes(&f);
        assert_eq!(s.len(), 1);
        let err = ((s[0].x - 0.123).powi(2) + (s[0].y + 0.217).powi(2)).sqrt();
        assert!(err < 0.5 * f.h, "{err}");
    }

    #[test]
    fn two_bumps_two_spikes() {
        assert_eq!(detect_spikes(&bumps(&[(-0.5, 0.0), (0.5, 0.1)])).len(), 2);
    }

    #[test]
    fn flat_field_has_no_spikes() {
        assert!(detect_spikes(&Field2D::constant(16, 16, 0.1, 3.0)).is_empty());
        assert!(detect_spikes(&Field2D::constant(16, 16, 0.1, 0.0)).is_empty());
    }

    #[test]
    fn regular_polygon_is_symmetric() {
        let ring = |k: usize, r: f64| -> Vec<Spike> {
            (0..k)
                .map(|j| {
                    let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                    Spike { x: r * t.cos(), y: r * t.sin(), amplitude: 1.0 }
                })
                .collect()
        };
        assert!(asymmetry_score(&ring(5, 1.0)) < 1e-12);
        let mut with_centre = ring(4, 1.0);
        with_centre.push(Spike { x: 0.0, y: 0.0, amplitude: 1.0 });
        assert!(asymmetry_score(&with_centre) < 1e-12);
        let mut bent = ring(5, 1.0);
        bent[0].x += 0.2;
        assert!(asymmetry_score(&bent) > 0.01);
    }
}
