//! Synthetic ground-truth images in HU.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{Image, HU_AIR};
use crate::metrics::Roi;

/// One additive ellipse on the `[-1, 1]^2` canvas (y up), angle in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub x0: f64,
    pub y0: f64,
    pub a: f64,
    pub b: f64,
    pub phi_deg: f64,
    pub value: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.phi_deg.to_radians().sin_cos();
        let (dx, dy) = (x - self.x0, y - self.y0);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

/// The original ten-ellipse Shepp-Logan table, in relative attenuation (water = 1).
pub const SHEPP_LOGAN: [Ellipse; 10] = [
    Ellipse { x0: 0.0, y0: 0.0, a: 0.69, b: 0.92, phi_deg: 0.0, value: 2.0 },
    Ellipse { x0: 0.0, y0: -0.0184, a: 0.6624, b: 0.874, phi_deg: 0.0, value: -0.98 },
    Ellipse { x0: 0.22, y0: 0.0, a: 0.11, b: 0.31, phi_deg: -18.0, value: -0.02 },
    Ellipse { x0: -0.22, y0: 0.0, a: 0.16, b: 0.41, phi_deg: 18.0, value: -0.02 },
    Ellipse { x0: 0.0, y0: 0.35, a: 0.21, b: 0.25, phi_deg: 0.0, value: 0.01 },
    Ellipse { x0: 0.0, y0: 0.1, a: 0.046, b: 0.046, phi_deg: 0.0, value: 0.01 },
    Ellipse { x0: 0.0, y0: -0.1, a: 0.046, b: 0.046, phi_deg: 0.0, value: 0.01 },
    Ellipse { x0: -0.08, y0: -0.605, a: 0.046, b: 0.023, phi_deg: 0.0, value: 0.01 },
    Ellipse { x0: 0.0, y0: -0.605, a: 0.023, b: 0.023, phi_deg: 0.0, value: 0.01 },
    Ellipse { x0: 0.06, y0: -0.605, a: 0.023, b: 0.046, phi_deg: 0.0, value: 0.01 },
];

/// Relative attenuation `v` to HU: air (0) is -1000, water (1) is 0, `v = 2` is +1000.
pub fn relative_to_hu(v: f64) -> f64 {
    1000.0 * (v - 1.0)
}

/// Canvas coordinates of the centre of pixel `(row, col)` in an `n x n` image.
pub fn canvas_coords(n: usize, row: usize, col: usize) -> (f64, f64) {
    let h = 2.0 / n as f64;
    (-1.0 + (col as f64 + 0.5) * h, 1.0 - (row as f64 + 0.5) * h)
}

/// Renders additive ellipses by pixel-centre sampling; returns HU.
pub fn render_ellipses(n: usize, pixel_size: f64, ellipses: &[Ellipse]) -> Image {
    Image::from_fn(n, n, pixel_size, |r, c| {
        let (x, y) = canvas_coords(n, r, c);
        relative_to_hu(ellipses.iter().filter(|e| e.contains(x, y)).map(|e| e.value).sum())
    })
}

/// Shepp-Logan head phantom in HU (skull +1000, brain +20, ventricles 0).
pub fn shepp_logan(n: usize) -> Result<Image> {
    if n < 16 {
        return Err(Error::invalid(format!("Shepp-Logan needs n >= 16, got {n}")));
    }
    Ok(render_ellipses(n, 1.0, &SHEPP_LOGAN))
}

/// Tissue values used by [`tissue_phantom`], HU.
pub const TISSUE_PALETTE: [f64; 6] = [-800.0, -100.0, 0.0, 60.0, 300.0, 900.0];

/// Piecewise-constant body phantom: a soft-tissue ellipse in air holding
/// randomly placed tissue ellipses.
pub fn tissue_phantom(n: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let body = Ellipse {
        x0: 0.0,
        y0: 0.0,
        a: rng.random_range(0.75..0.9),
        b: rng.random_range(0.6..0.8),
        phi_deg: rng.random_range(-10.0..10.0),
        value: 40.0 - HU_AIR,
    };
    let mut shapes = vec![body];
    let count = rng.random_range(5..9);
    for _ in 0..count {
        let target = TISSUE_PALETTE[rng.random_range(0..TISSUE_PALETTE.len())];
        shapes.push(Ellipse {
            x0: rng.random_range(-0.45..0.45),
            y0: rng.random_range(-0.35..0.35),
            a: rng.random_range(0.08..0.3),
            b: rng.random_range(0.08..0.3),
            phi_deg: rng.random_range(0.0..180.0),
            value: target,
        });
    }
    Image::from_fn(n, n, 1.0, |r, c| {
        let (x, y) = canvas_coords(n, r, c);
        // later shapes paint over earlier ones
        let mut v = HU_AIR;
        for (i, s) in shapes.iter().enumerate() {
            if s.contains(x, y) {
                v = if i == 0 { HU_AIR + s.value } else { s.value };
            }
        }
        v
    })
}

/// Copy of `img` with `count` single-pixel specks of 500 to 4000 HU placed on
/// non-air pixels at least two pixels from the border.
pub fn add_specks(img: &Image, count: usize, seed: u64) -> Image {
    let mut out = img.clone();
    let (h, w) = (img.height(), img.width());
    if h < 5 || w < 5 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed = 0;
    for _ in 0..count * 50 {
        if placed == count {
            break;
        }
        let (r, c) = (rng.random_range(2..h - 2), rng.random_range(2..w - 2));
        if img.get(r, c) > HU_AIR + 100.0 {
            out.set(r, c, rng.random_range(500.0..4000.0));
            placed += 1;
        }
    }
    out
}

/// Plexiglas value in the resolution phantom, HU.
pub const PLEXIGLAS_HU: f64 = 120.0;
/// Wire value in the resolution phantom, HU.
pub const WIRE_HU: f64 = 3000.0;

/// Rectangular group of vertical bars.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarGroup {
    pub row_lo: usize,
    pub row_hi: usize,
    pub col_lo: usize,
    pub col_hi: usize,
    /// Bar period in pixels (one water bar plus one plexiglas bar).
    pub period: usize,
}

/// Feature positions of [`gepp_analog`].
#[derive(Clone, Debug, PartialEq)]
pub struct GeppLayout {
    pub wire: (usize, usize),
    pub noise_roi: Roi,
    pub bars: Vec<BarGroup>,
}

/// Resolution phantom: a water disc in air holding a plexiglas block with
/// water bar patterns at periods 8, 6 and 4 pixels (at `n = 128`), plus an
/// isolated one-pixel wire in water.
pub fn gepp_analog(n: usize, pixel_size: f64) -> Result<(Image, GeppLayout)> {
    if n < 128 {
        return Err(Error::invalid(format!("resolution phantom needs n >= 128, got {n}")));
    }
    let s = |v: usize| v * n / 128;
    let center = (n as f64 - 1.0) / 2.0;
    let radius = 58.0 * n as f64 / 128.0;
    let (block_r, block_c) = ((s(20), s(52)), (s(22), s(106)));
    let periods = [8usize, 6, 4];
    let group_w = (block_c.1 - block_c.0 - s(8)) / 3;
    let bars: Vec<BarGroup> = periods
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let col_lo = block_c.0 + s(2) + i * (group_w + s(2));
            let width = group_w / p * p;
            BarGroup { row_lo: s(26), row_hi: s(46), col_lo, col_hi: col_lo + width, period: p }
        })
        .collect();
    let wire = (s(88), n / 2);
    let noise_roi = Roi::new(s(72) as f64, s(24) as f64, 7.0 * n as f64 / 128.0);

    let mut img = Image::from_fn(n, n, pixel_size, |r, c| {
        let (dr, dc) = (r as f64 - center, c as f64 - center);
        if dr * dr + dc * dc > radius * radius {
            return HU_AIR;
        }
        if (block_r.0..block_r.1).contains(&r) && (block_c.0..block_c.1).contains(&c) {
            for b in &bars {
                if (b.row_lo..b.row_hi).contains(&r) && (b.col_lo..b.col_hi).contains(&c) {
                    let phase = (c - b.col_lo) % b.period;
                    return if phase < b.period / 2 { 0.0 } else { PLEXIGLAS_HU };
                }
            }
            return PLEXIGLAS_HU;
        }
        0.0
    });
    img.set(wire.0, wire.1, WIRE_HU);
    Ok((img, GeppLayout { wire, noise_roi, bars }))
}
