use super::Point;

/// Uniform pixel grid. Pixel `(ix, iy)` covers
/// `[x0 + ix h, x0 + (ix+1) h) × [y0 + iy h, y0 + (iy+1) h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub width: usize,
    pub height: usize,
}

impl Grid {
    /// Smallest grid with pixel edges on `anchor + k h` covering `bbox`
    /// grown by `margin` on every side.
    pub fn covering(bbox: [f64; 4], margin: f64, h: f64, anchor: f64) -> Self {
        let kx0 = ((bbox[0] - margin - anchor) / h).floor();
        let ky0 = ((bbox[1] - margin - anchor) / h).floor();
        let kx1 = ((bbox[2] + margin - anchor) / h).ceil();
        let ky1 = ((bbox[3] + margin - anchor) / h).ceil();
        Self {
            x0: anchor + kx0 * h,
            y0: anchor + ky0 * h,
            h,
            width: (kx1 - kx0).max(1.0) as usize,
            height: (ky1 - ky0).max(1.0) as usize,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn center(&self, ix: usize, iy: usize) -> Point {
        [
            self.x0 + (ix as f64 + 0.5) * self.h,
            self.y0 + (iy as f64 + 0.5) * self.h,
        ]
    }

    #[inline]
    pub fn center_of(&self, idx: usize) -> Point {
        self.center(idx % self.width, idx / self.width)
    }

    /// Pixel containing `p`, if inside the grid.
    pub fn pixel_of(&self, p: Point) -> Option<(usize, usize)> {
        let fx = ((p[0] - self.x0) / self.h).floor();
        let fy = ((p[1] - self.y0) / self.h).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Column range whose centers satisfy `lo <= x < hi`.
    pub(crate) fn cols_between(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = ((lo - self.x0) / self.h - 0.5).ceil().max(0.0);
        let b = ((hi - self.x0) / self.h - 0.5).ceil().max(0.0);
        let a = (a as usize).min(self.width);
        let b = (b as usize).min(self.width);
        a..b.max(a)
    }

    /// Row range whose centers satisfy `lo <= y < hi`.
    pub(crate) fn rows_between(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = ((lo - self.y0) / self.h - 0.5).ceil().max(0.0);
        let b = ((hi - self.y0) / self.h - 0.5).ceil().max(0.0);
        let a = (a as usize).min(self.height);
        let b = (b as usize).min(self.height);
        a..b.max(a)
    }
}

const FAR: f64 = 1e30;

/// Exact squared Euclidean distance (in pixel units) from every pixel center
/// to the nearest marked pixel center. Unreachable pixels get a huge value.
pub(crate) fn squared_edt(mask: &[bool], width: usize, height: usize) -> Vec<f64> {
    let mut f: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { FAR }).collect();
    let n = width.max(height);
    let mut buf = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for x in 0..width {
        for y in 0..height {
            buf[y] = f[y * width + x];
        }
        edt_1d(&buf[..height], &mut out[..height], &mut v, &mut z);
        for y in 0..height {
            f[y * width + x] = out[y];
        }
    }
    for y in 0..height {
        let row = &mut f[y * width..(y + 1) * width];
        buf[..width].copy_from_slice(row);
        edt_1d(&buf[..width], &mut out[..width], &mut v, &mut z);
        row.copy_from_slice(&out[..width]);
    }
    f
}

/// Lower envelope of parabolas (Felzenszwalb–Huttenlocher).
fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    // Skip leading unreachable samples: they only matter if all are unreachable.
    let mut k = 0usize;
    let first = match f.iter().position(|&x| x < FAR) {
        Some(i) => i,
        None => {
            d.iter_mut().for_each(|x| *x = FAR);
            return;
        }
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if f[q] >= FAR {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}
