//! Isotonic regression by pool-adjacent-violators.

/// A non-decreasing step/linear map fitted by isotonic regression, with
/// each pooled block's frequency smoothed as `(s + 1/2) / (w + 1)`.
///
/// Inside each pooled block the map is flat; between blocks it interpolates
/// linearly; outside the fitted range it is clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl IsotonicMap {
    pub fn fit(x: &[f64], y: &[f64]) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(!x.is_empty(), "isotonic fit on empty input");
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));

        // (x_min, x_max, weighted mean, weight); identical x start pooled
        let mut blocks: Vec<(f64, f64, f64, f64)> = Vec::new();
        for &i in &order {
            match blocks.last_mut() {
                Some(last) if last.1 == x[i] => {
                    last.2 = (last.2 * last.3 + y[i]) / (last.3 + 1.0);
                    last.3 += 1.0;
                }
                _ => blocks.push((x[i], x[i], y[i], 1.0)),
            }
        }
        // add-half smoothing keeps empty-event blocks off 0 and 1; a second
        // pass restores monotonicity the smoothing may break
        let mut pooled = pool(blocks);
        for b in &mut pooled {
            b.2 = (b.2 * b.3 + 0.5) / (b.3 + 1.0);
        }
        let pooled = pool(pooled);
        let mut xs = Vec::with_capacity(2 * pooled.len());
        let mut ys = Vec::with_capacity(2 * pooled.len());
        for (lo, hi, v, _) in pooled {
            xs.push(lo);
            ys.push(v);
            if hi > lo {
                xs.push(hi);
                ys.push(v);
            }
        }
        Self { xs, ys }
    }

    pub fn predict(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let j = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let (y0, y1) = (self.ys[j - 1], self.ys[j]);
        if x1 == x0 {
            return y1;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Pool-adjacent-violators over `(x_min, x_max, mean, weight)` blocks.
fn pool(blocks: Vec<(f64, f64, f64, f64)>) -> Vec<(f64, f64, f64, f64)> {
    let mut pooled: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(blocks.len());
    for b in blocks {
        pooled.push(b);
        while pooled.len() > 1 {
            let n = pooled.len();
            if pooled[n - 2].2 <= pooled[n - 1].2 {
                break;
            }
            let hi = pooled.pop().expect("two blocks");
            let lo = pooled.last_mut().expect("two blocks");
            let w = lo.3 + hi.3;
            lo.2 = (lo.2 * lo.3 + hi.2 * hi.3) / w;
            lo.3 = w;
            lo.1 = hi.1;
        }
    }
    pooled
}
