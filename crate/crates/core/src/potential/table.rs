use super::Potential;

/// Append-only cache of column values on a fixed height grid.
///
/// Column `x` stores `W(x, j * stride * resolution)` for a contiguous window
/// of grid indices `j`. Windows only ever grow, so slices handed out earlier
/// stay valid in value even when the band is widened.
pub struct FieldTable<'a, P: Potential + ?Sized> {
    field: &'a P,
    stride: i64,
    first_column: usize,
    columns: Vec<Window>,
}

#[derive(Default)]
struct Window {
    lo: i64,
    values: Vec<f64>,
}

impl Window {
    fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64
    }
}

impl<'a, P: Potential + ?Sized> FieldTable<'a, P> {
    /// Table for columns `first_column..first_column + count`, grid step `stride` resolution units.
    pub fn new(field: &'a P, stride: i64, first_column: usize, count: usize) -> Self {
        assert!(stride > 0);
        let columns = (0..count).map(|_| Window::default()).collect();
        Self { field, stride, first_column, columns }
    }

    pub fn field(&self) -> &'a P {
        self.field
    }

    pub fn stride(&self) -> i64 {
        self.stride
    }

    /// Values at grid indices `lo..hi` of column `x`, filling the cache as needed.
    pub fn slice(&mut self, x: usize, lo: i64, hi: i64) -> &[f64] {
        debug_assert!(lo < hi);
        let (field, stride) = (self.field, self.stride);
        let w = &mut self.columns[x - self.first_column];
        if w.values.is_empty() {
            w.lo = lo;
            w.values = vec![0.0; (hi - lo) as usize];
            field.fill_column(x, lo * stride, stride, &mut w.values);
        } else {
            if lo < w.lo {
                let mut fresh = vec![0.0; (w.lo - lo) as usize];
                field.fill_column(x, lo * stride, stride, &mut fresh);
                fresh.extend_from_slice(&w.values);
                w.values = fresh;
                w.lo = lo;
            }
            if hi > w.hi() {
                let old = w.values.len();
                let from = w.hi();
                w.values.resize((hi - w.lo) as usize, 0.0);
                field.fill_column(x, from * stride, stride, &mut w.values[old..]);
            }
        }
        let start = (lo - w.lo) as usize;
        &w.values[start..start + (hi - lo) as usize]
    }

    /// Single cached value; fills a one-point window if absent.
    pub fn get(&mut self, x: usize, j: i64) -> f64 {
        self.slice(x, j, j + 1)[0]
    }
}
