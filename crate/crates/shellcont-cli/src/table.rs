use std::fmt::Write as _;

use num_complex::Complex64;

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { buf: header.join(",") + "\n", width: header.len() }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let mut n = 0;
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match c {
                Cell::Real(x) => {
                    n += 1;
                    let _ = write!(self.buf, "{}", num(*x));
                }
                Cell::Complex(z) => {
                    n += 2;
                    let _ = write!(self.buf, "{},{}", num(z.re), num(z.im));
                }
            }
        }
        debug_assert_eq!(n, self.width);
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub enum Cell {
    Real(f64),
    Complex(Complex64),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e22, 20.0, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "0.1");
    }

    #[test]
    fn complex_cells_split() {
        let mut t = Csv::new(&["k", "f_re", "f_im"]);
        t.row(&[Cell::Real(1.0), Cell::Complex(Complex64::new(0.5, -2.0))]);
        assert_eq!(t.finish(), "k,f_re,f_im\n1.0,0.5,-2.0\n");
    }
}
