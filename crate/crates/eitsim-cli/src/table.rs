//! Deterministic CSV rendering. Every number is written as 17-significant-
//! digit scientific notation so files are byte-identical across runs and
//! platforms.

use eitsim::model::Spectrum;
use eitsim::spectra::TrendCurve;

pub fn fmt_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// One row per grid point: `omega,t_re,t_im,d_re,d_im,t2,d2`.
pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::with_capacity(32 + spectrum.samples.len() * 160);
    out.push_str("omega,t_re,t_im,d_re,d_im,t2,d2\n");
    for s in &spectrum.samples {
        out.push_str(&fmt_float(s.omega));
        out.push(',');
        out.push_str(&fmt_float(s.t.re));
        out.push(',');
        out.push_str(&fmt_float(s.t.im));
        out.push(',');
        out.push_str(&fmt_float(s.d.re));
        out.push(',');
        out.push_str(&fmt_float(s.d.im));
        out.push(',');
        out.push_str(&fmt_float(s.t2()));
        out.push(',');
        out.push_str(&fmt_float(s.d2()));
        out.push('\n');
    }
    out
}

/// `param,value` rows; points without a usable window carry the literal
/// `no-window` marker.
pub fn trend_csv(curve: &TrendCurve) -> String {
    let mut out = String::from("param,value\n");
    for sample in &curve.samples {
        out.push_str(&fmt_float(sample.param));
        out.push(',');
        match sample.value {
            Some(value) => out.push_str(&fmt_float(value)),
            None => out.push_str("no-window"),
        }
        out.push('\n');
    }
    out
}
