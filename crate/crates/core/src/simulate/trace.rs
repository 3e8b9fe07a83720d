use std::fmt::Write as _;
use std::io::{self, Write};

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// `‖x‖_∞` exceeded the blow-up threshold (or became non-finite) at `t`.
    BlowUp { t: f64 },
    /// The estimator step guard tripped; the message carries the diagnosis.
    StepGuard { t: f64, message: String },
}

/// Time-indexed record of a run. Vector-valued columns are stored row-major
/// with stride `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub n: usize,
    pub h: f64,
    pub record_every: usize,
    pub tau_eff: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// State seen by the controller (`x` delayed by `tau_eff`).
    pub x_d: Vec<f64>,
    pub xhat: Vec<f64>,
    pub u: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub omega_hat: Vec<f64>,
    pub r: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `r̃ = ω̃u + θ̃ᵀx_d + σ̃` at recorded rows.
    pub rtilde: Vec<f64>,
    /// `η = ζ_d - gωu - σ`, zero without delay.
    pub eta: Vec<f64>,
    /// `r̃` at every grid point, independent of decimation.
    pub rtilde_grid: Vec<f64>,
    /// Largest `‖x‖_∞` over every grid point reached.
    pub peak_x: f64,
    pub termination: Termination,
}

impl SimTrace {
    pub(crate) fn new(n: usize, h: f64, record_every: usize, tau_eff: f64, rows_hint: usize) -> Self {
        let cap = rows_hint.min(1 << 22);
        Self {
            n,
            h,
            record_every,
            tau_eff,
            t: Vec::with_capacity(cap),
            x: Vec::with_capacity(cap * n),
            x_d: Vec::with_capacity(cap * n),
            xhat: Vec::with_capacity(cap * n),
            u: Vec::with_capacity(cap),
            theta_hat: Vec::with_capacity(cap * n),
            sigma_hat: Vec::with_capacity(cap),
            omega_hat: Vec::with_capacity(cap),
            r: Vec::with_capacity(cap),
            sigma: Vec::with_capacity(cap),
            rtilde: Vec::with_capacity(cap),
            eta: Vec::with_capacity(cap),
            rtilde_grid: Vec::new(),
            peak_x: 0.0,
            termination: Termination::Completed,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n..(i + 1) * self.n]
    }

    pub fn x_d_row(&self, i: usize) -> &[f64] {
        &self.x_d[i * self.n..(i + 1) * self.n]
    }

    pub fn xhat_row(&self, i: usize) -> &[f64] {
        &self.xhat[i * self.n..(i + 1) * self.n]
    }

    pub fn theta_hat_row(&self, i: usize) -> &[f64] {
        &self.theta_hat[i * self.n..(i + 1) * self.n]
    }

    /// `max_t ‖x̂ - x_d‖_∞`, the prediction error seen by the adaptive law.
    pub fn max_prediction_error(&self) -> f64 {
        self.xhat
            .iter()
            .zip(&self.x_d)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `max_t ‖x - other.x‖_∞` over rows present in both traces.
    pub fn max_state_deviation(&self, other: &SimTrace) -> f64 {
        self.x.iter().zip(&other.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `max_t ‖x‖_∞` over recorded rows.
    pub fn max_abs_x(&self) -> f64 {
        self.x.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn push_row(&mut self, row: Row<'_>) {
        self.t.push(row.t);
        self.x.extend_from_slice(row.x);
        self.x_d.extend_from_slice(row.x_d);
        self.xhat.extend_from_slice(row.xhat);
        self.u.push(row.u);
        self.theta_hat.extend_from_slice(row.theta_hat);
        self.sigma_hat.push(row.sigma_hat);
        self.omega_hat.push(row.omega_hat);
        self.r.push(row.r);
        self.sigma.push(row.sigma);
        self.rtilde.push(row.rtilde);
        self.eta.push(row.eta);
    }

    pub fn csv_header(n: usize) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=n).map(|i| format!("x{i}")));
        cols.extend((1..=n).map(|i| format!("xhat{i}")));
        cols.push("u".into());
        cols.extend((1..=n).map(|i| format!("thetahat{i}")));
        for c in ["sigmahat", "omegahat", "r", "sigma", "rtilde"] {
            cols.push(c.into());
        }
        cols.join(",")
    }

    /// CSV with 12 significant digits, one line per recorded row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::csv_header(self.n))?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            let mut put = |v: f64| {
                if !line.is_empty() {
                    line.push(',');
                }
                line.push_str(&fmt_sig(v));
            };
            put(self.t[i]);
            self.x_row(i).iter().for_each(|v| put(*v));
            self.xhat_row(i).iter().for_each(|v| put(*v));
            put(self.u[i]);
            self.theta_hat_row(i).iter().for_each(|v| put(*v));
            put(self.sigma_hat[i]);
            put(self.omega_hat[i]);
            put(self.r[i]);
            put(self.sigma[i]);
            put(self.rtilde[i]);
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

pub(crate) struct Row<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub x_d: &'a [f64],
    pub xhat: &'a [f64],
    pub u: f64,
    pub theta_hat: &'a [f64],
    pub sigma_hat: f64,
    pub omega_hat: f64,
    pub r: f64,
    pub sigma: f64,
    pub rtilde: f64,
    pub eta: f64,
}

/// Formats with 12 significant digits, `%.12g` style.
pub fn fmt_sig(v: f64) -> String {
    const DIGITS: i32 = 12;
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // take the exponent after rounding: 9.99999999999996 becomes 1e1
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, e) = sci.split_once('e').expect("scientific format");
    let e: i32 = e.parse().expect("exponent");
    if (-4..DIGITS).contains(&e) {
        let decimals = (DIGITS - 1 - e).max(0) as usize;
        let mut s = format!("{:.*}", decimals, v);
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
        }
        s
    } else {
        let mut m = mantissa.to_string();
        if m.contains('.') {
            while m.ends_with('0') {
                m.pop();
            }
            if m.ends_with('.') {
                m.pop();
            }
        }
        let mut s = String::new();
        write!(s, "{m}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs()).expect("string write");
        s
    }
}
