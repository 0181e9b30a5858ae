use std::fmt::Write as _;
use std::path::Path;

use burgerslab::estimate_lab::{burgers_exponents, gronwall_identities_hold, monomial_constants};
use burgerslab::exact_solutions::{n_wave, n_wave_lp_norm, riemann_burgers_1d};
use burgerslab::moment_tensor::{hilbert_det, rational_to_f64, Rational};
use clap::Subcommand;

use crate::{write_file, CliError};

#[derive(Subcommand, Debug)]
pub enum ExactCommand {
    /// L^p norms of the 1-D N-wave at the given times.
    NWave {
        #[arg(long)]
        l: f64,
        /// Comma-separated times.
        #[arg(long)]
        times: String,
        /// Comma-separated exponents.
        #[arg(long, default_value = "1,2,4")]
        p: String,
        /// Also sample the profile at this many points per time.
        #[arg(long, default_value_t = 0)]
        points: usize,
    },
    /// 1-D Burgers Riemann solution sampled on [from, to].
    Riemann {
        #[arg(long, allow_negative_numbers = true)]
        ul: f64,
        #[arg(long, allow_negative_numbers = true)]
        ur: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
        from: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Decay and dispersion exponents of d-dimensional Burgers.
    Constants {
        #[arg(long)]
        d: u32,
    },
    /// Constants of the monomial flux with the given exponents.
    Monomial {
        /// Comma-separated increasing exponents, e.g. 2,3,4.
        #[arg(long)]
        k: String,
    },
    /// Exact determinant of the d x d Hilbert matrix.
    Hilbert {
        #[arg(long)]
        d: usize,
    },
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| CliError::Config(format!("invalid {what} value {x:?}"))))
        .collect()
}

fn frac_row(out: &mut String, name: &str, r: &Rational) {
    let _ = writeln!(out, "{name},{r},{}", rational_to_f64(r));
}

pub fn render(cmd: &ExactCommand) -> Result<String, CliError> {
    let cfg = |e: burgerslab::Error| CliError::Config(e.to_string());
    let mut out = String::new();
    match cmd {
        ExactCommand::NWave { l, times, p, points } => {
            if !(*l > 0.0 && l.is_finite()) {
                return Err(CliError::Config(format!("--l must be positive, got {l}")));
            }
            let times: Vec<f64> = parse_list(times, "time")?;
            let ps: Vec<f64> = parse_list(p, "exponent")?;
            if times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) || ps.iter().any(|&p| !(p >= 1.0)) {
                return Err(CliError::Config("times must be >= 0 and exponents >= 1".into()));
            }
            out.push_str("t");
            for p in &ps {
                let _ = write!(out, ",l{p}");
            }
            out.push('\n');
            for &t in &times {
                let _ = write!(out, "{t}");
                for &p in &ps {
                    let _ = write!(out, ",{:.17e}", n_wave_lp_norm(*l, t, p));
                }
                out.push('\n');
            }
            if *points >= 2 {
                out.push_str("\nt,y,u\n");
                for &t in &times {
                    let end = l * (1.0 + t).sqrt();
                    for i in 0..*points {
                        let y = -0.1 * end + 1.2 * end * i as f64 / (*points - 1) as f64;
                        let _ = writeln!(out, "{t},{y:.17e},{:.17e}", n_wave(*l, t, y));
                    }
                }
            }
        }
        ExactCommand::Riemann {
            ul,
            ur,
            t,
            from,
            to,
            points,
        } => {
            if *points < 2 || !(to > from) || !(*t > 0.0) {
                return Err(CliError::Config("need points >= 2, from < to and t > 0".into()));
            }
            out.push_str("y,u\n");
            for i in 0..*points {
                let y = from + (to - from) * i as f64 / (*points - 1) as f64;
                let _ = writeln!(out, "{y:.17e},{:.17e}", riemann_burgers_1d(*ul, *ur, *t, y));
            }
        }
        ExactCommand::Constants { d } => {
            let ex = burgers_exponents(*d).map_err(cfg)?;
            out.push_str("name,exact,value\n");
            for (name, r) in ex.entries() {
                frac_row(&mut out, name, r);
            }
            let _ = writeln!(out, "gronwall_identities,{},", gronwall_identities_hold(&ex));
        }
        ExactCommand::Monomial { k } => {
            let k: Vec<u32> = parse_list(k, "exponent")?;
            let c = monomial_constants(&k).map_err(cfg)?;
            out.push_str("name,exact,value\n");
            let _ = writeln!(out, "n,{},{}", c.n, c.n);
            let _ = writeln!(out, "K,{},{}", c.big_k, c.big_k);
            let _ = writeln!(out, "N,{},{}", c.big_n, c.big_n);
            let _ = writeln!(out, "admissible,{},", c.admissible);
            frac_row(&mut out, "theta", &c.theta);
            match (&c.gamma, &c.delta) {
                (Some(g), Some(dl)) => {
                    frac_row(&mut out, "gamma", g);
                    frac_row(&mut out, "delta", dl);
                }
                _ => out.push_str("gamma,undefined,\ndelta,undefined,\n"),
            }
            frac_row(&mut out, "p_main", &c.p_main);
        }
        ExactCommand::Hilbert { d } => {
            let h = hilbert_det(*d).map_err(cfg)?;
            out.push_str("d,det,value\n");
            let _ = writeln!(out, "{d},{h},{:e}", rational_to_f64(&h));
        }
    }
    Ok(out)
}

pub fn cmd_exact(cmd: &ExactCommand, output: Option<&Path>) -> Result<(), CliError> {
    let text = render(cmd)?;
    match output {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
