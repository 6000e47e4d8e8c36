//! `oscint`: command-line front end for oscint-core.
//!
//! Every subcommand prints JSON by default (`--format csv|text` where
//! supported). Exit codes: 0 success, 1 internal error, 2 domain or input
//! error, 3 tolerance failure.

mod args;
mod report;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use oscint_core::asymptotics::{expand, limit, ExpCoefficient};
use oscint_core::coeff::Coeff;
use oscint_core::equidist::{block_bound_check, cud_test, v_epsilon, weyl_sum_sup, Psi};
use oscint_core::integrate::{catalog, default_grids, fourier, fourier_sum, integrate, locus, plancherel_roundtrip, FamilySum};
use oscint_core::model::{parse_phase, Domain, ModelError, PreparedSum};
use oscint_core::phase::Phase;
use oscint_core::prepare::prepare;
use oscint_core::quad::{osc_integral, Kernel, Upper};
use serde_json::{json, Value};

use report::{complex, engine_tolerance, format_float, Report};

#[derive(Parser)]
#[command(name = "oscint", version, about = "Oscillatory power-log functions: preparation, integration, asymptotics and equidistribution")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    /// Same as `--format json`.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct DomainArgs {
    /// Start `a` of the ray `[a, inf)`; defaults to 1.
    #[arg(long, value_name = "A")]
    ray: Option<f64>,
    /// Bounded interval `a:b` instead of a ray.
    #[arg(long, value_name = "A:B", conflicts_with = "ray")]
    interval: Option<String>,
}

impl DomainArgs {
    fn domain(&self) -> Result<Domain> {
        args::domain(self.ray, self.interval.as_deref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and normalize an expression.
    Parse {
        expr: String,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Split a sum into superintegrable and naive parts, with the rewrite certificate.
    Prepare {
        expr: String,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Decide integrability and integrate over the domain.
    Integrate {
        expr: String,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Integrability locus of a parametric family given as JSON.
    Locus {
        family: PathBuf,
        /// Parameter point `x1,x2,...` at which to evaluate `h`; repeatable.
        #[arg(long, value_name = "X1,X2,..")]
        at: Vec<String>,
    },
    /// Fourier transform of a catalog function or of a sum on a bounded interval.
    Fourier {
        #[arg(long, conflicts_with = "expr")]
        catalog: Option<String>,
        #[arg(long)]
        expr: Option<String>,
        #[arg(long, value_name = "A:B")]
        interval: Option<String>,
        /// Frequency grid `lo:hi:points`.
        #[arg(long, default_value = "-2:2:41", conflicts_with = "xi")]
        grid: String,
        /// Explicit frequencies `x1,x2,...`.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
    },
    /// Truncation errors and the Parseval gap for a catalog function.
    Plancherel {
        #[arg(long, default_value = "indicator")]
        catalog: String,
        #[arg(long, default_value = "2,4,8,16")]
        truncations: String,
    },
    /// Asymptotic expansion at infinity.
    Expand {
        expr: String,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Limit at infinity, with a certificate either way.
    Limit {
        expr: String,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Box statistics of `{psi(t)}` for phases in `t`.
    Cud {
        /// Comma-separated phases, e.g. `t,sqrt2*t^2`; the map is `psi = phases / 2pi`.
        #[arg(long)]
        phases: String,
        /// `dyadic:N`, `full`, or `lo-hi,lo-hi;...`.
        #[arg(long, default_value = "dyadic:4")]
        boxes: String,
        #[arg(long = "T", default_value = "1e2,1e3,1e4")]
        horizons: String,
        /// Scale the phases by `x` over a grid `x:lo:hi:points`.
        #[arg(long)]
        param: Option<String>,
    },
    /// Lower bounds for the time spent in a box on dyadic blocks.
    Blocks {
        #[arg(long)]
        phases: String,
        #[arg(long, default_value = "dyadic:4")]
        boxes: String,
        #[arg(long, default_value = "1:14")]
        k: String,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
    },
    /// The set where a finite exponential sum is at least epsilon, on dyadic blocks.
    Veps {
        expr: String,
        #[arg(long, default_value = "6:14")]
        k: String,
    },
    /// Supremum of `|int_0^T e^{i phi(t)} dt|` over `T <= Tmax`.
    Weyl {
        #[arg(long, default_value = "t^2")]
        phase: String,
        #[arg(long = "T", default_value_t = 1e4)]
        tmax: f64,
        #[arg(long)]
        param: Option<String>,
    },
    /// `int t^rho (log t)^sigma e^{+-it} dt` from `a` to `b` or infinity.
    Quad {
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        sigma: u32,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Integrate to infinity (the default unless `--b` is given).
        #[arg(long, conflicts_with = "b")]
        ray: bool,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        orientation: i32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = if cli.json { Format::Json } else { cli.format };
    let tol = match engine_tolerance() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(report::EXIT_DOMAIN);
        }
    };
    match run(cli.command, tol).and_then(|r| emit(&r, format).map(|()| r)) {
        Ok(r) => match r.tolerance_failure {
            Some(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(report::EXIT_TOLERANCE)
            }
            None => ExitCode::SUCCESS,
        },
        Err(e) => {
            eprintln!("error: {}", report::message(&e));
            ExitCode::from(report::exit_code(&e))
        }
    }
}

fn emit(r: &Report, format: Format) -> Result<()> {
    let out = match format {
        Format::Json => serde_json::to_string_pretty(&report::normalize(r.json.clone()))?,
        Format::Csv => r.csv.clone().context("this subcommand has no CSV output")?,
        Format::Text => match &r.text {
            Some(t) => t.clone(),
            None => serde_json::to_string_pretty(&report::normalize(r.json.clone()))?,
        },
    };
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{}", out.trim_end()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cmd: Command, tol: f64) -> Result<Report> {
    match cmd {
        Command::Parse { expr, domain } => cmd_parse(&expr, domain.domain()?),
        Command::Prepare { expr, domain } => cmd_prepare(&expr, domain.domain()?),
        Command::Integrate { expr, domain } => cmd_integrate(&expr, domain.domain()?, tol),
        Command::Locus { family, at } => cmd_locus(&family, &at, tol),
        Command::Fourier { catalog, expr, interval, grid, xi } => {
            let xis = match xi {
                Some(s) => args::list(&s)?,
                None => args::grid(&grid)?.points().collect(),
            };
            cmd_fourier(catalog.as_deref(), expr.as_deref(), interval.as_deref(), &xis, tol)
        }
        Command::Plancherel { catalog, truncations } => cmd_plancherel(&catalog, &args::list(&truncations)?),
        Command::Expand { expr, order, domain } => cmd_expand(&expr, order, domain.domain()?),
        Command::Limit { expr, domain } => cmd_limit(&expr, domain.domain()?),
        Command::Cud { phases, boxes, horizons, param } => cmd_cud(&phases, &boxes, &args::list(&horizons)?, param.as_deref()),
        Command::Blocks { phases, boxes, k, x } => cmd_blocks(&phases, &boxes, args::k_range(&k)?, x),
        Command::Veps { expr, k } => cmd_veps(&expr, args::k_range(&k)?),
        Command::Weyl { phase, tmax, param } => cmd_weyl(&phase, tmax, param.as_deref()),
        Command::Quad { rho, sigma, a, ray: _, b, orientation } => cmd_quad(rho, sigma, a, b, orientation, tol),
    }
}

fn parse_sum(expr: &str, domain: Domain) -> Result<PreparedSum> {
    Ok(PreparedSum::parse(expr, domain)?)
}

fn cmd_parse(expr: &str, domain: Domain) -> Result<Report> {
    let sum = parse_sum(expr, domain)?;
    let terms: Vec<Value> = sum
        .terms()
        .iter()
        .map(|t| {
            json!({
                "term": t.to_string(),
                "r": t.r,
                "s": t.s,
                "phase": t.phase.to_string(),
                "units": t.units.len(),
                "gammas": t.gammas.len(),
            })
        })
        .collect();
    let json = json!({
        "input": expr,
        "normalized": sum.to_string(),
        "domain": sum.domain,
        "terms": terms,
        "signatures_distinct": sum.signatures_distinct(),
    });
    Ok(Report::new(json).text(sum.to_string()))
}

fn cmd_prepare(expr: &str, domain: Domain) -> Result<Report> {
    let dec = prepare(&parse_sum(expr, domain)?)?;
    let invariants = dec.check_invariants();
    let text = format!(
        "superintegrable: {}\nnaive: {}\ncertificate tolerance: {}",
        dec.superintegrable,
        dec.naive,
        format_float(dec.certificate.tolerance)
    );
    let mut json = serde_json::to_value(&dec)?;
    json["invariants"] = match invariants {
        Ok(()) => json!({ "ok": true }),
        Err(e) => json!({ "ok": false, "violation": e }),
    };
    json["superintegrable_text"] = json!(dec.superintegrable.to_string());
    json["naive_text"] = json!(dec.naive.to_string());
    Ok(Report::new(json).text(text))
}

fn cmd_integrate(expr: &str, domain: Domain, tol: f64) -> Result<Report> {
    let (integral, dec) = integrate(&parse_sum(expr, domain)?)?;
    let pieces: Vec<Value> = integral
        .pieces
        .iter()
        .map(|p| json!({ "term": p.term, "value": complex(p.result.value), "error_bound": p.result.error_bound, "method": p.result.method }))
        .collect();
    let json = json!({
        "value": complex(integral.value),
        "error_bound": integral.error_bound,
        "verdict": integral.verdict,
        "pieces": pieces,
        "certificate": dec.map(|d| d.certificate),
    });
    let text = format!("{} +- {}", fmt_complex(integral.value), format_float(integral.error_bound));
    Ok(Report::new(json).text(text).check_bound("integral", integral.error_bound, tol))
}

fn fmt_complex(z: Complex64) -> String {
    let sign = if z.im < 0.0 { "-" } else { "+" };
    format!("{} {sign} {}i", format_float(z.re), format_float(z.im.abs()))
}

fn cmd_locus(path: &PathBuf, at: &[String], tol: f64) -> Result<Report> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let family: FamilySum = serde_json::from_str(&text).with_context(|| format!("parsing family file {}", path.display()))?;
    let cond = locus(&family)?;
    let mut points = Vec::new();
    for p in at {
        let x = args::list(p)?;
        let h = cond.h(&x)?;
        points.push(json!({ "point": x, "h": h, "integrable": h <= tol }));
    }
    let json = json!({
        "condition": cond.description(),
        "always_integrable": cond.always_integrable(),
        "components": cond.components,
        "tolerance": tol,
        "points": points,
    });
    Ok(Report::new(json).text(cond.description()))
}

fn cmd_fourier(catalog_name: Option<&str>, expr: Option<&str>, interval: Option<&str>, xis: &[f64], tol: f64) -> Result<Report> {
    let (source, samples) = match (catalog_name, expr) {
        (Some(name), _) => {
            let entry = catalog(name).with_context(|| format!("unknown catalog entry '{name}' (e_abs, indicator, gaussian, zero)"))?;
            (json!({ "catalog": entry.name(), "in_class": entry.in_class() }), fourier(entry, xis)?)
        }
        (None, Some(e)) => {
            let interval = interval.context("--expr needs --interval a:b (the function is extended by zero)")?;
            let sum = parse_sum(e, args::domain(None, Some(interval))?)?;
            (json!({ "expr": e, "domain": sum.domain }), fourier_sum(&sum, xis)?)
        }
        (None, None) => bail!("give --catalog NAME or --expr EXPR"),
    };
    let mut csv = String::from("xi,re,im,error_bound,ref_re,ref_im\n");
    let rows: Vec<Value> = samples
        .iter()
        .map(|s| {
            let (rr, ri) = s.reference.map_or((String::new(), String::new()), |z| (format_float(z.re), format_float(z.im)));
            let _ = writeln!(
                csv,
                "{},{},{},{},{rr},{ri}",
                format_float(s.xi),
                format_float(s.value.re),
                format_float(s.value.im),
                format_float(s.error_bound)
            );
            json!({
                "xi": s.xi,
                "value": complex(s.value),
                "error_bound": s.error_bound,
                "reference": s.reference.map(complex),
                "deviation": s.reference.map(|z| (z - s.value).norm()),
            })
        })
        .collect();
    let worst = samples.iter().map(|s| s.error_bound).fold(0.0, f64::max);
    Ok(Report::new(json!({ "source": source, "samples": rows })).csv(csv).check_bound("transform", worst, tol))
}

fn cmd_plancherel(name: &str, truncations: &[f64]) -> Result<Report> {
    let entry = catalog(name).with_context(|| format!("unknown catalog entry '{name}'"))?;
    let r = plancherel_roundtrip(entry, truncations, default_grids(entry))?;
    let mut csv = String::from("y,forward_error,inverse_error\n");
    for ((y, f), i) in r.truncations.iter().zip(&r.forward_errors).zip(&r.inverse_errors) {
        let _ = writeln!(csv, "{},{},{}", format_float(*y), format_float(*f), format_float(*i));
    }
    Ok(Report::new(serde_json::to_value(&r)?).csv(csv))
}

/// `[{c: {re, im}, exact, phase}]` for one expansion coefficient.
fn atoms(e: &ExpCoefficient) -> Value {
    e.atoms
        .iter()
        .map(|a| {
            let exact = match &a.c {
                Coeff::Exact { re, im } if im.is_zero() => re.to_string(),
                c => c.to_string(),
            };
            json!({ "c": complex(a.c.value()), "exact": exact, "phase": a.phase.to_string() })
        })
        .collect()
}

fn cmd_expand(expr: &str, order: usize, domain: Domain) -> Result<Report> {
    let e = expand(&parse_sum(expr, domain)?, order)?;
    let mut json = serde_json::to_value(&e)?;
    json["coefficients"] = e.coefficients.iter().map(atoms).collect();
    Ok(Report::new(json).text(e.to_string()))
}

fn cmd_limit(expr: &str, domain: Domain) -> Result<Report> {
    let r = limit(&parse_sum(expr, domain)?)?;
    let text = match r.value {
        Some(v) => format!("limit = {}", fmt_complex(v)),
        None => "no limit".to_string(),
    };
    let mut cert = serde_json::to_value(&r.certificate)?;
    cert["coefficients"] = r.certificate.coefficients.iter().map(atoms).collect();
    if let Some(o) = &r.certificate.obstruction {
        cert["obstruction"]["atoms"] = atoms(&o.atoms);
    }
    cert["checks"] = r
        .certificate
        .checks
        .iter()
        .map(|c| json!({ "y": c.y, "value": complex(c.value), "deviation": c.deviation, "bound": c.bound, "ok": c.ok }))
        .collect();
    if let Some(d) = &r.certificate.dovetail {
        cert["dovetail"]["pairs"] = d
            .pairs
            .iter()
            .map(|p| json!({ "t0": p.t0, "t1": p.t1, "f0": complex(p.f0), "f1": complex(p.f1), "gap": p.gap }))
            .collect();
    }
    let json = json!({ "exists": r.exists, "value": r.value.map(complex), "certificate": cert });
    Ok(Report::new(json).text(text))
}

fn phases(list: &str) -> Result<Vec<Phase>> {
    list.split(',').map(|p| parse_phase(p.trim(), "t").with_context(|| format!("phase '{p}'"))).collect()
}

fn cmd_cud(phase_list: &str, boxes: &str, horizons: &[f64], param: Option<&str>) -> Result<Report> {
    let psi = Psi::from_phases(phases(phase_list)?);
    let boxes = args::boxes(boxes, psi.dim())?;
    let grid = param.map(args::param_grid).transpose()?;
    let r = cud_test(&psi, &boxes, horizons, grid)?;
    let mut csv = String::from("horizon,box,x,fraction,volume,error\n");
    for e in &r.entries {
        let x = e.x.map(format_float).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{x},{},{},{}",
            format_float(e.horizon),
            e.box_index,
            format_float(e.fraction),
            format_float(e.volume),
            format_float(e.error)
        );
    }
    let mut json = serde_json::to_value(&r)?;
    json["phases"] = json!(phase_list);
    Ok(Report::new(json).csv(csv))
}

fn cmd_blocks(phase_list: &str, boxes: &str, (k0, k1): (u32, u32), x: Option<f64>) -> Result<Report> {
    let psi = Psi::from_phases(phases(phase_list)?);
    psi.check_independent()?;
    let boxes = args::boxes(boxes, psi.dim())?;
    let mut out = Vec::new();
    let mut csv = String::from("box,k,mass,bound,holds\n");
    for (i, b) in boxes.iter().enumerate() {
        let r = block_bound_check(&psi, b, k0..=k1, x)?;
        for e in &r.entries {
            let _ = writeln!(csv, "{i},{},{},{},{}", e.k, format_float(e.mass), format_float(e.bound), e.holds);
        }
        out.push(json!({ "box": b, "entries": r.entries, "k0": r.k0 }));
    }
    Ok(Report::new(json!({ "phases": phase_list, "x": x, "boxes": out })).csv(csv))
}

fn cmd_veps(expr: &str, (k0, k1): (u32, u32)) -> Result<Report> {
    let sum = parse_sum(expr, Domain::ray(1.0))?;
    let mut atoms = Vec::new();
    for t in sum.terms() {
        if t.r != oscint_core::exponent::Exponent::ZERO || t.s != 0 || !t.units.is_empty() || !t.gammas.is_empty() {
            return Err(ModelError::Domain(format!("{t} is not of the form c*exp(i*p(y)); veps takes a finite exponential sum")).into());
        }
        atoms.push((t.coeff.value(), t.phase.clone()));
    }
    let r = v_epsilon(&atoms, k0..=k1)?;
    let mut csv = String::from("k,block_mass,partial_sum\n");
    for ((k, b), s) in r.ks.iter().zip(&r.blocks).zip(&r.partial_sums) {
        let _ = writeln!(csv, "{k},{},{}", format_float(*b), format_float(*s));
    }
    Ok(Report::new(serde_json::to_value(&r)?).csv(csv))
}

fn cmd_weyl(phase: &str, tmax: f64, param: Option<&str>) -> Result<Report> {
    let phi = parse_phase(phase, "t")?;
    let grid = param.map(args::param_grid).transpose()?;
    let r = weyl_sum_sup(&phi, tmax, grid)?;
    let mut csv = String::from("x,sup,argsup,sup_error,limit_re,limit_im\n");
    let points: Vec<Value> = r
        .points
        .iter()
        .map(|p| {
            let (lr, li) = p.limit.map_or((String::new(), String::new()), |z| (format_float(z.re), format_float(z.im)));
            let _ = writeln!(
                csv,
                "{},{},{},{},{lr},{li}",
                p.x.map(format_float).unwrap_or_default(),
                format_float(p.sup),
                format_float(p.argsup),
                format_float(p.sup_error)
            );
            json!({
                "x": p.x,
                "sup": p.sup,
                "argsup": p.argsup,
                "sup_error": p.sup_error,
                "dense_until": p.dense_until,
                "value_at_tmax": complex(p.value_at_tmax),
                "limit": p.limit.map(complex),
                "limit_error": p.limit_error,
            })
        })
        .collect();
    Ok(Report::new(json!({ "phase": phi.display_in("t"), "tmax": r.tmax, "sup": r.sup, "points": points })).csv(csv))
}

fn cmd_quad(rho: f64, sigma: u32, a: f64, b: Option<f64>, orientation: i32, tol: f64) -> Result<Report> {
    if orientation != 1 && orientation != -1 {
        bail!("orientation must be 1 or -1, got {orientation}");
    }
    let upper = b.map_or(Upper::Infinity, Upper::Finite);
    let r = osc_integral(&Kernel::new(rho, sigma, orientation), a, upper)?;
    let json = json!({
        "rho": rho,
        "sigma": sigma,
        "orientation": orientation,
        "a": a,
        "b": b,
        "value": complex(r.value),
        "error_bound": r.error_bound,
        "method": r.method,
        "pieces": r.pieces,
    });
    let text = format!("{} +- {}", fmt_complex(r.value), format_float(r.error_bound));
    Ok(Report::new(json).text(text).check_bound("quadrature", r.error_bound, tol))
}
